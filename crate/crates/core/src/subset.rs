//! Maximum-cardinality search over a downward-closed family of index sets.
//!
//! Both DoF oracles decide feasibility of an active set, and both feasibility
//! predicates are downward closed: dropping a user only removes constraints.
//! The search is a depth-first include-before-exclude walk over the candidate
//! list in ascending order. Infeasible prefixes are pruned (no superset can be
//! feasible) and so are branches that cannot beat the incumbent. Because the
//! walk visits equal-size sets in lexicographic order and only a strictly
//! larger set replaces the incumbent, the result is the lexicographically
//! smallest maximum set.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exact,
    /// Exact up to the limit, greedy lower bound above it.
    ExactOrGreedy,
}

pub fn max_feasible_subset<F>(base: &[usize], candidates: &[usize], mut feasible: F) -> Vec<usize>
where
    F: FnMut(&[usize]) -> bool,
{
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut current = base.to_vec();
    let mut best: Vec<usize> = Vec::new();
    let mut best_len = 0usize;
    let mut found = false;
    descend(
        &sorted,
        0,
        &mut current,
        base.len(),
        &mut best,
        &mut best_len,
        &mut found,
        &mut feasible,
    );
    best
}

#[allow(clippy::too_many_arguments)]
fn descend<F>(
    cands: &[usize],
    pos: usize,
    current: &mut Vec<usize>,
    base_len: usize,
    best: &mut Vec<usize>,
    best_len: &mut usize,
    found: &mut bool,
    feasible: &mut F,
) where
    F: FnMut(&[usize]) -> bool,
{
    let chosen = current.len() - base_len;
    if !*found || chosen > *best_len {
        *best = current[base_len..].to_vec();
        *best_len = chosen;
        *found = true;
    }
    if pos == cands.len() || chosen + (cands.len() - pos) <= *best_len {
        return;
    }
    current.push(cands[pos]);
    if feasible(current) {
        descend(
            cands,
            pos + 1,
            current,
            base_len,
            best,
            best_len,
            found,
            feasible,
        );
    }
    current.pop();
    if chosen + (cands.len() - pos - 1) > *best_len {
        descend(
            cands,
            pos + 1,
            current,
            base_len,
            best,
            best_len,
            found,
            feasible,
        );
    }
}

/// Adds candidates one at a time in ascending order, keeping each that leaves
/// the set feasible. A lower bound on the maximum.
pub fn greedy_subset<F>(base: &[usize], candidates: &[usize], mut feasible: F) -> Vec<usize>
where
    F: FnMut(&[usize]) -> bool,
{
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut current = base.to_vec();
    let mut chosen = Vec::new();
    for c in sorted {
        current.push(c);
        if feasible(&current) {
            chosen.push(c);
        } else {
            current.pop();
        }
    }
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent sets of a path: downward closed, easy to enumerate.
    fn no_adjacent(s: &[usize]) -> bool {
        let mut v = s.to_vec();
        v.sort_unstable();
        v.windows(2).all(|w| w[1] > w[0] + 1)
    }

    fn brute(cands: &[usize], f: impl Fn(&[usize]) -> bool) -> Vec<usize> {
        let n = cands.len();
        let mut best: Option<Vec<usize>> = None;
        for mask in 0u32..(1 << n) {
            let s: Vec<usize> = (0..n)
                .filter(|b| mask >> b & 1 == 1)
                .map(|b| cands[b])
                .collect();
            if !f(&s) {
                continue;
            }
            best = match best {
                None => Some(s),
                Some(b) if s.len() > b.len() || (s.len() == b.len() && s < b) => Some(s),
                keep => keep,
            };
        }
        best.unwrap_or_default()
    }

    #[test]
    fn matches_brute_force_on_paths() {
        for n in 0..10 {
            let cands: Vec<usize> = (1..=n).collect();
            assert_eq!(
                max_feasible_subset(&[], &cands, no_adjacent),
                brute(&cands, no_adjacent),
                "n={n}"
            );
        }
    }

    #[test]
    fn respects_base() {
        // base {1} excludes 2
        let got = max_feasible_subset(&[1], &[2, 3, 4, 5], no_adjacent);
        assert_eq!(got, vec![3, 5]);
    }

    #[test]
    fn lexicographic_tie_break() {
        // {1,3} and {1,4} and {2,4} are all size 2 on a 4-path
        assert_eq!(
            max_feasible_subset(&[], &[1, 2, 3, 4], no_adjacent),
            vec![1, 3]
        );
    }

    #[test]
    fn greedy_is_feasible() {
        let g = greedy_subset(&[], &[1, 2, 3, 4, 5, 6], no_adjacent);
        assert_eq!(g, vec![1, 3, 5]);
    }
}
