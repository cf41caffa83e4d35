//! Converse certificates.
//!
//! Each certificate carries the association-derived flags it was computed
//! from, so the value can be recomputed from `(flagged, k, nc)` alone and the
//! flags re-derived from the association.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::CellAssociation;
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Lemma2Chain,
    DlReconstruction,
    AvgCounting,
    NcOneAsymptotic,
}

/// Classification of one converse block of `2nc - 1` users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockClass {
    pub first: usize,
    pub last: usize,
    pub middle_bs: usize,
    /// Middle base station associated with both terminals it hears.
    pub good: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Flag {
    Pair(usize),
    Block(BlockClass),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub kind: BoundKind,
    pub flagged: Vec<Flag>,
    /// Bound on the sum DoF of the session(s) the kind refers to; for
    /// `avg_counting` the bound on `(uplink + downlink) / 2`.
    pub value: Rational,
    pub k: usize,
    pub nc: usize,
    pub per_user: Rational,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub assumptions: Vec<String>,
}

impl BoundCertificate {
    fn new(
        kind: BoundKind,
        flagged: Vec<Flag>,
        value: Rational,
        k: usize,
        nc: usize,
        assumptions: Vec<String>,
    ) -> Self {
        BoundCertificate {
            kind,
            flagged,
            value,
            k,
            nc,
            per_user: value / Rational::from(k),
            assumptions,
        }
    }

    /// Recomputes the value from the recorded flags, `k` and `nc`.
    pub fn recompute(&self) -> Rational {
        match self.kind {
            BoundKind::Lemma2Chain => {
                let pairs: Vec<usize> = self
                    .flagged
                    .iter()
                    .filter_map(|f| match f {
                        Flag::Pair(i) => Some(*i),
                        Flag::Block(_) => None,
                    })
                    .collect();
                Rational::from(chain_bound(self.k, &pairs))
            }
            BoundKind::DlReconstruction | BoundKind::AvgCounting => {
                let len = 2 * self.nc - 1;
                let blocks: Vec<&BlockClass> = self
                    .flagged
                    .iter()
                    .filter_map(|f| match f {
                        Flag::Block(b) => Some(b),
                        Flag::Pair(_) => None,
                    })
                    .collect();
                let tail = Rational::from(self.k - blocks.len() * len);
                if self.kind == BoundKind::AvgCounting {
                    Rational::new((4 * self.nc as i64 - 3) * blocks.len() as i64, 2) + tail
                } else {
                    let per = |b: &&BlockClass| if b.good { len - 1 } else { len };
                    Rational::from(blocks.iter().map(per).sum::<usize>()) + tail
                }
            }
            BoundKind::NcOneAsymptotic => Rational::new(2 * self.k as i64, 3),
        }
    }
}

/// Indices `i ∈ [1, k-1]` where terminal `i` or `i+1` is not associated with
/// base station `i`.
pub fn lemma2_flags(assoc: &CellAssociation) -> Vec<usize> {
    (1..assoc.k)
        .filter(|&i| !(assoc.cell(i).contains(&i) && assoc.cell(i + 1).contains(&i)))
        .collect()
}

/// Largest `s` such that some `s` users contain at most `k - s` flagged
/// adjacent pairs.
///
/// If both users of a flagged pair `(i, i+1)` are decoded, base station `i`
/// decodes neither of them and therefore nothing; every base station decodes
/// at most one message. So a decodable set `A` satisfies
/// `|A| + #{flagged pairs inside A} <= k`. Without the `k` budget this would
/// be the plain `d_i + d_{i+1} <= 1` chain bound.
fn chain_bound(k: usize, flagged: &[usize]) -> usize {
    let is_flagged = |i: usize| flagged.binary_search(&i).is_ok();
    const INF: usize = usize::MAX / 2;
    // min_pairs[taken_prev][s]
    let mut dp = [vec![INF; k + 1], vec![INF; k + 1]];
    dp[0][0] = 0;
    dp[1][1] = 0;
    for i in 2..=k {
        let mut next = [vec![INF; k + 1], vec![INF; k + 1]];
        for s in 0..=k {
            let skip = dp[0][s].min(dp[1][s]);
            next[0][s] = next[0][s].min(skip);
            if s < k {
                let penalty = usize::from(is_flagged(i - 1));
                let take = dp[0][s].min(dp[1][s].saturating_add(penalty));
                next[1][s + 1] = next[1][s + 1].min(take);
            }
        }
        dp = next;
    }
    (0..=k)
        .rev()
        .find(|&s| dp[0][s].min(dp[1][s]) + s <= k)
        .unwrap_or(0)
}

pub fn lemma2_chain_bound(assoc: &CellAssociation) -> BoundCertificate {
    let mut flags = lemma2_flags(assoc);
    flags.sort_unstable();
    let value = Rational::from(chain_bound(assoc.k, &flags));
    BoundCertificate::new(
        BoundKind::Lemma2Chain,
        flags.into_iter().map(Flag::Pair).collect(),
        value,
        assoc.k,
        assoc.nc,
        vec!["uplink decode-and-pass model: one message per decoding base station".into()],
    )
}

fn classify_blocks(assoc: &CellAssociation, nc: usize) -> Result<Vec<BlockClass>> {
    if nc < 2 {
        return Err(Error::InvalidParameter(format!(
            "block bounds need nc >= 2, got {nc}"
        )));
    }
    let len = 2 * nc - 1;
    Ok((0..assoc.k / len)
        .map(|b| {
            let s = b * len;
            let mid = s + nc;
            BlockClass {
                first: s + 1,
                last: s + len,
                middle_bs: mid,
                good: assoc.cell(mid).contains(&mid) && assoc.cell(mid + 1).contains(&mid),
            }
        })
        .collect())
}

const RECONSTRUCTION_ASSUMPTION: &str =
    "good block: 2nc-2 received signals reconstruct all 2nc-1 transmit signals (counting consequence only)";
const TAIL_ASSUMPTION: &str = "users outside full blocks bounded by 1 DoF per session";

/// Average (uplink + downlink) / 2 bound. Every full block contributes
/// `(4nc - 3) / 2` whether good or bad.
pub fn counting_bound(assoc: &CellAssociation, nc: usize) -> Result<BoundCertificate> {
    let blocks = classify_blocks(assoc, nc)?;
    let len = 2 * nc - 1;
    let tail = assoc.k - blocks.len() * len;
    let value = Rational::new((4 * nc as i64 - 3) * blocks.len() as i64, 2) + Rational::from(tail);
    Ok(BoundCertificate::new(
        BoundKind::AvgCounting,
        blocks.into_iter().map(Flag::Block).collect(),
        value,
        assoc.k,
        nc,
        vec![
            "bad block: uplink at most 2nc-2 via the middle pair".into(),
            RECONSTRUCTION_ASSUMPTION.into(),
            TAIL_ASSUMPTION.into(),
        ],
    ))
}

/// Downlink-only bound: `2nc - 2` per good block, `2nc - 1` per bad block.
/// Downlink block bound. Asymptotic in nature: when the last full block ends
/// at user `k` it can borrow a base station from the block before it and
/// exceed its share, so at such `k` the value is not a sound finite bound.
pub fn reconstruction_bound(assoc: &CellAssociation, nc: usize) -> Result<BoundCertificate> {
    let blocks = classify_blocks(assoc, nc)?;
    let len = 2 * nc - 1;
    let tail = assoc.k - blocks.len() * len;
    let sum: usize = blocks
        .iter()
        .map(|b| if b.good { len - 1 } else { len })
        .sum();
    Ok(BoundCertificate::new(
        BoundKind::DlReconstruction,
        blocks.into_iter().map(Flag::Block).collect(),
        Rational::from(sum + tail),
        assoc.k,
        nc,
        vec![RECONSTRUCTION_ASSUMPTION.into(), TAIL_ASSUMPTION.into()],
    ))
}

/// `nc = 1`: each session at most 2/3 per user. Asymptotic only; no
/// association-dependent refinement.
pub fn nc_one_bound(k: usize) -> BoundCertificate {
    BoundCertificate::new(
        BoundKind::NcOneAsymptotic,
        Vec::new(),
        Rational::new(2 * k as i64, 3),
        k,
        1,
        vec!["asymptotic per-user value; edge users may exceed it at finite k".into()],
    )
}

/// Re-derives the certificate from the association and checks that it
/// matches, including the recomputed value.
pub fn verify_certificate(cert: &BoundCertificate, assoc: &CellAssociation) -> bool {
    if cert.k != assoc.k
        || cert.recompute() != cert.value
        || cert.per_user * Rational::from(cert.k) != cert.value
    {
        return false;
    }
    let fresh = match cert.kind {
        BoundKind::Lemma2Chain => Ok(lemma2_chain_bound(assoc)),
        BoundKind::DlReconstruction => reconstruction_bound(assoc, cert.nc),
        BoundKind::AvgCounting => counting_bound(assoc, cert.nc),
        BoundKind::NcOneAsymptotic => Ok(nc_one_bound(assoc.k)),
    };
    matches!(fresh, Ok(f) if f.flagged == cert.flagged && f.value == cert.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{downlink_optimal, pair_association};

    // Reference for the chain bound: enumerate all subsets.
    fn chain_brute(k: usize, flagged: &[usize]) -> usize {
        (0u32..1 << k)
            .filter(|mask| {
                let inside = |i: usize| mask >> (i - 1) & 1 == 1;
                let pairs = flagged
                    .iter()
                    .filter(|&&i| inside(i) && inside(i + 1))
                    .count();
                mask.count_ones() as usize + pairs <= k
            })
            .map(|m| m.count_ones() as usize)
            .max()
            .unwrap()
    }

    #[test]
    fn chain_bound_matches_enumeration() {
        for k in 1..=9usize {
            for fmask in 0u32..1 << (k - 1) {
                let flagged: Vec<usize> = (1..k).filter(|i| fmask >> (i - 1) & 1 == 1).collect();
                assert_eq!(
                    chain_bound(k, &flagged),
                    chain_brute(k, &flagged),
                    "k={k} {flagged:?}"
                );
            }
        }
    }

    #[test]
    fn lemma2_examples() {
        let c = lemma2_chain_bound(&pair_association(6).unwrap());
        assert!(c.flagged.is_empty());
        assert_eq!(c.value, Rational::integer(6));

        let c = lemma2_chain_bound(&downlink_optimal(5, 2).unwrap().assoc);
        assert_eq!(
            c.flagged,
            vec![Flag::Pair(1), Flag::Pair(2), Flag::Pair(3), Flag::Pair(4)]
        );
        assert_eq!(c.value, Rational::integer(3));

        let a = CellAssociation::from_slices(3, 1, &[&[1], &[], &[2]]).unwrap();
        let c = lemma2_chain_bound(&a);
        assert_eq!(c.flagged, vec![Flag::Pair(1), Flag::Pair(2)]);
        assert_eq!(c.value, Rational::integer(2));
    }

    #[test]
    fn ignored_signal_case_stays_sound() {
        // BS3 decodes nothing: M_2 at BS1, M_3 at BS2, M_4 at BS4
        let a = CellAssociation::from_slices(4, 2, &[&[], &[1, 2], &[2], &[4]]).unwrap();
        assert_eq!(
            crate::uplink::max_uplink_dof(&a, 20, crate::Mode::Exact)
                .unwrap()
                .sum_dof,
            3
        );
        assert_eq!(lemma2_chain_bound(&a).value, Rational::integer(3));
    }

    #[test]
    fn counting_examples() {
        let c = counting_bound(&pair_association(12).unwrap(), 2).unwrap();
        assert!(c
            .flagged
            .iter()
            .all(|f| matches!(f, Flag::Block(b) if b.good)));
        assert_eq!(c.flagged.len(), 4);
        assert_eq!(c.value, Rational::integer(10));
        assert_eq!(c.per_user, Rational::new(5, 6));

        let c = counting_bound(&CellAssociation::empty(25, 3), 3).unwrap();
        assert_eq!(c.per_user, Rational::new(9, 10));

        let c = counting_bound(&CellAssociation::empty(7, 2), 2).unwrap();
        assert_eq!(c.value, Rational::integer(6));
        assert_eq!(c.per_user, Rational::new(6, 7));

        assert!(counting_bound(&CellAssociation::empty(3, 1), 1).is_err());
    }

    #[test]
    fn reconstruction_examples() {
        let c = reconstruction_bound(&pair_association(6).unwrap(), 2).unwrap();
        assert_eq!(c.value, Rational::integer(4));

        let c = reconstruction_bound(&downlink_optimal(5, 2).unwrap().assoc, 2).unwrap();
        assert_eq!(
            c.flagged,
            vec![Flag::Block(BlockClass {
                first: 1,
                last: 3,
                middle_bs: 2,
                good: false
            })]
        );
        assert_eq!(c.value, Rational::integer(5));

        let c = reconstruction_bound(&CellAssociation::empty(3, 2), 2).unwrap();
        assert_eq!(c.value, Rational::integer(3));
    }

    #[test]
    fn certificates_self_verify() {
        let a = downlink_optimal(11, 2).unwrap().assoc;
        for cert in [
            lemma2_chain_bound(&a),
            counting_bound(&a, 2).unwrap(),
            reconstruction_bound(&a, 2).unwrap(),
            nc_one_bound(11),
        ] {
            assert_eq!(cert.recompute(), cert.value);
            assert!(verify_certificate(&cert, &a));
        }
        let mut forged = reconstruction_bound(&a, 2).unwrap();
        forged.value = Rational::integer(1);
        assert!(!verify_certificate(&forged, &a));
        let other = pair_association(11).unwrap();
        assert!(!verify_certificate(
            &reconstruction_bound(&a, 2).unwrap(),
            &other
        ));
    }

    #[test]
    fn certificate_json() {
        let c = counting_bound(&pair_association(12).unwrap(), 2).unwrap();
        let js = serde_json::to_value(&c).unwrap();
        assert_eq!(js["kind"], "avg_counting");
        assert_eq!(js["value"], "10");
        assert_eq!(js["per_user"], "5/6");
        assert_eq!(js["flagged"][0]["middle_bs"], 2);
        let back: BoundCertificate = serde_json::from_value(js).unwrap();
        assert_eq!(back, c);
        let l = serde_json::to_value(lemma2_chain_bound(&downlink_optimal(5, 2).unwrap().assoc))
            .unwrap();
        assert_eq!(l["flagged"], serde_json::json!([1, 2, 3, 4]));
    }

    #[test]
    fn reconstruction_leaks_at_the_chain_end() {
        use crate::downlink::{max_downlink_dof, ZfOracle, DL_EXACT_LIMIT};
        use crate::subset::Mode;
        let a =
            CellAssociation::from_slices(6, 2, &[&[1, 2], &[1, 2], &[2], &[3], &[5, 6], &[5, 6]])
                .unwrap();
        let oracle = ZfOracle::with_default_seeds(6).unwrap();
        let dl = max_downlink_dof(&a, &oracle, DL_EXACT_LIMIT, Mode::Exact).unwrap();
        assert_eq!(dl.active_users, vec![1, 2, 4, 5, 6]);
        assert_eq!(
            reconstruction_bound(&a, 2).unwrap().value,
            Rational::integer(4)
        );
        // one more user turns the last block into an interior one
        let mut cells = a.cells.clone();
        cells.push(Default::default());
        let b = CellAssociation::new(7, 2, cells).unwrap();
        let dl7 = max_downlink_dof(
            &b,
            &ZfOracle::with_default_seeds(7).unwrap(),
            DL_EXACT_LIMIT,
            Mode::Exact,
        )
        .unwrap();
        assert!(Rational::from(dl7.sum_dof) <= reconstruction_bound(&b, 2).unwrap().value);
    }
}
