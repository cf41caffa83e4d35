//! Exhaustive and periodic searches over cell associations.
//!
//! Candidates are restricted to a window: `C_i ⊆ [i-w, i+w] ∩ [1..k]`. The
//! window is a scope qualifier on every result; whether some association
//! farther than `nc` from its terminal could ever help the downlink is not
//! known.

use std::collections::{BTreeSet, HashMap};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    counting_bound, lemma2_chain_bound, nc_one_bound, reconstruction_bound, BoundCertificate,
};
use crate::downlink::{max_downlink_dof, DlEvaluation, ZfOracle, DEFAULT_SEEDS, DL_EXACT_LIMIT};
use crate::error::{Error, Result};
use crate::model::CellAssociation;
use crate::rational::Rational;
use crate::subset::Mode;
use crate::uplink::{max_uplink_dof, prune, UlEvaluation, UL_EXACT_LIMIT};

pub const DEFAULT_CAP: u128 = 5_000_000;
const CHUNK: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Avg,
    Dl,
    Ul,
}

impl std::str::FromStr for Objective {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "avg" => Ok(Objective::Avg),
            "dl" | "down" => Ok(Objective::Dl),
            "ul" | "up" => Ok(Objective::Ul),
            _ => Err(Error::Parse(format!("unknown objective {s:?}"))),
        }
    }
}

/// Run configuration file for searches.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub k: usize,
    pub nc: usize,
    /// Defaults to `nc`.
    #[serde(default)]
    pub window: Option<usize>,
    #[serde(default = "default_objective")]
    pub objective: Objective,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_cap")]
    pub cap: u128,
}

fn default_objective() -> Objective {
    Objective::Avg
}

fn default_seeds() -> Vec<u64> {
    DEFAULT_SEEDS.to_vec()
}

fn default_cap() -> u128 {
    DEFAULT_CAP
}

impl SearchConfig {
    pub fn new(k: usize, nc: usize, window: usize, objective: Objective) -> Self {
        SearchConfig {
            k,
            nc,
            window: Some(window),
            objective,
            seeds: default_seeds(),
            cap: DEFAULT_CAP,
        }
    }

    pub fn window(&self) -> usize {
        self.window.unwrap_or(self.nc)
    }
}

fn window_of(i: usize, k: usize, w: usize) -> Vec<usize> {
    (i.saturating_sub(w).max(1)..=(i + w).min(k)).collect()
}

fn subsets_up_to(items: &[usize], max: usize) -> Vec<BTreeSet<usize>> {
    let mut out = vec![BTreeSet::new()];
    for &x in items {
        let grown: Vec<BTreeSet<usize>> = out
            .iter()
            .filter(|s| s.len() < max)
            .map(|s| {
                let mut t = s.clone();
                t.insert(x);
                t
            })
            .collect();
        out.extend(grown);
    }
    out.sort();
    out
}

fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    (0..r).fold(1u128, |acc, i| acc * (n - i) as u128 / (i as u128 + 1))
}

/// `Π_i Σ_{s=0}^{nc} C(|window_i|, s)`.
pub fn association_count(k: usize, nc: usize, w: usize) -> u128 {
    (1..=k)
        .map(|i| {
            let n = window_of(i, k, w).len();
            (0..=nc).map(|s| binomial(n, s)).sum::<u128>()
        })
        .product()
}

/// All windowed associations in lexicographic order.
pub struct Associations {
    k: usize,
    nc: usize,
    options: Vec<Vec<BTreeSet<usize>>>,
    digits: Vec<usize>,
    done: bool,
}

pub fn enumerate_associations(k: usize, nc: usize, w: usize) -> Result<Associations> {
    if k == 0 || nc == 0 || w == 0 {
        return Err(Error::InvalidParameter(format!(
            "k, nc and window must be at least 1 (k={k}, nc={nc}, w={w})"
        )));
    }
    let options = (1..=k)
        .map(|i| subsets_up_to(&window_of(i, k, w), nc))
        .collect();
    Ok(Associations {
        k,
        nc,
        options,
        digits: vec![0; k],
        done: false,
    })
}

impl Iterator for Associations {
    type Item = CellAssociation;

    fn next(&mut self) -> Option<CellAssociation> {
        if self.done {
            return None;
        }
        let item = CellAssociation {
            k: self.k,
            nc: self.nc,
            cells: self
                .digits
                .iter()
                .zip(&self.options)
                .map(|(&d, opts)| opts[d].clone())
                .collect(),
        };
        // odometer, last user fastest
        let mut pos = self.k;
        loop {
            if pos == 0 {
                self.done = true;
                break;
            }
            pos -= 1;
            self.digits[pos] += 1;
            if self.digits[pos] < self.options[pos].len() {
                break;
            }
            self.digits[pos] = 0;
        }
        Some(item)
    }
}

/// One evaluated candidate, as written to the CSV table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateRow {
    pub id: usize,
    pub dl_dof: usize,
    pub ul_dof: usize,
    /// `(dl + ul) / (2k)`
    pub avg: Rational,
    /// Per-user counting bound (`nc >= 2` only).
    pub bound: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundViolation {
    pub id: usize,
    pub bound: String,
    pub achieved: Rational,
    pub value: Rational,
}

/// Converse certificates checked against oracle values on every candidate.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SoundnessReport {
    pub checked: usize,
    pub violations: Vec<BoundViolation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best_assoc: CellAssociation,
    pub dl: DlEvaluation,
    pub ul: UlEvaluation,
    pub avg_per_user: Rational,
    pub candidates_enumerated: u128,
    pub objective: Objective,
    pub window: usize,
    pub scope: String,
    /// Counting certificate for the winner (`nc = 1`: the asymptotic one).
    pub bound: BoundCertificate,
    pub soundness: SoundnessReport,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rows: Vec<CandidateRow>,
}

struct Evaluated {
    dl: DlEvaluation,
    ul: UlEvaluation,
    violations: Vec<BoundViolation>,
    bound: Option<Rational>,
}

fn check_bounds(
    id: usize,
    assoc: &CellAssociation,
    dl: usize,
    ul: usize,
) -> Result<(Vec<BoundViolation>, Option<Rational>)> {
    let mut v = Vec::new();
    let mut push = |name: &str, achieved: Rational, cert: &BoundCertificate| {
        if achieved > cert.value {
            v.push(BoundViolation {
                id,
                bound: name.into(),
                achieved,
                value: cert.value,
            });
        }
    };
    push(
        "lemma2_chain",
        Rational::from(ul),
        &lemma2_chain_bound(assoc),
    );
    let mut per_user = None;
    if assoc.nc >= 2 {
        push(
            "dl_reconstruction",
            Rational::from(dl),
            &reconstruction_bound(assoc, assoc.nc)?,
        );
        let c = counting_bound(assoc, assoc.nc)?;
        push("avg_counting", Rational::new((dl + ul) as i64, 2), &c);
        per_user = Some(c.per_user);
    }
    Ok((v, per_user))
}

fn objective_value(obj: Objective, dl: usize, ul: usize) -> usize {
    match obj {
        Objective::Avg => dl + ul,
        Objective::Dl => dl,
        Objective::Ul => ul,
    }
}

/// Evaluates every windowed association with both oracles and returns the
/// maximizer (first in lexicographic order among ties). Every candidate is
/// also checked against the converse certificates.
pub fn exhaustive_search(cfg: &SearchConfig, collect_rows: bool) -> Result<SearchResult> {
    exhaustive_search_with_progress(cfg, collect_rows, |_, _| {})
}

/// As [`exhaustive_search`], calling `progress(done, total)` after each chunk.
pub fn exhaustive_search_with_progress<P>(
    cfg: &SearchConfig,
    collect_rows: bool,
    mut progress: P,
) -> Result<SearchResult>
where
    P: FnMut(u128, u128),
{
    let w = cfg.window();
    let count = association_count(cfg.k, cfg.nc, w);
    if count > cfg.cap {
        return Err(Error::BudgetExceeded {
            count,
            cap: cfg.cap,
        });
    }
    if cfg.k > DL_EXACT_LIMIT {
        return Err(Error::LimitExceeded {
            k: cfg.k,
            limit: DL_EXACT_LIMIT,
        });
    }
    let oracle = ZfOracle::new(cfg.k, &cfg.seeds)?;
    let ul_memo: Mutex<HashMap<CellAssociation, UlEvaluation>> = Mutex::new(HashMap::new());

    let evaluate = |id: usize, assoc: &CellAssociation| -> Result<Evaluated> {
        let dl = max_downlink_dof(assoc, &oracle, DL_EXACT_LIMIT, Mode::Exact)?;
        let key = prune(assoc);
        let cached = ul_memo.lock().expect("memo lock").get(&key).cloned();
        let ul = match cached {
            Some(u) => u,
            None => {
                let u = max_uplink_dof(&key, UL_EXACT_LIMIT, Mode::Exact)?;
                ul_memo.lock().expect("memo lock").insert(key, u.clone());
                u
            }
        };
        let (violations, bound) = check_bounds(id, assoc, dl.sum_dof, ul.sum_dof)?;
        Ok(Evaluated {
            dl,
            ul,
            violations,
            bound,
        })
    };

    let mut iter = enumerate_associations(cfg.k, cfg.nc, w)?.enumerate();
    let mut best: Option<(usize, CellAssociation, Evaluated)> = None;
    let mut soundness = SoundnessReport::default();
    let mut rows = Vec::new();
    let mut seen = 0u128;
    loop {
        let chunk: Vec<(usize, CellAssociation)> = iter.by_ref().take(CHUNK).collect();
        if chunk.is_empty() {
            break;
        }
        seen += chunk.len() as u128;
        let evals: Vec<Result<Evaluated>> =
            chunk.par_iter().map(|(id, a)| evaluate(*id, a)).collect();
        for ((id, assoc), ev) in chunk.into_iter().zip(evals) {
            let ev = ev?;
            soundness.checked += 1;
            soundness.violations.extend(ev.violations.iter().cloned());
            if collect_rows {
                rows.push(CandidateRow {
                    id,
                    dl_dof: ev.dl.sum_dof,
                    ul_dof: ev.ul.sum_dof,
                    avg: Rational::new((ev.dl.sum_dof + ev.ul.sum_dof) as i64, 2 * cfg.k as i64),
                    bound: ev.bound,
                });
            }
            let score = objective_value(cfg.objective, ev.dl.sum_dof, ev.ul.sum_dof);
            let better = match &best {
                None => true,
                Some((_, _, b)) => {
                    score > objective_value(cfg.objective, b.dl.sum_dof, b.ul.sum_dof)
                }
            };
            if better {
                best = Some((id, assoc, ev));
            }
        }
        progress(seen, count);
    }
    let (_, best_assoc, ev) = best.expect("window enumeration is never empty");
    let bound = if cfg.nc >= 2 {
        counting_bound(&best_assoc, cfg.nc)?
    } else {
        nc_one_bound(cfg.k)
    };
    let ul = ev.ul;
    // memo entries were computed on the pruned association; the order is
    // valid for the original since pruning only drops unheard stations
    debug_assert!(crate::uplink::verify_order(
        &ul.order,
        &best_assoc,
        &ul.active_users
    ));
    Ok(SearchResult {
        avg_per_user: Rational::new((ev.dl.sum_dof + ul.sum_dof) as i64, 2 * cfg.k as i64),
        best_assoc,
        dl: ev.dl,
        ul,
        candidates_enumerated: seen,
        objective: cfg.objective,
        window: w,
        scope: format!("associations within distance {w} of each terminal"),
        bound,
        soundness,
        rows,
    })
}

/// CSV table of evaluated candidates.
pub fn rows_to_csv(rows: &[CandidateRow]) -> String {
    let mut out = String::from("assoc-id,dl_dof,ul_dof,avg_num,avg_den,bound_num,bound_den\n");
    for r in rows {
        let (bn, bd) = match r.bound {
            Some(b) => (b.numer().to_string(), b.denom().to_string()),
            None => (String::new(), String::new()),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.id,
            r.dl_dof,
            r.ul_dof,
            r.avg.numer(),
            r.avg.denom(),
            bn,
            bd
        ));
    }
    out
}

/// `C_i = {i + o : o ∈ offsets[(i-1) mod p]} ∩ [1..k]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodicPattern {
    pub offsets: Vec<BTreeSet<i64>>,
}

impl PeriodicPattern {
    pub fn new(offsets: Vec<BTreeSet<i64>>) -> Result<Self> {
        if offsets.is_empty() {
            return Err(Error::InvalidParameter(
                "pattern period must be at least 1".into(),
            ));
        }
        Ok(PeriodicPattern { offsets })
    }

    pub fn from_slices(offsets: &[&[i64]]) -> Result<Self> {
        Self::new(
            offsets
                .iter()
                .map(|o| o.iter().copied().collect())
                .collect(),
        )
    }

    pub fn period(&self) -> usize {
        self.offsets.len()
    }

    pub fn instantiate(&self, k: usize, nc: usize) -> Result<CellAssociation> {
        let cells = (1..=k)
            .map(|i| {
                self.offsets[(i - 1) % self.period()]
                    .iter()
                    .map(|&o| i as i64 + o)
                    .filter(|&j| j >= 1 && j <= k as i64)
                    .map(|j| j as usize)
                    .collect()
            })
            .collect();
        CellAssociation::new(k, nc, cells)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionTrend {
    pub values: [usize; 3],
    /// Sum-DoF increase per period between the first two sizes.
    pub slope: Rational,
    pub affine: bool,
    pub per_user: Rational,
}

impl SessionTrend {
    fn from_values(values: [usize; 3], period: usize) -> Self {
        let d1 = values[1] as i64 - values[0] as i64;
        let d2 = values[2] as i64 - values[1] as i64;
        SessionTrend {
            values,
            slope: Rational::integer(d1),
            affine: d1 == d2,
            per_user: Rational::new(d1, period as i64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicReport {
    pub pattern: PeriodicPattern,
    pub nc: usize,
    pub ks: [usize; 3],
    pub dl: SessionTrend,
    pub ul: SessionTrend,
    /// `(dl + ul) / 2` per user; `None` when either session is not affine.
    pub avg_per_user: Option<Rational>,
    pub nonlinear: bool,
}

/// Evaluates the pattern at `p·m`, `p·(m+1)`, `p·(m+2)` users.
pub fn periodic_eval(
    pattern: &PeriodicPattern,
    nc: usize,
    m: usize,
    seeds: &[u64],
) -> Result<PeriodicReport> {
    if m < 3 {
        return Err(Error::InvalidParameter(format!(
            "need at least 3 copies, got {m}"
        )));
    }
    let p = pattern.period();
    let ks = [p * m, p * (m + 1), p * (m + 2)];
    let mut dl = [0; 3];
    let mut ul = [0; 3];
    for (idx, &k) in ks.iter().enumerate() {
        let assoc = pattern.instantiate(k, nc)?;
        let oracle = ZfOracle::new(k, seeds)?;
        dl[idx] = max_downlink_dof(&assoc, &oracle, DL_EXACT_LIMIT, Mode::Exact)?.sum_dof;
        ul[idx] = max_uplink_dof(&assoc, UL_EXACT_LIMIT, Mode::Exact)?.sum_dof;
    }
    let dl = SessionTrend::from_values(dl, p);
    let ul = SessionTrend::from_values(ul, p);
    let nonlinear = !(dl.affine && ul.affine);
    Ok(PeriodicReport {
        pattern: pattern.clone(),
        nc,
        ks,
        avg_per_user: (!nonlinear).then(|| (dl.per_user + ul.per_user) / Rational::integer(2)),
        dl,
        ul,
        nonlinear,
    })
}

/// All period-`p` patterns whose offsets lie in `[-w, w]` with at most `nc`
/// entries per position.
pub fn enumerate_patterns(p: usize, w: usize, nc: usize) -> Vec<PeriodicPattern> {
    let window: Vec<i64> = (-(w as i64)..=w as i64).collect();
    let mut opts: Vec<BTreeSet<i64>> = vec![BTreeSet::new()];
    for &o in &window {
        let grown: Vec<BTreeSet<i64>> = opts
            .iter()
            .filter(|s| s.len() < nc)
            .map(|s| {
                let mut t = s.clone();
                t.insert(o);
                t
            })
            .collect();
        opts.extend(grown);
    }
    opts.sort();
    let mut out = vec![Vec::new()];
    for _ in 0..p {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<BTreeSet<i64>>| {
                opts.iter().map(move |o| {
                    let mut v = prefix.clone();
                    v.push(o.clone());
                    v
                })
            })
            .collect();
    }
    out.into_iter()
        .map(|offsets| PeriodicPattern { offsets })
        .collect()
}

/// `periodic_eval` over every pattern, in pattern order.
pub fn periodic_sweep(
    patterns: &[PeriodicPattern],
    nc: usize,
    m: usize,
    seeds: &[u64],
) -> Result<Vec<PeriodicReport>> {
    patterns
        .par_iter()
        .map(|p| periodic_eval(p, nc, m, seeds))
        .collect()
}

pub fn tau(nc: usize) -> Rational {
    if nc == 1 {
        Rational::new(2, 3)
    } else {
        Rational::new(4 * nc as i64 - 3, 4 * nc as i64 - 2)
    }
}

pub fn tau_downlink(nc: usize) -> Rational {
    Rational::new(2 * nc as i64, 2 * nc as i64 + 1)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoremComparison {
    pub nc: usize,
    pub tau: Rational,
    pub tau_d: Rational,
    /// `tau_d(nc - 1)`, for `nc >= 2`.
    pub tau_d_reduced: Option<Rational>,
    /// `tau(nc) == (1 + tau_d(nc - 1)) / 2`, for `nc >= 2`.
    pub relation_holds: Option<bool>,
    pub observed: Option<Rational>,
    /// `observed - tau`.
    pub delta: Option<Rational>,
}

pub fn compare_with_theorem(nc: usize, observed: Option<Rational>) -> Result<TheoremComparison> {
    if nc == 0 {
        return Err(Error::InvalidParameter("nc must be at least 1".into()));
    }
    let t = tau(nc);
    let reduced = (nc >= 2).then(|| tau_downlink(nc - 1));
    Ok(TheoremComparison {
        nc,
        tau: t,
        tau_d: tau_downlink(nc),
        tau_d_reduced: reduced,
        relation_holds: reduced.map(|r| (Rational::one() + r) / Rational::integer(2) == t),
        observed,
        delta: observed.map(|o| o - t),
    })
}
