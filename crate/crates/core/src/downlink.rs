//! One-shot linear zero-forcing in the downlink.
//!
//! Message `m` is carried by the transmitters in `C_m` with precoding
//! coefficients `v_{m,j}`. With independent message symbols a one-shot linear
//! scheme is interference free iff, for every active `m`, the precoder
//! vanishes at every other active receiver and not at receiver `m`. The
//! messages decouple: each one is a small null-space problem of its own.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{draw_channels, is_link, CellAssociation, ChannelRealization};
use crate::subset::{greedy_subset, max_feasible_subset, Mode};

pub const DEFAULT_SEEDS: [u64; 3] = [1, 2, 3];
pub const DL_EXACT_LIMIT: usize = 16;

/// Precoding coefficients for one channel draw.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZfWitness {
    pub seed: u64,
    pub prime: u64,
    /// message -> (transmitter -> coefficient)
    pub precoders: BTreeMap<usize, BTreeMap<usize, u64>>,
}

/// Seeds disagreed on a feasibility decision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenericityWarning {
    pub active: Vec<usize>,
    pub feasible_seeds: Vec<u64>,
    pub infeasible_seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DlEvaluation {
    pub sum_dof: usize,
    pub active_users: Vec<usize>,
    pub witness: ZfWitness,
    pub seeds_tried: Vec<u64>,
    /// False when the active set came from the greedy fallback.
    pub exact: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<GenericityWarning>,
}

fn check_active(assoc: &CellAssociation, active: &[usize]) -> Result<()> {
    for &m in active {
        if m == 0 || m > assoc.k {
            return Err(Error::IndexOutOfRange {
                index: m,
                k: assoc.k,
            });
        }
        if assoc.cell(m).is_empty() {
            return Err(Error::EmptyAssociation { m });
        }
    }
    Ok(())
}

/// The constraint rows (one per interfered active receiver) and the desired
/// row for message `m`, over the columns `C_m` in ascending order.
fn message_system(
    assoc: &CellAssociation,
    active: &[usize],
    m: usize,
    ch: &ChannelRealization,
) -> (Vec<usize>, Vec<Vec<u64>>, Vec<u64>) {
    let cols: Vec<usize> = assoc.cell(m).iter().copied().collect();
    let constraints = active
        .iter()
        .filter(|&&r| r != m && cols.iter().any(|&j| is_link(r, j)))
        .map(|&r| cols.iter().map(|&j| ch.h(r, j)).collect())
        .collect();
    let desired = cols.iter().map(|&j| ch.h(m, j)).collect();
    (cols, constraints, desired)
}

fn message_feasible(
    assoc: &CellAssociation,
    active: &[usize],
    m: usize,
    ch: &ChannelRealization,
) -> bool {
    let (cols, mut rows, desired) = message_system(assoc, active, m, ch);
    let f = ch.field();
    let base = f.rank(&rows, cols.len());
    rows.push(desired);
    f.rank(&rows, cols.len()) > base
}

fn message_precoder(
    assoc: &CellAssociation,
    active: &[usize],
    m: usize,
    ch: &ChannelRealization,
) -> Option<BTreeMap<usize, u64>> {
    let (cols, rows, desired) = message_system(assoc, active, m, ch);
    let f = ch.field();
    let v = f
        .null_space(&rows, cols.len())
        .into_iter()
        .find(|v| f.dot(&desired, v) != 0)?;
    Some(cols.into_iter().zip(v).collect())
}

fn check_channel(assoc: &CellAssociation, ch: &ChannelRealization) -> Result<()> {
    if ch.k() != assoc.k {
        return Err(Error::InvalidParameter(format!(
            "channel drawn for k={} used with k={}",
            ch.k(),
            assoc.k
        )));
    }
    Ok(())
}

/// Rank test per active message on a single channel draw. Returns a witness
/// iff every active message can be zero-forced.
pub fn zf_feasible(
    assoc: &CellAssociation,
    active: &[usize],
    ch: &ChannelRealization,
) -> Result<Option<ZfWitness>> {
    check_channel(assoc, ch)?;
    check_active(assoc, active)?;
    if !active
        .iter()
        .all(|&m| message_feasible(assoc, active, m, ch))
    {
        return Ok(None);
    }
    let mut precoders = BTreeMap::new();
    for &m in active {
        let v = message_precoder(assoc, active, m, ch)
            .expect("desired row outside the constraint row space has a null-space witness");
        precoders.insert(m, v);
    }
    Ok(Some(ZfWitness {
        seed: ch.seed(),
        prime: ch.prime(),
        precoders,
    }))
}

/// Re-checks a witness by direct evaluation of every received signal.
pub fn verify_witness(
    w: &ZfWitness,
    assoc: &CellAssociation,
    active: &[usize],
    ch: &ChannelRealization,
) -> bool {
    if w.seed != ch.seed() || w.prime != ch.prime() || ch.k() != assoc.k {
        return false;
    }
    let active_set: BTreeSet<usize> = active.iter().copied().collect();
    if w.precoders.keys().copied().collect::<BTreeSet<_>>() != active_set {
        return false;
    }
    let f = ch.field();
    for (&m, v) in &w.precoders {
        if m == 0 || m > assoc.k {
            return false;
        }
        if v.iter()
            .any(|(j, &c)| !assoc.cell(m).contains(j) || c >= ch.prime())
        {
            return false;
        }
        let gain = |r: usize| {
            v.iter()
                .fold(0, |acc, (&j, &c)| f.add(acc, f.mul(ch.h(r, j), c)))
        };
        if gain(m) == 0 {
            return false;
        }
        if active_set.iter().any(|&r| r != m && gain(r) != 0) {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZfDecision {
    pub feasible: bool,
    /// Witness from the first seed that voted with the majority.
    pub witness: Option<ZfWitness>,
    pub warning: Option<GenericityWarning>,
}

/// Majority vote of the rank test over several independent channel draws.
#[derive(Debug, Clone)]
pub struct ZfOracle {
    channels: Vec<ChannelRealization>,
}

impl ZfOracle {
    pub fn new(k: usize, seeds: &[u64]) -> Result<Self> {
        if seeds.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one seed is required".into(),
            ));
        }
        let channels = seeds
            .iter()
            .map(|&s| draw_channels(k, s))
            .collect::<Result<Vec<_>>>()?;
        Ok(ZfOracle { channels })
    }

    pub fn with_default_seeds(k: usize) -> Result<Self> {
        Self::new(k, &DEFAULT_SEEDS)
    }

    pub fn from_channels(channels: Vec<ChannelRealization>) -> Result<Self> {
        let Some(first) = channels.first() else {
            return Err(Error::InvalidParameter(
                "at least one channel is required".into(),
            ));
        };
        if channels.iter().any(|c| c.k() != first.k()) {
            return Err(Error::InvalidParameter("channels disagree on k".into()));
        }
        Ok(ZfOracle { channels })
    }

    pub fn k(&self) -> usize {
        self.channels[0].k()
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.channels.iter().map(|c| c.seed()).collect()
    }

    pub fn channels(&self) -> &[ChannelRealization] {
        &self.channels
    }

    pub fn channel_for_seed(&self, seed: u64) -> Option<&ChannelRealization> {
        self.channels.iter().find(|c| c.seed() == seed)
    }

    pub fn decide(&self, assoc: &CellAssociation, active: &[usize]) -> Result<ZfDecision> {
        let mut yes = Vec::new();
        let mut no = Vec::new();
        let mut witness = None;
        for ch in &self.channels {
            match zf_feasible(assoc, active, ch)? {
                Some(w) => {
                    yes.push(ch.seed());
                    witness.get_or_insert(w);
                }
                None => no.push(ch.seed()),
            }
        }
        let feasible = 2 * yes.len() > self.channels.len();
        let warning = (!yes.is_empty() && !no.is_empty()).then(|| GenericityWarning {
            active: active.to_vec(),
            feasible_seeds: yes,
            infeasible_seeds: no,
        });
        Ok(ZfDecision {
            feasible,
            witness: if feasible { witness } else { None },
            warning,
        })
    }
}

/// Largest zero-forceable active set (lexicographically smallest among ties).
pub fn max_downlink_dof(
    assoc: &CellAssociation,
    oracle: &ZfOracle,
    exact_limit: usize,
    mode: Mode,
) -> Result<DlEvaluation> {
    if oracle.k() != assoc.k {
        return Err(Error::InvalidParameter(format!(
            "oracle drawn for k={} used with k={}",
            oracle.k(),
            assoc.k
        )));
    }
    let exact = assoc.k <= exact_limit;
    if !exact && mode == Mode::Exact {
        return Err(Error::LimitExceeded {
            k: assoc.k,
            limit: exact_limit,
        });
    }

    let mut warnings = Vec::new();
    let mut err = None;
    let mut feasible = |s: &[usize]| -> bool {
        let mut sorted = s.to_vec();
        sorted.sort_unstable();
        match oracle.decide(assoc, &sorted) {
            Ok(d) => {
                if let Some(w) = d.warning {
                    warnings.push(w);
                }
                d.feasible
            }
            Err(e) => {
                err.get_or_insert(e);
                false
            }
        }
    };
    let candidates: Vec<usize> = (1..=assoc.k)
        .filter(|&m| !assoc.cell(m).is_empty())
        .filter(|&m| feasible(&[m]))
        .collect();
    let mut active = if exact {
        max_feasible_subset(&[], &candidates, &mut feasible)
    } else {
        greedy_subset(&[], &candidates, &mut feasible)
    };
    if let Some(e) = err {
        return Err(e);
    }
    active.sort_unstable();
    let decision = oracle.decide(assoc, &active)?;
    let witness = decision.witness.ok_or_else(|| {
        Error::InvalidParameter("maximum active set failed its final zero-forcing check".into())
    })?;
    if let Some(w) = decision.warning {
        warnings.push(w);
    }
    warnings.dedup();
    Ok(DlEvaluation {
        sum_dof: active.len(),
        active_users: active,
        witness,
        seeds_tried: oracle.seeds(),
        exact,
        warnings,
    })
}
