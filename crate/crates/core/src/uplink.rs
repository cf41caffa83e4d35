//! Uplink successive decoding with decoded-message passing.
//!
//! A base station `b` may decode message `m` once every other active message
//! it hears has already been decoded somewhere and passed to `b` over the
//! backhaul (`b ∈ C_{m'}`). Decoding at `b` also needs `b ∈ C_m` and `b` to
//! hear terminal `m`. Decodability only grows with the decoded set, so a
//! greedy fixpoint decides feasibility exactly.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{is_link, neighbours_of_mt, CellAssociation};
use crate::subset::{greedy_subset, max_feasible_subset, Mode};

pub const UL_EXACT_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodeStep {
    pub m: usize,
    pub bs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodingOrder {
    pub steps: Vec<DecodeStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UlEvaluation {
    pub sum_dof: usize,
    pub active_users: Vec<usize>,
    pub order: DecodingOrder,
    pub exact: bool,
}

fn check_active(assoc: &CellAssociation, active: &[usize]) -> Result<()> {
    match active.iter().find(|&&m| m == 0 || m > assoc.k) {
        Some(&m) => Err(Error::IndexOutOfRange {
            index: m,
            k: assoc.k,
        }),
        None => Ok(()),
    }
}

/// Active terminals heard at `bs` other than `m`.
fn interferers(active: &BTreeSet<usize>, bs: usize, m: usize) -> impl Iterator<Item = usize> + '_ {
    [bs, bs + 1]
        .into_iter()
        .filter(move |&x| x != m && active.contains(&x))
}

fn ready(
    assoc: &CellAssociation,
    active: &BTreeSet<usize>,
    decoded: &BTreeSet<usize>,
    m: usize,
    bs: usize,
) -> bool {
    assoc.cell(m).contains(&bs)
        && is_link(m, bs)
        && interferers(active, bs, m).all(|x| decoded.contains(&x) && assoc.cell(x).contains(&bs))
}

/// Fixpoint scheduler. At each step the smallest ready message is decoded at
/// its smallest ready base station.
pub fn uplink_feasible(assoc: &CellAssociation, active: &[usize]) -> Result<Option<DecodingOrder>> {
    check_active(assoc, active)?;
    let active: BTreeSet<usize> = active.iter().copied().collect();
    let mut decoded = BTreeSet::new();
    let mut steps = Vec::with_capacity(active.len());
    while decoded.len() < active.len() {
        let next = active
            .iter()
            .filter(|m| !decoded.contains(*m))
            .find_map(|&m| {
                neighbours_of_mt(m)
                    .find(|&bs| ready(assoc, &active, &decoded, m, bs))
                    .map(|bs| DecodeStep { m, bs })
            });
        match next {
            Some(step) => {
                decoded.insert(step.m);
                steps.push(step);
            }
            None => return Ok(None),
        }
    }
    Ok(Some(DecodingOrder { steps }))
}

/// Independent re-check of an order against its invariants.
pub fn verify_order(order: &DecodingOrder, assoc: &CellAssociation, active: &[usize]) -> bool {
    let active: BTreeSet<usize> = active.iter().copied().collect();
    if active.iter().any(|&m| m == 0 || m > assoc.k) {
        return false;
    }
    let listed: Vec<usize> = order.steps.iter().map(|s| s.m).collect();
    let listed_set: BTreeSet<usize> = listed.iter().copied().collect();
    if listed.len() != listed_set.len() || listed_set != active {
        return false;
    }
    let mut decoded = BTreeSet::new();
    for s in &order.steps {
        if s.bs == 0 || s.bs > assoc.k || !ready(assoc, &active, &decoded, s.m, s.bs) {
            return false;
        }
        decoded.insert(s.m);
    }
    true
}

/// `C_i ∩ {i-1, i}`: uplink-useless associations removed.
pub fn prune(assoc: &CellAssociation) -> CellAssociation {
    CellAssociation {
        k: assoc.k,
        nc: assoc.nc,
        cells: assoc
            .cells
            .iter()
            .enumerate()
            .map(|(idx, c)| c.iter().copied().filter(|&j| is_link(idx + 1, j)).collect())
            .collect(),
    }
}

pub fn max_uplink_dof(
    assoc: &CellAssociation,
    exact_limit: usize,
    mode: Mode,
) -> Result<UlEvaluation> {
    let exact = assoc.k <= exact_limit;
    if !exact && mode == Mode::Exact {
        return Err(Error::LimitExceeded {
            k: assoc.k,
            limit: exact_limit,
        });
    }
    let feasible = |s: &[usize]| matches!(uplink_feasible(assoc, s), Ok(Some(_)));
    let candidates: Vec<usize> = (1..=assoc.k).filter(|&m| feasible(&[m])).collect();
    let mut active = if exact {
        max_feasible_subset(&[], &candidates, feasible)
    } else {
        greedy_subset(&[], &candidates, feasible)
    };
    active.sort_unstable();
    let order = uplink_feasible(assoc, &active)?.expect("search returns a feasible set");
    Ok(UlEvaluation {
        sum_dof: active.len(),
        active_users: active,
        order,
        exact,
    })
}
