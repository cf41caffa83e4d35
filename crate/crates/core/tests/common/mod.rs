//! Independent reference checks shared by the integration suites.
#![allow(dead_code)]

use std::collections::BTreeSet;

use cellassoc::downlink::{max_downlink_dof, verify_witness, ZfOracle, DL_EXACT_LIMIT};
use cellassoc::model::{draw_channels_mod, ChannelRealization};
use cellassoc::search::enumerate_associations;
use cellassoc::uplink::{max_uplink_dof, prune, uplink_feasible, verify_order, UL_EXACT_LIMIT};
use cellassoc::{CellAssociation, Mode};
use rand::Rng;

/// Association from per-user bitmasks over the window `[i-2, i+2]`; each
/// cell keeps at most `nc` of the selected stations.
pub fn assoc_from_masks(k: usize, nc: usize, masks: &[u8]) -> CellAssociation {
    let cells = (1..=k)
        .map(|i| {
            let lo = i.saturating_sub(2).max(1);
            let hi = (i + 2).min(k);
            (lo..=hi)
                .filter(|&j| masks[i - 1] >> (j + 2 - i) & 1 == 1)
                .take(nc)
                .collect()
        })
        .collect();
    CellAssociation::new(k, nc, cells).expect("window masks respect the budget")
}

pub fn random_assoc<R: Rng>(rng: &mut R, k: usize, nc: usize) -> CellAssociation {
    let masks: Vec<u8> = (0..k).map(|_| rng.gen()).collect();
    assoc_from_masks(k, nc, &masks)
}

pub fn subset_from_mask(k: usize, mask: u32) -> Vec<usize> {
    (1..=k).filter(|&i| mask >> (i - 1) & 1 == 1).collect()
}

/// Zero-forcing by enumerating every precoder over the field.
pub fn brute_dl_feasible(
    assoc: &CellAssociation,
    active: &[usize],
    ch: &ChannelRealization,
) -> bool {
    let p = ch.prime();
    active.iter().all(|&m| {
        let tx: Vec<usize> = assoc.cell(m).iter().copied().collect();
        let total = p.pow(tx.len() as u32);
        (0..total).any(|code| {
            let mut v = Vec::with_capacity(tx.len());
            let mut c = code;
            for _ in &tx {
                v.push(c % p);
                c /= p;
            }
            let gain = |r: usize| -> u64 {
                tx.iter()
                    .zip(&v)
                    .map(|(&j, &x)| ch.h(r, j) * x % p)
                    .sum::<u64>()
                    % p
            };
            gain(m) != 0 && active.iter().all(|&r| r == m || gain(r) == 0)
        })
    })
}

fn hears(bs: usize, mt: usize) -> bool {
    mt == bs || mt == bs + 1
}

fn order_search(
    assoc: &CellAssociation,
    active: &BTreeSet<usize>,
    decoded: &mut Vec<usize>,
) -> bool {
    if decoded.len() == active.len() {
        return true;
    }
    for &m in active {
        if decoded.contains(&m) {
            continue;
        }
        for b in 1..=assoc.k {
            let ok = assoc.cell(m).contains(&b)
                && hears(b, m)
                && active
                    .iter()
                    .filter(|&&x| x != m && hears(b, x))
                    .all(|x| decoded.contains(x) && assoc.cell(*x).contains(&b));
            if ok {
                decoded.push(m);
                if order_search(assoc, active, decoded) {
                    return true;
                }
                decoded.pop();
            }
        }
    }
    false
}

/// Uplink feasibility by exploring every decoding order.
pub fn brute_ul_feasible(assoc: &CellAssociation, active: &[usize]) -> bool {
    let active: BTreeSet<usize> = active.iter().copied().collect();
    order_search(assoc, &active, &mut Vec::new())
}

#[derive(Debug, Default)]
pub struct Tally {
    pub checked: usize,
    pub failures: Vec<String>,
}

impl Tally {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failures.push(what());
        }
    }
}

/// Rank oracle against precoder enumeration, fixpoint against order
/// enumeration, for every window-1 association with `k <= 4`, `nc <= 2`.
pub fn brute_force_sweep(prime: u64, seeds: &[u64]) -> (Tally, Tally) {
    let mut dl = Tally::default();
    let mut ul = Tally::default();
    for k in 1..=4 {
        let channels: Vec<ChannelRealization> = seeds
            .iter()
            .map(|&s| draw_channels_mod(k, s, prime).unwrap())
            .collect();
        for nc in 1..=2 {
            for assoc in enumerate_associations(k, nc, 1).unwrap() {
                for mask in 0u32..1 << k {
                    let active = subset_from_mask(k, mask);
                    let got = uplink_feasible(&assoc, &active).unwrap().is_some();
                    ul.check(got == brute_ul_feasible(&assoc, &active), || {
                        format!("uplink {:?} active {active:?}", assoc.cells)
                    });
                    if active.iter().any(|&m| assoc.cell(m).is_empty()) {
                        continue;
                    }
                    for ch in &channels {
                        let oracle = ZfOracle::from_channels(vec![ch.clone()]).unwrap();
                        let got = oracle.decide(&assoc, &active).unwrap().feasible;
                        dl.check(got == brute_dl_feasible(&assoc, &active, ch), || {
                            format!(
                                "downlink {:?} active {active:?} seed {}",
                                assoc.cells,
                                ch.seed()
                            )
                        });
                    }
                }
            }
        }
    }
    (dl, ul)
}

fn active_candidates(assoc: &CellAssociation, mask: u32) -> Vec<usize> {
    subset_from_mask(assoc.k, mask)
        .into_iter()
        .filter(|&m| !assoc.cell(m).is_empty())
        .collect()
}

fn without(v: &[usize], x: usize) -> Vec<usize> {
    v.iter().copied().filter(|&y| y != x).collect()
}

/// Every one-element removal from a feasible downlink set stays feasible.
pub fn dl_downward_closed(
    assoc: &CellAssociation,
    mask: u32,
    oracle: &ZfOracle,
) -> Result<(), String> {
    let active = active_candidates(assoc, mask);
    let d = oracle.decide(assoc, &active).map_err(|e| e.to_string())?;
    if d.warning.is_some() {
        return Err(format!("seed disagreement on {active:?}"));
    }
    if !d.feasible {
        return Ok(());
    }
    for &x in &active {
        let sub = without(&active, x);
        if !oracle
            .decide(assoc, &sub)
            .map_err(|e| e.to_string())?
            .feasible
        {
            return Err(format!(
                "{:?}: {active:?} feasible but {sub:?} not",
                assoc.cells
            ));
        }
    }
    Ok(())
}

pub fn ul_downward_closed(assoc: &CellAssociation, mask: u32) -> Result<(), String> {
    let active = subset_from_mask(assoc.k, mask);
    if uplink_feasible(assoc, &active).unwrap().is_none() {
        return Ok(());
    }
    for &x in &active {
        let sub = without(&active, x);
        if uplink_feasible(assoc, &sub).unwrap().is_none() {
            return Err(format!(
                "{:?}: {active:?} decodable but {sub:?} not",
                assoc.cells
            ));
        }
    }
    Ok(())
}

/// Adding a transmitter to some cell never lowers the downlink maximum.
pub fn dl_association_monotone(
    assoc: &CellAssociation,
    user: usize,
    bs: usize,
    oracle: &ZfOracle,
) -> Result<(), String> {
    if assoc.cell(user).len() >= assoc.nc || assoc.cell(user).contains(&bs) {
        return Ok(());
    }
    let mut bigger = assoc.clone();
    bigger.cells[user - 1].insert(bs);
    let before =
        max_downlink_dof(assoc, oracle, DL_EXACT_LIMIT, Mode::Exact).map_err(|e| e.to_string())?;
    let after = max_downlink_dof(&bigger, oracle, DL_EXACT_LIMIT, Mode::Exact)
        .map_err(|e| e.to_string())?;
    if !before.warnings.is_empty() || !after.warnings.is_empty() {
        return Err("seed disagreement".into());
    }
    if after.sum_dof < before.sum_dof {
        return Err(format!(
            "{:?}: adding BS{bs} to C{user} lowered downlink {} -> {}",
            assoc.cells, before.sum_dof, after.sum_dof
        ));
    }
    Ok(())
}

pub fn prune_invariant(assoc: &CellAssociation, mask: u32) -> Result<(), String> {
    let active = subset_from_mask(assoc.k, mask);
    let pruned = prune(assoc);
    let a = uplink_feasible(assoc, &active).unwrap().is_some();
    let b = uplink_feasible(&pruned, &active).unwrap().is_some();
    if a != b {
        return Err(format!(
            "{:?}: prune changed feasibility of {active:?}",
            assoc.cells
        ));
    }
    let x = max_uplink_dof(assoc, UL_EXACT_LIMIT, Mode::Exact).unwrap();
    let y = max_uplink_dof(&pruned, UL_EXACT_LIMIT, Mode::Exact).unwrap();
    if x.sum_dof != y.sum_dof {
        return Err(format!("{:?}: prune changed uplink maximum", assoc.cells));
    }
    Ok(())
}

/// Solver output passes the independent witness and order checks. Returns
/// the number of genericity warnings seen.
pub fn reverify(assoc: &CellAssociation, oracle: &ZfOracle) -> Result<usize, String> {
    let dl =
        max_downlink_dof(assoc, oracle, DL_EXACT_LIMIT, Mode::Exact).map_err(|e| e.to_string())?;
    let ch = oracle
        .channel_for_seed(dl.witness.seed)
        .ok_or("unknown witness seed")?;
    if !verify_witness(&dl.witness, assoc, &dl.active_users, ch) {
        return Err(format!("{:?}: witness rejected", assoc.cells));
    }
    let ul = max_uplink_dof(assoc, UL_EXACT_LIMIT, Mode::Exact).map_err(|e| e.to_string())?;
    if !verify_order(&ul.order, assoc, &ul.active_users) {
        return Err(format!("{:?}: order rejected", assoc.cells));
    }
    Ok(dl.warnings.len())
}
