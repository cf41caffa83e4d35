//! The linear (Wyner-type) interference network and cell associations.
//!
//! Indices are 1-based. Mobile terminal `i` hears base stations `i-1` and `i`
//! (terminal 1 hears only base station 1); base station `j` hears terminals
//! `j` and `j+1`.

use std::collections::BTreeSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{PrimeField, DEFAULT_PRIME};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Topology {
    k: usize,
}

impl Topology {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        Ok(Topology { k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn connected(&self, i: usize, j: usize) -> Result<bool> {
        connected(i, j, self.k)
    }

    /// Number of nonzero channel coefficients, `2k - 1`.
    pub fn link_count(&self) -> usize {
        2 * self.k - 1
    }
}

fn check(index: usize, k: usize) -> Result<()> {
    if index == 0 || index > k {
        Err(Error::IndexOutOfRange { index, k })
    } else {
        Ok(())
    }
}

/// True iff mobile terminal `i` hears base station `j`.
pub fn connected(i: usize, j: usize, k: usize) -> Result<bool> {
    check(i, k)?;
    check(j, k)?;
    Ok(i == j || i == j + 1)
}

/// Base stations heard by mobile terminal `i`: `{i-1, i} ∩ [1..k]`.
pub fn connected_bs(i: usize, k: usize) -> Result<BTreeSet<usize>> {
    check(i, k)?;
    Ok(neighbours_of_mt(i).collect())
}

/// Mobile terminals heard by base station `j`: `{j, j+1} ∩ [1..k]`.
pub fn heard_mts(j: usize, k: usize) -> Result<BTreeSet<usize>> {
    check(j, k)?;
    Ok((j..=(j + 1).min(k)).collect())
}

// Unchecked variants for inner loops; callers guarantee 1 <= index <= k.
pub(crate) fn neighbours_of_mt(i: usize) -> impl Iterator<Item = usize> {
    (i.saturating_sub(1).max(1))..=i
}

pub(crate) fn is_link(i: usize, j: usize) -> bool {
    i == j || i == j + 1
}

/// A generic channel draw: one nonzero field element per connected pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelRealization {
    k: usize,
    prime: u64,
    seed: u64,
    // coeffs[i-1] = [H_{i,i-1}, H_{i,i}]; H_{1,0} is stored as 0.
    coeffs: Vec<[u64; 2]>,
    field: PrimeField,
}

impl ChannelRealization {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn field(&self) -> &PrimeField {
        &self.field
    }

    /// `H_{i,j}`, zero for unconnected pairs.
    pub fn h(&self, i: usize, j: usize) -> u64 {
        debug_assert!(i >= 1 && i <= self.k && j >= 1 && j <= self.k);
        if j == i {
            self.coeffs[i - 1][1]
        } else if j + 1 == i {
            self.coeffs[i - 1][0]
        } else {
            0
        }
    }

    /// All stored coefficients as `((i, j), H_{i,j})` in row-major order.
    pub fn entries(&self) -> Vec<((usize, usize), u64)> {
        let mut out = Vec::with_capacity(2 * self.k - 1);
        for i in 1..=self.k {
            for j in neighbours_of_mt(i) {
                out.push(((i, j), self.h(i, j)));
            }
        }
        out
    }
}

pub fn draw_channels(k: usize, seed: u64) -> Result<ChannelRealization> {
    draw_channels_mod(k, seed, DEFAULT_PRIME)
}

/// Deterministic in `(k, seed, prime)`.
pub fn draw_channels_mod(k: usize, seed: u64, prime: u64) -> Result<ChannelRealization> {
    Topology::new(k)?;
    let field = PrimeField::new(prime)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (prime << 20) ^ ((k as u64) << 52));
    let mut coeffs = Vec::with_capacity(k);
    for i in 1..=k {
        let prev = if i > 1 { rng.gen_range(1..prime) } else { 0 };
        let own = rng.gen_range(1..prime);
        coeffs.push([prev, own]);
    }
    Ok(ChannelRealization {
        k,
        prime,
        seed,
        coeffs,
        field,
    })
}

/// Per-terminal base-station sets `C_1 … C_k` under the budget `|C_i| <= nc`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellAssociation {
    pub k: usize,
    pub nc: usize,
    pub cells: Vec<BTreeSet<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NonPositive { field: String },
    WrongLength { expected: usize, got: usize },
    OverBudget { i: usize, size: usize, nc: usize },
    OutOfRange { i: usize, bs: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositive { field } => write!(f, "{field} must be at least 1"),
            Violation::WrongLength { expected, got } => {
                write!(f, "expected {expected} cells, got {got}")
            }
            Violation::OverBudget { i, size, nc } => {
                write!(f, "C_{i} has {size} base stations, budget is {nc}")
            }
            Violation::OutOfRange { i, bs } => {
                write!(f, "C_{i} contains out-of-range base station {bs}")
            }
        }
    }
}

impl CellAssociation {
    /// Builds and validates.
    pub fn new(k: usize, nc: usize, cells: Vec<BTreeSet<usize>>) -> Result<Self> {
        let a = CellAssociation { k, nc, cells };
        a.validate().map_err(Error::InvalidAssociation)?;
        Ok(a)
    }

    pub fn from_slices(k: usize, nc: usize, cells: &[&[usize]]) -> Result<Self> {
        Self::new(
            k,
            nc,
            cells.iter().map(|c| c.iter().copied().collect()).collect(),
        )
    }

    pub fn empty(k: usize, nc: usize) -> Self {
        CellAssociation {
            k,
            nc,
            cells: vec![BTreeSet::new(); k],
        }
    }

    /// `C_i` (1-based).
    pub fn cell(&self, i: usize) -> &BTreeSet<usize> {
        &self.cells[i - 1]
    }

    pub fn validate(&self) -> std::result::Result<(), Vec<Violation>> {
        let mut v = Vec::new();
        if self.k == 0 {
            v.push(Violation::NonPositive { field: "k".into() });
        }
        if self.nc == 0 {
            v.push(Violation::NonPositive { field: "nc".into() });
        }
        if self.cells.len() != self.k {
            v.push(Violation::WrongLength {
                expected: self.k,
                got: self.cells.len(),
            });
        }
        for (idx, c) in self.cells.iter().enumerate() {
            let i = idx + 1;
            if c.len() > self.nc {
                v.push(Violation::OverBudget {
                    i,
                    size: c.len(),
                    nc: self.nc,
                });
            }
            for &bs in c {
                if bs == 0 || bs > self.k {
                    v.push(Violation::OutOfRange { i, bs });
                }
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }

    /// Copy with the given base stations removed from every cell.
    pub fn without_bs(&self, silent: &BTreeSet<usize>) -> CellAssociation {
        CellAssociation {
            k: self.k,
            nc: self.nc,
            cells: self
                .cells
                .iter()
                .map(|c| c.difference(silent).copied().collect())
                .collect(),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let a: CellAssociation =
            serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        a.validate().map_err(Error::InvalidAssociation)?;
        Ok(a)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("association serializes")
    }
}

pub fn validate_association(a: &CellAssociation) -> std::result::Result<(), Vec<Violation>> {
    a.validate()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[usize]) -> BTreeSet<usize> {
        v.iter().copied().collect()
    }

    #[test]
    fn connectivity_examples() {
        assert!(connected(1, 1, 5).unwrap());
        assert!(connected(3, 2, 5).unwrap());
        assert!(!connected(1, 2, 5).unwrap());
        assert!(connected(5, 5, 5).unwrap());
        assert_eq!(heard_mts(5, 5).unwrap(), set(&[5]));
        assert!(connected(0, 1, 5).is_err());
        assert!(connected(1, 6, 5).is_err());
    }

    #[test]
    fn neighbourhoods() {
        assert_eq!(connected_bs(1, 7).unwrap(), set(&[1]));
        assert_eq!(connected_bs(4, 7).unwrap(), set(&[3, 4]));
        assert_eq!(connected_bs(7, 7).unwrap(), set(&[6, 7]));
        assert_eq!(heard_mts(1, 3).unwrap(), set(&[1, 2]));
        assert_eq!(heard_mts(3, 3).unwrap(), set(&[3]));
        assert_eq!(heard_mts(2, 5).unwrap(), set(&[2, 3]));
        assert!(connected_bs(8, 7).is_err());
        assert!(heard_mts(0, 7).is_err());
    }

    #[test]
    fn channel_draws() {
        let ch = draw_channels(3, 1).unwrap();
        let pairs: Vec<_> = ch.entries().into_iter().map(|(p, _)| p).collect();
        assert_eq!(pairs, vec![(1, 1), (2, 1), (2, 2), (3, 2), (3, 3)]);
        assert!(ch
            .entries()
            .iter()
            .all(|&(_, h)| h != 0 && h < DEFAULT_PRIME));
        assert_eq!(ch.h(1, 2), 0);
        assert_eq!(ch.h(3, 1), 0);

        let one = draw_channels(1, 7).unwrap();
        assert_eq!(one.entries().len(), 1);

        assert_eq!(draw_channels(3, 1).unwrap(), draw_channels(3, 1).unwrap());
        assert_ne!(draw_channels(3, 1).unwrap(), draw_channels(3, 2).unwrap());
        assert!(draw_channels(0, 1).is_err());
        assert!(draw_channels_mod(3, 1, 12).is_err());
    }

    #[test]
    fn validation() {
        let ok = CellAssociation::from_slices(5, 2, &[&[1], &[1, 2], &[2, 3], &[3, 4], &[4, 5]]);
        assert!(ok.is_ok());

        let over = CellAssociation {
            k: 5,
            nc: 1,
            cells: vec![set(&[1, 2]), set(&[2]), set(&[3]), set(&[4]), set(&[5])],
        };
        assert_eq!(
            over.validate().unwrap_err(),
            vec![Violation::OverBudget {
                i: 1,
                size: 2,
                nc: 1
            }]
        );

        let oob = CellAssociation {
            k: 3,
            nc: 2,
            cells: vec![set(&[1]), set(&[2]), set(&[4])],
        };
        assert_eq!(
            oob.validate().unwrap_err(),
            vec![Violation::OutOfRange { i: 3, bs: 4 }]
        );

        let short = CellAssociation {
            k: 3,
            nc: 2,
            cells: vec![set(&[1])],
        };
        assert!(matches!(
            short.validate().unwrap_err()[0],
            Violation::WrongLength {
                expected: 3,
                got: 1
            }
        ));
    }

    #[test]
    fn json_interchange() {
        let a = CellAssociation::from_json(r#"{"k":3,"nc":2,"cells":[[1],[1,2],[2,3]]}"#).unwrap();
        assert_eq!(a.cell(3), &set(&[2, 3]));
        assert_eq!(CellAssociation::from_json(&a.to_json()).unwrap(), a);
        assert!(CellAssociation::from_json(r#"{"k":3,"nc":1,"cells":[[1],[1,2],[2,3]]}"#).is_err());
        assert!(CellAssociation::from_json(r#"{"k":1,"nc":1,"cells":[[1]],"x":1}"#).is_err());
        assert!(CellAssociation::from_json("not json").is_err());
    }

    #[test]
    fn silencing_removes_from_every_cell() {
        let a = CellAssociation::from_slices(3, 2, &[&[1], &[1, 2], &[2, 3]]).unwrap();
        let s = a.without_bs(&set(&[2]));
        assert_eq!(s.cells, vec![set(&[1]), set(&[1]), set(&[3])]);
    }
}
