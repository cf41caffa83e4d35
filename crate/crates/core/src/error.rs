use thiserror::Error;

use crate::model::Violation;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("index {index} out of range 1..={k}")]
    IndexOutOfRange { index: usize, k: usize },

    #[error("invalid association: {}", format_violations(.0))]
    InvalidAssociation(Vec<Violation>),

    #[error("active message {m} has no associated transmitter")]
    EmptyAssociation { m: usize },

    #[error("network size {k} exceeds the exact-search limit {limit}")]
    LimitExceeded { k: usize, limit: usize },

    #[error("candidate count {count} exceeds the cap {cap}")]
    BudgetExceeded { count: u128, cap: u128 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("modulus {0} is not a prime below 2^32")]
    NotPrime(u64),

    #[error("parse error: {0}")]
    Parse(String),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
