//! Cell associations for K-user linear interference networks under a
//! per-terminal association budget.
//!
//! The crate builds associations, decides one-shot downlink (zero-forcing)
//! and uplink (decode-and-pass) achievability with checkable witnesses,
//! issues converse certificates, and searches the association space.

pub mod bounds;
pub mod downlink;
pub mod error;
pub mod field;
pub mod model;
pub mod rational;
pub mod schemes;
pub mod search;
pub mod subset;
pub mod uplink;

pub use error::{Error, Result};
pub use model::CellAssociation;
pub use rational::Rational;
pub use subset::Mode;
