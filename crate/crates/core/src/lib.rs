//! Online buyback for weighted k-matroid intersection with cancellation penalties.
//!
//! * [`matroid`]: descriptors and independence / rank / circuit oracles.
//! * [`engine`]: the online algorithm, its greedy reformulation and the
//!   single-element baseline for downward-closed systems.
//! * [`offline`]: brute-force optimum and offline greedy.
//! * [`audit`]: runtime verifier for the charging argument behind the
//!   final-weight bound.
//! * [`adversary`]: lower-bound drivers and the z-recurrence analysis.
//! * [`harness`]: seeded instance generation and batch experiments.

pub mod adversary;
pub mod audit;
pub mod engine;
pub mod error;
pub mod harness;
pub mod instance;
pub mod matroid;
pub mod offline;
pub mod weight;

pub use engine::{run_stream, AlgorithmState, Decision, OnlineAlgorithm, Params, RunReport, Variant};
pub use error::{BuybackError, Result};
pub use instance::{Instance, Threshold};
pub use matroid::{axiom_check, AxiomVerdict, Element, MatroidDescriptor, Membership};
pub use offline::{brute_opt, greedy_offline, OptResult};
pub use weight::{ElementId, Rational, Weight};
