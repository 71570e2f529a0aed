//! Seeded instance generation and the batch experiment runner.

mod batch;
mod gen;

pub use batch::{run_batch, BatchConfig, BatchReport, InstanceSummary, InvariantChecks};
pub use gen::{gen, ArrivalOrder, GeneratorConfig, InstanceKind, SEED_ENV};
