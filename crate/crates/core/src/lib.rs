//! Execution-based evaluation toolkit for competitive-programming code
//! generation.
//!
//! The crate is organized around the lifecycle of judging machine-generated
//! contest solutions:
//!
//! - [`corpus`]: problem/solution data model, dataset cleaning and
//!   deduplication, temporal-split validation, copying analysis.
//! - [`runner`]: compiling and executing candidate programs in isolated
//!   processes under time/memory limits.
//! - [`judge`]: permissive output comparison and per-solution verdicts.
//! - [`metrics`]: solve-rate estimators (pass@k, n@k) with exact,
//!   Monte Carlo, and bootstrap machinery.
//! - [`selector`]: filter-then-cluster submission selection.
//! - [`testgen`]: mutation-based test generation verified by
//!   reference-solution consensus.
//! - [`contest`]: timed-contest simulation, scoring, ranking, and rating
//!   estimation.

pub mod contest;
pub mod corpus;
pub mod judge;
pub mod metrics;
pub mod runner;
pub mod selector;
pub mod testgen;

mod seeded;

pub use seeded::stream_rng;
