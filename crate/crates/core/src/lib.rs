//! Scenario-graph test generation and structured log analysis for REST APIs.
//!
//! The crate is `no_std` (it needs `alloc`). Everything that touches the
//! network, processes or files lives behind the [`runner::Transport`] and
//! [`pool::Hooks`] traits, implemented by the `nirikshak` companion crate.
//!
//! Pipeline:
//!
//! 1. [`schema`] parses resource schemas and generates seeded fake instances.
//! 2. [`endpoint`] parses endpoint descriptions into scenario nodes.
//! 3. [`graph`] links nodes whose existence states chain, and enumerates walks.
//! 4. [`runner`] executes every walk against a transport and emits [`record::TestRecord`]s.
//! 5. [`analysis`] turns records into a ratio, a failure hierarchy and DBSCAN clusters.
#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

pub mod analysis;
pub mod assertion;
pub mod endpoint;
pub mod graph;
pub mod pool;
pub mod record;
pub mod runner;
pub mod schema;

pub use analysis::{analyze, AnalysisParams, AnalysisReport};
pub use endpoint::{enumerate_nodes, parse_endpoints, EndpointDescription, HttpMethod, OutcomeCase, ScenarioNode};
pub use graph::{build_graph, enumerate_walks, ExistenceState, ScenarioGraph, Walk};
pub use pool::{Hooks, NoHooks, ResourcePool};
pub use record::{Outcome, TestRecord};
pub use runner::{run, RunConfig, RunOutput, Transport};
pub use schema::{generate_instance, parse_resource_schema, ResourceInstance, ResourceSchema, Template};

/// The random source threaded through every generation step.
pub type SeededRng = rand_chacha::ChaCha8Rng;

/// Builds the run's random source from a user seed.
pub fn seeded_rng(seed: u64) -> SeededRng {
    use rand::SeedableRng;
    SeededRng::seed_from_u64(seed)
}
