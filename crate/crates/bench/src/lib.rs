//! Benchmark front end for the low-rank oblique-projection integrators:
//! experiment configuration, reference-solution management, convergence
//! sweeps, selector studies, polytope dumps, and CSV/JSON emission.

pub mod config;
pub mod convergence;
pub mod csvio;
pub mod error;
pub mod polytope_cmd;
pub mod reference;
pub mod runner;
pub mod selectors_cmd;

pub use config::{parse_config, MethodId, ProblemId, ProjectionId, RefPolicy, RunConfig};
pub use error::BenchError;
pub use runner::{run, RunOutcome};
