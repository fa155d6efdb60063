//! Experiment harness around the `gravfield` solvers: forward runs on a
//! station grid, convergence studies, wall-clock benchmarks and the
//! summation crossover table, each emitted as CSV and JSON.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod config;
pub mod convergence;
pub mod error;
pub mod forward;
pub mod methods;
pub mod report;

pub use config::{Method, MethodParams, RunConfig, StationSpec};
pub use error::{HarnessError, Result};

/// Sizes the global rayon pool; a second call is a no-op.
pub fn init_threads(threads: usize) -> Result<()> {
    if threads == 0 {
        return Err(HarnessError::Usage("threads must be at least 1".into()));
    }
    if rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().is_err() {
        log::debug!("thread pool already initialised");
    }
    Ok(())
}
