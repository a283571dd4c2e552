//! Batch execution of independent scenarios.
//!
//! Runs are pure functions of (scenario, seed), so a batch parallelizes
//! trivially across scenarios. With the `parallel` feature (default) the
//! batch fans out over a rayon pool; without it the same API runs the
//! list sequentially. Output order always matches input order.

use crate::scenario::Scenario;
use crate::sim::{run_scenario, RunOutput};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub fn run_batch_sequential(scenarios: &[Scenario]) -> Vec<RunOutput> {
    scenarios.iter().map(run_scenario).collect()
}

#[cfg(feature = "parallel")]
pub fn run_batch_parallel(scenarios: &[Scenario]) -> Vec<RunOutput> {
    scenarios.par_iter().map(run_scenario).collect()
}

/// Runs every scenario, in parallel when the crate is built with the
/// `parallel` feature.
pub fn run_batch(scenarios: &[Scenario]) -> Vec<RunOutput> {
    #[cfg(feature = "parallel")]
    {
        run_batch_parallel(scenarios)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_batch_sequential(scenarios)
    }
}

/// Like [`run_batch`], with an explicit worker count. `None` keeps the
/// default pool; without the `parallel` feature the count is ignored.
pub fn run_batch_with_jobs(scenarios: &[Scenario], jobs: Option<usize>) -> Vec<RunOutput> {
    #[cfg(feature = "parallel")]
    {
        match jobs {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .expect("building a local thread pool")
                .install(|| run_batch_parallel(scenarios)),
            None => run_batch_parallel(scenarios),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
        run_batch_sequential(scenarios)
    }
}
