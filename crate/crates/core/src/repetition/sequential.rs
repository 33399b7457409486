use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compiler::{run_protocol, CompiledProtocol, Prover};
use crate::rng::{Seed, SimRng};
use crate::stats::RateEstimate;

use super::threshold::threshold_count;
use super::{RepetitionError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequentialOutcome {
    pub t: usize,
    pub accepted: usize,
    pub accept: bool,
}

fn check(t: usize, theta: f64) -> Result<()> {
    if t == 0 || !(theta > 0.0 && theta <= 1.0) {
        return Err(RepetitionError::Parameter(format!("t = {t}, theta = {theta}")));
    }
    Ok(())
}

/// Runs `t` executions in sequence, resetting the prover between them.
pub fn sequential_repeat_run(
    protocol: &CompiledProtocol,
    prover: &mut dyn Prover,
    t: usize,
    theta: f64,
    rng: &mut SimRng,
) -> Result<SequentialOutcome> {
    check(t, theta)?;
    let accepted = (0..t)
        .filter(|_| {
            prover.reset();
            run_protocol(protocol, prover, rng).accept
        })
        .count();
    Ok(SequentialOutcome {
        t,
        accepted,
        accept: accepted >= threshold_count(t, theta),
    })
}

/// Rate at which the sequential threshold verifier accepts.
pub fn estimate_sequential(
    protocol: &CompiledProtocol,
    prover: &dyn Prover,
    t: usize,
    theta: f64,
    trials: u64,
    seed: Seed,
) -> Result<RateEstimate> {
    check(t, theta)?;
    if trials == 0 {
        return Err(RepetitionError::Parameter("trials must be at least 1".into()));
    }
    let wins = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut p = prover.box_clone();
            p.reseed(seed.fork_index("prover", i));
            let mut rng = seed.fork_index("verifier", i).rng();
            sequential_repeat_run(protocol, p.as_mut(), t, theta, &mut rng).map(|o| o.accept as u64)
        })
        .sum::<Result<u64>>()?;
    Ok(RateEstimate::new(wins, trials))
}
