use crate::compiler::{estimate_value, BiasedRandomProver, CompiledProtocol};
use crate::rng::Seed;
use crate::stats::RateEstimate;

/// Fixes the coins of a biased random prover to the best of `candidates`
/// tapes by empirical value over `trials` runs each.
pub fn fix_coins(
    protocol: &CompiledProtocol,
    bias: f64,
    candidates: u64,
    trials: u64,
    seed: Seed,
) -> (BiasedRandomProver, RateEstimate) {
    let mut best: Option<(BiasedRandomProver, RateEstimate)> = None;
    for c in 0..candidates.max(1) {
        let p = BiasedRandomProver::with_tape(protocol.game(), bias, seed.fork_index("tape", c));
        let r = estimate_value(protocol, &p, trials, seed.fork_index("tape-eval", c));
        if best.as_ref().map_or(true, |(_, b)| r.successes > b.successes) {
            best = Some((p, r));
        }
    }
    best.expect("at least one candidate")
}
