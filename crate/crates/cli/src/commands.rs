use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use serde_json::{json, Value};

use nlgc::compiler::{
    estimate_value, BestLocalProver, BiasedRandomProver, CompiledProtocol, ConstantProver, DecryptingProver,
    HonestQuantumProver, Prover, RejectingProver,
};
use nlgc::games::{
    builtin_game, classical_value_bruteforce, game_from_json, quantum_strategy_value, weight_to_f64, BuiltinGame,
    NonLocalGame, QuantumStrategy, Weight,
};
use nlgc::qhe::{qhe_selftest, QheMode, QheParams};
use nlgc::repetition::{
    chernoff_bound, estimate_fs_value, estimate_parallel, estimate_sequential, fiat_shamir_compile,
    parallel_repeat_protocol, IidProver, RandomOracle,
};
use nlgc::rng::Seed;
use nlgc::soundness::{
    adversary_distinguish, extract_k_provers, extract_local_provers, P1Method, DEFAULT_SOUNDNESS_GUARD,
};
use nlgc::stats::RateEstimate;

use crate::config::{Cli, Command, ModeArg, ProverKind, Scheme};

pub struct Outcome {
    pub results: Value,
    /// `None` when the command has no acceptance check.
    pub check: Option<bool>,
}

struct Setup {
    game: NonLocalGame,
    strategy: Option<QuantumStrategy>,
}

pub fn dispatch(cli: &Cli) -> Result<Outcome> {
    let o = &cli.opts;
    if !(0.0..=1.0).contains(&o.epsilon) {
        bail!("--epsilon must lie in [0, 1], got {}", o.epsilon);
    }
    if let Some(theta) = o.theta {
        if !(0.0..=1.0).contains(&theta) {
            bail!("--theta must lie in [0, 1], got {theta}");
        }
    }
    if o.trials == 0 {
        bail!("--trials must be at least 1");
    }
    let seed = match (cli.command.is_stochastic(), o.seed) {
        (true, None) => bail!("`{}` is stochastic and needs --seed", cli.command.name()),
        (_, s) => Seed::from_u64(s.unwrap_or(0)),
    };
    let params = QheParams { rho: o.rho };
    if let Command::QheSelftest = cli.command {
        let report = qhe_selftest(params, seed.fork("qhe-selftest"))?;
        let pass = report.pass;
        return Ok(Outcome {
            results: serde_json::to_value(report)?,
            check: Some(pass),
        });
    }
    let setup = load_game(cli.game_arg())?;
    match cli.command {
        Command::Value { .. } => value(&setup),
        Command::Run { .. } => run(cli, &setup, params, seed),
        Command::Extract { .. } => extract(cli, &setup, params, seed),
        Command::Distinguish { .. } => distinguish(cli, &setup, params, seed),
        Command::Repeat { .. } => repeat(cli, &setup, params, seed),
        Command::Fs { .. } => fs(cli, &setup, params, seed),
        Command::QheSelftest => unreachable!(),
    }
}

fn load_game(arg: Option<&str>) -> Result<Setup> {
    let arg = arg.ok_or_else(|| anyhow!("no game given; pass a built-in name or a JSON path"))?;
    if let Ok(which) = arg.parse::<BuiltinGame>() {
        let (game, strategy) = builtin_game(which);
        return Ok(Setup {
            game,
            strategy: Some(strategy),
        });
    }
    let text = std::fs::read_to_string(arg).with_context(|| format!("`{arg}` is neither a built-in game nor a readable file"))?;
    let game = game_from_json(&text)?;
    Ok(Setup { game, strategy: None })
}

fn mode(m: ModeArg) -> QheMode {
    match m {
        ModeArg::Ideal => QheMode::Ideal,
        ModeArg::Leaky => QheMode::Leaky,
    }
}

fn protocol(cli: &Cli, setup: &Setup, params: QheParams) -> Result<CompiledProtocol> {
    Ok(CompiledProtocol::new(
        Arc::new(setup.game.clone()),
        cli.opts.lambda,
        mode(cli.opts.mode),
        params,
    )?)
}

fn make_prover(kind: ProverKind, protocol: &CompiledProtocol, setup: &Setup, seed: &Seed) -> Result<Box<dyn Prover>> {
    let game = protocol.game();
    Ok(match kind {
        ProverKind::Honest => {
            let strategy = setup
                .strategy
                .clone()
                .ok_or_else(|| anyhow!("no quantum strategy is known for this game; choose another --prover"))?;
            Box::new(HonestQuantumProver::new(game, strategy, protocol.params())?)
        }
        ProverKind::Classical => Box::new(BestLocalProver::optimal(game)?),
        ProverKind::Decrypting => {
            if protocol.mode() == QheMode::Ideal {
                bail!("the decrypting prover needs --mode leaky");
            }
            Box::new(DecryptingProver::new(protocol.game_arc()))
        }
        ProverKind::Constant => Box::new(ConstantProver::new(game, vec![0; game.k()])),
        ProverKind::Random => Box::new(BiasedRandomProver::with_tape(game, 0.5, seed.fork("tape"))),
        ProverKind::Reject => Box::new(RejectingProver),
    })
}

fn weight_json(w: Weight) -> Value {
    json!({ "exact": w.to_string(), "value": weight_to_f64(w) })
}

fn rate_json(r: &RateEstimate) -> Value {
    json!({
        "successes": r.successes,
        "trials": r.trials,
        "rate": r.rate,
        "sigma": r.sigma(),
        "interval95": [r.interval95.lo, r.interval95.hi],
    })
}

fn quantum_value(setup: &Setup) -> Result<Option<f64>> {
    match &setup.strategy {
        Some(s) => Ok(Some(quantum_strategy_value(&setup.game, s)?)),
        None => Ok(None),
    }
}

fn value(setup: &Setup) -> Result<Outcome> {
    let classical = classical_value_bruteforce(&setup.game)?;
    Ok(Outcome {
        results: json!({
            "game": setup.game.name(),
            "k": setup.game.k(),
            "classical_value": weight_json(classical),
            "quantum_strategy_value": quantum_value(setup)?,
        }),
        check: None,
    })
}

fn run(cli: &Cli, setup: &Setup, params: QheParams, seed: Seed) -> Result<Outcome> {
    let protocol = protocol(cli, setup, params)?;
    let prover = make_prover(cli.opts.prover, &protocol, setup, &seed)?;
    let est = estimate_value(&protocol, prover.as_ref(), cli.opts.trials, seed.fork("run"));
    Ok(Outcome {
        results: json!({
            "prover": prover.name(),
            "estimate": rate_json(&est),
        }),
        check: None,
    })
}

fn extract(cli: &Cli, setup: &Setup, params: QheParams, seed: Seed) -> Result<Outcome> {
    let protocol = protocol(cli, setup, params)?;
    let prover = make_prover(cli.opts.prover, &protocol, setup, &seed)?;
    if !prover.is_deterministic() {
        bail!("extraction needs a deterministic prover; `{}` is not", prover.name());
    }
    let eps = cli.opts.epsilon;
    let interactive = estimate_value(&protocol, prover.as_ref(), cli.opts.trials, seed.fork("interactive"));
    let (extracted, detail) = if protocol.k() == 2 {
        let mut rng = seed.fork("extract").rng();
        let pair = extract_local_provers(&protocol, prover.as_ref(), eps, P1Method::Estimator, &mut rng)?;
        (pair.value, json!({ "samples_per_query": pair.samples }))
    } else {
        let ex = extract_k_provers(&protocol, prover.as_ref(), eps, DEFAULT_SOUNDNESS_GUARD, seed.fork("extract"))?;
        (ex.value, json!({ "samples_per_query": ex.samples }))
    };
    let bound = interactive.rate - eps - 3.0 * interactive.sigma();
    let pass = weight_to_f64(extracted) >= bound;
    Ok(Outcome {
        results: json!({
            "prover": prover.name(),
            "interactive": rate_json(&interactive),
            "extracted_value": weight_json(extracted),
            "lower_bound": bound,
            "extraction": detail,
        }),
        check: Some(pass),
    })
}

fn distinguish(cli: &Cli, setup: &Setup, params: QheParams, seed: Seed) -> Result<Outcome> {
    let protocol = protocol(cli, setup, params)?;
    let prover = make_prover(cli.opts.prover, &protocol, setup, &seed)?;
    let report = adversary_distinguish(&protocol, prover.as_ref(), cli.opts.epsilon, cli.opts.trials, seed.fork("distinguish"))?;
    Ok(Outcome {
        results: json!({
            "prover": prover.name(),
            "report": report,
        }),
        check: None,
    })
}

fn repeat(cli: &Cli, setup: &Setup, params: QheParams, seed: Seed) -> Result<Outcome> {
    let o = &cli.opts;
    let v = weight_to_f64(classical_value_bruteforce(&setup.game)?);
    let v_star = quantum_value(setup)?.ok_or_else(|| anyhow!("repetition needs a game with a known quantum strategy"))?;
    let theta = o.theta.unwrap_or((v + v_star) / 2.0);
    let base = protocol(cli, setup, params)?;
    let honest = make_prover(ProverKind::Honest, &base, setup, &seed)?;
    let classical = make_prover(ProverKind::Classical, &base, setup, &seed)?;
    let (q, c) = match o.scheme {
        Scheme::Sequential => (
            estimate_sequential(&base, honest.as_ref(), o.t, theta, o.trials, seed.fork("honest"))?,
            estimate_sequential(&base, classical.as_ref(), o.t, theta, o.trials, seed.fork("classical"))?,
        ),
        Scheme::Parallel => {
            let par = parallel_repeat_protocol(setup.game.clone(), o.t, theta, o.lambda)?
                .with_mode(mode(o.mode))
                .with_params(params);
            (
                estimate_parallel(&par, &IidProver::new(honest.as_ref(), o.t), o.trials, seed.fork("honest"))?,
                estimate_parallel(&par, &IidProver::new(classical.as_ref(), o.t), o.trials, seed.fork("classical"))?,
            )
        }
    };
    let bound = chernoff_bound(v_star, theta, o.t as u64)?;
    let sigma = q.sigma().max(q.sigma_at(bound));
    let pass = q.rate >= bound - 3.0 * sigma;
    Ok(Outcome {
        results: json!({
            "scheme": format!("{:?}", o.scheme).to_lowercase(),
            "t": o.t,
            "theta": theta,
            "classical_value": v,
            "quantum_strategy_value": v_star,
            "chernoff_bound": bound,
            "honest": rate_json(&q),
            "classical": rate_json(&c),
        }),
        check: Some(pass),
    })
}

fn fs(cli: &Cli, setup: &Setup, params: QheParams, seed: Seed) -> Result<Outcome> {
    let base = protocol(cli, setup, params)?;
    let prover = make_prover(cli.opts.prover, &base, setup, &seed)?;
    let interactive = estimate_value(&base, prover.as_ref(), cli.opts.trials, seed.fork("interactive"));
    let bits = base.game().query_bits().get(1).copied().unwrap_or(0);
    let oracle = Arc::new(RandomOracle::new(seed.fork("oracle"), bits));
    let fsp = fiat_shamir_compile(base, oracle)?;
    let est = estimate_fs_value(&fsp, prover.as_ref(), cli.opts.trials, seed.fork("fs"));
    let gap = (est.rate - interactive.rate).abs();
    Ok(Outcome {
        results: json!({
            "prover": prover.name(),
            "interactive": rate_json(&interactive),
            "fiat_shamir": rate_json(&est),
            "gap": gap,
            "tolerance": 0.015,
        }),
        check: Some(gap <= 0.015),
    })
}
