//! Subcommand implementations. Every command resolves its parameters from
//! flags (overriding the optional `--config` file), runs exactly one
//! evaluation, and emits a report that embeds the resolved configuration.

use crate::config::{
    parse_float_list, parse_grid, parse_observable, parse_shape, parse_state, CliError, CliResult,
    FileConfig, NoiseSpec,
};
use crate::report;
use clap::{Parser, Subcommand, ValueEnum};
use qem_core::bounds::{
    layered_bound_report, optimize_bound_over_pairs, sample_count_bound, AccuracySpec,
    BoundFlag, BoundReport, PairSearch, ProtocolShape, Relaxation,
};
use qem_core::extrapolation::{
    exact_bias, richardson_coefficients, DephasingPowerFamily, NoiseFamily,
};
use qem_core::pec::{pauli_conjugation_basis, pec_spec, quasiprob_decompose};
use qem_core::protocol::{hoeffding_samples, run_mitigation, MitigationProtocolSpec};
use qem_core::state::{expectation, DensityMatrix, Observable};
use qem_core::vd::{vd_spec, SpectralModel};
use qem_core::verify;
use serde::Serialize;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "qem", version, about = "Error-mitigation bounds and protocol simulations")]
pub struct Cli {
    /// JSON file with defaults for any flag; explicit flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the report here (atomically); stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Report format. Single evaluations emit JSON; sweeps emit CSV.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Master seed; falls back to QEM_SEED, then 0.
    #[arg(long, global = true, env = "QEM_SEED")]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spread lower bound for a noise model and protocol shape.
    Bound(BoundArgs),
    /// Closed-form layered-circuit bound.
    Layered(LayeredArgs),
    /// Probabilistic error cancellation run.
    Pec(PecArgs),
    /// Richardson extrapolation run.
    Extrapolate(ExtrapolateArgs),
    /// Virtual distillation run.
    Vd(VdArgs),
    /// Sub-fidelity estimation from destructive measurements.
    Subfid(SubfidArgs),
    /// Sweep one parameter of the bound or layered commands into a CSV table.
    Sweep(SweepArgs),
    /// Run the invariant battery.
    Verify,
}

#[derive(Debug, clap::Args)]
pub struct BoundArgs {
    /// Noise model, e.g. dephasing:0.1 or depolarizing:0.05.
    #[arg(long)]
    pub noise: Option<String>,
    /// Protocol shape Q,K,n.
    #[arg(long)]
    pub shape: Option<String>,
    /// Declared maximum bias b_max.
    #[arg(long)]
    pub bias: Option<f64>,
    /// Denominator: exact, trace, fidelity or subfid.
    #[arg(long)]
    pub relax: Option<String>,
    /// Witness search: preset or random:<samples>.
    #[arg(long)]
    pub search: Option<String>,
    /// Accuracy delta for the round-count corollary.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Failure probability for the round-count corollary.
    #[arg(long)]
    pub fail: Option<f64>,
}

#[derive(Debug, clap::Args)]
pub struct LayeredArgs {
    /// Qubit count n.
    #[arg(long = "n")]
    pub qubits: Option<usize>,
    /// Layer count L.
    #[arg(long = "L")]
    pub layers: Option<usize>,
    /// Per-experiment noise rates, e.g. 0.1 or 0.1,0.2.
    #[arg(long)]
    pub eps: Option<String>,
    /// Protocol shape Q,K.
    #[arg(long)]
    pub shape: Option<String>,
    /// Declared maximum bias b_max.
    #[arg(long)]
    pub bias: Option<f64>,
}

#[derive(Debug, clap::Args)]
pub struct PecArgs {
    #[arg(long)]
    pub noise: Option<String>,
    /// Observable, e.g. X/2.
    #[arg(long)]
    pub obs: Option<String>,
    /// Ideal output state, e.g. plus.
    #[arg(long)]
    pub state: Option<String>,
    /// Monte Carlo rounds.
    #[arg(long)]
    pub rounds: Option<u64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub fail: Option<f64>,
}

#[derive(Debug, clap::Args)]
pub struct ExtrapolateArgs {
    /// Extrapolation order R (boost factors default to 1..R+1).
    #[arg(long)]
    pub order: Option<usize>,
    /// Explicit boost factors, e.g. 1,2,3.
    #[arg(long)]
    pub boosts: Option<String>,
    /// Noise family: dephasing-power:<layers> or depolarizing.
    #[arg(long)]
    pub family: Option<String>,
    /// Base noise strength.
    #[arg(long)]
    pub strength: Option<f64>,
    #[arg(long)]
    pub obs: Option<String>,
    #[arg(long)]
    pub state: Option<String>,
    #[arg(long)]
    pub rounds: Option<u64>,
}

#[derive(Debug, clap::Args)]
pub struct VdArgs {
    /// Dominant eigenvalue of the noisy state (pre-knowledge).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Remaining eigenvalues, e.g. 0.2 or 0.15,0.05.
    #[arg(long)]
    pub rest: Option<String>,
    /// Copy count Q.
    #[arg(long)]
    pub copies: Option<usize>,
    #[arg(long)]
    pub obs: Option<String>,
    #[arg(long)]
    pub rounds: Option<u64>,
    /// Random observables to try when reporting the best-found spread.
    #[arg(long)]
    pub search_samples: Option<usize>,
}

#[derive(Debug, clap::Args)]
pub struct SubfidArgs {
    #[arg(long)]
    pub noise: Option<String>,
    /// Ideal pair, e.g. plus,minus.
    #[arg(long)]
    pub pair: Option<String>,
    /// Qubits per state.
    #[arg(long = "n")]
    pub qubits: Option<usize>,
    /// Shots per estimated quantity.
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub bias: Option<f64>,
}

#[derive(Debug, clap::Args)]
pub struct SweepArgs {
    /// Which command to sweep: bound or layered.
    #[arg(long)]
    pub target: Option<String>,
    /// Swept parameter: L or eps.
    #[arg(long)]
    pub param: Option<String>,
    /// Grid: lo:hi integer range or a comma list.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub noise: Option<String>,
    #[arg(long)]
    pub shape: Option<String>,
    #[arg(long)]
    pub bias: Option<f64>,
    #[arg(long = "n")]
    pub qubits: Option<usize>,
    #[arg(long = "L")]
    pub layers: Option<usize>,
    #[arg(long)]
    pub eps: Option<String>,
}

pub struct Outcome {
    pub numerical_flag: bool,
}

fn require<T>(value: Option<T>, flag: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::usage(format!("missing required --{flag}")))
}

fn json_format(format: Option<Format>) -> CliResult<()> {
    match format {
        None | Some(Format::Json) => Ok(()),
        Some(Format::Csv) => Err(CliError::usage(
            "csv output is only available for sweep".to_string(),
        )),
    }
}

pub fn run(cli: Cli) -> CliResult<Outcome> {
    let file = FileConfig::load(cli.config.as_ref())?;
    let seed = cli.seed.or(file.seed).unwrap_or(0);
    let out = cli.out.as_ref().map(|p| p.to_owned());
    match cli.command {
        Command::Bound(args) => {
            json_format(cli.format)?;
            cmd_bound(args, &file, seed, out)
        }
        Command::Layered(args) => {
            json_format(cli.format)?;
            cmd_layered(args, &file, out)
        }
        Command::Pec(args) => {
            json_format(cli.format)?;
            cmd_pec(args, &file, seed, out)
        }
        Command::Extrapolate(args) => {
            json_format(cli.format)?;
            cmd_extrapolate(args, &file, seed, out)
        }
        Command::Vd(args) => {
            json_format(cli.format)?;
            cmd_vd(args, &file, seed, out)
        }
        Command::Subfid(args) => {
            json_format(cli.format)?;
            cmd_subfid(args, &file, seed, out)
        }
        Command::Sweep(args) => cmd_sweep(args, &file, seed, out, cli.format),
        Command::Verify => cmd_verify(seed, out),
    }
}

fn parse_relaxation(raw: &str, experiments: usize) -> CliResult<Relaxation> {
    Ok(match raw {
        "exact" => Relaxation::ExactSingleExperiment,
        "trace" => Relaxation::TraceProduct,
        "fidelity" => Relaxation::Fidelity,
        "subfid" => Relaxation::SubFidelity,
        "auto" => {
            if experiments == 1 {
                Relaxation::ExactSingleExperiment
            } else {
                Relaxation::TraceProduct
            }
        }
        other => {
            return Err(CliError::usage(format!(
                "unknown relaxation '{other}' (exact, trace, fidelity, subfid)"
            )))
        }
    })
}

fn parse_search(raw: &str, seed: u64) -> CliResult<PairSearch> {
    if raw == "preset" {
        return Ok(PairSearch::Presets);
    }
    if let Some(samples) = raw.strip_prefix("random:") {
        let samples: usize = samples
            .parse()
            .map_err(|_| CliError::usage(format!("bad sample count in '{raw}'")))?;
        return Ok(PairSearch::Random { samples, seed });
    }
    Err(CliError::usage(format!(
        "unknown search '{raw}' (preset, random:<samples>)"
    )))
}

fn flag_is_numerical(report: &BoundReport) -> bool {
    matches!(report.flag, BoundFlag::Infinite)
}

#[derive(Serialize)]
struct BoundCommandReport {
    command: &'static str,
    config: serde_json::Value,
    report: BoundReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    min_rounds: Option<u64>,
}

fn cmd_bound(
    args: BoundArgs,
    file: &FileConfig,
    seed: u64,
    out: Option<PathBuf>,
) -> CliResult<Outcome> {
    let noise_raw = require(args.noise.or_else(|| file.noise.clone()), "noise")?;
    let shape_raw = require(args.shape.or_else(|| file.shape.clone()), "shape")?;
    let bias = args.bias.or(file.bias).unwrap_or(0.0);
    let relax_raw = args
        .relax
        .or_else(|| file.relax.clone())
        .unwrap_or_else(|| "auto".to_string());
    let search_raw = args
        .search
        .or_else(|| file.search.clone())
        .unwrap_or_else(|| "preset".to_string());

    let (q, k, n) = parse_shape(&shape_raw, true)?;
    let n = n.expect("three-entry shape");
    let noise = NoiseSpec::parse(&noise_raw)?;
    let channel = noise.channel(n)?;
    let shape = ProtocolShape::uniform(q, k, n, bias, channel)?;
    let relaxation = parse_relaxation(&relax_raw, k)?;
    let search = parse_search(&search_raw, seed)?;
    let report = optimize_bound_over_pairs(&shape, relaxation, search)?;

    let min_rounds = match (args.delta.or(file.delta), args.fail.or(file.fail)) {
        (Some(delta), Some(fail)) => {
            let acc = AccuracySpec::new(delta, fail)?;
            Some(sample_count_bound(&report, &acc)?)
        }
        _ => None,
    };

    let numerical = flag_is_numerical(&report);
    let payload = BoundCommandReport {
        command: "bound",
        config: serde_json::json!({
            "noise": noise.raw,
            "shape": {"Q": q, "K": k, "n": n, "b_max": bias},
            "relax": relaxation.name(),
            "search": search_raw,
            "seed": seed,
        }),
        report,
        min_rounds,
    };
    report::write_output(out.as_ref(), &report::to_json_string(&payload)?)?;
    Ok(Outcome {
        numerical_flag: numerical,
    })
}

#[derive(Serialize)]
struct LayeredCommandReport {
    command: &'static str,
    config: serde_json::Value,
    report: BoundReport,
}

fn cmd_layered(args: LayeredArgs, file: &FileConfig, out: Option<PathBuf>) -> CliResult<Outcome> {
    let qubits = require(args.qubits.or(file.n), "n")?;
    let layers = require(args.layers.or(file.layers), "L")?;
    let eps_raw = require(args.eps.or_else(|| file.eps.clone()), "eps")?;
    let shape_raw = require(args.shape.or_else(|| file.shape.clone()), "shape")?;
    let bias = args.bias.or(file.bias).unwrap_or(0.0);
    let (q, k, _) = parse_shape(&shape_raw, false)?;
    let mut eps = parse_float_list(&eps_raw)?;
    if eps.len() == 1 && k > 1 {
        eps = vec![eps[0]; k];
    }
    let report = layered_bound_report(qubits, q, k, bias, &eps, layers)?;
    let numerical = flag_is_numerical(&report);
    let payload = LayeredCommandReport {
        command: "layered",
        config: serde_json::json!({
            "n": qubits,
            "L": layers,
            "eps": eps,
            "shape": {"Q": q, "K": k, "b_max": bias},
        }),
        report,
    };
    report::write_output(out.as_ref(), &report::to_json_string(&payload)?)?;
    Ok(Outcome {
        numerical_flag: numerical,
    })
}

#[derive(Serialize)]
struct ProtocolRunReport {
    protocol: &'static str,
    config: serde_json::Value,
    shape: qem_core::bounds::ShapeSummary,
    rounds: u64,
    seed: u64,
    mean: f64,
    truth: f64,
    exact_estimator_mean: f64,
    spread_declared: f64,
    spread_observed: f64,
    std_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    min_rounds_required: Option<u64>,
    bound_report: BoundReport,
    #[serde(flatten)]
    extra: serde_json::Value,
}

fn best_preset_bound(spec: &MitigationProtocolSpec) -> CliResult<BoundReport> {
    let relaxation = if spec.shape.experiments() == 1 {
        Relaxation::ExactSingleExperiment
    } else {
        Relaxation::TraceProduct
    };
    Ok(optimize_bound_over_pairs(
        &spec.shape,
        relaxation,
        PairSearch::Presets,
    )?)
}

fn run_and_report(
    protocol: &'static str,
    spec: &MitigationProtocolSpec,
    psi: &DensityMatrix,
    a: &Observable,
    rounds: u64,
    seed: u64,
    config: serde_json::Value,
    extra: serde_json::Value,
    min_rounds_required: Option<u64>,
    out: Option<PathBuf>,
) -> CliResult<Outcome> {
    let stats = run_mitigation(spec, psi, rounds, seed)?;
    let truth = expectation(a, psi)?;
    let exact_mean = spec.exact_estimator_mean(psi)?;
    let bound_report = best_preset_bound(spec)?;
    let numerical = flag_is_numerical(&bound_report);
    let payload = ProtocolRunReport {
        protocol,
        config,
        shape: qem_core::bounds::ShapeSummary {
            inputs_per_experiment: spec.shape.inputs_per_experiment(),
            experiments: spec.shape.experiments(),
            n: spec.shape.qubits(),
            b_max: spec.shape.max_bias(),
        },
        rounds,
        seed,
        mean: stats.mean,
        truth,
        exact_estimator_mean: exact_mean,
        spread_declared: spec.declared_spread(),
        spread_observed: stats.observed_spread(),
        std_error: stats.std_error,
        min_rounds_required,
        bound_report,
        extra,
    };
    report::write_output(out.as_ref(), &report::to_json_string(&payload)?)?;
    Ok(Outcome {
        numerical_flag: numerical,
    })
}

fn cmd_pec(args: PecArgs, file: &FileConfig, seed: u64, out: Option<PathBuf>) -> CliResult<Outcome> {
    let noise_raw = require(args.noise.or_else(|| file.noise.clone()), "noise")?;
    let obs_raw = require(args.obs.or_else(|| file.obs.clone()), "obs")?;
    let state_raw = require(args.state.or_else(|| file.state.clone()), "state")?;
    let rounds = require(args.rounds.or(file.rounds), "rounds")?;

    let noise = NoiseSpec::parse(&noise_raw)?;
    let channel = noise.channel(1)?;
    let a = parse_observable(&obs_raw)?;
    let psi = parse_state(&state_raw, 1)?;
    let decomp = quasiprob_decompose(&channel, &pauli_conjugation_basis())?;
    let spec = pec_spec(&channel, &decomp, &a)?;

    let min_rounds = match (args.delta.or(file.delta), args.fail.or(file.fail)) {
        (Some(delta), Some(fail)) => {
            let acc = AccuracySpec::new(delta, fail)?;
            Some(hoeffding_samples(spec.declared_spread(), &acc)?)
        }
        _ => None,
    };

    let config = serde_json::json!({
        "noise": noise.raw,
        "obs": obs_raw,
        "state": state_raw,
        "rounds": rounds,
        "seed": seed,
    });
    let extra = serde_json::json!({
        "gamma": decomp.gamma,
        "coefficients": decomp
            .basis_labels
            .iter()
            .zip(&decomp.coefficients)
            .map(|(l, c)| serde_json::json!({"basis": l, "c": c}))
            .collect::<Vec<_>>(),
    });
    run_and_report(
        "pec", &spec, &psi, &a, rounds, seed, config, extra, min_rounds, out,
    )
}

fn cmd_extrapolate(
    args: ExtrapolateArgs,
    file: &FileConfig,
    seed: u64,
    out: Option<PathBuf>,
) -> CliResult<Outcome> {
    let family_raw = args
        .family
        .or_else(|| file.family.clone())
        .unwrap_or_else(|| "dephasing-power:3".to_string());
    let strength = require(args.strength.or(file.strength), "strength")?;
    let obs_raw = require(args.obs.or_else(|| file.obs.clone()), "obs")?;
    let state_raw = require(args.state.or_else(|| file.state.clone()), "state")?;
    let rounds = require(args.rounds.or(file.rounds), "rounds")?;

    let boosts = match args.boosts.or_else(|| file.boosts.clone()) {
        Some(raw) => parse_float_list(&raw)?,
        None => {
            let order = args.order.or(file.order).unwrap_or(1);
            (0..=order).map(|r| (r + 1) as f64).collect()
        }
    };
    let cfg = richardson_coefficients(&boosts)?;

    let family: Box<dyn NoiseFamily> = if let Some(layers) = family_raw.strip_prefix("dephasing-power:")
    {
        let layers: usize = layers
            .parse()
            .map_err(|_| CliError::usage(format!("bad layer count in '{family_raw}'")))?;
        Box::new(DephasingPowerFamily { layers })
    } else if family_raw == "depolarizing" {
        Box::new(|xi: f64| qem_core::channel::QuantumChannel::depolarizing_qubit(xi))
    } else {
        return Err(CliError::usage(format!(
            "unknown family '{family_raw}' (dephasing-power:<layers>, depolarizing)"
        )));
    };

    let a = parse_observable(&obs_raw)?;
    let psi = parse_state(&state_raw, 1)?;
    let spec = qem_core::extrapolation::extrapolation_spec(family.as_ref(), strength, &cfg, &a)?;
    let measured_bias = exact_bias(family.as_ref(), strength, &cfg, &a, &psi)?;

    let config = serde_json::json!({
        "family": family_raw,
        "strength": strength,
        "boosts": cfg.boost_factors,
        "obs": obs_raw,
        "state": state_raw,
        "rounds": rounds,
        "seed": seed,
    });
    let extra = serde_json::json!({
        "weights": cfg.weights,
        "weight_abs_sum": cfg.spread,
        "declared_max_bias": spec.shape.max_bias(),
        "measured_bias": measured_bias,
    });
    run_and_report(
        "extrapolation", &spec, &psi, &a, rounds, seed, config, extra, None, out,
    )
}

fn cmd_vd(args: VdArgs, file: &FileConfig, seed: u64, out: Option<PathBuf>) -> CliResult<Outcome> {
    let lambda = require(args.lambda.or(file.lambda), "lambda")?;
    let rest_raw = args
        .rest
        .or_else(|| file.rest.clone())
        .unwrap_or_else(|| format!("{}", 1.0 - lambda));
    let copies = require(args.copies.or(file.copies), "copies")?;
    let obs_raw = require(args.obs.or_else(|| file.obs.clone()), "obs")?;
    let rounds = require(args.rounds.or(file.rounds), "rounds")?;
    let search_samples = args.search_samples.or(file.search_samples).unwrap_or(50);

    let rest = parse_float_list(&rest_raw)?;
    let dim = rest.len() + 1;
    let model = SpectralModel::new(lambda, rest, qem_core::linalg::identity(dim))?;
    let a = parse_observable(&obs_raw)?;
    let vd = vd_spec(&model, copies, &a, search_samples, seed)?;
    let psi = model.ideal_state();

    let config = serde_json::json!({
        "lambda": lambda,
        "rest": rest_raw,
        "copies": copies,
        "obs": obs_raw,
        "rounds": rounds,
        "search_samples": search_samples,
        "seed": seed,
    });
    let extra = serde_json::json!({
        "bias_bound": vd.bias_bound,
        "spread_for_observable": vd.spread_for_observable,
        "best_found_spread": vd.best_found_spread,
    });
    run_and_report(
        "vd", &vd.spec, &psi, &a, rounds, seed, config, extra, None, out,
    )
}

#[derive(Serialize)]
struct SubfidCommandReport {
    command: &'static str,
    config: serde_json::Value,
    exact: serde_json::Value,
    estimate: qem_core::subfid::SubfidelityEstimate,
    bound_from_estimate: f64,
    bound_from_exact_fidelity: f64,
    bound_ci: f64,
}

fn cmd_subfid(
    args: SubfidArgs,
    file: &FileConfig,
    seed: u64,
    out: Option<PathBuf>,
) -> CliResult<Outcome> {
    let noise_raw = require(args.noise.or_else(|| file.noise.clone()), "noise")?;
    let pair_raw = args
        .pair
        .or_else(|| file.pair.clone())
        .unwrap_or_else(|| "plus,minus".to_string());
    let qubits = args.qubits.or(file.n).unwrap_or(1);
    let shots = require(args.shots.or(file.shots), "shots")?;
    let bias = args.bias.or(file.bias).unwrap_or(0.0);

    let (psi_name, phi_name) = pair_raw
        .split_once(',')
        .ok_or_else(|| CliError::usage("pair must be 'state,state'".to_string()))?;
    let psi = parse_state(psi_name.trim(), qubits)?;
    let phi = parse_state(phi_name.trim(), qubits)?;
    let noise = NoiseSpec::parse(&noise_raw)?;
    let channel = noise.channel(qubits)?;
    let rho = channel.apply(&psi)?;
    let sigma = channel.apply(&phi)?;

    let exact_e = qem_core::distance::sub_fidelity(&rho, &sigma)?;
    let exact_f = qem_core::distance::fidelity(&rho, &sigma)?;
    let numerator = qem_core::distance::trace_distance(&psi, &phi)? - 2.0 * bias;
    let estimate = qem_core::subfid::estimate_subfidelity(&rho, &sigma, shots, seed)?;

    let bound_of = |overlap: f64| {
        let den = (1.0 - overlap).max(0.0).sqrt();
        if numerator <= 0.0 {
            0.0
        } else if den <= 1e-15 {
            f64::INFINITY
        } else {
            numerator / den
        }
    };
    let bound_from_estimate = bound_of(estimate.value.min(1.0));
    let bound_from_exact_fidelity = bound_of(exact_f);
    // First-order sensitivity of the bound to the estimated sub-fidelity.
    let den = (1.0 - estimate.value.min(1.0)).max(1e-12);
    let bound_ci = if numerator > 0.0 {
        numerator * 0.5 * den.powf(-1.5) * estimate.ci
    } else {
        0.0
    };

    let numerical = !bound_from_estimate.is_finite();
    let payload = SubfidCommandReport {
        command: "subfid",
        config: serde_json::json!({
            "noise": noise.raw,
            "pair": pair_raw,
            "n": qubits,
            "shots": shots,
            "b_max": bias,
            "seed": seed,
        }),
        exact: serde_json::json!({
            "sub_fidelity": exact_e,
            "fidelity": exact_f,
            "numerator": numerator,
        }),
        estimate,
        bound_from_estimate,
        bound_from_exact_fidelity,
        bound_ci,
    };
    report::write_output(out.as_ref(), &report::to_json_string(&payload)?)?;
    Ok(Outcome {
        numerical_flag: numerical,
    })
}

fn cmd_sweep(
    args: SweepArgs,
    file: &FileConfig,
    seed: u64,
    out: Option<PathBuf>,
    format: Option<Format>,
) -> CliResult<Outcome> {
    if format == Some(Format::Json) {
        return Err(CliError::usage("sweep emits csv; drop --format json".to_string()));
    }
    let target = require(args.target.clone(), "target")?;
    let param = require(args.param.clone(), "param")?;
    let grid = parse_grid(&require(args.grid.clone(), "grid")?)?;
    if grid.is_empty() {
        return Err(CliError::Core(qem_core::Error::EmptyGrid));
    }

    let header = [
        "param",
        "value",
        "bound_value",
        "numerator",
        "denominator",
        "relaxation",
        "flag",
        "Q",
        "K",
        "n",
        "b_max",
        "pair_description",
    ];
    let mut rows = Vec::new();
    let mut saw_numerical = false;

    match target.as_str() {
        "layered" => {
            let qubits = require(args.qubits.or(file.n), "n")?;
            let (q, k, _) = parse_shape(
                &args
                    .shape
                    .clone()
                    .or_else(|| file.shape.clone())
                    .unwrap_or_else(|| "1,1".to_string()),
                false,
            )?;
            let bias = args.bias.or(file.bias).unwrap_or(0.0);
            let base_eps = args
                .eps
                .clone()
                .or_else(|| file.eps.clone())
                .map(|raw| parse_float_list(&raw))
                .transpose()?
                .unwrap_or_else(|| vec![0.1]);
            for &value in &grid {
                let (layers, eps) = match param.as_str() {
                    "L" => (value as usize, base_eps.clone()),
                    "eps" => (
                        require(args.layers.or(file.layers), "L")?,
                        vec![value; k.max(1)],
                    ),
                    other => {
                        return Err(CliError::Core(qem_core::Error::UnknownParameter {
                            name: other.to_string(),
                        }))
                    }
                };
                let eps = if eps.len() == 1 && k > 1 {
                    vec![eps[0]; k]
                } else {
                    eps
                };
                let report = layered_bound_report(qubits, q, k, bias, &eps, layers)?;
                saw_numerical |= flag_is_numerical(&report);
                rows.push(bound_row(&param, value, &report));
            }
        }
        "bound" => {
            let noise_raw = require(args.noise.clone().or_else(|| file.noise.clone()), "noise")?;
            let shape_raw = require(args.shape.clone().or_else(|| file.shape.clone()), "shape")?;
            let (q, k, n) = parse_shape(&shape_raw, true)?;
            let n = n.expect("three-entry shape");
            let bias = args.bias.or(file.bias).unwrap_or(0.0);
            let noise = NoiseSpec::parse(&noise_raw)?;
            for &value in &grid {
                let eps = match param.as_str() {
                    "eps" => value,
                    other => {
                        return Err(CliError::Core(qem_core::Error::UnknownParameter {
                            name: other.to_string(),
                        }))
                    }
                };
                let spec = NoiseSpec {
                    eps,
                    ..noise.clone()
                };
                let shape = ProtocolShape::uniform(q, k, n, bias, spec.channel(n)?)?;
                let relaxation = if k == 1 {
                    Relaxation::ExactSingleExperiment
                } else {
                    Relaxation::TraceProduct
                };
                let report = optimize_bound_over_pairs(&shape, relaxation, PairSearch::Presets)?;
                saw_numerical |= flag_is_numerical(&report);
                rows.push(bound_row(&param, value, &report));
            }
        }
        other => {
            return Err(CliError::Core(qem_core::Error::UnknownParameter {
                name: other.to_string(),
            }))
        }
    }

    let _ = seed;
    let csv = report::to_csv(&header, &rows);
    report::write_output(out.as_ref(), &csv)?;
    Ok(Outcome {
        numerical_flag: saw_numerical,
    })
}

fn bound_row(param: &str, value: f64, report: &BoundReport) -> Vec<String> {
    vec![
        param.to_string(),
        report::fmt_sig(value),
        report::fmt_sig(report.bound_value),
        report::fmt_sig(report.numerator),
        report::fmt_sig(report.denominator),
        report.relaxation.name().to_string(),
        format!("{:?}", report.flag).to_lowercase(),
        report.shape.inputs_per_experiment.to_string(),
        report.shape.experiments.to_string(),
        report.shape.n.to_string(),
        report::fmt_sig(report.shape.b_max),
        report.pair_description.clone(),
    ]
}

#[derive(Serialize)]
struct VerifyReport {
    command: &'static str,
    seed: u64,
    all_passed: bool,
    checks: Vec<qem_core::verify::CheckResult>,
}

fn cmd_verify(seed: u64, out: Option<PathBuf>) -> CliResult<Outcome> {
    let checks = verify::run_all(seed);
    let all_passed = checks.iter().all(|c| c.passed);
    for c in &checks {
        eprintln!("{} {} — {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
    }
    let payload = VerifyReport {
        command: "verify",
        seed,
        all_passed,
        checks,
    };
    report::write_output(out.as_ref(), &report::to_json_string(&payload)?)?;
    Ok(Outcome {
        numerical_flag: !all_passed,
    })
}
