//! `qpower` — capacity-power curves for quantum and classical channels.
//!
//! Subcommands: `curve` (quantum solvers over a threshold grid), `point`
//! (single threshold, JSON result), `classical` (power-constrained
//! Blahut-Arimoto), `randstates` (analytic + Monte Carlo random-state
//! curves), `verify` (property suites).
//!
//! Exit codes: 0 success, 1 property failure, 2 configuration error,
//! 3 numerical non-convergence.

mod input;
mod suites;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use qpower::capacity::{
    c1_general, p1_general, sweep_curve, CapacityResult, CqInstance, PowerConstraint, PowerCurve,
    PrivateCqInstance, SearchOptions, SolveOptions, SolveStatus,
};
use qpower::channels::CoherentEnsemble;
use qpower::json::{
    power_curve_csv, power_curve_family_csv, randstates_csv, BuiltChannel, CurveWire, RandstatesRow,
    ResultWire, SCHEMA,
};
use qpower::linalg::{DensityMatrix, HermitianOperator, ProbabilityVector};
use qpower::randstates::{
    mc_constrained_entropy, noiseless_capacity_power, typical_energy, EnergySpectrum,
};
use qpower::LN_2;

use input::{
    build_grid, config_error, parse_channel, parse_discrete_channel, parse_ensemble,
    parse_float_list, parse_hamiltonian, parse_spectrum, HamiltonianSpec,
};

pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn runtime_failure(e: qpower::Error) -> Failure {
    use qpower::Error;
    let code = match &e {
        Error::NoConvergence(_) => 3,
        Error::Config(_) | Error::InvalidChannel(_) | Error::DimMismatch { .. } | Error::OutOfRange(_) => 2,
        _ => 3,
    };
    Failure { code, message: e.to_string() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Units {
    Nats,
    Bits,
}

impl Units {
    fn convert(self, nats: f64) -> f64 {
        match self {
            Units::Nats => nats,
            Units::Bits => nats / LN_2,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Units::Nats => "nats",
            Units::Bits => "bits",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Objective {
    /// Unassisted classical capacity-power.
    C1,
    /// Private capacity-power (Holevo difference to the environment).
    P1,
}

#[derive(Parser)]
#[command(name = "qpower", version, about = "Capacity-power functions for quantum and classical channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep a capacity-power curve over a threshold grid.
    Curve(CurveArgs),
    /// Solve a single threshold and print the JSON result.
    Point(PointArgs),
    /// Run a named property suite.
    Verify(VerifyArgs),
    /// Analytic and Monte Carlo random-state curves.
    Randstates(RandstatesArgs),
    /// Classical baselines via power-constrained Blahut-Arimoto.
    Classical(ClassicalArgs),
}

#[derive(clap::Args)]
struct CurveArgs {
    /// Channel spec: inline JSON or a file ({"kind": ...}).
    #[arg(long)]
    channel: String,
    /// Fixed signal ensemble (CQ mode); omit to optimize over states.
    #[arg(long)]
    ensemble: Option<String>,
    /// sigma_z | number_operator | diag:a,b,... | JSON matrix | file.
    #[arg(long)]
    hamiltonian: Option<String>,
    #[arg(long = "B-min", default_value_t = 0.0, allow_hyphen_values = true)]
    b_min: f64,
    #[arg(long = "B-max", allow_hyphen_values = true)]
    b_max: Option<f64>,
    #[arg(long = "B-points", default_value_t = 21)]
    b_points: usize,
    /// Comma-separated noise parameters; emits a long-format table with a
    /// lambda column.
    #[arg(long = "lambda-grid")]
    lambda_grid: Option<String>,
    #[arg(long, value_enum, default_value_t = Objective::C1)]
    objective: Objective,
    /// Letters for the state-optimizing solver (ignored with --ensemble).
    #[arg(long, default_value_t = 3)]
    letters: usize,
    /// Restarts for the state-optimizing solver (0 = default 64).
    #[arg(long, default_value_t = 0)]
    restarts: usize,
    /// Seed for the state search; required when optimizing over states.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Units::Nats)]
    units: Units,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Nonzero exit when any grid point is infeasible or unconverged.
    #[arg(long)]
    strict: bool,
    /// Solve grid points independently (enables point-level parallelism,
    /// disables warm starts).
    #[arg(long = "no-warm-start")]
    no_warm_start: bool,
    /// Force sequential execution of solver-internal parallel regions
    /// (multi-start restarts, Monte Carlo batches).
    #[arg(long)]
    sequential: bool,
}

#[derive(clap::Args)]
struct PointArgs {
    #[arg(long)]
    channel: String,
    #[arg(long)]
    ensemble: Option<String>,
    #[arg(long)]
    hamiltonian: Option<String>,
    /// The energy threshold B.
    #[arg(long = "B", allow_hyphen_values = true)]
    b: f64,
    #[arg(long, value_enum, default_value_t = Objective::C1)]
    objective: Objective,
    #[arg(long, default_value_t = 3)]
    letters: usize,
    #[arg(long, default_value_t = 0)]
    restarts: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Units::Nats)]
    units: Units,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    sequential: bool,
}

#[derive(clap::Args)]
struct VerifyArgs {
    /// concavity | additivity | monotone | gradient | holevo-bound |
    /// private-concavity
    suite: String,
    /// cq-random (default) or a channel spec for the general-curve audit.
    #[arg(long, default_value = "cq-random")]
    channel: String,
    #[arg(long)]
    hamiltonian: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random instances for the sampled suites.
    #[arg(long, default_value_t = 10)]
    instances: usize,
    #[arg(long, default_value_t = 3)]
    letters: usize,
    #[arg(long, default_value_t = 16)]
    restarts: usize,
    /// Report concavity violations of state-optimized curves without failing.
    #[arg(long = "expect-piecewise")]
    expect_piecewise: bool,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct RandstatesArgs {
    /// Energy levels: comma-separated, {"levels": [...]} JSON, or a file.
    #[arg(long)]
    levels: String,
    #[arg(long = "B-min", default_value_t = 0.0, allow_hyphen_values = true)]
    b_min: f64,
    #[arg(long = "B-max", allow_hyphen_values = true)]
    b_max: Option<f64>,
    #[arg(long = "B-points", default_value_t = 21)]
    b_points: usize,
    /// Add Monte Carlo columns with this many samples per point.
    #[arg(long)]
    mc: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Clamp the analytic curve at zero instead of reporting negative values.
    #[arg(long = "clamp-nonnegative")]
    clamp_nonnegative: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ClassicalArgs {
    /// noiseless | bsc:p | bec:pe | {"Q": ..., "b": ...} | file.
    #[arg(long)]
    channel: String,
    #[arg(long = "B-min", default_value_t = 0.0, allow_hyphen_values = true)]
    b_min: f64,
    #[arg(long = "B-max", allow_hyphen_values = true)]
    b_max: Option<f64>,
    #[arg(long = "B-points", default_value_t = 21)]
    b_points: usize,
    #[arg(long, value_enum, default_value_t = Units::Nats)]
    units: Units,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    strict: bool,
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            std::process::exit(f.code);
        }
    }
}

fn run(cli: Cli) -> Result<i32, Failure> {
    match cli.command {
        Command::Curve(args) => cmd_curve(args),
        Command::Point(args) => cmd_point(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Randstates(args) => cmd_randstates(args),
        Command::Classical(args) => cmd_classical(args),
    }
}

fn write_output(out: Option<&PathBuf>, content: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| Failure { code: 2, message: format!("cannot write {}: {e}", path.display()) }),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// Everything a curve/point solve needs after flag parsing.
struct SolveSetup {
    built: BuiltChannel,
    states: Option<Vec<DensityMatrix>>,
    amplitudes: Option<Vec<Complex64>>,
    hamiltonian: Option<HermitianOperator>,
}

fn prepare_setup(
    channel: &str,
    ensemble: Option<&str>,
    hamiltonian: Option<&str>,
) -> Result<(qpower::json::ChannelSpec, SolveSetup), Failure> {
    let (spec, built) = parse_channel(channel)?;
    let parsed = ensemble.map(parse_ensemble).transpose()?;
    let (states, amplitudes) = match parsed {
        Some(p) => (p.states, p.amplitudes),
        None => (None, None),
    };
    let hamiltonian = match (&built, hamiltonian) {
        (BuiltChannel::BeamSplitter { .. }, None | Some("number_operator")) => None,
        (BuiltChannel::BeamSplitter { .. }, Some(other)) => {
            return Err(config_error(format!(
                "beam-splitter curves use --hamiltonian number_operator, got `{other}`"
            )))
        }
        (BuiltChannel::Kraus(ch), Some(text)) => match parse_hamiltonian(text)? {
            HamiltonianSpec::Matrix(h) => {
                if h.dim() != ch.dim_out() {
                    return Err(config_error(format!(
                        "Hamiltonian dimension {} does not match channel output {}",
                        h.dim(),
                        ch.dim_out()
                    )));
                }
                Some(h)
            }
            HamiltonianSpec::NumberOperator => {
                return Err(config_error(
                    "number_operator applies to the beam-splitter channel only",
                ))
            }
        },
        (BuiltChannel::Kraus(_), None) => {
            return Err(config_error("--hamiltonian is required for Kraus channels"))
        }
    };
    Ok((spec, SolveSetup { built, states, amplitudes, hamiltonian }))
}

struct CurveSolver<'a> {
    setup: &'a SolveSetup,
    objective: Objective,
    letters: usize,
    restarts: usize,
    seed: Option<u64>,
    parallel: bool,
}

impl CurveSolver<'_> {
    fn beam_splitter_ensemble(&self, p_b: f64) -> Result<CoherentEnsemble, Failure> {
        let amps = self
            .setup
            .amplitudes
            .clone()
            .ok_or_else(|| config_error("beam-splitter curves need a coherent --ensemble"))?;
        let n = amps.len();
        CoherentEnsemble::new(amps, ProbabilityVector::uniform(n), p_b)
            .map_err(runtime_failure)
    }

    fn search_options(&self) -> Result<SearchOptions, Failure> {
        let seed = self
            .seed
            .ok_or_else(|| config_error("--seed is required when optimizing over states"))?;
        let restarts = if self.restarts == 0 { 64 } else { self.restarts };
        Ok(SearchOptions { restarts, seed, parallel: self.parallel, ..SearchOptions::default() })
    }

    fn solve_point(&self, b: f64, warm: Option<&[f64]>) -> qpower::Result<CapacityResult> {
        match &self.setup.built {
            BuiltChannel::BeamSplitter { p_b } => {
                let ens = self
                    .beam_splitter_ensemble(*p_b)
                    .map_err(|f| qpower::Error::Config(f.message))?;
                CqInstance::from_beam_splitter(&ens, b)?.solve_warm(&SolveOptions::default(), warm)
            }
            BuiltChannel::Kraus(ch) => {
                let h = self.setup.hamiltonian.as_ref().expect("checked at setup");
                let constraints = [PowerConstraint::new(h.clone(), b)];
                match (&self.setup.states, self.objective) {
                    (Some(states), Objective::C1) => {
                        CqInstance::from_states(states, ch, &constraints)?
                            .solve_warm(&SolveOptions::default(), warm)
                    }
                    (Some(states), Objective::P1) => {
                        PrivateCqInstance::from_states(states, ch, &constraints)?
                            .solve_warm(&SolveOptions::default(), warm)
                    }
                    (None, Objective::C1) => {
                        let opts = self.search_options().map_err(|f| qpower::Error::Config(f.message))?;
                        c1_general(ch, self.letters, &constraints, &opts)
                    }
                    (None, Objective::P1) => {
                        let opts = self.search_options().map_err(|f| qpower::Error::Config(f.message))?;
                        p1_general(ch, self.letters, &constraints, &opts)
                    }
                }
            }
        }
    }

    fn sweep(&self, grid: &[f64], warm_start: bool) -> Result<PowerCurve, Failure> {
        // beam-splitter objective is the unassisted one by construction
        if matches!(self.setup.built, BuiltChannel::BeamSplitter { .. })
            && self.objective == Objective::P1
        {
            return Err(config_error("private objective needs a Kraus channel"));
        }
        // validate the state-search configuration before the sweep starts
        if self.setup.states.is_none() && matches!(self.setup.built, BuiltChannel::Kraus(_)) {
            self.search_options()?;
        }
        sweep_curve(grid, !warm_start, |b, warm| self.solve_point(b, warm)).map_err(runtime_failure)
    }
}

fn exit_code_for(points: &[CapacityResult], strict: bool) -> i32 {
    if !strict {
        return 0;
    }
    if points.iter().any(|p| p.status == SolveStatus::Infeasible) {
        return 1;
    }
    if points.iter().any(|p| p.status == SolveStatus::MaxIter) {
        return 3;
    }
    0
}

fn cmd_curve(args: CurveArgs) -> Result<i32, Failure> {
    let (spec, setup) = prepare_setup(&args.channel, args.ensemble.as_deref(), args.hamiltonian.as_deref())?;
    let grid = build_grid(args.b_min, args.b_max, args.b_points)?;
    let solver = CurveSolver {
        setup: &setup,
        objective: args.objective,
        letters: args.letters,
        restarts: args.restarts,
        seed: args.seed,
        parallel: !args.sequential,
    };

    let lambdas: Option<Vec<f64>> = args
        .lambda_grid
        .as_deref()
        .map(|t| parse_float_list(t, "lambda grid"))
        .transpose()?;

    let mut family: Vec<(f64, PowerCurve)> = Vec::new();
    match &lambdas {
        None => {
            let curve = solver.sweep(&grid, !args.no_warm_start)?;
            family.push((f64::NAN, curve));
        }
        Some(values) => {
            for &lambda in values {
                let spec_l = spec.with_lambda(lambda).map_err(runtime_failure)?;
                let built = spec_l.build().map_err(runtime_failure)?;
                let setup_l = SolveSetup {
                    built,
                    states: setup.states.clone(),
                    amplitudes: setup.amplitudes.clone(),
                    hamiltonian: setup.hamiltonian.clone(),
                };
                let solver_l = CurveSolver { setup: &setup_l, ..solver };
                family.push((lambda, solver_l.sweep(&grid, !args.no_warm_start)?));
            }
        }
    }

    let content = match (args.format, lambdas.is_some()) {
        (Format::Csv, false) => power_curve_csv(&family[0].1),
        (Format::Csv, true) => power_curve_family_csv(&family),
        (Format::Json, false) => {
            serde_json::to_string_pretty(&CurveWire::from_curve(&family[0].1, None)).unwrap() + "\n"
        }
        (Format::Json, true) => {
            #[derive(Serialize)]
            struct FamilyWire {
                schema: String,
                curves: Vec<CurveWire>,
            }
            let wire = FamilyWire {
                schema: SCHEMA.to_string(),
                curves: family
                    .iter()
                    .map(|(l, c)| CurveWire::from_curve(c, Some(*l)))
                    .collect(),
            };
            serde_json::to_string_pretty(&wire).unwrap() + "\n"
        }
    };
    write_output(args.out.as_ref(), &content)?;

    let all_points: Vec<CapacityResult> =
        family.iter().flat_map(|(_, c)| c.points.iter().cloned()).collect();
    if args.out.is_some() {
        let best = all_points
            .iter()
            .filter(|p| p.status != SolveStatus::Infeasible)
            .map(|p| p.value)
            .fold(f64::NEG_INFINITY, f64::max);
        println!(
            "curve: {} point(s), peak {:.6} {}",
            all_points.len(),
            args.units.convert(best),
            args.units.label()
        );
    }
    Ok(exit_code_for(&all_points, args.strict))
}

fn cmd_point(args: PointArgs) -> Result<i32, Failure> {
    let (_, setup) = prepare_setup(&args.channel, args.ensemble.as_deref(), args.hamiltonian.as_deref())?;
    let solver = CurveSolver {
        setup: &setup,
        objective: args.objective,
        letters: args.letters,
        restarts: args.restarts,
        seed: args.seed,
        parallel: !args.sequential,
    };
    if setup.states.is_none() && matches!(setup.built, BuiltChannel::Kraus(_)) {
        solver.search_options()?;
    }
    let result = match solver.solve_point(args.b, None) {
        Ok(r) => r,
        Err(qpower::Error::Infeasible { .. }) => CapacityResult::infeasible(),
        Err(e) => return Err(runtime_failure(e)),
    };

    /// Point document: the shared result schema plus a presentation value in
    /// the requested units.
    #[derive(Serialize)]
    struct PointWire {
        #[serde(flatten)]
        result: ResultWire,
        value: Option<f64>,
        units: &'static str,
    }
    let wire = PointWire {
        value: (result.status != SolveStatus::Infeasible)
            .then(|| args.units.convert(result.value)),
        units: args.units.label(),
        result: ResultWire::from_result(args.b, &result),
    };
    write_output(args.out.as_ref(), &(serde_json::to_string_pretty(&wire).unwrap() + "\n"))?;
    Ok(0)
}

fn cmd_verify(args: VerifyArgs) -> Result<i32, Failure> {
    let report = match args.suite.as_str() {
        "concavity" => {
            if args.channel == "cq-random" {
                suites::concavity_suite(args.seed, args.instances)
            } else {
                let (_, built) = parse_channel(&args.channel)?;
                let h = match args.hamiltonian.as_deref() {
                    Some(text) => match parse_hamiltonian(text)? {
                        HamiltonianSpec::Matrix(h) => h,
                        HamiltonianSpec::NumberOperator => {
                            return Err(config_error("the general-curve audit needs a matrix Hamiltonian"))
                        }
                    },
                    None => qpower::linalg::sigma_z_observable(),
                };
                suites::concavity_general_suite(
                    &built,
                    &h,
                    args.letters,
                    args.restarts,
                    args.seed,
                    args.expect_piecewise,
                )
            }
        }
        "additivity" => suites::additivity_suite(args.seed),
        "monotone" => suites::monotone_suite(args.seed, args.instances),
        "gradient" => suites::gradient_suite(args.seed),
        "holevo-bound" => suites::holevo_bound_suite(args.seed),
        "private-concavity" => suites::private_concavity_suite(args.seed),
        other => return Err(config_error(format!("unknown suite `{other}`"))),
    };

    for check in &report.checks {
        println!(
            "{}: {} — {} [{}]",
            report.suite,
            check.name,
            check.detail,
            if check.passed { "pass" } else { "FAIL" }
        );
    }
    println!(
        "{}: {}",
        report.suite,
        if report.passed { "all checks passed" } else { "FAILED" }
    );
    if let Some(out) = &args.out {
        write_output(Some(out), &(serde_json::to_string_pretty(&report).unwrap() + "\n"))?;
    }
    Ok(if report.passed { 0 } else { 1 })
}

fn cmd_randstates(args: RandstatesArgs) -> Result<i32, Failure> {
    let spectrum: EnergySpectrum = parse_spectrum(&args.levels)?;
    let grid = build_grid(args.b_min, args.b_max, args.b_points)?;
    let bt = typical_energy(&spectrum);

    let mut rows = Vec::with_capacity(grid.len());
    for &b in &grid {
        let analytic = match noiseless_capacity_power(&spectrum, b) {
            Ok(v) => Some(if args.clamp_nonnegative { v.max(0.0) } else { v }),
            Err(qpower::Error::OutOfRange(_)) => None,
            Err(e) => return Err(runtime_failure(e)),
        };
        let status = if analytic.is_some() { "ok" } else { "out_of_range" };
        let mc = match (args.mc, analytic.is_some()) {
            (Some(samples), true) => {
                // on the flat branch the constraint is inactive; sample the
                // unconstrained (typical) ensemble
                let b_eff = b.max(bt);
                match mc_constrained_entropy(&spectrum, b_eff, samples, args.seed) {
                    Ok(mc) => Some((mc.mean, mc.stderr)),
                    Err(qpower::Error::OutOfRange(_)) => None,
                    Err(e) => return Err(runtime_failure(e)),
                }
            }
            _ => None,
        };
        rows.push(RandstatesRow {
            b,
            analytic_nats: analytic,
            mc_mean_nats: mc.map(|m| m.0),
            mc_stderr: mc.map(|m| m.1),
            status,
        });
    }

    let content = match args.format {
        Format::Csv => randstates_csv(&rows, args.mc.is_some()),
        Format::Json => {
            #[derive(Serialize)]
            struct RowWire {
                #[serde(rename = "B")]
                b: f64,
                analytic_nats: Option<f64>,
                mc_mean_nats: Option<f64>,
                mc_stderr: Option<f64>,
                status: String,
            }
            #[derive(Serialize)]
            struct DocWire {
                schema: String,
                levels: Vec<f64>,
                points: Vec<RowWire>,
            }
            let doc = DocWire {
                schema: SCHEMA.to_string(),
                levels: spectrum.levels().to_vec(),
                points: rows
                    .iter()
                    .map(|r| RowWire {
                        b: r.b,
                        analytic_nats: r.analytic_nats,
                        mc_mean_nats: r.mc_mean_nats,
                        mc_stderr: r.mc_stderr,
                        status: r.status.to_string(),
                    })
                    .collect(),
            };
            serde_json::to_string_pretty(&doc).unwrap() + "\n"
        }
    };
    write_output(args.out.as_ref(), &content)?;
    Ok(0)
}

fn cmd_classical(args: ClassicalArgs) -> Result<i32, Failure> {
    let channel = parse_discrete_channel(&args.channel)?;
    let grid = build_grid(args.b_min, args.b_max, args.b_points)?;
    let curve = sweep_curve(&grid, false, |b, _| qpower::classical::capacity_power_ba(&channel, b))
        .map_err(runtime_failure)?;

    let content = match args.format {
        Format::Csv => power_curve_csv(&curve),
        Format::Json => serde_json::to_string_pretty(&CurveWire::from_curve(&curve, None)).unwrap() + "\n",
    };
    write_output(args.out.as_ref(), &content)?;
    if args.out.is_some() {
        let best = curve
            .points
            .iter()
            .filter(|p| p.status != SolveStatus::Infeasible)
            .map(|p| p.value)
            .fold(f64::NEG_INFINITY, f64::max);
        println!(
            "classical: {} point(s), peak {:.6} {}",
            curve.points.len(),
            args.units.convert(best),
            args.units.label()
        );
    }
    Ok(exit_code_for(&curve.points, args.strict))
}
