//! Command line front end. Every subcommand is a thin wrapper over the
//! library; reports are deterministic JSON with sorted keys, grids travel
//! as CSV, images as 8-bit PNG.
//!
//! Exit codes: 0 success, 1 validation or usage error, 2 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use bernoulli_diffuse::bernoulli::{BernoulliParams, GrowthRate, GrowthRateSpec};
use bernoulli_diffuse::denoise::{
    run_pipeline, DenoiseParams, ImageTensor,
};
use bernoulli_diffuse::elliptic::{solve_brezis_oswald, EllipticSolution};
use bernoulli_diffuse::grid::Grid2D;
use bernoulli_diffuse::parabolic::{
    blended_initial, cfl_max_dt, evolve, separable_solution, verify_comparison, verify_sandwich,
    EvolutionTrace, SourceSign, COMPARISON_TOL, SANDWICH_TOL,
};
use bernoulli_diffuse::{Error, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "bernoulli-diffuse",
    version,
    about = "Nonlinear diffusion with Bernoulli time factors: elliptic profiles, explicit marches, image denoising"
)]
struct Cli {
    /// Worker threads for the image pipeline. 1 keeps every run bit-stable;
    /// higher values parallelize channels without changing the output.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    /// off, error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "warn")]
    log_level: log::LevelFilter,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve -lap u = u^(1/alpha) with zero boundary data and report the
    /// barrier diagnostics.
    SolveElliptic(SolveEllipticArgs),
    /// Evaluate the scalar time factor S(t) and print it.
    BernoulliEval(BernoulliEvalArgs),
    /// March dv/dt = lap v^alpha +/- mu(t) v explicitly and write snapshots.
    Evolve(EvolveArgs),
    /// Evolve with the growth sign and check the separable barrier bounds.
    VerifyBounds(VerifyBoundsArgs),
    /// Evolve an ordered pair of problems and check the comparison principle.
    Compare(CompareArgs),
    /// Denoise a PNG image and report MSE, PSNR and SSIM against the input.
    Denoise(DenoiseArgs),
    /// Time the main kernels on fixed workloads.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SignArg {
    Growth,
    Absorption,
}

impl From<SignArg> for SourceSign {
    fn from(s: SignArg) -> SourceSign {
        match s {
            SignArg::Growth => SourceSign::Growth,
            SignArg::Absorption => SourceSign::Absorption,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Gm,
    Pm,
    Both,
}

/// Where an evolution starts: a grid from disk, the separable state
/// gamma u^(1/alpha), or a blend of the barrier profiles.
#[derive(Clone, Debug)]
enum InitSpec {
    Csv(PathBuf),
    Separable,
    Blend(f64),
}

impl FromStr for InitSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<InitSpec> {
        if s == "separable" {
            return Ok(InitSpec::Separable);
        }
        if let Some(path) = s.strip_prefix("csv:") {
            if path.is_empty() {
                return Err(Error::Parse("csv init needs a path: csv:<file>".into()));
            }
            return Ok(InitSpec::Csv(PathBuf::from(path)));
        }
        if let Some(p) = s.strip_prefix("blend:") {
            let p: f64 = p
                .parse()
                .map_err(|_| Error::Parse(format!("bad blend weight '{p}'")))?;
            return Ok(InitSpec::Blend(p));
        }
        Err(Error::Parse(format!(
            "unknown init '{s}' (expected csv:<file>, separable, or blend:<p>)"
        )))
    }
}

impl std::fmt::Display for InitSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitSpec::Csv(p) => write!(f, "csv:{}", p.display()),
            InitSpec::Separable => write!(f, "separable"),
            InitSpec::Blend(p) => write!(f, "blend:{p}"),
        }
    }
}

/// Grid shape and elliptic solver settings shared by the subcommands that
/// build their initial state from the stationary profile.
#[derive(Args)]
struct ProblemArgs {
    /// Interior points per row.
    #[arg(long, default_value_t = 63)]
    nx: usize,
    /// Interior points per column.
    #[arg(long, default_value_t = 63)]
    ny: usize,
    /// Lattice spacing; defaults to 1/(nx + 1).
    #[arg(long)]
    h: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    /// S(0), the initial separable amplitude.
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Stopping tolerance of the stationary Picard iteration.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Iteration cap of the stationary solve.
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
}

impl ProblemArgs {
    fn spacing(&self) -> f64 {
        self.h.unwrap_or(1.0 / (self.nx as f64 + 1.0))
    }

    fn solve(&self) -> Result<EllipticSolution> {
        log::info!(
            "solving the stationary profile on {}x{} (h = {}, alpha = {})",
            self.nx,
            self.ny,
            self.spacing(),
            self.alpha
        );
        solve_brezis_oswald(self.nx, self.ny, self.spacing(), self.alpha, self.tol, self.max_iter)
    }

    /// The resolved problem block for reports. The grid is authoritative:
    /// a CSV init overrides the shape flags.
    fn config_json(&self, grid: &Grid2D) -> Value {
        json!({
            "nx": grid.nx(),
            "ny": grid.ny(),
            "h": grid.h(),
            "alpha": self.alpha,
            "gamma": self.gamma,
            "tol": self.tol,
            "max_iter": self.max_iter,
        })
    }
}

#[derive(Args)]
struct SolveEllipticArgs {
    #[arg(long, default_value_t = 63)]
    nx: usize,
    #[arg(long, default_value_t = 63)]
    ny: usize,
    /// Lattice spacing; defaults to 1/(nx + 1).
    #[arg(long)]
    h: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    /// Write the solution grid to this CSV file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct BernoulliEvalArgs {
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Growth rate: constant:1.0, rational:0.3, exp:1.0,0.5, seasonal:1.0
    /// or table:<file.csv>.
    #[arg(long, default_value = "constant:1.0")]
    mu: GrowthRateSpec,
    /// Evaluation time.
    #[arg(long)]
    t: f64,
    /// Write a JSON report here in addition to printing the value.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct EvolveArgs {
    /// csv:<file>, separable, or blend:<p>.
    #[arg(long, default_value = "separable")]
    init: InitSpec,
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value = "constant:1.0")]
    mu: GrowthRateSpec,
    #[arg(long, value_enum, default_value_t = SignArg::Growth)]
    sign: SignArg,
    /// Time horizon.
    #[arg(long = "T")]
    t_final: f64,
    /// Step size; defaults to half the initial stability bound.
    #[arg(long)]
    dt: Option<f64>,
    /// Keep every k-th step as a snapshot.
    #[arg(long, default_value_t = 100)]
    snapshot_every: usize,
    /// Write snapshots as snap_<k>.csv into this directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyBoundsArgs {
    /// csv:<file>, separable, or blend:<p>. Must start between the barriers.
    #[arg(long, default_value = "blend:0.5")]
    init: InitSpec,
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value = "constant:1.0")]
    mu: GrowthRateSpec,
    #[arg(long = "T")]
    t_final: f64,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, default_value_t = 100)]
    snapshot_every: usize,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Growth rate of the lower solution.
    #[arg(long)]
    mu1: GrowthRateSpec,
    /// Growth rate of the upper solution; must dominate mu1 pointwise.
    #[arg(long)]
    mu2: GrowthRateSpec,
    /// Initial state of the lower solution.
    #[arg(long, default_value = "separable")]
    init: InitSpec,
    /// Initial state of the upper solution; defaults to the lower one.
    #[arg(long)]
    init2: Option<InitSpec>,
    /// Amplitude of the upper initial state; defaults to --gamma.
    #[arg(long)]
    gamma2: Option<f64>,
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, value_enum, default_value_t = SignArg::Growth)]
    sign: SignArg,
    #[arg(long = "T")]
    t_final: f64,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, default_value_t = 100)]
    snapshot_every: usize,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct DenoiseArgs {
    /// Input image, 8-bit RGB PNG.
    #[arg(long)]
    input: PathBuf,
    /// Noise level added before denoising.
    #[arg(long)]
    sigma: Option<f64>,
    /// Noise seed; the BERNOULLI_DIFFUSE_SEED environment variable wins
    /// over this flag when set.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = MethodArg::Both)]
    method: MethodArg,
    /// Directory for noisy.png / gm.png / pm.png.
    #[arg(long)]
    out_dir: PathBuf,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    /// JSON file with pipeline parameters; missing fields take defaults,
    /// --sigma and --seed override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    report: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::new()
        .filter_level(cli.log_level)
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if cli.threads == 0 {
        return Err(Error::Domain("--threads must be at least 1".into()));
    }
    match cli.cmd {
        Cmd::SolveElliptic(args) => cmd_solve_elliptic(args, cli.threads),
        Cmd::BernoulliEval(args) => cmd_bernoulli_eval(args),
        Cmd::Evolve(args) => cmd_evolve(args),
        Cmd::VerifyBounds(args) => cmd_verify_bounds(args),
        Cmd::Compare(args) => cmd_compare(args),
        Cmd::Denoise(args) => cmd_denoise(args, cli.threads),
        Cmd::Bench(args) => cmd_bench(args, cli.threads),
    }
}

/// Pretty JSON with keys sorted at every level.
fn sorted_json(v: &Value) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)?)
}

/// Writes the report to `path` when given, otherwise prints it.
fn emit_report(path: Option<&Path>, report: &Value) -> Result<()> {
    let text = sorted_json(report)?;
    match path {
        Some(p) => {
            std::fs::write(p, text + "\n")?;
            log::info!("report written to {}", p.display());
        }
        None => println!("{text}"),
    }
    Ok(())
}

/// Refuses output paths that would overwrite the input file. Inputs are
/// never mutated; colliding paths are a configuration mistake.
fn ensure_distinct(input: &Path, output: &Path) -> Result<()> {
    let a = input.canonicalize().unwrap_or_else(|_| input.to_path_buf());
    let b = output.canonicalize().unwrap_or_else(|_| output.to_path_buf());
    if a == b {
        return Err(Error::Domain(format!(
            "output path {} would overwrite the input",
            input.display()
        )));
    }
    Ok(())
}

fn cmd_solve_elliptic(args: SolveEllipticArgs, _threads: usize) -> Result<()> {
    let h = args.h.unwrap_or(1.0 / (args.nx as f64 + 1.0));
    log::info!("solving on {}x{} with h = {h}", args.nx, args.ny);
    let start = Instant::now();
    let sol = solve_brezis_oswald(args.nx, args.ny, h, args.alpha, args.tol, args.max_iter)?;
    let seconds = start.elapsed().as_secs_f64();
    if let Some(out) = &args.out {
        sol.u.write_csv(out)?;
        log::info!("solution grid written to {}", out.display());
    }
    let report = json!({
        "config": {
            "nx": args.nx,
            "ny": args.ny,
            "h": h,
            "alpha": args.alpha,
            "tol": args.tol,
            "max_iter": args.max_iter,
        },
        "lambda1": sol.lambda1,
        "sigma": sol.sigma,
        "c": sol.c,
        "iterations": sol.iterations,
        "final_residual": sol.residual_history.last().copied(),
        "max_u": sol.u.max_value(),
        "chain_monotonicity_defect": sol.chain_monotonicity_defect,
        "chain_barrier_excess": sol.chain_barrier_excess,
        "seconds": seconds,
    });
    emit_report(args.report.as_deref(), &report)
}

fn cmd_bernoulli_eval(args: BernoulliEvalArgs) -> Result<()> {
    let mu = args.mu.resolve()?;
    let params = BernoulliParams::new(args.alpha, args.gamma, mu)?;
    let s = params.eval_s(args.t)?;
    println!("{s}");
    if args.report.is_some() {
        let report = json!({
            "config": {
                "alpha": args.alpha,
                "gamma": args.gamma,
                "mu": spec_string(&args.mu),
                "t": args.t,
            },
            "s": s,
        });
        emit_report(args.report.as_deref(), &report)?;
    }
    Ok(())
}

/// The config-string form of a rate spec, echoed back in reports.
fn spec_string(spec: &GrowthRateSpec) -> String {
    match spec {
        GrowthRateSpec::Inline(g) => g.to_string(),
        GrowthRateSpec::Table(p) => format!("table:{}", p.display()),
    }
}

/// Builds the initial state for a march. CSV inits carry their own grid;
/// the other variants solve the stationary problem first.
fn build_initial(
    init: &InitSpec,
    problem: &ProblemArgs,
) -> Result<(Grid2D, Option<EllipticSolution>)> {
    match init {
        InitSpec::Csv(path) => {
            let g = Grid2D::read_csv(path)?;
            if g.min_value() < 0.0 {
                return Err(Error::Domain("initial grid must be nonnegative".into()));
            }
            Ok((g, None))
        }
        InitSpec::Separable => {
            let sol = problem.solve()?;
            let params = BernoulliParams::new(
                problem.alpha,
                problem.gamma,
                GrowthRate::Constant(1.0),
            )?;
            let v0 = separable_solution(&sol.u, &params, 0.0)?;
            Ok((v0, Some(sol)))
        }
        InitSpec::Blend(p) => {
            let sol = problem.solve()?;
            let params = BernoulliParams::new(
                problem.alpha,
                problem.gamma,
                GrowthRate::Constant(1.0),
            )?;
            let v0 = blended_initial(&sol, &params, *p)?;
            Ok((v0, Some(sol)))
        }
    }
}

fn resolve_dt(dt: Option<f64>, v0: &Grid2D, alpha: f64) -> f64 {
    dt.unwrap_or_else(|| 0.5 * cfl_max_dt(v0, alpha))
}

/// Writes every snapshot of the trace as out_dir/snap_<k>.csv.
fn write_snapshots(trace: &EvolutionTrace, out_dir: &Path) -> Result<usize> {
    std::fs::create_dir_all(out_dir)?;
    for (k, snap) in trace.snapshots.iter().enumerate() {
        snap.write_csv(&out_dir.join(format!("snap_{k:06}.csv")))?;
    }
    Ok(trace.snapshots.len())
}

fn sign_name(sign: SourceSign) -> &'static str {
    match sign {
        SourceSign::Growth => "growth",
        SourceSign::Absorption => "absorption",
    }
}

fn cmd_evolve(args: EvolveArgs) -> Result<()> {
    let mu = args.mu.resolve()?;
    let (v0, _) = build_initial(&args.init, &args.problem)?;
    if let (InitSpec::Csv(input), Some(dir)) = (&args.init, &args.out_dir) {
        ensure_distinct(input, &dir.join("snap_000000.csv"))?;
    }
    let dt = resolve_dt(args.dt, &v0, args.problem.alpha);
    let sign: SourceSign = args.sign.into();
    log::info!(
        "marching {}x{} to T = {} with dt = {dt}",
        v0.nx(),
        v0.ny(),
        args.t_final
    );
    let trace = evolve(
        &v0,
        args.problem.alpha,
        &mu,
        sign,
        args.t_final,
        dt,
        args.snapshot_every,
    )?;
    let written = match &args.out_dir {
        Some(dir) => write_snapshots(&trace, dir)?,
        None => 0,
    };
    let report = json!({
        "config": {
            "init": args.init.to_string(),
            "problem": args.problem.config_json(&v0),
            "mu": spec_string(&args.mu),
            "sign": sign_name(sign),
            "T": args.t_final,
            "dt": dt,
            "snapshot_every": args.snapshot_every,
        },
        "times": trace.times,
        "snapshots": trace.snapshots.len(),
        "snapshots_written": written,
        "final_time": trace.final_time(),
        "final_max": trace.final_state().max_value(),
        "final_min": trace.final_state().min_value(),
        "initial_cfl_bound": cfl_max_dt(&v0, args.problem.alpha),
    });
    emit_report(args.report.as_deref(), &report)
}

fn cmd_verify_bounds(args: VerifyBoundsArgs) -> Result<()> {
    let mu = args.mu.resolve()?;
    let params = BernoulliParams::new(args.problem.alpha, args.problem.gamma, mu.clone())?;
    let (v0, sol) = build_initial(&args.init, &args.problem)?;
    let sol = match sol {
        Some(s) => s,
        // a CSV start still needs the profile; its grid fixes the shape
        None => {
            let mut p = ProblemArgs { ..args.problem };
            p.nx = v0.nx();
            p.ny = v0.ny();
            p.h = Some(v0.h());
            p.solve()?
        }
    };
    let dt = resolve_dt(args.dt, &v0, args.problem.alpha);
    let trace = evolve(
        &v0,
        args.problem.alpha,
        &mu,
        SourceSign::Growth,
        args.t_final,
        dt,
        args.snapshot_every,
    )?;
    let verdict = verify_sandwich(&trace, &sol, &params)?;
    let report = json!({
        "config": {
            "init": args.init.to_string(),
            "problem": args.problem.config_json(&v0),
            "mu": spec_string(&args.mu),
            "T": args.t_final,
            "dt": dt,
            "snapshot_every": args.snapshot_every,
        },
        "max_lower_violation": verdict.max_lower_violation,
        "worst_lower": {
            "time": verdict.worst_lower_time,
            "x": verdict.worst_lower_point.0,
            "y": verdict.worst_lower_point.1,
        },
        "max_upper_violation": verdict.max_upper_violation,
        "worst_upper": {
            "time": verdict.worst_upper_time,
            "x": verdict.worst_upper_point.0,
            "y": verdict.worst_upper_point.1,
        },
        "tolerance": SANDWICH_TOL,
        "passed": verdict.passed,
    });
    emit_report(args.report.as_deref(), &report)?;
    if !verdict.passed {
        return Err(Error::Unstable { t: verdict.worst_upper_time });
    }
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let mu1 = args.mu1.resolve()?;
    let mu2 = args.mu2.resolve()?;
    let lower_problem = ProblemArgs { ..args.problem };
    let (v0, _) = build_initial(&args.init, &lower_problem)?;
    let upper_init = args.init2.clone().unwrap_or_else(|| args.init.clone());
    let upper_problem = ProblemArgs {
        gamma: args.gamma2.unwrap_or(args.problem.gamma),
        h: Some(lower_problem.spacing()),
        ..args.problem
    };
    let (w0, _) = build_initial(&upper_init, &upper_problem)?;
    let dt = resolve_dt(args.dt, &w0, args.problem.alpha);
    let sign: SourceSign = args.sign.into();
    log::info!("marching the ordered pair to T = {}", args.t_final);
    let lower = evolve(&v0, args.problem.alpha, &mu1, sign, args.t_final, dt, args.snapshot_every)?;
    let upper = evolve(&w0, args.problem.alpha, &mu2, sign, args.t_final, dt, args.snapshot_every)?;
    let verdict = verify_comparison(&lower, &upper)?;
    let report = json!({
        "config": {
            "init": args.init.to_string(),
            "init2": upper_init.to_string(),
            "gamma2": upper_problem.gamma,
            "problem": args.problem.config_json(&v0),
            "mu1": spec_string(&args.mu1),
            "mu2": spec_string(&args.mu2),
            "sign": sign_name(sign),
            "T": args.t_final,
            "dt": dt,
            "snapshot_every": args.snapshot_every,
        },
        "max_violation": verdict.max_violation,
        "worst": {
            "time": verdict.worst_time,
            "x": verdict.worst_point.0,
            "y": verdict.worst_point.1,
        },
        "tolerance": COMPARISON_TOL,
        "violations": if verdict.passed { 0 } else { 1 },
        "passed": verdict.passed,
    });
    emit_report(args.report.as_deref(), &report)?;
    if !verdict.passed {
        return Err(Error::Unstable { t: verdict.worst_time });
    }
    Ok(())
}

/// --seed beats the config file; BERNOULLI_DIFFUSE_SEED beats both.
fn resolve_seed(flag: Option<u64>, from_config: u64) -> Result<u64> {
    if let Ok(text) = std::env::var("BERNOULLI_DIFFUSE_SEED") {
        let seed = text.parse().map_err(|_| {
            Error::Domain(format!("BERNOULLI_DIFFUSE_SEED must be an unsigned integer, got '{text}'"))
        })?;
        log::info!("seed {seed} taken from BERNOULLI_DIFFUSE_SEED");
        return Ok(seed);
    }
    Ok(flag.unwrap_or(from_config))
}

fn cmd_denoise(args: DenoiseArgs, threads: usize) -> Result<()> {
    let mut params = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str::<DenoiseParams>(&text)
                .map_err(|e| Error::Parse(format!("bad pipeline config: {e}")))?
        }
        None => DenoiseParams::default(),
    };
    if let Some(sigma) = args.sigma {
        params.sigma_noise = sigma;
    }
    params.seed = resolve_seed(args.seed, params.seed)?;
    params.validate()?;

    let (run_gm, run_pm) = match args.method {
        MethodArg::Gm => (true, false),
        MethodArg::Pm => (false, true),
        MethodArg::Both => (true, true),
    };
    for name in ["noisy.png", "gm.png", "pm.png", "report.json"] {
        ensure_distinct(&args.input, &args.out_dir.join(name))?;
    }
    if let Some(report) = &args.report {
        ensure_distinct(&args.input, report)?;
    }

    log::info!("reading {}", args.input.display());
    let clean = ImageTensor::read_png(&args.input)?;
    log::info!(
        "denoising {}x{} with sigma = {}, seed = {}, {} thread(s)",
        clean.width(),
        clean.height(),
        params.sigma_noise,
        params.seed,
        threads
    );
    let out = run_pipeline(&clean, &params, run_gm, run_pm, threads)?;

    std::fs::create_dir_all(&args.out_dir)?;
    out.noisy.write_png(&args.out_dir.join("noisy.png"))?;
    if let Some(gm) = &out.gm {
        gm.write_png(&args.out_dir.join("gm.png"))?;
    }
    if let Some(pm) = &out.pm {
        pm.write_png(&args.out_dir.join("pm.png"))?;
    }

    let text = out.report.to_json()?;
    match &args.report {
        Some(p) => {
            std::fs::write(p, text + "\n")?;
            log::info!("report written to {}", p.display());
        }
        None => println!("{text}"),
    }
    Ok(())
}

/// A smooth deterministic test pattern used by the benchmark when no image
/// is supplied: overlapping waves with distinct phases per channel.
fn bench_image(n: usize) -> Result<ImageTensor> {
    use std::f64::consts::TAU;
    let m = (n - 1).max(1) as f64;
    ImageTensor::from_fn(n, n, |y, x, c| {
        let u = x as f64 / m;
        let v = y as f64 / m;
        let swirl = (TAU * (3.0 * u + 0.4 * (TAU * v).sin())).sin();
        let band = (TAU * (2.0 * v + 0.1 * c as f64)).cos();
        (0.5 + 0.22 * swirl + 0.2 * band).clamp(0.0, 1.0)
    })
}

fn cmd_bench(args: BenchArgs, threads: usize) -> Result<()> {
    log::info!("benchmark: stationary solve, 100 explicit steps, one denoise per method");

    let start = Instant::now();
    let sol = solve_brezis_oswald(63, 63, 1.0 / 64.0, 4.0, 1e-8, 10_000)?;
    let elliptic_seconds = start.elapsed().as_secs_f64();

    let params = BernoulliParams::new(2.0, 1.0, GrowthRate::Constant(1.0))?;
    let profile = solve_brezis_oswald(64, 64, 1.0 / 65.0, 2.0, 1e-8, 10_000)?;
    let v0 = separable_solution(&profile.u, &params, 0.0)?;
    let dt = 0.5 * cfl_max_dt(&v0, 2.0);
    let start = Instant::now();
    let trace = evolve(
        &v0,
        2.0,
        &GrowthRate::Constant(1.0),
        SourceSign::Growth,
        100.0 * dt,
        dt,
        1_000,
    )?;
    let parabolic_seconds = start.elapsed().as_secs_f64();

    let clean = bench_image(512)?;
    let dp = DenoiseParams::default();
    let start = Instant::now();
    let gm_out = run_pipeline(&clean, &dp, true, false, threads)?;
    let gm_seconds = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let pm_out = run_pipeline(&clean, &dp, false, true, threads)?;
    let pm_seconds = start.elapsed().as_secs_f64();

    let report = json!({
        "config": {
            "threads": threads,
            "elliptic": { "nx": 63, "ny": 63, "h": 1.0 / 64.0, "alpha": 4.0, "tol": 1e-8 },
            "parabolic": { "nx": 64, "ny": 64, "steps": 100, "dt": dt, "alpha": 2.0 },
            "denoise": { "size": 512, "sigma": dp.sigma_noise, "seed": dp.seed },
        },
        "elliptic": {
            "seconds": elliptic_seconds,
            "iterations": sol.iterations,
            "final_residual": sol.residual_history.last().copied(),
        },
        "parabolic": {
            "seconds": parabolic_seconds,
            "steps": 100,
            "final_time": trace.final_time(),
            "final_max": trace.final_state().max_value(),
        },
        "denoise_gm": {
            "seconds": gm_seconds,
            "metrics": serde_json::to_value(&gm_out.report.metrics.gm)?,
        },
        "denoise_pm": {
            "seconds": pm_seconds,
            "metrics": serde_json::to_value(&pm_out.report.metrics.pm)?,
        },
    });
    emit_report(args.report.as_deref(), &report)
}
