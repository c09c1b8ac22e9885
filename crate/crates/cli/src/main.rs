use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use resolve_rl::basis::{self, BasisError};
use resolve_rl::experiment::{
    self, Environment, ExperimentConfig, ExperimentError, PolicyFile, TabularInstance,
};
use resolve_rl::lp::{self, LpError, StandardLp};
use resolve_rl::mdp::{rollout_success, GreedyPolicy, MountainCarModel};
use resolve_rl::par::{self, Execution};

#[derive(Parser)]
#[command(name = "resolve-rl", version, about = "LP-based reinforcement learning with basis identification and resolving")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Overrides the seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides `output_dir` from the config file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Suppress progress messages on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    /// Run single-threaded.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Operations on a standard-form LP file.
    #[command(subcommand)]
    Lp(LpCommand),
    /// Basis identification and gap diagnostics.
    #[command(subcommand)]
    Basis(BasisCommand),
    /// Identification followed by resolving.
    #[command(subcommand)]
    Resolve(ResolveCommand),
    /// Experiment studies that write CSV tables.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Policy evaluation by rollouts.
    #[command(subcommand)]
    Eval(EvalCommand),
}

#[derive(Subcommand)]
enum LpCommand {
    /// Solve `max rᵀx s.t. Ax ≤ c` with free x.
    Solve { lp: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Simplex,
    Elimination,
}

#[derive(Subcommand)]
enum BasisCommand {
    /// Identify an optimal basis of an (estimated) LP.
    Identify {
        lp: PathBuf,
        #[arg(long, value_enum, default_value = "simplex")]
        method: Method,
        /// Samples per entry behind the estimate (elimination only).
        #[arg(long, default_value_t = 10)]
        samples: usize,
        /// Failure probability of the confidence radius (elimination only).
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
    },
    /// Enumerate bases and report the gap parameters.
    Gaps { lp: PathBuf },
}

#[derive(Subcommand)]
enum ResolveCommand {
    /// Identification followed by resolving; writes metrics, trace and weights.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum BenchCommand {
    /// The Mountain Car pipeline and the success-rate comparison.
    Mountaincar {
        #[arg(long)]
        config: Option<PathBuf>,
        /// 40×60×5 grid with 10 samples per pair.
        #[arg(long)]
        full: bool,
        /// Replications of the success-rate comparison.
        #[arg(long, default_value_t = 3)]
        seeds: usize,
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Regret and violation of resolving on a tabular instance.
    Regret {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Success rate of the greedy policy of a weights file.
    Policy {
        policy: PathBuf,
        #[arg(long, default_value_t = 200)]
        episodes: usize,
        #[arg(long, default_value_t = 1000)]
        horizon: usize,
    },
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

impl From<LpError> for CliError {
    fn from(e: LpError) -> Self {
        match e {
            LpError::Invalid(_) | LpError::NegativeRhs { .. } | LpError::InvalidBasis(_) => CliError::Input(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<BasisError> for CliError {
    fn from(e: BasisError) -> Self {
        match e {
            BasisError::TooLarge { .. } => CliError::Input(e.to_string()),
            BasisError::Lp(inner) => inner.into(),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

struct Context {
    seed: Option<u64>,
    out: Option<PathBuf>,
    quiet: bool,
    exec: Execution,
}

impl Context {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn config(&self, path: Option<&Path>) -> CliResult<ExperimentConfig> {
        let mut cfg: ExperimentConfig = match path {
            Some(p) => read_json(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.to_string_lossy().into_owned();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn out_dir(&self, cfg_dir: Option<&str>) -> CliResult<Option<PathBuf>> {
        let dir = self.out.clone().or_else(|| cfg_dir.map(PathBuf::from));
        if let Some(d) = &dir {
            fs::create_dir_all(d).map_err(|e| CliError::Input(format!("{}: {e}", d.display())))?;
        }
        Ok(dir)
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> CliResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Input(e.to_string()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::Input(e.to_string()))
}

fn io_err(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn load_lp(path: &Path) -> CliResult<StandardLp> {
    read_json(path)
}

fn lp_solve(ctx: &Context, path: &Path) -> CliResult<()> {
    let lp = load_lp(path)?;
    let sol = lp::simplex_solve(&lp)?;
    let value = json!({
        "status": sol.status,
        "objective": sol.objective,
        "x": sol.x.as_slice(),
        "basis": sol.basis,
        "pivots": sol.pivots,
    });
    if let Some(dir) = ctx.out_dir(None)? {
        write_json(&dir.join("solution.json"), &value)?;
    }
    print_json(&value);
    Ok(())
}

fn basis_identify(ctx: &Context, path: &Path, method: Method, samples: usize, eps: f64) -> CliResult<()> {
    let lp = load_lp(path)?;
    let found = match method {
        Method::Simplex => basis::identify_basis_simplex(&lp)?,
        Method::Elimination => {
            if samples == 0 || !(eps > 0.0 && eps < 1.0) {
                return Err(CliError::Input("elimination needs --samples >= 1 and --eps in (0, 1)".into()));
            }
            basis::identify_basis_elimination(&lp, samples, eps)?
        }
    };
    let value = serde_json::to_value(&found).expect("serializable");
    if let Some(dir) = ctx.out_dir(None)? {
        write_json(&dir.join("basis.json"), &value)?;
    }
    print_json(&value);
    Ok(())
}

fn basis_gaps(ctx: &Context, path: &Path) -> CliResult<()> {
    let lp = load_lp(path)?;
    let report = basis::gap_report_with(&lp, ctx.exec)?;
    let value = serde_json::to_value(&report).expect("serializable");
    if let Some(dir) = ctx.out_dir(None)? {
        write_json(&dir.join("gaps.json"), &value)?;
    }
    print_json(&value);
    Ok(())
}

fn write_pipeline(dir: &Path, report: &experiment::PipelineReport, policy: &PolicyFile) -> CliResult<()> {
    experiment::write_metrics_csv(&report.rows, create(&dir.join("metrics.csv"))?).map_err(io_err)?;
    report.trace.write_csv(create(&dir.join("trace.csv"))?).map_err(io_err)?;
    write_json(&dir.join("report.json"), report)?;
    write_json(&dir.join("policy.json"), policy)
}

fn resolve_run(ctx: &Context, config: Option<&Path>) -> CliResult<()> {
    let cfg = ctx.config(config)?;
    let dir = ctx.out_dir(Some(&cfg.output_dir))?.expect("config names a directory");
    ctx.note(format!("running identification and {} resolving steps", cfg.resolve_iterations));
    let (report, policy) = experiment::run_experiment(&cfg, ctx.exec)?;
    write_pipeline(&dir, &report, &policy)?;
    let last = report.rows.last().expect("at least the T = 0 row");
    ctx.note(format!("wrote {}", dir.display()));
    print_json(&json!({
        "num_constraints": report.num_constraints,
        "num_features": report.num_features,
        "basis_size": report.basis.size(),
        "identification_queries": report.identification_queries,
        "benchmark_value": report.benchmark_value,
        "final": last,
    }));
    Ok(())
}

fn bench_mountaincar(
    ctx: &Context,
    config: Option<&Path>,
    full: bool,
    seeds: usize,
    episodes: Option<usize>,
) -> CliResult<()> {
    let mut cfg = ctx.config(config)?;
    if !matches!(cfg.environment, Environment::MountainCar) {
        return Err(CliError::Input("bench mountaincar needs environment \"mountain_car\"".into()));
    }
    if full {
        cfg = cfg.full_scale();
    }
    if let Some(e) = episodes {
        cfg.episodes = e;
    }
    cfg.validate()?;
    let dir = ctx.out_dir(Some(&cfg.output_dir))?.expect("config names a directory");
    ctx.note(format!("grid {:?}, {} samples per pair", cfg.grid, cfg.samples_per_pair));
    let (report, policy) = experiment::run_mountain_car_experiment(&cfg, ctx.exec)?;
    write_pipeline(&dir, &report, &policy)?;
    ctx.note("comparing success rates");
    let rows = experiment::run_success_rate_comparison(&cfg, seeds, ctx.exec)?;
    experiment::write_success_csv(&rows, create(&dir.join("success.csv"))?).map_err(io_err)?;
    ctx.note(format!("wrote {}", dir.display()));
    print_json(&json!({
        "num_constraints": report.num_constraints,
        "num_features": report.num_features,
        "basis_size": report.basis.size(),
        "identification_queries": report.identification_queries,
        "metrics": report.rows,
        "success": rows,
    }));
    Ok(())
}

fn bench_regret(ctx: &Context, config: Option<&Path>) -> CliResult<()> {
    let cfg = ctx.config(config)?;
    let instance = match &cfg.environment {
        Environment::Tabular(spec) => TabularInstance::from_spec(&cfg, spec)?,
        Environment::MountainCar => experiment::stochastic_instance(),
    };
    let dir = ctx.out_dir(Some(&cfg.output_dir))?.expect("config names a directory");
    ctx.note(format!("{} seeds at N = {:?}", cfg.regret_seeds, cfg.regret_iterations));
    let rows = experiment::run_synthetic_regret_study(&instance, &cfg, ctx.exec)?;
    experiment::write_regret_csv(&rows, create(&dir.join("regret.csv"))?).map_err(io_err)?;
    print_json(&serde_json::to_value(&rows).expect("serializable"));
    Ok(())
}

fn eval_policy(ctx: &Context, path: &Path, episodes: usize, horizon: usize) -> CliResult<()> {
    if episodes == 0 || horizon == 0 {
        return Err(CliError::Input("--episodes and --horizon must be at least 1".into()));
    }
    let file: PolicyFile = read_json(path)?;
    let params = file.environment.clone().unwrap_or_else(|| ExperimentConfig::default().mountain_car_params());
    let model = MountainCarModel::new(params.clone()).map_err(|e| CliError::Input(e.to_string()))?;
    let rbf = file.rbf.clone().unwrap_or_default();
    let features = model.feature_table(&rbf.features()?);
    if file.weights.len() != features.matrix().cols() {
        return Err(CliError::Input(format!(
            "policy has {} weights, the features have {}",
            file.weights.len(),
            features.matrix().cols()
        )));
    }
    let policy = GreedyPolicy::new(&model, &features, &file.weights);
    let seed = ctx.seed.unwrap_or(0);
    let rate = rollout_success(&model, &|s| policy.action(s), horizon, episodes, seed, ctx.exec)
        .map_err(|e| CliError::Input(e.to_string()))?;
    print_json(&json!({ "episodes": episodes, "horizon": horizon, "seed": seed, "success_rate": rate }));
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    par::init_thread_pool_from_env();
    let ctx = Context {
        seed: cli.global.seed,
        out: cli.global.out,
        quiet: cli.global.quiet,
        exec: if cli.global.sequential { Execution::Sequential } else { Execution::default() },
    };
    match cli.command {
        Command::Lp(LpCommand::Solve { lp }) => lp_solve(&ctx, &lp),
        Command::Basis(BasisCommand::Identify { lp, method, samples, eps }) => {
            basis_identify(&ctx, &lp, method, samples, eps)
        }
        Command::Basis(BasisCommand::Gaps { lp }) => basis_gaps(&ctx, &lp),
        Command::Resolve(ResolveCommand::Run { config }) => resolve_run(&ctx, config.as_deref()),
        Command::Bench(BenchCommand::Mountaincar { config, full, seeds, episodes }) => {
            bench_mountaincar(&ctx, config.as_deref(), full, seeds, episodes)
        }
        Command::Bench(BenchCommand::Regret { config }) => bench_regret(&ctx, config.as_deref()),
        Command::Eval(EvalCommand::Policy { policy, episodes, horizon }) => {
            eval_policy(&ctx, &policy, episodes, horizon)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("resolve-rl: {e}");
            ExitCode::from(e.code())
        }
    }
}
