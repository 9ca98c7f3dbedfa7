//! `perfgame` command line: oracles, certificates, single solver runs,
//! experiments and ride-share instance generation.
//!
//! Results go to standard output (or `--output`) as JSON, or as a plain table
//! with `--pretty`; logs go to standard error. Exit codes: 0 on success, 1 for
//! domain failures (violated assumptions, oracle failures), 2 for usage
//! errors (unknown flags or values, malformed files).
//!
//! Every flag accepted by the parser is listed in [`FLAG_TABLE`] and shows up
//! in the subcommand's `--help`:
//!
//! ```
//! use clap::CommandFactory;
//!
//! let cli = perfgame::Cli::command();
//! let subcommands: Vec<_> = cli.get_subcommands().map(|s| s.get_name().to_string()).collect();
//! assert_eq!(subcommands, perfgame::FLAG_TABLE.iter().map(|(s, _)| s.to_string()).collect::<Vec<_>>());
//! for (name, flags) in perfgame::FLAG_TABLE {
//!     let mut sub = cli.find_subcommand(name).unwrap().clone();
//!     let mut parsed: Vec<&str> = sub.get_arguments().filter_map(|a| a.get_long()).filter(|l| *l != "help").collect();
//!     parsed.sort_unstable();
//!     let mut table = flags.to_vec();
//!     table.sort_unstable();
//!     assert_eq!(parsed, table, "{name}");
//!     let help = sub.render_long_help().to_string();
//!     for flag in *flags {
//!         assert!(help.contains(&format!("--{flag}")), "{name} --help misses --{flag}");
//!     }
//! }
//! ```

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use perfgame_core::oracles::solve;
use perfgame_core::{
    certify_monotone, compute_constants, run_solver, Algorithm, EquilibriumKind, GameError, GameSpec, SolverConfig,
};
use perfgame_harness::rideshare::{gen_rideshare, RideShareParams};
use perfgame_harness::{emit_artifacts, run_experiment, ExperimentConfig, HarnessError, ReferenceKind};
use serde::Serialize;
use thiserror::Error;

/// Flags of each subcommand, in declaration order.
pub const FLAG_TABLE: &[(&str, &[&str])] = &[
    ("oracle", &["game", "kind", "output", "pretty"]),
    ("certify", &["game", "output", "pretty"]),
    ("solve", &["game", "alg", "config", "reference", "seed", "iterations", "step-size", "output", "pretty"]),
    ("experiment", &["config", "outdir", "seed", "iterations", "step-size", "output", "pretty"]),
    ("rideshare-gen", &["locations", "price", "demand", "seed", "cross-ratio", "draws", "output", "pretty"]),
];

#[derive(Debug, Parser)]
#[command(name = "perfgame", version, about = "Equilibria and learning dynamics in decision-dependent games")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a Nash, performatively stable or socially optimal point.
    Oracle(OracleArgs),
    /// Game constants and the strong-monotonicity certificate.
    Certify(CertifyArgs),
    /// Run one solver and print its trajectory.
    Solve(SolveArgs),
    /// Run a multi-seed experiment and write its artifacts.
    Experiment(ExperimentArgs),
    /// Generate a synthetic ride-share game file.
    RideshareGen(RideshareArgs),
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Write the result to this file instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// Print a human-readable table instead of JSON.
    #[arg(long)]
    pub pretty: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Nash,
    PerfStable,
    SocialOpt,
}

impl From<KindArg> for EquilibriumKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Nash => EquilibriumKind::Nash,
            KindArg::PerfStable => EquilibriumKind::PerfStable,
            KindArg::SocialOpt => EquilibriumKind::SocialOpt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReferenceArg {
    Auto,
    Nash,
    PerfStable,
    SocialOpt,
}

impl From<ReferenceArg> for ReferenceKind {
    fn from(r: ReferenceArg) -> Self {
        match r {
            ReferenceArg::Auto => ReferenceKind::Auto,
            ReferenceArg::Nash => ReferenceKind::Nash,
            ReferenceArg::PerfStable => ReferenceKind::PerfStable,
            ReferenceArg::SocialOpt => ReferenceKind::SocialOpt,
        }
    }
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse::<Algorithm>().map_err(|_| {
        let names: Vec<_> = Algorithm::ALL.iter().map(|a| a.name()).collect();
        format!("expected one of {}", names.join(", "))
    })
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Game file (JSON).
    #[arg(long, value_name = "PATH")]
    pub game: PathBuf,
    #[arg(long, value_enum)]
    pub kind: KindArg,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    /// Game file (JSON).
    #[arg(long, value_name = "PATH")]
    pub game: PathBuf,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Game file (JSON).
    #[arg(long, value_name = "PATH")]
    pub game: PathBuf,
    /// Algorithm: retrain, rgm, rsgm, dfo, sgm or agm.
    #[arg(long, value_parser = parse_algorithm, required_unless_present = "config")]
    pub alg: Option<Algorithm>,
    /// Solver config file (JSON); flags override its fields.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Point the error is measured against.
    #[arg(long, value_enum, default_value = "auto")]
    pub reference: ReferenceArg,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Constant step size.
    #[arg(long)]
    pub step_size: Option<f64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Experiment config file (JSON).
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Artifact directory; overrides the config.
    #[arg(long, value_name = "DIR")]
    pub outdir: Option<PathBuf>,
    /// Run this single seed instead of the configured ones.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Iterations for every solver.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Constant step size for every solver except agm.
    #[arg(long)]
    pub step_size: Option<f64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct RideshareArgs {
    /// Number of locations.
    #[arg(long)]
    pub locations: usize,
    /// Nominal price bin.
    #[arg(long)]
    pub price: f64,
    /// Base demand per location (comma separated; one value is broadcast).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub demand: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Cross-elasticity magnitude relative to the own elasticity.
    #[arg(long, default_value_t = 0.5)]
    pub cross_ratio: f64,
    /// Synthetic demand draws per platform.
    #[arg(long, default_value_t = 200)]
    pub draws: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        let usage = match self {
            CliError::Game(e) => game_usage(e),
            CliError::Harness(HarnessError::Game(e)) => game_usage(e),
            CliError::Harness(e) => e.is_usage(),
            CliError::Io { .. } => false,
        };
        if usage {
            2
        } else {
            1
        }
    }

    fn kind(&self) -> &'static str {
        if self.exit_code() == 2 {
            "usage"
        } else {
            "domain"
        }
    }
}

/// Errors that come from malformed input rather than from the game.
fn game_usage(e: &GameError) -> bool {
    matches!(e, GameError::Config(_) | GameError::Structural(_))
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            let msg = serde_json::json!({"error": e.kind(), "message": e.to_string()});
            eprintln!("{msg}");
            e.exit_code()
        }
    }
}

pub fn dispatch(cmd: &Command) -> Result<(), CliError> {
    match cmd {
        Command::Oracle(a) => oracle(a),
        Command::Certify(a) => certify(a),
        Command::Solve(a) => solve_cmd(a),
        Command::Experiment(a) => experiment(a),
        Command::RideshareGen(a) => rideshare(a),
    }
}

fn load_game(path: &Path) -> Result<perfgame_core::Game, CliError> {
    Ok(GameSpec::load(path)?.build::<f64>()?)
}

fn emit(out: &OutputArgs, value: &impl Serialize, table: impl FnOnce() -> String) -> Result<(), CliError> {
    let text = if out.pretty {
        table()
    } else {
        serde_json::to_string_pretty(value).expect("output serializes") + "\n"
    };
    match &out.output {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io { path: path.clone(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

fn oracle(a: &OracleArgs) -> Result<(), CliError> {
    let game = load_game(&a.game)?;
    let report = solve(&game, a.kind.into())?;
    emit(&a.out, &report, || {
        format!(
            "kind      {:?}\nmethod    {:?}\npoint     {}\nresidual  {:.3e}\n",
            report.kind,
            report.solver,
            fmt_vec(report.point.as_slice()),
            report.residual
        )
    })
}

#[derive(Serialize)]
struct CertifyOutput<'a> {
    constants: &'a perfgame_core::Constants,
    certificate: &'a perfgame_core::Certificate,
    spectral_gap: Option<f64>,
}

fn certify(a: &CertifyArgs) -> Result<(), CliError> {
    let game = load_game(&a.game)?;
    let constants = compute_constants(&game)?;
    let cert = certify_monotone(&game, &constants);
    let out = CertifyOutput { constants: &constants, certificate: &cert, spectral_gap: cert.spectral_gap };
    emit(&a.out, &out, || {
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6}"));
        format!(
            "alpha         {:.6}\nL             {:.6}\nrho           {:.6}\nh_monotone    {:?}\nspectral_gap  {}\nmodulus       {}\npassed        {}\n",
            constants.alpha,
            constants.lipschitz,
            constants.rho,
            cert.h_monotone,
            opt(cert.spectral_gap),
            opt(cert.modulus),
            cert.passed
        )
    })
}

fn solve_cmd(a: &SolveArgs) -> Result<(), CliError> {
    let game = load_game(&a.game)?;
    let mut cfg = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| GameError::Config(format!("{}: {e}", path.display())))?;
            SolverConfig::from_json(&text)?
        }
        None => SolverConfig::new(a.alg.expect("clap requires --alg without --config")),
    };
    if let Some(alg) = a.alg {
        cfg.algorithm = alg;
    }
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(n) = a.iterations {
        cfg.iterations = n;
    }
    if let Some(eta) = a.step_size {
        cfg.step_size = Some(eta);
        cfg.schedule = None;
    }
    let constants = compute_constants(&game)?;
    let kind = ReferenceKind::from(a.reference).resolve(cfg.algorithm);
    let reference = solve(&game, kind)?.point;
    info!("{} against {kind:?} reference", cfg.label());
    let traj = run_solver(&game, &constants, &cfg, Some(&reference))?;
    if traj.diverged {
        warn!("run diverged after {} iterations", traj.iterations);
    }
    emit(&a.out, &traj, || {
        format!(
            "solver        {}\nseed          {}\niterations    {}\nreference     {kind:?} {}\nfinal point   {}\nfinal error²  {:.3e}\ndiverged      {}\n",
            traj.solver,
            traj.seed,
            traj.iterations,
            fmt_vec(reference.as_slice()),
            fmt_vec(&traj.final_point),
            traj.final_error_sq(),
            traj.diverged
        )
    })
}

fn experiment(a: &ExperimentArgs) -> Result<(), CliError> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(dir) = &a.outdir {
        cfg.outdir = dir.clone();
    }
    if let Some(seed) = a.seed {
        cfg.seeds = vec![seed];
    }
    for s in &mut cfg.solvers {
        if let Some(n) = a.iterations {
            s.iterations = n;
        }
        if let Some(eta) = a.step_size {
            if s.algorithm == Algorithm::Agm {
                warn!("--step-size does not apply to agm; keeping its own schedule");
            } else {
                s.step_size = Some(eta);
                s.schedule = None;
            }
        }
    }
    let out = run_experiment(&cfg)?;
    let files = emit_artifacts(&out.trajectories, &out.report, &cfg.outdir, cfg.plots)?;
    info!("wrote {} files to {}", files.len(), cfg.outdir.display());
    emit(&a.out, &out.report, || {
        let mut t = format!("{:<12} {:>8} {:>10} {:>14} {:>9}\n", "solver", "seed", "iters", "final err²", "diverged");
        for r in &out.report.runs {
            let _ = writeln!(
                t,
                "{:<12} {:>8} {:>10} {:>14.3e} {:>9}",
                r.solver, r.seed, r.iterations, r.final_error_sq, r.diverged
            );
        }
        if let Some(e) = &out.report.efficiency {
            let _ = writeln!(t, "S(so) {:.6}  S(ne) {:.6}  S(ps) {:.6}", e.s_so, e.s_ne, e.s_ps);
            let _ = writeln!(t, "PoA(ne) {:.6}  PoA(ps) {:.6}", e.poa_ne, e.poa_ps);
        }
        t
    })
}

fn rideshare(a: &RideshareArgs) -> Result<(), CliError> {
    let mut params = RideShareParams::new(a.locations, a.price, a.demand.clone(), a.seed);
    params.cross_ratio = a.cross_ratio;
    params.draws = a.draws;
    let inst = gen_rideshare(&params)?;
    emit(&a.out, &inst.spec, || {
        let mut t = format!("{:>8} {:>12} {:>12} {:>12}\n", "location", "base demand", "own", "cross");
        let (m0, m1) = (inst.game.family().player(0).base().mean(), inst.game.family().player(1).base().mean());
        for j in 0..a.locations {
            let _ = writeln!(
                t,
                "{:>8} {:>12.3} {:>12.4} {:>12.4}",
                j + 1,
                (m0[j] + m1[j]) / 2.0,
                inst.own_elasticity[j],
                inst.cross_elasticity[j]
            );
        }
        t
    })
}
