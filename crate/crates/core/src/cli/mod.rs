//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O failure on outputs, 2 bad configuration or
//! arguments, 3 numerical failure, 4 unresolved classification under
//! `--strict`.

mod config;
mod output;

pub use config::{ConfigError, RunConfig, KEYS, REQUIRED};
pub use output::{
    num, profile_csv, sweep_csv, Cache, BOUNDS_HEADER, PROFILE_HEADER, SWEEP_HEADER, SWITCH_HEADER,
};

use std::ffi::OsString;
use std::io;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::analysis::{
    alpha_star, detect_ideal_free_pair, harvested_semitrivial, inequality_suite, invasion_potential,
    invasion_threshold, simulate_and_classify, sustainable_yield, CheckStatus, ClassifiedRun,
    Outcome, PairDetection,
};
use crate::dynamics::{
    random_initial_state, solve_semitrivial, Branch, CompetitionModel, HarvestRates,
};
use crate::error::Error;
use crate::spectral::principal_eigen;
use crate::sweep::{
    find_switch, linspace, sweep_alpha, sweep_grid, SweepConfig, DEFAULT_CURVE_POINTS,
    DEFAULT_HEATMAP_POINTS, DEFAULT_SWITCH_TOL,
};

pub const DEFAULT_CACHE_DIR: &str = ".dispersal-harvest-cache";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Unresolved(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Config(_) => 2,
            CliError::Model(e) if e.is_input_error() => 2,
            CliError::Model(_) | CliError::Numerical(_) => 3,
            CliError::Unresolved(_) => 4,
        }
    }
}

fn write_out(path: &Path, contents: &str) -> Result<(), CliError> {
    output::write_file(path, contents).map_err(|source| CliError::Io {
        context: format!("cannot write {}", path.display()),
        source,
    })
}

#[derive(Debug, Parser)]
#[command(
    name = "dispersal-harvest",
    version,
    about = "Competing populations with carrying-capacity driven dispersal under harvesting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Run configuration (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Harvesting rate of u; overrides the config.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
}

#[derive(Debug, Args)]
struct Single {
    #[command(flatten)]
    common: Common,
    /// Harvesting rate of v; overrides the config.
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate to t_final (or a steady state), classify and write the profile.
    Simulate {
        #[command(flatten)]
        run: Single,
        #[arg(long, default_value = "profile.csv")]
        output: PathBuf,
        /// Start from a randomised initial state drawn with this seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Repeat from this many further randomised initial states and report
        /// disagreements.
        #[arg(long, default_value_t = 0)]
        restarts: u64,
        /// Exit with status 4 if the outcome is unresolved.
        #[arg(long)]
        strict: bool,
        /// Also write a matplotlib script next to the CSV.
        #[arg(long)]
        plot_script: bool,
    },
    /// Single-species stationary states u_alpha* and v_beta*.
    Steady {
        #[command(flatten)]
        run: Single,
        #[arg(long, default_value = "steady.csv")]
        output: PathBuf,
        #[arg(long)]
        plot_script: bool,
    },
    /// Principal eigenvalues of the linearisations at the semi-trivial states.
    Eigen {
        #[command(flatten)]
        run: Single,
    },
    /// alpha*, c* and the observed switch point alpha** for one or more beta.
    Bounds {
        #[command(flatten)]
        common: Common,
        /// Comma separated harvesting rates of v (the config's beta if absent).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        beta: Vec<f64>,
        /// Skip the bisection for alpha**.
        #[arg(long)]
        no_switch: bool,
        #[arg(long, default_value_t = DEFAULT_SWITCH_TOL)]
        tol: f64,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Outcome sweep: a heatmap over (alpha, beta), or a curve over alpha with --beta.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Points per axis (41 for heatmaps, 101 for curves by default).
        #[arg(long)]
        grid: Option<usize>,
        /// Fix beta and sweep alpha only.
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<f64>,
        /// Worker threads (all cores by default).
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, default_value = "sweep.csv")]
        output: PathBuf,
        /// Recompute even if a cached result exists.
        #[arg(long)]
        no_cache: bool,
        #[arg(long, default_value = DEFAULT_CACHE_DIR)]
        cache_dir: PathBuf,
        /// Exit with status 4 if any cell is unresolved.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        plot_script: bool,
    },
    /// Bisection for the alpha at which the outcome changes.
    Switch {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        beta: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_SWITCH_TOL)]
        tol: f64,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Sustainable yield of the simulated state against the maximum.
    Msy {
        #[command(flatten)]
        run: Single,
    },
    /// Integral inequality checks and ideal free pair detection.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Parses `args` (program name first), runs the command and returns the exit
/// status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load(path: &Path, alpha: Option<f64>, beta: Option<f64>) -> Result<RunConfig, CliError> {
    Ok(RunConfig::load(path)?.with_rates(alpha, beta)?)
}

fn print_record(run: &ClassifiedRun<f64>) {
    let r = &run.record;
    println!("outcome = {}", r.outcome);
    println!("avg_u = {}", num(r.avg_u));
    println!("avg_v = {}", num(r.avg_v));
    println!("yield_u = {}", num(r.yield_u));
    println!("yield_v = {}", num(r.yield_v));
    println!("alpha = {}", num(r.alpha));
    println!("beta = {}", num(r.beta));
    println!("t = {}", num(run.run.state.t));
    println!("steady = {}", run.run.steady);
    println!("rate_of_change = {}", num(run.run.rate_of_change));
    println!("clamped_mass = {}", num(run.run.clamped_mass));
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Simulate {
            run,
            output,
            seed,
            restarts,
            strict,
            plot_script,
        } => simulate(&run, &output, seed, restarts, strict, plot_script),
        Command::Steady {
            run,
            output,
            plot_script,
        } => steady(&run, &output, plot_script),
        Command::Eigen { run } => eigen(&run),
        Command::Bounds {
            common,
            beta,
            no_switch,
            tol,
            output,
        } => bounds(&common, &beta, no_switch, tol, output.as_deref()),
        Command::Sweep {
            config,
            grid,
            beta,
            jobs,
            output,
            no_cache,
            cache_dir,
            strict,
            plot_script,
        } => sweep(SweepArgs {
            config: &config,
            grid,
            beta,
            jobs,
            output: &output,
            cache: (!no_cache).then(|| Cache::new(cache_dir)),
            strict,
            plot_script,
        }),
        Command::Switch {
            config,
            beta,
            tol,
            output,
        } => switch(&config, &beta, tol, output.as_deref()),
        Command::Msy { run } => msy(&run),
        Command::Check { config } => check(&config),
    }
}

fn simulate(
    args: &Single,
    output: &Path,
    seed: Option<u64>,
    restarts: u64,
    strict: bool,
    plot_script: bool,
) -> Result<(), CliError> {
    let cfg = load(&args.common.config, args.common.alpha, args.beta)?;
    let model = cfg.model()?;
    let rates = HarvestRates::new(cfg.alpha, cfg.beta)?;
    let initial = match seed {
        Some(s) => random_initial_state(model.env(), s),
        None => cfg.initial_state(model.grid())?,
    };
    let result = simulate_and_classify(&model, initial, rates, &cfg.sim)?;
    let state = &result.run.state;
    write_out(output, &profile_csv(model.grid().centers(), &state.u, &state.v))?;
    if plot_script {
        let (path, script) = output::profile_plot_script(output);
        write_out(&path, &script)?;
    }
    print_record(&result);

    let base = seed.unwrap_or(0);
    let mut disagreements = Vec::new();
    for k in 1..=restarts {
        let s = base.wrapping_add(k);
        let other = simulate_and_classify(&model, random_initial_state(model.env(), s), rates, &cfg.sim)?;
        let r = &other.record;
        println!(
            "restart seed={s} outcome={} avg_u={} avg_v={}",
            r.outcome,
            num(r.avg_u),
            num(r.avg_v)
        );
        if r.outcome != result.record.outcome {
            disagreements.push(format!("seed {s}: {}", r.outcome));
        }
    }
    if !disagreements.is_empty() {
        eprintln!(
            "warning: outcome depends on the initial state ({} here; {})",
            result.record.outcome,
            disagreements.join(", ")
        );
    }
    if strict && result.record.outcome == Outcome::Unresolved {
        return Err(CliError::Unresolved(
            "classification unresolved at t_final".into(),
        ));
    }
    Ok(())
}

fn steady(args: &Single, output: &Path, plot_script: bool) -> Result<(), CliError> {
    let cfg = load(&args.common.config, args.common.alpha, args.beta)?;
    let model = cfg.model()?;
    let env = model.env();
    let mut fields = Vec::new();
    for (branch, name, rate) in [(Branch::U, "u", cfg.alpha), (Branch::V, "v", cfg.beta)] {
        if rate >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "harvesting rate of {name} must be below 1 for a positive stationary state"
            ))
            .into());
        }
        let k = env.k.scaled(1.0 - rate);
        let st = solve_semitrivial(&model, branch, 1.0 - rate, &k, &cfg.sim)?;
        println!("{name}_avg = {}", num(env.average(&st.field)?));
        println!("{name}_residual = {}", num(st.residual));
        println!("{name}_steps = {}", st.steps);
        fields.push(st.field);
    }
    write_out(output, &profile_csv(model.grid().centers(), &fields[0], &fields[1]))?;
    if plot_script {
        let (path, script) = output::profile_plot_script(output);
        write_out(&path, &script)?;
    }
    Ok(())
}

fn eigen(args: &Single) -> Result<(), CliError> {
    let cfg = load(&args.common.config, args.common.alpha, args.beta)?;
    let model = cfg.model()?;
    let env = model.env();
    let u_star = harvested_semitrivial(&model, Branch::U, cfg.alpha, &cfg.sim)?;
    let v_star = harvested_semitrivial(&model, Branch::V, cfg.beta, &cfg.sim)?;
    let su = principal_eigen(model.du(), &invasion_potential(env, &v_star, cfg.alpha)?)?;
    let sv = principal_eigen(model.dv(), &invasion_potential(env, &u_star, cfg.beta)?)?;
    println!("sigma1_u_invades = {}", num(su.sigma1));
    println!("sigma1_v_invades = {}", num(sv.sigma1));
    println!("u_invasion_neutral = {}", su.is_neutral());
    println!("v_invasion_neutral = {}", sv.is_neutral());
    let rep = alpha_star(&model, cfg.beta, &cfg.sim)?;
    println!("c_star = {}", num(rep.c_star));
    println!("alpha_star = {}", num(rep.alpha_star));
    match invasion_threshold(&model, cfg.beta, &cfg.sim, 1e-10)? {
        Some(a) => {
            println!("alpha_sign_change = {}", num(a));
            println!("c_sign_change = {}", num((1.0 - a) / (1.0 - cfg.beta)));
        }
        None => {
            println!("alpha_sign_change = none");
            println!("c_sign_change = none");
        }
    }
    Ok(())
}

fn bounds(
    common: &Common,
    betas: &[f64],
    no_switch: bool,
    tol: f64,
    output: Option<&Path>,
) -> Result<(), CliError> {
    let cfg = load(&common.config, common.alpha, None)?;
    let betas = if betas.is_empty() {
        vec![cfg.beta]
    } else {
        betas.to_vec()
    };
    for &b in &betas {
        cfg.clone().with_rates(None, Some(b))?;
    }
    let model = cfg.model()?;
    if let PairDetection::Accepted(p) = detect_ideal_free_pair(&model) {
        eprintln!(
            "ideal free pair: K = {} P + {} Q (residual {:e})",
            num(p.gamma),
            num(p.delta),
            p.residual
        );
    }
    let sweep_cfg = SweepConfig::new(cfg.sim, cfg.initial_state(model.grid())?);
    let mut csv = format!("{BOUNDS_HEADER}\n");
    for &beta in &betas {
        let rep = alpha_star(&model, beta, &cfg.sim)?;
        let switch = if no_switch {
            None
        } else {
            match find_switch(&model, beta, &sweep_cfg, tol) {
                Ok(s) => Some(s.alpha_double_star),
                Err(e @ Error::NoSwitch { .. }) => {
                    eprintln!("note: {e}");
                    None
                }
                Err(e) => return Err(e.into()),
            }
        };
        if let Some(a) = rep.alpha_star_ifp {
            eprintln!("beta = {}: ideal free pair estimate alpha_star = {}", num(beta), num(a));
        }
        csv.push_str(&format!(
            "{},{},{},{}\n",
            num(beta),
            num(rep.c_star),
            num(rep.alpha_star),
            output::opt_num(switch)
        ));
    }
    emit(output, &csv)
}

fn emit(output: Option<&Path>, csv: &str) -> Result<(), CliError> {
    match output {
        Some(path) => write_out(path, csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

struct SweepArgs<'a> {
    config: &'a Path,
    grid: Option<usize>,
    beta: Option<f64>,
    jobs: Option<usize>,
    output: &'a Path,
    cache: Option<Cache>,
    strict: bool,
    plot_script: bool,
}

fn sweep(args: SweepArgs<'_>) -> Result<(), CliError> {
    let cfg = load(args.config, None, args.beta)?;
    let points = args.grid.unwrap_or(if args.beta.is_some() {
        DEFAULT_CURVE_POINTS
    } else {
        DEFAULT_HEATMAP_POINTS
    });
    if points < 2 {
        return Err(ConfigError::Invalid {
            key: "grid".into(),
            line: None,
            message: "needs at least 2 points".into(),
        }
        .into());
    }
    let key = Cache::key(&[
        "sweep",
        &cfg.canonical(),
        &points.to_string(),
        &args.beta.map(num).unwrap_or_default(),
    ]);
    let cached = args.cache.as_ref().and_then(|c| c.get(&key));
    let csv = match cached {
        Some(csv) => {
            eprintln!("cache hit {key}");
            csv
        }
        None => {
            let model = cfg.model()?;
            let mut sweep_cfg = SweepConfig::new(cfg.sim, cfg.initial_state(model.grid())?);
            sweep_cfg.jobs = args.jobs;
            let axis = linspace(0.0, 1.0, points);
            let csv = match args.beta {
                Some(beta) => {
                    let recs = sweep_alpha(&model, beta, &axis, &sweep_cfg)?;
                    sweep_csv(axis.iter().zip(&recs).map(|(&a, r)| (a, beta, r)))
                }
                None => {
                    let grid = sweep_grid(&model, &axis, &axis, &sweep_cfg)?;
                    for (a, b, r) in grid.cells() {
                        if let Err(e) = r {
                            eprintln!("cell alpha={} beta={} failed: {e}", num(a), num(b));
                        }
                    }
                    sweep_csv(grid.cells())
                }
            };
            if let Some(c) = &args.cache {
                if !csv.contains(",,,,") {
                    c.put(&key, &csv).map_err(|source| CliError::Io {
                        context: "cannot write cache".into(),
                        source,
                    })?;
                }
            }
            csv
        }
    };
    write_out(args.output, &csv)?;
    if args.plot_script {
        let (path, script) = output::sweep_plot_script(args.output);
        write_out(&path, &script)?;
    }
    let failed = csv.lines().filter(|l| l.contains(",,,,")).count();
    let unresolved = csv.lines().filter(|l| l.ends_with(",unresolved")).count() - failed;
    println!("cells = {}", csv.lines().count() - 1);
    for o in Outcome::ALL {
        let n = csv.lines().filter(|l| l.ends_with(&format!(",{o}"))).count();
        println!("{o} = {n}");
    }
    if failed > 0 {
        return Err(CliError::Numerical(format!("{failed} sweep cells failed")));
    }
    if args.strict && unresolved > 0 {
        return Err(CliError::Unresolved(format!("{unresolved} cells unresolved")));
    }
    Ok(())
}

fn switch(config: &Path, betas: &[f64], tol: f64, output: Option<&Path>) -> Result<(), CliError> {
    let cfg = load(config, None, None)?;
    let betas = if betas.is_empty() {
        vec![cfg.beta]
    } else {
        betas.to_vec()
    };
    for &b in &betas {
        cfg.clone().with_rates(None, Some(b))?;
    }
    let model = cfg.model()?;
    let sweep_cfg = SweepConfig::new(cfg.sim, cfg.initial_state(model.grid())?);
    let mut csv = format!("{SWITCH_HEADER}\n");
    for &beta in &betas {
        let s = find_switch(&model, beta, &sweep_cfg, tol)?;
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            num(beta),
            num(s.alpha_double_star),
            num(s.bracket_width),
            s.below,
            s.above
        ));
    }
    emit(output, &csv)
}

fn msy(args: &Single) -> Result<(), CliError> {
    let cfg = load(&args.common.config, args.common.alpha, args.beta)?;
    let model: CompetitionModel<f64> = cfg.model()?;
    let rates = HarvestRates::new(cfg.alpha, cfg.beta)?;
    let result = simulate_and_classify(&model, cfg.initial_state(model.grid())?, rates, &cfg.sim)?;
    let y = sustainable_yield(&model, &result.run.state, rates, &cfg.sim)?;
    println!("outcome = {}", result.record.outcome);
    println!("sy = {}", num(y.sy));
    println!("msy_reference = {}", num(y.msy_reference));
    println!("ratio = {}", num(y.sy / y.msy_reference));
    println!("stationary = {}", y.stationary);
    println!("residual = {}", num(y.residual));
    if !y.stationary {
        eprintln!("warning: state is not stationary; the yield is not sustainable");
    }
    Ok(())
}

fn check(config: &Path) -> Result<(), CliError> {
    let cfg = load(config, None, None)?;
    let model = cfg.model()?;
    match detect_ideal_free_pair(&model) {
        PairDetection::Accepted(p) => println!(
            "ideal_free_pair = yes gamma={} delta={} residual={:e}",
            num(p.gamma),
            num(p.delta),
            p.residual
        ),
        PairDetection::Rejected { fit, reason } => println!(
            "ideal_free_pair = no ({reason}; gamma={} delta={} residual={:e})",
            num(fit.gamma),
            num(fit.delta),
            fit.residual
        ),
    }
    let checks = inequality_suite(&model, &cfg.sim)?;
    let mut violated = Vec::new();
    for c in &checks {
        println!("{} {} margin={}  {}", c.name, c.status, num(c.margin), c.statement);
        if c.status == CheckStatus::Violated {
            violated.push(c.name);
        }
    }
    if violated.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "inequalities violated: {}",
            violated.join(", ")
        )))
    }
}
