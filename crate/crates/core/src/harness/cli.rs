//! `rowsolve` command line.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::matrix::{market, Axis, Matrix};
use crate::partition::{Partition, RngStream};
use crate::problems::{self, Descriptor};
use crate::solvers::{ExecMode, Method, PreparedSolver, SolverConfig, StepSize};
use crate::theory;

use super::aggregate::write_ensemble;
use super::bench::run_bench;
use super::config::read_config;
use super::io::{save_instance, write_pgm, write_vector, InstanceInfo};
use super::trace::write_trace;

#[derive(Parser, Debug)]
#[command(name = "rowsolve", version, about = "Randomized extended multiple row solvers")]
struct Cli {
    /// Log verbosity (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a test problem.
    Gen {
        #[command(subcommand)]
        which: GenKind,
    },
    /// Run one method once and write its trace.
    Solve(SolveArgs),
    /// Run several trials of several methods and write an ensemble.
    Bench(BenchArgs),
    /// Print the rate constants for a matrix and partition.
    Rates(RatesArgs),
    /// Check the two spectral inequalities on random vectors.
    Lemmas(LemmasArgs),
}

#[derive(Subcommand, Debug)]
enum GenKind {
    /// `m = 30 n`, `r = n / 2`, `kappa = n / 10`.
    Example1 {
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// General `U D V^T` instance.
    Udv {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        kappa: f64,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parallel-beam tomography with a disk phantom.
    Tomo {
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, default_value_t = 24)]
        angles: usize,
        #[arg(long, default_value_t = 24)]
        rays: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Solver settings shared by `solve` and `bench`. Unset flags fall back to
/// the config file, then to defaults.
#[derive(Args, Debug, Default)]
struct SolverFlags {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(long)]
    rhs: Option<PathBuf>,
    #[arg(long)]
    xstar: Option<PathBuf>,
    #[arg(long)]
    tau_rows: Option<usize>,
    #[arg(long)]
    tau_cols: Option<usize>,
    #[arg(long)]
    max_iters: Option<u64>,
    #[arg(long)]
    rse_tol: Option<f64>,
    #[arg(long)]
    residual_tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    exec_mode: Option<ExecMode>,
    /// REABK step size: `auto` or a positive number.
    #[arg(long)]
    alpha: Option<StepSize>,
    /// Pin `y = 0` (the system is known to be consistent).
    #[arg(long)]
    consistent: bool,
    #[arg(long)]
    trace_stride: Option<u64>,
    #[arg(long)]
    recompute_every: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    trial: Option<u64>,
    /// Also compute rate constants and store them in the metadata.
    #[arg(long)]
    rates: bool,
    /// Write the final iterate here.
    #[arg(long)]
    x_out: Option<PathBuf>,
    #[command(flatten)]
    flags: SolverFlags,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Comma-separated method names.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    #[arg(long)]
    trials: Option<u64>,
    #[command(flatten)]
    flags: SolverFlags,
}

#[derive(Args, Debug)]
struct RatesArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long, default_value_t = 1)]
    tau_rows: usize,
    #[arg(long, default_value_t = 1)]
    tau_cols: usize,
}

#[derive(Args, Debug)]
struct LemmasArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Flag, then config file entry, then default.
struct Layered {
    file: BTreeMap<String, String>,
}

impl Layered {
    fn load(path: Option<&Path>) -> Result<Self> {
        Ok(Layered { file: path.map(read_config).transpose()?.unwrap_or_default() })
    }

    fn get<T: FromStr>(&mut self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        let from_file = self.file.remove(key);
        if flag.is_some() {
            return Ok(flag);
        }
        from_file
            .map(|v| v.parse::<T>().map_err(|_| Error::usage(format!("config key `{key}`: bad value `{v}`"))))
            .transpose()
    }

    fn finish(self) -> Result<()> {
        match self.file.keys().next() {
            Some(k) => Err(Error::usage(format!("unknown config key `{k}`"))),
            None => Ok(()),
        }
    }
}

struct Resolved {
    config: SolverConfig,
    matrix: PathBuf,
    rhs: PathBuf,
    xstar: Option<PathBuf>,
    out: Option<PathBuf>,
}

fn resolve(flags: SolverFlags, layered: &mut Layered, method: Method) -> Result<Resolved> {
    let mut c = SolverConfig::new(method);
    let need = |p: Option<PathBuf>, name: &str| p.ok_or_else(|| Error::usage(format!("--{name} is required")));
    let matrix = need(layered.get(flags.matrix, "matrix")?, "matrix")?;
    let rhs = need(layered.get(flags.rhs, "rhs")?, "rhs")?;
    let xstar = layered.get(flags.xstar, "xstar")?;
    let out = layered.get(flags.out, "out")?;
    c.tau_rows = layered.get(flags.tau_rows, "tau_rows")?.unwrap_or(c.tau_rows);
    c.tau_cols = layered.get(flags.tau_cols, "tau_cols")?.unwrap_or(c.tau_cols);
    c.max_iters = layered.get(flags.max_iters, "max_iters")?.unwrap_or(c.max_iters);
    c.rse_tol = layered.get(flags.rse_tol, "rse_tol")?;
    c.residual_tol = layered.get(flags.residual_tol, "residual_tol")?;
    c.seed = layered.get(flags.seed, "seed")?.unwrap_or(c.seed);
    c.exec_mode = layered.get(flags.exec_mode, "exec_mode")?.unwrap_or(c.exec_mode);
    c.reabk_alpha = layered.get(flags.alpha, "alpha")?.unwrap_or(c.reabk_alpha);
    c.consistent_mode = layered.get(flags.consistent.then_some(true), "consistent")?.unwrap_or(false);
    c.trace_stride = layered.get(flags.trace_stride, "trace_stride")?.unwrap_or(c.trace_stride);
    c.recompute_every = layered.get(flags.recompute_every, "recompute_every")?.unwrap_or(c.recompute_every);
    Ok(Resolved { config: c, matrix, rhs, xstar, out })
}

fn load_system(r: &Resolved) -> Result<(Matrix, Vec<f64>, Option<Vec<f64>>, Option<Descriptor>)> {
    let a = market::read(&r.matrix)?;
    let b = super::io::read_vector(&r.rhs)?;
    let x = r.xstar.as_deref().map(super::io::read_vector).transpose()?;
    let info = r.matrix.parent().map(|d| d.join("instance.json")).filter(|p| p.exists());
    let descriptor = match info {
        Some(p) => std::fs::read_to_string(&p)
            .ok()
            .and_then(|s| serde_json::from_str::<InstanceInfo>(&s).ok())
            .map(|i| i.descriptor),
        None => None,
    };
    Ok((a, b, x, descriptor))
}

fn cmd_gen(which: GenKind) -> Result<()> {
    let (inst, out, tomo_n) = match which {
        GenKind::Example1 { n, delta, seed, out } => (problems::example1(n, delta, seed)?, out, None),
        GenKind::Udv { m, n, r, kappa, delta, seed, out } => {
            (problems::udv_instance(m, n, r, kappa, delta, seed)?, out, None)
        }
        GenKind::Tomo { n, angles, rays, seed, out } => (problems::tomography(n, angles, rays, seed)?, out, Some(n)),
    };
    save_instance(&inst, &out)?;
    if let (Some(n), Some(x)) = (tomo_n, &inst.x_star) {
        write_pgm(x, n, &out.join("phantom.pgm"))?;
    }
    println!("wrote {}x{} instance to {}", inst.a.rows(), inst.a.cols(), out.display());
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> Result<()> {
    let mut layered = Layered::load(args.flags.config.as_deref())?;
    let method = layered.get(args.method, "method")?.unwrap_or(Method::Ermr);
    let trial = layered.get(args.trial, "trial")?.unwrap_or(0);
    let mut r = resolve(args.flags, &mut layered, method)?;
    layered.finish()?;
    r.config.trial = trial;
    let out = r.out.clone().unwrap_or_else(|| PathBuf::from("trace.csv"));
    let (a, b, x_star, descriptor) = load_system(&r)?;
    let oracle = match (&x_star, method.solves_homogeneous()) {
        (Some(_), true) => Some(theory::range_null_split(&a, &b)?.1),
        (x, false) => x.clone(),
        (None, true) => None,
    };
    let prepared = PreparedSolver::new(r.config.clone(), &a, &b)?;
    let mut outcome = prepared.run_trial(trial, oracle.as_deref())?;
    outcome.trace.meta.instance = descriptor;
    if args.rates {
        let view = prepared.view();
        outcome.trace.meta.rates = Some(theory::convergence_rates(&a, view.rows, view.cols)?);
    }
    write_trace(&outcome.trace, &out)?;
    if let Some(p) = &args.x_out {
        let v = if method.solves_homogeneous() { &outcome.y } else { &outcome.x };
        write_vector(v, p)?;
    }
    let rse = outcome.trace.meta.final_rse.map_or("n/a".to_string(), |v| format!("{v:.3e}"));
    println!("{method}: {} iterations, stop={:?}, rse={rse}, trace {}", outcome.iterations, outcome.stop, out.display());
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let mut layered = Layered::load(args.flags.config.as_deref())?;
    let methods: Vec<Method> = match args.methods {
        Some(m) => {
            layered.file.remove("methods");
            m
        }
        None => match layered.file.remove("methods") {
            Some(v) => v.split(',').map(|s| s.trim().parse()).collect::<Result<_>>()?,
            None => vec![Method::Rmr, Method::Ermr],
        },
    };
    let trials = layered.get(args.trials, "trials")?.unwrap_or(10);
    let r = resolve(args.flags, &mut layered, methods.first().copied().unwrap_or(Method::Ermr))?;
    layered.finish()?;
    let out = r.out.clone().unwrap_or_else(|| PathBuf::from("bench"));
    let (a, b, x_star, descriptor) = load_system(&r)?;
    let x_star = x_star.ok_or_else(|| Error::usage("bench needs --xstar to score trials"))?;
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let results = run_bench(&a, &b, &x_star, &r.config, &methods, trials)?;
    for (method, ens) in &results {
        for t in &ens.traces {
            let mut t = t.clone();
            t.meta.instance = descriptor.clone();
            write_trace(&t, &out.join(format!("{method}_trial{:02}.csv", t.meta.trial)))?;
        }
        if let Some(f) = ens.final_row() {
            println!("{method}: final median rse {:.3e} (min {:.3e}, max {:.3e})", f.rse_median, f.rse_min, f.rse_max);
        }
    }
    let sets: Vec<_> = results.iter().map(|(m, e)| (*m, e)).collect();
    write_ensemble(&sets, &out.join("ensemble.csv"))
}

fn cmd_rates(args: RatesArgs) -> Result<()> {
    let a = market::read(&args.matrix)?;
    let rows = Partition::contiguous(a.rows(), args.tau_rows)?.attach_norms(&a, Axis::Rows)?;
    let cols = Partition::contiguous(a.cols(), args.tau_cols)?.attach_norms(&a, Axis::Cols)?;
    let rep = theory::convergence_rates(&a, &rows, &cols)?;
    println!("{}", serde_json::to_string_pretty(&rep).expect("report serializes"));
    Ok(())
}

fn cmd_lemmas(args: LemmasArgs) -> Result<()> {
    let a = market::read(&args.matrix)?;
    let rep = theory::lemma_checks(&a, args.trials, &mut RngStream::new(args.seed))?;
    println!("{}", serde_json::to_string_pretty(&rep).expect("report serializes"));
    if rep.passed() {
        Ok(())
    } else {
        Err(Error::data("lemma violations found"))
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
    let result = match cli.cmd {
        Command::Gen { which } => cmd_gen(which),
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Rates(a) => cmd_rates(a),
        Command::Lemmas(a) => cmd_lemmas(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("rowsolve: {e}");
            e.exit_code()
        }
    }
}
