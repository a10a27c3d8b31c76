//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::bound::{count_negative, tune_threshold, BoundStateReport};
use crate::config::{fmt_f64, ConfigError, FlatConfig};
use crate::levinson::{report, sweep, verify, SummaryRow, VerifyOptions, TOL_LOG, TOL_POWER};
use crate::potential::{PotentialSpec, POTENTIAL_KEYS};
use crate::radial::{DEFAULT_STEPS, MIN_STEPS};
use crate::scattering::{log_grid, phase_curve_unchecked, DEFAULT_KA_MAX, DEFAULT_KA_MIN, DEFAULT_K_POINTS};
use crate::specfun;

pub const THREADS_ENV: &str = "LEVINSON2D_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

const RUN_KEYS: &[&str] = &[
    "channels.m_max",
    "grid.k_min",
    "grid.k_max",
    "grid.k_points",
    "grid.r_steps",
    "tolerances.verdict",
    "tolerances.verdict_log",
    "output.dir",
];

#[derive(Debug, Parser)]
#[command(name = "levinson2d", version, about = "Phase shifts, bound states and Levinson checks for 2D central potentials")]
pub struct Cli {
    /// Run configuration (flat `key = value` document)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory [default: `output.dir` from the config, else `out`]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Unwrapped phase shifts, one CSV per channel
    Phases,
    /// Bound-state reports per channel
    Bound {
        /// Tune the strength to the zero-energy threshold of channel `m=<n>` first
        #[arg(long, value_name = "m=<n>")]
        at_threshold: Option<String>,
    },
    /// Levinson verdict per channel
    Verify,
    /// Verdicts over a range of strengths k0 a
    Sweep {
        /// `lo:hi:n`, inclusive and evenly spaced
        #[arg(long)]
        depths: String,
        /// Channels [default: 0..=channels.m_max]
        #[arg(long, value_delimiter = ',')]
        m: Vec<u32>,
    },
    /// Special-function value tables as CSV on stdout
    Specfun {
        #[arg(long, value_enum, default_value = "j")]
        function: SpecFunction,
        #[arg(long, default_value_t = 0)]
        m: i32,
        #[arg(long, default_value_t = 0.1)]
        x_min: f64,
        #[arg(long, default_value_t = 10.0)]
        x_max: f64,
        /// Table rows (number of zeros for `j-zero`)
        #[arg(long, default_value_t = 50)]
        points: usize,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SpecFunction {
    J,
    Y,
    Jp,
    Yp,
    K,
    Kp,
    KLogDerivative,
    JZero,
}

/// Parsed and validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub potential: PotentialSpec,
    pub m_max: u32,
    pub k_min: f64,
    pub k_max: f64,
    pub k_points: usize,
    pub r_steps: usize,
    pub tol_power: f64,
    pub tol_log: f64,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_flat(cfg: &FlatConfig) -> Result<Self, ConfigError> {
        let known: Vec<&str> = POTENTIAL_KEYS.iter().chain(RUN_KEYS).copied().collect();
        cfg.check_known(&known)?;
        let potential = PotentialSpec::from_config(cfg)?;
        let a = potential.cutoff;
        let m_max = cfg.parse_value("channels.m_max")?.unwrap_or(3);
        let k_min: f64 = cfg.parse_value("grid.k_min")?.unwrap_or(DEFAULT_KA_MIN / a);
        let k_max: f64 = cfg.parse_value("grid.k_max")?.unwrap_or(DEFAULT_KA_MAX / a);
        let k_points = cfg.parse_value("grid.k_points")?.unwrap_or(DEFAULT_K_POINTS);
        let r_steps = cfg.parse_value("grid.r_steps")?.unwrap_or(DEFAULT_STEPS);
        let tol_power: f64 = cfg.parse_value("tolerances.verdict")?.unwrap_or(TOL_POWER);
        let tol_log: f64 = cfg.parse_value("tolerances.verdict_log")?.unwrap_or(TOL_LOG);
        if !(k_min > 0.0 && k_min.is_finite()) {
            return Err(ConfigError::invalid("grid.k_min", "must be positive"));
        }
        if !(k_max > k_min && k_max.is_finite()) {
            return Err(ConfigError::invalid("grid.k_max", "must exceed grid.k_min"));
        }
        if k_points < 2 {
            return Err(ConfigError::invalid("grid.k_points", "need at least 2 points"));
        }
        if r_steps < MIN_STEPS {
            return Err(ConfigError::invalid("grid.r_steps", format!("need at least {MIN_STEPS}")));
        }
        for (key, tol) in [("tolerances.verdict", tol_power), ("tolerances.verdict_log", tol_log)] {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(ConfigError::invalid(key, "must be positive"));
            }
        }
        Ok(RunConfig {
            potential,
            m_max,
            k_min,
            k_max,
            k_points,
            r_steps,
            tol_power,
            tol_log,
            output_dir: cfg.get("output.dir").map(|d| cfg.resolve_path(d)),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_flat(&FlatConfig::load(path)?)
    }

    pub fn verify_options(&self) -> VerifyOptions {
        let a = self.potential.cutoff;
        VerifyOptions {
            ka_min: self.k_min * a,
            ka_max: self.k_max * a,
            k_points: self.k_points,
            r_steps: self.r_steps,
            tol_power: self.tol_power,
            tol_log: self.tol_log,
        }
    }

    pub fn k_grid(&self) -> Vec<f64> {
        log_grid(self.k_min, self.k_max, self.k_points).expect("validated grid")
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Compute(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => EXIT_CONFIG,
            CliError::Compute(_) | CliError::Io { .. } => EXIT_FAIL,
        }
    }
}

fn compute<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Compute(e.to_string())
}

struct Output {
    dir: PathBuf,
    written: Vec<String>,
}

impl Output {
    fn new(dir: PathBuf) -> Result<Self, CliError> {
        fs::create_dir_all(&dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
        Ok(Output { dir, written: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|source| CliError::Io { path, source })?;
        self.written.push(name.to_string());
        Ok(())
    }
}

#[derive(Serialize)]
struct RunMeta<'a> {
    command: &'a str,
    version: &'a str,
    threads: usize,
    config: Option<String>,
    files: &'a [String],
    exit_code: i32,
    elapsed_seconds: f64,
    finished_unix_seconds: u64,
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let threads = cli.threads.unwrap_or(0);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start {threads} threads: {e}");
            return EXIT_FAIL;
        }
    };
    let started = Instant::now();
    let result = pool.install(|| dispatch(&cli));
    match result {
        Ok((code, out, name)) => {
            if let Some(mut out) = out {
                let files = out.written.clone();
                let meta = RunMeta {
                    command: name,
                    version: env!("CARGO_PKG_VERSION"),
                    threads: pool.current_num_threads(),
                    config: cli.config.as_ref().map(|p| p.display().to_string()),
                    files: &files,
                    exit_code: code,
                    elapsed_seconds: started.elapsed().as_secs_f64(),
                    finished_unix_seconds: std::time::SystemTime::now()
                        .duration_since(std::time::UNIX_EPOCH)
                        .map_or(0, |d| d.as_secs()),
                };
                let text = serde_json::to_string_pretty(&meta).expect("metadata serialises");
                if let Err(e) = out.write("run_meta.json", &text) {
                    eprintln!("error: {e}");
                    return EXIT_FAIL;
                }
            }
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

type Dispatched = (i32, Option<Output>, &'static str);

fn dispatch(cli: &Cli) -> Result<Dispatched, CliError> {
    if let Command::Specfun { function, m, x_min, x_max, points } = &cli.command {
        print!("{}", specfun_table(*function, *m, *x_min, *x_max, *points)?);
        return Ok((EXIT_OK, None, "specfun"));
    }
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("--config <path> is required".into()))?;
    let cfg = RunConfig::load(path)?;
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let mut out = Output::new(dir)?;
    let (code, name) = match &cli.command {
        Command::Phases => (cmd_phases(&cfg, &mut out)?, "phases"),
        Command::Bound { at_threshold } => (cmd_bound(&cfg, at_threshold.as_deref(), &mut out)?, "bound"),
        Command::Verify => (cmd_verify(&cfg, &mut out)?, "verify"),
        Command::Sweep { depths, m } => (cmd_sweep(&cfg, depths, m, &mut out)?, "sweep"),
        Command::Specfun { .. } => unreachable!(),
    };
    Ok((code, Some(out), name))
}

fn cmd_phases(cfg: &RunConfig, out: &mut Output) -> Result<i32, CliError> {
    let grid = cfg.k_grid();
    let curves = (0..=cfg.m_max)
        .into_par_iter()
        .map(|m| phase_curve_unchecked(&cfg.potential, m, &grid, cfg.r_steps, true))
        .collect::<Result<Vec<_>, _>>()
        .map_err(compute)?;
    let mut code = EXIT_OK;
    for c in &curves {
        out.write(&format!("phases_m{}.csv", c.m), &c.to_csv())?;
        if let Err(e) = c.check_continuity() {
            eprintln!("m = {}: {e}", c.m);
            code = EXIT_FAIL;
        }
    }
    Ok(code)
}

#[derive(Serialize)]
struct BoundOutput<'a> {
    /// `a sqrt(max|V|)` of the potential the reports refer to
    strength: f64,
    at_threshold: Option<u32>,
    reports: &'a [BoundStateReport],
}

fn parse_at_threshold(text: &str) -> Result<u32, CliError> {
    let bad = || CliError::Usage(format!("--at-threshold expects `m=<n>`, got `{text}`"));
    let (key, value) = text.split_once('=').ok_or_else(bad)?;
    if key.trim() != "m" {
        return Err(bad());
    }
    value.trim().parse().map_err(|_| bad())
}

fn cmd_bound(cfg: &RunConfig, at_threshold: Option<&str>, out: &mut Output) -> Result<i32, CliError> {
    let mut spec = cfg.potential.clone();
    let tuned = match at_threshold {
        None => None,
        Some(text) => {
            let m = parse_at_threshold(text)?;
            let s = tune_threshold(&spec, m, spec.strength(), cfg.r_steps).map_err(compute)?;
            spec = spec.with_strength(s);
            Some(m)
        }
    };
    let reports = (0..=cfg.m_max)
        .into_par_iter()
        .map(|m| count_negative(&spec, m, cfg.r_steps))
        .collect::<Result<Vec<_>, _>>()
        .map_err(compute)?;
    let doc = BoundOutput {
        strength: spec.strength(),
        at_threshold: tuned,
        reports: &reports,
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("report serialises");
    text.push('\n');
    out.write("bound.json", &text)?;
    for r in &reports {
        println!(
            "m = {}: n_minus = {}, zero_energy = {}, n_total = {}",
            r.m,
            r.n_minus,
            r.zero_energy.as_str(),
            r.n_total
        );
    }
    Ok(EXIT_OK)
}

fn cmd_verify(cfg: &RunConfig, out: &mut Output) -> Result<i32, CliError> {
    let options = cfg.verify_options();
    let depth = cfg.potential.strength();
    let rows = (0..=cfg.m_max)
        .into_par_iter()
        .map(|m| verify(&cfg.potential, m, &options).map(|v| SummaryRow::from_verdict(depth, &v)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(compute)?;
    let summary = report(rows, Vec::new());
    out.write("levinson.json", &summary.to_json())?;
    let text = summary.to_text();
    out.write("levinson.txt", &text)?;
    print!("{text}");
    Ok(summary.overall.exit_code())
}

/// `lo:hi:n` as `n` evenly spaced values including both ends.
pub fn parse_depths(text: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("--depths expects `lo:hi:n`, got `{text}`"));
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| format!("bad lower depth `{}`", parts[0]))?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| format!("bad upper depth `{}`", parts[1]))?;
    let n: usize = parts[2].trim().parse().map_err(|_| format!("bad count `{}`", parts[2]))?;
    if n == 0 || !(lo >= 0.0) || !(hi >= lo) || !hi.is_finite() {
        return Err(format!("--depths needs 0 <= lo <= hi and n >= 1, got `{text}`"));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n)
        .map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect())
}

fn cmd_sweep(cfg: &RunConfig, depths: &str, m: &[u32], out: &mut Output) -> Result<i32, CliError> {
    let depths = parse_depths(depths).map_err(CliError::Usage)?;
    let m_list: Vec<u32> = if m.is_empty() { (0..=cfg.m_max).collect() } else { m.to_vec() };
    let table = sweep(&cfg.potential, &m_list, &depths, &cfg.verify_options());
    let summary = report(table.rows, table.crossings);
    out.write("sweep.json", &summary.to_json())?;
    let text = summary.to_text();
    out.write("sweep.txt", &text)?;
    print!("{text}");
    Ok(summary.overall.exit_code())
}

fn specfun_table(function: SpecFunction, m: i32, x_min: f64, x_max: f64, points: usize) -> Result<String, CliError> {
    if let SpecFunction::JZero = function {
        let mut s = String::from("m,s,zero\n");
        for i in 1..=points as u32 {
            let z = specfun::bessel_j_zero(m, i).map_err(|e| CliError::Usage(e.to_string()))?;
            s.push_str(&format!("{m},{i},{}\n", fmt_f64(z)));
        }
        return Ok(s);
    }
    let xs = if points == 1 {
        vec![x_min]
    } else {
        log_grid(x_min, x_max, points).map_err(|e| CliError::Usage(e.to_string()))?
    };
    let f: fn(i32, f64) -> Result<f64, crate::error::DomainError> = match function {
        SpecFunction::J => specfun::bessel_j,
        SpecFunction::Y => specfun::bessel_y,
        SpecFunction::Jp => specfun::bessel_j_prime,
        SpecFunction::Yp => specfun::bessel_y_prime,
        SpecFunction::K => specfun::bessel_k,
        SpecFunction::Kp => specfun::bessel_k_prime,
        SpecFunction::KLogDerivative => specfun::bessel_k_log_derivative,
        SpecFunction::JZero => unreachable!(),
    };
    let mut s = String::from("m,x,value\n");
    for x in xs {
        let v = f(m, x).map_err(|e| CliError::Usage(e.to_string()))?;
        s.push_str(&format!("{m},{},{}\n", fmt_f64(x), fmt_f64(v)));
    }
    Ok(s)
}
