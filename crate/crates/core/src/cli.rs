//! Command-line front end. Exit codes: 0 success, 2 configuration error,
//! 3 numerical failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::characteristics::{match_markov, mean_laplace, EpidemicCharacteristics, DEFAULT_RHO_TOL};
use crate::config::RunConfig;
use crate::error::Error;
use crate::lln::{integrate_law, susceptibles_at, MacroState};
use crate::markov::{sir_cdf, sir_mean};
use crate::profiles::InfectivityLaw;
use crate::simulation::ReplicateSet;
use crate::solver::{solve_cdf, solve_tilted_cdf, CdfGrid};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "extinction", version, about = "Extinction time of a subcritical epidemic")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Override a configuration entry, e.g. `--set model.peak_a=0.16`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// R_eff, decay rate and rate bound of the configured law.
    Characteristics {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Extinction-time CDF on the solver grid.
    Cdf {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mean extinction time.
    Mean {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// CDF of the configured law next to the Markov SIR law with the same
    /// R_eff and decay rate. Also writes `<out stem>.json`.
    Compare {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo estimate of the extinction-time CDF.
    Simulate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Kermack–McKendrick trajectory and the susceptible fraction at `t0`.
    Lln {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        t0: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidLaw(_) => CliError::Config(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// `%.9g`-style formatting.
pub fn fmt_g9(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.8e}");
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..9).contains(&exp) {
        let mant = trim_zeros(mant);
        return format!("{mant}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let decimals = (8 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn csv(header: &str, rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(fmt_g9).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

fn pretty(v: &Value) -> String {
    // serde_json's default map is ordered by key
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s
}

fn write_file(path: &Path, body: &str) -> CliResult<()> {
    fs::write(path, body).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

fn load(args: &ConfigArgs) -> CliResult<(RunConfig, InfectivityLaw)> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let cfg = RunConfig::from_json_with_overrides(&text, &args.overrides)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.config.display())))?;
    let law = cfg.law().map_err(|e| CliError::Config(e.to_string()))?;
    if cfg.ancestors.m == 0 {
        return Err(CliError::Config("ancestors.M must be at least 1".into()));
    }
    Ok((cfg, law))
}

fn characteristics(cfg: &RunConfig, law: &InfectivityLaw) -> CliResult<EpidemicCharacteristics> {
    Ok(EpidemicCharacteristics::of(law, &cfg.solver.quad, DEFAULT_RHO_TOL)?)
}

/// CDF for `M` ancestors, tilted or not.
fn forest_cdf(cfg: &RunConfig, law: &InfectivityLaw) -> CliResult<CdfGrid> {
    let s = &cfg.solver;
    let single = match cfg.ancestors.tilt() {
        Some(basis) => solve_tilted_cdf(law, s.n, s.horizon, &s.quad, basis)?,
        None => solve_cdf(law, s.n, s.horizon, &s.quad)?,
    };
    Ok(single.power(cfg.ancestors.m)?.with_interp(s.interp))
}

pub fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Characteristics { cfg } => {
            let (cfg, law) = load(&cfg)?;
            let c = characteristics(&cfg, &law)?;
            let residual = mean_laplace(&law, c.rho, &cfg.solver.quad) - 1.0;
            print!(
                "{}",
                pretty(&json!({
                    "r_eff": c.r_eff,
                    "rho": c.rho,
                    "lambda_hat_star": c.lambda_hat_star,
                    "s_bar": c.s_bar,
                    "residual": residual,
                }))
            );
        }
        Command::Cdf { cfg, out } => {
            let (cfg, law) = load(&cfg)?;
            let grid = forest_cdf(&cfg, &law)?;
            let rows = (0..grid.len()).map(|k| vec![grid.time(k), grid.values[k]]);
            write_file(&out, &csv("t,F", rows))?;
        }
        Command::Mean { cfg } => {
            let (cfg, law) = load(&cfg)?;
            let rho = characteristics(&cfg, &law)?.rho;
            let grid = forest_cdf(&cfg, &law)?;
            let m = grid.mean(cfg.solver.lambda_cutoff, Some(rho))?;
            print!(
                "{}",
                pretty(&json!({
                    "mean_days": m.mean_days,
                    "tail_mass": m.tail_mass,
                    "truncation_bound": m.truncation_bound,
                    "truncation_dominates": m.truncation_dominates,
                    "n": cfg.solver.n,
                    "lambda_cutoff": cfg.solver.lambda_cutoff,
                }))
            );
        }
        Command::Compare { cfg, out } => {
            let (cfg, law) = load(&cfg)?;
            let c = characteristics(&cfg, &law)?;
            let markov = match_markov(c.r_eff, c.rho)?;
            let grid = forest_cdf(&cfg, &law)?;
            let m = cfg.ancestors.m as i32;
            let markov_col: Vec<f64> = (0..grid.len())
                .map(|k| sir_cdf(c.r_eff, c.rho, grid.time(k)).map(|v| v.powi(m)))
                .collect::<crate::error::Result<_>>()?;
            let mean_vi = grid.mean(cfg.solver.lambda_cutoff, Some(c.rho))?;
            let mean_markov = if m == 1 {
                sir_mean(c.r_eff, c.rho)?
            } else {
                let last = ((cfg.solver.lambda_cutoff * grid.n as f64).floor() as usize).min(grid.len() - 1);
                markov_col[1..=last].iter().map(|v| 1.0 - v).sum::<f64>() / grid.n as f64
            };
            let rows = (0..grid.len()).map(|k| vec![grid.time(k), grid.values[k], markov_col[k]]);
            write_file(&out, &csv("t,F_vi,F_markov", rows))?;
            let summary = pretty(&json!({
                "r_eff": c.r_eff,
                "rho": c.rho,
                "lambda_hat": markov.lambda_hat,
                "mu": markov.mu,
                "mean_vi": mean_vi.mean_days,
                "mean_markov": mean_markov,
                "tail_mass": mean_vi.tail_mass,
                "truncation_bound": mean_vi.truncation_bound,
                "M": cfg.ancestors.m,
                "n": cfg.solver.n,
                "lambda_cutoff": cfg.solver.lambda_cutoff,
            }));
            write_file(&out.with_extension("json"), &summary)?;
            print!("{summary}");
        }
        Command::Simulate { cfg, out } => {
            let (cfg, law) = load(&cfg)?;
            let sim = &cfg.sim;
            if sim.replicates == 0 || !(sim.t_step > 0.0) {
                return Err(CliError::Config("sim.replicates and sim.t_step must be positive".into()));
            }
            let set = ReplicateSet::run(&law, cfg.ancestors.m, cfg.ancestors.tilt(), sim.replicates, &sim.sim_config())
                .map_err(|e| CliError::Config(e.to_string()))?;
            let steps = (cfg.solver.horizon / sim.t_step).floor() as usize;
            let t_grid: Vec<f64> = (0..=steps).map(|i| i as f64 * sim.t_step).collect();
            let emp = set.empirical_cdf(&t_grid);
            let rows = (0..t_grid.len()).map(|i| vec![emp.t_grid[i], emp.probs[i], emp.halfwidth_95[i]]);
            write_file(&out, &csv("t,p_hat,halfwidth", rows))?;
            let (mean, se) = set.mean_se();
            print!(
                "{}",
                pretty(&json!({
                    "replicates": emp.replicates,
                    "capped": emp.capped,
                    "mean_days": mean,
                    "standard_error": se,
                    "seed": sim.seed,
                }))
            );
            if emp.capped > 0 {
                return Err(CliError::Numeric(format!("{} replicates exceeded the caps", emp.capped)));
            }
        }
        Command::Lln { cfg, t0, out } => {
            let (cfg, law) = load(&cfg)?;
            let l = &cfg.lln;
            let init = MacroState::start(l.s0, l.i0);
            let traj = integrate_law(&law, &cfg.solver.quad, &init, l.step, l.horizon, l.initial_curves, cfg.ancestors.basis)
                .map_err(|e| match e {
                    Error::Domain(m) => CliError::Config(m),
                    e => e.into(),
                })?;
            let s_t0 = susceptibles_at(&traj, t0).map_err(|e| CliError::Config(e.to_string()))?;
            let rows = traj.iter().map(|s| vec![s.t, s.s_bar, s.i_bar, s.r_bar, s.force]);
            write_file(&out, &csv("t,s_bar,i_bar,r_bar,force", rows))?;
            print!("{}", pretty(&json!({ "s_bar_t0": s_t0, "t0": t0 })));
        }
    }
    Ok(())
}

/// Parses `argv`, honours `EXTL_THREADS`, runs, and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    if let Some(n) = std::env::var("EXTL_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_g9(0.0), "0");
        assert_eq!(fmt_g9(1.0), "1");
        assert_eq!(fmt_g9(0.367879441171442), "0.367879441");
        assert_eq!(fmt_g9(18.785412345), "18.7854123");
        assert_eq!(fmt_g9(1e-9), "1e-09");
        assert_eq!(fmt_g9(1.23456789e-7), "1.23456789e-07");
        assert_eq!(fmt_g9(123456789.0), "123456789");
        assert_eq!(fmt_g9(1234567890.0), "1.23456789e+09");
        assert_eq!(fmt_g9(0.0001), "0.0001");
        assert_eq!(fmt_g9(-2.5), "-2.5");
        assert_eq!(fmt_g9(0.99999999999), "1");
    }

    #[test]
    fn error_classes() {
        assert_eq!(CliError::from(Error::InvalidLaw("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(Error::NoFiniteRoot { boundary: -1.0 }).exit_code(), 3);
    }
}
