use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use zhawkes::cli::{self, AnalyzeOptions, Mode, DEFAULT_CHECKPOINTS};
use zhawkes::config::RunConfig;
use zhawkes::{Result, TailRegime};

#[derive(Parser)]
#[command(
    name = "zhawkes",
    version,
    about = "Simulate and analyse quadratic Hawkes (ZHawkes) processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct FitArgs {
    #[arg(long, default_value_t = 1e2)]
    fit_min: f64,
    #[arg(long, default_value_t = 1e4)]
    fit_max: f64,
    /// Stationarity windows; 0 or 1 disables the check.
    #[arg(long, default_value_t = 9)]
    windows: usize,
    /// Tail-exponent regime: exact_nH0, chi_small or chi_large.
    #[arg(long)]
    regime: Option<TailRegime>,
    /// Fail unless the fitted slope lies in LO,HI.
    #[arg(long, value_name = "LO,HI", allow_hyphen_values = true, value_parser = parse_range)]
    slope_range: Option<(f64, f64)>,
    /// Override the burn-in (time units).
    #[arg(long)]
    burn_in: Option<f64>,
    /// Spacing between samples kept by the stationarity check.
    #[arg(long)]
    gap: Option<f64>,
}

impl FitArgs {
    fn options(&self, config: Option<RunConfig>, out_dir: Option<PathBuf>) -> AnalyzeOptions {
        AnalyzeOptions {
            fit_min: self.fit_min,
            fit_max: self.fit_max,
            n_windows: self.windows,
            config,
            regime: self.regime,
            burn_in: self.burn_in,
            slope_range: self.slope_range,
            subsample_gap: self.gap,
            out_dir,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and write its outputs plus a manifest.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Thinning)]
        mode: Mode,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Skip the events file (thinning).
        #[arg(long)]
        no_events: bool,
    },
    /// Tail fit, stationarity and running mean of a sampled series.
    Analyze {
        series: PathBuf,
        /// Used instead of the configuration embedded in the series file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory for curve, running mean and summary files.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        fit: FitArgs,
    },
    /// Stability class, mean intensity and predicted tail exponent.
    Predict {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        regime: Option<TailRegime>,
    },
    /// Check an events file against the brute-force intensity.
    Verify {
        events: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_CHECKPOINTS)]
        checkpoints: usize,
        /// Only check the first N events.
        #[arg(long)]
        max_events: Option<usize>,
    },
    /// Simulate and analyse several seeds.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Thinning)]
        mode: Mode,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated list or inclusive range `a..b`.
        #[arg(long, value_parser = parse_seeds)]
        seeds: Seeds,
        #[arg(long)]
        events: bool,
        #[command(flatten)]
        fit: FitArgs,
    },
}

#[derive(Clone)]
struct Seeds(Vec<u64>);

fn parse_seeds(s: &str) -> std::result::Result<Seeds, String> {
    let bad = |e: std::num::ParseIntError| e.to_string();
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (
            a.trim().parse().map_err(bad)?,
            b.trim().parse().map_err(bad)?,
        );
        if a > b {
            return Err(format!("empty seed range {s}"));
        }
        return Ok(Seeds((a..=b).collect()));
    }
    s.split(',')
        .map(|x| x.trim().parse().map_err(bad))
        .collect::<std::result::Result<_, _>>()
        .map(Seeds)
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected LO,HI")?;
    let lo: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(format!("empty range {s}"));
    }
    Ok((lo, hi))
}

fn verdict(pass: bool) -> ExitCode {
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate {
            config,
            mode,
            out,
            seed,
            no_events,
        } => {
            let m = cli::cmd_simulate(&config, mode, &out, seed, !no_events)?;
            for o in &m.outputs {
                println!("{}  {}", o.sha256, out.join(&o.file).display());
            }
            if let Some(n) = m.n_events {
                println!("events: {n}");
            }
            if m.truncated {
                eprintln!(
                    "event cap exceeded at t = {}; outputs are truncated",
                    m.end_time
                );
                return Ok(ExitCode::from(3));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Analyze {
            series,
            config,
            out,
            fit,
        } => {
            let config = config.map(RunConfig::load).transpose()?;
            let s = cli::cmd_analyze(&series, &fit.options(config, out))?;
            println!("{s}");
            Ok(verdict(s.pass()))
        }
        Command::Predict { config, regime } => {
            let cfg = RunConfig::load(config)?;
            println!("{}", cli::cmd_predict(&cfg.params, regime));
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            events,
            config,
            tol,
            checkpoints,
            max_events,
        } => {
            let cfg = RunConfig::load(config)?;
            let r = cli::cmd_verify(&events, &cfg, tol, checkpoints, max_events)?;
            println!("{r}");
            Ok(verdict(r.pass))
        }
        Command::Sweep {
            config,
            mode,
            out,
            seeds,
            events,
            fit,
        } => {
            let cfg = RunConfig::load(config)?;
            let rows =
                cli::cmd_sweep(&cfg, mode, &seeds.0, &out, events, &fit.options(None, None))?;
            println!("seed  slope     stderr  stationarity  pass");
            for r in &rows {
                let num = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
                println!(
                    "{:<5} {:<9} {:<7} {:<13} {}",
                    r.seed,
                    num(r.slope),
                    num(r.stderr),
                    r.stationarity_pass.map_or("-".into(), |b| b.to_string()),
                    r.pass
                );
            }
            Ok(verdict(rows.iter().all(|r| r.pass)))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
