//! Subcommand implementations behind the `zhawkes` binary.
//!
//! Each `cmd_*` function does the work and returns a report; printing and
//! exit codes are left to `main`.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::diffusion::simulate_sde;
use crate::error::{Error, Result};
use crate::io::{
    read_events, read_series, write_curve, write_running_mean, write_sde_path,
    write_thinning_series, EventWriter, HashingWriter, OutputFile, OutputRecord,
};
use crate::kernels::{
    endogeneity, predict_tail_exponent, theoretical_mean_intensity, Endogeneity, StabilityClass,
    TailPrediction, TailRegime, ZHawkesParams,
};
use crate::oracle::{verify_path, VerifyReport};
use crate::point_process::{simulate_thinning_with, GridSampler};
use crate::stats::{
    empirical_survival, fit_tail_exponent, hill_estimator, log_grid, max_block_jump, running_mean,
    stationarity_diagnostic, HillEstimate, StationarityConfig, TailFit, DEFAULT_POINTS_PER_DECADE,
};

pub const EVENTS_FILE: &str = "events.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CURVE_FILE: &str = "curve.csv";
pub const RUNNING_MEAN_FILE: &str = "running_mean.csv";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Exact event-by-event simulation.
    Thinning,
    /// Euler–Maruyama integration of the diffusion limit.
    Sde,
}

impl Mode {
    pub fn series_file(self) -> &'static str {
        match self {
            Mode::Thinning => "series.csv",
            Mode::Sde => "path.csv",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Thinning => "thinning",
            Mode::Sde => "sde",
        })
    }
}

fn timestamp() -> String {
    humantime::format_rfc3339_millis(SystemTime::now()).to_string()
}

/// Loads a config and applies an optional seed override.
pub fn load_config(path: impl AsRef<Path>, seed: Option<u64>) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the manifest's directory.
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub toolkit: String,
    pub version: String,
    pub mode: Mode,
    pub seed: u64,
    /// Canonical configuration text.
    pub config: String,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<ManifestEntry>,
    pub truncated: bool,
    /// Accepted events, thinning only.
    pub n_events: Option<u64>,
    pub end_time: f64,
}

impl RunManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line(),
            reason: e.to_string(),
        })
    }

    /// Files under `dir` that are missing or whose checksum differs.
    pub fn mismatches(&self, dir: &Path) -> Vec<String> {
        self.outputs
            .iter()
            .filter(|o| crate::io::sha256_file(dir.join(&o.file)).map_or(true, |h| h != o.sha256))
            .map(|o| o.file.clone())
            .collect()
    }
}

/// What a simulation produced, independent of where it was written.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOutcome {
    pub truncated: bool,
    pub n_events: Option<u64>,
    pub end_time: f64,
}

/// Destination for one output stream; `label` names it in error messages.
pub struct Sink<'a, W> {
    pub label: &'a Path,
    pub writer: W,
}

/// Runs the configured simulator, streaming events (thinning only, when a
/// sink is given) and the sampled series into the given writers.
pub fn simulate_to<E: Write, S: Write>(
    cfg: &RunConfig,
    mode: Mode,
    events: Option<Sink<'_, E>>,
    series: Sink<'_, S>,
) -> Result<SimOutcome> {
    cfg.validate()?;
    let p = &cfg.params;
    let series_err = |e| Error::io(series.label, e);
    match mode {
        Mode::Thinning => {
            let mut sampler = GridSampler::new(p, cfg.sample_dt, cfg.horizon)?;
            let (events_label, mut writer) = match events {
                Some(s) => (
                    Some(s.label),
                    Some(EventWriter::new(s.writer, cfg).map_err(|e| Error::io(s.label, e))?),
                ),
                None => (None, None),
            };
            let mut write_err: Option<io::Error> = None;
            let run = simulate_thinning_with(p, &cfg.thinning(), |e, _| {
                sampler.push_event(e);
                if let (Some(w), None) = (writer.as_mut(), write_err.as_ref()) {
                    write_err = w.write_event(e).err();
                }
            })?;
            if let Some(label) = events_label {
                if let Some(e) = write_err {
                    return Err(Error::io(label, e));
                }
                if let Some(w) = writer {
                    w.finish(run.truncated).map_err(|e| Error::io(label, e))?;
                }
            }
            let samples = sampler.finish_at(run.end_time);
            write_thinning_series(series.writer, cfg, &samples).map_err(series_err)?;
            Ok(SimOutcome {
                truncated: run.truncated,
                n_events: Some(run.n_events),
                end_time: run.end_time,
            })
        }
        Mode::Sde => {
            let path = simulate_sde(p, &cfg.sde())?;
            write_sde_path(series.writer, cfg, &path).map_err(series_err)?;
            Ok(SimOutcome {
                truncated: false,
                n_events: None,
                end_time: cfg.horizon,
            })
        }
    }
}

/// SHA-256 of every output a run would write, without touching the disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunDigest {
    pub events: Option<String>,
    pub series: String,
}

pub fn digest_run(cfg: &RunConfig, mode: Mode) -> Result<RunDigest> {
    let label = Path::new("<digest>");
    let mut events = HashingWriter::new(io::sink());
    let mut series = HashingWriter::new(io::sink());
    let event_sink = (mode == Mode::Thinning).then_some(Sink {
        label,
        writer: &mut events,
    });
    simulate_to(
        cfg,
        mode,
        event_sink,
        Sink {
            label,
            writer: &mut series,
        },
    )?;
    let finish = |w: HashingWriter<io::Sink>| {
        w.finish()
            .map(|(_, h, _)| h)
            .map_err(|e| Error::io(label, e))
    };
    Ok(RunDigest {
        events: if mode == Mode::Thinning {
            Some(finish(events)?)
        } else {
            None
        },
        series: finish(series)?,
    })
}

fn entry(rec: OutputRecord) -> ManifestEntry {
    ManifestEntry {
        file: rec
            .path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        sha256: rec.sha256,
        bytes: rec.bytes,
    }
}

/// Simulates into `out_dir` and writes the manifest next to the outputs.
pub fn simulate_config(
    cfg: &RunConfig,
    mode: Mode,
    out_dir: &Path,
    write_events: bool,
) -> Result<RunManifest> {
    cfg.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let started = timestamp();
    let mut outputs = Vec::new();
    let mut events_file = match (mode, write_events) {
        (Mode::Thinning, true) => Some(OutputFile::create(out_dir.join(EVENTS_FILE))?),
        _ => None,
    };
    let mut series_file = OutputFile::create(out_dir.join(mode.series_file()))?;
    let events_path = events_file.as_ref().map(|f| f.path().to_path_buf());
    let series_path = series_file.path().to_path_buf();
    let outcome = simulate_to(
        cfg,
        mode,
        events_file
            .as_mut()
            .zip(events_path.as_deref())
            .map(|(w, label)| Sink { label, writer: w }),
        Sink {
            label: &series_path,
            writer: &mut series_file,
        },
    )?;
    if let Some(f) = events_file {
        outputs.push(entry(f.finish()?));
    }
    outputs.push(entry(series_file.finish()?));
    let manifest = RunManifest {
        toolkit: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        mode,
        seed: cfg.seed,
        config: cfg.to_config_string(),
        started,
        finished: timestamp(),
        outputs,
        truncated: outcome.truncated,
        n_events: outcome.n_events,
        end_time: outcome.end_time,
    };
    let path = out_dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

pub fn cmd_simulate(
    config: &Path,
    mode: Mode,
    out_dir: &Path,
    seed: Option<u64>,
    write_events: bool,
) -> Result<RunManifest> {
    simulate_config(&load_config(config, seed)?, mode, out_dir, write_events)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeOptions {
    pub fit_min: f64,
    pub fit_max: f64,
    /// Stationarity check is skipped below two windows.
    pub n_windows: usize,
    /// Overrides the configuration embedded in the series file.
    pub config: Option<RunConfig>,
    pub regime: Option<TailRegime>,
    /// Defaults to the configured burn-in, or zero without a configuration.
    pub burn_in: Option<f64>,
    /// Enables the slope verdict.
    pub slope_range: Option<(f64, f64)>,
    pub subsample_gap: Option<f64>,
    /// Where curve, running mean and summary go; `None` writes nothing.
    pub out_dir: Option<PathBuf>,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self {
            fit_min: 1e2,
            fit_max: 1e4,
            n_windows: 9,
            config: None,
            regime: None,
            burn_in: None,
            slope_range: None,
            subsample_gap: None,
            out_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaritySummary {
    pub n_windows: usize,
    pub subsample_gap: f64,
    pub min_level: f64,
    pub max_pairwise_distance: f64,
    pub threshold: f64,
    pub trend_level: f64,
    pub trend_values: Vec<f64>,
    pub trend_rho: f64,
    pub trend_p_value: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisSummary {
    pub n_samples: usize,
    pub burn_in: f64,
    pub sample_dt: f64,
    pub max_intensity: f64,
    pub fit: Option<TailFit>,
    pub fit_error: Option<String>,
    pub hill: Option<HillEstimate>,
    pub theory_slope: Option<f64>,
    pub regime: Option<TailRegime>,
    pub theory_error: Option<String>,
    pub stationarity: Option<StationaritySummary>,
    pub stationarity_error: Option<String>,
    pub running_mean_final: f64,
    /// Largest relative change of the running mean between consecutive
    /// tenths of the post-burn-in span.
    pub running_mean_max_jump: f64,
    pub verdicts: Vec<Verdict>,
}

impl AnalysisSummary {
    pub fn pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

impl fmt::Display for AnalysisSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "samples: {} (dt {}, burn-in {})",
            self.n_samples, self.sample_dt, self.burn_in
        )?;
        writeln!(f, "max intensity: {:e}", self.max_intensity)?;
        match (&self.fit, &self.fit_error) {
            (Some(t), _) => writeln!(
                f,
                "tail slope: {:.4} ± {:.4} on [{}, {}] ({} points)",
                t.slope, t.stderr, t.fit_min, t.fit_max, t.n_points
            )?,
            (None, Some(e)) => writeln!(f, "tail slope: {e}")?,
            (None, None) => {}
        }
        if let Some(h) = &self.hill {
            writeln!(f, "hill: {:.4} ± {:.4} (k = {})", h.exponent, h.stderr, h.k)?;
        }
        match (self.theory_slope, self.regime, &self.theory_error) {
            (Some(s), Some(r), _) => writeln!(f, "theory slope: {s:.4} ({r})")?,
            (_, _, Some(e)) => writeln!(f, "theory slope: {e}")?,
            _ => {}
        }
        match (&self.stationarity, &self.stationarity_error) {
            (Some(s), _) => writeln!(
                f,
                "stationarity: distance {:.4} (limit {}), trend rho {:.3} p {:.3}",
                s.max_pairwise_distance, s.threshold, s.trend_rho, s.trend_p_value
            )?,
            (None, Some(e)) => writeln!(f, "stationarity: {e}")?,
            (None, None) => {}
        }
        writeln!(
            f,
            "running mean: {:.4e} (max jump {:.3})",
            self.running_mean_final, self.running_mean_max_jump
        )?;
        for v in &self.verdicts {
            writeln!(
                f,
                "verdict {}: {} ({})",
                v.name,
                if v.pass { "pass" } else { "FAIL" },
                v.detail
            )?;
        }
        write!(f, "result: {}", if self.pass() { "pass" } else { "FAIL" })
    }
}

/// Regime used when none is requested: the exact form when it applies.
fn default_regime(p: &ZHawkesParams) -> Option<TailRegime> {
    (p.hawkes_ratio == 0.0).then_some(TailRegime::ExactNh0)
}

/// Tail, stationarity and running-mean analysis of an intensity series.
pub fn analyze_series(
    lambda: &crate::point_process::SampledSeries,
    cfg: Option<&RunConfig>,
    opts: &AnalyzeOptions,
) -> Result<(
    AnalysisSummary,
    crate::stats::SurvivalCurve,
    crate::point_process::SampledSeries,
)> {
    let burn_in = opts.burn_in.or(cfg.map(RunConfig::burn_in)).unwrap_or(0.0);
    let post = lambda.after(burn_in);
    if post.is_empty() {
        return Err(Error::InsufficientSamples(format!(
            "no samples after burn-in {burn_in} (series ends at {})",
            lambda.time(lambda.len().saturating_sub(1))
        )));
    }
    let min = post.values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = post.values.iter().copied().fold(0.0, f64::max);
    let floor = cfg.map_or(min, |c| c.params.baseline);
    let grid = log_grid(floor.max(f64::MIN_POSITIVE), max, DEFAULT_POINTS_PER_DECADE);
    let curve = empirical_survival(&post.values, &grid)?;
    let (fit, fit_error) = match fit_tail_exponent(&curve, opts.fit_min, opts.fit_max) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let k = post.values.iter().filter(|&&v| v >= opts.fit_min).count();
    let hill = hill_estimator(&post.values, k.min(post.len() - 1)).ok();

    let regime = opts
        .regime
        .or_else(|| cfg.and_then(|c| default_regime(&c.params)));
    let (theory_slope, theory_error) = match (cfg, regime) {
        (Some(c), Some(r)) => match predict_tail_exponent(&c.params, r) {
            Ok(t) => (Some(t.exponent), None),
            Err(e) => (None, Some(e.to_string())),
        },
        (Some(_), None) => (None, Some("no regime selected".to_string())),
        (None, _) => (None, Some("no configuration available".to_string())),
    };

    let mut verdicts = Vec::new();
    if let Some((lo, hi)) = opts.slope_range {
        let (pass, detail) = match &fit {
            Some(t) => (
                t.slope >= lo && t.slope <= hi,
                format!("{:.4} in [{lo}, {hi}]", t.slope),
            ),
            None => (false, fit_error.clone().unwrap_or_default()),
        };
        verdicts.push(Verdict {
            name: "slope",
            pass,
            detail,
        });
    }

    let (stationarity, stationarity_error) = if opts.n_windows >= 2 {
        let mut sc = match cfg {
            Some(c) => StationarityConfig::for_process(
                c.params.baseline,
                c.params.zumbach_decay,
                opts.n_windows,
            ),
            None => StationarityConfig {
                subsample_gap: post.dt,
                ..StationarityConfig::for_process(min.max(f64::MIN_POSITIVE), 1.0, opts.n_windows)
            },
        };
        if let Some(gap) = opts.subsample_gap {
            sc.subsample_gap = gap;
        }
        match stationarity_diagnostic(&post, &sc) {
            Ok(r) => {
                verdicts.push(Verdict {
                    name: "stationarity",
                    pass: r.pass,
                    detail: format!(
                        "distance {:.4} <= {}, trend p {:.3} > {}",
                        r.max_pairwise_distance, sc.threshold, r.trend.p_value, sc.alpha
                    ),
                });
                let s = StationaritySummary {
                    n_windows: sc.n_windows,
                    subsample_gap: sc.subsample_gap,
                    min_level: sc.min_level,
                    max_pairwise_distance: r.max_pairwise_distance,
                    threshold: sc.threshold,
                    trend_level: sc.trend_level,
                    trend_values: r.trend_values,
                    trend_rho: r.trend.rho,
                    trend_p_value: r.trend.p_value,
                    pass: r.pass,
                };
                (Some(s), None)
            }
            Err(e) => {
                verdicts.push(Verdict {
                    name: "stationarity",
                    pass: false,
                    detail: e.to_string(),
                });
                (None, Some(e.to_string()))
            }
        }
    } else {
        (None, None)
    };

    let running = running_mean(lambda)?;
    let block = (post.len() / 10).max(1);
    let summary = AnalysisSummary {
        n_samples: post.len(),
        burn_in,
        sample_dt: lambda.dt,
        max_intensity: max,
        fit,
        fit_error,
        hill,
        theory_slope,
        regime: theory_slope.and(regime),
        theory_error,
        stationarity,
        stationarity_error,
        running_mean_final: *running.values.last().expect("non-empty"),
        running_mean_max_jump: max_block_jump(&running, block, burn_in),
        verdicts,
    };
    Ok((summary, curve, running))
}

pub fn cmd_analyze(series_path: &Path, opts: &AnalyzeOptions) -> Result<AnalysisSummary> {
    let file = read_series(series_path)?;
    let cfg = opts.config.as_ref().or(file.config.as_ref());
    let (summary, curve, running) = analyze_series(&file.lambda, cfg, opts)?;
    if let Some(dir) = &opts.out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut out = OutputFile::create(dir.join(CURVE_FILE))?;
        write_curve(&mut out, &curve).map_err(|e| Error::io(dir.join(CURVE_FILE), e))?;
        out.finish()?;
        let mut out = OutputFile::create(dir.join(RUNNING_MEAN_FILE))?;
        write_running_mean(&mut out, &running)
            .map_err(|e| Error::io(dir.join(RUNNING_MEAN_FILE), e))?;
        out.finish()?;
        let path = dir.join(SUMMARY_FILE);
        let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
        fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    }
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimePrediction {
    pub regime: TailRegime,
    pub prediction: Option<TailPrediction>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictReport {
    pub endogeneity: Endogeneity,
    pub class: StabilityClass,
    /// `None` when the mean is infinite.
    pub mean_intensity: Option<f64>,
    pub predictions: Vec<RegimePrediction>,
}

impl fmt::Display for PredictReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e = &self.endogeneity;
        writeln!(
            f,
            "n_H = {}, n_Z = {}, n = {}",
            e.hawkes, e.zumbach, e.total
        )?;
        writeln!(f, "class: {}", self.class)?;
        match self.mean_intensity {
            Some(m) => writeln!(f, "mean intensity: {m}")?,
            None => writeln!(f, "mean intensity: infinite")?,
        }
        for (i, r) in self.predictions.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            match (&r.prediction, &r.error) {
                (Some(t), _) => write!(
                    f,
                    "tail exponent ({}): {:.6} (a = {:.6}, chi = {}, infinite mean: {})",
                    r.regime, t.exponent, t.correction_a, t.chi, t.infinite_mean
                )?,
                (None, Some(err)) => write!(f, "tail exponent ({}): {err}", r.regime)?,
                (None, None) => {}
            }
        }
        Ok(())
    }
}

/// Classification and tail predictions. Without an explicit regime the exact
/// form is used when `n_H = 0`; otherwise both asymptotic forms are shown.
pub fn cmd_predict(params: &ZHawkesParams, regime: Option<TailRegime>) -> PredictReport {
    let regimes = match regime.or_else(|| default_regime(params)) {
        Some(r) => vec![r],
        None => vec![TailRegime::ChiSmall, TailRegime::ChiLarge],
    };
    let predictions = regimes
        .into_iter()
        .map(|r| match predict_tail_exponent(params, r) {
            Ok(t) => RegimePrediction {
                regime: r,
                prediction: Some(t),
                error: None,
            },
            Err(e) => RegimePrediction {
                regime: r,
                prediction: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let e = endogeneity(params);
    PredictReport {
        endogeneity: e,
        class: e.classify(),
        mean_intensity: match theoretical_mean_intensity(params) {
            crate::kernels::MeanIntensity::Finite(m) => Some(m),
            crate::kernels::MeanIntensity::Infinite => None,
        },
        predictions,
    }
}

pub const DEFAULT_CHECKPOINTS: usize = 1000;

/// Oracle check of an events file against a configuration. `max_events`
/// restricts the check to a prefix of the file.
pub fn cmd_verify(
    events_path: &Path,
    cfg: &RunConfig,
    tol: f64,
    checkpoints: usize,
    max_events: Option<usize>,
) -> Result<VerifyReport> {
    let file = read_events(events_path)?;
    if let Some(echo) = &file.config {
        let mut diffs = Vec::new();
        if echo.params != cfg.params {
            diffs.push(format!("params {:?} vs {:?}", echo.params, cfg.params));
        }
        if echo.seed != cfg.seed {
            diffs.push(format!("seed {} vs {}", echo.seed, cfg.seed));
        }
        if echo.horizon != cfg.horizon {
            diffs.push(format!("horizon {} vs {}", echo.horizon, cfg.horizon));
        }
        if !diffs.is_empty() {
            return Err(Error::Mismatch(diffs.join("; ")));
        }
    }
    let mut stream = file.to_stream(cfg);
    if let Some(n) = max_events {
        if n < stream.len() {
            stream = stream.prefix(n);
        }
    }
    Ok(verify_path(&stream, &cfg.params, checkpoints, tol))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub seed: u64,
    pub truncated: bool,
    pub n_events: Option<u64>,
    pub slope: Option<f64>,
    pub stderr: Option<f64>,
    pub stationarity_pass: Option<bool>,
    pub pass: bool,
}

/// One run and analysis per seed under `out_dir/seed-<n>`, plus a
/// `sweep.csv` table.
pub fn cmd_sweep(
    base: &RunConfig,
    mode: Mode,
    seeds: &[u64],
    out_dir: &Path,
    write_events: bool,
    opts: &AnalyzeOptions,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let cfg = RunConfig {
            seed,
            ..base.clone()
        };
        let dir = out_dir.join(format!("seed-{seed}"));
        let manifest = simulate_config(&cfg, mode, &dir, write_events)?;
        let run_opts = AnalyzeOptions {
            config: Some(cfg.clone()),
            out_dir: Some(dir.clone()),
            ..opts.clone()
        };
        let s = cmd_analyze(&dir.join(mode.series_file()), &run_opts)?;
        rows.push(SweepRow {
            seed,
            truncated: manifest.truncated,
            n_events: manifest.n_events,
            slope: s.fit.map(|f| f.slope),
            stderr: s.fit.map(|f| f.stderr),
            stationarity_pass: s.stationarity.as_ref().map(|r| r.pass),
            pass: s.pass() && !manifest.truncated,
        });
    }
    let path = out_dir.join("sweep.csv");
    let mut text = String::from("seed,truncated,n_events,slope,stderr,stationarity_pass,pass\n");
    let opt = |v: Option<String>| v.unwrap_or_default();
    for r in &rows {
        text.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.seed,
            r.truncated,
            opt(r.n_events.map(|n| n.to_string())),
            opt(r.slope.map(|v| v.to_string())),
            opt(r.stderr.map(|v| v.to_string())),
            opt(r.stationarity_pass.map(|v| v.to_string())),
            r.pass
        ));
    }
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point_process::SampledSeries;

    fn cfg(text: &str) -> RunConfig {
        RunConfig::parse(text).unwrap()
    }

    const SMALL: &str =
        "baseline = 0.5\nhawkes_ratio = 0.3\nhawkes_decay = 1\nzumbach_ratio = 0.5\n\
                         zumbach_decay = 0.1\nhorizon = 2000\nseed = 7\nsde_dt = 0.05\n";

    #[test]
    fn digest_matches_written_files() {
        let c = cfg(SMALL);
        let dir = tempfile::tempdir().unwrap();
        for mode in [Mode::Thinning, Mode::Sde] {
            let m = simulate_config(&c, mode, dir.path(), true).unwrap();
            let d = digest_run(&c, mode).unwrap();
            let series = m
                .outputs
                .iter()
                .find(|o| o.file == mode.series_file())
                .unwrap();
            assert_eq!(series.sha256, d.series);
            let events = m
                .outputs
                .iter()
                .find(|o| o.file == EVENTS_FILE)
                .map(|o| o.sha256.clone());
            assert_eq!(events, d.events);
            assert!(m.mismatches(dir.path()).is_empty());
        }
    }

    #[test]
    fn predict_examples() {
        let p = ZHawkesParams::new(0.5, 0.0, 1.0, 2.0, 0.03, 1.0).unwrap();
        let r = cmd_predict(&p, None);
        assert_eq!(r.class, StabilityClass::StationaryInfiniteMean);
        assert_eq!(r.mean_intensity, None);
        assert_eq!(r.predictions.len(), 1);
        assert_eq!(r.predictions[0].prediction.unwrap().exponent, -0.75);

        let p = ZHawkesParams::new(0.5, 0.5, 1.0, 0.3, 0.1, 1.0).unwrap();
        let r = cmd_predict(&p, None);
        assert_eq!(r.class, StabilityClass::StationaryFiniteMean);
        assert!((r.mean_intensity.unwrap() - 2.5).abs() < 1e-12);
        assert_eq!(r.predictions.len(), 2);

        let p = ZHawkesParams::new(0.5, 1.2, 1.0, 0.0, 0.1, 1.0).unwrap();
        let r = cmd_predict(&p, None);
        assert_eq!(r.class, StabilityClass::Explosive);
        assert!(r.predictions.iter().all(|p| p.error.is_some()));
    }

    #[test]
    fn constant_series_has_no_tail_but_is_stationary() {
        let s = SampledSeries {
            t0: 0.0,
            dt: 1.0,
            values: vec![0.5; 1000],
        };
        let (summary, _, _) = analyze_series(&s, None, &AnalyzeOptions::default()).unwrap();
        assert!(summary.fit.is_none());
        assert!(summary
            .fit_error
            .as_ref()
            .unwrap()
            .contains("insufficient points"));
        assert!(summary.stationarity.as_ref().unwrap().pass);
        assert!(summary.pass());
        assert_eq!(summary.running_mean_final, 0.5);
        assert_eq!(summary.running_mean_max_jump, 0.0);
    }

    #[test]
    fn slope_verdict_drives_the_result() {
        let s = SampledSeries {
            t0: 0.0,
            dt: 1.0,
            values: vec![0.5; 1000],
        };
        let opts = AnalyzeOptions {
            slope_range: Some((-0.85, -0.65)),
            n_windows: 0,
            ..Default::default()
        };
        let (summary, _, _) = analyze_series(&s, None, &opts).unwrap();
        assert_eq!(summary.verdicts.len(), 1);
        assert!(!summary.pass());
    }

    #[test]
    fn short_series_fails_enabled_stationarity() {
        let s = SampledSeries {
            t0: 0.0,
            dt: 1.0,
            values: vec![0.5; 50],
        };
        let (summary, _, _) = analyze_series(&s, None, &AnalyzeOptions::default()).unwrap();
        assert!(summary.stationarity_error.is_some());
        assert!(!summary.pass());
        let opts = AnalyzeOptions {
            n_windows: 0,
            ..Default::default()
        };
        assert!(analyze_series(&s, None, &opts).unwrap().0.pass());
    }

    #[test]
    fn burn_in_beyond_series_is_an_error() {
        let s = SampledSeries {
            t0: 0.0,
            dt: 1.0,
            values: vec![0.5; 10],
        };
        let opts = AnalyzeOptions {
            burn_in: Some(100.0),
            ..Default::default()
        };
        assert!(matches!(
            analyze_series(&s, None, &opts),
            Err(Error::InsufficientSamples(_))
        ));
    }
}
