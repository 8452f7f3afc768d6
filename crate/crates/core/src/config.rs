//! Plain-text run configuration: one `key = value` per line, `#` comments.
//! Unknown, duplicate or malformed keys are rejected.

use std::fmt::Write as _;
use std::path::Path;

use crate::diffusion::{SdeConfig, ZDrift};
use crate::error::{Error, Result};
use crate::kernels::ZHawkesParams;
use crate::point_process::{ThinningConfig, DEFAULT_EVENT_CAP};

const REQUIRED: &[&str] = &[
    "baseline",
    "hawkes_ratio",
    "hawkes_decay",
    "zumbach_ratio",
    "zumbach_decay",
    "horizon",
    "seed",
];

const OPTIONAL: &[&str] = &[
    "tick",
    "sample_dt",
    "sde_dt",
    "record_stride",
    "burn_in_fraction",
    "z_drift",
    "event_cap",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ZHawkesParams,
    pub horizon: f64,
    pub seed: u64,
    /// Grid spacing for sampled thinning output.
    pub sample_dt: f64,
    pub sde_dt: f64,
    /// Defaults to `round(sample_dt / sde_dt)` so both simulators record on
    /// the same grid.
    pub record_stride: u64,
    /// Fraction of the horizon discarded before any statistic.
    pub burn_in_fraction: f64,
    pub z_drift: ZDrift,
    pub event_cap: u64,
}

fn parse_f64(key: &str, raw: &str, line: usize) -> Result<f64> {
    raw.parse::<f64>().map_err(|_| {
        Error::Config(format!(
            "line {line}: `{key}` expects a number, got `{raw}`"
        ))
    })
}

fn parse_count(key: &str, raw: &str, line: usize) -> Result<u64> {
    if let Ok(v) = raw.parse::<u64>() {
        return Ok(v);
    }
    let v = parse_f64(key, raw, line)?;
    if v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64 {
        Ok(v as u64)
    } else {
        Err(Error::Config(format!(
            "line {line}: `{key}` expects a non-negative integer, got `{raw}`"
        )))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(&str, &str, usize)> = Vec::new();
        for (i, raw_line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {line_no}: expected `key = value`, got `{line}`"
                )));
            };
            let (key, value) = (key.trim(), value.trim());
            if !REQUIRED.contains(&key) && !OPTIONAL.contains(&key) {
                return Err(Error::Config(format!(
                    "line {line_no}: unknown key `{key}`"
                )));
            }
            if let Some((_, _, first)) = entries.iter().find(|(k, _, _)| *k == key) {
                return Err(Error::Config(format!(
                    "line {line_no}: duplicate key `{key}` (first set on line {first})"
                )));
            }
            if value.is_empty() {
                return Err(Error::Config(format!(
                    "line {line_no}: empty value for `{key}`"
                )));
            }
            entries.push((key, value, line_no));
        }
        for key in REQUIRED {
            if !entries.iter().any(|(k, _, _)| k == key) {
                return Err(Error::Config(format!("missing required key `{key}`")));
            }
        }
        let get = |key: &str| {
            entries
                .iter()
                .find(|(k, _, _)| *k == key)
                .map(|&(_, v, l)| (v, l))
        };
        let num = |key: &str, default: f64| -> Result<f64> {
            match get(key) {
                Some((v, l)) => parse_f64(key, v, l),
                None => Ok(default),
            }
        };

        let params = ZHawkesParams {
            baseline: num("baseline", f64::NAN)?,
            hawkes_ratio: num("hawkes_ratio", f64::NAN)?,
            hawkes_decay: num("hawkes_decay", f64::NAN)?,
            zumbach_ratio: num("zumbach_ratio", f64::NAN)?,
            zumbach_decay: num("zumbach_decay", f64::NAN)?,
            tick: num("tick", 1.0)?,
        };
        let horizon = num("horizon", f64::NAN)?;
        let (seed_raw, seed_line) = get("seed").expect("required");
        let seed = parse_count("seed", seed_raw, seed_line)?;
        let sample_dt = num("sample_dt", 1.0)?;
        let sde_dt = num("sde_dt", 1e-2)?;
        let record_stride = match get("record_stride") {
            Some((v, l)) => parse_count("record_stride", v, l)?,
            None => ((sample_dt / sde_dt).round() as u64).max(1),
        };
        let z_drift = match get("z_drift") {
            Some((v, _)) => v.parse()?,
            None => ZDrift::default(),
        };
        let event_cap = match get("event_cap") {
            Some((v, l)) => parse_count("event_cap", v, l)?,
            None => DEFAULT_EVENT_CAP,
        };
        let cfg = RunConfig {
            params,
            horizon,
            seed,
            sample_dt,
            sde_dt,
            record_stride,
            burn_in_fraction: num("burn_in_fraction", 0.1)?,
            z_drift,
            event_cap,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::Config(e.to_string());
        self.params.validate().map_err(wrap)?;
        if !(self.sample_dt.is_finite() && self.sample_dt > 0.0) {
            return Err(Error::Config(format!(
                "sample_dt must be finite and > 0, got {}",
                self.sample_dt
            )));
        }
        if self.event_cap == 0 {
            return Err(Error::Config("event_cap must be >= 1".into()));
        }
        self.sde().validate(&self.params).map_err(wrap)
    }

    pub fn thinning(&self) -> ThinningConfig {
        ThinningConfig::new(self.horizon, self.seed).with_event_cap(self.event_cap)
    }

    pub fn sde(&self) -> SdeConfig {
        SdeConfig {
            dt: self.sde_dt,
            horizon: self.horizon,
            seed: self.seed,
            record_stride: self.record_stride,
            burn_in_fraction: self.burn_in_fraction,
            z_drift: self.z_drift,
        }
    }

    pub fn burn_in(&self) -> f64 {
        self.burn_in_fraction * self.horizon
    }

    /// Canonical text form; parsing it yields an identical config.
    pub fn to_config_string(&self) -> String {
        let p = &self.params;
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("baseline", format!("{:?}", p.baseline));
        put("hawkes_ratio", format!("{:?}", p.hawkes_ratio));
        put("hawkes_decay", format!("{:?}", p.hawkes_decay));
        put("zumbach_ratio", format!("{:?}", p.zumbach_ratio));
        put("zumbach_decay", format!("{:?}", p.zumbach_decay));
        put("tick", format!("{:?}", p.tick));
        put("horizon", format!("{:?}", self.horizon));
        put("seed", self.seed.to_string());
        put("sample_dt", format!("{:?}", self.sample_dt));
        put("sde_dt", format!("{:?}", self.sde_dt));
        put("record_stride", self.record_stride.to_string());
        put("burn_in_fraction", format!("{:?}", self.burn_in_fraction));
        put("z_drift", self.z_drift.to_string());
        put("event_cap", self.event_cap.to_string());
        s
    }
}
