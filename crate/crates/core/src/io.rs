//! Delimited text formats for events, sampled series and analysis output.
//!
//! Files start with optional `# key = value` metadata lines (the run
//! configuration echo), followed by a fixed header line and comma-separated
//! rows. Floating-point values are written with 17 significant digits.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::diffusion::DiffusionPath;
use crate::error::{Error, Result};
use crate::point_process::{Event, EventStream, GridSamples, SampledSeries, Sign};
use crate::stats::SurvivalCurve;

pub const EVENTS_HEADER: &str = "time,sign,cumulative_price";
pub const THINNING_SERIES_HEADER: &str = "time,lambda,h,z";
pub const SDE_PATH_HEADER: &str = "time,h,z,lambda";
pub const CURVE_HEADER: &str = "threshold,probability";
pub const RUNNING_MEAN_HEADER: &str = "time,running_mean";

/// Scientific notation with 17 significant digits; parses back exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writer that hashes everything passing through it.
pub struct HashingWriter<W> {
    inner: W,
    hasher: Sha256,
    bytes: u64,
}

impl<W: Write> HashingWriter<W> {
    pub fn new(inner: W) -> Self {
        Self {
            inner,
            hasher: Sha256::new(),
            bytes: 0,
        }
    }

    pub fn finish(mut self) -> io::Result<(W, String, u64)> {
        self.inner.flush()?;
        Ok((self.inner, hex::encode(self.hasher.finalize()), self.bytes))
    }
}

impl<W: Write> Write for HashingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hasher.update(&buf[..n]);
        self.bytes += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutputRecord {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
}

/// Buffered, hashed output file.
pub struct OutputFile {
    path: PathBuf,
    writer: HashingWriter<BufWriter<File>>,
}

impl OutputFile {
    pub fn create(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Self {
            writer: HashingWriter::new(BufWriter::with_capacity(1 << 20, file)),
            path,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn finish(self) -> Result<OutputRecord> {
        let path = self.path;
        let (_, sha256, bytes) = self.writer.finish().map_err(|e| Error::io(&path, e))?;
        Ok(OutputRecord {
            path,
            sha256,
            bytes,
        })
    }
}

impl Write for OutputFile {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.writer.write(buf)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.writer.flush()
    }
}

pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = io::Read::read(&mut file, &mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

fn write_metadata(w: &mut impl Write, cfg: &RunConfig) -> io::Result<()> {
    for line in cfg.to_config_string().lines() {
        writeln!(w, "# {line}")?;
    }
    Ok(())
}

/// Streams events as `time,sign,cumulative_price` rows.
pub struct EventWriter<W: Write> {
    inner: W,
    tick: f64,
    price: f64,
}

impl<W: Write> EventWriter<W> {
    pub fn new(mut inner: W, cfg: &RunConfig) -> io::Result<Self> {
        write_metadata(&mut inner, cfg)?;
        writeln!(inner, "{EVENTS_HEADER}")?;
        Ok(Self {
            inner,
            tick: cfg.params.tick,
            price: 0.0,
        })
    }

    pub fn write_event(&mut self, e: Event) -> io::Result<()> {
        self.price += e.sign.as_f64() * self.tick;
        writeln!(
            self.inner,
            "{},{},{}",
            fmt_f64(e.time),
            e.sign.as_i8(),
            fmt_f64(self.price)
        )
    }

    /// Appends the truncation trailer and returns the underlying writer.
    pub fn finish(mut self, truncated: bool) -> io::Result<W> {
        writeln!(self.inner, "# truncated = {truncated}")?;
        self.inner.flush()?;
        Ok(self.inner)
    }
}

pub fn write_events(w: impl Write, cfg: &RunConfig, stream: &EventStream) -> io::Result<()> {
    let mut writer = EventWriter::new(w, cfg)?;
    for e in stream.events() {
        writer.write_event(e)?;
    }
    writer.finish(stream.truncated).map(|_| ())
}

/// `time,lambda,h,z` rows from the thinning grid sampler.
pub fn write_thinning_series(
    mut w: impl Write,
    cfg: &RunConfig,
    samples: &GridSamples,
) -> io::Result<()> {
    write_metadata(&mut w, cfg)?;
    writeln!(w, "{THINNING_SERIES_HEADER}")?;
    for (i, ((l, h), z)) in samples
        .lambda
        .values
        .iter()
        .zip(&samples.h.values)
        .zip(&samples.z.values)
        .enumerate()
    {
        writeln!(
            w,
            "{},{},{},{}",
            fmt_f64(samples.lambda.time(i)),
            fmt_f64(*l),
            fmt_f64(*h),
            fmt_f64(*z)
        )?;
    }
    w.flush()
}

/// `time,h,z,lambda` rows from a diffusion path.
pub fn write_sde_path(mut w: impl Write, cfg: &RunConfig, path: &DiffusionPath) -> io::Result<()> {
    write_metadata(&mut w, cfg)?;
    writeln!(w, "{SDE_PATH_HEADER}")?;
    let base = cfg.params.baseline;
    for (i, (h, z)) in path.h_values.iter().zip(&path.z_values).enumerate() {
        let lambda = base + h + z * z;
        writeln!(
            w,
            "{},{},{},{}",
            fmt_f64(path.time(i)),
            fmt_f64(*h),
            fmt_f64(*z),
            fmt_f64(lambda)
        )?;
    }
    w.flush()
}

pub fn write_curve(mut w: impl Write, curve: &SurvivalCurve) -> io::Result<()> {
    writeln!(w, "{CURVE_HEADER}")?;
    for (t, p) in curve.thresholds.iter().zip(&curve.probabilities) {
        writeln!(w, "{},{}", fmt_f64(*t), fmt_f64(*p))?;
    }
    w.flush()
}

pub fn write_running_mean(mut w: impl Write, series: &SampledSeries) -> io::Result<()> {
    writeln!(w, "{RUNNING_MEAN_HEADER}")?;
    for (i, v) in series.values.iter().enumerate() {
        writeln!(w, "{},{}", fmt_f64(series.time(i)), fmt_f64(*v))?;
    }
    w.flush()
}

fn parse_err(line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        line,
        reason: reason.into(),
    }
}

/// Shared front matter of events and series files.
#[derive(Default)]
struct Preamble {
    config_text: String,
    first_meta_line: usize,
    truncated: Option<bool>,
}

impl Preamble {
    /// Consumes a `#` line. Lines without `=` are plain comments.
    fn comment(&mut self, body: &str, line: usize) -> Result<()> {
        let body = body.trim();
        let Some((key, value)) = body.split_once('=') else {
            return Ok(());
        };
        if key.trim() == "truncated" {
            let v = value.trim().parse::<bool>().map_err(|_| {
                parse_err(line, format!("invalid truncated flag `{}`", value.trim()))
            })?;
            self.truncated = Some(v);
        } else {
            if self.config_text.is_empty() {
                self.first_meta_line = line;
            }
            self.config_text.push_str(body);
            self.config_text.push('\n');
        }
        Ok(())
    }

    fn config(&self) -> Result<Option<RunConfig>> {
        if self.config_text.is_empty() {
            return Ok(None);
        }
        RunConfig::parse(&self.config_text)
            .map(Some)
            .map_err(|e| parse_err(self.first_meta_line, format!("embedded configuration: {e}")))
    }
}

/// Splits a data row into exactly `n` fields.
fn fields(line: &str, n: usize, line_no: usize) -> Result<Vec<&str>> {
    let parts: Vec<&str> = line.split(',').map(str::trim).collect();
    if parts.len() != n {
        return Err(parse_err(
            line_no,
            format!("expected {n} fields, found {}", parts.len()),
        ));
    }
    Ok(parts)
}

fn finite(raw: &str, what: &str, line_no: usize) -> Result<f64> {
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(parse_err(line_no, format!("invalid {what} `{raw}`"))),
    }
}

fn read_lines(reader: impl BufRead) -> impl Iterator<Item = (usize, Result<String>)> {
    reader.lines().enumerate().map(|(i, l)| {
        let line_no = i + 1;
        (line_no, l.map_err(|e| parse_err(line_no, e.to_string())))
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventFile {
    pub times: Vec<f64>,
    pub signs: Vec<Sign>,
    pub prices: Vec<f64>,
    pub config: Option<RunConfig>,
    pub truncated: bool,
}

impl EventFile {
    /// Event stream under the given configuration. Ordering is not checked
    /// here; see [`EventStream::validate`].
    pub fn to_stream(&self, cfg: &RunConfig) -> EventStream {
        EventStream {
            times: self.times.clone(),
            signs: self.signs.clone(),
            horizon: cfg.horizon,
            params: cfg.params,
            seed: cfg.seed,
            truncated: self.truncated,
        }
    }
}

pub fn parse_events(reader: impl BufRead) -> Result<EventFile> {
    let mut pre = Preamble::default();
    let mut header_seen = false;
    let mut file = EventFile {
        times: Vec::new(),
        signs: Vec::new(),
        prices: Vec::new(),
        config: None,
        truncated: false,
    };
    for (line_no, line) in read_lines(reader) {
        let line = line?;
        let trimmed = line.trim();
        if let Some(body) = trimmed.strip_prefix('#') {
            pre.comment(body, line_no)?;
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        if !header_seen {
            if trimmed != EVENTS_HEADER {
                return Err(parse_err(
                    line_no,
                    format!("expected header `{EVENTS_HEADER}`, got `{trimmed}`"),
                ));
            }
            header_seen = true;
            continue;
        }
        let f = fields(trimmed, 3, line_no)?;
        let time = finite(f[0], "time", line_no)?;
        let sign = f[1]
            .parse::<i8>()
            .ok()
            .and_then(Sign::from_i8)
            .ok_or_else(|| {
                parse_err(
                    line_no,
                    format!("invalid sign `{}` (expected 1 or -1)", f[1]),
                )
            })?;
        let price = finite(f[2], "cumulative_price", line_no)?;
        file.times.push(time);
        file.signs.push(sign);
        file.prices.push(price);
    }
    if !header_seen {
        return Err(parse_err(0, format!("missing header `{EVENTS_HEADER}`")));
    }
    file.config = pre.config()?;
    file.truncated = pre.truncated.unwrap_or(false);
    Ok(file)
}

pub fn read_events(path: impl AsRef<Path>) -> Result<EventFile> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_events(BufReader::new(file))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesFile {
    pub lambda: SampledSeries,
    pub h: Option<SampledSeries>,
    pub z: Option<SampledSeries>,
    pub config: Option<RunConfig>,
}

/// Reads any uniformly spaced series with `time` and `lambda` columns; `h`
/// and `z` are picked up when present. Covers both thinning series and
/// diffusion paths.
pub fn parse_series(reader: impl BufRead) -> Result<SeriesFile> {
    let mut pre = Preamble::default();
    let mut columns: Option<Vec<String>> = None;
    let (mut idx_t, mut idx_l, mut idx_h, mut idx_z) = (0, 0, None, None);
    let mut times = Vec::new();
    let (mut lambda, mut h, mut z) = (Vec::new(), Vec::new(), Vec::new());
    for (line_no, line) in read_lines(reader) {
        let line = line?;
        let trimmed = line.trim();
        if let Some(body) = trimmed.strip_prefix('#') {
            pre.comment(body, line_no)?;
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        let Some(cols) = &columns else {
            let cols: Vec<String> = trimmed.split(',').map(|c| c.trim().to_string()).collect();
            let find = |name: &str| cols.iter().position(|c| c == name);
            let mut sorted = cols.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != cols.len() {
                return Err(parse_err(line_no, "duplicate column names"));
            }
            idx_t =
                find("time").ok_or_else(|| parse_err(line_no, "header lacks a `time` column"))?;
            idx_l = find("lambda")
                .ok_or_else(|| parse_err(line_no, "header lacks a `lambda` column"))?;
            idx_h = find("h");
            idx_z = find("z");
            columns = Some(cols);
            continue;
        };
        let f = fields(trimmed, cols.len(), line_no)?;
        let t = finite(f[idx_t], "time", line_no)?;
        let l = finite(f[idx_l], "lambda", line_no)?;
        if l < 0.0 {
            return Err(parse_err(line_no, format!("negative intensity {l}")));
        }
        if let Some(i) = idx_h {
            h.push(finite(f[i], "h", line_no)?);
        }
        if let Some(i) = idx_z {
            z.push(finite(f[i], "z", line_no)?);
        }
        // Uniform spacing, checked against the first two rows.
        match times.len() {
            0 => {}
            1 => {
                if !(t > times[0]) {
                    return Err(parse_err(line_no, format!("time {t} does not increase")));
                }
            }
            n => {
                let t0: f64 = times[0];
                let dt: f64 = times[1] - t0;
                let expected = t0 + n as f64 * dt;
                if (t - expected).abs() > 1e-6 * dt {
                    return Err(parse_err(
                        line_no,
                        format!("time {t} breaks the uniform grid (expected {expected})"),
                    ));
                }
            }
        }
        times.push(t);
        lambda.push(l);
    }
    if columns.is_none() {
        return Err(parse_err(0, "missing header line"));
    }
    if times.is_empty() {
        return Err(parse_err(0, "series has no rows"));
    }
    let t0 = times[0];
    let dt = if times.len() > 1 {
        (times[times.len() - 1] - t0) / (times.len() - 1) as f64
    } else {
        1.0
    };
    let series = |values| SampledSeries { t0, dt, values };
    Ok(SeriesFile {
        lambda: series(lambda),
        h: idx_h.map(|_| series(h)),
        z: idx_z.map(|_| series(z)),
        config: pre.config()?,
    })
}

pub fn read_series(path: impl AsRef<Path>) -> Result<SeriesFile> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_series(BufReader::new(file))
}
