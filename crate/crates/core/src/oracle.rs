//! Brute-force intensity by explicit convolution over the whole history.
//!
//! Deliberately O(N) per evaluation and independent of the recursive
//! state update in [`crate::point_process`], which it certifies.

use std::fmt;

use serde::Serialize;

use crate::kernels::ZHawkesParams;
use crate::point_process::{replay_intensity_at, Event, EventStream};

/// Number of leading event times always included as checkpoints.
pub const EARLY_EVENT_CHECKPOINTS: usize = 100;

/// λ(t) from the given events, counting only those strictly before `t`.
/// The events need not be sorted.
pub fn intensity_from_events(
    events: impl IntoIterator<Item = Event>,
    p: &ZHawkesParams,
    t: f64,
) -> f64 {
    let phi0 = p.hawkes_jump();
    let gamma = p.zumbach_amplitude();
    let (mut h, mut z) = (0.0, 0.0);
    for e in events {
        if e.time < t {
            let age = t - e.time;
            h += phi0 * (-p.hawkes_decay * age).exp();
            z += e.sign.as_f64() * gamma * (-p.zumbach_decay * age).exp();
        }
    }
    p.baseline + h + z * z
}

pub fn intensity_bruteforce(e: &EventStream, p: &ZHawkesParams, t: f64) -> f64 {
    intensity_from_events(e.events(), p, t)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checkpoints: usize,
    pub max_rel_err: f64,
    /// Checkpoint where the largest error occurred.
    pub worst_time: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "checkpoints: {}", self.checkpoints)?;
        writeln!(f, "max_rel_err: {:e}", self.max_rel_err)?;
        if let Some(t) = self.worst_time {
            writeln!(f, "worst_time: {t}")?;
        }
        writeln!(f, "tolerance: {:e}", self.tolerance)?;
        write!(f, "result: {}", if self.pass { "pass" } else { "FAIL" })
    }
}

/// Checkpoint times: the midpoints of `n` equal strata of `(0, horizon]`
/// plus the first [`EARLY_EVENT_CHECKPOINTS`] event times, sorted.
pub fn checkpoint_times(e: &EventStream, n: usize) -> Vec<f64> {
    let stride = e.horizon / n as f64;
    let mut times: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) * stride).collect();
    times.extend(e.times.iter().take(EARLY_EVENT_CHECKPOINTS));
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
}

/// Compares brute-force and recursive intensities at the checkpoints.
pub fn verify_path(
    e: &EventStream,
    p: &ZHawkesParams,
    n_checkpoints: usize,
    tol: f64,
) -> VerifyReport {
    let n = n_checkpoints.max(1);
    let times = checkpoint_times(e, n);
    let recursive = replay_intensity_at(e, p, &times);
    let mut max_rel_err = 0.0f64;
    let mut worst_time = None;
    for (&t, &rec) in times.iter().zip(&recursive) {
        let exact = intensity_bruteforce(e, p, t);
        let err = (exact - rec).abs() / exact;
        // NaN must register as a failure.
        if !(err <= max_rel_err) {
            max_rel_err = if err.is_nan() { f64::INFINITY } else { err };
            worst_time = Some(t);
        }
    }
    VerifyReport {
        checkpoints: times.len(),
        max_rel_err,
        worst_time,
        tolerance: tol,
        pass: max_rel_err <= tol,
    }
}
