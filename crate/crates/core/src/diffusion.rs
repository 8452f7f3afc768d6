//! Euler–Maruyama integration of the continuous-time limit
//!
//! ```text
//! dH = β [−(1 − n_H) H + n_H (λ∞ + Z²)] dt
//! dZ = drift(H, Z) dt + γ √(λ∞ + H + Z²) dW
//! ```
//!
//! The Z drift defaults to `−ωZ`, the decay of an exponential moving average
//! of returns, which keeps the `Z ↦ −Z` symmetry of the event model. The
//! `−ωH` variant is available through [`ZDrift::Hawkes`].

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::ZHawkesParams;
use crate::point_process::{seeded_rng, SampledSeries};

/// Largest allowed number of steps in one run.
pub const MAX_STEPS: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ZDrift {
    /// `−ω Z`
    #[default]
    #[serde(rename = "z")]
    Zumbach,
    /// `−ω H`. Pushes Z one way only and can diverge in finite time.
    #[serde(rename = "h")]
    Hawkes,
}

impl fmt::Display for ZDrift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ZDrift::Zumbach => "z",
            ZDrift::Hawkes => "h",
        })
    }
}

impl FromStr for ZDrift {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "z" => Ok(ZDrift::Zumbach),
            "h" => Ok(ZDrift::Hawkes),
            other => Err(Error::Config(format!(
                "z_drift must be `z` or `h`, got `{other}`"
            ))),
        }
    }
}

impl ZDrift {
    pub fn eval(self, h: f64, z: f64, p: &ZHawkesParams) -> f64 {
        match self {
            ZDrift::Zumbach => -p.zumbach_decay * z,
            ZDrift::Hawkes => -p.zumbach_decay * h,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdeConfig {
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    pub record_stride: u64,
    pub burn_in_fraction: f64,
    pub z_drift: ZDrift,
}

impl SdeConfig {
    pub fn new(dt: f64, horizon: f64, seed: u64) -> Self {
        Self {
            dt,
            horizon,
            seed,
            record_stride: 1,
            burn_in_fraction: 0.1,
            z_drift: ZDrift::default(),
        }
    }

    pub fn validate(&self, p: &ZHawkesParams) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::param(
                "sde_dt",
                format!("must be finite and > 0, got {}", self.dt),
            ));
        }
        let relax = self.dt * p.hawkes_decay * (1.0 - p.hawkes_ratio);
        if relax >= 1.0 {
            return Err(Error::param(
                "sde_dt",
                format!("dt·β·(1 − n_H) = {relax} must be < 1"),
            ));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::param(
                "horizon",
                format!("must be finite and > 0, got {}", self.horizon),
            ));
        }
        if self.horizon / self.dt > MAX_STEPS {
            return Err(Error::param(
                "sde_dt",
                format!(
                    "horizon/dt = {:e} exceeds {MAX_STEPS:e} steps",
                    self.horizon / self.dt
                ),
            ));
        }
        if self.record_stride == 0 {
            return Err(Error::param("record_stride", "must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.burn_in_fraction) {
            return Err(Error::param(
                "burn_in_fraction",
                format!("must lie in [0, 1), got {}", self.burn_in_fraction),
            ));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> u64 {
        (self.horizon / self.dt).round() as u64
    }

    pub fn burn_in_steps(&self) -> u64 {
        (self.burn_in_fraction * self.n_steps() as f64).ceil() as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionPath {
    pub t0: f64,
    pub dt_recorded: f64,
    pub h_values: Vec<f64>,
    pub z_values: Vec<f64>,
}

impl DiffusionPath {
    pub fn len(&self) -> usize {
        self.h_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h_values.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt_recorded
    }

    pub fn lambda(&self, p: &ZHawkesParams) -> SampledSeries {
        SampledSeries {
            t0: self.t0,
            dt: self.dt_recorded,
            values: self
                .h_values
                .iter()
                .zip(&self.z_values)
                .map(|(h, z)| p.baseline + h + z * z)
                .collect(),
        }
    }
}

/// One Euler–Maruyama step driven by a single standard normal draw.
pub fn em_step(
    h: f64,
    z: f64,
    p: &ZHawkesParams,
    dt: f64,
    noise: f64,
    drift: ZDrift,
) -> Result<(f64, f64)> {
    let gamma = p.zumbach_amplitude();
    let z2 = z * z;
    let dh = p.hawkes_decay * (-(1.0 - p.hawkes_ratio) * h + p.hawkes_ratio * (p.baseline + z2));
    let next_h = (h + dh * dt).max(0.0);
    let diffusion = gamma * (p.baseline + h + z2).sqrt();
    let next_z = z + drift.eval(h, z, p) * dt + diffusion * dt.sqrt() * noise;
    if next_h.is_finite() && next_z.is_finite() {
        Ok((next_h, next_z))
    } else {
        Err(Error::NonFiniteState {
            step: 0,
            h: next_h,
            z: next_z,
        })
    }
}

/// Runs `steps` Euler–Maruyama steps from `(h, z)`. `noise` supplies one
/// standard normal per step and `on_step` sees the state after each step
/// (index starting at 1).
pub fn integrate<N, F>(
    p: &ZHawkesParams,
    start: (f64, f64),
    dt: f64,
    steps: u64,
    drift: ZDrift,
    mut noise: N,
    mut on_step: F,
) -> Result<(f64, f64)>
where
    N: FnMut() -> f64,
    F: FnMut(u64, f64, f64),
{
    let (mut h, mut z) = start;
    for step in 1..=steps {
        (h, z) = em_step(h, z, p, dt, noise(), drift).map_err(|e| match e {
            Error::NonFiniteState { h, z, .. } => Error::NonFiniteState { step, h, z },
            other => other,
        })?;
        on_step(step, h, z);
    }
    Ok((h, z))
}

/// Integrates from `(H, Z) = (0, 0)`, discards the burn-in and records every
/// `record_stride`-th state.
pub fn simulate_sde(p: &ZHawkesParams, c: &SdeConfig) -> Result<DiffusionPath> {
    p.validate()?;
    c.validate(p)?;
    let steps = c.n_steps();
    let burn = c.burn_in_steps();
    let stride = c.record_stride;
    let capacity = ((steps - burn.min(steps)) / stride + 1) as usize;
    let mut path = DiffusionPath {
        t0: burn as f64 * c.dt,
        dt_recorded: stride as f64 * c.dt,
        h_values: Vec::with_capacity(capacity),
        z_values: Vec::with_capacity(capacity),
    };
    if burn == 0 {
        path.h_values.push(0.0);
        path.z_values.push(0.0);
    }
    let mut rng = seeded_rng(c.seed);
    integrate(
        p,
        (0.0, 0.0),
        c.dt,
        steps,
        c.z_drift,
        || rng.sample(StandardNormal),
        |step, h, z| {
            if step >= burn && (step - burn).is_multiple_of(stride) {
                debug_assert!(h >= 0.0);
                path.h_values.push(h);
                path.z_values.push(z);
            }
        },
    )?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(n_h: f64, beta: f64, n_z: f64, omega: f64) -> ZHawkesParams {
        ZHawkesParams::new(0.5, n_h, beta, n_z, omega, 1.0).unwrap()
    }

    #[test]
    fn fixed_point_without_zumbach() {
        let p = params(0.5, 1.0, 0.0, 0.1);
        let h_star = 0.5 * 0.5 / (1.0 - 0.5);
        let (h, z) = em_step(h_star, 0.0, &p, 0.01, 0.7, ZDrift::Zumbach).unwrap();
        assert_eq!(h, h_star);
        assert_eq!(z, 0.0);
        assert_eq!(p.baseline + h, 1.0);
    }

    #[test]
    fn no_hawkes_keeps_h_at_zero() {
        let p = params(0.0, 1.0, 2.0, 0.03);
        let mut rng = seeded_rng(3);
        integrate(
            &p,
            (0.0, 0.0),
            0.01,
            10_000,
            ZDrift::Zumbach,
            || rng.sample(StandardNormal),
            |_, h, _| assert_eq!(h, 0.0),
        )
        .unwrap();
    }

    #[test]
    fn first_step_from_rest() {
        let p = params(0.2, 1.0, 1.5, 0.1);
        let (h, z) = em_step(0.0, 0.0, &p, 1e-3, 0.0, ZDrift::Zumbach).unwrap();
        assert_relative_eq!(h, 1e-4, max_relative = 1e-12);
        assert_eq!(z, 0.0);
        let (_, z) = em_step(0.0, 0.0, &p, 1e-3, 0.0, ZDrift::Hawkes).unwrap();
        assert_eq!(z, 0.0);
        // with noise only the diffusion term moves Z
        let (_, z) = em_step(0.0, 0.0, &p, 1e-2, 1.0, ZDrift::Zumbach).unwrap();
        assert_relative_eq!(
            z,
            p.zumbach_amplitude() * 0.5f64.sqrt() * 0.1,
            max_relative = 1e-12
        );
    }

    #[test]
    fn drift_variants() {
        let p = params(0.2, 1.0, 1.5, 0.1);
        assert_relative_eq!(ZDrift::Zumbach.eval(3.0, 2.0, &p), -0.2);
        assert_relative_eq!(
            ZDrift::Hawkes.eval(3.0, 2.0, &p),
            -0.3,
            max_relative = 1e-15
        );
        assert_eq!("z".parse::<ZDrift>().unwrap(), ZDrift::Zumbach);
        assert_eq!("h".parse::<ZDrift>().unwrap(), ZDrift::Hawkes);
        assert!("x".parse::<ZDrift>().is_err());
    }

    #[test]
    fn non_finite_state_reports_step() {
        let p = params(0.2, 1.0, 1.5, 0.1);
        let mut calls = 0;
        let err = integrate(
            &p,
            (0.0, 0.0),
            0.01,
            100,
            ZDrift::Zumbach,
            || {
                calls += 1;
                if calls == 7 {
                    f64::INFINITY
                } else {
                    0.0
                }
            },
            |_, _, _| {},
        )
        .unwrap_err();
        assert!(
            matches!(err, Error::NonFiniteState { step: 7, .. }),
            "{err}"
        );
    }

    #[test]
    fn config_validation() {
        let p = params(0.2, 1.0, 1.5, 0.1);
        assert!(SdeConfig::new(0.01, 100.0, 1).validate(&p).is_ok());
        assert!(SdeConfig::new(1.5, 100.0, 1).validate(&p).is_err());
        assert!(SdeConfig::new(1e-9, 10.0, 1).validate(&p).is_err());
        assert!(SdeConfig::new(0.0, 10.0, 1).validate(&p).is_err());
        let mut c = SdeConfig::new(0.01, 100.0, 1);
        c.record_stride = 0;
        assert!(c.validate(&p).is_err());
        c.record_stride = 1;
        c.burn_in_fraction = 1.0;
        assert!(c.validate(&p).is_err());
    }

    #[test]
    fn recording_layout() {
        let p = params(0.2, 1.0, 1.5, 0.1);
        let mut c = SdeConfig::new(0.01, 100.0, 5);
        c.record_stride = 10;
        let path = simulate_sde(&p, &c).unwrap();
        assert_relative_eq!(path.t0, 10.0, max_relative = 1e-12);
        assert_relative_eq!(path.dt_recorded, 0.1, max_relative = 1e-12);
        assert_eq!(path.len(), 901);
        assert!(path.h_values.iter().all(|&h| h >= 0.0));
        assert!(path.lambda(&p).values.iter().all(|&l| l >= p.baseline));
        c.burn_in_fraction = 0.0;
        let full = simulate_sde(&p, &c).unwrap();
        assert_eq!(full.len(), 1001);
        assert_eq!((full.h_values[0], full.z_values[0]), (0.0, 0.0));
        assert_eq!(full.h_values[100], path.h_values[0]);
    }

    #[test]
    fn deterministic_given_seed() {
        let p = params(0.2, 1.0, 1.5, 0.1);
        let c = SdeConfig::new(0.01, 200.0, 42);
        assert_eq!(simulate_sde(&p, &c).unwrap(), simulate_sde(&p, &c).unwrap());
        let other = simulate_sde(&p, &SdeConfig { seed: 43, ..c }).unwrap();
        assert_ne!(simulate_sde(&p, &c).unwrap().z_values, other.z_values);
    }
}
