//! Exponential kernels, process parameters and closed-form predictions.
//!
//! The ZHawkes intensity is `λ = λ∞ + H + Z²` where `H` is driven by the
//! Hawkes kernel `φ(s) = n_H β e^{−βs}` and `Z` by the Zumbach kernel
//! `z(s) = γ e^{−ωs}` with `γ = √(2 n_Z ω)`. The implied quadratic kernel
//! `Q(s, u) = φ(s) δ(s − u) + z(s) z(u)` has diagonal norm `n_H + n_Z`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `k(s) = amplitude · e^{−decay·s}` for `s ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpKernel {
    pub amplitude: f64,
    pub decay: f64,
}

impl ExpKernel {
    pub fn new(amplitude: f64, decay: f64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(Error::param(
                "amplitude",
                format!("must be finite and >= 0, got {amplitude}"),
            ));
        }
        if !(decay.is_finite() && decay > 0.0) {
            return Err(Error::param(
                "decay",
                format!("must be finite and > 0, got {decay}"),
            ));
        }
        Ok(Self { amplitude, decay })
    }

    pub fn eval(&self, s: f64) -> f64 {
        if s < 0.0 {
            0.0
        } else {
            self.amplitude * (-self.decay * s).exp()
        }
    }

    /// Integral of the kernel over `[0, ∞)`.
    pub fn norm(&self) -> f64 {
        kernel_norm(self)
    }
}

pub fn kernel_norm(k: &ExpKernel) -> f64 {
    k.amplitude / k.decay
}

/// Full ZHawkes parameterization. The leverage kernel is identically zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZHawkesParams {
    /// λ∞
    pub baseline: f64,
    /// n_H
    pub hawkes_ratio: f64,
    /// β
    pub hawkes_decay: f64,
    /// n_Z
    pub zumbach_ratio: f64,
    /// ω
    pub zumbach_decay: f64,
    /// ψ, only scales the emitted price path.
    pub tick: f64,
}

impl ZHawkesParams {
    pub fn new(
        baseline: f64,
        hawkes_ratio: f64,
        hawkes_decay: f64,
        zumbach_ratio: f64,
        zumbach_decay: f64,
        tick: f64,
    ) -> Result<Self> {
        let p = Self {
            baseline,
            hawkes_ratio,
            hawkes_decay,
            zumbach_ratio,
            zumbach_decay,
            tick,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(name: &'static str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::param(
                    name,
                    format!("must be finite and > 0, got {v}"),
                ))
            }
        }
        fn non_negative(name: &'static str, v: f64) -> Result<()> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::param(
                    name,
                    format!("must be finite and >= 0, got {v}"),
                ))
            }
        }
        positive("baseline", self.baseline)?;
        non_negative("hawkes_ratio", self.hawkes_ratio)?;
        positive("hawkes_decay", self.hawkes_decay)?;
        non_negative("zumbach_ratio", self.zumbach_ratio)?;
        positive("zumbach_decay", self.zumbach_decay)?;
        positive("tick", self.tick)
    }

    /// γ = √(2 n_Z ω), the jump of Z at each event.
    pub fn zumbach_amplitude(&self) -> f64 {
        (2.0 * self.zumbach_ratio * self.zumbach_decay).sqrt()
    }

    /// φ(0) = n_H β, the jump of H at each event.
    pub fn hawkes_jump(&self) -> f64 {
        self.hawkes_ratio * self.hawkes_decay
    }

    pub fn hawkes_kernel(&self) -> ExpKernel {
        ExpKernel {
            amplitude: self.hawkes_jump(),
            decay: self.hawkes_decay,
        }
    }

    pub fn zumbach_kernel(&self) -> ExpKernel {
        ExpKernel {
            amplitude: self.zumbach_amplitude(),
            decay: self.zumbach_decay,
        }
    }

    /// Diagonal of the quadratic kernel, `Q(s, s) = φ(s) + z(s)²`.
    pub fn quadratic_diagonal(&self, s: f64) -> f64 {
        let z = self.zumbach_kernel().eval(s);
        self.hawkes_kernel().eval(s) + z * z
    }

    /// χ = 2ω/β
    pub fn chi(&self) -> f64 {
        2.0 * self.zumbach_decay / self.hawkes_decay
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Endogeneity {
    pub hawkes: f64,
    pub zumbach: f64,
    pub total: f64,
}

pub fn endogeneity(p: &ZHawkesParams) -> Endogeneity {
    Endogeneity {
        hawkes: p.hawkes_ratio,
        zumbach: p.zumbach_ratio,
        total: p.hawkes_ratio + p.zumbach_ratio,
    }
}

/// Long-run behaviour implied by the endogeneity ratios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StabilityClass {
    /// n < 1
    StationaryFiniteMean,
    /// n ≥ 1 with n_H < 1
    StationaryInfiniteMean,
    /// n_H ≥ 1
    Explosive,
}

impl fmt::Display for StabilityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StabilityClass::StationaryFiniteMean => "stationary-finite-mean",
            StabilityClass::StationaryInfiniteMean => "stationary-infinite-mean",
            StabilityClass::Explosive => "explosive",
        })
    }
}

impl Endogeneity {
    pub fn classify(&self) -> StabilityClass {
        if self.hawkes >= 1.0 {
            StabilityClass::Explosive
        } else if self.total >= 1.0 {
            StabilityClass::StationaryInfiniteMean
        } else {
            StabilityClass::StationaryFiniteMean
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeanIntensity {
    Finite(f64),
    Infinite,
}

impl MeanIntensity {
    pub fn is_infinite(&self) -> bool {
        matches!(self, MeanIntensity::Infinite)
    }
}

impl fmt::Display for MeanIntensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeanIntensity::Finite(v) => write!(f, "{v}"),
            MeanIntensity::Infinite => f.write_str("infinite"),
        }
    }
}

/// λ̄ = λ∞/(1 − n) when n < 1. The formal negative solution for n ≥ 1 is
/// never returned.
pub fn theoretical_mean_intensity(p: &ZHawkesParams) -> MeanIntensity {
    let n = endogeneity(p).total;
    if n < 1.0 {
        MeanIntensity::Finite(p.baseline / (1.0 - n))
    } else {
        MeanIntensity::Infinite
    }
}

/// Which closed form is used for the tail correction `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailRegime {
    /// n_H = 0, a = 0.
    ExactNh0,
    /// χ → 0 asymptotics.
    ChiSmall,
    /// χ → ∞ asymptotics.
    ChiLarge,
}

impl TailRegime {
    pub fn name(&self) -> &'static str {
        match self {
            TailRegime::ExactNh0 => "exact_nH0",
            TailRegime::ChiSmall => "chi_small",
            TailRegime::ChiLarge => "chi_large",
        }
    }
}

impl fmt::Display for TailRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for TailRegime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact_nH0" | "exact_nh0" | "exact" => Ok(TailRegime::ExactNh0),
            "chi_small" => Ok(TailRegime::ChiSmall),
            "chi_large" => Ok(TailRegime::ChiLarge),
            other => Err(Error::Config(format!(
                "unknown regime `{other}` (expected exact_nH0, chi_small or chi_large)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailPrediction {
    /// Log-log slope of the survival function, always below −1/2.
    pub exponent: f64,
    pub correction_a: f64,
    pub chi: f64,
    pub regime: TailRegime,
    /// Set when |exponent| < 1, i.e. the density decays slower than Λ⁻².
    pub infinite_mean: bool,
}

/// Survival slope `−(1/2)(1 + 1/(n_Z(1 + a)))` of the intensity distribution.
pub fn predict_tail_exponent(p: &ZHawkesParams, regime: TailRegime) -> Result<TailPrediction> {
    let n_h = p.hawkes_ratio;
    let n_z = p.zumbach_ratio;
    let chi = p.chi();
    if !(n_z > 0.0) {
        return Err(Error::InvalidRegime {
            regime: regime.name(),
            reason: format!("zumbach_ratio must be > 0, got {n_z}"),
        });
    }
    let a = match regime {
        TailRegime::ExactNh0 => {
            if n_h != 0.0 {
                return Err(Error::InvalidRegime {
                    regime: regime.name(),
                    reason: format!("requires hawkes_ratio = 0, got {n_h}"),
                });
            }
            0.0
        }
        TailRegime::ChiSmall => {
            if n_h >= 1.0 {
                return Err(Error::Domain(format!(
                    "chi_small correction is singular for hawkes_ratio >= 1 (got {n_h})"
                )));
            }
            let m = 1.0 - n_h;
            n_h / m * (1.0 - chi * (1.0 - n_h - n_z) / (m * m))
        }
        TailRegime::ChiLarge => {
            if n_z == 1.0 {
                return Err(Error::InvalidRegime {
                    regime: regime.name(),
                    reason: "requires zumbach_ratio != 1".into(),
                });
            }
            n_h / (chi * (1.0 - n_z))
        }
    };
    let effective = n_z * (1.0 + a);
    if !(effective > 0.0) || !effective.is_finite() {
        return Err(Error::Domain(format!(
            "n_Z (1 + a) must be positive and finite, got {effective} (a = {a})"
        )));
    }
    let exponent = -0.5 * (1.0 + 1.0 / effective);
    Ok(TailPrediction {
        exponent,
        correction_a: a,
        chi,
        regime,
        infinite_mean: exponent.abs() < 1.0,
    })
}
