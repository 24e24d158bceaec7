//! The Lewis single-integral call formula
//! `C = e^{-qT} S0 - e^{-rT} sqrt(F K) / pi int_0^inf Re[e^{-iuk} f(u - i/2)] / (u^2 + 1/4) du`
//! with `k = log(K / F)` and `f` the characteristic function in angular frequency.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{smile_from_grid, strike_transform, trapezoid};
use crate::error::{invalid, Result};
use crate::fft::SmileResult;
use crate::models::{CharacteristicFunction, MarketSpec};
use crate::sinc::{OptionKind, TruncationRange};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LewisConfig {
    /// Integration nodes, one characteristic function evaluation each.
    pub n: usize,
    /// Spacing multiplier: `eta = 1 / (2 X_c beta)`.
    pub beta: f64,
    /// Strike compression; 1 is the plain FFT grid.
    #[serde(default = "one")]
    pub epsilon: f64,
}

fn one() -> f64 {
    1.0
}

impl LewisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 8 || !self.n.is_power_of_two() {
            return Err(invalid(
                "N",
                format!("must be a power of two >= 8, got {}", self.n),
            ));
        }
        if !(self.beta > 0.0) {
            return Err(invalid(
                "beta",
                format!("must be positive, got {}", self.beta),
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(invalid(
                "epsilon",
                format!("must lie in (0, 1], got {}", self.epsilon),
            ));
        }
        Ok(())
    }

    pub fn eta(&self, range: &TruncationRange) -> f64 {
        1.0 / (2.0 * range.half_width() * self.beta)
    }
}

/// Angular frequency to the characteristic function's cycles.
fn kappa(u: Complex64) -> Complex64 {
    u / (2.0 * PI)
}

/// Integrand `f(u - i/2) / (u^2 + 1/4)` without the strike phase.
pub fn lewis_integrand(cf: &dyn CharacteristicFunction, us: &[f64]) -> Result<Vec<Complex64>> {
    let zs: Vec<Complex64> = us.iter().map(|&u| kappa(Complex64::new(u, -0.5))).collect();
    let f = cf.eval_many(&zs)?;
    Ok(f.into_iter()
        .zip(us)
        .map(|(v, u)| v / (u * u + 0.25))
        .collect())
}

fn call_from_integral(market: &MarketSpec, k: f64, integral: f64) -> f64 {
    let fwd = market.forward();
    market.discount() * fwd * (1.0 - (0.5 * k).exp() / PI * integral)
}

/// Calls on the FFT strike grid, interpolated to `strikes`.
pub fn lewis_call_fft(
    cf: &dyn CharacteristicFunction,
    market: &MarketSpec,
    range: &TruncationRange,
    cfg: &LewisConfig,
    strikes: &[f64],
    kind: OptionKind,
) -> Result<SmileResult> {
    cfg.validate()?;
    let n = cfg.n;
    let eta = cfg.eta(range);
    let us: Vec<f64> = (0..n).map(|j| j as f64 * eta).collect();
    let x: Vec<Complex64> = lewis_integrand(cf, &us)?
        .into_iter()
        .enumerate()
        .map(|(j, v)| v * trapezoid(j, eta))
        .collect();
    let sums = strike_transform(&x, cfg.epsilon);
    let gamma = cfg.epsilon * 2.0 * PI / (n as f64 * eta);
    let half = (n / 2) as i64;
    let ks: Vec<f64> = (-half..half).map(|v| v as f64 * gamma).collect();
    let values: Vec<f64> = sums.iter().map(|s| s.re).collect();
    let method = if cfg.epsilon == 1.0 {
        "lewis-fft"
    } else {
        "lewis-frfft"
    };
    smile_from_grid(
        market,
        &ks,
        &values,
        strikes,
        kind,
        |k, i| call_from_integral(market, k, i),
        method,
        n,
    )
}

/// Single call from the discretised integral without FFT, `O(n)` per strike.
pub fn lewis_call(
    cf: &dyn CharacteristicFunction,
    market: &MarketSpec,
    strike: f64,
    eta: f64,
    n: usize,
) -> Result<f64> {
    let us: Vec<f64> = (0..n).map(|j| j as f64 * eta).collect();
    let k = (strike / market.forward()).ln();
    let integral: f64 = lewis_integrand(cf, &us)?
        .iter()
        .zip(&us)
        .enumerate()
        .map(|(j, (v, u))| (v * Complex64::from_polar(1.0, -u * k)).re * trapezoid(j, eta))
        .sum();
    Ok(call_from_integral(market, k, integral))
}
