//! Carr-Madan damped call transform
//! `c(k) = e^{-alpha k} / pi int_0^inf Re[e^{-ivk} f(v - (alpha + 1) i) / (alpha^2 + alpha - v^2 + i (2 alpha + 1) v)] dv`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{smile_from_grid, strike_transform, trapezoid};
use crate::error::{invalid, Result};
use crate::fft::SmileResult;
use crate::models::{CharacteristicFunction, MarketSpec};
use crate::sinc::{OptionKind, TruncationRange};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarrMadanConfig {
    pub n: usize,
    pub beta: f64,
    pub alpha_cm: f64,
    #[serde(default = "one")]
    pub epsilon: f64,
}

fn one() -> f64 {
    1.0
}

impl CarrMadanConfig {
    pub fn new(n: usize, beta: f64) -> Self {
        CarrMadanConfig {
            n,
            beta,
            alpha_cm: 0.4,
            epsilon: 1.0,
        }
    }

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
        if !(self.alpha_cm > 0.0) {
            return Err(invalid(
                "alpha_cm",
                format!("must be positive, got {}", self.alpha_cm),
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

pub fn carr_madan_call_fft(
    cf: &dyn CharacteristicFunction,
    market: &MarketSpec,
    range: &TruncationRange,
    cfg: &CarrMadanConfig,
    strikes: &[f64],
    kind: OptionKind,
) -> Result<SmileResult> {
    cfg.validate()?;
    let n = cfg.n;
    let a = cfg.alpha_cm;
    let eta = cfg.eta(range);
    let zs: Vec<Complex64> = (0..n)
        .map(|j| Complex64::new(j as f64 * eta, -(a + 1.0)) / (2.0 * PI))
        .collect();
    let f = cf.eval_many(&zs)?;
    let x: Vec<Complex64> = f
        .into_iter()
        .enumerate()
        .map(|(j, v)| {
            let u = j as f64 * eta;
            let den = Complex64::new(a * a + a - u * u, (2.0 * a + 1.0) * u);
            v / den * trapezoid(j, eta)
        })
        .collect();
    let sums = strike_transform(&x, cfg.epsilon);
    let gamma = cfg.epsilon * 2.0 * PI / (n as f64 * eta);
    let half = (n / 2) as i64;
    let ks: Vec<f64> = (-half..half).map(|v| v as f64 * gamma).collect();
    let values: Vec<f64> = sums.iter().map(|s| s.re).collect();
    let scale = market.discount() * market.forward();
    let method = if cfg.epsilon == 1.0 {
        "carrmadan-fft"
    } else {
        "carrmadan-frfft"
    };
    smile_from_grid(
        market,
        &ks,
        &values,
        strikes,
        kind,
        |k, i| scale * (-a * k).exp() / PI * i,
        method,
        n,
    )
}
