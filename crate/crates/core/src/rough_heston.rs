//! Rough Heston characteristic function via a fractional Riccati equation.
//!
//! For frequency `a` the function `h(a, .)` solves
//! `D^alpha h = F(a, h)`, `h(a, 0) = 0`, with `alpha = H + 1/2` and
//! `F(a, h) = -a (a + i) / 2 + i rho nu a h + nu^2 h^2 / 2`.
//! The log characteristic function is `int_0^T F(a, h(a, T - s)) xi0(s) ds`.

use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, PricingError, Result};
use crate::models::{angular, CharacteristicFunction, MarketSpec};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Smallest time step the solver will use.
pub const MIN_STEP: f64 = 1e-4;

/// `|h|` above this is reported as a blow-up.
const BLOW_UP: f64 = 1e100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoughHestonParams {
    /// Hurst exponent, in (0, 1/2].
    pub hurst: f64,
    /// Volatility of volatility.
    pub nu: f64,
    pub rho: f64,
}

impl RoughHestonParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.hurst > 0.0 && self.hurst <= 0.5) {
            return Err(invalid(
                "hurst",
                format!("must lie in (0, 0.5], got {}", self.hurst),
            ));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(invalid("nu", format!("must be positive, got {}", self.nu)));
        }
        if !(-1.0..=1.0).contains(&self.rho) {
            return Err(invalid(
                "rho",
                format!("must lie in [-1, 1], got {}", self.rho),
            ));
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.hurst + 0.5
    }
}

/// Piecewise-constant, right-continuous forward variance curve.
///
/// `value(t)` is `values[i]` for `times[i] <= t < times[i + 1]`, the first value
/// before `times[0]` and the last value after `times[n - 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardVarianceCurve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct CurveRow {
    time: f64,
    value: f64,
}

impl ForwardVarianceCurve {
    pub fn flat(value: f64) -> Result<Self> {
        Self::new(vec![0.0], vec![value])
    }

    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(invalid(
                "forward_variance",
                "times and values must be non-empty and of equal length",
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid(
                "forward_variance",
                "times must be strictly increasing",
            ));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(invalid(
                "forward_variance",
                format!("values must be non-negative, got {v}"),
            ));
        }
        Ok(ForwardVarianceCurve { times, values })
    }

    /// Reads a CSV with header `time,value`.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut times = Vec::new();
        let mut values = Vec::new();
        for row in rdr.deserialize::<CurveRow>() {
            let row = row.map_err(|e| PricingError::Config(e.to_string()))?;
            times.push(row.time);
            values.push(row.value);
        }
        Self::new(times, values)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())
            .map_err(|e| PricingError::Config(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_csv_reader(file)
    }

    pub fn value(&self, t: f64) -> f64 {
        let idx = self.times.partition_point(|&x| x <= t);
        self.values[idx.saturating_sub(1)]
    }
}

/// How the corrector step of the Adams scheme is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdamsScheme {
    /// Classical predictor-evaluate-corrector-evaluate. Cheap but unstable for
    /// large `|a|` on coarse grids.
    Pece,
    /// The corrector equation is quadratic in the new value and is solved
    /// exactly; stable at all frequencies.
    #[default]
    ImplicitCorrector,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiccatiConfig {
    pub n_steps: usize,
    #[serde(default)]
    pub scheme: AdamsScheme,
}

impl Default for RiccatiConfig {
    fn default() -> Self {
        RiccatiConfig {
            n_steps: 200,
            scheme: AdamsScheme::ImplicitCorrector,
        }
    }
}

/// Number of steps actually used for maturity `t`, after enforcing the step floor.
pub fn effective_steps(t: f64, n_steps: usize) -> usize {
    let n = n_steps.max(1);
    if t / (n as f64) < MIN_STEP {
        ((t / MIN_STEP).ceil() as usize).max(1)
    } else {
        n
    }
}

/// Adams product-integration weights on a uniform grid; they depend only on
/// `alpha`, the step and the number of steps, so one set serves every frequency.
#[derive(Debug, Clone)]
pub struct AdamsWeights {
    pub alpha: f64,
    pub dt: f64,
    pub n: usize,
    /// Predictor weights `dt^alpha / Gamma(alpha + 1) ((m + 1)^alpha - m^alpha)`.
    pred: Vec<f64>,
    /// Corrector weights for lag `m = k - j >= 0`, `j >= 1`.
    corr: Vec<f64>,
    /// Corrector weight of `j = 0` at step `k + 1`, indexed by `k`.
    corr0: Vec<f64>,
    /// `dt^alpha / Gamma(alpha + 2)`
    w: f64,
}

impl AdamsWeights {
    pub fn new(alpha: f64, t: f64, n: usize) -> Self {
        let dt = t / n as f64;
        let da = dt.powf(alpha);
        let pscale = da / gamma(alpha + 1.0);
        let w = da / gamma(alpha + 2.0);
        let a1 = alpha + 1.0;
        let pred = (0..n)
            .map(|m| {
                let m = m as f64;
                pscale * ((m + 1.0).powf(alpha) - m.powf(alpha))
            })
            .collect();
        let corr = (0..n)
            .map(|m| {
                let m = m as f64;
                w * ((m + 2.0).powf(a1) + m.powf(a1) - 2.0 * (m + 1.0).powf(a1))
            })
            .collect();
        let corr0 = (0..n)
            .map(|k| {
                let k = k as f64;
                w * (k.powf(a1) - (k - alpha) * (k + 1.0).powf(alpha))
            })
            .collect();
        AdamsWeights {
            alpha,
            dt,
            n,
            pred,
            corr,
            corr0,
            w,
        }
    }
}

/// Solution `h(a, t_k)` on the grid `t_k = k dt`, `k = 0..=n`.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    pub dt: f64,
    pub h: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy)]
struct Rhs {
    a0: Complex64,
    b: Complex64,
    c: f64,
}

impl Rhs {
    fn new(params: &RoughHestonParams, a: Complex64) -> Self {
        Rhs {
            a0: -0.5 * a * (a + I),
            b: I * a * (params.rho * params.nu),
            c: 0.5 * params.nu * params.nu,
        }
    }

    #[inline]
    fn eval(&self, h: Complex64) -> Complex64 {
        self.a0 + h * (self.b + h * self.c)
    }
}

/// Solves the fractional Riccati equation for angular frequency `a`.
pub fn solve_fractional_riccati(
    params: &RoughHestonParams,
    a: Complex64,
    weights: &AdamsWeights,
    scheme: AdamsScheme,
) -> Result<RiccatiSolution> {
    let rhs = Rhs::new(params, a);
    let n = weights.n;
    let mut h = vec![Complex64::new(0.0, 0.0); n + 1];
    let mut f = vec![rhs.eval(h[0]); n + 1];
    let w = weights.w;
    for k in 0..n {
        // Explicit part of the corrector: sum_{j=0}^{k} a_{j,k+1} F_j.
        let corr = f[0] * weights.corr0[k]
            + f[1..=k]
                .iter()
                .zip(weights.corr[..k].iter().rev())
                .map(|(fj, a)| fj * a)
                .sum::<Complex64>();
        let next = match scheme {
            AdamsScheme::Pece => {
                let pred: Complex64 = f[..=k]
                    .iter()
                    .zip(weights.pred[..=k].iter().rev())
                    .map(|(fj, b)| fj * b)
                    .sum();
                corr + rhs.eval(pred) * w
            }
            AdamsScheme::ImplicitCorrector => {
                // y = corr + w (A + B y + c y^2), root continuous with y -> corr + wA as w -> 0.
                let p = corr + rhs.a0 * w;
                let lin = 1.0 - rhs.b * w;
                let s = (lin * lin - 4.0 * w * rhs.c * p).sqrt();
                2.0 * p / (lin + s)
            }
        };
        let modulus = next.norm();
        if !modulus.is_finite() || modulus > BLOW_UP {
            return Err(PricingError::RiccatiBlowUp {
                time: (k + 1) as f64 * weights.dt,
                modulus,
            });
        }
        h[k + 1] = next;
        f[k + 1] = rhs.eval(next);
    }
    Ok(RiccatiSolution { dt: weights.dt, h })
}

/// Rough Heston characteristic function with cached Adams weights.
#[derive(Debug, Clone)]
pub struct RoughHestonCf {
    pub params: RoughHestonParams,
    pub curve: Arc<ForwardVarianceCurve>,
    pub market: MarketSpec,
    pub config: RiccatiConfig,
    weights: Arc<AdamsWeights>,
    /// Trapezoid weights times `xi0(s_j)` on the grid `s_j = j dt`.
    quad: Vec<f64>,
}

impl RoughHestonCf {
    pub fn new(
        params: RoughHestonParams,
        curve: ForwardVarianceCurve,
        market: MarketSpec,
        config: RiccatiConfig,
    ) -> Result<Self> {
        params.validate()?;
        market.validate()?;
        if config.n_steps == 0 {
            return Err(invalid("n_steps", "must be at least 1"));
        }
        let t = market.maturity;
        let n = effective_steps(t, config.n_steps);
        let weights = AdamsWeights::new(params.alpha(), t, n);
        let dt = weights.dt;
        let quad = (0..=n)
            .map(|j| {
                let end = if j == 0 || j == n { 0.5 } else { 1.0 };
                end * dt * curve.value(j as f64 * dt)
            })
            .collect();
        Ok(RoughHestonCf {
            params,
            curve: Arc::new(curve),
            market,
            config,
            weights: Arc::new(weights),
            quad,
        })
    }

    pub fn steps(&self) -> usize {
        self.weights.n
    }

    /// Log characteristic function at angular frequency `a`.
    pub fn log_cf_angular(&self, a: Complex64) -> Result<Complex64> {
        let sol = solve_fractional_riccati(&self.params, a, &self.weights, self.config.scheme)?;
        let rhs = Rhs::new(&self.params, a);
        let n = self.weights.n;
        Ok(self
            .quad
            .iter()
            .enumerate()
            .map(|(j, &q)| rhs.eval(sol.h[n - j]) * q)
            .sum())
    }
}

impl CharacteristicFunction for RoughHestonCf {
    fn eval(&self, kappa: Complex64) -> Result<Complex64> {
        Ok(self.log_cf_angular(angular(kappa))?.exp())
    }
}
