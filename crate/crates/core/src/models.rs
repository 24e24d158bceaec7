//! Characteristic functions of the drift-adjusted log-return
//! `s_T = log(S_T / S0) - (r - q) T`, together with the Black-Scholes
//! closed form used as a benchmark.
//!
//! All characteristic functions take the frequency `kappa` in cycles per unit
//! log-return, so `cf(kappa) = E[exp(i 2 pi kappa s_T)]`. The conversion to the
//! angular frequency `u = 2 pi kappa` happens in [`angular`] and nowhere else.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, PricingError, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Maps a frequency in cycles to the angular frequency `u = 2 pi kappa`.
#[inline]
pub fn angular(kappa: Complex64) -> Complex64 {
    kappa * (2.0 * PI)
}

/// Frequency at which the characteristic function evaluates `E[e^{s_T}]`.
pub fn martingale_frequency() -> Complex64 {
    Complex64::new(0.0, -1.0 / (2.0 * PI))
}

/// A model's characteristic function at a fixed maturity.
pub trait CharacteristicFunction: Send + Sync {
    /// `E[exp(i 2 pi kappa s_T)]` for a complex frequency `kappa` in cycles.
    fn eval(&self, kappa: Complex64) -> Result<Complex64>;

    /// Evaluates a batch of frequencies. Evaluations are independent, so the
    /// default implementation maps them in parallel.
    fn eval_many(&self, kappas: &[Complex64]) -> Result<Vec<Complex64>> {
        kappas.par_iter().map(|&k| self.eval(k)).collect()
    }
}

impl<T: CharacteristicFunction + ?Sized> CharacteristicFunction for &T {
    fn eval(&self, kappa: Complex64) -> Result<Complex64> {
        (**self).eval(kappa)
    }
    fn eval_many(&self, kappas: &[Complex64]) -> Result<Vec<Complex64>> {
        (**self).eval_many(kappas)
    }
}

impl<T: CharacteristicFunction + ?Sized> CharacteristicFunction for Box<T> {
    fn eval(&self, kappa: Complex64) -> Result<Complex64> {
        (**self).eval(kappa)
    }
    fn eval_many(&self, kappas: &[Complex64]) -> Result<Vec<Complex64>> {
        (**self).eval_many(kappas)
    }
}

impl<T: CharacteristicFunction + ?Sized> CharacteristicFunction for std::sync::Arc<T> {
    fn eval(&self, kappa: Complex64) -> Result<Complex64> {
        (**self).eval(kappa)
    }
    fn eval_many(&self, kappas: &[Complex64]) -> Result<Vec<Complex64>> {
        (**self).eval_many(kappas)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketSpec {
    pub spot: f64,
    pub rate: f64,
    #[serde(default)]
    pub dividend_yield: f64,
    pub maturity: f64,
}

impl MarketSpec {
    pub fn new(spot: f64, rate: f64, dividend_yield: f64, maturity: f64) -> Result<Self> {
        let m = MarketSpec {
            spot,
            rate,
            dividend_yield,
            maturity,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spot > 0.0 && self.spot.is_finite()) {
            return Err(invalid(
                "spot",
                format!("must be positive, got {}", self.spot),
            ));
        }
        if !(self.maturity > 0.0 && self.maturity.is_finite()) {
            return Err(invalid(
                "maturity",
                format!("must be positive, got {}", self.maturity),
            ));
        }
        if !self.rate.is_finite() || !self.dividend_yield.is_finite() {
            return Err(invalid("rate", "rates must be finite"));
        }
        Ok(())
    }

    pub fn discount(&self) -> f64 {
        (-self.rate * self.maturity).exp()
    }

    pub fn dividend_discount(&self) -> f64 {
        (-self.dividend_yield * self.maturity).exp()
    }

    pub fn forward(&self) -> f64 {
        self.spot * ((self.rate - self.dividend_yield) * self.maturity).exp()
    }

    /// Drift-adjusted log-moneyness `log(K / S0) - (r - q) T`.
    pub fn log_moneyness(&self, strike: f64) -> f64 {
        (strike / self.spot).ln() - (self.rate - self.dividend_yield) * self.maturity
    }

    /// Inverse of [`MarketSpec::log_moneyness`].
    pub fn strike_from_log_moneyness(&self, k: f64) -> f64 {
        self.spot * (k + (self.rate - self.dividend_yield) * self.maturity).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbmParams {
    pub sigma: f64,
}

impl GbmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(invalid(
                "sigma",
                format!("must be positive, got {}", self.sigma),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HestonParams {
    /// Mean-reversion speed.
    pub lambda: f64,
    /// Volatility of variance.
    pub eta_vol: f64,
    /// Long-run variance.
    pub v_bar: f64,
    /// Initial variance.
    pub v0: f64,
    pub rho: f64,
}

impl HestonParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda", self.lambda),
            ("eta_vol", self.eta_vol),
            ("v_bar", self.v_bar),
            ("v0", self.v0),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !(-1.0..=1.0).contains(&self.rho) {
            return Err(invalid(
                "rho",
                format!("must lie in [-1, 1], got {}", self.rho),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CgmyParams {
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "G")]
    pub g: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "Y")]
    pub y: f64,
}

impl CgmyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) {
            return Err(invalid("C", format!("must be positive, got {}", self.c)));
        }
        if !(self.g > 0.0) {
            return Err(invalid("G", format!("must be positive, got {}", self.g)));
        }
        // The martingale compensator needs E[e^{L_T}] < infinity.
        if !(self.m > 1.0) {
            return Err(invalid("M", format!("must exceed 1, got {}", self.m)));
        }
        if !(self.y < 2.0) {
            return Err(invalid("Y", format!("must be below 2, got {}", self.y)));
        }
        if self.y == 0.0 || self.y == 1.0 {
            return Err(invalid(
                "Y",
                "Y = 0 and Y = 1 need the logarithmic limit forms, which are not supported",
            ));
        }
        Ok(())
    }
}

/// Geometric Brownian motion.
#[derive(Debug, Clone, Copy)]
pub struct GbmCf {
    pub params: GbmParams,
    pub market: MarketSpec,
}

impl GbmCf {
    pub fn new(params: GbmParams, market: MarketSpec) -> Result<Self> {
        params.validate()?;
        market.validate()?;
        Ok(GbmCf { params, market })
    }
}

impl CharacteristicFunction for GbmCf {
    fn eval(&self, kappa: Complex64) -> Result<Complex64> {
        let u = angular(kappa);
        let var = self.params.sigma * self.params.sigma * self.market.maturity;
        Ok((I * u * (-0.5 * var) - u * u * (0.5 * var)).exp())
    }
}

/// Normal log-return with arbitrary mean and standard deviation. Not a
/// martingale model in general; used for sanity runs and test oracles.
#[derive(Debug, Clone, Copy)]
pub struct GaussianCf {
    pub mean: f64,
    pub std_dev: f64,
}

impl GaussianCf {
    pub fn new(mean: f64, std_dev: f64) -> Result<Self> {
        if !(std_dev > 0.0) {
            return Err(invalid("std_dev", "must be positive"));
        }
        Ok(GaussianCf { mean, std_dev })
    }
}

impl CharacteristicFunction for GaussianCf {
    fn eval(&self, kappa: Complex64) -> Result<Complex64> {
        let u = angular(kappa);
        Ok((I * u * self.mean - u * u * (0.5 * self.std_dev * self.std_dev)).exp())
    }
}

/// Heston stochastic volatility.
#[derive(Debug, Clone, Copy)]
pub struct HestonCf {
    pub params: HestonParams,
    pub market: MarketSpec,
    /// Exponents whose real part exceeds this cap are treated as overflow and
    /// the evaluation returns zero.
    pub overflow_cap: f64,
}

impl HestonCf {
    pub fn new(params: HestonParams, market: MarketSpec) -> Result<Self> {
        params.validate()?;
        market.validate()?;
        Ok(HestonCf {
            params,
            market,
            overflow_cap: 700.0,
        })
    }

    /// Logarithm of the characteristic function at angular frequency `u`.
    ///
    /// Uses the `g = (beta - d) / (beta + d)` form, whose complex logarithm
    /// stays on the principal branch for all maturities.
    pub fn log_cf_angular(&self, u: Complex64) -> Complex64 {
        let HestonParams {
            lambda,
            eta_vol,
            v_bar,
            v0,
            rho,
        } = self.params;
        let t = self.market.maturity;
        let s2 = eta_vol * eta_vol;
        let beta = lambda - I * u * (rho * eta_vol);
        let d = (beta * beta + (I * u + u * u) * s2).sqrt();
        let bm = beta - d;
        let g = bm / (beta + d);
        let e = (-d * t).exp();
        let one_minus_ge = 1.0 - g * e;
        let c = (bm * t - 2.0 * (one_minus_ge / (1.0 - g)).ln()) * (lambda * v_bar / s2);
        let dd = bm / s2 * (1.0 - e) / one_minus_ge;
        c + dd * v0
    }
}

impl CharacteristicFunction for HestonCf {
    fn eval(&self, kappa: Complex64) -> Result<Complex64> {
        let z = self.log_cf_angular(angular(kappa));
        if !z.re.is_finite() || z.re > self.overflow_cap {
            log::warn!(
                "Heston exponent {z} at kappa {kappa} exceeds the overflow cap; returning 0"
            );
            return Ok(Complex64::new(0.0, 0.0));
        }
        Ok(z.exp())
    }
}

/// CGMY tempered stable Levy process with analytic martingale compensator.
#[derive(Debug, Clone, Copy)]
pub struct CgmyCf {
    pub params: CgmyParams,
    pub market: MarketSpec,
    scale: f64,
    compensator: f64,
}

impl CgmyCf {
    pub fn new(params: CgmyParams, market: MarketSpec) -> Result<Self> {
        params.validate()?;
        market.validate()?;
        let scale = params.c * gamma(-params.y);
        let CgmyParams { g, m, y, .. } = params;
        // psi(-i): log E[e^{L_1}]
        let compensator = scale * ((m - 1.0).powf(y) - m.powf(y) + (g + 1.0).powf(y) - g.powf(y));
        Ok(CgmyCf {
            params,
            market,
            scale,
            compensator,
        })
    }

    /// Characteristic exponent `psi(u)` of the Levy process at unit time,
    /// without compensator.
    fn exponent(&self, u: Complex64) -> Complex64 {
        let CgmyParams { g, m, y, .. } = self.params;
        let mm = Complex64::new(m, 0.0) - I * u;
        let gg = Complex64::new(g, 0.0) + I * u;
        (mm.powf(y) - m.powf(y) + gg.powf(y) - g.powf(y)) * self.scale
    }
}

impl CharacteristicFunction for CgmyCf {
    fn eval(&self, kappa: Complex64) -> Result<Complex64> {
        let u = angular(kappa);
        // (M - iu) and (G + iu) must keep a positive real part.
        if !(u.im > -self.params.m && u.im < self.params.g) {
            return Err(PricingError::CfDomain {
                re: kappa.re,
                im: kappa.im,
            });
        }
        let t = self.market.maturity;
        Ok(((self.exponent(u) - I * u * self.compensator) * t).exp())
    }
}

/// Standard normal cumulative distribution function.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Black-Scholes `d1`, `d2`. Only meaningful for `sigma > 0`.
fn d1_d2(m: &MarketSpec, sigma: f64, strike: f64) -> (f64, f64) {
    let sd = sigma * m.maturity.sqrt();
    let d1 = ((m.forward() / strike).ln() + 0.5 * sd * sd) / sd;
    (d1, d1 - sd)
}

pub fn black_scholes_put(m: &MarketSpec, sigma: f64, strike: f64) -> f64 {
    let df = m.discount();
    let dq = m.dividend_discount();
    if sigma <= 0.0 || strike <= 0.0 {
        return (strike.max(0.0) * df - m.spot * dq).max(0.0);
    }
    let (d1, d2) = d1_d2(m, sigma, strike);
    strike * df * norm_cdf(-d2) - m.spot * dq * norm_cdf(-d1)
}

pub fn black_scholes_call(m: &MarketSpec, sigma: f64, strike: f64) -> f64 {
    let df = m.discount();
    let dq = m.dividend_discount();
    if sigma <= 0.0 || strike <= 0.0 {
        return (m.spot * dq - strike.max(0.0) * df).max(0.0);
    }
    let (d1, d2) = d1_d2(m, sigma, strike);
    m.spot * dq * norm_cdf(d1) - strike * df * norm_cdf(d2)
}

/// Discounted cash-or-nothing put `K e^{-rT} N(-d2)`.
pub fn black_scholes_con_put(m: &MarketSpec, sigma: f64, strike: f64) -> f64 {
    let (_, d2) = d1_d2(m, sigma, strike);
    strike * m.discount() * norm_cdf(-d2)
}

/// Asset-or-nothing put `S0 e^{-qT} N(-d1)`.
pub fn black_scholes_aon_put(m: &MarketSpec, sigma: f64, strike: f64) -> f64 {
    let (d1, _) = d1_d2(m, sigma, strike);
    m.spot * m.dividend_discount() * norm_cdf(-d1)
}

/// Black-Scholes vega `dP/dsigma` (same for puts and calls).
pub fn black_scholes_vega(m: &MarketSpec, sigma: f64, strike: f64) -> f64 {
    let (d1, _) = d1_d2(m, sigma, strike);
    m.spot * m.dividend_discount() * norm_pdf(d1) * m.maturity.sqrt()
}

/// Gaussian density of the drift-adjusted log-return under GBM.
pub fn lognormal_density_oracle(m: &MarketSpec, sigma: f64, s: f64) -> f64 {
    let sd = sigma * m.maturity.sqrt();
    let z = (s + 0.5 * sd * sd) / sd;
    norm_pdf(z) / sd
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn gbm_market() -> MarketSpec {
        MarketSpec::new(1.0, 0.1, 0.0, 0.1).unwrap()
    }

    fn heston() -> HestonCf {
        let p = HestonParams {
            lambda: 1.5768,
            eta_vol: 0.5751,
            v_bar: 0.0398,
            v0: 0.0157,
            rho: -0.5711,
        };
        HestonCf::new(p, MarketSpec::new(1.0, 0.0, 0.0, 1.0).unwrap()).unwrap()
    }

    fn cgmy(y: f64) -> CgmyCf {
        let p = CgmyParams {
            c: 1.0,
            g: 5.0,
            m: 5.0,
            y,
        };
        CgmyCf::new(p, MarketSpec::new(1.0, 0.1, 0.0, 1.0).unwrap()).unwrap()
    }

    fn all_models() -> Vec<Box<dyn CharacteristicFunction>> {
        vec![
            Box::new(GbmCf::new(GbmParams { sigma: 0.25 }, gbm_market()).unwrap()),
            Box::new(heston()),
            Box::new(cgmy(0.5)),
            Box::new(cgmy(1.5)),
            Box::new(cgmy(1.98)),
        ]
    }

    #[test]
    fn normalization_and_martingale() {
        for cf in all_models() {
            let one = cf.eval(Complex64::new(0.0, 0.0)).unwrap();
            assert_eq!(one, Complex64::new(1.0, 0.0));
            let mart = cf.eval(martingale_frequency()).unwrap();
            assert!(
                (mart - 1.0).norm() < 1e-10,
                "martingale check failed: {mart}"
            );
        }
    }

    #[test]
    fn conjugate_symmetry_and_bound() {
        for cf in all_models() {
            for &k in &[0.1, 0.7, 3.0, 17.5] {
                let p = cf.eval(Complex64::new(k, 0.0)).unwrap();
                let n = cf.eval(Complex64::new(-k, 0.0)).unwrap();
                assert!((p - n.conj()).norm() < 1e-14);
                assert!(p.norm() <= 1.0 + 1e-14);
            }
        }
    }

    #[test]
    fn cgmy_rejects_frequencies_outside_strip() {
        let cf = cgmy(1.5);
        let k = Complex64::new(0.3, -6.0 / (2.0 * PI));
        assert!(matches!(cf.eval(k), Err(PricingError::CfDomain { .. })));
    }

    #[test]
    fn black_scholes_matches_reference_values() {
        let m = gbm_market();
        assert_abs_diff_eq!(
            black_scholes_put(&m, 0.25, 1.0),
            0.026649518282422,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            black_scholes_put(&m, 0.25, 0.9),
            0.002397281616196,
            epsilon = 1e-14
        );
        assert_eq!(black_scholes_put(&m, 0.0, 0.9), 0.0);
        let call = black_scholes_call(&m, 0.25, 1.1);
        let put = black_scholes_put(&m, 0.25, 1.1);
        assert_abs_diff_eq!(call - put, 1.0 - 1.1 * m.discount(), epsilon = 1e-15);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(MarketSpec::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(MarketSpec::new(1.0, 0.0, 0.0, 0.0).is_err());
        assert!(GbmCf::new(GbmParams { sigma: -0.1 }, gbm_market()).is_err());
        let mut p = heston().params;
        p.rho = -1.2;
        assert!(HestonCf::new(p, gbm_market()).is_err());
        let bad = CgmyParams {
            c: 1.0,
            g: 5.0,
            m: 5.0,
            y: 2.0,
        };
        assert!(CgmyCf::new(bad, gbm_market()).is_err());
    }

    #[test]
    fn density_mode_value() {
        let m = gbm_market();
        let sd = 0.25 * m.maturity.sqrt();
        let mode = -0.5 * sd * sd;
        let peak = lognormal_density_oracle(&m, 0.25, mode);
        assert_abs_diff_eq!(
            peak,
            1.0 / (0.25 * (2.0 * PI * m.maturity).sqrt()),
            epsilon = 1e-12
        );
    }
}
