//! SINC expansion of the truncated log-return density.
//!
//! With the density supported on `[X_l, X_h]`, half-width `X_c` and midpoint
//! `X_m`, digital expectations reduce to sums over the positive odd
//! frequencies `kappa_j = j / (2 X_c)`:
//!
//! ```text
//! E[1{s < k}] = 1/2 - (2/pi) sum_n Im(f(kappa_{2n-1}) e^{-i 2 pi kappa_{2n-1} k}) / (2n - 1)
//! ```
//!
//! The asset-or-nothing expectation `E[e^s 1{s < k}]` uses the same series
//! with the characteristic function sampled at `kappa - i / (2 pi)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, PricingError, Result};
use crate::models::{martingale_frequency, CharacteristicFunction, MarketSpec};

/// Digital expectations outside `[-ILL_RESOLVED_MARGIN, 1 + ILL_RESOLVED_MARGIN]`
/// are flagged as ill-resolved.
pub const ILL_RESOLVED_MARGIN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationRange {
    pub x_l: f64,
    pub x_h: f64,
}

impl TruncationRange {
    pub fn new(x_l: f64, x_h: f64) -> Result<Self> {
        if !(x_l.is_finite() && x_h.is_finite() && x_l < x_h) {
            return Err(invalid(
                "range",
                format!("need finite X_l < X_h, got [{x_l}, {x_h}]"),
            ));
        }
        Ok(TruncationRange { x_l, x_h })
    }

    pub fn symmetric(half_width: f64) -> Result<Self> {
        Self::new(-half_width, half_width)
    }

    /// `X_c`
    pub fn half_width(&self) -> f64 {
        0.5 * (self.x_h - self.x_l)
    }

    /// `X_m`
    pub fn mid(&self) -> f64 {
        0.5 * (self.x_h + self.x_l)
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.x_l..=self.x_h).contains(&x)
    }
}

/// Positive odd frequencies `kappa_1, kappa_3, ..., kappa_{2 terms - 1}`.
pub fn odd_frequencies(range: &TruncationRange, terms: usize) -> Vec<f64> {
    let xc = range.half_width();
    (1..=terms)
        .map(|n| (2 * n - 1) as f64 / (2.0 * xc))
        .collect()
}

/// Which expectation a series computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Leg {
    /// `E[1{s < k}]`
    Cash,
    /// `E[e^s 1{s < k}]`
    Asset,
}

impl Leg {
    /// Imaginary shift of the sampling frequencies.
    pub fn shift(self) -> Complex64 {
        match self {
            Leg::Cash => Complex64::new(0.0, 0.0),
            Leg::Asset => martingale_frequency(),
        }
    }
}

/// Characteristic function samples at the odd frequencies of a range, shared
/// across strikes.
#[derive(Debug, Clone)]
pub struct SeriesSamples {
    pub range: TruncationRange,
    pub leg: Leg,
    /// `f(kappa_{2n-1} + shift) e^{-i 2 pi (kappa_{2n-1} + shift) X_m}`
    values: Vec<Complex64>,
    /// Total mass of the weighted density, `E[1]` or `E[e^{s - X_m}]`.
    mass: f64,
    /// Multiplier restoring the `e^{X_m}` factor removed by centring.
    scale: f64,
}

impl SeriesSamples {
    pub fn new(
        cf: &dyn CharacteristicFunction,
        range: TruncationRange,
        terms: usize,
        leg: Leg,
    ) -> Result<Self> {
        if terms == 0 {
            return Err(invalid("N_F", "at least one term is required"));
        }
        let xm = range.mid();
        let shift = leg.shift();
        let zs: Vec<Complex64> = odd_frequencies(&range, terms)
            .into_iter()
            .map(|k| Complex64::new(k, 0.0) + shift)
            .collect();
        let raw = cf.eval_many(&zs)?;
        let values = centre(&zs, raw, xm);
        let (mass, scale) = match leg {
            Leg::Cash => (1.0, 1.0),
            Leg::Asset => {
                let m = cf.eval(shift)?.re;
                (m * (-xm).exp(), xm.exp())
            }
        };
        Ok(SeriesSamples {
            range,
            leg,
            values,
            mass,
            scale,
        })
    }

    pub fn terms(&self) -> usize {
        self.values.len()
    }

    /// Centred samples `f(kappa_{2n-1} + shift) e^{-i 2 pi (kappa_{2n-1} + shift) X_m}`.
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Total mass of the centred weighted density.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Factor `e^{X_m}` (asset leg) or 1 (cash leg) applied to the series.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Modulus of the highest sampled frequency's value, a cheap resolution check.
    pub fn last_modulus(&self) -> f64 {
        self.values.last().map_or(0.0, |v| v.norm())
    }

    /// Copy with an exponential spectral filter applied, damping the Gibbs
    /// ripples of an unresolved series at the cost of a slight smoothing.
    pub fn filtered(&self, strength: f64, order: i32) -> SeriesSamples {
        let span = (2 * self.values.len()) as f64;
        let mut out = self.clone();
        for (n, v) in out.values.iter_mut().enumerate() {
            let eta = (2 * n + 1) as f64 / span;
            *v *= (-strength * eta.powi(order)).exp();
        }
        out
    }

    /// Series value at log-moneyness `k` without clamping.
    pub fn raw(&self, k: f64) -> f64 {
        let xc = self.range.half_width();
        let phi = PI * (k - self.range.mid()) / xc;
        let mut acc = 0.0;
        for (n, f) in self.values.iter().enumerate() {
            let j = (2 * n + 1) as f64;
            let (s, c) = (j * phi).sin_cos();
            acc += (s * f.re - c * f.im) / j;
        }
        self.scale * (0.5 * self.mass + 2.0 / PI * acc)
    }

    /// Digital expectation at `k`, clamped to its limit outside the range.
    pub fn expectation(&self, k: f64) -> Digital {
        if k < self.range.x_l {
            return Digital {
                expectation: 0.0,
                clamped: true,
                ill_resolved: false,
            };
        }
        if k > self.range.x_h {
            return Digital {
                expectation: self.scale * self.mass,
                clamped: true,
                ill_resolved: false,
            };
        }
        Digital::from_raw(self.raw(k), self.scale * self.mass)
    }
}

/// Multiplies samples by `e^{-i 2 pi z X_m}` so the series runs over a centred range.
fn centre(zs: &[Complex64], mut values: Vec<Complex64>, xm: f64) -> Vec<Complex64> {
    if xm != 0.0 {
        let i2pi = Complex64::new(0.0, -2.0 * PI * xm);
        for (v, z) in values.iter_mut().zip(zs) {
            *v *= (i2pi * z).exp();
        }
    }
    values
}

/// A digital expectation with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Digital {
    pub expectation: f64,
    /// The strike fell outside the truncation range and the limit was returned.
    pub clamped: bool,
    /// The value lies well outside the admissible band.
    pub ill_resolved: bool,
}

impl Digital {
    pub(crate) fn from_raw(expectation: f64, mass: f64) -> Self {
        let lo = -ILL_RESOLVED_MARGIN;
        let hi = mass + ILL_RESOLVED_MARGIN;
        Digital {
            expectation,
            clamped: false,
            ill_resolved: !(lo..=hi).contains(&expectation),
        }
    }
}

/// `E[1{s < k}]` with `terms` characteristic function evaluations.
pub fn con_digital(
    cf: &dyn CharacteristicFunction,
    k: f64,
    range: TruncationRange,
    terms: usize,
) -> Result<Digital> {
    Ok(SeriesSamples::new(cf, range, terms, Leg::Cash)?.expectation(k))
}

/// `E[e^s 1{s < k}]` with `terms` characteristic function evaluations.
pub fn aon_digital(
    cf: &dyn CharacteristicFunction,
    k: f64,
    range: TruncationRange,
    terms: usize,
) -> Result<Digital> {
    Ok(SeriesSamples::new(cf, range, terms, Leg::Asset)?.expectation(k))
}

/// Distribution function of `s` at `x`.
pub fn cdf(
    cf: &dyn CharacteristicFunction,
    x: f64,
    range: TruncationRange,
    terms: usize,
) -> Result<f64> {
    Ok(SeriesSamples::new(cf, range, terms, Leg::Cash)?.raw(x))
}

/// Density of `s` on `grid`, reconstructed from `n` frequency slots
/// `kappa_j = j / (2 X_c)`, `|j| <= n / 2`.
pub fn pdf(
    cf: &dyn CharacteristicFunction,
    grid: &[f64],
    range: TruncationRange,
    n: usize,
) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(invalid("N", "at least two frequency slots are required"));
    }
    if let Some(x) = grid.iter().find(|x| !range.contains(**x)) {
        return Err(invalid(
            "grid",
            format!("point {x} lies outside [{}, {}]", range.x_l, range.x_h),
        ));
    }
    let xc = range.half_width();
    let zs: Vec<Complex64> = (1..=n / 2)
        .map(|j| Complex64::new(j as f64 / (2.0 * xc), 0.0))
        .collect();
    let f = cf.eval_many(&zs)?;
    Ok(grid
        .iter()
        .map(|&x| {
            let acc: f64 = zs
                .iter()
                .zip(&f)
                .map(|(z, v)| (v * Complex64::new(0.0, -2.0 * PI * z.re * x).exp()).re)
                .sum();
            (1.0 + 2.0 * acc) / (2.0 * xc)
        })
        .collect())
}

const FILTER_STRENGTH: f64 = 36.0;
const FILTER_ORDER: i32 = 8;

/// Parameters of the iterative truncation-range search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationSearch {
    pub tail_mass: f64,
    pub initial_half_width: f64,
    pub cdf_terms: usize,
    /// Ceiling for `cdf_terms` when the characteristic function has not
    /// decayed below the tail mass by the last term.
    pub max_cdf_terms: usize,
    /// Relative change in `X_c` below which the search stops.
    pub tolerance: f64,
    /// `X_c` is set to this multiple of the largest tail quantile.
    pub widening: f64,
    pub max_iterations: usize,
    /// The search fails once `X_c` would exceed this.
    pub max_half_width: f64,
}

impl Default for TruncationSearch {
    fn default() -> Self {
        TruncationSearch {
            tail_mass: 1e-10,
            initial_half_width: 8.0,
            cdf_terms: 1024,
            max_cdf_terms: 8192,
            tolerance: 0.30,
            widening: 4.0,
            max_iterations: 50,
            max_half_width: 1e5,
        }
    }
}

/// Symmetric truncation range holding all but `tail_mass` of each tail.
pub fn find_truncation(cf: &dyn CharacteristicFunction, tail_mass: f64) -> Result<TruncationRange> {
    find_truncation_with(
        cf,
        &TruncationSearch {
            tail_mass,
            ..TruncationSearch::default()
        },
    )
}

pub fn find_truncation_with(
    cf: &dyn CharacteristicFunction,
    search: &TruncationSearch,
) -> Result<TruncationRange> {
    let tail = search.tail_mass;
    if !(tail > 0.0 && tail < 0.5) {
        return Err(invalid(
            "tail_mass",
            format!("must lie in (0, 0.5), got {tail}"),
        ));
    }
    let mut xc = search.initial_half_width;
    let mut iterations = 0;
    loop {
        if iterations >= search.max_iterations {
            return Err(PricingError::TruncationNotConverged {
                iterations,
                last_half_width: xc,
            });
        }
        iterations += 1;
        if xc > search.max_half_width {
            return Err(PricingError::TruncationNotConverged {
                iterations,
                last_half_width: xc,
            });
        }
        let range = TruncationRange::symmetric(xc)?;
        let mut terms = search.cdf_terms;
        let mut samples = SeriesSamples::new(cf, range, terms, Leg::Cash)?;
        while samples.last_modulus() > tail && terms < search.max_cdf_terms {
            terms = (2 * terms).min(search.max_cdf_terms);
            samples = SeriesSamples::new(cf, range, terms, Leg::Cash)?;
        }
        // An unresolved series rings at the size of its last term, which
        // swamps a small tail mass.
        if samples.last_modulus() > tail {
            log::warn!(
                "characteristic function not resolved by {terms} terms at X_c = {xc}; filtering the CDF series"
            );
            samples = samples.filtered(FILTER_STRENGTH, FILTER_ORDER);
        }
        // The series is exact only for |k - s| < X_c, so the quantiles are
        // searched inside the half range.
        let probe = 0.5 * xc;
        let inside = |s: &SeriesSamples| s.raw(-probe) < tail && s.raw(probe) > 1.0 - tail;
        if !inside(&samples) {
            xc *= 2.0;
            continue;
        }
        let lower = bisect(|x| samples.raw(x) - tail, -probe, probe);
        let upper = bisect(|x| samples.raw(x) - (1.0 - tail), -probe, probe);
        let next = search.widening * lower.abs().max(upper.abs());
        log::debug!("truncation search: X_c {xc} -> {next} (quantiles {lower}, {upper})");
        if !(next.is_finite() && next > 0.0) {
            return Err(PricingError::TruncationNotConverged {
                iterations,
                last_half_width: xc,
            });
        }
        if ((next - xc) / xc).abs() < search.tolerance {
            return TruncationRange::symmetric(next);
        }
        xc = next;
    }
}

/// Root of `f` in `[lo, hi]` given `f(lo) < 0 < f(hi)`.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptionKind {
    PvPut,
    PvCall,
    /// Cash-or-nothing put, scaled by `K e^{-rT}`.
    ConPut,
    /// Asset-or-nothing put, scaled by `S0 e^{-qT}`.
    AonPut,
}

impl OptionKind {
    /// Series terms per digital leg for a budget of `n_f` evaluations.
    /// Present-value options split the budget across both legs.
    pub fn terms_per_leg(self, n_f: usize) -> usize {
        match self {
            OptionKind::PvPut | OptionKind::PvCall => n_f / 2,
            OptionKind::ConPut | OptionKind::AonPut => n_f,
        }
    }

    pub fn needs_cash(self) -> bool {
        !matches!(self, OptionKind::AonPut)
    }

    pub fn needs_asset(self) -> bool {
        !matches!(self, OptionKind::ConPut)
    }
}

impl std::str::FromStr for OptionKind {
    type Err = PricingError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pv" | "put" | "pv_put" | "pv-put" => Ok(OptionKind::PvPut),
            "call" | "pv_call" | "pv-call" => Ok(OptionKind::PvCall),
            "con" | "con_put" | "con-put" => Ok(OptionKind::ConPut),
            "aon" | "aon_put" | "aon-put" => Ok(OptionKind::AonPut),
            other => Err(invalid("kind", format!("unknown option kind `{other}`"))),
        }
    }
}

/// A digital leg's expectation together with its scaled price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DigitalPrice {
    pub expectation: f64,
    pub scaled_price: f64,
    pub clamped: bool,
    pub ill_resolved: bool,
}

pub struct PricingRequest<'a> {
    pub market: MarketSpec,
    pub cf: &'a dyn CharacteristicFunction,
    pub strike: f64,
    pub kind: OptionKind,
    /// Characteristic function evaluations spent on the price.
    pub n_f: usize,
    pub range: TruncationRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceOutcome {
    pub price: f64,
    pub cash: Option<DigitalPrice>,
    pub asset: Option<DigitalPrice>,
}

impl PriceOutcome {
    pub fn flagged(&self) -> bool {
        [self.cash, self.asset]
            .iter()
            .flatten()
            .any(|d| d.clamped || d.ill_resolved)
    }
}

/// Prices one option by direct series summation.
pub fn price(req: &PricingRequest<'_>) -> Result<PriceOutcome> {
    if !(req.strike > 0.0 && req.strike.is_finite()) {
        return Err(invalid(
            "strike",
            format!("must be positive, got {}", req.strike),
        ));
    }
    let terms = req.kind.terms_per_leg(req.n_f);
    if terms == 0 {
        return Err(invalid(
            "N_F",
            format!("{} evaluations leave no terms per leg", req.n_f),
        ));
    }
    let pricer = SincPricer::new(req.cf, req.market, req.range, terms, req.kind)?;
    pricer.price(req.strike, req.kind)
}

/// PV put by direct series summation.
pub fn pv_put(req: &PricingRequest<'_>) -> Result<f64> {
    price(&PricingRequest {
        kind: OptionKind::PvPut,
        ..*req
    })
    .map(|o| o.price)
}

/// Reusable samples for pricing many strikes at one maturity.
#[derive(Debug, Clone)]
pub struct SincPricer {
    pub market: MarketSpec,
    cash: Option<SeriesSamples>,
    asset: Option<SeriesSamples>,
}

impl SincPricer {
    /// Samples the legs `kind` needs with `terms` evaluations each.
    pub fn new(
        cf: &dyn CharacteristicFunction,
        market: MarketSpec,
        range: TruncationRange,
        terms: usize,
        kind: OptionKind,
    ) -> Result<Self> {
        market.validate()?;
        let cash = if kind.needs_cash() {
            Some(SeriesSamples::new(cf, range, terms, Leg::Cash)?)
        } else {
            None
        };
        let asset = if kind.needs_asset() {
            Some(SeriesSamples::new(cf, range, terms, Leg::Asset)?)
        } else {
            None
        };
        Ok(SincPricer {
            market,
            cash,
            asset,
        })
    }

    pub fn price(&self, strike: f64, kind: OptionKind) -> Result<PriceOutcome> {
        let k = self.market.log_moneyness(strike);
        let cash = self.cash.as_ref().map(|s| s.expectation(k));
        let asset = self.asset.as_ref().map(|s| s.expectation(k));
        Ok(assemble(&self.market, strike, kind, cash, asset))
    }
}

/// Combines digital expectations into the requested price.
pub fn assemble(
    market: &MarketSpec,
    strike: f64,
    kind: OptionKind,
    cash: Option<Digital>,
    asset: Option<Digital>,
) -> PriceOutcome {
    let kd = strike * market.discount();
    let sd = market.spot * market.dividend_discount();
    let cash = cash.map(|d| DigitalPrice {
        expectation: d.expectation,
        scaled_price: kd * d.expectation,
        clamped: d.clamped,
        ill_resolved: d.ill_resolved,
    });
    let asset = asset.map(|d| DigitalPrice {
        expectation: d.expectation,
        scaled_price: sd * d.expectation,
        clamped: d.clamped,
        ill_resolved: d.ill_resolved,
    });
    let con = cash.map_or(0.0, |d| d.scaled_price);
    let aon = asset.map_or(0.0, |d| d.scaled_price);
    let price = match kind {
        OptionKind::PvPut => con - aon,
        OptionKind::PvCall => (sd - aon) - (kd - con),
        OptionKind::ConPut => con,
        OptionKind::AonPut => aon,
    };
    PriceOutcome { price, cash, asset }
}
