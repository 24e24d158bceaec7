//! Implied-volatility surfaces for ranking the FFT pricers at a fixed budget
//! of characteristic function evaluations.

use std::collections::HashMap;
use std::io::Read;
use std::sync::Mutex;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use log::warn;

use crate::analytics::{implied_vol, make_benchmark, MAX_DIGITS};
use crate::competitors::{
    carr_madan_call_fft, grid_epsilon, lewis_call_fft, CarrMadanConfig, CosConfig, CosSamples,
    LewisConfig,
};
use crate::error::{invalid, PricingError, Result};
use crate::fft::{epsilon_for_targets, sinc_fft_smile};
use crate::models::{CharacteristicFunction, MarketSpec};
use crate::sinc::{find_truncation, OptionKind, SincPricer, TruncationRange};
use crate::tables::{ModelSpec, TAIL_MASS};

pub const SYNTHETIC_MATURITIES: [f64; 10] = [0.01, 0.02, 0.05, 0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.5];
/// Widest log-moneyness on the synthetic grid.
pub const MAX_LOG_MONEYNESS: f64 = 0.5;
/// Log-moneyness reach in units of `sqrt(xi0 T)` on short maturities.
pub const STD_DEVS: f64 = 3.0;
/// Evaluations per leg behind the reference prices.
pub const REFERENCE_TERMS: usize = 4096;
/// Error charged to a point whose price admits no implied volatility.
pub const FAILED_POINT_ERROR: f64 = 1.0;

/// Memoizes a characteristic function by the exact bits of the frequency.
pub struct CachedCf<C> {
    inner: C,
    cache: Mutex<HashMap<(u64, u64), Complex64>>,
}

impl<C: CharacteristicFunction> CachedCf<C> {
    pub fn new(inner: C) -> Self {
        CachedCf {
            inner,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn key(z: Complex64) -> (u64, u64) {
    (z.re.to_bits(), z.im.to_bits())
}

impl<C: CharacteristicFunction> CharacteristicFunction for CachedCf<C> {
    fn eval(&self, kappa: Complex64) -> Result<Complex64> {
        if let Some(v) = self.cache.lock().expect("cache lock").get(&key(kappa)) {
            return Ok(*v);
        }
        let v = self.inner.eval(kappa)?;
        self.cache.lock().expect("cache lock").insert(key(kappa), v);
        Ok(v)
    }

    fn eval_many(&self, kappas: &[Complex64]) -> Result<Vec<Complex64>> {
        let missing: Vec<Complex64> = {
            let cache = self.cache.lock().expect("cache lock");
            kappas
                .iter()
                .copied()
                .filter(|z| !cache.contains_key(&key(*z)))
                .collect()
        };
        let fresh = self.inner.eval_many(&missing)?;
        let mut cache = self.cache.lock().expect("cache lock");
        for (z, v) in missing.into_iter().zip(fresh) {
            cache.insert(key(z), v);
        }
        Ok(kappas.iter().map(|z| cache[&key(*z)]).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    #[serde(rename = "K")]
    pub strike: f64,
    #[serde(rename = "T")]
    pub maturity: f64,
}

/// Reads `K,T` rows.
pub fn points_from_csv<R: Read>(reader: R) -> Result<Vec<SurfacePoint>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|r| r.map_err(|e| PricingError::Config(e.to_string())))
        .collect()
}

/// Ten maturities from 0.01 to 2.5 with `n_strikes` log-moneyness nodes each,
/// spanning `+-min(0.5, 3 sqrt(atm_variance T))`.
pub fn synthetic_points(atm_variance: f64, n_strikes: usize, rate: f64) -> Vec<SurfacePoint> {
    let mut out = Vec::new();
    for &t in &SYNTHETIC_MATURITIES {
        let reach = MAX_LOG_MONEYNESS.min(STD_DEVS * (atm_variance * t).sqrt());
        for i in 0..n_strikes {
            let x = if n_strikes == 1 {
                0.0
            } else {
                -reach + 2.0 * reach * i as f64 / (n_strikes - 1) as f64
            };
            out.push(SurfacePoint {
                strike: (x + rate * t).exp(),
                maturity: t,
            });
        }
    }
    out
}

/// One maturity: its model, truncation range, strikes and reference vols.
pub struct Slice {
    pub market: MarketSpec,
    pub range: TruncationRange,
    pub strikes: Vec<f64>,
    pub reference_vols: Vec<f64>,
    cf: CachedCf<Box<dyn CharacteristicFunction>>,
}

impl Slice {
    pub fn cf(&self) -> &dyn CharacteristicFunction {
        &self.cf
    }

    /// Largest `|log(K/F)|` on the slice.
    pub fn reach(&self) -> f64 {
        let f = self.market.forward();
        self.strikes
            .iter()
            .map(|k| (k / f).ln().abs())
            .fold(0.0, f64::max)
    }

    fn mean_vol_error(&self, prices: &[f64]) -> (f64, usize) {
        let mut sum = 0.0;
        let mut failed = 0;
        for ((&k, &p), &v) in self.strikes.iter().zip(prices).zip(&self.reference_vols) {
            match otm_vol(p, &self.market, k) {
                Ok(iv) => sum += (iv - v).abs(),
                Err(_) => {
                    failed += 1;
                    sum += FAILED_POINT_ERROR;
                }
            }
        }
        (sum, failed)
    }
}

/// Implied vol of a put price, switching to the call through parity when the
/// strike is above the forward.
fn otm_vol(put: f64, market: &MarketSpec, strike: f64) -> Result<f64> {
    if strike > market.forward() {
        let call = put + market.spot * market.dividend_discount() - strike * market.discount();
        implied_vol(call, market, strike, OptionKind::PvCall)
    } else {
        implied_vol(put, market, strike, OptionKind::PvPut)
    }
}

/// FFT pricers compared on a surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurfaceMethod {
    SincFrfft,
    LewisFrfft,
    CarrMadanFrfft,
}

impl SurfaceMethod {
    pub fn name(self) -> &'static str {
        match self {
            SurfaceMethod::SincFrfft => "sinc-frfft",
            SurfaceMethod::LewisFrfft => "lewis-frfft",
            SurfaceMethod::CarrMadanFrfft => "carrmadan-frfft",
        }
    }

    pub fn uses_beta(self) -> bool {
        !matches!(self, SurfaceMethod::SincFrfft)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceError {
    pub mean_abs_vol_error: f64,
    /// Points whose price admitted no implied volatility.
    pub failed_points: usize,
    pub points: usize,
}

pub struct Surface {
    pub slices: Vec<Slice>,
}

impl Surface {
    /// Builds slices for `points` grouped by maturity, with truncation ranges
    /// from the cutting rule and reference vols from high-precision SINC and
    /// COS prices.
    pub fn build(model: &ModelSpec, rate: f64, points: &[SurfacePoint]) -> Result<Surface> {
        if points.is_empty() {
            return Err(invalid("surface", "no points"));
        }
        let mut maturities: Vec<f64> = points.iter().map(|p| p.maturity).collect();
        maturities.sort_by(f64::total_cmp);
        maturities.dedup();
        let mut slices = Vec::new();
        for t in maturities {
            let market = MarketSpec::new(1.0, rate, 0.0, t)?;
            let cf = CachedCf::new(model.build(market)?);
            let range = find_truncation(&cf, TAIL_MASS)?;
            let mut strikes: Vec<f64> = points
                .iter()
                .filter(|p| p.maturity == t)
                .map(|p| p.strike)
                .collect();
            strikes.sort_by(f64::total_cmp);
            let sinc = SincPricer::new(&cf, market, range, REFERENCE_TERMS, OptionKind::PvPut)?;
            let cos = CosSamples::new(
                &cf,
                &CosConfig {
                    n_f: 2 * REFERENCE_TERMS,
                    range,
                },
            )?;
            let reference_vols = strikes
                .iter()
                .map(|&k| {
                    let a = sinc.price(k, OptionKind::PvPut)?.price;
                    let b = cos.price(&market, k, OptionKind::PvPut).price;
                    let bench = make_benchmark(a, b)?;
                    if bench.digits_retained < MAX_DIGITS {
                        warn!(
                            "T = {t}, K = {k}: reference sources agree to {} decimals",
                            bench.digits_retained
                        );
                    }
                    // Chopping to ten decimals would move deep out-of-the-money
                    // vols by up to 1e-7, so the unchopped mean is inverted.
                    otm_vol(0.5 * (a + b), &market, k)
                })
                .collect::<Result<Vec<f64>>>()?;
            slices.push(Slice {
                market,
                range,
                strikes,
                reference_vols,
                cf,
            });
        }
        Ok(Surface { slices })
    }

    pub fn points(&self) -> usize {
        self.slices.iter().map(|s| s.strikes.len()).sum()
    }

    /// Mean absolute implied-vol error of `method` spending `n_f` evaluations
    /// per maturity.
    pub fn error(&self, method: SurfaceMethod, n_f: usize, beta: f64) -> Result<SurfaceError> {
        let mut sum = 0.0;
        let mut failed = 0;
        for s in &self.slices {
            let cf = s.cf();
            let smile = match method {
                SurfaceMethod::SincFrfft => {
                    let ks: Vec<f64> = s
                        .strikes
                        .iter()
                        .map(|&k| s.market.log_moneyness(k))
                        .collect();
                    let eps = epsilon_for_targets(&ks, &s.range, 2 * n_f);
                    sinc_fft_smile(
                        cf,
                        &s.market,
                        s.range,
                        n_f,
                        Some(eps),
                        &s.strikes,
                        OptionKind::PvPut,
                    )?
                }
                SurfaceMethod::LewisFrfft => {
                    let mut cfg = LewisConfig {
                        n: n_f,
                        beta,
                        epsilon: 1.0,
                    };
                    cfg.epsilon = grid_epsilon(s.reach(), cfg.eta(&s.range), n_f);
                    lewis_call_fft(cf, &s.market, &s.range, &cfg, &s.strikes, OptionKind::PvPut)?
                }
                SurfaceMethod::CarrMadanFrfft => {
                    let mut cfg = CarrMadanConfig::new(n_f, beta);
                    cfg.epsilon = grid_epsilon(s.reach(), cfg.eta(&s.range), n_f);
                    carr_madan_call_fft(
                        cf,
                        &s.market,
                        &s.range,
                        &cfg,
                        &s.strikes,
                        OptionKind::PvPut,
                    )?
                }
            };
            let (e, f) = s.mean_vol_error(&smile.prices);
            sum += e;
            failed += f;
        }
        let points = self.points();
        Ok(SurfaceError {
            mean_abs_vol_error: sum / points as f64,
            failed_points: failed,
            points,
        })
    }

    /// Error at each `beta`, in the order given.
    pub fn beta_sweep(
        &self,
        method: SurfaceMethod,
        n_f: usize,
        betas: &[f64],
    ) -> Result<Vec<(f64, SurfaceError)>> {
        betas
            .iter()
            .map(|&b| Ok((b, self.error(method, n_f, b)?)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingStep {
    pub n_f: usize,
    /// Best spacing multiplier at this budget, for methods that take one.
    pub beta: Option<f64>,
    pub error: SurfaceError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub method: SurfaceMethod,
    /// Smallest budget in the grid meeting the target, if any.
    pub n_f_required: Option<usize>,
    pub steps: Vec<RankingStep>,
}

/// Walks `n_fs` upwards until `method` meets `target`, taking the best
/// `beta` at each budget.
pub fn rank_method(
    surface: &Surface,
    method: SurfaceMethod,
    n_fs: &[usize],
    betas: &[f64],
    target: f64,
) -> Result<Ranking> {
    let mut steps = Vec::new();
    let mut required = None;
    for &n_f in n_fs {
        let step = if method.uses_beta() {
            let sweep = surface.beta_sweep(method, n_f, betas)?;
            let (beta, error) = sweep
                .into_iter()
                .min_by(|a, b| a.1.mean_abs_vol_error.total_cmp(&b.1.mean_abs_vol_error))
                .ok_or_else(|| invalid("beta", "empty sweep"))?;
            RankingStep {
                n_f,
                beta: Some(beta),
                error,
            }
        } else {
            RankingStep {
                n_f,
                beta: None,
                error: surface.error(method, n_f, 0.0)?,
            }
        };
        let met = step.error.mean_abs_vol_error <= target;
        steps.push(step);
        if met {
            required = Some(n_f);
            break;
        }
    }
    Ok(Ranking {
        method,
        n_f_required: required,
        steps,
    })
}
