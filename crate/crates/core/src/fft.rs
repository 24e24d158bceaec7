//! SINC digitals on a whole strike grid by FFT and fractional FFT.
//!
//! With `N` frequency slots the digital expectations at `k_m = X_m + m eps 2 X_c / N`,
//! `m in [-N/2, N/2)`, are `(i / 2 pi) sum_n q_n e^{-i 2 pi n m eps / N}` where only
//! `q_0` and the odd slots are non-zero. Each leg needs `N/4` characteristic
//! function evaluations.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, PricingError, Result};
use crate::models::{CharacteristicFunction, MarketSpec};
use crate::sinc::{assemble, Digital, Leg, OptionKind, SeriesSamples, TruncationRange};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FftPlanSpec {
    /// Total frequency slots, a power of two.
    pub n: usize,
    pub range: TruncationRange,
    pub leg: Leg,
    /// Strike spacing relative to `2 X_c / N`; 1 gives the plain FFT grid.
    pub epsilon: f64,
}

impl FftPlanSpec {
    pub fn new(n: usize, range: TruncationRange, leg: Leg, epsilon: f64) -> Result<Self> {
        let plan = FftPlanSpec {
            n,
            range,
            leg,
            epsilon,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 8 || !self.n.is_power_of_two() {
            return Err(invalid(
                "N",
                format!("must be a power of two >= 8, got {}", self.n),
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

    /// Log-strike spacing of the output grid.
    pub fn spacing(&self) -> f64 {
        self.epsilon * 2.0 * self.range.half_width() / self.n as f64
    }

    /// Log-strikes `k_m` for `m in [-N/2, N/2)`.
    pub fn log_strikes(&self) -> Vec<f64> {
        let h = self.spacing();
        let half = (self.n / 2) as i64;
        (-half..half)
            .map(|m| self.range.mid() + m as f64 * h)
            .collect()
    }
}

/// Weights `q_0 .. q_{N-1}` in natural FFT order; slots above `N/2` hold the
/// negative frequencies.
#[derive(Debug, Clone)]
pub struct QVector {
    pub values: Vec<Complex64>,
    /// Factor `e^{X_m}` restoring the centring of the asset leg.
    pub scale: f64,
}

impl QVector {
    /// Same weights indexed by signed `n in [-N/2, N/2)`.
    pub fn signed(&self) -> Vec<Complex64> {
        let n = self.values.len();
        (0..n).map(|j| self.values[(j + n / 2) % n]).collect()
    }

    pub fn nonzero_count(&self) -> usize {
        self.values.iter().filter(|v| v.norm() != 0.0).count()
    }
}

pub fn build_q(cf: &dyn CharacteristicFunction, plan: &FftPlanSpec) -> Result<QVector> {
    plan.validate()?;
    let samples = SeriesSamples::new(cf, plan.range, plan.n / 4, plan.leg)?;
    Ok(q_from_samples(&samples, plan.n))
}

/// Arranges odd-frequency samples into the `N`-slot weight vector.
pub fn q_from_samples(samples: &SeriesSamples, n: usize) -> QVector {
    let mut q = vec![Complex64::new(0.0, 0.0); n];
    q[0] = Complex64::new(0.0, -PI * samples.mass());
    for (i, f) in samples.values().iter().take(n / 4).enumerate() {
        let j = 2 * i + 1;
        let w = 2.0 / j as f64;
        q[j] = f * w;
        q[n - j] = -f.conj() * w;
    }
    QVector {
        values: q,
        scale: samples.scale(),
    }
}

fn expectations(q: &QVector, sums: Vec<Complex64>) -> Vec<f64> {
    let c = Complex64::new(0.0, 1.0 / (2.0 * PI)) * q.scale;
    sums.into_iter().map(|s| (c * s).re).collect()
}

/// Digital expectations on the plain grid (`epsilon = 1`), ordered by `m` from `-N/2`.
pub fn fft_digitals(q: &QVector, plan: &FftPlanSpec) -> Result<Vec<f64>> {
    plan.validate()?;
    if plan.epsilon != 1.0 {
        return Err(invalid("epsilon", "the plain FFT grid needs epsilon = 1"));
    }
    let n = plan.n;
    check_len(q, n)?;
    let mut buf = q.values.clone();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let ordered = (0..n).map(|j| buf[(j + n / 2) % n]).collect();
    Ok(expectations(q, ordered))
}

/// Digital expectations on the compressed grid of spacing `epsilon 2 X_c / N`.
pub fn frfft_digitals(q: &QVector, plan: &FftPlanSpec) -> Result<Vec<f64>> {
    plan.validate()?;
    check_len(q, plan.n)?;
    Ok(expectations(q, fractional_dft(&q.signed(), plan.epsilon)))
}

fn check_len(q: &QVector, n: usize) -> Result<()> {
    if q.values.len() != n {
        return Err(invalid(
            "q",
            format!("length {} does not match N = {n}", q.values.len()),
        ));
    }
    Ok(())
}

/// `e^{i pi eps j^2 / N}` with the phase reduced before the trigonometric call.
fn chirp(j: i64, eps: f64, n: usize) -> Complex64 {
    let j2 = (j * j) as f64;
    let phase = (eps * j2 / n as f64).rem_euclid(2.0);
    Complex64::from_polar(1.0, PI * phase)
}

/// `y_m = sum_n x_n e^{-i 2 pi n m eps / N}` for signed `n, m in [-N/2, N/2)`,
/// with `x` and `y` indexed from `-N/2`. Uses the chirp-z identity
/// `nm = (n^2 + m^2 - (n - m)^2) / 2` and three transforms of length `2N`.
pub fn fractional_dft(x: &[Complex64], eps: f64) -> Vec<Complex64> {
    let n = x.len();
    let half = (n / 2) as i64;
    let len = 2 * n;
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);

    let mut a = vec![Complex64::new(0.0, 0.0); len];
    for (j, v) in x.iter().enumerate() {
        a[j] = v * chirp(j as i64 - half, eps, n).conj();
    }
    let mut b = vec![Complex64::new(0.0, 0.0); len];
    for d in 0..n {
        let c = chirp(d as i64, eps, n);
        b[d] = c;
        if d > 0 {
            b[len - d] = c;
        }
    }
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (u, v) in a.iter_mut().zip(&b) {
        *u *= v;
    }
    inv.process(&mut a);
    let norm = 1.0 / len as f64;
    (0..n)
        .map(|l| a[l] * norm * chirp(l as i64 - half, eps, n).conj())
        .collect()
}

/// O(N^2) reference for [`fractional_dft`].
pub fn naive_fractional_dft(x: &[Complex64], eps: f64) -> Vec<Complex64> {
    let n = x.len();
    let half = (n / 2) as i64;
    (0..n)
        .map(|l| {
            let m = l as i64 - half;
            x.iter()
                .enumerate()
                .map(|(j, v)| {
                    let k = j as i64 - half;
                    let phase = (eps * (k * m) as f64 / n as f64).rem_euclid(2.0);
                    v * Complex64::from_polar(1.0, -2.0 * PI * phase)
                })
                .sum()
        })
        .collect()
}

/// Cash and asset digital expectations on a common log-strike grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DigitalGrid {
    pub log_strikes: Vec<f64>,
    pub cash: Vec<f64>,
    pub asset: Vec<f64>,
    /// Limit of the asset leg for large strikes.
    pub asset_mass: f64,
}

impl DigitalGrid {
    /// Both legs on the grid of `n` slots; plain FFT when `epsilon = 1`.
    pub fn build(
        cf: &dyn CharacteristicFunction,
        range: TruncationRange,
        n: usize,
        epsilon: f64,
    ) -> Result<Self> {
        let cash_plan = FftPlanSpec::new(n, range, Leg::Cash, epsilon)?;
        let asset_plan = FftPlanSpec {
            leg: Leg::Asset,
            ..cash_plan
        };
        let cash_s = SeriesSamples::new(cf, range, n / 4, Leg::Cash)?;
        let asset_s = SeriesSamples::new(cf, range, n / 4, Leg::Asset)?;
        let qc = q_from_samples(&cash_s, n);
        let qa = q_from_samples(&asset_s, n);
        let (cash, asset) = if epsilon == 1.0 {
            (
                fft_digitals(&qc, &cash_plan)?,
                fft_digitals(&qa, &asset_plan)?,
            )
        } else {
            (
                frfft_digitals(&qc, &cash_plan)?,
                frfft_digitals(&qa, &asset_plan)?,
            )
        };
        Ok(DigitalGrid {
            log_strikes: cash_plan.log_strikes(),
            cash,
            asset,
            asset_mass: asset_s.mass() * asset_s.scale(),
        })
    }

    /// Linear interpolation of both legs at `k`. Returns the digitals and
    /// whether `k` fell strictly between nodes.
    pub fn interpolate(&self, k: f64) -> Result<(Digital, Digital, bool)> {
        let ks = &self.log_strikes;
        let (lo, hi) = (ks[0], ks[ks.len() - 1]);
        if !(lo..=hi).contains(&k) {
            return Err(PricingError::Extrapolation {
                target: k,
                lower: lo,
                upper: hi,
            });
        }
        let j = ks.partition_point(|&x| x <= k).clamp(1, ks.len() - 1);
        let (k0, k1) = (ks[j - 1], ks[j]);
        if k == k0 {
            return Ok((
                Digital::from_raw(self.cash[j - 1], 1.0),
                Digital::from_raw(self.asset[j - 1], self.asset_mass),
                false,
            ));
        }
        let w = (k - k0) / (k1 - k0);
        let lerp = |v: &[f64]| v[j - 1] + w * (v[j] - v[j - 1]);
        Ok((
            Digital::from_raw(lerp(&self.cash), 1.0),
            Digital::from_raw(lerp(&self.asset), self.asset_mass),
            w != 1.0,
        ))
    }
}

/// Prices at a set of strikes, with method metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmileResult {
    pub method: String,
    pub n_f: usize,
    pub strikes: Vec<f64>,
    pub prices: Vec<f64>,
    pub implied_vols: Vec<Option<f64>>,
    pub interpolated: Vec<bool>,
}

impl SmileResult {
    pub fn new(method: impl Into<String>, n_f: usize, strikes: Vec<f64>, prices: Vec<f64>) -> Self {
        let len = strikes.len();
        SmileResult {
            method: method.into(),
            n_f,
            strikes,
            prices,
            implied_vols: vec![None; len],
            interpolated: vec![false; len],
        }
    }
}

/// Strike compression that fits `targets` (log-moneyness) inside the grid
/// with the smallest admissible spacing.
pub fn epsilon_for_targets(targets: &[f64], range: &TruncationRange, n: usize) -> f64 {
    let reach = targets
        .iter()
        .map(|k| (k - range.mid()).abs())
        .fold(0.0, f64::max);
    // The positive side of the grid stops one node short of X_c.
    let usable = range.half_width() * (1.0 - 2.0 / n as f64);
    (reach / usable * (1.0 + 1e-9)).clamp(f64::MIN_POSITIVE, 1.0)
}

/// Interpolates the grid digitals at `strikes` and assembles prices.
pub fn interpolate_strikes(
    grid: &DigitalGrid,
    market: &MarketSpec,
    strikes: &[f64],
    kind: OptionKind,
    method: &str,
    n_f: usize,
) -> Result<SmileResult> {
    let mut order: Vec<usize> = (0..strikes.len()).collect();
    order.sort_by(|&a, &b| strikes[a].total_cmp(&strikes[b]));
    let mut out = SmileResult::new(method, n_f, Vec::new(), Vec::new());
    for i in order {
        let strike = strikes[i];
        let k = market.log_moneyness(strike);
        let (cash, asset, between) = grid.interpolate(k)?;
        let p = assemble(market, strike, kind, Some(cash), Some(asset));
        out.strikes.push(strike);
        out.prices.push(p.price);
        out.implied_vols.push(None);
        out.interpolated.push(between);
    }
    Ok(out)
}

/// SINC smile through the FFT (`epsilon = 1`) or the fractional FFT, spending
/// `n_f` characteristic function evaluations in total (`N = 2 n_f` slots).
pub fn sinc_fft_smile(
    cf: &dyn CharacteristicFunction,
    market: &MarketSpec,
    range: TruncationRange,
    n_f: usize,
    epsilon: Option<f64>,
    strikes: &[f64],
    kind: OptionKind,
) -> Result<SmileResult> {
    let n = 2 * n_f;
    let eps = match epsilon {
        Some(e) => e,
        None => {
            let ks: Vec<f64> = strikes.iter().map(|&s| market.log_moneyness(s)).collect();
            epsilon_for_targets(&ks, &range, n)
        }
    };
    let grid = DigitalGrid::build(cf, range, n, eps)?;
    let method = if eps == 1.0 { "sinc-fft" } else { "sinc-frfft" };
    interpolate_strikes(&grid, market, strikes, kind, method, n_f)
}
