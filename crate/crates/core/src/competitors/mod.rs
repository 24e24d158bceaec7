//! Competing Fourier pricers: Fourier-cosine expansion, the Lewis formula and
//! the damped Carr-Madan transform.

pub mod carr_madan;
pub mod cos;
pub mod lewis;

pub use carr_madan::{carr_madan_call_fft, CarrMadanConfig};
pub use cos::{cos_price, cos_put, CosConfig, CosSamples};
pub use lewis::{lewis_call, lewis_call_fft, LewisConfig};

use num_complex::Complex64;

use crate::error::{invalid, PricingError, Result};
use crate::fft::{fractional_dft, SmileResult};
use crate::models::MarketSpec;
use crate::sinc::OptionKind;

/// Integrand samples `x_j` on `u_j = j eta` summed against `e^{-i u_j k}` for
/// `k_v = v gamma`, `v in [-N/2, N/2)`, `gamma = eps 2 pi / (N eta)`.
/// Returns `sum_j x_j e^{-i u_j k_v}` ordered by `v`.
pub(crate) fn strike_transform(x: &[Complex64], eps: f64) -> Vec<Complex64> {
    let n = x.len();
    let half = (n / 2) as i64;
    // u_j k_v = 2 pi eps (n + N/2) v / N with n = j - N/2.
    let y = fractional_dft(x, eps);
    y.into_iter()
        .enumerate()
        .map(|(l, v)| {
            let m = (l as i64 - half) as f64;
            let phase = (-eps * m).rem_euclid(2.0);
            v * Complex64::from_polar(1.0, std::f64::consts::PI * phase)
        })
        .collect()
}

/// Grid of values `g(k_v)` at equally spaced log-strikes, interpolated
/// linearly and turned into prices by `to_call`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn smile_from_grid(
    market: &MarketSpec,
    log_strikes: &[f64],
    values: &[f64],
    strikes: &[f64],
    kind: OptionKind,
    to_call: impl Fn(f64, f64) -> f64,
    method: &str,
    n_f: usize,
) -> Result<SmileResult> {
    if !matches!(kind, OptionKind::PvCall | OptionKind::PvPut) {
        return Err(invalid(
            "kind",
            "FFT competitors price PV calls and puts only",
        ));
    }
    let (lo, hi) = (log_strikes[0], log_strikes[log_strikes.len() - 1]);
    let mut sorted: Vec<f64> = strikes.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out = SmileResult::new(method, n_f, Vec::new(), Vec::new());
    let fwd = market.forward();
    for strike in sorted {
        let k = (strike / fwd).ln();
        if !(lo..=hi).contains(&k) {
            return Err(PricingError::Extrapolation {
                target: k,
                lower: lo,
                upper: hi,
            });
        }
        let j = log_strikes
            .partition_point(|&x| x <= k)
            .clamp(1, log_strikes.len() - 1);
        let w = (k - log_strikes[j - 1]) / (log_strikes[j] - log_strikes[j - 1]);
        let g = values[j - 1] + w * (values[j] - values[j - 1]);
        let call = to_call(k, g);
        let price = match kind {
            OptionKind::PvCall => call,
            _ => call - market.spot * market.dividend_discount() + strike * market.discount(),
        };
        out.strikes.push(strike);
        out.prices.push(price);
        out.implied_vols.push(None);
        out.interpolated.push(w != 0.0 && w != 1.0);
    }
    Ok(out)
}

/// Trapezoid weight of node `j` on a grid starting at zero.
#[inline]
pub(crate) fn trapezoid(j: usize, eta: f64) -> f64 {
    if j == 0 {
        0.5 * eta
    } else {
        eta
    }
}

/// Smallest strike compression whose grid `v gamma`, `v in [-N/2, N/2)`,
/// reaches log-strike `reach` on both sides.
pub fn grid_epsilon(reach: f64, eta: f64, n: usize) -> f64 {
    let usable = (n as f64 / 2.0 - 1.0) * 2.0 * std::f64::consts::PI / (n as f64 * eta);
    (reach / usable * (1.0 + 1e-9)).clamp(f64::MIN_POSITIVE, 1.0)
}
