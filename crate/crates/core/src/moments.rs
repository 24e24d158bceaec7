//! Raw moments and cumulants of the log-return truncated to `[-X_c, X_c]`,
//! read off the characteristic function at `kappa_n = n / (2 X_c)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, PricingError, Result};
use crate::models::CharacteristicFunction;
use crate::sinc::TruncationRange;

pub const DEFAULT_TERMS: usize = 10_000;

/// Terms below this magnitude count towards the early stop.
const NEGLIGIBLE: f64 = 1e-14;
const QUIET_RUN: usize = 3;
/// Frequencies evaluated per batch while scanning for the early stop.
const BATCH: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub half_width: f64,
    pub terms_used: usize,
}

impl MomentSet {
    fn from_raw(m: [f64; 4], half_width: f64, terms_used: usize) -> Self {
        let [m1, m2, m3, m4] = m;
        MomentSet {
            m1,
            m2,
            m3,
            m4,
            c1: m1,
            c2: m2 - m1 * m1,
            c3: m3 - 3.0 * m2 * m1 + 2.0 * m1.powi(3),
            c4: m4 - 4.0 * m3 * m1 - 3.0 * m2 * m2 + 12.0 * m2 * m1 * m1 - 6.0 * m1.powi(4),
            half_width,
            terms_used,
        }
    }
}

/// Moments of the density truncated to `[-half_width, half_width]` from at
/// most `max_terms` frequencies. Stops early once three consecutive terms of
/// every series fall below `1e-14`.
pub fn moments_from_cf(
    cf: &dyn CharacteristicFunction,
    half_width: f64,
    max_terms: usize,
) -> Result<MomentSet> {
    if max_terms == 0 {
        return Err(invalid("N_terms", "at least one term is required"));
    }
    if !(half_width > 0.0 && half_width.is_finite()) {
        return Err(invalid(
            "X_c",
            format!("must be positive, got {half_width}"),
        ));
    }
    let x = half_width;
    let mut sums = [0.0f64; 4];
    let mut quiet = 0;
    let mut used = 0;
    'outer: while used < max_terms {
        let end = (used + BATCH).min(max_terms);
        let zs: Vec<Complex64> = (used + 1..=end)
            .map(|n| Complex64::new(n as f64 / (2.0 * x), 0.0))
            .collect();
        let f = cf.eval_many(&zs)?;
        for (i, v) in f.iter().enumerate() {
            let n = used + i + 1;
            let a = n as f64 * PI;
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let odd = sign / a;
            let even = sign / (a * a);
            let corr = 1.0 - 6.0 / (a * a);
            let terms = [
                v.im * odd,
                v.re * even,
                v.im * odd * corr,
                v.re * even * corr,
            ];
            for (s, t) in sums.iter_mut().zip(terms) {
                *s += t;
            }
            if terms.iter().all(|t| t.abs() < NEGLIGIBLE) {
                quiet += 1;
                if quiet >= QUIET_RUN {
                    used = n;
                    break 'outer;
                }
            } else {
                quiet = 0;
            }
        }
        used = end;
    }
    let m = [
        -2.0 * x * sums[0],
        x * x / 3.0 + 4.0 * x * x * sums[1],
        -2.0 * x.powi(3) * sums[2],
        x.powi(4) / 5.0 + 8.0 * x.powi(4) * sums[3],
    ];
    Ok(MomentSet::from_raw(m, x, used))
}

/// Range `[c1 - L sqrt(c2 + sqrt(c4)), c1 + L sqrt(c2 + sqrt(c4))]` with
/// cumulants computed on `[-probe_half_width, probe_half_width]`.
pub fn trunc_rule_range(
    cf: &dyn CharacteristicFunction,
    l: f64,
    probe_half_width: f64,
    max_terms: usize,
) -> Result<TruncationRange> {
    if !(l >= 0.0 && l.is_finite()) {
        return Err(invalid("L", format!("must be non-negative, got {l}")));
    }
    let ms = moments_from_cf(cf, probe_half_width, max_terms)?;
    // The m4 series carries rounding noise of order eps X_c^4, which the
    // square root would amplify; fourth cumulants below that floor are zero.
    let noise = 1e3 * f64::EPSILON * probe_half_width.powi(4);
    let c4 = if ms.c4.abs() <= noise { 0.0 } else { ms.c4 };
    if c4 < 0.0 {
        return Err(PricingError::NegativeDiscriminant(c4));
    }
    let disc = ms.c2 + c4.sqrt();
    if !(disc >= 0.0) {
        return Err(PricingError::NegativeDiscriminant(disc));
    }
    let w = l * disc.sqrt();
    TruncationRange::new(ms.c1 - w, ms.c1 + w)
}
