//! Fourier-cosine expansion on `[X_l, X_h]`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::models::{CharacteristicFunction, MarketSpec};
use crate::sinc::{assemble, Digital, OptionKind, PriceOutcome, TruncationRange};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CosConfig {
    /// Number of cosine terms, one characteristic function evaluation each.
    pub n_f: usize,
    pub range: TruncationRange,
}

/// Cosine coefficients `Re[f(w_n) e^{-i w_n a}]` shared across strikes.
#[derive(Debug, Clone)]
pub struct CosSamples {
    pub range: TruncationRange,
    /// Both digital legs reuse the same real-frequency samples.
    coef: Vec<f64>,
}

impl CosSamples {
    pub fn new(cf: &dyn CharacteristicFunction, cfg: &CosConfig) -> Result<Self> {
        if cfg.n_f == 0 {
            return Err(invalid("N_F", "at least one cosine term is required"));
        }
        let (a, b) = (cfg.range.x_l, cfg.range.x_h);
        let width = b - a;
        let kappas: Vec<Complex64> = (0..cfg.n_f)
            .map(|n| Complex64::new(n as f64 / (2.0 * width), 0.0))
            .collect();
        let f = cf.eval_many(&kappas)?;
        let coef: Vec<f64> = f
            .iter()
            .enumerate()
            .map(|(n, v)| {
                let w = n as f64 * PI / width;
                (v * Complex64::from_polar(1.0, -w * a)).re
            })
            .collect();
        Ok(CosSamples {
            range: cfg.range,
            coef,
        })
    }

    /// `E[1{s < k}]` and `E[e^s 1{s < k}]` from the cosine series.
    pub fn digitals(&self, k: f64) -> (f64, f64) {
        let (a, b) = (self.range.x_l, self.range.x_h);
        if k <= a {
            return (0.0, 0.0);
        }
        let d = k.min(b);
        let width = b - a;
        let mut cash = 0.0;
        let mut asset = 0.0;
        for (n, c) in self.coef.iter().enumerate() {
            let w = n as f64 * PI / width;
            let half = if n == 0 { 0.5 } else { 1.0 };
            let (psi, chi) = psi_chi(w, a, a, d);
            cash += half * c * psi;
            asset += half * c * chi;
        }
        let scale = 2.0 / width;
        (scale * cash, scale * asset)
    }

    pub fn price(&self, market: &MarketSpec, strike: f64, kind: OptionKind) -> PriceOutcome {
        let k = market.log_moneyness(strike);
        let (c, s) = self.digitals(k);
        let cash = Digital {
            expectation: c,
            clamped: false,
            ill_resolved: false,
        };
        let asset = Digital {
            expectation: s,
            clamped: false,
            ill_resolved: false,
        };
        assemble(market, strike, kind, Some(cash), Some(asset))
    }
}

/// `int_c^d cos(w (y - a)) dy` and `int_c^d e^y cos(w (y - a)) dy`.
fn psi_chi(w: f64, a: f64, c: f64, d: f64) -> (f64, f64) {
    let (sd, cd) = (w * (d - a)).sin_cos();
    let (sc, cc) = (w * (c - a)).sin_cos();
    let psi = if w == 0.0 { d - c } else { (sd - sc) / w };
    let (ed, ec) = (d.exp(), c.exp());
    let chi = (cd * ed - cc * ec + w * (sd * ed - sc * ec)) / (1.0 + w * w);
    (psi, chi)
}

pub fn cos_price(
    cf: &dyn CharacteristicFunction,
    market: &MarketSpec,
    strike: f64,
    kind: OptionKind,
    cfg: &CosConfig,
) -> Result<PriceOutcome> {
    if !(strike > 0.0) {
        return Err(invalid("strike", format!("must be positive, got {strike}")));
    }
    Ok(CosSamples::new(cf, cfg)?.price(market, strike, kind))
}

pub fn cos_put(
    cf: &dyn CharacteristicFunction,
    market: &MarketSpec,
    strike: f64,
    cfg: &CosConfig,
) -> Result<f64> {
    cos_price(cf, market, strike, OptionKind::PvPut, cfg).map(|o| o.price)
}
