//! Benchmarks, error records, implied volatilities and convergence studies.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::competitors::{CosConfig, CosSamples};
use crate::error::{invalid, PricingError, Result};
use crate::models::{
    black_scholes_call, black_scholes_put, black_scholes_vega, CharacteristicFunction, MarketSpec,
};
use crate::sinc::{OptionKind, SincPricer, TruncationRange};

/// Most decimal places a benchmark keeps.
pub const MAX_DIGITS: u32 = 10;
/// Sources disagreeing before this decimal place raise a warning.
pub const WARN_DIGITS: u32 = 6;
/// Evaluations behind each high-precision source price.
pub const BENCHMARK_NF: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Benchmark {
    pub value: f64,
    /// Decimal places kept after chopping.
    pub digits_retained: u32,
    pub sources: [f64; 2],
    /// Set when the sources disagree within the first six decimals.
    pub warning: bool,
}

impl Benchmark {
    /// Width of the chop bucket, one unit in the last retained place.
    pub fn unit(&self) -> f64 {
        10f64.powi(-(self.digits_retained as i32))
    }

    /// True when `price` chops to the benchmark, i.e. agrees on every
    /// retained digit.
    pub fn matches(&self, price: f64) -> bool {
        let u = self.unit();
        let centre = self.value + 0.5 * u.copysign(self.value);
        (price - centre).abs() <= 0.5 * u * (1.0 + 1e-6)
    }
}

/// Truncates `x` towards zero to `digits` decimals.
pub fn chop(x: f64, digits: u32) -> f64 {
    let p = 10f64.powi(digits as i32);
    // The guard absorbs representation error such as 0.29 * 100 = 28.999...
    (x.abs() * p + 1e-7).floor() / p * x.signum()
}

/// Average of two high-precision prices, chopped to the decimals they share.
pub fn make_benchmark(a: f64, b: f64) -> Result<Benchmark> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(invalid(
            "benchmark",
            format!("non-finite source price ({a}, {b})"),
        ));
    }
    let diff = (a - b).abs();
    let mut digits = 0;
    while digits < MAX_DIGITS && diff <= 10f64.powi(-(digits as i32 + 1)) * (1.0 + 1e-6) {
        digits += 1;
    }
    let warning = digits < WARN_DIGITS;
    if warning {
        warn!("benchmark sources {a} and {b} agree to {digits} decimals only");
    }
    let digits = digits.max(1);
    // Sorting first makes the average bit-symmetric in its arguments.
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    Ok(Benchmark {
        value: chop(0.5 * (lo + hi), digits),
        digits_retained: digits,
        sources: [a, b],
        warning,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Sinc,
    Cos,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Sinc => "sinc",
            Method::Cos => "cos",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub method: Method,
    pub kind: OptionKind,
    pub strike: f64,
    pub n_f: usize,
    pub price: f64,
    pub benchmark: f64,
    /// Relative error, or absolute error when `absolute` is set.
    pub error: f64,
    pub absolute: bool,
    pub star: bool,
    /// Error above 100%.
    pub gross: bool,
}

impl ErrorRecord {
    pub fn new(
        method: Method,
        kind: OptionKind,
        strike: f64,
        n_f: usize,
        price: f64,
        bench: &Benchmark,
    ) -> Self {
        let absolute = bench.value == 0.0;
        let diff = (price - bench.value).abs();
        let error = if absolute {
            diff
        } else {
            diff / bench.value.abs()
        };
        ErrorRecord {
            method,
            kind,
            strike,
            n_f,
            price,
            benchmark: bench.value,
            error,
            absolute,
            star: bench.matches(price),
            gross: !absolute && error > 1.0,
        }
    }
}

/// Black-Scholes volatility reproducing a PV put or call price.
type BlackScholes = fn(&MarketSpec, f64, f64) -> f64;

pub fn implied_vol(price: f64, market: &MarketSpec, strike: f64, kind: OptionKind) -> Result<f64> {
    market.validate()?;
    if !(strike > 0.0 && strike.is_finite()) {
        return Err(invalid("strike", format!("must be positive, got {strike}")));
    }
    if !price.is_finite() {
        return Err(invalid("price", format!("must be finite, got {price}")));
    }
    let kd = strike * market.discount();
    let sd = market.spot * market.dividend_discount();
    let (lower, upper, bs): (f64, f64, BlackScholes) = match kind {
        OptionKind::PvPut => ((kd - sd).max(0.0), kd, black_scholes_put),
        OptionKind::PvCall => ((sd - kd).max(0.0), sd, black_scholes_call),
        _ => return Err(invalid("kind", "implied volatility needs a put or a call")),
    };
    if price <= lower {
        return Err(PricingError::PriceOutOfBounds {
            price,
            bound: "lower",
            value: lower,
        });
    }
    if price >= upper {
        return Err(PricingError::PriceOutOfBounds {
            price,
            bound: "upper",
            value: upper,
        });
    }
    let tol = 1e-12 * market.spot;
    let f = |s: f64| bs(market, s, strike) - price;

    let mut lo = 0.0;
    let mut hi = 1.0;
    while f(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e3 {
            return Err(PricingError::ImpliedVolNotConverged { price });
        }
    }
    // Brenner-Subrahmanyam start, kept inside the bracket.
    let guess = (2.0 * std::f64::consts::PI / market.maturity).sqrt() * price / market.spot;
    let mut s = if guess > lo && guess < hi {
        guess
    } else {
        0.5 * (lo + hi)
    };
    for _ in 0..200 {
        let v = f(s);
        if v < 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let vega = black_scholes_vega(market, s, strike);
        let newton = s - v / vega;
        let next = if vega > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if v.abs() < tol && (next - s).abs() <= 1e-14 * s.max(1e-3) {
            return Ok(next);
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            return if v.abs() < tol {
                Ok(s)
            } else {
                Err(PricingError::ImpliedVolNotConverged { price })
            };
        }
        s = next;
    }
    if f(s).abs() < tol {
        Ok(s)
    } else {
        Err(PricingError::ImpliedVolNotConverged { price })
    }
}

/// One maturity of a convergence table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySetting {
    pub market: MarketSpec,
    pub range: TruncationRange,
    pub strikes: Vec<f64>,
    pub kinds: Vec<OptionKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkPoint {
    pub kind: OptionKind,
    pub strike: f64,
    pub benchmark: Benchmark,
}

fn method_prices(
    cf: &dyn CharacteristicFunction,
    setting: &StudySetting,
    method: Method,
    kind: OptionKind,
    n_f: usize,
) -> Result<Vec<f64>> {
    match method {
        Method::Sinc => {
            let terms = kind.terms_per_leg(n_f);
            if terms == 0 {
                return Err(invalid(
                    "N_F",
                    format!("{n_f} evaluations leave no terms per leg"),
                ));
            }
            let p = SincPricer::new(cf, setting.market, setting.range, terms, kind)?;
            setting
                .strikes
                .iter()
                .map(|&k| p.price(k, kind).map(|o| o.price))
                .collect()
        }
        Method::Cos => {
            let s = CosSamples::new(
                cf,
                &CosConfig {
                    n_f,
                    range: setting.range,
                },
            )?;
            Ok(setting
                .strikes
                .iter()
                .map(|&k| s.price(&setting.market, k, kind).price)
                .collect())
        }
    }
}

/// High-precision SINC and COS prices averaged into benchmarks, `n_f`
/// evaluations per digital leg.
pub fn benchmarks(
    cf: &dyn CharacteristicFunction,
    setting: &StudySetting,
    n_f: usize,
) -> Result<Vec<BenchmarkPoint>> {
    let sinc = SincPricer::new(cf, setting.market, setting.range, n_f, OptionKind::PvPut)?;
    let cos = CosSamples::new(
        cf,
        &CosConfig {
            n_f,
            range: setting.range,
        },
    )?;
    let mut out = Vec::new();
    for &kind in &setting.kinds {
        for &strike in &setting.strikes {
            let a = sinc.price(strike, kind)?.price;
            let b = cos.price(&setting.market, strike, kind).price;
            out.push(BenchmarkPoint {
                kind,
                strike,
                benchmark: make_benchmark(a, b)?,
            });
        }
    }
    Ok(out)
}

/// Errors of every method at every `(kind, strike, N_F)` against `bench`.
/// Cells run in parallel; records come back sorted by method, kind, strike
/// and N_F.
pub fn convergence_study(
    cf: &dyn CharacteristicFunction,
    setting: &StudySetting,
    n_fs: &[usize],
    methods: &[Method],
    bench: &[BenchmarkPoint],
) -> Result<Vec<ErrorRecord>> {
    let lookup = |kind: OptionKind, strike: f64| {
        bench
            .iter()
            .find(|b| b.kind == kind && b.strike == strike)
            .map(|b| b.benchmark)
            .ok_or_else(|| invalid("benchmark", format!("none for {kind:?} at K = {strike}")))
    };
    let cells: Vec<(Method, OptionKind, usize)> = methods
        .iter()
        .flat_map(|&m| {
            setting
                .kinds
                .iter()
                .flat_map(move |&k| n_fs.iter().map(move |&n| (m, k, n)))
        })
        .collect();
    let per_cell: Vec<Vec<ErrorRecord>> = cells
        .par_iter()
        .map(|&(method, kind, n_f)| {
            let prices = method_prices(cf, setting, method, kind, n_f)?;
            setting
                .strikes
                .iter()
                .zip(prices)
                .map(|(&strike, p)| {
                    Ok(ErrorRecord::new(
                        method,
                        kind,
                        strike,
                        n_f,
                        p,
                        &lookup(kind, strike)?,
                    ))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut records: Vec<ErrorRecord> = per_cell.into_iter().flatten().collect();
    records.sort_by(|a, b| {
        (a.method, kind_order(a.kind))
            .cmp(&(b.method, kind_order(b.kind)))
            .then(a.strike.total_cmp(&b.strike))
            .then(a.n_f.cmp(&b.n_f))
    });
    Ok(records)
}

fn kind_order(k: OptionKind) -> u8 {
    match k {
        OptionKind::PvPut => 0,
        OptionKind::PvCall => 1,
        OptionKind::ConPut => 2,
        OptionKind::AonPut => 3,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{GbmCf, GbmParams};

    #[test]
    fn chop_not_round() {
        let b = make_benchmark(0.02664951825, 0.02664951815).unwrap();
        assert_eq!(b.digits_retained, 10);
        assert_eq!(b.value, 0.0266495182);
        let same = make_benchmark(0.4607202900951, 0.4607202900951).unwrap();
        assert_eq!(same.digits_retained, MAX_DIGITS);
        assert_eq!(same.value, 0.4607202900);
    }

    #[test]
    fn warns_on_early_disagreement() {
        let b = make_benchmark(0.0455, 0.0456).unwrap();
        assert!(b.warning);
        assert_eq!(b.digits_retained, 4);
        assert!(!make_benchmark(0.1, 0.1).unwrap().warning);
        assert!(make_benchmark(f64::NAN, 0.1).is_err());
    }

    #[test]
    fn star_is_chop_bucket() {
        let b = make_benchmark(0.0266495182824, 0.0266495182824).unwrap();
        assert!(b.matches(0.0266495182824));
        assert!(b.matches(0.02664951820));
        assert!(!b.matches(0.02664951830 + 1e-13));
        assert!(!b.matches(0.02664951819));
    }

    #[test]
    fn implied_vol_bounds() {
        let m = MarketSpec::new(1.0, 0.1, 0.0, 0.1).unwrap();
        let p = black_scholes_put(&m, 0.25, 1.0);
        assert!((implied_vol(p, &m, 1.0, OptionKind::PvPut).unwrap() - 0.25).abs() < 1e-10);
        let intrinsic = 1.2 * m.discount() - 1.0;
        match implied_vol(intrinsic, &m, 1.2, OptionKind::PvPut) {
            Err(PricingError::PriceOutOfBounds { bound, .. }) => assert_eq!(bound, "lower"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            implied_vol(1.19, &m, 1.2, OptionKind::PvPut),
            Err(PricingError::PriceOutOfBounds { bound: "upper", .. })
        ));
    }

    #[test]
    fn gbm_study_stars_at_eighty() {
        let m = MarketSpec::new(1.0, 0.1, 0.0, 0.1).unwrap();
        let cf = GbmCf::new(GbmParams { sigma: 0.25 }, m).unwrap();
        let setting = StudySetting {
            market: m,
            range: TruncationRange::symmetric(2.0105).unwrap(),
            strikes: vec![0.9, 1.0],
            kinds: vec![OptionKind::PvPut],
        };
        let bench = benchmarks(&cf, &setting, 1 << 14).unwrap();
        let rec = convergence_study(&cf, &setting, &[20, 80], &[Method::Sinc], &bench).unwrap();
        assert_eq!(rec.len(), 4);
        let at = |k: f64, n: usize| rec.iter().find(|r| r.strike == k && r.n_f == n).unwrap();
        assert!(at(1.0, 80).star);
        let e = at(0.9, 20).error;
        assert!(e > 2e-1 / 3.0 && e < 6e-1, "{e}");
    }
}
