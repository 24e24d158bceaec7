use std::fs;
use std::path::Path;

use sinc_pricer::analytics::implied_vol;
use sinc_pricer::competitors::{
    carr_madan_call_fft, grid_epsilon, lewis_call_fft, CarrMadanConfig, CosConfig, CosSamples,
    LewisConfig,
};
use sinc_pricer::fft::sinc_fft_smile;
use sinc_pricer::models::{
    CgmyParams, CharacteristicFunction, GbmParams, HestonParams, MarketSpec,
};
use sinc_pricer::moments::{moments_from_cf, trunc_rule_range, DEFAULT_TERMS};
use sinc_pricer::rough_heston::{ForwardVarianceCurve, RiccatiConfig, RoughHestonParams};
use sinc_pricer::sinc::{
    find_truncation, pdf as density, Leg, OptionKind, SeriesSamples, SincPricer, TruncationRange,
};
use sinc_pricer::surface::{
    points_from_csv, rank_method, synthetic_points, Surface, SurfaceMethod,
};
use sinc_pricer::tables::{run_table, ModelSpec, RangeChoice, TablePreset};

use crate::output::{emit, Cell, Table};
use crate::{
    CliError, Competitor, Format, Kind, MarketArgs, ModelArgs, ModelName, PdfArgs, PriceArgs,
    PriceMethod, RangeArgs, RankArgs, SurfaceArgs, SweepArgs, TableArgs,
};

fn need(v: Option<f64>, flag: &str, model: &str) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("--{flag} is required for --model {model}")))
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn model_spec(a: &ModelArgs) -> Result<ModelSpec, CliError> {
    if let Some(path) = &a.params {
        let text = read(path)?;
        let is_toml = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        return if is_toml {
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
        } else {
            serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
        };
    }
    let model = a
        .model
        .ok_or_else(|| CliError::Usage("either --model or --params is required".into()))?;
    Ok(match model {
        ModelName::Gbm => ModelSpec::Gbm(GbmParams {
            sigma: need(a.sigma, "sigma", "gbm")?,
        }),
        ModelName::Heston => ModelSpec::Heston(HestonParams {
            lambda: need(a.lambda, "lambda", "heston")?,
            eta_vol: need(a.eta_vol, "eta-vol", "heston")?,
            v_bar: need(a.v_bar, "v-bar", "heston")?,
            v0: need(a.v0, "v0", "heston")?,
            rho: need(a.rho, "rho", "heston")?,
        }),
        ModelName::Cgmy => ModelSpec::Cgmy(CgmyParams {
            c: need(a.c, "c", "cgmy")?,
            g: need(a.g, "g", "cgmy")?,
            m: need(a.m, "m", "cgmy")?,
            y: need(a.y, "y", "cgmy")?,
        }),
        ModelName::RoughHeston => {
            let forward_variance = match (&a.xi_curve, a.xi0) {
                (Some(path), _) => ForwardVarianceCurve::from_csv_path(path)?,
                (None, Some(v)) => ForwardVarianceCurve::flat(v)?,
                (None, None) => {
                    return Err(CliError::Usage(
                        "--xi0 or --xi-curve is required for --model rough-heston".into(),
                    ))
                }
            };
            let mut riccati = RiccatiConfig::default();
            if let Some(n) = a.n_steps {
                riccati.n_steps = n;
            }
            ModelSpec::RoughHeston {
                params: RoughHestonParams {
                    hurst: need(a.hurst, "hurst", "rough-heston")?,
                    nu: need(a.nu, "nu", "rough-heston")?,
                    rho: need(a.rho, "rho", "rough-heston")?,
                },
                forward_variance,
                riccati,
            }
        }
    })
}

fn market(a: &MarketArgs) -> Result<MarketSpec, CliError> {
    Ok(MarketSpec::new(a.s0, a.r, a.q, a.t)?)
}

fn range(cf: &dyn CharacteristicFunction, a: &RangeArgs) -> Result<TruncationRange, CliError> {
    if let Some(x) = a.xc {
        return Ok(TruncationRange::symmetric(x)?);
    }
    let searched = find_truncation(cf, a.tail)?;
    match a.cumulant_l {
        Some(l) => Ok(trunc_rule_range(
            cf,
            l,
            searched.half_width(),
            DEFAULT_TERMS,
        )?),
        None => Ok(searched),
    }
}

fn option_kind(k: Kind) -> OptionKind {
    match k {
        Kind::Put => OptionKind::PvPut,
        Kind::Call => OptionKind::PvCall,
        Kind::Con => OptionKind::ConPut,
        Kind::Aon => OptionKind::AonPut,
    }
}

fn kind_label(k: OptionKind) -> &'static str {
    match k {
        OptionKind::PvPut => "put",
        OptionKind::PvCall => "call",
        OptionKind::ConPut => "con",
        OptionKind::AonPut => "aon",
    }
}

fn method_label(m: PriceMethod) -> &'static str {
    match m {
        PriceMethod::Sinc => "sinc",
        PriceMethod::SincFft => "sinc-fft",
        PriceMethod::SincFrfft => "sinc-frfft",
        PriceMethod::Cos => "cos",
        PriceMethod::Lewis => "lewis",
        PriceMethod::Carrmadan => "carrmadan",
    }
}

/// Largest `|log(K / F)|`, with a floor so a lone at-the-money strike still
/// gets a few grid cells around it.
fn reach(m: &MarketSpec, strikes: &[f64]) -> f64 {
    let fwd = m.forward();
    strikes
        .iter()
        .map(|k| (k / fwd).ln().abs())
        .fold(1e-3, f64::max)
}

pub fn price(a: &PriceArgs) -> Result<(), CliError> {
    let spec = model_spec(&a.model)?;
    let m = market(&a.market)?;
    let cf = spec.build(m)?;
    let cf = cf.as_ref();
    let r = range(cf, &a.range)?;
    let kind = option_kind(a.kind);
    if a.strikes.iter().any(|k| !(*k > 0.0)) {
        return Err(CliError::Usage("strikes must be positive".into()));
    }
    if matches!(a.method, PriceMethod::Lewis | PriceMethod::Carrmadan)
        && !matches!(kind, OptionKind::PvPut | OptionKind::PvCall)
    {
        return Err(CliError::Usage(format!(
            "{} prices puts and calls only",
            method_label(a.method)
        )));
    }
    let (strikes, prices): (Vec<f64>, Vec<f64>) = match a.method {
        PriceMethod::Sinc => {
            let terms = kind.terms_per_leg(a.n_f);
            if terms == 0 {
                return Err(CliError::Usage(format!(
                    "--nf {} leaves no series terms",
                    a.n_f
                )));
            }
            let p = SincPricer::new(cf, m, r, terms, kind)?;
            let prices = a
                .strikes
                .iter()
                .map(|&k| p.price(k, kind).map(|o| o.price))
                .collect::<Result<_, _>>()?;
            (a.strikes.clone(), prices)
        }
        PriceMethod::Cos => {
            let s = CosSamples::new(
                cf,
                &CosConfig {
                    n_f: a.n_f,
                    range: r,
                },
            )?;
            (
                a.strikes.clone(),
                a.strikes
                    .iter()
                    .map(|&k| s.price(&m, k, kind).price)
                    .collect(),
            )
        }
        PriceMethod::SincFft | PriceMethod::SincFrfft => {
            let eps = if a.method == PriceMethod::SincFft {
                Some(1.0)
            } else {
                a.eps
            };
            let s = sinc_fft_smile(cf, &m, r, a.n_f, eps, &a.strikes, kind)?;
            (s.strikes, s.prices)
        }
        PriceMethod::Lewis => {
            let mut cfg = LewisConfig {
                n: a.n_f,
                beta: a.beta,
                epsilon: 1.0,
            };
            cfg.epsilon = a
                .eps
                .unwrap_or_else(|| grid_epsilon(reach(&m, &a.strikes), cfg.eta(&r), a.n_f));
            let s = lewis_call_fft(cf, &m, &r, &cfg, &a.strikes, kind)?;
            (s.strikes, s.prices)
        }
        PriceMethod::Carrmadan => {
            let mut cfg = CarrMadanConfig {
                alpha_cm: a.alpha_cm,
                ..CarrMadanConfig::new(a.n_f, a.beta)
            };
            cfg.epsilon = a
                .eps
                .unwrap_or_else(|| grid_epsilon(reach(&m, &a.strikes), cfg.eta(&r), a.n_f));
            let s = carr_madan_call_fft(cf, &m, &r, &cfg, &a.strikes, kind)?;
            (s.strikes, s.prices)
        }
    };
    let mut header = vec!["method", "model", "kind", "K", "T", "NF", "Xc", "price"];
    if a.iv {
        header.push("iv");
    }
    let mut t = Table::new(header);
    for (k, p) in strikes.iter().zip(&prices) {
        let mut row: Vec<Cell> = vec![
            method_label(a.method).into(),
            spec.name().into(),
            kind_label(kind).into(),
            (*k).into(),
            m.maturity.into(),
            a.n_f.into(),
            r.half_width().into(),
            (*p).into(),
        ];
        if a.iv {
            let v = match kind {
                OptionKind::PvPut | OptionKind::PvCall => Some(implied_vol(*p, &m, *k, kind)?),
                _ => None,
            };
            row.push(v.into());
        }
        t.push(row);
    }
    emit(&t.render(a.output.format)?, &a.output)
}

pub fn table(a: &TableArgs) -> Result<(), CliError> {
    let preset = TablePreset::get(&a.id)?;
    let choice = match a.xc.as_str() {
        "reported" => RangeChoice::Reported,
        "search" => RangeChoice::Search(sinc_pricer::tables::TAIL_MASS),
        other => RangeChoice::Fixed(other.parse().map_err(|_| {
            CliError::Usage(format!(
                "--xc expects reported, search or a number, got `{other}`"
            ))
        })?),
    };
    let run = run_table(&preset, choice, a.benchmark_nf)?;
    let text = match a.output.format {
        Format::Json => format!(
            "{}\n",
            serde_json::to_string_pretty(&run).map_err(|e| CliError::Usage(e.to_string()))?
        ),
        Format::Csv => {
            let mut t = Table::new(vec!["method", "kind", "K", "NF", "rel_err", "star"]);
            for r in &run.records {
                t.push(vec![
                    r.method.name().into(),
                    kind_label(r.kind).into(),
                    r.strike.into(),
                    r.n_f.into(),
                    r.error.into(),
                    r.star.into(),
                ]);
            }
            t.render(Format::Csv)?
        }
    };
    emit(&text, &a.output)
}

pub fn pdf(a: &PdfArgs) -> Result<(), CliError> {
    if a.points < 2 {
        return Err(CliError::Usage("--points must be at least 2".into()));
    }
    let spec = model_spec(&a.model)?;
    let m = market(&a.market)?;
    let cf = spec.build(m)?;
    let cf = cf.as_ref();
    let r = range(cf, &a.range)?;
    let step = (r.x_h - r.x_l) / (a.points - 1) as f64;
    let grid: Vec<f64> = (0..a.points).map(|i| r.x_l + i as f64 * step).collect();
    let f = density(cf, &grid, r, a.n_f)?;
    let cdf = if a.cdf {
        // The series is a square wave of period 2 X_c in k - s; doubling the
        // range keeps every grid point within one half-period of the mass.
        let wide = TruncationRange::new(
            r.mid() - 2.0 * r.half_width(),
            r.mid() + 2.0 * r.half_width(),
        )?;
        let s = SeriesSamples::new(cf, wide, a.n_f, Leg::Cash)?;
        Some(grid.iter().map(|&x| s.raw(x)).collect::<Vec<f64>>())
    } else {
        None
    };
    let mut header = vec!["x", "density"];
    if a.cdf {
        header.push("cdf");
    }
    let mut t = Table::new(header);
    for (i, (&x, &d)) in grid.iter().zip(&f).enumerate() {
        let mut row: Vec<Cell> = vec![x.into(), d.into()];
        if let Some(c) = &cdf {
            row.push(c[i].into());
        }
        t.push(row);
    }
    emit(&t.render(a.output.format)?, &a.output)
}

fn atm_variance(spec: &ModelSpec) -> Result<f64, CliError> {
    Ok(match spec {
        ModelSpec::Gbm(p) => p.sigma * p.sigma,
        ModelSpec::Heston(p) => p.v0,
        ModelSpec::RoughHeston {
            forward_variance, ..
        } => forward_variance.value(0.0),
        ModelSpec::Cgmy(_) => {
            let m = MarketSpec::new(1.0, 0.0, 0.0, 1.0)?;
            let cf = spec.build(m)?;
            let r = find_truncation(cf.as_ref(), sinc_pricer::tables::TAIL_MASS)?;
            moments_from_cf(cf.as_ref(), r.half_width(), DEFAULT_TERMS)?.c2
        }
    })
}

fn surface(a: &SurfaceArgs) -> Result<(ModelSpec, Surface), CliError> {
    let spec = model_spec(&a.model)?;
    let points = match &a.surface {
        Some(path) => points_from_csv(read(path)?.as_bytes())?,
        None => {
            let v = match a.atm_variance {
                Some(v) => v,
                None => atm_variance(&spec)?,
            };
            synthetic_points(v, a.strikes_per_maturity, a.r)
        }
    };
    let s = Surface::build(&spec, a.r, &points)?;
    Ok((spec, s))
}

fn surface_method(c: Competitor) -> SurfaceMethod {
    match c {
        Competitor::Lewis => SurfaceMethod::LewisFrfft,
        Competitor::Carrmadan => SurfaceMethod::CarrMadanFrfft,
    }
}

pub fn beta_sweep(a: &SweepArgs) -> Result<(), CliError> {
    if a.betas.is_empty() {
        return Err(CliError::Usage("--betas is empty".into()));
    }
    let (spec, s) = surface(&a.surface)?;
    let method = surface_method(a.method);
    let sweep = s.beta_sweep(method, a.n_f, &a.betas)?;
    let mut t = Table::new(vec!["beta", "mean_abs_iv_error", "failed_points"]);
    t.notes.push(format!(
        "model {}, method {}, NF {}, {} points",
        spec.name(),
        method.name(),
        a.n_f,
        s.points()
    ));
    t.notes.push(format!(
        "beta grid: {}",
        a.betas
            .iter()
            .map(|b| b.to_string())
            .collect::<Vec<_>>()
            .join(",")
    ));
    for (b, e) in sweep {
        t.push(vec![
            b.into(),
            e.mean_abs_vol_error.into(),
            e.failed_points.into(),
        ]);
    }
    emit(&t.render(a.output.format)?, &a.output)
}

pub fn rank(a: &RankArgs) -> Result<(), CliError> {
    let (spec, s) = surface(&a.surface)?;
    let mut t = Table::new(vec![
        "method",
        "NF",
        "beta",
        "mean_abs_iv_error",
        "failed_points",
        "met",
    ]);
    t.notes.push(format!(
        "model {}, target {}, {} points",
        spec.name(),
        a.target,
        s.points()
    ));
    for method in [
        SurfaceMethod::SincFrfft,
        SurfaceMethod::LewisFrfft,
        SurfaceMethod::CarrMadanFrfft,
    ] {
        let r = rank_method(&s, method, &a.n_fs, &a.betas, a.target)?;
        t.notes.push(format!(
            "{} required NF: {}",
            method.name(),
            r.n_f_required
                .map_or("not reached".to_string(), |n| n.to_string())
        ));
        for st in r.steps {
            t.push(vec![
                method.name().into(),
                st.n_f.into(),
                st.beta.into(),
                st.error.mean_abs_vol_error.into(),
                st.error.failed_points.into(),
                (st.error.mean_abs_vol_error <= a.target).into(),
            ]);
        }
    }
    emit(&t.render(a.output.format)?, &a.output)
}
