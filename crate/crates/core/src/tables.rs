//! Model specifications and the preset convergence tables.

use serde::{Deserialize, Serialize};

use crate::analytics::{self, BenchmarkPoint, ErrorRecord, Method, StudySetting, BENCHMARK_NF};
use crate::error::{PricingError, Result};
use crate::models::{
    CgmyCf, CgmyParams, CharacteristicFunction, GbmCf, GbmParams, HestonCf, HestonParams,
    MarketSpec,
};
use crate::rough_heston::{ForwardVarianceCurve, RiccatiConfig, RoughHestonCf, RoughHestonParams};
use crate::sinc::{find_truncation, OptionKind, TruncationRange};

/// Default tail mass for the truncation search.
pub const TAIL_MASS: f64 = 1e-10;

/// A model and its parameters, as read from a params file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    Gbm(GbmParams),
    Heston(HestonParams),
    Cgmy(CgmyParams),
    RoughHeston {
        #[serde(flatten)]
        params: RoughHestonParams,
        forward_variance: ForwardVarianceCurve,
        #[serde(default)]
        riccati: RiccatiConfig,
    },
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Gbm(_) => "gbm",
            ModelSpec::Heston(_) => "heston",
            ModelSpec::Cgmy(_) => "cgmy",
            ModelSpec::RoughHeston { .. } => "rough_heston",
        }
    }

    pub fn build(&self, market: MarketSpec) -> Result<Box<dyn CharacteristicFunction>> {
        Ok(match self {
            ModelSpec::Gbm(p) => Box::new(GbmCf::new(*p, market)?),
            ModelSpec::Heston(p) => Box::new(HestonCf::new(*p, market)?),
            ModelSpec::Cgmy(p) => Box::new(CgmyCf::new(*p, market)?),
            ModelSpec::RoughHeston {
                params,
                forward_variance,
                riccati,
            } => Box::new(RoughHestonCf::new(
                *params,
                forward_variance.clone(),
                market,
                *riccati,
            )?),
        })
    }
}

pub fn heston_reference() -> HestonParams {
    HestonParams {
        lambda: 1.5768,
        eta_vol: 0.5751,
        v_bar: 0.0398,
        v0: 0.0175,
        rho: -0.5711,
    }
}

pub fn rough_heston_reference() -> ModelSpec {
    ModelSpec::RoughHeston {
        params: RoughHestonParams {
            hurst: 0.05,
            nu: 0.4,
            rho: -0.65,
        },
        forward_variance: ForwardVarianceCurve {
            times: vec![0.0],
            values: vec![0.0256],
        },
        riccati: RiccatiConfig::default(),
    }
}

fn cgmy(y: f64) -> ModelSpec {
    ModelSpec::Cgmy(CgmyParams {
        c: 1.0,
        g: 5.0,
        m: 5.0,
        y,
    })
}

/// One convergence table: model, market, grids and the half-width it was
/// published with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TablePreset {
    pub id: String,
    pub model: ModelSpec,
    pub market: MarketSpec,
    pub strikes: Vec<f64>,
    pub n_fs: Vec<usize>,
    pub kinds: Vec<OptionKind>,
    pub reported_half_width: f64,
    /// Evaluations per leg behind each benchmark source.
    pub benchmark_nf: usize,
}

pub const TABLE_IDS: [&str; 11] = [
    "gbm-t01",
    "heston-t01",
    "heston-t1",
    "cgmy15-t1",
    "cgmy15-t001",
    "cgmy198-t1",
    "cgmy198-t001",
    "cgmy05-t1",
    "cgmy05-t001",
    "rheston-t1",
    "rheston-t001",
];

fn table_strikes() -> Vec<f64> {
    (0..9).map(|i| (60 + 10 * i) as f64 / 100.0).collect()
}

impl TablePreset {
    pub fn get(id: &str) -> Result<TablePreset> {
        use OptionKind::*;
        let short_cgmy = vec![16, 32, 48, 64, 96, 128];
        let long_cgmy = vec![16, 32, 64, 128, 256, 512];
        let rough = vec![256, 512, 768, 1024, 1536, 2048];
        let (model, r, t, n_fs, digital, xc) = match id {
            "gbm-t01" => (
                ModelSpec::Gbm(GbmParams { sigma: 0.25 }),
                0.1,
                0.1,
                vec![20, 40, 60, 80, 100, 120],
                ConPut,
                2.0105,
            ),
            "heston-t01" => (
                ModelSpec::Heston(heston_reference()),
                0.0,
                0.1,
                vec![64, 128, 192, 256, 384, 512],
                AonPut,
                2.0499,
            ),
            "heston-t1" => (
                ModelSpec::Heston(heston_reference()),
                0.0,
                1.0,
                vec![128, 192, 256, 384, 512, 768],
                AonPut,
                12.1802,
            ),
            "cgmy15-t1" => (cgmy(1.5), 0.1, 1.0, short_cgmy, ConPut, 33.0891),
            "cgmy15-t001" => (cgmy(1.5), 0.1, 0.01, long_cgmy, ConPut, 11.4582),
            "cgmy198-t1" => (cgmy(1.98), 0.1, 1.0, short_cgmy, ConPut, 248.9047),
            "cgmy198-t001" => (cgmy(1.98), 0.1, 0.01, short_cgmy, ConPut, 24.9357),
            "cgmy05-t1" => (cgmy(0.5), 0.1, 1.0, long_cgmy, ConPut, 18.3512),
            "cgmy05-t001" => (
                cgmy(0.5),
                0.1,
                0.01,
                vec![256, 512, 1024, 2048, 4096, 8192],
                ConPut,
                12.0723,
            ),
            "rheston-t1" => (
                rough_heston_reference(),
                0.0,
                1.0,
                rough.clone(),
                AonPut,
                18.9469,
            ),
            "rheston-t001" => (rough_heston_reference(), 0.0, 0.01, rough, AonPut, 2.7074),
            other => return Err(PricingError::UnknownTable(other.to_string())),
        };
        // Rough Heston evaluations cost O(n_steps^2); its benchmark series is
        // converged long before 2^20 terms.
        let benchmark_nf = if matches!(model, ModelSpec::RoughHeston { .. }) {
            1 << 14
        } else {
            BENCHMARK_NF
        };
        Ok(TablePreset {
            id: id.to_string(),
            model,
            market: MarketSpec::new(1.0, r, 0.0, t)?,
            strikes: table_strikes(),
            n_fs,
            kinds: vec![PvPut, digital],
            reported_half_width: xc,
            benchmark_nf,
        })
    }

    pub fn all() -> Vec<TablePreset> {
        TABLE_IDS
            .iter()
            .map(|id| Self::get(id).expect("preset ids are valid"))
            .collect()
    }
}

/// Where a table's truncation range comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeChoice {
    /// The half-width the table was published with.
    Reported,
    /// The cutting-rule search with the given tail mass.
    Search(f64),
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRun {
    pub id: String,
    pub range: TruncationRange,
    pub benchmarks: Vec<BenchmarkPoint>,
    pub records: Vec<ErrorRecord>,
}

/// Benchmarks and the SINC and COS error grid for a preset.
pub fn run_table(
    preset: &TablePreset,
    choice: RangeChoice,
    benchmark_nf: Option<usize>,
) -> Result<TableRun> {
    let cf = preset.model.build(preset.market)?;
    let range = match choice {
        RangeChoice::Reported => TruncationRange::symmetric(preset.reported_half_width)?,
        RangeChoice::Search(tail) => find_truncation(cf.as_ref(), tail)?,
        RangeChoice::Fixed(x) => TruncationRange::symmetric(x)?,
    };
    let setting = StudySetting {
        market: preset.market,
        range,
        strikes: preset.strikes.clone(),
        kinds: preset.kinds.clone(),
    };
    let bench = analytics::benchmarks(
        cf.as_ref(),
        &setting,
        benchmark_nf.unwrap_or(preset.benchmark_nf),
    )?;
    let records = analytics::convergence_study(
        cf.as_ref(),
        &setting,
        &preset.n_fs,
        &[Method::Sinc, Method::Cos],
        &bench,
    )?;
    Ok(TableRun {
        id: preset.id.clone(),
        range,
        benchmarks: bench,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve() {
        for p in TablePreset::all() {
            assert_eq!(p.strikes.len(), 9);
            assert_eq!(p.n_fs.len(), 6);
            p.model.build(p.market).unwrap();
        }
        assert_eq!(
            TablePreset::get("gbm-t01").unwrap().n_fs,
            vec![20, 40, 60, 80, 100, 120]
        );
        assert!(matches!(
            TablePreset::get("nope"),
            Err(PricingError::UnknownTable(_))
        ));
    }

    #[test]
    fn model_spec_round_trips() {
        let spec = rough_heston_reference();
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<ModelSpec>(&json).unwrap(), spec);
        let gbm: ModelSpec = serde_json::from_str(r#"{"model":"gbm","sigma":0.25}"#).unwrap();
        assert_eq!(gbm, ModelSpec::Gbm(GbmParams { sigma: 0.25 }));
    }
}
