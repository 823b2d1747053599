//! File formats: the dataset CSV, the JSON system configuration, the
//! serialized model file, and the curve/sample CSV outputs.
//!
//! Numeric CSV output uses 17 significant digits so written values parse
//! back bit-identically; JSON floats use the shortest lossless rendering.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::construction::{assemble, RifsModel};
use crate::error::{Error, Result};
use crate::evaluator::{EvaluationGrid, OrbitSampleSet};
use crate::model::{
    validate_dataset, validate_partition, ExtendedDataset, FactorFamily, FactorFunction,
    FactorQuad, FactorSet, Interval, Orientation, Partition, PartitionSpec,
};

/// Formats a float with 17 significant digits (lossless round-trip).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Reads a dataset CSV with header `x,y,z`, one node per row.
pub fn read_dataset_csv(path: &Path) -> Result<Vec<(f64, f64, f64)>> {
    let mut reader = csv::Reader::from_path(path)?;
    {
        let headers = reader.headers()?;
        let expected = ["x", "y", "z"];
        let got: Vec<&str> = headers.iter().map(|h| h.trim()).collect();
        if got != expected {
            return Err(Error::Config(format!(
                "dataset header must be x,y,z; found {}",
                got.join(",")
            )));
        }
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != 3 {
            return Err(Error::Config(format!(
                "dataset row {} has {} fields, expected 3",
                i + 1,
                record.len()
            )));
        }
        let parse = |field: &str| -> Result<f64> {
            field.trim().parse::<f64>().map_err(|_| {
                Error::Config(format!("dataset row {}: cannot parse '{}'", i + 1, field))
            })
        };
        rows.push((parse(&record[0])?, parse(&record[1])?, parse(&record[2])?));
    }
    Ok(rows)
}

/// One factor entry of the JSON configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FactorConfig {
    /// `params: [value]`
    Constant { params: Vec<f64> },
    /// `params: [offset, slope]`, relative to the region's left endpoint.
    Affine { params: Vec<f64> },
    /// `params: [amplitude, frequency, phase]`, relative to the region's
    /// left endpoint.
    ScaledSinusoid { params: Vec<f64> },
    /// Sampled factor with a caller-supplied Lipschitz constant (unverified).
    Table {
        xs: Vec<f64>,
        values: Vec<f64>,
        lipschitz: f64,
    },
}

/// The four factor lists of the configuration, one entry per region.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorsConfig {
    pub s: Vec<FactorConfig>,
    pub sp: Vec<FactorConfig>,
    pub st: Vec<FactorConfig>,
    pub stp: Vec<FactorConfig>,
}

/// The partition-plus-factors configuration.
///
/// `domains` are node-index pairs, `gamma` is 1-based domain assignment per
/// region, `orientation` (optional) defaults to increasing everywhere.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub domains: Vec<(usize, usize)>,
    pub gamma: Vec<usize>,
    #[serde(default)]
    pub orientation: Option<Vec<Orientation>>,
    pub factors: FactorsConfig,
}

pub fn read_system_config(path: &Path) -> Result<SystemConfig> {
    let text = fs::read_to_string(path)?;
    let config: SystemConfig = serde_json::from_str(&text)?;
    Ok(config)
}

fn factor_from_config(
    cfg: &FactorConfig,
    raw_interval: Interval,
    ds: &ExtendedDataset,
    unit_interval: Interval,
) -> Result<FactorFunction> {
    let expect = |params: &Vec<f64>, n: usize, family: &str| -> Result<()> {
        if params.len() != n {
            return Err(Error::Config(format!(
                "{family} factor takes {n} params, got {}",
                params.len()
            )));
        }
        Ok(())
    };
    let raw = match cfg {
        FactorConfig::Constant { params } => {
            expect(params, 1, "constant")?;
            FactorFunction::new(FactorFamily::Constant { value: params[0] }, raw_interval)?
        }
        FactorConfig::Affine { params } => {
            expect(params, 2, "affine")?;
            FactorFunction::new(
                FactorFamily::Affine {
                    offset: params[0],
                    slope: params[1],
                },
                raw_interval,
            )?
        }
        FactorConfig::ScaledSinusoid { params } => {
            expect(params, 3, "scaled-sinusoid")?;
            FactorFunction::new(
                FactorFamily::ScaledSinusoid {
                    amplitude: params[0],
                    frequency: params[1],
                    phase: params[2],
                },
                raw_interval,
            )?
        }
        FactorConfig::Table {
            xs,
            values,
            lipschitz,
        } => FactorFunction::new(
            FactorFamily::Table {
                xs: xs.clone(),
                values: values.clone(),
                lipschitz: *lipschitz,
            },
            raw_interval,
        )?,
    };
    // carry the raw-coordinate definition onto the normalized region
    let scale = ds.x_scale();
    let offset = ds.raw_x(0);
    if scale == 1.0 && offset == 0.0 {
        return Ok(raw);
    }
    Ok(raw.compose_affine(offset, scale, unit_interval))
}

/// Turns a configuration into validated model inputs against a dataset.
pub fn build_inputs(
    ds: &ExtendedDataset,
    config: &SystemConfig,
) -> Result<(Partition, FactorSet)> {
    let n = ds.n_regions();
    if config.gamma.len() != n {
        return Err(Error::Config(format!(
            "gamma has {} entries for {} regions",
            config.gamma.len(),
            n
        )));
    }
    let l = config.domains.len();
    let mut domain_for_region = Vec::with_capacity(n);
    for (r, &g) in config.gamma.iter().enumerate() {
        if g < 1 || g > l {
            return Err(Error::Config(format!(
                "gamma[{r}] = {g} is not a domain index in 1..={l}"
            )));
        }
        domain_for_region.push(g - 1);
    }
    let orientation = match &config.orientation {
        Some(o) => {
            if o.len() != n {
                return Err(Error::Config(format!(
                    "orientation has {} entries for {n} regions",
                    o.len()
                )));
            }
            o.clone()
        }
        None => vec![Orientation::Increasing; n],
    };
    let spec = PartitionSpec {
        domains: config.domains.clone(),
        domain_for_region,
        orientation,
    };
    let partition = validate_partition(ds, &spec)?;

    let lists = [
        &config.factors.s,
        &config.factors.sp,
        &config.factors.st,
        &config.factors.stp,
    ];
    for (name, list) in ["s", "sp", "st", "stp"].iter().zip(lists) {
        if list.len() != n {
            return Err(Error::Config(format!(
                "factors.{name} has {} entries for {n} regions",
                list.len()
            )));
        }
    }
    let mut quads = Vec::with_capacity(n);
    for r in 0..n {
        let raw_iv = Interval::new(ds.raw_x(r), ds.raw_x(r + 1));
        let unit_iv = ds.region_interval(r);
        quads.push(FactorQuad {
            s: factor_from_config(&config.factors.s[r], raw_iv, ds, unit_iv)?,
            s_prime: factor_from_config(&config.factors.sp[r], raw_iv, ds, unit_iv)?,
            s_tilde: factor_from_config(&config.factors.st[r], raw_iv, ds, unit_iv)?,
            s_tilde_prime: factor_from_config(&config.factors.stp[r], raw_iv, ds, unit_iv)?,
        });
    }
    Ok((partition, FactorSet::new(quads)?))
}

/// Summary block of a model file: the derived quantities worth eyeballing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSummary {
    pub s_bar: f64,
    #[serde(rename = "L_L")]
    pub ratio_max: f64,
    #[serde(rename = "l_L")]
    pub ratio_min: f64,
    /// Per region, the slope and intercept of its map (normalized abscissas).
    pub maps: Vec<(f64, f64)>,
    /// Connection matrix rows as exact rational strings.
    pub connection: Vec<Vec<String>>,
}

/// The serialized model: the raw inputs plus a derived summary. Loading
/// re-validates and re-assembles, so a written model reproduces identical
/// evaluations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub nodes: Vec<(f64, f64, f64)>,
    pub config: SystemConfig,
    pub summary: ModelSummary,
}

/// Assembles a model from raw inputs.
pub fn model_from_inputs(nodes: &[(f64, f64, f64)], config: &SystemConfig) -> Result<RifsModel> {
    let ds = validate_dataset(nodes)?;
    let (partition, factors) = build_inputs(&ds, config)?;
    assemble(&ds, &partition, &factors)
}

pub fn write_model_file(path: &Path, model: &RifsModel, config: &SystemConfig) -> Result<()> {
    let maps = model
        .regions
        .iter()
        .map(|r| match &r.map {
            crate::map::Map1D::Affine(m) => (m.a, m.b),
            crate::map::Map1D::Piecewise(_) => (f64::NAN, f64::NAN),
        })
        .collect();
    let file = ModelFile {
        nodes: model.dataset.raw_nodes(),
        config: config.clone(),
        summary: ModelSummary {
            s_bar: model.s_bar,
            ratio_max: model.metadata.ratio_max,
            ratio_min: model.metadata.ratio_min,
            maps,
            connection: model.connection.to_strings(),
        },
    };
    let json = serde_json::to_string_pretty(&file)?;
    fs::write(path, json)?;
    Ok(())
}

pub fn load_model_file(path: &Path) -> Result<(RifsModel, SystemConfig)> {
    let text = fs::read_to_string(path)?;
    let file: ModelFile = serde_json::from_str(&text)?;
    let model = model_from_inputs(&file.nodes, &file.config)?;
    Ok((model, file.config))
}

/// Writes the grid solution as `x,f1,f2` rows, abscissas de-normalized.
pub fn write_curve_csv(path: &Path, grid: &EvaluationGrid, ds: &ExtendedDataset) -> Result<()> {
    let mut out = fs::File::create(path)?;
    writeln!(out, "x,f1,f2")?;
    for j in 0..grid.xs.len() {
        writeln!(
            out,
            "{},{},{}",
            fmt_f64(ds.to_raw_x(grid.xs[j])),
            fmt_f64(grid.f1[j]),
            fmt_f64(grid.f2[j])
        )?;
    }
    Ok(())
}

/// Reads a curve CSV produced by [`write_curve_csv`] back into a grid shape
/// (normalized abscissas, no iteration record).
pub fn read_curve_csv(path: &Path, ds: &ExtendedDataset) -> Result<EvaluationGrid> {
    let mut reader = csv::Reader::from_path(path)?;
    {
        let headers = reader.headers()?;
        let got: Vec<&str> = headers.iter().map(|h| h.trim()).collect();
        if got != ["x", "f1", "f2"] {
            return Err(Error::Config(format!(
                "curve header must be x,f1,f2; found {}",
                got.join(",")
            )));
        }
    }
    let mut xs = Vec::new();
    let mut f1 = Vec::new();
    let mut f2 = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let parse = |field: &str| -> Result<f64> {
            field.trim().parse::<f64>().map_err(|_| {
                Error::Config(format!("curve row {}: cannot parse '{}'", i + 1, field))
            })
        };
        xs.push(ds.to_unit_x(parse(&record[0])?));
        f1.push(parse(&record[1])?);
        f2.push(parse(&record[2])?);
    }
    if xs.len() < 2 {
        return Err(Error::Config("curve file has fewer than 2 samples".into()));
    }
    Ok(EvaluationGrid {
        xs,
        f1,
        f2,
        iterations: 0,
        residual: 0.0,
        residual_history: Vec::new(),
        tolerance: 0.0,
        interp_error_estimate: 0.0,
        tolerance_below_grid_floor: false,
    })
}

/// Writes orbit or chaos-game samples as `x,f1,f2` rows (de-normalized).
pub fn write_samples_csv(path: &Path, set: &OrbitSampleSet, ds: &ExtendedDataset) -> Result<()> {
    let mut out = fs::File::create(path)?;
    writeln!(out, "x,f1,f2")?;
    for s in &set.samples {
        writeln!(
            out,
            "{},{},{}",
            fmt_f64(ds.to_raw_x(s.x)),
            fmt_f64(s.f1),
            fmt_f64(s.f2)
        )?;
    }
    Ok(())
}
