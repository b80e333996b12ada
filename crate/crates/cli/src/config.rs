//! Experiment configuration files.
//!
//! A TOML document with one table per module:
//!
//! ```toml
//! seed = 2013                  # optional, defaults to DEFAULT_SEED
//!
//! [model]
//! family = "heston32"          # heston32 | example1 | example2 | example3
//! k1 = 0.1
//! k2 = 70.0
//! k3 = "sqrt:0.2"              # number, "sqrt:<x>", or { times = [..], values = [..] }
//! x0 = 1.0
//! horizon = 1.0
//!
//! [paths]
//! levels = [1, 3, 5, 7, 9, 11, 13]
//! reference_exponent = 14
//!
//! [montecarlo]
//! schemes = ["SD", "HMS", "TAMED"]
//! reference = "HMS"
//! batches = 20
//! paths_per_batch = 100
//! ```
//!
//! `[analysis]`, `[negativity]` and `[single_path]` configure the other commands.

use std::path::Path;

use semidiscrete::analysis::FitSpec;
use semidiscrete::models::{validate_parameters, Family, ValidationReport};
use semidiscrete::montecarlo::{ExperimentConfig, ReferencePath};
use semidiscrete::paths::DEFAULT_REFERENCE_EXPONENT;
use semidiscrete::{
    CoefficientFn, CoefficientMode, GridSpec, ModelSpec, PhiFn, Scheme, SchemeKind,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Seed used when neither the config nor `--seed` sets one.
pub const DEFAULT_SEED: u64 = 2013;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Number(f64),
    /// A decimal literal or `sqrt:<x>`.
    Text(String),
    Table {
        times: Vec<f64>,
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub family: String,
    pub k1: Coefficient,
    pub k2: Coefficient,
    pub k3: Coefficient,
    pub phi: Option<String>,
    pub r: Option<f64>,
    pub q: Option<i32>,
    pub x0: f64,
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    pub levels: Vec<u32>,
    pub reference_exponent: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSection {
    pub schemes: Vec<String>,
    pub reference: Option<String>,
    /// `shared` or `independent`.
    pub reference_path: Option<String>,
    pub batches: usize,
    pub paths_per_batch: usize,
    pub alpha: Option<f64>,
    pub quantile: Option<f64>,
    /// `left` or `midpoint`.
    pub sd_mode: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    /// `all` or `first<n>`.
    pub fits: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NegativitySection {
    pub scheme: String,
    pub n_paths: usize,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinglePathSection {
    pub schemes: Vec<String>,
    pub steps: usize,
    pub path_index: Option<u64>,
}

/// The file as written, before any interpretation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub seed: Option<u64>,
    pub model: ModelSection,
    pub paths: Option<PathsSection>,
    pub montecarlo: Option<MonteCarloSection>,
    pub analysis: Option<AnalysisSection>,
    pub negativity: Option<NegativitySection>,
    pub single_path: Option<SinglePathSection>,
}

#[derive(Debug, Clone)]
pub struct NegativityPlan {
    pub scheme: Scheme,
    pub n_paths: usize,
    pub steps: usize,
}

#[derive(Debug, Clone)]
pub struct SinglePathPlan {
    pub schemes: Vec<Scheme>,
    pub steps: usize,
    pub path_index: u64,
}

/// A parsed and validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// The file contents with `seed` filled in.
    pub raw: RawConfig,
    pub seed: u64,
    pub seed_defaulted: bool,
    pub model: ModelSpec,
    pub validation: ValidationReport,
    pub experiment: Option<ExperimentConfig>,
    pub fits: Vec<FitSpec>,
    pub negativity: Option<NegativityPlan>,
    pub single_path: Option<SinglePathPlan>,
}

fn field_error(field: &str, message: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {message}"))
}

fn parse_number(field: &str, text: &str) -> Result<f64> {
    let text = text.trim();
    let value = match text.strip_prefix("sqrt:") {
        Some(arg) => {
            let x: f64 = arg
                .trim()
                .parse()
                .map_err(|_| field_error(field, format!("cannot read {arg:?} as a number")))?;
            if x < 0.0 {
                return Err(field_error(field, format!("sqrt of negative value {x}")));
            }
            x.sqrt()
        }
        None => text.parse().map_err(|_| {
            field_error(
                field,
                format!("expected a number or sqrt:<x>, got {text:?}"),
            )
        })?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(field_error(field, "value must be finite"))
    }
}

fn coefficient(field: &str, c: &Coefficient) -> Result<CoefficientFn> {
    match c {
        Coefficient::Number(v) if v.is_finite() => Ok(CoefficientFn::constant(*v)),
        Coefficient::Number(_) => Err(field_error(field, "value must be finite")),
        Coefficient::Text(s) => parse_number(field, s).map(CoefficientFn::constant),
        Coefficient::Table { times, values } => {
            CoefficientFn::tabulated(times.clone(), values.clone())
                .map_err(|e| field_error(field, e))
        }
    }
}

fn parse_family(name: &str) -> Result<Family> {
    Family::ALL
        .into_iter()
        .find(|f| f.name().eq_ignore_ascii_case(name))
        .ok_or_else(|| {
            let known: Vec<&str> = Family::ALL.iter().map(|f| f.name()).collect();
            field_error(
                "model.family",
                format!(
                    "unknown family {name:?}; supported families: {}",
                    known.join(", ")
                ),
            )
        })
}

fn build_model(m: &ModelSection) -> Result<ModelSpec> {
    let family = parse_family(&m.family)?;
    let (k1, k2, k3) = (
        coefficient("model.k1", &m.k1)?,
        coefficient("model.k2", &m.k2)?,
        coefficient("model.k3", &m.k3)?,
    );
    let phi = match m.phi.as_deref().map(str::to_ascii_lowercase).as_deref() {
        None | Some("one") => PhiFn::one(),
        Some("sin") => PhiFn::sin(),
        Some(other) => {
            return Err(field_error(
                "model.phi",
                format!("expected one or sin, got {other:?}"),
            ))
        }
    };
    let need_r = || {
        m.r.ok_or_else(|| field_error("model.r", format!("required for {family}")))
    };
    let model = match family {
        Family::Heston32Const => {
            let constant = |name: &str, k: &CoefficientFn| {
                k.as_constant()
                    .ok_or_else(|| field_error(name, "heston32 needs constant coefficients"))
            };
            if !phi.is_one() {
                return Err(field_error("model.phi", "heston32 has phi = one"));
            }
            ModelSpec::heston32(
                constant("model.k1", &k1)?,
                constant("model.k2", &k2)?,
                constant("model.k3", &k3)?,
                m.x0,
                m.horizon,
            )
        }
        Family::ExampleI => ModelSpec::example1(k1, k2, k3, phi, m.x0, m.horizon),
        Family::ExampleII => {
            if !phi.is_one() {
                return Err(field_error("model.phi", "example2 has no phi"));
            }
            ModelSpec::example2(k1, k2, k3, need_r()?, m.x0, m.horizon)
        }
        Family::ExampleIII => {
            let q =
                m.q.ok_or_else(|| field_error("model.q", "required for example3"))?;
            ModelSpec::example3(k1, k2, k3, phi, need_r()?, q, m.x0, m.horizon)
        }
    };
    model.map_err(|e| field_error("model", e))
}

fn parse_schemes(field: &str, names: &[String], mode: CoefficientMode) -> Result<Vec<Scheme>> {
    names
        .iter()
        .map(|n| {
            let kind: SchemeKind = n.parse().map_err(|e| field_error(field, e))?;
            Ok(Scheme {
                kind,
                sd_mode: mode,
            })
        })
        .collect()
}

fn parse_fit(name: &str) -> Result<FitSpec> {
    if name == "all" {
        return Ok(FitSpec::all());
    }
    name.strip_prefix("first")
        .and_then(|n| n.parse::<usize>().ok())
        .filter(|&n| n >= 2)
        .map(FitSpec::first)
        .ok_or_else(|| {
            field_error(
                "analysis.fits",
                format!("expected all or first<n>, n >= 2, got {name:?}"),
            )
        })
}

fn build_experiment(
    raw: &RawConfig,
    model: &ModelSpec,
    seed: u64,
) -> Result<Option<ExperimentConfig>> {
    let Some(mc) = &raw.montecarlo else {
        return Ok(None);
    };
    let paths = raw
        .paths
        .as_ref()
        .ok_or_else(|| field_error("paths", "[montecarlo] needs a [paths] table"))?;
    let sd_mode = match mc.sd_mode.as_deref() {
        None | Some("left") => CoefficientMode::LeftPoint,
        Some("midpoint") => CoefficientMode::Midpoint,
        Some(other) => {
            return Err(field_error(
                "montecarlo.sd_mode",
                format!("expected left or midpoint, got {other:?}"),
            ))
        }
    };
    if mc.schemes.is_empty() {
        return Err(field_error(
            "montecarlo.schemes",
            "at least one scheme is required",
        ));
    }
    let schemes = parse_schemes("montecarlo.schemes", &mc.schemes, sd_mode)?;
    let reference = parse_schemes(
        "montecarlo.reference",
        &[mc.reference.clone().unwrap_or_else(|| "HMS".into())],
        sd_mode,
    )?[0];
    let reference_path: ReferencePath = match &mc.reference_path {
        Some(s) => s
            .parse()
            .map_err(|e| field_error("montecarlo.reference_path", e))?,
        None => ReferencePath::default(),
    };
    let grid = GridSpec::new(
        model.horizon,
        paths.levels.clone(),
        paths
            .reference_exponent
            .unwrap_or(DEFAULT_REFERENCE_EXPONENT),
    )
    .map_err(|e| field_error("paths", e))?;
    let experiment = ExperimentConfig {
        model: model.clone(),
        schemes,
        grid,
        batches: mc.batches,
        paths_per_batch: mc.paths_per_batch,
        alpha: mc.alpha.unwrap_or(0.10),
        seed,
        reference,
        reference_path,
        quantile: mc.quantile,
    };
    experiment
        .validate()
        .map_err(|e| field_error("montecarlo", e))?;
    Ok(Some(experiment))
}

impl RunConfig {
    pub fn from_raw(mut raw: RawConfig) -> Result<Self> {
        let seed_defaulted = raw.seed.is_none();
        let seed = *raw.seed.get_or_insert(DEFAULT_SEED);
        let model = build_model(&raw.model)?;
        let validation = validate_parameters(&model);
        let experiment = build_experiment(&raw, &model, seed)?;
        let fits = match &raw.analysis {
            Some(a) => a
                .fits
                .iter()
                .map(|f| parse_fit(f))
                .collect::<Result<Vec<_>>>()?,
            None => FitSpec::standard(),
        };
        let negativity = match &raw.negativity {
            Some(n) => {
                let scheme = parse_schemes(
                    "negativity.scheme",
                    std::slice::from_ref(&n.scheme),
                    CoefficientMode::LeftPoint,
                )?[0];
                if n.n_paths == 0 {
                    return Err(field_error(
                        "negativity.n_paths",
                        "at least one path is required",
                    ));
                }
                if n.steps == 0 {
                    return Err(field_error(
                        "negativity.steps",
                        "at least one step is required",
                    ));
                }
                scheme
                    .check_model(&model)
                    .map_err(|e| field_error("negativity.scheme", e))?;
                Some(NegativityPlan {
                    scheme,
                    n_paths: n.n_paths,
                    steps: n.steps,
                })
            }
            None => None,
        };
        let single_path = match &raw.single_path {
            Some(s) => {
                if s.schemes.is_empty() {
                    return Err(field_error(
                        "single_path.schemes",
                        "at least one scheme is required",
                    ));
                }
                if s.steps == 0 {
                    return Err(field_error(
                        "single_path.steps",
                        "at least one step is required",
                    ));
                }
                let schemes = parse_schemes(
                    "single_path.schemes",
                    &s.schemes,
                    CoefficientMode::LeftPoint,
                )?;
                for scheme in &schemes {
                    scheme
                        .check_model(&model)
                        .map_err(|e| field_error("single_path.schemes", e))?;
                }
                Some(SinglePathPlan {
                    schemes,
                    steps: s.steps,
                    path_index: s.path_index.unwrap_or(0),
                })
            }
            None => None,
        };
        Ok(RunConfig {
            raw,
            seed,
            seed_defaulted,
            model,
            validation,
            experiment,
            fits,
            negativity,
            single_path,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Self::from_raw(raw)
    }

    /// Replaces the seed, as `--seed` does.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.seed_defaulted = false;
        self.raw.seed = Some(seed);
        if let Some(e) = &mut self.experiment {
            e.seed = seed;
        }
        self
    }

    /// Validation findings that are not plain passes, one line each.
    pub fn warnings(&self) -> Vec<String> {
        self.validation
            .problems()
            .map(|f| format!("{:?}: {} ({})", f.severity, f.message, f.condition))
            .collect()
    }

    /// SHA-256 of the canonical JSON form of the configuration, seed included.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_vec(&self.raw).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    RunConfig::from_toml(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
