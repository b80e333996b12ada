//! Coupled-path endpoint-error experiments, batch-means confidence intervals and the
//! negativity census.
//!
//! Path `i` of an experiment owns the Brownian lattice keyed by `(seed, i)`. Every candidate
//! runs on exactly coarsened increments of that lattice. The reference solution runs either
//! on the same lattice ([`ReferencePath::Shared`]) or on an independent one keyed by
//! `(seed, i | 2^63)` ([`ReferencePath::Independent`]). Batch `j` owns paths
//! `[j L, (j + 1) L)`. Paths are simulated in parallel but reduced in index order, so
//! results do not depend on the number of workers.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::paths::{gaussian_increments, generate_lattice, GridSpec};
use crate::schemes::{simulate_path, PathResult, Scheme, SchemeKind};

/// Smallest batch size for which batch means are treated as Gaussian.
pub const MIN_PATHS_PER_BATCH: usize = 15;

/// Student-t quantiles `t_{1-alpha, M-1}` at `alpha = 0.10`, keyed by batch count `M`.
pub const T_QUANTILES_ALPHA_010: [(usize, f64); 7] = [
    (10, 1.83),
    (20, 1.73),
    (30, 1.70),
    (40, 1.68),
    (60, 1.67),
    (100, 1.66),
    (200, 1.65),
];

/// Table lookup of the quantile used in the batch-means interval. Other `(alpha, M)`
/// combinations need an explicit value from the caller.
pub fn t_quantile(alpha: f64, batches: usize) -> Result<f64> {
    if (alpha - 0.10).abs() < 1e-12 {
        if let Some(&(_, t)) = T_QUANTILES_ALPHA_010.iter().find(|(m, _)| *m == batches) {
            return Ok(t);
        }
    }
    Err(Error::usage(format!(
        "no tabulated t-quantile for alpha = {alpha}, M = {batches}; supply one explicitly \
         (tabulated: alpha = 0.10 with M in 10, 20, 30, 40, 60, 100, 200)"
    )))
}

/// Brownian path driving the reference solution of path `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum ReferencePath {
    /// The lattice the candidates are coarsened from: strong (pathwise) errors.
    #[default]
    Shared,
    /// A separate lattice: the error then also contains the spread between two
    /// independent solutions, which puts a floor under it as `dt -> 0`.
    Independent,
}

impl ReferencePath {
    pub fn name(self) -> &'static str {
        match self {
            ReferencePath::Shared => "shared",
            ReferencePath::Independent => "independent",
        }
    }
}

impl std::str::FromStr for ReferencePath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "shared" => Ok(ReferencePath::Shared),
            "independent" => Ok(ReferencePath::Independent),
            _ => Err(Error::usage(format!(
                "unknown reference path {s:?}; expected shared or independent"
            ))),
        }
    }
}

/// Stream id of the independent reference lattice of path `i`.
pub fn independent_stream(path_index: u64) -> u64 {
    path_index | (1 << 63)
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    /// Candidate schemes, each run at every level of `grid`.
    pub schemes: Vec<Scheme>,
    pub grid: GridSpec,
    /// Number of batches `M`.
    pub batches: usize,
    /// Paths per batch `L`.
    pub paths_per_batch: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Scheme run at `grid.reference_exponent` that stands in for the exact solution.
    pub reference: Scheme,
    pub reference_path: ReferencePath,
    /// Overrides the tabulated t-quantile.
    pub quantile: Option<f64>,
}

impl ExperimentConfig {
    pub fn total_paths(&self) -> usize {
        self.batches * self.paths_per_batch
    }

    pub fn quantile(&self) -> Result<f64> {
        match self.quantile {
            Some(q) if q.is_finite() && q > 0.0 => Ok(q),
            Some(q) => Err(Error::usage(format!(
                "quantile override must be positive, got {q}"
            ))),
            None => t_quantile(self.alpha, self.batches),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.schemes.is_empty() {
            return Err(Error::usage("experiment needs at least one scheme"));
        }
        if self.grid.levels.is_empty() {
            return Err(Error::usage("experiment needs at least one level"));
        }
        if self.batches < 2 {
            return Err(Error::usage(format!(
                "need at least 2 batches for a confidence interval, got M = {}",
                self.batches
            )));
        }
        if self.paths_per_batch < MIN_PATHS_PER_BATCH {
            return Err(Error::usage(format!(
                "L = {} paths per batch is too small: batch means are treated as Gaussian only \
                 for L >= {MIN_PATHS_PER_BATCH}",
                self.paths_per_batch
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::usage(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if (self.grid.horizon - self.model.horizon).abs() > 1e-12 * self.model.horizon {
            return Err(Error::usage("grid horizon differs from the model horizon"));
        }
        for scheme in self.schemes.iter().chain([&self.reference]) {
            scheme.check_model(&self.model)?;
        }
        self.quantile()?;
        Ok(())
    }
}

/// Endpoint error estimate of one scheme at one step size.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchErrorReport {
    pub scheme: SchemeKind,
    pub level_exponent: u32,
    pub dt: f64,
    pub batch_means: Vec<f64>,
    pub grand_mean: f64,
    pub ci_half_width: f64,
    pub quantile_used: f64,
    /// Paths left out because the candidate overflowed.
    pub excluded_paths: usize,
    /// Paths on which the candidate produced a negative iterate.
    pub negative_paths: usize,
}

impl BatchErrorReport {
    /// Usable for order fits: no exclusions and a finite positive error.
    pub fn is_clean(&self) -> bool {
        self.excluded_paths == 0 && self.grand_mean.is_finite() && self.grand_mean > 0.0
    }
}

/// Grand mean of the batch means and the half-width
/// `t * sqrt(sum_j (e_j - e)^2 / (M (M - 1)))`.
pub fn batch_statistics(batch_means: &[f64], quantile: f64) -> (f64, f64) {
    let m = batch_means.len() as f64;
    // Shifted by the first mean so that identical batches give exactly zero width.
    let shift = batch_means.first().copied().unwrap_or(f64::NAN);
    let offset = batch_means.iter().map(|e| e - shift).sum::<f64>() / m;
    let ss: f64 = batch_means
        .iter()
        .map(|e| (e - shift - offset).powi(2))
        .sum();
    let half = quantile * (ss / (m * (m - 1.0))).sqrt();
    (shift + offset, half)
}

#[derive(Debug)]
struct PathErrors {
    /// `None` when the candidate overflowed.
    errors: Vec<Option<f64>>,
    negative: Vec<bool>,
}

fn run_pool<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(job()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::usage(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

fn simulate_coupled(config: &ExperimentConfig, path_index: u64) -> Result<PathErrors> {
    let grid = &config.grid;
    let lattice = generate_lattice(config.seed, path_index, grid);
    let pyramid = lattice.pyramid();
    let independent;
    let reference_increments = match config.reference_path {
        ReferencePath::Shared => &lattice.fine_increments,
        ReferencePath::Independent => {
            independent = generate_lattice(config.seed, independent_stream(path_index), grid);
            &independent.fine_increments
        }
    };
    let reference = simulate_path(
        config.reference,
        &config.model,
        reference_increments,
        grid.step(grid.reference_exponent),
    )
    .map_err(|e| Error::ReferenceFailed {
        path_index,
        reason: e.to_string(),
    })?;
    if reference.overflowed || !reference.terminal.is_finite() {
        return Err(Error::ReferenceFailed {
            path_index,
            reason: "reference solution overflowed".into(),
        });
    }
    let pairs = config.schemes.len() * grid.levels.len();
    let mut errors = Vec::with_capacity(pairs);
    let mut negative = Vec::with_capacity(pairs);
    for &scheme in &config.schemes {
        for &e in &grid.levels {
            let candidate: PathResult =
                simulate_path(scheme, &config.model, &pyramid[e as usize], grid.step(e))?;
            let err = (candidate.terminal - reference.terminal).abs();
            errors.push((!candidate.overflowed && err.is_finite()).then_some(err));
            negative.push(candidate.went_negative());
        }
    }
    Ok(PathErrors { errors, negative })
}

/// Endpoint errors `E|y_T - x_T|` of every (scheme, level) pair with batch-means
/// confidence intervals. `workers = None` uses the global thread pool.
pub fn run_endpoint_errors(
    config: &ExperimentConfig,
    workers: Option<usize>,
) -> Result<Vec<BatchErrorReport>> {
    config.validate()?;
    let quantile = config.quantile()?;
    let total = config.total_paths() as u64;

    let per_path: Vec<PathErrors> = run_pool(workers, || {
        (0..total)
            .into_par_iter()
            .map(|i| simulate_coupled(config, i))
            .collect::<Result<Vec<_>>>()
    })??;

    let grid = &config.grid;
    let mut reports = Vec::new();
    let mut pair = 0;
    for scheme in &config.schemes {
        for &e in &grid.levels {
            let mut batch_means = Vec::with_capacity(config.batches);
            let mut excluded = 0;
            let mut negative = 0;
            for batch in per_path.chunks(config.paths_per_batch) {
                let (mut sum, mut count) = (0.0, 0usize);
                for p in batch {
                    match p.errors[pair] {
                        Some(err) => {
                            sum += err;
                            count += 1;
                        }
                        None => excluded += 1,
                    }
                    negative += usize::from(p.negative[pair]);
                }
                batch_means.push(if count > 0 {
                    sum / count as f64
                } else {
                    f64::NAN
                });
            }
            let (grand_mean, ci_half_width) = batch_statistics(&batch_means, quantile);
            reports.push(BatchErrorReport {
                scheme: scheme.kind,
                level_exponent: e,
                dt: grid.step(e),
                batch_means,
                grand_mean,
                ci_half_width,
                quantile_used: quantile,
                excluded_paths: excluded,
                negative_paths: negative,
            });
            pair += 1;
        }
    }
    Ok(reports)
}

/// First-negative-iterate statistics of one scheme over independent paths.
#[derive(Debug, Clone, PartialEq)]
pub struct NegativityCensus {
    pub scheme: SchemeKind,
    pub n_paths: usize,
    pub steps: usize,
    pub dt: f64,
    pub fraction_negative: f64,
    /// First-negative step -> number of paths.
    pub step_histogram: BTreeMap<usize, usize>,
    /// `(path index, step, value)` of the first few paths that went negative.
    pub example_first_values: Vec<(u64, usize, f64)>,
    pub overflowed_paths: usize,
}

pub const CENSUS_EXAMPLES: usize = 10;

/// Simulates `n_paths` independent paths of `steps` steps (`dt = T / steps`).
pub fn negativity_census(
    scheme: impl Into<Scheme>,
    model: &ModelSpec,
    n_paths: usize,
    steps: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<NegativityCensus> {
    let scheme = scheme.into();
    if n_paths == 0 {
        return Err(Error::usage("negativity census needs at least one path"));
    }
    if steps == 0 {
        return Err(Error::usage("negativity census needs at least one step"));
    }
    scheme.check_model(model)?;
    let dt = model.horizon / steps as f64;
    let results: Vec<PathResult> = run_pool(workers, || {
        (0..n_paths as u64)
            .into_par_iter()
            .map(|i| simulate_path(scheme, model, &gaussian_increments(seed, i, steps, dt), dt))
            .collect::<Result<Vec<_>>>()
    })??;

    let mut step_histogram = BTreeMap::new();
    let mut example_first_values = Vec::new();
    let mut negative = 0;
    let mut overflowed = 0;
    for (i, r) in results.iter().enumerate() {
        overflowed += usize::from(r.overflowed);
        if let (Some(step), Some(value)) = (r.first_negative_step, r.first_negative_value) {
            negative += 1;
            *step_histogram.entry(step).or_insert(0) += 1;
            if example_first_values.len() < CENSUS_EXAMPLES {
                example_first_values.push((i as u64, step, value));
            }
        }
    }
    Ok(NegativityCensus {
        scheme: scheme.kind,
        n_paths,
        steps,
        dt,
        fraction_negative: negative as f64 / n_paths as f64,
        step_histogram,
        example_first_values,
        overflowed_paths: overflowed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{CoefficientFn, PhiFn};

    fn config(schemes: Vec<Scheme>, reference: Scheme) -> ExperimentConfig {
        ExperimentConfig {
            reference_path: ReferencePath::Shared,
            model: ModelSpec::heston32(0.1, 70.0, 0.2f64.sqrt(), 1.0, 1.0).unwrap(),
            schemes,
            grid: GridSpec::new(1.0, vec![1, 3, 5], 8).unwrap(),
            batches: 4,
            paths_per_batch: 15,
            alpha: 0.10,
            seed: 11,
            reference,
            quantile: Some(2.35),
        }
    }

    #[test]
    fn table_quantiles() {
        assert_eq!(t_quantile(0.10, 20).unwrap(), 1.73);
        assert_eq!(t_quantile(0.10, 10).unwrap(), 1.83);
        assert_eq!(t_quantile(0.10, 200).unwrap(), 1.65);
        assert!(t_quantile(0.05, 20).is_err());
        assert!(t_quantile(0.10, 21).is_err());
    }

    #[test]
    fn constant_batches_have_zero_width() {
        let (g, h) = batch_statistics(&[0.25; 20], 1.73);
        assert_eq!(g, 0.25);
        assert_eq!(h, 0.0);
        let (g, h) = batch_statistics(&[0.37; 20], 1.73);
        assert_eq!(g, 0.37);
        assert_eq!(h, 0.0);
    }

    #[test]
    fn batch_statistics_by_hand() {
        // mean 2, squared deviations 1 + 0 + 1 = 2, sqrt(2 / 6)
        let (g, h) = batch_statistics(&[1.0, 2.0, 3.0], 2.0);
        assert_eq!(g, 2.0);
        assert!((h - 2.0 * (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        let mut c = config(vec![SchemeKind::Sd.into()], SchemeKind::Hms.into());
        assert!(c.validate().is_ok());
        c.paths_per_batch = 10;
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("L >= 15"), "{msg}");
        c.paths_per_batch = 15;
        c.batches = 1;
        assert!(c.validate().is_err());
        c.batches = 4;
        c.schemes.clear();
        assert!(c.validate().is_err());
        c.schemes.push(SchemeKind::Sd.into());
        c.quantile = None;
        assert!(c.validate().is_err(), "M = 4 has no tabulated quantile");
        c.quantile = Some(2.35);
        c.model = ModelSpec::example1(
            CoefficientFn::constant(0.1),
            CoefficientFn::constant(70.0),
            CoefficientFn::constant(0.2f64.sqrt()),
            PhiFn::sin(),
            1.0,
            1.0,
        )
        .unwrap();
        assert!(
            matches!(c.validate(), Err(Error::Usage(_))),
            "HMS reference on sin phi"
        );
    }

    #[test]
    fn self_comparison_has_zero_error() {
        let mut c = config(vec![SchemeKind::Hms.into()], SchemeKind::Hms.into());
        c.grid = GridSpec::new(1.0, vec![2, 8], 8).unwrap();
        let reports = run_endpoint_errors(&c, Some(2)).unwrap();
        let at_ref = reports.iter().find(|r| r.level_exponent == 8).unwrap();
        assert_eq!(at_ref.grand_mean, 0.0);
        assert_eq!(at_ref.ci_half_width, 0.0);
        assert!(at_ref.batch_means.iter().all(|&e| e == 0.0));
        assert!(reports[0].grand_mean > 0.0);
    }

    #[test]
    fn reports_cover_every_pair_in_order() {
        let c = config(
            vec![SchemeKind::Sd.into(), SchemeKind::Tamed.into()],
            SchemeKind::Hms.into(),
        );
        let reports = run_endpoint_errors(&c, None).unwrap();
        let keys: Vec<_> = reports
            .iter()
            .map(|r| (r.scheme, r.level_exponent))
            .collect();
        assert_eq!(
            keys,
            vec![
                (SchemeKind::Sd, 1),
                (SchemeKind::Sd, 3),
                (SchemeKind::Sd, 5),
                (SchemeKind::Tamed, 1),
                (SchemeKind::Tamed, 3),
                (SchemeKind::Tamed, 5),
            ]
        );
        for r in &reports {
            assert_eq!(r.batch_means.len(), 4);
            assert!(r.ci_half_width >= 0.0);
            assert_eq!(r.quantile_used, 2.35);
        }
        // the over-tamed baseline leaves the positive half-line at coarse steps
        assert!(reports[3].negative_paths > 0);
        assert_eq!(reports[0].negative_paths, 0);
    }

    #[test]
    fn independent_reference_adds_an_error_floor() {
        let mut c = config(vec![SchemeKind::Hms.into()], SchemeKind::Hms.into());
        c.grid = GridSpec::new(1.0, vec![8], 8).unwrap();
        assert_eq!(run_endpoint_errors(&c, None).unwrap()[0].grand_mean, 0.0);
        c.reference_path = ReferencePath::Independent;
        assert!(run_endpoint_errors(&c, None).unwrap()[0].grand_mean > 0.0);
        assert_eq!(
            "Independent".parse::<ReferencePath>().unwrap(),
            ReferencePath::Independent
        );
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let c = config(vec![SchemeKind::Sd.into()], SchemeKind::Hms.into());
        let one = run_endpoint_errors(&c, Some(1)).unwrap();
        let many = run_endpoint_errors(&c, Some(5)).unwrap();
        assert_eq!(one, many);
    }

    #[test]
    fn sd_census_is_zero() {
        let m = ModelSpec::heston32(1.0, 1000.0, 1.0, 1.0, 1.0).unwrap();
        let c = negativity_census(SchemeKind::Sd, &m, 50, 100, 1, None).unwrap();
        assert_eq!(c.fraction_negative, 0.0);
        assert!(c.step_histogram.is_empty());
        assert!(negativity_census(SchemeKind::Sd, &m, 0, 100, 1, None).is_err());
    }

    #[test]
    fn em_census_with_large_noise_is_positive() {
        let m = ModelSpec::heston32(0.1, 1.0, 3.0, 1.0, 1.0).unwrap();
        let c = negativity_census(SchemeKind::Em, &m, 200, 50, 2, None).unwrap();
        assert!(c.fraction_negative > 0.0);
        let total: usize = c.step_histogram.values().sum();
        assert_eq!(total as f64 / 200.0, c.fraction_negative);
        assert!(c.example_first_values.iter().all(|&(_, _, v)| v < 0.0));
    }
}
