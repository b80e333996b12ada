use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use semidiscrete::analysis::{build_report, ConvergenceReport};
use semidiscrete::montecarlo::{
    negativity_census, run_endpoint_errors, BatchErrorReport, NegativityCensus,
};
use semidiscrete::paths::gaussian_increments;
use semidiscrete::schemes::simulate_path_with;
use semidiscrete::{Scheme, SchemeKind};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::output::{census_csv, errors_csv, orders_csv, series_csv, write_file, RunManifest};
use crate::plot::error_plot_svg;

/// Where and how a command runs.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub out: PathBuf,
    pub workers: Option<usize>,
    pub config_path: Option<PathBuf>,
}

impl RunContext {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        RunContext {
            out: out.into(),
            workers: None,
            config_path: None,
        }
    }

    fn finish(
        &self,
        command: &str,
        cfg: &RunConfig,
        mut files: Vec<PathBuf>,
    ) -> Result<Vec<PathBuf>> {
        let manifest = RunManifest {
            command: command.into(),
            config_path: self.config_path.clone(),
            config_digest: cfg.digest(),
            seed: cfg.seed,
            seed_defaulted: cfg.seed_defaulted,
            timestamp: chrono::Utc::now().to_rfc3339(),
            version: env!("CARGO_PKG_VERSION").into(),
            workers: self.workers,
            files: files.clone(),
        };
        files.push(write_file(&self.out, "manifest.txt", &manifest.render()?)?);
        Ok(files)
    }
}

#[derive(Debug)]
pub struct ConvergenceOutcome {
    pub errors: Vec<BatchErrorReport>,
    pub report: ConvergenceReport,
    pub files: Vec<PathBuf>,
}

pub fn cmd_convergence(cfg: &RunConfig, ctx: &RunContext) -> Result<ConvergenceOutcome> {
    let experiment = cfg.experiment.as_ref().ok_or_else(|| {
        CliError::Usage("convergence needs [paths] and [montecarlo] tables".into())
    })?;
    let errors = run_endpoint_errors(experiment, ctx.workers)?;
    let report = build_report(&errors, &cfg.fits)?;
    let title = format!(
        "{} endpoint errors, reference {} at 2^-{} ({})",
        cfg.model.family(),
        experiment.reference.kind,
        experiment.grid.reference_exponent,
        experiment.reference_path.name()
    );
    let files = vec![
        write_file(&ctx.out, "errors.csv", &errors_csv(&errors))?,
        write_file(&ctx.out, "orders.csv", &orders_csv(&report))?,
        write_file(&ctx.out, "plot.svg", &error_plot_svg(&report, &title))?,
    ];
    let files = ctx.finish("convergence", cfg, files)?;
    Ok(ConvergenceOutcome {
        errors,
        report,
        files,
    })
}

fn trajectory(scheme: Scheme, cfg: &RunConfig, increments: &[f64], dt: f64) -> Result<Vec<f64>> {
    let mut path = Vec::with_capacity(increments.len() + 1);
    simulate_path_with(scheme, &cfg.model, increments, dt, Some(&mut path))?;
    Ok(path)
}

/// Census plus `trajectory.csv`: the first path that went negative (path 0 if none did),
/// under the census scheme and under SD on the same increments.
pub fn cmd_negativity(
    cfg: &RunConfig,
    ctx: &RunContext,
) -> Result<(NegativityCensus, Vec<PathBuf>)> {
    let plan = cfg
        .negativity
        .as_ref()
        .ok_or_else(|| CliError::Usage("negativity needs a [negativity] table".into()))?;
    let census = negativity_census(
        plan.scheme,
        &cfg.model,
        plan.n_paths,
        plan.steps,
        cfg.seed,
        ctx.workers,
    )?;
    let sample = census.example_first_values.first().map_or(0, |e| e.0);
    let increments = gaussian_increments(cfg.seed, sample, plan.steps, census.dt);
    let mut columns = vec![(
        plan.scheme.kind.name().to_string(),
        trajectory(plan.scheme, cfg, &increments, census.dt)?,
    )];
    if plan.scheme.kind != SchemeKind::Sd {
        columns.push((
            "SD".into(),
            trajectory(SchemeKind::Sd.into(), cfg, &increments, census.dt)?,
        ));
    }
    let files = vec![
        write_file(&ctx.out, "census.csv", &census_csv(&census))?,
        write_file(&ctx.out, "trajectory.csv", &series_csv(census.dt, &columns))?,
    ];
    let files = ctx.finish("negativity", cfg, files)?;
    Ok((census, files))
}

/// One trajectory per configured scheme, all driven by the same increments.
pub fn cmd_single_path(cfg: &RunConfig, ctx: &RunContext) -> Result<Vec<PathBuf>> {
    let plan = cfg
        .single_path
        .as_ref()
        .ok_or_else(|| CliError::Usage("single-path needs a [single_path] table".into()))?;
    let dt = cfg.model.horizon / plan.steps as f64;
    let increments = gaussian_increments(cfg.seed, plan.path_index, plan.steps, dt);
    let columns = plan
        .schemes
        .iter()
        .map(|&s| {
            Ok((
                s.kind.name().to_string(),
                trajectory(s, cfg, &increments, dt)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let files = vec![write_file(
        &ctx.out,
        "series.csv",
        &series_csv(dt, &columns),
    )?];
    ctx.finish("single-path", cfg, files)
}

/// Human-readable parameter check.
pub fn cmd_validate(cfg: &RunConfig) -> String {
    let mut s = format!(
        "family {}: {:?}\n",
        cfg.model.family(),
        cfg.validation.status
    );
    for f in &cfg.validation.findings {
        writeln!(s, "  [{:?}] {}: {}", f.severity, f.condition, f.message).unwrap();
    }
    s
}

pub fn summarize_convergence(outcome: &ConvergenceOutcome) -> String {
    let mut s = String::new();
    for f in &outcome.report.fits {
        writeln!(
            s,
            "{:<6} {:<8} points {:>2}  slope {:.4}",
            f.scheme, f.fit, f.points_used, f.slope
        )
        .unwrap();
    }
    s
}

pub fn summarize_census(c: &NegativityCensus) -> String {
    let mut s = format!(
        "{}: {} of {} paths went negative (fraction {}), {} overflowed\n",
        c.scheme,
        c.step_histogram.values().sum::<usize>(),
        c.n_paths,
        c.fraction_negative,
        c.overflowed_paths
    );
    for (path, step, value) in &c.example_first_values {
        writeln!(
            s,
            "  path {path}: first negative at step {step}, value {value}"
        )
        .unwrap();
    }
    s
}

pub fn out_dir_or_default(out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("out"))
}
