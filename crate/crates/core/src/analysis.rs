//! Empirical strong order: least squares on `(log2 dt, log2 error)`.

use crate::error::{Error, Result};
use crate::montecarlo::BatchErrorReport;
use crate::schemes::SchemeKind;

/// Ordinary least squares of `log2 err` on `log2 dt`; returns `(slope, intercept)`.
pub fn fit_order(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 2 {
        return Err(Error::usage(format!(
            "order fit needs at least 2 points, got {}",
            points.len()
        )));
    }
    if let Some(&(dt, err)) = points
        .iter()
        .find(|&&(dt, err)| !(dt > 0.0 && err > 0.0 && dt.is_finite() && err.is_finite()))
    {
        return Err(Error::domain(format!(
            "order fit needs positive finite step sizes and errors, got ({dt}, {err})"
        )));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.log2()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.log2()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::domain(
            "order fit needs at least two distinct step sizes",
        ));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Which rows of a scheme enter a fit, counted from the largest step size.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PointSubset {
    First(usize),
    All,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FitSpec {
    pub name: String,
    pub subset: PointSubset,
}

impl FitSpec {
    pub fn first(n: usize) -> Self {
        FitSpec {
            name: format!("first{n}"),
            subset: PointSubset::First(n),
        }
    }

    pub fn all() -> Self {
        FitSpec {
            name: "all".into(),
            subset: PointSubset::All,
        }
    }

    /// The two fits reported for the 3/2-model experiments.
    pub fn standard() -> Vec<FitSpec> {
        vec![FitSpec::first(4), FitSpec::all()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub scheme: SchemeKind,
    pub level_exponent: u32,
    pub dt: f64,
    pub error: f64,
    pub ci_half_width: f64,
    /// False when the row had overflowed paths or a non-positive error.
    pub usable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderFit {
    pub scheme: SchemeKind,
    pub fit: String,
    pub points_used: usize,
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceReport {
    pub rows: Vec<ReportRow>,
    pub fits: Vec<OrderFit>,
}

impl ConvergenceReport {
    pub fn fit(&self, scheme: SchemeKind, name: &str) -> Option<&OrderFit> {
        self.fits
            .iter()
            .find(|f| f.scheme == scheme && f.fit == name)
    }
}

/// Rows sorted by (scheme, level) and one fit per (scheme, spec). Unusable rows stay in
/// `rows` but never enter a fit; a spec that leaves fewer than two usable points for a
/// scheme is skipped for that scheme.
pub fn build_report(errors: &[BatchErrorReport], specs: &[FitSpec]) -> Result<ConvergenceReport> {
    if errors.is_empty() {
        return Err(Error::usage(
            "convergence report needs at least one error row",
        ));
    }
    if let Some(bad) = specs
        .iter()
        .find(|s| matches!(s.subset, PointSubset::First(n) if n == 0))
    {
        return Err(Error::usage(format!(
            "fit {:?} selects no points",
            bad.name
        )));
    }
    let mut rows: Vec<ReportRow> = errors
        .iter()
        .map(|r| ReportRow {
            scheme: r.scheme,
            level_exponent: r.level_exponent,
            dt: r.dt,
            error: r.grand_mean,
            ci_half_width: r.ci_half_width,
            usable: r.is_clean(),
        })
        .collect();
    rows.sort_by_key(|r| (r.scheme, r.level_exponent));

    let mut schemes: Vec<SchemeKind> = rows.iter().map(|r| r.scheme).collect();
    schemes.dedup();

    let mut fits = Vec::new();
    for scheme in schemes {
        let scheme_rows: Vec<&ReportRow> = rows.iter().filter(|r| r.scheme == scheme).collect();
        for spec in specs {
            let selected = match spec.subset {
                PointSubset::First(n) => &scheme_rows[..n.min(scheme_rows.len())],
                PointSubset::All => &scheme_rows[..],
            };
            let points: Vec<(f64, f64)> = selected
                .iter()
                .filter(|r| r.usable)
                .map(|r| (r.dt, r.error))
                .collect();
            if points.len() < 2 {
                continue;
            }
            let (slope, intercept) = fit_order(&points)?;
            fits.push(OrderFit {
                scheme,
                fit: spec.name.clone(),
                points_used: points.len(),
                slope,
                intercept,
            });
        }
    }
    Ok(ConvergenceReport { rows, fits })
}
