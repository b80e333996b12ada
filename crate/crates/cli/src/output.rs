//! CSV tables and the run manifest.
//!
//! Floats are written with `{:?}`, the shortest representation that parses back to the
//! same binary64 value. Column sets are fixed:
//!
//! | file | columns |
//! |------|---------|
//! | errors.csv | scheme,exponent,dt,error,ci_half_width,excluded_paths,negative_paths |
//! | orders.csv | scheme,fit,points,slope,intercept |
//! | census.csv | scheme,n_paths,steps,dt,fraction_negative,overflowed_paths,first_negative_step,paths |
//! | series.csv, trajectory.csv | step,t,<one column per scheme> |

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use semidiscrete::analysis::ConvergenceReport;
use semidiscrete::montecarlo::{BatchErrorReport, NegativityCensus};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const ERRORS_HEADER: &str =
    "scheme,exponent,dt,error,ci_half_width,excluded_paths,negative_paths";
pub const ORDERS_HEADER: &str = "scheme,fit,points,slope,intercept";
pub const CENSUS_HEADER: &str =
    "scheme,n_paths,steps,dt,fraction_negative,overflowed_paths,first_negative_step,paths";

pub fn errors_csv(reports: &[BatchErrorReport]) -> String {
    let mut s = format!("{ERRORS_HEADER}\n");
    for r in reports {
        writeln!(
            s,
            "{},{},{:?},{:?},{:?},{},{}",
            r.scheme,
            r.level_exponent,
            r.dt,
            r.grand_mean,
            r.ci_half_width,
            r.excluded_paths,
            r.negative_paths
        )
        .unwrap();
    }
    s
}

pub fn orders_csv(report: &ConvergenceReport) -> String {
    let mut s = format!("{ORDERS_HEADER}\n");
    for f in &report.fits {
        writeln!(
            s,
            "{},{},{},{:?},{:?}",
            f.scheme, f.fit, f.points_used, f.slope, f.intercept
        )
        .unwrap();
    }
    s
}

/// One row per first-negative step, then a `never` row for paths that stayed positive.
pub fn census_csv(c: &NegativityCensus) -> String {
    let mut s = format!("{CENSUS_HEADER}\n");
    let prefix = format!(
        "{},{},{},{:?},{:?},{}",
        c.scheme, c.n_paths, c.steps, c.dt, c.fraction_negative, c.overflowed_paths
    );
    let mut negative = 0;
    for (step, count) in &c.step_histogram {
        writeln!(s, "{prefix},{step},{count}").unwrap();
        negative += count;
    }
    writeln!(s, "{prefix},never,{}", c.n_paths - negative).unwrap();
    s
}

/// Iterates on the grid `t_n = n dt`; a column that stopped early (overflow) leaves
/// its remaining cells empty.
pub fn series_csv(dt: f64, columns: &[(String, Vec<f64>)]) -> String {
    let mut s = String::from("step,t");
    for (name, _) in columns {
        write!(s, ",{name}").unwrap();
    }
    s.push('\n');
    let rows = columns.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
    for n in 0..rows {
        write!(s, "{n},{:?}", n as f64 * dt).unwrap();
        for (_, v) in columns {
            match v.get(n) {
                Some(x) => write!(s, ",{x:?}").unwrap(),
                None => s.push(','),
            }
        }
        s.push('\n');
    }
    s
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Provenance of one command run.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub config_digest: String,
    pub seed: u64,
    pub seed_defaulted: bool,
    pub timestamp: String,
    pub version: String,
    pub workers: Option<usize>,
    pub files: Vec<PathBuf>,
}

impl RunManifest {
    pub fn render(&self) -> Result<String> {
        let mut s = String::new();
        writeln!(s, "tool = semidiscrete {}", self.version).unwrap();
        writeln!(s, "command = {}", self.command).unwrap();
        if let Some(p) = &self.config_path {
            writeln!(s, "config = {}", p.display()).unwrap();
        }
        writeln!(s, "config_sha256 = {}", self.config_digest).unwrap();
        let origin = if self.seed_defaulted {
            " (default)"
        } else {
            ""
        };
        writeln!(s, "seed = {}{origin}", self.seed).unwrap();
        match self.workers {
            Some(n) => writeln!(s, "workers = {n}").unwrap(),
            None => writeln!(s, "workers = all").unwrap(),
        }
        writeln!(s, "timestamp = {}", self.timestamp).unwrap();
        writeln!(s, "[files]").unwrap();
        for f in &self.files {
            let bytes = std::fs::read(f).map_err(|source| CliError::Io {
                path: f.clone(),
                source,
            })?;
            let name = f
                .file_name()
                .map(|n| n.to_string_lossy())
                .unwrap_or_default();
            writeln!(
                s,
                "{name} = {} bytes, sha256 {}",
                bytes.len(),
                hex::encode(Sha256::digest(&bytes))
            )
            .unwrap();
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use semidiscrete::SchemeKind;
    use std::collections::BTreeMap;

    #[test]
    fn census_rows_sum_to_paths() {
        let c = NegativityCensus {
            scheme: SchemeKind::Tamed,
            n_paths: 10,
            steps: 100,
            dt: 0.01,
            fraction_negative: 0.3,
            step_histogram: BTreeMap::from([(1, 2), (5, 1)]),
            example_first_values: vec![],
            overflowed_paths: 0,
        };
        let text = census_csv(&c);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CENSUS_HEADER);
        assert_eq!(lines[1], "TAMED,10,100,0.01,0.3,0,1,2");
        assert_eq!(lines[3], "TAMED,10,100,0.01,0.3,0,never,7");
    }

    #[test]
    fn ragged_series() {
        let text = series_csv(
            0.5,
            &[
                ("SD".into(), vec![1.0, 2.0, 3.0]),
                ("TAMED".into(), vec![1.0]),
            ],
        );
        assert_eq!(
            text,
            "step,t,SD,TAMED\n0,0.0,1.0,1.0\n1,0.5,2.0,\n2,1.0,3.0,\n"
        );
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1e-300, 3.0148, f64::MAX, 2f64.powi(-13)] {
            assert_eq!(
                format!("{x:?}").parse::<f64>().unwrap().to_bits(),
                x.to_bits()
            );
        }
    }
}
