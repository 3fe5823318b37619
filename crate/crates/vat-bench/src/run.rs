//! Executing a run config: one exact-attention pass, one approximation per
//! (approximator, r) cell, and deterministic CSV/JSON report emission.

use std::fs;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{BenchError, Result};
use vat_core::metrics::{build_report, compare, skew_summary, ApproximationReport};
use vat_core::{exact_attention, AttentionInstance};

pub const CSV_HEADER: &str = "approximator,kernel,r,mean_sq_error,mean_relative_error,\
                              skew_entropy_mean,skew_max_mean,n_flags";

/// Everything a run produced, with the serialized forms kept for
/// byte-determinism checks.
#[derive(Debug)]
pub struct RunOutcome {
    pub csv: String,
    pub json: String,
    pub csv_path: PathBuf,
    pub json_path: PathBuf,
    pub rows: Vec<ApproximationReport>,
}

#[derive(Serialize)]
struct ReportDocument<'a> {
    config: &'a RunConfig,
    rows: &'a [ApproximationReport],
}

/// Compute every (approximator, r) cell of the config and write report.csv
/// and report.json into the out directory. All parameters are validated
/// before any computation starts, and cell order (config order, r ascending
/// within an approximator) is independent of the worker count.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    let inst = config.resolve_instance()?;
    let rows = compute_rows(config, &inst)?;

    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for row in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.approximator,
            row.kernel,
            row.r,
            row.mean_sq_error,
            row.mean_relative_error,
            row.skew_entropy_mean,
            row.skew_max_mean,
            row.flags.len()
        ));
    }

    let document = ReportDocument {
        config,
        rows: &rows,
    };
    let mut json = serde_json::to_string_pretty(&document)?;
    json.push('\n');

    fs::create_dir_all(&config.out_dir).map_err(|source| BenchError::Io {
        path: config.out_dir.clone(),
        source,
    })?;
    let csv_path = config.out_dir.join("report.csv");
    let json_path = config.out_dir.join("report.json");
    fs::write(&csv_path, &csv).map_err(|source| BenchError::Io {
        path: csv_path.clone(),
        source,
    })?;
    fs::write(&json_path, &json).map_err(|source| BenchError::Io {
        path: json_path.clone(),
        source,
    })?;

    Ok(RunOutcome {
        csv,
        json,
        csv_path,
        json_path,
        rows,
    })
}

fn compute_rows(config: &RunConfig, inst: &AttentionInstance) -> Result<Vec<ApproximationReport>> {
    // validate the whole grid before computing anything
    for approx in &config.approximators {
        for &r in &config.r_values {
            approx
                .validate(&config.kernel, inst, r, config.seed)
                .map_err(|source| BenchError::Cell {
                    approximator: approx.label(),
                    r,
                    source,
                })?;
        }
    }

    let exact = exact_attention(&config.kernel, inst)?;
    let skew = skew_summary(&config.kernel, inst)?;

    let cells: Vec<(usize, usize)> = (0..config.approximators.len())
        .flat_map(|a| (0..config.r_values.len()).map(move |ri| (a, ri)))
        .collect();

    cells
        .par_iter()
        .map(|&(a, ri)| {
            let approx = &config.approximators[a];
            let r = config.r_values[ri];
            let out = approx
                .apply(&config.kernel, inst, r, config.seed)
                .map_err(|source| BenchError::Cell {
                    approximator: approx.label(),
                    r,
                    source,
                })?;
            let stats = compare(&exact.output, &out.output).map_err(|source| BenchError::Cell {
                approximator: approx.label(),
                r,
                source,
            })?;
            Ok(build_report(approx, &config.kernel, r, &stats, skew, out.flags))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::InstanceSource;
    use crate::synth::{QkDist, SyntheticSpec, VDist};
    use vat_core::{ApproximatorSpec, KernelSpec};

    fn test_config(dir: &std::path::Path) -> RunConfig {
        RunConfig {
            instance: InstanceSource::Synthetic(SyntheticSpec {
                l: 12,
                d: 3,
                qk: QkDist::Gaussian { scale: 1.0 },
                v: VDist::Gaussian { scale: 1.0 },
                causal: false,
                seed: 5,
            }),
            kernel: KernelSpec::exponential(),
            approximators: vec![
                ApproximatorSpec::OptimalVAware,
                ApproximatorSpec::OptimalVOblivious,
                ApproximatorSpec::SlidingWindow,
            ],
            r_values: vec![2, 4],
            seed: 11,
            out_dir: dir.to_path_buf(),
        }
    }

    #[test]
    fn zero_error_rows_for_exact_regimes() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = test_config(dir.path());
        config.approximators = vec![ApproximatorSpec::OptimalVAware];
        config.r_values = vec![4]; // d + 1
        let outcome = run(&config).unwrap();
        assert!(outcome.rows[0].mean_sq_error <= 1e-8);

        config.approximators = vec![ApproximatorSpec::SlidingWindow];
        config.r_values = vec![24]; // 2L, non-causal: full window
        let outcome = run(&config).unwrap();
        assert!(outcome.rows[0].mean_sq_error <= 1e-10);
    }

    #[test]
    fn rerun_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let config = test_config(dir.path());
        let a = run(&config).unwrap();
        let b = run(&config).unwrap();
        assert_eq!(a.csv, b.csv);
        assert_eq!(a.json, b.json);
        assert_eq!(fs::read(&a.csv_path).unwrap(), a.csv.as_bytes());
    }

    #[test]
    fn csv_has_one_row_per_cell() {
        let dir = tempfile::tempdir().unwrap();
        let config = test_config(dir.path());
        let outcome = run(&config).unwrap();
        let lines: Vec<&str> = outcome.csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 1 + 3 * 2);
    }

    #[test]
    fn invalid_cell_aborts_before_compute() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = test_config(dir.path());
        config.approximators = vec![ApproximatorSpec::SlidingWindow];
        config.r_values = vec![3]; // odd window
        let err = run(&config).unwrap_err();
        match err {
            BenchError::Cell { approximator, r, .. } => {
                assert_eq!(approximator, "sliding_window");
                assert_eq!(r, 3);
            }
            other => panic!("expected Cell error, got {other}"),
        }
        assert!(!dir.path().join("report.csv").exists());
    }

    #[test]
    fn report_json_replays_to_identical_csv() {
        let dir = tempfile::tempdir().unwrap();
        let config = test_config(dir.path());
        let outcome = run(&config).unwrap();

        #[derive(serde::Deserialize)]
        struct Echo {
            config: RunConfig,
        }
        let echo: Echo = serde_json::from_str(&outcome.json).unwrap();
        let replay = run(&echo.config).unwrap();
        assert_eq!(outcome.csv, replay.csv);
    }
}
