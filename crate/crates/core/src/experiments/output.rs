//! Plot-ready CSV and JSON writers.
//!
//! Floats are written with Rust's shortest round-trip formatting, so
//! identical results give byte-identical files. Meta-parameter columns that
//! do not apply to an algorithm are left blank.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{BenchResult, ExperimentSpec, GridBest, GridPoint, SensitivityRow};
use crate::error::Result;
use crate::learner::{Algorithm, Hyper};

/// First 12 hex digits of the SHA-256 of `value`'s compact JSON encoding.
pub fn short_hash(value: &impl Serialize) -> String {
    let canon = serde_json::to_vec(value).expect("value serializes");
    let digest = Sha256::digest(&canon);
    digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
}

/// `<root>/<spec-hash>/`, created if missing.
pub fn result_dir(root: &Path, spec: &ExperimentSpec) -> Result<PathBuf> {
    let dir = root.join(spec.hash());
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

const HYPER_HEADER: [&str; 5] = ["lambda", "alpha0", "alphac", "beta0", "betac"];

fn hyper_cells(kind: Algorithm, h: &Hyper) -> Vec<String> {
    let mut cells = vec![h.lambda.to_string()];
    if kind.is_least_squares() {
        cells.extend(std::iter::repeat_n(String::new(), 4));
        return cells;
    }
    cells.push(h.alpha.a0.to_string());
    cells.push(h.alpha.ac.to_string());
    if kind.uses_beta() {
        cells.push(h.beta.a0.to_string());
        cells.push(h.beta.ac.to_string());
    } else {
        cells.extend([String::new(), String::new()]);
    }
    cells
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    Ok(csv::Writer::from_path(path)?)
}

/// `step,<algo>...` tables of the mean and std curves.
pub fn write_curves(dir: &Path, r: &BenchResult) -> Result<()> {
    for (name, table) in [("curves_mean.csv", &r.mean), ("curves_std.csv", &r.std)] {
        let mut w = writer(&dir.join(name))?;
        let mut header = vec!["step".to_string()];
        header.extend(r.algorithms.iter().map(|a| a.name().to_string()));
        w.write_record(&header)?;
        for (j, step) in r.curve_steps.iter().enumerate() {
            let mut row = vec![step.to_string()];
            row.extend(table.iter().map(|c| c[j].to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    Ok(())
}

/// One row per algorithm with the meta-parameters used and final-error
/// statistics.
pub fn write_bench_summary(dir: &Path, r: &BenchResult) -> Result<()> {
    let mut w = writer(&dir.join("bench_summary.csv"))?;
    let mut header = vec!["algorithm"];
    header.extend(HYPER_HEADER);
    header.extend(["instances", "diverged", "mean_final", "std_final", "mean_err"]);
    w.write_record(&header)?;
    for s in &r.summaries {
        let mut row = vec![s.algorithm.name().to_string()];
        row.extend(hyper_cells(s.algorithm, &s.hyper));
        row.extend([
            s.instances.to_string(),
            s.diverged.to_string(),
            s.mean_final.to_string(),
            s.std_final.to_string(),
            s.mean_err.to_string(),
        ]);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `instance,<algo>...` final value errors, for paired comparisons.
pub fn write_finals(dir: &Path, r: &BenchResult) -> Result<()> {
    let mut w = writer(&dir.join("bench_finals.csv"))?;
    let mut header = vec!["instance".to_string()];
    header.extend(r.algorithms.iter().map(|a| a.name().to_string()));
    w.write_record(&header)?;
    let n = r.finals.first().map_or(0, Vec::len);
    for k in 0..n {
        let mut row = vec![k.to_string()];
        row.extend(r.finals.iter().map(|f| f[k].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_grid_best(dir: &Path, best: &[GridBest]) -> Result<()> {
    let mut w = writer(&dir.join("grid_best.csv"))?;
    let mut header = vec!["algorithm"];
    header.extend(HYPER_HEADER);
    header.extend(["err", "diverged"]);
    w.write_record(&header)?;
    for b in best {
        let mut row = vec![b.algorithm.name().to_string()];
        row.extend(hyper_cells(b.algorithm, &b.hyper));
        row.extend([b.err.to_string(), b.all_diverged.to_string()]);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_grid_points(dir: &Path, points: &[GridPoint]) -> Result<()> {
    let mut w = writer(&dir.join("grid_points.csv"))?;
    let mut header = vec!["algorithm"];
    header.extend(HYPER_HEADER);
    header.extend(["err", "diverged"]);
    w.write_record(&header)?;
    for p in points {
        let mut row = vec![p.algorithm.name().to_string()];
        row.extend(hyper_cells(p.algorithm, &p.hyper));
        row.extend([p.err.to_string(), p.diverged.to_string()]);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sensitivity(dir: &Path, rows: &[SensitivityRow]) -> Result<()> {
    let mut w = writer(&dir.join("lambda_sensitivity.csv"))?;
    w.write_record(["algorithm", "lambda", "err"])?;
    for r in rows {
        w.write_record([r.algorithm.name().to_string(), r.lambda.to_string(), r.err.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `step,error` for a single run; `errors[i]` belongs to step `i + 1`.
pub fn write_error_curve(path: &Path, errors: &[f64]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["step", "error"])?;
    for (i, e) in errors.iter().enumerate() {
        w.write_record([(i + 1).to_string(), e.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{benchmark, grid_study, Grid};
    use crate::garnet::GarnetSpec;

    fn spec() -> ExperimentSpec {
        ExperimentSpec {
            garnet: GarnetSpec::new(8, 2, 2, 4, 0),
            trajectories: 2,
            steps: 200,
            instances: 2,
            bench_steps: 100,
            curve_stride: 10,
            grid: Grid {
                lambdas: vec![0.0, 1.0],
                alpha0: vec![1e-1],
                alphac: vec![1e2],
                beta0: vec![1e-1],
                betac: vec![1e2],
            },
            ..ExperimentSpec::default()
        }
    }

    fn write_all(root: &Path, s: &ExperimentSpec) -> PathBuf {
        let dir = result_dir(root, s).unwrap();
        let b = benchmark(s, &s.resolved_hypers()).unwrap();
        write_curves(&dir, &b).unwrap();
        write_bench_summary(&dir, &b).unwrap();
        write_finals(&dir, &b).unwrap();
        let g = grid_study(s).unwrap();
        write_grid_best(&dir, &g.best).unwrap();
        write_grid_points(&dir, &g.points).unwrap();
        write_sensitivity(&dir, &g.sensitivity).unwrap();
        dir
    }

    #[test]
    fn csv_layout() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = write_all(tmp.path(), &spec());
        let mean = fs::read_to_string(dir.join("curves_mean.csv")).unwrap();
        let mut lines = mean.lines();
        assert_eq!(lines.next().unwrap(), "step,lstd,lspe,fpkf,brm,td,tdc,gtd2,gbrm");
        assert_eq!(mean.lines().count(), 11);
        let best = fs::read_to_string(dir.join("grid_best.csv")).unwrap();
        assert!(best.starts_with("algorithm,lambda,alpha0,alphac,beta0,betac,err,diverged\n"));
        let lstd = best.lines().find(|l| l.starts_with("lstd,")).unwrap();
        assert_eq!(lstd.split(',').nth(2), Some(""));
        let td = best.lines().find(|l| l.starts_with("td,")).unwrap();
        assert_eq!(td.split(',').nth(2), Some("0.1"));
        assert_eq!(td.split(',').nth(4), Some(""));
        let sens = fs::read_to_string(dir.join("lambda_sensitivity.csv")).unwrap();
        assert_eq!(sens.lines().next(), Some("algorithm,lambda,err"));
        assert_eq!(sens.lines().count(), 1 + 16);
    }

    #[test]
    fn outputs_are_byte_identical() {
        let s = spec();
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let (da, db) = (write_all(a.path(), &s), write_all(b.path(), &s));
        for f in [
            "curves_mean.csv",
            "curves_std.csv",
            "bench_summary.csv",
            "bench_finals.csv",
            "grid_best.csv",
            "grid_points.csv",
            "lambda_sensitivity.csv",
        ] {
            assert_eq!(fs::read(da.join(f)).unwrap(), fs::read(db.join(f)).unwrap(), "{f}");
        }
    }
}
