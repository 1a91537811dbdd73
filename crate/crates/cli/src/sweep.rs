//! Parameter grid over diversity threshold, number of LPMs and composition.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use evabs::abstraction::Composition;
use evabs::conformance::QualityReport;
use evabs::lpm::filter_diverse;
use rayon::prelude::*;

use crate::config::{read_log, PipelineConfig};
use crate::pipeline::{prepare, run_cell, PreparedLog, Stage, StageContext, StageError};

#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid {
    pub t_divs: Vec<f64>,
    pub ks: Vec<usize>,
    pub compositions: Vec<Composition>,
}

impl Default for SweepGrid {
    /// Thresholds 0.2 to 0.9, one to five LPMs, both compositions.
    fn default() -> Self {
        SweepGrid {
            t_divs: (2..=9).map(|i| f64::from(i) / 10.0).collect(),
            ks: (1..=5).collect(),
            compositions: vec![Composition::Interleaving, Composition::Parallel],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepCell {
    pub k: usize,
    pub t_div: f64,
    pub composition: Composition,
}

impl SweepGrid {
    /// Cells ordered by composition, then k, then threshold.
    pub fn cells(&self) -> Vec<SweepCell> {
        let mut out = Vec::new();
        for &composition in &self.compositions {
            for &k in &self.ks {
                for &t_div in &self.t_divs {
                    out.push(SweepCell { k, t_div, composition });
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub log: String,
    pub cell: SweepCell,
    pub report: Option<QualityReport>,
    pub baseline: Option<QualityReport>,
    pub error: Option<String>,
}

pub const SWEEP_HEADER: [&str; 11] = [
    "log",
    "k",
    "t_div",
    "composition",
    "fitness",
    "precision",
    "f_score",
    "baseline_fitness",
    "baseline_precision",
    "baseline_f_score",
    "error",
];

fn cell_config(base: &PipelineConfig, cell: &SweepCell) -> PipelineConfig {
    PipelineConfig { k: cell.k, t_div: cell.t_div, composition: cell.composition, ..base.clone() }
}

fn log_name(path: &Path) -> String {
    path.display().to_string()
}

fn prepare_path(path: &Path, base: &PipelineConfig) -> Result<PreparedLog, StageError> {
    let log = read_log(path, &base.csv_columns()).stage(Stage::ReadLog)?;
    prepare(log, base)
}

fn rows_for<F>(name: &str, prepared: &Result<PreparedLog, StageError>, cells: &[SweepCell], result: F) -> Vec<SweepRow>
where
    F: Fn(&PreparedLog, usize) -> Result<QualityReport, String>,
{
    cells
        .iter()
        .enumerate()
        .map(|(i, &cell)| {
            let (report, baseline, error) = match prepared {
                Err(e) => (None, None, Some(e.to_string())),
                Ok(p) => match result(p, i) {
                    Ok(r) => (Some(r), Some(p.baseline.clone()), None),
                    Err(e) => (None, Some(p.baseline.clone()), Some(e)),
                },
            };
            SweepRow { log: name.to_string(), cell, report, baseline, error }
        })
        .collect()
}

/// One row per log and grid cell. A failing cell becomes an error row and
/// the other cells are unaffected. Cells that select the same LPMs with the
/// same composition are computed once.
pub fn run_sweep(logs: &[PathBuf], grid: &SweepGrid, base: &PipelineConfig) -> Vec<SweepRow> {
    let cells = grid.cells();
    let mut rows = Vec::new();
    for path in logs {
        let prepared = prepare_path(path, base);
        let mut results: Vec<Option<Result<QualityReport, String>>> = vec![None; cells.len()];
        if let Ok(p) = &prepared {
            let mut first_of: HashMap<(Vec<usize>, Composition), usize> = HashMap::new();
            let mut owner = Vec::with_capacity(cells.len());
            for (i, cell) in cells.iter().enumerate() {
                let config = cell_config(base, cell);
                let ranks = filter_diverse(&p.ranking, config.t_div, config.k, config.order)
                    .iter()
                    .map(|m| m.rank())
                    .collect();
                owner.push(*first_of.entry((ranks, cell.composition)).or_insert(i));
            }
            let unique: Vec<usize> = (0..cells.len()).filter(|&i| owner[i] == i).collect();
            let computed: Vec<(usize, Result<QualityReport, String>)> = unique
                .par_iter()
                .map(|&i| {
                    let r = run_cell(p, &cell_config(base, &cells[i])).map(|c| c.report).map_err(|e| e.to_string());
                    (i, r)
                })
                .collect();
            for (i, r) in computed {
                results[i] = Some(r);
            }
            for i in 0..cells.len() {
                results[i] = results[owner[i]].clone();
            }
        }
        rows.extend(rows_for(&log_name(path), &prepared, &cells, |_, i| {
            results[i].clone().expect("every cell resolved")
        }));
    }
    rows
}

/// Like [`run_sweep`] with a caller-supplied cell evaluation and no sharing
/// between cells.
pub fn run_sweep_with<F>(logs: &[PathBuf], grid: &SweepGrid, base: &PipelineConfig, cell_fn: F) -> Vec<SweepRow>
where
    F: Fn(&PreparedLog, &PipelineConfig) -> Result<QualityReport, StageError> + Sync,
{
    let cells = grid.cells();
    let mut rows = Vec::new();
    for path in logs {
        let prepared = prepare_path(path, base);
        let results: Vec<Result<QualityReport, String>> = match &prepared {
            Ok(p) => cells
                .par_iter()
                .map(|c| cell_fn(p, &cell_config(base, c)).map_err(|e| e.to_string()))
                .collect(),
            Err(_) => Vec::new(),
        };
        rows.extend(rows_for(&log_name(path), &prepared, &cells, |_, i| results[i].clone()));
    }
    rows
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], sink: W) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        let report = r.report.as_ref();
        let baseline = r.baseline.as_ref();
        w.write_record([
            r.log.clone(),
            r.cell.k.to_string(),
            r.cell.t_div.to_string(),
            r.cell.composition.to_string(),
            fmt_opt(report.map(|q| q.fitness)),
            fmt_opt(report.map(|q| q.precision)),
            fmt_opt(report.map(|q| q.f_score)),
            fmt_opt(baseline.map(|q| q.fitness)),
            fmt_opt(baseline.map(|q| q.precision)),
            fmt_opt(baseline.map(|q| q.f_score)),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_eighty_cells() {
        let cells = SweepGrid::default().cells();
        assert_eq!(cells.len(), 80);
        assert_eq!(cells[0], SweepCell { k: 1, t_div: 0.2, composition: Composition::Interleaving });
        assert_eq!(cells[79], SweepCell { k: 5, t_div: 0.9, composition: Composition::Parallel });
        assert_eq!(SweepGrid::default().t_divs.iter().map(f64::to_string).collect::<Vec<_>>().join(" "),
            "0.2 0.3 0.4 0.5 0.6 0.7 0.8 0.9");
    }

    #[test]
    fn missing_log_gives_error_rows() {
        let grid = SweepGrid { t_divs: vec![0.5], ks: vec![1, 2], compositions: vec![Composition::Parallel] };
        let rows = run_sweep(&[PathBuf::from("/nonexistent/log.xes")], &grid, &PipelineConfig::default());
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.error.as_deref().is_some_and(|e| e.starts_with("read-log"))));
        let mut out = Vec::new();
        write_sweep_csv(&rows, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().next().unwrap(), SWEEP_HEADER.join(","));
        assert_eq!(text.lines().count(), 3);
    }
}
