//! Discover LPMs, select, abstract, discover, expand, evaluate.

use std::fmt;
use std::fs;
use std::path::Path;

use evabs::abstraction::{abstract_log_with, compose, AbstractionModel, ActivityPattern};
use evabs::conformance::{evaluate, expand_model, QualityReport};
use evabs::discovery::discover_model;
use evabs::eventlog::{write_xes, EventLog};
use evabs::lpm::{discover_lpms, filter_diverse, io::write_ranking, LocalProcessModel, LpmRanking, ProcessTree};
use evabs::petrinet::{pnml::write_pnml, AcceptingPetriNet};

use crate::config::{read_log, PipelineConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    ReadLog,
    DiscoverLpms,
    Select,
    Abstract,
    Evaluate,
    Baseline,
    Write,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::ReadLog => "read-log",
            Stage::DiscoverLpms => "discover-lpms",
            Stage::Select => "select",
            Stage::Abstract => "abstract",
            Stage::Evaluate => "evaluate",
            Stage::Baseline => "baseline",
            Stage::Write => "write",
        })
    }
}

/// A failure tagged with the stage that produced it.
#[derive(Debug)]
pub struct StageError {
    pub stage: Stage,
    pub source: anyhow::Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} stage failed: {:#}", self.stage, self.source)
    }
}

impl std::error::Error for StageError {}

pub trait StageContext<T> {
    fn stage(self, stage: Stage) -> Result<T, StageError>;
}

impl<T, E: Into<anyhow::Error>> StageContext<T> for Result<T, E> {
    fn stage(self, stage: Stage) -> Result<T, StageError> {
        self.map_err(|e| StageError { stage, source: e.into() })
    }
}

/// Per-log work shared by every parameter combination.
#[derive(Clone, Debug)]
pub struct PreparedLog {
    pub log: EventLog,
    pub ranking: LpmRanking,
    pub baseline_tree: ProcessTree,
    pub baseline_net: AcceptingPetriNet,
    pub baseline: QualityReport,
}

pub fn prepare(log: EventLog, config: &PipelineConfig) -> Result<PreparedLog, StageError> {
    let ranking = discover_lpms(&log, &config.lpm_params()).stage(Stage::DiscoverLpms)?;
    let baseline_tree = discover_model(&log, config.noise);
    let baseline_net = baseline_tree.to_net();
    let baseline = evaluate(&log, &baseline_net, &config.conformance_options()).stage(Stage::Baseline)?;
    Ok(PreparedLog { log, ranking, baseline_tree, baseline_net, baseline })
}

/// Everything produced for one selection of patterns.
#[derive(Clone, Debug)]
pub struct CellResult {
    pub selected: Vec<LocalProcessModel>,
    /// `None` when no LPM survives selection; the log is then used as is.
    pub model: Option<AbstractionModel>,
    pub abstracted: EventLog,
    pub tree: ProcessTree,
    pub high: AcceptingPetriNet,
    pub expanded: AcceptingPetriNet,
    pub report: QualityReport,
}

/// Ranked LPMs turned into named patterns, honoring the rename map.
pub fn patterns_for(selected: &[LocalProcessModel], config: &PipelineConfig) -> anyhow::Result<Vec<ActivityPattern>> {
    let mut patterns = ActivityPattern::from_ranked(selected)?;
    for p in &mut patterns {
        if let Some((_, to)) = config.rename.iter().find(|(from, _)| from == p.name().label()) {
            *p = p.clone().renamed(to.as_str());
        }
    }
    Ok(patterns)
}

pub fn run_cell(prepared: &PreparedLog, config: &PipelineConfig) -> Result<CellResult, StageError> {
    let selected = filter_diverse(&prepared.ranking, config.t_div, config.k, config.order);
    let patterns = patterns_for(&selected, config).stage(Stage::Select)?;
    let (model, abstracted) = if patterns.is_empty() {
        (None, prepared.log.clone())
    } else {
        let model = compose(patterns.clone(), config.composition).stage(Stage::Abstract)?;
        let abstracted =
            abstract_log_with(&prepared.log, &model, &config.abstraction_options()).stage(Stage::Abstract)?;
        (Some(model), abstracted)
    };
    let tree = discover_model(&abstracted, config.noise);
    let high = tree.to_net();
    let expanded = expand_model(&high, &patterns);
    let report = evaluate(&prepared.log, &expanded, &config.conformance_options()).stage(Stage::Evaluate)?;
    Ok(CellResult { selected, model, abstracted, tree, high, expanded, report })
}

#[derive(Clone, Debug)]
pub struct PipelineOutcome {
    pub prepared: PreparedLog,
    pub cell: CellResult,
}

pub const REPORT_CSV_HEADER: &str = "model,fitness,precision,f_score,traces,total_cost";

fn report_row(name: &str, r: &QualityReport) -> String {
    let cost: u64 = r.trace_costs.iter().map(|&c| u64::from(c)).sum();
    format!(
        "{name},{:.6},{:.6},{:.6},{},{cost}",
        r.fitness,
        r.precision,
        r.f_score,
        r.trace_costs.len()
    )
}

/// Runs every stage on `config.input` and writes the run directory.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutcome, StageError> {
    config.validate().stage(Stage::ReadLog)?;
    let log = read_log(&config.input, &config.csv_columns()).stage(Stage::ReadLog)?;
    let prepared = prepare(log, config)?;
    let cell = run_cell(&prepared, config)?;
    let outcome = PipelineOutcome { prepared, cell };
    write_run(&outcome, &config.output).stage(Stage::Write)?;
    Ok(outcome)
}

/// Writes into a sibling temporary directory and renames it into place, so
/// a failed run leaves nothing behind. An existing target is replaced only
/// if it looks like an earlier run.
pub fn write_run(outcome: &PipelineOutcome, target: &Path) -> anyhow::Result<()> {
    let parent = match target.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(parent)?;
    let staging = tempfile::Builder::new().prefix(".evabs-run-").tempdir_in(parent)?;
    write_artifacts(outcome, staging.path())?;
    if target.exists() {
        let earlier_run = target.join("report.csv").is_file();
        let empty = target.is_dir() && fs::read_dir(target)?.next().is_none();
        anyhow::ensure!(
            earlier_run || empty,
            "{} exists and is not an earlier run directory",
            target.display()
        );
        fs::remove_dir_all(target)?;
    }
    fs::rename(staging.keep(), target)?;
    Ok(())
}

fn write_artifacts(outcome: &PipelineOutcome, dir: &Path) -> anyhow::Result<()> {
    let PipelineOutcome { prepared, cell } = outcome;
    let lpms = dir.join("lpms");
    fs::create_dir_all(&lpms)?;
    write_ranking(&prepared.ranking, &lpms)?;
    let mut selected = String::from("pattern\trank\ttree\n");
    for p in selected_patterns(cell) {
        let lpm = p.lpm().expect("patterns come from LPMs");
        selected.push_str(&format!("{}\t{}\t{}\n", p.name(), lpm.rank(), lpm.tree()));
    }
    fs::write(dir.join("patterns.tsv"), selected)?;
    if let Some(model) = &cell.model {
        fs::write(dir.join("abstraction.pnml"), model.to_pnml("abstraction"))?;
    }
    fs::write(dir.join("abstracted.xes"), write_xes(&cell.abstracted))?;
    fs::write(dir.join("model.pnml"), write_pnml(&cell.high, "model"))?;
    fs::write(dir.join("model.tree"), format!("{}\n", cell.tree))?;
    fs::write(dir.join("expanded.pnml"), write_pnml(&cell.expanded, "expanded"))?;
    fs::write(dir.join("baseline.pnml"), write_pnml(&prepared.baseline_net, "baseline"))?;
    fs::write(dir.join("baseline.tree"), format!("{}\n", prepared.baseline_tree))?;
    fs::write(
        dir.join("report.csv"),
        format!(
            "{REPORT_CSV_HEADER}\n{}\n{}\n",
            report_row("expanded", &cell.report),
            report_row("baseline", &prepared.baseline)
        ),
    )?;
    fs::write(dir.join("report.txt"), cell.report.to_key_values())?;
    fs::write(dir.join("baseline.txt"), prepared.baseline.to_key_values())?;
    Ok(())
}

/// Selected patterns in the order used for abstraction.
pub fn selected_patterns(cell: &CellResult) -> Vec<ActivityPattern> {
    cell.model.as_ref().map(|m| m.patterns().to_vec()).unwrap_or_default()
}

