use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use evabs::abstraction::{abstract_log_with, compose, Composition};
use evabs::conformance::{evaluate, expand_model};
use evabs::discovery::discover_model;
use evabs::eventlog::write_xes;
use evabs::lpm::io::{read_ranking, write_ranking};
use evabs::lpm::{discover_lpms, filter_diverse, FilterOrder};
use evabs::petrinet::pnml::{read_pnml, write_pnml};
use evabs_cli::config::{parse_rename, read_log, PipelineConfig};
use evabs_cli::generate::{generate, GeneratorSpec};
use evabs_cli::pipeline::{patterns_for, run_pipeline, Stage, StageContext, StageError};
use evabs_cli::sweep::{run_sweep, write_sweep_csv, SweepGrid};

#[derive(Parser)]
#[command(name = "evabs", version, about = "Event abstraction with local process models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine and rank local process models.
    DiscoverLpms {
        #[arg(long)]
        input: PathBuf,
        /// Directory for the ranking and one PNML file per model.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        opts: ConfigArgs,
    },
    /// Abstract a log with the top diverse models of a ranking.
    Abstract {
        #[arg(long)]
        input: PathBuf,
        /// Directory written by discover-lpms.
        #[arg(long)]
        lpms: PathBuf,
        /// Abstracted log (XES).
        #[arg(long)]
        out: PathBuf,
        /// Also write the abstraction model (PNML).
        #[arg(long)]
        model_out: Option<PathBuf>,
        #[command(flatten)]
        opts: ConfigArgs,
    },
    /// Discover a process model and print it as a tree.
    Discover {
        #[arg(long)]
        input: PathBuf,
        /// Model (PNML).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        opts: ConfigArgs,
    },
    /// Score a PNML model against a log.
    Evaluate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Expand pattern-labelled transitions with models from this ranking.
        #[arg(long)]
        lpms: Option<PathBuf>,
        /// Also write the report to this file.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        opts: ConfigArgs,
    },
    /// Run every stage and write a run directory.
    Pipeline {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        opts: ConfigArgs,
    },
    /// Run the pipeline over a parameter grid and write one CSV row per cell.
    Sweep {
        /// Input logs; repeat for several.
        #[arg(long, required = true)]
        input: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated diversity thresholds.
        #[arg(long, value_delimiter = ',')]
        t_divs: Option<Vec<f64>>,
        /// Comma-separated LPM counts.
        #[arg(long, value_delimiter = ',')]
        ks: Option<Vec<usize>>,
        /// Comma-separated compositions.
        #[arg(long, value_delimiter = ',')]
        compositions: Option<Vec<Composition>>,
        #[command(flatten)]
        opts: ConfigArgs,
    },
    /// Write a synthetic log with planted patterns.
    Generate {
        /// Generator settings as key = value lines.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Planted pattern tree; repeat for several.
        #[arg(long)]
        pattern: Vec<String>,
        #[arg(long)]
        traces: Option<usize>,
        #[arg(long)]
        instances: Option<usize>,
        #[arg(long)]
        noise: Option<f64>,
        /// Comma-separated labels used for injected events.
        #[arg(long)]
        noise_labels: Option<String>,
        #[arg(long)]
        composition: Option<Composition>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output log (XES).
        #[arg(long)]
        out: PathBuf,
    },
}

/// Overrides on top of an optional config file.
#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// Key = value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    t_div: Option<f64>,
    #[arg(long)]
    composition: Option<Composition>,
    #[arg(long)]
    order: Option<FilterOrder>,
    /// Noise threshold of discovery.
    #[arg(long)]
    noise: Option<f64>,
    /// Keep events outside every pattern in the abstracted log.
    #[arg(long)]
    keep_foreign: bool,
    /// Accept pattern instances with skipped events.
    #[arg(long)]
    accept_partial: bool,
    /// State bound per alignment.
    #[arg(long)]
    max_states: Option<usize>,
    /// State bound for reachability queries.
    #[arg(long)]
    search_states: Option<usize>,
    #[arg(long)]
    max_activities: Option<usize>,
    #[arg(long)]
    beam_width: Option<usize>,
    #[arg(long)]
    min_support: Option<usize>,
    #[arg(long)]
    max_results: Option<usize>,
    /// Pattern names as old=new pairs, e.g. LPM_1=Payment.
    #[arg(long)]
    rename: Option<String>,
    #[arg(long)]
    csv_case: Option<String>,
    #[arg(long)]
    csv_activity: Option<String>,
    #[arg(long)]
    csv_time: Option<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut c = match &self.config {
            Some(path) => PipelineConfig::from_file(path)?,
            None => PipelineConfig::default(),
        };
        macro_rules! take {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    c.$field = v.clone().into();
                }
            )*};
        }
        take!(k, t_div, composition, order, noise, max_states, search_states, max_activities, beam_width, min_support, max_results, csv_case, csv_activity);
        if self.csv_time.is_some() {
            c.csv_time = self.csv_time.clone();
        }
        if let Some(r) = &self.rename {
            c.rename = parse_rename(r)?;
        }
        c.keep_foreign |= self.keep_foreign;
        c.accept_partial |= self.accept_partial;
        c.validate()?;
        Ok(c)
    }
}

enum Failure {
    Usage(anyhow::Error),
    Stage(StageError),
}

impl From<StageError> for Failure {
    fn from(e: StageError) -> Self {
        Failure::Stage(e)
    }
}

fn usage<T>(r: Result<T>) -> Result<T, Failure> {
    r.map_err(Failure::Usage)
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::DiscoverLpms { input, out, opts } => {
            let c = usage(opts.resolve())?;
            let log = read_log(&input, &c.csv_columns()).stage(Stage::ReadLog)?;
            let ranking = discover_lpms(&log, &c.lpm_params()).stage(Stage::DiscoverLpms)?;
            fs::create_dir_all(&out).stage(Stage::Write)?;
            write_ranking(&ranking, &out).stage(Stage::Write)?;
            println!("{} models written to {}", ranking.len(), out.display());
        }
        Command::Abstract { input, lpms, out, model_out, opts } => {
            let c = usage(opts.resolve())?;
            let log = read_log(&input, &c.csv_columns()).stage(Stage::ReadLog)?;
            let ranking = read_ranking(&lpms, &c.limits()).stage(Stage::ReadLog)?;
            let selected = filter_diverse(&ranking, c.t_div, c.k, c.order);
            let patterns = patterns_for(&selected, &c).stage(Stage::Select)?;
            let model = compose(patterns, c.composition).stage(Stage::Abstract)?;
            let abstracted = abstract_log_with(&log, &model, &c.abstraction_options()).stage(Stage::Abstract)?;
            write_file(&out, write_xes(&abstracted)).stage(Stage::Write)?;
            if let Some(path) = model_out {
                write_file(&path, model.to_pnml("abstraction")).stage(Stage::Write)?;
            }
            for p in model.patterns() {
                let tree = p.lpm().map(|l| l.tree().to_string()).unwrap_or_default();
                println!("{}\t{tree}", p.name());
            }
        }
        Command::Discover { input, out, opts } => {
            let c = usage(opts.resolve())?;
            let log = read_log(&input, &c.csv_columns()).stage(Stage::ReadLog)?;
            let tree = discover_model(&log, c.noise);
            if let Some(path) = out {
                write_file(&path, write_pnml(&tree.to_net(), "model")).stage(Stage::Write)?;
            }
            println!("{tree}");
        }
        Command::Evaluate { input, model, lpms, report, opts } => {
            let c = usage(opts.resolve())?;
            let log = read_log(&input, &c.csv_columns()).stage(Stage::ReadLog)?;
            let bytes = fs::read(&model)
                .with_context(|| format!("reading {}", model.display()))
                .stage(Stage::ReadLog)?;
            let mut net = read_pnml(&bytes).stage(Stage::ReadLog)?;
            if let Some(dir) = lpms {
                let ranking = read_ranking(&dir, &c.limits()).stage(Stage::ReadLog)?;
                let selected = filter_diverse(&ranking, c.t_div, c.k, c.order);
                let patterns = patterns_for(&selected, &c).stage(Stage::Select)?;
                net = expand_model(&net, &patterns);
            }
            let r = evaluate(&log, &net, &c.conformance_options()).stage(Stage::Evaluate)?;
            let text = r.to_key_values();
            if let Some(path) = report {
                write_file(&path, &text).stage(Stage::Write)?;
            }
            print!("{text}");
        }
        Command::Pipeline { input, out, opts } => {
            let mut c = usage(opts.resolve())?;
            if let Some(i) = input {
                c.input = i;
            }
            if let Some(o) = out {
                c.output = o;
            }
            if c.input.as_os_str().is_empty() {
                return Err(Failure::Usage(anyhow::anyhow!("no input log given")));
            }
            let outcome = run_pipeline(&c)?;
            println!("abstracted: {}", outcome.cell.report);
            println!("baseline:   {}", outcome.prepared.baseline);
            println!("run written to {}", c.output.display());
        }
        Command::Sweep { input, out, t_divs, ks, compositions, opts } => {
            let c = usage(opts.resolve())?;
            let mut grid = SweepGrid::default();
            if let Some(v) = t_divs {
                grid.t_divs = v;
            }
            if let Some(v) = ks {
                grid.ks = v;
            }
            if let Some(v) = compositions {
                grid.compositions = v;
            }
            let rows = run_sweep(&input, &grid, &c);
            match out {
                Some(path) => {
                    let mut buf = Vec::new();
                    write_sweep_csv(&rows, &mut buf).stage(Stage::Write)?;
                    write_file(&path, buf).stage(Stage::Write)?;
                }
                None => write_sweep_csv(&rows, std::io::stdout().lock()).stage(Stage::Write)?,
            }
            let failed = rows.iter().filter(|r| r.error.is_some()).count();
            if failed > 0 {
                eprintln!("{failed} of {} cells failed", rows.len());
            }
        }
        Command::Generate { spec, pattern, traces, instances, noise, noise_labels, composition, seed, out } => {
            let mut s = match spec {
                Some(path) => usage(
                    fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))
                        .and_then(|text| GeneratorSpec::from_key_values(&text)),
                )?,
                None => GeneratorSpec::default(),
            };
            if !pattern.is_empty() {
                usage(s.set("patterns", &pattern.join(";")))?;
            }
            if let Some(labels) = noise_labels {
                usage(s.set("noise_labels", &labels))?;
            }
            s.traces = traces.unwrap_or(s.traces);
            s.instances = instances.unwrap_or(s.instances);
            s.noise = noise.unwrap_or(s.noise);
            s.composition = composition.unwrap_or(s.composition);
            usage(s.validate())?;
            let log = usage(generate(&s, seed))?;
            write_file(&out, write_xes(&log)).stage(Stage::Write)?;
            println!("{} traces, {} events written to {}", log.len(), log.event_count(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Stage(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
