use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use evabs::abstraction::{AbstractionOptions, Composition};
use evabs::conformance::ConformanceOptions;
use evabs::discovery::DEFAULT_NOISE;
use evabs::eventlog::{parse_csv, parse_xes, CsvColumns, EventLog};
use evabs::lpm::{FilterOrder, LpmDiscoveryParams};
use evabs::petrinet::{AlignOptions, SearchLimits};

/// Settings of one pipeline run. Loadable from a flat `key = value` file.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub output: PathBuf,
    /// Number of LPMs used for abstraction.
    pub k: usize,
    pub t_div: f64,
    pub composition: Composition,
    pub order: FilterOrder,
    /// Noise threshold of the high-level discovery.
    pub noise: f64,
    pub keep_foreign: bool,
    pub accept_partial: bool,
    /// State bound per alignment.
    pub max_states: usize,
    /// State bound for reachability queries on nets.
    pub search_states: usize,
    pub max_activities: usize,
    pub beam_width: usize,
    pub min_support: usize,
    pub max_results: usize,
    /// Pattern names replacing the default `LPM_<rank>`.
    pub rename: Vec<(String, String)>,
    pub csv_case: String,
    pub csv_activity: String,
    pub csv_time: Option<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let lpm = LpmDiscoveryParams::default();
        PipelineConfig {
            input: PathBuf::new(),
            output: PathBuf::from("run"),
            k: 5,
            t_div: 0.5,
            composition: Composition::Interleaving,
            order: FilterOrder::TopKThenFilter,
            noise: DEFAULT_NOISE,
            keep_foreign: false,
            accept_partial: false,
            max_states: AlignOptions::default().max_states,
            search_states: SearchLimits::default().max_states,
            max_activities: lpm.max_activities,
            beam_width: lpm.beam_width,
            min_support: lpm.min_support,
            max_results: lpm.max_results,
            rename: Vec::new(),
            csv_case: "case".into(),
            csv_activity: "activity".into(),
            csv_time: None,
        }
    }
}

fn parse_bool(value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => bail!("expected a boolean, got {value:?}"),
    }
}

/// Parses `old=new` pairs separated by commas.
pub fn parse_rename(value: &str) -> Result<Vec<(String, String)>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let (from, to) = pair.split_once('=').with_context(|| format!("rename entry {pair:?} is not old=new"))?;
            Ok((from.trim().to_string(), to.trim().to_string()))
        })
        .collect()
}

/// `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .with_context(|| format!("line {}: expected key = value", i + 1))?;
        out.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

impl PipelineConfig {
    /// Reads a config file. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut config = PipelineConfig::default();
        let base = path.parent().unwrap_or(Path::new(""));
        for (key, value) in parse_key_values(&text)? {
            config
                .set(&key, &value)
                .with_context(|| format!("{}: key {key:?}", path.display()))?;
            if key == "input" || key == "output" {
                let p = if key == "input" { &mut config.input } else { &mut config.output };
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(config)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "input" => self.input = value.into(),
            "output" => self.output = value.into(),
            "k" => self.k = value.parse()?,
            "t_div" => self.t_div = value.parse()?,
            "composition" => self.composition = value.parse()?,
            "order" => self.order = value.parse()?,
            "noise" => self.noise = value.parse()?,
            "keep_foreign" => self.keep_foreign = parse_bool(value)?,
            "accept_partial" => self.accept_partial = parse_bool(value)?,
            "max_states" => self.max_states = value.parse()?,
            "search_states" => self.search_states = value.parse()?,
            "max_activities" => self.max_activities = value.parse()?,
            "beam_width" => self.beam_width = value.parse()?,
            "min_support" => self.min_support = value.parse()?,
            "max_results" => self.max_results = value.parse()?,
            "rename" => self.rename = parse_rename(value)?,
            "csv_case" => self.csv_case = value.into(),
            "csv_activity" => self.csv_activity = value.into(),
            "csv_time" => self.csv_time = Some(value.into()).filter(|v: &String| !v.is_empty()),
            _ => bail!("unknown key"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.k >= 1, "k must be at least 1");
        ensure!((0.0..=1.0).contains(&self.t_div), "t_div must lie in [0, 1]");
        ensure!((0.0..1.0).contains(&self.noise), "noise must lie in [0, 1)");
        ensure!(self.max_activities >= 1, "max_activities must be at least 1");
        ensure!(self.beam_width >= 1, "beam_width must be at least 1");
        Ok(())
    }

    pub fn limits(&self) -> SearchLimits {
        SearchLimits::new(self.search_states)
    }

    pub fn lpm_params(&self) -> LpmDiscoveryParams {
        LpmDiscoveryParams {
            max_activities: self.max_activities,
            beam_width: self.beam_width,
            min_support: self.min_support,
            max_results: self.max_results,
            allow_root_choice: false,
            limits: self.limits(),
        }
    }

    pub fn abstraction_options(&self) -> AbstractionOptions {
        AbstractionOptions {
            keep_foreign: self.keep_foreign,
            accept_partial_instances: self.accept_partial,
            max_states: self.max_states,
        }
    }

    pub fn conformance_options(&self) -> ConformanceOptions {
        ConformanceOptions { limits: self.limits(), max_alignment_states: self.max_states }
    }

    pub fn csv_columns(&self) -> CsvColumns {
        let columns = CsvColumns::new(&self.csv_case, &self.csv_activity);
        match &self.csv_time {
            Some(t) => columns.with_time(t),
            None => columns,
        }
    }
}

/// Reads XES, or CSV when the file name ends in `.csv`.
pub fn read_log(path: &Path, columns: &CsvColumns) -> evabs::Result<EventLog> {
    let bytes = std::fs::read(path)?;
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        parse_csv(&bytes, columns)
    } else {
        parse_xes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_value_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(
            &path,
            "# demo\ninput = logs/a.xes\nk = 3\nt_div=0.4\ncomposition = parallel\nkeep_foreign = yes\nrename = LPM_1=H, LPM_2 = G\n",
        )
        .unwrap();
        let c = PipelineConfig::from_file(&path).unwrap();
        assert_eq!(c.input, dir.path().join("logs/a.xes"));
        assert_eq!(c.k, 3);
        assert_eq!(c.t_div, 0.4);
        assert_eq!(c.composition, Composition::Parallel);
        assert!(c.keep_foreign);
        assert_eq!(c.rename, [("LPM_1".into(), "H".into()), ("LPM_2".into(), "G".into())]);
        c.validate().unwrap();
    }

    #[test]
    fn bad_entries_are_reported() {
        let mut c = PipelineConfig::default();
        assert!(c.set("colour", "red").is_err());
        assert!(c.set("k", "many").is_err());
        assert!(c.set("composition", "sideways").is_err());
        assert!(parse_key_values("just words").is_err());
        c.t_div = 1.5;
        assert!(c.validate().is_err());
        c.t_div = 0.5;
        c.noise = 1.0;
        assert!(c.validate().is_err());
        c.noise = 0.2;
        c.k = 0;
        assert!(c.validate().is_err());
    }
}
