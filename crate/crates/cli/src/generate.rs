//! Synthetic logs with planted patterns.

use anyhow::{bail, ensure, Context, Result};
use evabs::abstraction::Composition;
use evabs::eventlog::{Activity, Alphabet, Event, EventLog, Trace};
use evabs::lpm::ProcessTree;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::parse_key_values;

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorSpec {
    pub patterns: Vec<ProcessTree>,
    pub traces: usize,
    /// Runs of each pattern per trace.
    pub instances: usize,
    /// Expected share of injected events in the output.
    pub noise: f64,
    pub noise_labels: Vec<Activity>,
    /// Interleaving concatenates whole runs in random order; parallel merges
    /// the events of all runs at random.
    pub composition: Composition,
    /// Chance of another iteration each time a loop may exit.
    pub redo_probability: f64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            patterns: Vec::new(),
            traces: 100,
            instances: 1,
            noise: 0.0,
            noise_labels: ["x", "y", "z"].into_iter().map(Activity::new).collect(),
            composition: Composition::Interleaving,
            redo_probability: 0.3,
        }
    }
}

impl GeneratorSpec {
    /// Flat `key = value` text. Patterns are separated by `;`.
    pub fn from_key_values(text: &str) -> Result<Self> {
        let mut spec = GeneratorSpec::default();
        for (key, value) in parse_key_values(text)? {
            spec.set(&key, &value).with_context(|| format!("key {key:?}"))?;
        }
        Ok(spec)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "patterns" => {
                self.patterns = value
                    .split(';')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<ProcessTree>().map_err(anyhow::Error::from))
                    .collect::<Result<_>>()?
            }
            "traces" => self.traces = value.parse()?,
            "instances" => self.instances = value.parse()?,
            "noise" => self.noise = value.parse()?,
            "noise_labels" => {
                self.noise_labels = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(Activity::new)
                    .collect()
            }
            "composition" => self.composition = value.parse()?,
            "redo_probability" => self.redo_probability = value.parse()?,
            _ => bail!("unknown key"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(!self.patterns.is_empty(), "at least one pattern is required");
        ensure!((0.0..1.0).contains(&self.noise), "noise must lie in [0, 1)");
        ensure!((0.0..1.0).contains(&self.redo_probability), "redo_probability must lie in [0, 1)");
        ensure!(
            self.noise == 0.0 || !self.noise_labels.is_empty(),
            "noise needs at least one noise label"
        );
        for p in &self.patterns {
            p.validate()?;
        }
        let planted: Alphabet = self.patterns.iter().flat_map(|p| p.activities()).collect();
        if let Some(l) = self.noise_labels.iter().find(|l| planted.contains(*l)) {
            bail!("noise label {l} also occurs in a pattern");
        }
        Ok(())
    }
}

fn sample_run(tree: &ProcessTree, redo: f64, rng: &mut ChaCha8Rng, out: &mut Vec<Activity>) {
    match tree {
        ProcessTree::Activity(a) => out.push(a.clone()),
        ProcessTree::Tau => {}
        ProcessTree::Seq(children) => {
            for c in children {
                sample_run(c, redo, rng, out);
            }
        }
        ProcessTree::Xor(children) => {
            let c = children.choose(rng).expect("choice has children");
            sample_run(c, redo, rng, out);
        }
        ProcessTree::And(children) => {
            let runs = children
                .iter()
                .map(|c| {
                    let mut run = Vec::new();
                    sample_run(c, redo, rng, &mut run);
                    run
                })
                .collect();
            out.extend(shuffle_merge(runs, rng));
        }
        ProcessTree::Loop(body, back) => {
            sample_run(body, redo, rng, out);
            while rng.gen_bool(redo) {
                sample_run(back, redo, rng, out);
                sample_run(body, redo, rng, out);
            }
        }
    }
}

/// Uniformly random interleaving that keeps each run's order.
fn shuffle_merge(runs: Vec<Vec<Activity>>, rng: &mut ChaCha8Rng) -> Vec<Activity> {
    let mut rest: usize = runs.iter().map(Vec::len).sum();
    let mut cursors: Vec<std::vec::IntoIter<Activity>> = runs.into_iter().map(Vec::into_iter).collect();
    let mut out = Vec::with_capacity(rest);
    while rest > 0 {
        let mut pick = rng.gen_range(0..rest);
        for c in &mut cursors {
            let len = c.len();
            if pick < len {
                out.push(c.next().expect("non-empty"));
                break;
            }
            pick -= len;
        }
        rest -= 1;
    }
    out
}

/// Same spec and seed give the same log.
pub fn generate(spec: &GeneratorSpec, seed: u64) -> Result<EventLog> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut traces = Vec::with_capacity(spec.traces);
    for case in 0..spec.traces {
        let mut runs = Vec::new();
        for p in &spec.patterns {
            for _ in 0..spec.instances {
                let mut run = Vec::new();
                sample_run(p, spec.redo_probability, &mut rng, &mut run);
                runs.push(run);
            }
        }
        let planted = match spec.composition {
            Composition::Interleaving => {
                runs.shuffle(&mut rng);
                runs.concat()
            }
            Composition::Parallel => shuffle_merge(runs, &mut rng),
        };
        let mut labels = Vec::with_capacity(planted.len());
        for a in planted {
            while spec.noise > 0.0 && rng.gen_bool(spec.noise) {
                labels.push(spec.noise_labels.choose(&mut rng).expect("validated").clone());
            }
            labels.push(a);
        }
        traces.push(Trace::new(format!("case_{}", case + 1), labels.into_iter().map(Event::new).collect()));
    }
    Ok(EventLog::new(traces))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(patterns: &str) -> GeneratorSpec {
        let mut s = GeneratorSpec::default();
        s.set("patterns", patterns).unwrap();
        s
    }

    fn words(log: &EventLog) -> Vec<String> {
        log.traces.iter().map(|t| t.activities().map(|a| a.label()).collect()).collect()
    }

    #[test]
    fn two_sequential_runs() {
        let mut s = spec("seq(a,b)");
        s.instances = 2;
        s.traces = 5;
        let log = generate(&s, 1).unwrap();
        assert!(words(&log).iter().all(|w| w == "abab"));
        assert_eq!(log.traces[0].case_id, "case_1");
    }

    #[test]
    fn interleaving_keeps_runs_contiguous() {
        let mut s = spec("seq(a,b,c); and(d,e)");
        s.traces = 50;
        for w in words(&generate(&s, 3).unwrap()) {
            assert!(["abcde", "abced", "deabc", "edabc"].contains(&w.as_str()), "{w}");
        }
    }

    #[test]
    fn parallel_keeps_run_order() {
        let mut s = spec("seq(a,b); seq(c,d)");
        s.composition = Composition::Parallel;
        s.traces = 50;
        let ws = words(&generate(&s, 5).unwrap());
        for w in &ws {
            assert!(w.find('a') < w.find('b') && w.find('c') < w.find('d'), "{w}");
        }
        assert!(ws.iter().any(|w| w == "acbd" || w == "cadb" || w == "acdb" || w == "cabd"));
    }

    #[test]
    fn same_seed_same_log() {
        let mut s = spec("loop(a,b); xor(c,and(d,e))");
        s.noise = 0.3;
        assert_eq!(generate(&s, 42).unwrap(), generate(&s, 42).unwrap());
        assert_ne!(generate(&s, 42).unwrap(), generate(&s, 43).unwrap());
    }

    #[test]
    fn noise_share_matches_rate() {
        let mut s = spec("seq(a,b,c,d)");
        s.noise = 0.2;
        s.traces = 2000;
        let log = generate(&s, 7).unwrap();
        let noisy = log
            .traces
            .iter()
            .flat_map(|t| t.activities())
            .filter(|a| ["x", "y", "z"].contains(&a.label()))
            .count();
        let share = noisy as f64 / log.event_count() as f64;
        assert!((share - 0.2).abs() <= 0.03, "{share}");
    }

    #[test]
    fn invalid_specs() {
        assert!(generate(&GeneratorSpec::default(), 0).is_err());
        let mut s = spec("seq(x,a)");
        assert!(s.validate().is_err());
        s = spec("a");
        s.noise = 1.0;
        assert!(s.validate().is_err());
        assert!(GeneratorSpec::from_key_values("patterns = seq(a,\n").is_err());
        assert!(GeneratorSpec::from_key_values("volume = 11").is_err());
    }

    #[test]
    fn key_value_spec() {
        let s = GeneratorSpec::from_key_values("patterns = seq(a,b,c); and(d,e)\ntraces = 7\nnoise = 0.3\nnoise_labels = n1,n2\n")
            .unwrap();
        assert_eq!(s.patterns.len(), 2);
        assert_eq!((s.traces, s.noise), (7, 0.3));
        assert_eq!(s.noise_labels, [Activity::new("n1"), Activity::new("n2")]);
    }
}
