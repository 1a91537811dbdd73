//! Model quality against a low-level log: alignment-based fitness,
//! escaping-edges precision and their harmonic mean.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use rayon::prelude::*;

use crate::abstraction::ActivityPattern;
use crate::eventlog::{Activity, Alphabet, EventLog};
use crate::petrinet::{
    align_word, AcceptingPetriNet, AlignOptions, Alignment, LabeledPetriNet, Marking, MoveKind, PlaceId,
    SearchLimits,
};
use crate::{Error, Result};

/// Replaces every transition labelled with a pattern name by a copy of that
/// pattern's net. A silent transition moves tokens from the replaced
/// transition's input places into the pattern's initial places, another
/// moves them from the pattern's final places to the output places.
pub fn expand_model(high: &AcceptingPetriNet, patterns: &[ActivityPattern]) -> AcceptingPetriNet {
    let by_name: HashMap<&Activity, &ActivityPattern> = patterns.iter().map(|p| (p.name(), p)).collect();
    let src = high.net();
    let mut net = LabeledPetriNet::new();
    let places: Vec<PlaceId> = src.places().map(|p| net.add_place(src.place_name(p))).collect();

    for (t, tr) in src.transitions() {
        let pattern = src.label(t).and_then(|l| by_name.get(l));
        let Some(pattern) = pattern else {
            let copy = net.add_transition(tr.name.clone(), tr.label.clone());
            for p in tr.inputs() {
                net.add_input(copy, places[p.0]);
            }
            for p in tr.outputs() {
                net.add_output(copy, places[p.0]);
            }
            continue;
        };
        let prefix = format!("{}#{}/", tr.name, t.0);
        let (inner, _) = net.embed(pattern.net().net(), &prefix);
        let enter = net.add_transition(format!("{prefix}in"), None);
        for p in tr.inputs() {
            net.add_input(enter, places[p.0]);
        }
        for (p, _) in pattern.net().initial().support() {
            net.add_output(enter, inner[p.0]);
        }
        let leave = net.add_transition(format!("{prefix}out"), None);
        for (p, _) in pattern.net().final_marking().support() {
            net.add_input(leave, inner[p.0]);
        }
        for p in tr.outputs() {
            net.add_output(leave, places[p.0]);
        }
    }

    let n = net.place_count();
    let extend = |m: &Marking| {
        let mut out = Marking::empty(n);
        for (p, k) in m.support() {
            out.set(places[p.0], k);
        }
        out
    };
    let (initial, fin) = (extend(high.initial()), extend(high.final_marking()));
    AcceptingPetriNet::new(net, initial, fin).expect("markings sized to the net")
}

/// Harmonic mean; 0 when both inputs are 0.
pub fn f_score(fitness: f64, precision: f64) -> f64 {
    if fitness + precision == 0.0 {
        0.0
    } else {
        2.0 * fitness * precision / (fitness + precision)
    }
}

#[derive(Clone, Debug)]
pub struct ConformanceOptions {
    /// Bound for reachability queries (shortest run, silent closures).
    pub limits: SearchLimits,
    /// Bound on states explored per alignment.
    pub max_alignment_states: usize,
}

impl Default for ConformanceOptions {
    fn default() -> Self {
        ConformanceOptions {
            limits: SearchLimits::default(),
            max_alignment_states: AlignOptions::default().max_states,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QualityReport {
    pub fitness: f64,
    pub precision: f64,
    pub f_score: f64,
    /// Alignment cost of each trace, in log order.
    pub trace_costs: Vec<u32>,
}

impl QualityReport {
    /// `key=value` lines.
    pub fn to_key_values(&self) -> String {
        format!(
            "fitness={:.6}\nprecision={:.6}\nf_score={:.6}\ntraces={}\ntotal_cost={}\n",
            self.fitness,
            self.precision,
            self.f_score,
            self.trace_costs.len(),
            self.trace_costs.iter().map(|&c| u64::from(c)).sum::<u64>()
        )
    }
}

impl fmt::Display for QualityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "fitness {:.4}, precision {:.4}, F-score {:.4}",
            self.fitness, self.precision, self.f_score
        )
    }
}

struct Aligned {
    word: Vec<Activity>,
    count: usize,
    alignment: Alignment,
}

fn align_variants(log: &EventLog, net: &AcceptingPetriNet, options: &ConformanceOptions) -> Result<Vec<Aligned>> {
    let opts = AlignOptions { busy_places: Vec::new(), max_states: options.max_alignment_states };
    log.complete_variants()
        .into_par_iter()
        .map(|(word, count)| {
            let alignment = align_word(net, &word, &opts)?;
            Ok(Aligned { word, count, alignment })
        })
        .collect()
}

fn fitness_of(aligned: &[Aligned], min_run: usize) -> f64 {
    let traces: usize = aligned.iter().map(|a| a.count).sum();
    if traces == 0 {
        return 1.0;
    }
    let total: f64 = aligned
        .iter()
        .map(|a| {
            let denominator = a.word.len() + min_run;
            let f = if denominator == 0 {
                1.0
            } else {
                1.0 - f64::from(a.alignment.cost()) / denominator as f64
            };
            f * a.count as f64
        })
        .sum();
    total / traces as f64
}

fn precision_of(aligned: &[Aligned], net: &AcceptingPetriNet, limits: &SearchLimits) -> Result<f64> {
    // prefix of visible model labels -> (weight, markings reached, next labels taken)
    #[derive(Default)]
    struct State {
        weight: usize,
        markings: BTreeSet<Marking>,
        taken: Alphabet,
    }
    let mut states: BTreeMap<Vec<Activity>, State> = BTreeMap::new();
    for a in aligned {
        let markings = a.alignment.markings(net);
        let mut prefix: Vec<Activity> = Vec::new();
        let visit = |states: &mut BTreeMap<Vec<Activity>, State>, prefix: &Vec<Activity>, m: &Marking| {
            let s = states.entry(prefix.clone()).or_default();
            s.weight += a.count;
            s.markings.insert(m.clone());
        };
        visit(&mut states, &prefix, &markings[0]);
        for (i, mv) in a.alignment.moves.iter().enumerate() {
            if !matches!(mv.kind, MoveKind::Synchronous | MoveKind::ModelMoveVisible) {
                continue;
            }
            let label = mv
                .transition
                .and_then(|t| net.net().label(t))
                .expect("visible moves fire labelled transitions")
                .clone();
            states.get_mut(&prefix).expect("visited").taken.insert(label.clone());
            prefix.push(label);
            visit(&mut states, &prefix, &markings[i + 1]);
        }
    }

    let mut cache: HashMap<Marking, Alphabet> = HashMap::new();
    let (mut escaping, mut enabled_total) = (0.0, 0.0);
    for s in states.values() {
        let mut enabled = Alphabet::new();
        for m in &s.markings {
            if !cache.contains_key(m) {
                cache.insert(m.clone(), net.enabled_labels(m, limits)?);
            }
            enabled.extend(cache[m].iter().cloned());
        }
        let escapes = enabled.iter().filter(|l| !s.taken.contains(*l)).count();
        escaping += (s.weight * escapes) as f64;
        enabled_total += (s.weight * enabled.len()) as f64;
    }
    Ok(if enabled_total == 0.0 { 1.0 } else { 1.0 - escaping / enabled_total })
}

fn min_run(net: &AcceptingPetriNet, limits: &SearchLimits) -> Result<usize> {
    net.min_visible_run_length(limits)?.ok_or(Error::Unalignable)
}

/// Trace-weighted mean of 1 − cost / (|σ| + shortest run length).
pub fn fitness(log: &EventLog, net: &AcceptingPetriNet) -> Result<f64> {
    let options = ConformanceOptions::default();
    let aligned = align_variants(log, net, &options)?;
    Ok(fitness_of(&aligned, min_run(net, &options.limits)?))
}

/// One minus the weighted share of escaping labels: labels enabled after an
/// aligned prefix of model behavior that no trace continues with.
pub fn precision(log: &EventLog, net: &AcceptingPetriNet) -> Result<f64> {
    let options = ConformanceOptions::default();
    let aligned = align_variants(log, net, &options)?;
    precision_of(&aligned, net, &options.limits)
}

/// Fitness, precision and F-score from a single alignment pass.
pub fn evaluate(log: &EventLog, net: &AcceptingPetriNet, options: &ConformanceOptions) -> Result<QualityReport> {
    let aligned = align_variants(log, net, options)?;
    let fitness = fitness_of(&aligned, min_run(net, &options.limits)?);
    let precision = precision_of(&aligned, net, &options.limits)?;
    let cost_of: HashMap<&[Activity], u32> = aligned.iter().map(|a| (a.word.as_slice(), a.alignment.cost())).collect();
    let trace_costs = log
        .traces
        .iter()
        .map(|t| cost_of[t.complete_activities().as_slice()])
        .collect();
    Ok(QualityReport { fitness, precision, f_score: f_score(fitness, precision), trace_costs })
}
