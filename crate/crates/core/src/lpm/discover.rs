//! Beam search over process trees.
//!
//! Search starts from single-activity leaves. A round grows every tree in
//! the beam by one activity: some leaf `x` becomes `op(x, y)` or `op(y, x)`
//! for a new activity `y`. Candidates are scored by support, and the best
//! `beam_width` of each size seed the next round.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

use super::segment::max_cover;
use super::{LocalProcessModel, LpmRanking, Operator, ProcessTree, DEFAULT_MAX_ACTIVITIES};
use crate::eventlog::{variants, Activity, Alphabet, EventLog};
use crate::petrinet::SearchLimits;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct LpmDiscoveryParams {
    pub max_activities: usize,
    /// Candidates kept per tree size; `usize::MAX` searches exhaustively.
    pub beam_width: usize,
    /// Minimum frequency of a seed activity and minimum support of a
    /// reported model.
    pub min_support: usize,
    pub max_results: usize,
    /// Allow `xor` at the root. A root choice explains every event of its
    /// branches and so tends to crowd out all other models.
    pub allow_root_choice: bool,
    pub limits: SearchLimits,
}

impl Default for LpmDiscoveryParams {
    fn default() -> Self {
        LpmDiscoveryParams {
            max_activities: DEFAULT_MAX_ACTIVITIES,
            beam_width: 50,
            min_support: 1,
            max_results: 100,
            allow_root_choice: false,
            limits: SearchLimits::default(),
        }
    }
}

pub fn discover_lpms(log: &EventLog, params: &LpmDiscoveryParams) -> Result<LpmRanking> {
    if log.event_count() == 0 {
        return Err(Error::EmptyLog);
    }
    let traces = variants(log.traces.iter().map(|t| t.activities().cloned().collect()));
    let mut projections = ProjectionCache::new(&traces);

    let seeds: Vec<Activity> = log
        .activity_counts()
        .into_iter()
        .filter(|&(_, n)| n >= params.min_support.max(1))
        .map(|(a, _)| a)
        .collect();

    let mut seen: HashSet<ProcessTree> = HashSet::new();
    let mut pool: Vec<LocalProcessModel> = Vec::new();
    let mut level: Vec<ProcessTree> = seeds.iter().cloned().map(ProcessTree::Activity).collect();
    seen.extend(level.iter().cloned());

    for size in 1..=params.max_activities {
        if level.is_empty() {
            break;
        }
        let mut scored = evaluate(level, &mut projections, &params.limits)?;
        scored.retain(|m| m.support() > 0 && m.support() >= params.min_support);
        let beam = LpmRanking::ranked(scored).into_models();
        pool.extend(beam.iter().cloned());

        if size == params.max_activities {
            break;
        }
        level = Vec::new();
        for m in beam.iter().take(params.beam_width) {
            for t in expansions(m.tree(), &seeds, params.allow_root_choice) {
                if seen.insert(t.clone()) {
                    level.push(t);
                }
            }
        }
    }

    let mut ranking = LpmRanking::ranked(pool);
    ranking.truncate(params.max_results);
    Ok(ranking)
}

/// All one-activity extensions of `tree`, normalized.
pub(crate) fn expansions(tree: &ProcessTree, pool: &[Activity], allow_root_choice: bool) -> Vec<ProcessTree> {
    let present = tree.activities();
    let mut out = Vec::new();
    for x in &present {
        let leaf = ProcessTree::Activity(x.clone());
        let at_root = *tree == leaf;
        for y in pool.iter().filter(|y| !present.contains(*y)) {
            let new = ProcessTree::Activity(y.clone());
            for op in Operator::ALL {
                if op == Operator::Xor && at_root && !allow_root_choice {
                    continue;
                }
                let mut replacements = vec![op.apply(leaf.clone(), new.clone())];
                if op.is_ordered() {
                    replacements.push(op.apply(new.clone(), leaf.clone()));
                }
                out.extend(replacements.iter().map(|r| tree.replace_activity(x, r).normalize()));
            }
        }
    }
    out
}

/// Projected traces as label indices, with multiplicity.
type Variants = Vec<(Vec<usize>, usize)>;

/// Projected trace variants per activity set, as label indices in the
/// alphabet's order.
struct ProjectionCache<'a> {
    traces: &'a [(Vec<Activity>, usize)],
    cache: HashMap<Alphabet, Variants>,
}

impl<'a> ProjectionCache<'a> {
    fn new(traces: &'a [(Vec<Activity>, usize)]) -> Self {
        ProjectionCache { traces, cache: HashMap::new() }
    }

    fn prepare(&mut self, alphabets: impl IntoIterator<Item = Alphabet>) {
        let missing: Vec<Alphabet> = alphabets
            .into_iter()
            .collect::<HashSet<_>>()
            .into_iter()
            .filter(|a| !self.cache.contains_key(a))
            .collect();
        let traces = self.traces;
        let computed: Vec<(Alphabet, Variants)> = missing
            .into_par_iter()
            .map(|alphabet| {
                let index: HashMap<&Activity, usize> = alphabet.iter().enumerate().map(|(i, a)| (a, i)).collect();
                let mut grouped: HashMap<Vec<usize>, usize> = HashMap::new();
                for (trace, count) in traces {
                    let word: Vec<usize> = trace.iter().filter_map(|a| index.get(a).copied()).collect();
                    if !word.is_empty() {
                        *grouped.entry(word).or_insert(0) += count;
                    }
                }
                (alphabet, grouped.into_iter().collect())
            })
            .collect();
        self.cache.extend(computed);
    }

    fn get(&self, alphabet: &Alphabet) -> &[(Vec<usize>, usize)] {
        &self.cache[alphabet]
    }
}

fn evaluate(
    trees: Vec<ProcessTree>,
    projections: &mut ProjectionCache<'_>,
    limits: &SearchLimits,
) -> Result<Vec<LocalProcessModel>> {
    projections.prepare(trees.iter().map(ProcessTree::activities));
    let projections = &*projections;
    trees
        .into_par_iter()
        .map(|tree| {
            let mut model = LocalProcessModel::new(tree, limits)?;
            let support = projections
                .get(model.activities())
                .iter()
                .map(|(word, count)| count * max_cover(model.automaton(), word))
                .sum();
            model.set_support(support);
            Ok(model)
        })
        .collect()
}
