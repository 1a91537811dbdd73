//! Local process models: small process trees describing frequent behavior
//! over a few activities, scored by how many log events they explain.
//!
//! A trace is first projected on the model's activities and then split into
//! fitting segments (complete runs of the model) and everything else; the
//! support of a model is the number of events inside fitting segments,
//! summed over the log.

mod discover;
mod diversity;
pub mod io;
mod segment;
mod tree;

use std::cmp::Reverse;
use std::sync::Arc;

use crate::eventlog::{Activity, Alphabet, EventLog};
use crate::petrinet::{AcceptingPetriNet, ReplayAutomaton, SearchLimits};
use crate::{Error, Result};

pub use discover::{discover_lpms, LpmDiscoveryParams};
pub use diversity::{diversity, filter_diverse, jaccard, FilterOrder};
pub use segment::{segment, Segment, SegmentKind, Segmentation};
pub use tree::{Operator, ProcessTree};

/// Default bound on the number of activities in one model.
pub const DEFAULT_MAX_ACTIVITIES: usize = 5;

#[derive(Clone, Debug)]
pub struct LocalProcessModel {
    tree: ProcessTree,
    net: AcceptingPetriNet,
    automaton: Arc<ReplayAutomaton>,
    activities: Alphabet,
    support: usize,
    rank: usize,
}

impl LocalProcessModel {
    /// Builds the model's net and replay automaton. Support and rank start
    /// at zero.
    pub fn new(tree: ProcessTree, limits: &SearchLimits) -> Result<Self> {
        tree.validate()?;
        let net = tree.to_net();
        let automaton = Arc::new(ReplayAutomaton::build(&net, limits)?);
        let activities = tree.activities();
        Ok(LocalProcessModel {
            tree,
            net,
            automaton,
            activities,
            support: 0,
            rank: 0,
        })
    }

    pub fn tree(&self) -> &ProcessTree {
        &self.tree
    }

    pub fn net(&self) -> &AcceptingPetriNet {
        &self.net
    }

    pub fn automaton(&self) -> &ReplayAutomaton {
        &self.automaton
    }

    /// act(LPM): the visible activities.
    pub fn activities(&self) -> &Alphabet {
        &self.activities
    }

    pub fn support(&self) -> usize {
        self.support
    }

    pub fn set_support(&mut self, support: usize) {
        self.support = support;
    }

    /// 1-based position in the ranking it belongs to; 0 when unranked.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn set_rank(&mut self, rank: usize) {
        self.rank = rank;
    }

    pub fn accepts(&self, word: &[Activity]) -> bool {
        self.automaton.accepts(word)
    }

    /// Number of words of length at most twice the activity count; used to
    /// prefer more specific models among equally supported ones.
    pub fn language_size(&self) -> u64 {
        self.automaton.count_words_upto(2 * self.activities.len())
    }

    fn rank_key(&self) -> (Reverse<usize>, usize, u64, usize, String) {
        (
            Reverse(self.support),
            self.activities.len(),
            self.language_size(),
            self.tree.node_count(),
            self.tree.to_string(),
        )
    }
}

/// Σ over traces of |Γ|.
pub fn support(log: &EventLog, lpm: &LocalProcessModel) -> usize {
    log.traces.iter().map(|t| segment(t, lpm).support()).sum()
}

/// Models ordered by descending support. Equal support is broken by fewer
/// activities, then smaller bounded language, then fewer tree nodes, then
/// the textual tree.
#[derive(Clone, Debug, Default)]
pub struct LpmRanking {
    models: Vec<LocalProcessModel>,
}

impl LpmRanking {
    /// Sorts `models` and assigns ranks 1, 2, …
    pub fn ranked(mut models: Vec<LocalProcessModel>) -> Self {
        models.sort_by_cached_key(LocalProcessModel::rank_key);
        Self::in_order(models)
    }

    /// Keeps the given order and renumbers ranks 1, 2, …
    pub fn in_order(mut models: Vec<LocalProcessModel>) -> Self {
        for (i, m) in models.iter_mut().enumerate() {
            m.rank = i + 1;
        }
        LpmRanking { models }
    }

    pub fn models(&self) -> &[LocalProcessModel] {
        &self.models
    }

    pub fn into_models(self) -> Vec<LocalProcessModel> {
        self.models
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    /// Model at 1-based rank `i`.
    pub fn get(&self, i: usize) -> Result<&LocalProcessModel> {
        if i == 0 || i > self.models.len() {
            return Err(Error::IndexOutOfRange { index: i, len: self.models.len() });
        }
        Ok(&self.models[i - 1])
    }

    pub fn iter(&self) -> std::slice::Iter<'_, LocalProcessModel> {
        self.models.iter()
    }

    pub fn truncate(&mut self, len: usize) {
        self.models.truncate(len);
    }
}

impl<'a> IntoIterator for &'a LpmRanking {
    type Item = &'a LocalProcessModel;
    type IntoIter = std::slice::Iter<'a, LocalProcessModel>;

    fn into_iter(self) -> Self::IntoIter {
        self.models.iter()
    }
}
