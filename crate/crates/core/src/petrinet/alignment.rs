//! Optimal alignments of a label sequence against an accepting net.
//!
//! A* over the synchronous product of the word and the net. Synchronous and
//! silent moves are free; log moves and visible model moves cost 1. An
//! optional secondary cost, compared only between alignments of equal
//! primary cost, charges each log move made while a token sits in one of a
//! given set of places.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use super::{AcceptingPetriNet, Marking, PlaceId, TransitionId};
use crate::eventlog::Activity;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MoveKind {
    Synchronous,
    LogMove,
    ModelMoveVisible,
    ModelMoveTau,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AlignmentMove {
    pub kind: MoveKind,
    /// Position in the aligned word, for synchronous and log moves.
    pub log_index: Option<usize>,
    /// Fired transition, for synchronous and model moves.
    pub transition: Option<TransitionId>,
}

impl AlignmentMove {
    pub fn cost(&self) -> u32 {
        match self.kind {
            MoveKind::Synchronous | MoveKind::ModelMoveTau => 0,
            MoveKind::LogMove | MoveKind::ModelMoveVisible => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alignment {
    pub moves: Vec<AlignmentMove>,
}

impl Alignment {
    /// Number of log moves plus visible model moves.
    pub fn cost(&self) -> u32 {
        self.moves.iter().map(AlignmentMove::cost).sum()
    }

    /// Markings visited by the model side: the initial marking followed by
    /// the marking after each move.
    pub fn markings(&self, net: &AcceptingPetriNet) -> Vec<Marking> {
        let mut out = vec![net.initial().clone()];
        for mv in &self.moves {
            let next = match mv.transition {
                Some(t) => net.net().fire_unchecked(out.last().expect("non-empty"), t),
                None => out.last().expect("non-empty").clone(),
            };
            out.push(next);
        }
        out
    }

    /// Labels of the visible model transitions, in firing order.
    pub fn model_labels(&self, net: &AcceptingPetriNet) -> Vec<Activity> {
        self.moves
            .iter()
            .filter_map(|m| m.transition.and_then(|t| net.net().label(t).cloned()))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct AlignOptions {
    /// Places whose marking makes a log move incur secondary cost.
    pub busy_places: Vec<PlaceId>,
    /// Bound on distinct (marking, position) states.
    pub max_states: usize,
}

impl Default for AlignOptions {
    fn default() -> Self {
        AlignOptions { busy_places: Vec::new(), max_states: 1_000_000 }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
struct Cost(u32, u32);

struct Node {
    marking: u32,
    pos: usize,
    g: Cost,
    parent: Option<usize>,
    mv: Option<AlignmentMove>,
}

#[derive(PartialEq, Eq)]
struct Entry {
    f: Cost,
    pos: usize,
    seq: usize,
    node: usize,
}

impl Ord for Entry {
    // BinaryHeap is a max-heap: the "greatest" entry is the cheapest, then
    // the one furthest along the word, then the one pushed first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .cmp(&self.f)
            .then(self.pos.cmp(&other.pos))
            .then(other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Minimum-cost alignment of `word` against `net`. Ties are resolved
/// deterministically, preferring moves in the order synchronous, silent,
/// log, visible model move.
pub fn align_word(net: &AcceptingPetriNet, word: &[Activity], options: &AlignOptions) -> Result<Alignment> {
    let pn = net.net();
    let visible = pn.visible_labels();
    // unmatched[i]: events in word[i..] that no transition can match
    let mut unmatched = vec![0u32; word.len() + 1];
    for i in (0..word.len()).rev() {
        unmatched[i] = unmatched[i + 1] + u32::from(!visible.contains(&word[i]));
    }
    let mut by_label: HashMap<&Activity, Vec<TransitionId>> = HashMap::new();
    let mut silent = Vec::new();
    let mut labelled = Vec::new();
    for (t, _) in pn.transitions() {
        match pn.label(t) {
            Some(l) => {
                by_label.entry(l).or_default().push(t);
                labelled.push(t);
            }
            None => silent.push(t),
        }
    }

    let mut markings: Vec<Marking> = Vec::new();
    let mut marking_ids: HashMap<Marking, u32> = HashMap::new();
    let mut intern = |m: Marking, markings: &mut Vec<Marking>| -> u32 {
        *marking_ids.entry(m.clone()).or_insert_with(|| {
            markings.push(m);
            (markings.len() - 1) as u32
        })
    };

    let mut nodes: Vec<Node> = Vec::new();
    let mut best: HashMap<(u32, usize), Cost> = HashMap::new();
    let mut closed: std::collections::HashSet<(u32, usize)> = Default::default();
    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;

    let start = intern(net.initial().clone(), &mut markings);
    nodes.push(Node { marking: start, pos: 0, g: Cost(0, 0), parent: None, mv: None });
    best.insert((start, 0), Cost(0, 0));
    heap.push(Entry { f: Cost(unmatched[0], 0), pos: 0, seq, node: 0 });

    while let Some(Entry { node, .. }) = heap.pop() {
        let (mid, pos, g) = (nodes[node].marking, nodes[node].pos, nodes[node].g);
        if !closed.insert((mid, pos)) {
            continue;
        }
        let marking = markings[mid as usize].clone();
        if pos == word.len() && net.is_final(&marking) {
            return Ok(reconstruct(&nodes, node));
        }

        let busy = options.busy_places.iter().any(|&p| marking.get(p) > 0);
        let mut successors: Vec<(Option<TransitionId>, usize, Cost, MoveKind)> = Vec::new();
        if pos < word.len() {
            if let Some(ts) = by_label.get(&word[pos]) {
                for &t in ts {
                    if pn.is_enabled(&marking, t) {
                        successors.push((Some(t), pos + 1, g, MoveKind::Synchronous));
                    }
                }
            }
        }
        for &t in &silent {
            if pn.is_enabled(&marking, t) {
                successors.push((Some(t), pos, g, MoveKind::ModelMoveTau));
            }
        }
        if pos < word.len() {
            successors.push((None, pos + 1, Cost(g.0 + 1, g.1 + u32::from(busy)), MoveKind::LogMove));
        }
        for &t in &labelled {
            if pn.is_enabled(&marking, t) {
                successors.push((Some(t), pos, Cost(g.0 + 1, g.1), MoveKind::ModelMoveVisible));
            }
        }

        for (t, npos, ng, kind) in successors {
            let next = match t {
                Some(t) => intern(pn.fire_unchecked(&marking, t), &mut markings),
                None => mid,
            };
            let key = (next, npos);
            if closed.contains(&key) || best.get(&key).is_some_and(|&old| old <= ng) {
                continue;
            }
            best.insert(key, ng);
            if best.len() > options.max_states {
                return Err(Error::StateLimit { limit: options.max_states });
            }
            let log_index = matches!(kind, MoveKind::Synchronous | MoveKind::LogMove).then_some(pos);
            nodes.push(Node {
                marking: next,
                pos: npos,
                g: ng,
                parent: Some(node),
                mv: Some(AlignmentMove { kind, log_index, transition: t }),
            });
            seq += 1;
            heap.push(Entry {
                f: Cost(ng.0 + unmatched[npos], ng.1),
                pos: npos,
                seq,
                node: nodes.len() - 1,
            });
        }
    }
    Err(Error::Unalignable)
}

fn reconstruct(nodes: &[Node], mut node: usize) -> Alignment {
    let mut moves = Vec::new();
    while let Some(mv) = nodes[node].mv {
        moves.push(mv);
        node = nodes[node].parent.expect("moves have parents");
    }
    moves.reverse();
    Alignment { moves }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::n1;
    use super::super::{LabeledPetriNet, SearchLimits};
    use super::*;
    use proptest::prelude::*;

    fn w(labels: &[&str]) -> Vec<Activity> {
        labels.iter().map(Activity::new).collect()
    }

    fn kinds(a: &Alignment) -> Vec<MoveKind> {
        a.moves.iter().map(|m| m.kind).collect()
    }

    #[test]
    fn fitting_word_costs_nothing() {
        let a = align_word(&n1(), &w(&["B", "B", "C"]), &AlignOptions::default()).unwrap();
        assert_eq!(a.cost(), 0);
        assert_eq!(a.model_labels(&n1()), w(&["B", "B", "C"]));
        let n1 = n1();
        assert!(n1.is_final(a.markings(&n1).last().unwrap()));
    }

    #[test]
    fn foreign_event_is_a_log_move() {
        let a = align_word(&n1(), &w(&["A", "X", "C"]), &AlignOptions::default()).unwrap();
        assert_eq!(a.cost(), 1);
        assert_eq!(kinds(&a), [MoveKind::Synchronous, MoveKind::LogMove, MoveKind::Synchronous]);
        assert_eq!(a.moves[1].log_index, Some(1));
    }

    #[test]
    fn missing_event_is_a_model_move() {
        let a = align_word(&n1(), &w(&["A"]), &AlignOptions::default()).unwrap();
        assert_eq!(a.cost(), 1);
        assert_eq!(kinds(&a), [MoveKind::Synchronous, MoveKind::ModelMoveVisible]);
    }

    #[test]
    fn empty_word_needs_a_shortest_run() {
        let a = align_word(&n1(), &[], &AlignOptions::default()).unwrap();
        assert_eq!(a.cost(), 2);
    }

    #[test]
    fn unreachable_final_marking() {
        let mut net = LabeledPetriNet::new();
        let p = net.add_place("p");
        let q = net.add_place("q");
        let apn = AcceptingPetriNet::new(net, Marking::with_tokens(2, &[p]), Marking::with_tokens(2, &[q])).unwrap();
        assert!(matches!(align_word(&apn, &[], &AlignOptions::default()), Err(Error::Unalignable)));
    }

    #[test]
    fn state_limit() {
        let opts = AlignOptions { max_states: 3, ..Default::default() };
        let long = w(&["B"; 10]);
        assert!(matches!(align_word(&n1(), &long, &opts), Err(Error::StateLimit { .. })));
    }

    #[test]
    fn secondary_cost_moves_log_moves_out_of_instances() {
        // A B C against N1: either skip A or skip B, both cost 1.
        let plain = align_word(&n1(), &w(&["A", "B", "C"]), &AlignOptions::default()).unwrap();
        assert_eq!(plain.cost(), 1);
        let busy: Vec<PlaceId> = (1..4).map(PlaceId).collect();
        let opts = AlignOptions { busy_places: busy, ..Default::default() };
        let a = align_word(&n1(), &w(&["A", "B", "C"]), &opts).unwrap();
        assert_eq!(a.cost(), 1);
        assert_eq!(a.moves[0].kind, MoveKind::LogMove);
        assert_eq!(a.model_labels(&n1()), w(&["B", "C"]));
    }

    // Brute-force reference: the cheapest word of the bounded language by
    // edit distance with insertions and deletions only.
    fn indel_distance(a: &[Activity], b: &[Activity]) -> u32 {
        let mut d = vec![vec![0u32; b.len() + 1]; a.len() + 1];
        for i in 0..=a.len() {
            for j in 0..=b.len() {
                d[i][j] = if i == 0 {
                    j as u32
                } else if j == 0 {
                    i as u32
                } else if a[i - 1] == b[j - 1] {
                    d[i - 1][j - 1]
                } else {
                    1 + d[i - 1][j].min(d[i][j - 1])
                };
            }
        }
        d[a.len()][b.len()]
    }

    proptest! {
        #[test]
        fn cost_is_the_indel_distance_to_the_language(word in prop::collection::vec(prop::sample::select(vec!["A", "B", "C", "X"]), 0..6)) {
            let word = w(&word);
            let n = n1();
            // a model word of length L costs at least L - |word|, while a
            // shortest run costs at most |word| + 2
            let lang = n.language_upto(2 * word.len() + 2, &SearchLimits::default()).unwrap();
            let expected = lang.iter().map(|l| indel_distance(&word, l)).min().unwrap();
            let a = align_word(&n, &word, &AlignOptions::default()).unwrap();
            prop_assert_eq!(a.cost(), expected);
            let synced: Vec<Activity> = a.moves.iter()
                .filter(|m| m.kind == MoveKind::Synchronous)
                .map(|m| word[m.log_index.unwrap()].clone())
                .collect();
            let model: Vec<Activity> = a.moves.iter()
                .filter(|m| matches!(m.kind, MoveKind::Synchronous | MoveKind::ModelMoveVisible))
                .filter_map(|m| m.transition.and_then(|t| n.net().label(t).cloned()))
                .collect();
            prop_assert!(lang.contains(&model));
            prop_assert!(synced.len() <= word.len());
        }
    }
}
