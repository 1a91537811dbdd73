use std::collections::{BTreeMap, HashMap};

use super::{AcceptingPetriNet, Marking, SearchLimits};
use crate::eventlog::Activity;
use crate::Result;

/// Deterministic automaton over the visible language of a net.
///
/// Each state is the set of markings reachable after a visible prefix,
/// closed under silent firings. Built eagerly, so it is only suitable for
/// nets with a small reachability graph, such as local process models.
#[derive(Clone, Debug)]
pub struct ReplayAutomaton {
    labels: Vec<Activity>,
    label_index: HashMap<Activity, usize>,
    // next[state * labels.len() + label]
    next: Vec<Option<usize>>,
    accepting: Vec<bool>,
}

impl ReplayAutomaton {
    pub const START: usize = 0;

    pub fn build(net: &AcceptingPetriNet, limits: &SearchLimits) -> Result<Self> {
        let labels: Vec<Activity> = net.net().visible_labels().into_iter().collect();
        let label_index: HashMap<Activity, usize> =
            labels.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();

        let closure_of = |seed: Vec<Marking>| -> Result<Vec<Marking>> {
            let mut all = std::collections::BTreeSet::new();
            for m in seed {
                all.extend(net.tau_closure(&m, limits)?);
            }
            Ok(all.into_iter().collect())
        };

        let start = closure_of(vec![net.initial().clone()])?;
        let mut ids: HashMap<Vec<Marking>, usize> = HashMap::new();
        let mut states: Vec<Vec<Marking>> = vec![start.clone()];
        ids.insert(start, 0);
        let mut next = Vec::new();
        let mut accepting = Vec::new();

        let mut i = 0;
        while i < states.len() {
            let current = states[i].clone();
            accepting.push(current.iter().any(|m| net.is_final(m)));
            let mut successors: BTreeMap<usize, Vec<Marking>> = BTreeMap::new();
            for m in &current {
                for t in net.net().enabled(m) {
                    if let Some(l) = net.net().label(t) {
                        successors
                            .entry(label_index[l])
                            .or_default()
                            .push(net.net().fire_unchecked(m, t));
                    }
                }
            }
            let mut row = vec![None; labels.len()];
            for (l, seed) in successors {
                let target = closure_of(seed)?;
                let id = match ids.get(&target) {
                    Some(&id) => id,
                    None => {
                        states.push(target.clone());
                        limits.check(states.len())?;
                        ids.insert(target, states.len() - 1);
                        states.len() - 1
                    }
                };
                row[l] = Some(id);
            }
            next.extend(row);
            i += 1;
        }

        Ok(ReplayAutomaton {
            labels,
            label_index,
            next,
            accepting,
        })
    }

    pub fn state_count(&self) -> usize {
        self.accepting.len()
    }

    pub fn labels(&self) -> &[Activity] {
        &self.labels
    }

    pub fn label_index(&self, activity: &Activity) -> Option<usize> {
        self.label_index.get(activity).copied()
    }

    pub fn is_accepting(&self, state: usize) -> bool {
        self.accepting[state]
    }

    /// Successor on a label index; `None` when the label cannot fire.
    pub fn step_index(&self, state: usize, label: usize) -> Option<usize> {
        self.next[state * self.labels.len() + label]
    }

    pub fn step(&self, state: usize, activity: &Activity) -> Option<usize> {
        self.label_index(activity)
            .and_then(|l| self.step_index(state, l))
    }

    pub fn accepts(&self, word: &[Activity]) -> bool {
        let mut state = Self::START;
        for a in word {
            match self.step(state, a) {
                Some(s) => state = s,
                None => return false,
            }
        }
        self.is_accepting(state)
    }

    /// Number of accepted words of length at most `max_len`.
    pub fn count_words_upto(&self, max_len: usize) -> u64 {
        let n = self.state_count();
        let mut paths = vec![0u64; n];
        paths[Self::START] = 1;
        let mut total = if self.is_accepting(Self::START) { 1 } else { 0 };
        for _ in 0..max_len {
            let mut next = vec![0u64; n];
            for (s, &count) in paths.iter().enumerate() {
                if count == 0 {
                    continue;
                }
                for l in 0..self.labels.len() {
                    if let Some(t) = self.step_index(s, l) {
                        next[t] = next[t].saturating_add(count);
                    }
                }
            }
            total += next
                .iter()
                .enumerate()
                .filter(|(s, _)| self.is_accepting(*s))
                .map(|(_, &c)| c)
                .fold(0u64, u64::saturating_add);
            paths = next;
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::n1;
    use super::*;

    fn w(labels: &[&str]) -> Vec<Activity> {
        labels.iter().map(Activity::new).collect()
    }

    #[test]
    fn automaton_agrees_with_net_on_n1() {
        let n = n1();
        let lim = SearchLimits::default();
        let dfa = ReplayAutomaton::build(&n, &lim).unwrap();
        for word in [
            w(&["A", "C"]),
            w(&["B", "C"]),
            w(&["B", "B", "B", "C"]),
            w(&["A", "B", "C"]),
            w(&["C"]),
            w(&[]),
        ] {
            assert_eq!(dfa.accepts(&word), n.accepts(&word, 40, &lim).unwrap(), "{word:?}");
        }
        // ⟨A,C⟩, ⟨B,C⟩, ⟨B,B,C⟩
        assert_eq!(dfa.count_words_upto(3), 3);
        assert!(dfa.step(ReplayAutomaton::START, &Activity::new("Z")).is_none());
    }
}
