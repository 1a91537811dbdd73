use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use super::{AcceptingPetriNet, Marking, SearchLimits};
use crate::eventlog::{Activity, Alphabet};
use crate::Result;

impl AcceptingPetriNet {
    /// Whether some firing sequence of at most `step_bound` transitions
    /// produces exactly `word` as its visible labels and ends in the final
    /// marking. Exceeding the state limit is an error, not `false`.
    pub fn accepts(&self, word: &[Activity], step_bound: usize, limits: &SearchLimits) -> Result<bool> {
        if step_bound < word.len() {
            return Ok(false);
        }
        let net = self.net();
        let mut visited: HashSet<(Marking, usize)> = HashSet::new();
        let start = (self.initial().clone(), 0usize);
        visited.insert(start.clone());
        let mut frontier = vec![start];
        for step in 0..=step_bound {
            let mut next = Vec::new();
            for (m, pos) in &frontier {
                if *pos == word.len() && self.is_final(m) {
                    return Ok(true);
                }
                if step == step_bound {
                    continue;
                }
                for t in net.enabled(m) {
                    let npos = match net.label(t) {
                        None => *pos,
                        Some(l) if *pos < word.len() && *l == word[*pos] => pos + 1,
                        Some(_) => continue,
                    };
                    let state = (net.fire_unchecked(m, t), npos);
                    if !visited.contains(&state) {
                        visited.insert(state.clone());
                        limits.check(visited.len())?;
                        next.push(state);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        Ok(false)
    }

    /// All accepted words with at most `max_len` visible labels.
    pub fn language_upto(&self, max_len: usize, limits: &SearchLimits) -> Result<BTreeSet<Vec<Activity>>> {
        let net = self.net();
        let mut words = BTreeSet::new();
        let mut visited: HashSet<(Marking, Vec<Activity>)> = HashSet::new();
        let mut queue = VecDeque::new();
        let start = (self.initial().clone(), Vec::new());
        visited.insert(start.clone());
        queue.push_back(start);
        while let Some((m, word)) = queue.pop_front() {
            if self.is_final(&m) {
                words.insert(word.clone());
            }
            for t in net.enabled(&m) {
                let next_word = match net.label(t) {
                    None => word.clone(),
                    Some(_) if word.len() == max_len => continue,
                    Some(l) => {
                        let mut w = word.clone();
                        w.push(l.clone());
                        w
                    }
                };
                let state = (net.fire_unchecked(&m, t), next_word);
                if !visited.contains(&state) {
                    visited.insert(state.clone());
                    limits.check(visited.len())?;
                    queue.push_back(state);
                }
            }
        }
        Ok(words)
    }

    /// Markings reachable from `m` by firing only silent transitions,
    /// including `m` itself, in discovery order.
    pub fn tau_closure(&self, m: &Marking, limits: &SearchLimits) -> Result<Vec<Marking>> {
        let net = self.net();
        let mut seen: HashSet<Marking> = HashSet::new();
        let mut order = vec![m.clone()];
        seen.insert(m.clone());
        let mut i = 0;
        while i < order.len() {
            let current = order[i].clone();
            for t in net.enabled(&current) {
                if net.label(t).is_some() {
                    continue;
                }
                let next = net.fire_unchecked(&current, t);
                if seen.insert(next.clone()) {
                    limits.check(seen.len())?;
                    order.push(next);
                }
            }
            i += 1;
        }
        Ok(order)
    }

    /// Labels of visible transitions enabled somewhere in the τ-closure of `m`.
    pub fn enabled_labels(&self, m: &Marking, limits: &SearchLimits) -> Result<Alphabet> {
        let mut labels = Alphabet::new();
        for reached in self.tau_closure(m, limits)? {
            for t in self.net().enabled(&reached) {
                if let Some(l) = self.net().label(t) {
                    labels.insert(l.clone());
                }
            }
        }
        Ok(labels)
    }

    /// Fewest visible transitions on any run from the initial to the final
    /// marking, or `None` if the final marking is unreachable.
    pub fn min_visible_run_length(&self, limits: &SearchLimits) -> Result<Option<usize>> {
        let net = self.net();
        let mut dist: HashMap<Marking, usize> = HashMap::new();
        let mut deque = VecDeque::new();
        dist.insert(self.initial().clone(), 0);
        deque.push_back((self.initial().clone(), 0usize));
        while let Some((m, d)) = deque.pop_front() {
            if dist.get(&m).is_some_and(|&best| best < d) {
                continue;
            }
            if self.is_final(&m) {
                return Ok(Some(d));
            }
            for t in net.enabled(&m) {
                let w = usize::from(net.label(t).is_some());
                let next = net.fire_unchecked(&m, t);
                let nd = d + w;
                if dist.get(&next).is_none_or(|&old| nd < old) {
                    dist.insert(next.clone(), nd);
                    limits.check(dist.len())?;
                    if w == 0 {
                        deque.push_front((next, nd));
                    } else {
                        deque.push_back((next, nd));
                    }
                }
            }
        }
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::n1;
    use super::super::{LabeledPetriNet, PlaceId};
    use super::*;
    use crate::Error;

    fn w(labels: &[&str]) -> Vec<Activity> {
        labels.iter().map(Activity::new).collect()
    }

    fn lim() -> SearchLimits {
        SearchLimits::default()
    }

    #[test]
    fn n1_accepts_the_runs_of_the_worked_example() {
        let n = n1();
        assert!(n.accepts(&w(&["B", "B", "C"]), 20, &lim()).unwrap());
        assert!(n.accepts(&w(&["B", "C"]), 20, &lim()).unwrap());
        assert!(n.accepts(&w(&["A", "C"]), 20, &lim()).unwrap());
        assert!(!n.accepts(&w(&["C"]), 20, &lim()).unwrap());
        assert!(!n.accepts(&w(&["A", "B", "C"]), 20, &lim()).unwrap());
        assert!(!n.accepts(&[], 20, &lim()).unwrap());
    }

    #[test]
    fn step_bound_limits_silent_steps() {
        let n = n1();
        // B C needs τ1, B, τ3, C: four steps.
        assert!(!n.accepts(&w(&["B", "C"]), 3, &lim()).unwrap());
        assert!(n.accepts(&w(&["B", "C"]), 4, &lim()).unwrap());
    }

    #[test]
    fn n1_language_up_to_three() {
        let lang = n1().language_upto(3, &lim()).unwrap();
        let expected: BTreeSet<_> = [w(&["A", "C"]), w(&["B", "C"]), w(&["B", "B", "C"])]
            .into_iter()
            .collect();
        assert_eq!(lang, expected);
    }

    #[test]
    fn single_transition_language() {
        let mut net = LabeledPetriNet::new();
        let i = net.add_place("i");
        let o = net.add_place("o");
        let t = net.add_transition("a", Some(Activity::new("a")));
        net.add_input(t, i);
        net.add_output(t, o);
        let apn = AcceptingPetriNet::new(net, Marking::with_tokens(2, &[i]), Marking::with_tokens(2, &[o])).unwrap();
        let lang = apn.language_upto(1, &lim()).unwrap();
        assert_eq!(lang.into_iter().collect::<Vec<_>>(), vec![w(&["a"])]);
    }

    #[test]
    fn zero_length_language_of_trivially_accepting_net() {
        let mut net = LabeledPetriNet::new();
        let p = net.add_place("p");
        let m = Marking::with_tokens(1, &[p]);
        let apn = AcceptingPetriNet::new(net, m.clone(), m).unwrap();
        let lang = apn.language_upto(0, &lim()).unwrap();
        assert_eq!(lang.into_iter().collect::<Vec<_>>(), vec![Vec::<Activity>::new()]);
    }

    #[test]
    fn unbounded_silent_generation_hits_state_limit() {
        let mut net = LabeledPetriNet::new();
        let p = net.add_place("p");
        let q = net.add_place("q");
        let t = net.add_transition("gen", None);
        net.add_input(t, p);
        net.add_output(t, p);
        net.add_output(t, q);
        let apn = AcceptingPetriNet::new(net, Marking::with_tokens(2, &[p]), Marking::empty(2)).unwrap();
        let small = SearchLimits::new(50);
        assert!(matches!(apn.language_upto(2, &small), Err(Error::StateLimit { .. })));
        assert!(matches!(apn.accepts(&[], 1000, &small), Err(Error::StateLimit { .. })));
        assert!(apn.tau_closure(apn.initial(), &small).is_err());
    }

    #[test]
    fn minimal_run_of_n1_has_two_visible_steps() {
        assert_eq!(n1().min_visible_run_length(&lim()).unwrap(), Some(2));
    }

    #[test]
    fn enabled_labels_look_through_silent_steps() {
        let n = n1();
        let labels = n.enabled_labels(n.initial(), &lim()).unwrap();
        assert_eq!(labels, crate::eventlog::alphabet(["A", "B"]));
        let after_b = Marking::with_tokens(5, &[PlaceId(2)]);
        assert_eq!(n.enabled_labels(&after_b, &lim()).unwrap(), crate::eventlog::alphabet(["B", "C"]));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            // accepts agrees with membership in the bounded language
            #[test]
            fn accepts_matches_language(word in proptest::collection::vec(prop::sample::select(vec!["A", "B", "C"]), 0..5)) {
                let n = n1();
                let word = w(&word);
                let lang = n.language_upto(word.len(), &lim()).unwrap();
                let bound = 4 * word.len() + 4;
                prop_assert_eq!(n.accepts(&word, bound, &lim()).unwrap(), lang.contains(&word));
            }

            // firing changes the token total by |outputs| - |inputs|
            #[test]
            fn token_conservation(choices in proptest::collection::vec(0usize..8, 0..10)) {
                let n = n1();
                let mut m = n.initial().clone();
                for c in choices {
                    let enabled = n.enabled(&m);
                    if enabled.is_empty() { break; }
                    let t = enabled[c % enabled.len()];
                    let tr = n.net().transition(t);
                    let next = n.fire(&m, t).unwrap();
                    prop_assert_eq!(
                        next.total() as i64 - m.total() as i64,
                        tr.outputs().len() as i64 - tr.inputs().len() as i64
                    );
                    m = next;
                }
            }
        }
    }
}
