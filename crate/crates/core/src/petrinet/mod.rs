//! Labeled accepting Petri nets.
//!
//! Places and transitions live in separate index spaces ([`PlaceId`],
//! [`TransitionId`]), so they are disjoint by construction. Arcs are
//! unweighted; a transition without a label is a silent (τ) transition.

mod alignment;
mod automaton;
mod language;
pub mod pnml;

use std::collections::BTreeSet;
use std::fmt;

use crate::eventlog::{Activity, Alphabet};
use crate::{Error, Result};

pub use alignment::{align_word, AlignOptions, Alignment, AlignmentMove, MoveKind};
pub use automaton::ReplayAutomaton;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlaceId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TransitionId(pub usize);

/// Bounds on explicit state-space searches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchLimits {
    pub max_states: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            max_states: 100_000,
        }
    }
}

impl SearchLimits {
    pub fn new(max_states: usize) -> Self {
        SearchLimits { max_states }
    }

    pub(crate) fn check(&self, states: usize) -> Result<()> {
        if states > self.max_states {
            Err(Error::StateLimit {
                limit: self.max_states,
            })
        } else {
            Ok(())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub name: String,
    pub label: Option<Activity>,
    inputs: Vec<PlaceId>,
    outputs: Vec<PlaceId>,
}

impl Transition {
    pub fn is_silent(&self) -> bool {
        self.label.is_none()
    }

    pub fn inputs(&self) -> &[PlaceId] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[PlaceId] {
        &self.outputs
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arc {
    PlaceToTransition(PlaceId, TransitionId),
    TransitionToPlace(TransitionId, PlaceId),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabeledPetriNet {
    places: Vec<String>,
    transitions: Vec<Transition>,
}

impl LabeledPetriNet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_place(&mut self, name: impl Into<String>) -> PlaceId {
        self.places.push(name.into());
        PlaceId(self.places.len() - 1)
    }

    pub fn add_transition(&mut self, name: impl Into<String>, label: Option<Activity>) -> TransitionId {
        self.transitions.push(Transition {
            name: name.into(),
            label,
            inputs: Vec::new(),
            outputs: Vec::new(),
        });
        TransitionId(self.transitions.len() - 1)
    }

    /// Adds the arc `place → transition`. Duplicate arcs are ignored.
    pub fn add_input(&mut self, transition: TransitionId, place: PlaceId) {
        assert!(place.0 < self.places.len(), "unknown place {place:?}");
        let inputs = &mut self.transitions[transition.0].inputs;
        if let Err(pos) = inputs.binary_search(&place) {
            inputs.insert(pos, place);
        }
    }

    /// Adds the arc `transition → place`. Duplicate arcs are ignored.
    pub fn add_output(&mut self, transition: TransitionId, place: PlaceId) {
        assert!(place.0 < self.places.len(), "unknown place {place:?}");
        let outputs = &mut self.transitions[transition.0].outputs;
        if let Err(pos) = outputs.binary_search(&place) {
            outputs.insert(pos, place);
        }
    }

    pub fn place_count(&self) -> usize {
        self.places.len()
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.len()
    }

    pub fn place_name(&self, p: PlaceId) -> &str {
        &self.places[p.0]
    }

    pub fn places(&self) -> impl Iterator<Item = PlaceId> {
        (0..self.places.len()).map(PlaceId)
    }

    pub fn transition_ids(&self) -> impl Iterator<Item = TransitionId> {
        (0..self.transitions.len()).map(TransitionId)
    }

    pub fn transition(&self, t: TransitionId) -> &Transition {
        &self.transitions[t.0]
    }

    pub fn transitions(&self) -> impl Iterator<Item = (TransitionId, &Transition)> {
        self.transitions
            .iter()
            .enumerate()
            .map(|(i, t)| (TransitionId(i), t))
    }

    pub fn label(&self, t: TransitionId) -> Option<&Activity> {
        self.transitions[t.0].label.as_ref()
    }

    pub fn arcs(&self) -> BTreeSet<Arc> {
        let mut arcs = BTreeSet::new();
        for (t, tr) in self.transitions() {
            arcs.extend(tr.inputs.iter().map(|&p| Arc::PlaceToTransition(p, t)));
            arcs.extend(tr.outputs.iter().map(|&p| Arc::TransitionToPlace(t, p)));
        }
        arcs
    }

    /// Labels of visible transitions.
    pub fn visible_labels(&self) -> Alphabet {
        self.transitions
            .iter()
            .filter_map(|t| t.label.clone())
            .collect()
    }

    /// Transitions with `p` as output place.
    pub fn producers(&self, p: PlaceId) -> impl Iterator<Item = TransitionId> + '_ {
        self.transitions()
            .filter(move |(_, t)| t.outputs.contains(&p))
            .map(|(id, _)| id)
    }

    /// Transitions with `p` as input place.
    pub fn consumers(&self, p: PlaceId) -> impl Iterator<Item = TransitionId> + '_ {
        self.transitions()
            .filter(move |(_, t)| t.inputs.contains(&p))
            .map(|(id, _)| id)
    }

    pub fn is_enabled(&self, m: &Marking, t: TransitionId) -> bool {
        self.transitions[t.0].inputs.iter().all(|p| m.get(*p) > 0)
    }

    /// All transitions enabled in `m`, in id order.
    pub fn enabled(&self, m: &Marking) -> Vec<TransitionId> {
        self.transition_ids().filter(|&t| self.is_enabled(m, t)).collect()
    }

    /// Fires `t` in `m`.
    pub fn fire(&self, m: &Marking, t: TransitionId) -> Result<Marking> {
        if !self.is_enabled(m, t) {
            return Err(Error::NotEnabled(self.transitions[t.0].name.clone()));
        }
        Ok(self.fire_unchecked(m, t))
    }

    pub(crate) fn fire_unchecked(&self, m: &Marking, t: TransitionId) -> Marking {
        let tr = &self.transitions[t.0];
        let mut next = m.clone();
        for p in &tr.inputs {
            next.0[p.0] -= 1;
        }
        for p in &tr.outputs {
            next.0[p.0] += 1;
        }
        next
    }

    /// Copies `other` into this net, prefixing element names. Returns the
    /// place and transition maps from `other`'s ids to the new ids.
    pub fn embed(&mut self, other: &LabeledPetriNet, prefix: &str) -> (Vec<PlaceId>, Vec<TransitionId>) {
        let places: Vec<PlaceId> = other
            .places
            .iter()
            .map(|name| self.add_place(format!("{prefix}{name}")))
            .collect();
        let transitions = other
            .transitions
            .iter()
            .map(|tr| {
                let t = self.add_transition(format!("{prefix}{}", tr.name), tr.label.clone());
                for p in &tr.inputs {
                    self.add_input(t, places[p.0]);
                }
                for p in &tr.outputs {
                    self.add_output(t, places[p.0]);
                }
                t
            })
            .collect();
        (places, transitions)
    }
}

/// Token counts per place.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Marking(Vec<u32>);

impl Marking {
    /// The empty marking over `places` places.
    pub fn empty(places: usize) -> Self {
        Marking(vec![0; places])
    }

    /// Marking with one token in each of the listed places (repeats add up).
    pub fn with_tokens(places: usize, marked: &[PlaceId]) -> Self {
        let mut m = Marking::empty(places);
        for p in marked {
            m.0[p.0] += 1;
        }
        m
    }

    pub fn get(&self, p: PlaceId) -> u32 {
        self.0[p.0]
    }

    pub fn set(&mut self, p: PlaceId, tokens: u32) {
        self.0[p.0] = tokens;
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&c| c as u64).sum()
    }

    /// Places holding at least one token.
    pub fn support(&self) -> impl Iterator<Item = (PlaceId, u32)> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (PlaceId(i), c))
    }
}

impl fmt::Debug for Marking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(self.support().map(|(p, c)| (p.0, c)))
            .finish()
    }
}

/// A labeled net with initial and final marking.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AcceptingPetriNet {
    net: LabeledPetriNet,
    initial: Marking,
    final_marking: Marking,
}

impl AcceptingPetriNet {
    pub fn new(net: LabeledPetriNet, initial: Marking, final_marking: Marking) -> Result<Self> {
        for (which, m) in [("initial", &initial), ("final", &final_marking)] {
            if m.len() != net.place_count() {
                return Err(Error::InvalidNet(format!(
                    "{which} marking covers {} places, net has {}",
                    m.len(),
                    net.place_count()
                )));
            }
        }
        Ok(AcceptingPetriNet {
            net,
            initial,
            final_marking,
        })
    }

    pub fn net(&self) -> &LabeledPetriNet {
        &self.net
    }

    pub fn initial(&self) -> &Marking {
        &self.initial
    }

    pub fn final_marking(&self) -> &Marking {
        &self.final_marking
    }

    pub fn into_parts(self) -> (LabeledPetriNet, Marking, Marking) {
        (self.net, self.initial, self.final_marking)
    }

    pub fn enabled(&self, m: &Marking) -> Vec<TransitionId> {
        self.net.enabled(m)
    }

    pub fn fire(&self, m: &Marking, t: TransitionId) -> Result<Marking> {
        self.net.fire(m, t)
    }

    pub fn is_final(&self, m: &Marking) -> bool {
        *m == self.final_marking
    }

    /// Looks up a transition by name.
    pub fn transition_named(&self, name: &str) -> Option<TransitionId> {
        self.net
            .transitions()
            .find(|(_, t)| t.name == name)
            .map(|(id, _)| id)
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::n1;
    use super::*;

    fn names(net: &AcceptingPetriNet, ts: &[TransitionId]) -> Vec<String> {
        ts.iter().map(|&t| net.net().transition(t).name.clone()).collect()
    }

    #[test]
    fn enabled_in_initial_marking_of_n1() {
        let n = n1();
        assert_eq!(names(&n, &n.enabled(n.initial())), ["A", "tau1"]);
    }

    #[test]
    fn empty_marking_enables_nothing() {
        let n = n1();
        assert!(n.enabled(&Marking::empty(5)).is_empty());
    }

    #[test]
    fn transition_without_inputs_always_enabled() {
        let mut net = LabeledPetriNet::new();
        let p = net.add_place("p");
        let t = net.add_transition("gen", Some(Activity::new("g")));
        net.add_output(t, p);
        let m = Marking::empty(1);
        assert_eq!(net.enabled(&m), vec![t]);
        assert_eq!(net.fire(&m, t).unwrap().get(p), 1);
    }

    #[test]
    fn firing_tau1_moves_token() {
        let n = n1();
        let tau1 = n.transition_named("tau1").unwrap();
        let m = n.fire(n.initial(), tau1).unwrap();
        assert_eq!(m, Marking::with_tokens(5, &[PlaceId(1)]));
    }

    #[test]
    fn self_loop_keeps_count() {
        let mut net = LabeledPetriNet::new();
        let p = net.add_place("p");
        let t = net.add_transition("t", None);
        net.add_input(t, p);
        net.add_output(t, p);
        let m = Marking::with_tokens(1, &[p, p]);
        assert_eq!(net.fire(&m, t).unwrap().get(p), 2);
    }

    #[test]
    fn firing_disabled_transition_fails() {
        let n = n1();
        let c = n.transition_named("C").unwrap();
        assert!(matches!(n.fire(n.initial(), c), Err(Error::NotEnabled(_))));
    }

    #[test]
    fn duplicate_arcs_collapse() {
        let mut net = LabeledPetriNet::new();
        let p = net.add_place("p");
        let t = net.add_transition("t", None);
        net.add_input(t, p);
        net.add_input(t, p);
        assert_eq!(net.arcs().len(), 1);
    }

    #[test]
    fn marking_size_is_validated() {
        let mut net = LabeledPetriNet::new();
        net.add_place("p");
        assert!(AcceptingPetriNet::new(net, Marking::empty(2), Marking::empty(1)).is_err());
    }
}
