//! Activity patterns and the abstraction model built from them.
//!
//! A pattern is a small accepting net standing for one high-level activity.
//! Transitions leaving the initial places mark the start of an instance,
//! transitions entering the final places mark its completion. Patterns are
//! composed either so that instances never overlap (interleaving) or so that
//! instances of different patterns may run concurrently (parallel).

mod lift;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::eventlog::{Activity, Alphabet, Lifecycle};
use crate::lpm::LocalProcessModel;
use crate::petrinet::pnml::{write_pnml_annotated, Annotations};
use crate::petrinet::{AcceptingPetriNet, LabeledPetriNet, Marking, PlaceId, TransitionId};
use crate::{Error, Result};

pub use lift::{
    abstract_log, abstract_log_with, abstract_trace, abstract_trace_with, align, pattern_instances, AbstractionOptions,
    PatternInstance,
};

/// θ: lifecycle role of the source and sink transitions of a pattern net.
pub type LifecycleMap = BTreeMap<TransitionId, Lifecycle>;

/// Transitions consuming from an initially marked place map to start,
/// transitions producing into a finally marked place map to complete. A
/// transition in both roles maps to complete.
pub fn derive_lifecycle(net: &AcceptingPetriNet) -> Result<LifecycleMap> {
    let pn = net.net();
    let initial: Vec<PlaceId> = net.initial().support().map(|(p, _)| p).collect();
    let fin: Vec<PlaceId> = net.final_marking().support().map(|(p, _)| p).collect();
    let mut theta = LifecycleMap::new();
    for (t, tr) in pn.transitions() {
        if tr.outputs().iter().any(|p| fin.contains(p)) {
            theta.insert(t, Lifecycle::Complete);
        } else if tr.inputs().iter().any(|p| initial.contains(p)) {
            theta.insert(t, Lifecycle::Start);
        }
    }
    if !theta.values().any(|&l| l == Lifecycle::Complete) {
        return Err(Error::InvalidPattern {
            name: String::new(),
            reason: "no transition produces into a final place".into(),
        });
    }
    Ok(theta)
}

#[derive(Clone, Debug)]
pub struct ActivityPattern {
    name: Activity,
    net: AcceptingPetriNet,
    lifecycle: LifecycleMap,
    lpm: Option<LocalProcessModel>,
}

impl ActivityPattern {
    /// Pattern over an arbitrary net. The net must be 1-safe in its initial
    /// and final markings.
    pub fn from_net(name: impl Into<Activity>, net: AcceptingPetriNet) -> Result<Self> {
        let name = name.into();
        let invalid = |reason: &str| Error::InvalidPattern { name: name.to_string(), reason: reason.into() };
        for m in [net.initial(), net.final_marking()] {
            if m.support().any(|(_, n)| n > 1) {
                return Err(invalid("initial and final markings must hold at most one token per place"));
            }
            if m.total() == 0 {
                return Err(invalid("initial and final markings must be non-empty"));
            }
        }
        let lifecycle = derive_lifecycle(&net).map_err(|e| match e {
            Error::InvalidPattern { reason, .. } => invalid(&reason),
            other => other,
        })?;
        Ok(ActivityPattern { name, net, lifecycle, lpm: None })
    }

    pub fn from_lpm(name: impl Into<Activity>, lpm: LocalProcessModel) -> Result<Self> {
        let mut pattern = Self::from_net(name, lpm.net().clone())?;
        pattern.lpm = Some(lpm);
        Ok(pattern)
    }

    /// Patterns named `LPM_<rank>` after each model's rank.
    pub fn from_ranked(models: &[LocalProcessModel]) -> Result<Vec<Self>> {
        models
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let rank = if m.rank() == 0 { i + 1 } else { m.rank() };
                Self::from_lpm(format!("LPM_{rank}"), m.clone())
            })
            .collect()
    }

    pub fn name(&self) -> &Activity {
        &self.name
    }

    pub fn renamed(mut self, name: impl Into<Activity>) -> Self {
        self.name = name.into();
        self
    }

    pub fn net(&self) -> &AcceptingPetriNet {
        &self.net
    }

    pub fn lifecycle(&self) -> &LifecycleMap {
        &self.lifecycle
    }

    pub fn lpm(&self) -> Option<&LocalProcessModel> {
        self.lpm.as_ref()
    }

    pub fn alphabet(&self) -> Alphabet {
        self.net.net().visible_labels()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Composition {
    /// At most one pattern instance at a time.
    #[default]
    Interleaving,
    /// Instances of different patterns may overlap; instances of the same
    /// pattern do not.
    Parallel,
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Composition::Interleaving => "interleaving",
            Composition::Parallel => "parallel",
        })
    }
}

impl FromStr for Composition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interleaving" => Ok(Composition::Interleaving),
            "parallel" => Ok(Composition::Parallel),
            other => Err(Error::Format(format!("unknown composition {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TagRole {
    /// Silent transition that starts an instance.
    Enter,
    /// Silent transition that ends an instance.
    Exit,
    /// A transition of the pattern net, with its θ role if any.
    Body(Option<Lifecycle>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InstanceTag {
    /// Index into the model's patterns.
    pub pattern: usize,
    pub role: TagRole,
}

#[derive(Clone, Debug)]
pub struct AbstractionModel {
    net: AcceptingPetriNet,
    patterns: Vec<ActivityPattern>,
    composition: Composition,
    tags: BTreeMap<TransitionId, InstanceTag>,
    pattern_places: Vec<PlaceId>,
}

/// Composes patterns into one accepting net. Each pattern is wrapped in a
/// loop through a hub place: a silent enter transition moves the hub token
/// into the pattern's initial places, a silent exit transition returns it
/// from the final places. Interleaving shares one hub among all patterns;
/// parallel gives each pattern its own hub, forked at the start and joined
/// at the end.
pub fn compose(patterns: Vec<ActivityPattern>, composition: Composition) -> Result<AbstractionModel> {
    if patterns.is_empty() {
        return Err(Error::InvalidPattern { name: String::new(), reason: "at least one pattern is required".into() });
    }
    for (i, p) in patterns.iter().enumerate() {
        if patterns[..i].iter().any(|q| q.name == p.name) {
            return Err(Error::DuplicatePattern(p.name.to_string()));
        }
    }

    let mut net = LabeledPetriNet::new();
    let mut tags = BTreeMap::new();
    let mut pattern_places = Vec::new();
    let (start, end, hubs) = match composition {
        Composition::Interleaving => {
            let hub = net.add_place("hub");
            (hub, hub, vec![hub; patterns.len()])
        }
        Composition::Parallel => {
            let start = net.add_place("start");
            let end = net.add_place("end");
            let hubs: Vec<PlaceId> = patterns.iter().map(|p| net.add_place(format!("hub_{}", p.name))).collect();
            let split = net.add_transition("split", None);
            let join = net.add_transition("join", None);
            net.add_input(split, start);
            net.add_output(join, end);
            for &h in &hubs {
                net.add_output(split, h);
                net.add_input(join, h);
            }
            (start, end, hubs)
        }
    };

    for (i, pattern) in patterns.iter().enumerate() {
        let (places, transitions) = net.embed(pattern.net.net(), &format!("{}/", pattern.name));
        pattern_places.extend(places.iter().copied());
        for (old, &new) in transitions.iter().enumerate() {
            let role = TagRole::Body(pattern.lifecycle.get(&TransitionId(old)).copied());
            tags.insert(new, InstanceTag { pattern: i, role });
        }
        let enter = net.add_transition(format!("{}/enter", pattern.name), None);
        net.add_input(enter, hubs[i]);
        for (p, _) in pattern.net.initial().support() {
            net.add_output(enter, places[p.0]);
        }
        let exit = net.add_transition(format!("{}/exit", pattern.name), None);
        for (p, _) in pattern.net.final_marking().support() {
            net.add_input(exit, places[p.0]);
        }
        net.add_output(exit, hubs[i]);
        tags.insert(enter, InstanceTag { pattern: i, role: TagRole::Enter });
        tags.insert(exit, InstanceTag { pattern: i, role: TagRole::Exit });
    }

    let n = net.place_count();
    let net = AcceptingPetriNet::new(net, Marking::with_tokens(n, &[start]), Marking::with_tokens(n, &[end]))?;
    Ok(AbstractionModel { net, patterns, composition, tags, pattern_places })
}

impl AbstractionModel {
    pub fn net(&self) -> &AcceptingPetriNet {
        &self.net
    }

    pub fn patterns(&self) -> &[ActivityPattern] {
        &self.patterns
    }

    pub fn composition(&self) -> Composition {
        self.composition
    }

    pub fn tag(&self, t: TransitionId) -> Option<InstanceTag> {
        self.tags.get(&t).copied()
    }

    pub fn instance_tags(&self) -> &BTreeMap<TransitionId, InstanceTag> {
        &self.tags
    }

    /// Places belonging to embedded pattern nets.
    pub fn pattern_places(&self) -> &[PlaceId] {
        &self.pattern_places
    }

    /// Union of the pattern alphabets.
    pub fn alphabet(&self) -> Alphabet {
        self.patterns.iter().flat_map(|p| p.alphabet()).collect()
    }

    pub fn pattern_named(&self, name: &Activity) -> Option<&ActivityPattern> {
        self.patterns.iter().find(|p| &p.name == name)
    }

    /// PNML with each tagged transition annotated by its pattern and role.
    pub fn to_pnml(&self, name: &str) -> String {
        let mut annotations = Annotations::new();
        for (&t, tag) in &self.tags {
            let role = match tag.role {
                TagRole::Enter => "enter",
                TagRole::Exit => "exit",
                TagRole::Body(Some(l)) => l.as_str(),
                TagRole::Body(None) => "body",
            };
            annotations.insert(
                t,
                vec![
                    ("pattern".to_string(), self.patterns[tag.pattern].name.to_string()),
                    ("role".to_string(), role.to_string()),
                ],
            );
        }
        write_pnml_annotated(&self.net, name, &annotations)
    }
}
