//! Lifting low-level traces to high-level activities through alignments.

use rayon::prelude::*;

use super::{AbstractionModel, TagRole};
use crate::eventlog::{Activity, Event, EventLog, Lifecycle, Trace};
use crate::petrinet::{align_word, AlignOptions, Alignment, MoveKind};
use crate::Result;

#[derive(Clone, Debug)]
pub struct AbstractionOptions {
    /// Keep log moves on activities outside every pattern.
    pub keep_foreign: bool,
    /// Emit high-level events for instances that needed visible model moves
    /// (skipped pattern events). By default such instances are not trusted:
    /// their matched events stay in the trace as low-level events.
    pub accept_partial_instances: bool,
    pub max_states: usize,
}

impl Default for AbstractionOptions {
    fn default() -> Self {
        AbstractionOptions {
            keep_foreign: false,
            accept_partial_instances: false,
            max_states: AlignOptions::default().max_states,
        }
    }
}

/// One run of a pattern inside an alignment. Indices refer to the complete
/// events of the trace.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PatternInstance {
    pub pattern: usize,
    /// Events matched synchronously, in order.
    pub synchronous: Vec<usize>,
    /// Event matched by a start-role transition.
    pub start: Option<usize>,
    /// Event matched by a complete-role transition.
    pub complete: Option<usize>,
    /// Pattern transitions fired without a matching event.
    pub skipped: usize,
}

impl PatternInstance {
    /// Where the high-level completion goes: the complete-role event, or the
    /// last matched event when the completing transition is silent.
    pub fn anchor(&self) -> Option<usize> {
        self.complete.or_else(|| self.synchronous.last().copied())
    }
}

fn complete_events(trace: &Trace) -> Vec<&Event> {
    trace.events.iter().filter(|e| e.is_complete()).collect()
}

/// Optimal alignment of the trace's complete events against the abstraction
/// model. Among alignments of equal cost, the one with the fewest log moves
/// taken while a pattern instance is running is chosen.
pub fn align(trace: &Trace, model: &AbstractionModel, options: &AbstractionOptions) -> Result<Alignment> {
    let word: Vec<Activity> = complete_events(trace).iter().map(|e| e.activity.clone()).collect();
    let opts = AlignOptions {
        busy_places: model.pattern_places().to_vec(),
        max_states: options.max_states,
    };
    align_word(model.net(), &word, &opts)
}

/// Splits an alignment into pattern instances, ordered by completion.
pub fn pattern_instances(alignment: &Alignment, model: &AbstractionModel) -> Vec<PatternInstance> {
    let mut open: Vec<Option<PatternInstance>> = vec![None; model.patterns().len()];
    let mut done = Vec::new();
    for mv in &alignment.moves {
        let Some(tag) = mv.transition.and_then(|t| model.tag(t)) else {
            continue;
        };
        match tag.role {
            TagRole::Enter => {
                open[tag.pattern] = Some(PatternInstance { pattern: tag.pattern, ..Default::default() });
            }
            TagRole::Exit => {
                if let Some(instance) = open[tag.pattern].take() {
                    done.push(instance);
                }
            }
            TagRole::Body(role) => {
                let Some(instance) = open[tag.pattern].as_mut() else {
                    continue;
                };
                match (mv.kind, mv.log_index) {
                    (MoveKind::Synchronous, Some(i)) => {
                        instance.synchronous.push(i);
                        match role {
                            Some(Lifecycle::Start) => instance.start = instance.start.or(Some(i)),
                            Some(Lifecycle::Complete) => instance.complete = Some(i),
                            None => {}
                        }
                    }
                    (MoveKind::ModelMoveVisible, _) => instance.skipped += 1,
                    _ => {}
                }
            }
        }
    }
    done
}

pub fn abstract_trace(trace: &Trace, model: &AbstractionModel, keep_foreign: bool) -> Result<Trace> {
    abstract_trace_with(trace, model, &AbstractionOptions { keep_foreign, ..Default::default() })
}

/// Replaces each pattern instance by a high-level complete event at its
/// completing event (and a start event at its start-role event, if that was
/// matched). Unmatched pattern events are kept; unmatched foreign events
/// only with `keep_foreign`. Start-lifecycle input events are dropped.
pub fn abstract_trace_with(trace: &Trace, model: &AbstractionModel, options: &AbstractionOptions) -> Result<Trace> {
    let events = complete_events(trace);
    let alignment = align(trace, model, options)?;
    let alphabet = model.alphabet();

    // (position, order within position, event)
    let mut out: Vec<(usize, u8, Event)> = Vec::new();
    for mv in &alignment.moves {
        if let (MoveKind::LogMove, Some(i)) = (mv.kind, mv.log_index) {
            if options.keep_foreign || alphabet.contains(&events[i].activity) {
                out.push((i, 0, events[i].clone()));
            }
        }
    }
    for instance in pattern_instances(&alignment, model) {
        let Some(anchor) = instance.anchor() else {
            continue;
        };
        if instance.skipped > 0 && !options.accept_partial_instances {
            out.extend(instance.synchronous.iter().map(|&i| (i, 0, events[i].clone())));
            continue;
        }
        let name = model.patterns()[instance.pattern].name().clone();
        let high = |i: usize, lifecycle: Lifecycle| {
            let mut e = Event::new(name.clone()).with_lifecycle(lifecycle);
            e.timestamp = events[i].timestamp;
            e
        };
        if let Some(s) = instance.start {
            out.push((s, 1, high(s, Lifecycle::Start)));
        }
        out.push((anchor, 2, high(anchor, Lifecycle::Complete)));
    }
    out.sort_by_key(|(i, order, _)| (*i, *order));
    Ok(Trace::new(trace.case_id.clone(), out.into_iter().map(|(_, _, e)| e).collect()))
}

pub fn abstract_log(log: &EventLog, model: &AbstractionModel, keep_foreign: bool) -> Result<EventLog> {
    abstract_log_with(log, model, &AbstractionOptions { keep_foreign, ..Default::default() })
}

/// Abstracts every trace; identical traces are aligned once.
pub fn abstract_log_with(log: &EventLog, model: &AbstractionModel, options: &AbstractionOptions) -> Result<EventLog> {
    let variants = crate::eventlog::variants(log.traces.iter().map(|t| {
        complete_events(t).iter().map(|e| e.activity.clone()).collect()
    }));
    // Events may differ in timestamps and attributes, so only the move
    // structure is shared; every trace is rebuilt from its own events.
    let shared: Vec<Trace> = variants
        .par_iter()
        .map(|(labels, _)| {
            let stub = Trace::new(String::new(), labels.iter().map(|a| Event::new(a.clone())).collect());
            abstract_trace_with(&stub, model, options)
        })
        .collect::<Result<_>>()?;
    let index: std::collections::HashMap<&[Activity], usize> =
        variants.iter().enumerate().map(|(i, (l, _))| (l.as_slice(), i)).collect();

    let traces = log
        .traces
        .par_iter()
        .map(|t| {
            let labels: Vec<Activity> = complete_events(t).iter().map(|e| e.activity.clone()).collect();
            let template = &shared[index[labels.as_slice()]];
            if t.events.iter().all(|e| e.timestamp.is_none() && e.attributes.is_empty() && e.lifecycle.is_none()) {
                let mut out = template.clone();
                out.case_id = t.case_id.clone();
                Ok(out)
            } else {
                abstract_trace_with(t, model, options)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EventLog::new(traces))
}

#[cfg(test)]
mod tests {
    use super::super::tests::tree_pattern;
    use super::super::{compose, ActivityPattern, Composition};
    use super::*;
    use crate::petrinet::fixtures::n1;

    fn sigma() -> Trace {
        Trace::from_labels("s", ["A", "B", "X", "B", "C", "C", "A", "B", "C", "B", "B", "X", "A", "C"])
    }

    fn h_model() -> AbstractionModel {
        compose(vec![ActivityPattern::from_net("H", n1()).unwrap()], Composition::Interleaving).unwrap()
    }

    fn completes(t: &Trace) -> Vec<&str> {
        t.events.iter().filter(|e| e.is_complete()).map(|e| e.activity.label()).collect()
    }

    #[test]
    fn worked_example() {
        let out = abstract_trace(&sigma(), &h_model(), false).unwrap();
        assert_eq!(completes(&out), ["A", "H", "C", "A", "H", "B", "B", "H"]);
    }

    #[test]
    fn worked_example_has_three_instances() {
        let m = h_model();
        let a = align(&sigma(), &m, &AbstractionOptions::default()).unwrap();
        let full: Vec<PatternInstance> = pattern_instances(&a, &m).into_iter().filter(|i| i.skipped == 0).collect();
        assert_eq!(full.len(), 3);
        assert_eq!(full.iter().map(|i| i.anchor().unwrap()).collect::<Vec<_>>(), [4, 8, 13]);
    }

    #[test]
    fn worked_example_keeping_foreign_events() {
        let out = abstract_trace(&sigma(), &h_model(), true).unwrap();
        assert_eq!(completes(&out), ["A", "X", "H", "C", "A", "H", "B", "B", "X", "H"]);
    }

    #[test]
    fn start_event_emitted_for_matched_start_transition() {
        let out = abstract_trace(&Trace::from_labels("t", ["A", "C"]), &h_model(), false).unwrap();
        let all: Vec<(String, Option<Lifecycle>)> =
            out.events.iter().map(|e| (e.activity.to_string(), e.lifecycle)).collect();
        assert_eq!(
            all,
            [("H".to_string(), Some(Lifecycle::Start)), ("H".to_string(), Some(Lifecycle::Complete))]
        );
    }

    #[test]
    fn fitting_trace_aligns_at_zero_cost() {
        let m = h_model();
        let a = align(&Trace::from_labels("t", ["B", "B", "C", "A", "C"]), &m, &AbstractionOptions::default()).unwrap();
        assert_eq!(a.cost(), 0);
        let out = abstract_trace(&Trace::from_labels("t", ["B", "C"]), &m, false).unwrap();
        assert_eq!(completes(&out), ["H"]);
    }

    #[test]
    fn foreign_event_is_one_log_move() {
        let m = compose(vec![tree_pattern("P", "seq(a,b)")], Composition::Interleaving).unwrap();
        let a = align(&Trace::from_labels("t", ["x"]), &m, &AbstractionOptions::default()).unwrap();
        assert_eq!(a.cost(), 1);
        assert_eq!(a.moves.iter().filter(|mv| mv.kind == MoveKind::LogMove).count(), 1);
        assert!(abstract_trace(&Trace::from_labels("t", ["x"]), &m, false).unwrap().events.is_empty());
    }

    #[test]
    fn partial_instances_can_be_accepted() {
        let m = h_model();
        let t = Trace::from_labels("t", ["B", "B"]);
        assert_eq!(completes(&abstract_trace(&t, &m, false).unwrap()), ["B", "B"]);
        let opts = AbstractionOptions { accept_partial_instances: true, ..Default::default() };
        assert_eq!(completes(&abstract_trace_with(&t, &m, &opts).unwrap()), ["H"]);
    }

    #[test]
    fn log_abstraction_preserves_multiplicity() {
        let m = h_model();
        let log = EventLog::new(vec![sigma(), sigma()]);
        let out = abstract_log(&log, &m, false).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out.traces[0].events, out.traces[1].events);
        assert!(abstract_log(&EventLog::default(), &m, false).unwrap().is_empty());
    }

    #[test]
    fn parallel_instances_interleave() {
        let m = compose(vec![tree_pattern("P", "seq(a,b)"), tree_pattern("Q", "seq(c,d)")], Composition::Parallel).unwrap();
        let out = abstract_trace(&Trace::from_labels("t", ["a", "c", "b", "d"]), &m, false).unwrap();
        assert_eq!(completes(&out), ["P", "Q"]);
        let m = compose(vec![tree_pattern("P", "seq(a,b)"), tree_pattern("Q", "seq(c,d)")], Composition::Interleaving).unwrap();
        let out = abstract_trace(&Trace::from_labels("t", ["a", "c", "b", "d"]), &m, false).unwrap();
        assert_eq!(completes(&out).len(), 3);
    }

    #[test]
    fn timestamps_carry_over() {
        use chrono::DateTime;
        let ts = DateTime::parse_from_rfc3339("2020-01-01T10:00:00+00:00").unwrap();
        let t = Trace::new("t", vec![Event::new("A"), Event::new("C").with_timestamp(ts)]);
        let out = abstract_trace(&t, &h_model(), false).unwrap();
        assert_eq!(out.events.last().unwrap().timestamp, Some(ts));
    }
}
