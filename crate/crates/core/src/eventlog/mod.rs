//! Event, trace and log data model.
//!
//! An [`EventLog`] is a multiset of [`Trace`]s: identical traces are stored
//! separately, so multiplicities are simply repeated entries. Activities are
//! compared by their full label.

mod csv;
mod xes;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use chrono::{DateTime, FixedOffset};

pub use self::csv::{parse_csv, CsvColumns};
pub use self::xes::{parse_xes, write_xes, write_xes_to};

/// A process activity, identified by its label.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Activity(Arc<str>);

impl Activity {
    /// Creates an activity. Panics on an empty label; parsers reject those
    /// before constructing activities.
    pub fn new(label: impl AsRef<str>) -> Self {
        let label = label.as_ref();
        assert!(!label.is_empty(), "activity labels must be non-empty");
        Activity(Arc::from(label))
    }

    pub fn label(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Activity {
    fn from(label: &str) -> Self {
        Activity::new(label)
    }
}

impl From<String> for Activity {
    fn from(label: String) -> Self {
        Activity::new(label)
    }
}

impl fmt::Display for Activity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Activity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

/// Set of activities, ordered by label.
pub type Alphabet = BTreeSet<Activity>;

/// Builds an alphabet from labels.
pub fn alphabet<I, S>(labels: I) -> Alphabet
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    labels.into_iter().map(Activity::new).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Lifecycle {
    Start,
    Complete,
}

impl Lifecycle {
    pub fn as_str(self) -> &'static str {
        match self {
            Lifecycle::Start => "start",
            Lifecycle::Complete => "complete",
        }
    }

    /// Maps an XES `lifecycle:transition` value; other standard values
    /// (`assign`, `suspend`, ...) are not modelled.
    pub fn parse(value: &str) -> Option<Lifecycle> {
        match value.to_ascii_lowercase().as_str() {
            "start" => Some(Lifecycle::Start),
            "complete" => Some(Lifecycle::Complete),
            _ => None,
        }
    }
}

impl fmt::Display for Lifecycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub activity: Activity,
    pub lifecycle: Option<Lifecycle>,
    pub timestamp: Option<DateTime<FixedOffset>>,
    pub attributes: BTreeMap<String, String>,
}

impl Event {
    pub fn new(activity: impl Into<Activity>) -> Self {
        Event {
            activity: activity.into(),
            lifecycle: None,
            timestamp: None,
            attributes: BTreeMap::new(),
        }
    }

    pub fn with_lifecycle(mut self, lifecycle: Lifecycle) -> Self {
        self.lifecycle = Some(lifecycle);
        self
    }

    pub fn with_timestamp(mut self, timestamp: DateTime<FixedOffset>) -> Self {
        self.timestamp = Some(timestamp);
        self
    }

    /// Events without a lifecycle attribute count as complete.
    pub fn is_complete(&self) -> bool {
        self.lifecycle != Some(Lifecycle::Start)
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Trace {
    pub case_id: String,
    pub events: Vec<Event>,
}

impl Trace {
    pub fn new(case_id: impl Into<String>, events: Vec<Event>) -> Self {
        Trace {
            case_id: case_id.into(),
            events,
        }
    }

    /// Trace of complete events with the given labels.
    pub fn from_labels<I, S>(case_id: impl Into<String>, labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Trace::new(
            case_id,
            labels.into_iter().map(|l| Event::new(Activity::new(l))).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn activities(&self) -> impl Iterator<Item = &Activity> + '_ {
        self.events.iter().map(|e| &e.activity)
    }

    /// Activity sequence restricted to complete events.
    pub fn complete_activities(&self) -> Vec<Activity> {
        self.events
            .iter()
            .filter(|e| e.is_complete())
            .map(|e| e.activity.clone())
            .collect()
    }
}

/// Restricts a trace to the events whose activity is in `alphabet`,
/// preserving order.
pub fn project(trace: &Trace, alphabet: &Alphabet) -> Trace {
    Trace {
        case_id: trace.case_id.clone(),
        events: trace
            .events
            .iter()
            .filter(|e| alphabet.contains(&e.activity))
            .cloned()
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct EventLog {
    pub traces: Vec<Trace>,
}

impl EventLog {
    pub fn new(traces: Vec<Trace>) -> Self {
        EventLog { traces }
    }

    /// Log of complete-event traces given as label sequences; case ids are
    /// the 1-based trace positions.
    pub fn from_label_traces<T, I, S>(traces: T) -> Self
    where
        T: IntoIterator<Item = I>,
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        EventLog::new(
            traces
                .into_iter()
                .enumerate()
                .map(|(i, labels)| Trace::from_labels((i + 1).to_string(), labels))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn event_count(&self) -> usize {
        self.traces.iter().map(Trace::len).sum()
    }

    pub fn alphabet(&self) -> Alphabet {
        self.traces
            .iter()
            .flat_map(|t| t.activities().cloned())
            .collect()
    }

    pub fn activity_counts(&self) -> BTreeMap<Activity, usize> {
        let mut counts = BTreeMap::new();
        for activity in self.traces.iter().flat_map(Trace::activities) {
            *counts.entry(activity.clone()).or_insert(0) += 1;
        }
        counts
    }

    /// Distinct complete-event activity sequences with their multiplicity,
    /// in order of first occurrence.
    pub fn complete_variants(&self) -> Vec<(Vec<Activity>, usize)> {
        variants(self.traces.iter().map(Trace::complete_activities))
    }
}

/// Groups sequences into (sequence, multiplicity) pairs, keeping first
/// occurrence order.
pub fn variants<I>(sequences: I) -> Vec<(Vec<Activity>, usize)>
where
    I: IntoIterator<Item = Vec<Activity>>,
{
    let mut index: std::collections::HashMap<Vec<Activity>, usize> = Default::default();
    let mut out: Vec<(Vec<Activity>, usize)> = Vec::new();
    for seq in sequences {
        match index.get(&seq) {
            Some(&i) => out[i].1 += 1,
            None => {
                index.insert(seq.clone(), out.len());
                out.push((seq, 1));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(trace: &Trace) -> Vec<&str> {
        trace.activities().map(Activity::label).collect()
    }

    #[test]
    fn projection_of_worked_example() {
        let sigma = Trace::from_labels(
            "s",
            ["A", "B", "X", "B", "C", "C", "A", "B", "C", "B", "B", "X", "A", "C"],
        );
        let projected = project(&sigma, &alphabet(["A", "B", "C"]));
        assert_eq!(
            labels(&projected),
            ["A", "B", "B", "C", "C", "A", "B", "C", "B", "B", "A", "C"]
        );
    }

    #[test]
    fn projection_on_empty_alphabet_is_empty() {
        let t = Trace::from_labels("1", ["a", "b"]);
        assert!(project(&t, &Alphabet::new()).is_empty());
    }

    #[test]
    fn projection_on_superset_is_identity() {
        let t = Trace::from_labels("1", ["a", "b", "a"]);
        assert_eq!(project(&t, &alphabet(["a", "b", "z"])), t);
    }

    #[test]
    fn multiset_semantics() {
        let log = EventLog::from_label_traces([
            vec!["a", "b", "c"],
            vec!["a", "b", "c"],
            vec!["b", "a", "c"],
            vec!["b", "a", "c"],
            vec!["b", "a", "c"],
        ]);
        assert_eq!(log.len(), 5);
        let variants = log.complete_variants();
        assert_eq!(variants.len(), 2);
        assert_eq!(variants[0].1, 2);
        assert_eq!(variants[1].1, 3);
        assert_eq!(log.alphabet(), alphabet(["a", "b", "c"]));
    }

    #[test]
    fn missing_lifecycle_counts_as_complete() {
        assert!(Event::new("a").is_complete());
        assert!(!Event::new("a").with_lifecycle(Lifecycle::Start).is_complete());
    }

    #[test]
    #[should_panic]
    fn empty_label_rejected() {
        let _ = Activity::new("");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn trace_strategy() -> impl Strategy<Value = Trace> {
            proptest::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]), 0..12)
                .prop_map(|ls| Trace::from_labels("p", ls))
        }

        proptest! {
            #[test]
            fn project_is_idempotent_and_shrinking(
                t in trace_strategy(),
                keep in proptest::collection::btree_set(prop::sample::select(vec!["a", "b", "c", "d"]), 0..4),
            ) {
                let sigma = alphabet(keep);
                let once = project(&t, &sigma);
                prop_assert!(once.len() <= t.len());
                prop_assert_eq!(project(&once, &sigma), once.clone());
                prop_assert!(once.activities().all(|a| sigma.contains(a)));
            }
        }
    }
}
