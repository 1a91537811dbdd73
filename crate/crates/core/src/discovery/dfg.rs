use std::collections::{BTreeMap, BTreeSet};

use crate::eventlog::{Activity, Alphabet, EventLog};

/// Directly-follows graph with activity, start and end frequencies.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DirectlyFollowsGraph {
    pub activities: BTreeMap<Activity, usize>,
    pub edges: BTreeMap<(Activity, Activity), usize>,
    pub starts: BTreeMap<Activity, usize>,
    pub ends: BTreeMap<Activity, usize>,
}

/// DFG of the complete events of `log`, filtered with threshold `noise`.
pub fn build_dfg(log: &EventLog, noise: f64) -> DirectlyFollowsGraph {
    DirectlyFollowsGraph::from_variants(&log.complete_variants()).filtered(noise)
}

impl DirectlyFollowsGraph {
    pub fn from_variants(traces: &[(Vec<Activity>, usize)]) -> Self {
        let mut g = DirectlyFollowsGraph::default();
        for (trace, count) in traces {
            let count = *count;
            if count == 0 {
                continue;
            }
            for a in trace {
                *g.activities.entry(a.clone()).or_insert(0) += count;
            }
            if let (Some(first), Some(last)) = (trace.first(), trace.last()) {
                *g.starts.entry(first.clone()).or_insert(0) += count;
                *g.ends.entry(last.clone()).or_insert(0) += count;
            }
            for pair in trace.windows(2) {
                *g.edges.entry((pair[0].clone(), pair[1].clone())).or_insert(0) += count;
            }
        }
        g
    }

    /// Drops every edge whose count is below `noise` times the strongest
    /// outgoing edge of its source, and every start (end) activity whose
    /// count is below `noise` times the most frequent start (end).
    pub fn filtered(&self, noise: f64) -> Self {
        let mut strongest: BTreeMap<&Activity, usize> = BTreeMap::new();
        for ((a, _), &n) in &self.edges {
            let s = strongest.entry(a).or_insert(0);
            *s = (*s).max(n);
        }
        let keep = |n: usize, max: usize| (n as f64) >= noise * max as f64;
        let edges = self
            .edges
            .iter()
            .filter(|((a, _), &n)| keep(n, strongest[a]))
            .map(|(k, &n)| (k.clone(), n))
            .collect();
        let filter_map = |m: &BTreeMap<Activity, usize>| {
            let max = m.values().copied().max().unwrap_or(0);
            m.iter()
                .filter(|(_, &n)| keep(n, max))
                .map(|(a, &n)| (a.clone(), n))
                .collect()
        };
        DirectlyFollowsGraph {
            activities: self.activities.clone(),
            edges,
            starts: filter_map(&self.starts),
            ends: filter_map(&self.ends),
        }
    }

    pub fn alphabet(&self) -> Alphabet {
        self.activities.keys().cloned().collect()
    }

    pub fn has_edge(&self, a: &Activity, b: &Activity) -> bool {
        self.edges.contains_key(&(a.clone(), b.clone()))
    }

    pub fn successors(&self, a: &Activity) -> BTreeSet<Activity> {
        self.edges
            .keys()
            .filter(|(x, _)| x == a)
            .map(|(_, b)| b.clone())
            .collect()
    }

    pub fn start_set(&self) -> Alphabet {
        self.starts.keys().cloned().collect()
    }

    pub fn end_set(&self) -> Alphabet {
        self.ends.keys().cloned().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(s: &str) -> Activity {
        Activity::new(s)
    }

    fn log(traces: &[(&[&str], usize)]) -> EventLog {
        EventLog::from_label_traces(
            traces
                .iter()
                .flat_map(|(labels, n)| std::iter::repeat_n(labels.to_vec(), *n)),
        )
    }

    #[test]
    fn example_log_counts() {
        let g = build_dfg(&log(&[(&["a", "b", "c"], 2), (&["b", "a", "c"], 3)]), 0.0);
        let edges: Vec<(String, String, usize)> = g
            .edges
            .iter()
            .map(|((x, y), &n)| (x.to_string(), y.to_string(), n))
            .collect();
        assert_eq!(
            edges,
            [
                ("a".into(), "b".into(), 2),
                ("a".into(), "c".into(), 3),
                ("b".into(), "a".into(), 3),
                ("b".into(), "c".into(), 2)
            ]
        );
        assert_eq!(g.starts, [(a("a"), 2), (a("b"), 3)].into_iter().collect());
        assert_eq!(g.ends, [(a("c"), 5)].into_iter().collect());
        assert_eq!(g.successors(&a("a")), [a("b"), a("c")].into_iter().collect());
    }

    #[test]
    fn empty_log_gives_empty_graph() {
        assert_eq!(build_dfg(&EventLog::default(), 0.2), DirectlyFollowsGraph::default());
    }

    #[test]
    fn weak_edges_are_filtered() {
        let mut traces = vec![(&["a", "b"][..], 10)];
        traces.push((&["a", "c"][..], 1));
        let g = build_dfg(&log(&traces), 0.5);
        assert!(g.has_edge(&a("a"), &a("b")));
        assert!(!g.has_edge(&a("a"), &a("c")));
        assert_eq!(g.end_set(), [a("b")].into_iter().collect());
        assert_eq!(g.activities[&a("c")], 1);
    }

    #[test]
    fn start_and_end_totals_match_trace_count() {
        let g = build_dfg(&log(&[(&["a", "b"], 2), (&["c"], 3), (&[], 4)]), 0.0);
        assert_eq!(g.starts.values().sum::<usize>(), 5);
        assert_eq!(g.ends.values().sum::<usize>(), 5);
    }

    #[test]
    fn start_events_are_ignored() {
        use crate::eventlog::{Event, Lifecycle, Trace};
        let t = Trace::new("1", vec![Event::new("a").with_lifecycle(Lifecycle::Start), Event::new("a"), Event::new("b")]);
        let g = build_dfg(&EventLog::new(vec![t]), 0.0);
        assert_eq!(g.edges.len(), 1);
        assert_eq!(g.activities[&a("a")], 1);
    }
}
