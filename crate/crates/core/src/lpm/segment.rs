use std::ops::Range;

use super::LocalProcessModel;
use crate::eventlog::{Activity, Trace};
use crate::petrinet::ReplayAutomaton;

/// Which side of the split a segment belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SegmentKind {
    /// Events not explained by the model (λ).
    Lambda,
    /// A complete run of the model (γ).
    Gamma,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub kind: SegmentKind,
    /// Event range into the projected trace.
    pub range: Range<usize>,
}

/// Split of a projected trace into alternating non-fitting and fitting
/// segments, λ1 γ1 λ2 … γn λn+1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segmentation {
    /// The trace projected on the model's activities.
    pub projected: Vec<Activity>,
    /// For each projected event, its index in the original trace.
    pub positions: Vec<usize>,
    /// The γ ranges, in order.
    pub gammas: Vec<Range<usize>>,
}

impl Segmentation {
    /// All segments, starting and ending with a (possibly empty) λ.
    pub fn segments(&self) -> Vec<Segment> {
        let mut out = Vec::with_capacity(2 * self.gammas.len() + 1);
        let mut pos = 0;
        for g in &self.gammas {
            out.push(Segment { kind: SegmentKind::Lambda, range: pos..g.start });
            out.push(Segment { kind: SegmentKind::Gamma, range: g.clone() });
            pos = g.end;
        }
        out.push(Segment { kind: SegmentKind::Lambda, range: pos..self.projected.len() });
        out
    }

    pub fn lambdas(&self) -> Vec<Range<usize>> {
        self.segments()
            .into_iter()
            .filter(|s| s.kind == SegmentKind::Lambda)
            .map(|s| s.range)
            .collect()
    }

    /// Γ: the concatenation of all γ segments.
    pub fn gamma_events(&self) -> Vec<Activity> {
        self.gammas
            .iter()
            .flat_map(|g| self.projected[g.clone()].iter().cloned())
            .collect()
    }

    /// |Γ|.
    pub fn support(&self) -> usize {
        self.gammas.iter().map(|g| g.len()).sum()
    }

    pub fn slice(&self, range: &Range<usize>) -> &[Activity] {
        &self.projected[range.clone()]
    }
}

/// Segments `trace` so that the γ segments cover as many projected events
/// as possible. Among optimal segmentations, each γ starts as early as
/// possible and, given its start, is as short as possible.
pub fn segment(trace: &Trace, lpm: &LocalProcessModel) -> Segmentation {
    let mut projected = Vec::new();
    let mut positions = Vec::new();
    let mut indices = Vec::new();
    for (i, a) in trace.activities().enumerate() {
        if let Some(l) = lpm.automaton().label_index(a) {
            projected.push(a.clone());
            positions.push(i);
            indices.push(l);
        }
    }
    let gammas = best_cover(lpm.automaton(), &indices);
    Segmentation { projected, positions, gammas }
}

/// `ends[i]`: every `j > i` such that `word[i..j]` is accepted, ascending.
fn accepted_ends(dfa: &ReplayAutomaton, word: &[usize]) -> Vec<Vec<usize>> {
    (0..word.len())
        .map(|i| {
            let mut ends = Vec::new();
            let mut state = ReplayAutomaton::START;
            for (j, &l) in word.iter().enumerate().skip(i) {
                match dfa.step_index(state, l) {
                    Some(s) => state = s,
                    None => break,
                }
                if dfa.is_accepting(state) {
                    ends.push(j + 1);
                }
            }
            ends
        })
        .collect()
}

/// `best[i]`: most events coverable by γ segments within `word[i..]`.
fn suffix_optimum(word: &[usize], ends: &[Vec<usize>]) -> Vec<usize> {
    let n = word.len();
    let mut best = vec![0usize; n + 1];
    for i in (0..n).rev() {
        best[i] = ends[i]
            .iter()
            .map(|&j| j - i + best[j])
            .fold(best[i + 1], usize::max);
    }
    best
}

/// Largest number of events of `word` (label indices of `dfa`) covered by
/// disjoint accepted factors.
pub(crate) fn max_cover(dfa: &ReplayAutomaton, word: &[usize]) -> usize {
    let ends = accepted_ends(dfa, word);
    suffix_optimum(word, &ends)[0]
}

pub(crate) fn best_cover(dfa: &ReplayAutomaton, word: &[usize]) -> Vec<Range<usize>> {
    let ends = accepted_ends(dfa, word);
    let best = suffix_optimum(word, &ends);
    let mut gammas = Vec::new();
    let mut pos = 0;
    while pos < word.len() && best[pos] > 0 {
        let (i, j) = (pos..word.len())
            .take_while(|&i| best[i] == best[pos])
            .find_map(|i| ends[i].iter().find(|&&j| j - i + best[j] == best[i]).map(|&j| (i, j)))
            .expect("a positive optimum is realized by some γ");
        gammas.push(i..j);
        pos = j;
    }
    gammas
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lpm::ProcessTree;
    use crate::petrinet::SearchLimits;

    fn model(tree: &str) -> LocalProcessModel {
        LocalProcessModel::new(tree.parse::<ProcessTree>().unwrap(), &SearchLimits::default()).unwrap()
    }

    fn n1_model() -> LocalProcessModel {
        model("seq(xor(A,loop(B,tau)),C)")
    }

    fn labels(seg: &Segmentation, r: &Range<usize>) -> String {
        seg.slice(r).iter().map(|a| a.label()).collect()
    }

    #[test]
    fn worked_example() {
        let sigma = Trace::from_labels(
            "s",
            ["A", "B", "X", "B", "C", "C", "A", "B", "C", "B", "B", "X", "A", "C"],
        );
        let seg = segment(&sigma, &n1_model());
        let parts: Vec<String> = seg.segments().iter().map(|s| labels(&seg, &s.range)).collect();
        assert_eq!(parts, ["A", "BBC", "CA", "BC", "BB", "AC", ""]);
        let gamma: String = seg.gamma_events().iter().map(|a| a.label()).collect();
        assert_eq!(gamma, "BBCBCAC");
        assert_eq!(seg.support(), 7);
    }

    #[test]
    fn empty_trace_is_one_empty_lambda() {
        let seg = segment(&Trace::new("e", vec![]), &n1_model());
        assert_eq!(seg.segments(), vec![Segment { kind: SegmentKind::Lambda, range: 0..0 }]);
        assert!(seg.gamma_events().is_empty());
    }

    #[test]
    fn single_run_is_one_gamma() {
        let seg = segment(&Trace::from_labels("t", ["A", "C"]), &n1_model());
        assert_eq!(seg.lambdas(), vec![0..0, 2..2]);
        assert_eq!(seg.gammas, vec![0..2]);
    }

    #[test]
    fn positions_point_into_the_original_trace() {
        let seg = segment(&Trace::from_labels("t", ["X", "A", "Y", "C"]), &n1_model());
        assert_eq!(seg.positions, vec![1, 3]);
        assert_eq!(seg.gammas, vec![0..2]);
    }

    #[test]
    fn loop_prefers_short_instances() {
        let seg = segment(&Trace::from_labels("t", ["a", "a"]), &model("loop(a,tau)"));
        assert_eq!(seg.gammas, vec![0..1, 1..2]);
    }
}
