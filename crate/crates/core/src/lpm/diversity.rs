use super::{LocalProcessModel, LpmRanking};
use crate::eventlog::Alphabet;
use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// Intersection over union; two empty sets count as identical.
pub fn jaccard(a: &Alphabet, b: &Alphabet) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Diversity of the model at 1-based rank `i`: 1 for the first model,
/// otherwise one minus its largest Jaccard similarity to any higher-ranked
/// model's activity set.
pub fn diversity(ranking: &LpmRanking, i: usize) -> Result<f64> {
    let model = ranking.get(i)?;
    Ok(diversity_against(model, &ranking.models()[..i - 1]))
}

fn diversity_against(model: &LocalProcessModel, earlier: &[LocalProcessModel]) -> f64 {
    earlier
        .iter()
        .map(|m| 1.0 - jaccard(model.activities(), m.activities()))
        .fold(1.0, f64::min)
}

/// Whether to cut the ranking to `k` models before or after filtering.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FilterOrder {
    #[default]
    TopKThenFilter,
    FilterThenTopK,
}

impl fmt::Display for FilterOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FilterOrder::TopKThenFilter => "topk-then-filter",
            FilterOrder::FilterThenTopK => "filter-then-topk",
        })
    }
}

impl FromStr for FilterOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "topk-then-filter" => Ok(FilterOrder::TopKThenFilter),
            "filter-then-topk" => Ok(FilterOrder::FilterThenTopK),
            other => Err(Error::Format(format!("unknown filter order {other:?}"))),
        }
    }
}

/// Drops every model whose diversity against the models retained so far is
/// at most `t_div`, keeping rank order.
pub fn filter_diverse(ranking: &LpmRanking, t_div: f64, k: usize, order: FilterOrder) -> Vec<LocalProcessModel> {
    let candidates = match order {
        FilterOrder::TopKThenFilter => &ranking.models()[..k.min(ranking.len())],
        FilterOrder::FilterThenTopK => ranking.models(),
    };
    let mut kept: Vec<LocalProcessModel> = Vec::new();
    for m in candidates {
        if diversity_against(m, &kept) > t_div {
            kept.push(m.clone());
        }
    }
    kept.truncate(k);
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eventlog::alphabet;
    use crate::lpm::ProcessTree;
    use crate::petrinet::SearchLimits;
    use proptest::prelude::*;

    fn ranking(trees: &[&str]) -> LpmRanking {
        LpmRanking::in_order(
            trees
                .iter()
                .map(|t| LocalProcessModel::new(t.parse::<ProcessTree>().unwrap(), &SearchLimits::default()).unwrap())
                .collect(),
        )
    }

    fn trees(r: &[LocalProcessModel]) -> Vec<String> {
        r.iter().map(|m| m.tree().to_string()).collect()
    }

    #[test]
    fn first_model_has_full_diversity() {
        assert_eq!(diversity(&ranking(&["seq(a,b)"]), 1).unwrap(), 1.0);
    }

    #[test]
    fn identical_sets_have_zero_diversity() {
        let r = ranking(&["seq(A,B,C)", "and(A,B,C)"]);
        assert_eq!(diversity(&r, 2).unwrap(), 0.0);
    }

    #[test]
    fn half_overlap() {
        let r = ranking(&["seq(A,B,C)", "seq(B,C,D)"]);
        // |{B,C}| / |{A,B,C,D}| = 2/4
        assert!((diversity(&r, 2).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn index_out_of_range() {
        let r = ranking(&["a"]);
        assert!(diversity(&r, 0).is_err());
        assert!(diversity(&r, 2).is_err());
    }

    #[test]
    fn filter_drops_duplicates_of_retained_models() {
        let r = ranking(&["seq(A,B)", "and(A,B)", "seq(C,D)"]);
        let kept = filter_diverse(&r, 0.5, 3, FilterOrder::TopKThenFilter);
        assert_eq!(trees(&kept), ["seq(A,B)", "seq(C,D)"]);
    }

    #[test]
    fn zero_threshold_keeps_disjoint_models() {
        let r = ranking(&["a", "b", "c"]);
        assert_eq!(filter_diverse(&r, 0.0, 3, FilterOrder::TopKThenFilter).len(), 3);
    }

    #[test]
    fn order_controls_the_cut() {
        let r = ranking(&["seq(A,B)", "and(A,B)", "seq(C,D)"]);
        assert_eq!(filter_diverse(&r, 0.5, 2, FilterOrder::TopKThenFilter).len(), 1);
        assert_eq!(filter_diverse(&r, 0.5, 2, FilterOrder::FilterThenTopK).len(), 2);
    }

    #[test]
    fn empty_sets() {
        assert_eq!(jaccard(&alphabet::<_, &str>([]), &alphabet::<_, &str>([])), 1.0);
    }

    fn arb_ranking() -> impl Strategy<Value = Vec<Vec<usize>>> {
        prop::collection::vec(prop::collection::btree_set(0usize..6, 1..4), 1..7)
            .prop_map(|sets| sets.into_iter().map(|s| s.into_iter().collect()).collect())
    }

    fn parallel_of(labels: &[String]) -> String {
        if labels.len() == 1 {
            labels[0].clone()
        } else {
            format!("and({})", labels.join(","))
        }
    }

    fn build(sets: &[Vec<usize>], names: &[&str]) -> LpmRanking {
        let trees: Vec<String> = sets
            .iter()
            .map(|s| parallel_of(&s.iter().map(|&i| names[i].to_string()).collect::<Vec<_>>()))
            .collect();
        ranking(&trees.iter().map(String::as_str).collect::<Vec<_>>())
    }

    proptest! {
        #[test]
        fn diversity_is_a_fraction_and_relabeling_invariant(sets in arb_ranking()) {
            let plain = build(&sets, &["a", "b", "c", "d", "e", "f"]);
            let renamed = build(&sets, &["u", "v", "w", "x", "y", "z"]);
            for i in 1..=plain.len() {
                let d = diversity(&plain, i).unwrap();
                prop_assert!((0.0..=1.0).contains(&d));
                prop_assert_eq!(d, diversity(&renamed, i).unwrap());
            }
        }

        #[test]
        fn filtered_models_form_a_subsequence(sets in arb_ranking(), t in 0.0f64..1.0, k in 1usize..8) {
            let r = build(&sets, &["a", "b", "c", "d", "e", "f"]);
            for order in [FilterOrder::TopKThenFilter, FilterOrder::FilterThenTopK] {
                let kept = filter_diverse(&r, t, k, order);
                prop_assert!(kept.len() <= k);
                let ranks: Vec<usize> = kept.iter().map(|m| m.rank()).collect();
                prop_assert!(ranks.windows(2).all(|w| w[0] < w[1]));
                for (i, a) in kept.iter().enumerate() {
                    for b in &kept[..i] {
                        prop_assert_ne!(a.activities(), b.activities());
                    }
                }
            }
        }
    }
}
