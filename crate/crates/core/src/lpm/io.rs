//! Ranking directories: one PNML file per model (`lpm_001.pnml`, …) and a
//! tab-separated `ranking.tsv` with columns
//! `rank support diversity activities tree`. The tree column is last and is
//! what [`read_ranking`] rebuilds the models from.

use std::fs;
use std::path::Path;

use super::{diversity, LocalProcessModel, LpmRanking, ProcessTree};
use crate::petrinet::pnml::write_pnml;
use crate::petrinet::SearchLimits;
use crate::{Error, Result};

pub const RANKING_FILE: &str = "ranking.tsv";
const HEADER: &str = "rank\tsupport\tdiversity\tactivities\ttree";

pub fn model_file_name(rank: usize) -> String {
    format!("lpm_{rank:03}.pnml")
}

/// Writes the ranking into `dir`, creating it if needed.
pub fn write_ranking(ranking: &LpmRanking, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut table = String::from(HEADER);
    table.push('\n');
    for (i, m) in ranking.iter().enumerate() {
        let rank = i + 1;
        let activities: Vec<String> = m
            .activities()
            .iter()
            .map(|a| ProcessTree::Activity(a.clone()).to_string())
            .collect();
        table.push_str(&format!(
            "{rank}\t{}\t{:.6}\t{}\t{}\n",
            m.support(),
            diversity(ranking, rank)?,
            activities.join(","),
            m.tree()
        ));
        fs::write(dir.join(model_file_name(rank)), write_pnml(m.net(), &format!("lpm_{rank}")))?;
    }
    fs::write(dir.join(RANKING_FILE), table)?;
    Ok(())
}

/// Reads a ranking written by [`write_ranking`], ordered by the rank column.
pub fn read_ranking(dir: &Path, limits: &SearchLimits) -> Result<LpmRanking> {
    let text = fs::read_to_string(dir.join(RANKING_FILE))?;
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if n == 0 || line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| Error::Format(format!("{RANKING_FILE} line {}: {what}", n + 1));
        let cols: Vec<&str> = line.splitn(5, '\t').collect();
        if cols.len() != 5 {
            return Err(bad("expected 5 tab-separated columns"));
        }
        let rank: usize = cols[0].parse().map_err(|_| bad("invalid rank"))?;
        let support: usize = cols[1].parse().map_err(|_| bad("invalid support"))?;
        let tree: ProcessTree = cols[4].parse().map_err(|e: Error| bad(&e.to_string()))?;
        let mut model = LocalProcessModel::new(tree, limits)?;
        model.set_support(support);
        rows.push((rank, model));
    }
    rows.sort_by_key(|(rank, _)| *rank);
    Ok(LpmRanking::in_order(rows.into_iter().map(|(_, m)| m).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::petrinet::pnml::read_pnml;

    #[test]
    fn round_trip() {
        let lim = SearchLimits::default();
        let mut models = Vec::new();
        for (tree, support) in [("seq(a,b)", 20), ("and('x y',c)", 7)] {
            let mut m = LocalProcessModel::new(tree.parse().unwrap(), &lim).unwrap();
            m.set_support(support);
            models.push(m);
        }
        let ranking = LpmRanking::in_order(models);
        let dir = std::env::temp_dir().join(format!("evabs-ranking-{}", std::process::id()));
        write_ranking(&ranking, &dir).unwrap();

        let back = read_ranking(&dir, &lim).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back.get(2).unwrap().tree().to_string(), "and('x y',c)");
        assert_eq!(back.get(2).unwrap().support(), 7);
        assert_eq!(back.get(2).unwrap().rank(), 2);

        let net = read_pnml(&fs::read(dir.join("lpm_001.pnml")).unwrap()).unwrap();
        assert_eq!(net.net().visible_labels(), ranking.get(1).unwrap().activities().clone());

        let table = fs::read_to_string(dir.join(RANKING_FILE)).unwrap();
        assert!(table.lines().nth(2).unwrap().starts_with("2\t7\t1.000000\tc,'x y'\t"));
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn malformed_table() {
        let dir = std::env::temp_dir().join(format!("evabs-ranking-bad-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        fs::write(dir.join(RANKING_FILE), format!("{HEADER}\n1\tx\t1\ta\ta\n")).unwrap();
        assert!(matches!(read_ranking(&dir, &SearchLimits::default()), Err(Error::Format(_))));
        fs::remove_dir_all(&dir).unwrap();
    }
}
