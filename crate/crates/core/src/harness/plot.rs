//! Moving averages over a stats CSV, for reward and similarity curves.

use std::path::Path;

use crate::error::{Error, Result};
use crate::ppo::UpdateStats;

#[derive(Clone, Debug, PartialEq)]
pub struct StatsRow {
    pub episode: u64,
    pub mean_reward: f64,
    pub best_similarity: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmoothedRow {
    pub episode: u64,
    pub reward_ma: f64,
    pub best_similarity_ma: f64,
}

pub const SMOOTHED_HEADER: &str = "episode,reward_ma,best_similarity_ma";

pub fn read_stats(path: &Path) -> Result<Vec<StatsRow>> {
    let err = |m: String| Error::Csv { path: path.to_path_buf(), message: m };
    let mut r = csv::Reader::from_path(path).map_err(|e| err(e.to_string()))?;
    let header = r.headers().map_err(|e| err(e.to_string()))?.iter().collect::<Vec<_>>().join(",");
    if header != UpdateStats::CSV_HEADER {
        return Err(err(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| err(e.to_string()))?;
        let num = |j: usize| -> Result<f64> {
            rec[j].parse().map_err(|_| err(format!("row {}: column {j} = {:?}", i + 1, &rec[j])))
        };
        rows.push(StatsRow {
            episode: rec[0].parse().map_err(|_| err(format!("row {}: bad episode {:?}", i + 1, &rec[0])))?,
            mean_reward: num(1)?,
            best_similarity: num(2)?,
        });
    }
    Ok(rows)
}

/// Episode-weighted moving average over the last `window` episodes. Each
/// row stands for the episodes since the previous row.
pub fn smooth(rows: &[StatsRow], window: u64) -> Result<Vec<SmoothedRow>> {
    if window == 0 {
        return Err(Error::Config("window must be at least 1 episode".into()));
    }
    let mut spans = Vec::with_capacity(rows.len());
    let mut prev = 0;
    for r in rows {
        if r.episode <= prev {
            return Err(Error::Config(format!("episode column not increasing at {}", r.episode)));
        }
        spans.push((prev, r.episode));
        prev = r.episode;
    }
    let mut out = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        let lo = r.episode.saturating_sub(window);
        let (mut w_sum, mut rew, mut sim) = (0.0, 0.0, 0.0);
        for k in (0..=i).rev() {
            let (a, b) = spans[k];
            if b <= lo {
                break;
            }
            let w = (b - a.max(lo)) as f64;
            w_sum += w;
            rew += w * rows[k].mean_reward;
            sim += w * rows[k].best_similarity;
        }
        out.push(SmoothedRow { episode: r.episode, reward_ma: rew / w_sum, best_similarity_ma: sim / w_sum });
    }
    Ok(out)
}

pub fn write_smoothed(rows: &[SmoothedRow], out: &mut dyn std::io::Write) -> Result<()> {
    writeln!(out, "{SMOOTHED_HEADER}")?;
    for r in rows {
        writeln!(out, "{},{:?},{:?}", r.episode, r.reward_ma, r.best_similarity_ma)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(episode: u64, r: f64) -> StatsRow {
        StatsRow { episode, mean_reward: r, best_similarity: r / 10.0 }
    }

    #[test]
    fn window_weights_by_episode() {
        let rows = [row(10, 1.0), row(20, 2.0), row(30, 3.0)];
        let s = smooth(&rows, 20).unwrap();
        assert_eq!(s[0].reward_ma, 1.0);
        assert_eq!(s[1].reward_ma, 1.5);
        assert_eq!(s[2].reward_ma, 2.5);
        // A window cutting a row in half weighs it by the overlap.
        let s = smooth(&rows, 15).unwrap();
        assert!((s[2].reward_ma - (10.0 * 3.0 + 5.0 * 2.0) / 15.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_unordered() {
        assert!(smooth(&[row(10, 1.0), row(10, 1.0)], 5).is_err());
        assert!(smooth(&[row(10, 1.0)], 0).is_err());
    }
}
