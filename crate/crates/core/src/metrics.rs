//! Evaluation measures between estimated and true rankings.

use crate::{Error, Result};

/// Per-university (true rank, estimated rank) pairs. The true side must be a
/// permutation of 1..n; the estimated side may contain ties (pre-aggregation
/// temporary ranks), which the tied-means Spearman variant handles.
#[derive(Debug, Clone, PartialEq)]
pub struct RankPairs {
    entries: Vec<RankPair>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankPair {
    pub university_id: String,
    pub true_rank: u32,
    pub estimated_rank: u32,
}

impl RankPairs {
    pub fn new(entries: Vec<RankPair>) -> Result<Self> {
        let n = entries.len();
        let mut seen_true = vec![false; n + 1];
        for e in &entries {
            if e.true_rank == 0 || e.true_rank as usize > n {
                return Err(Error::BadRankPairs(format!(
                    "true rank {} out of 1..={n} for {}",
                    e.true_rank, e.university_id
                )));
            }
            if std::mem::replace(&mut seen_true[e.true_rank as usize], true) {
                return Err(Error::BadRankPairs(format!(
                    "true rank {} appears twice",
                    e.true_rank
                )));
            }
            if e.estimated_rank == 0 {
                return Err(Error::BadRankPairs(format!(
                    "estimated rank must be positive for {}",
                    e.university_id
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[RankPair] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn differences(&self) -> impl Iterator<Item = i64> + '_ {
        self.entries
            .iter()
            .map(|e| i64::from(e.estimated_rank) - i64::from(e.true_rank))
    }
}

/// Average ranks of the values (ties get the mean of the positions they
/// occupy), 1-based.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for (a, b) in x.iter().zip(y) {
        num += (a - mx) * (b - my);
        dx += (a - mx) * (a - mx);
        dy += (b - my) * (b - my);
    }
    let denom = (dx * dy).sqrt();
    if denom == 0.0 {
        0.0
    } else {
        num / denom
    }
}

/// Spearman's rank correlation. Distinct ranks use the closed form
/// 1 − 6·Σd²/(n(n²−1)); ties fall back to Pearson on tied-mean ranks.
pub fn spearman_rho(pairs: &RankPairs) -> Result<f64> {
    let n = pairs.len();
    if n < 2 {
        return Err(Error::TooFewItems { need: 2, got: n });
    }
    let est: Vec<u32> = pairs.entries.iter().map(|e| e.estimated_rank).collect();
    let mut sorted = est.clone();
    sorted.sort_unstable();
    sorted.dedup();
    let has_ties = sorted.len() != est.len();
    if has_ties {
        let t: Vec<f64> = pairs.entries.iter().map(|e| f64::from(e.true_rank)).collect();
        let e: Vec<f64> = est.iter().map(|&r| f64::from(r)).collect();
        Ok(pearson(&average_ranks(&t), &average_ranks(&e)))
    } else {
        let sum_d2: f64 = pairs.differences().map(|d| (d * d) as f64).sum();
        let nf = n as f64;
        Ok(1.0 - 6.0 * sum_d2 / (nf * (nf * nf - 1.0)))
    }
}

/// Hit curve indexed by true rank plus the mean hit rate: a university is a
/// hit when |estimated − true| ≤ margin.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginAccuracy {
    pub margin: u32,
    /// per_true_rank[r-1] = 1.0 if the university with true rank r was a hit.
    pub per_true_rank: Vec<f64>,
    pub mean: f64,
}

pub fn margin_accuracy(pairs: &RankPairs, margin: u32) -> MarginAccuracy {
    let n = pairs.len();
    let mut per_true_rank = vec![0.0; n];
    let mut hits = 0usize;
    for e in pairs.entries() {
        let d = (i64::from(e.estimated_rank) - i64::from(e.true_rank)).unsigned_abs();
        let hit = d <= u64::from(margin);
        per_true_rank[(e.true_rank - 1) as usize] = if hit { 1.0 } else { 0.0 };
        hits += usize::from(hit);
    }
    MarginAccuracy {
        margin,
        per_true_rank,
        mean: if n == 0 { 0.0 } else { hits as f64 / n as f64 },
    }
}

/// Share of universities whose |estimated − true| is at most `margin`.
pub fn within_margin_share(pairs: &RankPairs, margin: u32) -> f64 {
    margin_accuracy(pairs, margin).mean
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramBin {
    /// Inclusive lower edge of the bin.
    pub start: i64,
    /// Exclusive upper edge.
    pub end: i64,
    pub count: u32,
}

/// Histogram of signed differences (estimated − true), binned at `bin_width`,
/// covering the full possible range [−n+1, n−1].
pub fn rank_difference_histogram(pairs: &RankPairs, bin_width: u32) -> Vec<HistogramBin> {
    let n = pairs.len() as i64;
    let w = i64::from(bin_width.max(1));
    let lo = (-(n - 1)).div_euclid(w);
    let hi = (n - 1).div_euclid(w);
    let mut bins: Vec<HistogramBin> = (lo..=hi)
        .map(|b| HistogramBin {
            start: b * w,
            end: (b + 1) * w,
            count: 0,
        })
        .collect();
    for d in pairs.differences() {
        let idx = (d.div_euclid(w) - lo) as usize;
        bins[idx].count += 1;
    }
    bins
}
