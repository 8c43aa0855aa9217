//! The peak-shift ranking loop, its repetition, and rank aggregation.
//!
//! One run: the known-top university set gets temporary rank 1; each
//! iteration picks the schools that feed the most recently ranked set,
//! clusters the still-unranked universities on their acceptance rates at
//! those schools, and hands the strongest cluster the next rank. Clustering
//! is stochastic, so runs repeat under derived child seeds and the final
//! ranking sorts the per-university mean of the temporary ranks.

use rayon::prelude::*;

use crate::dataset::{Dataset, RankEntry, Ranking};
use crate::seeding::{child_seed, SeedSequence};
use crate::standardize::{standardize, StandardizeMode, StandardizedMatrix};
use crate::xmeans::{xmeans_cluster_with, PointSet, XMeansSettings};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    /// Ids of the universities known to sit at the top (the rank-1 set).
    pub seed_universities: Vec<String>,
    pub repetitions: u32,
    pub mode: StandardizeMode,
    pub xmeans: XMeansSettings,
    /// Cap on the cluster count per X-means call; `None` = number of
    /// unranked universities.
    pub k_max: Option<usize>,
    /// Select schools by the union of all ranked sets instead of the most
    /// recent one. Off by default; fidelity of the variant is unknown.
    pub cumulative_selection: bool,
    pub master_seed: u64,
}

impl EstimatorConfig {
    pub fn new(seed_universities: Vec<String>, master_seed: u64) -> Self {
        Self {
            seed_universities,
            repetitions: 1000,
            mode: StandardizeMode::default(),
            xmeans: XMeansSettings::default(),
            k_max: None,
            cumulative_selection: false,
            master_seed,
        }
    }

    fn seed_indices(&self, dataset: &Dataset) -> Result<Vec<usize>> {
        if self.seed_universities.is_empty() {
            return Err(Error::BadConfig("seed university list is empty".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::BadConfig("repetitions must be >= 1".into()));
        }
        let mut seen = std::collections::HashSet::new();
        let mut idx = Vec::with_capacity(self.seed_universities.len());
        for id in &self.seed_universities {
            if !seen.insert(id.as_str()) {
                return Err(Error::BadConfig(format!("duplicate seed university {id}")));
            }
            idx.push(
                dataset
                    .university_index(id)
                    .ok_or_else(|| Error::SeedNotFound { id: id.clone() })?,
            );
        }
        Ok(idx)
    }
}

/// What one run did at one iteration, kept for the co-clustering analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// Temporary rank being assigned at this iteration (>= 2).
    pub level: u32,
    /// The ranked set whose acceptance rates selected the schools.
    pub selection_set: Vec<usize>,
    /// The selected top schools, in selection order.
    pub top_schools: Vec<usize>,
    /// Step-3 clustering of the unranked universities.
    pub clusters: Vec<Vec<usize>>,
    /// Index into `clusters` of the cluster that received this level.
    pub chosen: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    /// The seed universities (temporary rank 1).
    pub seed_set: Vec<usize>,
    pub iterations: Vec<IterationRecord>,
}

impl RunTrace {
    /// The run's partition of all universities into same-rank groups.
    pub fn partition(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![self.seed_set.clone()];
        groups.extend(
            self.iterations
                .iter()
                .map(|it| it.clusters[it.chosen].clone()),
        );
        groups
    }
}

/// Temporary ranks by university index: rank 1 for the seed set, then the
/// iteration number for each chosen cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporaryRanking {
    pub ranks: Vec<u32>,
}

/// Mean temporary ranks and the dense final ranking derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedRanking {
    /// Mean temporary rank by university index.
    pub mean_ranks: Vec<f64>,
    /// Final rank (1..n) by university index; means sorted ascending, ties
    /// broken by ascending university index.
    pub final_ranks: Vec<u32>,
}

impl EstimatedRanking {
    pub fn to_ranking(&self, dataset: &Dataset) -> Ranking {
        let mut entries: Vec<RankEntry> = dataset
            .universities()
            .iter()
            .enumerate()
            .map(|(i, u)| RankEntry {
                university_id: u.id.clone(),
                rank: self.final_ranks[i],
                score: Some(self.mean_ranks[i]),
            })
            .collect();
        entries.sort_by_key(|e| e.rank);
        Ranking { entries }
    }
}

/// Schools sorted by their summed rate over the ranked set(s), descending,
/// ties broken by ascending school index; truncated to
/// max(1, ⌊|U| · school_count / university_count⌋).
pub fn select_top_schools(
    matrix: &StandardizedMatrix,
    ranked_sets: &[Vec<usize>],
    cumulative: bool,
) -> Vec<usize> {
    let selection: Vec<usize> = if cumulative {
        ranked_sets.iter().flatten().copied().collect()
    } else {
        ranked_sets.last().cloned().unwrap_or_default()
    };
    let m = matrix.school_count();
    let n = matrix.university_count();
    let take = ((selection.len() * m) / n).max(1);

    let mut schools: Vec<(usize, f64)> = (0..m)
        .map(|s| (s, selection.iter().map(|&u| matrix.rate(s, u)).sum()))
        .collect();
    schools.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    schools.into_iter().take(take).map(|(s, _)| s).collect()
}

/// One pass of the ranking loop. Deterministic in (matrix, seed indices, seed).
fn run_single(
    matrix: &StandardizedMatrix,
    seed_indices: &[usize],
    config: &EstimatorConfig,
    rng_seed: u64,
) -> (TemporaryRanking, RunTrace) {
    let n = matrix.university_count();
    let mut ranks = vec![0u32; n];
    for &u in seed_indices {
        ranks[u] = 1;
    }
    let mut ranked_sets: Vec<Vec<usize>> = vec![seed_indices.to_vec()];
    let mut unranked: Vec<usize> = (0..n).filter(|u| !seed_indices.contains(u)).collect();
    let mut iterations = Vec::new();
    let mut seeds = SeedSequence::new(rng_seed);

    let mut level = 1u32;
    while !unranked.is_empty() {
        level += 1;
        let top_schools = select_top_schools(matrix, &ranked_sets, config.cumulative_selection);

        let clusters: Vec<Vec<usize>> = if unranked.len() <= 2 {
            let _ = seeds.next_seed(); // keep the stream aligned with clustered iterations
            vec![unranked.clone()]
        } else {
            let vectors: Vec<Vec<f64>> = unranked
                .iter()
                .map(|&u| top_schools.iter().map(|&s| matrix.rate(s, u)).collect())
                .collect();
            let points = PointSet::new(unranked.clone(), vectors).expect("finite rate features");
            let k_max = config.k_max.unwrap_or(unranked.len());
            let clustering = xmeans_cluster_with(&points, k_max, seeds.next_seed(), &config.xmeans);
            clustering.clusters.iter().map(|c| c.members.clone()).collect()
        };

        // order clusters by mean rate over the selected schools, descending;
        // ties by smallest member index
        let mean_of = |members: &[usize]| -> f64 {
            let total: f64 = members
                .iter()
                .map(|&u| top_schools.iter().map(|&s| matrix.rate(s, u)).sum::<f64>())
                .sum();
            total / (members.len() * top_schools.len()) as f64
        };
        let chosen = (0..clusters.len())
            .max_by(|&a, &b| {
                mean_of(&clusters[a])
                    .total_cmp(&mean_of(&clusters[b]))
                    .then_with(|| clusters[b][0].cmp(&clusters[a][0]))
            })
            .expect("at least one cluster");

        for &u in &clusters[chosen] {
            ranks[u] = level;
        }
        unranked.retain(|u| !clusters[chosen].contains(u));
        ranked_sets.push(clusters[chosen].clone());
        iterations.push(IterationRecord {
            level,
            selection_set: ranked_sets[ranked_sets.len() - 2].clone(),
            top_schools,
            clusters,
            chosen,
        });
    }

    (
        TemporaryRanking { ranks },
        RunTrace {
            seed_set: seed_indices.to_vec(),
            iterations,
        },
    )
}

/// Public single-run entry; resolves seed ids first.
pub fn run_single_estimation(
    matrix: &StandardizedMatrix,
    dataset: &Dataset,
    config: &EstimatorConfig,
    rng_seed: u64,
) -> Result<(TemporaryRanking, RunTrace)> {
    let seed_indices = config.seed_indices(dataset)?;
    Ok(run_single(matrix, &seed_indices, config, rng_seed))
}

/// Mean of the temporary ranks, then a dense re-ranking of the means.
pub fn aggregate_rankings(runs: &[TemporaryRanking]) -> Result<EstimatedRanking> {
    let Some(first) = runs.first() else {
        return Err(Error::InconsistentRuns);
    };
    let n = first.ranks.len();
    if runs.iter().any(|r| r.ranks.len() != n) {
        return Err(Error::InconsistentRuns);
    }
    let mut mean_ranks = vec![0.0f64; n];
    for run in runs {
        for (m, &r) in mean_ranks.iter_mut().zip(&run.ranks) {
            *m += f64::from(r);
        }
    }
    for m in &mut mean_ranks {
        *m /= runs.len() as f64;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| mean_ranks[a].total_cmp(&mean_ranks[b]).then(a.cmp(&b)));
    let mut final_ranks = vec![0u32; n];
    for (pos, &u) in order.iter().enumerate() {
        final_ranks[u] = pos as u32 + 1;
    }
    Ok(EstimatedRanking {
        mean_ranks,
        final_ranks,
    })
}

/// The full estimator: standardize once, run `repetitions` independent
/// passes under derived child seeds, aggregate. Traces come back for the
/// co-clustering analysis.
pub fn estimate(dataset: &Dataset, config: &EstimatorConfig) -> Result<(EstimatedRanking, Vec<RunTrace>)> {
    let seed_indices = config.seed_indices(dataset)?;
    let matrix = standardize(dataset, config.mode);
    let results: Vec<(TemporaryRanking, RunTrace)> = (0..config.repetitions as u64)
        .into_par_iter()
        .map(|rep| {
            run_single(
                &matrix,
                &seed_indices,
                config,
                child_seed(config.master_seed, rep),
            )
        })
        .collect();
    let (rankings, traces): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok((aggregate_rankings(&rankings)?, traces))
}
