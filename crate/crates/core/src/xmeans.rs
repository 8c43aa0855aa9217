//! X-means: k-means with BIC-driven binary splitting.
//!
//! The estimator's step (3) groups unranked universities without being told a
//! cluster count, so splitting starts from k = 1 and a 2-means split of a
//! cluster is kept only when the local BIC improves. Seeding is k-means++
//! over a canonically sorted candidate list, which makes results independent
//! of input point order and fully determined by (points, seed).

use std::collections::HashMap;

use crate::seeding::SeedSequence;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Items to cluster: opaque ids with equal-dimension finite feature vectors.
#[derive(Debug, Clone)]
pub struct PointSet {
    ids: Vec<usize>,
    vectors: Vec<Vec<f64>>,
    dim: usize,
    position: HashMap<usize, usize>,
}

impl PointSet {
    pub fn new(ids: Vec<usize>, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if ids.len() != vectors.len() {
            return Err(Error::BadPointSet(format!(
                "{} ids but {} vectors",
                ids.len(),
                vectors.len()
            )));
        }
        if vectors.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        let dim = vectors[0].len();
        if dim == 0 {
            return Err(Error::BadPointSet("zero-dimensional vectors".into()));
        }
        for v in &vectors {
            if v.len() != dim {
                return Err(Error::BadPointSet("mixed vector dimensions".into()));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::BadPointSet("non-finite component".into()));
            }
        }
        let position: HashMap<usize, usize> =
            ids.iter().enumerate().map(|(pos, &id)| (id, pos)).collect();
        if position.len() != ids.len() {
            return Err(Error::BadPointSet("duplicate item ids".into()));
        }
        Ok(Self {
            ids,
            vectors,
            dim,
            position,
        })
    }

    #[inline]
    fn vector_of(&self, id: usize) -> &[f64] {
        &self.vectors[self.position[&id]]
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Point positions sorted by (vector, id); every downstream draw and sum
    /// runs in this order so permuting the input changes nothing.
    fn canonical_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            let va = &self.vectors[a];
            let vb = &self.vectors[b];
            for (x, y) in va.iter().zip(vb.iter()) {
                match x.total_cmp(y) {
                    std::cmp::Ordering::Equal => continue,
                    other => return other,
                }
            }
            self.ids[a].cmp(&self.ids[b])
        });
        order
    }

    fn subset(&self, ids: &[usize]) -> PointSet {
        let vectors = ids.iter().map(|&id| self.vector_of(id).to_vec()).collect();
        PointSet::new(ids.to_vec(), vectors).expect("subset of a valid point set")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Member item ids, ascending.
    pub members: Vec<usize>,
    /// Arithmetic mean of the member vectors.
    pub centroid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Non-empty, disjoint, ordered by smallest member id.
    pub clusters: Vec<Cluster>,
}

impl Clustering {
    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    pub fn single(points: &PointSet) -> Clustering {
        let mut members = points.ids.clone();
        members.sort_unstable();
        Clustering {
            clusters: vec![Cluster {
                centroid: mean_of(points, &members),
                members,
            }],
        }
    }

    fn from_member_sets(points: &PointSet, sets: Vec<Vec<usize>>) -> Clustering {
        let mut clusters: Vec<Cluster> = sets
            .into_iter()
            .filter(|m| !m.is_empty())
            .map(|mut members| {
                members.sort_unstable();
                Cluster {
                    centroid: mean_of(points, &members),
                    members,
                }
            })
            .collect();
        clusters.sort_by_key(|c| c.members[0]);
        Clustering { clusters }
    }
}

fn mean_of(points: &PointSet, members: &[usize]) -> Vec<f64> {
    let mut mean = vec![0.0; points.dim];
    for &id in members {
        for (m, x) in mean.iter_mut().zip(points.vector_of(id)) {
            *m += x;
        }
    }
    let n = members.len() as f64;
    for m in &mut mean {
        *m /= n;
    }
    mean
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Tunables for the clustering loop. Defaults match the values used
/// throughout the crate; every constant is overridable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XMeansSettings {
    /// Lloyd iteration cap per k-means run.
    pub max_lloyd_iters: usize,
    /// Lower bound for the model variance in the BIC; keeps degenerate
    /// zero-variance clusterings finite.
    pub variance_floor: f64,
    /// Clusters smaller than this are never split. A 2-point split leaves the
    /// pooled variance with zero degrees of freedom, so the comparison would
    /// be decided by the floor alone.
    pub min_split_size: usize,
}

impl Default for XMeansSettings {
    fn default() -> Self {
        Self {
            max_lloyd_iters: 100,
            variance_floor: 1e-12,
            min_split_size: 3,
        }
    }
}

/// Lloyd's algorithm with k-means++ seeding.
///
/// Runs to a fixed point of the assignment step or `max_lloyd_iters`. Empty
/// clusters are repaired by reseeding on the point farthest from its current
/// centroid.
pub fn kmeans(points: &PointSet, k: usize, seed: u64) -> Result<Clustering> {
    kmeans_with(points, k, seed, &XMeansSettings::default())
}

pub fn kmeans_with(
    points: &PointSet,
    k: usize,
    seed: u64,
    settings: &XMeansSettings,
) -> Result<Clustering> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::KExceedsItems { k, n });
    }
    let order = points.canonical_order();
    let vecs: Vec<&[f64]> = order.iter().map(|&p| points.vectors[p].as_slice()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding over the canonical list
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(vecs[rng.random_range(0..n)].to_vec());
    let mut d2: Vec<f64> = vecs.iter().map(|v| sq_dist(v, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 && total.is_finite() {
            let mut u = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, w) in d2.iter().enumerate() {
                u -= w;
                if u <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.push(vecs[pick].to_vec());
        for (slot, v) in d2.iter_mut().zip(&vecs) {
            *slot = slot.min(sq_dist(v, centroids.last().unwrap()));
        }
    }

    let mut assignment = vec![0usize; n];
    let mut prev_sse = f64::INFINITY;
    for _ in 0..settings.max_lloyd_iters {
        let mut next = vec![0usize; n];
        for (i, v) in vecs.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, centroid) in centroids.iter().enumerate() {
                let d = sq_dist(v, centroid);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            next[i] = best;
        }

        // repair empty clusters on the farthest point of a multi-member cluster
        loop {
            let mut counts = vec![0usize; k];
            for &a in &next {
                counts[a] += 1;
            }
            let Some(empty) = counts.iter().position(|&c| c == 0) else {
                break;
            };
            let far = (0..n)
                .filter(|&i| counts[next[i]] > 1)
                .max_by(|&a, &b| {
                    sq_dist(vecs[a], &centroids[next[a]])
                        .total_cmp(&sq_dist(vecs[b], &centroids[next[b]]))
                        .then(b.cmp(&a)) // ties: lowest canonical index
                })
                .expect("some cluster has more than one member");
            next[far] = empty;
            centroids[empty] = vecs[far].to_vec();
        }

        let converged = next == assignment;
        assignment = next;
        for (c, centroid) in centroids.iter_mut().enumerate() {
            let mut sum = vec![0.0; points.dim];
            let mut cnt = 0.0;
            for (i, v) in vecs.iter().enumerate() {
                if assignment[i] == c {
                    for (s, x) in sum.iter_mut().zip(*v) {
                        *s += x;
                    }
                    cnt += 1.0;
                }
            }
            for s in &mut sum {
                *s /= cnt;
            }
            *centroid = sum;
        }
        let sse: f64 = (0..n)
            .map(|i| sq_dist(vecs[i], &centroids[assignment[i]]))
            .sum();
        debug_assert!(
            sse <= prev_sse + 1e-9 * prev_sse.abs().max(1.0),
            "Lloyd SSE increased: {prev_sse} -> {sse}"
        );
        prev_sse = sse;
        if converged {
            break;
        }
    }

    let mut sets: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &a) in assignment.iter().enumerate() {
        sets[a].push(points.ids[order[i]]);
    }
    Ok(Clustering::from_member_sets(points, sets))
}

/// BIC of a clustering under the shared spherical-Gaussian model: pooled MLE
/// variance, mixing-proportion terms, and a (p/2)·ln R penalty with
/// p = K·(d+1) free parameters. Higher is better.
pub fn bic_score(points: &PointSet, clustering: &Clustering) -> f64 {
    bic_score_with(points, clustering, XMeansSettings::default().variance_floor)
}

pub fn bic_score_with(points: &PointSet, clustering: &Clustering, variance_floor: f64) -> f64 {
    let r = points.len() as f64;
    let d = points.dim as f64;
    let k = clustering.cluster_count() as f64;

    let mut sum_sq = 0.0;
    let mut mixing = 0.0;
    for cluster in &clustering.clusters {
        let rj = cluster.members.len() as f64;
        mixing += rj * (rj / r).ln();
        for &id in &cluster.members {
            sum_sq += sq_dist(points.vector_of(id), &cluster.centroid);
        }
    }

    let dof = d * (r - k);
    let variance = if dof > 0.0 {
        (sum_sq / dof).max(variance_floor)
    } else {
        variance_floor
    };
    let log_likelihood = mixing
        - (r * d / 2.0) * (2.0 * std::f64::consts::PI * variance).ln()
        - sum_sq / (2.0 * variance);
    let p = k * (d + 1.0);
    log_likelihood - (p / 2.0) * r.ln()
}

/// X-means: start from one cluster and keep 2-means splits while the local
/// BIC improves, up to `min(k_max, item count)` clusters.
pub fn xmeans_cluster(points: &PointSet, k_max: usize, seed: u64) -> Clustering {
    xmeans_cluster_with(points, k_max, seed, &XMeansSettings::default())
}

pub fn xmeans_cluster_with(
    points: &PointSet,
    k_max: usize,
    seed: u64,
    settings: &XMeansSettings,
) -> Clustering {
    let cap = k_max.max(1).min(points.len());
    let mut seeds = SeedSequence::new(seed);
    let mut clustering = Clustering::single(points);
    loop {
        let mut total = clustering.cluster_count();
        let mut changed = false;
        let mut next: Vec<Cluster> = Vec::with_capacity(total);
        for cluster in clustering.clusters {
            let split_seed = seeds.next_seed();
            if total >= cap || cluster.members.len() < settings.min_split_size {
                next.push(cluster);
                continue;
            }
            let sub = points.subset(&cluster.members);
            let pair = kmeans_with(&sub, 2, split_seed, settings).expect("k=2 <= member count");
            let whole = Clustering {
                clusters: vec![cluster],
            };
            let keep_split = bic_score_with(&sub, &pair, settings.variance_floor)
                > bic_score_with(&sub, &whole, settings.variance_floor);
            if keep_split {
                next.extend(pair.clusters);
                total += 1;
                changed = true;
            } else {
                next.extend(whole.clusters);
            }
        }
        next.sort_by_key(|c| c.members[0]);
        clustering = Clustering { clusters: next };
        if !changed {
            return clustering;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(values: &[f64]) -> PointSet {
        PointSet::new(
            (0..values.len()).collect(),
            values.iter().map(|&v| vec![v]).collect(),
        )
        .unwrap()
    }

    /// Brute force: the 2-partition of the points minimizing within-cluster SSE.
    fn best_two_partition(values: &[f64]) -> (Vec<usize>, Vec<usize>) {
        let n = values.len();
        let sse = |members: &[usize]| -> f64 {
            if members.is_empty() {
                return 0.0;
            }
            let mean: f64 = members.iter().map(|&i| values[i]).sum::<f64>() / members.len() as f64;
            members.iter().map(|&i| (values[i] - mean).powi(2)).sum()
        };
        let mut best = (Vec::new(), Vec::new());
        let mut best_sse = f64::INFINITY;
        for mask in 1..(1u32 << n) - 1 {
            let a: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
            let b: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) == 0).collect();
            let total = sse(&a) + sse(&b);
            if total < best_sse {
                best_sse = total;
                best = (a, b);
            }
        }
        best
    }

    #[test]
    fn kmeans_two_well_separated_groups() {
        let values = [0.0, 0.1, 10.0, 10.1];
        let (oracle_a, oracle_b) = best_two_partition(&values);
        assert_eq!(oracle_a.len().min(oracle_b.len()), 2); // sanity on the oracle itself
        let clustering = kmeans(&pts(&values), 2, 1).unwrap();
        let mut got: Vec<Vec<usize>> = clustering
            .clusters
            .iter()
            .map(|c| c.members.clone())
            .collect();
        got.sort();
        let mut want = vec![oracle_a, oracle_b];
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn kmeans_k_one_gives_global_mean() {
        let clustering = kmeans(&pts(&[1.0, 2.0, 6.0]), 1, 9).unwrap();
        assert_eq!(clustering.cluster_count(), 1);
        assert!((clustering.clusters[0].centroid[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn kmeans_k_equals_n_gives_singletons() {
        let clustering = kmeans(&pts(&[1.0, 2.0, 6.0, 9.0]), 4, 3).unwrap();
        assert_eq!(clustering.cluster_count(), 4);
        for c in &clustering.clusters {
            assert_eq!(c.members.len(), 1);
        }
    }

    #[test]
    fn kmeans_rejects_k_above_item_count() {
        assert!(matches!(
            kmeans(&pts(&[1.0]), 2, 0),
            Err(Error::KExceedsItems { k: 2, n: 1 })
        ));
    }

    #[test]
    fn bic_prefers_the_true_split_on_separated_points() {
        let p = pts(&[0.0, 0.1, 10.0, 10.1]);
        let two = kmeans(&p, 2, 1).unwrap();
        assert!(bic_score(&p, &two) > bic_score(&p, &Clustering::single(&p)));
    }

    #[test]
    fn bic_prefers_one_cluster_for_identical_points() {
        let p = pts(&[5.0, 5.0, 5.0, 5.0]);
        let single = Clustering::single(&p);
        for seed in 0..4 {
            let split = kmeans(&p, 2, seed).unwrap();
            assert!(bic_score(&p, &single) >= bic_score(&p, &split));
        }
    }

    #[test]
    fn bic_is_finite_for_a_single_point() {
        let p = pts(&[2.5]);
        assert!(bic_score(&p, &Clustering::single(&p)).is_finite());
    }

    #[test]
    fn xmeans_finds_two_separated_clusters() {
        let clustering = xmeans_cluster(&pts(&[0.0, 0.1, 10.0, 10.1]), 4, 7);
        assert_eq!(clustering.cluster_count(), 2);
        let mut members: Vec<Vec<usize>> = clustering
            .clusters
            .iter()
            .map(|c| c.members.clone())
            .collect();
        members.sort();
        assert_eq!(members, vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn xmeans_single_item() {
        let clustering = xmeans_cluster(&pts(&[3.0]), 5, 0);
        assert_eq!(clustering.cluster_count(), 1);
        assert_eq!(clustering.clusters[0].members, vec![0]);
    }

    #[test]
    fn xmeans_identical_points_stay_together() {
        for seed in 0..8 {
            let clustering = xmeans_cluster(&pts(&[1.0; 6]), 6, seed);
            assert_eq!(clustering.cluster_count(), 1);
        }
    }

    #[test]
    fn xmeans_respects_k_max() {
        let values: Vec<f64> = (0..12).map(|i| (i * 100) as f64).collect();
        let clustering = xmeans_cluster(&pts(&values), 3, 11);
        assert!(clustering.cluster_count() <= 3);
    }

    proptest! {
        #[test]
        fn xmeans_is_deterministic_and_bounded(
            values in prop::collection::vec(-50.0f64..50.0, 1..24),
            seed in any::<u64>(),
        ) {
            let p = pts(&values);
            let a = xmeans_cluster(&p, values.len(), seed);
            let b = xmeans_cluster(&p, values.len(), seed);
            prop_assert_eq!(&a, &b);
            prop_assert!(a.cluster_count() >= 1);
            prop_assert!(a.cluster_count() <= values.len());
            let mut covered: Vec<usize> =
                a.clusters.iter().flat_map(|c| c.members.iter().copied()).collect();
            covered.sort_unstable();
            prop_assert_eq!(covered, (0..values.len()).collect::<Vec<_>>());
        }

        #[test]
        fn clustering_is_invariant_under_point_permutation(
            values in prop::collection::vec(-50.0f64..50.0, 2..16),
            seed in any::<u64>(),
            rot in 1usize..15,
        ) {
            let n = values.len();
            let ids: Vec<usize> = (0..n).collect();
            let vectors: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
            let base = PointSet::new(ids.clone(), vectors.clone()).unwrap();

            let rot = rot % n;
            let mut perm_ids = ids;
            perm_ids.rotate_left(rot);
            let mut perm_vecs = vectors;
            perm_vecs.rotate_left(rot);
            let permuted = PointSet::new(perm_ids, perm_vecs).unwrap();

            let a = xmeans_cluster(&base, n, seed);
            let b = xmeans_cluster(&permuted, n, seed);
            prop_assert_eq!(a, b);
        }

        // exercises the internal Lloyd SSE debug assertion across many shapes
        #[test]
        fn kmeans_covers_all_points_with_k_clusters(
            values in prop::collection::vec(-9.0f64..9.0, 3..20),
            k in 1usize..6,
            seed in any::<u64>(),
        ) {
            let k = k.min(values.len());
            let clustering = kmeans(&pts(&values), k, seed).unwrap();
            prop_assert_eq!(clustering.cluster_count(), k);
            let total: usize = clustering.clusters.iter().map(|c| c.members.len()).sum();
            prop_assert_eq!(total, values.len());
            for c in &clustering.clusters {
                let mean: f64 =
                    c.members.iter().map(|&i| values[i]).sum::<f64>() / c.members.len() as f64;
                prop_assert!((mean - c.centroid[0]).abs() < 1e-9);
            }
        }
    }
}
