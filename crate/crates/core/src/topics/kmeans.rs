use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::TopicsError;
use crate::sparse::SparseVec;

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    /// Dense centroids, `k` rows of length `dim`.
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Inertia after every assignment step, first entry from the seeding.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
}

struct Centroid {
    dense: Vec<f64>,
    norm_sq: f64,
}

impl Centroid {
    fn new(dense: Vec<f64>) -> Self {
        let norm_sq = dense.iter().map(|v| v * v).sum();
        Self { dense, norm_sq }
    }

    fn dist_sq(&self, x: &SparseVec, x_norm_sq: f64) -> f64 {
        (x_norm_sq - 2.0 * x.dot_dense(&self.dense) + self.norm_sq).max(0.0)
    }
}

fn seed_plus_plus(vectors: &[SparseVec], norms: &[f64], dim: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<Centroid> {
    let n = vectors.len();
    let mut chosen = vec![false; n];
    let first = rng.gen_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![Centroid::new(vectors[first].to_dense(dim))];
    let mut closest: Vec<f64> = (0..n)
        .map(|i| centroids[0].dist_sq(&vectors[i], norms[i]))
        .collect();

    while centroids.len() < k {
        let total: f64 = (0..n).filter(|&i| !chosen[i]).map(|i| closest[i]).sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = None;
            for i in (0..n).filter(|&i| !chosen[i]) {
                target -= closest[i];
                if target < 0.0 && closest[i] > 0.0 {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave `target` marginally non-negative at the end
            pick.unwrap_or_else(|| (0..n).rev().find(|&i| !chosen[i] && closest[i] > 0.0).unwrap())
        } else {
            // every remaining point coincides with a center
            (0..n).find(|&i| !chosen[i]).unwrap()
        };
        chosen[pick] = true;
        let c = Centroid::new(vectors[pick].to_dense(dim));
        for i in 0..n {
            closest[i] = closest[i].min(c.dist_sq(&vectors[i], norms[i]));
        }
        centroids.push(c);
    }
    centroids
}

fn assign(vectors: &[SparseVec], norms: &[f64], centroids: &[Centroid]) -> (Vec<usize>, f64) {
    let mut inertia = 0.0;
    let assignments = vectors
        .iter()
        .zip(norms)
        .map(|(x, &ns)| {
            let (best, d) = centroids
                .iter()
                .enumerate()
                .map(|(c, cen)| (c, cen.dist_sq(x, ns)))
                .fold((0, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
            inertia += d;
            best
        })
        .collect();
    (assignments, inertia)
}

/// Lloyd's algorithm from k-means++ seeding. Stops when the assignment is
/// unchanged or after `max_iters` update steps. A cluster that empties keeps
/// its previous centroid.
pub fn kmeans(vectors: &[SparseVec], dim: usize, k: usize, seed: u64, max_iters: usize) -> Result<KMeansResult, TopicsError> {
    let n = vectors.len();
    if n == 0 {
        return Err(TopicsError::EmptyCorpus);
    }
    if k == 0 || k > n {
        return Err(TopicsError::InvalidK { k, n });
    }
    let norms: Vec<f64> = vectors.iter().map(SparseVec::norm_sq).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_plus_plus(vectors, &norms, dim, k, &mut rng);
    let (mut assignments, mut inertia) = assign(vectors, &norms, &centroids);
    let mut history = vec![inertia];
    let mut iterations = 0;

    while iterations < max_iters {
        iterations += 1;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (x, &c) in vectors.iter().zip(&assignments) {
            counts[c] += 1;
            for (i, v) in x.iter() {
                sums[c][i as usize] += v;
            }
        }
        for (c, (sum, count)) in sums.into_iter().zip(counts).enumerate() {
            if count > 0 {
                let inv = 1.0 / count as f64;
                centroids[c] = Centroid::new(sum.into_iter().map(|s| s * inv).collect());
            }
        }
        let (next, next_inertia) = assign(vectors, &norms, &centroids);
        history.push(next_inertia);
        inertia = next_inertia;
        if next == assignments {
            break;
        }
        assignments = next;
    }

    Ok(KMeansResult {
        assignments,
        centroids: centroids.into_iter().map(|c| c.dense).collect(),
        inertia,
        inertia_history: history,
        iterations,
    })
}

/// Runs [`kmeans`] `n_init` times from derived seeds and keeps the run with the
/// lowest final inertia (earliest run on ties).
pub fn kmeans_restarts(
    vectors: &[SparseVec],
    dim: usize,
    k: usize,
    seed: u64,
    max_iters: usize,
    n_init: usize,
) -> Result<KMeansResult, TopicsError> {
    let mut best: Option<KMeansResult> = None;
    for run in 0..n_init.max(1) as u64 {
        let run_seed = seed.wrapping_add(run.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let r = kmeans(vectors, dim, k, run_seed, max_iters)?;
        if best.as_ref().is_none_or(|b| r.inertia < b.inertia) {
            best = Some(r);
        }
    }
    Ok(best.expect("n_init >= 1"))
}

/// Mean silhouette over Euclidean distances. `dist` holds the pairwise
/// distance matrix of the points in row-major order.
pub fn mean_silhouette(dist: &[f64], n: usize, labels: &[usize], k: usize) -> f64 {
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    let mut total = 0.0;
    for i in 0..n {
        let own = labels[i];
        if sizes[own] <= 1 {
            continue; // silhouette of a singleton is 0
        }
        let mut sums = vec![0.0; k];
        for j in 0..n {
            if i != j {
                sums[labels[j]] += dist[i * n + j];
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        if b.is_finite() {
            let denom = a.max(b);
            if denom > 0.0 {
                total += (b - a) / denom;
            }
        }
    }
    total / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr_free::normal_pair;

    // Box-Muller, kept local so the test does not depend on the code under test.
    mod rand_distr_free {
        use rand::Rng;
        pub fn normal_pair<R: Rng>(rng: &mut R) -> (f64, f64) {
            let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
            let u2: f64 = rng.gen();
            let r = (-2.0 * u1.ln()).sqrt();
            let t = 2.0 * std::f64::consts::PI * u2;
            (r * t.cos(), r * t.sin())
        }
    }

    fn point(x: f64, y: f64) -> SparseVec {
        SparseVec::from_pairs(vec![(0, x), (1, y)])
    }

    fn blobs(seed: u64) -> (Vec<SparseVec>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = Vec::new();
        let mut truth = Vec::new();
        for (blob, (cx, cy)) in [(0usize, (0.0, 0.0)), (1, (10.0, 10.0))] {
            for _ in 0..20 {
                let (dx, dy) = normal_pair(&mut rng);
                pts.push(point(cx + 0.5 * dx + 1.0, cy + 0.5 * dy + 1.0));
                truth.push(blob);
            }
        }
        (pts, truth)
    }

    fn purity(assign: &[usize], truth: &[usize], k: usize) -> f64 {
        let mut hits = 0;
        for c in 0..k {
            let mut counts = [0usize; 2];
            for (a, t) in assign.iter().zip(truth) {
                if *a == c {
                    counts[*t] += 1;
                }
            }
            hits += counts.iter().max().unwrap();
        }
        hits as f64 / assign.len() as f64
    }

    #[test]
    fn two_blobs_are_recovered() {
        for seed in 0..10 {
            let (pts, truth) = blobs(seed);
            let r = kmeans(&pts, 2, 2, seed, 100).unwrap();
            assert_eq!(purity(&r.assignments, &truth, 2), 1.0, "seed {seed}");
        }
    }

    #[test]
    fn inertia_never_increases() {
        let (pts, _) = blobs(3);
        for k in 1..=6 {
            let r = kmeans(&pts, 2, k, 42, 100).unwrap();
            for w in r.inertia_history.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12), "k={k}: {:?}", r.inertia_history);
            }
        }
    }

    #[test]
    fn k_equal_n_gives_zero_inertia() {
        let pts: Vec<_> = (0..7).map(|i| point(i as f64, (i * i) as f64)).collect();
        let r = kmeans(&pts, 2, 7, 1, 10).unwrap();
        assert!(r.inertia.abs() < 1e-9);
        let mut seen = r.assignments.clone();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 7);
    }

    #[test]
    fn duplicates_do_not_break_seeding() {
        let pts = vec![point(1.0, 1.0); 4];
        let r = kmeans(&pts, 2, 3, 0, 10).unwrap();
        assert_eq!(r.inertia, 0.0);
    }

    #[test]
    fn k_larger_than_n_is_an_error() {
        let pts = vec![point(1.0, 0.0)];
        assert!(matches!(kmeans(&pts, 2, 2, 0, 10), Err(TopicsError::InvalidK { k: 2, n: 1 })));
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let (pts, _) = blobs(8);
        assert_eq!(kmeans(&pts, 2, 3, 5, 50).unwrap(), kmeans(&pts, 2, 3, 5, 50).unwrap());
    }

    #[test]
    fn silhouette_of_separated_clusters_is_high() {
        let pts = [point(0.0, 0.0), point(0.0, 1.0), point(10.0, 0.0), point(10.0, 1.0)];
        let n = pts.len();
        let dist: Vec<f64> = (0..n * n)
            .map(|ij| pts[ij / n].dist_sq(&pts[ij % n]).sqrt())
            .collect();
        let s = mean_silhouette(&dist, n, &[0, 0, 1, 1], 2);
        // a = 1, b = mean(10, sqrt(101)) for every point
        let b = (10.0 + 101f64.sqrt()) / 2.0;
        assert!((s - (b - 1.0) / b).abs() < 1e-12);
    }
}
