use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::TopicsError;
use crate::sparse::SparseVec;

/// Quadratic-memory limit on the number of items clustered at once.
pub const DEFAULT_ITEM_CAP: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    Average,
    Complete,
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Linkage::Average => "average",
            Linkage::Complete => "complete",
        })
    }
}

impl FromStr for Linkage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "average" => Ok(Linkage::Average),
            "complete" => Ok(Linkage::Complete),
            other => Err(format!("unknown linkage {other:?}")),
        }
    }
}

/// One agglomeration step. Leaves are nodes `0..n`; the merge at step `s`
/// creates node `n + s`. `left < right`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub n_leaves: usize,
    pub linkage: Linkage,
    pub merges: Vec<Merge>,
}

/// `1 - cos(a, b)`. Identical vectors are at distance exactly 0; a zero
/// vector is at distance 1 from any other vector.
pub fn cosine_distance(a: &SparseVec, b: &SparseVec) -> f64 {
    if a == b {
        return 0.0;
    }
    let denom = a.norm() * b.norm();
    if denom == 0.0 {
        return 1.0;
    }
    (1.0 - a.dot(b) / denom).clamp(0.0, 2.0)
}

/// Condensed upper-triangular distance matrix.
pub struct Condensed {
    n: usize,
    data: Vec<f64>,
}

impl Condensed {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        i * self.n - i * (i + 1) / 2 + (j - i - 1)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] = v;
    }
}

/// Agglomerative clustering under cosine distance.
pub fn hierarchical_cluster(vectors: &[SparseVec], linkage: Linkage, cap: usize) -> Result<Dendrogram, TopicsError> {
    let n = vectors.len();
    if n > cap {
        return Err(TopicsError::TooManyItems { n, cap });
    }
    let dist = Condensed::from_fn(n, |i, j| cosine_distance(&vectors[i], &vectors[j]));
    agglomerate(dist, linkage)
}

/// Agglomerates from a precomputed distance matrix. At each step the closest
/// pair of clusters is merged, ties going to the lexicographically smallest
/// pair of cluster slots; the merged cluster takes the smaller slot.
pub fn agglomerate(mut dist: Condensed, linkage: Linkage) -> Result<Dendrogram, TopicsError> {
    let n = dist.n;
    if n < 2 {
        return Err(TopicsError::TooFewItems(n));
    }
    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    let mut node = (0..n).collect::<Vec<_>>();
    let mut nn = vec![usize::MAX; n];
    let mut nnd = vec![f64::INFINITY; n];

    let scan_row = |i: usize, dist: &Condensed, active: &[bool]| -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        for j in i + 1..n {
            if active[j] {
                let d = dist.get(i, j);
                if d < best.1 {
                    best = (j, d);
                }
            }
        }
        best
    };
    for i in 0..n {
        (nn[i], nnd[i]) = scan_row(i, &dist, &active);
    }

    let mut merges = Vec::with_capacity(n - 1);
    for step in 0..n - 1 {
        let mut pick = (usize::MAX, f64::INFINITY);
        for i in 0..n {
            if active[i] && nn[i] != usize::MAX && nnd[i] < pick.1 {
                pick = (i, nnd[i]);
            }
        }
        let (i, height) = pick;
        let j = nn[i];

        let (ni, nj) = (size[i] as f64, size[j] as f64);
        for k in 0..n {
            if !active[k] || k == i || k == j {
                continue;
            }
            let (dik, djk) = (dist.get(i, k), dist.get(j, k));
            let merged = match linkage {
                Linkage::Average => (ni * dik + nj * djk) / (ni + nj),
                Linkage::Complete => dik.max(djk),
            };
            // both rules are reducible, so no later merge can sit below `height`
            dist.set(i, k, merged.max(height));
        }

        let (a, b) = (node[i].min(node[j]), node[i].max(node[j]));
        merges.push(Merge {
            left: a,
            right: b,
            height,
            size: size[i] + size[j],
        });
        active[j] = false;
        size[i] += size[j];
        node[i] = n + step;
        nn[j] = usize::MAX;

        (nn[i], nnd[i]) = scan_row(i, &dist, &active);
        for k in 0..n {
            if !active[k] || k == i {
                continue;
            }
            if nn[k] == i || nn[k] == j {
                (nn[k], nnd[k]) = scan_row(k, &dist, &active);
            } else if k < i {
                let d = dist.get(k, i);
                if d < nnd[k] || (d == nnd[k] && i < nn[k]) {
                    nn[k] = i;
                    nnd[k] = d;
                }
            }
        }
    }

    Ok(Dendrogram {
        n_leaves: n,
        linkage,
        merges,
    })
}
