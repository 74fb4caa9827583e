//! Independent reference implementations used by the integration and
//! acceptance tests. Each one follows the textbook definition as directly as
//! possible and shares no code with the library.

#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-5.0..5.0)).collect()
}

pub fn random_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| random_vec(rng, d)).collect()
}

/// Random labels in `0..k` using every id at least once.
pub fn random_labels(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    loop {
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        if (0..k).all(|c| labels.contains(&c)) {
            return labels;
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

// ---- distances ----

/// DTW by memoized recursion over the full cost matrix.
pub fn dtw_memo(x: &[f64], y: &[f64]) -> f64 {
    fn go(i: usize, j: usize, x: &[f64], y: &[f64], memo: &mut HashMap<(usize, usize), f64>) -> f64 {
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let c = (x[i] - y[j]) * (x[i] - y[j]);
        let v = if i == 0 && j == 0 {
            c
        } else if i == 0 {
            c + go(0, j - 1, x, y, memo)
        } else if j == 0 {
            c + go(i - 1, 0, x, y, memo)
        } else {
            let a = go(i - 1, j, x, y, memo);
            let b = go(i, j - 1, x, y, memo);
            let d = go(i - 1, j - 1, x, y, memo);
            c + a.min(b).min(d)
        };
        memo.insert((i, j), v);
        v
    }
    go(x.len() - 1, y.len() - 1, x, y, &mut HashMap::new()).sqrt()
}

/// SBD by scanning every shift of the raw cross-correlation.
pub fn sbd_brute(x: &[f64], y: &[f64]) -> f64 {
    let d = x.len() as isize;
    let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut best = f64::NEG_INFINITY;
    for s in -(d - 1)..d {
        let mut cc = 0.0;
        for i in 0..d {
            let j = i - s;
            if (0..d).contains(&j) {
                cc += x[i as usize] * y[j as usize];
            }
        }
        best = best.max(cc / (nx * ny));
    }
    1.0 - best
}

// ---- validity indexes ----

pub fn silhouette_direct(rows: &[Vec<f64>], labels: &[usize]) -> f64 {
    let n = rows.len();
    let k = labels.iter().max().unwrap() + 1;
    let mut total = 0.0;
    for i in 0..n {
        let own: Vec<usize> = (0..n).filter(|&j| j != i && labels[j] == labels[i]).collect();
        if own.is_empty() {
            continue;
        }
        let a = own.iter().map(|&j| dist(&rows[i], &rows[j])).sum::<f64>() / own.len() as f64;
        let mut b = f64::INFINITY;
        for c in (0..k).filter(|&c| c != labels[i]) {
            let other: Vec<usize> = (0..n).filter(|&j| labels[j] == c).collect();
            if other.is_empty() {
                continue;
            }
            let m = other.iter().map(|&j| dist(&rows[i], &rows[j])).sum::<f64>() / other.len() as f64;
            b = b.min(m);
        }
        total += (b - a) / a.max(b);
    }
    total / n as f64
}

fn centroids(rows: &[Vec<f64>], labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    let d = rows[0].len();
    (0..k)
        .map(|c| {
            let members: Vec<&Vec<f64>> = rows
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == c)
                .map(|(r, _)| r)
                .collect();
            (0..d)
                .map(|j| members.iter().map(|r| r[j]).sum::<f64>() / members.len() as f64)
                .collect()
        })
        .collect()
}

pub fn davies_bouldin_direct(rows: &[Vec<f64>], labels: &[usize]) -> f64 {
    let k = labels.iter().max().unwrap() + 1;
    let cents = centroids(rows, labels, k);
    let s: Vec<f64> = (0..k)
        .map(|c| {
            let ds: Vec<f64> = rows
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == c)
                .map(|(r, _)| dist(r, &cents[c]))
                .collect();
            ds.iter().sum::<f64>() / ds.len() as f64
        })
        .collect();
    let mut total = 0.0;
    for i in 0..k {
        let mut worst = f64::NEG_INFINITY;
        for j in (0..k).filter(|&j| j != i) {
            worst = worst.max((s[i] + s[j]) / dist(&cents[i], &cents[j]));
        }
        total += worst;
    }
    total / k as f64
}

/// Caliński-Harabasz from explicit between- and within-cluster scatter matrices.
pub fn calinski_harabasz_direct(rows: &[Vec<f64>], labels: &[usize]) -> f64 {
    let n = rows.len();
    let d = rows[0].len();
    let k = labels.iter().max().unwrap() + 1;
    let cents = centroids(rows, labels, k);
    let mean: Vec<f64> = (0..d)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let mut b = vec![vec![0.0; d]; d];
    let mut w = vec![vec![0.0; d]; d];
    for c in 0..k {
        let nc = labels.iter().filter(|&&l| l == c).count() as f64;
        for p in 0..d {
            for q in 0..d {
                b[p][q] += nc * (cents[c][p] - mean[p]) * (cents[c][q] - mean[q]);
            }
        }
    }
    for (r, &l) in rows.iter().zip(labels) {
        for p in 0..d {
            for q in 0..d {
                w[p][q] += (r[p] - cents[l][p]) * (r[q] - cents[l][q]);
            }
        }
    }
    let tb: f64 = (0..d).map(|p| b[p][p]).sum();
    let tw: f64 = (0..d).map(|p| w[p][p]).sum();
    (tb / (k - 1) as f64) / (tw / (n - k) as f64)
}

// ---- partitions ----

/// Adjusted Rand index by counting agreeing pairs one by one.
pub fn ari_pairs(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let (mut both, mut only_a, mut only_b, mut total) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        for j in (i + 1)..n {
            let sa = a[i] == a[j];
            let sb = b[i] == b[j];
            total += 1.0;
            if sa && sb {
                both += 1.0;
            }
            if sa {
                only_a += 1.0;
            }
            if sb {
                only_b += 1.0;
            }
        }
    }
    let expected = only_a * only_b / total;
    let max = (only_a + only_b) / 2.0;
    if max == expected {
        return 1.0;
    }
    (both - expected) / (max - expected)
}

/// Canonical form of a partition: ids by first appearance.
pub fn canonical(labels: &[usize]) -> Vec<usize> {
    let mut map = BTreeMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect()
}

// ---- clustering ----

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    Single,
    Complete,
    Average,
    Ward,
}

/// One step of [`agglomerate_naive`]: clusters identified by their smallest member.
#[derive(Debug, Clone, Copy)]
pub struct NaiveMerge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
}

/// Agglomeration recomputing every inter-cluster distance from the members at
/// every step. Ward uses the centroid form `sqrt(2 na nb / (na + nb)) |ca - cb|`.
pub fn agglomerate_naive(rows: &[Vec<f64>], link: Link) -> Vec<NaiveMerge> {
    let mut clusters: Vec<Vec<usize>> = (0..rows.len()).map(|i| vec![i]).collect();
    let mut merges = Vec::new();
    let linkage = |p: &[usize], q: &[usize]| -> f64 {
        let pair = p.iter().flat_map(|&i| q.iter().map(move |&j| (i, j)));
        match link {
            Link::Single => pair
                .map(|(i, j)| dist(&rows[i], &rows[j]))
                .fold(f64::INFINITY, f64::min),
            Link::Complete => pair.map(|(i, j)| dist(&rows[i], &rows[j])).fold(0.0, f64::max),
            Link::Average => pair.map(|(i, j)| dist(&rows[i], &rows[j])).sum::<f64>() / (p.len() * q.len()) as f64,
            Link::Ward => {
                let d = rows[0].len();
                let c = |s: &[usize]| -> Vec<f64> {
                    (0..d)
                        .map(|t| s.iter().map(|&i| rows[i][t]).sum::<f64>() / s.len() as f64)
                        .collect()
                };
                let (np, nq) = (p.len() as f64, q.len() as f64);
                (2.0 * np * nq / (np + nq)).sqrt() * dist(&c(p), &c(q))
            }
        }
    };
    while clusters.len() > 1 {
        let mut best = (0, 1, f64::INFINITY);
        for i in 0..clusters.len() {
            for j in (i + 1)..clusters.len() {
                let v = linkage(&clusters[i], &clusters[j]);
                if v < best.2 {
                    best = (i, j, v);
                }
            }
        }
        let (i, j, h) = best;
        let moved = clusters.remove(j);
        let (a, b) = (clusters[i][0].min(moved[0]), clusters[i][0].max(moved[0]));
        clusters[i].extend(moved);
        clusters[i].sort_unstable();
        clusters.sort_by_key(|c| c[0]);
        merges.push(NaiveMerge { a, b, height: h });
    }
    merges
}

/// Flat labels after the first `steps` merges, ids by first appearance.
pub fn cut(n: usize, merges: &[NaiveMerge], steps: usize) -> Vec<usize> {
    let mut owner: Vec<usize> = (0..n).collect();
    for m in &merges[..steps] {
        for o in owner.iter_mut() {
            if *o == m.b {
                *o = m.a;
            }
        }
    }
    canonical(&owner)
}

/// Best total distance to the nearest medoid over every medoid subset of size k.
pub fn best_medoid_cost(rows: &[Vec<f64>], k: usize) -> f64 {
    let n = rows.len();
    let mut best = f64::INFINITY;
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        let cost: f64 = (0..n)
            .map(|i| {
                subset
                    .iter()
                    .map(|&m| dist(&rows[i], &rows[m]))
                    .fold(f64::INFINITY, f64::min)
            })
            .sum();
        best = best.min(cost);
        // next combination in lexicographic order
        let mut t = k;
        while t > 0 && subset[t - 1] == n - k + t - 1 {
            t -= 1;
        }
        if t == 0 {
            return best;
        }
        subset[t - 1] += 1;
        for u in t..k {
            subset[u] = subset[u - 1] + 1;
        }
    }
}

// ---- linear algebra ----

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns eigenvalues
/// in descending order with eigenvectors as columns of the second result.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut a: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].partial_cmp(&a[i][i]).unwrap());
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = (0..n).map(|r| order.iter().map(|&i| v[r][i]).collect()).collect();
    (values, vectors)
}

/// Principal component scores of `rows` (centered) from the covariance matrix.
pub fn pca_scores(rows: &[Vec<f64>], p: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = rows.len();
    let d = rows[0].len();
    let mean: Vec<f64> = (0..d)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let centered: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();
    let cov: Vec<Vec<f64>> = (0..d)
        .map(|a| {
            (0..d)
                .map(|b| centered.iter().map(|r| r[a] * r[b]).sum::<f64>() / (n - 1) as f64)
                .collect()
        })
        .collect();
    let (values, vectors) = jacobi_eigen(&cov);
    let scores = centered
        .iter()
        .map(|r| (0..p).map(|c| (0..d).map(|j| r[j] * vectors[j][c]).sum()).collect())
        .collect();
    let trace: f64 = values.iter().map(|v| v.max(0.0)).sum();
    let ratios = values[..p].iter().map(|v| v.max(0.0) / trace).collect();
    (scores, ratios)
}
