//! Day clustering: k-means over 72-dimensional price features with either
//! a dynamic-time-warping or a Euclidean metric.
//!
//! Each day is featurized as the concatenation of its z-normalized hourly
//! energy, regulation (capacity plus performance), and reserve price
//! vectors. DTW centroids are refined by barycenter averaging; Euclidean
//! centroids are arithmetic means. Initialization is k-means++ driven by a
//! seeded ChaCha stream, so runs are reproducible.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market::{MarketDay, HOURS};

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("empty input")]
    EmptyInput,
    #[error("k = {k} exceeds the {distinct} distinct day profiles")]
    KTooLarge { k: usize, distinct: usize },
    #[error("k must be at least 1")]
    ZeroClusters,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Dtw,
    Euclidean,
}

/// Classic dynamic-time-warping dynamic program with squared pointwise
/// cost and no warping window. Symmetric; zero for identical sequences.
pub fn dtw_distance(a: &[f64], b: &[f64]) -> Result<f64, ClusterError> {
    if a.is_empty() || b.is_empty() {
        return Err(ClusterError::EmptyInput);
    }
    let n = a.len();
    let m = b.len();
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut cur = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for i in 1..=n {
        cur[0] = f64::INFINITY;
        for j in 1..=m {
            let d = a[i - 1] - b[j - 1];
            let cost = d * d;
            cur[j] = cost + prev[j].min(cur[j - 1]).min(prev[j - 1]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m])
}

/// Optimal warping path of the DTW dynamic program, as (i, j) index pairs.
/// Ties prefer the diagonal step, then advancing `a`, then advancing `b`.
fn dtw_path(a: &[f64], b: &[f64]) -> Vec<(usize, usize)> {
    let n = a.len();
    let m = b.len();
    let mut dp = vec![f64::INFINITY; (n + 1) * (m + 1)];
    let idx = |i: usize, j: usize| i * (m + 1) + j;
    dp[idx(0, 0)] = 0.0;
    for i in 1..=n {
        for j in 1..=m {
            let d = a[i - 1] - b[j - 1];
            let cost = d * d;
            let best = dp[idx(i - 1, j - 1)]
                .min(dp[idx(i - 1, j)])
                .min(dp[idx(i, j - 1)]);
            dp[idx(i, j)] = cost + best;
        }
    }
    let mut path = Vec::with_capacity(n + m);
    let (mut i, mut j) = (n, m);
    while i > 0 && j > 0 {
        path.push((i - 1, j - 1));
        let diag = dp[idx(i - 1, j - 1)];
        let up = dp[idx(i - 1, j)];
        let left = dp[idx(i, j - 1)];
        if diag <= up && diag <= left {
            i -= 1;
            j -= 1;
        } else if up <= left {
            i -= 1;
        } else {
            j -= 1;
        }
    }
    while i > 0 {
        path.push((i - 1, 0));
        i -= 1;
    }
    while j > 0 {
        path.push((0, j - 1));
        j -= 1;
    }
    path.reverse();
    path
}

fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Squared-distance measure under the configured metric: the DTW dynamic
/// program already accumulates squared costs, so it is used directly.
fn sq_distance(metric: Metric, a: &[f64], b: &[f64]) -> f64 {
    match metric {
        Metric::Dtw => dtw_distance(a, b).expect("feature vectors are non-empty"),
        Metric::Euclidean => squared_euclidean(a, b),
    }
}

fn z_normalize(v: &[f64]) -> Vec<f64> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    if sd == 0.0 {
        return vec![0.0; v.len()];
    }
    v.iter().map(|x| (x - mean) / sd).collect()
}

/// 72-dimensional feature vector: z-normalized energy, combined regulation
/// (capacity + performance), and reserve price profiles, concatenated.
pub fn featurize(day: &MarketDay) -> Vec<f64> {
    let reg: Vec<f64> = (0..HOURS)
        .map(|t| day.price_reg_cap[t] + day.price_reg_perf[t])
        .collect();
    let mut out = Vec::with_capacity(3 * HOURS);
    out.extend(z_normalize(&day.price_energy));
    out.extend(z_normalize(&reg));
    out.extend(z_normalize(&day.price_res));
    out
}

/// Result of clustering one year of days.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub metric: Metric,
    pub seed: u64,
    /// Centroids in z-normalized feature space; assignments are nearest
    /// centroid under the metric.
    pub feature_centroids: Vec<Vec<f64>>,
    /// Per-cluster mean price profiles in raw price space, labeled with the
    /// earliest member date. These feed the representative-day dispatch and
    /// the CSV export.
    pub centroid_days: Vec<MarketDay>,
    pub assignments: BTreeMap<NaiveDate, usize>,
    /// Number of assigned days per cluster.
    pub day_counts: Vec<usize>,
    /// Within-cluster sum of squared distances under the metric.
    pub inertia: f64,
}

const MAX_ITERS: usize = 50;
const DBA_ITERS: usize = 10;

/// Seeded k-means++ initialization in feature space.
fn init_centroids(features: &[Vec<f64>], k: usize, metric: Metric, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = features.len();
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    let first = rng.random_range(0..n);
    centroids.push(features[first].clone());
    let mut d2: Vec<f64> = features
        .iter()
        .map(|f| sq_distance(metric, f, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            // all remaining days coincide with a centroid; pick uniformly
            rng.random_range(0..n)
        } else {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                target -= w;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        };
        centroids.push(features[next].clone());
        let last = centroids.last().unwrap();
        for (i, f) in features.iter().enumerate() {
            let d = sq_distance(metric, f, last);
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    centroids
}

fn assign(features: &[Vec<f64>], centroids: &[Vec<f64>], metric: Metric) -> (Vec<usize>, f64) {
    let mut labels = Vec::with_capacity(features.len());
    let mut inertia = 0.0;
    for f in features {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (c, centroid) in centroids.iter().enumerate() {
            let d = sq_distance(metric, f, centroid);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        labels.push(best);
        inertia += best_d;
    }
    (labels, inertia)
}

/// One round of DTW barycenter averaging: aligns every member to the
/// current barycenter and averages the values mapped onto each index.
fn dba_step(members: &[&Vec<f64>], barycenter: &[f64]) -> Vec<f64> {
    let mut sums = vec![0.0; barycenter.len()];
    let mut counts = vec![0usize; barycenter.len()];
    for member in members {
        for (mi, bi) in dtw_path(member, barycenter) {
            sums[bi] += member[mi];
            counts[bi] += 1;
        }
    }
    sums.iter()
        .zip(&counts)
        .zip(barycenter)
        .map(|((s, &c), &old)| if c > 0 { s / c as f64 } else { old })
        .collect()
}

fn update_centroid(members: &[&Vec<f64>], current: &[f64], metric: Metric) -> Vec<f64> {
    match metric {
        Metric::Euclidean => {
            let dim = current.len();
            let mut mean = vec![0.0; dim];
            for m in members {
                for (acc, v) in mean.iter_mut().zip(m.iter()) {
                    *acc += v;
                }
            }
            for v in &mut mean {
                *v /= members.len() as f64;
            }
            mean
        }
        Metric::Dtw => {
            let mut bary = current.to_vec();
            for _ in 0..DBA_ITERS {
                bary = dba_step(members, &bary);
            }
            bary
        }
    }
}

/// Clusters the days of a year into `k` groups of similar price shape.
pub fn cluster_days(
    days: &[MarketDay],
    k: usize,
    metric: Metric,
    seed: u64,
) -> Result<ClusterModel, ClusterError> {
    if days.is_empty() {
        return Err(ClusterError::EmptyInput);
    }
    if k == 0 {
        return Err(ClusterError::ZeroClusters);
    }
    let features: Vec<Vec<f64>> = days.iter().map(featurize).collect();
    let mut distinct: Vec<&Vec<f64>> = Vec::new();
    for f in &features {
        if !distinct.iter().any(|d| d.as_slice() == f.as_slice()) {
            distinct.push(f);
        }
    }
    if k > distinct.len() {
        return Err(ClusterError::KTooLarge {
            k,
            distinct: distinct.len(),
        });
    }

    let mut centroids = init_centroids(&features, k, metric, seed);
    let (mut labels, mut inertia) = assign(&features, &centroids, metric);
    for _ in 0..MAX_ITERS {
        for (c, centroid) in centroids.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = features
                .iter()
                .zip(&labels)
                .filter(|(_, &l)| l == c)
                .map(|(f, _)| f)
                .collect();
            if !members.is_empty() {
                *centroid = update_centroid(&members, centroid, metric);
            }
        }
        let (next_labels, next_inertia) = assign(&features, &centroids, metric);
        let unchanged = next_labels == labels;
        labels = next_labels;
        inertia = next_inertia;
        if unchanged {
            break;
        }
    }

    let mut day_counts = vec![0usize; k];
    let mut assignments = BTreeMap::new();
    for (day, &label) in days.iter().zip(&labels) {
        day_counts[label] += 1;
        assignments.insert(day.date, label);
    }

    // raw-price centroid profiles, labeled with the earliest member date
    let mut centroid_days = Vec::with_capacity(k);
    for c in 0..k {
        let members: Vec<&MarketDay> = days
            .iter()
            .zip(&labels)
            .filter(|(_, &l)| l == c)
            .map(|(d, _)| d)
            .collect();
        let date = members.iter().map(|d| d.date).min().unwrap_or(days[0].date);
        let mean_of = |pick: fn(&MarketDay) -> &Vec<f64>| -> Vec<f64> {
            let mut mean = vec![0.0; HOURS];
            for m in &members {
                for (acc, v) in mean.iter_mut().zip(pick(m)) {
                    *acc += v;
                }
            }
            if !members.is_empty() {
                for v in &mut mean {
                    *v /= members.len() as f64;
                }
            }
            mean
        };
        centroid_days.push(MarketDay {
            date,
            price_energy: mean_of(|d| &d.price_energy),
            price_reg_cap: mean_of(|d| &d.price_reg_cap),
            price_reg_perf: mean_of(|d| &d.price_reg_perf),
            price_res: mean_of(|d| &d.price_res),
        });
    }

    Ok(ClusterModel {
        k,
        metric,
        seed,
        feature_centroids: centroids,
        centroid_days,
        assignments,
        day_counts,
        inertia,
    })
}

/// Squared distance from a day's features to a feature-space centroid;
/// exposed so callers can verify nearest-centroid assignments.
pub fn distance_to_centroid(model: &ClusterModel, day: &MarketDay, cluster: usize) -> f64 {
    sq_distance(
        model.metric,
        &featurize(day),
        &model.feature_centroids[cluster],
    )
}
