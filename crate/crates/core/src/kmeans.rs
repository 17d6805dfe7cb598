//! Seeded k-means (Lloyd iterations, k-means++ seeding) over flat row-major
//! point matrices with squared-L2 cost.
//!
//! Points are stored as `f32` (pose vectors and similarity matrices are both
//! single precision); centers and all accumulations are `f64`. The assignment
//! step runs in parallel over points, center means are accumulated
//! sequentially in point order, so results are bitwise reproducible for a
//! given seed regardless of the thread count.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::seeded;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iters: usize,
    /// Stop once the total center shift, relative to the center norm, drops
    /// below this.
    pub tol: f64,
    pub seed: u64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        KMeansConfig {
            k,
            max_iters: 100,
            tol: 1e-6,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub dim: usize,
    /// `k x dim`, row-major.
    pub centers: Vec<f64>,
    pub assignments: Vec<usize>,
    pub inertia: f64,
    /// Inertia after each assignment step, the final one last.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
}

impl KMeansResult {
    pub fn k(&self) -> usize {
        self.centers.len() / self.dim
    }

    pub fn center(&self, c: usize) -> &[f64] {
        &self.centers[c * self.dim..(c + 1) * self.dim]
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

#[inline]
fn sq_dist(p: &[f32], c: &[f64]) -> f64 {
    p.iter()
        .zip(c)
        .map(|(&a, &b)| {
            let d = a as f64 - b;
            d * d
        })
        .sum()
}

/// Index of the nearest center and its squared distance; ties go to the
/// lowest index.
fn nearest(point: &[f32], centers: &[f64], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.chunks_exact(dim).enumerate() {
        let d = sq_dist(point, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Nearest center under L2, lowest index on ties.
pub fn kmeans_assign(point: &[f32], centers: &[f64], dim: usize) -> Result<usize> {
    if dim == 0 || point.len() != dim || centers.is_empty() || !centers.len().is_multiple_of(dim) {
        return Err(Error::invalid(format!(
            "point of dimension {} does not match centers of dimension {dim}",
            point.len()
        )));
    }
    Ok(nearest(point, centers, dim).0)
}

fn check_points(data: &[f32], dim: usize) -> Result<usize> {
    if dim == 0 || !data.len().is_multiple_of(dim) {
        return Err(Error::invalid(format!(
            "{} values do not form rows of dimension {dim}",
            data.len()
        )));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("k-means input has non-finite values"));
    }
    Ok(data.len() / dim)
}

fn assign_all(data: &[f32], dim: usize, centers: &[f64]) -> (Vec<usize>, Vec<f64>) {
    data.par_chunks_exact(dim)
        .map(|p| nearest(p, centers, dim))
        .unzip()
}

fn plus_plus_init<R: Rng>(data: &[f32], dim: usize, k: usize, rng: &mut R) -> Vec<f64> {
    let n = data.len() / dim;
    let row = |i: usize| &data[i * dim..(i + 1) * dim];
    let mut centers: Vec<f64> = Vec::with_capacity(k * dim);
    let first = rng.random_range(0..n);
    centers.extend(row(first).iter().map(|&v| v as f64));
    let mut d2: Vec<f64> = data
        .par_chunks_exact(dim)
        .map(|p| sq_dist(p, &centers[..dim]))
        .collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            // rounding can run past the end; fall back to the last positive weight
            if d2[chosen] == 0.0 {
                chosen = d2.iter().rposition(|&d| d > 0.0).unwrap_or(chosen);
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.extend(row(pick).iter().map(|&v| v as f64));
        let new_center = &centers[c * dim..(c + 1) * dim];
        d2.par_iter_mut()
            .zip(data.par_chunks_exact(dim))
            .for_each(|(d, p)| *d = d.min(sq_dist(p, new_center)));
    }
    centers
}

/// Gives every empty cluster the point currently farthest from its own center
/// (taken only from clusters that keep at least one other member).
fn repair_empty(
    data: &[f32],
    dim: usize,
    centers: &mut [f64],
    assignments: &mut [usize],
    dists: &mut [f64],
) {
    let k = centers.len() / dim;
    let mut sizes = vec![0usize; k];
    for &a in assignments.iter() {
        sizes[a] += 1;
    }
    for c in 0..k {
        if sizes[c] > 0 {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, (&a, &d)) in assignments.iter().zip(dists.iter()).enumerate() {
            if sizes[a] > 1 && best.is_none_or(|(_, bd)| d > bd) {
                best = Some((i, d));
            }
        }
        let Some((i, _)) = best else { break };
        sizes[assignments[i]] -= 1;
        sizes[c] = 1;
        assignments[i] = c;
        dists[i] = 0.0;
        for (dst, &v) in centers[c * dim..(c + 1) * dim]
            .iter_mut()
            .zip(&data[i * dim..(i + 1) * dim])
        {
            *dst = v as f64;
        }
    }
}

fn update_centers(data: &[f32], dim: usize, assignments: &[usize], centers: &mut [f64]) {
    let k = centers.len() / dim;
    let mut sums = vec![0.0f64; k * dim];
    let mut counts = vec![0usize; k];
    for (p, &a) in data.chunks_exact(dim).zip(assignments) {
        counts[a] += 1;
        for (s, &v) in sums[a * dim..(a + 1) * dim].iter_mut().zip(p) {
            *s += v as f64;
        }
    }
    for c in 0..k {
        if counts[c] == 0 {
            continue;
        }
        let count = counts[c] as f64;
        for (dst, s) in centers[c * dim..(c + 1) * dim]
            .iter_mut()
            .zip(&sums[c * dim..(c + 1) * dim])
        {
            *dst = s / count;
        }
    }
}

/// Runs k-means++ seeded Lloyd iterations on `data` (`N x dim`, row-major).
pub fn kmeans_fit(data: &[f32], dim: usize, cfg: &KMeansConfig) -> Result<KMeansResult> {
    let n = check_points(data, dim)?;
    if cfg.k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if n < cfg.k {
        return Err(Error::invalid(format!(
            "k-means needs at least k={} points, got {n}",
            cfg.k
        )));
    }
    let mut rng = seeded(cfg.seed);
    let mut centers = plus_plus_init(data, dim, cfg.k, &mut rng);
    let mut history: Vec<f64> = Vec::new();
    let mut iterations = 0;

    for _ in 0..cfg.max_iters {
        iterations += 1;
        let (mut assignments, mut dists) = assign_all(data, dim, &centers);
        let inertia: f64 = dists.iter().sum();
        if let Some(&prev) = history.last() {
            debug_assert!(
                inertia <= prev + 1e-9 * prev.abs().max(1.0),
                "inertia increased: {prev} -> {inertia}"
            );
        }
        history.push(inertia);
        repair_empty(data, dim, &mut centers, &mut assignments, &mut dists);

        let old = centers.clone();
        update_centers(data, dim, &assignments, &mut centers);
        let shift: f64 = old
            .iter()
            .zip(&centers)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let scale = old.iter().map(|v| v * v).sum::<f64>().sqrt();
        if shift <= cfg.tol * scale.max(f64::MIN_POSITIVE) {
            break;
        }
    }

    let (mut assignments, mut dists) = assign_all(data, dim, &centers);
    repair_empty(data, dim, &mut centers, &mut assignments, &mut dists);
    let inertia = dists.iter().sum();
    history.push(inertia);
    Ok(KMeansResult {
        dim,
        centers,
        assignments,
        inertia,
        inertia_history: history,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn brute_force_nearest(p: &[f32], centers: &[f64], dim: usize) -> usize {
        let d: Vec<f64> = centers
            .chunks(dim)
            .map(|c| {
                p.iter()
                    .zip(c)
                    .map(|(&a, &b)| (a as f64 - b).powi(2))
                    .sum::<f64>()
            })
            .collect();
        let min = d.iter().cloned().fold(f64::INFINITY, f64::min);
        d.iter().position(|&x| x == min).unwrap()
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let data = [1.0f32, 2.0, 3.0, 4.0, 5.0, 9.0];
        let r = kmeans_fit(&data, 2, &KMeansConfig::new(1, 0)).unwrap();
        assert!((r.centers[0] - 3.0).abs() < 1e-12);
        assert!((r.centers[1] - 5.0).abs() < 1e-12);
        assert_eq!(r.assignments, vec![0, 0, 0]);
    }

    #[test]
    fn two_blobs() {
        let mut rng = seeded(11);
        let noise = Normal::new(0.0, 0.3).unwrap();
        let mut data = Vec::new();
        for i in 0..400 {
            let (cx, cy) = if i % 2 == 0 { (-3.0, 0.0) } else { (3.0, 1.0) };
            data.push((cx + noise.sample(&mut rng)) as f32);
            data.push((cy + noise.sample(&mut rng)) as f32);
        }
        let mean = |parity: usize, c: usize| {
            let v: Vec<f64> = data
                .chunks(2)
                .enumerate()
                .filter(|(i, _)| i % 2 == parity)
                .map(|(_, p)| p[c] as f64)
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        let r = kmeans_fit(&data, 2, &KMeansConfig::new(2, 5)).unwrap();
        for parity in 0..2 {
            let target = [mean(parity, 0), mean(parity, 1)];
            let hit = (0..2).any(|c| {
                let ctr = r.center(c);
                (ctr[0] - target[0]).abs() < 0.1 && (ctr[1] - target[1]).abs() < 0.1
            });
            assert!(hit, "no center near blob mean {target:?}: {:?}", r.centers);
        }
        assert!(r.inertia_history.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    }

    #[test]
    fn fit_is_deterministic() {
        let mut rng = seeded(3);
        let data: Vec<f32> = (0..600).map(|_| rng.random_range(-1.0..1.0)).collect();
        let cfg = KMeansConfig::new(7, 42);
        let a = kmeans_fit(&data, 3, &cfg).unwrap();
        let b = kmeans_fit(&data, 3, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn result_is_a_fixed_point_of_assignment() {
        let mut rng = seeded(8);
        let data: Vec<f32> = (0..900).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = kmeans_fit(&data, 3, &KMeansConfig::new(6, 1)).unwrap();
        for (p, &a) in data.chunks(3).zip(&r.assignments) {
            assert_eq!(kmeans_assign(p, &r.centers, 3).unwrap(), a);
        }
        assert!(r.cluster_sizes().iter().all(|&s| s > 0));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            kmeans_fit(&[1.0, 2.0], 1, &KMeansConfig::new(3, 0)),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            kmeans_fit(&[1.0, f32::NAN], 1, &KMeansConfig::new(1, 0)),
            Err(Error::InvalidInput(_))
        ));
        assert!(kmeans_assign(&[1.0], &[0.0, 0.0], 2).is_err());
    }

    #[test]
    fn assign_examples() {
        let centers = [0.0, 0.0, 1.0, 1.0, 5.0, 5.0, 2.0, -1.0];
        assert_eq!(kmeans_assign(&[2.0, -1.0], &centers, 2).unwrap(), 3);
        // equidistant from centers 0 and 1
        assert_eq!(kmeans_assign(&[0.5, 0.5], &centers, 2).unwrap(), 0);
        let mut rng = seeded(2);
        for _ in 0..200 {
            let p = [
                rng.random_range(-2.0f32..6.0),
                rng.random_range(-2.0f32..6.0),
            ];
            assert_eq!(
                kmeans_assign(&p, &centers, 2).unwrap(),
                brute_force_nearest(&p, &centers, 2)
            );
        }
    }

    #[test]
    fn duplicate_points_still_fill_every_cluster() {
        let data = vec![1.0f32; 10];
        let r = kmeans_fit(&data, 2, &KMeansConfig::new(3, 0)).unwrap();
        assert_eq!(r.k(), 3);
        assert!(r.cluster_sizes().iter().all(|&s| s > 0));
        assert!(r.centers.iter().all(|&c| c == 1.0));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]
        #[test]
        fn fit_invariants(
            data in proptest::collection::vec(-5.0f32..5.0, 2 * 12..2 * 40),
            k in 1usize..6,
            seed in proptest::prelude::any::<u64>(),
        ) {
            let data = &data[..data.len() / 2 * 2];
            let r = kmeans_fit(data, 2, &KMeansConfig::new(k, seed)).unwrap();
            proptest::prop_assert_eq!(r.k(), k);
            proptest::prop_assert!(r.cluster_sizes().iter().all(|&s| s > 0));
            for w in r.inertia_history.windows(2) {
                proptest::prop_assert!(w[1] <= w[0] * (1.0 + 1e-9) + 1e-9);
            }
            for (p, &a) in data.chunks(2).zip(&r.assignments) {
                let best = brute_force_nearest(p, &r.centers, 2);
                proptest::prop_assert!(
                    (sq_dist(p, r.center(a)) - sq_dist(p, r.center(best))).abs() < 1e-9
                );
            }
        }
    }
}
