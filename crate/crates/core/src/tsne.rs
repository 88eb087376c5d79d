//! Exact O(N^2) t-SNE for the learned feature spaces.
//!
//! High-dimensional affinities use Gaussian kernels whose per-point
//! bandwidths are found by binary search so each conditional row hits the
//! target perplexity (2 to its Shannon entropy). The low-dimensional
//! kernel is Student-t with one degree of freedom; the embedding descends
//! the KL(P || Q) objective with momentum and early exaggeration.
//!
//! No tree approximation: every feature set here is desk-scale, and the
//! exact gradient is what the finite-difference check verifies.

use crate::error::{Error, Result};
use crate::rng::Prng;
use crate::synth::EventLabel;

const DISTANCE_FLOOR: f64 = 1e-12;
const Q_FLOOR: f64 = 1e-12;

/// Symmetric joint affinities: nonnegative, zero diagonal, sums to 1.
#[derive(Debug, Clone)]
pub struct AffinityMatrix {
    n: usize,
    p: Vec<f64>,
}

impl AffinityMatrix {
    /// Validate and wrap a flat row-major n x n matrix.
    pub fn from_raw(n: usize, p: Vec<f64>) -> Result<AffinityMatrix> {
        if p.len() != n * n {
            return Err(Error::Shape(format!(
                "{} entries for a {n}x{n} matrix",
                p.len()
            )));
        }
        let mut sum = 0.0;
        for i in 0..n {
            if p[i * n + i] != 0.0 {
                return Err(Error::Domain("affinity diagonal must be zero".into()));
            }
            for j in 0..n {
                let v = p[i * n + j];
                if v < 0.0 || !v.is_finite() {
                    return Err(Error::Domain(format!("affinity {v} out of range")));
                }
                if (v - p[j * n + i]).abs() > 1e-12 {
                    return Err(Error::Domain("affinities must be symmetric".into()));
                }
                sum += v;
            }
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "affinities sum to {sum}, expected 1"
            )));
        }
        Ok(AffinityMatrix { n, p })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }
}

fn squared_distances(data: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = data.len();
    let dim = data[0].len();
    if data.iter().any(|v| v.len() != dim) {
        return Err(Error::Shape("points have inconsistent dimensions".into()));
    }
    let mut d2 = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let mut acc = 0.0;
            for (a, b) in data[i].iter().zip(&data[j]) {
                let d = a - b;
                acc += d * d;
            }
            // floor guards duplicate-point degeneracy in the row search
            let acc = acc.max(DISTANCE_FLOOR);
            d2[i * n + j] = acc;
            d2[j * n + i] = acc;
        }
    }
    Ok(d2)
}

/// Row-stochastic conditional affinities p(j|i), each row calibrated by
/// binary search so its perplexity 2^H matches the target within 1e-4
/// (at most 64 bisection steps per row).
pub fn gaussian_conditionals(data: &[Vec<f64>], perplexity: f64) -> Result<Vec<f64>> {
    let n = data.len();
    if n < 4 {
        return Err(Error::Data(format!(
            "t-SNE needs at least 4 points, got {n}"
        )));
    }
    if !perplexity.is_finite() || perplexity <= 0.0 || perplexity >= n as f64 {
        return Err(Error::Config(format!(
            "perplexity {perplexity} must be in (0, {n}) for {n} points"
        )));
    }
    let d2 = squared_distances(data)?;
    let mut p = vec![0.0; n * n];

    for i in 0..n {
        let mut beta = 1.0f64; // 1 / (2 sigma^2)
        let mut beta_lo = 0.0f64;
        let mut beta_hi = f64::INFINITY;
        let mut row = vec![0.0; n];

        for _ in 0..64 {
            let mut sum = 0.0;
            for j in 0..n {
                row[j] = if i == j {
                    0.0
                } else {
                    (-beta * d2[i * n + j]).exp()
                };
                sum += row[j];
            }
            // all-underflow rows mean beta is far too large
            let entropy_nats = if sum > 0.0 {
                let mut h = 0.0;
                for v in row.iter_mut() {
                    *v /= sum;
                    if *v > 0.0 {
                        h -= *v * v.ln();
                    }
                }
                h
            } else {
                0.0
            };
            let perp = entropy_nats.exp();
            let diff = perp - perplexity;
            if diff.abs() <= 1e-6 {
                break;
            }
            if diff > 0.0 {
                // too many effective neighbors: narrow the kernel
                beta_lo = beta;
                beta = if beta_hi.is_finite() {
                    (beta + beta_hi) / 2.0
                } else {
                    beta * 2.0
                };
            } else {
                beta_hi = beta;
                beta = if beta_lo > 0.0 {
                    (beta + beta_lo) / 2.0
                } else {
                    beta / 2.0
                };
            }
        }
        p[i * n..(i + 1) * n].copy_from_slice(&row);
    }
    Ok(p)
}

/// Symmetrized joint affinities P = (P_cond + P_cond^T) / (2N).
pub fn conditional_affinities(data: &[Vec<f64>], perplexity: f64) -> Result<AffinityMatrix> {
    let n = data.len();
    let cond = gaussian_conditionals(data, perplexity)?;
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            p[i * n + j] = (cond[i * n + j] + cond[j * n + i]) / (2.0 * n as f64);
        }
    }
    AffinityMatrix::from_raw(n, p)
}

/// Generic discrete KL divergence with the 0 ln 0 = 0 convention; `q`
/// entries are floored at 1e-12.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Shape(format!("{} vs {} entries", p.len(), q.len())));
    }
    let mut kl = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            kl += pi * (pi / qi.max(Q_FLOOR)).ln();
        }
    }
    Ok(kl)
}

/// Normalized Student-t affinities of an embedding, plus the unnormalized
/// kernel values (needed by the gradient).
fn student_q(y: &[f64], n: usize, dims: usize) -> (Vec<f64>, Vec<f64>) {
    let mut kernel = vec![0.0; n * n];
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let mut d2 = 0.0;
            for k in 0..dims {
                let d = y[i * dims + k] - y[j * dims + k];
                d2 += d * d;
            }
            let v = 1.0 / (1.0 + d2);
            kernel[i * n + j] = v;
            kernel[j * n + i] = v;
            sum += 2.0 * v;
        }
    }
    let mut q = kernel.clone();
    for v in q.iter_mut() {
        *v = (*v / sum).max(Q_FLOOR);
    }
    for i in 0..n {
        q[i * n + i] = 0.0;
    }
    (q, kernel)
}

/// KL(P || Q(y)) for a flat embedding.
pub fn kl_objective(p: &AffinityMatrix, y: &[f64], dims: usize) -> Result<f64> {
    let n = p.n();
    if y.len() != n * dims {
        return Err(Error::Shape(format!(
            "embedding has {} values, expected {}",
            y.len(),
            n * dims
        )));
    }
    let (q, _) = student_q(y, n, dims);
    kl_divergence(p.as_slice(), &q)
}

/// Analytic KL gradient:
/// dC/dy_i = 4 sum_j (P_ij - Q_ij) (y_i - y_j) / (1 + |y_i - y_j|^2).
pub fn kl_gradient(p: &AffinityMatrix, y: &[f64], dims: usize) -> Result<Vec<f64>> {
    let n = p.n();
    if y.len() != n * dims {
        return Err(Error::Shape(format!(
            "embedding has {} values, expected {}",
            y.len(),
            n * dims
        )));
    }
    let (q, kernel) = student_q(y, n, dims);
    let mut grad = vec![0.0; n * dims];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let factor = 4.0 * (p.get(i, j) - q[i * n + j]) * kernel[i * n + j];
            for k in 0..dims {
                grad[i * dims + k] += factor * (y[i * dims + k] - y[j * dims + k]);
            }
        }
    }
    Ok(grad)
}

/// Optimization schedule. The defaults follow common practice for the
/// exact algorithm; everything is configurable.
#[derive(Debug, Clone, Copy)]
pub struct TsneConfig {
    pub dims: usize,
    pub iters: usize,
    pub learning_rate: f64,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    /// Iteration at which momentum switches to `final_momentum`.
    pub momentum_switch: usize,
    /// Early-exaggeration multiplier on P.
    pub exaggeration: f64,
    /// Number of leading iterations that use the exaggerated P.
    pub exaggeration_iters: usize,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            dims: 2,
            iters: 1000,
            learning_rate: 100.0,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch: 250,
            exaggeration: 4.0,
            exaggeration_iters: 100,
            seed: 7,
        }
    }
}

impl TsneConfig {
    fn validate(&self) -> Result<()> {
        if self.dims != 2 && self.dims != 3 {
            return Err(Error::Config(format!(
                "embedding dims must be 2 or 3, got {}",
                self.dims
            )));
        }
        if self.iters == 0 {
            return Err(Error::Config("iters must be positive".into()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.exaggeration < 1.0 {
            return Err(Error::Config("exaggeration must be >= 1".into()));
        }
        Ok(())
    }
}

/// Low-dimensional coordinates with optional companion labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub dims: usize,
    coords: Vec<f64>,
    labels: Vec<EventLabel>,
}

impl Embedding {
    pub fn new(dims: usize, coords: Vec<f64>) -> Result<Embedding> {
        if dims == 0 || !coords.len().is_multiple_of(dims) {
            return Err(Error::Shape(format!(
                "{} coordinates do not tile into {dims}-dim points",
                coords.len()
            )));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("embedding coordinates must be finite".into()));
        }
        Ok(Embedding {
            dims,
            coords,
            labels: Vec::new(),
        })
    }

    pub fn with_labels(mut self, labels: Vec<EventLabel>) -> Result<Embedding> {
        if labels.len() != self.len() {
            return Err(Error::Data(format!(
                "{} labels for {} points",
                labels.len(),
                self.len()
            )));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dims
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dims..(i + 1) * self.dims]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn labels(&self) -> &[EventLabel] {
        &self.labels
    }
}

/// Gradient-descend the KL objective. Returns the embedding and the
/// per-iteration trace of the true (unexaggerated) KL.
pub fn tsne_embed(p: &AffinityMatrix, cfg: &TsneConfig) -> Result<(Embedding, Vec<f64>)> {
    cfg.validate()?;
    let n = p.n();
    let dims = cfg.dims;
    let mut prng = Prng::new(cfg.seed);
    let mut y: Vec<f64> = (0..n * dims).map(|_| prng.gaussian() * 1e-4).collect();
    let mut velocity = vec![0.0; n * dims];
    let mut trace = Vec::with_capacity(cfg.iters);

    for iter in 0..cfg.iters {
        let (q, kernel) = student_q(&y, n, dims);
        trace.push(kl_divergence(p.as_slice(), &q)?);

        let exaggeration = if iter < cfg.exaggeration_iters {
            cfg.exaggeration
        } else {
            1.0
        };
        let momentum = if iter < cfg.momentum_switch {
            cfg.initial_momentum
        } else {
            cfg.final_momentum
        };

        let mut grad = vec![0.0; n * dims];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let factor = 4.0 * (exaggeration * p.get(i, j) - q[i * n + j]) * kernel[i * n + j];
                for k in 0..dims {
                    grad[i * dims + k] += factor * (y[i * dims + k] - y[j * dims + k]);
                }
            }
        }

        for ((v, g), yv) in velocity.iter_mut().zip(&grad).zip(y.iter_mut()) {
            *v = momentum * *v - cfg.learning_rate * g;
            *yv += *v;
        }

        // recenter; the objective is translation invariant
        for k in 0..dims {
            let mean: f64 = (0..n).map(|i| y[i * dims + k]).sum::<f64>() / n as f64;
            for i in 0..n {
                y[i * dims + k] -= mean;
            }
        }
    }

    Ok((Embedding::new(dims, y)?, trace))
}

fn d2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd k-means with D^2-weighted seeding and a handful of seeded
/// restarts, keeping the assignment with the lowest within-cluster sum of
/// squares. Deterministic per seed. Used to score embedding and code
/// separability.
pub fn kmeans(points: &[Vec<f64>], k: usize, iters: usize, seed: u64) -> Result<Vec<usize>> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::Config(format!("k = {k} must be in 1..={n}")));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Shape("points have inconsistent dimensions".into()));
    }

    let master = Prng::new(seed);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for restart in 0..8u64 {
        let (sse, assignment) = kmeans_once(points, k, iters, master.fork(restart));
        if best.as_ref().is_none_or(|(b, _)| sse < *b) {
            best = Some((sse, assignment));
        }
    }
    Ok(best.expect("at least one restart").1)
}

fn kmeans_once(points: &[Vec<f64>], k: usize, iters: usize, mut prng: Prng) -> (f64, Vec<usize>) {
    let n = points.len();
    let dim = points[0].len();

    // D^2-weighted seeding: each new center is sampled proportionally to
    // the squared distance from the centers chosen so far
    let mut centers: Vec<Vec<f64>> = vec![points[prng.below(n)].clone()];
    let mut nearest: Vec<f64> = points.iter().map(|p| d2(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        let next = if total <= 0.0 {
            prng.below(n)
        } else {
            let mut target = prng.uniform() * total;
            let mut chosen = n - 1;
            for (i, &w) in nearest.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        };
        centers.push(points[next].clone());
        for (slot, point) in nearest.iter_mut().zip(points) {
            *slot = slot.min(d2(point, centers.last().unwrap()));
        }
    }

    let mut assignment = vec![0usize; n];
    for _ in 0..iters {
        let mut changed = false;
        for (i, point) in points.iter().enumerate() {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let d = d2(point, center);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
        }

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, point) in points.iter().enumerate() {
            counts[assignment[i]] += 1;
            for (s, &v) in sums[assignment[i]].iter_mut().zip(point) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // reseed an empty cluster at the point farthest from its
                // current center
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = d2(&points[a], &centers[assignment[a]]);
                        let db = d2(&points[b], &centers[assignment[b]]);
                        da.partial_cmp(&db).unwrap()
                    })
                    .unwrap();
                centers[c] = points[far].clone();
                changed = true;
            } else {
                for (cv, s) in centers[c].iter_mut().zip(&sums[c]) {
                    *cv = s / counts[c] as f64;
                }
            }
        }
        if !changed {
            break;
        }
    }

    let sse = points
        .iter()
        .enumerate()
        .map(|(i, p)| d2(p, &centers[assignment[i]]))
        .sum();
    (sse, assignment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{central_difference, max_relative_error};

    fn three_cluster_data(per_cluster: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        // cluster separation 10x the within-cluster sigma
        let mut prng = Prng::new(seed);
        let centers = [[0.0, 0.0, 0.0], [10.0, 0.0, 0.0], [0.0, 10.0, 0.0]];
        let mut data = Vec::new();
        let mut truth = Vec::new();
        for (ci, center) in centers.iter().enumerate() {
            for _ in 0..per_cluster {
                data.push(center.iter().map(|c| c + prng.gaussian()).collect());
                truth.push(ci);
            }
        }
        (data, truth)
    }

    #[test]
    fn twin_points_at_perplexity_one_bind_to_each_other() {
        let data = vec![
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            vec![100.0, 0.0],
            vec![0.0, 100.0],
        ];
        let cond = gaussian_conditionals(&data, 1.0).unwrap();
        // each twin gives essentially all its mass to the other twin
        assert!(cond[1] > 0.999, "p(1|0) = {}", cond[1]);
        assert!(cond[4] > 0.999, "p(0|1) = {}", cond[4]);
    }

    #[test]
    fn row_perplexity_matches_the_target() {
        let (data, _) = three_cluster_data(8, 3);
        for &target in &[5.0, 10.0, 15.0] {
            let cond = gaussian_conditionals(&data, target).unwrap();
            let n = data.len();
            for i in 0..n {
                let row = &cond[i * n..(i + 1) * n];
                let h: f64 = row.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum();
                let perp = h.exp();
                assert!(
                    (perp - target).abs() <= 1e-4,
                    "row {i}: perplexity {perp} vs target {target}"
                );
            }
        }
    }

    #[test]
    fn joint_affinities_are_symmetric_normalized_and_hollow() {
        let (data, _) = three_cluster_data(6, 5);
        let p = conditional_affinities(&data, 7.0).unwrap();
        let n = p.n();
        let sum: f64 = p.as_slice().iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        for i in 0..n {
            assert_eq!(p.get(i, i), 0.0);
            for j in 0..n {
                assert!((p.get(i, j) - p.get(j, i)).abs() < 1e-15);
                assert!(p.get(i, j) >= 0.0);
            }
        }
    }

    #[test]
    fn oversized_perplexity_is_rejected() {
        let (data, _) = three_cluster_data(2, 1);
        assert!(matches!(
            conditional_affinities(&data, 6.0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn kl_of_identical_distributions_is_zero() {
        let p = [0.25, 0.25, 0.25, 0.25];
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn kl_hand_instance() {
        // 0.5 ln(0.5/0.9) + 0.5 ln(0.5/0.1) = 0.5108...
        let kl = kl_divergence(&[0.5, 0.5], &[0.9, 0.1]).unwrap();
        assert!((kl - 0.5108).abs() < 1e-4);
    }

    #[test]
    fn kl_is_nonnegative_on_random_distributions() {
        let mut prng = Prng::new(77);
        for _ in 0..100 {
            let mut p: Vec<f64> = (0..6).map(|_| prng.range(0.01, 1.0)).collect();
            let mut q: Vec<f64> = (0..6).map(|_| prng.range(0.01, 1.0)).collect();
            let ps: f64 = p.iter().sum();
            let qs: f64 = q.iter().sum();
            p.iter_mut().for_each(|v| *v /= ps);
            q.iter_mut().for_each(|v| *v /= qs);
            assert!(kl_divergence(&p, &q).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn kl_gradient_matches_finite_differences_on_six_points() {
        let data = vec![
            vec![0.0, 0.0],
            vec![0.1, 0.2],
            vec![5.0, 5.0],
            vec![5.2, 4.9],
            vec![-4.0, 6.0],
            vec![-4.1, 6.2],
        ];
        let p = conditional_affinities(&data, 2.0).unwrap();
        let mut prng = Prng::new(2);
        let y: Vec<f64> = (0..12).map(|_| prng.range(-1.0, 1.0)).collect();

        let analytic = kl_gradient(&p, &y, 2).unwrap();
        let numeric = central_difference(|probe| kl_objective(&p, probe, 2).unwrap(), &y, 1e-6);
        let err = max_relative_error(&analytic, &numeric);
        assert!(err <= 1e-5, "max relative error {err}");
    }

    #[test]
    fn kl_trace_decreases_after_exaggeration_ends() {
        // a step size the toy instance descends smoothly at; by the
        // midpoint exaggeration is long over and momentum has switched
        let (data, _) = three_cluster_data(10, 11);
        let p = conditional_affinities(&data, 8.0).unwrap();
        let cfg = TsneConfig {
            iters: 600,
            learning_rate: 50.0,
            seed: 4,
            ..TsneConfig::default()
        };
        let (_, trace) = tsne_embed(&p, &cfg).unwrap();
        let start = cfg.iters / 2;
        for i in start..trace.len() - 1 {
            assert!(
                trace[i + 1] <= trace[i] + 1e-6,
                "KL rose from {} to {} at iteration {i}",
                trace[i],
                trace[i + 1]
            );
        }
    }

    #[test]
    fn well_separated_clusters_embed_with_high_kmeans_purity() {
        let (data, truth) = three_cluster_data(15, 21);
        let p = conditional_affinities(&data, 10.0).unwrap();
        let cfg = TsneConfig {
            iters: 500,
            seed: 9,
            ..TsneConfig::default()
        };
        let (embedding, _) = tsne_embed(&p, &cfg).unwrap();

        let points: Vec<Vec<f64>> = (0..embedding.len())
            .map(|i| embedding.point(i).to_vec())
            .collect();
        let assignment = kmeans(&points, 3, 100, 13).unwrap();

        // purity: majority true class per cluster
        let mut counts = [[0usize; 3]; 3];
        for (&a, &t) in assignment.iter().zip(&truth) {
            counts[a][t] += 1;
        }
        let pure: usize = counts.iter().map(|c| *c.iter().max().unwrap()).sum();
        let purity = pure as f64 / truth.len() as f64;
        assert!(purity >= 0.95, "purity {purity}");
    }

    #[test]
    fn kl_is_invariant_under_rigid_motions_of_the_embedding() {
        let (data, _) = three_cluster_data(6, 31);
        let p = conditional_affinities(&data, 5.0).unwrap();
        let cfg = TsneConfig {
            iters: 50,
            seed: 3,
            ..TsneConfig::default()
        };
        let (embedding, _) = tsne_embed(&p, &cfg).unwrap();
        let y = embedding.coords().to_vec();
        let base = kl_objective(&p, &y, 2).unwrap();

        let theta: f64 = 0.83;
        let (sin, cos) = theta.sin_cos();
        let moved: Vec<f64> = y
            .chunks(2)
            .flat_map(|pt| {
                let xr = cos * pt[0] - sin * pt[1] + 3.5;
                let yr = sin * pt[0] + cos * pt[1] - 1.25;
                [xr, yr]
            })
            .collect();
        let rotated = kl_objective(&p, &moved, 2).unwrap();
        assert!((base - rotated).abs() < 1e-9, "{base} vs {rotated}");
    }

    #[test]
    fn embedding_is_deterministic_per_seed() {
        let (data, _) = three_cluster_data(6, 41);
        let p = conditional_affinities(&data, 5.0).unwrap();
        let cfg = TsneConfig {
            iters: 120,
            seed: 10,
            ..TsneConfig::default()
        };
        let (a, ta) = tsne_embed(&p, &cfg).unwrap();
        let (b, tb) = tsne_embed(&p, &cfg).unwrap();
        assert_eq!(a.coords(), b.coords());
        assert_eq!(ta, tb);

        let other = TsneConfig { seed: 11, ..cfg };
        let (c, _) = tsne_embed(&p, &other).unwrap();
        assert_ne!(a.coords(), c.coords());
    }

    #[test]
    fn kmeans_recovers_separated_clusters() {
        let (data, truth) = three_cluster_data(12, 51);
        let assignment = kmeans(&data, 3, 100, 5).unwrap();
        let mut counts = [[0usize; 3]; 3];
        for (&a, &t) in assignment.iter().zip(&truth) {
            counts[a][t] += 1;
        }
        let pure: usize = counts.iter().map(|c| *c.iter().max().unwrap()).sum();
        assert_eq!(pure, truth.len());
    }
}
