//! The two comparison classifiers: k-nearest-neighbor and a linear
//! one-vs-rest SVM, both operating on flattened preprocessed grids.
//!
//! The SVM is trained per class by stochastic subgradient descent on the
//! regularized hinge loss with step size 1/(lambda * t) at step t. The
//! bias rides along as an augmented constant feature, and the returned
//! weights are the average of the second half of the iterates, which
//! stabilizes the final decision function.

use crate::error::{Error, Result};
use crate::rng::Prng;
use crate::synth::EventLabel;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_vectors(vectors: &[Vec<f64>]) -> Result<usize> {
    let dim = vectors.first().map(|v| v.len()).unwrap_or(0);
    if vectors.iter().any(|v| v.len() != dim) {
        return Err(Error::Shape(
            "training vectors have inconsistent dimensions".into(),
        ));
    }
    Ok(dim)
}

/// Memorized training set plus the neighbor count k.
#[derive(Debug, Clone)]
pub struct KnnModel {
    vectors: Vec<Vec<f64>>,
    labels: Vec<EventLabel>,
    k: usize,
}

impl KnnModel {
    /// Store the training set. `k` must be odd and no larger than the set.
    pub fn fit(vectors: Vec<Vec<f64>>, labels: Vec<EventLabel>, k: usize) -> Result<KnnModel> {
        if vectors.is_empty() {
            return Err(Error::Data("k-NN needs a non-empty training set".into()));
        }
        if vectors.len() != labels.len() {
            return Err(Error::Data(format!(
                "{} vectors vs {} labels",
                vectors.len(),
                labels.len()
            )));
        }
        check_vectors(&vectors)?;
        if k == 0 || k.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "k must be a positive odd integer, got {k}"
            )));
        }
        if k > vectors.len() {
            return Err(Error::Config(format!(
                "k = {k} exceeds the training set size {}",
                vectors.len()
            )));
        }
        Ok(KnnModel { vectors, labels, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn labels(&self) -> &[EventLabel] {
        &self.labels
    }

    /// Majority label among the k nearest neighbors. Distance ties break
    /// by lower training index; vote ties break toward the class whose
    /// nearest member is closest.
    pub fn classify(&self, query: &[f64]) -> Result<EventLabel> {
        if self.vectors.is_empty() {
            return Err(Error::State("k-NN model has no training vectors".into()));
        }
        if query.len() != self.vectors[0].len() {
            return Err(Error::Shape(format!(
                "query has {} values, training vectors have {}",
                query.len(),
                self.vectors[0].len()
            )));
        }
        let mut scored: Vec<(f64, usize)> = self
            .vectors
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let d2: f64 = v.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
                (d2, i)
            })
            .collect();
        scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

        let mut votes = [0usize; EventLabel::COUNT];
        for &(_, idx) in scored.iter().take(self.k) {
            votes[self.labels[idx].index()] += 1;
        }
        let best = *votes.iter().max().unwrap();
        // first neighbor (closest) whose class holds the top vote count
        for &(_, idx) in scored.iter().take(self.k) {
            if votes[self.labels[idx].index()] == best {
                return Ok(self.labels[idx]);
            }
        }
        unreachable!("a top-voted class always appears among the k neighbors");
    }
}

/// Five one-vs-rest linear classifiers.
#[derive(Debug, Clone)]
pub struct SvmModel {
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
    lambda: f64,
    epochs: usize,
    seed: u64,
}

impl SvmModel {
    pub fn from_parts(
        weights: Vec<Vec<f64>>,
        biases: Vec<f64>,
        lambda: f64,
        epochs: usize,
        seed: u64,
    ) -> Result<SvmModel> {
        if weights.len() != EventLabel::COUNT || biases.len() != EventLabel::COUNT {
            return Err(Error::Shape(
                "an SVM model needs one classifier per class".into(),
            ));
        }
        check_vectors(&weights)?;
        if weights.iter().flatten().any(|v| !v.is_finite()) || biases.iter().any(|v| !v.is_finite())
        {
            return Err(Error::Domain("SVM weights must be finite".into()));
        }
        Ok(SvmModel {
            weights,
            biases,
            lambda,
            epochs,
            seed,
        })
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn epochs(&self) -> usize {
        self.epochs
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The five one-vs-rest scores w_i . x + b_i.
    pub fn decision_scores(&self, query: &[f64]) -> Result<[f64; EventLabel::COUNT]> {
        if query.len() != self.weights[0].len() {
            return Err(Error::Shape(format!(
                "query has {} values, weights have {}",
                query.len(),
                self.weights[0].len()
            )));
        }
        let mut scores = [0.0; EventLabel::COUNT];
        for (i, slot) in scores.iter_mut().enumerate() {
            *slot = dot(&self.weights[i], query) + self.biases[i];
        }
        Ok(scores)
    }

    /// Argmax over the five scores; ties break toward the lowest class
    /// index.
    pub fn predict(&self, query: &[f64]) -> Result<EventLabel> {
        let scores = self.decision_scores(query)?;
        let mut best = 0usize;
        for (i, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = i;
            }
        }
        EventLabel::from_index(best)
    }
}

/// Binary hinge-loss subgradient descent with eta_t = 1/(lambda * t).
/// Returns the average of the second half of the iterates.
fn pegasos_binary(
    vectors: &[Vec<f64>],
    targets: &[f64],
    lambda: f64,
    epochs: usize,
    mut prng: Prng,
) -> (Vec<f64>, f64) {
    let dim = vectors[0].len();
    let n = vectors.len();
    let total_steps = epochs * n;

    // augmented weight: trailing slot is the bias
    let mut w = vec![0.0; dim + 1];
    let mut w_sum = vec![0.0; dim + 1];
    let mut averaged = 0usize;
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0usize;

    for _ in 0..epochs {
        prng.shuffle(&mut order);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let margin = targets[i] * (dot(&w[..dim], &vectors[i]) + w[dim]);
            let decay = 1.0 - eta * lambda;
            for wv in w.iter_mut() {
                *wv *= decay;
            }
            if margin < 1.0 {
                let step = eta * targets[i];
                for (wv, &xv) in w.iter_mut().zip(&vectors[i]) {
                    *wv += step * xv;
                }
                w[dim] += step;
            }
            if 2 * t > total_steps {
                for (s, &wv) in w_sum.iter_mut().zip(&w) {
                    *s += wv;
                }
                averaged += 1;
            }
        }
    }
    if averaged > 0 {
        for s in w_sum.iter_mut() {
            *s /= averaged as f64;
        }
        w = w_sum;
    }
    let bias = w.pop().expect("augmented slot");
    (w, bias)
}

/// Train one-vs-rest linear classifiers. Deterministic per seed.
pub fn svm_train(
    vectors: &[Vec<f64>],
    labels: &[EventLabel],
    lambda: f64,
    epochs: usize,
    seed: u64,
) -> Result<SvmModel> {
    if vectors.is_empty() {
        return Err(Error::Data("SVM needs a non-empty training set".into()));
    }
    if vectors.len() != labels.len() {
        return Err(Error::Data(format!(
            "{} vectors vs {} labels",
            vectors.len(),
            labels.len()
        )));
    }
    check_vectors(vectors)?;
    let mut present = [false; EventLabel::COUNT];
    for l in labels {
        present[l.index()] = true;
    }
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(Error::Data(
            "SVM training needs at least two classes".into(),
        ));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Config("lambda must be positive".into()));
    }
    if epochs == 0 {
        return Err(Error::Config("epochs must be positive".into()));
    }

    let master = Prng::new(seed);
    let mut weights = Vec::with_capacity(EventLabel::COUNT);
    let mut biases = Vec::with_capacity(EventLabel::COUNT);
    for class in 0..EventLabel::COUNT {
        let targets: Vec<f64> = labels
            .iter()
            .map(|l| if l.index() == class { 1.0 } else { -1.0 })
            .collect();
        let (w, b) = pegasos_binary(vectors, &targets, lambda, epochs, master.fork(class as u64));
        weights.push(w);
        biases.push(b);
    }
    SvmModel::from_parts(weights, biases, lambda, epochs, seed)
}
