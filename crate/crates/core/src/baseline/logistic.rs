//! Multinomial logistic regression over hashed feature vectors, trained by
//! plain SGD. The loss/gradient pair here is shared by training and by the
//! finite-difference gradient check, so what is tested is what runs.

use crate::scalar::RealScalar;

use super::features::FeatureVector;

/// A dense linear classifier: one weight row and one bias per class.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel<S> {
    pub class_labels: Vec<String>,
    /// `weights[c]` has `hash_dim` entries.
    pub weights: Vec<Vec<S>>,
    pub bias: Vec<S>,
    pub trained_epochs: u64,
    pub seed: u64,
}

/// Numerically stable softmax (max-shifted).
pub fn softmax<S: RealScalar>(scores: &[S]) -> Vec<S> {
    let max = scores
        .iter()
        .copied()
        .fold(S::neg_infinity(), |a, b| if b > a { b } else { a });
    let exps: Vec<S> = scores.iter().map(|&s| (s - max).exp()).collect();
    let sum = exps.iter().fold(S::zero(), |a, &b| a + b);
    exps.into_iter().map(|e| e / sum).collect()
}

impl<S: RealScalar> LinearModel<S> {
    /// Zero-initialized model.
    pub fn zeros(class_labels: Vec<String>, hash_dim: u32, seed: u64) -> LinearModel<S> {
        let classes = class_labels.len();
        LinearModel {
            class_labels,
            weights: vec![vec![S::zero(); hash_dim as usize]; classes],
            bias: vec![S::zero(); classes],
            trained_epochs: 0,
            seed,
        }
    }

    pub fn class_count(&self) -> usize {
        self.class_labels.len()
    }

    /// Index of a label in `class_labels`.
    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.class_labels.iter().position(|l| l == label)
    }

    /// Raw per-class scores: bias + sum of active weights.
    pub fn scores(&self, fv: &FeatureVector) -> Vec<S> {
        (0..self.class_count())
            .map(|c| self.score_class(c, fv))
            .collect()
    }

    /// Score of a single class row (used by the arc scorer, which softmaxes
    /// one shared row across candidates rather than across classes).
    pub fn score_class(&self, class: usize, fv: &FeatureVector) -> S {
        let row = &self.weights[class];
        let mut s = self.bias[class];
        for &i in fv.indices() {
            s += row[i as usize];
        }
        s
    }

    /// Class probabilities.
    pub fn probabilities(&self, fv: &FeatureVector) -> Vec<S> {
        softmax(&self.scores(fv))
    }

    /// Argmax class; ties break to the lowest class index.
    pub fn predict(&self, fv: &FeatureVector) -> usize {
        let scores = self.scores(fv);
        let mut best = 0;
        for (c, s) in scores.iter().enumerate().skip(1) {
            if *s > scores[best] {
                best = c;
            }
        }
        best
    }

    /// Cross-entropy loss −ln p(gold | fv), without regularization.
    pub fn log_loss(&self, fv: &FeatureVector, gold_class: usize) -> S {
        let probs = self.probabilities(fv);
        -probs[gold_class].ln()
    }

    /// Analytic gradient of [`Self::log_loss`]: per class, the bias
    /// gradient and the shared gradient of every active weight
    /// (d loss / d w[c][i] = p_c − 1{c = gold} for each active i).
    pub fn loss_gradients(&self, fv: &FeatureVector, gold_class: usize) -> Vec<S> {
        let probs = self.probabilities(fv);
        probs
            .iter()
            .enumerate()
            .map(|(c, &p)| if c == gold_class { p - S::one() } else { p })
            .collect()
    }

    /// One SGD step on cross-entropy with L2 applied to the active weights
    /// (penalizing the pre-update value).
    pub fn sgd_step(&mut self, fv: &FeatureVector, gold_class: usize, lr: S, l2: S) {
        let grads = self.loss_gradients(fv, gold_class);
        for (c, &g) in grads.iter().enumerate() {
            self.bias[c] -= lr * g;
            let row = &mut self.weights[c];
            for &i in fv.indices() {
                let w = row[i as usize];
                row[i as usize] = w - lr * (g + l2 * w);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::features::hash_feature_dim;

    const DIM: u32 = 64;

    fn fv(pairs: &[(&str, &str)]) -> FeatureVector {
        FeatureVector::from_indices(
            pairs
                .iter()
                .map(|(t, v)| hash_feature_dim(t, v, DIM))
                .collect(),
        )
    }

    fn labels(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn zero_model_is_uniform_and_predicts_first_class() {
        let m: LinearModel<f64> = LinearModel::zeros(labels(&["A", "B", "C"]), DIM, 0);
        let v = fv(&[("w0", "x"), ("w-1", "<BOS>")]);
        let probs = m.probabilities(&v);
        for p in &probs {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(m.predict(&v), 0);
    }

    #[test]
    fn softmax_sums_to_one() {
        let probs = softmax(&[1.5f64, -2.0, 0.25, 10.0]);
        let sum: f64 = probs.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert!(probs.iter().all(|&p| p > 0.0));
    }

    #[test]
    fn sgd_reduces_loss_on_separable_toy() {
        let mut m: LinearModel<f64> = LinearModel::zeros(labels(&["A", "B"]), DIM, 0);
        let va = fv(&[("w0", "alpha")]);
        let vb = fv(&[("w0", "beta")]);
        let before = m.log_loss(&va, 0) + m.log_loss(&vb, 1);
        for _ in 0..50 {
            m.sgd_step(&va, 0, 0.1, 1e-6);
            m.sgd_step(&vb, 1, 0.1, 1e-6);
        }
        let after = m.log_loss(&va, 0) + m.log_loss(&vb, 1);
        assert!(after < before / 4.0, "{after} !< {before}/4");
        assert_eq!(m.predict(&va), 0);
        assert_eq!(m.predict(&vb), 1);
    }

    #[test]
    fn tie_breaks_to_lowest_class_index() {
        let mut m: LinearModel<f64> = LinearModel::zeros(labels(&["A", "B", "C"]), DIM, 0);
        // make classes 1 and 2 tie above class 0
        let v = fv(&[("w0", "x")]);
        let idx = v.indices()[0] as usize;
        m.weights[1][idx] = 2.0;
        m.weights[2][idx] = 2.0;
        assert_eq!(m.predict(&v), 1);
    }

    /// Central finite differences on the exact loss the trainer optimizes.
    #[test]
    fn analytic_gradient_matches_central_differences() {
        let mut m: LinearModel<f64> = LinearModel::zeros(labels(&["A", "B", "C"]), 5, 0);
        // 3 classes × 5 features with fixed, non-trivial weights
        for (c, row) in m.weights.iter_mut().enumerate() {
            for (i, w) in row.iter_mut().enumerate() {
                *w = ((c * 5 + i) as f64).sin() * 0.5;
            }
        }
        m.bias = vec![0.1, -0.2, 0.05];
        let v = FeatureVector::from_indices(vec![0, 2, 3]);
        let gold = 1;

        let eps = 1e-5;
        let grads = m.loss_gradients(&v, gold);
        for c in 0..3 {
            // bias
            let mut plus = m.clone();
            plus.bias[c] += eps;
            let mut minus = m.clone();
            minus.bias[c] -= eps;
            let numeric = (plus.log_loss(&v, gold) - minus.log_loss(&v, gold)) / (2.0 * eps);
            let analytic = grads[c];
            let rel = (numeric - analytic).abs() / analytic.abs().max(1e-12);
            assert!(rel < 1e-6, "bias class {c}: {numeric} vs {analytic}");

            // every active weight shares the class gradient
            for &i in v.indices() {
                let mut plus = m.clone();
                plus.weights[c][i as usize] += eps;
                let mut minus = m.clone();
                minus.weights[c][i as usize] -= eps;
                let numeric =
                    (plus.log_loss(&v, gold) - minus.log_loss(&v, gold)) / (2.0 * eps);
                let rel = (numeric - analytic).abs() / analytic.abs().max(1e-12);
                assert!(rel < 1e-6, "weight {c}/{i}: {numeric} vs {analytic}");
            }

            // inactive weights have zero gradient
            let mut plus = m.clone();
            plus.weights[c][1] += eps;
            let delta = plus.log_loss(&v, gold) - m.log_loss(&v, gold);
            assert!(delta.abs() < 1e-12);
        }
    }
}
