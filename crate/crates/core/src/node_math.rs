//! Scalar mathematics of the logistic-loss booster.
//!
//! A leaf of tree `m` receives the instances routed to it together with
//! their labels and their scores from the previous iteration. The leaf
//! value is the single offset `gamma` added to all of those scores. The
//! exact minimiser of the leaf's cross-entropy has no closed form, so
//! training uses one Newton step from `gamma = 0`:
//!
//! ```text
//! gamma = sum(y - p) / sum(p * (1 - p))
//! ```
//!
//! [`gamma_oracle`] solves the exact first-order condition by bisection
//! and exists to check the Newton value against the true optimum.

use crate::error::{Error, Result};

/// Floor applied to the Hessian sum in [`newton_step`].
pub const HESSIAN_FLOOR: f64 = 1e-12;

/// Default search half-width for [`gamma_oracle`].
pub const ORACLE_BOUND: f64 = 30.0;

/// Default derivative tolerance for [`gamma_oracle`].
pub const ORACLE_TOL: f64 = 1e-10;

const SAMPLE_CONSISTENCY_TOL: f64 = 1e-12;

/// Logistic function, evaluated so that `exp` only ever sees a
/// non-positive argument.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
#[inline]
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Cross-entropy of one instance given its log-odds score.
#[inline]
pub fn logistic_loss(label: u8, score: f64) -> f64 {
    // -y*z + ln(1+e^z) equals softplus(-z) for y = 1 and softplus(z) for y = 0.
    if label == 1 {
        softplus(-score)
    } else {
        softplus(score)
    }
}

/// Elementwise `y - p`.
pub fn residuals(labels: &[u8], probs: &[f64]) -> Vec<f64> {
    assert_eq!(
        labels.len(),
        probs.len(),
        "labels and probs differ in length"
    );
    labels
        .iter()
        .zip(probs)
        .map(|(&y, &p)| f64::from(y) - p)
        .collect()
}

/// The instances of one leaf as seen before the leaf value is chosen.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafSample {
    labels: Vec<u8>,
    prior_scores: Vec<f64>,
    prior_probs: Vec<f64>,
}

impl LeafSample {
    /// Checks lengths, label values, and that every probability is the
    /// sigmoid of its score.
    pub fn new(labels: Vec<u8>, prior_scores: Vec<f64>, prior_probs: Vec<f64>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidArgument("leaf sample is empty".into()));
        }
        if labels.len() != prior_scores.len() || labels.len() != prior_probs.len() {
            return Err(Error::InvalidArgument(format!(
                "leaf sample lengths differ: {} labels, {} scores, {} probs",
                labels.len(),
                prior_scores.len(),
                prior_probs.len()
            )));
        }
        if labels.iter().any(|&y| y > 1) {
            return Err(Error::InvalidArgument("labels must be 0 or 1".into()));
        }
        for (k, (&f, &p)) in prior_scores.iter().zip(&prior_probs).enumerate() {
            if !f.is_finite() || (sigmoid(f) - p).abs() > SAMPLE_CONSISTENCY_TOL {
                return Err(Error::InvalidArgument(format!(
                    "instance {k}: probability {p} is not sigmoid({f})"
                )));
            }
        }
        Ok(Self {
            labels,
            prior_scores,
            prior_probs,
        })
    }

    pub fn from_scores(labels: Vec<u8>, prior_scores: Vec<f64>) -> Result<Self> {
        let probs = prior_scores.iter().map(|&f| sigmoid(f)).collect();
        Self::new(labels, prior_scores, probs)
    }

    /// Builds a sample from probabilities, recovering scores as log-odds.
    pub fn from_probs(labels: Vec<u8>, prior_probs: Vec<f64>) -> Result<Self> {
        if prior_probs.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
            return Err(Error::InvalidArgument(
                "probabilities must lie strictly inside (0, 1)".into(),
            ));
        }
        let scores = prior_probs.iter().map(|&p| (p / (1.0 - p)).ln()).collect();
        Self::new(labels, scores, prior_probs)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn prior_scores(&self) -> &[f64] {
        &self.prior_scores
    }

    pub fn prior_probs(&self) -> &[f64] {
        &self.prior_probs
    }

    /// True when both classes occur.
    pub fn is_mixed(&self) -> bool {
        self.labels.contains(&0) && self.labels.contains(&1)
    }

    /// Sum of `y - p`.
    pub fn residual_sum(&self) -> f64 {
        self.labels
            .iter()
            .zip(&self.prior_probs)
            .map(|(&y, &p)| f64::from(y) - p)
            .sum()
    }

    /// Sum of `p * (1 - p)`, the second derivative of the leaf loss at zero.
    pub fn hessian_sum(&self) -> f64 {
        self.prior_probs.iter().map(|&p| p * (1.0 - p)).sum()
    }
}

/// Newton leaf value with its two ingredients kept apart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonStep {
    pub numerator: f64,
    pub denominator: f64,
    pub gamma: f64,
}

pub fn newton_step(sample: &LeafSample) -> NewtonStep {
    let numerator = sample.residual_sum();
    let denominator = sample.hessian_sum();
    NewtonStep {
        numerator,
        denominator,
        gamma: numerator / denominator.max(HESSIAN_FLOOR),
    }
}

/// Leaf value used in training: residual sum over Hessian sum.
pub fn gamma_newton(sample: &LeafSample) -> f64 {
    newton_step(sample).gamma
}

/// Cross-entropy of the leaf after shifting every score by `gamma`.
pub fn leaf_loss(gamma: f64, sample: &LeafSample) -> f64 {
    sample
        .labels
        .iter()
        .zip(&sample.prior_scores)
        .map(|(&y, &f)| logistic_loss(y, f + gamma))
        .sum()
}

/// First derivative of [`leaf_loss`] in `gamma`. Strictly increasing.
pub fn leaf_loss_derivative(gamma: f64, sample: &LeafSample) -> f64 {
    sample
        .labels
        .iter()
        .zip(&sample.prior_scores)
        .map(|(&y, &f)| sigmoid(f + gamma) - f64::from(y))
        .sum()
}

/// Second derivative of [`leaf_loss`] in `gamma`.
pub fn leaf_loss_second_derivative(gamma: f64, sample: &LeafSample) -> f64 {
    sample
        .prior_scores
        .iter()
        .map(|&f| {
            let p = sigmoid(f + gamma);
            p * (1.0 - p)
        })
        .sum()
}

/// Exact leaf minimiser on `[-bound, bound]`, found by bisection on the
/// derivative.
///
/// When the derivative keeps one sign over the whole interval (a leaf
/// whose labels are all equal), the endpoint with the smaller
/// `|derivative|` is returned.
pub fn gamma_oracle(sample: &LeafSample, bound: f64, tol: f64) -> Result<f64> {
    if !(bound.is_finite() && bound > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "oracle bound must be positive and finite, got {bound}"
        )));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "oracle tolerance must be positive and finite, got {tol}"
        )));
    }
    let deriv = |g: f64| leaf_loss_derivative(g, sample);

    let (mut lo, mut hi) = (-bound, bound);
    let (d_lo, d_hi) = (deriv(lo), deriv(hi));
    if d_lo >= 0.0 || d_hi <= 0.0 {
        return Ok(if d_lo.abs() <= d_hi.abs() { lo } else { hi });
    }

    let mut best = if d_lo.abs() <= d_hi.abs() {
        (lo, d_lo.abs())
    } else {
        (hi, d_hi.abs())
    };
    loop {
        let mid = lo + (hi - lo) / 2.0;
        if mid <= lo || mid >= hi {
            // Interval exhausted at f64 resolution.
            return Ok(best.0);
        }
        let d = deriv(mid);
        if d.abs() < best.1 {
            best = (mid, d.abs());
        }
        if d.abs() <= tol {
            return Ok(mid);
        }
        if d < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// [`gamma_oracle`] with the default bound and tolerance.
pub fn gamma_oracle_default(sample: &LeafSample) -> f64 {
    gamma_oracle(sample, ORACLE_BOUND, ORACLE_TOL).expect("default oracle parameters are valid")
}
