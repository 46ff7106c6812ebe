//! Training and prediction for the binary gradient boosting classifier.
//!
//! Every instance starts at log-odds `F = 0` (probability 0.5). Each
//! iteration fits a regression tree to the residuals `y - p`, replaces
//! each leaf's output by the Newton value of its instances, and moves the
//! members' scores by `learning_rate * gamma`. Prediction replays the
//! same accumulation from zero.

use crate::data::{Dataset, Matrix};
use crate::error::{DataError, Error, Result};
use crate::node_math::{self, LeafSample, NewtonStep};
use crate::tree::{self, LeafAssignment, RegressionTree, TreeParams};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForcedSplit {
    pub feature_index: usize,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub n_trees: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// One split per iteration, replacing the greedy search. Stumps only.
    pub forced_splits: Option<Vec<ForcedSplit>>,
    /// Probability at or above which an instance is labelled 1.
    pub threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n_trees: 3,
            learning_rate: 0.1,
            max_depth: 1,
            min_leaf: 1,
            forced_splits: None,
            threshold: 0.5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees < 1 {
            return Err(Error::Config("number of trees must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::Config(format!(
                "learning rate must lie in (0, 1], got {}",
                self.learning_rate
            )));
        }
        if self.max_depth < 1 {
            return Err(Error::Config("max depth must be at least 1".into()));
        }
        if self.min_leaf < 1 {
            return Err(Error::Config("min leaf size must be at least 1".into()));
        }
        validate_threshold(self.threshold)?;
        if let Some(splits) = &self.forced_splits {
            if splits.len() != self.n_trees {
                return Err(Error::Config(format!(
                    "{} forced splits given for {} trees",
                    splits.len(),
                    self.n_trees
                )));
            }
            if self.max_depth != 1 {
                return Err(Error::Config("forced splits require max depth 1".into()));
            }
        }
        Ok(())
    }

    fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            min_leaf: self.min_leaf,
        }
    }
}

fn validate_threshold(threshold: f64) -> Result<()> {
    if threshold > 0.0 && threshold < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "classification threshold must lie in (0, 1), got {threshold}"
        )))
    }
}

/// Fitted ensemble `T_1..T_M` with the learning rate used to build it.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    trees: Vec<RegressionTree>,
    learning_rate: f64,
    n_features: usize,
    feature_names: Vec<String>,
    format_version: u64,
}

impl Model {
    pub fn new(
        trees: Vec<RegressionTree>,
        learning_rate: f64,
        n_features: usize,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if !(learning_rate.is_finite() && learning_rate > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {learning_rate}"
            )));
        }
        if n_features == 0 {
            return Err(Error::InvalidArgument(
                "model needs at least one feature".into(),
            ));
        }
        if feature_names.len() != n_features {
            return Err(Error::InvalidArgument(format!(
                "{} feature names for {n_features} features",
                feature_names.len()
            )));
        }
        for (m, t) in trees.iter().enumerate() {
            if let Some(f) = t.max_feature_index() {
                if f >= n_features {
                    return Err(Error::InvalidArgument(format!(
                        "tree {} splits on feature {f} but the model has {n_features}",
                        m + 1
                    )));
                }
            }
        }
        Ok(Self {
            trees,
            learning_rate,
            n_features,
            feature_names,
            format_version: FORMAT_VERSION,
        })
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn format_version(&self) -> u64 {
        self.format_version
    }

    fn check_dims(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features {
            return Err(DataError::DimensionMismatch {
                expected: self.n_features,
                found: x.len(),
            }
            .into());
        }
        Ok(())
    }

    /// Log-odds `0 + sum_m eta * T_m(x)`, accumulated in tree order.
    pub fn predict_raw(&self, x: &[f64]) -> Result<f64> {
        self.check_dims(x)?;
        Ok(self.raw_unchecked(x))
    }

    fn raw_unchecked(&self, x: &[f64]) -> f64 {
        let mut score = 0.0;
        for tree in &self.trees {
            score += self.learning_rate * tree.predict(x);
        }
        score
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        Ok(node_math::sigmoid(self.predict_raw(x)?))
    }

    /// 1 when the probability is at least `threshold`, else 0.
    pub fn predict_label(&self, x: &[f64], threshold: f64) -> Result<u8> {
        validate_threshold(threshold)?;
        Ok(u8::from(self.predict_proba(x)? >= threshold))
    }

    /// `(raw_score, probability, label)` for every row.
    pub fn predict_batch(&self, features: &Matrix, threshold: f64) -> Result<Vec<Prediction>> {
        validate_threshold(threshold)?;
        if features.n_rows() > 0 && features.n_cols() != self.n_features {
            return Err(DataError::DimensionMismatch {
                expected: self.n_features,
                found: features.n_cols(),
            }
            .into());
        }
        Ok(features
            .rows()
            .map(|x| {
                let raw = self.raw_unchecked(x);
                let probability = node_math::sigmoid(raw);
                Prediction {
                    raw_score: raw,
                    probability,
                    label: u8::from(probability >= threshold),
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub raw_score: f64,
    pub probability: f64,
    pub label: u8,
}

/// Per-instance working set of the training loop.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingState {
    pub scores: Vec<f64>,
    pub probs: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl TrainingState {
    /// `F_0 = 0` and `p_0 = 0.5` for every instance.
    pub fn new(n: usize) -> Self {
        Self {
            scores: vec![0.0; n],
            probs: vec![node_math::sigmoid(0.0); n],
            residuals: vec![0.0; n],
        }
    }

    pub fn compute_residuals(&mut self, labels: &[u8]) {
        self.residuals = node_math::residuals(labels, &self.probs);
    }

    fn leaf_step(&self, labels: &[u8], members: &[usize]) -> NewtonStep {
        if members.is_empty() {
            return NewtonStep {
                numerator: 0.0,
                denominator: 0.0,
                gamma: 0.0,
            };
        }
        let sample = LeafSample::new(
            members.iter().map(|&k| labels[k]).collect(),
            members.iter().map(|&k| self.scores[k]).collect(),
            members.iter().map(|&k| self.probs[k]).collect(),
        )
        .expect("training state keeps probs equal to sigmoid(scores)");
        node_math::newton_step(&sample)
    }

    fn shift(&mut self, members: &[usize], delta: f64) {
        for &k in members {
            self.scores[k] += delta;
            self.probs[k] = node_math::sigmoid(self.scores[k]);
        }
    }

    /// Cross-entropy of the current scores over the whole training set.
    pub fn loss(&self, labels: &[u8]) -> f64 {
        labels
            .iter()
            .zip(&self.scores)
            .map(|(&y, &f)| node_math::logistic_loss(y, f))
            .sum()
    }
}

/// `-sum(y ln p + (1 - y) ln(1 - p))`.
pub fn total_loss(labels: &[u8], probs: &[f64]) -> f64 {
    assert_eq!(
        labels.len(),
        probs.len(),
        "labels and probs differ in length"
    );
    -labels
        .iter()
        .zip(probs)
        .map(|(&y, &p)| if y == 1 { p.ln() } else { (1.0 - p).ln() })
        .sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceRecord {
    pub prev_prob: f64,
    pub residual: f64,
    pub leaf_id: usize,
    pub score: f64,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeafRecord {
    pub leaf_id: usize,
    /// 0-based instance indices.
    pub members: Vec<usize>,
    pub numerator: f64,
    pub denominator: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// 1-based iteration number `m`.
    pub iteration: usize,
    pub instances: Vec<InstanceRecord>,
    pub leaves: Vec<LeafRecord>,
    /// Total cross-entropy after this iteration's update.
    pub total_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingTrace {
    pub iterations: Vec<IterationRecord>,
}

impl TrainingTrace {
    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.iterations.last().map(|r| r.total_loss)
    }
}

fn require_labels(dataset: &Dataset) -> Result<&[u8]> {
    dataset.labels().ok_or_else(|| {
        DataError::MissingLabelColumn {
            found: dataset.feature_names().last().cloned().unwrap_or_default(),
        }
        .into()
    })
}

/// Applies one fitted tree to the state and records the iteration.
/// `gammas[j - 1]` is the value used for leaf `j`.
fn advance(
    state: &mut TrainingState,
    labels: &[u8],
    assignment: &LeafAssignment,
    steps: &[NewtonStep],
    gammas: &[f64],
    learning_rate: f64,
    iteration: usize,
) -> IterationRecord {
    let prev_probs = state.probs.clone();
    let mut leaf_of = vec![0; labels.len()];
    let mut leaves = Vec::with_capacity(assignment.n_leaves());
    for (leaf_id, members) in assignment.iter() {
        let gamma = gammas[leaf_id - 1];
        state.shift(members, learning_rate * gamma);
        for &k in members {
            leaf_of[k] = leaf_id;
        }
        let step = steps[leaf_id - 1];
        leaves.push(LeafRecord {
            leaf_id,
            members: members.to_vec(),
            numerator: step.numerator,
            denominator: step.denominator,
            gamma,
        });
    }
    let instances = (0..labels.len())
        .map(|i| InstanceRecord {
            prev_prob: prev_probs[i],
            residual: state.residuals[i],
            leaf_id: leaf_of[i],
            score: state.scores[i],
            prob: state.probs[i],
        })
        .collect();
    IterationRecord {
        iteration,
        instances,
        leaves,
        total_loss: state.loss(labels),
    }
}

/// Fits `config.n_trees` trees and returns the model with a full trace.
pub fn train(dataset: &Dataset, config: &TrainConfig) -> Result<(Model, TrainingTrace)> {
    config.validate()?;
    let labels = require_labels(dataset)?;
    let x = dataset.features();
    let n = dataset.n_rows();
    let all: Vec<usize> = (0..n).collect();
    let params = config.tree_params();

    let mut state = TrainingState::new(n);
    let mut trees = Vec::with_capacity(config.n_trees);
    let mut trace = TrainingTrace::default();

    for m in 0..config.n_trees {
        state.compute_residuals(labels);
        let mut tree = match &config.forced_splits {
            Some(splits) => {
                let s = splits[m];
                tree::forced_stump(dataset.n_features(), s.feature_index, s.threshold)?
            }
            None => tree::fit_tree(x, &state.residuals, &all, &params),
        };
        let assignment = tree.leaf_assignment(x, &all);
        let steps: Vec<NewtonStep> = assignment
            .iter()
            .map(|(_, members)| state.leaf_step(labels, members))
            .collect();
        let gammas: Vec<f64> = steps.iter().map(|s| s.gamma).collect();
        tree.set_leaf_values(&gammas);

        let record = advance(
            &mut state,
            labels,
            &assignment,
            &steps,
            &gammas,
            config.learning_rate,
            m + 1,
        );
        trace.iterations.push(record);
        trees.push(tree);
    }

    let model = Model::new(
        trees,
        config.learning_rate,
        dataset.n_features(),
        dataset.feature_names().to_vec(),
    )?;
    Ok((model, trace))
}

/// Rebuilds the training trace of `model` on a labelled dataset, using the
/// stored leaf values. On the model's own training data this reproduces
/// the trace returned by [`train`].
pub fn replay(model: &Model, dataset: &Dataset) -> Result<TrainingTrace> {
    let labels = require_labels(dataset)?;
    if dataset.n_features() != model.n_features() {
        return Err(DataError::DimensionMismatch {
            expected: model.n_features(),
            found: dataset.n_features(),
        }
        .into());
    }
    let x = dataset.features();
    let all: Vec<usize> = (0..dataset.n_rows()).collect();
    let mut state = TrainingState::new(dataset.n_rows());
    let mut trace = TrainingTrace::default();

    for (m, tree) in model.trees().iter().enumerate() {
        state.compute_residuals(labels);
        let assignment = tree.leaf_assignment(x, &all);
        let steps: Vec<NewtonStep> = assignment
            .iter()
            .map(|(_, members)| state.leaf_step(labels, members))
            .collect();
        let gammas: Vec<f64> = tree.leaf_values().iter().map(|&(_, g)| g).collect();
        trace.iterations.push(advance(
            &mut state,
            labels,
            &assignment,
            &steps,
            &gammas,
            model.learning_rate(),
            m + 1,
        ));
    }
    Ok(trace)
}
