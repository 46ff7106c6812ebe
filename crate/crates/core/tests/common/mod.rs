#![allow(dead_code)]

//! Oracles and generators shared by the integration tests. Nothing here
//! calls into the split search or the leaf-value code it is used to check.

use gbc::booster::{ForcedSplit, TrainConfig};
use gbc::data::{Dataset, Matrix};
use gbc::node_math::LeafSample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const TABLE1_X: [f64; 6] = [1.3, 1.5, 3.0, 4.0, 6.5, 8.4];
pub const TABLE1_Y: [u8; 6] = [1, 0, 1, 0, 1, 0];

pub fn appendix_dataset() -> Dataset {
    let rows: Vec<Vec<f64>> = TABLE1_X.iter().map(|&v| vec![v]).collect();
    let names = vec!["x".to_string()];
    Dataset::new(
        Matrix::from_rows(&rows, 1).unwrap(),
        Some(TABLE1_Y.to_vec()),
        names,
    )
    .unwrap()
}

pub fn appendix_config() -> TrainConfig {
    TrainConfig {
        n_trees: 3,
        learning_rate: 0.1,
        max_depth: 1,
        min_leaf: 1,
        forced_splits: Some(
            [3.5, 2.25, 5.25]
                .iter()
                .map(|&threshold| ForcedSplit {
                    feature_index: 0,
                    threshold,
                })
                .collect(),
        ),
        threshold: 0.5,
    }
}

/// Mean, then squared deviations: the textbook two-pass SSE.
pub fn two_pass_sse(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - mean).powi(2)).sum()
}

/// Every admissible `(feature, threshold, sse_after)` of a node, built by
/// partitioning the instances afresh for each midpoint.
pub fn enumerate_splits(x: &Matrix, r: &[f64], instances: &[usize]) -> Vec<(usize, f64, f64)> {
    let mut out = Vec::new();
    for j in 0..x.n_cols() {
        let mut vals: Vec<f64> = instances.iter().map(|&i| x.get(i, j)).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let (left, right): (Vec<f64>, Vec<f64>) = {
                let mut l = Vec::new();
                let mut rr = Vec::new();
                for &i in instances {
                    if x.get(i, j) <= t {
                        l.push(r[i]);
                    } else {
                        rr.push(r[i]);
                    }
                }
                (l, rr)
            };
            out.push((j, t, two_pass_sse(&left) + two_pass_sse(&right)));
        }
    }
    out
}

pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// A leaf of 2..=20 instances with independent uniform scores in [-4, 4]
/// and fair-coin labels, redrawn until both classes occur.
pub fn random_mixed_leaf(rng: &mut ChaCha8Rng) -> LeafSample {
    loop {
        let n = rng.gen_range(2..=20);
        let labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1)).collect();
        if !(labels.contains(&0) && labels.contains(&1)) {
            continue;
        }
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(-4.0..=4.0)).collect();
        return LeafSample::from_scores(labels, scores).unwrap();
    }
}

/// Labels drawn from a noisy linear rule so the trees have signal to fit.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Dataset {
    let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let z: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + rng.gen_range(-1.0..1.0);
        labels.push(u8::from(z > 0.0));
        rows.push(row);
    }
    Dataset::from_rows(&rows, Some(labels)).unwrap()
}

pub fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}
