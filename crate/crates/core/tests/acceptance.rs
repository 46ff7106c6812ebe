//! Acceptance criteria. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; exits non-zero if any fail.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use gbc::booster::{train, TrainConfig};
use gbc::model_file;
use gbc::node_math::*;
use gbc::tree::best_split;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const APPENDIX_TOL: f64 = 5e-4;
const ORACLE_SLACK: f64 = 1e-9;
const FD_STEP: f64 = 1e-5;
const FD_REL_TOL: f64 = 1e-6;
const N_LEAVES: usize = 1000;
const LEAF_SEED: u64 = 0x5eed_1eaf;

type Outcome = Result<String, String>;

struct Criterion {
    id: &'static str,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(actual: f64, expected: f64, tol: f64, what: &str) -> Result<(), String> {
    ensure((actual - expected).abs() <= tol, || {
        format!("{what}: {actual:.6} not within {tol:e} of {expected}")
    })
}

fn appendix_reproduction() -> Outcome {
    let (_, trace) = train(&appendix_dataset(), &appendix_config()).map_err(|e| e.to_string())?;
    let gammas: Vec<Vec<f64>> = trace
        .iterations
        .iter()
        .map(|it| it.leaves.iter().map(|l| l.gamma).collect())
        .collect();
    within(gammas[0][0], 2.0 / 3.0, 1e-12, "gamma(1,1)")?;
    within(gammas[0][1], -2.0 / 3.0, 1e-12, "gamma(1,2)")?;
    within(gammas[1][0], -0.0669, APPENDIX_TOL, "gamma(2,1)")?;
    within(gammas[1][1], 0.0334, APPENDIX_TOL, "gamma(2,2)")?;
    within(gammas[2][0], -0.0317, APPENDIX_TOL, "gamma(3,1)")?;
    within(gammas[2][1], 0.0633, APPENDIX_TOL, "gamma(3,2)")?;

    let expected_p1 = [0.5167, 0.5167, 0.5167, 0.4833, 0.4833, 0.4833];
    let expected_p2 = [0.5150, 0.5150, 0.5175, 0.4842, 0.4842, 0.4842];
    let expected_p3 = [0.5142, 0.5142, 0.5167, 0.4834, 0.4858, 0.4858];
    for (m, expected) in [expected_p1, expected_p2, expected_p3].iter().enumerate() {
        for (i, e) in expected.iter().enumerate() {
            let p = trace.iterations[m].instances[i].prob;
            within(p, *e, APPENDIX_TOL, &format!("p_{}^({})", m + 1, i + 1))?;
        }
    }
    let finals: Vec<String> = trace.iterations[2]
        .instances
        .iter()
        .map(|r| format!("{:.4}", r.prob))
        .collect();
    Ok(format!(
        "gammas {:.4}/{:.4}, {:.4}/{:.4}, {:.4}/{:.4}; final p [{}]",
        gammas[0][0],
        gammas[0][1],
        gammas[1][0],
        gammas[1][1],
        gammas[2][0],
        gammas[2][1],
        finals.join(", ")
    ))
}

fn held_out_prediction() -> Outcome {
    let (model, _) = train(&appendix_dataset(), &appendix_config()).map_err(|e| e.to_string())?;
    let raw = model.predict_raw(&[7.0]).map_err(|e| e.to_string())?;
    let p = model.predict_proba(&[7.0]).map_err(|e| e.to_string())?;
    let label = model
        .predict_label(&[7.0], 0.5)
        .map_err(|e| e.to_string())?;
    within(raw, -0.0570, APPENDIX_TOL, "raw score at x=7")?;
    within(p, 0.4858, APPENDIX_TOL, "probability at x=7")?;
    ensure(label == 0, || {
        format!("label at x=7 is {label}, expected 0")
    })?;
    Ok(format!("raw {raw:.4}, p {p:.4}, label {label}"))
}

fn random_leaves() -> Vec<LeafSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(LEAF_SEED);
    (0..N_LEAVES).map(|_| random_mixed_leaf(&mut rng)).collect()
}

fn taylor_sandwich() -> Outcome {
    let mut oracle_violations = 0;
    let mut newton_violations = 0;
    let mut damped_violations = 0;
    let mut worst: Option<(f64, usize)> = None;
    for s in random_leaves() {
        let go = gamma_oracle(&s, ORACLE_BOUND, ORACLE_TOL).map_err(|e| e.to_string())?;
        let gn = gamma_newton(&s);
        let (l_oracle, l_newton, l_zero) =
            (leaf_loss(go, &s), leaf_loss(gn, &s), leaf_loss(0.0, &s));
        if l_oracle > l_newton + ORACLE_SLACK {
            oracle_violations += 1;
        }
        if l_newton > l_zero {
            newton_violations += 1;
            let excess = l_newton - l_zero;
            if worst.is_none_or(|(w, _)| excess > w) {
                worst = Some((excess, s.len()));
            }
        }
        if leaf_loss(0.1 * gn, &s) > l_zero {
            damped_violations += 1;
        }
    }
    let summary = format!(
        "{N_LEAVES} leaves: oracle>newton {oracle_violations}, newton>zero {newton_violations}, \
         eta=0.1 step>zero {damped_violations}"
    );
    if oracle_violations + newton_violations == 0 {
        Ok(summary)
    } else {
        let worst = worst
            .map(|(e, n)| format!("; worst undamped overshoot +{e:.3} on a {n}-instance leaf"))
            .unwrap_or_default();
        Err(format!("{summary}{worst}"))
    }
}

fn gradient_check() -> Outcome {
    let mut checked = 0;
    let mut worst = 0.0f64;
    for s in random_leaves() {
        let go = gamma_oracle(&s, ORACLE_BOUND, ORACLE_TOL).map_err(|e| e.to_string())?;
        for g in [0.0, gamma_newton(&s), go] {
            let fd = central_difference(|t| leaf_loss(t, &s), g, FD_STEP);
            let an = leaf_loss_derivative(g, &s);
            let rel = (fd - an).abs() / an.abs().max(1.0);
            worst = worst.max(rel);
            checked += 1;
            ensure(rel <= FD_REL_TOL, || {
                format!("gamma {g}: analytic {an}, central difference {fd}, rel err {rel:e}")
            })?;
        }
    }
    Ok(format!(
        "{checked} points, worst relative error {worst:.2e}"
    ))
}

fn analytic_oracle_case() -> Outcome {
    let s = LeafSample::from_scores(vec![1, 1, 0], vec![0.0; 3]).map_err(|e| e.to_string())?;
    let go = gamma_oracle(&s, ORACLE_BOUND, ORACLE_TOL).map_err(|e| e.to_string())?;
    let gn = gamma_newton(&s);
    within(go, std::f64::consts::LN_2, 1e-8, "oracle gamma")?;
    within(gn, 2.0 / 3.0, 1e-12, "newton gamma")?;
    Ok(format!("oracle {go:.10} (ln 2), newton {gn:.12} (2/3)"))
}

fn greedy_split_equivalence() -> Outcome {
    let ds = appendix_dataset();
    let r = [0.5, -0.5, 0.5, -0.5, 0.5, -0.5];
    let all: Vec<usize> = (0..6).collect();
    let s = best_split(ds.features(), &r, &all).ok_or("no split on first residuals")?;
    within(s.threshold, 1.4, 1e-12, "greedy threshold")?;
    within(s.sse_after, 1.2, 1e-12, "greedy SSE")?;
    let assumed = enumerate_splits(ds.features(), &r, &all)
        .into_iter()
        .find(|c| c.1 == 3.5)
        .ok_or("3.5 is not a candidate")?;
    within(assumed.2, 4.0 / 3.0, 1e-12, "SSE at 3.5")?;
    ensure(s.threshold != 3.5, || "greedy search picked 3.5".into())?;

    let mut rng = ChaCha8Rng::seed_from_u64(0x5b1175);
    let mut exact_choice = 0;
    for case in 0..200 {
        let n = rng.gen_range(1..=50);
        let d = rng.gen_range(1..=4);
        // Coarse grid values force duplicate feature values.
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..d)
                    .map(|_| f64::from(rng.gen_range(-20..=20)) / 4.0)
                    .collect()
            })
            .collect();
        let x = gbc::data::Matrix::from_rows(&rows, d).map_err(|e| e.to_string())?;
        let r: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let all: Vec<usize> = (0..n).collect();
        let parent = two_pass_sse(&r);
        let candidates = enumerate_splits(&x, &r, &all);
        let oracle_min = candidates.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
        match best_split(&x, &r, &all) {
            None => ensure(candidates.is_empty() || oracle_min >= parent - 1e-9, || {
                format!("case {case}: no split returned but oracle finds {oracle_min} < {parent}")
            })?,
            Some(s) => {
                within(s.sse_after, oracle_min, 1e-9, &format!("case {case} SSE"))?;
                let first = candidates
                    .iter()
                    .find(|c| c.2 <= oracle_min + 1e-9)
                    .expect("a minimiser exists");
                if (first.0, first.1) == (s.feature_index, s.threshold) {
                    exact_choice += 1;
                } else {
                    let chosen = candidates
                        .iter()
                        .find(|c| (c.0, c.1) == (s.feature_index, s.threshold))
                        .ok_or_else(|| {
                            format!("case {case}: threshold {} not a midpoint", s.threshold)
                        })?;
                    within(chosen.2, oracle_min, 1e-9, &format!("case {case} tie"))?;
                }
            }
        }
    }
    Ok(format!(
        "table residuals split at 1.4 (SSE 1.2) vs assumed 3.5 (SSE 4/3); \
         200 random nodes agree ({exact_choice} identical picks, rest within 1e-9 ties)"
    ))
}

fn monotone_training_loss() -> Outcome {
    let mut iterations = 0;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=64);
        let d = rng.gen_range(1..=4);
        let max_depth = rng.gen_range(1..=2);
        let ds = random_dataset(&mut rng, n, d);
        let cfg = TrainConfig {
            n_trees: 20,
            learning_rate: 0.1,
            max_depth,
            ..TrainConfig::default()
        };
        let (_, trace) = train(&ds, &cfg).map_err(|e| e.to_string())?;
        let mut prev = n as f64 * std::f64::consts::LN_2;
        for it in &trace.iterations {
            ensure(it.total_loss <= prev, || {
                format!(
                    "seed {seed}, iteration {}: loss rose {prev} -> {}",
                    it.iteration, it.total_loss
                )
            })?;
            prev = it.total_loss;
            iterations += 1;
        }
    }
    Ok(format!(
        "50 seeds x 20 iterations ({iterations} steps), no increase"
    ))
}

fn persistence_round_trip() -> Outcome {
    let (model, _) = train(&appendix_dataset(), &appendix_config()).map_err(|e| e.to_string())?;
    let text = model_file::serialize(&model);
    let back = model_file::deserialize(&text).map_err(|e| e.to_string())?;
    for i in 0..100 {
        let x = 10.0 * f64::from(i) / 99.0;
        let a = model.predict_raw(&[x]).map_err(|e| e.to_string())?;
        let b = back.predict_raw(&[x]).map_err(|e| e.to_string())?;
        ensure(a.to_bits() == b.to_bits(), || {
            format!("x={x}: {a:e} != {b:e}")
        })?;
    }
    Ok(format!(
        "100 grid points bit-identical ({} bytes of JSON)",
        text.len()
    ))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            id: "AC1",
            name: "worked example reproduction",
            budget: Duration::from_secs(1),
            run: appendix_reproduction,
        },
        Criterion {
            id: "AC2",
            name: "held-out prediction at x=7",
            budget: Duration::from_millis(100),
            run: held_out_prediction,
        },
        Criterion {
            id: "AC3",
            name: "loss(oracle) <= loss(newton) <= loss(0)",
            budget: Duration::from_secs(5),
            run: taylor_sandwich,
        },
        Criterion {
            id: "AC4",
            name: "derivative vs central differences",
            budget: Duration::from_secs(5),
            run: gradient_check,
        },
        Criterion {
            id: "AC5",
            name: "analytic oracle case",
            budget: Duration::from_secs(1),
            run: analytic_oracle_case,
        },
        Criterion {
            id: "AC6",
            name: "greedy split vs exhaustive enumeration",
            budget: Duration::from_secs(5),
            run: greedy_split_equivalence,
        },
        Criterion {
            id: "AC7",
            name: "monotone training loss",
            budget: Duration::from_secs(30),
            run: monotone_training_loss,
        },
        Criterion {
            id: "AC8",
            name: "model file round trip",
            budget: Duration::from_secs(1),
            run: persistence_round_trip,
        },
    ];

    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > c.budget => {
                Err(format!("{detail}; took {elapsed:?}, budget {:?}", c.budget))
            }
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS {} {} [{elapsed:.2?}]: {detail}", c.id, c.name),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {} [{elapsed:.2?}]: {why}", c.id, c.name);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
