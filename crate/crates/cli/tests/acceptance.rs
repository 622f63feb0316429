//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`). Pass criterion ids such as
//! `A4 A7` to run a subset.

use std::collections::BTreeSet;
use std::time::Instant;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use backcompat_caja::{
    generate_stream, naive_policy_value, new_errors, run_scripted_player, FeatureSpace, GameConfig, Money,
    PlayerKind, UpdateKind,
};
use backcompat_core::data::{generate_synthetic, SyntheticSpec};
use backcompat_core::losses::{combined_loss, combined_loss_logit_gradient};
use backcompat_core::scalar::sigmoid;
use backcompat_core::stats::{interpolate, mean, spearman, standard_error};
use backcompat_core::trainer::{references, sweep_lambda, Objective, DEFAULT_LAMBDA_GRID};
use backcompat_core::{
    compatibility_score, init_classifier, run_update_experiment, train, Classifier, ClassifierKind, Dataset,
    DissonanceKind, Error as CoreError, LinearClassifier, LossContext, Model, Reference, Scalar, TrainConfig,
    UpdateExperiment,
};
use backcompat_service::{replay_log, router, AppState, Store};
use http_body_util::BodyExt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

const PENALIZING: [DissonanceKind; 3] = [
    DissonanceKind::NewError,
    DissonanceKind::Imitation,
    DissonanceKind::StrictImitation,
];

fn synthetic(size: usize, seed: u64) -> Dataset<f64> {
    generate_synthetic(&SyntheticSpec {
        size,
        seed,
        ..Default::default()
    })
    .unwrap()
}

/// A1: a zero dissonance weight leaves training bit-identical to the plain loss.
fn a1() -> Verdict {
    fn check<T: Scalar>(seed: u64, kind: ClassifierKind) -> Result<(), String> {
        let data: Dataset<T> = generate_synthetic(&SyntheticSpec {
            size: 120,
            seed,
            ..Default::default()
        })
        .unwrap();
        let base = TrainConfig {
            classifier: kind,
            epochs: 60,
            seed,
            ..Default::default()
        };
        let h1 = train(&data.subset(&(0..40).collect::<Vec<_>>()), &base, None).unwrap();
        let plain = train(&data, &base, None).unwrap().parameters();
        for dissonance in PENALIZING {
            let cfg = TrainConfig {
                dissonance,
                lambda_c: 0.0,
                ..base.clone()
            };
            let penalized = train(&data, &cfg, Some(&h1)).unwrap().parameters();
            let same = plain.len() == penalized.len()
                && plain
                    .iter()
                    .zip(&penalized)
                    .all(|(a, b)| a.to_f64_lossy().to_bits() == b.to_f64_lossy().to_bits());
            if !same {
                return Err(format!("seed {seed}, {kind}, {dissonance}"));
            }
        }
        Ok(())
    }
    let mut checked = 0;
    for seed in 0..10 {
        for kind in [ClassifierKind::Linear, ClassifierKind::Network] {
            for result in [check::<f64>(seed, kind), check::<f32>(seed, kind)] {
                if let Err(which) = result {
                    return verdict(false, format!("parameters differ at {which}"));
                }
                checked += 3;
            }
        }
    }
    verdict(true, format!("{checked} penalized trainings bit-identical to plain (10 seeds, f32 and f64)"))
}

fn relative_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-3)
}

/// A2: analytic gradients agree with central differences.
fn a2() -> Verdict {
    const H: f64 = 1e-6;
    const TOL: f64 = 1e-5;
    let lambdas = [0.0, 0.5, 2.0];
    let probs: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
    let mut worst: f64 = 0.0;
    let mut checks = 0usize;

    // logit level, over the full grid
    for &lambda in &lambdas {
        for kind in PENALIZING {
            for y in [0u8, 1] {
                for &p1 in &probs {
                    for &p2 in &probs {
                        for correct in [false, true] {
                            let ctx = LossContext::new(kind, lambda, Some(Reference { probability: p1, correct }));
                            let z = f64::ln(p2 / (1.0 - p2));
                            let loss = |z: f64| combined_loss(&ctx, y, sigmoid(z)).unwrap();
                            let numeric = (loss(z + H) - loss(z - H)) / (2.0 * H);
                            let analytic = combined_loss_logit_gradient(&ctx, y, p2).unwrap();
                            worst = worst.max(relative_error(analytic, numeric));
                            checks += 1;
                        }
                    }
                }
            }
        }
    }

    // parameter level, end to end on 20 examples
    let data = synthetic(20, 7);
    for kind in [ClassifierKind::Linear, ClassifierKind::Network] {
        let h1 = init_classifier::<f64>(kind, data.dim(), 10, 99).unwrap();
        let h1 = train(
            &data,
            &TrainConfig {
                classifier: kind,
                epochs: 5,
                learning_rate: 0.5,
                seed: 99,
                ..Default::default()
            },
            Some(&h1),
        )
        .unwrap();
        let refs = references(&h1, &data).unwrap();
        let model = train(
            &data,
            &TrainConfig {
                classifier: kind,
                epochs: 30,
                learning_rate: 0.5,
                seed: 3,
                ..Default::default()
            },
            None,
        )
        .unwrap();
        for dissonance in PENALIZING {
            for &lambda in &lambdas {
                let objective = Objective::new(&data, dissonance, lambda, Some(&refs)).unwrap();
                let analytic = objective.gradient(&model).unwrap();
                let theta = model.parameters();
                for (i, &g) in analytic.iter().enumerate() {
                    let at = |delta: f64| {
                        let mut m: Classifier<f64> = model.clone();
                        let mut p = theta.clone();
                        p[i] += delta;
                        m.set_parameters(&p);
                        objective.loss(&m).unwrap()
                    };
                    let numeric = (at(H) - at(-H)) / (2.0 * H);
                    worst = worst.max(relative_error(g, numeric));
                    checks += 1;
                }
            }
        }
    }
    verdict(
        worst < TOL,
        format!("{checks} gradient entries, worst relative error {worst:.2e} (tolerance {TOL:.0e})"),
    )
}

/// A3: compatibility score equals direct set enumeration.
fn a3() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut defined = 0;
    for trial in 0..1000 {
        let dim = rng.random_range(1..5);
        let n = rng.random_range(1..=50);
        let mut model = || {
            let w: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
            LinearClassifier::new(w, rng.random_range(-1.0..1.0))
        };
        let (h1, h2) = (model(), model());
        let examples = (0..n)
            .map(|_| {
                let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
                backcompat_core::Example::new(x, rng.random_range(0..2u8)).unwrap()
            })
            .collect();
        let data = Dataset::from_examples(examples).unwrap();

        let correct = |h: &LinearClassifier<f64>| -> BTreeSet<usize> {
            data.examples()
                .iter()
                .enumerate()
                .filter(|(_, e)| h.recommend(&e.features).unwrap() == e.label)
                .map(|(i, _)| i)
                .collect()
        };
        let (c1, c2) = (correct(&h1), correct(&h2));
        let brute = (!c1.is_empty()).then(|| c1.intersection(&c2).count() as f64 / c1.len() as f64);
        let fast = match compatibility_score(&h1, &h2, &data) {
            Ok(c) => Some(c),
            Err(CoreError::CompatibilityUndefined) => None,
            Err(e) => return verdict(false, format!("trial {trial}: {e}")),
        };
        if fast != brute {
            return verdict(false, format!("trial {trial}: {fast:?} != {brute:?}"));
        }
        if let Some(c) = brute {
            defined += 1;
            if compatibility_score(&h1, &h1, &data).unwrap() != 1.0 || !(0.0..=1.0).contains(&c) {
                return verdict(false, format!("trial {trial}: C(h,h) != 1"));
            }
        }
    }
    verdict(true, format!("1000 triples exact ({defined} defined, C(h,h) = 1 on each)"))
}

/// A4: plain retraining on more data is more accurate yet not fully compatible.
fn a4() -> Verdict {
    let data = synthetic(8000, 0);
    let exp = UpdateExperiment {
        runs: 50,
        ..Default::default()
    };
    let s = run_update_experiment(&data, &exp, &TrainConfig::default()).unwrap();
    verdict(
        s.mean_compatibility < 0.97 && s.mean_auc_h2 > s.mean_auc_h1,
        format!(
            "mean C {:.4} (< 0.97), AUC h1 {:.4} < AUC h2 {:.4}, 50 runs",
            s.mean_compatibility, s.mean_auc_h1, s.mean_auc_h2
        ),
    )
}

/// A5: the dissonance weight trades AUC for compatibility.
fn a5() -> Verdict {
    let data = synthetic(8000, 0);
    let exp = UpdateExperiment {
        runs: 20,
        ..Default::default()
    };
    let config = TrainConfig {
        dissonance: DissonanceKind::NewError,
        ..Default::default()
    };
    let curve = sweep_lambda(&data, &DEFAULT_LAMBDA_GRID, &exp, &config, "synthetic").unwrap().curve();
    let lambdas: Vec<f64> = curve.iter().map(|c| c.lambda_c).collect();
    let cs: Vec<f64> = curve.iter().map(|c| c.mean_compatibility).collect();
    let rho = spearman(&lambdas, &cs).unwrap_or(f64::NAN);
    let gain = cs[cs.len() - 1] - cs[0];
    let median = &curve[curve.len() / 2];
    let drop = (median.mean_auc_h2 - curve[0].mean_auc_h2).abs();
    verdict(
        rho > 0.8 && gain >= 0.05 && drop <= 0.02,
        format!(
            "Spearman {rho:.3} (> 0.8), C gain {gain:.4} (>= 0.05), |AUC(lambda {}) - AUC(0)| = {drop:.4} (<= 0.02)",
            median.lambda_c
        ),
    )
}

/// A6: at equal compatibility, penalizing new errors costs the least AUC.
fn a6() -> Verdict {
    let data = synthetic(8000, 0);
    let exp = UpdateExperiment {
        n1: 50,
        runs: 20,
        h1_label_noise: 0.3,
        ..Default::default()
    };
    let curves: Vec<Vec<(f64, f64)>> = PENALIZING
        .iter()
        .map(|&kind| {
            let config = TrainConfig {
                dissonance: kind,
                ..Default::default()
            };
            sweep_lambda(&data, &DEFAULT_LAMBDA_GRID, &exp, &config, "synthetic")
                .unwrap()
                .curve()
                .iter()
                .map(|c| (c.mean_compatibility, c.mean_auc_h2))
                .collect()
        })
        .collect();
    let lo = curves
        .iter()
        .map(|c| c.iter().map(|p| p.0).fold(f64::INFINITY, f64::min))
        .fold(f64::NEG_INFINITY, f64::max);
    let hi = curves
        .iter()
        .map(|c| c.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max))
        .fold(f64::INFINITY, f64::min);
    const LEVELS: usize = 9;
    let mut ne_minus_si = f64::INFINITY;
    let mut si_minus_im = f64::INFINITY;
    let mut rows = Vec::new();
    for k in 0..LEVELS {
        let c = lo + (hi - lo) * k as f64 / (LEVELS - 1) as f64;
        let auc: Vec<f64> = curves.iter().map(|curve| interpolate(curve, c).unwrap()).collect();
        let (ne, im, si) = (auc[0], auc[1], auc[2]);
        ne_minus_si = ne_minus_si.min(ne - si);
        si_minus_im = si_minus_im.min(si - im);
        rows.push(format!("C {c:.3}: NE {ne:.4} SI {si:.4} Im {im:.4}"));
    }
    for r in &rows {
        println!("     {r}");
    }
    verdict(
        ne_minus_si >= 0.0 && si_minus_im >= -0.01,
        format!(
            "{LEVELS} levels over C in [{lo:.3}, {hi:.3}]: min(NE - SI) = {ne_minus_si:+.4} (>= 0), min(SI - Im) = {si_minus_im:+.4} (>= -0.01)"
        ),
    )
}

/// A7: exact stream counts and phase scores of the default session.
fn a7() -> Verdict {
    let config = GameConfig::default();
    let stream = generate_stream(&config).unwrap();
    let (pre_in, post_in) = (stream.in_boundary_count(1, 75), stream.in_boundary_count(76, 150));
    let accept = run_scripted_player(&config, PlayerKind::NaiveAccept).unwrap();
    let oracle = run_scripted_player(&config, PlayerKind::Oracle).unwrap();
    let no_update = naive_policy_value(&config.clone().with_update(UpdateKind::NoUpdate)).unwrap();
    verdict(
        pre_in == 15
            && post_in == 11
            && accept.pre_update_score == Money::ZERO
            && oracle.pre_update_score == Money::from_dollars(2.40)
            && no_update == Money::ZERO,
        format!(
            "in-boundary {pre_in}/{post_in}, always-accept pre-update {}, oracle pre-update {}",
            accept.pre_update_score, oracle.pre_update_score
        ),
    )
}

/// A8: compatible boundary updates add no errors; incompatible ones do.
fn a8() -> Verdict {
    let space = FeatureSpace::default();
    assert_eq!(space.enumerate().len(), 18);
    let mut fewest_new = usize::MAX;
    for seed in 0..100 {
        let base = GameConfig::default().with_seed(seed);
        let (old, new) = base.clone().with_update(UpdateKind::Compatible).boundaries().unwrap();
        let violations = new_errors(&old, &new, &space).len();
        if violations != 0 {
            return verdict(false, format!("seed {seed}: compatible update adds {violations} errors"));
        }
        let (old, new) = base.with_update(UpdateKind::Incompatible).boundaries().unwrap();
        fewest_new = fewest_new.min(new_errors(&old, &new, &space).len());
    }
    verdict(
        fewest_new >= 1,
        format!("100 seeds x 18 objects: 0 new errors when compatible, >= {fewest_new} when incompatible"),
    )
}

/// A9: the learning player does better after compatible updates.
fn a9() -> Verdict {
    let scores = |kind: UpdateKind| -> Vec<f64> {
        (0..100)
            .map(|s| {
                let config = GameConfig::default().with_update(kind).with_seed(s);
                run_scripted_player(&config, PlayerKind::Learner).unwrap().score.dollars()
            })
            .collect()
    };
    let (compatible, incompatible, none) = (
        scores(UpdateKind::Compatible),
        scores(UpdateKind::Incompatible),
        scores(UpdateKind::NoUpdate),
    );
    let diff = mean(&compatible) - mean(&incompatible);
    let se = (standard_error(&compatible).powi(2) + standard_error(&incompatible).powi(2)).sqrt();
    verdict(
        diff > 2.0 * se,
        format!(
            "compatible {:.4}, incompatible {:.4}, difference {diff:.4} > 2 x SE {se:.4} (no update: {:.4})",
            mean(&compatible),
            mean(&incompatible),
            mean(&none)
        ),
    )
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, String) {
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

/// A10: recorded session replays exactly, duplicates never double-advance.
fn a10() -> Verdict {
    let runtime = tokio::runtime::Runtime::new().unwrap();
    runtime.block_on(async {
        let dir = tempfile::tempdir().unwrap();
        let config = GameConfig::default().with_seed(17);
        let recorded = run_scripted_player(&config, PlayerKind::Learner).unwrap();
        let app = router(AppState::new(Store::open(dir.path()).unwrap(), GameConfig::default()));

        let (status, created) = call(&app, Method::POST, "/sessions", Some(serde_json::to_value(&config).unwrap())).await;
        if status != StatusCode::CREATED {
            return verdict(false, format!("create failed: {created}"));
        }
        let id = serde_json::from_str::<Value>(&created).unwrap()["session_id"].as_str().unwrap().to_string();
        let action_uri = format!("/sessions/{id}/action");
        let summary_uri = format!("/sessions/{id}/summary");
        let mut duplicates = 0;
        for (i, record) in recorded.trace.iter().enumerate() {
            let body = json!({ "action": record.action, "cycle": i + 1 });
            let (status, first) = call(&app, Method::POST, &action_uri, Some(body.clone())).await;
            if status != StatusCode::OK {
                return verdict(false, format!("cycle {}: {status} {first}", i + 1));
            }
            let (status, again) = call(&app, Method::POST, &action_uri, Some(body)).await;
            let (_, summary) = call(&app, Method::GET, &summary_uri, None).await;
            let cursor = serde_json::from_str::<Value>(&summary).unwrap()["cycle"].as_u64().unwrap();
            if status != StatusCode::OK || again != first || cursor != (i + 1) as u64 {
                return verdict(false, format!("duplicate of cycle {} advanced or differed", i + 1));
            }
            duplicates += 1;
        }
        let (_, live_summary) = call(&app, Method::GET, &summary_uri, None).await;
        let (_, live_trace) = call(&app, Method::GET, &format!("/sessions/{id}/trace"), None).await;
        drop(app);

        let replayed = replay_log(&dir.path().join(format!("{id}.jsonl"))).unwrap();
        let restarted = router(AppState::new(Store::open(dir.path()).unwrap(), GameConfig::default()));
        let (_, summary) = call(&restarted, Method::GET, &summary_uri, None).await;
        let (_, trace) = call(&restarted, Method::GET, &format!("/sessions/{id}/trace"), None).await;
        let live: Value = serde_json::from_str(&live_summary).unwrap();
        let final_score: Money = serde_json::from_value(live["score"].clone()).unwrap();
        let pass = summary == live_summary
            && trace == live_trace
            && replayed.session.trace_jsonl() == live_trace
            && replayed.session.score() == recorded.score
            && final_score == recorded.score;
        verdict(
            pass,
            format!(
                "150 actions + {duplicates} duplicates, replayed score {} = live {} = engine {}",
                replayed.session.score(),
                final_score,
                recorded.score
            ),
        )
    })
}

type Criterion = (&'static str, &'static str, fn() -> Verdict);

const CRITERIA: [Criterion; 10] = [
    ("A1", "lambda_c = 0 equivalence", a1),
    ("A2", "gradient correctness", a2),
    ("A3", "compatibility score oracle", a3),
    ("A4", "plain retraining is incompatible", a4),
    ("A5", "explorable tradeoff", a5),
    ("A6", "dissonance ordering", a6),
    ("A7", "game arithmetic", a7),
    ("A8", "boundary update compatibility", a8),
    ("A9", "team performance ordering", a9),
    ("A10", "service integrity", a10),
];

fn main() {
    let selected: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    for (id, title, check) in CRITERIA {
        if !selected.is_empty() && !selected.iter().any(|s| s == id) {
            continue;
        }
        let start = Instant::now();
        let v = check();
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!(
            "{id:<4} {status}  {title}: {} [{:.1}s]",
            v.detail,
            start.elapsed().as_secs_f64()
        );
        if !v.pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
