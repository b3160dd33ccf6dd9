mod common;

use common::rng;
use proptest::prelude::*;
use rand::Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};
use tfmn_core::explain::{shap_feature_elimination, Decision, EliminationSettings};
use tfmn_core::ml::{
    cross_validate, fit, fit_gbm, fit_rfr, fit_tree, permutation, permutation_baseline, permute, EnsembleConfig,
    Grid, Matrix, MaxFeatures, Sequential, TreeParams,
};
use tfmn_core::rng::rng_for;
use tfmn_core::stats::{correlation_p_value, pearson};

fn names(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("x{j}")).collect()
}

fn all(n: usize) -> Vec<usize> {
    (0..n).collect()
}

fn sse(y: &[f64]) -> f64 {
    let m = y.iter().sum::<f64>() / y.len() as f64;
    y.iter().map(|v| (v - m).powi(2)).sum()
}

#[test]
fn root_split_is_exhaustive_optimum() {
    let mut r = rng(11);
    for _ in 0..50 {
        let n = r.gen_range(4..30);
        let xs: Vec<f64> = (0..n).map(|_| f64::from(r.gen_range(0..10u8))).collect();
        let y: Vec<f64> = (0..n).map(|_| r.gen::<f64>()).collect();
        let x = Matrix::from_columns(std::slice::from_ref(&xs));
        let params = TreeParams { max_depth: Some(1), ..TreeParams::default() };
        let t = fit_tree(&x, &y, &all(n), &params, &mut rng_for(0, 0)).unwrap();
        let mut distinct = xs.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        let best = distinct
            .windows(2)
            .map(|w| {
                let thr = (w[0] + w[1]) / 2.0;
                let l: Vec<f64> = (0..n).filter(|&i| xs[i] <= thr).map(|i| y[i]).collect();
                let rr: Vec<f64> = (0..n).filter(|&i| xs[i] > thr).map(|i| y[i]).collect();
                sse(&l) + sse(&rr)
            })
            .fold(f64::INFINITY, f64::min);
        let Some(s) = t.nodes[0].split else {
            assert_eq!(distinct.len(), 1);
            continue;
        };
        let l: Vec<f64> = (0..n).filter(|&i| xs[i] <= s.threshold).map(|i| y[i]).collect();
        let rr: Vec<f64> = (0..n).filter(|&i| xs[i] > s.threshold).map(|i| y[i]).collect();
        assert!((sse(&l) + sse(&rr) - best).abs() < 1e-9);
    }
}

#[test]
fn leaves_hold_training_means() {
    let x = Matrix::from_columns(&[vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]]);
    let y = [1.0, 2.0, 3.0, 10.0, 11.0, 15.0];
    let params = TreeParams { max_depth: Some(1), ..TreeParams::default() };
    let t = fit_tree(&x, &y, &all(6), &params, &mut rng_for(0, 0)).unwrap();
    assert_eq!(t.predict(&[0.0]), 2.0);
    assert_eq!(t.predict(&[9.0]), 12.0);
}

proptest! {
    #[test]
    fn depth_limit_holds(seed in 0u64..1000, depth in 1usize..6, leaves in proptest::option::of(2usize..12)) {
        let mut r = rng(seed);
        let n = 50;
        let x = Matrix::from_rows(&(0..n).map(|_| [r.gen::<f64>(), r.gen::<f64>(), r.gen::<f64>()]).collect::<Vec<_>>());
        let y: Vec<f64> = (0..n).map(|_| r.gen::<f64>()).collect();
        let params = TreeParams { max_depth: Some(depth), max_leaf_nodes: leaves, max_features: MaxFeatures::Sqrt, ..TreeParams::default() };
        let t = fit_tree(&x, &y, &all(n), &params, &mut rng_for(seed, 1)).unwrap();
        prop_assert!(t.depth() <= depth);
        if let Some(l) = leaves {
            prop_assert!(t.n_leaves() <= l);
        }
        let cover: f64 = t.leaves().map(|i| t.nodes[i].cover).sum();
        prop_assert_eq!(cover, n as f64);
    }

    #[test]
    fn forest_is_mean_of_trees(seed in 0u64..200, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let mut r = rng(seed);
        let rows: Vec<[f64; 2]> = (0..40).map(|_| [r.gen::<f64>() * 4.0 - 2.0, r.gen::<f64>() * 4.0 - 2.0]).collect();
        let y: Vec<f64> = rows.iter().map(|p| p[0] - p[1] * p[1]).collect();
        let model = fit_rfr(&Matrix::from_rows(&rows), &y, &all(40), &EnsembleConfig::rfr(7, seed)).unwrap();
        let mean = model.trees.iter().map(|t| t.predict(&[a, b])).sum::<f64>() / 7.0;
        prop_assert!((model.predict_row(&[a, b]) - mean).abs() < 1e-12);
    }

    #[test]
    fn p_value_matches_reference(seed in 0u64..10_000, n in 3usize..300) {
        let mut r = rng(seed);
        let x: Vec<f64> = (0..n).map(|_| r.gen::<f64>()).collect();
        let y: Vec<f64> = x.iter().map(|v| v * r.gen_range(-1.0..1.0) + r.gen::<f64>()).collect();
        let c = pearson(&x, &y);
        let df = (n - 2) as f64;
        let t = c.r * (df / (1.0 - c.r * c.r)).sqrt();
        let reference = 2.0 * StudentsT::new(0.0, 1.0, df).unwrap().cdf(-t.abs());
        prop_assert!((c.p_value - reference).abs() < 1e-8, "{} vs {}", c.p_value, reference);
    }
}

#[test]
fn boosting_loss_never_increases() {
    let mut r = rng(3);
    let rows: Vec<[f64; 3]> = (0..80).map(|_| [r.gen(), r.gen(), r.gen()]).collect();
    let y: Vec<f64> = rows.iter().map(|p| (p[0] * 6.0).sin() + p[1]).collect();
    let x = Matrix::from_rows(&rows);
    for lr in [0.1, 0.5, 1.0] {
        let model = fit_gbm(&x, &y, &all(80), &EnsembleConfig::gbm(40, lr, 9)).unwrap();
        let mut prev = f64::INFINITY;
        for stage in 0..=40 {
            let loss: f64 = rows.iter().zip(&y).map(|(p, t)| (model.predict_prefix(p, stage) - t).powi(2)).sum();
            assert!(loss <= prev + 1e-9, "lr {lr} stage {stage}: {loss} > {prev}");
            prev = loss;
        }
    }
}

fn line(seed: u64, n: usize) -> (Matrix, Vec<f64>) {
    let mut r = rng(seed);
    let xs: Vec<f64> = (0..n).map(|_| r.gen::<f64>() * 10.0).collect();
    (Matrix::from_columns(std::slice::from_ref(&xs)), xs)
}

#[test]
fn forest_learns_identity() {
    let (x, y) = line(1, 200);
    let rep = cross_validate(&x, &y, &names(1), &[EnsembleConfig::rfr(150, 4)], 4, 4, &Sequential).unwrap();
    assert!(rep.pearson_r > 0.9, "{}", rep.pearson_r);
    assert_eq!(rep.predictions.len(), 200);
    let mut covered = vec![0; 200];
    for f in &rep.fold_results {
        for &i in &f.rows {
            covered[i] += 1;
        }
    }
    assert!(covered.iter().all(|&c| c == 1));
}

#[test]
fn target_equal_to_predictor() {
    let (x, y) = line(2, 120);
    let rep = cross_validate(&x, &y, &names(1), &[EnsembleConfig::gbm(100, 0.3, 1)], 4, 0, &Sequential).unwrap();
    assert!(rep.pearson_r > 0.99 && rep.p_value < 1e-10 && rep.mae < 0.3, "{rep:?}");
}

#[test]
fn noise_is_rarely_significant() {
    let cfg = EnsembleConfig { max_depth: Some(3), ..EnsembleConfig::rfr(25, 0) };
    let mut significant = 0;
    for rep in 0..50u64 {
        let mut r = rng(1000 + rep);
        let x = Matrix::from_rows(&(0..100).map(|_| [r.gen::<f64>(), r.gen::<f64>()]).collect::<Vec<_>>());
        let y: Vec<f64> = (0..100).map(|_| r.gen::<f64>()).collect();
        let out = cross_validate(&x, &y, &names(2), &[cfg], 4, rep, &Sequential).unwrap();
        significant += usize::from(out.is_significant());
    }
    assert!(significant <= 5, "{significant} of 50 significant");
}

fn planted(seed: u64, n: usize, noise_cols: usize) -> (Matrix, Vec<f64>) {
    let mut r = rng(seed);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..2 + noise_cols).map(|_| r.gen::<f64>()).collect()).collect();
    let y = rows.iter().map(|x| 3.0 * x[0] + 2.0 * x[1] * x[1] + 0.1 * r.gen::<f64>()).collect();
    (Matrix::from_rows(&rows), y)
}

#[test]
fn permuted_targets_do_worse() {
    let (x, y) = planted(5, 120, 1);
    let cfg = [EnsembleConfig { max_depth: Some(4), ..EnsembleConfig::gbm(50, 0.2, 0) }];
    let base = cross_validate(&x, &y, &names(3), &cfg, 4, 8, &Sequential).unwrap();
    let runs = permutation_baseline(&x, &y, &names(3), &cfg, 4, 8, 10, &Sequential).unwrap();
    let mean_abs = runs.iter().map(|r| r.report.pearson_r.abs()).sum::<f64>() / 10.0;
    assert!(mean_abs < base.pearson_r);
    let identity = permute(&y, &permutation(y.len(), None));
    assert_eq!(cross_validate(&x, &identity, &names(3), &cfg, 4, 8, &Sequential).unwrap(), base);
}

#[test]
fn grid_search_prefers_significant_then_mae() {
    let (x, y) = planted(6, 80, 1);
    let grid = Grid {
        n_estimators: vec![5, 25],
        max_depth: vec![Some(2), None],
        max_features: vec![MaxFeatures::All],
        ..Grid::paper_rfr()
    }
    .configs(3);
    let rep = cross_validate(&x, &y, &names(3), &grid, 4, 1, &Sequential).unwrap();
    assert_eq!(rep.grid.len(), grid.len());
    let best = rep.grid.iter().filter(|g| g.p_value < 0.05).map(|g| g.pearson_r.abs()).fold(0.0, f64::max);
    assert_eq!(rep.pearson_r.abs(), best);
    // Fitting the selected config alone reproduces the same predictions.
    let alone = cross_validate(&x, &y, &names(3), &[rep.config], 4, 1, &Sequential).unwrap();
    assert_eq!(alone.predictions, rep.predictions);
}

#[test]
fn runs_are_deterministic() {
    let (x, y) = planted(7, 60, 2);
    let grid = [EnsembleConfig::rfr(10, 2), EnsembleConfig { subsample: 0.5, ..EnsembleConfig::gbm(10, 0.3, 2) }];
    let a = cross_validate(&x, &y, &names(4), &grid, 4, 3, &Sequential).unwrap();
    let b = cross_validate(&x, &y, &names(4), &grid, 4, 3, &Sequential).unwrap();
    assert_eq!(a, b);
    let m1 = fit(&x, &y, &all(60), &grid[1]).unwrap();
    let m2 = fit(&x, &y, &all(60), &grid[1]).unwrap();
    assert_eq!(m1, m2);
}

#[test]
fn table_two_p_value() {
    let p = correlation_p_value(0.37, 232);
    assert!(p < 0.01);
    assert!(p > 1e-9 && p < 1e-8, "{p}");
}

#[test]
fn elimination_drops_noise_and_keeps_signal() {
    let (x, y) = planted(21, 120, 1);
    let grid = [EnsembleConfig { max_depth: Some(4), ..EnsembleConfig::gbm(60, 0.2, 0) }];
    let settings = EliminationSettings { seed: 5, ..EliminationSettings::default() };
    let out = shap_feature_elimination(&x, &y, &names(3), &grid, &settings, &Sequential).unwrap();
    assert!(out.kept.contains(&0));
    assert!(!out.kept.contains(&2), "{:#?}", out.steps);
    assert_eq!(out.steps.len(), 3);
    for s in &out.steps {
        if s.decision == Decision::Kept {
            assert!(s.r_drop > settings.delta);
        }
    }
    let again = shap_feature_elimination(&x, &y, &names(3), &grid, &settings, &Sequential).unwrap();
    assert_eq!(out, again);
}

#[test]
fn elimination_keeps_the_target_itself() {
    let (x, y) = line(8, 60);
    let out =
        shap_feature_elimination(&x, &y, &names(1), &[EnsembleConfig::rfr(20, 0)], &EliminationSettings::default(), &Sequential)
            .unwrap();
    assert_eq!(out.kept, vec![0]);
    assert_eq!(out.steps[0].decision, Decision::LastFeature);
}
