mod common;

use common::{random_discrete, random_matrix};
use indexmap::IndexMap;
use rand::Rng;
use severity_core::models::{ModelKind, ParamValue};
use severity_core::resample::SmoteConfig;
use severity_core::rng::rng_from;
use severity_core::tuning::{grid_search, stratified_kfold, Grid, Scoring, TuneResult};
use severity_core::DesignMatrix;

fn grid(kind: ModelKind, pairs: &[(&str, Vec<ParamValue>)]) -> Grid {
    let params: IndexMap<String, Vec<ParamValue>> = pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
    Grid::new(kind, params).unwrap()
}

fn xor(seed: u64, n: usize) -> DesignMatrix {
    let mut rng = rng_from(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..n {
        let (a, b) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
        let noise: f64 = rng.gen_range(0.0..1.0);
        rows.push(vec![a, b, noise]);
        labels.push(u8::from((a > 0.5) != (b > 0.5)));
    }
    DesignMatrix::from_rows(vec!["a".into(), "b".into(), "noise".into()], &rows, labels).unwrap()
}

#[test]
fn fold_properties_hold_for_many_seeds() {
    for seed in 0..50 {
        let mut rng = rng_from(seed);
        let n = rng.gen_range(20..200);
        let labels: Vec<u8> = (0..n).map(|i| u8::from(i % 7 == 0 || rng.gen::<f64>() < 0.1)).collect();
        let k = rng.gen_range(2..=5);
        let folds = stratified_kfold(&labels, k, seed).unwrap();
        let pos = labels.iter().filter(|&&l| l == 1).count();
        let sizes: Vec<usize> = (0..k).map(|f| folds.iter().filter(|&&x| x == f).count()).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        for f in 0..k {
            let fp = (0..n).filter(|&i| folds[i] == f && labels[i] == 1).count() as f64;
            assert!((fp - pos as f64 / k as f64).abs() <= 1.0);
        }
    }
}

#[test]
fn singleton_grid_returns_its_point() {
    let x = random_discrete(1, 150, 4);
    let g = grid(ModelKind::Tree, &[("max_depth", vec![4i64.into()])]);
    let r = grid_search(&g, &x, 5, Scoring::Auc, None, 0).unwrap();
    assert_eq!(r.best_params, g.combinations()[0]);
    assert_eq!(r.cv_table.len(), 1);
    assert_eq!(r.cv_table[0].fold_scores.len(), 5);
}

#[test]
fn deeper_tree_wins_on_xor() {
    let x = xor(3, 400);
    let g = grid(ModelKind::Tree, &[("max_depth", vec![1i64.into(), 3i64.into()])]);
    let r = grid_search(&g, &x, 5, Scoring::Accuracy, None, 0).unwrap();
    assert_eq!(r.best_params["max_depth"], ParamValue::Int(3));
    assert!(r.cv_table[1].mean_score > r.cv_table[0].mean_score + 0.2);
}

#[test]
fn identical_cells_resolve_to_the_first() {
    let x = random_discrete(2, 150, 4);
    let g = grid(ModelKind::Tree, &[("max_depth", vec![3i64.into(), 3i64.into()])]);
    let r = grid_search(&g, &x, 3, Scoring::Auc, None, 0).unwrap();
    assert_eq!(r.cv_table[0].fold_scores, r.cv_table[1].fold_scores);
    assert_eq!(r.best_params, r.cv_table[0].params);
    assert_eq!(r.best_score, r.cv_table[0].mean_score);
}

#[test]
fn failed_cells_score_negative_infinity_without_aborting() {
    let x = random_matrix(4, 200, 4);
    let g = grid(ModelKind::Logistic, &[("C", vec![100.0.into()]), ("max_iter", vec![1i64.into(), 100i64.into()])]);
    let r = grid_search(&g, &x, 3, Scoring::Auc, None, 0).unwrap();
    assert_eq!(r.cv_table[0].mean_score, f64::NEG_INFINITY);
    assert!(r.cv_table[0].error.is_some());
    assert_eq!(r.best_params, r.cv_table[1].params);

    let all_bad = grid(ModelKind::Logistic, &[("C", vec![100.0.into()]), ("max_iter", vec![1i64.into()])]);
    assert!(grid_search(&all_bad, &x, 3, Scoring::Auc, None, 0).is_err());
}

#[test]
fn validation_rows_never_train_or_oversample() {
    let x = random_discrete(6, 300, 5);
    let x = x.with_labels(x.labels().iter().enumerate().map(|(i, &l)| if i % 5 == 0 { l } else { 0 }).collect()).unwrap();
    let g = grid(ModelKind::Tree, &[("max_depth", vec![2i64.into(), 4i64.into()])]);
    let smote = SmoteConfig::default();
    let r = grid_search(&g, &x, 5, Scoring::Recall, Some(&smote), 9).unwrap();
    assert_eq!(r.audit.len(), 5);
    let mut covered = vec![0; x.n_rows()];
    for a in &r.audit {
        assert!(a.is_clean());
        assert!(a.synthetic_rows > 0);
        assert_eq!(a.training_rows.len() + a.validation_rows.len(), x.n_rows());
        for &i in &a.validation_rows {
            covered[i] += 1;
        }
    }
    assert!(covered.iter().all(|&c| c == 1));
}

#[test]
fn reruns_are_bit_identical_and_json_round_trips() {
    let x = random_discrete(8, 200, 4);
    let g = grid(ModelKind::Gbt, &[("n_estimators", vec![3i64.into(), 6i64.into()]), ("max_depth", vec![2i64.into()])]);
    let smote = SmoteConfig::default();
    let a = grid_search(&g, &x, 4, Scoring::Auc, Some(&smote), 5).unwrap();
    let b = grid_search(&g, &x, 4, Scoring::Auc, Some(&smote), 5).unwrap();
    assert_eq!(a, b);
    let json = serde_json::to_string(&a).unwrap();
    let back: TuneResult = serde_json::from_str(&json).unwrap();
    assert_eq!(back.cv_table, a.cv_table);
    assert_eq!(back.best_params, a.best_params);
}
