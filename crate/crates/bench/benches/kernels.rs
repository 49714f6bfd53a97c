use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use severity_bench::{balanced_train, crash_train};
use severity_core::explain::{background_sample, shap_tree};
use severity_core::metrics::{auc, roc_curve};
use severity_core::models::{fit_model, predict_proba, ModelKind};
use severity_core::resample::{smote, SmoteConfig};
use severity_core::select::{fit_logit_wald, LogitOptions};

fn bench_fit(c: &mut Criterion) {
    let x = balanced_train(2000, 1);
    let mut g = c.benchmark_group("fit");
    g.sample_size(10);
    for kind in ModelKind::ALL {
        let params = kind.published_params();
        g.bench_with_input(BenchmarkId::from_parameter(kind), &x, |b, x| {
            b.iter(|| fit_model(kind, &params, black_box(x), 0).unwrap())
        });
    }
    g.finish();
}

fn bench_preprocessing(c: &mut Criterion) {
    let x = crash_train(4520, 2);
    c.bench_function("smote_4520", |b| b.iter(|| smote(black_box(&x), &SmoteConfig::default()).unwrap()));
    c.bench_function("logit_wald_4520", |b| b.iter(|| fit_logit_wald(black_box(&x), &LogitOptions::default()).unwrap()));
}

fn bench_roc(c: &mut Criterion) {
    let x = balanced_train(4520, 3);
    let m = fit_model(ModelKind::Adaboost, &ModelKind::Adaboost.published_params(), &x, 0).unwrap();
    let scores = predict_proba(&m, &x).unwrap();
    c.bench_function("roc_auc", |b| b.iter(|| auc(&roc_curve(x.labels(), black_box(&scores)).unwrap())));
}

fn bench_shap(c: &mut Criterion) {
    let x = balanced_train(2000, 4);
    let bg = background_sample(&x, 100, 0).unwrap();
    let mut g = c.benchmark_group("tree_shap_row");
    g.sample_size(10);
    for kind in [ModelKind::Tree, ModelKind::Forest, ModelKind::Adaboost, ModelKind::Gbt] {
        let m = fit_model(kind, &kind.published_params(), &x, 0).unwrap();
        g.bench_function(kind.as_str(), |b| b.iter(|| shap_tree(&m, black_box(x.row(0)), &bg).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, bench_fit, bench_preprocessing, bench_roc, bench_shap);
criterion_main!(benches);
