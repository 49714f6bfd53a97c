mod common;

use common::oracles::newton_logit;
use common::random_matrix;
use rand::Rng;
use severity_core::rng::rng_from;
use severity_core::select::{fit_logit_wald, log_likelihood, log_likelihood_gradient, select_significant, LogitOptions};
use severity_core::DesignMatrix;

#[test]
fn irls_matches_newton_oracle() {
    for seed in 0..20 {
        let x = random_matrix(seed, 120 + 10 * seed as usize, 1 + seed as usize % 5);
        let fit = fit_logit_wald(&x, &LogitOptions::default()).unwrap();
        let oracle = newton_logit(&x);
        assert!((fit.intercept - oracle[0]).abs() < 1e-6);
        for (c, o) in fit.coefficients.iter().zip(&oracle[1..]) {
            assert!((c - o).abs() < 1e-6, "seed {seed}: {c} vs {o}");
        }
    }
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = rng_from(77);
    for seed in 0..10 {
        let x = random_matrix(seed, 80, 4);
        let beta: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g = log_likelihood_gradient(&x, &beta);
        for j in 0..5 {
            let h = 1e-5;
            let (mut up, mut dn) = (beta.clone(), beta.clone());
            up[j] += h;
            dn[j] -= h;
            let fd = (log_likelihood(&x, &up) - log_likelihood(&x, &dn)) / (2.0 * h);
            assert!((fd - g[j]).abs() <= 1e-5 * g[j].abs().max(1.0), "{fd} vs {}", g[j]);
        }
    }
}

#[test]
fn pure_noise_columns_have_uniform_p_values() {
    // Under the null, about alpha of the noise columns are rejected.
    let mut rejected = 0;
    let mut total = 0;
    for seed in 0..40 {
        let mut rng = rng_from(1000 + seed);
        let rows: Vec<Vec<f64>> = (0..400).map(|_| (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let labels: Vec<u8> = (0..400).map(|_| u8::from(rng.gen::<f64>() < 0.3)).collect();
        let x = DesignMatrix::from_rows((0..5).map(|j| format!("n{j}")).collect(), &rows, labels).unwrap();
        let fit = fit_logit_wald(&x, &LogitOptions::default()).unwrap();
        let report = select_significant(&fit, 0.10).unwrap();
        rejected += report.kept.len();
        total += 5;
    }
    let share = rejected as f64 / total as f64;
    assert!((0.04..=0.17).contains(&share), "noise rejection share {share}");
}

#[test]
fn planted_effect_is_detected() {
    let mut hits = 0;
    for seed in 0..20 {
        let mut rng = rng_from(2000 + seed);
        let rows: Vec<Vec<f64>> = (0..500).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let labels: Vec<u8> = rows.iter().map(|r| u8::from(rng.gen::<f64>() < 1.0 / (1.0 + (-(1.5 * r[0] - 1.0)).exp()))).collect();
        let x = DesignMatrix::from_rows(vec!["signal".into(), "a".into(), "b".into()], &rows, labels).unwrap();
        let fit = fit_logit_wald(&x, &LogitOptions::default()).unwrap();
        hits += usize::from(select_significant(&fit, 0.05).unwrap().kept.contains(&"signal".to_string()));
    }
    assert!(hits >= 19, "signal kept in {hits}/20");
}
