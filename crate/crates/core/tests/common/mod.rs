#![allow(dead_code)]

pub mod oracles;

use rand::Rng;
use severity_core::data::{encode, stratified_split, synth_generate, published_effects, Encoder, FeatureSchema};
use severity_core::rng::rng_from;
use severity_core::DesignMatrix;

/// Gaussian-ish features with labels from a noisy linear rule.
pub fn random_matrix(seed: u64, n: usize, p: usize) -> DesignMatrix {
    let mut rng = rng_from(seed);
    let w: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.5..1.5)).collect();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let r: Vec<f64> = (0..p).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let eta: f64 = r.iter().zip(&w).map(|(a, b)| a * b).sum();
        labels.push(u8::from(rng.gen::<f64>() < 1.0 / (1.0 + (-eta).exp())));
        rows.push(r);
    }
    if labels.iter().all(|&l| l == labels[0]) {
        labels[0] = 1 - labels[0];
    }
    DesignMatrix::from_rows((0..p).map(|j| format!("x{j}")).collect(), &rows, labels).unwrap()
}

/// Random matrix with a few discrete-valued columns (ties in splits).
pub fn random_discrete(seed: u64, n: usize, p: usize) -> DesignMatrix {
    let mut rng = rng_from(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let r: Vec<f64> = (0..p).map(|j| if j % 2 == 0 { rng.gen_range(0..2) as f64 } else { rng.gen_range(0..5) as f64 }).collect();
        let eta = r.iter().enumerate().map(|(j, &v)| if j % 3 == 0 { v } else { -0.5 * v }).sum::<f64>() - 0.5;
        labels.push(u8::from(rng.gen::<f64>() < 1.0 / (1.0 + (-eta).exp())));
        rows.push(r);
    }
    if labels.iter().all(|&l| l == labels[0]) {
        labels[0] = 1 - labels[0];
    }
    DesignMatrix::from_rows((0..p).map(|j| format!("x{j}")).collect(), &rows, labels).unwrap()
}

/// Encoded train/test matrices from synthetic crash records shaped like the
/// published data: 88/12 class split with the selection-table effects.
pub fn crash_split(seed: u64, n: usize) -> (DesignMatrix, DesignMatrix) {
    let schema = FeatureSchema::crash_severity_with_vehicle_year();
    let ds = synth_generate(&schema, n, 0.12, &published_effects(), seed).unwrap();
    let split = stratified_split(&ds, 0.2, seed).unwrap();
    let enc = Encoder::fit(&split.train).unwrap();
    (enc.transform(&split.train).unwrap(), enc.transform(&split.test).unwrap())
}

pub fn encoded(seed: u64, n: usize) -> DesignMatrix {
    let schema = FeatureSchema::crash_severity_with_vehicle_year();
    encode(&synth_generate(&schema, n, 0.12, &published_effects(), seed).unwrap()).unwrap()
}

/// The published selection table: name, coefficient, standard error, z, p.
pub const PUBLISHED_SELECTION: [(&str, f64, f64, f64, f64); 12] = [
    ("driver_age_41_50", 0.416514, 0.193003, 2.158072, 0.030922),
    ("driver_sobriety_condition_Sober", -1.61658, 0.213813, -7.56071, 4.01e-14),
    ("driver_age_more_60", 0.56148, 0.199769, 2.81065, 0.004944),
    ("vehicle_type_Heavy_Vehicle", 0.68137, 0.258692, 2.633901, 0.008441),
    ("vehicle_type_SUV", 0.458464, 0.198978, 2.304097, 0.021217),
    ("vehicle_year_more_10", 0.441557, 0.144986, 3.045511, 0.002323),
    ("crash_type_Rear_End", -0.31719, 0.13907, -2.28077, 0.022562),
    ("crash_type_Sideswipe", -0.41792, 0.164028, -2.54786, 0.010839),
    ("traffic_control_Uncontrolled", 0.971158, 0.369798, 2.626186, 0.008635),
    ("light_condition_Dark_Lighted", -0.63837, 0.369417, -1.72805, 0.083979),
    ("weather_condition_Clear", -0.49714, 0.168453, -2.95122, 0.003165),
    ("area_type_Rural", -0.34533, 0.123733, -2.79093, 0.005256),
];

pub fn published_selection_fit() -> severity_core::select::LogitFit {
    let rows = &PUBLISHED_SELECTION;
    severity_core::select::LogitFit {
        column_names: rows.iter().map(|r| r.0.to_string()).collect(),
        coefficients: rows.iter().map(|r| r.1).collect(),
        standard_errors: rows.iter().map(|r| r.2).collect(),
        z_scores: rows.iter().map(|r| r.3).collect(),
        p_values: rows.iter().map(|r| r.4).collect(),
        ci95_low: vec![],
        ci95_high: vec![],
        ci90_low: vec![],
        ci90_high: vec![],
        intercept: 0.0,
        intercept_se: 0.0,
        log_likelihood: 0.0,
        gradient_norm: 0.0,
        converged: true,
        iterations: 0,
    }
}
