//! Shared fixtures for the benchmarks.

use severity_core::data::{stratified_split, synth_generate, published_effects, Encoder};
use severity_core::resample::{smote, SmoteConfig};
use severity_core::{DesignMatrix, FeatureSchema};

/// Encoded training split of a synthetic crash data set.
pub fn crash_train(rows: usize, seed: u64) -> DesignMatrix {
    let schema = FeatureSchema::crash_severity_with_vehicle_year();
    let ds = synth_generate(&schema, rows, 0.12, &published_effects(), seed).expect("synthetic data");
    let split = stratified_split(&ds, 0.2, seed).expect("split");
    Encoder::fit(&split.train).and_then(|e| e.transform(&split.train)).expect("encoding")
}

/// [`crash_train`] oversampled to balance.
pub fn balanced_train(rows: usize, seed: u64) -> DesignMatrix {
    smote(&crash_train(rows, seed), &SmoteConfig::default()).expect("smote")
}
