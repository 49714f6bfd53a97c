//! Synthetic crash records with planted log-odds effects.

use indexmap::IndexMap;
use rand::distributions::{Distribution as _, WeightedIndex};
use rand::Rng;
use rand_distr::Normal;

use crate::data::dataset::{Dataset, Value};
use crate::data::schema::{Distribution, FeatureKind, FeatureSchema};
use crate::error::{Error, Result};
use crate::rng::child_rng;

/// Realized positive share must land this close to the requested rate.
pub const RATE_TOLERANCE: f64 = 0.02;
const BISECTION_STEPS: usize = 100;

/// Log-odds shifts keyed by `"feature=level"` (categorical level or bin
/// label) or by a bare continuous feature name, in which case the shift is a
/// slope per unit of the feature rescaled to `[-1, 1]` over its range.
pub type EffectTable = IndexMap<String, f64>;

#[derive(Debug, Clone)]
enum Effect {
    Level { feature: usize, level: usize, shift: f64 },
    Bin { feature: usize, bin: usize, shift: f64 },
    Slope { feature: usize, center: f64, half_range: f64, shift: f64 },
}

fn resolve(schema: &FeatureSchema, effects: &EffectTable) -> Result<Vec<Effect>> {
    effects
        .iter()
        .map(|(key, &shift)| {
            if !shift.is_finite() {
                return Err(Error::Config(format!("effect `{key}` is not finite")));
            }
            let (name, level) = match key.split_once('=') {
                Some((f, l)) => (f, Some(l)),
                None => (key.as_str(), None),
            };
            let (f, spec) = schema
                .feature(name)
                .ok_or_else(|| Error::Config(format!("effect `{key}` names an unknown feature")))?;
            match (&spec.kind, level) {
                (FeatureKind::Categorical { .. }, Some(l)) => spec
                    .level_index(l)
                    .map(|level| Effect::Level { feature: f, level, shift })
                    .ok_or_else(|| Error::Config(format!("effect `{key}` names an unknown level"))),
                (FeatureKind::Continuous { bins: Some(b), .. }, Some(l)) => b
                    .labels
                    .iter()
                    .position(|x| x == l)
                    .map(|bin| Effect::Bin { feature: f, bin, shift })
                    .ok_or_else(|| Error::Config(format!("effect `{key}` names an unknown bin"))),
                (FeatureKind::Continuous { min, max, .. }, None) => Ok(Effect::Slope {
                    feature: f,
                    center: 0.5 * (min + max),
                    half_range: 0.5 * (max - min),
                    shift,
                }),
                _ => Err(Error::Config(format!("effect `{key}` does not fit the feature kind"))),
            }
        })
        .collect()
}

fn draw_row(schema: &FeatureSchema, rng: &mut impl Rng) -> Vec<Value> {
    schema
        .features
        .iter()
        .map(|f| match &f.kind {
            FeatureKind::Categorical { levels, frequencies } => {
                let idx = match frequencies {
                    Some(w) => WeightedIndex::new(w).expect("validated weights").sample(rng),
                    None => rng.gen_range(0..levels.len()),
                };
                Value::Level(idx)
            }
            FeatureKind::Continuous { min, max, distribution, .. } => {
                let x = match distribution {
                    Some(Distribution::Normal { mean, sd }) => {
                        Normal::new(*mean, *sd).expect("validated sd").sample(rng).clamp(*min, *max)
                    }
                    _ => rng.gen_range(*min..=*max),
                };
                // one decimal keeps CSV dumps readable and round-trippable
                Value::Number(((x * 10.0).round() / 10.0).clamp(*min, *max))
            }
        })
        .collect()
}

fn linear_predictor(schema: &FeatureSchema, effects: &[Effect], row: &[Value]) -> f64 {
    effects
        .iter()
        .map(|e| match *e {
            Effect::Level { feature, level, shift } => {
                if row[feature] == Value::Level(level) {
                    shift
                } else {
                    0.0
                }
            }
            Effect::Bin { feature, bin, shift } => match (&schema.features[feature].kind, row[feature]) {
                (FeatureKind::Continuous { bins: Some(b), .. }, Value::Number(x)) if b.bin_of(x) == bin => shift,
                _ => 0.0,
            },
            Effect::Slope { feature, center, half_range, shift } => match row[feature] {
                Value::Number(x) => shift * (x - center) / half_range,
                Value::Level(_) => 0.0,
            },
        })
        .sum()
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Generates `n` labeled records. Features are drawn independently from the
/// schema's declared frequencies; each label is Bernoulli of
/// `sigmoid(intercept + Σ effects)`, with the intercept found by bisection
/// so the realized positive share is within [`RATE_TOLERANCE`] of
/// `positive_rate`.
pub fn synth_generate(
    schema: &FeatureSchema,
    n: usize,
    positive_rate: f64,
    effects: &EffectTable,
    seed: u64,
) -> Result<Dataset> {
    if !(positive_rate > 0.0 && positive_rate < 1.0) {
        return Err(Error::Config(format!("positive rate {positive_rate} outside (0, 1)")));
    }
    if n == 0 {
        return Err(Error::Config("synthetic dataset needs n >= 1".into()));
    }
    let effects = resolve(schema, effects)?;
    let rows: Vec<Vec<Value>> = (0..n).map(|i| draw_row(schema, &mut child_rng(seed, &[0, i as u64]))).collect();
    let eta: Vec<f64> = rows.iter().map(|r| linear_predictor(schema, &effects, r)).collect();
    let mut label_rng = child_rng(seed, &[1]);
    let uniforms: Vec<f64> = (0..n).map(|_| label_rng.gen()).collect();

    let share = |b: f64| -> f64 {
        eta.iter().zip(&uniforms).filter(|(e, u)| **u < sigmoid(b + **e)).count() as f64 / n as f64
    };
    let (mut lo, mut hi) = (-50.0_f64, 50.0_f64);
    let mut best = (f64::INFINITY, 0.0);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let s = share(mid);
        let gap = (s - positive_rate).abs();
        if gap < best.0 {
            best = (gap, mid);
        }
        if s < positive_rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if best.0 > RATE_TOLERANCE {
        return Err(Error::Config(format!(
            "positive rate {positive_rate} unreachable with these effects (closest share off by {:.4})",
            best.0
        )));
    }
    let intercept = best.1;
    let labels = eta.iter().zip(&uniforms).map(|(e, u)| u8::from(*u < sigmoid(intercept + e))).collect();
    Dataset::new(schema.clone(), rows, labels)
}

/// Planted effects shaped like the published selection table: the twelve
/// significant indicators with their fitted log-odds.
pub fn published_effects() -> EffectTable {
    [
        ("driver_age=41_50", 0.416514),
        ("driver_sobriety_condition=Sober", -1.61658),
        ("driver_age=more_60", 0.56148),
        ("vehicle_type=Heavy_Vehicle", 0.68137),
        ("vehicle_type=SUV", 0.458464),
        ("vehicle_year=more_10", 0.441557),
        ("crash_type=Rear_End", -0.31719),
        ("crash_type=Sideswipe", -0.41792),
        ("traffic_control=Uncontrolled", 0.971158),
        ("light_condition=Dark_Lighted", -0.63837),
        ("weather_condition=Clear", -0.49714),
        ("area_type=Rural", -0.34533),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}
