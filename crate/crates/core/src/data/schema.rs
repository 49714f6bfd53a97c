//! Feature schema for crash records.
//!
//! A schema lists the features in column order plus the binary target. The
//! first declared level of every categorical feature (and the first bin of
//! every binned continuous feature) is the reference level: it receives no
//! indicator column when encoded.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub features: Vec<FeatureSpec>,
    pub target: TargetSpec,
}

/// Binary target column and its two-word vocabulary. `positive` encodes to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub name: String,
    #[serde(default = "default_positive")]
    pub positive: String,
    #[serde(default = "default_negative")]
    pub negative: String,
}

fn default_positive() -> String {
    "serious".into()
}

fn default_negative() -> String {
    "non-serious".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: FeatureKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureKind {
    Categorical {
        levels: Vec<String>,
        /// Relative level frequencies used by the synthetic generator.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        frequencies: Option<Vec<f64>>,
    },
    Continuous {
        min: f64,
        max: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bins: Option<Binning>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        distribution: Option<Distribution>,
    },
}

/// Right-closed bins: value `v` falls in bin `i` for the first `i` with
/// `v <= edges[i]`, otherwise in the last bin. `labels.len() == edges.len() + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    pub edges: Vec<f64>,
    pub labels: Vec<String>,
}

impl Binning {
    pub fn bin_of(&self, value: f64) -> usize {
        self.edges.iter().position(|&e| value <= e).unwrap_or(self.edges.len())
    }
}

/// Sampling law for a continuous feature in synthetic data (clamped to range).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Distribution {
    Uniform,
    Normal { mean: f64, sd: f64 },
}

impl FeatureSpec {
    pub fn categorical(name: &str, levels: &[&str], frequencies: &[f64]) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Categorical {
                levels: levels.iter().map(|s| s.to_string()).collect(),
                frequencies: (!frequencies.is_empty()).then(|| frequencies.to_vec()),
            },
        }
    }

    pub fn continuous(name: &str, min: f64, max: f64) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Continuous { min, max, bins: None, distribution: None },
        }
    }

    pub fn with_bins(mut self, edges: &[f64], labels: &[&str]) -> Self {
        if let FeatureKind::Continuous { bins, .. } = &mut self.kind {
            *bins = Some(Binning {
                edges: edges.to_vec(),
                labels: labels.iter().map(|s| s.to_string()).collect(),
            });
        }
        self
    }

    pub fn with_normal(mut self, mean: f64, sd: f64) -> Self {
        if let FeatureKind::Continuous { distribution, .. } = &mut self.kind {
            *distribution = Some(Distribution::Normal { mean, sd });
        }
        self
    }

    pub fn levels(&self) -> Option<&[String]> {
        match &self.kind {
            FeatureKind::Categorical { levels, .. } => Some(levels),
            FeatureKind::Continuous { .. } => None,
        }
    }

    /// Index of a categorical level, matching case-insensitively and ignoring
    /// punctuation, so `Dark-lighted` matches `Dark_Lighted`.
    pub fn level_index(&self, raw: &str) -> Option<usize> {
        let levels = self.levels()?;
        if let Some(i) = levels.iter().position(|l| l == raw) {
            return Some(i);
        }
        let key = normalize(raw);
        levels.iter().position(|l| normalize(l) == key)
    }

    fn validate(&self) -> Result<()> {
        match &self.kind {
            FeatureKind::Categorical { levels, frequencies } => {
                if levels.len() < 2 {
                    return Err(Error::Schema(format!("`{}` needs at least two levels", self.name)));
                }
                let mut seen = HashSet::new();
                for level in levels {
                    if level.is_empty() || !seen.insert(normalize(level)) {
                        return Err(Error::Schema(format!(
                            "`{}` has an empty or duplicate level `{level}`",
                            self.name
                        )));
                    }
                }
                if let Some(freq) = frequencies {
                    if freq.len() != levels.len()
                        || freq.iter().any(|f| !(f.is_finite() && *f >= 0.0))
                        || freq.iter().sum::<f64>() <= 0.0
                    {
                        return Err(Error::Schema(format!(
                            "`{}` frequencies must be one non-negative weight per level",
                            self.name
                        )));
                    }
                }
            }
            FeatureKind::Continuous { min, max, bins, distribution } => {
                if !(min.is_finite() && max.is_finite() && min < max) {
                    return Err(Error::Schema(format!("`{}` needs finite min < max", self.name)));
                }
                if let Some(b) = bins {
                    if b.edges.is_empty() || b.edges.windows(2).any(|w| !(w[0] < w[1])) {
                        return Err(Error::Schema(format!(
                            "`{}` bin edges must be non-empty and strictly increasing",
                            self.name
                        )));
                    }
                    if b.labels.len() != b.edges.len() + 1 {
                        return Err(Error::Schema(format!(
                            "`{}` needs {} bin labels, got {}",
                            self.name,
                            b.edges.len() + 1,
                            b.labels.len()
                        )));
                    }
                    let uniq: HashSet<_> = b.labels.iter().collect();
                    if uniq.len() != b.labels.len() {
                        return Err(Error::Schema(format!("`{}` bin labels repeat", self.name)));
                    }
                }
                if let Some(Distribution::Normal { sd, .. }) = distribution {
                    if !(*sd > 0.0) {
                        return Err(Error::Schema(format!("`{}` needs sd > 0", self.name)));
                    }
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn normalize(s: &str) -> String {
    s.chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase).collect()
}

impl FeatureSchema {
    pub fn new(features: Vec<FeatureSpec>, target: TargetSpec) -> Result<Self> {
        let schema = Self { features, target };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::Schema("schema declares no features".into()));
        }
        let mut names = HashSet::new();
        for f in &self.features {
            if !names.insert(f.name.as_str()) {
                return Err(Error::Schema(format!("duplicate feature `{}`", f.name)));
            }
            f.validate()?;
        }
        if names.contains(self.target.name.as_str()) {
            return Err(Error::Schema(format!(
                "target `{}` is also declared as a feature",
                self.target.name
            )));
        }
        if self.target.positive.trim().eq_ignore_ascii_case(self.target.negative.trim()) {
            return Err(Error::Schema("target vocabulary needs two distinct words".into()));
        }
        Ok(())
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let schema: Self = serde_json::from_reader(std::fs::File::open(path)?)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn feature(&self, name: &str) -> Option<(usize, &FeatureSpec)> {
        self.features.iter().enumerate().find(|(_, f)| f.name == name)
    }

    /// The eighteen crash features: driver, vehicle, road, crash, temporal,
    /// weather, area and traffic characteristics. Frequencies are plausible
    /// marginals for synthetic generation, not measured values.
    pub fn crash_severity() -> Self {
        let features = vec![
            FeatureSpec::categorical("gender", &["Male", "Female"], &[0.56, 0.44]),
            FeatureSpec::categorical("driver_sobriety_condition", &["Not_Sober", "Sober"], &[0.08, 0.92]),
            FeatureSpec::continuous("driver_age", 16.0, 90.0)
                .with_bins(&[25.0, 40.0, 50.0, 60.0], &["upto_25", "26_40", "41_50", "51_60", "more_60"])
                .with_normal(41.0, 16.0),
            FeatureSpec::categorical("aggressive_driving", &["No", "Yes"], &[0.86, 0.14]),
            FeatureSpec::categorical("vehicle_type", &["Car", "SUV", "Heavy_Vehicle"], &[0.56, 0.32, 0.12]),
            FeatureSpec::continuous("estimated_speed", 0.0, 100.0).with_normal(35.0, 15.0),
            FeatureSpec::categorical(
                "vehicle_maneuver",
                &["Straight", "Stopped", "Lane_Changing", "Slowing", "Turning", "Other"],
                &[0.45, 0.14, 0.08, 0.10, 0.16, 0.07],
            ),
            FeatureSpec::categorical("road_surface_condition", &["Dry", "Wet"], &[0.85, 0.15]),
            FeatureSpec::categorical("road_alignment", &["Straight", "Curve"], &[0.92, 0.08]),
            FeatureSpec::categorical("crash_type", &["Other", "Rear_End", "Sideswipe"], &[0.45, 0.35, 0.20]),
            FeatureSpec::categorical("crash_location", &["Not_Intersection", "Intersection"], &[0.55, 0.45]),
            FeatureSpec::categorical("season", &["Winter", "Summer", "Spring", "Fall"], &[0.25, 0.25, 0.25, 0.25]),
            FeatureSpec::categorical("day_of_week", &["Weekday", "Weekend"], &[0.74, 0.26]),
            FeatureSpec::categorical(
                "time_of_day",
                &["Morning_Peak", "Morning_Off_Peak", "Day_Off_Peak", "Afternoon_Peak", "Night_Off_Peak"],
                &[0.15, 0.14, 0.30, 0.21, 0.20],
            ),
            FeatureSpec::categorical("weather_condition", &["Cloudy", "Clear", "Rain"], &[0.20, 0.70, 0.10]),
            FeatureSpec::categorical("area_type", &["Urban", "Rural"], &[0.70, 0.30]),
            FeatureSpec::categorical("traffic_control", &["Controlled", "Uncontrolled"], &[0.94, 0.06]),
            FeatureSpec::categorical(
                "light_condition",
                &["Daylight", "Dark_Lighted", "Dark_Not_Lighted"],
                &[0.75, 0.06, 0.19],
            ),
        ];
        Self::new(features, TargetSpec {
            name: "injury_severity".into(),
            positive: default_positive(),
            negative: default_negative(),
        })
        .expect("built-in schema is valid")
    }

    /// [`crash_severity`](Self::crash_severity) plus vehicle age in years,
    /// binned at ten years.
    pub fn crash_severity_with_vehicle_year() -> Self {
        let mut schema = Self::crash_severity();
        schema.features.push(
            FeatureSpec::continuous("vehicle_year", 0.0, 30.0)
                .with_bins(&[10.0], &["upto_10", "more_10"])
                .with_normal(9.0, 5.5),
        );
        schema.validate().expect("built-in schema is valid");
        schema
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_schemas_are_valid() {
        assert_eq!(FeatureSchema::crash_severity().features.len(), 18);
        assert_eq!(FeatureSchema::crash_severity_with_vehicle_year().features.len(), 19);
    }

    #[test]
    fn rejects_duplicates_and_bad_bins() {
        let target = TargetSpec { name: "y".into(), positive: "serious".into(), negative: "non-serious".into() };
        let dup = vec![FeatureSpec::continuous("a", 0.0, 1.0), FeatureSpec::continuous("a", 0.0, 1.0)];
        assert!(FeatureSchema::new(dup, target.clone()).is_err());

        let one_level = vec![FeatureSpec::categorical("a", &["x"], &[])];
        assert!(FeatureSchema::new(one_level, target.clone()).is_err());

        let bad_edges = vec![FeatureSpec::continuous("a", 0.0, 1.0).with_bins(&[0.5, 0.5], &["l", "m", "h"])];
        assert!(FeatureSchema::new(bad_edges, target).is_err());
    }

    #[test]
    fn bins_are_right_closed() {
        let b = Binning { edges: vec![25.0, 40.0, 50.0, 60.0], labels: vec![] };
        assert_eq!(b.bin_of(25.0), 0);
        assert_eq!(b.bin_of(26.0), 1);
        assert_eq!(b.bin_of(45.0), 2);
        assert_eq!(b.bin_of(60.0), 3);
        assert_eq!(b.bin_of(61.0), 4);
    }

    #[test]
    fn level_lookup_ignores_punctuation() {
        let schema = FeatureSchema::crash_severity();
        let (_, light) = schema.feature("light_condition").unwrap();
        assert_eq!(light.level_index("Dark-lighted"), Some(1));
        assert_eq!(light.level_index("Dark-not lighted"), Some(2));
        assert_eq!(light.level_index("Fog"), None);
    }

    #[test]
    fn schema_json_round_trips() {
        let schema = FeatureSchema::crash_severity_with_vehicle_year();
        let text = serde_json::to_string(&schema).unwrap();
        let back: FeatureSchema = serde_json::from_str(&text).unwrap();
        assert_eq!(schema, back);
    }
}
