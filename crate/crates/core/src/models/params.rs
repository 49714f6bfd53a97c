//! Hyperparameter maps and their typed, validated forms per model kind.

use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::tree::Criterion;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Bool(b) => write!(f, "{}", if *b { "True" } else { "False" }),
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Float(x) => write!(f, "{x:?}"),
            ParamValue::Text(s) => write!(f, "'{s}'"),
        }
    }
}

impl From<f64> for ParamValue {
    fn from(v: f64) -> Self {
        ParamValue::Float(v)
    }
}

impl From<i64> for ParamValue {
    fn from(v: i64) -> Self {
        ParamValue::Int(v)
    }
}

impl From<&str> for ParamValue {
    fn from(v: &str) -> Self {
        ParamValue::Text(v.to_string())
    }
}

impl From<bool> for ParamValue {
    fn from(v: bool) -> Self {
        ParamValue::Bool(v)
    }
}

/// Ordered name → value map, e.g. `{'criterion': 'entropy', 'max_depth': 23}`.
pub type Hyperparams = IndexMap<String, ParamValue>;

/// Renders a map in the `{'key': value, ...}` style.
pub fn format_params(params: &Hyperparams) -> String {
    let body: Vec<String> = params.iter().map(|(k, v)| format!("'{k}': {v}")).collect();
    format!("{{{}}}", body.join(", "))
}

/// Builds a map from `(key, value)` pairs.
pub fn hyperparams<I, K, V>(pairs: I) -> Hyperparams
where
    I: IntoIterator<Item = (K, V)>,
    K: Into<String>,
    V: Into<ParamValue>,
{
    pairs.into_iter().map(|(k, v)| (k.into(), v.into())).collect()
}

fn invalid(key: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParam { key: key.to_string(), reason: reason.into() }
}

struct Reader<'a> {
    params: &'a Hyperparams,
    allowed: &'static [&'static str],
}

impl<'a> Reader<'a> {
    fn new(params: &'a Hyperparams, allowed: &'static [&'static str]) -> Result<Self> {
        if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(invalid(k, format!("not recognized; expected one of {allowed:?}")));
        }
        Ok(Self { params, allowed })
    }

    fn get(&self, key: &str) -> Option<&ParamValue> {
        debug_assert!(self.allowed.contains(&key));
        self.params.get(key)
    }

    fn float(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(ParamValue::Float(x)) => Ok(*x),
            Some(ParamValue::Int(i)) => Ok(*i as f64),
            Some(v) => Err(invalid(key, format!("expected a number, got {v}"))),
        }
    }

    fn positive(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.float(key, default)?;
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(invalid(key, format!("must be > 0, got {v}")))
        }
    }

    fn count(&self, key: &str, default: Option<usize>) -> Result<Option<usize>> {
        match self.get(key) {
            None => Ok(default),
            Some(ParamValue::Int(i)) if *i >= 1 => Ok(Some(*i as usize)),
            Some(ParamValue::Float(x)) if x.fract() == 0.0 && *x >= 1.0 => Ok(Some(*x as usize)),
            Some(v) => Err(invalid(key, format!("must be an integer >= 1, got {v}"))),
        }
    }

    fn text(&self, key: &str, default: &'static str) -> Result<String> {
        match self.get(key) {
            None => Ok(default.to_string()),
            Some(ParamValue::Text(s)) => Ok(s.clone()),
            Some(v) => Err(invalid(key, format!("expected text, got {v}"))),
        }
    }

    fn boolean(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some(ParamValue::Bool(b)) => Ok(*b),
            Some(v) => Err(invalid(key, format!("expected true/false, got {v}"))),
        }
    }

    fn criterion(&self, default: &'static str) -> Result<Criterion> {
        match self.text("criterion", default)?.as_str() {
            "gini" => Ok(Criterion::Gini),
            "entropy" => Ok(Criterion::Entropy),
            other => Err(invalid("criterion", format!("unknown criterion '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticParams {
    /// Inverse regularization strength.
    pub c: f64,
    pub max_iter: usize,
}

impl LogisticParams {
    pub fn from_map(params: &Hyperparams) -> Result<Self> {
        let r = Reader::new(params, &["C", "penalty", "solver", "max_iter"])?;
        let c = r.positive("C", 1.0)?;
        let penalty = r.text("penalty", "l2")?;
        if penalty != "l2" {
            return Err(invalid("penalty", format!("only 'l2' is supported, got '{penalty}'")));
        }
        let solver = r.text("solver", "newton-cg")?;
        if !matches!(solver.as_str(), "newton-cg" | "newton" | "newton-cholesky") {
            return Err(invalid("solver", format!("only Newton-type solvers are supported, got '{solver}'")));
        }
        Ok(Self { c, max_iter: r.count("max_iter", Some(100))?.unwrap_or(100) })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeParams {
    pub criterion: Criterion,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
}

impl TreeParams {
    pub fn from_map(params: &Hyperparams) -> Result<Self> {
        let r = Reader::new(params, &["criterion", "max_depth", "min_samples_leaf"])?;
        Ok(Self {
            criterion: r.criterion("gini")?,
            max_depth: r.count("max_depth", None)?,
            min_samples_leaf: r.count("min_samples_leaf", Some(1))?.unwrap_or(1),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaxFeatures {
    Sqrt,
    Log2,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, p: usize) -> usize {
        let k = match self {
            MaxFeatures::Sqrt => (p as f64).sqrt().floor() as usize,
            MaxFeatures::Log2 => (p as f64).log2().floor() as usize,
            MaxFeatures::All => p,
            MaxFeatures::Count(k) => k,
        };
        k.clamp(1, p.max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestParams {
    pub criterion: Criterion,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub n_estimators: usize,
    pub bootstrap: bool,
}

impl ForestParams {
    pub fn from_map(params: &Hyperparams) -> Result<Self> {
        let r = Reader::new(
            params,
            &["criterion", "max_depth", "max_features", "n_estimators", "min_samples_leaf", "bootstrap"],
        )?;
        let max_features = match r.get("max_features") {
            None => MaxFeatures::Sqrt,
            Some(ParamValue::Text(s)) => match s.as_str() {
                "sqrt" | "auto" => MaxFeatures::Sqrt,
                "log2" => MaxFeatures::Log2,
                "all" | "none" => MaxFeatures::All,
                other => return Err(invalid("max_features", format!("unknown rule '{other}'"))),
            },
            Some(ParamValue::Int(k)) if *k >= 1 => MaxFeatures::Count(*k as usize),
            Some(v) => return Err(invalid("max_features", format!("unsupported value {v}"))),
        };
        Ok(Self {
            criterion: r.criterion("gini")?,
            max_depth: r.count("max_depth", None)?,
            min_samples_leaf: r.count("min_samples_leaf", Some(1))?.unwrap_or(1),
            max_features,
            n_estimators: r.count("n_estimators", Some(100))?.unwrap_or(100),
            bootstrap: r.boolean("bootstrap", true)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gamma {
    /// `1 / p`
    Auto,
    /// `1 / (p * Var(X))`
    Scale,
    Value(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmParams {
    /// Soft-margin cost.
    pub c: f64,
    pub gamma: Gamma,
    /// KKT violation tolerance.
    pub tol: f64,
    pub max_iter: Option<usize>,
}

impl SvmParams {
    pub fn from_map(params: &Hyperparams) -> Result<Self> {
        let r = Reader::new(params, &["C", "gamma", "kernel", "tol", "max_iter"])?;
        let kernel = r.text("kernel", "rbf")?;
        if kernel != "rbf" {
            return Err(invalid("kernel", format!("only 'rbf' is supported, got '{kernel}'")));
        }
        let gamma = match r.get("gamma") {
            None => Gamma::Scale,
            Some(ParamValue::Text(s)) if s == "auto" => Gamma::Auto,
            Some(ParamValue::Text(s)) if s == "scale" => Gamma::Scale,
            Some(ParamValue::Float(g)) if *g > 0.0 => Gamma::Value(*g),
            Some(ParamValue::Int(g)) if *g > 0 => Gamma::Value(*g as f64),
            Some(v) => return Err(invalid("gamma", format!("expected 'auto', 'scale' or a positive number, got {v}"))),
        };
        Ok(Self {
            c: r.positive("C", 1.0)?,
            gamma,
            tol: r.positive("tol", 1e-3)?,
            max_iter: r.count("max_iter", None)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaBoostParams {
    pub learning_rate: f64,
    pub n_estimators: usize,
}

impl AdaBoostParams {
    pub fn from_map(params: &Hyperparams) -> Result<Self> {
        let r = Reader::new(params, &["algorithm", "learning_rate", "n_estimators"])?;
        let algorithm = r.text("algorithm", "SAMME.R")?;
        if algorithm != "SAMME.R" {
            return Err(invalid("algorithm", format!("only 'SAMME.R' is supported, got '{algorithm}'")));
        }
        Ok(Self {
            learning_rate: r.positive("learning_rate", 1.0)?,
            n_estimators: r.count("n_estimators", Some(50))?.unwrap_or(50),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbtParams {
    /// Minimum loss reduction required to split.
    pub gamma: f64,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub n_estimators: usize,
    /// Minimum hessian mass per child.
    pub min_child_weight: f64,
}

impl GbtParams {
    pub fn from_map(params: &Hyperparams) -> Result<Self> {
        let r = Reader::new(params, &["gamma", "learning_rate", "max_depth", "n_estimators", "min_child_weight"])?;
        let gamma = r.float("gamma", 0.0)?;
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(invalid("gamma", format!("must be >= 0, got {gamma}")));
        }
        let min_child_weight = r.float("min_child_weight", 1.0)?;
        if !(min_child_weight >= 0.0 && min_child_weight.is_finite()) {
            return Err(invalid("min_child_weight", "must be >= 0"));
        }
        Ok(Self {
            gamma,
            learning_rate: r.positive("learning_rate", 0.3)?,
            max_depth: r.count("max_depth", Some(6))?.unwrap_or(6),
            n_estimators: r.count("n_estimators", Some(100))?.unwrap_or(100),
            min_child_weight,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_published_settings() {
        let lr = LogisticParams::from_map(&hyperparams([("C", ParamValue::from(0.0015)), ("penalty", "l2".into()), ("solver", "newton-cg".into())])).unwrap();
        assert_eq!(lr.c, 0.0015);
        let rf = ForestParams::from_map(&hyperparams([
            ("criterion", ParamValue::from("gini")),
            ("max_depth", 19i64.into()),
            ("max_features", "sqrt".into()),
            ("n_estimators", 50i64.into()),
        ]))
        .unwrap();
        assert_eq!(rf.max_features.resolve(30), 5);
        let svm = SvmParams::from_map(&hyperparams([("C", ParamValue::from(9i64)), ("gamma", "auto".into()), ("kernel", "rbf".into())])).unwrap();
        assert_eq!(svm.gamma, Gamma::Auto);
        let ada = AdaBoostParams::from_map(&hyperparams([
            ("algorithm", ParamValue::from("SAMME.R")),
            ("learning_rate", 0.8500000000000001.into()),
            ("n_estimators", 25i64.into()),
        ]))
        .unwrap();
        assert_eq!(ada.n_estimators, 25);
        let gbt = GbtParams::from_map(&hyperparams([
            ("gamma", ParamValue::from(1i64)),
            ("learning_rate", 0.75.into()),
            ("max_depth", 13i64.into()),
            ("n_estimators", 25i64.into()),
        ]))
        .unwrap();
        assert_eq!(gbt.gamma, 1.0);
    }

    #[test]
    fn rejects_invalid_values_by_name() {
        let err = LogisticParams::from_map(&hyperparams([("C", ParamValue::from(0.0))])).unwrap_err();
        assert!(matches!(err, Error::InvalidParam { ref key, .. } if key == "C"));
        let err = TreeParams::from_map(&hyperparams([("max_depth", ParamValue::from(0i64))])).unwrap_err();
        assert!(matches!(err, Error::InvalidParam { ref key, .. } if key == "max_depth"));
        let err = TreeParams::from_map(&hyperparams([("n_estimators", ParamValue::from(3i64))])).unwrap_err();
        assert!(matches!(err, Error::InvalidParam { ref key, .. } if key == "n_estimators"));
        let err = LogisticParams::from_map(&hyperparams([("penalty", ParamValue::from("l1"))])).unwrap_err();
        assert!(matches!(err, Error::InvalidParam { ref key, .. } if key == "penalty"));
        let err = GbtParams::from_map(&hyperparams([("gamma", ParamValue::from(-1.0))])).unwrap_err();
        assert!(matches!(err, Error::InvalidParam { ref key, .. } if key == "gamma"));
        let err = AdaBoostParams::from_map(&hyperparams([("learning_rate", ParamValue::from(-0.5))])).unwrap_err();
        assert!(matches!(err, Error::InvalidParam { ref key, .. } if key == "learning_rate"));
    }

    #[test]
    fn renders_like_a_python_dict() {
        let p = hyperparams([("algorithm", ParamValue::from("SAMME.R")), ("learning_rate", 0.8500000000000001.into()), ("n_estimators", 25i64.into())]);
        assert_eq!(format_params(&p), "{'algorithm': 'SAMME.R', 'learning_rate': 0.8500000000000001, 'n_estimators': 25}");
    }

    #[test]
    fn json_values_keep_their_type() {
        let p: Hyperparams = serde_json::from_str(r#"{"C": 9, "gamma": "auto", "learning_rate": 0.75, "bootstrap": false}"#).unwrap();
        assert_eq!(p["C"], ParamValue::Int(9));
        assert_eq!(p["learning_rate"], ParamValue::Float(0.75));
        assert_eq!(p["bootstrap"], ParamValue::Bool(false));
    }
}
