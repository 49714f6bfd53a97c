//! Comparison table and the human-readable run summary.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::fmt_score;
use crate::models::ModelKind;
use crate::tuning::TuneResult;

/// Held-out metrics of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: ModelKind,
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub auc: Option<f64>,
    pub best_params: String,
}

const HEADER: [&str; 8] = ["model", "name", "accuracy", "precision", "recall", "f1", "auc", "best_params"];

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| x.to_string())
}

fn parse_cell(s: &str, path: &Path) -> Result<Option<f64>> {
    if s == "undefined" {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| Error::Data(format!("{}: `{s}` is not a number", path.display())))
}

pub fn write_comparison_csv(rows: &[ComparisonRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record([
            r.model.as_str().to_string(),
            r.model.display_name().to_string(),
            cell(r.accuracy),
            cell(r.precision),
            cell(r.recall),
            cell(r.f1),
            cell(r.auc),
            r.best_params.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_comparison_csv(path: &Path) -> Result<Vec<ComparisonRow>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut r = csv::Reader::from_path(path)?;
    if r.headers()?.iter().collect::<Vec<_>>() != HEADER {
        return Err(Error::Data(format!("{}: unexpected header", path.display())));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        rows.push(ComparisonRow {
            model: rec[0].parse()?,
            accuracy: parse_cell(&rec[2], path)?,
            precision: parse_cell(&rec[3], path)?,
            recall: parse_cell(&rec[4], path)?,
            f1: parse_cell(&rec[5], path)?,
            auc: parse_cell(&rec[6], path)?,
            best_params: rec[7].to_string(),
        });
    }
    Ok(rows)
}

fn table(rows: &[ComparisonRow], best: Option<usize>) -> String {
    let mut s = String::from("| Model | Accuracy | Recall | AUC | Precision | F1 |\n|---|---|---|---|---|---|\n");
    for (i, r) in rows.iter().enumerate() {
        let mark = if Some(i) == best { " **(best)**" } else { "" };
        let _ = writeln!(
            s,
            "| {}{mark} | {} | {} | {} | {} | {} |",
            r.model.display_name(),
            fmt_score(r.accuracy),
            fmt_score(r.recall),
            fmt_score(r.auc),
            fmt_score(r.precision),
            fmt_score(r.f1)
        );
    }
    s
}

pub fn write_comparison_markdown(rows: &[ComparisonRow], path: &Path) -> Result<()> {
    fs::write(path, table(rows, best_model(rows)))?;
    Ok(())
}

/// Index of the model with the highest recall, ties broken by AUC and then
/// by table order. Undefined values rank below every number.
pub fn best_model(rows: &[ComparisonRow]) -> Option<usize> {
    let key = |r: &ComparisonRow| (r.recall.unwrap_or(f64::NEG_INFINITY), r.auc.unwrap_or(f64::NEG_INFINITY));
    let mut best: Option<usize> = None;
    for (i, r) in rows.iter().enumerate() {
        match best {
            Some(b) if key(r) <= key(&rows[b]) => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Renders the comparison table, the best model, the tuned parameters and
/// the ten most important features, all read back from `dir`.
pub fn emit_report(dir: &Path) -> Result<String> {
    let rows = read_comparison_csv(&dir.join("comparison_table.csv"))?;
    if rows.is_empty() {
        return Err(Error::Data("comparison table has no rows".into()));
    }
    let best = best_model(&rows);
    let mut out = String::from("# Classifier comparison (held-out test set)\n\n");
    out.push_str(&table(&rows, best));
    if let Some(b) = best {
        let r = &rows[b];
        let _ = writeln!(
            out,
            "\nBest model by recall, then AUC: {} (recall {}, AUC {})",
            r.model.display_name(),
            fmt_score(r.recall),
            fmt_score(r.auc)
        );
    }

    out.push_str("\n## Best parameters\n\n");
    for r in &rows {
        let path = dir.join(format!("tune_{}.json", r.model));
        if path.exists() {
            let tuned: TuneResult = serde_json::from_str(&fs::read_to_string(&path)?)?;
            let _ = writeln!(out, "- {} (CV {} = {:.4})", tuned.best_line(), tuned.scoring, tuned.best_score);
        } else {
            let _ = writeln!(out, "- {}: {}", r.model.display_name(), r.best_params);
        }
    }

    let shap = dir.join("shap_global.csv");
    if shap.exists() {
        let meta: serde_json::Value = match fs::read_to_string(dir.join("shap_meta.json")) {
            Ok(text) => serde_json::from_str(&text)?,
            Err(_) => serde_json::Value::Null,
        };
        let model = meta["model"].as_str().and_then(|m| m.parse::<ModelKind>().ok());
        let _ = writeln!(
            out,
            "\n## Top features by mean |SHAP|{}\n",
            model.map_or(String::new(), |m| format!(" ({}, {})", m.display_name(), meta["output"].as_str().unwrap_or("?")))
        );
        let mut r = csv::Reader::from_path(&shap)?;
        for rec in r.records().take(10) {
            let rec = rec?;
            let v: f64 = rec[1].parse().map_err(|_| Error::Data(format!("bad SHAP value `{}`", &rec[1])))?;
            let _ = writeln!(out, "{:>2}. {} {:.4}", &rec[2], &rec[0], v);
        }
    } else {
        out.push_str("\nNo explanation artifacts in this run.\n");
    }
    Ok(out)
}
