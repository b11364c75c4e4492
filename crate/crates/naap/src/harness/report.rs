use std::fmt::Write as _;

use naap_core::dataset::SplitKind;
use naap_core::metrics::{format_cell, CostFunction, EvalResult};
use serde::{Deserialize, Serialize};

use super::GridRun;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    Baseline,
    Ablation,
    Extrapolation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub algorithm: String,
    pub level: usize,
    pub featsel: bool,
    pub n_features: usize,
    pub mae: f64,
    pub monotonicity: f64,
    pub violations: u64,
    pub n_test: usize,
    pub cost: f64,
    /// Selected subset as a bit string over the level's features.
    pub mask: Option<String>,
}

impl ReportRow {
    fn new(
        algorithm: &str,
        level: usize,
        n_features: usize,
        result: &EvalResult,
        mask: Option<String>,
    ) -> Self {
        Self {
            algorithm: algorithm.to_string(),
            level,
            featsel: mask.is_some(),
            n_features,
            mae: result.mae,
            monotonicity: result.monotonicity,
            violations: result.violations,
            n_test: result.n_test,
            cost: result.cost,
            mask,
        }
    }

    fn result(&self) -> EvalResult {
        EvalResult {
            mae: self.mae,
            violations: self.violations,
            n_test: self.n_test,
            monotonicity: self.monotonicity,
            cost: self.cost,
        }
    }

    /// `"0.004 / 0.983 / 13"`
    pub fn cell(&self) -> String {
        format_cell(&self.result())
    }
}

/// A table row for an algorithm outside this crate's scope; only the
/// Markdown rendering shows it, so tables keep their familiar shape.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placeholder {
    pub label: String,
    /// Rendered right after this algorithm's rows (or at the end).
    pub after: String,
}

const OUT_OF_SCOPE: &str = "n/a (out of scope)";

fn svr(labels: &[&str], after: &str) -> Vec<Placeholder> {
    labels
        .iter()
        .map(|k| Placeholder {
            label: format!("SVR ({k} kernel)"),
            after: after.into(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub kind: ReportKind,
    pub title: String,
    pub split: SplitKind,
    pub n_train: usize,
    pub n_test: usize,
    pub levels: Vec<usize>,
    pub cost_function: CostFunction,
    pub seed: u64,
    pub rows: Vec<ReportRow>,
    #[serde(skip)]
    pub placeholders: Vec<Placeholder>,
}

impl Report {
    fn shell(
        kind: ReportKind,
        title: String,
        run: &GridRun,
        placeholders: Vec<Placeholder>,
    ) -> Self {
        Self {
            kind,
            title,
            split: run.split.kind,
            n_train: run.split.train_idx.len(),
            n_test: run.split.test_idx.len(),
            levels: run.config.levels.clone(),
            cost_function: run.config.cost(),
            seed: run.config.seed,
            rows: Vec::new(),
            placeholders,
        }
    }

    pub fn baseline(run: &GridRun) -> Self {
        let mut r = Self::shell(
            ReportKind::Baseline,
            "Baseline".into(),
            run,
            svr(&["RBF", "Polynomial", "Linear"], "AdaBoost (N=200)"),
        );
        r.rows = run
            .cells
            .iter()
            .map(|c| {
                ReportRow::new(
                    &c.label,
                    c.level,
                    c.n_features,
                    c.reported(),
                    c.selection.as_ref().map(|s| s.mask.bit_string()),
                )
            })
            .collect();
        r
    }

    pub fn ablation(run: &GridRun) -> Self {
        let mut r = Self::shell(
            ReportKind::Ablation,
            "Feature selection ablation".into(),
            run,
            svr(&["RBF"], "AdaBoost (N=100)"),
        );
        for c in &run.cells {
            r.rows.push(ReportRow::new(
                &c.label,
                c.level,
                c.n_features,
                &c.all_features,
                None,
            ));
            if let Some(s) = &c.selection {
                r.rows.push(ReportRow::new(
                    &c.label,
                    c.level,
                    c.n_features,
                    &s.result,
                    Some(s.mask.bit_string()),
                ));
            }
        }
        r
    }

    pub fn extrapolation(run: &GridRun) -> Self {
        let title = format!("{} extrapolation", capitalize(run.split.kind.name()));
        let mut r = Self::baseline(run);
        r.kind = ReportKind::Extrapolation;
        r.title = title;
        r.placeholders = svr(&["Polynomial", "Linear"], "Linear Regression (Sigmoid)");
        r
    }

    /// Algorithms in first-appearance order.
    fn algorithms(&self) -> Vec<&str> {
        let mut seen: Vec<&str> = Vec::new();
        for row in &self.rows {
            if !seen.contains(&row.algorithm.as_str()) {
                seen.push(&row.algorithm);
            }
        }
        seen
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {}\n", self.title);
        let _ = writeln!(
            out,
            "Split: {} ({} train / {} test). Cost: {}. Seed: {}.\n",
            self.split,
            self.n_train,
            self.n_test,
            self.cost_function.name(),
            self.seed
        );
        if self.kind == ReportKind::Ablation {
            out.push_str("Upper line: all features. Lower line: best feature subset found.\n\n");
        }
        out.push_str("MAE / Monotonicity Score / #Violations\n\n| Algorithm |");
        for l in &self.levels {
            let _ = write!(out, " {l} epochs |");
        }
        out.push_str("\n|---|");
        out.push_str(&"---|".repeat(self.levels.len()));
        out.push('\n');

        let placeholder_line = |out: &mut String, label: &str| {
            let _ = write!(out, "| {label} |");
            out.push_str(&format!(" {OUT_OF_SCOPE} |").repeat(self.levels.len()));
            out.push('\n');
        };
        let variants: &[bool] = if self.kind == ReportKind::Ablation {
            &[false, true]
        } else {
            &[]
        };
        let algorithms = self.algorithms();
        for algo in &algorithms {
            let lines: Vec<Option<bool>> = if variants.is_empty() {
                vec![None]
            } else {
                variants.iter().map(|&v| Some(v)).collect()
            };
            for (i, featsel) in lines.into_iter().enumerate() {
                let _ = write!(out, "| {} |", if i == 0 { *algo } else { "" });
                for level in &self.levels {
                    let cell = self
                        .rows
                        .iter()
                        .find(|r| {
                            r.algorithm == *algo
                                && r.level == *level
                                && featsel.is_none_or(|f| r.featsel == f)
                        })
                        .map_or_else(|| String::from("-"), ReportRow::cell);
                    let _ = write!(out, " {cell} |");
                }
                out.push('\n');
            }
            for p in self.placeholders.iter().filter(|p| p.after == *algo) {
                placeholder_line(&mut out, &p.label);
            }
        }
        for p in self
            .placeholders
            .iter()
            .filter(|p| !algorithms.contains(&p.after.as_str()))
        {
            placeholder_line(&mut out, &p.label);
        }
        out
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let internal = |e: csv::Error| Error::Internal(e.to_string());
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "algorithm",
            "level",
            "featsel",
            "n_features",
            "mae",
            "monotonicity",
            "violations",
            "n_test",
            "cost",
            "mask",
            "cell",
        ])
        .map_err(internal)?;
        for r in &self.rows {
            w.write_record([
                r.algorithm.clone(),
                r.level.to_string(),
                r.featsel.to_string(),
                r.n_features.to_string(),
                r.mae.to_string(),
                r.monotonicity.to_string(),
                r.violations.to_string(),
                r.n_test.to_string(),
                r.cost.to_string(),
                r.mask.clone().unwrap_or_default(),
                r.cell(),
            ])
            .map_err(internal)?;
        }
        w.into_inner().map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        let mut v = serde_json::to_vec_pretty(self).map_err(|e| Error::Internal(e.to_string()))?;
        v.push(b'\n');
        Ok(v)
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next()
        .map(|f| f.to_uppercase().chain(c).collect())
        .unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(algorithm: &str, level: usize, violations: u64, mask: Option<&str>) -> ReportRow {
        let monotonicity = 1.0 - violations as f64 / 780.0;
        ReportRow {
            algorithm: algorithm.into(),
            level,
            featsel: mask.is_some(),
            n_features: 8,
            mae: 0.0041,
            monotonicity,
            violations,
            n_test: 40,
            cost: 0.0,
            mask: mask.map(String::from),
        }
    }

    fn report(kind: ReportKind, rows: Vec<ReportRow>, placeholders: Vec<Placeholder>) -> Report {
        Report {
            kind,
            title: "T".into(),
            split: SplitKind::Uniform,
            n_train: 400,
            n_test: 40,
            levels: vec![0, 3],
            cost_function: CostFunction::SqrtRounded,
            seed: 1,
            rows,
            placeholders,
        }
    }

    #[test]
    fn markdown_cells_and_placeholders() {
        let r = report(
            ReportKind::Baseline,
            vec![
                row("A", 0, 13, None),
                row("A", 3, 48, None),
                row("B", 0, 0, None),
            ],
            svr(&["RBF"], "A"),
        );
        let md = r.to_markdown();
        assert!(
            md.contains("| A | 0.004 / 0.983 / 13 | 0.004 / 0.938 / 48 |"),
            "{md}"
        );
        assert!(md.contains("| B | 0.004 / 1.000 / 0 | - |"), "{md}");
        let a = md.find("| A |").unwrap();
        let svr_pos = md
            .find("| SVR (RBF kernel) | n/a (out of scope) | n/a (out of scope) |")
            .unwrap();
        assert!(a < svr_pos && svr_pos < md.find("| B |").unwrap());
    }

    #[test]
    fn ablation_renders_two_lines() {
        let r = report(
            ReportKind::Ablation,
            vec![row("A", 0, 13, None), row("A", 0, 11, Some("1010"))],
            vec![],
        );
        let md = r.to_markdown();
        assert!(
            md.contains("| A | 0.004 / 0.983 / 13 | - |\n|  | 0.004 / 0.986 / 11 | - |"),
            "{md}"
        );
    }

    #[test]
    fn csv_and_json_forms() {
        let r = report(
            ReportKind::Baseline,
            vec![row("A", 0, 13, Some("11"))],
            vec![],
        );
        let csv = String::from_utf8(r.to_csv().unwrap()).unwrap();
        assert!(csv.starts_with("algorithm,level,featsel"));
        assert!(csv.contains("A,0,true,8,0.0041,"));
        assert!(csv.trim_end().ends_with("11,0.004 / 0.983 / 13"));
        let back: Report = serde_json::from_slice(&r.to_json().unwrap()).unwrap();
        assert_eq!(back.rows, r.rows);
    }
}
