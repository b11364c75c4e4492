use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use naap_core::dataset::Dataset;
use naap_core::featsel::{feature_importance, SearchTrace};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{GridRun, Report};
use crate::error::{DataError, Error, Result};
use crate::io::write_file;

/// Which report renderings to write.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFormats {
    pub markdown: bool,
    pub csv: bool,
    pub json: bool,
}

impl OutputFormats {
    pub const ALL: Self = Self {
        markdown: true,
        csv: true,
        json: true,
    };
}

/// Comma-separated list of `md`, `csv`, `json` or `all`.
impl std::str::FromStr for OutputFormats {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut f = Self {
            markdown: false,
            csv: false,
            json: false,
        };
        for part in s.split(',').map(str::trim) {
            match part {
                "md" => f.markdown = true,
                "csv" => f.csv = true,
                "json" => f.json = true,
                "all" => f = Self::ALL,
                other => {
                    return Err(format!(
                        "unknown format `{other}` (expected md, csv, json or all)"
                    ))
                }
            }
        }
        Ok(f)
    }
}

/// A written file, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl Artifact {
    pub fn of(path: &str, bytes: &[u8]) -> Self {
        Self {
            path: path.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct Writer<'a> {
    root: &'a Path,
    written: Vec<Artifact>,
}

impl Writer<'_> {
    fn put(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        write_file(&self.root.join(rel), bytes)?;
        self.written.push(Artifact::of(rel, bytes));
        Ok(())
    }
}

/// Lowercase alphanumerics with single underscores, e.g. `gradient_boosting_n_200`.
pub fn slug(label: &str) -> String {
    let mut s = String::new();
    for c in label.chars() {
        if c.is_ascii_alphanumeric() {
            s.push(c.to_ascii_lowercase());
        } else if !s.ends_with('_') {
            s.push('_');
        }
    }
    s.trim_matches('_').to_string()
}

/// Search trace with the context needed to interpret its masks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceFile {
    pub algorithm: String,
    pub level: usize,
    pub feature_names: Vec<String>,
    pub trace: SearchTrace,
}

impl TraceFile {
    pub fn read(path: &Path) -> Result<Self, DataError> {
        let text = crate::io::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| DataError::Invalid {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

/// Writes `(gt, predicted)` pairs as CSV after `# key: value` metadata
/// lines, and optionally an SVG scatter with the `y = x` reference line.
pub fn emit_scatter(
    points: &[(f64, f64)],
    metadata: &[(String, String)],
    csv_path: &Path,
    svg_path: Option<&Path>,
) -> Result<()> {
    write_file(csv_path, &scatter_csv(points, metadata))?;
    if let Some(svg) = svg_path {
        write_file(svg, scatter_svg(points, metadata).as_bytes())?;
    }
    Ok(())
}

fn scatter_csv(points: &[(f64, f64)], metadata: &[(String, String)]) -> Vec<u8> {
    let mut out = String::new();
    for (k, v) in metadata {
        let _ = writeln!(out, "# {k}: {v}");
    }
    out.push_str("gt_accuracy,predicted_accuracy\n");
    for (gt, pred) in points {
        let _ = writeln!(out, "{gt},{pred}");
    }
    out.into_bytes()
}

fn scatter_svg(points: &[(f64, f64)], metadata: &[(String, String)]) -> String {
    const SIZE: f64 = 420.0;
    const MARGIN: f64 = 48.0;
    let values = points
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .filter(|v| v.is_finite());
    let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
        (l.min(v), h.max(v))
    });
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(1e-3);
    (lo, hi) = (lo - pad, hi + pad);
    let span = SIZE - 2.0 * MARGIN;
    let px = |v: f64| MARGIN + (v - lo) / (hi - lo) * span;
    let py = |v: f64| SIZE - MARGIN - (v - lo) / (hi - lo) * span;
    let title = metadata
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(", ");

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(s, "<title>{}</title>", xml_escape(&title));
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{span}" height="{span}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
        px(lo),
        py(lo),
        px(hi),
        py(hi)
    );
    for (gt, pred) in points
        .iter()
        .filter(|(a, b)| a.is_finite() && b.is_finite())
    {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#,
            px(*gt),
            py(pred.clamp(lo, hi))
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">ground truth</text>"#,
        SIZE / 2.0,
        SIZE - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {})">predicted</text>"#,
        SIZE / 2.0,
        SIZE / 2.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="{}" font-size="10">{lo:.3}</text>"#,
        SIZE - MARGIN + 14.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{hi:.3}</text>"#,
        SIZE - MARGIN,
        SIZE - MARGIN + 14.0
    );
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Feature-selection rates over the best `top_fraction` of evaluated
/// subsets, pooled two ways: per (algorithm, level) and per algorithm
/// across levels. Columns are matched across levels by index, which works
/// because scheme features always come first.
pub fn emit_importance(traces: &[TraceFile], top_fraction: f64, path: &Path) -> Result<()> {
    write_file(path, &importance_csv(traces, top_fraction)?)
}

fn importance_csv(traces: &[TraceFile], top_fraction: f64) -> Result<Vec<u8>> {
    if traces.is_empty() {
        return Err(Error::Usage(
            "no feature-selection traces to summarize".into(),
        ));
    }
    let internal = |e: csv::Error| Error::Internal(e.to_string());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "pooling",
        "algorithm",
        "level",
        "feature_index",
        "feature",
        "rate",
        "eligible",
        "kept",
        "pooled",
    ])
    .map_err(internal)?;
    let mut emit = |pooling: &str,
                    algorithm: &str,
                    level: String,
                    names: &[String],
                    group: &[&SearchTrace]|
     -> Result<()> {
        let rates =
            feature_importance(group, top_fraction).map_err(|e| Error::Usage(e.to_string()))?;
        for (i, rate) in rates.rates.iter().enumerate() {
            let name = names.get(i).cloned().unwrap_or_else(|| format!("f{i}"));
            w.write_record([
                pooling.to_string(),
                algorithm.to_string(),
                level.clone(),
                i.to_string(),
                name,
                rate.to_string(),
                rates.eligible[i].to_string(),
                rates.kept.to_string(),
                rates.pooled.to_string(),
            ])
            .map_err(internal)?;
        }
        Ok(())
    };
    for t in traces {
        emit(
            "per_level",
            &t.algorithm,
            t.level.to_string(),
            &t.feature_names,
            &[&t.trace],
        )?;
    }
    let mut algorithms: Vec<&str> = Vec::new();
    for t in traces {
        if !algorithms.contains(&t.algorithm.as_str()) {
            algorithms.push(&t.algorithm);
        }
    }
    for algo in algorithms {
        let group: Vec<&TraceFile> = traces.iter().filter(|t| t.algorithm == algo).collect();
        let widest = group
            .iter()
            .max_by_key(|t| t.feature_names.len())
            .expect("non-empty group");
        let refs: Vec<&SearchTrace> = group.iter().map(|t| &t.trace).collect();
        emit(
            "per_algorithm",
            algo,
            "all".into(),
            &widest.feature_names,
            &refs,
        )?;
    }
    w.into_inner().map_err(|e| Error::Internal(e.to_string()))
}

/// Record of one CLI run: configuration, seed and hashes of every input and output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub inputs: Vec<Artifact>,
    pub artifacts: Vec<Artifact>,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config: serde_json::Value) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            config,
            inputs: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path).map_err(|source| DataError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        self.inputs.push(Artifact {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    /// Writes `{stem}_manifest.json` into `out_dir`.
    pub fn write(&self, out_dir: &Path, stem: &str) -> Result<PathBuf> {
        let path = out_dir.join(format!("{stem}_manifest.json"));
        let mut json =
            serde_json::to_vec_pretty(self).map_err(|e| Error::Internal(e.to_string()))?;
        json.push(b'\n');
        write_file(&path, &json)?;
        Ok(path)
    }
}

/// Writes the report in the requested formats plus, when searches ran,
/// one trace file per cell and the importance table, and a scatter of the
/// lowest-cost cell per level. Returns what was written.
pub fn write_outputs(
    report: &Report,
    run: &GridRun,
    dataset: &Dataset,
    out_dir: &Path,
    stem: &str,
    formats: OutputFormats,
) -> Result<Vec<Artifact>> {
    let mut w = Writer {
        root: out_dir,
        written: Vec::new(),
    };
    if formats.markdown {
        w.put(&format!("{stem}.md"), report.to_markdown().as_bytes())?;
    }
    if formats.csv {
        w.put(&format!("{stem}.csv"), &report.to_csv()?)?;
    }
    if formats.json {
        w.put(&format!("{stem}.json"), &report.to_json()?)?;
    }

    let traces: Vec<TraceFile> = run
        .traces()
        .map(|(cell, trace)| TraceFile {
            algorithm: cell.label.clone(),
            level: cell.level,
            feature_names: Dataset::feature_names(cell.level),
            trace: trace.clone(),
        })
        .collect();
    for t in &traces {
        let json = serde_json::to_vec(t).map_err(|e| Error::Internal(e.to_string()))?;
        w.put(
            &format!("traces/{stem}/{}_L{}.json", slug(&t.algorithm), t.level),
            &json,
        )?;
    }
    if !traces.is_empty() {
        w.put(
            &format!("{stem}_importance.csv"),
            &importance_csv(&traces, 0.08)?,
        )?;
    }

    let gt: Vec<f64> = run
        .split
        .test_idx
        .iter()
        .map(|&i| dataset.records()[i].gt_accuracy)
        .collect();
    for &level in &run.config.levels {
        let best = run
            .cells
            .iter()
            .filter(|c| c.level == level)
            .min_by(|a, b| a.reported().cost.total_cmp(&b.reported().cost));
        if let Some(cell) = best {
            let points: Vec<(f64, f64)> = gt
                .iter()
                .copied()
                .zip(cell.predictions.iter().copied())
                .collect();
            let meta = vec![
                ("algorithm".to_string(), cell.label.clone()),
                ("level".to_string(), level.to_string()),
                ("split".to_string(), run.split.kind.to_string()),
                (
                    "result".to_string(),
                    naap_core::metrics::format_cell(cell.reported()),
                ),
            ];
            w.put(
                &format!("scatter/{stem}_L{level}.csv"),
                &scatter_csv(&points, &meta),
            )?;
            w.put(
                &format!("scatter/{stem}_L{level}.svg"),
                scatter_svg(&points, &meta).as_bytes(),
            )?;
        }
    }
    Ok(w.written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use naap_core::featsel::{hill_climb, FeatureMask, SearchConfig};
    use naap_core::metrics::EvalResult;

    #[test]
    fn slugs() {
        assert_eq!(slug("Gradient Boosting (N=200)"), "gradient_boosting_n_200");
        assert_eq!(
            slug("Linear Regression (D=0.25)"),
            "linear_regression_d_0_25"
        );
        assert_eq!(slug("3-NN"), "3_nn");
    }

    #[test]
    fn scatter_files() {
        let dir = tempfile::tempdir().unwrap();
        let pts: Vec<(f64, f64)> = (0..40)
            .map(|i| (0.5 + i as f64 * 0.01, 0.5 + i as f64 * 0.01))
            .collect();
        let csv = dir.path().join("s.csv");
        let svg = dir.path().join("s.svg");
        emit_scatter(
            &pts,
            &[("algorithm".into(), "3-NN".into())],
            &csv,
            Some(&svg),
        )
        .unwrap();
        let text = std::fs::read_to_string(&csv).unwrap();
        assert!(text.starts_with("# algorithm: 3-NN\ngt_accuracy,predicted_accuracy\n"));
        let rows: Vec<&str> = text.lines().skip(2).collect();
        assert_eq!(rows.len(), 40);
        assert!(rows.iter().all(|r| {
            let (a, b) = r.split_once(',').unwrap();
            a == b
        }));
        let svg = std::fs::read_to_string(&svg).unwrap();
        assert_eq!(svg.matches("<circle").count(), 40);
        assert!(svg.contains("<line"));
        assert!(emit_scatter(&pts, &[], Path::new("/proc/forbidden/s.csv"), None).is_err());
    }

    #[test]
    fn importance_has_both_poolings() {
        let eval = |m: FeatureMask| {
            Ok::<_, std::convert::Infallible>(EvalResult {
                mae: 0.01,
                violations: if m.contains(0) { 1 } else { 5 },
                n_test: 20,
                monotonicity: 0.0,
                cost: 0.0,
            })
        };
        let t = |level: usize| TraceFile {
            algorithm: "A".into(),
            level,
            feature_names: Dataset::feature_names(level),
            trace: hill_climb(&eval, 8 + 3 * level, &SearchConfig::default()).unwrap(),
        };
        let csv = String::from_utf8(importance_csv(&[t(0), t(3)], 0.08).unwrap()).unwrap();
        let per_level = csv
            .lines()
            .filter(|l| l.starts_with("per_level,A,0,"))
            .count();
        assert_eq!(per_level, 8);
        assert_eq!(
            csv.lines()
                .filter(|l| l.starts_with("per_algorithm,A,all,"))
                .count(),
            17
        );
        assert!(csv.contains("per_level,A,0,0,depth,1,"));
        assert!(importance_csv(&[], 0.08).is_err());
    }
}
