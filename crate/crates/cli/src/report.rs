//! `kmslab report`: consolidates prior runs under a directory.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;
use crate::output::{fmt_f, write_json};
use crate::run::RunReport;

/// Slope window for the channel error of the repeated-interaction scheme.
pub const QUARTIC_SLOPE_RANGE: (f64, f64) = (3.5, 4.5);

#[derive(Debug, Clone, Serialize)]
pub struct IndexEntry {
    /// Directory of the run, relative to the scanned root, `/`-separated.
    pub run: String,
    pub experiment: String,
    pub summary: BTreeMap<String, Value>,
    pub n_violations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Index {
    pub n_runs: usize,
    pub runs: Vec<IndexEntry>,
}

fn collect(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect(&p, out)?;
        } else if p.file_name().is_some_and(|n| n == "report.json") {
            out.push(p);
        }
    }
    Ok(())
}

fn rel_name(root: &Path, report: &Path) -> String {
    let parent = report.parent().unwrap_or(root);
    let rel = parent.strip_prefix(root).unwrap_or(parent);
    let parts: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
    if parts.is_empty() {
        ".".into()
    } else {
        parts.join("/")
    }
}

fn cell(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => String::new(),
        Some(Value::Number(n)) if n.is_f64() => fmt_f(n.as_f64().expect("f64 number")),
        Some(Value::String(s)) => s.clone(),
        Some(v) => v.to_string(),
    }
}

/// Adds derived columns, currently the quartic pass flag of `ri-scaling` runs.
fn augmented(e: &IndexEntry) -> BTreeMap<String, Value> {
    let mut s = e.summary.clone();
    if e.experiment == "ri-scaling" {
        if let Some(slope) = s.get("slope").and_then(Value::as_f64) {
            let (lo, hi) = QUARTIC_SLOPE_RANGE;
            s.insert("quartic_pass".into(), Value::Bool((lo..=hi).contains(&slope)));
        }
    }
    s
}

pub fn render_markdown(entries: &[IndexEntry]) -> String {
    let mut by_kind: BTreeMap<&str, Vec<(&IndexEntry, BTreeMap<String, Value>)>> = BTreeMap::new();
    for e in entries {
        by_kind.entry(&e.experiment).or_default().push((e, augmented(e)));
    }
    let mut md = String::from("# kmslab results\n");
    for (kind, runs) in by_kind {
        let cols: BTreeSet<&String> = runs.iter().flat_map(|(_, s)| s.keys()).collect();
        md.push_str(&format!("\n## {kind}\n\n| run | violations |"));
        for c in &cols {
            md.push_str(&format!(" {c} |"));
        }
        md.push_str("\n|---|---|");
        for _ in &cols {
            md.push_str("---|");
        }
        md.push('\n');
        for (e, s) in &runs {
            md.push_str(&format!("| {} | {} |", e.run, e.n_violations));
            for c in &cols {
                md.push_str(&format!(" {} |", cell(s.get(*c))));
            }
            md.push('\n');
        }
        if kind == "ri-scaling" {
            let (lo, hi) = QUARTIC_SLOPE_RANGE;
            md.push_str(&format!("\nquartic_pass: fitted slope in [{lo}, {hi}].\n"));
        }
    }
    md
}

/// Scans `dir` recursively and writes `summary.md` and `index.json` into it.
pub fn report(dir: &Path) -> Result<Index, CliError> {
    if !dir.is_dir() {
        return Err(CliError::EmptyResults(dir.display().to_string()));
    }
    let mut paths = Vec::new();
    collect(dir, &mut paths)?;
    if paths.is_empty() {
        return Err(CliError::EmptyResults(dir.display().to_string()));
    }
    let mut runs = Vec::new();
    for p in &paths {
        let text = std::fs::read_to_string(p)?;
        let r: RunReport = serde_json::from_str(&text).map_err(|e| CliError::ExperimentFailed(format!("unreadable report {}: {e}", p.display())))?;
        runs.push(IndexEntry { run: rel_name(dir, p), experiment: r.experiment, summary: r.summary, n_violations: r.violations.len() });
    }
    std::fs::write(dir.join("summary.md"), render_markdown(&runs))?;
    let index = Index { n_runs: runs.len(), runs };
    write_json(&dir.join("index.json"), &index)?;
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn quartic_flag_follows_slope() {
        let mk = |run: &str, slope: f64| IndexEntry {
            run: run.into(),
            experiment: "ri-scaling".into(),
            summary: BTreeMap::from([("slope".to_string(), json!(slope))]),
            n_violations: 0,
        };
        let md = render_markdown(&[mk("a", 3.99), mk("b", 2.0)]);
        assert!(md.contains("| a | 0 | true | 3.9900000000000002e0 |"), "{md}");
        assert!(md.contains("| b | 0 | false | 2.0000000000000000e0 |"), "{md}");
    }
}
