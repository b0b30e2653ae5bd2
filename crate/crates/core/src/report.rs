use crate::align::AlignmentCounts;
use crate::classify::{HallucinationRow, VerdictLabel};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub system: String,
    pub measure: String,
    pub point: Option<f64>,
    pub ci_d: Option<(f64, f64)>,
    pub ci_s: Option<(f64, f64)>,
    pub n: usize,
    pub replicates: usize,
    #[serde(default)]
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HallucinationEntry {
    pub entity: String,
    pub count: usize,
    pub gender: VerdictLabel,
}

impl HallucinationEntry {
    pub fn tag(&self) -> &'static str {
        match self.gender {
            VerdictLabel::Male => "m",
            VerdictLabel::Female => "f",
            VerdictLabel::Unknown => "u",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemReport {
    pub system: String,
    pub alignment: AlignmentCounts,
    pub hallucinations: Vec<HallucinationEntry>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    /// The resolved configuration the report was produced from.
    pub config: String,
    pub inputs: usize,
    pub dropped_originals: usize,
    pub scores: Vec<ScoreRow>,
    pub systems: Vec<SystemReport>,
    #[serde(default)]
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Option<ReportFormat> {
        match s {
            "markdown" | "md" => Some(ReportFormat::Markdown),
            "csv" => Some(ReportFormat::Csv),
            "json" => Some(ReportFormat::Json),
            _ => None,
        }
    }
}

/// Most frequent hallucinated entities of `system`, lowercased, ties by name.
pub fn top_hallucinations(rows: &[HallucinationRow], system: &str, k: usize) -> Vec<HallucinationEntry> {
    let mut counts: BTreeMap<String, (usize, VerdictLabel)> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.system == system) {
        let name = r.entity_tokens.join(" ").to_lowercase();
        counts.entry(name).or_insert((0, r.label)).0 += 1;
    }
    let mut v: Vec<HallucinationEntry> = counts
        .into_iter()
        .map(|(entity, (count, gender))| HallucinationEntry { entity, count, gender })
        .collect();
    v.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.entity.cmp(&b.entity)));
    v.truncate(k);
    v
}

fn num(x: f64) -> String {
    format!("{x:.3}")
}

fn ci(c: Option<(f64, f64)>) -> String {
    c.map_or_else(|| "n/a".to_string(), |(lo, hi)| format!("{}, {}", num(lo), num(hi)))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn render_report(report: &BiasReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => serde_json::to_string_pretty(report).expect("report serializes") + "\n",
        ReportFormat::Csv => {
            let mut out = String::from("system,measure,point,s_lo,s_hi,d_lo,d_hi,n\n");
            for r in &report.scores {
                let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    csv_field(&r.system),
                    csv_field(&r.measure),
                    opt(r.point),
                    opt(r.ci_s.map(|c| c.0)),
                    opt(r.ci_s.map(|c| c.1)),
                    opt(r.ci_d.map(|c| c.0)),
                    opt(r.ci_d.map(|c| c.1)),
                    r.n
                );
            }
            out
        }
        ReportFormat::Markdown => markdown(report),
    }
}

fn markdown(report: &BiasReport) -> String {
    let mut out = String::from("# Bias report\n\n");
    let _ = writeln!(
        out,
        "Inputs: {} (originals dropped for lack of names: {})\n",
        report.inputs, report.dropped_originals
    );
    out.push_str("## Scores\n\n| System | Measure | Score | n |\n|---|---|---|---|\n");
    for r in &report.scores {
        let score = match r.point {
            Some(p) => format!("{}<br>s: {}<br>d: {}", num(p), ci(r.ci_s), ci(r.ci_d)),
            None => "no data".to_string(),
        };
        let _ = writeln!(out, "| {} | {} | {} | {} |", r.system, r.measure, score, r.n);
    }
    out.push_str("\n## Alignment\n\n| System | Summaries | Input entities | Summary entities | Input entities aligned | Aligned | Hallucinated | with gender | Unresolved |\n|---|---|---|---|---|---|---|---|---|\n");
    for s in &report.systems {
        let a = &s.alignment;
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} |",
            s.system,
            a.summaries,
            a.input_entities,
            a.summary_entities,
            a.input_entities_aligned,
            a.aligned,
            a.hallucinated,
            a.hallucinated_with_gender,
            a.unresolved
        );
    }
    out.push_str("\n## Most frequent hallucinations\n\n| System | Entity | Count |\n|---|---|---|\n");
    for s in &report.systems {
        for h in &s.hallucinations {
            let _ = writeln!(out, "| {} | {} ({}) | {} |", s.system, h.entity, h.tag(), h.count);
        }
    }
    let diags: Vec<String> = report
        .scores
        .iter()
        .flat_map(|r| r.diagnostics.iter().map(move |d| format!("{} / {}: {d}", r.system, r.measure)))
        .chain(report.diagnostics.iter().cloned())
        .collect();
    if !diags.is_empty() {
        out.push_str("\n## Diagnostics\n\n");
        for d in diags {
            let _ = writeln!(out, "- {d}");
        }
    }
    out.push_str("\n## Configuration\n\n```\n");
    out.push_str(&report.config);
    if !report.config.ends_with('\n') {
        out.push('\n');
    }
    out.push_str("```\n");
    out
}

/// Writes `report.md`, `scores.csv` and `report.json` into `dir`.
pub fn write_report(report: &BiasReport, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.md"), render_report(report, ReportFormat::Markdown))?;
    std::fs::write(dir.join("scores.csv"), render_report(report, ReportFormat::Csv))?;
    std::fs::write(dir.join("report.json"), render_report(report, ReportFormat::Json))
}
