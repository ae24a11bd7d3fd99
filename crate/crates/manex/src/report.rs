//! Report rendering: CSV and JSON emitters for the pipeline outputs.
//!
//! CSV output uses `.` as the decimal separator, UTF-8, a header row and a
//! stable column order; fixed six-decimal formatting keeps files
//! byte-reproducible across runs and worker counts.

use crate::dynamics::Histogram;
use crate::metrics::{bin_label, GroupedReport};
use crate::pipeline::{AgentReport, AnalysisReport, EvaluationOutput, ExtractionOutcome};

/// Fixed-precision statistic formatting for CSV cells.
pub fn fmt_stat(value: f64) -> String {
    format!("{value:.6}")
}

/// Quotes a CSV field when needed.
pub fn csv_field(raw: &str) -> String {
    if raw.contains([',', '"', '\n']) {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw.to_owned()
    }
}

fn csv_line(fields: &[String]) -> String {
    let mut line = fields
        .iter()
        .map(|f| csv_field(f))
        .collect::<Vec<_>>()
        .join(",");
    line.push('\n');
    line
}

/// Maneuver table of `extract`, one row per (scene, agent).
pub fn extract_csv(reports: &[AgentReport]) -> String {
    let mut out = String::from("scene_id,agent_id,status,turn,lane_change,confidence,lane_sequence\n");
    for report in reports {
        let (turn, lane_change, confidence, sequence) = match &report.outcome {
            ExtractionOutcome::Extracted { label, sequence } => (
                label.turn.label().to_owned(),
                label.lane_change.label().to_owned(),
                fmt_stat(label.source_sequence_confidence),
                sequence
                    .iter()
                    .map(|id| id.as_str())
                    .collect::<Vec<_>>()
                    .join("->"),
            ),
            _ => Default::default(),
        };
        out.push_str(&csv_line(&[
            report.scene_id.clone(),
            report.agent_id.to_string(),
            report.outcome.status().to_owned(),
            turn,
            lane_change,
            confidence,
            sequence,
        ]));
    }
    out
}

pub fn extract_json(reports: &[AgentReport]) -> String {
    let mut text = serde_json::to_string_pretty(reports).expect("report serialization");
    text.push('\n');
    text
}

fn histogram_rows(out: &mut String, section: &str, hist: &Histogram, scale: f64) {
    let total = hist.total();
    let share = |count: u64| {
        if total == 0 {
            "0.000000".to_owned()
        } else {
            fmt_stat(count as f64 / total as f64)
        }
    };
    for (i, &count) in hist.counts.iter().enumerate() {
        out.push_str(&csv_line(&[
            section.to_owned(),
            bin_label(&hist.edges, i, scale),
            count.to_string(),
            share(count),
        ]));
    }
    for (label, count) in [("underflow", hist.underflow), ("overflow", hist.overflow)] {
        out.push_str(&csv_line(&[
            section.to_owned(),
            label.to_owned(),
            count.to_string(),
            share(count),
        ]));
    }
}

/// Dataset analysis as one flat CSV: histograms and categorical
/// distributions, section by section.
pub fn analysis_csv(analysis: &AnalysisReport) -> String {
    let mut out = String::from("section,group,count,share\n");
    histogram_rows(&mut out, "velocity", &analysis.velocity, 1.0);
    histogram_rows(&mut out, "acceleration", &analysis.acceleration, 1.0);
    histogram_rows(&mut out, "curvature", &analysis.curvature, 100.0);
    for (section, counts) in [
        ("turn", &analysis.turn),
        ("lane_change", &analysis.lane_change),
        ("outcome", &analysis.outcomes),
    ] {
        for entry in counts {
            out.push_str(&csv_line(&[
                section.to_owned(),
                entry.label.clone(),
                entry.count.to_string(),
                fmt_stat(entry.share),
            ]));
        }
    }
    out
}

pub fn analysis_json(analysis: &AnalysisReport) -> String {
    let mut text = serde_json::to_string_pretty(analysis).expect("analysis serialization");
    text.push('\n');
    text
}

/// One grouped evaluation table as CSV.
pub fn grouped_csv(report: &GroupedReport) -> String {
    let mut out = String::from("group,n,min_ade_mean,min_ade_std,min_fde_mean,min_fde_std\n");
    for group in &report.groups {
        let cell = |v: Option<f64>| v.map(fmt_stat).unwrap_or_default();
        out.push_str(&csv_line(&[
            group.label.clone(),
            group.n.to_string(),
            cell(group.min_ade_mean),
            cell(group.min_ade_std),
            cell(group.min_fde_mean),
            cell(group.min_fde_std),
        ]));
    }
    out
}

/// All grouped tables concatenated for terminal output, one titled section
/// per dimension.
pub fn evaluation_text(output: &EvaluationOutput) -> String {
    let mut out = String::new();
    for report in &output.reports {
        out.push_str(&format!("# {}\n", report.dimension.title()));
        out.push_str(&grouped_csv(report));
        out.push('\n');
    }
    out
}

pub fn evaluation_json(output: &EvaluationOutput) -> String {
    let mut text = serde_json::to_string_pretty(output).expect("evaluation serialization");
    text.push('\n');
    text
}
