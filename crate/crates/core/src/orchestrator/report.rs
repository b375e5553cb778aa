//! Report rendering: JSON plus a per-level text table.

use std::fmt::Write;

use super::bench::{EvalReport, LevelMetrics};

pub struct RenderedReport {
    pub json: String,
    pub table: String,
}

fn percent(v: f64) -> String {
    format!("{:.2}", v * 100.0)
}

/// Machine-readable JSON and a table with one column per optimization level
/// present plus a sample-weighted AVG column.
pub fn report_render(report: &EvalReport) -> RenderedReport {
    let json = serde_json::to_string_pretty(report).expect("report serializes") + "\n";

    let mut columns: Vec<(String, &LevelMetrics)> =
        report.per_level.iter().map(|(l, m)| (l.to_string(), m)).collect();
    columns.push(("AVG".into(), &report.overall));
    let has_judge = columns.iter().any(|(_, m)| m.judge_mean.is_some());

    let mut rows: Vec<(&str, Vec<String>)> = vec![
        ("Re-executability (%)", columns.iter().map(|(_, m)| percent(m.reexec_rate)).collect()),
        ("R2I (x100)", columns.iter().map(|(_, m)| percent(m.r2i_mean)).collect()),
    ];
    if has_judge {
        rows.push((
            "Judge (1-5)",
            columns
                .iter()
                .map(|(_, m)| m.judge_mean.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into()))
                .collect(),
        ));
    }
    rows.push(("Samples", columns.iter().map(|(_, m)| m.samples.to_string()).collect()));

    let label_w = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max(6);
    let col_w = 8;
    let mut table = String::new();
    let _ = writeln!(table, "{} ({})", report.preset, report.run_id);
    let _ = write!(table, "{:<label_w$}", "Metric");
    for (name, _) in &columns {
        let _ = write!(table, " | {name:>col_w$}");
    }
    table.push('\n');
    let _ = write!(table, "{}", "-".repeat(label_w));
    for _ in &columns {
        let _ = write!(table, "-+-{}", "-".repeat(col_w));
    }
    table.push('\n');
    for (label, cells) in rows {
        let _ = write!(table, "{label:<label_w$}");
        for c in cells {
            let _ = write!(table, " | {c:>col_w$}");
        }
        table.push('\n');
    }
    RenderedReport { json, table }
}
