//! Accuracy tables: tasks as rows, subjects as columns, plus an average.

use std::fmt::Write as _;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::cv::EvalReport;
use crate::types::ClassLabel;

/// task -> subject -> report
pub type ReportGrid = IndexMap<String, IndexMap<String, EvalReport>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TableLayout {
    /// One row per session/task, four-class accuracy.
    TableI,
    /// One row per class, one-vs-rest binary accuracy, rows in class order.
    TableII,
}

/// `0.3303, 0.0142 -> "33.03% (±1.42)"`
pub fn format_cell(mean: f64, std: f64) -> String {
    format!("{:.2}% (\u{b1}{:.2})", mean * 100.0, std * 100.0)
}

/// Average column: mean of the subject means and mean of the subject stds.
pub fn render_report(reports: &ReportGrid, layout: TableLayout) -> String {
    let mut subjects: Vec<&str> = Vec::new();
    for row in reports.values() {
        for s in row.keys() {
            if !subjects.contains(&s.as_str()) {
                subjects.push(s);
            }
        }
    }
    let mut tasks: Vec<(&String, &IndexMap<String, EvalReport>)> = reports.iter().collect();
    let caption = match layout {
        TableLayout::TableI => "Four-class accuracy per session, mean% (\u{b1}std over CV folds)",
        TableLayout::TableII => "One-versus-rest accuracy per class, mean% (\u{b1}std over CV folds)",
    };
    if layout == TableLayout::TableII {
        tasks.sort_by_key(|(t, _)| ClassLabel::from_str(t).map(|c| c.index()).unwrap_or(usize::MAX));
    }

    let mut header = vec![if layout == TableLayout::TableII { "Class".to_string() } else { "Task".to_string() }];
    header.extend(subjects.iter().map(|s| s.to_string()));
    header.push("Average".into());
    let mut rows = vec![header];
    for (task, cells) in tasks {
        let name = match (layout, ClassLabel::from_str(task)) {
            (TableLayout::TableII, Ok(c)) => c.display_name().to_string(),
            _ => task.clone(),
        };
        let mut row = vec![name];
        let (mut sm, mut ss, mut n) = (0.0, 0.0, 0usize);
        for s in &subjects {
            match cells.get(*s) {
                Some(r) => {
                    row.push(r.cell());
                    sm += r.mean_acc;
                    ss += r.std_acc;
                    n += 1;
                }
                None => row.push("-".into()),
            }
        }
        row.push(if n > 0 { format_cell(sm / n as f64, ss / n as f64) } else { "-".into() });
        rows.push(row);
    }

    let n_cols = rows[0].len();
    let widths: Vec<usize> =
        (0..n_cols).map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    let _ = writeln!(out, "{caption}");
    for (i, r) in rows.iter().enumerate() {
        let cells: Vec<String> = r.iter().zip(&widths).map(|(c, &w)| format!("{c:<w$}")).collect();
        let _ = writeln!(out, "| {} |", cells.join(" | "));
        if i == 0 {
            let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
            let _ = writeln!(out, "|-{}-|", rule.join("-|-"));
        }
    }
    out
}
