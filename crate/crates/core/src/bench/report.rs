//! Report emission: fixed column order, 6-significant-digit formatting.

use super::evaluate::Metrics;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

/// 6 significant digits, deterministic.
fn fmt6(v: f64) -> String {
    format!("{v:.5e}")
}

const COLUMNS: &str = "group,count,mean_obj,mean_gap,obj_star,gap_star,worst_group_gap,time_s";

/// Renders metrics with one row per group plus a summary row. Column order
/// is fixed; starred and worst-group columns are only populated on the
/// summary row.
pub fn emit_report(metrics: &Metrics, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => {
            let mut out = String::new();
            out.push_str(COLUMNS);
            out.push('\n');
            for g in &metrics.per_group {
                out.push_str(&format!(
                    "{},{},{},{},,,,\n",
                    g.kind,
                    g.count,
                    fmt6(g.mean_obj),
                    fmt6(g.mean_gap),
                ));
            }
            let total: usize = metrics.per_group.iter().map(|g| g.count).sum();
            out.push_str(&format!(
                "overall,{},{},{},{},{},{},{}\n",
                total,
                fmt6(metrics.overall_obj),
                fmt6(metrics.overall_gap),
                metrics.obj_star.map(fmt6).unwrap_or_default(),
                metrics.gap_star.map(fmt6).unwrap_or_default(),
                fmt6(metrics.worst_group_gap),
                fmt6(metrics.time_s),
            ));
            out
        }
        ReportFormat::Markdown => {
            let mut out = String::new();
            out.push_str("| group | count | mean_obj | mean_gap | obj_star | gap_star | worst_group_gap | time_s |\n");
            out.push_str("|---|---|---|---|---|---|---|---|\n");
            for g in &metrics.per_group {
                out.push_str(&format!(
                    "| {} | {} | {} | {} |  |  |  |  |\n",
                    g.kind,
                    g.count,
                    fmt6(g.mean_obj),
                    fmt6(g.mean_gap),
                ));
            }
            let total: usize = metrics.per_group.iter().map(|g| g.count).sum();
            out.push_str(&format!(
                "| overall | {} | {} | {} | {} | {} | {} | {} |\n",
                total,
                fmt6(metrics.overall_obj),
                fmt6(metrics.overall_gap),
                metrics.obj_star.map(fmt6).unwrap_or_default(),
                metrics.gap_star.map(fmt6).unwrap_or_default(),
                fmt6(metrics.worst_group_gap),
                fmt6(metrics.time_s),
            ));
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::evaluate::{GroupMetrics, ReferenceKind};

    fn fixture() -> Metrics {
        Metrics {
            per_group: vec![
                GroupMetrics {
                    group_id: 0,
                    kind: "uniform".into(),
                    count: 4,
                    mean_obj: 3.8125,
                    mean_gap: 0.0425,
                },
                GroupMetrics {
                    group_id: 1,
                    kind: "cluster".into(),
                    count: 2,
                    mean_obj: 2.25,
                    mean_gap: 0.09,
                },
            ],
            overall_obj: (3.8125 * 4.0 + 2.25 * 2.0) / 6.0,
            overall_gap: (0.0425 * 4.0 + 0.09 * 2.0) / 6.0,
            worst_group_gap: 0.09,
            obj_star: Some(2.25),
            gap_star: Some(0.09),
            reference: ReferenceKind::Exact,
            time_s: 1.5,
        }
    }

    #[test]
    fn csv_golden() {
        let expect = "\
group,count,mean_obj,mean_gap,obj_star,gap_star,worst_group_gap,time_s
uniform,4,3.81250e0,4.25000e-2,,,,
cluster,2,2.25000e0,9.00000e-2,,,,
overall,6,3.29167e0,5.83333e-2,2.25000e0,9.00000e-2,9.00000e-2,1.50000e0
";
        assert_eq!(emit_report(&fixture(), ReportFormat::Csv), expect);
    }

    #[test]
    fn csv_round_trips_values() {
        let text = emit_report(&fixture(), ReportFormat::Csv);
        for line in text.lines().skip(1) {
            for field in line.split(',') {
                if field.is_empty() || field.parse::<f64>().is_ok() {
                    continue;
                }
                assert!(
                    field.chars().all(|c| c.is_alphabetic() || c == '_'),
                    "unparseable field '{field}'"
                );
            }
        }
        // Numeric fields re-format to the same 6-digit representation.
        let overall = text.lines().last().unwrap();
        let fields: Vec<&str> = overall.split(',').collect();
        let v: f64 = fields[2].parse().unwrap();
        assert_eq!(fmt6(v), fields[2]);
    }

    #[test]
    fn markdown_has_group_and_summary_rows() {
        let md = emit_report(&fixture(), ReportFormat::Markdown);
        let rows: Vec<&str> = md.lines().collect();
        assert_eq!(rows.len(), 2 + 2 + 1, "header, rule, 2 groups, summary");
        assert!(rows[2].starts_with("| uniform |"));
        assert!(rows[4].starts_with("| overall |"));
    }
}
