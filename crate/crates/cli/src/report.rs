//! Bit-stable report emission: JSON with sorted keys and CSV, floats printed
//! with 17 significant digits so parse-back recovers every f64 exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::CliResult;
use crate::experiment::EquivalenceReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl ReportFormat {
    pub fn from_str(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Some(ReportFormat::Json),
            "csv" => Some(ReportFormat::Csv),
            _ => None,
        }
    }
}

/// 17 significant digits; round-trips f64 exactly.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    match x {
        Some(v) => fmt_float(v),
        None => "null".to_string(),
    }
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("string serialization cannot fail")
}

/// Render the report as JSON with alphabetically ordered keys.
pub fn render_json(r: &EquivalenceReport) -> String {
    let mut out = String::new();
    out.push_str("{\n  \"aggregates\": {\n");
    let a = &r.aggregates;
    let _ = write!(
        out,
        "    \"checks\": {{\"lower_bounded\": {}, \"no_growth_trend\": {}, \"q_spread_ok\": {}, \"upper_bounded\": {}}},\n",
        a.checks.lower_bounded, a.checks.no_growth_trend, a.checks.q_spread_ok, a.checks.upper_bounded
    );
    out.push_str("    \"family_trends\": [");
    for (i, t) in a.family_trends.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(
            out,
            "{{\"family\": {}, \"rel_trend\": {}, \"slope\": {}}}",
            json_str(&t.family),
            fmt_float(t.rel_trend),
            fmt_float(t.slope)
        );
    }
    out.push_str("],\n");
    let _ = write!(out, "    \"kit_c0\": {},\n", fmt_opt(a.kit_c0));
    let _ = write!(out, "    \"kit_kappa\": {},\n", fmt_opt(a.kit_kappa));
    let _ = write!(out, "    \"kit_theta_l2\": {},\n", fmt_opt(a.kit_theta_l2));
    let _ = write!(out, "    \"max_q_spread\": {},\n", fmt_opt(a.max_q_spread));
    let _ = write!(
        out,
        "    \"max_ratio_upper\": {},\n",
        fmt_opt(a.max_ratio_upper)
    );
    let _ = write!(
        out,
        "    \"min_certificate_ratio\": {}\n",
        fmt_opt(a.min_certificate_ratio)
    );
    out.push_str("  },\n  \"rows\": [\n");
    for (i, row) in r.rows.iter().enumerate() {
        out.push_str("    {");
        let _ = write!(out, "\"bnorm_lower\": {}, ", fmt_float(row.bnorm_lower));
        let _ = write!(out, "\"bnorm_upper\": {}, ", fmt_float(row.bnorm_upper));
        let _ = write!(out, "\"certificate\": {}, ", fmt_opt(row.certificate));
        let _ = write!(out, "\"converged\": {}, ", row.converged);
        out.push_str("\"empirical\": {");
        for (j, (q, v)) in row.empirical.iter().enumerate() {
            if j > 0 {
                out.push_str(", ");
            }
            let _ = write!(out, "{}: {}", json_str(q), fmt_float(*v));
        }
        out.push_str("}, ");
        let _ = write!(out, "\"family\": {}, ", json_str(&row.family));
        let _ = write!(out, "\"label\": {}, ", json_str(&row.label));
        let _ = write!(out, "\"q_spread\": {}, ", fmt_opt(row.q_spread));
        let _ = write!(out, "\"ratio_upper\": {}, ", fmt_opt(row.ratio_upper));
        let _ = write!(out, "\"restarts_used\": {}, ", row.restarts_used);
        let _ = write!(out, "\"size\": {}", fmt_float(row.size));
        out.push('}');
        if i + 1 < r.rows.len() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str("  ]\n}\n");
    out
}

/// Render the report as CSV. Row records come first, then aggregate, trend,
/// and check records; numeric content matches the JSON rendering exactly.
pub fn render_csv(r: &EquivalenceReport) -> String {
    let q_labels: Vec<String> = r
        .rows
        .first()
        .map(|row| row.empirical.iter().map(|(q, _)| q.clone()).collect())
        .unwrap_or_default();
    let mut out = String::new();
    out.push_str("record,family,label,size,bnorm_lower,bnorm_upper,certificate");
    for q in &q_labels {
        let _ = write!(out, ",emp_{q}");
    }
    out.push_str(",ratio_upper,q_spread,value\n");
    let blank_emp = q_labels.len();
    for row in &r.rows {
        let _ = write!(
            out,
            "row,{},{},{},{},{},{}",
            row.family,
            row.label,
            fmt_float(row.size),
            fmt_float(row.bnorm_lower),
            fmt_float(row.bnorm_upper),
            row.certificate.map(fmt_float).unwrap_or_default()
        );
        for (_, v) in &row.empirical {
            let _ = write!(out, ",{}", fmt_float(*v));
        }
        let _ = write!(
            out,
            ",{},{},\n",
            row.ratio_upper.map(fmt_float).unwrap_or_default(),
            row.q_spread.map(fmt_float).unwrap_or_default()
        );
    }
    let mut aggregate_line = |label: &str, family: &str, v: Option<f64>| {
        let _ = write!(out, "aggregate,{family},{label},,,,");
        for _ in 0..blank_emp {
            out.push(',');
        }
        let _ = write!(out, ",,,{}\n", v.map(fmt_float).unwrap_or_default());
    };
    let a = &r.aggregates;
    aggregate_line("max_ratio_upper", "", a.max_ratio_upper);
    aggregate_line("min_certificate_ratio", "", a.min_certificate_ratio);
    aggregate_line("max_q_spread", "", a.max_q_spread);
    aggregate_line("kit_kappa", "", a.kit_kappa);
    aggregate_line("kit_c0", "", a.kit_c0);
    aggregate_line("kit_theta_l2", "", a.kit_theta_l2);
    for t in &a.family_trends {
        aggregate_line("trend_slope", &t.family, Some(t.slope));
        aggregate_line("trend_rel", &t.family, Some(t.rel_trend));
    }
    for (name, v) in [
        ("check_lower_bounded", a.checks.lower_bounded),
        ("check_no_growth_trend", a.checks.no_growth_trend),
        ("check_q_spread_ok", a.checks.q_spread_ok),
        ("check_upper_bounded", a.checks.upper_bounded),
    ] {
        aggregate_line(name, "", Some(if v { 1.0 } else { 0.0 }));
    }
    out
}

pub fn render_report(r: &EquivalenceReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => render_json(r),
        ReportFormat::Csv => render_csv(r),
    }
}

/// Write the report; output is byte-identical for identical reports.
pub fn emit_report(
    r: &EquivalenceReport,
    format: ReportFormat,
    path: impl AsRef<Path>,
) -> CliResult<()> {
    std::fs::write(path, render_report(r, format))?;
    Ok(())
}
