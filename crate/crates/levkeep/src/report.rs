//! Rendering of [`RunReport`](crate::flow::RunReport)s as CSV rows and
//! human-readable summaries.
//!
//! The CSV schema is stable so sweep output can be concatenated across runs
//! and machines: counters are normalized per initial AND node, times are in
//! seconds.

use crate::flow::RunReport;

/// Column names matching [`csv_row`].
pub fn csv_header() -> &'static str {
    "circuit,engine,operator,initial_ands,final_ands,final_level,\
     ntl_per_node,ntr_per_node,ipto_per_node,level_maint_seconds,total_seconds"
}

/// One sweep result as a CSV line (no trailing newline).
pub fn csv_row(circuit: &str, r: &RunReport) -> String {
    let v = r.initial_ands.max(1) as f64;
    format!(
        "{},{},{},{},{},{},{:.4},{:.4},{:.4},{:.6},{:.6}",
        circuit,
        r.engine,
        r.operator,
        r.initial_ands,
        r.final_ands,
        r.final_level,
        r.stats.ntl as f64 / v,
        r.stats.ntr as f64 / v,
        r.stats.ipto as f64 / v,
        r.stats.level_maint_nanos as f64 / 1e9,
        r.total_nanos as f64 / 1e9,
    )
}

/// Multi-line block for `--stats` output.
pub fn human_summary(circuit: &str, r: &RunReport) -> String {
    let mut s = String::new();
    s.push_str(&format!("{circuit}: {} / {}\n", r.engine, r.operator));
    s.push_str(&format!(
        "  size   {} -> {} ANDs ({:+})\n",
        r.initial_ands,
        r.final_ands,
        r.final_ands as i64 - r.initial_ands as i64
    ));
    s.push_str(&format!(
        "  level  {} -> {} (budget {})\n",
        r.initial_level, r.final_level, r.lmax
    ));
    s.push_str(&format!(
        "  sites  {} visited, {} accepted, {} over budget\n",
        r.sites, r.accepted, r.rejected_level
    ));
    s.push_str(&format!(
        "  maint  ntl {} ntr {} ipto {}  (max extended set {})\n",
        r.stats.ntl, r.stats.ntr, r.stats.ipto, r.max_extended
    ));
    s.push_str(&format!(
        "  time   {:.4}s total, {:.4}s level maintenance\n",
        r.total_nanos as f64 / 1e9,
        r.stats.level_maint_nanos as f64 / 1e9
    ));
    s
}
