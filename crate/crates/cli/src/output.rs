//! CSV emission and parsing for simulation results.
//!
//! Reals are printed with six significant digits in `%g` style so that a
//! parsed file re-emits byte for byte.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use qrpad_core::scenario::{LinkUsageRow, NodeUsageRow, RawRow, SimulationResults, SummaryRow};
use serde::de::DeserializeOwned;

pub const SUMMARY_CSV: &str = "summary.csv";
pub const NODE_USAGE_CSV: &str = "node_usage.csv";
pub const LINK_USAGE_CSV: &str = "link_usage.csv";
pub const RAW_CSV: &str = "raw.csv";

const SUMMARY_HEADER: [&str; 4] = ["load", "metric", "mean", "stddev"];
const NODE_HEADER: [&str; 9] = [
    "load",
    "node",
    "services_mean",
    "cpu_used_mean",
    "cpu_total",
    "gpu_used_mean",
    "gpu_total",
    "mem_used_mean",
    "mem_total",
];
const LINK_HEADER: [&str; 5] = ["load", "link", "channels_mean", "bw_used_mean", "bw_total"];
const RAW_HEADER: [&str; 8] = [
    "iteration",
    "load",
    "accepted",
    "blocked",
    "acceptance_ratio",
    "revenue",
    "cost",
    "rc_ratio",
];

/// Formats `x` with six significant digits, like C's `%g`.
pub fn format_sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        format!(
            "{}e{}{:02}",
            trim_zeros(mantissa),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    } else {
        let decimals = (5 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_sig6).unwrap_or_default()
}

fn write_table<W: Write>(out: W, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary<W: Write>(out: W, rows: &[SummaryRow]) -> csv::Result<()> {
    write_table(
        out,
        &SUMMARY_HEADER,
        rows.iter().map(|r| {
            vec![
                r.load.to_string(),
                r.metric.name().to_string(),
                format_sig6(r.mean),
                format_sig6(r.stddev),
            ]
        }),
    )
}

pub fn write_node_usage<W: Write>(out: W, rows: &[NodeUsageRow]) -> csv::Result<()> {
    write_table(
        out,
        &NODE_HEADER,
        rows.iter().map(|r| {
            vec![
                r.load.to_string(),
                r.node.clone(),
                format_sig6(r.services_mean),
                format_sig6(r.cpu_used_mean),
                r.cpu_total.to_string(),
                format_sig6(r.gpu_used_mean),
                r.gpu_total.to_string(),
                format_sig6(r.mem_used_mean),
                r.mem_total.to_string(),
            ]
        }),
    )
}

pub fn write_link_usage<W: Write>(out: W, rows: &[LinkUsageRow]) -> csv::Result<()> {
    write_table(
        out,
        &LINK_HEADER,
        rows.iter().map(|r| {
            vec![
                r.load.to_string(),
                r.link.clone(),
                format_sig6(r.channels_mean),
                format_sig6(r.bw_used_mean),
                r.bw_total.to_string(),
            ]
        }),
    )
}

pub fn write_raw<W: Write>(out: W, rows: &[RawRow]) -> csv::Result<()> {
    write_table(
        out,
        &RAW_HEADER,
        rows.iter().map(|r| {
            vec![
                r.iteration.to_string(),
                r.load.to_string(),
                r.accepted.to_string(),
                r.blocked.to_string(),
                format_sig6(r.acceptance_ratio),
                format_sig6(r.revenue),
                format_sig6(r.cost),
                opt(r.rc_ratio),
            ]
        }),
    )
}

pub fn read_rows<T: DeserializeOwned, R: Read>(input: R) -> csv::Result<Vec<T>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

/// Writes the four result tables into `dir`, creating it if needed.
pub fn write_results(dir: &Path, results: &SimulationResults) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let to_io = |e: csv::Error| std::io::Error::other(e);
    write_summary(fs::File::create(dir.join(SUMMARY_CSV))?, &results.summary).map_err(to_io)?;
    write_node_usage(fs::File::create(dir.join(NODE_USAGE_CSV))?, &results.node_usage).map_err(to_io)?;
    write_link_usage(fs::File::create(dir.join(LINK_USAGE_CSV))?, &results.link_usage).map_err(to_io)?;
    write_raw(fs::File::create(dir.join(RAW_CSV))?, &results.raw).map_err(to_io)?;
    Ok(())
}

/// Reads back the tables written by [`write_results`].
pub fn read_results(dir: &Path) -> Result<SimulationResults, csv::Error> {
    let open = |name: &str| fs::File::open(dir.join(name)).map_err(csv::Error::from);
    Ok(SimulationResults {
        summary: read_rows(open(SUMMARY_CSV)?)?,
        node_usage: read_rows(open(NODE_USAGE_CSV)?)?,
        link_usage: read_rows(open(LINK_USAGE_CSV)?)?,
        raw: read_rows(open(RAW_CSV)?)?,
    })
}
