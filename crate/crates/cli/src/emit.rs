//! Writing a [`ResultSet`] as CSV, JSON or plot data.

use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use mclab_core::report::fmt_real;

use crate::results::{ResultSet, Row};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Plotdata,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "plotdata" => Ok(Format::Plotdata),
            other => Err(format!("unknown format {other:?}")),
        }
    }
}

/// CSV rows under a single `#` comment line carrying the run time; the body
/// from the header on depends only on the scenario and seeds.
pub fn csv_string(result: &ResultSet) -> String {
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let mut out = format!(
        "# mclab {} scenario={} hash={} generated_unix={stamp}\n",
        result.tool_version, result.scenario, result.scenario_hash
    );
    out.push_str(&csv_body(result));
    out
}

/// Header and rows without the comment line.
pub fn csv_body(result: &ResultSet) -> String {
    let mut out = String::from(Row::CSV_HEADER);
    out.push('\n');
    for r in &result.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.grid_index,
            r.family,
            r.size,
            r.trial,
            r.analysis,
            r.quantity,
            fmt_real(r.value)
        ));
    }
    out
}

/// Drops leading `#` comment lines.
pub fn strip_csv_comments(text: &str) -> &str {
    let mut rest = text;
    while rest.starts_with('#') {
        rest = rest.find('\n').map_or("", |i| &rest[i + 1..]);
    }
    rest
}

pub fn json_string(result: &ResultSet) -> String {
    let mut s = serde_json::to_string_pretty(result).expect("result sets serialize");
    s.push('\n');
    s
}

/// One `# label` block of `x y` lines per series, blocks separated by a blank line.
pub fn plotdata_string(result: &ResultSet) -> String {
    let mut out = String::new();
    for (i, s) in result.series.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("# {}\n", s.label));
        for (x, y) in s.x.iter().zip(&s.y) {
            out.push_str(&format!("{} {}\n", fmt_real(*x), fmt_real(*y)));
        }
    }
    out
}

pub fn render(format: Format, result: &ResultSet) -> String {
    match format {
        Format::Csv => csv_string(result),
        Format::Json => json_string(result),
        Format::Plotdata => plotdata_string(result),
    }
}

pub fn emit(format: Format, result: &ResultSet, path: &Path) -> std::io::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(render(format, result).as_bytes())
}
