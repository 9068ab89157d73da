//! Result tables, documents and histograms, each written behind a manifest
//! header. Only the header carries the timestamp; the data section is a pure
//! function of the manifest.

use std::io::Write;
use std::path::Path;

use recurlab::statevector::Histogram;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::Format;
use crate::CliError;

/// Histogram bars in an SVG.
pub const MAX_SVG_BUCKETS: u64 = 64;

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub subcommand: String,
    pub flags: Value,
    pub seed: u64,
    pub version: String,
    /// Seconds since the epoch (`SOURCE_DATE_EPOCH` when set).
    pub timestamp: u64,
}

impl Manifest {
    pub fn new(subcommand: &str, flags: Value, seed: u64) -> Self {
        let timestamp = std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or_else(|| {
                std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0)
            });
        Self {
            subcommand: subcommand.to_string(),
            flags,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp,
        }
    }

    fn compact(&self) -> String {
        serde_json::to_string(self).expect("manifest serializes")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl Cell {
    /// Non-finite numbers become typed strings.
    pub fn num(x: f64) -> Self {
        if x.is_finite() {
            Cell::Num(x)
        } else {
            Cell::Text(format!("non-finite:{x}"))
        }
    }

    pub fn int(x: impl TryInto<i64>) -> Self {
        Cell::Int(x.try_into().unwrap_or(i64::MAX))
    }

    pub fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }

    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => x.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Num(x) => json!(x),
            Cell::Text(s) => json!(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl ResultTable {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width matches the schema"
        );
        self.rows.push(row);
    }
}

#[derive(Clone, Debug)]
pub enum Output {
    Table(ResultTable),
    Document(Value),
    Histogram(Histogram),
}

impl Output {
    fn default_format(&self) -> Format {
        match self {
            Output::Table(_) | Output::Histogram(_) => Format::Csv,
            Output::Document(_) => Format::Json,
        }
    }
}

/// `--emit`, else the `--out` extension.
pub fn requested_format(
    emit: Option<Format>,
    out: Option<&Path>,
) -> Result<Option<Format>, CliError> {
    if emit.is_some() {
        return Ok(emit);
    }
    let Some(ext) = out
        .and_then(|p| p.extension())
        .map(|e| e.to_string_lossy().to_ascii_lowercase())
    else {
        return Ok(None);
    };
    match ext.as_str() {
        "csv" => Ok(Some(Format::Csv)),
        "json" => Ok(Some(Format::Json)),
        "svg" => Ok(Some(Format::SvgHistogram)),
        _ => Err(CliError::Usage(format!(
            "cannot infer an output format from .{ext}; pass --emit"
        ))),
    }
}

/// The full file contents: manifest header followed by the data section.
pub fn render(
    output: &Output,
    format: Option<Format>,
    manifest: &Manifest,
) -> Result<String, CliError> {
    let format = format.unwrap_or_else(|| output.default_format());
    let data = data_section(output, format)?;
    Ok(match format {
        Format::Csv => format!("# manifest: {}\n{data}", manifest.compact()),
        Format::SvgHistogram => format!(
            "<!-- manifest: {} -->\n{data}",
            manifest.compact().replace("--", "-\\u002d")
        ),
        Format::Json => {
            let data: Value = serde_json::from_str(&data).expect("data section is JSON");
            let manifest = serde_json::to_string_pretty(manifest).expect("manifest serializes");
            let data = serde_json::to_string_pretty(&data).expect("serializes");
            let indent = |t: String| t.replace('\n', "\n  ");
            format!(
                "{{\n  \"manifest\": {},\n  \"data\": {}\n}}\n",
                indent(manifest),
                indent(data)
            )
        }
    })
}

/// The deterministic part of the output.
pub fn data_section(output: &Output, format: Format) -> Result<String, CliError> {
    match (output, format) {
        (Output::Table(t), Format::Csv) => table_csv(t),
        (Output::Table(t), Format::Json) => Ok(table_json(t).to_string()),
        (Output::Document(d), Format::Json) => Ok(d.to_string()),
        (Output::Histogram(h), Format::Csv) => Ok(h.to_csv()),
        (Output::Histogram(h), Format::Json) => Ok(histogram_json(h).to_string()),
        (Output::Histogram(h), Format::SvgHistogram) => Ok(histogram_svg(h)),
        (Output::Document(_), f) => Err(CliError::Usage(format!(
            "this result is a JSON document; {f:?} is unavailable"
        ))),
        (Output::Table(_), Format::SvgHistogram) => Err(CliError::Usage(
            "svg-histogram is only available for sampled histograms".into(),
        )),
    }
}

fn table_csv(t: &ResultTable) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Runtime(format!("csv: {e}"));
    w.write_record(&t.columns).map_err(io)?;
    for row in &t.rows {
        w.write_record(row.iter().map(Cell::render)).map_err(io)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Runtime(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("utf-8 cells"))
}

fn table_json(t: &ResultTable) -> Value {
    json!({
        "columns": t.columns,
        "rows": t.rows.iter().map(|r| r.iter().map(Cell::json).collect::<Vec<_>>()).collect::<Vec<_>>(),
    })
}

fn histogram_json(h: &Histogram) -> Value {
    let counts: serde_json::Map<String, Value> = h
        .counts
        .iter()
        .map(|(&o, &c)| (h.bitstring(o), json!(c)))
        .collect();
    json!({ "width": h.width, "shots": h.shots(), "counts": counts })
}

/// Counts per contiguous outcome range; at most [`MAX_SVG_BUCKETS`] ranges of
/// equal size covering every outcome of the register.
pub fn histogram_buckets(h: &Histogram) -> Vec<(u64, u64, u64)> {
    let outcomes = 1u64 << h.width.min(63);
    let buckets = outcomes.min(MAX_SVG_BUCKETS);
    let span = outcomes / buckets;
    let mut counts = vec![0u64; buckets as usize];
    for (&o, &c) in &h.counts {
        counts[((o / span).min(buckets - 1)) as usize] += c;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(b, c)| (b as u64 * span, (b as u64 + 1) * span - 1, c))
        .collect()
}

fn histogram_svg(h: &Histogram) -> String {
    let buckets = histogram_buckets(h);
    let (bar, height, pad) = (12.0, 240.0, 20.0);
    let width = pad * 2.0 + bar * buckets.len() as f64;
    let top = buckets.iter().map(|b| b.2).max().unwrap_or(0).max(1) as f64;
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{}\" data-shots=\"{}\">\n",
        height + 2.0 * pad,
        h.shots()
    );
    for (i, &(lo, hi, c)) in buckets.iter().enumerate() {
        let bh = height * c as f64 / top;
        s.push_str(&format!(
            "<rect x=\"{:.1}\" y=\"{:.3}\" width=\"{:.1}\" height=\"{bh:.3}\" data-lo=\"{lo}\" data-hi=\"{hi}\" data-count=\"{c}\"><title>{}..{}: {c}</title></rect>\n",
            pad + bar * i as f64,
            pad + height - bh,
            bar - 1.0,
            h.bitstring(lo),
            h.bitstring(hi),
        ));
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_output(
    text: &str,
    path: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", p.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Runtime(format!("stdout: {e}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn manifest() -> Manifest {
        Manifest::new("test", json!({"a": "--x"}), 1)
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = ResultTable::new(&["a", "b"]);
        assert_eq!(
            data_section(&Output::Table(t), Format::Csv).unwrap(),
            "a,b\n"
        );
    }

    #[test]
    fn non_finite_cells_are_strings() {
        assert_eq!(Cell::num(f64::NAN), Cell::Text("non-finite:NaN".into()));
        assert_eq!(Cell::num(0.5), Cell::Num(0.5));
    }

    #[test]
    fn buckets_cover_every_shot() {
        let counts: BTreeMap<u64, u64> = (0..1024u64).map(|o| (o, o % 7 + 1)).collect();
        let h = Histogram { width: 10, counts };
        let b = histogram_buckets(&h);
        assert_eq!(b.len(), 64);
        assert_eq!(b.iter().map(|x| x.2).sum::<u64>(), h.shots());
        assert_eq!((b[0].0, b[0].1, b[63].1), (0, 15, 1023));
    }

    #[test]
    fn svg_manifest_comment_is_well_formed() {
        let h = Histogram {
            width: 1,
            counts: BTreeMap::from([(0, 3), (1, 4)]),
        };
        let s = render(
            &Output::Histogram(h),
            Some(Format::SvgHistogram),
            &manifest(),
        )
        .unwrap();
        let first = s.lines().next().unwrap();
        assert!(!first["<!--".len()..first.len() - "-->".len()].contains("--"));
    }

    #[test]
    fn extension_inference() {
        assert_eq!(
            requested_format(None, Some(Path::new("a.svg"))).unwrap(),
            Some(Format::SvgHistogram)
        );
        assert_eq!(
            requested_format(Some(Format::Json), Some(Path::new("a.csv"))).unwrap(),
            Some(Format::Json)
        );
        assert!(requested_format(None, Some(Path::new("a.txt"))).is_err());
        assert_eq!(requested_format(None, None).unwrap(), None);
    }
}
