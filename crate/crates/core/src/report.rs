//! Artifact rendering: fixed-precision numbers, CSV tables, JSON documents.
//!
//! Everything a run writes to disk goes through here so that a fixed config
//! produces byte-identical artifacts regardless of parallelism degree:
//! floats render to 12 significant digits, CSV rows end in CRLF under a
//! mandatory header, and JSON keys follow struct declaration order.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ldp::LdpReport;
use crate::scalar::ExtReal;

/// 12-significant-digit scientific rendering; the one float format artifacts
/// use.  Negative zero prints as zero so equal values are equal bytes.
pub fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.11e}")
}

/// Rounds to 12 significant digits by formatting and parsing back; JSON
/// artifacts carry these so a reader sees the same digits as the CSV.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    sig12(x).parse().expect("sig12 output is a valid float")
}

/// CSV cell for an extended real: the finite rendering or `inf` / `-inf`.
pub fn ext_cell(v: ExtReal<f64>) -> String {
    match v {
        ExtReal::Finite(x) => sig12(x),
        ExtReal::PosInfinity => "inf".to_string(),
        ExtReal::NegInfinity => "-inf".to_string(),
    }
}

/// JSON value for an extended real: a number when finite, else a string.
pub fn ext_json(v: ExtReal<f64>) -> serde_json::Value {
    match v {
        ExtReal::Finite(x) => round12(x).into(),
        ExtReal::PosInfinity => "inf".into(),
        ExtReal::NegInfinity => "-inf".into(),
    }
}

/// A rendered table: fixed header, pre-formatted cells.
#[derive(Clone, Debug)]
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(
            row.len(),
            self.header.len(),
            "row arity must match the header"
        );
        self.rows.push(row);
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    /// RFC-4180 text: CRLF line endings, quoting only where needed.
    pub fn to_csv_string(&self) -> Result<String> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        writer
            .write_record(&self.header)
            .and_then(|()| self.rows.iter().try_for_each(|r| writer.write_record(r)))
            .map_err(|e| Error::invalid("csv", e.to_string()))?;
        let bytes = writer
            .into_inner()
            .map_err(|e| Error::invalid("csv", e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::invalid("csv", e.to_string()))
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        let text = self.to_csv_string()?;
        std::fs::write(path, text)
            .map_err(|e| Error::invalid("csv", format!("cannot write {}: {e}", path.display())))
    }
}

/// Pretty JSON with a trailing newline; key order is declaration order.
pub fn json_document(value: &impl Serialize) -> Result<String> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Error::invalid("json", e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = json_document(value)?;
    std::fs::write(path, text)
        .map_err(|e| Error::invalid("json", format!("cannot write {}: {e}", path.display())))
}

/// One rendered comparison row; see [`crate::ldp::LdpRow`] for semantics.
#[derive(Clone, Debug, Serialize)]
pub struct LdpRowDoc {
    pub n: usize,
    pub mass: f64,
    pub rate_estimate: serde_json::Value,
    pub neg_inf_rate: serde_json::Value,
    pub slack: f64,
    pub gap: Option<f64>,
}

/// JSON body for an LDP comparison table.
#[derive(Clone, Debug, Serialize)]
pub struct LdpReportDoc {
    pub variant: String,
    #[serde(rename = "box")]
    pub box_label: String,
    pub rows: Vec<LdpRowDoc>,
}

impl LdpReportDoc {
    pub fn from_report(report: &LdpReport<f64>) -> Self {
        LdpReportDoc {
            variant: report.variant.name().to_string(),
            box_label: report.box_query.label(),
            rows: report
                .rows
                .iter()
                .map(|r| LdpRowDoc {
                    n: r.n,
                    mass: round12(r.mass),
                    rate_estimate: ext_json(r.rate_estimate),
                    neg_inf_rate: ext_json(r.neg_inf_rate),
                    slack: round12(r.slack),
                    gap: r.gap.map(round12),
                })
                .collect(),
        }
    }
}

/// The fixed CSV layout for LDP comparison tables.
pub const LDP_CSV_HEADER: [&str; 8] = [
    "variant",
    "n",
    "box",
    "mass",
    "rate_estimate",
    "neg_inf_rate",
    "slack",
    "gap",
];

pub fn ldp_csv(report: &LdpReport<f64>) -> CsvTable {
    let mut table = CsvTable::new(&LDP_CSV_HEADER);
    let label = report.box_query.label();
    for row in &report.rows {
        table.push(vec![
            row.variant.name().to_string(),
            row.n.to_string(),
            label.clone(),
            sig12(row.mass),
            ext_cell(row.rate_estimate),
            ext_cell(row.neg_inf_rate),
            sig12(row.slack),
            row.gap.map(sig12).unwrap_or_default(),
        ]);
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ldp::{ldp_report, BoxQuery, Provenance};
    use crate::potential::{ObservableFamily, Potential};
    use crate::shift::{ShiftSpace, Word};

    #[test]
    fn sig12_renders_twelve_significant_digits() {
        assert_eq!(sig12(0.4812118250596035), "4.81211825060e-1");
        assert_eq!(sig12(1.0), "1.00000000000e0");
        assert_eq!(sig12(-0.256564253203), "-2.56564253203e-1");
        assert_eq!(sig12(0.0), "0.00000000000e0");
        assert_eq!(sig12(-0.0), "0.00000000000e0");
        assert_eq!(sig12(f64::INFINITY), "inf");
    }

    #[test]
    fn round12_is_idempotent_and_matches_the_rendering() {
        let x = std::f64::consts::PI;
        let r = round12(x);
        assert_eq!(round12(r), r);
        assert_eq!(sig12(r), sig12(x));
        assert_eq!(r, 3.14159265359);
    }

    #[test]
    fn csv_tables_use_crlf_and_quote_embedded_commas() {
        let mut table = CsvTable::new(&["a", "b"]);
        table.push(vec!["1".into(), "[0,1]x[2,3]".into()]);
        let text = table.to_csv_string().unwrap();
        assert_eq!(text, "a,b\r\n1,\"[0,1]x[2,3]\"\r\n");
    }

    #[test]
    #[should_panic(expected = "row arity")]
    fn csv_rows_must_match_the_header() {
        let mut table = CsvTable::new(&["a", "b"]);
        table.push(vec!["1".into()]);
    }

    #[test]
    fn json_documents_keep_declaration_order_and_end_with_newline() {
        #[derive(Serialize)]
        struct Doc {
            zebra: f64,
            apple: u32,
        }
        let text = json_document(&Doc {
            zebra: 0.5,
            apple: 3,
        })
        .unwrap();
        let z = text.find("zebra").unwrap();
        let a = text.find("apple").unwrap();
        assert!(z < a, "{text}");
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn ldp_tables_carry_the_pinned_columns() {
        let space = ShiftSpace::full_shift(2).unwrap();
        let f = Potential::zero(&space).unwrap();
        let ones = Potential::indicator(&space, &Word::new(vec![1])).unwrap();
        let family = ObservableFamily::new(&space, &[ones]).unwrap();
        let query = BoxQuery::closed(vec![0.8], vec![1.0]).unwrap();
        let report = ldp_report(&space, &f, &family, &query, &[4], Provenance::Gibbs).unwrap();

        let table = ldp_csv(&report);
        assert_eq!(table.header(), &LDP_CSV_HEADER);
        let text = table.to_csv_string().unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "variant,n,box,mass,rate_estimate,neg_inf_rate,slack,gap"
        );
        let row = lines.next().unwrap();
        assert!(row.starts_with("gibbs,4,"), "{row}");
        // mass = C(4,4)/16 = 0.0625 exactly.
        assert!(row.contains("6.25000000000e-2"), "{row}");

        let doc = LdpReportDoc::from_report(&report);
        let json = json_document(&doc).unwrap();
        assert!(json.contains("\"variant\": \"gibbs\""), "{json}");
        assert!(json.contains("\"box\""), "{json}");
    }

    #[test]
    fn infinite_rates_render_as_words_in_both_formats() {
        assert_eq!(ext_cell(ExtReal::NegInfinity), "-inf");
        assert_eq!(
            ext_json(ExtReal::<f64>::PosInfinity),
            serde_json::json!("inf")
        );
        assert_eq!(ext_json(ExtReal::Finite(0.5)), serde_json::json!(0.5));
    }
}
