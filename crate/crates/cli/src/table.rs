//! Convergence tables as CSV: `elements,h_bar,l1_error,eoc`.

use std::path::Path;

use moverfv::EocRecord;

use crate::error::{CliError, CliResult};

pub const EOC_HEADER: [&str; 4] = ["elements", "h_bar", "l1_error", "eoc"];

/// Renders `records` with `h_bar` and `l1_error` at full precision and the
/// EOC rounded to two decimals (blank on the first row).
pub fn render_eoc_csv(records: &[EocRecord]) -> CliResult<String> {
    if records.is_empty() {
        return Err(CliError::Validation("empty convergence table".into()));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Validation(format!("csv: {e}"));
    w.write_record(EOC_HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.elements.to_string(),
            format!("{:e}", r.h_bar),
            format!("{:e}", r.l1_error),
            r.eoc_display(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Validation(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
}

pub fn write_eoc_csv(records: &[EocRecord], path: &Path) -> CliResult<()> {
    std::fs::write(path, render_eoc_csv(records)?).map_err(|e| CliError::io(path, e))
}

/// One parsed CSV row; `eoc` is the two-decimal display value.
#[derive(Clone, Debug, PartialEq)]
pub struct EocRow {
    pub elements: usize,
    pub h_bar: f64,
    pub l1_error: f64,
    pub eoc: Option<f64>,
}

pub fn parse_eoc_csv(text: &str, path: &Path) -> CliResult<Vec<EocRow>> {
    let bad = |m: String| CliError::Parse {
        path: path.to_path_buf(),
        message: m,
    };
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| bad(e.to_string()))?;
    if header.iter().ne(EOC_HEADER) {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let field = |i: usize| rec.get(i).unwrap_or("");
            let num = |i: usize| field(i).parse::<f64>().map_err(|_| bad(format!("bad number '{}'", field(i))));
            Ok(EocRow {
                elements: field(0).parse().map_err(|_| bad(format!("bad count '{}'", field(0))))?,
                h_bar: num(1)?,
                l1_error: num(2)?,
                eoc: if field(3).is_empty() { None } else { Some(num(3)?) },
            })
        })
        .collect()
}

pub fn read_eoc_csv(path: &Path) -> CliResult<Vec<EocRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_eoc_csv(&text, path)
}
