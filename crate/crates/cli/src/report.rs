//! Output file formats. Every real number is written with 17 significant
//! digits in scientific notation.

use serde::Serialize;
use steklov_core::bounds::{BoundReport, CSV_HEADER};
use steklov_core::spectrum::SpectrumTable;

use crate::pipeline::IdentityRow;

pub const STEKLOV_FILE: &str = "spectrum_steklov.csv";
pub const LAPLACIAN_FILE: &str = "spectrum_laplacian.csv";
pub const BOUNDS_FILE: &str = "bounds_report.csv";
pub const IDENTITIES_FILE: &str = "identities_report.csv";
pub const WEYL_FILE: &str = "weyl_ratio.dat";
pub const SUMMARY_FILE: &str = "summary.json";

pub const SPECTRUM_HEADER: &str = "j,value,multiplicity,mode";
pub const IDENTITIES_HEADER: &str = "domain,refinement,h,j,check,value,lo,hi,slack,pass";

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// First `count` flattened eigenvalues with the multiplicity and mode of
/// their entry.
pub fn spectrum_csv(table: &SpectrumTable, count: usize) -> String {
    let mut out = format!("{SPECTRUM_HEADER}\n");
    for (j, (_, e)) in table.iter_flat().take(count).enumerate() {
        out.push_str(&format!("{j},{},{},{}\n", num(e.value), e.multiplicity, e.mode_degree));
    }
    out
}

pub fn bounds_csv<'a>(reports: impl IntoIterator<Item = &'a BoundReport>) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for r in reports {
        out.push_str(&r.csv_rows());
    }
    out
}

pub fn identities_csv<'a>(rows: impl IntoIterator<Item = (&'a str, &'a IdentityRow)>) -> String {
    let mut out = format!("{IDENTITIES_HEADER}\n");
    for (domain, r) in rows {
        out.push_str(&format!(
            "{domain},{},{},{},{},{},{},{},{},{}\n",
            r.refinement,
            r.h.map(num).unwrap_or_default(),
            r.j,
            r.check,
            num(r.value),
            num(r.lo),
            num(r.hi),
            num(r.slack()),
            r.pass
        ));
    }
    out
}

/// Two whitespace-separated columns `j ratio`.
pub fn weyl_dat(rows: &[(usize, f64)]) -> String {
    let mut out = String::from("# j ratio\n");
    for (j, r) in rows {
        out.push_str(&format!("{j} {}\n", num(*r)));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
    /// The run stopped on an error; outputs are partial.
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckSummary {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseSummary {
    pub id: String,
    pub a: f64,
    pub kappa_minus: f64,
    pub kappa_plus: f64,
    pub kappa_tilde: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub status: Status,
    pub geometry: String,
    pub method: String,
    pub count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<CaseSummary>,
    pub checks: Vec<CheckSummary>,
    pub passed: usize,
    pub failed: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Summary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}
