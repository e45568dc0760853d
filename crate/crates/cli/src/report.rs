use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use skewlink::bayes::{EmpiricalBayes, ParamSummary};
use skewlink::selection::ComparisonRow;
use skewlink::PriorSpec;

use crate::args::Format;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    /// SHA-256 over the parsed rows and column names.
    pub fingerprint: String,
    pub rows: usize,
    /// Bernoulli trials (binomial) or total count (multinomial).
    pub n_obs: u64,
    pub covariates: Vec<String>,
    pub categories: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub name: String,
    pub value: f64,
    /// Standard error (MLE) or posterior standard deviation (Bayes).
    pub se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesInfo {
    pub seed: u64,
    pub burn_in: usize,
    pub kept: usize,
    pub thin: usize,
    pub acceptance_rate: f64,
    pub prior: PriorSpec,
    pub empirical_bayes: Option<EmpiricalBayes>,
    pub summary: Vec<ParamSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model: String,
    pub method: String,
    /// Component number for multinomial fits.
    pub component: Option<usize>,
    pub converged: bool,
    pub estimates: Vec<Estimate>,
    pub log_lik: f64,
    pub n_params: usize,
    pub aic: Option<f64>,
    pub bic: Option<f64>,
    pub dic: Option<f64>,
    pub p_d: Option<f64>,
    pub ks: Option<f64>,
    pub mae: Option<f64>,
    pub note: Option<String>,
    pub bayes: Option<BayesInfo>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub title: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(title: &str, header: &[&str]) -> Self {
        Table {
            title: title.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub dataset: DatasetInfo,
    pub settings: serde_json::Value,
    pub models: Vec<ModelReport>,
    pub comparison: Vec<ComparisonRow>,
    /// Observed-vs-expected discrepancies worth a reader's attention.
    pub flags: Vec<String>,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

pub fn fmt_opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.prec$}"))
}

fn render_table(t: &Table) -> String {
    let mut widths: Vec<usize> = t.header.iter().map(String::len).collect();
    for r in &t.rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let _ = writeln!(out, "{}", t.title);
    let line = |out: &mut String, cells: &[String]| {
        let mut s = String::new();
        for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
            if i == 0 {
                let _ = write!(s, "{c:<w$}");
            } else {
                let _ = write!(s, "  {c:>w$}");
            }
        }
        out.push_str(s.trim_end());
        out.push('\n');
    };
    line(&mut out, &t.header);
    let total: usize = widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1);
    out.push_str(&"-".repeat(total));
    out.push('\n');
    for r in &t.rows {
        line(&mut out, r);
    }
    out
}

fn csv_cell(c: &str) -> String {
    if c.contains([',', '"', '\n']) {
        format!("\"{}\"", c.replace('"', "\"\""))
    } else {
        c.to_string()
    }
}

impl Report {
    pub fn render(&self, format: Format) -> Result<String, serde_json::Error> {
        Ok(match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self)?;
                s.push('\n');
                s
            }
            Format::Text => {
                let d = &self.dataset;
                let mut out = format!(
                    "dataset {} ({} rows, n = {}, sha256 {})\n\n",
                    d.name, d.rows, d.n_obs, d.fingerprint
                );
                for t in &self.tables {
                    out.push_str(&render_table(t));
                    out.push('\n');
                }
                for f in &self.flags {
                    let _ = writeln!(out, "FLAG: {f}");
                }
                out
            }
            Format::Csv => {
                let mut out = String::new();
                for (i, t) in self.tables.iter().enumerate() {
                    if i > 0 {
                        out.push('\n');
                    }
                    let _ = writeln!(out, "# {}", t.title);
                    for r in std::iter::once(&t.header).chain(&t.rows) {
                        let cells: Vec<String> = r.iter().map(|c| csv_cell(c)).collect();
                        let _ = writeln!(out, "{}", cells.join(","));
                    }
                }
                out
            }
        })
    }
}
