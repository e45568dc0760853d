//! Grouped binomial and multinomial datasets, CSV ingestion and the two
//! builtin reference datasets.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const INTERCEPT: &str = "(intercept)";

/// Finney (1947) insecticide potency assay: rotenone, deguelin and their mixture.
pub const FINNEY1947_CSV: &str = include_str!("../data/finney1947.csv");
/// Grazeffe et al. (2008) comet assay: DNA damage classes by gamma dose.
pub const GRAZEFFE2008_CSV: &str = include_str!("../data/grazeffe2008.csv");

/// One covariate pattern of grouped binomial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedRow {
    /// Covariates with the leading intercept 1.
    pub x: Vec<f64>,
    pub successes: u64,
    pub trials: u64,
}

/// Grouped binomial data: `(covariates, successes, trials)` per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedDataset {
    rows: Vec<GroupedRow>,
    covariate_names: Vec<String>,
}

impl GroupedDataset {
    /// `covariate_names` names every column of `x`, intercept included.
    pub fn new(rows: Vec<GroupedRow>, covariate_names: Vec<String>) -> Result<Self> {
        let dim = covariate_names.len();
        if dim == 0 {
            return Err(Error::Dataset("at least one covariate column is required".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.x.len() != dim {
                return Err(Error::Data {
                    row: i + 1,
                    column: "x".into(),
                    reason: format!("expected {dim} covariates, found {}", r.x.len()),
                });
            }
            if let Some(j) = r.x.iter().position(|v| !v.is_finite()) {
                return Err(Error::Data {
                    row: i + 1,
                    column: covariate_names[j].clone(),
                    reason: "covariate is not finite".into(),
                });
            }
            if r.trials == 0 {
                return Err(Error::Data {
                    row: i + 1,
                    column: "trials".into(),
                    reason: "trial count must be positive".into(),
                });
            }
            if r.successes > r.trials {
                return Err(Error::Data {
                    row: i + 1,
                    column: "successes".into(),
                    reason: format!("successes {} exceed trials {}", r.successes, r.trials),
                });
            }
        }
        Ok(GroupedDataset {
            rows,
            covariate_names,
        })
    }

    /// A dataset with no rows, used for prior-only runs.
    pub fn empty(covariate_names: Vec<String>) -> Result<Self> {
        Self::new(Vec::new(), covariate_names)
    }

    pub fn rows(&self) -> &[GroupedRow] {
        &self.rows
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    /// Number of regression coefficients (intercept included).
    pub fn dim(&self) -> usize {
        self.covariate_names.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Total number of Bernoulli trials.
    pub fn n_obs(&self) -> u64 {
        self.rows.iter().map(|r| r.trials).sum()
    }

    pub fn total_successes(&self) -> u64 {
        self.rows.iter().map(|r| r.successes).sum()
    }

    pub fn observed_proportions(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.successes as f64 / r.trials as f64)
            .collect()
    }

    pub fn design_matrix(&self) -> Matrix {
        let mut m = Matrix::zeros(self.rows.len(), self.dim());
        for (i, r) in self.rows.iter().enumerate() {
            for (j, v) in r.x.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        m
    }

    pub fn is_full_rank(&self) -> bool {
        self.design_matrix().rank() == self.dim()
    }

    pub fn check_full_rank(&self) -> Result<()> {
        let rank = self.design_matrix().rank();
        if rank < self.dim() {
            Err(Error::RankDeficient {
                rank,
                cols: self.dim(),
            })
        } else {
            Ok(())
        }
    }

    /// Expands every grouped row into single-trial rows.
    pub fn to_bernoulli(&self) -> GroupedDataset {
        let mut rows = Vec::with_capacity(self.n_obs() as usize);
        for r in &self.rows {
            for k in 0..r.trials {
                rows.push(GroupedRow {
                    x: r.x.clone(),
                    successes: u64::from(k < r.successes),
                    trials: 1,
                });
            }
        }
        GroupedDataset {
            rows,
            covariate_names: self.covariate_names.clone(),
        }
    }

    /// Same rows in the order given by `order`.
    pub fn permuted(&self, order: &[usize]) -> Result<GroupedDataset> {
        let mut seen = vec![false; self.rows.len()];
        if order.len() != self.rows.len() || order.iter().any(|&i| i >= seen.len() || std::mem::replace(&mut seen[i], true)) {
            return Err(Error::Dataset("row order is not a permutation".into()));
        }
        Ok(GroupedDataset {
            rows: order.iter().map(|&i| self.rows[i].clone()).collect(),
            covariate_names: self.covariate_names.clone(),
        })
    }

    /// SHA-256 over a canonical rendering of the rows.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.covariate_names.join(",").as_bytes());
        for r in &self.rows {
            h.update(b"\n");
            for v in &r.x {
                h.update(v.to_bits().to_le_bytes());
            }
            h.update(r.successes.to_le_bytes());
            h.update(r.trials.to_le_bytes());
        }
        hex(&h.finalize())
    }
}

/// One covariate pattern of multinomial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultinomialRow {
    pub x: Vec<f64>,
    pub counts: Vec<u64>,
}

/// Multinomial counts over `K` ordered categories per covariate pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultinomialDataset {
    rows: Vec<MultinomialRow>,
    covariate_names: Vec<String>,
    category_labels: Vec<String>,
}

impl MultinomialDataset {
    pub fn new(
        rows: Vec<MultinomialRow>,
        covariate_names: Vec<String>,
        category_labels: Vec<String>,
    ) -> Result<Self> {
        let k = category_labels.len();
        if k < 2 {
            return Err(Error::Dataset(format!("need at least 2 categories, got {k}")));
        }
        let dim = covariate_names.len();
        for (i, r) in rows.iter().enumerate() {
            if r.x.len() != dim {
                return Err(Error::Data {
                    row: i + 1,
                    column: "x".into(),
                    reason: format!("expected {dim} covariates, found {}", r.x.len()),
                });
            }
            if r.counts.len() != k {
                return Err(Error::Data {
                    row: i + 1,
                    column: "counts".into(),
                    reason: format!("expected {k} counts, found {}", r.counts.len()),
                });
            }
            if r.counts.iter().sum::<u64>() == 0 {
                return Err(Error::Data {
                    row: i + 1,
                    column: "counts".into(),
                    reason: "row has no observations".into(),
                });
            }
        }
        Ok(MultinomialDataset {
            rows,
            covariate_names,
            category_labels,
        })
    }

    pub fn rows(&self) -> &[MultinomialRow] {
        &self.rows
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn category_labels(&self) -> &[String] {
        &self.category_labels
    }

    pub fn categories(&self) -> usize {
        self.category_labels.len()
    }

    pub fn total_count(&self) -> u64 {
        self.rows.iter().flat_map(|r| &r.counts).sum()
    }

    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.covariate_names.join(",").as_bytes());
        h.update(b"|");
        h.update(self.category_labels.join(",").as_bytes());
        for r in &self.rows {
            h.update(b"\n");
            for v in &r.x {
                h.update(v.to_bits().to_le_bytes());
            }
            for c in &r.counts {
                h.update(c.to_le_bytes());
            }
        }
        hex(&h.finalize())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 of raw bytes, hex encoded.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// A covariate derived from one CSV column: `name`, `name^k` or `name/d^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariateTerm {
    pub column: String,
    pub divisor: f64,
    pub power: i32,
}

impl CovariateTerm {
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let bad = |why: &str| Error::Dataset(format!("bad covariate term `{spec}`: {why}"));
        let (base, power) = match spec.split_once('^') {
            Some((b, p)) => (b, p.trim().parse::<i32>().map_err(|_| bad("power must be an integer"))?),
            None => (spec, 1),
        };
        let (column, divisor) = match base.split_once('/') {
            Some((c, d)) => {
                let d = d.trim().parse::<f64>().map_err(|_| bad("divisor must be a number"))?;
                if d == 0.0 || !d.is_finite() {
                    return Err(bad("divisor must be non-zero"));
                }
                (c.trim(), d)
            }
            None => (base.trim(), 1.0),
        };
        if column.is_empty() {
            return Err(bad("empty column name"));
        }
        Ok(CovariateTerm {
            column: column.to_string(),
            divisor,
            power,
        })
    }

    fn apply(&self, v: f64) -> f64 {
        (v / self.divisor).powi(self.power)
    }

    fn label(&self) -> String {
        let mut s = self.column.clone();
        if self.divisor != 1.0 {
            s.push_str(&format!("/{}", self.divisor));
        }
        if self.power != 1 {
            s.push_str(&format!("^{}", self.power));
        }
        s
    }
}

struct Table {
    headers: Vec<String>,
    records: Vec<csv::StringRecord>,
}

impl Table {
    fn read<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.iter().map(str::to_string).collect();
        let records = rdr.records().collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Table { headers, records })
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Data {
                row: 0,
                column: name.to_string(),
                reason: format!("missing column (header has {})", self.headers.join(", ")),
            })
    }

    fn number(&self, row: usize, col: usize) -> Result<f64> {
        let cell = self.records[row].get(col).unwrap_or("");
        cell.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::Data {
                row: row + 1,
                column: self.headers[col].clone(),
                reason: format!("`{cell}` is not a finite number"),
            })
    }

    fn count(&self, row: usize, col: usize) -> Result<u64> {
        let cell = self.records[row].get(col).unwrap_or("");
        let v = self.number(row, col)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(Error::Data {
                row: row + 1,
                column: self.headers[col].clone(),
                reason: format!("`{cell}` is not a non-negative integer count"),
            });
        }
        Ok(v as u64)
    }

    fn covariates(&self, row: usize, terms: &[(CovariateTerm, usize)]) -> Result<Vec<f64>> {
        let mut x = Vec::with_capacity(terms.len() + 1);
        x.push(1.0);
        for (term, col) in terms {
            x.push(term.apply(self.number(row, *col)?));
        }
        Ok(x)
    }
}

fn resolve_terms(table: &Table, covariates: &[&str]) -> Result<Vec<(CovariateTerm, usize)>> {
    covariates
        .iter()
        .map(|spec| {
            let term = CovariateTerm::parse(spec)?;
            let col = table.column(&term.column)?;
            Ok((term, col))
        })
        .collect()
}

fn names_with_intercept(terms: &[(CovariateTerm, usize)]) -> Vec<String> {
    std::iter::once(INTERCEPT.to_string())
        .chain(terms.iter().map(|(t, _)| t.label()))
        .collect()
}

/// Reads grouped binomial CSV data; an intercept column is prepended.
pub fn parse_binomial_reader<R: Read>(
    reader: R,
    covariates: &[&str],
    success_col: &str,
    trial_col: &str,
) -> Result<GroupedDataset> {
    let table = Table::read(reader)?;
    let terms = resolve_terms(&table, covariates)?;
    let s_col = table.column(success_col)?;
    let t_col = table.column(trial_col)?;
    let mut rows = Vec::with_capacity(table.records.len());
    for i in 0..table.records.len() {
        let x = table.covariates(i, &terms)?;
        let successes = table.count(i, s_col)?;
        let trials = table.count(i, t_col)?;
        if successes > trials {
            return Err(Error::Data {
                row: i + 1,
                column: success_col.to_string(),
                reason: format!("successes {successes} exceed trials {trials}"),
            });
        }
        rows.push(GroupedRow { x, successes, trials });
    }
    GroupedDataset::new(rows, names_with_intercept(&terms))
}

pub fn parse_binomial_csv(
    path: impl AsRef<Path>,
    covariates: &[&str],
    success_col: &str,
    trial_col: &str,
) -> Result<GroupedDataset> {
    let file = std::fs::File::open(path)?;
    parse_binomial_reader(file, covariates, success_col, trial_col)
}

/// Reads multinomial CSV data; `count_cols` are the categories in order.
pub fn parse_multinomial_reader<R: Read>(
    reader: R,
    covariates: &[&str],
    count_cols: &[&str],
) -> Result<MultinomialDataset> {
    let table = Table::read(reader)?;
    let terms = resolve_terms(&table, covariates)?;
    let cols = count_cols
        .iter()
        .map(|c| table.column(c))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(table.records.len());
    for i in 0..table.records.len() {
        let x = table.covariates(i, &terms)?;
        let counts = cols
            .iter()
            .map(|&c| table.count(i, c))
            .collect::<Result<Vec<_>>>()?;
        rows.push(MultinomialRow { x, counts });
    }
    MultinomialDataset::new(
        rows,
        names_with_intercept(&terms),
        count_cols.iter().map(|s| s.to_string()).collect(),
    )
}

pub fn parse_multinomial_csv(
    path: impl AsRef<Path>,
    covariates: &[&str],
    count_cols: &[&str],
) -> Result<MultinomialDataset> {
    let file = std::fs::File::open(path)?;
    parse_multinomial_reader(file, covariates, count_cols)
}

/// Column names from the header row of a CSV file.
pub fn csv_header(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(std::fs::File::open(path)?);
    Ok(rdr.headers()?.iter().map(str::to_string).collect())
}

/// Builtin dataset names.
pub const BUILTIN_BINOMIAL: &[&str] = &["finney1947"];
pub const BUILTIN_MULTINOMIAL: &[&str] = &["grazeffe2008"];

/// Finney's poison data with covariates log-dose and rotenone/deguelin
/// indicators (mixture is the reference).
pub fn finney1947() -> GroupedDataset {
    parse_binomial_reader(
        FINNEY1947_CSV.as_bytes(),
        &["logdose", "rotenone", "deguelin"],
        "dead",
        "n",
    )
    .expect("builtin finney1947 data is valid")
}

/// Grazeffe's comet-assay counts with covariates `dose` and `dose^2`.
pub fn grazeffe2008() -> MultinomialDataset {
    grazeffe2008_with(&["dose", "dose^2"]).expect("builtin grazeffe2008 data is valid")
}

/// Grazeffe data with caller-chosen covariate terms (e.g. `dose/20`, `dose/20^2`).
pub fn grazeffe2008_with(covariates: &[&str]) -> Result<MultinomialDataset> {
    parse_multinomial_reader(
        GRAZEFFE2008_CSV.as_bytes(),
        covariates,
        &["none", "low", "intermediate", "high"],
    )
}

/// Default column layout of a builtin dataset's raw CSV.
pub fn builtin_csv(name: &str) -> Result<&'static str> {
    match name {
        "finney1947" => Ok(FINNEY1947_CSV),
        "grazeffe2008" => Ok(GRAZEFFE2008_CSV),
        other => Err(Error::UnknownDataset(other.to_string())),
    }
}
