//! AIC, BIC, KS/MAE on grouped cells, and comparison tables.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bayes::{dic, PosteriorChain};
use crate::data::{GroupedDataset, MultinomialDataset};
use crate::error::{Error, Result};
use crate::likelihood::{fitted_probabilities, log_likelihood};
use crate::links::LinkFamily;
use crate::mle::FitResult;
use crate::multinomial::{multinomial_metrics, MultinomialFit};

/// `−2 log L + 2p`.
pub fn aic(log_lik: f64, n_params: usize) -> f64 {
    -2.0 * log_lik + 2.0 * n_params as f64
}

/// `−2 log L + p ln n`, with `n` the number of Bernoulli trials.
pub fn bic(log_lik: f64, n_params: usize, n_obs: u64) -> f64 {
    -2.0 * log_lik + n_params as f64 * (n_obs as f64).ln()
}

/// Largest and mean absolute difference between observed and predicted cells.
pub fn ks_mae(observed: &[f64], predicted: &[f64]) -> Result<(f64, f64)> {
    if observed.len() != predicted.len() {
        return Err(Error::Dimension {
            expected: observed.len(),
            got: predicted.len(),
        });
    }
    if observed.is_empty() {
        return Ok((0.0, 0.0));
    }
    let (mut ks, mut sum) = (0.0f64, 0.0);
    for (o, p) in observed.iter().zip(predicted) {
        let e = (o - p).abs();
        ks = ks.max(e);
        sum += e;
    }
    Ok((ks, sum / observed.len() as f64))
}

/// KS/MAE with one cell per dataset row, observed value `s/t`.
pub fn binomial_ks_mae(data: &GroupedDataset, predicted: &[f64]) -> Result<(f64, f64)> {
    ks_mae(&data.observed_proportions(), predicted)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    /// Fingerprint of the dataset the model was fitted to.
    pub dataset: String,
    pub log_lik: f64,
    pub aic: Option<f64>,
    pub bic: Option<f64>,
    pub dic: Option<f64>,
    pub p_d: Option<f64>,
    pub ks: f64,
    pub mae: f64,
    pub n_params: usize,
    pub n_obs: u64,
}

impl ComparisonRow {
    pub fn from_fit(model: &str, fit: &FitResult, data: &GroupedDataset) -> Result<Self> {
        let (ks, mae) = binomial_ks_mae(data, &fit.fitted)?;
        Ok(ComparisonRow {
            model: model.to_string(),
            dataset: data.fingerprint(),
            log_lik: fit.log_lik,
            aic: Some(aic(fit.log_lik, fit.n_params)),
            bic: Some(bic(fit.log_lik, fit.n_params, fit.n_obs)),
            dic: None,
            p_d: None,
            ks,
            mae,
            n_params: fit.n_params,
            n_obs: fit.n_obs,
        })
    }

    /// Bayesian row: DIC from the chain, fit statistics at the posterior mean.
    pub fn from_chain(model: &str, chain: &PosteriorChain, data: &GroupedDataset, link: &LinkFamily) -> Result<Self> {
        let d = dic(chain, data, link)?;
        let mean = chain.mean_params();
        let fitted = fitted_probabilities(&mean, data, link)?;
        let (ks, mae) = binomial_ks_mae(data, &fitted)?;
        Ok(ComparisonRow {
            model: model.to_string(),
            dataset: data.fingerprint(),
            log_lik: log_likelihood(&mean, data, link)?,
            aic: None,
            bic: None,
            dic: Some(d.dic),
            p_d: Some(d.p_d),
            ks,
            mae,
            n_params: mean.len(),
            n_obs: data.n_obs(),
        })
    }

    /// Multinomial row; BIC is not reported.
    pub fn from_multinomial(model: &str, fit: &MultinomialFit, data: &MultinomialDataset) -> Result<Self> {
        let m = multinomial_metrics(fit, data)?;
        Ok(ComparisonRow {
            model: model.to_string(),
            dataset: data.fingerprint(),
            log_lik: m.log_lik,
            aic: Some(m.aic),
            bic: None,
            dic: None,
            p_d: None,
            ks: m.ks,
            mae: m.mae,
            n_params: m.n_params,
            n_obs: data.total_count(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SortKey {
    Aic,
    Dic,
}

/// Sorts rows by the criterion (missing values last), ties broken by name.
/// All rows must come from the same dataset.
pub fn compare(mut rows: Vec<ComparisonRow>, key: SortKey) -> Result<Vec<ComparisonRow>> {
    if let Some(first) = rows.first() {
        if let Some(other) = rows.iter().find(|r| r.dataset != first.dataset) {
            return Err(Error::Mismatch(format!(
                "models `{}` and `{}` were fitted to different datasets",
                first.model, other.model
            )));
        }
    }
    let crit = |r: &ComparisonRow| match key {
        SortKey::Aic => r.aic,
        SortKey::Dic => r.dic,
    };
    rows.sort_by(|a, b| match (crit(a), crit(b)) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
    .then_with(|| a.model.cmp(&b.model)));
    Ok(rows)
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.prec$}"))
}

/// Aligned plain-text table.
pub fn render_text(rows: &[ComparisonRow]) -> String {
    let header = ["model", "logL", "AIC", "BIC", "DIC", "KS", "MAE", "p"];
    let body: Vec<[String; 8]> = rows
        .iter()
        .map(|r| {
            [
                r.model.clone(),
                format!("{:.2}", r.log_lik),
                opt(r.aic, 2),
                opt(r.bic, 2),
                opt(r.dic, 2),
                format!("{:.4}", r.ks),
                format!("{:.4}", r.mae),
                r.n_params.to_string(),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[String]| {
        for (i, (c, w)) in cells.iter().zip(widths).enumerate() {
            if i == 0 {
                let _ = write!(out, "{c:<w$}");
            } else {
                let _ = write!(out, "  {c:>w$}");
            }
        }
        out.push('\n');
    };
    line(&mut out, &header.map(String::from));
    for row in &body {
        line(&mut out, row);
    }
    out
}

pub fn write_csv<W: Write>(rows: &[ComparisonRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["model", "log_lik", "aic", "bic", "dic", "p_d", "ks", "mae", "n_params", "n_obs"])?;
    let cell = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    for r in rows {
        out.write_record([
            r.model.clone(),
            r.log_lik.to_string(),
            cell(r.aic),
            cell(r.bic),
            cell(r.dic),
            cell(r.p_d),
            r.ks.to_string(),
            r.mae.to_string(),
            r.n_params.to_string(),
            r.n_obs.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn criteria_examples() {
        assert!((aic(-370.34, 5) - 750.68).abs() < 0.01);
        assert!((bic(-370.34, 5, 818) - 774.22).abs() < 0.03);
        assert_eq!(aic(0.0, 0), 0.0);
    }

    #[test]
    fn ks_mae_basic() {
        assert_eq!(ks_mae(&[0.1, 0.5], &[0.1, 0.5]).unwrap(), (0.0, 0.0));
        let (ks, mae) = ks_mae(&[0.0, 0.5], &[0.2, 0.4]).unwrap();
        assert!((ks - 0.2).abs() < 1e-15 && (mae - 0.15).abs() < 1e-15);
        assert!(ks_mae(&[0.1], &[]).is_err());
    }

    fn row(model: &str, aic: f64, dataset: &str) -> ComparisonRow {
        ComparisonRow {
            model: model.into(),
            dataset: dataset.into(),
            log_lik: -aic / 2.0,
            aic: Some(aic),
            bic: None,
            dic: None,
            p_d: None,
            ks: 0.0,
            mae: 0.0,
            n_params: 0,
            n_obs: 1,
        }
    }

    #[test]
    fn compare_sorts_with_name_tiebreak() {
        let rows = vec![row("b", 2.0, "d"), row("c", 1.0, "d"), row("a", 2.0, "d")];
        let out = compare(rows, SortKey::Aic).unwrap();
        let names: Vec<&str> = out.iter().map(|r| r.model.as_str()).collect();
        assert_eq!(names, ["c", "a", "b"]);
    }

    #[test]
    fn compare_rejects_mixed_datasets() {
        assert!(compare(vec![row("a", 1.0, "x"), row("b", 1.0, "y")], SortKey::Aic).is_err());
    }

    #[test]
    fn text_table_is_aligned() {
        let t = render_text(&[row("weibull", 750.69, "d"), row("logit", 756.8, "d")]);
        let lens: Vec<usize> = t.lines().map(str::len).collect();
        assert!(lens.windows(2).all(|w| w[0] == w[1]), "{t}");
    }
}
