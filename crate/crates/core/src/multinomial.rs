//! Multinomial responses through the continuation-ratio reparameterization
//! `p₁ = θ₁`, `p_k = θ_k Π_{ℓ<k} (1 − θ_ℓ)`: the likelihood factors into
//! `K − 1` independent binomial likelihoods, one per `θ_k`.

use serde::{Deserialize, Serialize};

use crate::bayes::{posterior_summary, run_mcmc, McmcOptions, PosteriorChain, PriorSpec};
use crate::data::{GroupedDataset, GroupedRow, MultinomialDataset};
use crate::error::{Error, Result};
use crate::likelihood::{fitted_probabilities, linear_predictor, log_likelihood};
use crate::links::LinkFamily;
use crate::mle::{fit_mle, FitOptions, FitResult};
use crate::parallel::par_map;
use crate::selection::{aic, ks_mae};

/// Binary dataset `Z_k` for each of the first `K − 1` categories:
/// successes are the count of category `k`, trials the counts of categories
/// `k..K`. Rows with no remaining trials are dropped.
pub fn decompose(data: &MultinomialDataset) -> Vec<GroupedDataset> {
    let k = data.categories();
    (0..k - 1)
        .map(|c| {
            let rows = data
                .rows()
                .iter()
                .filter_map(|r| {
                    let trials: u64 = r.counts[c..].iter().sum();
                    (trials > 0).then(|| GroupedRow {
                        x: r.x.clone(),
                        successes: r.counts[c],
                        trials,
                    })
                })
                .collect();
            GroupedDataset::new(rows, data.covariate_names().to_vec()).expect("decomposed rows are valid")
        })
        .collect()
}

/// Category probabilities from conditional probabilities `θ₁ … θ_{K−1}`.
pub fn probs_from_thetas(theta: &[f64]) -> Vec<f64> {
    let mut p = Vec::with_capacity(theta.len() + 1);
    let mut rest = 1.0;
    for &t in theta {
        p.push(t * rest);
        rest *= 1.0 - t;
    }
    p.push(rest);
    p
}

/// Inverse of [`probs_from_thetas`]: `θ_k = p_k / (1 − Σ_{ℓ<k} p_ℓ)`.
/// A zero remainder gives `θ_k = 0`.
pub fn thetas_from_probs(p: &[f64]) -> Vec<f64> {
    let mut theta = Vec::with_capacity(p.len().saturating_sub(1));
    let mut rest = 1.0;
    for &pk in &p[..p.len().saturating_sub(1)] {
        theta.push(if rest > 0.0 { pk / rest } else { 0.0 });
        rest -= pk;
    }
    theta
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum MultinomialMethod {
    Mle(FitOptions),
    /// One prior per component, or a single prior shared by all of them.
    Bayes { priors: Vec<PriorSpec>, mcmc: McmcOptions },
}

/// `K − 1` binary fits that together describe the category probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultinomialFit {
    /// Link family shared by the components (shape is per component).
    pub link: LinkFamily,
    /// For Bayesian fits: parameters at the posterior mean, posterior SDs in
    /// place of standard errors.
    pub sub_fits: Vec<FitResult>,
    pub chains: Option<Vec<PosteriorChain>>,
    pub converged: bool,
    pub category_labels: Vec<String>,
}

impl MultinomialFit {
    pub fn n_params(&self) -> usize {
        self.sub_fits.iter().map(|f| f.n_params).sum()
    }

    /// Conditional probabilities `θ_k(x)`.
    pub fn thetas(&self, x: &[f64]) -> Vec<f64> {
        self.sub_fits
            .iter()
            .map(|f| f.link.inverse_link(linear_predictor(x, &f.params.beta)))
            .collect()
    }
}

/// Fits each decomposed dataset independently (in parallel).
pub fn fit_multinomial(data: &MultinomialDataset, link: &LinkFamily, method: &MultinomialMethod) -> Result<MultinomialFit> {
    let parts: Vec<(usize, GroupedDataset)> = decompose(data).into_iter().enumerate().collect();
    if let MultinomialMethod::Bayes { priors, .. } = method {
        if priors.len() != 1 && priors.len() != parts.len() {
            return Err(Error::Prior(format!(
                "expected 1 or {} priors, got {}",
                parts.len(),
                priors.len()
            )));
        }
    }
    let results = par_map(parts, |(k, d)| {
        let r = match method {
            MultinomialMethod::Mle(opts) => fit_mle(&d, link, opts).map(|f| (f, None)),
            MultinomialMethod::Bayes { priors, mcmc } => {
                let prior = if priors.len() == 1 { &priors[0] } else { &priors[k] };
                bayes_component(&d, link, prior, mcmc).map(|(f, c)| (f, Some(c)))
            }
        };
        r.map_err(|e| Error::Component {
            component: k + 1,
            source: Box::new(e),
        })
    });
    let mut sub_fits = Vec::new();
    let mut chains = Vec::new();
    for r in results {
        let (f, c) = r?;
        sub_fits.push(f);
        chains.extend(c);
    }
    let converged = sub_fits.iter().all(|f| f.converged);
    Ok(MultinomialFit {
        link: *link,
        sub_fits,
        chains: matches!(method, MultinomialMethod::Bayes { .. }).then_some(chains),
        converged,
        category_labels: data.category_labels().to_vec(),
    })
}

fn bayes_component(
    data: &GroupedDataset,
    link: &LinkFamily,
    prior: &PriorSpec,
    mcmc: &McmcOptions,
) -> Result<(FitResult, PosteriorChain)> {
    let chain = run_mcmc(data, link, prior, mcmc)?;
    let params = chain.mean_params();
    let link_at = params.resolve_link(link)?;
    let log_lik = log_likelihood(&params, data, &link_at)?;
    let fitted = fitted_probabilities(&params, data, &link_at)?;
    let sds = posterior_summary(&chain).iter().map(|s| s.sd).collect();
    let fit = FitResult {
        link: link_at,
        n_params: params.len(),
        params,
        std_errors: Some(sds),
        std_error_note: Some("posterior standard deviations".into()),
        log_lik,
        n_obs: data.n_obs(),
        converged: log_lik.is_finite(),
        n_evals: 0,
        restarts: 0,
        fitted,
        note: Some(format!("acceptance rate {:.3}", chain.acceptance_rate)),
    };
    Ok((fit, chain))
}

/// Category probabilities at covariate vector `x`; they sum to one.
pub fn category_probs(fit: &MultinomialFit, x: &[f64]) -> Vec<f64> {
    let mut p = Vec::with_capacity(fit.sub_fits.len() + 1);
    let mut rest = 1.0;
    for f in &fit.sub_fits {
        let eta = linear_predictor(x, &f.params.beta);
        p.push(rest * f.link.inverse_link(eta));
        rest *= f.link.complement(eta);
    }
    p.push(rest);
    p
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultinomialMetrics {
    pub log_lik: f64,
    pub aic: f64,
    pub n_params: usize,
    pub ks: f64,
    pub mae: f64,
    /// Fitted `p̂` per dataset row.
    pub fitted: Vec<Vec<f64>>,
}

/// Total log-likelihood `Σ count · ln p̂`, AIC over all component
/// parameters, and KS/MAE over every (row, category) cell.
pub fn multinomial_metrics(fit: &MultinomialFit, data: &MultinomialDataset) -> Result<MultinomialMetrics> {
    if fit.sub_fits.len() + 1 != data.categories() {
        return Err(Error::Dimension {
            expected: data.categories() - 1,
            got: fit.sub_fits.len(),
        });
    }
    let mut log_lik = 0.0;
    let mut observed = Vec::new();
    let mut predicted = Vec::new();
    let mut fitted = Vec::new();
    for r in data.rows() {
        let p = category_probs(fit, &r.x);
        let total: u64 = r.counts.iter().sum();
        for (c, pk) in r.counts.iter().zip(&p) {
            if *c > 0 {
                log_lik += *c as f64 * pk.ln();
            }
            observed.push(*c as f64 / total as f64);
            predicted.push(*pk);
        }
        fitted.push(p);
    }
    if log_lik.is_nan() {
        log_lik = f64::NEG_INFINITY;
    }
    let (ks, mae) = ks_mae(&observed, &predicted)?;
    let n_params = fit.n_params();
    Ok(MultinomialMetrics {
        log_lik,
        aic: aic(log_lik, n_params),
        n_params,
        ks,
        mae,
        fitted,
    })
}
