//! Grouped-binomial log-likelihood and the analytic derivatives of the
//! Weibull-link log-likelihood with respect to `(γ, β₀, …, β_r)`.

use serde::{Deserialize, Serialize};

use crate::data::GroupedDataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::links::{LinkFamily, LinkKind};

/// Parameters of one binary-response model. `gamma` is `None` for links
/// without a shape parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub gamma: Option<f64>,
    pub beta: Vec<f64>,
}

impl ParamVector {
    pub fn new(gamma: f64, beta: Vec<f64>) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidShape(gamma));
        }
        Ok(ParamVector {
            gamma: Some(gamma),
            beta,
        })
    }

    pub fn fixed(beta: Vec<f64>) -> Self {
        ParamVector { gamma: None, beta }
    }

    /// Flattened `(γ, β₀, …)`, or just `β` when there is no shape.
    pub fn to_vec(&self) -> Vec<f64> {
        self.gamma.iter().copied().chain(self.beta.iter().copied()).collect()
    }

    pub fn len(&self) -> usize {
        self.beta.len() + usize::from(self.gamma.is_some())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Link with this vector's shape substituted in.
    pub fn resolve_link(&self, link: &LinkFamily) -> Result<LinkFamily> {
        match (link.gamma(), self.gamma) {
            (Some(_), Some(g)) => link.with_gamma(g),
            _ => Ok(*link),
        }
    }
}

pub fn linear_predictor(x: &[f64], beta: &[f64]) -> f64 {
    x.iter().zip(beta).map(|(a, b)| a * b).sum()
}

fn check_dim(params: &ParamVector, data: &GroupedDataset) -> Result<()> {
    if params.beta.len() != data.dim() {
        return Err(Error::Dimension {
            expected: data.dim(),
            got: params.beta.len(),
        });
    }
    Ok(())
}

/// Log-likelihood of `(s, t)` at success probability given by `eta`.
/// Zero-count terms contribute nothing, so `0 · ln 0` never arises.
#[inline]
pub(crate) fn row_log_lik(link: &LinkFamily, eta: f64, successes: u64, trials: u64) -> f64 {
    let failures = trials - successes;
    let mut ll = 0.0;
    if successes > 0 {
        ll += successes as f64 * link.ln_inverse_link(eta);
    }
    if failures > 0 {
        ll += failures as f64 * link.ln_complement(eta);
    }
    ll
}

/// `Σ s·ln μ + (t−s)·ln(1−μ)` over rows. For shape families the shape
/// comes from `params.gamma`. Returns `-∞` for impossible observations.
pub fn log_likelihood(params: &ParamVector, data: &GroupedDataset, link: &LinkFamily) -> Result<f64> {
    check_dim(params, data)?;
    let link = params.resolve_link(link)?;
    let mut total = 0.0;
    for r in data.rows() {
        let ll = row_log_lik(&link, linear_predictor(&r.x, &params.beta), r.successes, r.trials);
        if ll == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        total += ll;
    }
    Ok(if total.is_nan() { f64::NEG_INFINITY } else { total })
}

/// Fitted cell probabilities `μ̂_i`.
pub fn fitted_probabilities(params: &ParamVector, data: &GroupedDataset, link: &LinkFamily) -> Result<Vec<f64>> {
    check_dim(params, data)?;
    let link = params.resolve_link(link)?;
    Ok(data
        .rows()
        .iter()
        .map(|r| link.inverse_link(linear_predictor(&r.x, &params.beta)))
        .collect())
}

/// Per-row quantities shared by the gradient and Hessian.
struct RowTerms {
    /// ln η
    log_eta: f64,
    /// η^γ
    power: f64,
    /// η^γ / (e^{η^γ} − 1), i.e. `η^γ ξ₁ / (1 − ξ₁)`
    ratio: f64,
    /// counts entering as "success" / "failure" of the Weibull cdf
    hits: f64,
    misses: f64,
}

fn row_terms(row: usize, eta: f64, gamma: f64, successes: u64, trials: u64, reflected: bool) -> Result<RowTerms> {
    if !(eta >= 1e-300) {
        return Err(Error::NonPositivePredictor { row, eta });
    }
    let log_eta = eta.ln();
    let power = crate::links::weibull_power(eta, gamma);
    let xi1 = (-power).exp();
    let xi2 = (-2.0 * power).exp();
    debug_assert!(
        (xi2 - xi1 * xi1).abs() <= 1e-12 * xi2 + 1e-300,
        "xi2 must equal xi1 squared"
    );
    let ratio = if power == 0.0 {
        1.0
    } else if power.is_infinite() {
        0.0
    } else {
        power / power.exp_m1()
    };
    let (s, f) = (successes as f64, (trials - successes) as f64);
    let (hits, misses) = if reflected { (f, s) } else { (s, f) };
    Ok(RowTerms {
        log_eta,
        power,
        ratio,
        hits,
        misses,
    })
}

fn weibull_shape(params: &ParamVector, kind: LinkKind) -> Result<(f64, bool)> {
    let reflected = match kind {
        LinkKind::Weibull => false,
        LinkKind::ReflectedWeibull => true,
        other => return Err(Error::UnsupportedLink(other.name())),
    };
    let gamma = params.gamma.ok_or(Error::InvalidShape(f64::NAN))?;
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidShape(gamma));
    }
    Ok((gamma, reflected))
}

/// Gradient of the Weibull (or reflected Weibull) log-likelihood, ordered
/// `(γ, β₀, …, β_r)`. Requires every `η_i > 0`.
///
/// For the reflected link `μ = exp(-η^γ)` is the Weibull complement, so the
/// same expressions apply with successes and failures exchanged.
pub fn gradient(params: &ParamVector, data: &GroupedDataset, kind: LinkKind) -> Result<Vec<f64>> {
    check_dim(params, data)?;
    let (gamma, reflected) = weibull_shape(params, kind)?;
    let p = data.dim();
    let mut g = vec![0.0; p + 1];
    for (i, r) in data.rows().iter().enumerate() {
        let eta = linear_predictor(&r.x, &params.beta);
        let RowTerms {
            log_eta,
            power,
            ratio,
            hits,
            misses,
        } = row_terms(i + 1, eta, gamma, r.successes, r.trials, reflected)?;
        // ∂/∂γ: −(n−s) η^γ ln η + s ξ₁ η^γ ln η / (1−ξ₁)
        g[0] += (-misses * power + hits * ratio) * log_eta;
        // ∂/∂β_j: x_ij [−γ (n−s) η^{γ−1} + γ s ξ₁ η^{γ−1} / (1−ξ₁)]
        let common = gamma * (-misses * power + hits * ratio) / eta;
        for (j, xj) in r.x.iter().enumerate() {
            g[j + 1] += xj * common;
        }
    }
    Ok(g)
}

/// Hessian of the Weibull (or reflected Weibull) log-likelihood in the same
/// parameter order as [`gradient`]. Symmetric by construction.
pub fn hessian(params: &ParamVector, data: &GroupedDataset, kind: LinkKind) -> Result<Matrix> {
    check_dim(params, data)?;
    let (gamma, reflected) = weibull_shape(params, kind)?;
    let p = data.dim();
    let mut h = Matrix::zeros(p + 1, p + 1);
    for (i, r) in data.rows().iter().enumerate() {
        let eta = linear_predictor(&r.x, &params.beta);
        let RowTerms {
            log_eta: l,
            power: t,
            ratio: q,
            hits: s,
            misses: f,
        } = row_terms(i + 1, eta, gamma, r.successes, r.trials, reflected)?;
        // ξ₂ η^{2γ} / (1−ξ₁)² = q²
        let q2 = q * q;

        let h_gg = -f * l * l * t + s * l * l * q * (1.0 - t) - s * l * l * q2;
        // coefficient of x_ij in ∂²/∂β_j∂γ, without the 1/η factor
        let h_bg = -(1.0 + gamma * l) * f * t + (1.0 + (1.0 - t) * gamma * l) * s * q - gamma * s * l * q2;
        // coefficient of x_ij x_ik in ∂²/∂β_j∂β_k, without the 1/η² factor
        let h_bb = -(gamma - 1.0) * gamma * f * t + ((gamma - 1.0) - gamma * t) * gamma * s * q - gamma * gamma * s * q2;

        h[(0, 0)] += h_gg;
        for (j, xj) in r.x.iter().enumerate() {
            h[(0, j + 1)] += xj * h_bg / eta;
            for (k, xk) in r.x.iter().enumerate().take(j + 1) {
                h[(j + 1, k + 1)] += xj * xk * h_bb / (eta * eta);
            }
        }
    }
    for j in 1..=p {
        h[(j, 0)] = h[(0, j)];
        for k in 0..j {
            h[(k, j)] = h[(j, k)];
        }
    }
    Ok(h)
}

/// Same covariates with successes and failures exchanged.
pub fn swap_outcomes(data: &GroupedDataset) -> Result<GroupedDataset> {
    let rows = data
        .rows()
        .iter()
        .map(|r| crate::data::GroupedRow {
            x: r.x.clone(),
            successes: r.trials - r.successes,
            trials: r.trials,
        })
        .collect();
    GroupedDataset::new(rows, data.covariate_names().to_vec())
}
