//! Maximum-likelihood fitting by Nelder–Mead.
//!
//! Shape families are searched over `(ln γ, β)` so the shape stays positive.
//! The Weibull fits start from a probit fit: slopes are copied, the intercept
//! is shifted so the smallest linear predictor is 0.001, and γ starts at the
//! shape whose Weibull cdf mimics the normal cdf.

use serde::{Deserialize, Serialize};

use crate::data::GroupedDataset;
use crate::error::{Error, Result};
use crate::likelihood::{self, fitted_probabilities, linear_predictor, log_likelihood, ParamVector};
use crate::linalg::Matrix;
use crate::links::{LinkFamily, LinkKind, PROBIT_APPROXIMANT};
use crate::optim::{minimize, NelderMeadOptions};
use crate::parallel::par_map;

/// Shape used for the initial Weibull guess.
pub const INITIAL_GAMMA: f64 = 3.60235;
/// Margin added so that every initial linear predictor is positive.
pub const INITIAL_ETA_MARGIN: f64 = 0.001;
/// Shape at which the limit-based starts place the Weibull link next to its
/// cloglog / loglog limit.
const LIMIT_START_GAMMA: f64 = 100.0;
/// Default bound on the estimated shape.
pub const MAX_SHAPE: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub nelder_mead: NelderMeadOptions,
    /// Coefficients beyond this magnitude signal separation.
    pub separation_bound: f64,
    /// Fit the shape of Weibull links (otherwise the link's γ is held fixed).
    pub free_shape: bool,
    /// Upper end of the shape search. Beyond it the Weibull link is
    /// numerically its cloglog (or loglog) limit.
    pub max_shape: f64,
    pub compute_std_errors: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            nelder_mead: NelderMeadOptions::default(),
            separation_bound: 1e3,
            free_shape: true,
            max_shape: MAX_SHAPE,
            compute_std_errors: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Link at the estimate (shape families carry γ̂).
    pub link: LinkFamily,
    pub params: ParamVector,
    pub std_errors: Option<Vec<f64>>,
    /// Why standard errors are missing, or the covariance condition number.
    pub std_error_note: Option<String>,
    pub log_lik: f64,
    /// Total Bernoulli trials.
    pub n_obs: u64,
    pub n_params: usize,
    pub converged: bool,
    pub n_evals: usize,
    pub restarts: usize,
    /// Fitted cell probabilities μ̂_i.
    pub fitted: Vec<f64>,
    pub note: Option<String>,
}

impl FitResult {
    /// Names of the free parameters, in the order of `params.to_vec()`.
    pub fn param_names(&self, data: &GroupedDataset) -> Vec<String> {
        let mut names = Vec::new();
        if self.params.gamma.is_some() {
            names.push("gamma".to_string());
        }
        names.extend((0..data.dim()).map(|j| format!("beta{j}")));
        names
    }
}

/// Covariance summary at a parameter point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardErrors {
    pub values: Vec<f64>,
    pub covariance: Matrix,
    /// 1-norm condition number of the observed information.
    pub condition_number: f64,
}

fn overall_rate(data: &GroupedDataset) -> f64 {
    let n = data.n_obs();
    if n == 0 {
        return 0.5;
    }
    (data.total_successes() as f64 / n as f64).clamp(1e-3, 1.0 - 1e-3)
}

/// Probit regression by Nelder–Mead, started from `β = (Φ⁻¹(ȳ), 0, …, 0)`.
pub fn fit_probit(data: &GroupedDataset, opts: &FitOptions) -> Result<FitResult> {
    fit_mle(data, &LinkFamily::Probit, opts)
}

/// Initial Weibull parameters from probit slopes `b`:
/// `β₀ = −min_i Σ_{j≥1} b_j x_ij + 0.001`, `β_j = b_j`, `γ = 3.60235`.
/// For the reflected link the slopes change sign first.
pub fn initial_guess_from_probit(data: &GroupedDataset, probit_beta: &[f64], kind: LinkKind) -> Result<ParamVector> {
    if probit_beta.len() != data.dim() {
        return Err(Error::Dimension {
            expected: data.dim(),
            got: probit_beta.len(),
        });
    }
    let sign = if kind == LinkKind::ReflectedWeibull { -1.0 } else { 1.0 };
    let mut beta: Vec<f64> = probit_beta.iter().map(|b| sign * b).collect();
    beta[0] = 0.0;
    let min_eta = data
        .rows()
        .iter()
        .map(|r| linear_predictor(&r.x, &beta))
        .fold(f64::INFINITY, f64::min);
    beta[0] = if min_eta.is_finite() { -min_eta } else { 0.0 } + INITIAL_ETA_MARGIN;
    ParamVector::new(INITIAL_GAMMA, beta)
}

/// Fits the probit model and turns it into a Weibull starting point.
pub fn initial_guess(data: &GroupedDataset, opts: &FitOptions) -> Result<ParamVector> {
    initial_guess_for(data, LinkKind::Weibull, opts)
}

pub fn initial_guess_for(data: &GroupedDataset, kind: LinkKind, opts: &FitOptions) -> Result<ParamVector> {
    let probit = fit_probit(data, opts)?;
    initial_guess_from_probit(data, &probit.params.beta, kind)
}

/// Shifts `β₀` so every linear predictor is at least the margin.
fn lift_intercept(data: &GroupedDataset, beta: &mut [f64]) {
    let min_eta = data
        .rows()
        .iter()
        .map(|r| linear_predictor(&r.x, beta))
        .fold(f64::INFINITY, f64::min);
    if min_eta.is_finite() && min_eta < INITIAL_ETA_MARGIN {
        beta[0] += INITIAL_ETA_MARGIN - min_eta;
    }
}

/// Extra deterministic starts for shape families: the probit fit mapped
/// through the normal-mimicking Weibull approximant, and the limit link
/// (cloglog or loglog) mapped to a large shape.
fn extra_starts(data: &GroupedDataset, kind: LinkKind, probit_beta: &[f64], opts: &FitOptions) -> Vec<ParamVector> {
    let reflected = kind == LinkKind::ReflectedWeibull;
    let sign = if reflected { -1.0 } else { 1.0 };
    let mut starts = Vec::new();

    let a = PROBIT_APPROXIMANT;
    let mut beta: Vec<f64> = probit_beta.iter().map(|b| sign * a.scale * b).collect();
    beta[0] += a.offset;
    lift_intercept(data, &mut beta);
    if let Ok(p) = ParamVector::new(a.shape, beta) {
        starts.push(p);
    }

    let limit = if reflected { LinkFamily::Loglog } else { LinkFamily::Cloglog };
    let inner = FitOptions {
        compute_std_errors: false,
        ..opts.clone()
    };
    if let Ok(fit) = fit_fixed(data, &limit, &inner) {
        if fit.log_lik.is_finite() {
            // (1 + η/G)^G → e^η; the loglog limit uses −η
            let g = LIMIT_START_GAMMA;
            let mut beta: Vec<f64> = fit.params.beta.iter().map(|b| sign * b / g).collect();
            beta[0] += 1.0;
            lift_intercept(data, &mut beta);
            if let Ok(p) = ParamVector::new(g, beta) {
                starts.push(p);
            }
        }
    }
    starts
}

fn check_data(data: &GroupedDataset) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Dataset("cannot fit an empty dataset".into()));
    }
    data.check_full_rank()
}

/// Maximizes the log-likelihood over β (and γ for shape families when
/// `opts.free_shape`).
pub fn fit_mle(data: &GroupedDataset, link: &LinkFamily, opts: &FitOptions) -> Result<FitResult> {
    check_data(data)?;
    match link.kind() {
        LinkKind::Weibull | LinkKind::ReflectedWeibull if opts.free_shape => fit_shape(data, link.kind(), opts),
        LinkKind::Weibull | LinkKind::ReflectedWeibull => fit_fixed_shape(data, link, opts),
        _ => fit_fixed(data, link, opts),
    }
}

fn neg_ll(data: &GroupedDataset, link: &LinkFamily, params: &ParamVector) -> f64 {
    match log_likelihood(params, data, link) {
        Ok(ll) if ll.is_finite() => -ll,
        _ => f64::INFINITY,
    }
}

fn fit_fixed(data: &GroupedDataset, link: &LinkFamily, opts: &FitOptions) -> Result<FitResult> {
    let mut start = vec![0.0; data.dim()];
    start[0] = link.forward_link(overall_rate(data))?;
    let m = minimize(
        |b: &[f64]| neg_ll(data, link, &ParamVector::fixed(b.to_vec())),
        &start,
        &opts.nelder_mead,
    );
    let params = ParamVector::fixed(m.x);
    finish(data, *link, params, m.converged, m.evals, m.restarts, false, opts)
}

fn fit_fixed_shape(data: &GroupedDataset, link: &LinkFamily, opts: &FitOptions) -> Result<FitResult> {
    let gamma = link.gamma().ok_or(Error::InvalidShape(f64::NAN))?;
    let probit = fit_fixed(data, &LinkFamily::Probit, &FitOptions { compute_std_errors: false, ..opts.clone() })?;
    let start = initial_guess_from_probit(data, &probit.params.beta, link.kind())?;
    let m = minimize(
        |b: &[f64]| neg_ll(data, link, &ParamVector { gamma: Some(gamma), beta: b.to_vec() }),
        &start.beta,
        &opts.nelder_mead,
    );
    let params = ParamVector {
        gamma: Some(gamma),
        beta: m.x,
    };
    finish(data, *link, params, m.converged, m.evals + probit.n_evals, m.restarts, false, opts)
}

fn fit_shape(data: &GroupedDataset, kind: LinkKind, opts: &FitOptions) -> Result<FitResult> {
    let inner = FitOptions {
        compute_std_errors: false,
        ..opts.clone()
    };
    let probit = fit_fixed(data, &LinkFamily::Probit, &inner)?;
    let mut starts = vec![initial_guess_from_probit(data, &probit.params.beta, kind)?];
    starts.extend(extra_starts(data, kind, &probit.params.beta, opts));

    let link = LinkFamily::new(kind, Some(INITIAL_GAMMA))?;
    let objective = |z: &[f64]| {
        let gamma = z[0].exp();
        if !(gamma.is_finite() && gamma > 0.0 && gamma <= opts.max_shape) {
            return f64::INFINITY;
        }
        neg_ll(data, &link, &ParamVector { gamma: Some(gamma), beta: z[1..].to_vec() })
    };

    let mut best: Option<(crate::optim::Minimum, usize)> = None;
    let mut evals = probit.n_evals;
    for (i, start) in starts.iter().enumerate() {
        let z0: Vec<f64> = std::iter::once(start.gamma.unwrap_or(INITIAL_GAMMA).ln())
            .chain(start.beta.iter().copied())
            .collect();
        if !objective(&z0).is_finite() {
            continue;
        }
        let m = minimize(objective, &z0, &opts.nelder_mead);
        evals += m.evals;
        if best.as_ref().is_none_or(|(b, _)| m.f < b.f) {
            best = Some((m, i));
        }
    }
    let (m, _) = best.ok_or(Error::ImpossibleStart)?;
    let gamma = m.x[0].exp();
    let params = ParamVector::new(gamma, m.x[1..].to_vec())?;
    let link = link.with_gamma(gamma)?;
    let mut fit = finish(data, link, params, m.converged, evals, m.restarts, true, opts)?;
    if gamma > 0.99 * opts.max_shape {
        let limit = if kind == LinkKind::ReflectedWeibull { "loglog" } else { "cloglog" };
        let msg = format!(
            "shape reached its search bound {}: the likelihood keeps rising toward the {limit} limit, so gamma is not identified",
            opts.max_shape
        );
        fit.note = Some(match fit.note.take() {
            Some(n) => format!("{n}; {msg}"),
            None => msg,
        });
    }
    Ok(fit)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    data: &GroupedDataset,
    link: LinkFamily,
    params: ParamVector,
    mut converged: bool,
    n_evals: usize,
    restarts: usize,
    free_shape: bool,
    opts: &FitOptions,
) -> Result<FitResult> {
    let log_lik = log_likelihood(&params, data, &link)?;
    let fitted = fitted_probabilities(&params, data, &link)?;
    let mut note = None;
    if params.beta.iter().any(|b| b.abs() > opts.separation_bound) {
        converged = false;
        note = Some(format!(
            "coefficients exceed {} in magnitude; the data look separated",
            opts.separation_bound
        ));
    }
    if !log_lik.is_finite() {
        converged = false;
    }
    let n_params = params.beta.len() + usize::from(free_shape);
    let mut fit = FitResult {
        link,
        params: if free_shape {
            params
        } else {
            ParamVector {
                gamma: None,
                beta: params.beta,
            }
        },
        std_errors: None,
        std_error_note: None,
        log_lik,
        n_obs: data.n_obs(),
        n_params,
        converged,
        n_evals,
        restarts,
        fitted,
        note,
    };
    if opts.compute_std_errors {
        match standard_errors(&fit, data) {
            Ok(se) => {
                fit.std_error_note = Some(format!("condition number {:.3e}", se.condition_number));
                fit.std_errors = Some(se.values);
            }
            Err(e) => fit.std_error_note = Some(e.to_string()),
        }
    }
    Ok(fit)
}

/// Standard errors from the inverse observed information at the fit.
///
/// Shape families use the analytic Hessian; the other links use a central
/// finite-difference Hessian of the log-likelihood.
pub fn standard_errors(fit: &FitResult, data: &GroupedDataset) -> Result<StandardErrors> {
    let free_shape = fit.params.gamma.is_some();
    let params = match (fit.link.gamma(), free_shape) {
        (Some(g), false) => ParamVector {
            gamma: Some(g),
            beta: fit.params.beta.clone(),
        },
        _ => fit.params.clone(),
    };
    standard_errors_at(&params, data, &fit.link, free_shape)
}

/// Standard errors at an arbitrary parameter point.
pub fn standard_errors_at(
    params: &ParamVector,
    data: &GroupedDataset,
    link: &LinkFamily,
    free_shape: bool,
) -> Result<StandardErrors> {
    let h = match link.kind() {
        LinkKind::Weibull | LinkKind::ReflectedWeibull => {
            let full = likelihood::hessian(params, data, link.kind())?;
            if free_shape {
                full
            } else {
                let p = data.dim();
                let mut sub = Matrix::zeros(p, p);
                for i in 0..p {
                    for j in 0..p {
                        sub[(i, j)] = full[(i + 1, j + 1)];
                    }
                }
                sub
            }
        }
        _ => numerical_hessian(|b| log_likelihood(&ParamVector::fixed(b.to_vec()), data, link).unwrap_or(f64::NEG_INFINITY), &params.beta),
    };
    covariance_from_hessian(&h)
}

/// Inverts the observed information `−H`; fails unless it is positive definite.
pub fn covariance_from_hessian(h: &Matrix) -> Result<StandardErrors> {
    if h.rows() == 0 || (0..h.rows()).any(|i| (0..h.cols()).any(|j| !h[(i, j)].is_finite())) {
        return Err(Error::Singular("Hessian has non-finite entries".into()));
    }
    let info = h.scale(-1.0);
    info.cholesky()?;
    let cov = info.inverse()?;
    let values = cov.diagonal();
    if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Singular("covariance has non-positive diagonal".into()));
    }
    let condition_number = info.norm1() * cov.norm1();
    Ok(StandardErrors {
        values: values.iter().map(|v| v.sqrt()).collect(),
        covariance: cov,
        condition_number,
    })
}

/// Central-difference Hessian of a scalar function.
pub fn numerical_hessian<F: Fn(&[f64]) -> f64>(f: F, x: &[f64]) -> Matrix {
    let n = x.len();
    let steps: Vec<f64> = x.iter().map(|v| 1e-4 * v.abs().max(1.0)).collect();
    let mut h = Matrix::zeros(n, n);
    let mut xp = x.to_vec();
    let f0 = f(x);
    for i in 0..n {
        let hi = steps[i];
        xp[i] = x[i] + hi;
        let fp = f(&xp);
        xp[i] = x[i] - hi;
        let fm = f(&xp);
        xp[i] = x[i];
        h[(i, i)] = (fp - 2.0 * f0 + fm) / (hi * hi);
        for j in 0..i {
            let hj = steps[j];
            let mut corner = |si: f64, sj: f64| {
                xp[i] = x[i] + si * hi;
                xp[j] = x[j] + sj * hj;
                let v = f(&xp);
                xp[i] = x[i];
                xp[j] = x[j];
                v
            };
            let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0)) / (4.0 * hi * hj);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    h
}

/// Fits several links to the same data, in parallel when allowed.
pub fn fit_links(data: &GroupedDataset, links: &[LinkFamily], opts: &FitOptions) -> Vec<Result<FitResult>> {
    par_map(links.to_vec(), |link| fit_mle(data, &link, opts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{finney1947, GroupedRow};

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn initial_guess_single_row() {
        let d = GroupedDataset::new(
            vec![GroupedRow { x: vec![1.0], successes: 3, trials: 5 }],
            names(1),
        )
        .unwrap();
        let g = initial_guess_from_probit(&d, &[0.7], LinkKind::Weibull).unwrap();
        assert_eq!(g.gamma, Some(INITIAL_GAMMA));
        assert!((g.beta[0] - INITIAL_ETA_MARGIN).abs() < 1e-15);
    }

    #[test]
    fn initial_guess_min_eta_is_margin() {
        let d = finney1947();
        let g = initial_guess_from_probit(&d, &[-2.3, 2.8, 0.4, -0.5], LinkKind::Weibull).unwrap();
        let min_eta = d
            .rows()
            .iter()
            .map(|r| linear_predictor(&r.x, &g.beta))
            .fold(f64::INFINITY, f64::min);
        assert!((min_eta - INITIAL_ETA_MARGIN).abs() < 1e-12);
        assert_eq!(&g.beta[1..], &[2.8, 0.4, -0.5]);
        let r = initial_guess_from_probit(&d, &[-2.3, 2.8, 0.4, -0.5], LinkKind::ReflectedWeibull).unwrap();
        assert_eq!(&r.beta[1..], &[-2.8, -0.4, 0.5]);
    }

    #[test]
    fn balanced_symmetric_probit() {
        let d = GroupedDataset::new(
            vec![
                GroupedRow { x: vec![1.0, -1.0], successes: 8, trials: 40 },
                GroupedRow { x: vec![1.0, 0.0], successes: 20, trials: 40 },
                GroupedRow { x: vec![1.0, 1.0], successes: 32, trials: 40 },
            ],
            names(2),
        )
        .unwrap();
        let fit = fit_probit(&d, &FitOptions::default()).unwrap();
        assert!(fit.converged);
        assert!(fit.params.beta[0].abs() < 1e-4, "{:?}", fit.params.beta);
    }

    #[test]
    fn rank_deficient_rejected() {
        let d = GroupedDataset::new(
            vec![
                GroupedRow { x: vec![1.0, 2.0], successes: 1, trials: 4 },
                GroupedRow { x: vec![1.0, 2.0], successes: 3, trials: 4 },
            ],
            names(2),
        )
        .unwrap();
        assert!(matches!(fit_probit(&d, &FitOptions::default()), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn separation_flagged() {
        let d = GroupedDataset::new(
            vec![
                GroupedRow { x: vec![1.0, -1.0], successes: 0, trials: 10 },
                GroupedRow { x: vec![1.0, -0.5], successes: 0, trials: 10 },
                GroupedRow { x: vec![1.0, 0.5], successes: 10, trials: 10 },
                GroupedRow { x: vec![1.0, 1.0], successes: 10, trials: 10 },
            ],
            names(2),
        )
        .unwrap();
        let fit = fit_mle(&d, &LinkFamily::Logit, &FitOptions::default()).unwrap();
        assert!(!fit.converged);
        assert!(fit.note.is_some());
    }

    #[test]
    fn gaussian_curvature_gives_inverse_sqrt() {
        let c = 4.0;
        let h = numerical_hessian(|x: &[f64]| -0.5 * c * x[0] * x[0], &[0.3]);
        let se = covariance_from_hessian(&h).unwrap();
        assert!((se.values[0] - 1.0 / c.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn indefinite_hessian_has_no_errors() {
        let h = Matrix::from_rows(&[vec![-1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(covariance_from_hessian(&h).is_err());
    }
}
