//! Priors, random-walk Metropolis sampling of the posterior, empirical-Bayes
//! hyper-means, DIC and posterior summaries.
//!
//! The sampler works on `(ln γ, β)`; the log-Jacobian `ln γ` is added to the
//! target so the kept draws are from the posterior of `(γ, β)`.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::GroupedDataset;
use crate::error::{Error, Result};
use crate::likelihood::{log_likelihood, ParamVector};
use crate::links::LinkFamily;
use crate::mle::{fit_mle, initial_guess_for, FitOptions, INITIAL_GAMMA};
use crate::optim::{minimize, NelderMeadOptions};
use crate::special::ln_gamma;

/// Acceptance band the burn-in adaptation aims for.
pub const TARGET_ACCEPTANCE: (f64, f64) = (0.30, 0.45);

/// Prior on `(γ, β)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorSpec {
    /// `γ ~ Gamma(mean m_gamma, variance v_gamma)`, `β ~ N(m_beta, v_beta I)`.
    Hierarchical {
        m_gamma: f64,
        v_gamma: f64,
        m_beta: Vec<f64>,
        v_beta: f64,
    },
    /// `p(β, γ) ∝ γ^{-c}` on `γ > 1`.
    NonInformative { c: f64 },
}

impl PriorSpec {
    pub fn hierarchical(m_gamma: f64, v_gamma: f64, m_beta: Vec<f64>, v_beta: f64) -> Result<Self> {
        let p = PriorSpec::Hierarchical {
            m_gamma,
            v_gamma,
            m_beta,
            v_beta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn noninformative(c: f64) -> Result<Self> {
        let p = PriorSpec::NonInformative { c };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PriorSpec::Hierarchical {
                m_gamma,
                v_gamma,
                m_beta,
                v_beta,
            } => {
                if !(*m_gamma > 0.0 && m_gamma.is_finite()) {
                    return Err(Error::Prior(format!("m_gamma must be positive, got {m_gamma}")));
                }
                if !(*v_gamma > 0.0 && v_gamma.is_finite()) {
                    return Err(Error::Prior(format!("v_gamma must be positive, got {v_gamma}")));
                }
                if !(*v_beta > 0.0 && v_beta.is_finite()) {
                    return Err(Error::Prior(format!("v_beta must be positive, got {v_beta}")));
                }
                if m_beta.iter().any(|m| !m.is_finite()) {
                    return Err(Error::Prior("m_beta must be finite".into()));
                }
                Ok(())
            }
            PriorSpec::NonInformative { c } => {
                if *c > 1.0 && c.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Prior(format!("c must exceed 1, got {c}")))
                }
            }
        }
    }

    /// Gamma shape and scale implied by the mean/variance parameterization.
    pub fn gamma_shape_scale(&self) -> Option<(f64, f64)> {
        match self {
            PriorSpec::Hierarchical { m_gamma, v_gamma, .. } => {
                Some((m_gamma * m_gamma / v_gamma, v_gamma / m_gamma))
            }
            PriorSpec::NonInformative { .. } => None,
        }
    }
}

fn gamma_log_density(x: f64, shape: f64, scale: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NEG_INFINITY;
    }
    (shape - 1.0) * x.ln() - x / scale - ln_gamma(shape) - shape * scale.ln()
}

fn normal_log_density(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((x - mean).powi(2) / var + (2.0 * std::f64::consts::PI * var).ln())
}

/// Log prior density (normalized for the hierarchical prior). Parameters
/// without a shape only see the `β` part.
pub fn log_prior(params: &ParamVector, prior: &PriorSpec) -> f64 {
    match prior {
        PriorSpec::Hierarchical { m_beta, v_beta, .. } => {
            let mut lp = 0.0;
            if let Some(g) = params.gamma {
                let (shape, scale) = prior.gamma_shape_scale().expect("hierarchical");
                lp += gamma_log_density(g, shape, scale);
            }
            for (j, b) in params.beta.iter().enumerate() {
                let m = m_beta.get(j).copied().unwrap_or(0.0);
                lp += normal_log_density(*b, m, *v_beta);
            }
            lp
        }
        PriorSpec::NonInformative { c } => match params.gamma {
            Some(g) if g > 1.0 => -c * g.ln(),
            Some(_) => f64::NEG_INFINITY,
            None => 0.0,
        },
    }
}

/// `log L + log p`, `−∞` outside the support or where the likelihood is zero.
pub fn log_posterior(params: &ParamVector, data: &GroupedDataset, link: &LinkFamily, prior: &PriorSpec) -> f64 {
    let lp = log_prior(params, prior);
    if lp == f64::NEG_INFINITY {
        return lp;
    }
    match log_likelihood(params, data, link) {
        Ok(ll) if !ll.is_nan() => ll + lp,
        _ => f64::NEG_INFINITY,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcOptions {
    pub seed: u64,
    pub n_burn: usize,
    /// Number of draws kept after thinning.
    pub n_keep: usize,
    pub thin: usize,
    /// Starting point; defaults to the MLE initializer.
    pub initial: Option<ParamVector>,
}

impl Default for McmcOptions {
    fn default() -> Self {
        McmcOptions {
            seed: 1,
            n_burn: 10_000,
            n_keep: 50_000,
            thin: 5,
            initial: None,
        }
    }
}

/// Output of the generic sampler, in the sampler's own coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerOutput {
    pub draws: Vec<Vec<f64>>,
    pub acceptance_rate: f64,
    pub proposal_scales: Vec<f64>,
}

/// Component-wise Gaussian random-walk Metropolis on an arbitrary log target.
///
/// During burn-in each coordinate's log proposal scale follows a
/// Robbins–Monro update toward the middle of [`TARGET_ACCEPTANCE`]; the
/// scales are frozen afterwards, so the kept draws come from a plain
/// Metropolis chain.
pub fn sample<F: Fn(&[f64]) -> f64>(log_target: F, x0: &[f64], opts: &McmcOptions) -> Result<SamplerOutput> {
    if x0.is_empty() {
        return Err(Error::Dimension { expected: 1, got: 0 });
    }
    if opts.thin == 0 {
        return Err(Error::Mismatch("thin must be at least 1".into()));
    }
    let mut x = x0.to_vec();
    let mut fx = log_target(&x);
    if !fx.is_finite() {
        return Err(Error::ImpossibleStart);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let target = 0.5 * (TARGET_ACCEPTANCE.0 + TARGET_ACCEPTANCE.1);
    let mut log_scale: Vec<f64> = x.iter().map(|v| (0.1 * v.abs().max(0.1)).ln()).collect();

    let step = |x: &mut Vec<f64>, fx: &mut f64, j: usize, rng: &mut ChaCha8Rng, scale: f64| -> bool {
        let z: f64 = rng.sample(StandardNormal);
        let old = x[j];
        x[j] = old + scale * z;
        let fy = log_target(x);
        let u: f64 = rng.random();
        if fy.is_finite() && u.ln() < fy - *fx {
            *fx = fy;
            true
        } else {
            x[j] = old;
            false
        }
    };

    for t in 0..opts.n_burn {
        let gain = ((t + 1) as f64).powf(-0.6);
        for j in 0..x.len() {
            let accepted = step(&mut x, &mut fx, j, &mut rng, log_scale[j].exp());
            log_scale[j] += gain * (f64::from(u8::from(accepted)) - target);
        }
    }

    let scales: Vec<f64> = log_scale.iter().map(|l| l.exp()).collect();
    let mut draws = Vec::with_capacity(opts.n_keep);
    let (mut accepted, mut proposed) = (0usize, 0usize);
    for _ in 0..opts.n_keep {
        for _ in 0..opts.thin {
            for j in 0..x.len() {
                accepted += usize::from(step(&mut x, &mut fx, j, &mut rng, scales[j]));
                proposed += 1;
            }
        }
        draws.push(x.clone());
    }
    Ok(SamplerOutput {
        draws,
        acceptance_rate: if proposed == 0 { 0.0 } else { accepted as f64 / proposed as f64 },
        proposal_scales: scales,
    })
}

/// Kept posterior draws in `(γ, β₀, …)` order (no γ column for fixed links).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorChain {
    pub link: LinkFamily,
    pub param_names: Vec<String>,
    pub draws: Vec<Vec<f64>>,
    pub seed: u64,
    pub burn_in: usize,
    pub thin: usize,
    pub acceptance_rate: f64,
    /// Proposal scales after adaptation, in sampler coordinates (`ln γ`, β).
    pub proposal_scales: Vec<f64>,
}

impl PosteriorChain {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn has_shape(&self) -> bool {
        self.link.gamma().is_some()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.draws.iter().map(|d| d[j]).collect()
    }

    pub fn params_at(&self, i: usize) -> ParamVector {
        to_params(&self.draws[i], self.has_shape())
    }

    /// Componentwise posterior mean as a parameter vector.
    pub fn mean_params(&self) -> ParamVector {
        let m: Vec<f64> = (0..self.param_names.len())
            .map(|j| shifted_mean(self.draws.iter().map(|d| d[j])))
            .collect();
        to_params(&m, self.has_shape())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.param_names)?;
        for d in &self.draws {
            out.write_record(d.iter().map(|v| format!("{v:.17e}")))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Mean computed around the first value, exact for constant input.
fn shifted_mean<I: Iterator<Item = f64>>(mut it: I) -> f64 {
    let Some(first) = it.next() else {
        return f64::NAN;
    };
    let (mut acc, mut n) = (0.0, 1.0);
    for v in it {
        acc += v - first;
        n += 1.0;
    }
    first + acc / n
}

fn to_params(v: &[f64], shape: bool) -> ParamVector {
    if shape {
        ParamVector {
            gamma: Some(v[0]),
            beta: v[1..].to_vec(),
        }
    } else {
        ParamVector::fixed(v.to_vec())
    }
}

fn param_names(dim: usize, shape: bool) -> Vec<String> {
    let mut names = Vec::new();
    if shape {
        names.push("gamma".to_string());
    }
    names.extend((0..dim).map(|j| format!("beta{j}")));
    names
}

/// Default starting point: the Weibull initializer for shape families, the
/// MLE for the others, and the prior centre when there is no data.
fn default_start(data: &GroupedDataset, link: &LinkFamily, prior: &PriorSpec) -> Result<ParamVector> {
    let shape = link.gamma().is_some();
    if data.is_empty() {
        let (g, beta) = match prior {
            PriorSpec::Hierarchical { m_gamma, m_beta, .. } => {
                let mut b = m_beta.clone();
                b.resize(data.dim(), 0.0);
                (*m_gamma, b)
            }
            PriorSpec::NonInformative { .. } => (INITIAL_GAMMA, vec![0.0; data.dim()]),
        };
        return Ok(if shape {
            ParamVector::new(g, beta)?
        } else {
            ParamVector::fixed(beta)
        });
    }
    let opts = FitOptions {
        compute_std_errors: false,
        ..FitOptions::default()
    };
    if shape {
        initial_guess_for(data, link.kind(), &opts)
    } else {
        Ok(fit_mle(data, link, &opts)?.params)
    }
}

/// Samples the posterior of `(γ, β)` (or `β` for fixed links).
pub fn run_mcmc(data: &GroupedDataset, link: &LinkFamily, prior: &PriorSpec, opts: &McmcOptions) -> Result<PosteriorChain> {
    prior.validate()?;
    if let PriorSpec::Hierarchical { m_beta, .. } = prior {
        if m_beta.len() != data.dim() {
            return Err(Error::Dimension {
                expected: data.dim(),
                got: m_beta.len(),
            });
        }
    }
    let shape = link.gamma().is_some();
    let start = match &opts.initial {
        Some(p) => p.clone(),
        None => default_start(data, link, prior)?,
    };
    if start.beta.len() != data.dim() {
        return Err(Error::Dimension {
            expected: data.dim(),
            got: start.beta.len(),
        });
    }
    let x0: Vec<f64> = if shape {
        let g = start.gamma.unwrap_or(INITIAL_GAMMA);
        std::iter::once(g.ln()).chain(start.beta.iter().copied()).collect()
    } else {
        start.beta.clone()
    };
    let target = |z: &[f64]| {
        if shape {
            let g = z[0].exp();
            if !(g > 0.0 && g.is_finite()) {
                return f64::NEG_INFINITY;
            }
            let p = ParamVector {
                gamma: Some(g),
                beta: z[1..].to_vec(),
            };
            log_posterior(&p, data, link, prior) + z[0]
        } else {
            log_posterior(&ParamVector::fixed(z.to_vec()), data, link, prior)
        }
    };
    let out = sample(target, &x0, opts)?;
    let draws = if shape {
        out.draws
            .into_iter()
            .map(|mut d| {
                d[0] = d[0].exp();
                d
            })
            .collect()
    } else {
        out.draws
    };
    Ok(PosteriorChain {
        link: *link,
        param_names: param_names(data.dim(), shape),
        draws,
        seed: opts.seed,
        burn_in: opts.n_burn,
        thin: opts.thin,
        acceptance_rate: out.acceptance_rate,
        proposal_scales: out.proposal_scales,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dic {
    pub dic: f64,
    pub p_d: f64,
    pub mean_deviance: f64,
    pub deviance_at_mean: f64,
    /// Set when `p_D` is below the −0.5 sanity band.
    pub note: Option<String>,
}

/// `DIC = D̄ + p_D` with `p_D = D̄ − D(θ̄)` and `D = −2 log L`.
pub fn dic(chain: &PosteriorChain, data: &GroupedDataset, link: &LinkFamily) -> Result<Dic> {
    if chain.is_empty() {
        return Err(Error::Mismatch("DIC needs a nonempty chain".into()));
    }
    let deviances = (0..chain.len())
        .map(|i| log_likelihood(&chain.params_at(i), data, link).map(|ll| -2.0 * ll))
        .collect::<Result<Vec<f64>>>()?;
    let mean_dev = shifted_mean(deviances.into_iter());
    let mean = chain.mean_params();
    let ll_mean = log_likelihood(&mean, data, link)?;
    if !ll_mean.is_finite() {
        return Err(Error::DegeneratePosteriorMean(format!(
            "log-likelihood at the posterior mean {:?} is {ll_mean}",
            mean.to_vec()
        )));
    }
    let dev_mean = -2.0 * ll_mean;
    let p_d = mean_dev - dev_mean;
    let note = (p_d < -0.5).then(|| format!("p_D = {p_d:.3} is negative; the posterior mean is a poor plug-in"));
    Ok(Dic {
        dic: mean_dev + p_d,
        p_d,
        mean_deviance: mean_dev,
        deviance_at_mean: dev_mean,
        note,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    /// Standard deviation with divisor `n`.
    pub sd: f64,
    pub q025: f64,
    pub median: f64,
    pub q975: f64,
}

/// Linear-interpolation quantile of sorted values.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Mean, population SD and 2.5/50/97.5% quantiles of each column.
pub fn posterior_summary(chain: &PosteriorChain) -> Vec<ParamSummary> {
    if chain.is_empty() {
        return Vec::new();
    }
    chain
        .param_names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let mut col = chain.column(j);
            let n = col.len() as f64;
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            col.sort_by(f64::total_cmp);
            ParamSummary {
                name: name.clone(),
                mean,
                sd: var.sqrt(),
                q025: quantile(&col, 0.025),
                median: quantile(&col, 0.5),
                q975: quantile(&col, 0.975),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalBayesOptions {
    /// Chain settings for each E-step; the seed advances per iteration.
    pub mcmc: McmcOptions,
    pub max_iter: usize,
    /// Stop once no hyper-mean moves by more than this.
    pub tol: f64,
    /// Starting hyper-means; default to the MLE initializer.
    pub m_gamma: Option<f64>,
    pub m_beta: Option<Vec<f64>>,
}

impl Default for EmpiricalBayesOptions {
    fn default() -> Self {
        EmpiricalBayesOptions {
            mcmc: McmcOptions {
                n_burn: 5_000,
                n_keep: 10_000,
                ..McmcOptions::default()
            },
            max_iter: 30,
            tol: 1e-2,
            m_gamma: None,
            m_beta: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalBayes {
    pub m_gamma: f64,
    pub m_beta: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// M-step for the mean of a gamma prior with fixed variance `v`:
/// maximizes `a ln b − ln Γ(a) + (a−1) E[ln γ] − b E[γ]` with `a = m²/v`, `b = m/v`.
pub fn gamma_mean_m_step(mean_gamma: f64, mean_log_gamma: f64, v: f64) -> f64 {
    let q = |z: &[f64]| {
        let m = z[0].exp();
        let (a, b) = (m * m / v, m / v);
        let val = a * b.ln() - ln_gamma(a) + (a - 1.0) * mean_log_gamma - b * mean_gamma;
        if val.is_finite() {
            -val
        } else {
            f64::INFINITY
        }
    };
    let opts = NelderMeadOptions {
        x_tol: 1e-10,
        f_tol: 1e-14,
        ..NelderMeadOptions::default()
    };
    minimize(q, &[mean_gamma.max(1e-6).ln()], &opts).x[0].exp()
}

/// Monte-Carlo EM for the hyper-means `(m_γ, m_β)` of the hierarchical prior
/// at fixed `v_γ`, `v_β`. The normal part of the M-step is the posterior
/// mean of `β`; the gamma part maximizes the expected complete-data log
/// prior (see [`gamma_mean_m_step`]).
pub fn empirical_bayes(
    data: &GroupedDataset,
    link: &LinkFamily,
    v_gamma: f64,
    v_beta: f64,
    opts: &EmpiricalBayesOptions,
) -> Result<EmpiricalBayes> {
    let shape = link.gamma().is_some();
    let (m_gamma0, m_beta0) = match (&opts.m_gamma, &opts.m_beta) {
        (Some(g), Some(b)) => (*g, b.clone()),
        _ => {
            let start = if data.is_empty() {
                ParamVector {
                    gamma: Some(INITIAL_GAMMA),
                    beta: vec![0.0; data.dim()],
                }
            } else {
                default_start(data, link, &PriorSpec::NonInformative { c: 2.0 })?
            };
            (
                opts.m_gamma.unwrap_or(start.gamma.unwrap_or(INITIAL_GAMMA)),
                opts.m_beta.clone().unwrap_or(start.beta),
            )
        }
    };
    let mut m_gamma = m_gamma0;
    let mut m_beta = m_beta0;
    PriorSpec::hierarchical(m_gamma, v_gamma, m_beta.clone(), v_beta)?;
    if data.is_empty() {
        // no likelihood: the posterior is the prior and its means are a fixpoint
        return Ok(EmpiricalBayes {
            m_gamma,
            m_beta,
            iterations: 0,
            converged: true,
        });
    }
    let mut mcmc = opts.mcmc.clone();
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..opts.max_iter {
        iterations = it + 1;
        let prior = PriorSpec::hierarchical(m_gamma, v_gamma, m_beta.clone(), v_beta)?;
        mcmc.seed = opts.mcmc.seed.wrapping_add(it as u64);
        let chain = run_mcmc(data, link, &prior, &mcmc)?;
        let off = usize::from(shape);
        let n = chain.len() as f64;
        let new_beta: Vec<f64> = (0..data.dim())
            .map(|j| chain.draws.iter().map(|d| d[j + off]).sum::<f64>() / n)
            .collect();
        let new_gamma = if shape {
            let eg = chain.draws.iter().map(|d| d[0]).sum::<f64>() / n;
            let elg = chain.draws.iter().map(|d| d[0].ln()).sum::<f64>() / n;
            gamma_mean_m_step(eg, elg, v_gamma)
        } else {
            m_gamma
        };
        let change = new_beta
            .iter()
            .zip(&m_beta)
            .map(|(a, b)| (a - b).abs())
            .fold((new_gamma - m_gamma).abs(), f64::max);
        m_gamma = new_gamma;
        m_beta = new_beta;
        // warm start the next E-step where this chain ended
        mcmc.initial = chain.draws.last().map(|d| to_params(d, shape));
        if change < opts.tol {
            converged = true;
            break;
        }
    }
    Ok(EmpiricalBayes {
        m_gamma,
        m_beta,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{finney1947, GroupedRow};

    #[test]
    fn noninformative_prior_values() {
        let p = PriorSpec::noninformative(2.0).unwrap();
        let at = |g: f64| log_prior(&ParamVector::new(g, vec![0.3]).unwrap(), &p);
        assert_eq!(at(0.5), f64::NEG_INFINITY);
        assert!((at(std::f64::consts::E) + 2.0).abs() < 1e-15);
    }

    #[test]
    fn prior_validation() {
        assert!(PriorSpec::noninformative(1.0).is_err());
        assert!(PriorSpec::hierarchical(1.0, 0.0, vec![0.0], 1.0).is_err());
        assert!(PriorSpec::hierarchical(1.0, 1.0, vec![0.0], -1.0).is_err());
        let (a, s) = PriorSpec::hierarchical(4.0, 2.0, vec![], 1.0)
            .unwrap()
            .gamma_shape_scale()
            .unwrap();
        assert!((a - 8.0).abs() < 1e-15 && (s - 0.5).abs() < 1e-15);
    }

    #[test]
    fn hierarchical_beta_mode_at_prior_mean() {
        let m = vec![0.2, -0.4];
        let p = PriorSpec::hierarchical(9.0, 100.0, m.clone(), 25.0).unwrap();
        let base = log_prior(&ParamVector::new(9.0, m.clone()).unwrap(), &p);
        for j in 0..2 {
            for d in [-0.5, -1e-3, 1e-3, 0.5] {
                let mut b = m.clone();
                b[j] += d;
                assert!(log_prior(&ParamVector::new(9.0, b).unwrap(), &p) < base);
            }
        }
    }

    #[test]
    fn gamma_density_matches_closed_form() {
        // shape 2, scale 3: x e^{-x/3} / 9
        let v = gamma_log_density(1.5, 2.0, 3.0);
        assert!((v - (1.5f64 * (-0.5f64).exp() / 9.0).ln()).abs() < 1e-13);
    }

    #[test]
    fn posterior_at_table_point() {
        let d = finney1947();
        let p = ParamVector::new(114.5084, vec![0.9735, 0.0266, 0.0053, -0.0051]).unwrap();
        let lp = log_posterior(
            &p,
            &d,
            &LinkFamily::weibull(1.0).unwrap(),
            &PriorSpec::noninformative(2.0).unwrap(),
        );
        assert!((lp - (-370.34 - 2.0 * 114.5084f64.ln())).abs() < 0.1, "{lp}");
    }

    #[test]
    fn impossible_start_is_rejected() {
        let d = GroupedDataset::new(
            vec![GroupedRow {
                x: vec![1.0],
                successes: 2,
                trials: 3,
            }],
            vec!["(intercept)".into()],
        )
        .unwrap();
        let opts = McmcOptions {
            initial: Some(ParamVector::new(2.0, vec![-1.0]).unwrap()),
            n_burn: 10,
            n_keep: 10,
            ..Default::default()
        };
        let err = run_mcmc(
            &d,
            &LinkFamily::weibull(2.0).unwrap(),
            &PriorSpec::noninformative(2.0).unwrap(),
            &opts,
        );
        assert!(matches!(err, Err(Error::ImpossibleStart)));
    }

    fn constant_chain(v: Vec<f64>, n: usize) -> PosteriorChain {
        PosteriorChain {
            link: LinkFamily::weibull(v[0]).unwrap(),
            param_names: param_names(v.len() - 1, true),
            draws: vec![v; n],
            seed: 0,
            burn_in: 0,
            thin: 1,
            acceptance_rate: 0.0,
            proposal_scales: vec![],
        }
    }

    #[test]
    fn dic_of_constant_chain_is_plugin_deviance() {
        let d = finney1947();
        let theta = vec![3.5, 0.2, 0.9, 0.13, -0.17];
        let c = constant_chain(theta.clone(), 7);
        let link = LinkFamily::weibull(1.0).unwrap();
        let r = dic(&c, &d, &link).unwrap();
        let dev = -2.0 * log_likelihood(&c.params_at(0), &d, &link).unwrap();
        assert_eq!(r.p_d, 0.0);
        assert_eq!(r.dic, dev);
    }

    #[test]
    fn summary_conventions() {
        let c = constant_chain(vec![2.0, 1.0], 4);
        let s = posterior_summary(&c);
        assert_eq!(s[0].sd, 0.0);
        let mut two = c.clone();
        two.draws = vec![vec![2.0, 0.0], vec![2.0, 1.0]];
        let s = posterior_summary(&two);
        assert!((s[1].mean - 0.5).abs() < 1e-15 && (s[1].sd - 0.5).abs() < 1e-15);
        assert!((s[1].median - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gamma_m_step_recovers_a_point_mass() {
        // a degenerate posterior at γ0 pulls the prior mean toward γ0
        let g0 = 5.0f64;
        let m = gamma_mean_m_step(g0, g0.ln(), 0.5);
        assert!((m - g0).abs() < 0.1, "{m}");
    }

    #[test]
    fn empty_data_eb_is_a_fixpoint() {
        let d = GroupedDataset::empty(vec!["(intercept)".into(), "x".into()]).unwrap();
        let opts = EmpiricalBayesOptions {
            m_gamma: Some(4.0),
            m_beta: Some(vec![0.5, -0.5]),
            ..Default::default()
        };
        let eb = empirical_bayes(&d, &LinkFamily::weibull(1.0).unwrap(), 100.0, 25.0, &opts).unwrap();
        assert_eq!(eb.m_gamma, 4.0);
        assert_eq!(eb.m_beta, vec![0.5, -0.5]);
    }

    #[test]
    fn chain_csv_has_header_and_rows() {
        let c = constant_chain(vec![2.0, 1.0, 3.0], 3);
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "gamma,beta0,beta1");
        assert_eq!(lines.len(), 4);
    }
}
