//! Link families mapping a linear predictor η to a success probability μ.
//!
//! The Weibull link is `μ = 1 - exp(-η^γ)` for `η > 0` and exactly zero
//! otherwise; the threshold of the underlying Weibull distribution is folded
//! into the intercept. The reflected variant uses the survival function
//! `μ = exp(-η^γ)` instead, so it decreases in η.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{ln_gamma, ln_norm_cdf, log1mexp, log1pexp, norm_cdf, norm_pdf, norm_quantile};

/// Name of a link family, without its shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    Weibull,
    ReflectedWeibull,
    Logit,
    Probit,
    Cloglog,
    Loglog,
}

impl LinkKind {
    pub const ALL: [LinkKind; 6] = [
        LinkKind::Weibull,
        LinkKind::ReflectedWeibull,
        LinkKind::Logit,
        LinkKind::Probit,
        LinkKind::Cloglog,
        LinkKind::Loglog,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LinkKind::Weibull => "weibull",
            LinkKind::ReflectedWeibull => "reflected_weibull",
            LinkKind::Logit => "logit",
            LinkKind::Probit => "probit",
            LinkKind::Cloglog => "cloglog",
            LinkKind::Loglog => "loglog",
        }
    }

    /// Whether the family carries a free shape parameter.
    pub fn has_shape(self) -> bool {
        matches!(self, LinkKind::Weibull | LinkKind::ReflectedWeibull)
    }
}

impl fmt::Display for LinkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LinkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "weibull" => Ok(LinkKind::Weibull),
            "reflected_weibull" | "reflected" | "rweibull" => Ok(LinkKind::ReflectedWeibull),
            "logit" | "logistic" => Ok(LinkKind::Logit),
            "probit" => Ok(LinkKind::Probit),
            "cloglog" | "comp_log_log" => Ok(LinkKind::Cloglog),
            "loglog" | "log_log" => Ok(LinkKind::Loglog),
            other => Err(Error::Mismatch(format!("unknown link `{other}`"))),
        }
    }
}

/// A link family together with its shape parameter when it has one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LinkFamily {
    Weibull { gamma: f64 },
    ReflectedWeibull { gamma: f64 },
    Logit,
    Probit,
    Cloglog,
    Loglog,
}

fn check_shape(gamma: f64) -> Result<f64> {
    if gamma.is_finite() && gamma > 0.0 {
        Ok(gamma)
    } else {
        Err(Error::InvalidShape(gamma))
    }
}

/// `γ ln η`, the log of `η^γ`, for `η > 0`.
#[inline]
fn log_power(eta: f64, gamma: f64) -> f64 {
    gamma * eta.ln()
}

/// `η^γ` with the overflow guard: beyond ±700 in log-space the result
/// saturates to `∞` / `0`.
#[inline]
pub(crate) fn weibull_power(eta: f64, gamma: f64) -> f64 {
    let lt = log_power(eta, gamma);
    if lt > 700.0 {
        f64::INFINITY
    } else if lt < -700.0 {
        0.0
    } else {
        lt.exp()
    }
}

/// `ln(1 - exp(-η^γ))` for `η > 0`.
#[inline]
fn ln_weibull_cdf(eta: f64, gamma: f64) -> f64 {
    let lt = log_power(eta, gamma);
    if lt < -30.0 {
        // ln(1 - e^{-t}) = ln t - t/2 + O(t^2)
        lt - 0.5 * lt.exp()
    } else {
        log1mexp(weibull_power(eta, gamma))
    }
}

impl LinkFamily {
    pub fn weibull(gamma: f64) -> Result<Self> {
        Ok(LinkFamily::Weibull {
            gamma: check_shape(gamma)?,
        })
    }

    pub fn reflected_weibull(gamma: f64) -> Result<Self> {
        Ok(LinkFamily::ReflectedWeibull {
            gamma: check_shape(gamma)?,
        })
    }

    /// Builds a family of the given kind. Shape families need `gamma`.
    pub fn new(kind: LinkKind, gamma: Option<f64>) -> Result<Self> {
        match kind {
            LinkKind::Weibull => Self::weibull(gamma.ok_or(Error::InvalidShape(f64::NAN))?),
            LinkKind::ReflectedWeibull => {
                Self::reflected_weibull(gamma.ok_or(Error::InvalidShape(f64::NAN))?)
            }
            LinkKind::Logit => Ok(LinkFamily::Logit),
            LinkKind::Probit => Ok(LinkFamily::Probit),
            LinkKind::Cloglog => Ok(LinkFamily::Cloglog),
            LinkKind::Loglog => Ok(LinkFamily::Loglog),
        }
    }

    pub fn kind(&self) -> LinkKind {
        match self {
            LinkFamily::Weibull { .. } => LinkKind::Weibull,
            LinkFamily::ReflectedWeibull { .. } => LinkKind::ReflectedWeibull,
            LinkFamily::Logit => LinkKind::Logit,
            LinkFamily::Probit => LinkKind::Probit,
            LinkFamily::Cloglog => LinkKind::Cloglog,
            LinkFamily::Loglog => LinkKind::Loglog,
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match *self {
            LinkFamily::Weibull { gamma } | LinkFamily::ReflectedWeibull { gamma } => Some(gamma),
            _ => None,
        }
    }

    /// Same family with a new shape; fixed-shape families ignore `gamma`.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        match self {
            LinkFamily::Weibull { .. } => Self::weibull(gamma),
            LinkFamily::ReflectedWeibull { .. } => Self::reflected_weibull(gamma),
            other => Ok(*other),
        }
    }

    /// μ = g⁻¹(η).
    pub fn inverse_link(&self, eta: f64) -> f64 {
        match *self {
            LinkFamily::Weibull { gamma } => {
                if eta > 0.0 {
                    -(-weibull_power(eta, gamma)).exp_m1()
                } else {
                    0.0
                }
            }
            LinkFamily::ReflectedWeibull { gamma } => {
                if eta > 0.0 {
                    (-weibull_power(eta, gamma)).exp()
                } else {
                    1.0
                }
            }
            LinkFamily::Logit => {
                if eta >= 0.0 {
                    1.0 / (1.0 + (-eta).exp())
                } else {
                    let e = eta.exp();
                    e / (1.0 + e)
                }
            }
            LinkFamily::Probit => norm_cdf(eta),
            LinkFamily::Cloglog => -(-eta.exp()).exp_m1(),
            LinkFamily::Loglog => (-(-eta).exp()).exp(),
        }
    }

    /// `1 - μ`, computed without forming `μ` first.
    pub fn complement(&self, eta: f64) -> f64 {
        match *self {
            LinkFamily::Weibull { gamma } => {
                if eta > 0.0 {
                    (-weibull_power(eta, gamma)).exp()
                } else {
                    1.0
                }
            }
            LinkFamily::ReflectedWeibull { gamma } => {
                if eta > 0.0 {
                    -(-weibull_power(eta, gamma)).exp_m1()
                } else {
                    0.0
                }
            }
            LinkFamily::Logit => LinkFamily::Logit.inverse_link(-eta),
            LinkFamily::Probit => norm_cdf(-eta),
            LinkFamily::Cloglog => (-eta.exp()).exp(),
            LinkFamily::Loglog => -(-(-eta).exp()).exp_m1(),
        }
    }

    /// `ln μ`; `-∞` where the family assigns probability zero.
    pub fn ln_inverse_link(&self, eta: f64) -> f64 {
        match *self {
            LinkFamily::Weibull { gamma } => {
                if eta > 0.0 {
                    ln_weibull_cdf(eta, gamma)
                } else {
                    f64::NEG_INFINITY
                }
            }
            LinkFamily::ReflectedWeibull { gamma } => {
                if eta > 0.0 {
                    -weibull_power(eta, gamma)
                } else {
                    0.0
                }
            }
            LinkFamily::Logit => -log1pexp(-eta),
            LinkFamily::Probit => ln_norm_cdf(eta),
            LinkFamily::Cloglog => {
                if eta < -30.0 {
                    eta - 0.5 * eta.exp()
                } else {
                    log1mexp(eta.exp())
                }
            }
            LinkFamily::Loglog => -(-eta).exp(),
        }
    }

    /// `ln(1 - μ)`.
    pub fn ln_complement(&self, eta: f64) -> f64 {
        match *self {
            LinkFamily::Weibull { gamma } => {
                if eta > 0.0 {
                    -weibull_power(eta, gamma)
                } else {
                    0.0
                }
            }
            LinkFamily::ReflectedWeibull { gamma } => {
                if eta > 0.0 {
                    ln_weibull_cdf(eta, gamma)
                } else {
                    f64::NEG_INFINITY
                }
            }
            LinkFamily::Logit => -log1pexp(eta),
            LinkFamily::Probit => ln_norm_cdf(-eta),
            LinkFamily::Cloglog => -eta.exp(),
            LinkFamily::Loglog => {
                if eta > 30.0 {
                    -eta - 0.5 * (-eta).exp()
                } else {
                    log1mexp((-eta).exp())
                }
            }
        }
    }

    /// η = g(μ) for `μ ∈ (0, 1)`.
    pub fn forward_link(&self, mu: f64) -> Result<f64> {
        if !(mu > 0.0 && mu < 1.0) {
            return Err(Error::Domain {
                what: "forward link (expects 0 < mu < 1)",
                value: mu,
            });
        }
        Ok(match *self {
            LinkFamily::Weibull { gamma } => (-(-mu).ln_1p()).powf(1.0 / gamma),
            LinkFamily::ReflectedWeibull { gamma } => (-mu.ln()).powf(1.0 / gamma),
            LinkFamily::Logit => mu.ln() - (-mu).ln_1p(),
            LinkFamily::Probit => norm_quantile(mu),
            LinkFamily::Cloglog => (-(-mu).ln_1p()).ln(),
            LinkFamily::Loglog => -(-mu.ln()).ln(),
        })
    }

    /// dμ/dη. Negative for the reflected Weibull family, which decreases in η.
    pub fn density(&self, eta: f64) -> f64 {
        match *self {
            LinkFamily::Weibull { gamma } | LinkFamily::ReflectedWeibull { gamma } => {
                let d = if eta > 0.0 {
                    let t = weibull_power(eta, gamma);
                    if t.is_infinite() {
                        0.0
                    } else {
                        (gamma.ln() + (gamma - 1.0) * eta.ln() - t).exp()
                    }
                } else if eta < 0.0 || gamma > 1.0 {
                    0.0
                } else if gamma == 1.0 {
                    1.0
                } else {
                    f64::INFINITY
                };
                if matches!(self, LinkFamily::ReflectedWeibull { .. }) {
                    -d
                } else {
                    d
                }
            }
            LinkFamily::Logit => {
                let p = self.inverse_link(eta);
                p * self.complement(eta)
            }
            LinkFamily::Probit => norm_pdf(eta),
            LinkFamily::Cloglog => (eta - eta.exp()).exp(),
            LinkFamily::Loglog => (-eta - (-eta).exp()).exp(),
        }
    }
}

impl fmt::Display for LinkFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.gamma() {
            Some(g) => write!(f, "{}(gamma={g})", self.kind()),
            None => write!(f, "{}", self.kind()),
        }
    }
}

/// Pearson moment skewness of the standard Weibull distribution with shape `gamma`.
///
/// Evaluated in log-space as ratios over `Γ₂^{3/2}` so small shapes do not
/// overflow and large shapes keep the variance term's cancellation exact.
pub fn moment_skewness(gamma: f64) -> f64 {
    let lg = |j: f64| ln_gamma(1.0 + j / gamma);
    let (l1, l2, l3) = (lg(1.0), lg(2.0), lg(3.0));
    let num = (l3 - 1.5 * l2).exp() - 3.0 * (l1 - 0.5 * l2).exp() + 2.0 * (3.0 * l1 - 1.5 * l2).exp();
    let var = -(2.0 * l1 - l2).exp_m1();
    num / var.powf(1.5)
}

/// Arnold–Groeneveld (mode-based) skewness, `2 exp((1-γ)/γ) - 1`.
pub fn ag_skewness(gamma: f64) -> f64 {
    2.0 * ((1.0 - gamma) / gamma).exp() - 1.0
}

/// Both skewness measures for one shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SkewnessReport {
    pub gamma: f64,
    pub moment_skewness: f64,
    pub ag_skewness: f64,
}

impl SkewnessReport {
    pub fn new(gamma: f64) -> Result<Self> {
        let gamma = check_shape(gamma)?;
        Ok(SkewnessReport {
            gamma,
            moment_skewness: moment_skewness(gamma),
            ag_skewness: ag_skewness(gamma),
        })
    }
}

/// Lower bound of the Weibull moment skewness over all shapes.
pub const MOMENT_SKEWNESS_FLOOR: f64 = -1.1395;
/// Lower bound of the Arnold–Groeneveld skewness, `2/e - 1`.
pub const AG_SKEWNESS_FLOOR: f64 = -0.26424;

/// Coefficients of a shifted Weibull cdf `1 - exp(-(a + bη)^c)` that mimics
/// a symmetric link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeibullApproximant {
    pub offset: f64,
    pub scale: f64,
    pub shape: f64,
}

/// Weibull stand-in for the normal cdf.
pub const PROBIT_APPROXIMANT: WeibullApproximant = WeibullApproximant {
    offset: 0.90114,
    scale: 0.27787,
    shape: 3.60235,
};

/// Weibull stand-in for the logistic cdf.
pub const LOGIT_APPROXIMANT: WeibullApproximant = WeibullApproximant {
    offset: 0.89864,
    scale: 0.16957,
    shape: 3.50215,
};

impl WeibullApproximant {
    /// Value at η; zero where the base `a + bη` is not positive.
    pub fn eval(&self, eta: f64) -> f64 {
        LinkFamily::Weibull { gamma: self.shape }.inverse_link(self.offset + self.scale * eta)
    }
}

/// |Weibull(1 + η/γ) − cloglog(η)|, the distance between the rescaled
/// Weibull link and its large-shape limit.
pub fn cloglog_limit_gap(eta: f64, gamma: f64) -> Result<f64> {
    let gamma = check_shape(gamma)?;
    let base = 1.0 + eta / gamma;
    if !(base > 0.0) {
        return Err(Error::Domain {
            what: "cloglog limit gap (needs 1 + eta/gamma > 0)",
            value: base,
        });
    }
    let weibull = -(-(gamma * (eta / gamma).ln_1p()).exp()).exp_m1();
    let cloglog = LinkFamily::Cloglog.inverse_link(eta);
    Ok((weibull - cloglog).abs())
}
