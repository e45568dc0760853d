use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "skewlink", version, about = "Binomial and multinomial regression under skewed Weibull links")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Maximum-likelihood fit of one binomial model.
    Fit(FitArgs),
    /// Posterior sampling for one binomial model.
    Bayes(BayesArgs),
    /// Continuation-ratio fit of multinomial data.
    Multinomial(MultinomialArgs),
    /// Fit several links to the same data and rank them.
    Compare(CompareArgs),
    /// Regenerate the comparison tables for a builtin dataset.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Mle,
    Bayes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PriorKind {
    Hierarchical,
    Noninf,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Builtin dataset name (finney1947, grazeffe2008) or CSV path.
    #[arg(long)]
    pub data: String,
    /// Covariate terms, e.g. `logdose,rotenone` or `dose/20,dose/20^2`.
    #[arg(long, value_delimiter = ',')]
    pub covariates: Option<Vec<String>>,
    /// Success-count column of a binomial CSV.
    #[arg(long, default_value = "s")]
    pub successes: String,
    /// Trial-count column of a binomial CSV.
    #[arg(long, default_value = "t")]
    pub trials: String,
    /// Category count columns of a multinomial CSV, in category order.
    #[arg(long, value_delimiter = ',')]
    pub counts: Option<Vec<String>>,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct LinkArgs {
    #[arg(long, default_value = "weibull")]
    pub link: String,
    /// Hold the Weibull shape at this value instead of estimating it.
    #[arg(long)]
    pub gamma_fixed: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct PriorArgs {
    #[arg(long, value_enum, default_value_t = PriorKind::Hierarchical)]
    pub prior: PriorKind,
    /// Exponent of the non-informative prior γ^(-c).
    #[arg(long, default_value_t = 2.0)]
    pub c: f64,
    #[arg(long, default_value_t = 100.0)]
    pub v_gamma: f64,
    #[arg(long, default_value_t = 25.0)]
    pub v_beta: f64,
    /// Estimate the hierarchical prior means by Monte-Carlo EM.
    #[arg(long)]
    pub eb: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ChainArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 10_000)]
    pub burn: usize,
    /// Number of kept draws after thinning.
    #[arg(long, default_value_t = 50_000)]
    pub keep: usize,
    #[arg(long, default_value_t = 5)]
    pub thin: usize,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub link: LinkArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Also write observed vs predicted proportions as CSV.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BayesArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub link: LinkArgs,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[command(flatten)]
    pub chain: ChainArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Write the kept draws as CSV.
    #[arg(long)]
    pub chain_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct MultinomialArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub link: LinkArgs,
    #[arg(long, value_enum, default_value_t = Method::Mle)]
    pub method: Method,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[command(flatten)]
    pub chain: ChainArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_delimiter = ',', default_value = "weibull,cloglog,probit,logit")]
    pub links: Vec<String>,
    #[arg(long, value_enum, default_value_t = Method::Mle)]
    pub method: Method,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[command(flatten)]
    pub chain: ChainArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ReproduceArgs {
    /// finney1947 or grazeffe2008
    pub dataset: String,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub burn: usize,
    #[arg(long, default_value_t = 50_000)]
    pub keep: usize,
    #[arg(long, default_value_t = 5)]
    pub thin: usize,
    /// Skip the Bayesian part of the poison reproduction.
    #[arg(long)]
    pub no_bayes: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}
