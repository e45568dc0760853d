pub mod bayes;
pub mod data;
pub mod error;
pub mod likelihood;
pub mod linalg;
pub mod links;
pub mod mle;
pub mod multinomial;
pub mod optim;
pub mod parallel;
pub mod selection;
pub mod special;

pub use bayes::{PosteriorChain, PriorSpec};
pub use data::{GroupedDataset, GroupedRow, MultinomialDataset, MultinomialRow};
pub use error::{Error, Result};
pub use likelihood::ParamVector;
pub use links::{LinkFamily, LinkKind};
pub use mle::{FitOptions, FitResult};
pub use multinomial::MultinomialFit;
pub use selection::ComparisonRow;
