//! Robust pricing and information design against an outside option that the
//! seller only knows by its mean.
//!
//! A seller posts a price `p` and commits to a distribution `H` of posterior
//! beliefs with mean `mu`. The buyer may pay `s` to discover an outside option
//! `v ~ G` with mean `xi` and can come back afterwards. Nature picks the worst
//! `G`. The crate computes the optimal robust strategy in closed form, evaluates
//! the fixed-price game by concavification, and audits both with a discretised
//! min-max oracle.
//!
//! ```
//! use robustsell::{closed_form::robust_strategy, model::validate_params};
//!
//! let params = validate_params(0.6, 0.5, 0.2).unwrap();
//! let (strategy, report) = robust_strategy(&params).unwrap();
//! assert_eq!(strategy.kind.as_str(), "Full");
//! assert!((report.guarantee - 0.24).abs() < 1e-12);
//! ```

pub mod benchmarks;
pub mod cli;
pub mod closed_form;
pub mod comparative;
pub mod concavify;
pub mod error;
pub mod game;
pub mod model;
pub mod oracle;
pub mod search;

pub use error::{Error, Result};
pub use model::{ModelParams, PiecewiseDistribution, PolicyKind, SellingStrategy};
