//! Random-forest forecasting of annual house-price growth on a country panel.
//!
//! The crate covers the whole pipeline:
//!
//! - [`panel`]: long-format CSV ingestion, lagged design matrices, descriptive
//!   statistics and a Gaussian kernel density estimate.
//! - [`cart`]: CART regression trees grown by exhaustive MSE split search.
//! - [`forest`]: random forests on row subsamples with per-split feature
//!   sampling, reproducible under any worker count.
//! - [`baselines`]: AR(1) and OLS benchmarks with heteroskedasticity-robust
//!   standard errors.
//! - [`explain`]: exact interventional Shapley values for forests and
//!   predictor importances.
//! - [`effects`]: partial-effect curves and surfaces with the other covariates
//!   held at their training means.
//! - [`evalgrid`]: RMSE/MAE grids over forest hyperparameters, in sample and on
//!   a holdout, and the final-year cross-country scatter.
//! - [`cli`]: the command-line front end used by the `forestcast` binary.
//!
//! [`synthetic`] generates seeded panels with known nonlinear structure; the
//! runnable programs under `examples/` use it so that every capability can be
//! exercised without proprietary data.

pub mod baselines;
pub mod cart;
pub mod cli;
pub mod effects;
mod error;
pub mod evalgrid;
pub mod explain;
pub mod forest;
pub mod panel;
pub mod rng;
pub mod synthetic;

pub use error::{Error, Result};
