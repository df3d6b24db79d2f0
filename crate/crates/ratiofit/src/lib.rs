//! # ratiofit
//!
//! Direct density ratio estimation with flexible models.
//!
//! Given samples from two unknown densities, the goal is to estimate the
//! ratio r*(x) = p_nu(x) / p_de(x) without estimating either density. The
//! classical route minimizes an empirical Bregman divergence between a ratio
//! model and r*. With flexible models (neural networks) that empirical
//! objective is unbounded below, so the minimizer overfits catastrophically:
//! the training risk diverges to -inf while the estimate degrades.
//!
//! This crate implements the non-negative corrected risk: using only an upper
//! bound on the ratio (any constant C with 0 < C < 1/sup r*), the risk is
//! rewritten so that one aggregate term is non-negative in population, and the
//! empirical version of that term is clipped at zero. Minimizing the corrected
//! risk keeps flexible models stable.
//!
//! ## Layout
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`bregman`] | The four loss families (LSIF, UKL, BKL, PULog): f, l1, l2, derivatives |
//! | [`data`] | Sample batches, CSV input/output |
//! | [`models`] | Ratio models: MLP with output link, Gaussian-kernel linear, capped |
//! | [`risk`] | Empirical and corrected risks, gradient signals, population risks by quadrature |
//! | [`trainer`] | Mini-batch Adam training with the ascent correction branch |
//! | [`baselines`] | Closed-form kernel uLSIF, projected-gradient KLIEP |
//! | [`evalkit`] | Synthetic problems with analytic ratios, AUROC/PD, L2 error |
//! | [`apps`] | Outlier scoring, importance-weighted kernel ridge regression |
//!
//! ## Quick start
//!
//! ```rust
//! use ratiofit::bregman::{LossFamily, LossSpec};
//! use ratiofit::evalkit::{SyntheticProblem, Role};
//! use ratiofit::models::{MlpRatioModel, OutputLink};
//! use ratiofit::trainer::{train, TrainConfig};
//!
//! let problem = SyntheticProblem::gauss_shift(1, 0.5, vec![2.0], 0).unwrap();
//! let nu = problem.sample(Role::Numerator, 200, 1);
//! let de = problem.sample(Role::Denominator, 200, 2);
//!
//! let spec = LossSpec::new(LossFamily::Lsif, 0.5).unwrap();
//! let mut model = MlpRatioModel::new(&[1, 16, 1], OutputLink::Softplus, 7).unwrap();
//! let config = TrainConfig::new(1e-3, 64, 64, 50, 11);
//! let trace = train(&mut model, &spec, &nu, &de, &config, None).unwrap();
//! assert_eq!(trace.risk.len(), 50);
//! ```

#![forbid(unsafe_code)]

pub mod apps;
pub mod baselines;
pub mod bregman;
pub mod data;
pub mod evalkit;
pub mod models;
pub mod numfmt;
pub mod quad;
pub mod risk;
pub mod trainer;

mod error;

pub use error::{Error, Result};
