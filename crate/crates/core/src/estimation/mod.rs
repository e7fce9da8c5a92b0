//! Stepwise maximum-likelihood estimation.

pub mod data;
pub mod fit;
pub mod likelihood;
pub mod optim;

pub use data::{point_stats, sample_crosscorr_stats, split_alternate, standardize_with, CrossCorrStats, Dataset, PointStats};
pub use fit::{fit_bivariate, fit_marginal, fit_rho_fullml, fit_rho_pointwise, initial_range, BivariateFit, FitOptions, FitReport, MarginalFit, RhoFit, RhoMethod};
pub use likelihood::{joint_loglik, latent_gaussian_loglik, marginal_loglik, pointwise_loglik};
pub use optim::{fd_gradient, minimize, OptimOptions, OptimResult};
