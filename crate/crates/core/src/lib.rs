//! Bayesian nonparametric inference of effective population size
//! trajectories from a timed genealogy.
//!
//! The coalescent likelihood is discretized on a grid into a Poisson-type
//! form, log population sizes get an intrinsic random-walk Gaussian Markov
//! random field prior, and the posterior is explored with one of five MCMC
//! kernels. A coalescent simulator and ESS-based efficiency diagnostics
//! complete the pipeline.

pub mod diagnostics;
pub mod error;
pub mod genealogy;
pub mod gmrf;
pub mod gridlik;
pub mod io;
pub mod model;
pub mod par;
pub mod samplers;
pub mod simulate;

pub use error::{Error, ErrorClass, Result};
