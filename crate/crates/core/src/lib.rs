//! Eigenvalue counting functions and heat traces of Laplace spectra.
//!
//! For a spectrum `{lambda_n}` the crate evaluates the counting function
//! `N(lambda)` and the heat trace `K(t) = sum_n exp(-lambda_n t)`, and the
//! four ways of passing between them:
//!
//! * forward: `K(t) = t * int_0^inf N(lambda) exp(-lambda t) dlambda`
//!   ([`transforms::laplace_of_counting`]);
//! * inverse: the Bromwich contour integral recovering `N` from `K`
//!   ([`inversion::bromwich_invert`]);
//! * Fermi-Dirac smoothing `N(lambda) = lim sum_n 1 / (exp(beta (lambda_n - lambda)) + 1)`
//!   ([`smoothing::smoothed_counting`]);
//! * the constant-density regime `N(1/t) ~ K(t)` and the first-term Tauberian
//!   fit ([`asymptotics`]).
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! `*64` aliases below are what the command-line driver uses.

pub mod asymptotics;
pub mod error;
pub mod inversion;
pub mod quadrature;
pub mod scalar;
pub mod smoothing;
pub mod special;
pub mod spectrum;
pub mod sum;
pub mod table;
pub mod transforms;

pub use error::{Error, Result};
pub use scalar::Real;
pub use spectrum::{
    generate_constant_density, generate_interval, generate_rectangle, generate_torus,
    load_spectrum, save_spectrum, GeneratorSpec, Level, Spectrum,
};
pub use table::{EvalRow, EvalTable};
pub use transforms::{
    counting, density_estimate, heat_trace, laplace_of_counting, partial_exponential_sum,
    CountingMode, HeatTrace, LaplaceMethod, LaplaceTransform, TailBound,
};

pub type Spectrum64 = Spectrum<f64>;
pub type Spectrum32 = Spectrum<f32>;
pub type GeneratorSpec64 = GeneratorSpec<f64>;
pub type EvalTable64 = EvalTable<f64>;
pub type InversionConfig64 = inversion::InversionConfig<f64>;
pub type SmoothingConfig64 = smoothing::SmoothingConfig<f64>;
