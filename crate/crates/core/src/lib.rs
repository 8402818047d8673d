//! Numerical toolkit for entropy and Fisher information inequalities on
//! sums of independent random variables.
//!
//! Densities live on uniform grids ([`GridDensity`]); sums are FFT
//! convolutions. On top of that the crate computes entropy, entropy power,
//! Fisher information and relative entropy to the Gaussian, and checks the
//! subset-sum inequalities for collections of subsets of `{1..n}`
//! ([`verifiers`]), the monotonicity of `H(Y_n)` along the CLT ([`clt`]) and
//! the variance-drop bounds behind them on finite product spaces
//! ([`anova`]).
//!
//! Everything numeric is generic over [`Real`] (`f32`, `f64`); packings and
//! linear programs also run in exact rationals through [`LpField`].
//!
//! ```
//! use infosum::{Distribution, GridConfig, SubsetCollection, StandardKind, SumSystem, Tolerances};
//! use infosum::verifiers::verify_fii;
//!
//! let sys = SumSystem::iid(Distribution::gaussian(0.0, 1.0), 3, &GridConfig::default()).unwrap();
//! let c = SubsetCollection::standard(StandardKind::LeaveOneOut, 3).unwrap();
//! let report = verify_fii(&sys, &c, &Tolerances::default()).unwrap();
//! assert!(report.satisfied);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anova;
pub mod clt;
pub mod collections;
pub mod density;
pub mod error;
pub mod functionals;
pub mod lowdisc;
pub mod quadrature;
pub mod scalar;
pub mod simplex;
pub mod verifiers;

pub use collections::{FractionalPacking, StandardKind, SubsetCollection, WeightVector};
pub use density::{build_density, convolve, Distribution, GridConfig, GridDensity};
pub use error::{Error, Result};
pub use functionals::{entropy, entropy_power, fisher_information, rel_entropy_gaussian, score};
pub use scalar::{LpField, Real};
pub use verifiers::{InequalityReport, ReportStatus, SumSystem, Tolerances};

pub type Density = GridDensity<f64>;
pub type Density32 = GridDensity<f32>;
pub type Dist = Distribution<f64>;
pub type System = SumSystem<f64>;
pub type Report = InequalityReport<f64>;
pub type Weights = WeightVector<f64>;
pub type Packing = FractionalPacking<f64>;
pub type ExactPacking = FractionalPacking<num_rational::Rational64>;
