//! Exact orthogonal polynomials for matrix-model weights `e^{-N V(x)}` on the
//! real line, the large-N equilibrium problem on hyperelliptic spectral
//! curves, and the closed-form asymptotics that connect the two.
//!
//! The crate is organised bottom-up:
//!
//! * [`potential`] and [`config`]: the polynomial potential and run settings.
//! * [`exact`]: multiprecision quadrature, Stieltjes recurrence, wave
//!   functions, Christoffel–Darboux kernel, partition function.
//! * [`equilibrium`]: cut endpoints, density, resolvent, effective potential
//!   and filling fractions.
//! * [`genus0`]: Joukowski parametrization and one-cut asymptotics.
//! * [`riemann`]: periods, Abel map, theta functions, prime form,
//!   third-kind differentials and multi-cut asymptotics.
//! * [`sampler`]: Metropolis sampler of the eigenvalue gas.
//! * [`compare`]: grid comparisons of exact and predicted wave functions.

pub mod compare;
pub mod config;
pub mod equilibrium;
pub mod error;
pub mod exact;
pub mod genus0;
pub mod potential;
pub mod quad;
pub mod riemann;
pub mod sampler;

pub use config::RunConfig;
pub use equilibrium::{CutSet, EquilibriumMeasure, RegimeTag};
pub use error::{Error, Result};
pub use exact::{ExactEngine, RecurrenceTable, WaveSample};
pub use genus0::{AsymptoticPrediction, JoukowskiMap};
pub use potential::Potential;
pub use riemann::{PeriodData, SpectralCurve, SurfacePoint, ThetaContext};
