//! Explicit exponential-decay certificates for viscously damped Timoshenko
//! beams with space-varying parameters.
//!
//! The crate is organised along the analysis pipeline:
//!
//! * [`params`] – parameter profiles, validation and essential extrema;
//! * [`certificate`] – Lyapunov constants, dissipation coefficients and the
//!   decay-rate certificate;
//! * [`weight_search`] – feasible starting weights and derivative-free
//!   maximisation of the certified rate;
//! * [`discretize`] – structure-preserving port-Hamiltonian discretization;
//! * [`simulate`] – implicit-midpoint time integration and bound checking;
//! * [`cli`] – JSON configuration, reports and the `timo` subcommands.

pub mod certificate;
pub mod cli;
pub mod discretize;
pub mod error;
pub mod params;
pub mod quadrature;
pub mod simulate;
pub mod weight_search;

pub use certificate::{certify, Certificate, Certifier, Gate, LyapunovWeights, StateFunction};
pub use discretize::{build_system, DiscreteSystem};
pub use error::{Error, Result};
pub use params::{BeamParameters, BoundaryLayout, ParameterField};
pub use simulate::{check_bound, integrate, InitialCondition, Trajectory};
pub use weight_search::{feasible_seed, maximize_kappa2, SearchConfig};
