//! Discrete-noise smoothed analysis laboratory.
//!
//! * [`noise`]: integer noise laws, characteristic functions and
//!   `(mu, D)`-boundedness certificates.
//! * [`linalg`]: integer and real matrices, Jacobi SVD, condition numbers,
//!   exact rational elimination.
//! * [`concentration`]: exact small-ball probabilities of integer linear forms
//!   and their Fourier-integral upper bound.
//! * [`gap`]: symmetric generalized arithmetic progressions, discretization
//!   and inverse Littlewood-Offord search.
//! * [`witness`]: lattice rounding of near-null vectors, witness
//!   classification, epsilon-nets and the small-image event.
//! * [`experiment`]: seeded Monte Carlo experiments with CSV/JSON output.

pub mod concentration;
pub mod error;
pub mod experiment;
pub mod gap;
pub mod linalg;
pub mod noise;
pub mod stats;
pub mod text;
pub mod witness;

pub use error::{Error, Result};
pub use linalg::{IntegerMatrix, Kappa, RealMatrix, SingularSpectrum};
pub use noise::{BoundednessCertificate, DiscreteDistribution};
