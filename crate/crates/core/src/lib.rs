//! Spectral transforms, Poisson brackets and flows of the open Toda lattice.

pub mod brackets;
pub mod coords;
pub mod envelope;
pub mod error;
pub mod flows;
pub mod poly;
pub mod sampling;
pub mod spectral;
pub mod tridiag;

pub use brackets::{Chart, PoissonStructure, ScalarFn, WeightFn};
pub use envelope::{State, StateEnvelope, StateKind};
pub use error::{Error, Result};
pub use flows::{FlowMethod, FlowSpec, Trajectory};
pub use poly::{Point, PoleResidues, Polynomial, RationalFunction};
pub use spectral::{Membership, Moments, SpectralData};
pub use tridiag::{Eigen, JacobiMatrix, PhasePoint};
