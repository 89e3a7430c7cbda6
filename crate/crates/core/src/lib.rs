//! Quantum time-of-arrival expectation values, their ℏ-expansion, phases
//! that cancel the leading corrections, and arrival-time distributions for
//! Gaussian wavepackets.

pub mod corrections;
pub mod error;
pub mod imprint;
pub mod numerics;
pub mod phase_solver;
pub mod toa_distribution;
pub mod wavepacket;

pub use corrections::{AsymptoticToa, CorrectionSeries, ExactToa, SeriesTerm, Truncation};
pub use error::{QtoaError, Result};
pub use imprint::{ImprintConfig, ImprintProfile, SampledWavefunction};
pub use num_complex::Complex64;
pub use numerics::{ComplexPolynomial, QuadratureResult};
pub use phase_solver::{SolveMethod, SolveReport};
pub use toa_distribution::{EigenKind, ToaDistribution};
pub use wavepacket::{PacketParams, Parity, PhaseBasisTerm, PhaseSpec, Units};
