//! Sparse linear array design and direction-of-arrival simulation for
//! non-circular sources.
//!
//! The crate builds the augmented-ULA family of geometries (AULAs, SAULAs,
//! TSAULAs, Co-TSAULAs) plus ULA and nested baselines, analyses their
//! sum-difference co-arrays with exact integer arithmetic, quantifies mutual
//! coupling through a banded Toeplitz model, and runs co-array MUSIC on
//! simulated snapshots.
//!
//! Co-array math works on `i64` positions in units of half a wavelength.
//! Everything that touches complex samples is generic over a [`Real`] scalar
//! (`f32` or `f64`); the `*F64` / `*F32` aliases below name the common
//! instantiations.

pub mod coarray;
pub mod coupling;
pub mod error;
pub mod estimation;
pub mod geometry;
pub mod scalar;
pub mod signal;
pub mod summary;
pub mod verify;

pub use coarray::{CoarrayReport, LagSet};
pub use coupling::CouplingModel;
pub use error::{Error, Result};
pub use estimation::{EstimationResult, MonteCarloResult, MusicConfig, Spectrum};

pub use geometry::{Family, SensorArray};
pub use scalar::Real;
pub use signal::{ExtendedCovariance, Scenario, VirtualObservation};

pub use num_complex::Complex;

/// Dense complex matrix over a real scalar.
pub type CMatrix<T> = nalgebra::DMatrix<Complex<T>>;
/// Dense complex column vector over a real scalar.
pub type CVector<T> = nalgebra::DVector<Complex<T>>;

pub type CMatrixF64 = CMatrix<f64>;
pub type CMatrixF32 = CMatrix<f32>;
pub type ExtendedCovarianceF64 = ExtendedCovariance<f64>;
pub type ExtendedCovarianceF32 = ExtendedCovariance<f32>;
pub type VirtualObservationF64 = VirtualObservation<f64>;
pub type VirtualObservationF32 = VirtualObservation<f32>;
