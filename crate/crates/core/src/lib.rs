//! Link-level simulation of terahertz widely-spaced multi-subarray (WSMS)
//! MIMO systems.
//!
//! A WSMS terminal packs its antennas into `k` planar subarrays with
//! half-wavelength element spacing, then spreads the subarrays far enough
//! apart that the whole array operates inside its own Rayleigh distance.
//! Spherical-wave phase curvature across the subarrays then carries `k`
//! spatial streams per propagation path, on top of the usual one stream per
//! path, so a sparse channel with `N_p` paths supports `k * N_p` streams.
//!
//! The crate covers the full design loop for such a link:
//!
//! * [`geometry`] — subarray layouts, reference-point coordinates, apertures,
//!   and the feasible set of subarray counts;
//! * [`channel`] — planar-wave, LoS-MIMO, and WSMS channel matrices from a
//!   two-path (line-of-sight plus ground-reflection) link budget;
//! * [`numerics`] — SVD, water-filling, capacity, and numerical rank;
//! * [`beamforming`] — the closed-form optimal hybrid beamformer under the
//!   block-diagonal constant-modulus constraints, and its validator;
//! * [`arrayconfig`] — spacing/subarray-count optimization (dominant-LoS
//!   relaxation with analytic gradients, exhaustive-search oracle, weighted
//!   multi-distance variant, and the end-to-end pipeline);
//! * [`power`] — hardware power models and energy efficiency;
//! * [`scenario`] — the resolved physical description of one link.
//!
//! All numerics are generic over the real scalar via [`Real`]; `f64` is the
//! workhorse (phases of order `2*pi*D/lambda ~ 1e5` rad leave `f32` with too
//! little headroom for the tight tolerances used in the tests, though the
//! API accepts it).

// pub mod arrayconfig;
// pub mod beamforming;
pub mod channel;
pub mod error;
pub mod geometry;
pub mod numerics;
// pub mod power;
pub mod scalar;
pub mod scenario;

pub use error::{Error, Result};
pub use scalar::{real, Cx, Real};

/// Dynamically-sized complex matrix over a [`Real`] scalar.
pub type CMatrix<T> = nalgebra::DMatrix<Cx<T>>;
/// Dynamically-sized complex column vector over a [`Real`] scalar.
pub type CVector<T> = nalgebra::DVector<Cx<T>>;

// Concrete f64 aliases for the main domain types.






pub type CMatrix64 = CMatrix<f64>;
pub type CVector64 = CVector<f64>;
