//! Fast spectral reconstruction algorithms for thermoacoustic tomography.
//!
//! Three inversions share one structure: a temporal FFT of the measured
//! pressure, an angular (circular or spherical) harmonic expansion, a
//! division by Hankel functions that turns detector data into Fourier
//! coefficients of the initial pressure, regridding to a Cartesian frequency
//! grid and a final inverse FFT.
//!
//! * [`recon2d`]: point detectors on a circle.
//! * [`recon3d`]: point detectors on a sphere.
//! * [`linedet`]: integrating line detectors on a rotating cylinder.
//!
//! [`forward`] provides a semi-analytic simulator used to generate test data,
//! and [`timereversal`] a finite-difference baseline.

pub mod cli;
pub mod error;
pub mod forward;
pub mod io;
pub mod linedet;
pub mod metrics;
pub mod model;
pub mod recon2d;
pub mod recon3d;
pub mod specfun;
pub mod specgrid;
pub mod timereversal;

pub use error::{Error, Result};
pub use num_complex::Complex64;
