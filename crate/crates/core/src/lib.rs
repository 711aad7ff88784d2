//! Numerical toolkit for the two-phase contact Muskat problem: corner spectra,
//! admissible weight windows, the Mellin symbol, and a fixed-domain simulator
//! of the interface near its contact corners.

pub mod elliptic;
pub mod error;
pub mod evolution;
pub mod geometry;
pub mod roots;
pub mod special;
pub mod spectral;
pub mod symbol;
pub mod weights;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use spectral::{CornerParams, Kind, SpectralQuantities, ZeroSet};
