//! Shared fixtures for the benchmarks.

use muskat_core::geometry::{DomainSpec, InterfaceChart, Mesh, MeshParams};
use muskat_core::{CornerParams, SpectralQuantities};
use std::sync::Arc;

/// The π/3 corner with a₂ = √3, a₃ = 0, k = 1/2.
pub fn worked_quantities() -> SpectralQuantities {
    let c = CornerParams::new(3f64.sqrt(), 0.0, 0.5, 1, 3).expect("valid corner");
    muskat_core::spectral::compute_quantities(&c).expect("worked corner")
}

pub fn default_mesh(level: u32) -> (InterfaceChart, Arc<Mesh>) {
    let chart = InterfaceChart::new(&DomainSpec::default()).expect("default domain");
    let mesh = Mesh::build(&chart, MeshParams { level, ..Default::default() }).expect("mesh");
    (chart, Arc::new(mesh))
}
