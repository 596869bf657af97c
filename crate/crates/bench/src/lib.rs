//! Fixtures shared by the benchmarks.

use hetasym_core::tomography::mle_reconstruct;
use hetasym_core::{
    estimate_phase, DensityMatrix, HeterodyneModel, PhaseSweep, PhaseTaggedSamples, QuadratureTrace,
    ReferenceSignalSpec,
};

/// Noisy coherent-state trace with `phases × pulses` rows.
pub fn coherent_trace(amplitude_sq: f64, phases: usize, pulses: usize, seed: u64) -> QuadratureTrace {
    let spec = ReferenceSignalSpec { amplitude_sq, sweep: PhaseSweep::full_turn(phases), pulses_per_phase: pulses };
    hetasym_core::simulate_heterodyne(&spec, &HeterodyneModel::default(), seed).expect("valid fixture")
}

/// Samples tagged with block-estimated phases.
pub fn tagged(trace: &QuadratureTrace, block: usize) -> PhaseTaggedSamples {
    let phases: Vec<f64> = estimate_phase(trace, block)
        .expect("block divides trace")
        .into_iter()
        .flat_map(|p| std::iter::repeat(p.unwrap_or(0.0)).take(block))
        .collect();
    PhaseTaggedSamples::from_trace(trace, &phases).expect("matching lengths")
}

/// A short reconstruction, used as the input of Wigner benchmarks.
pub fn reconstructed(dim: usize) -> DensityMatrix {
    let samples = tagged(&coherent_trace(16.0, 100, 100, 1), 100);
    let opts = hetasym_core::tomography::MleOptions { dim, max_iter: 50, tol: 1e-8 };
    mle_reconstruct(&samples, &opts).expect("reconstruction").rho
}
