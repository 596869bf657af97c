//! Simulation and analysis of heterodyne detection asymmetry in
//! local-local-oscillator CV-QKD.
//!
//! The crate is organised by pipeline stage:
//!
//! - [`signal`]: quadrature traces, phase ramps and unit conventions.
//! - [`detector`]: asymmetric heterodyne simulation and power-imbalance percentages.
//! - [`phase`]: reference-phase estimation, min-max symmetrisation and the phase-noise budget.
//! - [`keyrate`]: asymptotic reverse-reconciliation key rate with the Holevo bound.
//! - [`tomography`]: maximum-likelihood state reconstruction, Wigner functions and fidelity.
//!
//! All quadratures are in shot-noise units (vacuum variance 1) unless a
//! trace is explicitly converted to the internal tomography convention.

pub mod detector;
pub mod error;
pub mod keyrate;
pub mod phase;
pub mod signal;
pub mod tomography;

pub use detector::{
    gains_from_percent, noiseless_sweep, percent_difference, simulate_heterodyne, HeterodyneModel,
    PhaseSweep, ReferenceSignalSpec,
};
pub use error::{Error, Result};
pub use keyrate::{key_rate, max_distance, KeyRateBreakdown, KeyRateParams, MaxDistance, MutualInfoModel};
pub use phase::{estimate_phase, min_max_scale, min_max_scale_blocks, PhaseNoiseBudget};
pub use signal::{make_phase_ramp, Convention, QuadratureTrace};
pub use tomography::{DensityMatrix, FidelityConvention, PhaseTaggedSamples, WignerGrid};
