//! Homodyne-style state tomography of the reference signal.
//!
//! Everything here uses the internal convention `x = (a + a†)/√2`
//! (vacuum variance 1/2, ℏ = 1). Traces in SNU must go through
//! [`crate::signal::to_internal_quadratures`] first, which
//! [`PhaseTaggedSamples::from_trace`] does on its own.

mod density;
mod fidelity;
mod mle;
mod projector;
mod state;
mod wigner;

pub use density::DensityMatrix;
pub use fidelity::{fidelity, FidelityConvention};
pub use mle::{mle_reconstruct, MleOptions, MleResult, PROBABILITY_FLOOR};
pub use projector::{hermite_gauss, quadrature_projector};
pub use state::{fit_coherent, ideal_coherent_state, required_dim};
pub use wigner::{linspace, wigner, WignerGrid, NORMALISATION_RANGE};

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::error::{invalid, Error, Result};
use crate::signal::{to_internal_quadratures, QuadratureTrace};

/// Quadrature outcomes with the LO phase each was measured at.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTaggedSamples {
    theta: Vec<f64>,
    x: Vec<f64>,
}

impl PhaseTaggedSamples {
    pub fn new(theta: Vec<f64>, x: Vec<f64>) -> Result<Self> {
        if theta.len() != x.len() {
            return Err(Error::LengthMismatch { left: theta.len(), right: x.len() });
        }
        if theta.is_empty() {
            return Err(invalid("no tomography samples"));
        }
        for s in [&theta, &x] {
            if let Some(i) = s.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(i));
            }
        }
        Ok(Self { theta, x })
    }

    /// Heterodyne samples re-expressed in the frame of the reference state.
    ///
    /// A pulse with reference phase `φ` measured as `(x, p)` is the state
    /// `|α⟩` probed along `−φ` and `π/2 − φ`, so each row yields two
    /// samples. SNU traces are converted to the internal convention.
    pub fn from_trace(trace: &QuadratureTrace, phases: &[f64]) -> Result<Self> {
        if phases.len() != trace.len() {
            return Err(Error::LengthMismatch { left: trace.len(), right: phases.len() });
        }
        let t = to_internal_quadratures(trace);
        let mut theta = Vec::with_capacity(2 * t.len());
        let mut x = Vec::with_capacity(2 * t.len());
        for ((&xi, &pi), &phi) in t.x().iter().zip(t.p()).zip(phases) {
            theta.push((-phi).rem_euclid(TAU));
            x.push(xi);
            theta.push((FRAC_PI_2 - phi).rem_euclid(TAU));
            x.push(pi);
        }
        Self::new(theta, x)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Angular extent covered by the LO phases, modulo 2π.
    pub fn phase_coverage(&self) -> f64 {
        let mut t: Vec<f64> = self.theta.iter().map(|a| a.rem_euclid(TAU)).collect();
        t.sort_by(f64::total_cmp);
        t.dedup();
        if t.len() < 2 {
            return 0.0;
        }
        let wrap_gap = TAU - t[t.len() - 1] + t[0];
        let max_gap = t.windows(2).map(|w| w[1] - w[0]).fold(wrap_gap, f64::max);
        TAU - max_gap
    }

    /// At least two distinct phases spanning half a turn.
    pub fn is_informationally_complete(&self) -> bool {
        self.phase_coverage() >= PI
    }
}
