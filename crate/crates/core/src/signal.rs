//! Quadrature traces and unit conventions shared by every stage.
//!
//! Externally all quadratures are in shot-noise units (SNU): the vacuum
//! quadrature variance is 1. Tomography works internally with
//! `x = (a + a†)/√2`, where the vacuum variance is 1/2, so traces are
//! divided by √2 on the way in.

use std::f64::consts::SQRT_2;

use crate::error::{invalid, Error, Result};

/// Vacuum quadrature variance in external (SNU) units.
pub const VACUUM_VARIANCE_SNU: f64 = 1.0;

/// Vacuum quadrature variance in the internal tomography convention.
pub const VACUUM_VARIANCE_INTERNAL: f64 = 0.5;

/// Divisor applied to SNU quadratures to reach the internal convention.
pub const TOMOGRAPHY_SCALE: f64 = SQRT_2;

/// Which unit convention a trace's quadratures are expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Convention {
    /// Shot-noise units, vacuum variance 1.
    #[default]
    Snu,
    /// Tomography convention, vacuum variance 1/2.
    Internal,
}

/// Paired X/P quadrature samples, optionally tagged with the true
/// reference phase of each sample.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureTrace {
    x: Vec<f64>,
    p: Vec<f64>,
    phase_true: Option<Vec<f64>>,
    convention: Convention,
}

impl QuadratureTrace {
    /// Builds an SNU trace, checking lengths and finiteness.
    pub fn new(x: Vec<f64>, p: Vec<f64>, phase_true: Option<Vec<f64>>) -> Result<Self> {
        Self::with_convention(x, p, phase_true, Convention::Snu)
    }

    pub fn with_convention(
        x: Vec<f64>,
        p: Vec<f64>,
        phase_true: Option<Vec<f64>>,
        convention: Convention,
    ) -> Result<Self> {
        if x.len() != p.len() {
            return Err(Error::LengthMismatch { left: x.len(), right: p.len() });
        }
        if let Some(ph) = &phase_true {
            if ph.len() != x.len() {
                return Err(Error::LengthMismatch { left: x.len(), right: ph.len() });
            }
        }
        let series = [Some(&x), Some(&p), phase_true.as_ref()];
        for s in series.into_iter().flatten() {
            if let Some(i) = s.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(i));
            }
        }
        Ok(Self { x, p, phase_true, convention })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn phase_true(&self) -> Option<&[f64]> {
        self.phase_true.as_deref()
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    /// Fails unless the trace has at least `min` samples.
    pub fn require_len(&self, min: usize) -> Result<()> {
        if self.len() < min {
            return Err(invalid(format!("trace has {} samples, need at least {min}", self.len())));
        }
        Ok(())
    }

    /// Returns a copy with the X quadrature replaced.
    pub fn with_x(&self, x: Vec<f64>) -> Result<Self> {
        Self::with_convention(x, self.p.clone(), self.phase_true.clone(), self.convention)
    }

    /// Drops the ground-truth phase tags.
    pub fn without_phase(mut self) -> Self {
        self.phase_true = None;
        self
    }

    fn rescaled(&self, factor: f64, convention: Convention) -> Self {
        Self {
            x: self.x.iter().map(|v| v * factor).collect(),
            p: self.p.iter().map(|v| v * factor).collect(),
            phase_true: self.phase_true.clone(),
            convention,
        }
    }
}

/// Converts an SNU trace to the internal tomography convention.
/// A trace that is already internal is returned unchanged.
pub fn to_internal_quadratures(trace: &QuadratureTrace) -> QuadratureTrace {
    match trace.convention {
        Convention::Internal => trace.clone(),
        Convention::Snu => trace.rescaled(1.0 / TOMOGRAPHY_SCALE, Convention::Internal),
    }
}

/// Inverse of [`to_internal_quadratures`].
pub fn to_external_quadratures(trace: &QuadratureTrace) -> QuadratureTrace {
    match trace.convention {
        Convention::Snu => trace.clone(),
        Convention::Internal => trace.rescaled(TOMOGRAPHY_SCALE, Convention::Snu),
    }
}

/// `n` equally spaced phases covering `[start, stop)`.
pub fn make_phase_ramp(n: usize, start: f64, stop: f64) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(invalid(format!("phase ramp needs n >= 2, got {n}")));
    }
    if !(start.is_finite() && stop.is_finite()) || stop <= start {
        return Err(invalid(format!("phase ramp needs stop > start, got [{start}, {stop})")));
    }
    let step = (stop - start) / n as f64;
    Ok((0..n).map(|i| start + step * i as f64).collect())
}
