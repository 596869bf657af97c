//! Reference-phase estimation, quadrature symmetrisation and the
//! phase-noise budget.
//!
//! Phase differences are always wrapped before a variance is taken, and
//! variances use the population (1/n) form.

use std::f64::consts::{PI, TAU};

use crate::detector::percent_difference;
use crate::error::{invalid, Error, Result};
use crate::signal::QuadratureTrace;

/// Maps an angle onto `(−π, π]`.
pub fn wrap_phase(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Quadrant-aware arctangent with the `−π` branch folded onto `π`.
fn angle(p: f64, x: f64) -> f64 {
    let a = p.atan2(x);
    if a <= -PI {
        PI
    } else {
        a
    }
}

/// Reference phase per block of `block` samples from the block means of
/// P and X. A block whose means are both exactly zero has no defined
/// phase and yields `None`.
pub fn estimate_phase(trace: &QuadratureTrace, block: usize) -> Result<Vec<Option<f64>>> {
    if block == 0 {
        return Err(invalid("block size must be >= 1"));
    }
    if trace.len() % block != 0 {
        return Err(invalid(format!(
            "trace length {} is not divisible by block size {block}",
            trace.len()
        )));
    }
    let scale = 1.0 / block as f64;
    Ok(trace
        .x()
        .chunks(block)
        .zip(trace.p().chunks(block))
        .map(|(xs, ps)| {
            let mx = xs.iter().sum::<f64>() * scale;
            let mp = ps.iter().sum::<f64>() * scale;
            (mx != 0.0 || mp != 0.0).then(|| angle(mp, mx))
        })
        .collect())
}

fn extent(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| (lo.min(a), hi.max(a)))
}

fn check_block(trace: &QuadratureTrace, block: usize) -> Result<()> {
    if block == 0 {
        return Err(invalid("block size must be >= 1"));
    }
    if trace.len() % block != 0 {
        return Err(invalid(format!(
            "trace length {} is not divisible by block size {block}",
            trace.len()
        )));
    }
    trace.require_len(2 * block)
}

/// Extents of the X and P block means.
fn ranges(trace: &QuadratureTrace, block: usize) -> Result<((f64, f64), (f64, f64))> {
    check_block(trace, block)?;
    let means = |v: &[f64]| -> Vec<f64> { v.chunks(block).map(|c| c.iter().sum::<f64>() / block as f64).collect() };
    let (x, p) = if block == 1 {
        (extent(trace.x()), extent(trace.p()))
    } else {
        (extent(&means(trace.x())), extent(&means(trace.p())))
    };
    if x.1 <= x.0 {
        return Err(Error::DegenerateRange("X"));
    }
    if p.1 <= p.0 {
        return Err(Error::DegenerateRange("P"));
    }
    Ok((x, p))
}

/// Rescales X onto the empirical range of P:
/// `X' = (X − X_min)/(X_max − X_min)·(P_max − P_min) + P_min`.
pub fn min_max_scale(trace: &QuadratureTrace) -> Result<QuadratureTrace> {
    min_max_scale_blocks(trace, 1)
}

/// [`min_max_scale`] with the extremes taken over means of `block`
/// consecutive samples. Single-sample extremes of a noisy trace track the
/// noise tails; block means track the signal.
pub fn min_max_scale_blocks(trace: &QuadratureTrace, block: usize) -> Result<QuadratureTrace> {
    let ((x_min, x_max), (p_min, p_max)) = ranges(trace, block)?;
    let p_span = p_max - p_min;
    let x_span = x_max - x_min;
    let scaled = trace
        .x()
        .iter()
        .map(|&x| {
            // endpoints pinned so the output range matches P exactly
            if block == 1 && x == x_max {
                p_max
            } else {
                (x - x_min) / x_span * p_span + p_min
            }
        })
        .collect();
    trace.with_x(scaled)
}

/// Asymmetry percentage inferred from the X and P spans of a trace.
pub fn span_asymmetry_percent(trace: &QuadratureTrace) -> Result<f64> {
    span_asymmetry_percent_blocks(trace, 1)
}

/// [`span_asymmetry_percent`] over block means.
pub fn span_asymmetry_percent_blocks(trace: &QuadratureTrace, block: usize) -> Result<f64> {
    let ((x_min, x_max), (p_min, p_max)) = ranges(trace, block)?;
    percent_difference(x_max - x_min, p_max - p_min)
}

/// Population variance of wrapped angles, centred on their circular mean
/// so that a cluster straddling ±π is not split in two.
pub fn wrapped_variance(diffs: &[f64]) -> f64 {
    let n = diffs.len() as f64;
    let (s, c) = diffs
        .iter()
        .fold((0.0, 0.0), |(s, c), d| (s + d.sin(), c + d.cos()));
    let centre = if s == 0.0 && c == 0.0 { 0.0 } else { s.atan2(c) };
    let centred: Vec<f64> = diffs.iter().map(|d| wrap_phase(d - centre)).collect();
    let mean = centred.iter().sum::<f64>() / n;
    centred.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n
}

fn paired_wrapped_variance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    if a.len() < 2 {
        return Err(invalid("phase variance needs at least 2 samples"));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| wrap_phase(x - y)).collect();
    Ok(wrapped_variance(&diffs))
}

/// Laser phase drift `2π(Δν_A + Δν_B)|t_R − t_S|`, rad².
pub fn v_drift(linewidth_a: f64, linewidth_b: f64, dt: f64) -> Result<f64> {
    if linewidth_a < 0.0 || linewidth_b < 0.0 || dt < 0.0 {
        return Err(invalid("linewidths and pulse separation must be non-negative"));
    }
    Ok(TAU * (linewidth_a + linewidth_b) * dt)
}

/// Variance of the signal/reference phase difference caused by their
/// optical path mismatch.
pub fn v_path(theta_s_path: &[f64], theta_r_path: &[f64]) -> Result<f64> {
    paired_wrapped_variance(theta_s_path, theta_r_path)
}

/// Variance of the phase error between symmetrised and asymmetric
/// reference-phase estimates.
pub fn v_det(theta_scaled: &[f64], theta_asym: &[f64]) -> Result<f64> {
    paired_wrapped_variance(theta_scaled, theta_asym)
}

/// Excess noise from a phase-error variance: `2·V_A·(1 − e^(−V/2))`.
///
/// For small `v` this is approximately `v_a·v`.
pub fn xi_from_variance(v_a: f64, v: f64) -> Result<f64> {
    if !(v_a > 0.0) {
        return Err(invalid(format!("modulation variance must be > 0, got {v_a}")));
    }
    if !(v >= 0.0) {
        return Err(invalid(format!("phase variance must be >= 0, got {v}")));
    }
    Ok(-2.0 * v_a * (-v / 2.0).exp_m1())
}

/// Inverse of [`xi_from_variance`]: `−2·ln(1 − ξ/(2V_A))`.
pub fn invert_xi(v_a: f64, xi: f64) -> Result<f64> {
    if !(v_a > 0.0) {
        return Err(invalid(format!("modulation variance must be > 0, got {v_a}")));
    }
    if !(xi >= 0.0 && xi < 2.0 * v_a) {
        return Err(Error::NumericalDomain(format!(
            "excess noise {xi} is unreachable for V_A = {v_a} (needs 0 <= xi < {})",
            2.0 * v_a
        )));
    }
    Ok(-2.0 * (-xi / (2.0 * v_a)).ln_1p())
}

/// Phase-noise budget of the reference-frame alignment, all in rad².
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PhaseNoiseBudget {
    pub v_drift: f64,
    pub v_path: f64,
    pub v_det: f64,
    pub linewidth_a: f64,
    pub linewidth_b: f64,
    pub pulse_separation: f64,
}

impl PhaseNoiseBudget {
    /// Builds the budget, deriving `v_drift` from the laser parameters.
    pub fn from_components(
        linewidth_a: f64,
        linewidth_b: f64,
        pulse_separation: f64,
        v_path: f64,
        v_det: f64,
    ) -> Result<Self> {
        let budget = Self {
            v_drift: self::v_drift(linewidth_a, linewidth_b, pulse_separation)?,
            v_path,
            v_det,
            linewidth_a,
            linewidth_b,
            pulse_separation,
        };
        budget.validate()?;
        Ok(budget)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.v_drift, self.v_path, self.v_det];
        if all.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(invalid("phase variances must be finite and non-negative"));
        }
        Ok(())
    }

    pub fn v_total(&self) -> f64 {
        self.v_drift + self.v_path + self.v_det
    }

    /// Excess noise from the total misalignment for modulation variance `v_a`.
    pub fn xi_error(&self, v_a: f64) -> Result<f64> {
        xi_from_variance(v_a, self.v_total())
    }
}

/// Phase deviation of an asymmetric trace against its symmetrised copy.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDeviation {
    /// `(θ_scaled, θ_asym − θ_scaled)` per block, deviation wrapped.
    pub points: Vec<(f64, f64)>,
    /// Blocks skipped because either estimate was undefined.
    pub undefined: usize,
}

impl PhaseDeviation {
    pub fn peak(&self) -> f64 {
        self.points.iter().map(|(_, d)| d.abs()).fold(0.0, f64::max)
    }
}

/// Estimates the phase of `trace` before and after [`min_max_scale_blocks`],
/// both over blocks of `block` samples.
pub fn phase_deviation(trace: &QuadratureTrace, block: usize) -> Result<PhaseDeviation> {
    let scaled = min_max_scale_blocks(trace, block)?;
    let asym = estimate_phase(trace, block)?;
    let sym = estimate_phase(&scaled, block)?;
    let mut points = Vec::with_capacity(asym.len());
    let mut undefined = 0;
    for (a, s) in asym.into_iter().zip(sym) {
        match (a, s) {
            (Some(a), Some(s)) => points.push((s, wrap_phase(a - s))),
            _ => undefined += 1,
        }
    }
    Ok(PhaseDeviation { points, undefined })
}

/// Asymmetry diagnostics of a raw trace.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymmetryReport {
    pub scaled: QuadratureTrace,
    pub asymmetry_percent: f64,
    pub v_det: f64,
    pub xi_det: f64,
    pub undefined_blocks: usize,
}

/// Symmetrises `trace` and reports the span asymmetry, `V_det` and the
/// resulting `ξ_det` for modulation variance `v_a`.
pub fn asymmetry_report(trace: &QuadratureTrace, v_a: f64, block: usize) -> Result<AsymmetryReport> {
    let scaled = min_max_scale_blocks(trace, block)?;
    let asymmetry_percent = span_asymmetry_percent_blocks(trace, block)?;
    let asym = estimate_phase(trace, block)?;
    let sym = estimate_phase(&scaled, block)?;
    let (mut a, mut s) = (Vec::new(), Vec::new());
    let mut undefined_blocks = 0;
    for (pa, ps) in asym.into_iter().zip(sym) {
        match (pa, ps) {
            (Some(pa), Some(ps)) => {
                a.push(pa);
                s.push(ps);
            }
            _ => undefined_blocks += 1,
        }
    }
    let v = v_det(&s, &a)?;
    Ok(AsymmetryReport {
        scaled,
        asymmetry_percent,
        v_det: v,
        xi_det: xi_from_variance(v_a, v)?,
        undefined_blocks,
    })
}
