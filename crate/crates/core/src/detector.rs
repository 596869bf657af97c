//! Asymmetric heterodyne detection of a phase-swept reference signal.
//!
//! Each balanced pair produces a difference photocurrent proportional to
//! `R·√(P_S·P_LO)·cos(Δφ)` (X pair) or `cos(Δφ − φ_π/2)` (P pair). After
//! normalisation to shot-noise units only the per-pair power factors
//! survive, so asymmetry is expressed as a gain on each quadrature.

use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::signal::{make_phase_ramp, QuadratureTrace};

/// Per-sample true phase of the reference signal.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseSweep {
    /// `points` equally spaced phases over `[start, stop)`.
    Ramp { points: usize, start: f64, stop: f64 },
    Explicit(Vec<f64>),
}

impl PhaseSweep {
    pub fn full_turn(points: usize) -> Self {
        PhaseSweep::Ramp { points, start: 0.0, stop: TAU }
    }

    pub fn phases(&self) -> Result<Vec<f64>> {
        match self {
            PhaseSweep::Ramp { points, start, stop } => make_phase_ramp(*points, *start, *stop),
            PhaseSweep::Explicit(v) => {
                if v.is_empty() || v.iter().any(|p| !p.is_finite()) {
                    return Err(invalid("explicit phase sweep must be non-empty and finite"));
                }
                Ok(v.clone())
            }
        }
    }
}

/// The bright reference pulse train seen by Bob's heterodyne detector.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSignalSpec {
    /// Mean photon-number scale `E_R²` in SNU.
    pub amplitude_sq: f64,
    pub sweep: PhaseSweep,
    pub pulses_per_phase: usize,
}

impl Default for ReferenceSignalSpec {
    fn default() -> Self {
        Self { amplitude_sq: 552.0, sweep: PhaseSweep::full_turn(360), pulses_per_phase: 1 }
    }
}

impl ReferenceSignalSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude_sq > 0.0 && self.amplitude_sq.is_finite()) {
            return Err(invalid(format!("amplitude_sq must be > 0, got {}", self.amplitude_sq)));
        }
        if self.pulses_per_phase == 0 {
            return Err(invalid("pulses_per_phase must be >= 1"));
        }
        Ok(())
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude_sq.sqrt()
    }

    /// True phase of every pulse, each sweep point repeated `pulses_per_phase` times.
    pub fn sample_phases(&self) -> Result<Vec<f64>> {
        let phases = self.sweep.phases()?;
        Ok(phases
            .iter()
            .flat_map(|&p| std::iter::repeat(p).take(self.pulses_per_phase))
            .collect())
    }
}

/// Heterodyne detector parameters.
///
/// `gain_x` and `gain_p` are the fractions of light reaching the X and P
/// balanced pairs; they absorb splitter ratio, responsivity mismatch and
/// connector loss alike. Responsivity and LO power cancel after
/// normalisation and are kept only for bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct HeterodyneModel {
    pub gain_x: f64,
    pub gain_p: f64,
    /// Deviation from the nominal 90° hybrid shift, radians.
    pub hybrid_phase_error: f64,
    pub shot_noise_var: f64,
    pub elec_noise_var: f64,
    pub responsivity: f64,
    pub p_lo: f64,
}

impl Default for HeterodyneModel {
    fn default() -> Self {
        Self {
            gain_x: 1.0,
            gain_p: 1.0,
            hybrid_phase_error: 0.0,
            shot_noise_var: 1.0,
            elec_noise_var: 0.0,
            responsivity: 1.0,
            p_lo: 1.0,
        }
    }
}

impl HeterodyneModel {
    /// Symmetric detector with the X pair attenuated to the given asymmetry.
    pub fn with_asymmetry(percent: f64) -> Result<Self> {
        let (gain_x, gain_p) = gains_from_percent(percent)?;
        Ok(Self { gain_x, gain_p, ..Self::default() })
    }

    pub fn validate(&self) -> Result<()> {
        for (name, g) in [("gain_x", self.gain_x), ("gain_p", self.gain_p)] {
            if !(g > 0.0 && g <= 1.0) {
                return Err(invalid(format!("{name} must lie in (0, 1], got {g}")));
            }
        }
        if !(self.shot_noise_var > 0.0 && self.shot_noise_var.is_finite()) {
            return Err(invalid(format!("shot_noise_var must be > 0, got {}", self.shot_noise_var)));
        }
        if !(self.elec_noise_var >= 0.0 && self.elec_noise_var.is_finite()) {
            return Err(invalid(format!("elec_noise_var must be >= 0, got {}", self.elec_noise_var)));
        }
        if !self.hybrid_phase_error.is_finite() {
            return Err(invalid("hybrid_phase_error must be finite"));
        }
        if !(self.responsivity > 0.0 && self.p_lo > 0.0) {
            return Err(invalid("responsivity and p_lo must be > 0"));
        }
        Ok(())
    }

    /// Power-imbalance percentage between the two pairs.
    pub fn asymmetry_percent(&self) -> Result<f64> {
        percent_difference(self.gain_x, self.gain_p)
    }

    fn noise_std(&self) -> f64 {
        (self.shot_noise_var + self.elec_noise_var).sqrt()
    }
}

/// Simulates one heterodyne outcome per reference pulse.
///
/// `x = gain_x·(A cos θ + n_x)`, `p = gain_p·(A sin(θ + ε) + n_p)` with
/// independent Gaussian noise of variance `shot + elec`. The random
/// stream depends only on `seed`.
pub fn simulate_heterodyne(
    signal: &ReferenceSignalSpec,
    det: &HeterodyneModel,
    seed: u64,
) -> Result<QuadratureTrace> {
    signal.validate()?;
    det.validate()?;
    let phases = signal.sample_phases()?;
    let amp = signal.amplitude();
    let sigma = det.noise_std();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut x = Vec::with_capacity(phases.len());
    let mut p = Vec::with_capacity(phases.len());
    for &theta in &phases {
        let nx: f64 = StandardNormal.sample(&mut rng);
        let np: f64 = StandardNormal.sample(&mut rng);
        x.push(det.gain_x * (amp * theta.cos() + sigma * nx));
        p.push(det.gain_p * (amp * (theta + det.hybrid_phase_error).sin() + sigma * np));
    }
    QuadratureTrace::new(x, p, Some(phases))
}

/// The zero-noise limit of [`simulate_heterodyne`].
pub fn noiseless_sweep(signal: &ReferenceSignalSpec, det: &HeterodyneModel) -> Result<QuadratureTrace> {
    signal.validate()?;
    det.validate()?;
    let phases = signal.sample_phases()?;
    let amp = signal.amplitude();
    let x = phases.iter().map(|t| det.gain_x * amp * t.cos()).collect();
    let p = phases
        .iter()
        .map(|t| det.gain_p * amp * (t + det.hybrid_phase_error).sin())
        .collect();
    QuadratureTrace::new(x, p, Some(phases))
}

/// `|P1 − P2| / ((P1 + P2)/2) × 100`.
pub fn percent_difference(p1: f64, p2: f64) -> Result<f64> {
    if !(p1 > 0.0 && p2 > 0.0 && p1.is_finite() && p2.is_finite()) {
        return Err(invalid(format!("powers must be positive and finite, got {p1}, {p2}")));
    }
    Ok((p1 - p2).abs() / ((p1 + p2) / 2.0) * 100.0)
}

/// Inverse of [`percent_difference`] with the P pair as reference:
/// returns `(g, 1)` where `g = (2 − q)/(2 + q)` and `q = percent/100`.
pub fn gains_from_percent(percent: f64) -> Result<(f64, f64)> {
    if !(0.0..200.0).contains(&percent) {
        return Err(invalid(format!("asymmetry percent must lie in [0, 200), got {percent}")));
    }
    let q = percent / 100.0;
    Ok(((2.0 - q) / (2.0 + q), 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, SQRT_2};

    fn single(theta: f64, amplitude_sq: f64) -> ReferenceSignalSpec {
        ReferenceSignalSpec {
            amplitude_sq,
            sweep: PhaseSweep::Explicit(vec![theta]),
            pulses_per_phase: 1,
        }
    }

    #[test]
    fn noiseless_on_axis() {
        let t = noiseless_sweep(&single(0.0, 100.0), &HeterodyneModel::default()).unwrap();
        assert!((t.x()[0] - 10.0).abs() < 1e-12);
        assert!(t.p()[0].abs() < 1e-12);
    }

    #[test]
    fn noiseless_scaled_diagonal() {
        let det = HeterodyneModel { gain_x: 0.8667, ..Default::default() };
        let t = noiseless_sweep(&single(FRAC_PI_4, 100.0), &det).unwrap();
        assert!((t.x()[0] - 0.8667 * 10.0 / SQRT_2).abs() < 1e-12);
        assert!((t.p()[0] - 10.0 / SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_residual_variance() {
        let spec = ReferenceSignalSpec {
            amplitude_sq: 552.0,
            sweep: PhaseSweep::full_turn(100_000),
            pulses_per_phase: 1,
        };
        let det = HeterodyneModel::default();
        let t = simulate_heterodyne(&spec, &det, 7).unwrap();
        let amp = spec.amplitude();
        let phases = t.phase_true().unwrap();
        let n = t.len() as f64;
        let res: Vec<f64> = t.x().iter().zip(phases).map(|(x, th)| x - amp * th.cos()).collect();
        let mean = res.iter().sum::<f64>() / n;
        let var = res.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
        assert!((var - det.shot_noise_var).abs() < 0.05 * det.shot_noise_var, "var = {var}");
    }

    #[test]
    fn symmetric_gains_give_matching_variances() {
        let n = 100_000;
        let spec = ReferenceSignalSpec {
            amplitude_sq: 552.0,
            sweep: PhaseSweep::full_turn(n),
            pulses_per_phase: 1,
        };
        let t = simulate_heterodyne(&spec, &HeterodyneModel::default(), 11).unwrap();
        let var = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / v.len() as f64
        };
        // Estimator sd: noise term σ²√(2/n) plus signal-noise cross term A·σ·√(2/n).
        let nf = n as f64;
        let sd_one = (2.0 / nf).sqrt() * (1.0 + spec.amplitude());
        let diff = (var(t.x()) - var(t.p())).abs();
        assert!(diff < 3.0 * SQRT_2 * sd_one, "diff = {diff}");
    }

    #[test]
    fn deterministic_under_seed() {
        let spec = ReferenceSignalSpec::default();
        let det = HeterodyneModel::with_asymmetry(14.29).unwrap();
        let a = simulate_heterodyne(&spec, &det, 42).unwrap();
        let b = simulate_heterodyne(&spec, &det, 42).unwrap();
        let c = simulate_heterodyne(&spec, &det, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn repeats_pulses_per_phase() {
        let spec = ReferenceSignalSpec {
            amplitude_sq: 4.0,
            sweep: PhaseSweep::full_turn(4),
            pulses_per_phase: 3,
        };
        let t = simulate_heterodyne(&spec, &HeterodyneModel::default(), 0).unwrap();
        assert_eq!(t.len(), 12);
        assert_eq!(&t.phase_true().unwrap()[..3], &[0.0; 3]);
    }

    #[test]
    fn rejects_invalid_configurations() {
        let bad = HeterodyneModel { gain_x: 0.0, ..Default::default() };
        assert!(simulate_heterodyne(&ReferenceSignalSpec::default(), &bad, 0).is_err());
        let bad = HeterodyneModel { gain_p: 1.2, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = HeterodyneModel { shot_noise_var: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let spec = ReferenceSignalSpec { amplitude_sq: 0.0, ..Default::default() };
        assert!(simulate_heterodyne(&spec, &HeterodyneModel::default(), 0).is_err());
    }

    #[test]
    fn percent_difference_examples() {
        assert_eq!(percent_difference(0.45, 0.45).unwrap(), 0.0);
        assert!((percent_difference(0.45, 0.39).unwrap() - 14.29).abs() < 0.005);
        assert!((percent_difference(0.45, 0.32).unwrap() - 33.77).abs() < 0.005);
        assert!(percent_difference(0.0, 1.0).is_err());
        assert!(percent_difference(1.0, -1.0).is_err());
    }

    #[test]
    fn gains_from_percent_examples() {
        assert_eq!(gains_from_percent(0.0).unwrap(), (1.0, 1.0));
        let (g, one) = gains_from_percent(14.29).unwrap();
        assert_eq!(one, 1.0);
        assert!((g - 0.8667).abs() < 1e-4, "g = {g}");
        let (g, _) = gains_from_percent(33.77).unwrap();
        assert!((g - 0.7111).abs() < 1e-4, "g = {g}");
        assert!(gains_from_percent(-1.0).is_err());
        assert!(gains_from_percent(200.0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn percent_difference_symmetric_and_scale_free(a in 1e-3f64..10.0, b in 1e-3f64..10.0, k in 1e-3f64..1e3) {
                let d = percent_difference(a, b).unwrap();
                prop_assert_eq!(d, percent_difference(b, a).unwrap());
                prop_assert!((d - percent_difference(k * a, k * b).unwrap()).abs() < 1e-9);
                prop_assert!((0.0..200.0).contains(&d));
            }

            #[test]
            fn gains_round_trip(pct in 1e-6f64..199.9) {
                let (g, r) = gains_from_percent(pct).unwrap();
                prop_assert!(g <= 1.0);
                prop_assert!((percent_difference(g, r).unwrap() - pct).abs() < 1e-9);
            }

            #[test]
            fn noiseless_ellipse(theta in -10.0f64..10.0, gx in 0.05f64..1.0, gp in 0.05f64..1.0) {
                let det = HeterodyneModel { gain_x: gx, gain_p: gp, ..Default::default() };
                let t = noiseless_sweep(&single(theta, 552.0), &det).unwrap();
                let r = (t.x()[0] / gx).powi(2) + (t.p()[0] / gp).powi(2);
                prop_assert!((r - 552.0).abs() < 1e-9);
            }
        }
    }
}
