use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::{FRAC_1_PI, SQRT_2};

use super::DensityMatrix;
use crate::error::{invalid, Error, Result};

/// Normalisation window accepted for grids that cover the state.
pub const NORMALISATION_RANGE: (f64, f64) = (0.98, 1.001);

const IMAG_RESIDUE_TOL: f64 = 1e-10;

/// Wigner function sampled on a rectangular grid, `values[(ix, ip)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub x_axis: Vec<f64>,
    pub p_axis: Vec<f64>,
    pub values: DMatrix<f64>,
    /// Largest imaginary part discarded while summing the expansion.
    pub imag_residue: f64,
}

impl WignerGrid {
    fn cell_area(&self) -> f64 {
        let step = |a: &[f64]| if a.len() > 1 { (a[a.len() - 1] - a[0]) / (a.len() - 1) as f64 } else { 0.0 };
        step(&self.x_axis) * step(&self.p_axis)
    }

    /// Riemann sum `Σ W·Δx·Δp` (uniform axes).
    pub fn normalisation(&self) -> f64 {
        self.values.sum() * self.cell_area()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Grid coordinates of the largest value.
    pub fn peak(&self) -> (f64, f64) {
        let (mut best, mut at) = (f64::NEG_INFINITY, (0, 0));
        for ix in 0..self.x_axis.len() {
            for ip in 0..self.p_axis.len() {
                if self.values[(ix, ip)] > best {
                    best = self.values[(ix, ip)];
                    at = (ix, ip);
                }
            }
        }
        (self.x_axis[at.0], self.p_axis[at.1])
    }

    /// Warning when the grid is too coarse or narrow to integrate to one.
    pub fn coverage_warning(&self) -> Option<String> {
        let norm = self.normalisation();
        let (lo, hi) = NORMALISATION_RANGE;
        (!(lo..=hi).contains(&norm))
            .then(|| format!("Wigner grid integrates to {norm:.5}; widen or refine the grid"))
    }
}

/// Evenly spaced axis from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points < 2 {
        return vec![lo; points];
    }
    let step = (hi - lo) / (points - 1) as f64;
    (0..points).map(|i| lo + step * i as f64).collect()
}

/// Wigner function for ℏ = 1, `W_vac(0,0) = 1/π`.
///
/// Uses the Fock-basis expansion: with `α = (x + ip)/√2` and `y = 4|α|²`,
/// the `|m⟩⟨n|` term (`m ≥ n`) is
/// `(−1)^n/π · √(n!/m!) · (2α*)^(m−n) · e^(−y/2) · L_n^(m−n)(y)`.
pub fn wigner(rho: &DensityMatrix, x_axis: &[f64], p_axis: &[f64]) -> Result<WignerGrid> {
    if x_axis.iter().chain(p_axis).any(|v| !v.is_finite()) {
        return Err(invalid("Wigner grid axes must be finite"));
    }
    let d = rho.dim();
    let mut values = DMatrix::zeros(x_axis.len(), p_axis.len());
    let mut imag_residue: f64 = 0.0;
    let mut laguerre = vec![0.0; d];

    for (ix, &x) in x_axis.iter().enumerate() {
        for (ip, &p) in p_axis.iter().enumerate() {
            let alpha = Complex64::new(x, p) / SQRT_2;
            let y = 4.0 * alpha.norm_sqr();
            let envelope = (-y / 2.0).exp();
            let two_conj = 2.0 * alpha.conj();
            let mut total = Complex64::new(0.0, 0.0);
            let mut power = Complex64::new(1.0, 0.0);
            let mut inv_sqrt_kfact = 1.0;
            for k in 0..d {
                if k > 0 {
                    power *= two_conj;
                    inv_sqrt_kfact /= (k as f64).sqrt();
                }
                let len = d - k;
                laguerre_column(k, y, &mut laguerre[..len]);
                // ratio √(n!/(n+k)!) starting from 1/√(k!)
                let mut ratio = inv_sqrt_kfact;
                for n in 0..len {
                    if n > 0 {
                        ratio *= (n as f64 / (n + k) as f64).sqrt();
                    }
                    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                    let w = power * (sign * ratio * laguerre[n] * envelope);
                    let m = n + k;
                    total += rho.element(m, n) * w;
                    if k > 0 {
                        total += rho.element(n, m) * w.conj();
                    }
                }
            }
            imag_residue = imag_residue.max(total.im.abs());
            values[(ix, ip)] = total.re * FRAC_1_PI;
        }
    }
    if imag_residue > IMAG_RESIDUE_TOL {
        return Err(Error::NumericalDomain(format!(
            "Wigner function has imaginary residue {imag_residue:e}"
        )));
    }
    Ok(WignerGrid { x_axis: x_axis.to_vec(), p_axis: p_axis.to_vec(), values, imag_residue })
}

/// `L_n^(k)(y)` for `n = 0..out.len()` by the three-term recurrence.
fn laguerre_column(k: usize, y: f64, out: &mut [f64]) {
    let kf = k as f64;
    for n in 0..out.len() {
        out[n] = match n {
            0 => 1.0,
            1 => 1.0 + kf - y,
            _ => {
                let j = (n - 1) as f64;
                ((2.0 * j + 1.0 + kf - y) * out[n - 1] - (j + kf) * out[n - 2]) / (j + 1.0)
            }
        };
    }
}
