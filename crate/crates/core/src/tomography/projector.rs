use num_complex::Complex64;

use crate::error::{invalid, Result};

const RESCALE_ABOVE: f64 = 1e150;

/// Harmonic-oscillator eigenfunctions `ψ_0(x) … ψ_{dim−1}(x)` for vacuum
/// variance 1/2.
///
/// Upward recurrence
/// `ψ_{n+1} = √(2/(n+1))·x·ψ_n − √(n/(n+1))·ψ_{n−1}`, started from an
/// unscaled `π^(−1/4)` with the Gaussian envelope kept as a log factor so
/// neither the envelope underflows nor the polynomial overflows at large `|x|`.
pub fn hermite_gauss(x: f64, dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    if dim == 0 {
        return out;
    }
    let mut log_scale = -0.5 * x * x;
    let mut prev = 0.0;
    let mut cur = std::f64::consts::PI.powf(-0.25);
    // scaled values; the true value of entry n is raw[n]·exp(log_scale at n)
    let mut raw = vec![0.0; dim];
    let mut scale_at = vec![0.0; dim];
    raw[0] = cur;
    scale_at[0] = log_scale;
    for n in 0..dim - 1 {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * cur - (nf / (nf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE_ABOVE {
            prev /= RESCALE_ABOVE;
            cur /= RESCALE_ABOVE;
            log_scale += RESCALE_ABOVE.ln();
        }
        raw[n + 1] = cur;
        scale_at[n + 1] = log_scale;
    }
    for ((o, r), s) in out.iter_mut().zip(&raw).zip(&scale_at) {
        *o = r * s.exp();
    }
    out
}

/// Fock components `ψ_n(x)·e^(−inθ)` of the rotated-quadrature
/// eigenstate for LO phase `theta`.
pub fn quadrature_projector(theta: f64, x: f64, dim: usize) -> Result<Vec<Complex64>> {
    if dim == 0 {
        return Err(invalid("projector dimension must be >= 1"));
    }
    Ok(hermite_gauss(x, dim)
        .into_iter()
        .enumerate()
        .map(|(n, h)| Complex64::from_polar(h, -(n as f64) * theta))
        .collect())
}
