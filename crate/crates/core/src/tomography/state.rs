use num_complex::Complex64;

use super::DensityMatrix;
use crate::error::{invalid, Error, Result};

const NORM_TOLERANCE: f64 = 1e-8;
const MAX_SEARCH_DIM: usize = 100_000;

fn coherent_amplitudes(alpha: Complex64, dim: usize) -> Vec<Complex64> {
    let mut c = Vec::with_capacity(dim);
    let mut cur = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..dim {
        if n > 0 {
            cur = cur * alpha / (n as f64).sqrt();
        }
        c.push(cur);
    }
    c
}

/// Smallest Fock dimension holding `|α⟩` with norm at least `1 − 1e−8`.
pub fn required_dim(alpha: Complex64) -> usize {
    let mut cur = (-alpha.norm_sqr() / 2.0).exp();
    let mut norm = cur * cur;
    let mut n = 1;
    while 1.0 - norm > NORM_TOLERANCE && n < MAX_SEARCH_DIM {
        cur *= alpha.norm() / (n as f64).sqrt();
        norm += cur * cur;
        n += 1;
    }
    n
}

/// `|α⟩⟨α|` truncated to `dim` Fock states and renormalised.
pub fn ideal_coherent_state(alpha: Complex64, dim: usize) -> Result<DensityMatrix> {
    if dim == 0 {
        return Err(invalid("dim must be >= 1"));
    }
    let c = coherent_amplitudes(alpha, dim);
    let norm: f64 = c.iter().map(|z| z.norm_sqr()).sum();
    if 1.0 - norm > NORM_TOLERANCE {
        return Err(Error::InsufficientDimension { norm, required: required_dim(alpha) });
    }
    DensityMatrix::from_pure(&c)
}

/// `Tr(ρ â)`: amplitude of the coherent state with the same mean field.
pub fn fit_coherent(rho: &DensityMatrix) -> Complex64 {
    (1..rho.dim())
        .map(|n| rho.element(n, n - 1) * (n as f64).sqrt())
        .sum()
}
