use super::density::DensityMatrix;
use crate::error::{Error, Result};

/// Which form of the Uhlmann fidelity to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FidelityConvention {
    /// `Tr√(√ρ σ √ρ)`.
    #[default]
    Sqrt,
    /// `(Tr√(√ρ σ √ρ))²`.
    Squared,
}

/// Uhlmann fidelity.
///
/// The square roots of the eigenvalues of `√ρ σ √ρ` are the singular values
/// of `√ρ √σ`, which are summed directly. Taking roots of eigenvalues would
/// turn rounding-level eigenvalues of a nearly pure state into ~1e−8 errors.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix, convention: FidelityConvention) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), sigma.dim()));
    }
    let root_sum: f64 = (rho.sqrt() * sigma.sqrt()).singular_values().iter().sum();
    Ok(match convention {
        FidelityConvention::Sqrt => root_sum,
        FidelityConvention::Squared => root_sum * root_sum,
    })
}
