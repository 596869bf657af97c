use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-10;

/// Fock-truncated density matrix: Hermitian, unit trace, positive
/// semidefinite up to 1e−10.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    elements: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates and wraps a square complex matrix.
    pub fn new(elements: DMatrix<Complex64>) -> Result<Self> {
        let dim = elements.nrows();
        if dim == 0 || elements.ncols() != dim {
            return Err(Error::DimensionMismatch(elements.nrows(), elements.ncols()));
        }
        if elements.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(invalid("density matrix has non-finite entries"));
        }
        for i in 0..dim {
            for j in i..dim {
                if (elements[(i, j)] - elements[(j, i)].conj()).norm() > HERMITIAN_TOL {
                    return Err(invalid(format!("density matrix not Hermitian at ({i}, {j})")));
                }
            }
        }
        let tr = elements.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(invalid(format!("density matrix trace {tr} != 1")));
        }
        let rho = Self { elements };
        let min = rho.eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        if min < -PSD_TOL {
            return Err(invalid(format!("density matrix has negative eigenvalue {min:e}")));
        }
        Ok(rho)
    }

    /// Normalises a Hermitian positive matrix (e.g. an MLE iterate) by its
    /// trace, symmetrising away rounding asymmetry first.
    pub(crate) fn from_unnormalised(m: DMatrix<Complex64>) -> Result<Self> {
        let h = hermitian_part(&m);
        let tr = h.trace().re;
        if !(tr > 0.0 && tr.is_finite()) {
            return Err(Error::NumericalDomain(format!("cannot normalise matrix with trace {tr}")));
        }
        Self::new(h / Complex64::new(tr, 0.0))
    }

    /// `|ψ⟩⟨ψ|` for a normalised copy of `psi`.
    pub fn from_pure(psi: &[Complex64]) -> Result<Self> {
        let v = DVector::from_column_slice(psi);
        let norm = v.norm();
        if !(norm > 0.0) {
            return Err(invalid("zero state vector"));
        }
        let v = v / Complex64::new(norm, 0.0);
        Self::new(&v * v.adjoint())
    }

    /// Fock state `|n⟩⟨n|` in dimension `dim`.
    pub fn fock(n: usize, dim: usize) -> Result<Self> {
        if n >= dim {
            return Err(invalid(format!("Fock state |{n}> needs dim > {n}")));
        }
        let mut m = DMatrix::zeros(dim, dim);
        m[(n, n)] = Complex64::new(1.0, 0.0);
        Self::new(m)
    }

    pub fn vacuum(dim: usize) -> Result<Self> {
        Self::fock(0, dim)
    }

    /// `I/dim`.
    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim must be >= 1"));
        }
        let w = Complex64::new(1.0 / dim as f64, 0.0);
        Self::new(DMatrix::from_diagonal_element(dim, dim, w))
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.elements
    }

    pub fn element(&self, m: usize, n: usize) -> Complex64 {
        self.elements[(m, n)]
    }

    /// Real eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.elements.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn purity(&self) -> f64 {
        (&self.elements * &self.elements).trace().re
    }

    /// `⟨n̂⟩ = Σ n·ρ_nn`.
    pub fn mean_photon_number(&self) -> f64 {
        (0..self.dim()).map(|n| n as f64 * self.elements[(n, n)].re).sum()
    }

    /// Principal square root via the eigendecomposition, with negative
    /// eigenvalues truncated to zero.
    pub fn sqrt(&self) -> DMatrix<Complex64> {
        psd_sqrt(&self.elements)
    }

    /// `e^{iφ n̂} ρ e^{−iφ n̂}`.
    pub fn rotated(&self, phi: f64) -> Self {
        let dim = self.dim();
        let m = DMatrix::from_fn(dim, dim, |i, j| {
            self.elements[(i, j)] * Complex64::from_polar(1.0, (i as f64 - j as f64) * phi)
        });
        Self { elements: m }
    }
}

pub(crate) fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

pub(crate) fn psd_sqrt(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let roots = eig.eigenvalues.map(|l| Complex64::new(l.max(0.0).sqrt(), 0.0));
    let v = &eig.eigenvectors;
    v * DMatrix::from_diagonal(&roots) * v.adjoint()
}
