//! Dense complex matrix helpers on top of nalgebra.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Eigenvalues of a Hermitian PSD matrix above this (negative) value are clamped to zero.
pub const PSD_CLAMP: f64 = -1e-10;

pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// Eigenvalues of a Hermitian matrix, sorted non-increasingly.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    // Symmetrize to kill round-off asymmetry before the solver sees it.
    let h = (m + m.adjoint()).scale(0.5);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Eigenvalues of a PSD matrix with solver noise clamped.
///
/// Values in `[PSD_CLAMP, 0)` become 0; more negative values are an error.
/// Values below `1e-12 · max(trace, 1e-300)` are also zeroed.
pub fn psd_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    let mut ev = hermitian_eigenvalues(m);
    let tr: f64 = (0..m.nrows()).map(|i| m[(i, i)].re).sum();
    let floor = 1e-12 * tr.abs().max(1e-300);
    for v in ev.iter_mut() {
        if *v < PSD_CLAMP * tr.abs().max(1.0) {
            return Err(Error::NotPsd(*v));
        }
        if *v < floor {
            *v = 0.0;
        }
    }
    Ok(ev)
}

/// Largest eigenvalue of a Hermitian matrix (−∞ for an empty matrix).
pub fn lambda_max(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m)
        .first()
        .copied()
        .unwrap_or(f64::NEG_INFINITY)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Block-diagonal `a ⊕ b`.
pub fn direct_sum(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), (b.nrows(), b.ncols()))
        .copy_from(b);
    out
}

/// Largest absolute entry.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Validates that `p` is a square Hermitian idempotent within `tol`.
pub fn check_projector(p: &CMatrix, tol: f64) -> Result<()> {
    if p.nrows() != p.ncols() {
        return Err(Error::NotProjector(format!(
            "{}x{} matrix is not square",
            p.nrows(),
            p.ncols()
        )));
    }
    let herm = max_abs(&(p - p.adjoint()));
    if herm > tol {
        return Err(Error::NotProjector(format!("not Hermitian (deviation {herm:e})")));
    }
    let idem = max_abs(&(p * p - p));
    if idem > tol {
        return Err(Error::NotProjector(format!("not idempotent (deviation {idem:e})")));
    }
    Ok(())
}

/// Σ_i λ_i^α over the (clamped) eigenvalues of a PSD matrix.
pub fn trace_power(m: &CMatrix, alpha: f64) -> Result<f64> {
    let ev = psd_eigenvalues(m)?;
    Ok(crate::spectra::power_sum_unchecked(&ev, alpha))
}

/// Hermitian square root of a PSD matrix.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let h = (m + m.adjoint()).scale(0.5);
    let eig = h.symmetric_eigen();
    let d = eig
        .eigenvalues
        .map(|v| C64::from(v.max(0.0).sqrt()));
    &eig.eigenvectors * CMatrix::from_diagonal(&d) * eig.eigenvectors.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_of_diagonal() {
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(0.2, 0.0),
            c(0.7, 0.0),
            c(0.1, 0.0),
        ]));
        let ev = hermitian_eigenvalues(&m);
        assert!((ev[0] - 0.7).abs() < 1e-14 && (ev[2] - 0.1).abs() < 1e-14);
    }

    #[test]
    fn negative_eigenvalue_rejected() {
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(-0.5, 0.0)]));
        assert!(matches!(psd_eigenvalues(&m), Err(Error::NotPsd(_))));
    }

    #[test]
    fn projector_checks() {
        let mut p = CMatrix::zeros(2, 2);
        p[(0, 0)] = c(1.0, 0.0);
        assert!(check_projector(&p, 1e-10).is_ok());
        p[(1, 1)] = c(0.5, 0.0);
        assert!(check_projector(&p, 1e-10).is_err());
        assert!(check_projector(&CMatrix::zeros(2, 3), 1e-10).is_err());
    }

    #[test]
    fn sqrt_squares_back() {
        let a = CMatrix::from_fn(3, 3, |i, j| c((i + j) as f64, i as f64 - j as f64));
        let m = a.adjoint() * &a;
        let s = psd_sqrt(&m);
        assert!(max_abs(&(&s * &s - &m)) < 1e-9);
    }
}
