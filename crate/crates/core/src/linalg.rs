//! Thin helpers over nalgebra's dense decompositions.

use nalgebra::DMatrix;
use ndarray::Array2;
use ndarray_linalg::{JobSvd, SVDDC};

use crate::C64;

/// `exp(i h)` for Hermitian `h`, through its eigendecomposition.
pub(crate) fn expi_hermitian(h: &DMatrix<C64>) -> DMatrix<C64> {
    let n = h.nrows();
    if n == 1 {
        return DMatrix::from_element(1, 1, C64::from_polar(1.0, h[(0, 0)].re));
    }
    let eig = h.clone().symmetric_eigen();
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::from_polar(1.0, l)));
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

pub(crate) struct Truncated {
    pub u: DMatrix<C64>,
    pub s: Vec<f64>,
    pub vt: DMatrix<C64>,
    /// Sum of squared discarded singular values.
    pub discarded: f64,
}

/// SVD keeping singular values with `σ_i / σ_max ≥ threshold`, at most
/// `max_bond` of them, and always at least one.
///
/// The decomposition itself is LAPACK's divide-and-conquer `gesdd`, which
/// returns singular values in descending order.
pub(crate) fn svd_truncated(m: DMatrix<C64>, threshold: f64, max_bond: Option<usize>) -> Truncated {
    let (rows, cols) = m.shape();
    let a = Array2::from_shape_fn((rows, cols), |(i, j)| m[(i, j)]);
    let (u, s, vt) = a.svddc(JobSvd::Some).expect("LAPACK gesdd failed");
    let u = u.expect("u requested");
    let vt = vt.expect("vt requested");

    let smax = s.first().copied().unwrap_or(0.0);
    let mut keep = s.iter().take_while(|&&x| smax > 0.0 && x >= threshold * smax).count().max(1);
    if let Some(cap) = max_bond {
        keep = keep.min(cap.max(1));
    }
    let discarded = s.iter().skip(keep).map(|x| x * x).sum();
    Truncated {
        u: DMatrix::from_fn(rows, keep, |i, j| u[[i, j]]),
        s: s.iter().take(keep).copied().collect(),
        vt: DMatrix::from_fn(keep, cols, |i, j| vt[[i, j]]),
        discarded,
    }
}

/// Frobenius norm of `m† m − 1`.
pub(crate) fn unitarity_defect(m: &DMatrix<C64>) -> f64 {
    let n = m.ncols();
    (m.adjoint() * m - DMatrix::<C64>::identity(n, n)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expi_of_pauli_x() {
        let t = 0.3;
        let h = DMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(t, 0.0), C64::new(t, 0.0), C64::new(0.0, 0.0)]);
        let e = expi_hermitian(&h);
        assert!((e[(0, 0)] - C64::new(t.cos(), 0.0)).norm() < 1e-14);
        assert!((e[(0, 1)] - C64::new(0.0, t.sin())).norm() < 1e-14);
        assert!(unitarity_defect(&e) < 1e-14);
    }

    #[test]
    fn truncation_respects_cap_and_reports_weight() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(3.0, 0.0),
            C64::new(2.0, 0.0),
            C64::new(1.0, 0.0),
        ]));
        let t = svd_truncated(m, 0.0, Some(2));
        assert_eq!(t.s, vec![3.0, 2.0]);
        assert!((t.discarded - 1.0).abs() < 1e-12);
        let t = svd_truncated(DMatrix::zeros(3, 3), 1e-12, None);
        assert_eq!(t.s.len(), 1);
    }
}
