//! Small dense complex linear algebra on top of nalgebra: numeric nullspaces
//! with singular-value thresholding, orthonormal complements, and
//! characteristic polynomials. Sizes here are 2x2 and 6x6, so everything uses
//! dynamic matrices without further tuning.

use crate::scalar::{Real, C};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub type CMat = DMatrix<C>;
pub type CVec = DVector<C>;

#[derive(Debug, Error)]
pub enum LinalgError {
    /// A rank decision had a singular value within a factor 10 of the
    /// threshold on both sides, so kernel dimension is not well defined
    /// numerically. Carries the offending value, the threshold, and the gap
    /// ratio `sigma / threshold`.
    #[error("rank decision ambiguous: singular value {sigma:e} vs threshold {threshold:e} (ratio {ratio:.3})")]
    RankAmbiguous {
        sigma: Real,
        threshold: Real,
        ratio: Real,
    },
    #[error("matrix is singular up to the zero threshold")]
    Singular,
}

/// Numeric nullspace of `m` by SVD, thresholding at `tol * sigma_max`.
///
/// Returns an orthonormal basis (columns). Fails if any singular value lies
/// within a factor 10 of the threshold, making the rank call ambiguous.
pub fn nullspace(m: &CMat, tol: Real) -> Result<Vec<CVec>, LinalgError> {
    let ncols = m.ncols();
    // pad wide matrices with zero rows so the thin SVD carries the full
    // right-singular basis
    let work = if m.nrows() < ncols {
        let mut padded = CMat::zeros(ncols, ncols);
        padded.view_mut((0, 0), (m.nrows(), ncols)).copy_from(m);
        padded
    } else {
        m.clone()
    };
    let svd = work.svd(false, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, Real::max);
    let threshold = tol * smax.max(1e-300);
    for &s in svd.singular_values.iter() {
        let ratio = s / threshold;
        if ratio > 0.1 && ratio < 10.0 {
            return Err(LinalgError::RankAmbiguous {
                sigma: s,
                threshold,
                ratio,
            });
        }
    }
    let vt = svd.v_t.expect("SVD with v_t requested");
    let mut basis = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s <= threshold {
            basis.push(vt.row(i).transpose().map(|z| z.conj()));
        }
    }
    Ok(basis)
}

/// Orthonormal basis of the column span of `vectors`, plus an orthonormal
/// basis of its orthogonal complement in dimension `dim`. Thresholds the
/// span's rank at `tol * sigma_max`.
pub fn span_and_complement(
    vectors: &[CVec],
    dim: usize,
    tol: Real,
) -> Result<(Vec<CVec>, Vec<CVec>), LinalgError> {
    if vectors.is_empty() {
        let id = CMat::identity(dim, dim);
        let complement = (0..dim).map(|j| id.column(j).into_owned()).collect();
        return Ok((Vec::new(), complement));
    }
    let mut m = CMat::zeros(dim, vectors.len());
    for (j, v) in vectors.iter().enumerate() {
        m.set_column(j, v);
    }
    let svd = m.svd(true, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0, Real::max);
    let threshold = tol * smax.max(1e-300);
    for &s in svd.singular_values.iter() {
        let ratio = s / threshold;
        if ratio > 0.1 && ratio < 10.0 {
            return Err(LinalgError::RankAmbiguous {
                sigma: s,
                threshold,
                ratio,
            });
        }
    }
    let u = svd.u.expect("SVD with u requested");
    let rank = svd.singular_values.iter().filter(|&&s| s > threshold).count();
    let span = (0..rank).map(|j| u.column(j).into_owned()).collect();
    // complement: kernel of the conjugate-transposed span matrix
    let mut span_mat = CMat::zeros(dim, rank);
    for j in 0..rank {
        span_mat.set_column(j, &u.column(j).into_owned());
    }
    let complement = nullspace(&span_mat.adjoint(), tol)?;
    Ok((span, complement))
}

/// Determinant via LU.
pub fn det(m: &CMat) -> C {
    m.clone().lu().determinant()
}

/// Solve `m x = rhs`; fails when `m` is singular to working precision.
pub fn solve(m: &CMat, rhs: &CVec) -> Result<CVec, LinalgError> {
    m.clone().lu().solve(rhs).ok_or(LinalgError::Singular)
}

/// Matrix inverse; fails when singular to working precision.
pub fn inverse(m: &CMat) -> Result<CMat, LinalgError> {
    m.clone().try_inverse().ok_or(LinalgError::Singular)
}

/// Coefficients `[c_0, ..., c_{n-1}, 1]` of the monic characteristic
/// polynomial `det(xI - M)`, by the Faddeev–LeVerrier recursion.
pub fn char_poly(m: &CMat) -> Vec<C> {
    let n = m.nrows();
    let mut coeffs = vec![C::new(0.0, 0.0); n + 1];
    coeffs[n] = C::new(1.0, 0.0);
    let mut aux = CMat::identity(n, n);
    for k in 1..=n {
        let prod = m * &aux;
        let trace = prod.trace();
        let c = -trace / C::new(k as Real, 0.0);
        coeffs[n - k] = c;
        aux = prod + CMat::identity(n, n) * c;
    }
    coeffs
}

/// Max relative deviation between two characteristic polynomials, coefficient
/// by coefficient, scaled by the largest coefficient magnitude.
pub fn char_poly_distance(a: &CMat, b: &CMat) -> Real {
    let pa = char_poly(a);
    let pb = char_poly(b);
    let scale = pa
        .iter()
        .chain(pb.iter())
        .map(|c| c.norm())
        .fold(1e-300, Real::max);
    pa.iter()
        .zip(pb.iter())
        .map(|(x, y)| (x - y).norm() / scale)
        .fold(0.0, Real::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;

    fn example_matrix() -> CMat {
        CMat::from_row_slice(
            3,
            3,
            &[
                c(1.0, 0.5),
                c(2.0, -1.0),
                c(0.0, 0.3),
                c(-0.5, 0.2),
                c(1.5, 0.0),
                c(0.7, -0.4),
                c(0.3, 0.0),
                c(0.1, 0.9),
                c(2.2, 0.1),
            ],
        )
    }

    #[test]
    fn nullspace_of_rank_deficient() {
        let mut m = example_matrix();
        let col = (m.column(0) + m.column(1)).into_owned();
        m.set_column(2, &col);
        let ker = nullspace(&m, 1e-10).unwrap();
        assert_eq!(ker.len(), 1);
        let img = &m * &ker[0];
        assert!(img.norm() < 1e-12 * m.norm());
    }

    #[test]
    fn complement_is_orthogonal() {
        let v = vec![
            CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0), c(0.5, 0.0)]),
            CVec::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0), c(-0.3, 0.2)]),
        ];
        let (span, compl) = span_and_complement(&v, 3, 1e-10).unwrap();
        assert_eq!(span.len(), 2);
        assert_eq!(compl.len(), 1);
        for s in &span {
            let ip: C = compl[0].dotc(s);
            assert!(ip.norm() < 1e-12);
        }
    }

    #[test]
    fn char_poly_matches_det_and_trace() {
        let m = example_matrix();
        let p = char_poly(&m);
        // constant term = (-1)^n det, next = -trace for the x^{n-1} term
        let n = 3;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        assert!((p[0] - det(&m) * c(sign, 0.0)).norm() < 1e-12 * det(&m).norm().max(1.0));
        assert!((p[2] + m.trace()).norm() < 1e-13 * m.trace().norm());
    }

    #[test]
    fn ambiguous_rank_reported() {
        // singular values 1 and ~tol: right inside the ambiguity band
        let m = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1e-10, 0.0)]);
        let r = nullspace(&m, 1e-10);
        assert!(matches!(r, Err(LinalgError::RankAmbiguous { .. })));
    }
}
