//! The q-convolution and q-middle convolution.
//!
//! For a system `Y(qx) = (B_inf + sum_i B_i/(1 - x/b_i)) Y(x)` of size `m`
//! with `N` poles, the q-convolution `c_lambda` produces an
//! `(N+1)m x (N+1)m` tuple `(F_inf; F_1, ..., F_N)`. The invariant subspaces
//!
//! ```text
//! K = (ker B_0, ..., ker B_N)^t,   L = ker(F_hat - (1 - q^lambda) I)
//! ```
//!
//! are quotiented out to give the q-middle convolution `mc_lambda`. For the
//! Jimbo–Sakai 2x2 instance with `c0 = theta1/(t a1 a2)` the quotient is
//! available in closed form on both eigenvalue branches
//! `q^lambda = chi2 t a1 a2 / theta1` and `q^lambda = chi1 t a1 a2 / theta1`,
//! together with the induced map on the parameter tuple.

use crate::linalg::{self, CMat, CVec};
use crate::qpvi::{self, ModelError, PartialFractionSystem, QPVIParams};
use crate::scalar::{cr, Real, C, ZETA};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QmcError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
    #[error("matrix P is singular: det P within threshold of zero")]
    DegenerateP,
    #[error("parameter map singularity: {0}")]
    MapSingularity(String),
    #[error("branch chi1 requires the scaling constant d_tilde")]
    MissingDTilde,
}

/// Which kernel eigenvalue branch the middle convolution uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `q^lambda = chi2 t a1 a2 / theta1`; L is spanned by `(0,1,0,1,0,1)^t`.
    Chi2,
    /// `q^lambda = chi1 t a1 a2 / theta1`; L is spanned by `(1,0,1,0,1,0)^t`.
    Chi1,
}

/// Output of the q-convolution: the tuple `(F_inf; F_1, ..., F_N)` together
/// with `F_hat` and the exponent value `q^lambda`.
#[derive(Clone, Debug)]
pub struct ConvolutionTuple {
    pub f_infinity: CMat,
    /// `F_1, ..., F_N`, each nonzero only in block row `i+1` (1-based).
    pub f_blocks: Vec<CMat>,
    pub f_hat: CMat,
    pub q_lambda: C,
    /// Size of one block (the input system dimension `m`).
    pub block_dim: usize,
    /// Poles `b_1, ..., b_N` inherited from the input system.
    pub poles: Vec<C>,
}

impl ConvolutionTuple {
    pub fn dim(&self) -> usize {
        self.f_infinity.nrows()
    }

    /// Evaluate `F(x) = F_inf + sum_i F_i / (1 - x/b_i)`.
    pub fn eval(&self, x: C) -> CMat {
        let mut acc = self.f_infinity.clone();
        for (fi, bi) in self.f_blocks.iter().zip(&self.poles) {
            acc += fi * (cr(1.0) / (cr(1.0) - x / bi));
        }
        acc
    }
}

/// The invariant subspaces of the convolution tuple and an orthonormal
/// complement used to realize the quotient numerically.
#[derive(Clone, Debug)]
pub struct SubspacePair {
    pub k_basis: Vec<CVec>,
    pub l_basis: Vec<CVec>,
    pub sum_basis: Vec<CVec>,
    pub complement_basis: Vec<CVec>,
}

impl SubspacePair {
    pub fn quotient_dim(&self) -> usize {
        self.complement_basis.len()
    }
}

/// The reduced system produced by the middle convolution, of size
/// `(N+1)m - dim(K + L)`, with the poles of the input system.
#[derive(Clone, Debug)]
pub struct ReducedSystem {
    pub system: PartialFractionSystem,
}

/// The q-convolution `c_lambda`. `B_0 = I - B_inf - sum B_i` is formed
/// internally; block row `i+1` of `F_i` is
/// `(B_0, ..., B_i - (1 - q^lambda) I, ..., B_N)` and
/// `F_inf = I - F_hat` with `F_hat` the full block-row stack.
pub fn q_convolution(sys: &PartialFractionSystem, q_lambda: C) -> ConvolutionTuple {
    let m = sys.dim();
    let n = sys.residues.len();
    let total = (n + 1) * m;
    let b0 = sys.b_zero();
    let blocks: Vec<&CMat> = std::iter::once(&b0)
        .chain(sys.residues.iter().map(|(_, bi)| bi))
        .collect();

    let mut f_hat = CMat::zeros(total, total);
    for row in 0..=n {
        for (col, b) in blocks.iter().enumerate() {
            f_hat.view_mut((row * m, col * m), (m, m)).copy_from(*b);
        }
    }
    let shift = CMat::identity(m, m) * (cr(1.0) - q_lambda);
    let mut f_blocks = Vec::with_capacity(n);
    for i in 1..=n {
        let mut fi = CMat::zeros(total, total);
        for (col, b) in blocks.iter().enumerate() {
            let mut block = (*b).clone();
            if col == i {
                block -= &shift;
            }
            fi.view_mut((i * m, col * m), (m, m)).copy_from(&block);
        }
        f_blocks.push(fi);
    }
    let f_infinity = CMat::identity(total, total) - &f_hat;
    ConvolutionTuple {
        f_infinity,
        f_blocks,
        f_hat,
        q_lambda,
        block_dim: m,
        poles: sys.residues.iter().map(|(b, _)| *b).collect(),
    }
}

/// Numeric bases of `K`, `L`, their sum, and an orthonormal complement.
/// Nullspaces threshold singular values at `tol * sigma_max`.
pub fn compute_subspaces(
    sys: &PartialFractionSystem,
    tuple: &ConvolutionTuple,
    tol: Real,
) -> Result<SubspacePair, QmcError> {
    let m = tuple.block_dim;
    let n = tuple.poles.len();
    let total = (n + 1) * m;
    let b0 = sys.b_zero();
    let blocks: Vec<CMat> = std::iter::once(b0)
        .chain(sys.residues.iter().map(|(_, bi)| bi.clone()))
        .collect();

    let mut k_basis = Vec::new();
    for (i, b) in blocks.iter().enumerate() {
        for v in linalg::nullspace(b, tol)? {
            let mut embedded = CVec::zeros(total);
            embedded.rows_mut(i * m, m).copy_from(&v);
            k_basis.push(embedded);
        }
    }
    let shifted = &tuple.f_hat - CMat::identity(total, total) * (cr(1.0) - tuple.q_lambda);
    let mut l_basis = linalg::nullspace(&shifted, tol)?;
    // one inverse-iteration step per kernel vector: SVD nullspace directions
    // lose accuracy like eps * sigma_max/gap when the next singular value is
    // small, and the regularized solve contracts that error to rounding
    let sigma_max = shifted.clone().svd(false, false).singular_values[0];
    if l_basis.len() == 1 {
        let regularized =
            &shifted + CMat::identity(total, total) * cr(1e-13 * sigma_max.max(1e-300));
        let lu = regularized.lu();
        if let Some(w) = lu.solve(&l_basis[0]) {
            let norm = w.norm();
            if norm.is_finite() && norm > 0.0 {
                l_basis[0] = w / cr(norm);
            }
        }
    }

    let mut all = k_basis.clone();
    all.extend(l_basis.iter().cloned());
    let (sum_basis, complement_basis) = linalg::span_and_complement(&all, total, tol)?;
    Ok(SubspacePair {
        k_basis,
        l_basis,
        sum_basis,
        complement_basis,
    })
}

/// The q-middle convolution: project each `F_k` onto the orthonormal
/// complement of `K + L` (the quotient action in complement coordinates).
pub fn middle_convolution(
    sys: &PartialFractionSystem,
    q_lambda: C,
    tol: Real,
) -> Result<ReducedSystem, QmcError> {
    let tuple = q_convolution(sys, q_lambda);
    let subspaces = compute_subspaces(sys, &tuple, tol)?;
    Ok(project_tuple(&tuple, &subspaces.complement_basis))
}

/// Project a convolution tuple onto the span of an orthonormal basis.
pub fn project_tuple(tuple: &ConvolutionTuple, basis: &[CVec]) -> ReducedSystem {
    let total = tuple.dim();
    let d = basis.len();
    let mut c = CMat::zeros(total, d);
    for (j, v) in basis.iter().enumerate() {
        c.set_column(j, v);
    }
    let ct = c.adjoint();
    let b_infinity = &ct * &tuple.f_infinity * &c;
    let residues = tuple
        .f_blocks
        .iter()
        .zip(&tuple.poles)
        .map(|(fi, bi)| (*bi, &ct * fi * &c))
        .collect();
    ReducedSystem {
        system: PartialFractionSystem {
            b_infinity,
            residues,
        },
    }
}

/// The closed-form change-of-basis matrix `P` of the Jimbo–Sakai instance.
/// Columns 1–2 span the chosen complement, column 3 is the basis vector of
/// `L`, and columns 4–6 carry the kernel vectors of `B_0, B_1, B_2`.
pub fn closed_form_p(p: &QPVIParams, branch: Branch) -> Result<CMat, QmcError> {
    let c0 = p.c0();
    let [v0, v1, v2] = qpvi::kernel_vectors(p, c0)?;
    let (q, t, y, z) = (p.q, p.t, p.y, p.z);
    let (a1, a2, a3, a4) = (p.a1, p.a2, p.a3, p.a4);
    let (chi1, chi2) = (p.chi1, p.chi2);
    let th1 = p.theta1;
    let zero = cr(0.0);
    let one = cr(1.0);

    let mat = match branch {
        Branch::Chi2 => {
            let g1 = q * z * th1 + y * a2 - q * y * z * chi1 * a2 - t * a1 * a2;
            let g2 = y * (q * z * chi1 - one) * (a1 - a2);
            let g3 = -a2 * (y - t * a1);
            let g4 = y * (a1 - a2);
            CMat::from_row_slice(
                6,
                6,
                &[
                    zero, zero, zero, v0[0], zero, zero, //
                    g1, g3, one, v0[1], zero, zero, //
                    zero, zero, zero, zero, v1[0], zero, //
                    g2, g4, one, zero, v1[1], zero, //
                    zero, zero, zero, zero, zero, v2[0], //
                    zero, zero, one, zero, zero, v2[1],
                ],
            )
        }
        Branch::Chi1 => {
            let g3 = -q * (chi1 * a2 * y - th1) * z + a2 * (y - t * a1);
            let g4 = y * (a1 - a2) * (q * chi1 * z - one);
            let g1 = -chi2
                * a2
                * (q * q * chi1 * th1 * (y - a3) * (y - a4) * (chi1 * y - chi2 * t * a1) * z * z
                    + th1 * (y - t * a1) * (y - t * a1) * (y - t * a2)
                    - q * (y - t * a1)
                        * ((th1 * chi1 * 2.0) * y * y
                            - th1 * (chi2 * t * a1 + chi1 * t * a2 + chi1 * a3 + chi1 * a4) * y
                            + t * (th1 * th1 + chi1 * chi2 * a1 * a2 * a3 * a4))
                        * z);
            let g2 = (a1 - a2)
                * y
                * (q * q * chi1 * chi1 * chi2 * th1 * (y - a3) * (y - a4) * z * z
                    + th1 * chi2 * (y - t * a1) * (y - t * a2)
                    - q * chi1
                        * ((chi2 * th1 * 2.0) * y * y
                            - chi2 * th1 * (t * a1 + t * a2 + a3 + a4) * y
                            + t * (th1 * th1 + chi2 * chi2 * a1 * a2 * a3 * a4))
                        * z);
            CMat::from_row_slice(
                6,
                6,
                &[
                    zero, zero, one, v0[0], zero, zero, //
                    g1, g3, zero, v0[1], zero, zero, //
                    zero, zero, one, zero, v1[0], zero, //
                    g2, g4, zero, zero, v1[1], zero, //
                    zero, zero, one, zero, zero, v2[0], //
                    zero, zero, zero, zero, zero, v2[1],
                ],
            )
        }
    };
    let d = linalg::det(&mat);
    // Hadamard scale: product of column norms
    let scale: Real = (0..6).map(|j| mat.column(j).norm()).product();
    if d.norm() <= ZETA * scale.max(1e-300) {
        return Err(QmcError::DegenerateP);
    }
    Ok(mat)
}

/// Closed-form reduced system `(Fbar_inf; Fbar_1, Fbar_2)` of the Jimbo–Sakai
/// middle convolution, equal to the top-left 2x2 blocks of `P^{-1} F_k P`.
/// `Fbar_2` is `Fbar_1` with `a1 <-> a2`.
pub fn closed_form_mc(p: &QPVIParams, branch: Branch) -> Result<ReducedSystem, QmcError> {
    p.validate()?;
    let (q, t, y, z) = (p.q, p.t, p.y, p.z);
    let (a3, a4) = (p.a3, p.a4);
    let (chi1, chi2) = (p.chi1, p.chi2);
    let (th1, th2) = (p.theta1, p.theta2);

    let fbar1 = |a1: C, a2: C| -> CMat {
        match branch {
            Branch::Chi2 => {
                let f1 = q * q * chi1 * chi1 * chi2 * (y - a3) * (y - a4) * z * z
                    + (y - t * a2) * (y * chi2 - chi1 * t * a1)
                    - q * chi1
                        * ((chi2 * 2.0) * y * y
                            - (chi1 * t * a1 + chi2 * t * a2 + chi2 * a3 + chi2 * a4) * y
                            + t * (th1 + th2))
                        * z;
                let f2 = q * chi1 * chi2 * a2 * (y - a3) * (y - a4) * z
                    - (y - t * a2) * (a2 * chi2 * y - th1);
                let f3 = q * (y * a2 * chi1 - th1) * z - a2 * (y - t * a1);
                let pref = a1 / (q * y * z * th1 * (a1 - a2) * (th1 - chi1 * t * a1 * a2));
                CMat::from_row_slice(
                    2,
                    2,
                    &[
                        -pref * (y - t * a1) * f1 * a2 * a2,
                        -pref * f2 * (y - t * a1) * a2,
                        pref * f1 * f3 * a2,
                        pref * f2 * f3,
                    ],
                )
            }
            Branch::Chi1 => {
                let f1 = q * chi1 * chi2 * a2 * (y - a3) * (y - a4) * z
                    - (chi2 * a2 * y - th1) * (y - t * a2);
                let f2 = q * (chi1 * a2 * y - th1) * z - a2 * (y - t * a1);
                let f3 = q * q * chi1 * th1 * (y - a3) * (y - a4) * (chi1 * y - chi2 * t * a1) * z * z
                    + th1 * (y - t * a1) * (y - t * a1) * (y - t * a2)
                    - q * (y - t * a1)
                        * ((chi1 * th1 * 2.0) * y * y
                            - th1 * (chi2 * t * a1 + chi1 * t * a2 + chi1 * a3 + chi1 * a4) * y
                            + t * (th1 * th1 + chi1 * chi2 * a1 * a2 * a3 * a4))
                        * z;
                let pref =
                    a1 / (q * y * z * th1 * th1 * (a1 - a2) * (chi2 * t * a1 * a2 - th1));
                CMat::from_row_slice(
                    2,
                    2,
                    &[
                        -pref * th1 * f1 * f2,
                        -pref * a2 * f2,
                        pref * chi2 * a2 * th1 * f1 * f3,
                        pref * chi2 * a2 * a2 * f3,
                    ],
                )
            }
        }
    };

    let lam1 = p.chi1 * t * p.a1 * p.a2 / th1;
    let lam2 = p.chi2 * t * p.a1 * p.a2 / th1;
    let b_infinity = match branch {
        Branch::Chi2 => CMat::from_row_slice(2, 2, &[lam1, cr(0.0), cr(0.0), cr(1.0)]),
        Branch::Chi1 => CMat::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), lam2]),
    };
    let f1 = fbar1(p.a1, p.a2);
    let f2 = fbar1(p.a2, p.a1);
    Ok(ReducedSystem {
        system: PartialFractionSystem {
            b_infinity,
            residues: vec![(t * p.a1, f1), (t * p.a2, f2)],
        },
    })
}

/// The transformed quadratic matrix polynomial
/// `A~(x~) = c~ (x - t a1)(x - t a2) Fbar(x)` with `x = d~ x~`
/// (`d~ = 1` on the chi2 branch).
pub fn a_tilde(
    p: &QPVIParams,
    branch: Branch,
    c_tilde: C,
    d_tilde: Option<C>,
) -> Result<qpvi::MatrixPolynomial, QmcError> {
    let d = match branch {
        Branch::Chi2 => cr(1.0),
        Branch::Chi1 => d_tilde.ok_or(QmcError::MissingDTilde)?,
    };
    if d.norm() == 0.0 || c_tilde.norm() == 0.0 {
        return Err(QmcError::MapSingularity("c_tilde or d_tilde is zero".into()));
    }
    let reduced = closed_form_mc(p, branch)?.system;
    // c~ (x - b1)(x - b2) [F_inf + F1/(1 - x/b1) + F2/(1 - x/b2)]
    //   = c~ [F_inf (x-b1)(x-b2) - b1 F1 (x-b2) - b2 F2 (x-b1)]
    let (b1, f1) = (reduced.residues[0].0, reduced.residues[0].1.clone());
    let (b2, f2) = (reduced.residues[1].0, reduced.residues[1].1.clone());
    let finf = reduced.b_infinity;
    let a2 = finf.clone() * c_tilde;
    let a1 = (finf.clone() * (-(b1 + b2)) - &f1 * b1 - &f2 * b2) * c_tilde;
    let a0 = (finf * (b1 * b2) + &f1 * (b1 * b2) + &f2 * (b1 * b2)) * c_tilde;
    // substitute x = d x~
    Ok(qpvi::MatrixPolynomial {
        coefficients: vec![a0, a1 * d, a2 * (d * d)],
    })
}

/// The parameter map induced by the q-middle convolution, normalized back to
/// the standard quadratic form. Eigenvalue sets are assigned in the fixed
/// order that realizes the Weyl-word comparison, and the gauge parameter is
/// reset to `w~ = 1` (the induced `w` is exposed by [`mc_gauge_w`]).
pub fn parameter_map_mc(
    p: &QPVIParams,
    c_tilde: C,
    branch: Branch,
    d_tilde: Option<C>,
) -> Result<QPVIParams, QmcError> {
    p.validate()?;
    if c_tilde.norm() == 0.0 {
        return Err(QmcError::MapSingularity("c_tilde = 0".into()));
    }
    let (q, t, y, z) = (p.q, p.t, p.y, p.z);
    let (a1, a2, a3, a4) = (p.a1, p.a2, p.a3, p.a4);
    let (chi1, chi2) = (p.chi1, p.chi2);
    let (th1, th2) = (p.theta1, p.theta2);
    let ta12 = t * a1 * a2;

    let out = match branch {
        Branch::Chi2 => {
            let num = q * chi1 * (y - a3) * (y - a4) * z - (y - t * a1) * (y - t * a2);
            let den = q * chi1 * chi2 * ta12 * (y - a3) * (y - a4) * z
                - th1 * (y - t * a1) * (y - t * a2);
            if den.norm() <= ZETA * num.norm().max(th1.norm()) {
                return Err(QmcError::MapSingularity("y~ denominator vanishes".into()));
            }
            let y_new = chi2 * ta12 * num * y / den;
            let a3_new = chi2 * ta12 * a3 / th1;
            let a4_new = chi2 * ta12 * a4 / th1;
            let ratio = (y - a3) * (y - a4) / ((y - t * a1) * (y - t * a2));
            let zden = (y_new - a3_new) * (y_new - a4_new);
            if zden.norm() <= ZETA * (y_new.norm().max(a3_new.norm())).powi(2) {
                return Err(QmcError::MapSingularity("z~ denominator vanishes".into()));
            }
            let z_new = z * (chi2 / c_tilde) * ratio * (y_new - t * a1) * (y_new - t * a2) / zden;
            QPVIParams {
                q,
                t,
                a1,
                a2,
                a3: a3_new,
                a4: a4_new,
                chi1: c_tilde * chi1 * ta12 / th1,
                chi2: c_tilde,
                theta1: c_tilde * ta12 * th2 / th1,
                theta2: c_tilde * chi2 * ta12 * ta12 / th1,
                y: y_new,
                z: z_new,
                w: cr(1.0),
            }
        }
        Branch::Chi1 => {
            let d = d_tilde.ok_or(QmcError::MissingDTilde)?;
            if d.norm() == 0.0 {
                return Err(QmcError::MapSingularity("d_tilde = 0".into()));
            }
            let den = q * th1 * z - ta12;
            if den.norm() <= ZETA * ta12.norm() {
                return Err(QmcError::MapSingularity("y~ denominator vanishes".into()));
            }
            QPVIParams {
                q,
                t,
                a1: a1 / d,
                a2: a2 / d,
                a3: chi1 * ta12 * a3 / (d * th1),
                a4: chi1 * ta12 * a4 / (d * th1),
                chi1: c_tilde * d * d * th1 / ta12,
                chi2: c_tilde * d * d * chi2,
                theta1: c_tilde * chi1 * t * a1 * a2,
                theta2: c_tilde * th2,
                y: ta12 * (q * chi1 * z - cr(1.0)) * y / (d * den),
                z: z / (c_tilde * d * d),
                w: cr(1.0),
            }
        }
    };
    Ok(out)
}

/// The gauge parameter `w~` the transformed system actually carries, read off
/// the linear entry `a~12(x~) = chi2~ w~ (x~ - y~)`.
pub fn mc_gauge_w(
    p: &QPVIParams,
    branch: Branch,
    c_tilde: C,
    d_tilde: Option<C>,
) -> Result<C, QmcError> {
    let at = a_tilde(p, branch, c_tilde, d_tilde)?;
    let mapped = parameter_map_mc(p, c_tilde, branch, d_tilde)?;
    // coefficient of x~ in the upper-right entry is chi2~ w~
    let lin = at.coefficients[1][(0, 1)];
    Ok(lin / mapped.chi2)
}
