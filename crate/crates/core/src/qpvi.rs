//! The Jimbo–Sakai linear problem: parameter tuples, the quadratic matrix
//! `A(x)`, its partial-fraction form `B(x) = A(x) / (c0 (x - t a1)(x - t a2))`,
//! kernel vectors of the residue matrices, and the reduction of the 2x2 system
//! to a single second-order scalar q-difference equation.

use crate::linalg::{self, CMat, CVec};
use crate::scalar::{cjson, cr, Real, C, ZETA};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("constraint chi1 chi2 a1 a2 a3 a4 = theta1 theta2 violated: relative residual {residual:e}")]
    ConstraintViolated { residual: Real },
    #[error("degenerate parameters: {0}")]
    Degenerate(String),
    #[error("coincident poles t a1 = t a2")]
    CoincidentPoles,
    #[error("residue matrix B{index} is not rank one")]
    Rank { index: usize },
    #[error("upper-right entry b12 vanishes identically; system is reducible")]
    ReducibleSystem,
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
}

/// Parameters of the Jimbo–Sakai linear problem. The tuple satisfies
/// `chi1 chi2 a1 a2 a3 a4 = theta1 theta2`; `y`, `z`, `w` are the accessory
/// parameters fixing the entries of `A(x)` beyond its spectral data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QPVIParams {
    #[serde(with = "cjson")]
    pub q: C,
    #[serde(with = "cjson")]
    pub t: C,
    #[serde(with = "cjson")]
    pub a1: C,
    #[serde(with = "cjson")]
    pub a2: C,
    #[serde(with = "cjson")]
    pub a3: C,
    #[serde(with = "cjson")]
    pub a4: C,
    #[serde(with = "cjson")]
    pub chi1: C,
    #[serde(with = "cjson")]
    pub chi2: C,
    #[serde(with = "cjson")]
    pub theta1: C,
    #[serde(with = "cjson")]
    pub theta2: C,
    #[serde(with = "cjson")]
    pub y: C,
    #[serde(with = "cjson")]
    pub z: C,
    #[serde(with = "cjson")]
    pub w: C,
}

impl QPVIParams {
    /// Relative residual of the constraint `chi1 chi2 a1 a2 a3 a4 = theta1 theta2`.
    pub fn constraint_residual(&self) -> Real {
        let lhs = self.chi1 * self.chi2 * self.a1 * self.a2 * self.a3 * self.a4;
        let rhs = self.theta1 * self.theta2;
        (lhs - rhs).norm() / rhs.norm().max(1e-300)
    }

    /// Validate the constraint and the nondegeneracy conditions needed by the
    /// entry formulas of `A(x)` (all parameters nonzero, `a1 != a2`,
    /// `chi1 != chi2`).
    pub fn validate(&self) -> Result<(), ModelError> {
        let residual = self.constraint_residual();
        if residual > ZETA {
            return Err(ModelError::ConstraintViolated { residual });
        }
        let named = [
            (self.q, "q"),
            (self.t, "t"),
            (self.a1, "a1"),
            (self.a2, "a2"),
            (self.a3, "a3"),
            (self.a4, "a4"),
            (self.chi1, "chi1"),
            (self.chi2, "chi2"),
            (self.theta1, "theta1"),
            (self.theta2, "theta2"),
            (self.y, "y"),
            (self.z, "z"),
            (self.w, "w"),
        ];
        for (v, name) in named {
            if v.norm() == 0.0 {
                return Err(ModelError::Degenerate(format!("{name} = 0")));
            }
        }
        let scale = self.a1.norm().max(self.a2.norm());
        if (self.a1 - self.a2).norm() <= 10.0 * ZETA * scale {
            return Err(ModelError::Degenerate("a1 = a2".into()));
        }
        let scale = self.chi1.norm().max(self.chi2.norm());
        if (self.chi1 - self.chi2).norm() <= 10.0 * ZETA * scale {
            return Err(ModelError::Degenerate("chi1 = chi2".into()));
        }
        Ok(())
    }

    /// The normalization constant `c0 = theta1 / (t a1 a2)` that makes
    /// `det B0 = 0`. The other admissible choice is obtained by
    /// [`Self::swap_thetas`].
    pub fn c0(&self) -> C {
        self.theta1 / (self.t * self.a1 * self.a2)
    }

    /// The multiplicative exponent `q^lambda` of the middle convolution on the
    /// given eigenvalue branch: `chi2 t a1 a2 / theta1` or `chi1 t a1 a2 / theta1`.
    pub fn q_lambda(&self, branch: crate::qmc::Branch) -> C {
        match branch {
            crate::qmc::Branch::Chi2 => self.chi2 * self.t * self.a1 * self.a2 / self.theta1,
            crate::qmc::Branch::Chi1 => self.chi1 * self.t * self.a1 * self.a2 / self.theta1,
        }
    }

    /// Swap `theta1 <-> theta2` (selects the other root of `det B0 = 0`).
    pub fn swap_thetas(&self) -> Self {
        let mut p = *self;
        std::mem::swap(&mut p.theta1, &mut p.theta2);
        p
    }

    /// Swap `a1 <-> a2` (exchanges the two finite poles of `B(x)`).
    pub fn swap_a12(&self) -> Self {
        let mut p = *self;
        std::mem::swap(&mut p.a1, &mut p.a2);
        p
    }

    /// Derived read-only view of the q-Painlevé VI root variables
    /// `(b1, b2, b3, b4) = (a1 a2/theta1, a1 a2/theta2, 1/(q chi1), 1/chi2)`.
    /// They are not stored state; nothing downstream consumes them.
    pub fn qpvi_b_view(&self) -> [C; 4] {
        [
            self.a1 * self.a2 / self.theta1,
            self.a1 * self.a2 / self.theta2,
            cr(1.0) / (self.q * self.chi1),
            cr(1.0) / self.chi2,
        ]
    }
}

/// A matrix polynomial `A(x) = A_0 + A_1 x + ... + A_d x^d`.
#[derive(Clone, Debug)]
pub struct MatrixPolynomial {
    pub coefficients: Vec<CMat>,
}

impl MatrixPolynomial {
    pub fn eval(&self, x: C) -> CMat {
        let dim = self.coefficients[0].nrows();
        let mut acc = CMat::zeros(dim, dim);
        for coeff in self.coefficients.iter().rev() {
            acc = acc * x + coeff;
        }
        acc
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }
}

/// A q-difference system `Y(qx) = (B_inf + sum_i B_i / (1 - x/b_i)) Y(x)`.
#[derive(Clone, Debug)]
pub struct PartialFractionSystem {
    pub b_infinity: CMat,
    /// Pairs `(pole b_i, residue matrix B_i)`; poles pairwise distinct, nonzero.
    pub residues: Vec<(C, CMat)>,
}

impl PartialFractionSystem {
    pub fn dim(&self) -> usize {
        self.b_infinity.nrows()
    }

    /// `B0 = I - B_inf - sum_i B_i` (equivalently `I - B(0)`).
    pub fn b_zero(&self) -> CMat {
        let mut acc = CMat::identity(self.dim(), self.dim()) - &self.b_infinity;
        for (_, bi) in &self.residues {
            acc -= bi;
        }
        acc
    }

    pub fn eval(&self, x: C) -> CMat {
        let mut acc = self.b_infinity.clone();
        for (pole, bi) in &self.residues {
            acc += bi * (cr(1.0) / (cr(1.0) - x / pole));
        }
        acc
    }

    /// Distance from `x` to the nearest pole, relative to the pole magnitude.
    pub fn pole_distance(&self, x: C) -> Real {
        self.residues
            .iter()
            .map(|(pole, _)| (x - pole).norm() / pole.norm().max(1e-300))
            .fold(Real::INFINITY, Real::min)
    }
}

/// Entry data of `A(x)` shared by [`build_a`] and the scalar reduction.
struct EntryData {
    alpha: C,
    beta: C,
    gamma: C,
    delta: C,
    z1: C,
    z2: C,
}

fn entry_data(p: &QPVIParams) -> EntryData {
    let (q, t, y, z) = (p.q, p.t, p.y, p.z);
    let (a1, a2, a3, a4) = (p.a1, p.a2, p.a3, p.a4);
    let (chi1, chi2) = (p.chi1, p.chi2);
    let z1 = (y - t * a1) * (y - t * a2) / (q * chi1 * z);
    let z2 = q * chi1 * (y - a3) * (y - a4) * z;
    let s = (p.theta1 + p.theta2) * t - chi1 * z1 - chi2 * z2;
    let dchi = chi1 - chi2;
    let alpha = (s / y - chi2 * ((a1 + a2) * t + a3 + a4 - y * 2.0)) / dchi;
    let beta = (-s / y + chi1 * ((a1 + a2) * t + a3 + a4 - y * 2.0)) / dchi;
    let gamma = z1 + z2 + (y + alpha) * (y + beta) + (alpha + beta) * y
        - a1 * a2 * t * t
        - (a1 + a2) * (a3 + a4) * t
        - a3 * a4;
    let delta = (a1 * a2 * a3 * a4 * t * t - (alpha * y + z1) * (beta * y + z2)) / y;
    EntryData {
        alpha,
        beta,
        gamma,
        delta,
        z1,
        z2,
    }
}

/// Build the quadratic matrix `A(x) = A_0 + A_1 x + A_2 x^2` of the
/// Jimbo–Sakai problem. `A_2 = diag(chi1, chi2)`, the upper-right entry is
/// `chi2 w (x - y)`, `a11(y) = (y - t a1)(y - t a2)/(q z)`, `A_0` has
/// eigenvalues `t theta1, t theta2`, and the determinant factors as
/// `chi1 chi2 (x - t a1)(x - t a2)(x - a3)(x - a4)`.
pub fn build_a(p: &QPVIParams) -> Result<MatrixPolynomial, ModelError> {
    p.validate()?;
    let e = entry_data(p);
    let (chi1, chi2, y, w) = (p.chi1, p.chi2, p.y, p.w);
    // a11 = chi1((x-y)(x-alpha) + z1)          (quadratic)
    // a12 = chi2 w (x-y)                        (linear)
    // a21 = chi1 w^{-1} (gamma x + delta)       (linear)
    // a22 = chi2((x-y)(x-beta) + z2)            (quadratic)
    let a0 = CMat::from_row_slice(
        2,
        2,
        &[
            chi1 * (y * e.alpha + e.z1),
            -chi2 * w * y,
            chi1 / w * e.delta,
            chi2 * (y * e.beta + e.z2),
        ],
    );
    let a1 = CMat::from_row_slice(
        2,
        2,
        &[
            chi1 * (-y - e.alpha),
            chi2 * w,
            chi1 / w * e.gamma,
            chi2 * (-y - e.beta),
        ],
    );
    let a2 = CMat::from_row_slice(2, 2, &[chi1, cr(0.0), cr(0.0), chi2]);
    Ok(MatrixPolynomial {
        coefficients: vec![a0, a1, a2],
    })
}

/// Build `B(x) = A(x) / (c0 (x - t a1)(x - t a2))` in partial-fraction form.
/// `B_inf = diag(chi1, chi2)/c0` and the residues come from evaluating `A`
/// at the poles, so the reconstruction is exact by construction.
pub fn build_b(p: &QPVIParams, c0: C) -> Result<PartialFractionSystem, ModelError> {
    if c0.norm() == 0.0 {
        return Err(ModelError::Degenerate("c0 = 0".into()));
    }
    let a = build_a(p)?;
    let b1_pole = p.t * p.a1;
    let b2_pole = p.t * p.a2;
    if (b1_pole - b2_pole).norm() <= 10.0 * ZETA * b1_pole.norm().max(b2_pole.norm()) {
        return Err(ModelError::CoincidentPoles);
    }
    // B(x) = B_inf - b1 B1^res/(x-b1) - b2 B2^res/(x-b2) with
    // B_i/(1 - x/b_i) = -b_i B_i/(x - b_i), so B_i = -Res_{x=b_i} B(x) / b_i.
    let res1 = a.eval(b1_pole) * (cr(1.0) / (c0 * (b1_pole - b2_pole)));
    let res2 = a.eval(b2_pole) * (cr(1.0) / (c0 * (b2_pole - b1_pole)));
    let b1_mat = res1 * (-cr(1.0) / b1_pole);
    let b2_mat = res2 * (-cr(1.0) / b2_pole);
    let b_infinity = a.coefficients[2].clone() * (cr(1.0) / c0);
    Ok(PartialFractionSystem {
        b_infinity,
        residues: vec![(b1_pole, b1_mat), (b2_pole, b2_mat)],
    })
}

/// Kernel vectors `(v0, v1, v2)` of `B0, B1, B2` for `c0 = theta1/(t a1 a2)`,
/// normalized so the first components are
/// `v01 = q w y z theta1 (chi1 - chi2)` and
/// `v11 = v21 = q w y z theta1 chi2 (chi1 - chi2)`.
pub fn kernel_vectors(p: &QPVIParams, c0: C) -> Result<[CVec; 3], ModelError> {
    let sys = build_b(p, c0)?;
    let mats = [sys.b_zero(), sys.residues[0].1.clone(), sys.residues[1].1.clone()];
    let common = p.q * p.w * p.y * p.z * p.theta1 * (p.chi1 - p.chi2);
    let targets = [common, common * p.chi2, common * p.chi2];
    let mut out = Vec::with_capacity(3);
    for (i, m) in mats.iter().enumerate() {
        let ker = linalg::nullspace(m, 1e-9)?;
        if ker.len() != 1 {
            return Err(ModelError::Rank { index: i });
        }
        let v = &ker[0];
        if v[0].norm() <= ZETA {
            return Err(ModelError::Degenerate(format!(
                "kernel vector of B{i} has vanishing first component"
            )));
        }
        out.push(v * (targets[i] / v[0]));
    }
    Ok([out[0].clone(), out[1].clone(), out[2].clone()])
}

/// A three-term scalar q-difference relation
/// `c_plus(x) u(qx) + c_zero(x) u(x) + c_minus(x) u(x/q) = 0`
/// represented by coefficient evaluators.
pub struct ScalarThreeTerm {
    pub c_plus: Box<dyn Fn(C) -> C + Send + Sync>,
    pub c_zero: Box<dyn Fn(C) -> C + Send + Sync>,
    pub c_minus: Box<dyn Fn(C) -> C + Send + Sync>,
}

impl ScalarThreeTerm {
    /// Residual `|c_plus u_plus + c_zero u_0 + c_minus u_minus|` divided by
    /// the sum of the three term magnitudes.
    pub fn relative_residual(&self, x: C, u_plus: C, u_0: C, u_minus: C) -> Real {
        let tp = (self.c_plus)(x) * u_plus;
        let t0 = (self.c_zero)(x) * u_0;
        let tm = (self.c_minus)(x) * u_minus;
        let scale = tp.norm() + t0.norm() + tm.norm();
        (tp + t0 + tm).norm() / scale.max(1e-300)
    }
}

/// Scalar reduction of the Jimbo–Sakai system: the three-term equation
/// satisfied by `u(x) = y1(x)/phi(x)` where `y1` solves `Y(qx) = A(x) Y(x)`
/// and the gauge satisfies `phi(qx) = d0 (x - t a1)(x - t a2) phi(x)`.
///
/// Coefficients are returned in the cleaned form in which the apparent poles
/// of the `u(x)` coefficient at `x = y` and `x = qy` have been cancelled;
/// what remains of them is the pair of structural pole factors that also
/// carries the `u(qx)` and `u(x/q)` terms. With `d0 = 1` the three
/// coefficients match the Kajiwara–Noumi–Yamada operator `L1` under the
/// parameter dictionary; with `d0 = c0` the relation is satisfied by the
/// first component of the `B(x)`-system.
pub fn scalar_reduce(p: &QPVIParams, d0: C) -> Result<ScalarThreeTerm, ModelError> {
    p.validate()?;
    if d0.norm() == 0.0 {
        return Err(ModelError::Degenerate("d0 = 0".into()));
    }
    if (p.chi2 * p.w).norm() <= ZETA {
        return Err(ModelError::ReducibleSystem);
    }
    let (q, t, y, z) = (p.q, p.t, p.y, p.z);
    let (a1, a2, a3, a4) = (p.a1, p.a2, p.a3, p.a4);
    let (chi1, chi2) = (p.chi1, p.chi2);
    let (th1, th2) = (p.theta1, p.theta2);

    let c_plus = {
        move |x: C| -(x - t * a1) * (x - t * a2) * d0 / (q * (y - x))
    };
    let c_minus = {
        move |x: C| -chi1 * chi2 * (a3 - x / q) * (a4 - x / q) / ((q * y - x) * d0)
    };
    let c_zero = {
        move |x: C| {
            let bracket = x * (q * z * chi1 - cr(1.0)) * (z * chi2 - cr(1.0)) / (q * q * z)
                - chi1 * chi2 * a3 * a4 * (q * z - t * a1 * a2 / th1) * (q * z - t * a1 * a2 / th2)
                    / (q * q * y * z);
            bracket
                + q * z * chi1 * chi2 * (a3 - x / q) * (a4 - x / q) / (q * y - x)
                + (x - t * a1) * (x - t * a2) / (q * (y - x) * q * z)
        }
    };
    Ok(ScalarThreeTerm {
        c_plus: Box::new(c_plus),
        c_zero: Box::new(c_zero),
        c_minus: Box::new(c_minus),
    })
}

/// The combined `u(x)`-coefficient of the raw elimination, built from the
/// entries of `A(x)`:
///
/// ```text
/// a11(x)/(x-y) + a22(x/q)/(x/q-y)
///   - (x - t a1)(x - t a2)/(q z (x-y)) - q z chi1 chi2 (x/q - a3)(x/q - a4)/(x/q - y)
/// ```
///
/// The four terms separately have simple poles at `x = y` and `x = qy`; the
/// combination is regular there (this is the cancellation that yields the
/// cleaned form), and equals `-q` times the pole-free bracket of the cleaned
/// `u(x)` coefficient.
pub fn elimination_u_coefficient(p: &QPVIParams, x: C) -> Result<C, ModelError> {
    let a = build_a(p)?;
    let (q, y, z, t) = (p.q, p.y, p.z, p.t);
    let a11 = a.eval(x)[(0, 0)];
    let a22q = a.eval(x / q)[(1, 1)];
    Ok(a11 / (x - y) + a22q / (x / q - y)
        - (x - t * p.a1) * (x - t * p.a2) / (q * z * (x - y))
        - q * z * p.chi1 * p.chi2 * (x / q - p.a3) * (x / q - p.a4) / (x / q - y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling;
    use crate::scalar::rel_err;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(seed: u64) -> QPVIParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        sampling::draw_qpvi(&mut rng)
    }

    #[test]
    fn det_a_factorizes() {
        // det A(x) = chi1 chi2 (x - t a1)(x - t a2)(x - a3)(x - a4)
        let p = params(11);
        let a = build_a(&p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..8 {
            let x = sampling::draw_unit_scale(&mut rng);
            let lhs = linalg::det(&a.eval(x));
            let rhs = p.chi1
                * p.chi2
                * (x - p.t * p.a1)
                * (x - p.t * p.a2)
                * (x - p.a3)
                * (x - p.a4);
            assert!(rel_err(lhs, rhs) < 1e-11, "err {}", rel_err(lhs, rhs));
        }
        // and vanishes at the roots
        let at_root = linalg::det(&a.eval(p.t * p.a1));
        assert!(at_root.norm() < 1e-9 * a.eval(p.t * p.a1).norm().powi(2));
    }

    #[test]
    fn accessory_conditions() {
        let p = params(12);
        let a = build_a(&p).unwrap();
        // a12(y) = 0
        assert!(a.eval(p.y)[(0, 1)].norm() < 1e-10 * a.eval(p.y).norm());
        // a11(y) = (y - t a1)(y - t a2)/(q z)
        let lhs = a.eval(p.y)[(0, 0)];
        let rhs = (p.y - p.t * p.a1) * (p.y - p.t * p.a2) / (p.q * p.z);
        assert!(rel_err(lhs, rhs) < 1e-11);
    }

    #[test]
    fn a0_eigenvalues() {
        // A_0 has eigenvalues t theta1 and t theta2: compare the
        // characteristic polynomial coefficients (trace and determinant).
        let p = params(13);
        let a = build_a(&p).unwrap();
        let a0 = &a.coefficients[0];
        let sum = p.t * (p.theta1 + p.theta2);
        let prod = p.t * p.t * p.theta1 * p.theta2;
        assert!(rel_err(a0.trace(), sum) < 1e-9);
        assert!(rel_err(linalg::det(a0), prod) < 1e-9);
    }

    #[test]
    fn b_system_structure() {
        let p = params(14);
        let c0 = p.c0();
        let sys = build_b(&p, c0).unwrap();
        // B_inf = diag(chi1, chi2)/c0
        assert!(rel_err(sys.b_infinity[(0, 0)], p.chi1 / c0) < 1e-12);
        assert!(rel_err(sys.b_infinity[(1, 1)], p.chi2 / c0) < 1e-12);
        assert!(sys.b_infinity[(0, 1)].norm() < 1e-14);
        // reconstruction B(x) = A(x)/(c0 (x - t a1)(x - t a2)) pointwise
        let a = build_a(&p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..4 {
            let x = sampling::draw_unit_scale(&mut rng);
            let lhs = sys.eval(x);
            let rhs = a.eval(x) * (cr(1.0) / (c0 * (x - p.t * p.a1) * (x - p.t * p.a2)));
            assert!((&lhs - &rhs).norm() < 1e-10 * lhs.norm());
        }
        // det B1 = det B2 = 0 and det B0 = 0 at this c0
        let scale1 = sys.residues[0].1.norm().powi(2);
        assert!(linalg::det(&sys.residues[0].1).norm() < 1e-9 * scale1);
        let scale2 = sys.residues[1].1.norm().powi(2);
        assert!(linalg::det(&sys.residues[1].1).norm() < 1e-9 * scale2);
        let b0 = sys.b_zero();
        assert!(linalg::det(&b0).norm() < 1e-9 * b0.norm().powi(2));
        // det(I - B_inf - B1 - B2) = det B0 = 0 is equivalent to this c0
        let other = build_b(&p, c0 * cr(1.37)).unwrap();
        assert!(linalg::det(&other.b_zero()).norm() > 1e-6);
    }

    #[test]
    fn b1_closed_form() {
        // the displayed closed form of B1 agrees with the residue computation
        let p = params(15);
        let sys = build_b(&p, p.c0()).unwrap();
        let (q, t, y, z, w) = (p.q, p.t, p.y, p.z, p.w);
        let (a1, a2, a3, a4) = (p.a1, p.a2, p.a3, p.a4);
        let (chi1, chi2) = (p.chi1, p.chi2);
        let (th1, th2) = (p.theta1, p.theta2);
        let b1s = q * q * chi1 * chi1 * chi2 * (y - a3) * (y - a4) * z * z
            + (y - t * a2) * (chi2 * y - chi1 * t * a1)
            - q * chi1
                * ((chi2 * y * 2.0) * y
                    - (chi1 * t * a1 + chi2 * t * a2 + chi2 * a3 + chi2 * a4) * y
                    + t * (th1 + th2))
                * z;
        let b2s = q * q * chi1 * (y - a3) * (y - a4) * (chi1 * y - chi2 * t * a1) * z * z
            + (y - t * a1) * (y - t * a1) * (y - t * a2)
            - q * (y - t * a1)
                * ((chi1 * y * 2.0) * y
                    - (chi2 * t * a1 + chi1 * t * a2 + chi1 * a3 + chi1 * a4) * y
                    + t * (th1 + th2))
                * z;
        let pref = a2 / (t * th1 * (a1 - a2));
        let expected = CMat::from_row_slice(
            2,
            2,
            &[
                pref * (y - t * a1) * b1s / (q * y * z * (chi1 - chi2)),
                pref * w * chi2 * (y - t * a1),
                -pref * b1s * b2s / (q * q * w * y * y * z * z * (chi1 - chi2) * (chi1 - chi2)),
                -pref * chi2 * b2s / (q * y * z * (chi1 - chi2)),
            ],
        );
        let got = &sys.residues[0].1;
        assert!((got - &expected).norm() < 1e-10 * expected.norm());
    }

    #[test]
    fn kernel_vector_normalization() {
        let p = params(16);
        let c0 = p.c0();
        let sys = build_b(&p, c0).unwrap();
        let [v0, v1, v2] = kernel_vectors(&p, c0).unwrap();
        let common = p.q * p.w * p.y * p.z * p.theta1 * (p.chi1 - p.chi2);
        assert!(rel_err(v0[0], common) < 1e-12);
        assert!(rel_err(v1[0], common * p.chi2) < 1e-12);
        assert!(rel_err(v2[0], common * p.chi2) < 1e-12);
        // B_i v_i = 0 relative to |B_i| |v_i|
        let b0 = sys.b_zero();
        assert!((&b0 * &v0).norm() < 1e-9 * b0.norm() * v0.norm());
        assert!((&sys.residues[0].1 * &v1).norm() < 1e-9 * sys.residues[0].1.norm() * v1.norm());
        assert!((&sys.residues[1].1 * &v2).norm() < 1e-9 * sys.residues[1].1.norm() * v2.norm());
    }

    #[test]
    fn kernel_vectors_scale_linearly_in_w() {
        let p = params(17);
        let [v0, v1, v2] = kernel_vectors(&p, p.c0()).unwrap();
        let mut p2 = p;
        p2.w *= cr(2.0);
        let [u0, u1, u2] = kernel_vectors(&p2, p2.c0()).unwrap();
        assert!(rel_err(u0[0], v0[0] * cr(2.0)) < 1e-12);
        assert!(rel_err(u1[0], v1[0] * cr(2.0)) < 1e-12);
        assert!(rel_err(u2[0], v2[0] * cr(2.0)) < 1e-12);
    }

    #[test]
    fn u_coefficient_pole_free_at_y_and_qy() {
        // epsilon * f(y + epsilon) -> 0 when f is regular at y
        let p = params(18);
        let scale = elimination_u_coefficient(&p, p.y * cr(1.5)).unwrap().norm();
        for pole in [p.y, p.q * p.y] {
            let mut prev = Real::INFINITY;
            for k in 2..5 {
                let eps = Real::powi(10.0, -(k as i32));
                let x = pole + cr(eps) * pole;
                let val = elimination_u_coefficient(&p, x).unwrap();
                let residue_proxy = (x - pole).norm() * val.norm();
                assert!(residue_proxy < prev.max(1e-6 * scale) * 1.0001);
                prev = residue_proxy;
            }
            assert!(prev < 1e-3 * scale, "residue proxy {prev:e} vs scale {scale:e}");
        }
    }

    #[test]
    fn cleaned_bracket_matches_raw_elimination() {
        // the pole-free part of the cleaned c_zero equals -1/q times the raw
        // combined coefficient
        let p = params(19);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let eq = scalar_reduce(&p, cr(1.0)).unwrap();
        for _ in 0..5 {
            let x = sampling::draw_unit_scale(&mut rng);
            let raw = elimination_u_coefficient(&p, x).unwrap();
            let structural = p.q * p.z * p.chi1 * p.chi2 * (p.a3 - x / p.q) * (p.a4 - x / p.q)
                / (p.q * p.y - x)
                + (x - p.t * p.a1) * (x - p.t * p.a2) / (p.q * (p.y - x) * p.q * p.z);
            let bracket = (eq.c_zero)(x) - structural;
            assert!(rel_err(bracket, -raw / p.q) < 1e-9);
        }
    }

    #[test]
    fn gauge_change_rescales_coefficients() {
        // reducing with d0' and substituting the gauge ratio reproduces the
        // d0 reduction: c_plus scales by d0'/d0, c_minus by d0/d0'
        let p = params(20);
        let d0 = cr(1.0);
        let d0p = crate::scalar::c(0.7, 0.4);
        let eq1 = scalar_reduce(&p, d0).unwrap();
        let eq2 = scalar_reduce(&p, d0p).unwrap();
        let x = crate::scalar::c(0.9, 0.3);
        assert!(rel_err((eq2.c_plus)(x), (eq1.c_plus)(x) * d0p / d0) < 1e-12);
        assert!(rel_err((eq2.c_minus)(x), (eq1.c_minus)(x) * d0 / d0p) < 1e-12);
        assert!(rel_err((eq2.c_zero)(x), (eq1.c_zero)(x)) < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let p = params(21);
        let s = serde_json::to_string(&p).unwrap();
        let back: QPVIParams = serde_json::from_str(&s).unwrap();
        assert_eq!(p, back);
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert!(v.get("chi1").unwrap().as_array().unwrap().len() == 2);
    }
}
