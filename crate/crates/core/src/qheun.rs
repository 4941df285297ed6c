//! The q-Heun equation, its embedding as the specialized scalar reduction of
//! the Jimbo–Sakai system, and the induced integral transformation.
//!
//! The equation is the three-term relation
//!
//! ```text
//! (x - h1 q^{1/2})(x - h2 q^{1/2}) g(x/q)
//!   + l3 l4 (x - l1 q^{-1/2})(x - l2 q^{-1/2}) g(qx)
//!   - {(l3 + l4) x^2 + l3 l4 E x + S} g(x) = 0
//! ```
//!
//! with `S = (l1 l2 l3 l4 h1 h2)^{1/2}(h3^{1/2} + h3^{-1/2})` and the
//! constraint `l1 l2 l3 l4 = h1 h2 h3 q^2`. Half-integer powers carry a
//! branch choice; the struct caches `q^{1/2}` (principal) and the resolved
//! constant `S` once at construction, choosing the coherent value
//! `S = q h1 h2 (h3 + 1)` that the constraint makes exact. Every identity in
//! the module is then rational in the cached values.

use crate::jackson::{self, JacksonError, LatticeFunction, TransformReport};
use crate::numerics::Truncation;
use crate::qpvi::{QPVIParams, ScalarThreeTerm};
use crate::scalar::{cjson, cr, Real, C, ZETA};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QHeunError {
    #[error("constraint l1 l2 l3 l4 = h1 h2 h3 q^2 violated: relative residual {residual:e}")]
    ConstraintViolated { residual: Real },
    #[error("specialization denominator vanishes")]
    SpecializationSingularity,
    #[error("parameters are not on the q-Heun locus: {0}")]
    OffLocus(String),
    #[error("degenerate parameters: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Model(#[from] crate::qpvi::ModelError),
    #[error(transparent)]
    Jackson(#[from] JacksonError),
}

/// q-Heun parameter tuple with accessory parameter `E` and the cached
/// branch data (`q^{1/2}` and the resolved constant term).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QHeunParams {
    #[serde(with = "cjson")]
    pub q: C,
    #[serde(with = "cjson")]
    pub h1: C,
    #[serde(with = "cjson")]
    pub h2: C,
    #[serde(with = "cjson")]
    pub h3: C,
    #[serde(with = "cjson")]
    pub l1: C,
    #[serde(with = "cjson")]
    pub l2: C,
    #[serde(with = "cjson")]
    pub l3: C,
    #[serde(with = "cjson")]
    pub l4: C,
    #[serde(rename = "E", with = "cjson")]
    pub e: C,
    /// Principal square root of `q`, fixed at construction and reused by the
    /// parameter dictionary.
    #[serde(rename = "sqrtQ", with = "cjson")]
    pub sqrt_q: C,
    /// The resolved constant term `(l1 l2 l3 l4 h1 h2)^{1/2}(h3^{1/2} + h3^{-1/2})`.
    #[serde(rename = "constantTerm", with = "cjson")]
    pub constant_term: C,
}

impl QHeunParams {
    /// Constrained constructor: validates `l1 l2 l3 l4 = h1 h2 h3 q^2` and
    /// resolves the constant term to the branch-coherent value
    /// `q h1 h2 (h3 + 1)`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(q: C, h1: C, h2: C, h3: C, l1: C, l2: C, l3: C, l4: C, e: C) -> Result<Self, QHeunError> {
        let p = QHeunParams {
            q,
            h1,
            h2,
            h3,
            l1,
            l2,
            l3,
            l4,
            e,
            sqrt_q: q.sqrt(),
            constant_term: q * h1 * h2 * (h3 + cr(1.0)),
        };
        let residual = p.constraint_residual();
        if residual > 100.0 * ZETA {
            return Err(QHeunError::ConstraintViolated { residual });
        }
        if [q, h1, h2, h3, l1, l2, l3, l4].iter().any(|v| v.norm() == 0.0) {
            return Err(QHeunError::Degenerate("zero parameter".into()));
        }
        Ok(p)
    }

    pub fn constraint_residual(&self) -> Real {
        let lhs = self.l1 * self.l2 * self.l3 * self.l4;
        let rhs = self.h1 * self.h2 * self.h3 * self.q * self.q;
        (lhs - rhs).norm() / rhs.norm().max(1e-300)
    }

    /// The exponent `q^lambda = q / l4` of the induced integral transform.
    pub fn q_lambda(&self) -> C {
        self.q / self.l4
    }

    /// Gauge rescaling `(l3, l4, E) -> (c l3, c l4, E/c)` which describes the
    /// same equation composed with `g -> psi g`, `psi(qx) = c psi(x)`; the
    /// constant term scales by `c`.
    pub fn rescale_l34(&self, c: C) -> QHeunParams {
        QHeunParams {
            l3: self.l3 * c,
            l4: self.l4 * c,
            e: self.e / c,
            constant_term: self.constant_term * c,
            ..*self
        }
    }
}

/// The q-Heun three-term relation: `c_minus` multiplies `g(x/q)` and is the
/// monic quadratic `(x - h1 q^{1/2})(x - h2 q^{1/2})`, `c_plus` multiplies
/// `g(qx)`, and `c_zero` is minus the accessory bracket.
pub struct QHeunEquation {
    pub relation: ScalarThreeTerm,
}

/// Build the three-term relation from the parameters (Eq. coefficients are
/// exact rational expressions in the cached branch data).
pub fn build_qheun(p: &QHeunParams) -> QHeunEquation {
    let (l1, l2, l3, l4) = (p.l1, p.l2, p.l3, p.l4);
    let (h1, h2) = (p.h1, p.h2);
    let (sq, e, s) = (p.sqrt_q, p.e, p.constant_term);
    let c_plus = move |x: C| l3 * l4 * (x - l1 / sq) * (x - l2 / sq);
    let c_minus = move |x: C| (x - h1 * sq) * (x - h2 * sq);
    let c_zero = move |x: C| -((l3 + l4) * x * x + l3 * l4 * e * x + s);
    QHeunEquation {
        relation: ScalarThreeTerm {
            c_plus: Box::new(c_plus),
            c_zero: Box::new(c_zero),
            c_minus: Box::new(c_minus),
        },
    }
}

/// The accessory-parameter specialization of the Jimbo–Sakai tuple:
/// `y = a3` and
/// `z = (t a1 - a3)(t a2 - a3) / (q t (th1 + th2) + a3^2 (q chi1 + chi2)
///      + E q th1 a3/(t a1 a2))`.
pub fn specialize_yz(p: &QPVIParams, e: C) -> Result<(C, C), QHeunError> {
    let den = p.q * p.t * (p.theta1 + p.theta2)
        + p.a3 * p.a3 * (p.q * p.chi1 + p.chi2)
        + e * p.q * p.theta1 * p.a3 / (p.t * p.a1 * p.a2);
    let num = (p.t * p.a1 - p.a3) * (p.t * p.a2 - p.a3);
    if den.norm() <= ZETA * num.norm().max(1.0) {
        return Err(QHeunError::SpecializationSingularity);
    }
    Ok((p.a3, num / den))
}

/// Map q-Heun parameters to the specialized Jimbo–Sakai tuple, in the
/// declared normalization `t = 1`, `theta1 = 1`, `w = 1` (the dictionary only
/// pins the ratios `theta1/chi1` and `theta1/chi2`).
pub fn to_qpvi(p: &QHeunParams) -> Result<QPVIParams, QHeunError> {
    let sq = p.sqrt_q;
    let a1 = p.l1 / sq;
    let a2 = p.l2 / sq;
    let a12 = a1 * a2;
    let base = QPVIParams {
        q: p.q,
        t: cr(1.0),
        a1,
        a2,
        a3: p.h1 * sq,
        a4: p.h2 / sq,
        chi1: cr(1.0) / (p.l3 * a12),
        chi2: p.q / (p.l4 * a12),
        theta1: cr(1.0),
        theta2: cr(1.0) / p.h3,
        y: cr(1.0),
        z: cr(1.0),
        w: cr(1.0),
    };
    let (y, z) = specialize_yz(&base, p.e)?;
    let out = QPVIParams { y, z, ..base };
    out.validate()?;
    Ok(out)
}

/// Read q-Heun parameters back from a specialized Jimbo–Sakai tuple. The
/// tuple must sit on the locus `y = a3`; `sqrt_q` fixes the branch used for
/// the half-integer powers (pass the forward dictionary's cached value to
/// invert it exactly).
pub fn from_qpvi(p: &QPVIParams, sqrt_q: C) -> Result<QHeunParams, QHeunError> {
    if (p.y - p.a3).norm() > 1e-9 * p.a3.norm() {
        return Err(QHeunError::OffLocus(format!(
            "y != a3 (relative distance {:e})",
            (p.y - p.a3).norm() / p.a3.norm()
        )));
    }
    let ta12 = p.t * p.a1 * p.a2;
    let e = ((p.t * p.a1 - p.a3) * (p.t * p.a2 - p.a3) / p.z
        - p.q * p.t * (p.theta1 + p.theta2)
        - p.a3 * p.a3 * (p.q * p.chi1 + p.chi2))
        * ta12
        / (p.q * p.theta1 * p.a3);
    QHeunParams::new(
        p.q,
        p.a3 / sqrt_q,
        p.a4 * sqrt_q,
        p.theta1 / p.theta2,
        p.t * p.a1 * sqrt_q,
        p.t * p.a2 * sqrt_q,
        p.theta1 / (p.chi1 * ta12),
        p.q * p.theta1 / (p.chi2 * ta12),
        e,
    )
}

/// The transformed parameters of the induced integral transformation, as
/// displayed: `(l1, l2, l3, q, q h1/l4, q h2/l4, l4/(q h3), E)` with `E`
/// unchanged. This display tuple is gauge-normalized to `l4' = q`; it
/// describes the transformed equation exactly (its constant term is resolved
/// coherently) but satisfies the constraint only after the gauge rescaling
/// [`heun_transform_params_normalized`] undoes (`l` gauge `c = 1/h3`).
pub fn heun_transform_params(p: &QHeunParams) -> QHeunParams {
    let h1p = p.q * p.h1 / p.l4;
    let h2p = p.q * p.h2 / p.l4;
    let h3p = p.l4 / (p.q * p.h3);
    QHeunParams {
        q: p.q,
        h1: h1p,
        h2: h2p,
        h3: h3p,
        l1: p.l1,
        l2: p.l2,
        l3: p.l3,
        l4: p.q,
        e: p.e,
        sqrt_q: p.sqrt_q,
        constant_term: p.q * h1p * h2p * p.h3 * (h3p + cr(1.0)),
    }
}

/// The constraint-satisfying representative of the transformed equation:
/// the display tuple rescaled by the gauge `c = 1/h3`, giving
/// `(l1, l2, l3/h3, q/h3, q h1/l4, q h2/l4, l4/(q h3), E h3)`. Satisfies
/// `l1' l2' l3' l4' = h1' h2' h3' q^2` exactly as an algebraic consequence of
/// the input constraint, and describes the same three-term equation.
pub fn heun_transform_params_normalized(p: &QHeunParams) -> Result<QHeunParams, QHeunError> {
    QHeunParams::new(
        p.q,
        p.q * p.h1 / p.l4,
        p.q * p.h2 / p.l4,
        p.l4 / (p.q * p.h3),
        p.l1,
        p.l2,
        p.l3 / p.h3,
        p.q / p.h3,
        p.e * p.h3,
    )
}

/// The q-Heun integral transform
/// `g_check(x) = int g(s)/(s - x) P_lambda(x, s) d_q s` with
/// `q^lambda = q/l4`.
pub fn heun_transform(
    g_lattice: &LatticeFunction,
    p: &QHeunParams,
    x: C,
    trunc: Truncation,
) -> Result<(C, Real), QHeunError> {
    Ok(jackson::cauchy_kernel_transform(
        g_lattice,
        p.q_lambda(),
        x,
        trunc,
    )?)
}

/// Residual report of one transform run against the primed equation at the
/// given probes (used by the verification campaigns and the CLI).
pub fn heun_transform_report(
    g_lattice: &LatticeFunction,
    p: &QHeunParams,
    probes: &[jackson::ProbePoint],
    trunc: Truncation,
) -> Result<TransformReport, QHeunError> {
    let primed = build_qheun(&heun_transform_params(p));
    let mut residual: Real = 0.0;
    let mut tail: Real = 0.0;
    for probe in probes {
        let value_at = |x: C| heun_transform(g_lattice, p, x, trunc).map(|(v, _)| v);
        let x = probe.value();
        let u_plus = value_at(p.q * x)?;
        let u_0 = value_at(x)?;
        let u_minus = value_at(x / p.q)?;
        residual = residual.max(primed.relation.relative_residual(x, u_plus, u_0, u_minus));
        let (_, t) = heun_transform(g_lattice, p, x, trunc)?;
        tail = tail.max(t);
    }
    Ok(TransformReport {
        residual,
        truncation_n: g_lattice.half_width() as u32,
        tail_mass: tail,
    })
}
