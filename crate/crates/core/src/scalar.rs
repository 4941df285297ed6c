//! Base scalar type and zero-threshold policy.
//!
//! Every computation in this crate runs over [`C`], a complex floating-point
//! scalar. The working precision is fixed at build time through the [`Real`]
//! alias (double precision by default; swapping in another IEEE float type
//! only requires changing the alias). Exponent parameters are never stored as
//! logarithms: quantities like `q^lambda` are kept multiplicatively, so no
//! branch cuts enter any computation.

use num_complex::Complex;

/// Working real precision. Change this alias to rebuild at another precision.
pub type Real = f64;

/// The base field: complex numbers at working precision.
pub type C = Complex<Real>;

/// Relative zero threshold. All "is zero / is pole / is degenerate" decisions
/// compare against `ZETA` times a local magnitude scale.
pub const ZETA: Real = 1e-12;

/// Shorthand for a complex number from real and imaginary parts.
#[inline]
pub fn c(re: Real, im: Real) -> C {
    C::new(re, im)
}

/// Shorthand for a real constant as a complex scalar.
#[inline]
pub fn cr(re: Real) -> C {
    C::new(re, 0.0)
}

/// True when `value` is zero relative to `scale` under the [`ZETA`] policy.
/// A zero scale falls back to an absolute comparison.
#[inline]
pub fn is_zero(value: C, scale: Real) -> bool {
    let s = if scale > 0.0 { scale } else { 1.0 };
    value.norm() <= ZETA * s
}

/// Relative distance `|a - b| / max(|a|, |b|, 1e-300)`.
#[inline]
pub fn rel_err(a: C, b: C) -> Real {
    let scale = a.norm().max(b.norm()).max(1e-300);
    (a - b).norm() / scale
}

/// Serde adapter storing a complex number as a two-element `[re, im]` array.
pub mod cjson {
    use super::{Real, C};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &C, ser: S) -> Result<S::Ok, S::Error> {
        [v.re, v.im].serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<C, D::Error> {
        let pair = <[Real; 2]>::deserialize(de)?;
        Ok(C::new(pair[0], pair[1]))
    }
}

/// A complex number serialized as `[re, im]`; used inside JSON reports.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CJson(#[serde(with = "cjson")] pub C);

impl From<C> for CJson {
    fn from(v: C) -> Self {
        CJson(v)
    }
}
