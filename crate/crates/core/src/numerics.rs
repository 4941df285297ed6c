//! q-Pochhammer symbols and the integral kernel `P_lambda(x, s)`.
//!
//! The kernel is the q-analogue of the Euler factor `(x - s)^lambda`:
//!
//! ```text
//! P_lambda(x, s) = (q^{lambda+1} s/x; q)_inf / (q s/x; q)_inf
//!                = prod_{i >= 0} (x - q^{i+1} q^lambda s) / (x - q^{i+1} s)
//! ```
//!
//! The exponent `lambda` is never needed itself; the multiplicative value
//! `q^lambda` is passed directly. Infinite products are truncated by a
//! [`Truncation`], and the telescoping relation
//! `P_lambda(x, s/q) = (x - q^lambda s)/(x - s) * P_lambda(x, s)`
//! holds exactly for the untruncated kernel.

use crate::scalar::{Real, C, ZETA};
use thiserror::Error;

/// Truncation orders for infinite products and bilateral Jackson sums.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Truncation {
    /// Number of retained factors of infinite q-Pochhammer products.
    pub product_terms: u32,
    /// Half-width `N` of the q-lattice: Jackson sums run over `n = -N..=N`.
    pub lattice_half_width: u32,
}

impl Truncation {
    pub fn new(product_terms: u32, lattice_half_width: u32) -> Self {
        assert!(product_terms >= 1, "product_terms must be >= 1");
        assert!(lattice_half_width >= 1, "lattice_half_width must be >= 1");
        Self {
            product_terms,
            lattice_half_width,
        }
    }
}

impl Default for Truncation {
    /// Defaults chosen for the convergent regime `|q| <= 0.7`.
    fn default() -> Self {
        Self {
            product_terms: 120,
            lattice_half_width: 60,
        }
    }
}

/// Order of a q-Pochhammer product: a finite number of factors or the
/// truncated infinite product.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PochhammerOrder {
    Finite(u32),
    Infinite,
}

#[derive(Debug, Error)]
pub enum NumericsError {
    /// `(a; q)_inf` with `|q| >= 1` does not converge.
    #[error("infinite q-Pochhammer product diverges: |q| = {modulus} >= 1")]
    DivergentProduct { modulus: Real },
    /// A denominator factor of `P_lambda` vanished: `s` lies on the forward
    /// q-spiral of `x` (within the zero threshold).
    #[error("kernel pole in P_lambda: denominator factor {index} vanished")]
    KernelPole { index: u32 },
    /// `x = 0` is outside the kernel's domain.
    #[error("P_lambda requires x != 0")]
    ZeroArgument,
}

/// q-Pochhammer symbol `(a; q)_n = prod_{i=0}^{n-1} (1 - a q^i)`.
///
/// For [`PochhammerOrder::Infinite`] the product is truncated after
/// `trunc.product_terms` factors and requires `|q| < 1`.
pub fn q_pochhammer(
    a: C,
    q: C,
    n: PochhammerOrder,
    trunc: Truncation,
) -> Result<C, NumericsError> {
    let count = match n {
        PochhammerOrder::Finite(k) => k,
        PochhammerOrder::Infinite => {
            if q.norm() >= 1.0 {
                return Err(NumericsError::DivergentProduct { modulus: q.norm() });
            }
            trunc.product_terms
        }
    };
    let mut prod = C::new(1.0, 0.0);
    let mut qi = C::new(1.0, 0.0);
    for _ in 0..count {
        prod *= C::new(1.0, 0.0) - a * qi;
        qi *= q;
    }
    Ok(prod)
}

/// The integral kernel `P_lambda(x, s)`, truncated at `trunc.product_terms`
/// factors. `q_lambda` is the multiplicative exponent `q^lambda`.
///
/// Fails with [`NumericsError::KernelPole`] when a denominator factor
/// `x - q^{i+1} s` falls below the relative zero threshold.
pub fn p_lambda(x: C, s: C, q_lambda: C, q: C, trunc: Truncation) -> Result<C, NumericsError> {
    if x.norm() == 0.0 {
        return Err(NumericsError::ZeroArgument);
    }
    let mut prod = C::new(1.0, 0.0);
    let mut qi = q;
    for i in 0..trunc.product_terms {
        let den = x - qi * s;
        let scale = x.norm().max((qi * s).norm());
        if den.norm() <= ZETA * scale {
            return Err(NumericsError::KernelPole { index: i });
        }
        prod *= (x - qi * q_lambda * s) / den;
        qi *= q;
    }
    Ok(prod)
}
