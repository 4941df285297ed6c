//! Reproducible random draws of constrained parameter tuples.
//!
//! All draws take a caller-supplied RNG (the campaigns use a seeded ChaCha8
//! stream), sample moduli in `[0.5, 2]` with uniform phases, solve the
//! relevant constraint for the dependent parameter, and reject degenerate
//! configurations. The `*_convergent` variants additionally pin the tail
//! ratios that control Jackson-sum decay.

use crate::qheun::QHeunParams;
use crate::qpvi::{PartialFractionSystem, QPVIParams};
use crate::scalar::{cr, Real, C};
use crate::weyl::KNYParams;
use crate::linalg::CMat;
use rand::Rng;

/// Complex scalar with modulus in `[lo, hi]` and uniform phase.
pub fn draw_modulus<R: Rng>(rng: &mut R, lo: Real, hi: Real) -> C {
    let m = rng.random_range(lo..hi);
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    C::from_polar(m, phase)
}

/// Complex scalar with modulus in `[0.5, 2]` and uniform phase.
pub fn draw_unit_scale<R: Rng>(rng: &mut R) -> C {
    draw_modulus(rng, 0.5, 2.0)
}

/// `q` in the working annulus `0.2 <= |q| <= 0.7`, uniform phase.
pub fn draw_q<R: Rng>(rng: &mut R) -> C {
    draw_modulus(rng, 0.2, 0.7)
}

/// Random constrained Jimbo–Sakai tuple: moduli in `[0.5, 2]`, `theta2`
/// solved from the constraint, nondegeneracy enforced by rejection.
pub fn draw_qpvi<R: Rng>(rng: &mut R) -> QPVIParams {
    loop {
        let q = draw_q(rng);
        let p = QPVIParams {
            q,
            t: draw_unit_scale(rng),
            a1: draw_unit_scale(rng),
            a2: draw_unit_scale(rng),
            a3: draw_unit_scale(rng),
            a4: draw_unit_scale(rng),
            chi1: draw_unit_scale(rng),
            chi2: draw_unit_scale(rng),
            theta1: draw_unit_scale(rng),
            theta2: cr(0.0),
            y: draw_unit_scale(rng),
            z: draw_unit_scale(rng),
            w: draw_unit_scale(rng),
        };
        let p = QPVIParams {
            theta2: p.chi1 * p.chi2 * p.a1 * p.a2 * p.a3 * p.a4 / p.theta1,
            ..p
        };
        if well_separated(&p) && p.validate().is_ok() {
            return p;
        }
    }
}

/// Constrained tuple tuned for convergent Jackson sums on the chi2 branch:
/// `|q^lambda| <= 0.8`, `|chi2/chi1| <= 0.65` (outer tail), and
/// `|theta2/theta1| <= 0.7` (a decaying solution exists at the origin end,
/// since `B(0)` has eigenvalues `{1, theta2/theta1}`).
pub fn draw_qpvi_convergent<R: Rng>(rng: &mut R) -> QPVIParams {
    loop {
        let q = draw_q(rng);
        let t = draw_unit_scale(rng);
        let a1 = draw_unit_scale(rng);
        let a2 = draw_unit_scale(rng);
        let a3 = draw_unit_scale(rng);
        let a4 = draw_unit_scale(rng);
        let chi2 = draw_unit_scale(rng);
        let chi1 = chi2 / draw_modulus(rng, 0.2, 0.65);
        let q_lambda = draw_modulus(rng, 0.3, 0.8);
        let theta1 = chi2 * t * a1 * a2 / q_lambda;
        let theta2 = chi1 * chi2 * a1 * a2 * a3 * a4 / theta1;
        let p = QPVIParams {
            q,
            t,
            a1,
            a2,
            a3,
            a4,
            chi1,
            chi2,
            theta1,
            theta2,
            y: draw_unit_scale(rng),
            z: draw_unit_scale(rng),
            w: draw_unit_scale(rng),
        };
        if (p.theta2 / p.theta1).norm() > 0.7 {
            continue;
        }
        if well_separated(&p) && p.validate().is_ok() {
            return p;
        }
    }
}

fn well_separated(p: &QPVIParams) -> bool {
    let pairs = [
        (p.a1, p.a2),
        (p.chi1, p.chi2),
        (p.a3, p.a4),
        (p.theta1, p.theta2),
        (p.t * p.a1, p.a3),
        (p.t * p.a1, p.a4),
        (p.t * p.a2, p.a3),
        (p.t * p.a2, p.a4),
        (p.y, p.t * p.a1),
        (p.y, p.t * p.a2),
        (p.y, p.a3),
        (p.y, p.a4),
    ];
    pairs
        .iter()
        .all(|(u, v)| (u - v).norm() > 0.02 * u.norm().max(v.norm()))
}

/// Random small q-difference system for exercising the generic q-convolution:
/// `dim x dim` with two simple poles, spectral radius of `B(0)` at most 0.8,
/// and a kernel exponent `|q^lambda| <= 0.7 * min |eig B_inf|` so the
/// bilateral integrand decays at both lattice ends.
pub fn draw_generic_system<R: Rng>(rng: &mut R, dim: usize) -> (PartialFractionSystem, C, C) {
    loop {
        let q = draw_q(rng);
        let b_infinity = CMat::from_fn(dim, dim, |i, j| {
            let v = draw_modulus(rng, 0.3, 1.2);
            if i == j {
                v
            } else {
                v * 0.15
            }
        });
        let residues: Vec<(C, CMat)> = (0..2)
            .map(|_| {
                let pole = draw_unit_scale(rng);
                let mat = CMat::from_fn(dim, dim, |_, _| draw_modulus(rng, 0.1, 0.5) * 0.5);
                (pole, mat)
            })
            .collect();
        if (residues[0].0 - residues[1].0).norm() < 0.2 {
            continue;
        }
        let sys = PartialFractionSystem {
            b_infinity,
            residues,
        };
        let at_zero = sys.eval(cr(0.0));
        let rho = spectral_radius(&at_zero);
        if rho > 0.8 {
            continue;
        }
        let eig_min = min_singular_like(&sys.b_infinity);
        if eig_min < 0.2 {
            continue;
        }
        let q_lambda = draw_modulus(rng, 0.2, 0.6) * (0.7 * eig_min).min(1.0);
        return (sys, q_lambda, q);
    }
}

fn spectral_radius(m: &CMat) -> Real {
    // power iteration is enough at these sizes
    let n = m.nrows();
    let mut v = crate::linalg::CVec::from_element(n, cr(1.0));
    let mut lambda = 0.0;
    for _ in 0..200 {
        let w = m * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = norm / v.norm();
        v = w / cr(norm);
    }
    lambda
}

fn min_singular_like(m: &CMat) -> Real {
    let svd = m.clone().svd(false, false);
    svd.singular_values.iter().cloned().fold(Real::INFINITY, Real::min)
}

/// Random constrained Kajiwara–Noumi–Yamada tuple (`nu8` solved from the
/// constraint `kappa1^2 kappa2^2 = q nu1 ... nu8`).
pub fn draw_kny<R: Rng>(rng: &mut R) -> KNYParams {
    loop {
        let q = draw_q(rng);
        let kappa1 = draw_unit_scale(rng);
        let kappa2 = draw_unit_scale(rng);
        let nus: Vec<C> = (0..7).map(|_| draw_unit_scale(rng)).collect();
        let prod: C = nus.iter().product();
        let nu8 = kappa1 * kappa1 * kappa2 * kappa2 / (q * prod);
        let p = KNYParams {
            q,
            kappa1,
            kappa2,
            nu1: nus[0],
            nu2: nus[1],
            nu3: nus[2],
            nu4: nus[3],
            nu5: nus[4],
            nu6: nus[5],
            nu7: nus[6],
            nu8,
            f: draw_unit_scale(rng),
            g: draw_unit_scale(rng),
        };
        if p.validate().is_ok() && kny_well_separated(&p) {
            return p;
        }
    }
}

fn kny_well_separated(p: &KNYParams) -> bool {
    // keep the fractional-linear parts of s2/s3 away from their
    // indeterminacy points
    let pairs = [
        (p.f, p.nu3),
        (p.f, p.kappa1 / p.nu7),
        (p.g, cr(1.0) / p.nu1),
        (p.g, p.nu5 / p.kappa2),
        (p.nu3, p.nu4),
        (p.nu7, p.nu8),
        (p.nu5, p.nu6),
        (p.nu1, p.nu2),
    ];
    pairs
        .iter()
        .all(|(u, v)| (u - v).norm() > 0.02 * u.norm().max(v.norm()).max(0.1))
}

/// Random constrained q-Heun tuple (`l4` solved from
/// `l1 l2 l3 l4 = h1 h2 h3 q^2`).
pub fn draw_qheun<R: Rng>(rng: &mut R) -> QHeunParams {
    loop {
        let q = draw_q(rng);
        let h = [
            draw_unit_scale(rng),
            draw_unit_scale(rng),
            draw_unit_scale(rng),
        ];
        let l1 = draw_unit_scale(rng);
        let l2 = draw_unit_scale(rng);
        let l3 = draw_unit_scale(rng);
        let l4 = h[0] * h[1] * h[2] * q * q / (l1 * l2 * l3);
        let e = draw_unit_scale(rng);
        if let Ok(p) = QHeunParams::new(q, h[0], h[1], h[2], l1, l2, l3, l4, e) {
            return p;
        }
    }
}

/// q-Heun tuple in the convergent regime: `|q^lambda| = |q/l4| <= 0.8`,
/// `|h3| >= 1/0.7` (decaying solution at the origin end), and
/// `|q l3/l4| <= 0.75` (outer tail).
pub fn draw_qheun_convergent<R: Rng>(rng: &mut R) -> QHeunParams {
    loop {
        let q = draw_q(rng);
        let h1 = draw_unit_scale(rng);
        let h2 = draw_unit_scale(rng);
        let h3 = cr(1.0) / draw_modulus(rng, 0.2, 0.7);
        let l1 = draw_unit_scale(rng);
        let l2 = draw_unit_scale(rng);
        let l4 = q / draw_modulus(rng, 0.3, 0.8);
        let l3 = h1 * h2 * h3 * q * q / (l1 * l2 * l4);
        if (q * l3 / l4).norm() > 0.75 {
            continue;
        }
        let e = draw_unit_scale(rng);
        if let Ok(p) = QHeunParams::new(q, h1, h2, h3, l1, l2, l3, l4, e) {
            return p;
        }
    }
}
