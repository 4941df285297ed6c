//! The affine Weyl group W(D5^(1)) acting birationally on the
//! Kajiwara–Noumi–Yamada parameters `(kappa1, kappa2, nu1..nu8, f, g)`, the
//! dictionary to Jimbo–Sakai coordinates, and the identification of the
//! q-middle convolution with an explicit Weyl word.
//!
//! Composition convention: words act on parameter tuples letter by letter,
//! left to right. This is the point-map realization of the usual
//! automorphism composition, pinned by the worked example
//! `s2 s0 s1 s2 (g) = g (f - nu3)(f - nu4) / ((f - k1/nu7)(f - k1/nu8))`
//! and by the image `kappa1 -> q kappa1 nu2 nu5 / kappa2` of the full word.

use crate::qmc::{self, Branch};
use crate::qpvi::{QPVIParams, ScalarThreeTerm};
use crate::scalar::{cjson, cr, Real, C, ZETA};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WeylError {
    #[error("constraint kappa1^2 kappa2^2 = q nu1..nu8 violated: relative residual {residual:e}")]
    ConstraintViolated { residual: Real },
    #[error("degenerate parameters: {0}")]
    Degenerate(String),
    #[error("indeterminate point: numerator and denominator of the {generator} action both vanish")]
    IndeterminatePoint { generator: usize },
    #[error("generator index {0} out of range 0..=5")]
    BadLetter(usize),
    #[error(transparent)]
    Qmc(#[from] qmc::QmcError),
}

/// Parameters of the q-P(D5^(1)) Lax formalism, constrained by
/// `kappa1^2 kappa2^2 = q nu1 nu2 nu3 nu4 nu5 nu6 nu7 nu8`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KNYParams {
    #[serde(with = "cjson")]
    pub q: C,
    #[serde(with = "cjson")]
    pub kappa1: C,
    #[serde(with = "cjson")]
    pub kappa2: C,
    #[serde(with = "cjson")]
    pub nu1: C,
    #[serde(with = "cjson")]
    pub nu2: C,
    #[serde(with = "cjson")]
    pub nu3: C,
    #[serde(with = "cjson")]
    pub nu4: C,
    #[serde(with = "cjson")]
    pub nu5: C,
    #[serde(with = "cjson")]
    pub nu6: C,
    #[serde(with = "cjson")]
    pub nu7: C,
    #[serde(with = "cjson")]
    pub nu8: C,
    #[serde(with = "cjson")]
    pub f: C,
    #[serde(with = "cjson")]
    pub g: C,
}

impl KNYParams {
    pub fn constraint_residual(&self) -> Real {
        let lhs = self.kappa1 * self.kappa1 * self.kappa2 * self.kappa2;
        let rhs = self.q
            * self.nu1
            * self.nu2
            * self.nu3
            * self.nu4
            * self.nu5
            * self.nu6
            * self.nu7
            * self.nu8;
        (lhs - rhs).norm() / lhs.norm().max(1e-300)
    }

    pub fn validate(&self) -> Result<(), WeylError> {
        let residual = self.constraint_residual();
        if residual > ZETA {
            return Err(WeylError::ConstraintViolated { residual });
        }
        let entries = [
            self.q,
            self.kappa1,
            self.kappa2,
            self.nu1,
            self.nu2,
            self.nu3,
            self.nu4,
            self.nu5,
            self.nu6,
            self.nu7,
            self.nu8,
            self.f,
            self.g,
        ];
        if entries.iter().any(|v| v.norm() == 0.0) {
            return Err(WeylError::Degenerate("zero entry".into()));
        }
        Ok(())
    }

    /// The ten parameter functions pinned by the Jimbo–Sakai dictionary:
    /// `(nu1, q nu2, nu3, nu4, nu5/kappa2, nu6/kappa2, kappa1/nu7,
    /// kappa1/nu8, f, g)`. These are invariant under the kappa gauge left
    /// free by the dictionary, so map comparisons happen here.
    pub fn dictionary_coordinates(&self) -> [C; 10] {
        [
            self.nu1,
            self.q * self.nu2,
            self.nu3,
            self.nu4,
            self.nu5 / self.kappa2,
            self.nu6 / self.kappa2,
            self.kappa1 / self.nu7,
            self.kappa1 / self.nu8,
            self.f,
            self.g,
        ]
    }
}

/// A word in the generators `s_0, ..., s_5`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeylWord(pub Vec<usize>);

impl WeylWord {
    pub fn new(letters: Vec<usize>) -> Result<Self, WeylError> {
        if let Some(&bad) = letters.iter().find(|&&i| i > 5) {
            return Err(WeylError::BadLetter(bad));
        }
        Ok(WeylWord(letters))
    }
}

/// The word realizing the chi2-branch q-middle convolution.
pub const MC_WORD: [usize; 10] = [5, 2, 1, 0, 2, 3, 2, 0, 1, 2];

/// Dynkin diagram of D5^(1): edges 0-2, 1-2, 2-3, 3-4, 3-5.
pub const DYNKIN_EDGES: [(usize, usize); 5] = [(0, 2), (1, 2), (2, 3), (3, 4), (3, 5)];

pub fn adjacent(i: usize, j: usize) -> bool {
    DYNKIN_EDGES
        .iter()
        .any(|&(a, b)| (a, b) == (i, j) || (a, b) == (j, i))
}

fn guarded_ratio(num: C, den: C, generator: usize) -> Result<C, WeylError> {
    let scale = num.norm().max(den.norm());
    if scale <= ZETA {
        return Err(WeylError::IndeterminatePoint { generator });
    }
    if den.norm() <= ZETA * scale {
        return Err(WeylError::Degenerate(format!(
            "s{generator} denominator vanishes while the numerator does not"
        )));
    }
    Ok(num / den)
}

/// Apply one generator to a parameter tuple. Untouched fields are copied.
pub fn apply_generator(i: usize, p: &KNYParams) -> Result<KNYParams, WeylError> {
    let mut out = *p;
    match i {
        0 => std::mem::swap(&mut out.nu7, &mut out.nu8),
        1 => std::mem::swap(&mut out.nu3, &mut out.nu4),
        4 => std::mem::swap(&mut out.nu1, &mut out.nu2),
        5 => std::mem::swap(&mut out.nu5, &mut out.nu6),
        2 => {
            let (k1, k2, n3, n7, f, g) = (p.kappa1, p.kappa2, p.nu3, p.nu7, p.f, p.g);
            out.nu3 = k1 / n7;
            out.nu7 = k1 / n3;
            out.kappa2 = k1 * k2 / (n3 * n7);
            out.g = g * guarded_ratio(f - n3, f - k1 / n7, 2)?;
        }
        3 => {
            let (k1, k2, n1, n5, f, g) = (p.kappa1, p.kappa2, p.nu1, p.nu5, p.f, p.g);
            out.nu1 = k2 / n5;
            out.nu5 = k2 / n1;
            out.kappa1 = k1 * k2 / (n1 * n5);
            out.f = f * guarded_ratio(g - cr(1.0) / n1, g - n5 / k2, 3)?;
        }
        other => return Err(WeylError::BadLetter(other)),
    }
    Ok(out)
}

/// Apply a word, leftmost letter first.
pub fn apply_word(word: &WeylWord, p: &KNYParams) -> Result<KNYParams, WeylError> {
    let mut state = *p;
    for &letter in &word.0 {
        state = apply_generator(letter, &state)?;
    }
    Ok(state)
}

/// Map Jimbo–Sakai parameters to KNY parameters in the `kappa1 = kappa2 = 1`
/// gauge (the dictionary only pins the ratios `kappa1/nu7`, `kappa1/nu8`,
/// `kappa2/nu5`, `kappa2/nu6`).
pub fn js_to_kny(p: &QPVIParams) -> KNYParams {
    let ta12 = p.t * p.a1 * p.a2;
    KNYParams {
        q: p.q,
        kappa1: cr(1.0),
        kappa2: cr(1.0),
        nu1: p.chi1,
        nu2: p.chi2 / p.q,
        nu3: p.a3,
        nu4: p.a4,
        nu5: ta12 / p.theta1,
        nu6: ta12 / p.theta2,
        nu7: cr(1.0) / (p.t * p.a1),
        nu8: cr(1.0) / (p.t * p.a2),
        f: p.y,
        g: p.q * p.z,
    }
}

/// Inverse dictionary. The KNY side determines `t a1` and `t a2` only, so the
/// split is fixed by the gauge `t = gauge_t`; `w` is pure gauge on the JS
/// side and is set to `gauge_w`.
pub fn kny_to_js(p: &KNYParams, gauge_w: C, gauge_t: C) -> Result<QPVIParams, WeylError> {
    p.validate()?;
    if gauge_t.norm() == 0.0 || gauge_w.norm() == 0.0 {
        return Err(WeylError::Degenerate("gauge constants must be nonzero".into()));
    }
    let a1 = p.kappa1 / (p.nu7 * gauge_t);
    let a2 = p.kappa1 / (p.nu8 * gauge_t);
    let ta12 = gauge_t * a1 * a2;
    let out = QPVIParams {
        q: p.q,
        t: gauge_t,
        a1,
        a2,
        a3: p.nu3,
        a4: p.nu4,
        chi1: p.nu1,
        chi2: p.q * p.nu2,
        theta1: p.kappa2 * ta12 / p.nu5,
        theta2: p.kappa2 * ta12 / p.nu6,
        y: p.f,
        z: p.g / p.q,
        w: gauge_w,
    };
    if out.constraint_residual() > 100.0 * ZETA {
        return Err(WeylError::ConstraintViolated {
            residual: out.constraint_residual(),
        });
    }
    Ok(out)
}

/// Three-term coefficients of the Lax operator `L1`:
/// `c_plus(x) y(qx) + c_zero(x) y(x) + c_minus(x) y(x/q) = L1 y (x)` up to
/// sign conventions, so `L1 y = 0` is the relation checked at probe points.
pub fn kny_l1_three_term(p: &KNYParams) -> ScalarThreeTerm {
    let (q, k1, k2) = (p.q, p.kappa1, p.kappa2);
    let (n1, n2, n3, n4, n5, n6, n7, n8) =
        (p.nu1, p.nu2, p.nu3, p.nu4, p.nu5, p.nu6, p.nu7, p.nu8);
    let (f, g) = (p.f, p.g);
    let c_plus = move |x: C| -(x - k1 / n7) * (x - k1 / n8) / (q * (f - x));
    let c_minus = move |x: C| -n1 * n2 * (x - q * n3) * (x - q * n4) / (q * (q * f - x));
    let c_zero = move |x: C| {
        x * (g * n1 - cr(1.0)) * (g * n2 - cr(1.0)) / (q * g)
            - n1 * n2 * n3 * n4 * (g - n5 / k2) * (g - n6 / k2) / (f * g)
            + g * n1 * n2 * (x - q * n3) * (x - q * n4) / (q * (q * f - x))
            + (x - k1 / n7) * (x - k1 / n8) / (q * g * (f - x))
    };
    ScalarThreeTerm {
        c_plus: Box::new(c_plus),
        c_zero: Box::new(c_zero),
        c_minus: Box::new(c_minus),
    }
}

/// Outcome of a randomized map comparison.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ComparisonReport {
    pub max_deviation: Real,
    pub worst_component: String,
    pub components: Vec<(String, Real)>,
}

impl ComparisonReport {
    fn from_pairs(pairs: &[(&str, C, C)]) -> Self {
        let mut components = Vec::new();
        let mut max_deviation: Real = 0.0;
        let mut worst = String::new();
        for (name, got, expected) in pairs {
            let dev = crate::scalar::rel_err(*got, *expected);
            if dev > max_deviation {
                max_deviation = dev;
                worst = name.to_string();
            }
            components.push((name.to_string(), dev));
        }
        ComparisonReport {
            max_deviation,
            worst_component: worst,
            components,
        }
    }
}

const DICT_NAMES: [&str; 10] = [
    "nu1", "q nu2", "nu3", "nu4", "nu5/kappa2", "nu6/kappa2", "kappa1/nu7", "kappa1/nu8", "f",
    "g",
];

/// Verify that the chi2-branch q-middle convolution equals the Weyl word
/// `s5 s2 s1 s0 s2 s3 s2 s0 s1 s2`: map the parameters through
/// `parameter_map_mc` and the dictionary, apply the word on the KNY side,
/// and compare all ten dictionary coordinates. Also checks the displayed
/// closed forms of `f~` and `g~`.
pub fn verify_prop_mc_word(p: &QPVIParams) -> Result<ComparisonReport, WeylError> {
    let mapped = qmc::parameter_map_mc(p, p.chi2, Branch::Chi2, None)?;
    let via_mc = js_to_kny(&mapped).dictionary_coordinates();
    let kny = js_to_kny(p);
    let via_word = apply_word(&WeylWord(MC_WORD.to_vec()), &kny)?;
    let word_coords = via_word.dictionary_coordinates();

    let mut pairs: Vec<(&str, C, C)> = DICT_NAMES
        .iter()
        .zip(via_mc.iter().zip(word_coords.iter()))
        .map(|(name, (a, b))| (*name, *a, *b))
        .collect();

    // displayed closed forms of f~ and g~
    let (k1, k2) = (kny.kappa1, kny.kappa2);
    let (n1, n2, n3, n4, n5) = (kny.nu1, kny.nu2, kny.nu3, kny.nu4, kny.nu5);
    let (f, g) = (kny.f, kny.g);
    let cross = (f - n3) * (f - n4) / ((f - k1 / kny.nu7) * (f - k1 / kny.nu8));
    let f_tilde = (cross * g - cr(1.0) / n1) / (cross * g - k2 / (kny.q * n1 * n2 * n5)) * f;
    let g_tilde = cross
        * ((f_tilde - k1 / kny.nu7) * (f_tilde - k1 / kny.nu8)
            / ((f_tilde - kny.q * n2 * n3 * n5 / k2) * (f_tilde - kny.q * n2 * n4 * n5 / k2)))
        * g;
    pairs.push(("f~ closed form", via_word.f, f_tilde));
    pairs.push(("g~ closed form", via_word.g, g_tilde));
    Ok(ComparisonReport::from_pairs(&pairs))
}

/// The final display of the word's action on `(kappa1, kappa2, nu1..nu8)`:
/// all ten arrows, checked against [`apply_word`] directly on a KNY tuple.
pub fn verify_word_closed_form(kny: &KNYParams) -> Result<ComparisonReport, WeylError> {
    let img = apply_word(&WeylWord(MC_WORD.to_vec()), kny)?;
    let (q, k1, k2) = (kny.q, kny.kappa1, kny.kappa2);
    let (n1, n2, n3, n4, n5, n6, n7, n8) = (
        kny.nu1, kny.nu2, kny.nu3, kny.nu4, kny.nu5, kny.nu6, kny.nu7, kny.nu8,
    );
    let u = q * n2 * n5 / k2;
    let pairs = [
        ("kappa1", img.kappa1, k1 * u),
        ("kappa2", img.kappa2, q * q * n2 * n2 * n5 * n5 / k2),
        ("nu1", img.nu1, n1 * u),
        ("nu2", img.nu2, n2),
        ("nu3", img.nu3, n3 * u),
        ("nu4", img.nu4, n4 * u),
        ("nu5", img.nu5, n6 * u),
        ("nu6", img.nu6, n5),
        ("nu7", img.nu7, n7 * u),
        ("nu8", img.nu8, n8 * u),
    ];
    Ok(ComparisonReport::from_pairs(&pairs))
}

/// Verify that the chi1-branch map with `d~ = chi1 t a1 a2 / theta1` and
/// `c~ d~^2 = 1` is realized by the single generator `s3`.
pub fn verify_prop_s3(p: &QPVIParams) -> Result<ComparisonReport, WeylError> {
    let d = p.chi1 * p.t * p.a1 * p.a2 / p.theta1;
    let c_tilde = cr(1.0) / (d * d);
    let mapped = qmc::parameter_map_mc(p, c_tilde, Branch::Chi1, Some(d))?;
    let via_mc = js_to_kny(&mapped).dictionary_coordinates();
    let via_s3 = apply_generator(3, &js_to_kny(p))?.dictionary_coordinates();
    let pairs: Vec<(&str, C, C)> = DICT_NAMES
        .iter()
        .zip(via_mc.iter().zip(via_s3.iter()))
        .map(|(name, (a, b))| (*name, *a, *b))
        .collect();
    Ok(ComparisonReport::from_pairs(&pairs))
}

/// Summary of the group-relation check over random constrained tuples.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RelationReport {
    pub trials: usize,
    pub involution_max: Real,
    pub pair_max: Real,
    pub constraint_max: Real,
    pub pairs_checked: usize,
    pub failures: Vec<String>,
}

fn tuple_distance(a: &KNYParams, b: &KNYParams) -> Real {
    let fields = [
        (a.kappa1, b.kappa1),
        (a.kappa2, b.kappa2),
        (a.nu1, b.nu1),
        (a.nu2, b.nu2),
        (a.nu3, b.nu3),
        (a.nu4, b.nu4),
        (a.nu5, b.nu5),
        (a.nu6, b.nu6),
        (a.nu7, b.nu7),
        (a.nu8, b.nu8),
        (a.f, b.f),
        (a.g, b.g),
    ];
    fields
        .iter()
        .map(|(x, y)| crate::scalar::rel_err(*x, *y))
        .fold(0.0, Real::max)
}

/// Check `s_i^2 = 1`, the braid order of all 15 generator pairs per the
/// D5^(1) diagram ((s_i s_j)^3 = 1 on edges, (s_i s_j)^2 = 1 off edges), and
/// constraint preservation, on `trials` random constrained tuples.
pub fn check_relations<R: rand::Rng>(
    rng: &mut R,
    trials: usize,
    tol: Real,
) -> Result<RelationReport, WeylError> {
    let mut report = RelationReport {
        trials,
        involution_max: 0.0,
        pair_max: 0.0,
        constraint_max: 0.0,
        pairs_checked: 0,
        failures: Vec::new(),
    };
    for _ in 0..trials {
        let p = crate::sampling::draw_kny(rng);
        for i in 0..6 {
            let twice = apply_generator(i, &apply_generator(i, &p)?)?;
            let dev = tuple_distance(&twice, &p);
            report.involution_max = report.involution_max.max(dev);
            if dev > tol {
                report.failures.push(format!("s{i}^2 != id (dev {dev:e})"));
            }
            let image = apply_generator(i, &p)?;
            let c = image.constraint_residual();
            report.constraint_max = report.constraint_max.max(c);
            if c > tol {
                report.failures.push(format!("s{i} breaks constraint ({c:e})"));
            }
        }
        for i in 0..6 {
            for j in (i + 1)..6 {
                let order = if adjacent(i, j) { 3 } else { 2 };
                let mut state = p;
                for _ in 0..order {
                    state = apply_generator(j, &apply_generator(i, &state)?)?;
                }
                let dev = tuple_distance(&state, &p);
                report.pair_max = report.pair_max.max(dev);
                if dev > tol {
                    report
                        .failures
                        .push(format!("(s{i} s{j})^{order} != id (dev {dev:e})"));
                }
            }
        }
    }
    report.pairs_checked = 15;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling;
    use crate::scalar::rel_err;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn kny(seed: u64) -> KNYParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        sampling::draw_kny(&mut rng)
    }

    fn qpvi(seed: u64) -> QPVIParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        sampling::draw_qpvi(&mut rng)
    }

    #[test]
    fn s0_swaps_nu78_only() {
        let p = kny(50);
        let s = apply_generator(0, &p).unwrap();
        assert_eq!(s.nu7, p.nu8);
        assert_eq!(s.nu8, p.nu7);
        assert_eq!(s.nu1, p.nu1);
        assert_eq!(s.f, p.f);
        assert_eq!(s.g, p.g);
        assert_eq!(s.kappa1, p.kappa1);
        assert_eq!(s.kappa2, p.kappa2);
    }

    #[test]
    fn s2_is_involution() {
        let p = kny(51);
        let twice = apply_generator(2, &apply_generator(2, &p).unwrap()).unwrap();
        assert!(tuple_distance(&twice, &p) < 1e-12);
    }

    #[test]
    fn s3_fixes_g() {
        let p = kny(52);
        let s = apply_generator(3, &p).unwrap();
        assert_eq!(s.g, p.g);
        assert_ne!(s.f, p.f);
    }

    #[test]
    fn worked_example_pins_composition_order() {
        // s2 s0 s1 s2 (g) = g (f - nu3)(f - nu4)/((f - k1/nu7)(f - k1/nu8))
        let p = kny(53);
        let word = WeylWord::new(vec![2, 0, 1, 2]).unwrap();
        let image = apply_word(&word, &p).unwrap();
        let expected = p.g * (p.f - p.nu3) * (p.f - p.nu4)
            / ((p.f - p.kappa1 / p.nu7) * (p.f - p.kappa1 / p.nu8));
        assert!(rel_err(image.g, expected) < 1e-12);
        assert!(rel_err(image.f, p.f) < 1e-12);
    }

    #[test]
    fn empty_word_is_identity() {
        let p = kny(54);
        let image = apply_word(&WeylWord(vec![]), &p).unwrap();
        assert_eq!(image, p);
    }

    #[test]
    fn mc_word_on_kappa1() {
        let p = kny(55);
        let image = apply_word(&WeylWord(MC_WORD.to_vec()), &p).unwrap();
        let expected = p.q * p.kappa1 * p.nu2 * p.nu5 / p.kappa2;
        assert!(rel_err(image.kappa1, expected) < 1e-12);
    }

    #[test]
    fn word_closed_form_all_arrows() {
        let report = verify_word_closed_form(&kny(56)).unwrap();
        assert!(report.max_deviation < 1e-12, "{report:?}");
    }

    #[test]
    fn relations_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(57);
        let report = check_relations(&mut rng, 5, 1e-9).unwrap();
        assert!(report.failures.is_empty(), "{:?}", report.failures);
        assert!(report.involution_max < 1e-11);
        assert!(report.pair_max < 1e-9);
        assert!(report.constraint_max < 1e-10);
    }

    #[test]
    fn dictionary_constraint_equivalence() {
        // Eq 3.2 holds iff the KNY constraint holds after mapping
        let p = qpvi(58);
        let k = js_to_kny(&p);
        assert!(k.constraint_residual() < 1e-12);
        assert!(rel_err(k.g, p.q * p.z) < 1e-15);
    }

    #[test]
    fn dictionary_round_trip() {
        let p = qpvi(59);
        let k = js_to_kny(&p);
        let back = kny_to_js(&k, p.w, p.t).unwrap();
        for (a, b) in [
            (back.q, p.q),
            (back.t, p.t),
            (back.a1, p.a1),
            (back.a2, p.a2),
            (back.a3, p.a3),
            (back.a4, p.a4),
            (back.chi1, p.chi1),
            (back.chi2, p.chi2),
            (back.theta1, p.theta1),
            (back.theta2, p.theta2),
            (back.y, p.y),
            (back.z, p.z),
        ] {
            assert!(rel_err(a, b) < 1e-12);
        }
    }

    #[test]
    fn mc_word_matches_parameter_map() {
        let report = verify_prop_mc_word(&qpvi(60)).unwrap();
        assert!(report.max_deviation < 1e-9, "{report:?}");
    }

    #[test]
    fn nu2_fixed_by_both_maps() {
        let p = qpvi(61);
        let mapped = qmc::parameter_map_mc(&p, p.chi2, Branch::Chi2, None).unwrap();
        // nu2 = chi2/q on both sides
        assert!(rel_err(mapped.chi2 / mapped.q, p.chi2 / p.q) < 1e-12);
        let img = apply_word(&WeylWord(MC_WORD.to_vec()), &js_to_kny(&p)).unwrap();
        assert!(rel_err(img.nu2, p.chi2 / p.q) < 1e-12);
    }

    #[test]
    fn s3_matches_chi1_branch_map() {
        let report = verify_prop_s3(&qpvi(62)).unwrap();
        assert!(report.max_deviation < 1e-9, "{report:?}");
        // spot checks from the display: nu1 -> kappa2/nu5, g and nu3, nu4 fixed
        let p = qpvi(63);
        let k = js_to_kny(&p);
        let s = apply_generator(3, &k).unwrap();
        assert!(rel_err(s.nu1, k.kappa2 / k.nu5) < 1e-12);
        assert_eq!(s.g, k.g);
        assert_eq!(s.nu3, k.nu3);
        assert_eq!(s.nu4, k.nu4);
    }

    #[test]
    fn l1_matches_scalar_reduction_at_unit_gauge() {
        let p = qpvi(64);
        let eq_js = crate::qpvi::scalar_reduce(&p, cr(1.0)).unwrap();
        let eq_kny = kny_l1_three_term(&js_to_kny(&p));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..6 {
            let x = sampling::draw_unit_scale(&mut rng);
            assert!(rel_err((eq_js.c_plus)(x), (eq_kny.c_plus)(x)) < 1e-11);
            assert!(rel_err((eq_js.c_zero)(x), (eq_kny.c_zero)(x)) < 1e-11);
            assert!(rel_err((eq_js.c_minus)(x), (eq_kny.c_minus)(x)) < 1e-11);
        }
    }

    #[test]
    fn indeterminate_point_detected() {
        let mut p = kny(65);
        // force f = nu3 = kappa1/nu7 so the s2 ratio is 0/0
        p.nu3 = p.f;
        p.nu7 = p.kappa1 / p.f;
        // rebalance the constraint through nu8
        let prod = p.q * p.nu1 * p.nu2 * p.nu3 * p.nu4 * p.nu5 * p.nu6 * p.nu7;
        p.nu8 = p.kappa1 * p.kappa1 * p.kappa2 * p.kappa2 / prod;
        let r = apply_generator(2, &p);
        assert!(matches!(r, Err(WeylError::IndeterminatePoint { generator: 2 })));
    }
}
