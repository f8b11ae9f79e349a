//! Imaginary quadratic discriminants, reduced binary quadratic forms, class
//! numbers, Heegner forms of level N, and Hilbert class polynomials.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rug::ops::RemRounding;
use rug::{Complete, Integer};

use crate::modular::MobiusMap;
use crate::numerics::ball::{ComplexBall, RealBall};
use crate::numerics::relation::IntPoly;
use crate::{Error, Result};

/// A negative discriminant congruent to 0 or 1 mod 4 (fundamental or not).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Disc {
    value: Integer,
}

impl Disc {
    pub fn new(value: impl Into<Integer>) -> Result<Self> {
        let value = value.into();
        let m4 = value.mod_u(4);
        if value >= 0 || (m4 != 0 && m4 != 1) {
            return Err(Error::InvalidDiscriminant(value.to_i64().unwrap_or(i64::MIN)));
        }
        Ok(Disc { value })
    }

    pub fn value(&self) -> &Integer {
        &self.value
    }

    pub fn to_i64(&self) -> i64 {
        self.value.to_i64().expect("desk-scale discriminant")
    }

    pub fn abs(&self) -> Integer {
        self.value.clone().abs()
    }
}

/// A primitive integral binary quadratic form a x^2 + b xy + c y^2 with
/// negative discriminant and a > 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuadForm {
    pub a: Integer,
    pub b: Integer,
    pub c: Integer,
}

impl QuadForm {
    pub fn new(a: impl Into<Integer>, b: impl Into<Integer>, c: impl Into<Integer>) -> Result<Self> {
        let (a, b, c) = (a.into(), b.into(), c.into());
        if a <= 0 {
            return Err(Error::InvalidInput(format!("form ({a},{b},{c}) needs a > 0")));
        }
        let disc = (&b * &b).complete() - 4 * (&a * &c).complete();
        if disc >= 0 {
            return Err(Error::InvalidInput(format!("form ({a},{b},{c}) not definite")));
        }
        let g = a.clone().gcd(&b).gcd(&c);
        if g != 1 {
            return Err(Error::InvalidInput(format!("form ({a},{b},{c}) imprimitive")));
        }
        Ok(QuadForm { a, b, c })
    }

    pub fn disc(&self) -> Disc {
        let d = (&self.b * &self.b).complete() - 4 * (&self.a * &self.c).complete();
        Disc { value: d }
    }

    pub fn disc_i64(&self) -> i64 {
        self.disc().to_i64()
    }

    pub fn is_reduced(&self) -> bool {
        let (a, b, c) = (&self.a, &self.b, &self.c);
        let babs = b.clone().abs();
        if !(babs <= *a && *a <= *c) {
            return false;
        }
        if (babs == *a || *a == *c) && b.is_negative() {
            return false;
        }
        true
    }

    /// Gauss reduction, tracking gamma in SL_2(Z) with
    /// tau(reduced) = gamma(tau(self)).
    pub fn reduce(&self) -> (QuadForm, MobiusMap) {
        let mut f = self.clone();
        let mut gamma = MobiusMap::identity();
        loop {
            // normalize b into (-a, a]
            let two_a = (&f.a * 2u32).complete();
            // k = ceil((b - a) / 2a)
            let k = ((&f.b - &f.a).complete() + &two_a - 1u32).div_rem_floor(two_a.clone()).0;
            if !k.is_zero() {
                // (a, b - 2ak, a k^2 - b k + c) has root tau + k, so the
                // point moves by T_k
                let b_new = f.b.clone() - (&two_a * &k).complete();
                let c_new = (&f.a * &k).complete() * &k - (&f.b * &k).complete() + &f.c;
                f = QuadForm { a: f.a.clone(), b: b_new, c: c_new };
                let step = MobiusMap::translation(k.to_i64().expect("desk-scale reduction"));
                gamma = step.compose(&gamma);
            }
            if f.a > f.c || (f.a == f.c && f.b.is_negative()) {
                // inversion: (a,b,c) -> (c,-b,a), point moves by S
                f = QuadForm { a: f.c.clone(), b: -f.b.clone(), c: f.a.clone() };
                gamma = MobiusMap::inversion().compose(&gamma);
                continue;
            }
            break;
        }
        debug_assert!(f.is_reduced());
        (f, gamma)
    }
}

impl std::fmt::Display for QuadForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.a, self.b, self.c)
    }
}

/// The CM point tau = (-b + sqrt(disc)) / (2a) attached to a form, kept
/// exact; ball shadows are produced on demand at any precision.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TauPoint {
    form: QuadForm,
}

impl TauPoint {
    pub fn new(form: QuadForm) -> Self {
        TauPoint { form }
    }

    pub fn form(&self) -> &QuadForm {
        &self.form
    }

    pub fn disc(&self) -> Disc {
        self.form.disc()
    }

    /// Ball shadow at the requested precision; Im > 0 always.
    pub fn tau_ball(&self, prec: u32) -> ComplexBall {
        let d_abs = self.form.disc().abs();
        let sq = RealBall::from_integer(&d_abs, prec).sqrt().expect("positive");
        let two_a = RealBall::from_integer(&(&self.form.a * 2u32).complete(), prec);
        let re = RealBall::from_integer(&self.form.b, prec).neg().div(&two_a).expect("a > 0");
        let im = sq.div(&two_a).expect("a > 0");
        ComplexBall::new(re, im)
    }

    /// Exact fundamental-domain reduction through form reduction.
    pub fn reduce(&self) -> (TauPoint, MobiusMap) {
        let (f, g) = self.form.reduce();
        (TauPoint { form: f }, g)
    }

    /// Exact check a tau^2 + b tau + c = 0 is built in; this verifies the
    /// ball shadow satisfies the form at the given precision (sanity hook).
    pub fn check_shadow(&self, prec: u32) -> bool {
        let t = self.tau_ball(prec);
        let a = RealBall::from_integer(&self.form.a, prec);
        let b = RealBall::from_integer(&self.form.b, prec);
        let c = RealBall::from_integer(&self.form.c, prec);
        let v = t
            .square()
            .mul_real(&a)
            .add(&t.mul_real(&b))
            .add(&ComplexBall::from_real(c));
        v.contains_zero()
    }
}

impl std::fmt::Display for TauPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "tau{}", self.form)
    }
}

/// All reduced primitive forms of discriminant d, sorted lexicographically.
pub fn reduced_forms(d: &Disc) -> Result<Vec<QuadForm>> {
    let d_abs = d.abs();
    let mut out = Vec::new();
    // |b| <= a <= c and b^2 - 4ac = d imply b^2 <= |d|/3
    let bmax = (d_abs.clone() / 3u32).sqrt();
    let parity = d.value().mod_u(2);
    let mut b = Integer::from(parity);
    while b <= bmax {
        let m = ((&b * &b).complete() + &d_abs) / 4u32;
        // factor m = a c with b <= a <= c
        let mut a = if b.is_zero() { Integer::from(1) } else { b.clone() };
        while (&a * &a).complete() <= m {
            if a > 0 && m.is_divisible(&a) {
                let c = (&m / &a).complete();
                let babs_le_a = b <= a;
                if babs_le_a && a <= c {
                    let g = a.clone().gcd(&b).gcd(&c);
                    if g == 1 {
                        out.push(QuadForm { a: a.clone(), b: b.clone(), c: c.clone() });
                        // the opposite form, unless on the reduction boundary
                        if !b.is_zero() && b != a && a != c {
                            out.push(QuadForm {
                                a: a.clone(),
                                b: -b.clone(),
                                c: c.clone(),
                            });
                        }
                    }
                }
            }
            a += 1;
        }
        b += 2;
    }
    out.sort();
    Ok(out)
}

/// h(d) = number of reduced forms.
pub fn class_number(d: &Disc) -> Result<usize> {
    Ok(reduced_forms(d)?.len())
}

/// Smallest nonnegative beta in [0, 2N) with beta^2 = d (mod 4N), if any.
pub fn heegner_beta(d: &Disc, level: u32) -> Option<Integer> {
    let modulus = Integer::from(4u32 * level);
    let target = d.value().clone().rem_euc(&modulus);
    let mut beta = Integer::new();
    while beta < 2 * level {
        if ((&beta * &beta).complete()).rem_euc(&modulus) == target {
            return Some(beta);
        }
        beta += 1;
    }
    None
}

/// One Heegner form (a, b, c) with N | a and b = beta (mod 2N) per form
/// class, for the canonical smallest nonnegative beta. Empty if d is not a
/// square mod 4N.
pub fn heegner_forms(d: &Disc, level: u32) -> Result<Vec<QuadForm>> {
    if level < 1 {
        return Err(Error::InvalidInput("level must be >= 1".into()));
    }
    let classes = reduced_forms(d)?;
    let h = classes.len();
    let Some(beta) = heegner_beta(d, level) else {
        return Ok(vec![]);
    };
    let mut found: HashMap<QuadForm, QuadForm> = HashMap::new();
    let two_n = Integer::from(2 * level);
    let four_n = Integer::from(4 * level);
    // enumerate b = beta + 2Nk and a = N a'; c = (b^2 - d)/(4 N a')
    let mut reach = 16i64;
    while found.len() < h && reach <= 4096 {
        for k in -reach..=reach {
            let b: Integer = (&beta).clone() + &two_n * Integer::from(k);
            let num = (&b * &b).complete() - d.value();
            // num = 4N a' c
            if !num.is_divisible(&four_n) {
                continue;
            }
            let m: Integer = num / &four_n;
            let mut ap = Integer::from(1);
            while ap <= reach {
                if m.is_divisible(&ap) {
                    let a: Integer = (&ap).clone() * Integer::from(level);
                    let c = (&m / &ap).complete();
                    if let Ok(f) = QuadForm::new(a, b.clone(), c) {
                        let class = f.reduce().0;
                        found.entry(class).or_insert(f);
                        if found.len() == h {
                            break;
                        }
                    }
                }
                ap += 1;
            }
        }
        reach *= 4;
    }
    if found.len() < h {
        return Err(Error::Internal(format!(
            "found only {} of {} Heegner classes for disc {} level {}",
            found.len(),
            h,
            d.to_i64(),
            level
        )));
    }
    let mut out: Vec<QuadForm> = Vec::with_capacity(h);
    for class in &classes {
        out.push(found.remove(class).expect("one per class"));
    }
    Ok(out)
}

fn classpoly_cache() -> &'static Mutex<HashMap<i64, IntPoly>> {
    static CACHE: OnceLock<Mutex<HashMap<i64, IntPoly>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The Hilbert class polynomial of d: the monic integer polynomial whose
/// roots are j(tau_f) over the reduced forms, computed by complex
/// evaluation and certified integer rounding. Every rounded coefficient
/// must sit within 1/4 of its float value or the precision doubles.
pub fn hilbert_class_poly(d: &Disc, prec: u32) -> Result<IntPoly> {
    if let Some(p) = classpoly_cache().lock().unwrap().get(&d.to_i64()) {
        return Ok(p.clone());
    }
    let forms = reduced_forms(d)?;
    if forms.is_empty() {
        return Err(Error::InvalidDiscriminant(d.to_i64()));
    }
    // size estimate: log2 prod max(1,|j_i|) ~ (pi sqrt|d| / ln 2) * sum 1/a
    let d_abs_f = d.abs().to_f64();
    let inv_a_sum: f64 = forms.iter().map(|f| 1.0 / f.a.to_f64()).sum();
    let est = std::f64::consts::PI * d_abs_f.sqrt() / std::f64::consts::LN_2 * inv_a_sum;
    let mut work = (est as u32 + forms.len() as u32 + 96).max(prec);
    for _ in 0..8 {
        match classpoly_attempt(&forms, work)? {
            Some(poly) => {
                classpoly_cache().lock().unwrap().insert(d.to_i64(), poly.clone());
                return Ok(poly);
            }
            None => work *= 2,
        }
    }
    Err(Error::InsufficientPrecision)
}

fn classpoly_attempt(forms: &[QuadForm], prec: u32) -> Result<Option<IntPoly>> {
    let mut coeffs: Vec<ComplexBall> = vec![ComplexBall::one(prec)];
    for f in forms {
        let j = crate::modular::j_invariant(&TauPoint::new(f.clone()), prec)?;
        // multiply by (X - j)
        let mut next = vec![ComplexBall::zero(prec); coeffs.len() + 1];
        for (i, c) in coeffs.iter().enumerate() {
            next[i + 1] = next[i + 1].add(c);
            next[i] = next[i].sub(&c.mul(&j));
        }
        coeffs = next;
    }
    let quarter = 0.25f64;
    let mut out: Vec<Integer> = Vec::with_capacity(coeffs.len());
    for c in &coeffs {
        let (n, dist) = c.re().round_to_integer();
        if dist.to_f64() >= quarter || c.im().abs_upper().to_f64() >= quarter {
            return Ok(None);
        }
        out.push(n);
    }
    Ok(Some(IntPoly::new(out)))
}

/// The thirteen discriminants of class number one (computed, not tabulated)
/// with the integer j-invariant of each, i.e. the rational CM j-invariants.
pub fn rational_cm_j_invariants(prec: u32) -> Result<Vec<(i64, Integer)>> {
    static CM: OnceLock<Mutex<Option<Vec<(i64, Integer)>>>> = OnceLock::new();
    let cell = CM.get_or_init(|| Mutex::new(None));
    if let Some(v) = cell.lock().unwrap().as_ref() {
        return Ok(v.clone());
    }
    let mut out = Vec::new();
    let mut d = -3i64;
    while d >= -200 {
        if (d % 4 == 0 || d.rem_euclid(4) == 1) && d < 0 {
            if let Ok(disc) = Disc::new(d) {
                if class_number(&disc)? == 1 {
                    let h = hilbert_class_poly(&disc, prec)?;
                    debug_assert_eq!(h.degree(), 1);
                    let j = -h.coeffs[0].clone();
                    out.push((d, j));
                }
            }
        }
        d -= 1;
    }
    *cell.lock().unwrap() = Some(out.clone());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disc(v: i64) -> Disc {
        Disc::new(v).unwrap()
    }

    // brute-force oracle: every (a, b, c) with |b| <= a <= c <= sqrt(|d|/3)+
    fn enumerate_reduced(d: i64) -> Vec<(i64, i64, i64)> {
        let mut out = vec![];
        let bound = ((d.unsigned_abs() as f64) / 3.0).sqrt() as i64 + 2;
        for a in 1..=bound + d.abs() / 3 {
            for b in -a..=a {
                let num = b * b - d;
                if num % (4 * a) != 0 {
                    continue;
                }
                let c = num / (4 * a);
                if c < a {
                    continue;
                }
                if (b.abs() == a || a == c) && b < 0 {
                    continue;
                }
                let g = gcd(gcd(a, b.abs()), c);
                if g == 1 {
                    out.push((a, b, c));
                }
            }
        }
        out.sort();
        out
    }

    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a.abs()
        } else {
            gcd(b, a % b)
        }
    }

    #[test]
    fn unique_form_for_minus_4() {
        let fs = reduced_forms(&disc(-4)).unwrap();
        assert_eq!(fs.len(), 1);
        assert_eq!((fs[0].a.to_i64(), fs[0].b.to_i64(), fs[0].c.to_i64()), (Some(1), Some(0), Some(1)));
    }

    #[test]
    fn forms_of_minus_23_match_enumeration() {
        let fs = reduced_forms(&disc(-23)).unwrap();
        let got: Vec<(i64, i64, i64)> = fs
            .iter()
            .map(|f| (f.a.to_i64().unwrap(), f.b.to_i64().unwrap(), f.c.to_i64().unwrap()))
            .collect();
        assert_eq!(got, enumerate_reduced(-23));
        assert_eq!(got.len(), 3);
        assert!(got.contains(&(1, 1, 6)));
        assert!(got.contains(&(2, 1, 3)));
        assert!(got.contains(&(2, -1, 3)));
    }

    #[test]
    fn invalid_discriminants_rejected() {
        assert!(matches!(Disc::new(-5), Err(Error::InvalidDiscriminant(-5))));
        assert!(matches!(Disc::new(4), Err(Error::InvalidDiscriminant(4))));
        assert!(Disc::new(-3).is_ok());
        assert!(Disc::new(-4).is_ok());
    }

    #[test]
    fn class_numbers_against_enumeration() {
        for (d, h) in [(-3i64, 1usize), (-4, 1), (-7, 1), (-23, 3), (-47, 5)] {
            assert_eq!(class_number(&disc(d)).unwrap(), h, "h({d})");
            assert_eq!(enumerate_reduced(d).len(), h);
        }
    }

    #[test]
    fn multiset_of_discs_is_constant() {
        for d in [-20i64, -23, -47, -71] {
            for f in reduced_forms(&disc(d)).unwrap() {
                assert_eq!(f.disc_i64(), d);
                assert!(f.is_reduced());
            }
        }
    }

    #[test]
    fn heegner_examples() {
        // disc -7, N = 37: exactly one form since h(-7) = 1
        let hf = heegner_forms(&disc(-7), 37).unwrap();
        assert_eq!(hf.len(), 1);
        assert!(hf[0].a.is_divisible(&Integer::from(37)));
        let beta = heegner_beta(&disc(-7), 37).unwrap();
        assert_eq!(
            (&hf[0].b - &beta).complete().rem_euc(Integer::from(74)),
            0
        );
        // disc -3 is not a square mod 44
        assert!(heegner_forms(&disc(-3), 11).unwrap().is_empty());
        // level 1: the principal form
        let hf = heegner_forms(&disc(-7), 1).unwrap();
        assert_eq!(hf.len(), 1);
        assert_eq!(hf[0].reduce().0, QuadForm::new(1, 1, 2).unwrap());
    }

    #[test]
    fn tau_of_form_examples() {
        let prec = 128;
        let t = TauPoint::new(QuadForm::new(1, 0, 1).unwrap()).tau_ball(prec);
        assert!((t.re_f64()).abs() < 1e-30 && (t.im_f64() - 1.0).abs() < 1e-30);
        let t = TauPoint::new(QuadForm::new(1, 1, 1).unwrap()).tau_ball(prec);
        assert!((t.re_f64() + 0.5).abs() < 1e-30);
        assert!((t.im_f64() - 0.75f64.sqrt()).abs() < 1e-30);
        let t = TauPoint::new(QuadForm::new(2, 1, 3).unwrap()).tau_ball(prec);
        assert!((t.re_f64() + 0.25).abs() < 1e-30);
        assert!((t.im_f64() - 23.0f64.sqrt() / 4.0).abs() < 1e-30);
        // shadows satisfy their forms
        for f in [QuadForm::new(1, 0, 1).unwrap(), QuadForm::new(3, 2, 5).unwrap()] {
            assert!(TauPoint::new(f).check_shadow(prec));
        }
    }

    #[test]
    fn reduction_tracks_gamma() {
        let prec = 192;
        for (a, b, c) in [(11i64, 7, 23), (5, 3, 17), (37, 37, 12)] {
            let f = match QuadForm::new(a, b, c) {
                Ok(f) => f,
                Err(_) => continue,
            };
            let p = TauPoint::new(f);
            let (r, g) = p.reduce();
            assert!(r.form().is_reduced());
            assert_eq!(g.det(), Integer::from(1));
            let moved = g.apply(&p.tau_ball(prec)).unwrap();
            let direct = r.tau_ball(prec);
            assert!(
                moved.sub(&direct).abs_upper().to_f64() < 1e-40,
                "gamma mismatch for ({a},{b},{c})"
            );
        }
    }

    #[test]
    fn class_poly_small_cases() {
        // H_{-3} = X and H_{-4} = X - 1728, via the j-series
        let h3 = hilbert_class_poly(&disc(-3), 128).unwrap();
        assert_eq!(h3.coeffs, vec![Integer::new(), Integer::from(1)]);
        let h4 = hilbert_class_poly(&disc(-4), 128).unwrap();
        assert_eq!(h4.coeffs, vec![Integer::from(-1728), Integer::from(1)]);
    }

    #[test]
    fn class_poly_minus_23_two_precisions_agree() {
        let p1 = hilbert_class_poly(&disc(-23), 256).unwrap();
        classpoly_cache().lock().unwrap().clear();
        let p2 = hilbert_class_poly(&disc(-23), 512).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(p1.degree(), 3);
        // roots re-verified through the j-series
        let prec = 320;
        for f in reduced_forms(&disc(-23)).unwrap() {
            let j = crate::modular::j_invariant(&TauPoint::new(f), prec).unwrap();
            let v = p1.eval_ball(&j);
            assert!(v.abs_upper().to_f64() < 1e-50);
        }
    }

    #[test]
    fn thirteen_rational_cm_j_invariants() {
        let cm = rational_cm_j_invariants(160).unwrap();
        assert_eq!(cm.len(), 13);
        let discs: Vec<i64> = cm.iter().map(|(d, _)| *d).collect();
        assert_eq!(
            discs,
            vec![-3, -4, -7, -8, -11, -12, -16, -19, -27, -28, -43, -67, -163]
        );
        let j1728 = cm.iter().find(|(d, _)| *d == -4).unwrap();
        assert_eq!(j1728.1, 1728);
        let j0 = cm.iter().find(|(d, _)| *d == -3).unwrap();
        assert_eq!(j0.1, 0);
        // j(-16) = j(2i) = 287496
        let j16 = cm.iter().find(|(d, _)| *d == -16).unwrap();
        assert_eq!(j16.1, 287496);
    }

    #[test]
    fn heegner_output_bijective_with_classes() {
        // -79 = 9 mod 44 is a square mod 44 and h(-79) = 5
        let d = disc(-79);
        assert_eq!(class_number(&d).unwrap(), 5);
        let hf = heegner_forms(&d, 11).unwrap();
        assert_eq!(hf.len(), 5);
        let mut classes: Vec<QuadForm> = hf.iter().map(|f| f.reduce().0).collect();
        classes.sort();
        classes.dedup();
        assert_eq!(classes.len(), 5);
        for f in &hf {
            assert!(f.a.is_divisible(&Integer::from(11)));
            assert_eq!(f.disc_i64(), -79);
        }
    }
}
