//! The j-function, fundamental-domain reduction, classical modular
//! polynomials, X_N membership, Hecke neighbors, heights of quadratic
//! points, and the D-independence predicate.

pub mod intseries;
pub mod modpoly;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rug::ops::Pow;
use rug::{Float, Integer};

use crate::numerics::ball::{ComplexBall, RealBall};
use crate::numerics::qseries::{QSeries, TailModel};
use crate::quadforms::TauPoint;
use crate::{Error, Result};

pub use modpoly::{hecke_neighbors, modular_polynomial, psi_degree, HeckeNeighbor, ModPoly};

/// An element of SL_2(Z) acting on the upper half plane.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MobiusMap {
    /// Row-major entries (a, b; c, d) with ad - bc = 1.
    pub a: Integer,
    pub b: Integer,
    pub c: Integer,
    pub d: Integer,
}

impl MobiusMap {
    pub fn identity() -> Self {
        MobiusMap {
            a: Integer::from(1),
            b: Integer::new(),
            c: Integer::new(),
            d: Integer::from(1),
        }
    }

    pub fn translation(k: i64) -> Self {
        MobiusMap {
            a: Integer::from(1),
            b: Integer::from(k),
            c: Integer::new(),
            d: Integer::from(1),
        }
    }

    /// The inversion S: tau -> -1/tau.
    pub fn inversion() -> Self {
        MobiusMap {
            a: Integer::new(),
            b: Integer::from(-1),
            c: Integer::from(1),
            d: Integer::new(),
        }
    }

    pub fn det(&self) -> Integer {
        Integer::from(&self.a * &self.d) - Integer::from(&self.b * &self.c)
    }

    /// self applied after other: (self * other) tau = self(other(tau)).
    pub fn compose(&self, other: &MobiusMap) -> MobiusMap {
        MobiusMap {
            a: Integer::from(&self.a * &other.a) + Integer::from(&self.b * &other.c),
            b: Integer::from(&self.a * &other.b) + Integer::from(&self.b * &other.d),
            c: Integer::from(&self.c * &other.a) + Integer::from(&self.d * &other.c),
            d: Integer::from(&self.c * &other.b) + Integer::from(&self.d * &other.d),
        }
    }

    pub fn inverse(&self) -> MobiusMap {
        // det = 1, so inverse = (d, -b; -c, a)
        MobiusMap {
            a: self.d.clone(),
            b: Integer::from(-self.b.clone()),
            c: Integer::from(-self.c.clone()),
            d: self.a.clone(),
        }
    }

    pub fn apply(&self, tau: &ComplexBall) -> Result<ComplexBall> {
        let prec = tau.prec();
        let num = tau
            .mul_real(&RealBall::from_integer(&self.a, prec))
            .add(&ComplexBall::from_real(RealBall::from_integer(&self.b, prec)));
        let den = tau
            .mul_real(&RealBall::from_integer(&self.c, prec))
            .add(&ComplexBall::from_real(RealBall::from_integer(&self.d, prec)));
        num.div(&den)
    }
}

impl std::fmt::Display for MobiusMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {}; {}, {}]", self.a, self.b, self.c, self.d)
    }
}

/// Truncation order making the j-series tail certifiably below
/// 2^-(prec + 40) for |q| <= e^(-pi sqrt(3)) (the fundamental domain).
fn j_truncation(prec: u32) -> i64 {
    let target = -((prec as f64 + 40.0) * std::f64::consts::LN_2);
    let a = 4.0 * std::f64::consts::PI;
    let b = std::f64::consts::PI * 3.0f64.sqrt();
    let mut t = 8i64;
    while a * (t as f64).sqrt() - b * (t as f64) > target {
        t += 8;
    }
    t + 8
}

fn j_cache() -> &'static Mutex<HashMap<i64, Arc<QSeries>>> {
    static CACHE: OnceLock<Mutex<HashMap<i64, Arc<QSeries>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The j-function as a certified q-series adequate for `prec` bits on the
/// standard fundamental domain. |c_n| <= e^(4 pi sqrt(n)) classically.
pub fn j_qseries(prec: u32) -> Result<Arc<QSeries>> {
    let t = (j_truncation(prec) + 31) / 32 * 32;
    if let Some(s) = j_cache().lock().unwrap().get(&t) {
        return Ok(s.clone());
    }
    let ls = intseries::j_series(t)?;
    let qs = Arc::new(ls.to_qseries(TailModel {
        log_m: 0.0,
        sqrt_coef: 4.0 * std::f64::consts::PI,
        pow_coef: 0.0,
    })?);
    j_cache().lock().unwrap().insert(t, qs.clone());
    Ok(qs)
}

/// Reduce tau into the standard fundamental domain |Re| <= 1/2, |tau| >= 1.
/// Boundary representatives: Re = +1/2 rather than -1/2, and Re >= 0 on the
/// unit circle. Boundary choices are made at midpoint resolution.
pub fn reduce_to_fundamental_domain(
    tau: &ComplexBall,
    prec: u32,
) -> Result<(ComplexBall, MobiusMap)> {
    if tau.im().sign_certified() != Some(1) {
        return Err(Error::NotUpperHalfPlane);
    }
    let work = prec + 32;
    let mut t = tau.set_prec(work);
    let mut gamma = MobiusMap::identity();
    let one = RealBall::one(work);
    for _ in 0..100_000 {
        // recenter the real part
        let (k, _) = t.re().round_to_integer();
        if !k.is_zero() {
            let kk = k.to_i64().ok_or_else(|| {
                Error::Indeterminate("translation overflow in reduction".into())
            })?;
            let m = MobiusMap::translation(-kk);
            t = m.apply(&t)?;
            gamma = m.compose(&gamma);
        }
        let n = t.norm_sq();
        match n.cmp_certified(&one) {
            Some(std::cmp::Ordering::Less) => {
                let s = MobiusMap::inversion();
                t = s.apply(&t)?;
                gamma = s.compose(&gamma);
            }
            Some(_) => break,
            None => {
                // |tau| within radius of 1: on the arc, stop
                break;
            }
        }
    }
    // canonicalize Re = -1/2 to +1/2 (midpoint decision)
    let half = Float::with_val(work, -0.5f32);
    let near_half = Float::with_val(32, t.re_mid() - &half).abs().to_f64() < 1e-9
        || t.re_mid() < &half;
    if near_half && Float::with_val(32, t.re_mid() - &half).abs().to_f64() < 0.25 {
        let m = MobiusMap::translation(1);
        t = m.apply(&t)?;
        gamma = m.compose(&gamma);
    }
    // canonicalize the unit-circle boundary to Re >= 0
    let n = t.norm_sq();
    if n.sub(&one).contains_zero() && t.re_mid().is_sign_negative() && !t.re().contains_zero() {
        let s = MobiusMap::inversion();
        t = s.apply(&t)?;
        gamma = s.compose(&gamma);
        let (k, _) = t.re().round_to_integer();
        if !k.is_zero() {
            let m = MobiusMap::translation(-k.to_i64().unwrap_or(0));
            t = m.apply(&t)?;
            gamma = m.compose(&gamma);
        }
    }
    Ok((t.set_prec(prec), gamma))
}

/// j(tau) for a ball in the upper half plane, with certified error.
pub fn j_invariant_ball(tau: &ComplexBall, prec: u32) -> Result<ComplexBall> {
    let work = prec + 32;
    let (t, _) = reduce_to_fundamental_domain(tau, work)?;
    let series = j_qseries(work)?;
    Ok(series.eval_tau(&t, work)?.set_prec(prec))
}

/// j at an exact CM point: the form is reduced exactly first, so the series
/// is always evaluated inside the fundamental domain.
pub fn j_invariant(point: &TauPoint, prec: u32) -> Result<ComplexBall> {
    let reduced = point.reduce().0;
    let work = prec + 32;
    let tau = reduced.tau_ball(work);
    let series = j_qseries(work)?;
    Ok(series.eval_tau(&tau, work)?.set_prec(prec))
}

/// Multiplicative Weil height of the quadratic point tau(f): for a primitive
/// form (a, b, c) both conjugate roots have modulus sqrt(c/a), so the Mahler
/// measure of a X^2 + b X + c is max(a, c) and H = sqrt(max(a, c)).
pub fn height_of_quadratic_point(point: &TauPoint, prec: u32) -> RealBall {
    let f = point.form();
    let m = if f.a >= f.c { f.a.clone() } else { f.c.clone() };
    RealBall::from_integer(&m, prec).sqrt().expect("nonnegative")
}

/// Witness for a failed D-independence check.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub enum DependenceWitness {
    /// |disc(s_i)| <= D
    SmallDisc { index: usize, disc: i64 },
    /// (s_i, s_j) in X_N with N <= D
    Linked { i: usize, j: usize, level: u32 },
}

/// D-independence: all |disc| > D and no pair linked by a cyclic isogeny of
/// degree <= D. Returns the first violated condition as a witness.
pub fn is_d_independent(
    points: &[TauPoint],
    d_bound: u32,
    prec: u32,
) -> Result<(bool, Option<DependenceWitness>)> {
    for (i, p) in points.iter().enumerate() {
        let disc = p.form().disc_i64();
        if disc.unsigned_abs() <= d_bound as u64 {
            return Ok((false, Some(DependenceWitness::SmallDisc { index: i, disc })));
        }
    }
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            for level in 1..=d_bound {
                if in_xn(&points[i], &points[j], level, prec)? {
                    return Ok((false, Some(DependenceWitness::Linked { i, j, level })));
                }
            }
        }
    }
    Ok((true, None))
}

/// Is (s1, s2) on the modular correspondence X_N? Decided with a certificate:
/// an algebraic-integer norm bound across all conjugate pairs turns a tiny
/// certified enclosure of Phi_N(j(s1), j(s2)) into an exact vanishing proof,
/// and a ball excluding zero is an exact non-vanishing proof.
pub fn in_xn(s1: &TauPoint, s2: &TauPoint, level: u32, prec: u32) -> Result<bool> {
    let phi = modular_polynomial(level)?;
    let c1 = s1.reduce().0;
    let c2 = s2.reduce().0;
    let forms1 = crate::quadforms::reduced_forms(&c1.form().disc())?;
    let forms2 = crate::quadforms::reduced_forms(&c2.form().disc())?;
    let mut work = prec.max(128);
    for _ in 0..4 {
        let j1: Vec<ComplexBall> = forms1
            .iter()
            .map(|f| j_invariant(&TauPoint::new(f.clone()), work))
            .collect::<Result<_>>()?;
        let j2: Vec<ComplexBall> = forms2
            .iter()
            .map(|f| j_invariant(&TauPoint::new(f.clone()), work))
            .collect::<Result<_>>()?;
        let i1 = forms1.iter().position(|f| f == c1.form()).expect("reduced form in class list");
        let i2 = forms2.iter().position(|f| f == c2.form()).expect("reduced form in class list");

        // all pairwise values; the target pair is (i1, i2)
        let mut target: Option<ComplexBall> = None;
        let mut max_mag = Float::with_val(32, 1);
        let mut pair_count = 0u32;
        for (a, ja) in j1.iter().enumerate() {
            for (b, jb) in j2.iter().enumerate() {
                let v = phi.eval_xy(ja, jb);
                pair_count += 1;
                let up = v.abs_upper();
                if up > max_mag {
                    max_mag = up;
                }
                if a == i1 && b == i2 {
                    target = Some(v);
                }
            }
        }
        let v = target.expect("target pair evaluated");
        if v.abs_lower() > 0 {
            return Ok(false);
        }
        // v != 0 would force |v| >= max_mag^-(pairs - 1) because the product
        // over the Galois orbit of v is a nonzero rational integer
        if pair_count == 1 {
            // rational j on both sides: vanishing is |v| < 1 directly
            if v.abs_upper() < 1 {
                return Ok(true);
            }
        } else {
            let mut vmin = Float::with_val(64, max_mag);
            vmin = vmin.pow((pair_count - 1) as i32);
            vmin.recip_mut();
            if v.abs_upper() < vmin {
                return Ok(true);
            }
        }
        work *= 2;
    }
    Err(Error::Indeterminate(format!(
        "X_{level} membership for discs {} and {}",
        c1.form().disc_i64(),
        c2.form().disc_i64()
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadforms::QuadForm;

    fn ball(re: f64, im: f64, prec: u32) -> ComplexBall {
        ComplexBall::from_f64s(re, im, prec)
    }

    #[test]
    fn reduce_translation() {
        let (t, g) = reduce_to_fundamental_domain(&ball(5.0, 1.0, 128), 128).unwrap();
        assert!((t.re_f64()).abs() < 1e-20);
        assert!((t.im_f64() - 1.0).abs() < 1e-20);
        assert_eq!(g.b, Integer::from(-5));
    }

    #[test]
    fn reduce_identity_high_point() {
        let (t, g) = reduce_to_fundamental_domain(&ball(0.0, 2.0, 128), 128).unwrap();
        assert_eq!(g, MobiusMap::identity());
        assert!((t.im_f64() - 2.0).abs() < 1e-20);
    }

    #[test]
    fn reduce_inversion() {
        let (t, _g) = reduce_to_fundamental_domain(&ball(0.0, 0.5, 128), 128).unwrap();
        assert!((t.im_f64() - 2.0).abs() < 1e-20, "expected 2i, got {:?}", t.to_f64s());
    }

    #[test]
    fn reduce_idempotent_and_j_consistent() {
        let prec = 192;
        for (re, im) in [(0.37, 0.9), (-1.7, 0.11), (3.2, 0.05), (0.49999, 2.0)] {
            let tau = ball(re, im, prec);
            let (t1, g) = reduce_to_fundamental_domain(&tau, prec).unwrap();
            assert_eq!(g.det(), Integer::from(1));
            let (t2, g2) = reduce_to_fundamental_domain(&t1, prec).unwrap();
            assert_eq!(g2, MobiusMap::identity(), "not idempotent at ({re}, {im})");
            assert!(t1.sub(&t2).abs_upper().to_f64() < 1e-30);
            // j-invariance under the returned transform
            let j1 = j_invariant_ball(&tau, prec).unwrap();
            let j2 = j_invariant_ball(&t1, prec).unwrap();
            assert!(j1.sub(&j2).contains_zero(), "j mismatch at ({re}, {im})");
        }
    }

    #[test]
    fn j_at_i_is_1728() {
        let prec = 256;
        let j = j_invariant_ball(&ball(0.0, 1.0, prec), prec).unwrap();
        let target = ComplexBall::from_integer(&Integer::from(1728), prec);
        assert!(j.sub(&target).contains_zero());
        assert!(j.err().to_f64() < 1e-60);
    }

    #[test]
    fn j_at_rho_is_0() {
        // exact CM point (1,1,1); a float approximation of rho would lose
        // two thirds of the digits to the triple zero of j there
        let prec = 256;
        let rho = TauPoint::new(QuadForm::new(1, 1, 1).unwrap());
        let j = j_invariant(&rho, prec).unwrap();
        assert!(j.abs_upper().to_f64() < 1e-55);
    }

    #[test]
    fn j_at_2i_is_287496() {
        let prec = 256;
        let j = j_invariant_ball(&ball(0.0, 2.0, prec), prec).unwrap();
        let target = ComplexBall::from_integer(&Integer::from(287496), prec);
        assert!(j.sub(&target).contains_zero());
    }

    #[test]
    fn quadratic_point_heights() {
        let prec = 128;
        // tau = i: X^2 + 1, height 1
        let i_pt = TauPoint::new(QuadForm::new(1, 0, 1).unwrap());
        let h = height_of_quadratic_point(&i_pt, prec);
        assert!((h.to_f64() - 1.0).abs() < 1e-25);
        // tau = (-1 + sqrt(-23))/2: X^2 + X + 6, height sqrt(6)
        let p = TauPoint::new(QuadForm::new(1, 1, 6).unwrap());
        let h = height_of_quadratic_point(&p, prec);
        assert!((h.to_f64() - 6.0f64.sqrt()).abs() < 1e-12);
        // general: sqrt(max(a, c)), cross-checked at second precision
        let f = QuadForm::new(2, 1, 3).unwrap();
        let h1 = height_of_quadratic_point(&TauPoint::new(f.clone()), 128);
        let h2 = height_of_quadratic_point(&TauPoint::new(f), 256);
        assert!((h1.to_f64() - 3.0f64.sqrt()).abs() < 1e-12);
        assert!((h1.to_f64() - h2.to_f64()).abs() < 1e-14);
    }
}
