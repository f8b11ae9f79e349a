//! The modular parameterization X_0(N) -> E: newform coefficients, the
//! Eichler integral z(tau) = sum a_n/n q^n, period-lattice matching,
//! Heegner point construction with algebraic recognition, and the
//! correspondences (Hecke of degree M composed with the parameterization).

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rug::ops::Pow;
use rug::{Complete, Integer, Rational};

use crate::elliptic::{periods, weierstrass_point, CPoint, CurveQ, Lattice2, Point};
use crate::modular::MobiusMap;
use crate::numerics::ball::{ComplexBall, RealBall};
use crate::numerics::qseries::{QSeries, TailModel};
use crate::numerics::relation::{recognize_algebraic, IntPoly};
use crate::quadforms::{heegner_forms, Disc, QuadForm, TauPoint};
use crate::{Error, Result};

/// Conductor of a minimal model, with the standard semistable rules and
/// f_p = 2 for additive reduction at p >= 5. Additive reduction at 2 or 3
/// would need the full Tate algorithm and is reported as unsupported.
pub fn conductor(curve: &CurveQ) -> Result<Integer> {
    let (c, _) = curve.integral_model();
    let disc = c.disc.numer().clone().abs();
    let mut n = Integer::from(1);
    let mut m = disc.clone();
    let mut p = Integer::from(2);
    while m > 1 {
        if (&p * &p).complete() > m {
            p = m.clone(); // leftover prime
        }
        if m.is_divisible(&p) {
            while m.is_divisible(&p) {
                m /= &p;
            }
            let pu = p.to_u64().ok_or_else(|| {
                Error::Internal("conductor prime exceeds desk scale".into())
            })?;
            let a = crate::elliptic::ap(&c, pu)?;
            if a == 0 {
                // additive
                if pu == 2 || pu == 3 {
                    return Err(Error::InvalidInput(format!(
                        "additive reduction at {pu}: conductor exponent needs the full \
                         Tate algorithm; use a semistable model"
                    )));
                }
                n *= (&p * &p).complete();
            } else {
                n *= &p;
            }
        }
        p += 1;
    }
    Ok(n)
}

fn an_cache() -> &'static Mutex<HashMap<String, Arc<Vec<i64>>>> {
    static CACHE: OnceLock<Mutex<HashMap<String, Arc<Vec<i64>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Newform coefficients a_1..a_T from traces of Frobenius and the Hecke
/// recursion a_{p^{k+1}} = a_p a_{p^k} - p a_{p^{k-1}} (p good),
/// a_{p^k} = a_p^k (p | N), extended multiplicatively. Cached in memory and
/// on disk under kind "anplus".
pub fn an_coefficients(curve: &CurveQ, t: usize) -> Result<Arc<Vec<i64>>> {
    let key = format!("{curve}");
    if let Some(v) = an_cache().lock().unwrap().get(&key) {
        if v.len() > t {
            return Ok(v.clone());
        }
    }
    if let Some(payload) = crate::cache::lookup("anplus", &key) {
        if let Some(arr) = payload.get("an").and_then(|a| a.as_array()) {
            if arr.len() > t {
                let v: Option<Vec<i64>> = arr.iter().map(|x| x.as_i64()).collect();
                if let Some(v) = v {
                    let v = Arc::new(v);
                    an_cache().lock().unwrap().insert(key, v.clone());
                    return Ok(v);
                }
            }
        }
    }
    let cond = conductor(curve)?;
    let mut an = vec![0i64; t + 1];
    if t >= 1 {
        an[1] = 1;
    }
    let mut p = 2u64;
    while p <= t as u64 {
        if is_prime_u64(p) {
            let a_p = crate::elliptic::ap(curve, p)?;
            let bad = cond.is_divisible_u(p as u32);
            let mut powers = vec![1i64, a_p];
            let mut pk = p;
            while pk * p <= t as u64 {
                pk *= p;
                let k = powers.len();
                let next = if bad {
                    powers[k - 1] * a_p
                } else {
                    powers[k - 1] * a_p - (p as i64) * powers[k - 2]
                };
                powers.push(next);
            }
            for (k, val) in powers.iter().enumerate().skip(1) {
                let q = (p as usize).pow(k as u32);
                if q <= t {
                    an[q] = *val;
                }
            }
        }
        p += 1;
    }
    // multiplicative fill over coprime prime-power factorizations
    for n in 2..=t {
        if an[n] != 0 {
            continue;
        }
        let sp = smallest_prime_factor(n);
        let mut q = 1usize;
        let mut m = n;
        while m % sp == 0 {
            m /= sp;
            q *= sp;
        }
        if m > 1 {
            an[n] = an[q] * an[m];
        }
    }
    let v = Arc::new(an);
    an_cache().lock().unwrap().insert(key.clone(), v.clone());
    let arr: Vec<serde_json::Value> = v.iter().map(|x| serde_json::Value::from(*x)).collect();
    crate::cache::store("anplus", &key, &serde_json::json!({ "an": arr }));
    Ok(v)
}

fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn smallest_prime_factor(n: usize) -> usize {
    let mut d = 2usize;
    while d * d <= n {
        if n % d == 0 {
            return d;
        }
        d += 1;
    }
    n
}

/// The Eichler integral z_f(tau) = sum_{n <= T} (a_n / n) q^n as a q-series
/// with the certified tail |a_n / n| <= sqrt(n).
fn zf_qseries(an: &[i64], t: usize) -> Result<QSeries> {
    let t = t.min(an.len().saturating_sub(1));
    let coeffs: Vec<Rational> =
        (1..=t).map(|n| Rational::from((an[n], n as i64))).collect();
    QSeries::new(1, coeffs, TailModel { log_m: 0.0, sqrt_coef: 0.0, pow_coef: 0.5 })
}

/// f(tau) = sum a_n q^n with tail |a_n| <= n^(3/2).
fn f_qseries(an: &[i64], t: usize) -> Result<QSeries> {
    let t = t.min(an.len().saturating_sub(1));
    let coeffs: Vec<Rational> = (1..=t).map(|n| Rational::from(an[n])).collect();
    QSeries::new(1, coeffs, TailModel { log_m: 0.0, sqrt_coef: 0.0, pow_coef: 1.5 })
}

/// Truncation adequate for `prec` bits at height im.
fn needed_truncation(prec: u32, im: f64) -> usize {
    let t = ((prec as f64 + 48.0) * std::f64::consts::LN_2
        / (2.0 * std::f64::consts::PI * im))
        .ceil() as usize;
    t + 48
}

/// Greedily move tau to a Gamma_0(N)-representative with (near-)maximal
/// imaginary part: translations plus the best (a b; cN d) found by scan.
pub fn gamma0_reduce(tau: &ComplexBall, level: u32, prec: u32) -> Result<ComplexBall> {
    let mut t = tau.set_prec(prec + 32);
    for _ in 0..4096 {
        let (k, _) = t.re().round_to_integer();
        if !k.is_zero() {
            let m = MobiusMap::translation(-k.to_i64().unwrap_or(0));
            t = m.apply(&t)?;
        }
        let (tre, tim) = (t.re_f64(), t.im_f64());
        let mut best: Option<(f64, i64, i64)> = None;
        for m in 1..=24i64 {
            let c = m * level as i64;
            let d0 = (-(c as f64) * tre).round() as i64;
            for dd in -2..=2i64 {
                let d = d0 + dd;
                if gcd_i64(c, d) != 1 {
                    continue;
                }
                let nre = c as f64 * tre + d as f64;
                let nim = c as f64 * tim;
                let norm = nre * nre + nim * nim;
                if norm < 1e-30 {
                    continue;
                }
                let new_im = tim / norm;
                if new_im > tim * (1.0 + 1e-12)
                    && best.as_ref().is_none_or(|(b, _, _)| new_im > *b)
                {
                    best = Some((new_im, c, d));
                }
            }
        }
        let Some((_, c, d)) = best else {
            let (k, _) = t.re().round_to_integer();
            if !k.is_zero() {
                let m = MobiusMap::translation(-k.to_i64().unwrap_or(0));
                t = m.apply(&t)?;
            }
            return Ok(t);
        };
        let (g, a, negb) = ext_gcd(d, c);
        debug_assert_eq!(g, 1);
        let b = -negb;
        let gamma = MobiusMap {
            a: Integer::from(a),
            b: Integer::from(b),
            c: Integer::from(c),
            d: Integer::from(d),
        };
        debug_assert_eq!(gamma.det(), Integer::from(1));
        t = gamma.apply(&t)?;
    }
    Err(Error::Internal("Gamma_0 reduction did not stabilize".into()))
}

fn gcd_i64(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd_i64(b, a % b)
    }
}

/// (g, x, y) with a x + b y = g.
fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        if a < 0 {
            (-a, -1, 0)
        } else {
            (a, 1, 0)
        }
    } else {
        let (g, x, y) = ext_gcd(b, a.rem_euclid(b));
        (g, y, x - a.div_euclid(b) * y)
    }
}

/// A modular parameterization phi: X_0(N) -> E. lambda is the smallest
/// rational (numerator and denominator up to 12) with
/// lambda Lambda_f inside Lambda_E.
pub struct ParamMap {
    pub curve: CurveQ,
    pub level: u32,
    pub lattice: Lattice2,
    pub lambda: Rational,
    pub fricke_eps: i32,
    pub an: Arc<Vec<i64>>,
    prec: u32,
    /// z_f at the Fricke fixed point i/sqrt(N), cached for cusp evaluation.
    zf_fixed: ComplexBall,
}

impl ParamMap {
    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn new(curve: &CurveQ, prec: u32) -> Result<ParamMap> {
        let work = prec + 32;
        let cond = conductor(curve)?;
        let level = cond.to_u32().ok_or_else(|| {
            Error::InvalidInput(format!("conductor {cond} beyond desk scale"))
        })?;
        let lattice = periods(curve, work)?;
        let t_max = needed_truncation(work, 1.0 / (3.0 * level as f64));
        let an = an_coefficients(curve, t_max)?;

        // sample periods of Lambda_f from Gamma_0(N) elements:
        // P(gamma) = z_f((a + i)/c) - z_f((-d + i)/c) for gamma = (a b; c d)
        let mut samples: Vec<ComplexBall> = Vec::new();
        for mult in 1..=3u32 {
            let c = (mult * level) as i64;
            let mut found = 0;
            for d in 1..c.max(2) {
                if gcd_i64(c, d) != 1 {
                    continue;
                }
                let (g, a, negb) = ext_gcd(d, c);
                if g != 1 {
                    continue;
                }
                let b = -negb;
                debug_assert_eq!(a * d - b * c, 1);
                let t1 = needed_truncation(work, 1.0 / c as f64);
                let series = zf_qseries(&an, t1)?;
                let mk = |re_num: i64| -> ComplexBall {
                    let re = RealBall::from_rational(&Rational::from((re_num, c)), work);
                    let im = RealBall::from_rational(&Rational::from((1, c)), work);
                    ComplexBall::new(re, im)
                };
                let z1 = series.eval_tau(&mk(a), work)?;
                let z0 = series.eval_tau(&mk(-d), work)?;
                samples.push(z1.sub(&z0));
                found += 1;
                if found >= 6 {
                    break;
                }
            }
        }
        let (w1, w2) = lagrange_basis(&samples)?;

        // smallest rational lambda with lambda Lambda_f inside Lambda_E
        let mut candidates: Vec<Rational> = Vec::new();
        for q in 1..=12u32 {
            for p in 1..=12u32 {
                candidates.push(Rational::from((p, q)));
            }
        }
        candidates.sort();
        candidates.dedup();
        let mut lambda: Option<Rational> = None;
        'search: for cand in candidates {
            let lb = RealBall::from_rational(&cand, work);
            for w in [&w1, &w2] {
                let img = w.mul_real(&lb);
                let (al, be) = lattice.coordinates(&img)?;
                for c in [al, be] {
                    let (_, dist) = c.round_to_integer();
                    if dist.to_f64() > 1e-12 {
                        continue 'search;
                    }
                }
            }
            lambda = Some(cand);
            break;
        }
        let lambda = lambda.ok_or_else(|| {
            Error::Internal(
                "no lattice-matching scalar with numerator, denominator <= 12".into(),
            )
        })?;

        // Fricke eigenvalue from f(w tau) = eps N tau^2 f(tau)
        let eps = {
            let t1 = ComplexBall::from_f64s(
                0.131 / (level as f64).sqrt(),
                1.043 / (level as f64).sqrt(),
                work,
            );
            let wt = fricke_apply(&t1, level, work)?;
            let tser =
                f_qseries(&an, needed_truncation(work, 0.9 / (level as f64).sqrt()))?;
            let f1 = tser.eval_tau(&t1, work)?;
            let f2 = tser.eval_tau(&wt, work)?;
            let ratio = f2.div(&t1.square().mul(&f1).mul_i64(level as i64))?;
            let r = ratio.re_f64();
            if ratio.im_f64().abs() > 0.1 || (r.abs() - 1.0).abs() > 0.1 {
                return Err(Error::Internal(format!(
                    "Fricke eigenvalue not +-1: ({}, {})",
                    r,
                    ratio.im_f64()
                )));
            }
            if r > 0.0 {
                1
            } else {
                -1
            }
        };

        let zf_fixed = {
            let im = RealBall::from_i64(level as i64, work).sqrt()?.recip(work)?;
            let tau0 = ComplexBall::new(RealBall::zero(work), im);
            let series =
                zf_qseries(&an, needed_truncation(work, 1.0 / (level as f64).sqrt()))?;
            series.eval_tau(&tau0, work)?
        };

        Ok(ParamMap {
            curve: curve.clone(),
            level,
            lattice,
            lambda,
            fricke_eps: eps,
            an,
            prec,
            zf_fixed,
        })
    }

    /// z = lambda z_f(tau) canonical in the fundamental parallelogram, and
    /// the corresponding complex point of E.
    pub fn phi_tau(&self, tau: &ComplexBall, prec: u32) -> Result<(ComplexBall, CPoint)> {
        let work = prec + 32;
        let reduced = gamma0_reduce(tau, self.level, work)?;
        let im = reduced.im_f64();
        if im <= 0.0 {
            return Err(Error::NotUpperHalfPlane);
        }
        let t = needed_truncation(work, im);
        let an = if t < self.an.len() {
            self.an.clone()
        } else {
            an_coefficients(&self.curve, t + 32)?
        };
        let series = zf_qseries(&an, t)?;
        let zf = series.eval_tau(&reduced, work)?;
        let z = zf.mul_real(&RealBall::from_rational(&self.lambda, work));
        let z = self.lattice.canonical(&z)?.set_prec(prec);
        let point = weierstrass_point(&self.curve, &self.lattice, &z, prec)?;
        Ok((z, point))
    }

    /// Evaluation at the cusps: infinity maps to the origin; 0 maps through
    /// the Fricke involution, z(0) = (1 - eps) lambda z_f(i / sqrt N).
    pub fn phi_cusp(&self, cusp: Cusp, prec: u32) -> Result<(ComplexBall, CPoint)> {
        match cusp {
            Cusp::Infinity => Ok((ComplexBall::zero(prec), CPoint::Infinity)),
            Cusp::Zero => {
                let work = self.prec + 32;
                let z = self
                    .zf_fixed
                    .mul_i64((1 - self.fricke_eps) as i64)
                    .mul_real(&RealBall::from_rational(&self.lambda, work));
                let z = self.lattice.canonical(&z)?.set_prec(prec);
                let point = weierstrass_point(&self.curve, &self.lattice, &z, prec)?;
                Ok((z, point))
            }
            Cusp::Other(s) => Err(Error::UnsupportedCusp(s)),
        }
    }

    /// phi at an exact CM point of X_0(N).
    pub fn phi_cm(&self, point: &TauPoint, prec: u32) -> Result<(ComplexBall, CPoint)> {
        self.phi_tau(&point.tau_ball(prec + 32), prec)
    }
}

/// Cusp arguments accepted by the parameterization.
pub enum Cusp {
    Infinity,
    Zero,
    Other(String),
}

fn fricke_apply(tau: &ComplexBall, level: u32, prec: u32) -> Result<ComplexBall> {
    let nt = tau.set_prec(prec).mul_i64(level as i64);
    ComplexBall::one(prec).neg().div(&nt)
}

/// Lagrange-reduce period samples to a rank-2 basis with Im(w2/w1) > 0.
fn lagrange_basis(samples: &[ComplexBall]) -> Result<(ComplexBall, ComplexBall)> {
    let tol = 1e-14f64;
    let mut basis: Vec<ComplexBall> = Vec::new();
    let mut work: Vec<ComplexBall> = samples.to_vec();
    work.sort_by(|a, b| {
        a.abs_upper()
            .to_f64()
            .partial_cmp(&b.abs_upper().to_f64())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let scale = work
        .iter()
        .map(|v| v.abs_upper().to_f64())
        .fold(0.0f64, f64::max)
        .max(1e-30);
    for s in work {
        let mut v = s;
        for _ in 0..64 {
            let before = v.abs_upper().to_f64();
            for b in &basis {
                let bb = b.norm_sq();
                if bb.contains_zero() {
                    continue;
                }
                let dot = v.re().mul(&b.re()).add(&v.im().mul(&b.im()));
                let q = dot.div(&bb)?;
                let (k, _) = q.round_to_integer();
                if !k.is_zero() {
                    v = v.sub(&b.mul_i64(k.to_i64().unwrap_or(0)));
                }
            }
            if v.abs_upper().to_f64() >= before * 0.999 {
                break;
            }
        }
        if v.abs_upper().to_f64() > tol * scale {
            basis.push(v);
            basis.sort_by(|a, b| {
                a.abs_upper()
                    .to_f64()
                    .partial_cmp(&b.abs_upper().to_f64())
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
            if basis.len() > 2 {
                basis.truncate(2);
            }
            if basis.len() == 2 {
                for _ in 0..64 {
                    let (b1, b2) = (basis[0].clone(), basis[1].clone());
                    let bb = b1.norm_sq();
                    let dot = b2.re().mul(&b1.re()).add(&b2.im().mul(&b1.im()));
                    let q = dot.div(&bb)?;
                    let (k, _) = q.round_to_integer();
                    let mut nb2 = b2.clone();
                    if !k.is_zero() {
                        nb2 = nb2.sub(&b1.mul_i64(k.to_i64().unwrap_or(0)));
                    }
                    if nb2.abs_upper().to_f64() < b1.abs_upper().to_f64() {
                        basis[1] = basis[0].clone();
                        basis[0] = nb2;
                    } else {
                        basis[1] = nb2;
                        break;
                    }
                }
            }
        }
    }
    if basis.len() != 2 {
        return Err(Error::Internal(format!(
            "period samples spanned rank {} instead of 2",
            basis.len()
        )));
    }
    let (w1, mut w2) = (basis[0].clone(), basis[1].clone());
    let cross = w1.re().mul(&w2.im()).sub(&w1.im().mul(&w2.re()));
    if cross.mid().is_sign_negative() {
        w2 = w2.neg();
    }
    Ok((w1, w2))
}

/// One Galois conjugate of a Heegner point.
pub struct HeegnerConjugate {
    pub form: QuadForm,
    pub z: ComplexBall,
    pub point: CPoint,
    /// minimal polynomial of the x-coordinate when recognition succeeded
    pub x_minpoly: Option<IntPoly>,
    /// the exact rational point when x is rational and the point verifies
    pub rational: Option<Point>,
}

pub struct HeegnerPointResult {
    pub conjugates: Vec<HeegnerConjugate>,
    pub trace_z: ComplexBall,
    pub trace_point: CPoint,
    pub trace_rational: Option<Point>,
}

/// Evaluate phi at every Heegner form of (disc, N), recognize x-coordinates
/// algebraically (degree bounded by the class number), and form the trace.
pub fn heegner_point(pm: &ParamMap, d: &Disc, prec: u32) -> Result<HeegnerPointResult> {
    let forms = heegner_forms(d, pm.level)?;
    if forms.is_empty() {
        return Err(Error::HeegnerHypothesisFails { disc: d.to_i64(), level: pm.level });
    }
    let h = forms.len();
    let height_bound = Integer::from(10).pow(12);
    let mut conjugates = Vec::with_capacity(h);
    let mut trace = ComplexBall::zero(prec + 32);
    for f in forms {
        let tp = TauPoint::new(f.clone());
        let (z, point) = pm.phi_cm(&tp, prec)?;
        trace = trace.add(&z.set_prec(prec + 32));
        let (x_minpoly, rational) = match &point {
            CPoint::Infinity => (None, Some(Point::Infinity)),
            CPoint::Affine { x, .. } => {
                let mp = recognize_algebraic(x, h, &height_bound, prec).unwrap_or(None);
                let rat = mp
                    .as_ref()
                    .filter(|p| p.degree() == 1)
                    .and_then(|p| rational_point_from_x(&pm.curve, p, &point));
                (mp, rat)
            }
        };
        conjugates.push(HeegnerConjugate { form: f, z, point, x_minpoly, rational });
    }
    let trace_z = pm.lattice.canonical(&trace)?.set_prec(prec);
    let trace_point = weierstrass_point(&pm.curve, &pm.lattice, &trace_z, prec)?;
    let trace_rational = match &trace_point {
        CPoint::Infinity => Some(Point::Infinity),
        CPoint::Affine { x, .. } => recognize_algebraic(x, 1, &Integer::from(10).pow(14), prec)
            .unwrap_or(None)
            .filter(|p| p.degree() == 1)
            .and_then(|p| rational_point_from_x(&pm.curve, &p, &trace_point)),
    };
    Ok(HeegnerPointResult { conjugates, trace_z, trace_point, trace_rational })
}

/// Turn a degree-1 minimal polynomial of x into an exact on-curve point,
/// choosing the y branch that matches the numeric point.
pub fn rational_point_from_x(
    curve: &CurveQ,
    minpoly: &IntPoly,
    numeric: &CPoint,
) -> Option<Point> {
    let x = Rational::from((-minpoly.coeffs[0].clone(), minpoly.coeffs[1].clone()));
    let s: Rational = Rational::from(&curve.a1 * &x) + &curve.a3;
    let rhs: Rational = x.clone().square() * &x
        + Rational::from(&curve.a2 * &x) * &x
        + Rational::from(&curve.a4 * &x)
        + &curve.a6;
    // y^2 + s y = rhs: y = (-s +- sqrt(s^2 + 4 rhs)) / 2
    let disc: Rational = s.clone().square() + Rational::from(4) * rhs;
    if disc.cmp0() == std::cmp::Ordering::Less {
        return None;
    }
    let num = disc.numer().clone();
    let den = disc.denom().clone();
    if !num.is_perfect_square() || !den.is_perfect_square() {
        return None;
    }
    let root = Rational::from((num.sqrt(), den.sqrt()));
    let y_target = match numeric {
        CPoint::Affine { y, .. } => y.re_f64(),
        CPoint::Infinity => return Some(Point::Infinity),
    };
    let mut best: Option<Point> = None;
    let mut best_d = f64::INFINITY;
    for sgn in [1i32, -1] {
        let r = if sgn == 1 { root.clone() } else { -root.clone() };
        let y: Rational = (r - &s) / Rational::from(2);
        let d = (y.to_f64() - y_target).abs();
        let p = Point::Affine { x: x.clone(), y };
        if crate::elliptic::on_curve(curve, &p) && d < best_d {
            best_d = d;
            best = Some(p);
        }
    }
    best
}

/// A correspondence V = phi composed with the degree-M Hecke relation.
pub struct CorrespondenceSpec {
    pub param: Arc<ParamMap>,
    pub hecke_degree: u32,
}

impl CorrespondenceSpec {
    pub fn graph(param: Arc<ParamMap>) -> Self {
        CorrespondenceSpec { param, hecke_degree: 1 }
    }

    pub fn hecke(param: Arc<ParamMap>, m: u32) -> Result<Self> {
        if m < 1 || m > crate::modular::modpoly::MAX_LEVEL {
            return Err(Error::UnsupportedLevel(m));
        }
        Ok(CorrespondenceSpec { param, hecke_degree: m })
    }
}

/// One V-image of a CM point.
pub struct VImage {
    /// branch (a, b, d): tau' = (a tau + b) / d with a d = M
    pub branch: (u32, u32, u32),
    pub neighbor: TauPoint,
    pub z: ComplexBall,
    pub point: CPoint,
}

/// The exact CM point (a tau + b) / d for a form tau: substituting
/// tau = (d tau' - b)/a gives a primitive form of disc (ad)^2 D / content^2.
pub fn transform_form(f: &QuadForm, a: u32, b: u32, d: u32) -> Result<QuadForm> {
    let (a0, b0, c0) = (&f.a, &f.b, &f.c);
    let (ai, bi, di) = (Integer::from(a), Integer::from(b), Integer::from(d));
    let a_new: Integer = a0 * (&di * &di).complete();
    let b_new: Integer =
        Integer::from(-2) * (a0 * &bi).complete() * &di + (b0 * &ai).complete() * &di;
    let c_new: Integer = a0 * (&bi * &bi).complete() - (b0 * &ai).complete() * &bi
        + c0 * (&ai * &ai).complete();
    let g = a_new.clone().gcd(&b_new).gcd(&c_new);
    let (mut a2, mut b2, mut c2) = (a_new / &g, b_new / &g, c_new / &g);
    if a2.is_negative() {
        a2 = -a2;
        b2 = -b2;
        c2 = -c2;
    }
    QuadForm::new(a2, b2, c2)
}

/// All V-images of a CM point: for M = 1 just phi(s); for M > 1, phi at the
/// psi(M) isogeny branches of s.
pub fn v_images(cs: &CorrespondenceSpec, s: &TauPoint, prec: u32) -> Result<Vec<VImage>> {
    let pm = &cs.param;
    if cs.hecke_degree == 1 {
        let (z, point) = pm.phi_cm(s, prec)?;
        return Ok(vec![VImage { branch: (1, 0, 1), neighbor: s.clone(), z, point }]);
    }
    let reps = crate::modular::modpoly::isogeny_reps(cs.hecke_degree);
    let mut out = Vec::with_capacity(reps.len());
    for (a, b, d) in reps {
        let nf = transform_form(s.form(), a, b, d)?;
        let neighbor = TauPoint::new(nf);
        let (z, point) = pm.phi_cm(&neighbor, prec)?;
        out.push(VImage { branch: (a, b, d), neighbor, z, point });
    }
    Ok(out)
}
