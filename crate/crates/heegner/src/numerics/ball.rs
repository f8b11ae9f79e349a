//! Ball arithmetic over MPFR floats.
//!
//! A [`RealBall`] is a midpoint at working precision together with a
//! low-precision radius that is always rounded upward, so the true value is
//! certified to lie in [mid - rad, mid + rad]. Every operation propagates
//! radii monotonically: the output radius bounds both the input radii pushed
//! through the operation and the rounding of the midpoint itself.
//! [`ComplexBall`] is the componentwise complex analogue; its `err` is an
//! upper bound for the Euclidean distance to the true complex value.

use rug::float::{Constant, Round};
use rug::ops::{AddAssignRound, DivAssignRound, MulAssignRound, SubAssignRound};
use rug::{Float, Integer, Rational};

use crate::{Error, Result};

/// Bits of precision carried by radii. Radii only need an order of magnitude.
const RAD_PREC: u32 = 32;

fn rad_zero() -> Float {
    Float::new(RAD_PREC)
}

/// Upper bound for the rounding error of a nearest-rounded midpoint: one ulp,
/// 2^(exp - prec). Exact zeros carry no rounding error.
fn ulp(x: &Float) -> Float {
    if x.is_zero() {
        return rad_zero();
    }
    let e = x.get_exp().unwrap_or(0);
    let mut u = Float::with_val(RAD_PREC, 1);
    u <<= e - x.prec() as i32;
    u
}

fn rad_add(a: &Float, b: &Float) -> Float {
    let mut r = Float::with_val_round(RAD_PREC, a, Round::Up).0;
    r.add_assign_round(b, Round::Up);
    r
}

fn rad_mul(a: &Float, b: &Float) -> Float {
    let mut r = Float::with_val_round(RAD_PREC, a, Round::Up).0;
    r.mul_assign_round(b, Round::Up);
    r
}

/// Round an already-computed difference up into a radius.
fn rad_of(x: Float) -> Float {
    let mut r = Float::with_val_round(RAD_PREC, &x, Round::Up).0;
    if r.is_sign_negative() {
        r = rad_zero();
    }
    r
}

/// A certified enclosure of a real number.
#[derive(Clone, Debug)]
pub struct RealBall {
    mid: Float,
    rad: Float,
}

impl RealBall {
    pub fn zero(prec: u32) -> Self {
        RealBall { mid: Float::new(prec), rad: rad_zero() }
    }

    pub fn one(prec: u32) -> Self {
        RealBall { mid: Float::with_val(prec, 1), rad: rad_zero() }
    }

    /// Exact integer input: no radius.
    pub fn from_integer(n: &Integer, prec: u32) -> Self {
        let mid = Float::with_val(prec, n);
        let rad = ulp(&mid);
        RealBall { mid, rad }
    }

    pub fn from_i64(n: i64, prec: u32) -> Self {
        RealBall::from_integer(&Integer::from(n), prec)
    }

    pub fn from_rational(q: &Rational, prec: u32) -> Self {
        let mid = Float::with_val(prec, q);
        let rad = ulp(&mid);
        RealBall { mid, rad }
    }

    pub fn from_f64(x: f64, prec: u32) -> Self {
        let mid = Float::with_val(prec, x);
        RealBall { mid, rad: rad_zero() }
    }

    /// Wrap an already-rounded float, charging one ulp of radius.
    pub fn from_float(mid: Float) -> Self {
        let rad = ulp(&mid);
        RealBall { mid, rad }
    }

    pub fn pi(prec: u32) -> Self {
        let mid = Float::with_val(prec, Constant::Pi);
        let rad = ulp(&mid);
        RealBall { mid, rad }
    }

    pub fn with_rad(mid: Float, rad: Float) -> Self {
        debug_assert!(!rad.is_sign_negative());
        RealBall { mid, rad }
    }

    pub fn mid(&self) -> &Float {
        &self.mid
    }

    pub fn rad(&self) -> &Float {
        &self.rad
    }

    pub fn prec(&self) -> u32 {
        self.mid.prec()
    }

    pub fn to_f64(&self) -> f64 {
        self.mid.to_f64()
    }

    pub fn rad_f64(&self) -> f64 {
        self.rad.to_f64()
    }

    /// Upper bound of |value| over the ball.
    pub fn abs_upper(&self) -> Float {
        let mut a = self.mid.clone().abs();
        a.add_assign_round(&self.rad, Round::Up);
        a
    }

    /// Lower bound of |value| over the ball (clamped at 0).
    pub fn abs_lower(&self) -> Float {
        let mut a = self.mid.clone().abs();
        a.sub_assign_round(&self.rad, Round::Down);
        if a.is_sign_negative() {
            a = Float::new(RAD_PREC);
        }
        a
    }

    pub fn upper(&self) -> Float {
        let mut u = self.mid.clone();
        u.add_assign_round(&self.rad, Round::Up);
        u
    }

    pub fn lower(&self) -> Float {
        let mut l = self.mid.clone();
        l.sub_assign_round(&self.rad, Round::Down);
        l
    }

    pub fn contains_zero(&self) -> bool {
        self.mid.clone().abs() <= self.rad
    }

    /// Certified strict sign: +1 or -1 when the ball excludes zero.
    pub fn sign_certified(&self) -> Option<i32> {
        if self.contains_zero() {
            None
        } else if self.mid.is_sign_positive() {
            Some(1)
        } else {
            Some(-1)
        }
    }

    /// Certified comparison with another ball (None when they overlap).
    pub fn cmp_certified(&self, other: &RealBall) -> Option<std::cmp::Ordering> {
        self.sub(other).sign_certified().map(|s| {
            if s > 0 {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Less
            }
        })
    }

    pub fn neg(&self) -> RealBall {
        RealBall { mid: (-self.mid.clone()).into(), rad: self.rad.clone() }
    }

    pub fn abs(&self) -> RealBall {
        RealBall { mid: self.mid.clone().abs(), rad: self.rad.clone() }
    }

    pub fn add(&self, other: &RealBall) -> RealBall {
        let mid = Float::with_val(self.prec().max(other.prec()), &self.mid + &other.mid);
        let rad = rad_add(&rad_add(&self.rad, &other.rad), &ulp(&mid));
        RealBall { mid, rad }
    }

    pub fn sub(&self, other: &RealBall) -> RealBall {
        let mid = Float::with_val(self.prec().max(other.prec()), &self.mid - &other.mid);
        let rad = rad_add(&rad_add(&self.rad, &other.rad), &ulp(&mid));
        RealBall { mid, rad }
    }

    pub fn mul(&self, other: &RealBall) -> RealBall {
        let prec = self.prec().max(other.prec());
        let mid = Float::with_val(prec, &self.mid * &other.mid);
        // |xy - ab| <= ra(|b|+rb) + |a| rb
        let t1 = rad_mul(&self.rad, &other.abs_upper());
        let t2 = rad_mul(&self.mid.clone().abs(), &other.rad);
        let rad = rad_add(&rad_add(&t1, &t2), &ulp(&mid));
        RealBall { mid, rad }
    }

    pub fn mul_i64(&self, k: i64) -> RealBall {
        let mid = Float::with_val(self.prec(), &self.mid * k);
        let rad = rad_add(&rad_mul(&self.rad, &Float::with_val(RAD_PREC, k.unsigned_abs())), &ulp(&mid));
        RealBall { mid, rad }
    }

    /// Exact scaling by a power of two.
    pub fn shl(&self, k: i32) -> RealBall {
        let mut mid = self.mid.clone();
        mid <<= k;
        let mut rad = self.rad.clone();
        rad <<= k;
        RealBall { mid, rad }
    }

    /// Division; the divisor ball must exclude zero.
    pub fn div(&self, other: &RealBall) -> Result<RealBall> {
        let blo = other.abs_lower();
        if blo.is_zero() {
            return Err(Error::Indeterminate("division by ball containing zero".into()));
        }
        let prec = self.prec().max(other.prec());
        let mid = Float::with_val(prec, &self.mid / &other.mid);
        // |x/y - a/b| <= (|a/b| rb + ra) / (|b| - rb)
        let num = rad_add(&rad_mul(&mid.clone().abs(), &other.rad), &self.rad);
        let mut rad = num;
        rad.div_assign_round(&blo, Round::Up);
        let rad = rad_add(&rad, &ulp(&mid));
        Ok(RealBall { mid, rad })
    }

    pub fn recip(&self, prec: u32) -> Result<RealBall> {
        RealBall::one(prec).div(self)
    }

    pub fn square(&self) -> RealBall {
        self.mul(self)
    }

    pub fn sqrt(&self) -> Result<RealBall> {
        let lo = self.lower();
        if self.upper().is_sign_negative() {
            return Err(Error::Indeterminate("sqrt of ball below zero".into()));
        }
        let prec = self.prec();
        let mid = Float::with_val(prec, self.mid.clone().abs().sqrt());
        let mut slo = if lo.is_sign_negative() { Float::new(prec) } else { lo };
        slo.sqrt_round(Round::Down);
        let mut shi = self.upper();
        shi.sqrt_round(Round::Up);
        let d1 = rad_of(shi - &mid);
        let d2 = rad_of(mid.clone() - &slo);
        let rad = rad_add(&if d1 > d2 { d1 } else { d2 }, &ulp(&mid));
        Ok(RealBall { mid, rad })
    }

    /// Monotone transcendental maps evaluated by endpoint enclosure.
    fn monotone(&self, f: impl Fn(Float, Round) -> Float) -> RealBall {
        let prec = self.prec();
        let mid = f(Float::with_val(prec, &self.mid), Round::Nearest);
        let lo = f(self.lower(), Round::Down);
        let hi = f(self.upper(), Round::Up);
        let d1 = rad_of(hi - &mid);
        let d2 = rad_of(mid.clone() - &lo);
        let rad = rad_add(&if d1 > d2 { d1 } else { d2 }, &ulp(&mid));
        RealBall { mid, rad }
    }

    pub fn exp(&self) -> RealBall {
        self.monotone(|mut x, r| {
            x.exp_round(r);
            x
        })
    }

    pub fn ln(&self) -> Result<RealBall> {
        if self.lower() <= 0 {
            return Err(Error::Indeterminate("log of ball reaching zero".into()));
        }
        Ok(self.monotone(|mut x, r| {
            x.ln_round(r);
            x
        }))
    }

    /// sin and cos together; |derivative| <= 1 so radii transfer directly.
    pub fn sin_cos(&self) -> (RealBall, RealBall) {
        let prec = self.prec();
        let (s, c) = self.mid.clone().sin_cos(Float::new(prec));
        let rs = rad_add(&self.rad, &ulp(&s));
        let rc = rad_add(&self.rad, &ulp(&c));
        (RealBall { mid: s, rad: rs }, RealBall { mid: c, rad: rc })
    }

    /// atan2(self, x); the ball (x, self) must exclude the origin.
    pub fn atan2(&self, x: &RealBall) -> Result<RealBall> {
        let r2 = self.square().add(&x.square());
        let rlo2 = r2.abs_lower();
        if rlo2.is_zero() {
            return Err(Error::Indeterminate("atan2 near origin".into()));
        }
        let mid = self.mid.clone().atan2(&x.mid);
        // |grad atan2| = 1/r
        let mut rlo = rlo2;
        rlo.sqrt_round(Round::Down);
        let mut rad = rad_add(&self.rad, &x.rad);
        rad.div_assign_round(&rlo, Round::Up);
        let rad = rad_add(&rad, &ulp(&mid));
        Ok(RealBall { mid, rad })
    }

    /// Nearest integer to the midpoint plus a certified bound on the distance
    /// from that integer to every point of the ball.
    pub fn round_to_integer(&self) -> (Integer, Float) {
        let n = self.mid.clone().round().to_integer().unwrap_or_default();
        let diff = Float::with_val(RAD_PREC, &self.mid - &n).abs();
        (n, rad_add(&diff, &self.rad))
    }

    /// Widen the radius by an externally certified amount (e.g. a series tail).
    pub fn add_error(&self, extra: &Float) -> RealBall {
        RealBall { mid: self.mid.clone(), rad: rad_add(&self.rad, &Float::with_val(RAD_PREC, extra)) }
    }

    /// Round the midpoint to a (usually lower) precision, charging the radius.
    pub fn set_prec(&self, prec: u32) -> RealBall {
        let mid = Float::with_val(prec, &self.mid);
        let rad = rad_add(&self.rad, &ulp(&mid));
        RealBall { mid, rad }
    }
}

/// A certified enclosure of a complex number: a midpoint and a disk
/// radius. The disk model keeps radii contractive under multiplication by
/// numbers of modulus below one; a per-component box model would grow by
/// the L1 norm of the factor, which exceeds 1 for generic rotations.
#[derive(Clone, Debug)]
pub struct ComplexBall {
    mre: Float,
    mim: Float,
    rad: Float,
}

fn hypot_upper(a: &Float, b: &Float) -> Float {
    let au = Float::with_val_round(RAD_PREC, a, Round::Up).0.abs();
    let bu = Float::with_val_round(RAD_PREC, b, Round::Up).0.abs();
    // round the squares up; the signed rounding direction of the inputs is
    // absorbed by one extra ulp of slack
    let mut h = rad_mul(&au, &au);
    h.add_assign_round(&rad_mul(&bu, &bu), Round::Up);
    h.sqrt_round(Round::Up);
    h.mul_assign_round(&Float::with_val(RAD_PREC, 1.0 + 1e-6), Round::Up);
    h
}

impl ComplexBall {
    pub fn new(re: RealBall, im: RealBall) -> Self {
        let rad = rad_add(re.rad(), im.rad());
        ComplexBall { mre: re.mid, mim: im.mid, rad }
    }

    pub fn zero(prec: u32) -> Self {
        ComplexBall { mre: Float::new(prec), mim: Float::new(prec), rad: rad_zero() }
    }

    pub fn one(prec: u32) -> Self {
        ComplexBall { mre: Float::with_val(prec, 1), mim: Float::new(prec), rad: rad_zero() }
    }

    pub fn from_real(re: RealBall) -> Self {
        let prec = re.prec();
        ComplexBall { mre: re.mid, mim: Float::new(prec), rad: re.rad }
    }

    pub fn from_integer(n: &Integer, prec: u32) -> Self {
        ComplexBall::from_real(RealBall::from_integer(n, prec))
    }

    pub fn from_f64s(re: f64, im: f64, prec: u32) -> Self {
        ComplexBall { mre: Float::with_val(prec, re), mim: Float::with_val(prec, im), rad: rad_zero() }
    }

    pub fn prec(&self) -> u32 {
        self.mre.prec().max(self.mim.prec())
    }

    /// The real part as an enclosure (component error is at most the disk
    /// radius).
    pub fn re(&self) -> RealBall {
        RealBall { mid: self.mre.clone(), rad: self.rad.clone() }
    }

    pub fn im(&self) -> RealBall {
        RealBall { mid: self.mim.clone(), rad: self.rad.clone() }
    }

    pub fn re_mid(&self) -> &Float {
        &self.mre
    }

    pub fn im_mid(&self) -> &Float {
        &self.mim
    }

    pub fn re_f64(&self) -> f64 {
        self.mre.to_f64()
    }

    pub fn im_f64(&self) -> f64 {
        self.mim.to_f64()
    }

    /// Upper bound for the distance from the midpoint to the true value.
    pub fn err(&self) -> Float {
        self.rad.clone()
    }

    pub fn to_f64s(&self) -> (f64, f64) {
        (self.mre.to_f64(), self.mim.to_f64())
    }

    pub fn add(&self, other: &ComplexBall) -> ComplexBall {
        let prec = self.prec().max(other.prec());
        let mre = Float::with_val(prec, &self.mre + &other.mre);
        let mim = Float::with_val(prec, &self.mim + &other.mim);
        let mut rad = rad_add(&self.rad, &other.rad);
        rad.add_assign_round(&rad_add(&ulp(&mre), &ulp(&mim)), Round::Up);
        ComplexBall { mre, mim, rad }
    }

    pub fn sub(&self, other: &ComplexBall) -> ComplexBall {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> ComplexBall {
        ComplexBall {
            mre: (-self.mre.clone()).into(),
            mim: (-self.mim.clone()).into(),
            rad: self.rad.clone(),
        }
    }

    pub fn conj(&self) -> ComplexBall {
        ComplexBall {
            mre: self.mre.clone(),
            mim: (-self.mim.clone()).into(),
            rad: self.rad.clone(),
        }
    }

    /// |z w - mz mw| <= rz (|mw| + rw) + |mz| rw plus midpoint rounding.
    pub fn mul(&self, other: &ComplexBall) -> ComplexBall {
        let prec = self.prec().max(other.prec());
        let mre = Float::with_val(prec, &self.mre * &other.mre)
            - Float::with_val(prec, &self.mim * &other.mim);
        let mim = Float::with_val(prec, &self.mre * &other.mim)
            + Float::with_val(prec, &self.mim * &other.mre);
        let mz = hypot_upper(&self.mre, &self.mim);
        let mw = hypot_upper(&other.mre, &other.mim);
        let mut mw_plus = mw;
        mw_plus.add_assign_round(&other.rad, Round::Up);
        let mut rad = rad_mul(&self.rad, &mw_plus);
        rad.add_assign_round(&rad_mul(&mz, &other.rad), Round::Up);
        let mut u = rad_add(&ulp(&mre), &ulp(&mim));
        u <<= 2;
        rad.add_assign_round(&u, Round::Up);
        ComplexBall { mre, mim, rad }
    }

    pub fn mul_real(&self, other: &RealBall) -> ComplexBall {
        let prec = self.prec().max(other.prec());
        let mre = Float::with_val(prec, &self.mre * &other.mid);
        let mim = Float::with_val(prec, &self.mim * &other.mid);
        let mz = hypot_upper(&self.mre, &self.mim);
        let mut w_plus = Float::with_val_round(RAD_PREC, &other.mid, Round::Up).0.abs();
        w_plus.add_assign_round(&other.rad, Round::Up);
        let mut rad = rad_mul(&self.rad, &w_plus);
        rad.add_assign_round(&rad_mul(&mz, &other.rad), Round::Up);
        let mut u = rad_add(&ulp(&mre), &ulp(&mim));
        u <<= 1;
        rad.add_assign_round(&u, Round::Up);
        ComplexBall { mre, mim, rad }
    }

    pub fn mul_i64(&self, k: i64) -> ComplexBall {
        let prec = self.prec();
        let mre = Float::with_val(prec, &self.mre * k);
        let mim = Float::with_val(prec, &self.mim * k);
        let mut rad = rad_mul(&self.rad, &Float::with_val(RAD_PREC, k.unsigned_abs()));
        rad.add_assign_round(&rad_add(&ulp(&mre), &ulp(&mim)), Round::Up);
        ComplexBall { mre, mim, rad }
    }

    /// Multiplication by i (exact rotation).
    pub fn mul_i(&self) -> ComplexBall {
        ComplexBall {
            mre: (-self.mim.clone()).into(),
            mim: self.mre.clone(),
            rad: self.rad.clone(),
        }
    }

    /// Exact scaling by a power of two.
    pub fn shl(&self, k: i32) -> ComplexBall {
        let mut mre = self.mre.clone();
        mre <<= k;
        let mut mim = self.mim.clone();
        mim <<= k;
        let mut rad = self.rad.clone();
        rad <<= k;
        ComplexBall { mre, mim, rad }
    }

    pub fn norm_sq(&self) -> RealBall {
        let prec = self.prec();
        let mid = Float::with_val(prec, &self.mre * &self.mre)
            + Float::with_val(prec, &self.mim * &self.mim);
        // |(|z|^2 - |mz|^2)| <= 2 |mz| rad + rad^2
        let mz = hypot_upper(&self.mre, &self.mim);
        let mut rad = rad_mul(&mz, &self.rad);
        rad <<= 1;
        rad.add_assign_round(&rad_mul(&self.rad, &self.rad), Round::Up);
        rad.add_assign_round(&ulp(&mid), Round::Up);
        RealBall { mid, rad }
    }

    pub fn abs(&self) -> Result<RealBall> {
        let prec = self.prec();
        let mid = Float::with_val(
            prec,
            Float::with_val(prec, &self.mre * &self.mre)
                + Float::with_val(prec, &self.mim * &self.mim),
        )
        .sqrt();
        let rad = rad_add(&self.rad, &ulp(&mid));
        Ok(RealBall { mid, rad })
    }

    /// Upper bound of |z| over the ball.
    pub fn abs_upper(&self) -> Float {
        let mut h = hypot_upper(&self.mre, &self.mim);
        h.add_assign_round(&self.rad, Round::Up);
        h
    }

    /// Lower bound of |z| over the ball (clamped at 0).
    pub fn abs_lower(&self) -> Float {
        let au = Float::with_val_round(RAD_PREC, &self.mre, Round::Down).0.abs();
        let bu = Float::with_val_round(RAD_PREC, &self.mim, Round::Down).0.abs();
        let mut h = Float::with_val(RAD_PREC, 0);
        let mut t = Float::with_val(RAD_PREC, &au * &au);
        t.mul_assign_round(&Float::with_val(RAD_PREC, 1.0 - 1e-6), Round::Down);
        h.add_assign_round(&t, Round::Down);
        let mut t2 = Float::with_val(RAD_PREC, &bu * &bu);
        t2.mul_assign_round(&Float::with_val(RAD_PREC, 1.0 - 1e-6), Round::Down);
        h.add_assign_round(&t2, Round::Down);
        h.sqrt_round(Round::Down);
        h.sub_assign_round(&self.rad, Round::Down);
        if h.is_sign_negative() {
            h = Float::new(RAD_PREC);
        }
        h
    }

    pub fn contains_zero(&self) -> bool {
        self.abs_lower().is_zero()
    }

    pub fn div(&self, other: &ComplexBall) -> Result<ComplexBall> {
        let wlo = other.abs_lower();
        if wlo.is_zero() {
            return Err(Error::Indeterminate("division by ball containing zero".into()));
        }
        let prec = self.prec().max(other.prec());
        let den = Float::with_val(prec, &other.mre * &other.mre)
            + Float::with_val(prec, &other.mim * &other.mim);
        let mre = (Float::with_val(prec, &self.mre * &other.mre)
            + Float::with_val(prec, &self.mim * &other.mim))
            / &den;
        let mim = (Float::with_val(prec, &self.mim * &other.mre)
            - Float::with_val(prec, &self.mre * &other.mim))
            / &den;
        // |z/w - mz/mw| <= (|mz/mw| rw + rz) / (|mw| - rw)
        let mq = hypot_upper(&mre, &mim);
        let mut num = rad_mul(&mq, &other.rad);
        num.add_assign_round(&self.rad, Round::Up);
        let mut rad = num;
        rad.div_assign_round(&wlo, Round::Up);
        let mut u = rad_add(&ulp(&mre), &ulp(&mim));
        u <<= 2;
        rad.add_assign_round(&u, Round::Up);
        Ok(ComplexBall { mre, mim, rad })
    }

    pub fn recip(&self, prec: u32) -> Result<ComplexBall> {
        ComplexBall::one(prec).div(self)
    }

    pub fn square(&self) -> ComplexBall {
        self.mul(self)
    }

    pub fn pow_u32(&self, mut e: u32) -> ComplexBall {
        let mut base = self.clone();
        let mut acc = ComplexBall::one(self.prec());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.square();
            }
        }
        acc
    }

    /// exp(z) = e^x (cos y + i sin y); |exp(z) - exp(mz)| <=
    /// |exp(mz)| (e^rad - 1).
    pub fn exp(&self) -> ComplexBall {
        let prec = self.prec();
        let ex = Float::with_val(prec, &self.mre).exp();
        let (s, c) = Float::with_val(prec, &self.mim).sin_cos(Float::new(prec));
        let mre = Float::with_val(prec, &ex * &c);
        let mim = Float::with_val(prec, &ex * &s);
        let mag = {
            let mut m = Float::with_val_round(RAD_PREC, &ex, Round::Up).0;
            m.mul_assign_round(&Float::with_val(RAD_PREC, 1.0 + 1e-6), Round::Up);
            m
        };
        // e^r - 1 rounded up (expm1 keeps tiny radii tiny)
        let growth = {
            let mut r = Float::with_val_round(64, &self.rad, Round::Up).0;
            r.exp_m1_round(Round::Up);
            if r.is_sign_negative() {
                r = Float::new(64);
            }
            Float::with_val_round(RAD_PREC, &r, Round::Up).0
        };
        let mut rad = rad_mul(&mag, &growth);
        let mut u = rad_add(&ulp(&mre), &ulp(&mim));
        u <<= 2;
        rad.add_assign_round(&u, Round::Up);
        ComplexBall { mre, mim, rad }
    }

    /// Principal square root. |sqrt z - sqrt mz| <= rad / sqrt(|mz| - rad)
    /// away from zero; near zero the enclosure falls back to a disk bound.
    pub fn sqrt(&self) -> Result<ComplexBall> {
        let prec = self.prec();
        // midpoint square root by the stable half-angle formulas
        let r = Float::with_val(
            prec,
            Float::with_val(prec, &self.mre * &self.mre)
                + Float::with_val(prec, &self.mim * &self.mim),
        )
        .sqrt();
        let (mre, mim) = if self.mim.is_zero() && !self.mre.is_sign_negative() {
            (Float::with_val(prec, &self.mre).sqrt(), Float::new(prec))
        } else if self.mim.is_zero() {
            (Float::new(prec), Float::with_val(prec, -self.mre.clone()).sqrt())
        } else if !self.mre.is_sign_negative() {
            let re = Float::with_val(prec, Float::with_val(prec, &r + &self.mre) / 2u32).sqrt();
            let im = Float::with_val(prec, &self.mim / &Float::with_val(prec, &re * &Float::with_val(prec, 2)));
            (re, im)
        } else {
            let t = Float::with_val(prec, Float::with_val(prec, &r - &self.mre) / 2u32).sqrt();
            let im = if self.mim.is_sign_negative() { -t.clone() } else { t.clone() };
            let re = Float::with_val(prec, &self.mim / &Float::with_val(prec, &im * &Float::with_val(prec, 2)));
            (re, im)
        };
        let mz_lo = {
            let mut m = Float::with_val_round(RAD_PREC, &r, Round::Down).0;
            m.mul_assign_round(&Float::with_val(RAD_PREC, 1.0 - 1e-6), Round::Down);
            m.sub_assign_round(&self.rad, Round::Down);
            m
        };
        let rad = if mz_lo.is_sign_negative() || mz_lo.is_zero() {
            // disk through zero: |sqrt| <= sqrt(|mz| + rad) everywhere
            let mut t = Float::with_val_round(RAD_PREC, &r, Round::Up).0;
            t.add_assign_round(&self.rad, Round::Up);
            t.sqrt_round(Round::Up);
            t <<= 1;
            t
        } else {
            let mut s = mz_lo;
            s.sqrt_round(Round::Down);
            let mut t = Float::with_val_round(RAD_PREC, &self.rad, Round::Up).0;
            t.div_assign_round(&s, Round::Up);
            t
        };
        let mut rad = rad;
        let mut u = rad_add(&ulp(&mre), &ulp(&mim));
        u <<= 2;
        rad.add_assign_round(&u, Round::Up);
        Ok(ComplexBall { mre, mim, rad })
    }

    pub fn add_error(&self, extra: &Float) -> ComplexBall {
        let mut rad = self.rad.clone();
        rad.add_assign_round(&Float::with_val_round(RAD_PREC, extra, Round::Up).0, Round::Up);
        ComplexBall { mre: self.mre.clone(), mim: self.mim.clone(), rad }
    }

    pub fn set_prec(&self, prec: u32) -> ComplexBall {
        let mre = Float::with_val(prec, &self.mre);
        let mim = Float::with_val(prec, &self.mim);
        let mut rad = self.rad.clone();
        rad.add_assign_round(&rad_add(&ulp(&mre), &ulp(&mim)), Round::Up);
        ComplexBall { mre, mim, rad }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_contains(b: &RealBall, x: f64) {
        let lo = b.lower().to_f64();
        let hi = b.upper().to_f64();
        assert!(lo <= x && x <= hi, "ball [{lo}, {hi}] misses {x}");
    }

    #[test]
    fn arithmetic_encloses() {
        let a = RealBall::from_f64(1.5, 128);
        let b = RealBall::from_f64(2.25, 128);
        assert_contains(&a.add(&b), 3.75);
        assert_contains(&a.mul(&b), 3.375);
        assert_contains(&a.div(&b).unwrap(), 1.5 / 2.25);
        assert_contains(&a.sub(&b), -0.75);
    }

    #[test]
    fn transcendental_enclose() {
        let x = RealBall::from_f64(2.0, 128);
        assert_contains(&x.sqrt().unwrap(), std::f64::consts::SQRT_2);
        assert_contains(&x.exp(), 2.0f64.exp());
        assert_contains(&x.ln().unwrap(), 2.0f64.ln());
        let (s, c) = x.sin_cos();
        assert_contains(&s, 2.0f64.sin());
        assert_contains(&c, 2.0f64.cos());
    }

    #[test]
    fn division_by_zero_ball_rejected() {
        let a = RealBall::from_f64(1.0, 64);
        let z = RealBall::with_rad(Float::with_val(64, 0.001), Float::with_val(32, 0.01));
        assert!(a.div(&z).is_err());
    }

    #[test]
    fn complex_mul_div_roundtrip() {
        let z = ComplexBall::from_f64s(1.25, -0.5, 128);
        let w = ComplexBall::from_f64s(-0.75, 2.0, 128);
        let p = z.mul(&w).div(&w).unwrap();
        let d = p.sub(&z);
        assert!(d.abs_upper().to_f64() < 1e-30);
    }

    #[test]
    fn complex_sqrt_squares_back() {
        for (x, y) in [(2.0, 3.0), (-2.0, 3.0), (-2.0, -3.0), (4.0, 0.0), (0.0, 1.0)] {
            let z = ComplexBall::from_f64s(x, y, 128);
            let s = z.sqrt().unwrap();
            let back = s.square().sub(&z);
            assert!(back.abs_upper().to_f64() < 1e-30, "sqrt failed at ({x}, {y})");
            assert!(!s.re_mid().is_sign_negative() || s.re_mid().is_zero());
        }
    }

    #[test]
    fn exp_of_2pi_i_is_one() {
        let prec = 256;
        let pi = RealBall::pi(prec);
        let z = ComplexBall::new(RealBall::zero(prec), pi.shl(1));
        let e = z.exp();
        assert!(e.sub(&ComplexBall::one(prec)).abs_upper().to_f64() < 1e-70);
    }

    // Error monotonicity on random expression trees: the reported radius must
    // bound the difference against the same computation at twice the precision.
    #[test]
    fn error_monotonicity_random_trees() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let mut lo = RealBall::from_f64(rng.gen_range(0.1..4.0), 96);
            let mut hi = lo.set_prec(192);
            for _ in 0..12 {
                let k = rng.gen_range(0..6);
                let c = rng.gen_range(0.1..3.0);
                let (cl, ch) = (RealBall::from_f64(c, 96), RealBall::from_f64(c, 192));
                match k {
                    0 => {
                        lo = lo.add(&cl);
                        hi = hi.add(&ch);
                    }
                    1 => {
                        lo = lo.mul(&cl);
                        hi = hi.mul(&ch);
                    }
                    2 => {
                        lo = lo.sub(&cl);
                        hi = hi.sub(&ch);
                    }
                    3 => {
                        lo = lo.abs().add(&RealBall::one(96)).sqrt().unwrap();
                        hi = hi.abs().add(&RealBall::one(192)).sqrt().unwrap();
                    }
                    4 => {
                        let (s, _) = lo.sin_cos();
                        let (sh, _) = hi.sin_cos();
                        lo = s;
                        hi = sh;
                    }
                    _ => {
                        lo = lo.div(&cl).unwrap();
                        hi = hi.div(&ch).unwrap();
                    }
                }
            }
            let diff = Float::with_val(32, lo.mid() - hi.mid()).abs();
            assert!(
                diff <= rad_add(lo.rad(), hi.rad()),
                "radius failed to bound precision-doubling difference"
            );
        }
    }
}
