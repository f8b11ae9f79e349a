//! q-expansions with certified geometric tail bounds.
//!
//! A [`QSeries`] stores exact coefficients for exponents n0..=T together with
//! a coefficient-growth model |c_n| <= exp(log_m + a sqrt(n) + p ln n) valid
//! for all n >= 1. Evaluation at a point q in the unit disk sums the stored
//! terms in ball arithmetic and inflates the error by a bound on the dropped
//! tail, obtained by dominating it with a geometric series from the first
//! dropped term.

use rug::float::Round;
use rug::ops::{DivAssignRound, MulAssignRound, SubAssignRound};
use rug::{Float, Rational};

use crate::numerics::ball::{ComplexBall, RealBall};
use crate::{Error, Result};

/// Growth model for the coefficients: |c_n| <= exp(log_m + a*sqrt(n) + p*ln n).
#[derive(Clone, Debug)]
pub struct TailModel {
    pub log_m: f64,
    pub sqrt_coef: f64,
    pub pow_coef: f64,
}

impl TailModel {
    pub fn zero_series() -> Self {
        TailModel { log_m: f64::NEG_INFINITY, sqrt_coef: 0.0, pow_coef: 0.0 }
    }

    /// ln of the coefficient bound at index n (n >= 1).
    fn ln_bound(&self, n: f64) -> f64 {
        self.log_m + self.sqrt_coef * n.sqrt() + self.pow_coef * n.ln()
    }
}

/// A truncated q-expansion sum_{n=n0}^{T} c_n q^n with a tail model.
#[derive(Clone, Debug)]
pub struct QSeries {
    /// Exponent of the first stored coefficient (may be negative, e.g. -1 for j).
    pub n0: i64,
    /// Coefficients for exponents n0, n0+1, ..., n0 + len - 1.
    pub coeffs: Vec<Rational>,
    pub tail: TailModel,
}

impl QSeries {
    pub fn new(n0: i64, coeffs: Vec<Rational>, tail: TailModel) -> Result<Self> {
        if coeffs.is_empty() {
            return Ok(QSeries { n0, coeffs, tail });
        }
        if (n0 + coeffs.len() as i64) < 1 {
            return Err(Error::Internal("truncation order below 1".into()));
        }
        let s = QSeries { n0, coeffs, tail };
        // the model must dominate the stored coefficients it claims to cover
        for (i, c) in s.coeffs.iter().enumerate() {
            let n = s.n0 + i as i64;
            if n < 1 || c.cmp0() == std::cmp::Ordering::Equal {
                continue;
            }
            let ln_c = ln_abs_rational(c);
            if ln_c > s.tail.ln_bound(n as f64) + 1e-9 {
                return Err(Error::Internal(format!(
                    "tail model does not dominate stored coefficient at n={n}"
                )));
            }
        }
        Ok(s)
    }

    /// Truncation order T (largest stored exponent).
    pub fn truncation(&self) -> i64 {
        self.n0 + self.coeffs.len() as i64 - 1
    }

    /// Shorten to truncation order t (used by the two-truncation tail test).
    pub fn truncate_to(&self, t: i64) -> QSeries {
        let keep = ((t - self.n0 + 1).max(0) as usize).min(self.coeffs.len());
        QSeries { n0: self.n0, coeffs: self.coeffs[..keep].to_vec(), tail: self.tail.clone() }
    }

    /// Evaluate at q itself (the caller has already formed q = e^{2 pi i tau}).
    pub fn eval_q(&self, q: &ComplexBall) -> Result<ComplexBall> {
        let prec = q.prec();
        if self.coeffs.is_empty() {
            return Ok(ComplexBall::zero(prec));
        }
        let q_abs_up = q.abs_upper();
        if q_abs_up >= 1 {
            return Err(Error::Indeterminate("q-series evaluated with |q| >= 1".into()));
        }
        // Horner over ascending exponents, then scale by q^{n0}.
        let mut acc = ComplexBall::zero(prec);
        for c in self.coeffs.iter().rev() {
            let cb = ComplexBall::from_real(RealBall::from_rational(c, prec));
            acc = acc.mul(q).add(&cb);
        }
        let scaled = match self.n0 {
            0 => acc,
            n if n > 0 => acc.mul(&q.pow_u32(n as u32)),
            n => acc.div(&q.pow_u32((-n) as u32))?,
        };
        let tail = self.tail_bound(&q_abs_up)?;
        Ok(scaled.add_error(&tail))
    }

    /// Evaluate at tau in the upper half plane: q = e^{2 pi i tau}.
    pub fn eval_tau(&self, tau: &ComplexBall, prec: u32) -> Result<ComplexBall> {
        if tau.im().sign_certified() != Some(1) {
            return Err(Error::NotUpperHalfPlane);
        }
        let q = q_from_tau(tau, prec);
        self.eval_q(&q)
    }

    /// Certified upper bound for |sum_{n > T} c_n q^n| given an upper bound
    /// on |q|. Errors out if the geometric domination fails at this |q|.
    pub fn tail_bound(&self, q_abs_up: &Float) -> Result<Float> {
        if self.tail.log_m == f64::NEG_INFINITY {
            return Ok(Float::new(32));
        }
        let t1 = (self.truncation() + 1) as f64;
        // work with natural logs in 64-bit floats plus generous slack
        let ln_q = {
            let mut l = Float::with_val(64, q_abs_up);
            if l.is_zero() {
                return Ok(Float::new(32));
            }
            l.ln_round(Round::Up);
            l.to_f64() + 1e-12
        };
        if ln_q >= 0.0 {
            return Err(Error::Indeterminate("q-series evaluated with |q| >= 1".into()));
        }
        // ratio of successive dominating terms at the head of the tail; the
        // ratio is decreasing in n, so this bounds all later ratios
        let ln_ratio = self.tail.ln_bound(t1 + 1.0) - self.tail.ln_bound(t1) + ln_q;
        if ln_ratio >= -1e-6 {
            return Err(Error::Indeterminate(
                "tail not geometrically dominated at this |q|; raise truncation".into(),
            ));
        }
        let ln_first = self.tail.ln_bound(t1) + t1 * ln_q;
        let mut first = Float::with_val(64, ln_first);
        first.exp_round(Round::Up);
        let mut ratio = Float::with_val(64, ln_ratio);
        ratio.exp_round(Round::Up);
        let mut denom = Float::with_val(64, 1);
        denom.sub_assign_round(&ratio, Round::Down);
        let mut out = first;
        out.div_assign_round(&denom, Round::Up);
        out.mul_assign_round(&Float::with_val(64, 1.0 + 1e-6), Round::Up);
        Ok(out)
    }
}

/// q = e^{2 pi i tau} as a ball.
pub fn q_from_tau(tau: &ComplexBall, prec: u32) -> ComplexBall {
    let two_pi = RealBall::pi(prec).shl(1);
    let t = tau.set_prec(prec);
    // 2 pi i tau = -2 pi Im tau + i 2 pi Re tau
    let re = two_pi.mul(&t.im()).neg();
    let im = two_pi.mul(&t.re());
    ComplexBall::new(re, im).exp()
}

fn ln_abs_rational(c: &Rational) -> f64 {
    let mut f = Float::with_val(64, c);
    f.abs_mut();
    if f.is_zero() {
        return f64::NEG_INFINITY;
    }
    f.ln_round(Round::Up);
    f.to_f64() + 1e-12
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::Integer;

    #[test]
    fn zero_series_evaluates_to_zero_with_zero_err() {
        let s = QSeries::new(1, vec![], TailModel::zero_series()).unwrap();
        let tau = ComplexBall::from_f64s(0.3, 1.2, 128);
        let v = s.eval_tau(&tau, 128).unwrap();
        assert!(v.abs_upper().is_zero());
        assert!(v.err().is_zero());
    }

    #[test]
    fn geometric_series_matches_closed_form_at_i() {
        // c_n = 1 for n >= 1; at tau = i, sum = 1/(1 - e^{-2 pi}) - 1
        let t = 60;
        let coeffs = vec![Rational::from(1); t];
        let s =
            QSeries::new(1, coeffs, TailModel { log_m: 0.0, sqrt_coef: 0.0, pow_coef: 0.0 })
                .unwrap();
        let prec = 256;
        let tau = ComplexBall::new(RealBall::zero(prec), RealBall::one(prec));
        let v = s.eval_tau(&tau, prec).unwrap();

        let q = q_from_tau(&tau, prec);
        let closed = q.div(&ComplexBall::one(prec).sub(&q)).unwrap();
        // the two enclosures must overlap
        assert!(v.sub(&closed).contains_zero(), "series and closed form disagree");
    }

    #[test]
    fn tail_bound_covers_doubled_truncation() {
        // random-ish integer coefficients bounded by n^2
        let t = 40usize;
        let coeffs: Vec<Rational> = (1..=2 * t)
            .map(|n| Rational::from(Integer::from((n * n) as u64 / 2 + 1)))
            .collect();
        let model = TailModel { log_m: 0.0, sqrt_coef: 0.0, pow_coef: 2.0 };
        let full = QSeries::new(1, coeffs, model).unwrap();
        let short = full.truncate_to(t as i64);
        let prec = 192;
        for (re, im) in [(0.0, 0.9), (0.37, 1.1), (-0.5, 0.87)] {
            let tau = ComplexBall::from_f64s(re, im, prec);
            let a = short.eval_tau(&tau, prec).unwrap();
            let b = full.eval_tau(&tau, prec).unwrap();
            // midpoint shift caused by dropping terms must stay within the
            // tail-inflated radius of the short evaluation
            let dre = Float::with_val(64, a.re_mid() - b.re_mid()).abs();
            let dim = Float::with_val(64, a.im_mid() - b.im_mid()).abs();
            let diff = dre + dim;
            assert!(diff <= a.err(), "tail bound too small at tau=({re},{im})");
        }
    }

    #[test]
    fn rejects_lower_half_plane() {
        let model = TailModel { log_m: 0.0, sqrt_coef: 0.0, pow_coef: 0.0 };
        let s = QSeries::new(1, vec![Rational::from(1)], model).unwrap();
        let tau = ComplexBall::from_f64s(0.0, -1.0, 64);
        assert!(matches!(s.eval_tau(&tau, 64), Err(Error::NotUpperHalfPlane)));
    }

    #[test]
    fn model_must_dominate_coefficients() {
        let bad = QSeries::new(
            1,
            vec![Rational::from(1000)],
            TailModel { log_m: 0.0, sqrt_coef: 0.0, pow_coef: 0.0 },
        );
        assert!(bad.is_err());
    }
}
