//! Exact Laurent series over Z in the variable q, used to build the
//! q-expansions of E4, E6, Delta, j, and the classical modular polynomials.

use rug::{Integer, Rational};

use crate::numerics::qseries::{QSeries, TailModel};
use crate::Result;

/// sum_{i} c[i] q^(n0 + i), exact integer coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LSeries {
    pub n0: i64,
    pub c: Vec<Integer>,
}

impl LSeries {
    pub fn zero() -> Self {
        LSeries { n0: 0, c: vec![] }
    }

    pub fn constant(v: Integer) -> Self {
        LSeries { n0: 0, c: vec![v] }
    }

    pub fn hi(&self) -> i64 {
        self.n0 + self.c.len() as i64 - 1
    }

    pub fn coeff(&self, n: i64) -> Integer {
        if n < self.n0 || n > self.hi() {
            Integer::new()
        } else {
            self.c[(n - self.n0) as usize].clone()
        }
    }

    /// Lowest exponent with a nonzero coefficient, if any.
    pub fn valuation(&self) -> Option<i64> {
        self.c.iter().position(|x| !x.is_zero()).map(|i| self.n0 + i as i64)
    }

    pub fn trim(mut self) -> Self {
        while self.c.first().is_some_and(|x| x.is_zero()) {
            self.c.remove(0);
            self.n0 += 1;
        }
        while self.c.last().is_some_and(|x| x.is_zero()) {
            self.c.pop();
        }
        self
    }

    pub fn add(&self, other: &LSeries) -> LSeries {
        if self.c.is_empty() {
            return other.clone();
        }
        if other.c.is_empty() {
            return self.clone();
        }
        let n0 = self.n0.min(other.n0);
        let hi = self.hi().max(other.hi());
        let mut c = vec![Integer::new(); (hi - n0 + 1) as usize];
        for (i, x) in self.c.iter().enumerate() {
            c[(self.n0 - n0) as usize + i] += x;
        }
        for (i, x) in other.c.iter().enumerate() {
            c[(other.n0 - n0) as usize + i] += x;
        }
        LSeries { n0, c }
    }

    pub fn neg(&self) -> LSeries {
        LSeries { n0: self.n0, c: self.c.iter().map(|x| Integer::from(-x.clone())).collect() }
    }

    pub fn sub(&self, other: &LSeries) -> LSeries {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: &Integer) -> LSeries {
        LSeries { n0: self.n0, c: self.c.iter().map(|x| Integer::from(x * k)).collect() }
    }

    /// Product truncated to the exponent window [lo, hi].
    pub fn mul_window(&self, other: &LSeries, lo: i64, hi: i64) -> LSeries {
        if self.c.is_empty() || other.c.is_empty() || hi < lo {
            return LSeries::zero();
        }
        let n0 = (self.n0 + other.n0).max(lo);
        if n0 > hi {
            return LSeries::zero();
        }
        let mut c = vec![Integer::new(); (hi - n0 + 1) as usize];
        for (i, x) in self.c.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            let ei = self.n0 + i as i64;
            // ei + ej in [n0, hi]
            let j_lo = (n0 - ei - other.n0).max(0);
            let j_hi = (hi - ei - other.n0).min(other.c.len() as i64 - 1);
            for j in j_lo..=j_hi {
                let y = &other.c[j as usize];
                if y.is_zero() {
                    continue;
                }
                let t = ei + other.n0 + j - n0;
                c[t as usize] += Integer::from(x * y);
            }
        }
        LSeries { n0, c }
    }

    /// Exact division by an integer (every coefficient must be divisible).
    pub fn div_exact(&self, k: &Integer) -> Result<LSeries> {
        let mut c = Vec::with_capacity(self.c.len());
        for x in &self.c {
            let (q, r) = x.clone().div_rem(k.clone());
            if !r.is_zero() {
                return Err(crate::Error::Internal("inexact series division".into()));
            }
            c.push(q);
        }
        Ok(LSeries { n0: self.n0, c })
    }

    /// Multiplicative inverse of a series with unit lowest coefficient,
    /// truncated to `len` terms.
    pub fn invert_unit(&self, len: usize) -> Result<LSeries> {
        let s = self.clone().trim();
        let Some(v) = s.valuation() else {
            return Err(crate::Error::Internal("inverting zero series".into()));
        };
        let u0 = s.coeff(v);
        if u0 != 1i32 && u0 != -1i32 {
            return Err(crate::Error::Internal("inverting non-unit series".into()));
        }
        let sign = if u0 == 1i32 { 1i32 } else { -1i32 };
        // s = u0 q^v (1 + w), invert the unit part by the standard recurrence
        let mut inv = vec![Integer::from(sign)];
        for n in 1..len {
            let mut acc = Integer::new();
            for k in 1..=n {
                let uk = s.coeff(v + k as i64);
                if uk.is_zero() {
                    continue;
                }
                acc += uk * &inv[n - k];
            }
            inv.push(Integer::from(-acc * sign));
        }
        Ok(LSeries { n0: -v, c: inv })
    }

    /// View as an evaluatable q-series with the given tail model.
    pub fn to_qseries(&self, tail: TailModel) -> Result<QSeries> {
        QSeries::new(self.n0, self.c.iter().map(Rational::from).collect(), tail)
    }
}

/// sigma_k(n) for n = 1..=len via a divisor sieve.
pub fn sigma_table(k: u32, len: usize) -> Vec<Integer> {
    let mut t = vec![Integer::new(); len + 1];
    for d in 1..=len {
        let dk = Integer::from(d).pow(k);
        let mut m = d;
        while m <= len {
            t[m] += &dk;
            m += d;
        }
    }
    t
}

use rug::ops::Pow;

/// Eisenstein series E4 = 1 + 240 sum sigma_3(n) q^n up to exponent `hi`.
pub fn e4_series(hi: usize) -> LSeries {
    let s = sigma_table(3, hi);
    let mut c = vec![Integer::new(); hi + 1];
    c[0] = Integer::from(1);
    for n in 1..=hi {
        c[n] = Integer::from(240) * &s[n];
    }
    LSeries { n0: 0, c }
}

/// Eisenstein series E6 = 1 - 504 sum sigma_5(n) q^n up to exponent `hi`.
pub fn e6_series(hi: usize) -> LSeries {
    let s = sigma_table(5, hi);
    let mut c = vec![Integer::new(); hi + 1];
    c[0] = Integer::from(1);
    for n in 1..=hi {
        c[n] = Integer::from(-504) * &s[n];
    }
    LSeries { n0: 0, c }
}

/// The j-function q-expansion from q^(-1) up to exponent `hi`:
/// j = E4^3 / Delta with Delta = (E4^3 - E6^2)/1728.
pub fn j_series(hi: i64) -> Result<LSeries> {
    let len = (hi + 2).max(2) as usize;
    let e4 = e4_series(len);
    let e6 = e6_series(len);
    let e4_3 = e4.mul_window(&e4, 0, len as i64).mul_window(&e4, 0, len as i64);
    let e6_2 = e6.mul_window(&e6, 0, len as i64);
    let delta = e4_3.sub(&e6_2).div_exact(&Integer::from(1728))?;
    let delta_inv = delta.invert_unit(len + 1)?;
    Ok(e4_3.mul_window(&delta_inv, -1, hi).trim())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_values() {
        let s3 = sigma_table(3, 6);
        assert_eq!(s3[1], 1);
        assert_eq!(s3[2], 9);
        assert_eq!(s3[6], 1 + 8 + 27 + 216);
    }

    #[test]
    fn delta_is_cusp_form_with_ramanujan_tau() {
        let len = 12usize;
        let e4 = e4_series(len);
        let e6 = e6_series(len);
        let e4_3 = e4.mul_window(&e4, 0, len as i64).mul_window(&e4, 0, len as i64);
        let e6_2 = e6.mul_window(&e6, 0, len as i64);
        let delta = e4_3.sub(&e6_2).div_exact(&Integer::from(1728)).unwrap();
        // tau(1..7) = 1, -24, 252, -1472, 4830, -6048, -16744
        assert_eq!(delta.coeff(0), 0);
        assert_eq!(delta.coeff(1), 1);
        assert_eq!(delta.coeff(2), -24);
        assert_eq!(delta.coeff(3), 252);
        assert_eq!(delta.coeff(4), -1472);
        assert_eq!(delta.coeff(5), 4830);
        assert_eq!(delta.coeff(6), -6048);
        assert_eq!(delta.coeff(7), -16744);
    }

    #[test]
    fn j_expansion_classical_coefficients() {
        let j = j_series(4).unwrap();
        assert_eq!(j.coeff(-1), 1);
        assert_eq!(j.coeff(0), 744);
        assert_eq!(j.coeff(1), 196884);
        assert_eq!(j.coeff(2), 21493760);
        assert_eq!(j.coeff(3), 864299970);
        assert_eq!(j.coeff(4), 20245856256u64);
    }

    #[test]
    fn inverse_roundtrip() {
        let s = LSeries { n0: 1, c: vec![1, -24, 252, -1472, 4830].into_iter().map(Integer::from).collect() };
        let inv = s.invert_unit(6).unwrap();
        let prod = s.mul_window(&inv, 0, 3).trim();
        assert_eq!(prod, LSeries::constant(Integer::from(1)));
    }
}
