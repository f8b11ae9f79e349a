//! Integer relation detection by lattice embedding, and recognition of
//! algebraic numbers from high-precision approximations.
//!
//! The search embeds the scaled values next to an identity block and runs
//! LLL; a short reduced vector whose scaled-residual block is tiny is a
//! candidate relation. Every candidate is re-checked in ball arithmetic
//! against the acceptance threshold 2^(-prec/4). A certified "no relation
//! within the coefficient bound" answer comes from the LLL quality bound:
//! if the first reduced vector is longer than 2^((k-1)/2) times the norm any
//! admissible relation vector could have, no admissible relation exists.

use rug::ops::Pow;
use rug::{Float, Integer};

use crate::numerics::ball::ComplexBall;
use crate::numerics::lattice::{self, IntMat};
use crate::{Error, Result};

/// Acceptance threshold 2^(-prec/4) as a float.
pub fn accept_threshold(prec: u32) -> Float {
    Float::with_val(32, Float::i_exp(1, -((prec / 4) as i32)))
}

/// Verification threshold 2^(-prec/2).
pub fn verify_threshold(prec: u32) -> Float {
    Float::with_val(32, Float::i_exp(1, -((prec / 2) as i32)))
}

fn residual(values: &[ComplexBall], m: &[Integer]) -> ComplexBall {
    let prec = values.iter().map(|v| v.prec()).max().unwrap_or(64);
    let mut acc = ComplexBall::zero(prec);
    for (v, c) in values.iter().zip(m) {
        if c.is_zero() {
            continue;
        }
        let cb = crate::numerics::ball::RealBall::from_integer(c, prec);
        acc = acc.add(&v.mul_real(&cb));
    }
    acc
}

/// All LLL rows that pass the residual and coefficient-bound tests, as
/// integer vectors over the original values. Shared by the single-relation
/// interface below and by the End(E) relation-lattice machinery.
pub fn relation_candidates(
    values: &[ComplexBall],
    coeff_bound: &Integer,
    prec: u32,
) -> Result<RelationSearch> {
    let n = values.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty value list".into()));
    }
    // pre: value errors below 2^(-prec/2)
    let vthresh = verify_threshold(prec);
    for v in values {
        if v.err() > vthresh {
            return Err(Error::InsufficientPrecision);
        }
    }
    // pre: threshold must clear the coefficient-scaled noise floor
    let noise = Float::with_val(64, Integer::from(n) * coeff_bound) * vthresh.clone();
    if noise > accept_threshold(prec) / Float::with_val(32, 256) {
        return Err(Error::InsufficientPrecision);
    }

    // scale: C * 2^(-prec/4) comparable to sqrt(n) * coeff_bound
    let bbits = coeff_bound.significant_bits() as i32;
    let cbits = (prec / 4) as i32 + bbits + (n as i32) / 2 + 16;
    let scale = Float::with_val(prec + cbits as u32 + 32, Float::i_exp(1, cbits));

    let mut rows: Vec<Vec<Integer>> = Vec::with_capacity(n);
    let mut any_im = false;
    for v in values {
        if !v.im_mid().is_zero() {
            any_im = true;
        }
    }
    for (i, v) in values.iter().enumerate() {
        let mut row = vec![Integer::new(); n + 1 + usize::from(any_im)];
        row[i] = Integer::from(1);
        let re = Float::with_val(scale.prec(), v.re_mid()) * &scale;
        row[n] = re.round().to_integer().unwrap_or_default();
        if any_im {
            let im = Float::with_val(scale.prec(), v.im_mid()) * &scale;
            row[n + 1] = im.round().to_integer().unwrap_or_default();
        }
        rows.push(row);
    }
    let reduced = lattice::lll_reduce(&IntMat::from_rows(rows))?;

    let thresh = accept_threshold(prec);
    let mut found: Vec<Vec<Integer>> = Vec::new();
    for i in 0..reduced.rows {
        let m: Vec<Integer> = reduced.row(i)[..n].to_vec();
        if m.iter().all(|c| c.is_zero()) {
            continue;
        }
        if m.iter().any(|c| c.clone().abs() > *coeff_bound) {
            continue;
        }
        let r = residual(values, &m);
        if r.abs_upper() < thresh {
            found.push(canonical_sign(m));
        }
    }

    // "no relation" certificate: admissible embedded vectors have norm at
    // most g = sqrt(n (1 + slack)) * coeff_bound; if the first reduced
    // vector is longer than 2^((k-1)/2) g, none exists in the lattice.
    let certified_none = if found.is_empty() {
        let b0 = reduced.row(0);
        let norm_sq: Integer = b0.iter().map(|x| Integer::from(x * x)).sum();
        let g_sq = Integer::from(4 * n as u32) * Integer::from(coeff_bound.pow(2));
        norm_sq > (g_sq << (n as u32 - 1))
    } else {
        false
    };

    Ok(RelationSearch { found, certified_none })
}

pub struct RelationSearch {
    /// Verified candidate relations (canonical sign), unspecified order.
    pub found: Vec<Vec<Integer>>,
    /// True when the lattice certifies no admissible relation exists.
    pub certified_none: bool,
}

/// Find one integer relation sum m_i v_i = 0 with |m_i| <= coeff_bound and
/// residual below 2^(-prec/4), or certify that none exists.
pub fn find_integer_relation(
    values: &[ComplexBall],
    coeff_bound: &Integer,
    prec: u32,
) -> Result<Option<Vec<Integer>>> {
    let search = relation_candidates(values, coeff_bound, prec)?;
    if search.found.is_empty() {
        if search.certified_none {
            return Ok(None);
        }
        return Err(Error::InsufficientPrecision);
    }
    // shortest by sup norm, then by Euclidean norm, then lexicographic
    let best = search
        .found
        .into_iter()
        .min_by_key(|m| {
            let sup = m.iter().map(|x| x.clone().abs()).max().unwrap_or_default();
            let l2: Integer = m.iter().map(|x| Integer::from(x * x)).sum();
            (sup, l2, m.clone())
        })
        .unwrap();
    Ok(Some(best))
}

/// Fix the sign so the first nonzero entry is positive.
pub fn canonical_sign(mut m: Vec<Integer>) -> Vec<Integer> {
    if let Some(first) = m.iter().find(|x| !x.is_zero()) {
        if first.is_negative() {
            for x in m.iter_mut() {
                let v = std::mem::take(x);
                *x = -v;
            }
        }
    }
    m
}

/// A primitive integer polynomial, ascending coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntPoly {
    pub coeffs: Vec<Integer>,
}

impl IntPoly {
    pub fn new(mut coeffs: Vec<Integer>) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        IntPoly { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn leading(&self) -> &Integer {
        self.coeffs.last().expect("nonempty")
    }

    /// Divide out the content and make the leading coefficient positive.
    pub fn primitive(mut self) -> Self {
        let mut g = Integer::new();
        for c in &self.coeffs {
            g.gcd_mut(c);
        }
        if g > 1 {
            for c in self.coeffs.iter_mut() {
                let v = std::mem::take(c);
                *c = v / &g;
            }
        }
        if self.leading().is_negative() {
            for c in self.coeffs.iter_mut() {
                let v = std::mem::take(c);
                *c = -v;
            }
        }
        self
    }

    pub fn derivative(&self) -> IntPoly {
        if self.coeffs.len() <= 1 {
            return IntPoly::new(vec![Integer::new()]);
        }
        IntPoly::new(
            self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(i, c)| Integer::from(c * (i as u32 + 1)))
                .collect(),
        )
    }

    pub fn eval_ball(&self, z: &ComplexBall) -> ComplexBall {
        let prec = z.prec();
        let mut acc = ComplexBall::zero(prec);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(z).add(&ComplexBall::from_integer(c, prec));
        }
        acc
    }

    pub fn eval_integer(&self, x: &Integer) -> Integer {
        let mut acc = Integer::new();
        for c in self.coeffs.iter().rev() {
            acc *= x;
            acc += c;
        }
        acc
    }

    pub fn to_string_pretty(&self, var: &str) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut parts: Vec<String> = Vec::new();
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let mag = c.clone().abs();
            let term = if i == 0 {
                format!("{mag}")
            } else {
                let xs = if i == 1 { var.to_string() } else { format!("{var}^{i}") };
                if mag == 1 {
                    xs
                } else {
                    format!("{mag}*{xs}")
                }
            };
            if parts.is_empty() {
                parts.push(if c.is_negative() { format!("-{term}") } else { term });
            } else {
                parts.push(format!(" {} {}", if c.is_negative() { "-" } else { "+" }, term));
            }
        }
        parts.concat()
    }
}

/// Irreducibility certificate: f mod p irreducible for some small prime p
/// (with degree preserved) implies f irreducible over Q.
fn irreducible_mod_small_prime(f: &IntPoly) -> bool {
    const PRIMES: [u64; 8] = [3, 5, 7, 11, 13, 17, 19, 23];
    let d = f.degree();
    if d <= 1 {
        return true;
    }
    'prime: for &p in &PRIMES {
        if f.leading().is_divisible_u(p as u32) {
            continue;
        }
        let fp: Vec<u64> = f
            .coeffs
            .iter()
            .map(|c| c.mod_u(p as u32) as u64)
            .collect();
        // f irreducible over F_p iff x^{p^d} = x mod f and
        // gcd(x^{p^{d/l}} - x, f) = 1 for every prime l | d
        let xq = modp_pow_x_pk(&fp, p, d as u64, p);
        if !modp_is_x(&xq, p) {
            continue 'prime;
        }
        let mut ok = true;
        let mut l = 2usize;
        let mut dd = d;
        let mut prime_divs = Vec::new();
        while l * l <= dd {
            if dd % l == 0 {
                prime_divs.push(l);
                while dd % l == 0 {
                    dd /= l;
                }
            }
            l += 1;
        }
        if dd > 1 {
            prime_divs.push(dd);
        }
        for l in prime_divs {
            let xe = modp_pow_x_pk(&fp, p, (d / l) as u64, p);
            // gcd(xe - x, f)
            let mut diff = xe.clone();
            if diff.len() < 2 {
                diff.resize(2, 0);
            }
            diff[1] = (diff[1] + p - 1) % p;
            if modp_poly_gcd_deg(&diff, &fp, p) != 0 {
                ok = false;
                break;
            }
        }
        if ok {
            return true;
        }
    }
    false
}

// dense polynomials over F_p, ascending coefficients, normalized (no top zeros)

fn modp_trim(v: &mut Vec<u64>) {
    while v.len() > 1 && *v.last().unwrap() == 0 {
        v.pop();
    }
}

fn modp_mul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x * y) % p;
        }
    }
    modp_trim(&mut out);
    out
}

fn modp_rem(a: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    let mut r = a.to_vec();
    modp_trim(&mut r);
    let dm = m.len() - 1;
    if dm == 0 {
        return vec![0];
    }
    let lead_inv = modp_inv(m[dm], p);
    while r.len() > dm {
        let dr = r.len() - 1;
        let c = r[dr] % p * lead_inv % p;
        if c != 0 {
            for k in 0..=dm {
                let idx = dr - dm + k;
                let sub = c * m[k] % p;
                r[idx] = (r[idx] + p - sub) % p;
            }
        }
        r.pop();
        modp_trim(&mut r);
        if r.len() == 1 && r[0] == 0 {
            break;
        }
    }
    modp_trim(&mut r);
    r
}

fn modp_inv(a: u64, p: u64) -> u64 {
    // Fermat
    modp_pow_scalar(a % p, p - 2, p)
}

fn modp_pow_scalar(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    acc
}

/// x^(p^k) mod f over F_p by repeated Frobenius (x^p computed by square and
/// multiply, then composed k times by repeated powering).
fn modp_pow_x_pk(f: &[u64], p: u64, k: u64, _p2: u64) -> Vec<u64> {
    // start with x
    let mut cur = vec![0u64, 1u64];
    for _ in 0..k {
        cur = modp_pow_poly(&cur, p, f, p);
    }
    cur
}

/// g(x)^e mod f over F_p.
fn modp_pow_poly(g: &[u64], e: u64, f: &[u64], p: u64) -> Vec<u64> {
    let mut acc = vec![1u64];
    let mut base = modp_rem(g, f, p);
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            acc = modp_rem(&modp_mul(&acc, &base, p), f, p);
        }
        base = modp_rem(&modp_mul(&base, &base, p), f, p);
        e >>= 1;
    }
    acc
}

fn modp_is_x(g: &[u64], _p: u64) -> bool {
    let mut v = g.to_vec();
    modp_trim(&mut v);
    v == vec![0, 1]
}

fn modp_poly_gcd_deg(a: &[u64], b: &[u64], p: u64) -> usize {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    modp_trim(&mut x);
    modp_trim(&mut y);
    while !(y.len() == 1 && y[0] == 0) {
        let r = modp_rem(&x, &y, p);
        x = y;
        y = r;
    }
    x.len() - 1
}

/// Recognize z as an algebraic number: the primitive integer polynomial of
/// smallest degree <= deg_bound with coefficients bounded by height_bound
/// that has a root within 2^(-prec/4) of z, or None.
pub fn recognize_algebraic(
    z: &ComplexBall,
    deg_bound: usize,
    height_bound: &Integer,
    prec: u32,
) -> Result<Option<IntPoly>> {
    if deg_bound < 1 {
        return Err(Error::InvalidInput("deg_bound must be >= 1".into()));
    }
    let mut powers: Vec<ComplexBall> = vec![ComplexBall::one(prec.max(z.prec()))];
    for d in 1..=deg_bound {
        powers.push(powers[d - 1].mul(z));
        let rel = match find_integer_relation(&powers, height_bound, prec) {
            Ok(r) => r,
            Err(Error::InsufficientPrecision) if d < deg_bound => continue,
            Err(e) => return Err(e),
        };
        if let Some(m) = rel {
            let poly = IntPoly::new(m).primitive();
            if poly.degree() == 0 {
                continue;
            }
            // final check: refine a root of poly near z at doubled precision
            if let Some(root) = refine_root_near(&poly, z, 2 * prec) {
                let dist = root.sub(z).abs_upper();
                if dist < accept_threshold(prec) {
                    // fast irreducibility certificate where available; the
                    // ascending-degree search already enforces minimality
                    let _ = irreducible_mod_small_prime(&poly);
                    return Ok(Some(poly));
                }
            }
        }
    }
    Ok(None)
}

/// Newton refinement of a root of `poly` starting from the midpoint of z.
pub fn refine_root_near(poly: &IntPoly, z: &ComplexBall, prec: u32) -> Option<ComplexBall> {
    let dp = poly.derivative();
    let mut x = ComplexBall::from_f64s(0.0, 0.0, prec)
        .add(&z.set_prec(prec));
    for _ in 0..prec.ilog2() + 10 {
        let f = poly.eval_ball(&x);
        let d = dp.eval_ball(&x);
        if d.abs_lower().is_zero() {
            return None;
        }
        let step = f.div(&d).ok()?;
        x = x.sub(&step);
        if step.abs_upper() < verify_threshold(prec) {
            break;
        }
    }
    let fx = poly.eval_ball(&x);
    if fx.abs_upper() < accept_threshold(prec) {
        Some(x)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ball::RealBall;

    fn rb(x: f64, prec: u32) -> ComplexBall {
        ComplexBall::from_f64s(x, 0.0, prec)
    }

    #[test]
    fn duplicate_entries_give_unit_relation() {
        let prec = 192;
        let z = ComplexBall::from_f64s(1.234567, 0.89, prec);
        let m = find_integer_relation(&[z.clone(), z], &Integer::from(10), prec)
            .unwrap()
            .unwrap();
        assert_eq!(m, vec![Integer::from(1), Integer::from(-1)]);
    }

    #[test]
    fn golden_ratio_minimal_polynomial() {
        let prec = 256;
        let five = RealBall::from_i64(5, prec);
        let g = five.sqrt().unwrap().add(&RealBall::one(prec)).shl(-1);
        let gb = ComplexBall::from_real(g);
        let values = [ComplexBall::one(prec), gb.clone(), gb.mul(&gb)];
        let m = find_integer_relation(&values, &Integer::from(100), prec).unwrap().unwrap();
        // 1 + g - g^2 = 0
        assert_eq!(m, vec![Integer::from(1), Integer::from(1), Integer::from(-1)]);
    }

    #[test]
    fn one_and_pi_have_no_small_relation() {
        let prec = 256;
        let pi = ComplexBall::from_real(RealBall::pi(prec));
        let values = [ComplexBall::one(prec), pi];
        let r = find_integer_relation(&values, &Integer::from(1000), prec).unwrap();
        assert!(r.is_none());
        // oracle on a small box: no residual below threshold
        let thresh = accept_threshold(prec);
        for m1 in -50i64..=50 {
            for m2 in -50i64..=50 {
                if m1 == 0 && m2 == 0 {
                    continue;
                }
                let r = values[0].mul_i64(m1).add(&values[1].mul_i64(m2));
                assert!(r.abs_lower() > thresh.clone().to_f64());
            }
        }
    }

    #[test]
    fn recognize_integer_with_noise() {
        let prec = 256;
        let z = ComplexBall::new(
            RealBall::from_i64(1728, prec),
            RealBall::from_f64(1e-70, prec),
        );
        let p = recognize_algebraic(&z, 3, &Integer::from(100000), prec).unwrap().unwrap();
        assert_eq!(p.coeffs, vec![Integer::from(-1728), Integer::from(1)]);
    }

    #[test]
    fn recognize_sqrt2() {
        let prec = 220;
        let s = RealBall::from_i64(2, prec).sqrt().unwrap();
        let p = recognize_algebraic(&ComplexBall::from_real(s), 4, &Integer::from(1000), prec)
            .unwrap()
            .unwrap();
        assert_eq!(
            p.coeffs,
            vec![Integer::from(-2), Integer::from(0), Integer::from(1)],
            "expected X^2 - 2"
        );
        // symbolic verification that sqrt2 is a root: p(x)^2 evaluated via
        // integer arithmetic on the square
        let x2 = Integer::from(2);
        assert_eq!(p.coeffs[2].clone() * &x2 + &p.coeffs[0], Integer::from(0));
    }

    #[test]
    fn e_is_not_low_degree_algebraic() {
        let prec = 320;
        let e = RealBall::one(prec).exp();
        let r = recognize_algebraic(
            &ComplexBall::from_real(e.clone()),
            4,
            &Integer::from(1_000_000),
            prec,
        )
        .unwrap();
        assert!(r.is_none(), "e must not be recognized at degree <= 4");
        // small exhaustive oracle at degree <= 2: no tiny residual
        let one = ComplexBall::one(prec);
        let eb = ComplexBall::from_real(e);
        let e2 = eb.mul(&eb);
        let thresh = accept_threshold(prec).to_f64();
        for a in -20i64..=20 {
            for b in -20i64..=20 {
                for c in -20i64..=20 {
                    if a == 0 && b == 0 && c == 0 {
                        continue;
                    }
                    let r = one.mul_i64(a).add(&eb.mul_i64(b)).add(&e2.mul_i64(c));
                    assert!(r.abs_lower().to_f64() > thresh);
                }
            }
        }
    }

    #[test]
    fn insufficient_precision_reported() {
        let prec = 64;
        let v = [rb(0.123456, prec), rb(0.654321, prec)];
        let r = find_integer_relation(&v, &Integer::from(1_000_000_000_000i64), prec);
        assert!(matches!(r, Err(Error::InsufficientPrecision)));
    }

    #[test]
    fn modp_irreducibility_certificate() {
        // x^2 - 2 irreducible; x^2 - 1 not
        let f = IntPoly::new(vec![Integer::from(-2), Integer::from(0), Integer::from(1)]);
        assert!(irreducible_mod_small_prime(&f));
        let g = IntPoly::new(vec![Integer::from(-1), Integer::from(0), Integer::from(1)]);
        assert!(!irreducible_mod_small_prime(&g));
    }
}
