//! Classical modular polynomials Phi_N for N <= 20, computed exactly.
//!
//! Phi_N(X, j(tau)) = prod over the psi(N) degree-N isogeny branches
//! j((a tau + b)/d) of (X - j_branch). The elementary symmetric functions of
//! the branches have integer q-expansions (the b-sum kills all roots of
//! unity), are built from power sums via Newton's identities, and each one
//! reduces to an integer polynomial in j by iterated pole subtraction. No
//! floating point and no rounding is involved anywhere.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rug::{Complete, Integer, Rational};

use crate::modular::intseries::{j_series, LSeries};
use crate::numerics::ball::ComplexBall;
use crate::numerics::polyroots;
use crate::numerics::relation::IntPoly;
use crate::{Error, Result};

/// Largest supported level. Beyond this the coefficients outgrow desk scale.
pub const MAX_LEVEL: u32 = 20;

/// psi(N) = N prod_{p | N} (1 + 1/p) = degree of Phi_N in each variable.
pub fn psi_degree(n: u32) -> u32 {
    let mut psi = n;
    let mut m = n;
    let mut p = 2u32;
    while p * p <= m {
        if m % p == 0 {
            psi = psi / p * (p + 1);
            while m % p == 0 {
                m /= p;
            }
        }
        p += 1;
    }
    if m > 1 {
        psi = psi / m * (m + 1);
    }
    psi
}

/// The standard degree-N branch representatives (a, b, d): a d = N,
/// 0 <= b < d, gcd(a, b, d) = 1.
pub fn isogeny_reps(n: u32) -> Vec<(u32, u32, u32)> {
    let mut out = Vec::new();
    for a in 1..=n {
        if n % a != 0 {
            continue;
        }
        let d = n / a;
        let g = gcd_u32(a, d);
        for b in 0..d {
            if gcd_u32(g, b) == 1 {
                out.push((a, b, d));
            }
        }
    }
    out
}

fn gcd_u32(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd_u32(b, a % b)
    }
}

fn mu(n: u32) -> i32 {
    // Moebius function for the tiny arguments seen here
    let mut m = n;
    let mut count = 0;
    let mut p = 2u32;
    while p * p <= m {
        if m % p == 0 {
            m /= p;
            if m % p == 0 {
                return 0;
            }
            count += 1;
        }
        p += 1;
    }
    if m > 1 {
        count += 1;
    }
    if count % 2 == 0 {
        1
    } else {
        -1
    }
}

fn divisors(n: u32) -> Vec<u32> {
    (1..=n).filter(|d| n % d == 0).collect()
}

/// The classical modular polynomial as a dense integer coefficient matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModPoly {
    pub level: u32,
    /// coeffs[r][s] multiplies X^r Y^s; square of side psi(N)+1 for N > 1.
    pub coeffs: Vec<Vec<Integer>>,
}

impl ModPoly {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval_xy(&self, x: &ComplexBall, y: &ComplexBall) -> ComplexBall {
        let prec = x.prec().max(y.prec());
        let mut acc = ComplexBall::zero(prec);
        for row in self.coeffs.iter().rev() {
            let mut inner = ComplexBall::zero(prec);
            for c in row.iter().rev() {
                inner = inner.mul(y).add(&ComplexBall::from_integer(c, prec));
            }
            acc = acc.mul(x).add(&inner);
        }
        acc
    }

    /// Specialize X to an exact rational, producing an integer polynomial in
    /// Y (cleared of denominators).
    pub fn specialize_x(&self, x: &Rational) -> IntPoly {
        let deg = self.degree();
        let num = x.numer();
        let den = x.denom();
        // sum_r c[r][s] num^r den^(deg - r), ascending in s
        let mut out = vec![Integer::new(); deg + 1];
        let mut num_pows = vec![Integer::from(1)];
        let mut den_pows = vec![Integer::from(1)];
        for i in 1..=deg {
            num_pows.push((&num_pows[i - 1] * num).complete());
            den_pows.push((&den_pows[i - 1] * den).complete());
        }
        for (r, row) in self.coeffs.iter().enumerate() {
            let scale = (&num_pows[r] * &den_pows[deg - r]).complete();
            for (s, c) in row.iter().enumerate() {
                out[s] += (c * &scale).complete();
            }
        }
        IntPoly::new(out).primitive()
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.coeffs.len();
        for r in 0..n {
            for s in 0..r {
                if self.coeffs[r][s] != self.coeffs[s][r] {
                    return false;
                }
            }
        }
        true
    }
}

fn modpoly_cache() -> &'static Mutex<HashMap<u32, Arc<ModPoly>>> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<ModPoly>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The classical modular polynomial Phi_N, N <= 20. Phi_1 = X - Y.
/// Results are cached in memory and, when a cache directory is configured,
/// on disk under kind "modpoly".
pub fn modular_polynomial(n: u32) -> Result<Arc<ModPoly>> {
    if n < 1 || n > MAX_LEVEL {
        return Err(Error::UnsupportedLevel(n));
    }
    if let Some(p) = modpoly_cache().lock().unwrap().get(&n) {
        return Ok(p.clone());
    }
    if let Some(p) = load_from_disk(n) {
        let p = Arc::new(p);
        modpoly_cache().lock().unwrap().insert(n, p.clone());
        return Ok(p);
    }
    let poly = Arc::new(compute_modpoly(n)?);
    store_to_disk(&poly);
    modpoly_cache().lock().unwrap().insert(n, poly.clone());
    Ok(poly)
}

fn load_from_disk(n: u32) -> Option<ModPoly> {
    let payload = crate::cache::lookup("modpoly", &n.to_string())?;
    let rows = payload.get("coeffs")?.as_array()?;
    let mut coeffs = Vec::with_capacity(rows.len());
    for row in rows {
        let mut r = Vec::new();
        for v in row.as_array()? {
            r.push(Integer::parse(v.as_str()?).ok()?.complete());
        }
        coeffs.push(r);
    }
    let p = ModPoly { level: n, coeffs };
    // sanity before trusting disk contents
    if n > 1 && (!p.is_symmetric() || p.degree() != psi_degree(n) as usize) {
        return None;
    }
    Some(p)
}

fn store_to_disk(p: &ModPoly) {
    let rows: Vec<Vec<String>> = p
        .coeffs
        .iter()
        .map(|r| r.iter().map(|c| c.to_string()).collect())
        .collect();
    crate::cache::store(
        "modpoly",
        &p.level.to_string(),
        &serde_json::json!({ "level": p.level, "coeffs": rows }),
    );
}

fn compute_modpoly(n: u32) -> Result<ModPoly> {
    if n == 1 {
        // the diagonal convention: Phi_1 = X - Y
        return Ok(ModPoly {
            level: 1,
            coeffs: vec![
                vec![Integer::new(), Integer::from(-1)],
                vec![Integer::from(1), Integer::new()],
            ],
        });
    }
    let psi = psi_degree(n) as i64;
    let nn = n as i64;
    let verify = 3i64;
    let hi = nn * (psi + verify); // top exponent needed of J^k
    let j = j_series(hi)?;

    // J^k for k = 0..=psi on [-k, hi]
    let mut jp: Vec<LSeries> = Vec::with_capacity(psi as usize + 1);
    jp.push(LSeries::constant(Integer::from(1)));
    for k in 1..=psi {
        jp.push(jp[(k - 1) as usize].mul_window(&j, -k, hi));
    }

    // power sums p_k on [-kN, psi + verify]
    let lo_win = -psi;
    let hi_win = verify;
    let p_hi = psi + verify;
    let mut psums: Vec<LSeries> = vec![LSeries::zero()];
    for k in 1..=psi {
        let p_lo = -k * nn;
        let mut window = vec![Integer::new(); (p_hi - p_lo + 1) as usize];
        for a in divisors(n) {
            let d = n / a;
            let g = gcd_u32(a, d);
            for e in divisors(g) {
                let m_mu = mu(e);
                if m_mu == 0 {
                    continue;
                }
                let factor = Integer::from(m_mu) * Integer::from(d / e);
                // gamma index m = (d/e) m', exponent w = (a/e) m'
                let step = (d / e) as i64;
                let scale_w = (a / e) as i64;
                let src = &jp[k as usize];
                // smallest m' with step*m' >= -k
                let mut mp = (-k).div_euclid(step);
                if mp * step < -k {
                    mp += 1;
                }
                loop {
                    let m_idx = mp * step;
                    let w = mp * scale_w;
                    if w > p_hi || m_idx > src.hi() {
                        break;
                    }
                    if w >= p_lo {
                        let c = src.coeff(m_idx);
                        if !c.is_zero() {
                            window[(w - p_lo) as usize] += (&c * &factor).complete();
                        }
                    }
                    mp += 1;
                }
            }
        }
        psums.push(LSeries { n0: p_lo, c: window }.trim());
    }

    // Newton's identities with immediate reduction of each e_i to a
    // polynomial in j (so later products need only short windows)
    let mut e_polys: Vec<Vec<Integer>> = vec![vec![Integer::from(1)]]; // P_0 = 1
    let mut e_pser: Vec<LSeries> = vec![LSeries::constant(Integer::from(1))];
    for i in 1..=psi {
        let mut s = LSeries::zero();
        for k in 1..=i {
            let term = e_pser[(i - k) as usize].mul_window(&psums[k as usize], lo_win, hi_win);
            if (k - 1) % 2 == 0 {
                s = s.add(&term);
            } else {
                s = s.sub(&term);
            }
        }
        let e_i = s.div_exact(&Integer::from(i))?;
        // reduce to a polynomial in j by pole subtraction
        let mut rem = e_i.clone().trim();
        let mut pcoeffs = vec![Integer::new(); psi as usize + 1];
        loop {
            let Some(v) = rem.valuation() else { break };
            if v > 0 {
                return Err(Error::Internal(format!(
                    "modpoly reduction left positive exponent {v} at level {n}"
                )));
            }
            let c = rem.coeff(v);
            let deg = (-v) as usize;
            if deg > psi as usize {
                return Err(Error::Internal("modpoly pole order exceeds psi".into()));
            }
            pcoeffs[deg] = c.clone();
            let sub = jp[deg].mul_window(&LSeries::constant(c), lo_win, hi_win);
            rem = rem.sub(&sub).trim();
            if rem.valuation().is_none() {
                break;
            }
        }
        // full expansion of P_i(J) on the wide window for later products
        let mut full = LSeries::zero();
        for (deg, c) in pcoeffs.iter().enumerate() {
            if !c.is_zero() {
                full = full.add(&jp[deg].mul_window(&LSeries::constant(c.clone()), -psi, hi));
            }
        }
        e_pser.push(full);
        e_polys.push(pcoeffs);
    }

    // Phi_N(X, Y) = sum_i (-1)^i P_i(Y) X^(psi - i)
    let side = psi as usize + 1;
    let mut coeffs = vec![vec![Integer::new(); side]; side];
    for (i, pc) in e_polys.iter().enumerate() {
        let r = psi as usize - i;
        for (s, c) in pc.iter().enumerate() {
            coeffs[r][s] = if i % 2 == 0 { c.clone() } else { (-c).complete() };
        }
    }
    let poly = ModPoly { level: n, coeffs };
    if !poly.is_symmetric() {
        return Err(Error::Internal(format!("Phi_{n} failed the symmetry check")));
    }
    Ok(poly)
}

/// A root of Phi_N(j0, Y), i.e. the j-invariant of an N-isogenous curve.
#[derive(Clone, Debug)]
pub struct HeckeNeighbor {
    pub value: ComplexBall,
    pub multiplicity: usize,
    /// Set when the neighbor is a certified rational integer.
    pub exact: Option<Integer>,
}

/// The N-isogeny neighbors of a j-invariant: the roots of Phi_N(j0, Y) with
/// multiplicity. Exact integer roots are certified by substitution when j0
/// is exact.
pub fn hecke_neighbors(j0: &JInput, n: u32, prec: u32) -> Result<Vec<HeckeNeighbor>> {
    let phi = modular_polynomial(n)?;
    match j0 {
        JInput::Exact(x) => {
            if n == 1 {
                return Ok(vec![HeckeNeighbor {
                    value: ComplexBall::from_real(crate::numerics::ball::RealBall::from_rational(
                        x, prec,
                    )),
                    multiplicity: 1,
                    exact: x.is_integer().then(|| x.numer().clone()),
                }]);
            }
            let p = phi.specialize_x(x);
            let roots = polyroots::complex_roots(&p, prec)?;
            let mut out = Vec::with_capacity(roots.len());
            for (value, multiplicity) in roots {
                let (cand, dist) = value.re().round_to_integer();
                let mut exact = None;
                if dist.to_f64() < 0.25 && value.im().abs_upper().to_f64() < 0.25 {
                    if p.eval_integer(&cand).is_zero() {
                        exact = Some(cand);
                    }
                }
                out.push(HeckeNeighbor { value, multiplicity, exact });
            }
            Ok(out)
        }
        JInput::Ball(z) => {
            if n == 1 {
                return Ok(vec![HeckeNeighbor {
                    value: z.set_prec(prec),
                    multiplicity: 1,
                    exact: None,
                }]);
            }
            let deg = phi.degree();
            let mut coeffs = vec![ComplexBall::zero(prec); deg + 1];
            let mut xpow = ComplexBall::one(prec);
            for r in 0..=deg {
                for (s, c) in phi.coeffs[r].iter().enumerate() {
                    if !c.is_zero() {
                        let t = xpow.mul_real(&crate::numerics::ball::RealBall::from_integer(
                            c, prec,
                        ));
                        coeffs[s] = coeffs[s].add(&t);
                    }
                }
                if r < deg {
                    xpow = xpow.mul(&z.set_prec(prec));
                }
            }
            let roots = polyroots::complex_roots_with_coeffs(&coeffs, prec)?;
            Ok(roots
                .into_iter()
                .map(|(value, multiplicity)| HeckeNeighbor { value, multiplicity, exact: None })
                .collect())
        }
    }
}

/// Input to `hecke_neighbors`: an exact rational j or a ball.
pub enum JInput {
    Exact(Rational),
    Ball(ComplexBall),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modular::j_invariant_ball;

    #[test]
    fn psi_values() {
        assert_eq!(psi_degree(1), 1);
        assert_eq!(psi_degree(2), 3);
        assert_eq!(psi_degree(3), 4);
        assert_eq!(psi_degree(4), 6);
        assert_eq!(psi_degree(5), 6);
        assert_eq!(psi_degree(6), 12);
        assert_eq!(psi_degree(12), 24);
        assert_eq!(psi_degree(20), 36);
    }

    #[test]
    fn rep_counts_match_psi() {
        for n in 1..=20 {
            assert_eq!(isogeny_reps(n).len() as u32, psi_degree(n), "level {n}");
        }
    }

    #[test]
    fn phi1_is_diagonal() {
        let p = modular_polynomial(1).unwrap();
        assert_eq!(p.coeffs[1][0], 1);
        assert_eq!(p.coeffs[0][1], -1);
    }

    #[test]
    fn phi2_classical_coefficients() {
        let p = modular_polynomial(2).unwrap();
        assert_eq!(p.degree(), 3);
        assert_eq!(p.coeffs[3][3], 0);
        assert_eq!(p.coeffs[3][0], 1); // X^3
        assert_eq!(p.coeffs[2][2], -1); // -X^2 Y^2
        assert_eq!(p.coeffs[2][1], 1488);
        assert_eq!(p.coeffs[2][0], -162000);
        assert_eq!(p.coeffs[1][1], 40773375);
        assert_eq!(p.coeffs[1][0], Integer::from(8748000000u64));
        assert_eq!(p.coeffs[0][0], Integer::from(-157464000000000i64));
    }

    #[test]
    fn phi2_at_1728_287496_vanishes() {
        let p = modular_polynomial(2).unwrap();
        let mut acc = Integer::new();
        let x = Integer::from(1728);
        let y = Integer::from(287496);
        for (r, row) in p.coeffs.iter().enumerate() {
            for (s, c) in row.iter().enumerate() {
                acc += c * x.clone().pow(r as u32) * y.clone().pow(s as u32);
            }
        }
        assert!(acc.is_zero(), "Phi_2(j(i), j(2i)) must vanish, got {acc}");
    }

    #[test]
    fn phi3_symmetric() {
        let p = modular_polynomial(3).unwrap();
        assert!(p.is_symmetric());
        assert_eq!(p.degree(), 4);
    }

    #[test]
    fn kronecker_congruence_small_primes() {
        // Phi_p = (X^p - Y)(X - Y^p) mod p
        for pr in [2u32, 3, 5, 7] {
            let phi = modular_polynomial(pr).unwrap();
            let side = phi.degree() + 1;
            let mut want = vec![vec![Integer::new(); side]; side];
            // (X^p - Y)(X - Y^p) = X^(p+1) - X^p Y^p - XY + Y^(p+1)
            want[pr as usize + 1][0] = Integer::from(1);
            want[pr as usize][pr as usize] = Integer::from(-1);
            want[1][1] = Integer::from(-1);
            want[0][pr as usize + 1] = Integer::from(1);
            for r in 0..side {
                for s in 0..side {
                    let diff = (&phi.coeffs[r][s] - &want[r][s]).complete();
                    assert!(
                        diff.is_divisible_u(pr),
                        "Kronecker congruence fails at p={pr}, ({r},{s})"
                    );
                }
            }
        }
    }

    #[test]
    fn identity_on_random_points() {
        // |Phi_N(j(tau), j(N tau))| below combined error for random tau
        let prec = 256;
        for n in [2u32, 3] {
            let phi = modular_polynomial(n).unwrap();
            for (re, im) in [(0.1234, 1.1), (-0.3, 0.95)] {
                let tau = ComplexBall::from_f64s(re, im, prec);
                let ntau = tau.mul_i64(n as i64);
                let j1 = j_invariant_ball(&tau, prec).unwrap();
                let j2 = j_invariant_ball(&ntau, prec).unwrap();
                let v = phi.eval_xy(&j1, &j2);
                assert!(v.contains_zero(), "Phi_{n} identity violated at ({re},{im})");
                // absolute error scales with the coefficient sizes; demand
                // far more than f64 would give
                assert!(v.err().to_f64() < 1e-15, "error too large: {}", v.err());
            }
        }
    }

    #[test]
    fn neighbors_of_generic_point_count_psi() {
        let prec = 192;
        let j = j_invariant_ball(&ComplexBall::from_f64s(0.0, 1.1, prec), prec).unwrap();
        let nb = hecke_neighbors(&JInput::Ball(j), 2, prec).unwrap();
        let total: usize = nb.iter().map(|h| h.multiplicity).sum();
        assert_eq!(total, 3);
    }

    #[test]
    fn neighbors_of_1728_contain_287496() {
        let prec = 256;
        let nb =
            hecke_neighbors(&JInput::Exact(Rational::from(1728)), 2, prec).unwrap();
        let total: usize = nb.iter().map(|h| h.multiplicity).sum();
        assert_eq!(total, 3);
        assert!(nb
            .iter()
            .any(|h| h.exact.as_ref().is_some_and(|e| *e == 287496)));
    }

    use rug::ops::Pow;
}
