//! Complex roots of polynomials (integer or ball coefficients) by
//! Durand-Kerner iteration with a Newton polish, returning root clusters
//! with multiplicities.

use rug::{Float, Integer};

use crate::numerics::ball::{ComplexBall, RealBall};
use crate::numerics::relation::IntPoly;
use crate::{Error, Result};

/// Plain complex number at a fixed precision for the iteration internals.
#[derive(Clone)]
struct Cf {
    re: Float,
    im: Float,
}

impl Cf {
    fn new(re: f64, im: f64, prec: u32) -> Self {
        Cf { re: Float::with_val(prec, re), im: Float::with_val(prec, im) }
    }

    fn from_integer(n: &Integer, prec: u32) -> Self {
        Cf { re: Float::with_val(prec, n), im: Float::new(prec) }
    }

    fn add(&self, o: &Cf) -> Cf {
        Cf {
            re: Float::with_val(self.re.prec(), &self.re + &o.re),
            im: Float::with_val(self.im.prec(), &self.im + &o.im),
        }
    }

    fn sub(&self, o: &Cf) -> Cf {
        Cf {
            re: Float::with_val(self.re.prec(), &self.re - &o.re),
            im: Float::with_val(self.im.prec(), &self.im - &o.im),
        }
    }

    fn mul(&self, o: &Cf) -> Cf {
        let p = self.re.prec();
        let re = Float::with_val(p, &self.re * &o.re) - Float::with_val(p, &self.im * &o.im);
        let im = Float::with_val(p, &self.re * &o.im) + Float::with_val(p, &self.im * &o.re);
        Cf { re, im }
    }

    fn div(&self, o: &Cf) -> Cf {
        let p = self.re.prec();
        let d = Float::with_val(p, &o.re * &o.re) + Float::with_val(p, &o.im * &o.im);
        let re = (Float::with_val(p, &self.re * &o.re) + Float::with_val(p, &self.im * &o.im)) / &d;
        let im = (Float::with_val(p, &self.im * &o.re) - Float::with_val(p, &self.re * &o.im)) / &d;
        Cf { re, im }
    }

    fn norm(&self) -> Float {
        let p = self.re.prec();
        Float::with_val(p, &self.re * &self.re) + Float::with_val(p, &self.im * &self.im)
    }
}

fn eval_cf(coeffs: &[Cf], z: &Cf) -> Cf {
    let p = z.re.prec();
    let mut acc = Cf::new(0.0, 0.0, p);
    for c in coeffs.iter().rev() {
        acc = acc.mul(z).add(c);
    }
    acc
}

/// Durand-Kerner iteration at `work` bits; returns deg approximations.
fn dk_iterate(coeffs: &[Cf], deg: usize, work: u32, prec: u32) -> Vec<Cf> {
    let lead = coeffs.last().unwrap().clone();
    // Cauchy-style root radius: 1 + max |a_i / a_n|
    let mut radius = Float::with_val(53, 0);
    for c in &coeffs[..deg] {
        let m = c.div(&lead).norm();
        if m > radius {
            radius = m;
        }
    }
    let radius = radius.sqrt().to_f64() + 1.0;

    let mut zs: Vec<Cf> = (0..deg)
        .map(|k| {
            let ang = 2.0 * std::f64::consts::PI * (k as f64) / (deg as f64) + 0.7;
            let r = radius * (0.5 + 0.5 * ((k as f64) + 1.0) / (deg as f64));
            Cf::new(r * ang.cos(), r * ang.sin(), work)
        })
        .collect();

    let tol = Float::with_val(53, Float::i_exp(1, -(work as i32) + 24));
    let tol_sq = Float::with_val(53, &tol * &tol);
    let max_iter = 60 + 12 * deg + prec as usize / 8;
    for _ in 0..max_iter {
        let mut moved = Float::with_val(53, 0);
        for i in 0..deg {
            let fz = eval_cf(coeffs, &zs[i]);
            let mut den = lead.clone();
            for j in 0..deg {
                if i != j {
                    den = den.mul(&zs[i].sub(&zs[j]));
                }
            }
            if den.norm().is_zero() {
                zs[i] = zs[i].add(&Cf::new(1e-3, 2e-3, work));
                continue;
            }
            let step = fz.div(&den);
            let n = step.norm();
            if n > moved {
                moved = n.clone();
            }
            zs[i] = zs[i].sub(&step);
        }
        if moved < tol_sq {
            break;
        }
    }
    zs
}

/// Cluster approximations into multiple roots and produce enclosures using
/// residual / derivative bounds from the supplied evaluators.
fn enclose_clusters(
    zs: Vec<Cf>,
    deg: usize,
    prec: u32,
    eval: &dyn Fn(&ComplexBall) -> ComplexBall,
    deval: &dyn Fn(&ComplexBall) -> ComplexBall,
    int_poly: Option<&IntPoly>,
) -> Result<Vec<(ComplexBall, usize)>> {
    let work = zs.first().map_or(prec, |z| z.re.prec());
    let cluster_tol = Float::with_val(53, Float::i_exp(1, -(prec as i32) / 3));
    let mut used = vec![false; deg];
    let mut out: Vec<(ComplexBall, usize)> = Vec::new();
    for i in 0..deg {
        if used[i] {
            continue;
        }
        let mut members = vec![i];
        used[i] = true;
        for j in i + 1..deg {
            if used[j] {
                continue;
            }
            let d = zs[i].sub(&zs[j]).norm().sqrt();
            if d < cluster_tol {
                used[j] = true;
                members.push(j);
            }
        }
        let mult = members.len();
        let mut cx = Float::new(work);
        let mut cy = Float::new(work);
        for &m in &members {
            cx += &zs[m].re;
            cy += &zs[m].im;
        }
        cx /= mult as u32;
        cy /= mult as u32;
        let mut ball = ComplexBall::new(
            RealBall::from_float(Float::with_val(prec, &cx)),
            RealBall::from_float(Float::with_val(prec, &cy)),
        );
        if mult == 1 {
            if let Some(p) = int_poly {
                if let Some(refined) = crate::numerics::relation::refine_root_near(p, &ball, prec)
                {
                    ball = refined;
                }
            } else {
                // a couple of Newton steps through the ball evaluators
                for _ in 0..3 {
                    let f = eval(&ball);
                    let d = deval(&ball);
                    if d.abs_lower().is_zero() {
                        break;
                    }
                    if let Ok(step) = f.div(&d) {
                        ball = ball.sub(&step);
                    }
                }
            }
            let fz = eval(&ball);
            let dz = deval(&ball);
            let dlo = dz.abs_lower();
            if !dlo.is_zero() {
                let mut rad = Float::with_val(32, fz.abs_upper());
                rad *= deg as u32;
                rad /= dlo;
                ball = ball.add_error(&rad);
            }
        } else {
            let mut spread = Float::with_val(32, 0);
            for &m in &members {
                let d = Cf { re: cx.clone(), im: cy.clone() }.sub(&zs[m]).norm().sqrt();
                let d32 = Float::with_val(32, d);
                if d32 > spread {
                    spread = d32;
                }
            }
            spread *= 4u32;
            ball = ball.add_error(&spread);
        }
        out.push((ball, mult));
    }
    out.sort_by(|a, b| {
        let (ar, ai) = a.0.to_f64s();
        let (br, bi) = b.0.to_f64s();
        ar.partial_cmp(&br)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(ai.partial_cmp(&bi).unwrap_or(std::cmp::Ordering::Equal))
    });
    let total: usize = out.iter().map(|(_, m)| m).sum();
    if total != deg {
        return Err(Error::Indeterminate("root finder lost multiplicity count".into()));
    }
    Ok(out)
}

/// All complex roots of `poly` with multiplicity, as ball enclosures.
/// Clusters closer than about 2^(-prec/3) merge into one multiple root.
pub fn complex_roots(poly: &IntPoly, prec: u32) -> Result<Vec<(ComplexBall, usize)>> {
    let deg = poly.degree();
    if deg == 0 || poly.is_zero() {
        return Ok(vec![]);
    }
    let work = prec + 64;
    let coeffs: Vec<Cf> = poly.coeffs.iter().map(|c| Cf::from_integer(c, work)).collect();
    let zs = dk_iterate(&coeffs, deg, work, prec);
    let dpoly = poly.derivative();
    let eval = |z: &ComplexBall| poly.eval_ball(z);
    let deval = |z: &ComplexBall| dpoly.eval_ball(z);
    enclose_clusters(zs, deg, prec, &eval, &deval, Some(poly))
}

/// All complex roots of a polynomial given by ball coefficients, with
/// multiplicity. The enclosure radii absorb the coefficient uncertainty
/// through the residual bound.
pub fn complex_roots_with_coeffs(
    coeffs: &[ComplexBall],
    prec: u32,
) -> Result<Vec<(ComplexBall, usize)>> {
    let mut top = coeffs.len();
    while top > 0 && coeffs[top - 1].abs_upper().to_f64() < 1e-30 {
        top -= 1;
    }
    if top <= 1 {
        return Ok(vec![]);
    }
    let deg = top - 1;
    let work = prec + 64;
    let cf: Vec<Cf> = coeffs[..top]
        .iter()
        .map(|c| Cf {
            re: Float::with_val(work, c.re_mid()),
            im: Float::with_val(work, c.im_mid()),
        })
        .collect();
    let zs = dk_iterate(&cf, deg, work, prec);
    let eval = |z: &ComplexBall| -> ComplexBall {
        let p = z.prec();
        let mut acc = ComplexBall::zero(p);
        for c in coeffs[..top].iter().rev() {
            acc = acc.mul(z).add(&c.set_prec(p));
        }
        acc
    };
    let deval = |z: &ComplexBall| -> ComplexBall {
        let p = z.prec();
        let mut acc = ComplexBall::zero(p);
        for (i, c) in coeffs[1..top].iter().enumerate().rev() {
            let term = c.set_prec(p).mul_i64((i + 1) as i64);
            acc = acc.mul(z).add(&term);
        }
        acc
    };
    enclose_clusters(zs, deg, prec, &eval, &deval, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(cs: &[i64]) -> IntPoly {
        IntPoly::new(cs.iter().map(|&c| Integer::from(c)).collect())
    }

    #[test]
    fn quadratic_roots() {
        // (x-2)(x+3) = x^2 + x - 6
        let p = poly(&[-6, 1, 1]);
        let roots = complex_roots(&p, 128).unwrap();
        assert_eq!(roots.len(), 2);
        let vals: Vec<f64> = roots.iter().map(|(b, _)| b.re_f64()).collect();
        assert!((vals[0] + 3.0).abs() < 1e-20);
        assert!((vals[1] - 2.0).abs() < 1e-20);
    }

    #[test]
    fn double_root_clusters() {
        // (x-1)^2 (x+2) = x^3 - 3x + 2
        let p = poly(&[2, -3, 0, 1]);
        let roots = complex_roots(&p, 128).unwrap();
        let mults: Vec<usize> = roots.iter().map(|&(_, m)| m).collect();
        assert_eq!(mults.iter().sum::<usize>(), 3);
        assert!(mults.contains(&2), "expected a double root, got {mults:?}");
    }

    #[test]
    fn complex_pair() {
        let p = poly(&[1, 0, 1]);
        let roots = complex_roots(&p, 192).unwrap();
        assert_eq!(roots.len(), 2);
        for (b, _) in &roots {
            assert!(b.re_mid().clone().abs().to_f64() < 1e-40);
            assert!((b.im_mid().clone().abs().to_f64() - 1.0).abs() < 1e-40);
        }
    }

    #[test]
    fn residuals_tiny_for_random_quintic() {
        let p = poly(&[7, -3, 0, 11, -4, 5]);
        let roots = complex_roots(&p, 256).unwrap();
        assert_eq!(roots.iter().map(|&(_, m)| m).sum::<usize>(), 5);
        for (b, _) in &roots {
            let v = p.eval_ball(b);
            assert!(v.abs_upper().to_f64() < 1e-50);
        }
    }

    #[test]
    fn ball_coefficient_variant_matches() {
        let p = poly(&[-6, 1, 1]);
        let coeffs: Vec<ComplexBall> =
            p.coeffs.iter().map(|c| ComplexBall::from_integer(c, 192)).collect();
        let r1 = complex_roots(&p, 160).unwrap();
        let r2 = complex_roots_with_coeffs(&coeffs, 160).unwrap();
        assert_eq!(r1.len(), r2.len());
        for ((a, _), (b, _)) in r1.iter().zip(&r2) {
            assert!(a.sub(b).abs_upper().to_f64() < 1e-30);
        }
    }
}
