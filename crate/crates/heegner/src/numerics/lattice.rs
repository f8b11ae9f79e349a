//! Integer matrices, LLL reduction, Hermite normal form, kernels, and
//! lattice set operations. Rows are the basis vectors throughout.

use rug::{Integer, Rational};

use crate::{Error, Result};

/// A dense matrix of arbitrary-size integers, row major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Integer>,
}

impl IntMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMat { rows, cols, data: vec![Integer::new(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Integer::from(1);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Integer>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |v| v.len());
        assert!(rows.iter().all(|v| v.len() == c), "ragged rows");
        IntMat { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn from_i64_rows(rows: &[&[i64]]) -> Self {
        IntMat::from_rows(
            rows.iter().map(|r| r.iter().map(|&x| Integer::from(x)).collect()).collect(),
        )
    }

    pub fn row(&self, i: usize) -> &[Integer] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vec(&self, i: usize) -> Vec<Integer> {
        self.row(i).to_vec()
    }

    pub fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(i * self.cols + c, j * self.cols + c);
        }
    }

    /// row i -= k * row j
    pub fn row_submul(&mut self, i: usize, j: usize, k: &Integer) {
        if k.is_zero() {
            return;
        }
        for c in 0..self.cols {
            let t = Integer::from(k * &self[(j, c)]);
            self[(i, c)] -= t;
        }
    }

    pub fn negate_row(&mut self, i: usize) {
        for c in 0..self.cols {
            let v = std::mem::take(&mut self[(i, c)]);
            self[(i, c)] = -v;
        }
    }

    pub fn is_zero_row(&self, i: usize) -> bool {
        self.row(i).iter().all(|x| x.is_zero())
    }

    pub fn transpose(&self) -> IntMat {
        let mut t = IntMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    /// Vertical stack of two matrices with equal column counts.
    pub fn vstack(&self, other: &IntMat) -> IntMat {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        IntMat { rows: self.rows + other.rows, cols: self.cols, data }
    }

    /// Determinant of the Gram matrix B B^T (a lattice invariant).
    pub fn gram_det(&self) -> Integer {
        let n = self.rows;
        let mut g = vec![vec![Integer::new(); n]; n];
        for i in 0..n {
            for j in 0..n {
                g[i][j] = dot(self.row(i), self.row(j));
            }
        }
        det_bareiss(g)
    }
}

impl std::ops::Index<(usize, usize)> for IntMat {
    type Output = Integer;
    fn index(&self, (i, j): (usize, usize)) -> &Integer {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Integer {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[Integer], b: &[Integer]) -> Integer {
    let mut s = Integer::new();
    for (x, y) in a.iter().zip(b) {
        s += Integer::from(x * y);
    }
    s
}

/// Fraction-free determinant (Bareiss). Consumes its argument.
fn det_bareiss(mut m: Vec<Vec<Integer>>) -> Integer {
    let n = m.len();
    if n == 0 {
        return Integer::from(1);
    }
    let mut sign = 1i32;
    let mut prev = Integer::from(1);
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            let Some(p) = (k + 1..n).find(|&i| !m[i][k].is_zero()) else {
                return Integer::new();
            };
            m.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let t = Integer::from(&m[k][k] * &m[i][j]) - Integer::from(&m[i][k] * &m[k][j]);
                m[i][j] = t / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    let d = m[n - 1][n - 1].clone();
    if sign < 0 {
        -d
    } else {
        d
    }
}

/// LLL reduction with delta = 3/4. Returns a basis of the same lattice whose
/// first vector is within 2^((k-1)/2) of the shortest vector, k the rank.
/// Rows must be linearly independent.
pub fn lll_reduce(basis: &IntMat) -> Result<IntMat> {
    let mut b = basis.clone();
    lll_in_place(&mut b)?;
    Ok(b)
}

fn lll_in_place(b: &mut IntMat) -> Result<()> {
    let n = b.rows;
    if n == 0 {
        return Ok(());
    }
    // Exact Gram-Schmidt data: mu[i][j] for j < i and squared norms bstar[i].
    let gs = |b: &IntMat| -> Result<(Vec<Vec<Rational>>, Vec<Rational>)> {
        let n = b.rows;
        let mut mu = vec![vec![Rational::new(); n]; n];
        let mut bstar: Vec<Vec<Rational>> = Vec::with_capacity(n);
        let mut norms = vec![Rational::new(); n];
        for i in 0..n {
            let mut v: Vec<Rational> =
                b.row(i).iter().map(|x| Rational::from(x)).collect();
            for j in 0..i {
                let d = rat_dot_int(&bstar[j], b.row(i));
                if norms[j].cmp0() == std::cmp::Ordering::Equal {
                    return Err(Error::DegenerateBasis);
                }
                let m = d / &norms[j];
                for (vk, bk) in v.iter_mut().zip(&bstar[j]) {
                    *vk -= Rational::from(&m * bk);
                }
                mu[i][j] = m;
            }
            norms[i] = rat_norm(&v);
            if norms[i].cmp0() == std::cmp::Ordering::Equal {
                return Err(Error::DegenerateBasis);
            }
            bstar.push(v);
        }
        Ok((mu, norms))
    };

    let (mut mu, mut norms) = gs(b)?;
    let three_quarters = Rational::from((3, 4));
    let mut k = 1usize;
    while k < n {
        // size reduction with in-place mu updates
        for j in (0..k).rev() {
            let r = round_rat(&mu[k][j]);
            if !r.is_zero() {
                b.row_submul(k, j, &r);
                for l in 0..j {
                    let t = Rational::from(&mu[j][l] * &r);
                    mu[k][l] -= t;
                }
                mu[k][j] -= Rational::from(&r);
            }
        }
        // Lovasz condition
        let lhs = norms[k].clone();
        let musq = Rational::from(&mu[k][k - 1] * &mu[k][k - 1]);
        let rhs = (three_quarters.clone() - musq) * &norms[k - 1];
        if lhs >= rhs {
            k += 1;
        } else {
            b.swap_rows(k, k - 1);
            let (m2, n2) = gs(b)?;
            mu = m2;
            norms = n2;
            k = k.max(2) - 1;
        }
    }
    Ok(())
}

fn rat_dot_int(a: &[Rational], b: &[Integer]) -> Rational {
    let mut s = Rational::new();
    for (x, y) in a.iter().zip(b) {
        s += Rational::from(x * y);
    }
    s
}

fn rat_norm(a: &[Rational]) -> Rational {
    let mut s = Rational::new();
    for x in a {
        s += Rational::from(x * x);
    }
    s
}

/// Round to nearest integer: floor(q + 1/2).
fn round_rat(q: &Rational) -> Integer {
    let t = Rational::from(q + Rational::from((1, 2)));
    let (n, d) = (t.numer().clone(), t.denom().clone());
    n.div_rem_floor(d).0
}

/// Row-style Hermite normal form: pivots positive, entries above each pivot
/// reduced into [0, pivot), zero rows removed. Canonical for a given lattice.
pub fn hnf(mat: &IntMat) -> IntMat {
    let mut m = mat.clone();
    let rows = m.rows;
    let cols = m.cols;
    let mut pivot_row = 0usize;
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    for col in 0..cols {
        if pivot_row >= rows {
            break;
        }
        // eliminate below pivot_row in this column via gcd steps
        loop {
            let mut best: Option<usize> = None;
            for r in pivot_row..rows {
                if !m[(r, col)].is_zero() {
                    let better = match best {
                        None => true,
                        Some(b) => {
                            m[(r, col)].clone().abs() < m[(b, col)].clone().abs()
                        }
                    };
                    if better {
                        best = Some(r);
                    }
                }
            }
            let Some(r) = best else { break };
            m.swap_rows(pivot_row, r);
            if m[(pivot_row, col)].is_negative() {
                m.negate_row(pivot_row);
            }
            let mut again = false;
            for r in pivot_row + 1..rows {
                if !m[(r, col)].is_zero() {
                    let q = Integer::from(&m[(r, col)] / &m[(pivot_row, col)]);
                    m.row_submul(r, pivot_row, &q);
                    if !m[(r, col)].is_zero() {
                        again = true;
                    }
                }
            }
            if !again {
                break;
            }
        }
        if !m[(pivot_row, col)].is_zero() {
            pivots.push((pivot_row, col));
            pivot_row += 1;
        }
    }
    // reduce entries above pivots
    for &(pr, pc) in pivots.iter() {
        for r in 0..pr {
            let q = m[(r, pc)].clone().div_rem_floor(m[(pr, pc)].clone()).0;
            m.row_submul(r, pr, &q);
        }
    }
    // drop zero rows
    let kept: Vec<Vec<Integer>> =
        (0..rows).filter(|&r| !m.is_zero_row(r)).map(|r| m.row_vec(r)).collect();
    if kept.is_empty() {
        IntMat::zeros(0, cols)
    } else {
        IntMat { rows: kept.len(), cols, data: kept.into_iter().flatten().collect() }
    }
}

/// Basis of the left kernel {x : x M = 0} as rows, in HNF.
pub fn left_kernel(mat: &IntMat) -> IntMat {
    // Row-reduce [M | I]; rows whose M part vanishes carry kernel vectors.
    let rows = mat.rows;
    let aug_cols = mat.cols + rows;
    let mut m = IntMat::zeros(rows, aug_cols);
    for i in 0..rows {
        for j in 0..mat.cols {
            m[(i, j)] = mat[(i, j)].clone();
        }
        m[(i, mat.cols + i)] = Integer::from(1);
    }
    let mut pivot_row = 0usize;
    for col in 0..mat.cols {
        if pivot_row >= rows {
            break;
        }
        loop {
            let mut best: Option<usize> = None;
            for r in pivot_row..rows {
                if !m[(r, col)].is_zero() {
                    let better = match best {
                        None => true,
                        Some(b) => m[(r, col)].clone().abs() < m[(b, col)].clone().abs(),
                    };
                    if better {
                        best = Some(r);
                    }
                }
            }
            let Some(r) = best else { break };
            m.swap_rows(pivot_row, r);
            let mut again = false;
            for r in pivot_row + 1..rows {
                if !m[(r, col)].is_zero() {
                    let q = Integer::from(&m[(r, col)] / &m[(pivot_row, col)]);
                    m.row_submul(r, pivot_row, &q);
                    if !m[(r, col)].is_zero() {
                        again = true;
                    }
                }
            }
            if !again {
                break;
            }
        }
        if !m[(pivot_row, col)].is_zero() {
            pivot_row += 1;
        }
    }
    let mut kernel_rows: Vec<Vec<Integer>> = Vec::new();
    for r in 0..rows {
        if (0..mat.cols).all(|c| m[(r, c)].is_zero()) {
            kernel_rows.push((0..rows).map(|c| m[(r, mat.cols + c)].clone()).collect());
        }
    }
    if kernel_rows.is_empty() {
        return IntMat::zeros(0, rows);
    }
    hnf(&IntMat::from_rows(kernel_rows))
}

/// Basis (rows, HNF) of the intersection of the row lattices of `a` and `b`.
pub fn lattice_intersection(a: &IntMat, b: &IntMat) -> IntMat {
    assert_eq!(a.cols, b.cols);
    if a.rows == 0 || b.rows == 0 {
        return IntMat::zeros(0, a.cols);
    }
    let stacked = a.vstack(b);
    let k = left_kernel(&stacked);
    // kernel rows (u | v) with u a = -v b => u a lies in both lattices
    let mut rows: Vec<Vec<Integer>> = Vec::new();
    for i in 0..k.rows {
        let mut v = vec![Integer::new(); a.cols];
        for r in 0..a.rows {
            for c in 0..a.cols {
                v[c] += Integer::from(&k[(i, r)] * &a[(r, c)]);
            }
        }
        if v.iter().any(|x| !x.is_zero()) {
            rows.push(v);
        }
    }
    if rows.is_empty() {
        return IntMat::zeros(0, a.cols);
    }
    hnf(&IntMat::from_rows(rows))
}

/// Does the row lattice of `basis` contain `v`? Solves x basis = v over Z
/// against the HNF.
pub fn lattice_contains(basis: &IntMat, v: &[Integer]) -> bool {
    let h = hnf(basis);
    let mut rem: Vec<Integer> = v.to_vec();
    let mut row = 0usize;
    for col in 0..h.cols {
        if row >= h.rows {
            break;
        }
        if h[(row, col)].is_zero() {
            continue;
        }
        if !rem[col].is_zero() {
            let (q, r) = rem[col].clone().div_rem_euc(h[(row, col)].clone());
            if !r.is_zero() {
                return false;
            }
            for c in 0..h.cols {
                rem[c] -= Integer::from(&q * &h[(row, c)]);
            }
        }
        row += 1;
    }
    rem.iter().all(|x| x.is_zero())
}

/// Is the row lattice of `a` contained in the row lattice of `b`?
pub fn lattice_subset(a: &IntMat, b: &IntMat) -> bool {
    (0..a.rows).all(|i| lattice_contains(b, a.row(i)))
}

/// Saturation of the row lattice: (span_Q of rows) intersected with Z^n.
pub fn saturate(basis: &IntMat) -> IntMat {
    let h = hnf(basis);
    if h.rows == 0 {
        return h;
    }
    // The saturation is the left kernel of the left kernel of the transpose:
    // ker(x -> x K^T) where K spans the orthogonal complement over Z.
    let k = left_kernel(&h.transpose()); // rows orthogonal-complement coords
    if k.rows == 0 {
        // full rank: saturation is Z^n
        return hnf(&IntMat::identity(h.cols));
    }
    let kt = k.transpose(); // cols x ? ... rows: h.cols? see below
    // x in Z^n lies in the saturation iff x . r = 0 for each row r of k
    // (k rows span the rational orthogonal complement of the row span).
    left_kernel_cols(&kt)
}

/// Left kernel of a map given by columns: {x : x M = 0} where M has
/// rows = length of x. Same as left_kernel but keeps the naming clear at
/// call sites working with transposed data.
fn left_kernel_cols(m: &IntMat) -> IntMat {
    left_kernel(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_already_reduced() {
        let id = IntMat::identity(3);
        let r = lll_reduce(&id).unwrap();
        assert_eq!(r, id);
    }

    #[test]
    fn lll_finds_shortest_in_plane() {
        // oracle: brute-force enumeration over |c| <= 50
        let basis = IntMat::from_i64_rows(&[&[201, 37], &[1648, 297]]);
        let reduced = lll_reduce(&basis).unwrap();
        let mut best: Option<(Integer, (i64, i64))> = None;
        for c1 in -50i64..=50 {
            for c2 in -50i64..=50 {
                if c1 == 0 && c2 == 0 {
                    continue;
                }
                let x = Integer::from(201 * c1 + 1648 * c2);
                let y = Integer::from(37 * c1 + 297 * c2);
                let n = Integer::from(&x * &x) + Integer::from(&y * &y);
                if best.as_ref().is_none_or(|(bn, _)| &n < bn) {
                    best = Some((n, (c1, c2)));
                }
            }
        }
        let (short_norm, _) = best.unwrap();
        let first = reduced.row(0);
        let got = Integer::from(&first[0] * &first[0]) + Integer::from(&first[1] * &first[1]);
        assert_eq!(got, short_norm, "first LLL vector must be the true shortest");
    }

    #[test]
    fn unimodular_transform_preserves_gram_det() {
        let basis = IntMat::from_i64_rows(&[&[4, 1, 0], &[1, 3, 1], &[0, 1, 5]]);
        // apply a unimodular transform
        let mut t = basis.clone();
        t.row_submul(0, 1, &Integer::from(3));
        t.row_submul(2, 0, &Integer::from(-2));
        t.swap_rows(0, 2);
        let r1 = lll_reduce(&basis).unwrap();
        let r2 = lll_reduce(&t).unwrap();
        assert_eq!(r1.gram_det(), r2.gram_det());
        assert_eq!(r1.gram_det(), basis.gram_det());
    }

    #[test]
    fn degenerate_basis_rejected() {
        let basis = IntMat::from_i64_rows(&[&[1, 2], &[2, 4]]);
        assert!(matches!(lll_reduce(&basis), Err(Error::DegenerateBasis)));
    }

    #[test]
    fn lll_preserves_lattice_hnf() {
        let basis = IntMat::from_i64_rows(&[&[12, 5, 7], &[8, 9, -3], &[4, 4, 4]]);
        let reduced = lll_reduce(&basis).unwrap();
        assert_eq!(hnf(&basis), hnf(&reduced));
    }

    #[test]
    fn hnf_canonical_shape() {
        let m = IntMat::from_i64_rows(&[&[2, 4, 4], &[-6, 6, 12], &[10, -4, -16]]);
        let h = hnf(&m);
        // pivots positive, entries above reduced
        for i in 0..h.rows {
            let pc = (0..h.cols).find(|&c| !h[(i, c)].is_zero()).unwrap();
            assert!(h[(i, pc)].is_positive());
            for r in 0..i {
                assert!(h[(r, pc)] >= 0 && h[(r, pc)] < h[(i, pc)]);
            }
        }
    }

    #[test]
    fn kernel_and_intersection() {
        let m = IntMat::from_i64_rows(&[&[1, 2, 3], &[2, 4, 6], &[1, 0, 1]]);
        let k = left_kernel(&m);
        assert_eq!(k.rows, 1);
        // x M = 0 check
        for c in 0..3 {
            let mut s = Integer::new();
            for r in 0..3 {
                s += Integer::from(&k[(0, r)] * &m[(r, c)]);
            }
            assert!(s.is_zero());
        }

        let a = IntMat::from_i64_rows(&[&[2, 0], &[0, 3]]);
        let b = IntMat::from_i64_rows(&[&[3, 0], &[0, 2]]);
        let i = lattice_intersection(&a, &b);
        assert_eq!(i, hnf(&IntMat::from_i64_rows(&[&[6, 0], &[0, 6]])));
    }

    #[test]
    fn saturation_divides_out_index() {
        // rank 1: span_Q((2,4)) cap Z^2 = Z(1,2)
        let m = IntMat::from_i64_rows(&[&[2, 4]]);
        let s = saturate(&m);
        assert_eq!(s, hnf(&IntMat::from_i64_rows(&[&[1, 2]])));
        // full rank saturates to Z^n
        let f = IntMat::from_i64_rows(&[&[2, 0], &[0, 3]]);
        assert_eq!(saturate(&f), IntMat::identity(2));
    }

    #[test]
    fn containment() {
        let a = IntMat::from_i64_rows(&[&[2, 0], &[0, 2]]);
        assert!(lattice_contains(&a, &[Integer::from(4), Integer::from(-2)]));
        assert!(!lattice_contains(&a, &[Integer::from(1), Integer::from(0)]));
        let b = IntMat::from_i64_rows(&[&[1, 0], &[0, 1]]);
        assert!(lattice_subset(&a, &b));
        assert!(!lattice_subset(&b, &a));
    }
}
