//! Dense exact matrices over Q and echelon-form rank machinery.
//!
//! Entries are arbitrary-precision rationals kept in lowest terms by the
//! underlying `BigRational`. Sizes in this crate are tiny (n <= 8), so
//! plain Gaussian elimination with exact arithmetic is the right tool;
//! rank and kernel computations work fraction-free over Z to keep
//! intermediate entries small.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Dense matrix over Q with exact entries.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigRational>,
}

/// Shorthand for building an exact rational from an integer.
pub fn rat(i: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(i))
}

impl RatMatrix {
    /// Builds from row-major data; length must equal rows*cols.
    pub fn new(rows: usize, cols: usize, data: Vec<BigRational>) -> Self {
        assert_eq!(data.len(), rows * cols, "shape mismatch");
        RatMatrix { rows, cols, data }
    }

    /// Zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMatrix {
            rows,
            cols,
            data: vec![BigRational::zero(); rows * cols],
        }
    }

    /// Identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigRational::one();
        }
        m
    }

    /// Builds from machine-integer rows.
    pub fn from_i64(rows: &[&[i64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c);
            for &x in *row {
                data.push(rat(x));
            }
        }
        RatMatrix::new(r, c, data)
    }

    /// Row count.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Column count.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row-major entries.
    pub fn data(&self) -> &[BigRational] {
        &self.data
    }

    /// Matrix product.
    pub fn mul(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!(self.cols, other.rows, "inner dimension mismatch");
        let mut out = RatMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        let prod = a * b;
                        out[(i, j)] += prod;
                    }
                }
            }
        }
        out
    }

    /// Sum.
    pub fn add(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        RatMatrix::new(self.rows, self.cols, data)
    }

    /// Difference self - other.
    pub fn sub(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        RatMatrix::new(self.rows, self.cols, data)
    }

    /// Scalar multiple.
    pub fn scale(&self, c: &BigRational) -> RatMatrix {
        let data = self.data.iter().map(|a| a * c).collect();
        RatMatrix::new(self.rows, self.cols, data)
    }

    /// Transpose.
    pub fn transpose(&self) -> RatMatrix {
        let mut out = RatMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].clone();
            }
        }
        out
    }

    /// Exact determinant by Gaussian elimination (square only).
    pub fn det(&self) -> BigRational {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut det = BigRational::one();
        for col in 0..n {
            let piv = (col..n).find(|&r| !a[(r, col)].is_zero());
            let piv = match piv {
                Some(p) => p,
                None => return BigRational::zero(),
            };
            if piv != col {
                for j in 0..n {
                    let tmp = a[(piv, j)].clone();
                    a[(piv, j)] = a[(col, j)].clone();
                    a[(col, j)] = tmp;
                }
                det = -det;
            }
            let p = a[(col, col)].clone();
            det *= p.clone();
            for r in (col + 1)..n {
                if a[(r, col)].is_zero() {
                    continue;
                }
                let f = &a[(r, col)] / &p;
                for j in col..n {
                    let sub = &f * &a[(col, j)];
                    a[(r, j)] -= sub;
                }
            }
        }
        det
    }

    /// Exact inverse; None when singular.
    pub fn inverse(&self) -> Option<RatMatrix> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = RatMatrix::identity(n);
        for col in 0..n {
            let piv = (col..n).find(|&r| !a[(r, col)].is_zero())?;
            if piv != col {
                for j in 0..n {
                    let tmp = a[(piv, j)].clone();
                    a[(piv, j)] = a[(col, j)].clone();
                    a[(col, j)] = tmp;
                    let tmp = inv[(piv, j)].clone();
                    inv[(piv, j)] = inv[(col, j)].clone();
                    inv[(col, j)] = tmp;
                }
            }
            let p = a[(col, col)].clone();
            for j in 0..n {
                a[(col, j)] /= p.clone();
                inv[(col, j)] /= p.clone();
            }
            for r in 0..n {
                if r == col || a[(r, col)].is_zero() {
                    continue;
                }
                let f = a[(r, col)].clone();
                for j in 0..n {
                    let s = &f * &a[(col, j)];
                    a[(r, j)] -= s;
                    let s = &f * &inv[(col, j)];
                    inv[(r, j)] -= s;
                }
            }
        }
        Some(inv)
    }

    /// Integer power (non-negative exponent).
    pub fn pow(&self, mut e: u64) -> RatMatrix {
        assert_eq!(self.rows, self.cols);
        let mut base = self.clone();
        let mut acc = RatMatrix::identity(self.rows);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// True iff every entry is an integer.
    pub fn is_integral(&self) -> bool {
        self.data.iter().all(|x| x.denom().is_one())
    }

    /// Lcm of all entry denominators.
    pub fn denominator_lcm(&self) -> BigInt {
        let mut l = BigInt::one();
        for x in &self.data {
            l = l.lcm(x.denom());
        }
        l
    }

    /// True iff skew-symmetric.
    pub fn is_skew(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self[(i, j)] != -&self[(j, i)] {
                    return false;
                }
            }
        }
        true
    }

    /// Rank of (self - identity); cheap transvection test helper.
    pub fn rank_minus_identity(&self) -> usize {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut rows = Vec::new();
        for i in 0..n {
            let mut row = Vec::with_capacity(n);
            for j in 0..n {
                let mut v = self[(i, j)].clone();
                if i == j {
                    v -= BigRational::one();
                }
                row.push(v);
            }
            rows.push(row);
        }
        rank_of_rows(&rows)
    }

    /// Flattens row-major into a length rows*cols vector.
    pub fn flatten(&self) -> Vec<BigRational> {
        self.data.clone()
    }

    /// Companion matrix of a monic polynomial: ones on the subdiagonal and
    /// the negated coefficients down the last column.
    pub fn companion(poly: &crate::poly::IntPoly) -> RatMatrix {
        assert!(poly.is_monic(), "companion needs a monic polynomial");
        let n = poly.degree();
        let mut m = RatMatrix::zeros(n, n);
        for i in 1..n {
            m[(i, i - 1)] = BigRational::one();
        }
        for i in 0..n {
            m[(i, n - 1)] = BigRational::from_integer(-poly.coeff(i));
        }
        m
    }

    /// Characteristic polynomial via exact Faddeev–LeVerrier.
    pub fn char_poly(&self) -> crate::poly::IntPoly {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        // c[n] = 1; M_0 = 0; iterate M_{k} = A M_{k-1} + c_{n-k+1} I
        let mut coeffs = vec![BigRational::zero(); n + 1];
        coeffs[n] = BigRational::one();
        let mut m = RatMatrix::zeros(n, n);
        for k in 1..=n {
            // M <- A*M + c_{n-k+1} * I
            m = self.mul(&m);
            let c = coeffs[n - k + 1].clone();
            for i in 0..n {
                m[(i, i)] += c.clone();
            }
            let am = self.mul(&m);
            let mut tr = BigRational::zero();
            for i in 0..n {
                tr += am[(i, i)].clone();
            }
            coeffs[n - k] = -tr / BigRational::from_integer(BigInt::from(k as i64));
        }
        let ints: Vec<BigInt> = coeffs
            .into_iter()
            .map(|c| {
                assert!(c.denom().is_one(), "char poly of integral-like matrix");
                c.to_integer()
            })
            .collect();
        crate::poly::IntPoly::new(ints)
    }

    /// The standard symplectic form J_n: block ((0, I), (-I, 0)) in the
    /// basis (e_1..e_s, f_1..f_s), n = 2s.
    pub fn standard_j(n: usize) -> RatMatrix {
        assert!(n % 2 == 0);
        let s = n / 2;
        let mut j = RatMatrix::zeros(n, n);
        for i in 0..s {
            j[(i, s + i)] = BigRational::one();
            j[(s + i, i)] = -BigRational::one();
        }
        j
    }

    /// True iff self * J * self^T == J.
    pub fn is_symplectic(&self) -> bool {
        if self.rows != self.cols || self.rows % 2 != 0 {
            return false;
        }
        let j = RatMatrix::standard_j(self.rows);
        self.mul(&j).mul(&self.transpose()) == j
    }

    /// Reduces entries mod m; error if a denominator is not invertible.
    pub fn to_mod(&self, m: u64) -> Result<crate::modmat::ModMatrix> {
        crate::modmat::ModMatrix::from_rat(self, m)
    }
}

impl std::ops::Index<(usize, usize)> for RatMatrix {
    type Output = BigRational;
    fn index(&self, (i, j): (usize, usize)) -> &BigRational {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RatMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigRational {
        &mut self.data[i * self.cols + j]
    }
}

/// Exact rank of a list of rational rows (consumed as a working copy).
fn rank_of_rows(rows: &[Vec<BigRational>]) -> usize {
    let mut ech = QEchelon::new();
    for r in rows {
        ech.insert(r.clone());
    }
    ech.dim()
}

/// Incremental echelon form over Q, fraction-free inside (integer rows
/// kept primitive); used by span tracking during density spinning.
#[derive(Debug, Default, Clone)]
pub struct QEchelon {
    // rows in echelon form: (pivot column, primitive integer row)
    rows: Vec<(usize, Vec<BigInt>)>,
}

impl QEchelon {
    /// Empty echelon.
    pub fn new() -> Self {
        QEchelon { rows: Vec::new() }
    }

    /// Current span dimension.
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Inserts a vector; returns true when the span grew.
    pub fn insert(&mut self, v: Vec<BigRational>) -> bool {
        // clear denominators
        let mut den = BigInt::one();
        for x in &v {
            den = den.lcm(x.denom());
        }
        let mut row: Vec<BigInt> = v
            .iter()
            .map(|x| x.numer() * (&den / x.denom()))
            .collect();
        self.insert_int(&mut row)
    }

    /// Inserts an integer vector in place; returns true when the span grew.
    pub fn insert_int(&mut self, row: &mut Vec<BigInt>) -> bool {
        for (piv, r) in &self.rows {
            if !row[*piv].is_zero() {
                // row <- r[piv]*row - row[piv]*r, keeping integrality
                let a = r[*piv].clone();
                let b = row[*piv].clone();
                for j in 0..row.len() {
                    row[j] = &row[j] * &a - &b * &r[j];
                }
            }
        }
        let piv = match row.iter().position(|x| !x.is_zero()) {
            Some(p) => p,
            None => return false,
        };
        // make primitive to control growth
        let mut g = BigInt::zero();
        for x in row.iter() {
            g = g.gcd(x);
        }
        if !g.is_one() && !g.is_zero() {
            for x in row.iter_mut() {
                *x = &*x / &g;
            }
        }
        if row[piv].is_negative() {
            for x in row.iter_mut() {
                *x = -&*x;
            }
        }
        let pos = self
            .rows
            .binary_search_by_key(&piv, |(p, _)| *p)
            .unwrap_err();
        self.rows.insert(pos, (piv, std::mem::take(row)));
        true
    }
}

/// Exact basis of the right null space of M, each vector scaled to
/// primitive integer form with positive first nonzero entry.
pub fn rational_kernel(m: &RatMatrix) -> Vec<Vec<BigInt>> {
    let rows = m.rows();
    let cols = m.cols();
    // row-reduce a working copy over Q
    let mut a: Vec<Vec<BigRational>> = (0..rows)
        .map(|i| (0..cols).map(|j| m[(i, j)].clone()).collect())
        .collect();
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0usize;
    for c in 0..cols {
        let piv = (r..rows).find(|&i| !a[i][c].is_zero());
        let piv = match piv {
            Some(p) => p,
            None => continue,
        };
        a.swap(r, piv);
        let p = a[r][c].clone();
        for j in 0..cols {
            a[r][j] /= p.clone();
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in 0..cols {
                    let s = &f * &a[r][j];
                    a[i][j] -= s;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    let pivot_set: std::collections::HashSet<usize> = pivots.iter().copied().collect();
    let mut basis = Vec::new();
    for free in 0..cols {
        if pivot_set.contains(&free) {
            continue;
        }
        let mut v = vec![BigRational::zero(); cols];
        v[free] = BigRational::one();
        for (ri, &pc) in pivots.iter().enumerate() {
            v[pc] = -a[ri][free].clone();
        }
        // primitive integer scaling
        let mut den = BigInt::one();
        for x in &v {
            den = den.lcm(x.denom());
        }
        let mut iv: Vec<BigInt> = v.iter().map(|x| x.numer() * (&den / x.denom())).collect();
        let mut g = BigInt::zero();
        for x in &iv {
            g = g.gcd(x);
        }
        if !g.is_zero() && !g.is_one() {
            for x in iv.iter_mut() {
                *x = &*x / &g;
            }
        }
        if let Some(first) = iv.iter().find(|x| !x.is_zero()) {
            if first.is_negative() {
                for x in iv.iter_mut() {
                    *x = -&*x;
                }
            }
        }
        basis.push(iv);
    }
    basis
}

/// Field selector for `span_dimension`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpanField {
    /// Over the rationals.
    Q,
    /// Over the prime field F_p.
    Fp(u64),
}

/// Exact rank of a list of equal-length rational vectors over Q or F_p.
pub fn span_dimension(vectors: &[Vec<BigRational>], field: SpanField) -> Result<usize> {
    match field {
        SpanField::Q => {
            let mut ech = QEchelon::new();
            for v in vectors {
                ech.insert(v.clone());
            }
            Ok(ech.dim())
        }
        SpanField::Fp(p) => {
            let mut ech = FpEchelon::new(p);
            for v in vectors {
                let mut row = Vec::with_capacity(v.len());
                for x in v {
                    row.push(rat_mod_p(x, p)?);
                }
                ech.insert(row);
            }
            Ok(ech.dim())
        }
    }
}

/// Reduces an exact rational mod p; error when the denominator is
/// divisible by p.
pub fn rat_mod_p(x: &BigRational, p: u64) -> Result<u64> {
    let pb = BigInt::from(p);
    let den = x.denom().mod_floor(&pb);
    let den64: u64 = den.try_into().unwrap();
    if den64 == 0 {
        return Err(Error::DenominatorNotInvertible(p));
    }
    let num = x.numer().mod_floor(&pb);
    let num64: u64 = num.try_into().unwrap();
    Ok((num64 as u128 * mod_inv_u64(den64, p).unwrap() as u128 % p as u128) as u64)
}

/// Modular inverse of a mod m for coprime a (extended Euclid); None when
/// gcd(a, m) > 1.
pub fn mod_inv_u64(a: u64, m: u64) -> Option<u64> {
    let (mut old_r, mut r) = (a as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        let tmp = old_r - q * r;
        old_r = r;
        r = tmp;
        let tmp = old_s - q * s;
        old_s = s;
        s = tmp;
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m as i128) as u64)
}

/// Incremental echelon over F_p.
#[derive(Debug, Clone)]
pub struct FpEchelon {
    p: u64,
    rows: Vec<(usize, Vec<u64>)>,
}

impl FpEchelon {
    /// Empty echelon over F_p.
    pub fn new(p: u64) -> Self {
        FpEchelon { p, rows: Vec::new() }
    }

    /// Current dimension.
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Inserts a vector of residues; returns true when the span grew.
    pub fn insert(&mut self, mut row: Vec<u64>) -> bool {
        let p = self.p;
        for x in row.iter_mut() {
            *x %= p;
        }
        for (piv, r) in &self.rows {
            if row[*piv] != 0 {
                let f = row[*piv] % p;
                for j in 0..row.len() {
                    row[j] =
                        (row[j] + ((p - f) as u128 * r[j] as u128 % p as u128) as u64) % p;
                }
            }
        }
        let piv = match row.iter().position(|&x| x != 0) {
            Some(pv) => pv,
            None => return false,
        };
        let inv = mod_inv_u64(row[piv], p).expect("pivot invertible in a field");
        for x in row.iter_mut() {
            *x = (*x as u128 * inv as u128 % p as u128) as u64;
        }
        let pos = self
            .rows
            .binary_search_by_key(&piv, |(pv, _)| *pv)
            .unwrap_err();
        self.rows.insert(pos, (piv, row));
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::IntPoly;

    #[test]
    fn inverse_roundtrip() {
        let m = RatMatrix::from_i64(&[&[2, 1, 0], &[1, 3, 1], &[0, 1, 4]]);
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv), RatMatrix::identity(3));
        assert_eq!(inv.mul(&m), RatMatrix::identity(3));
    }

    #[test]
    fn det_values() {
        let m = RatMatrix::from_i64(&[&[2, 1], &[1, 3]]);
        assert_eq!(m.det(), rat(5));
        let s = RatMatrix::from_i64(&[&[1, 2], &[2, 4]]);
        assert_eq!(s.det(), rat(0));
        assert!(s.inverse().is_none());
    }

    #[test]
    fn kernel_examples() {
        // zero 2x2 -> standard basis
        let z = RatMatrix::zeros(2, 2);
        let k = rational_kernel(&z);
        assert_eq!(k.len(), 2);
        // identity -> empty
        assert!(rational_kernel(&RatMatrix::identity(3)).is_empty());
        // (2 -4) -> (2,1)
        let m = RatMatrix::from_i64(&[&[2, -4]]);
        let k = rational_kernel(&m);
        assert_eq!(k, vec![vec![BigInt::from(2), BigInt::from(1)]]);
    }

    #[test]
    fn span_dimensions() {
        let e1 = vec![rat(1), rat(0)];
        let e2 = vec![rat(0), rat(1)];
        let sum = vec![rat(1), rat(1)];
        assert_eq!(
            span_dimension(&[e1.clone(), e2.clone(), sum], SpanField::Q).unwrap(),
            2
        );
        let v1 = vec![rat(1), rat(2)];
        let v2 = vec![rat(3), rat(6)];
        assert_eq!(span_dimension(&[v1, v2], SpanField::Fp(5)).unwrap(), 1);
        // denominator divisible by p is an error
        let bad = vec![BigRational::new(BigInt::from(1), BigInt::from(5))];
        assert_eq!(
            span_dimension(&[bad], SpanField::Fp(5)),
            Err(crate::error::Error::DenominatorNotInvertible(5))
        );
    }

    #[test]
    fn rank_kernel_consistency() {
        let m = RatMatrix::from_i64(&[&[1, 2, 3], &[2, 4, 6], &[1, 0, 1]]);
        let rows: Vec<Vec<BigRational>> = (0..3)
            .map(|i| (0..3).map(|j| m[(i, j)].clone()).collect())
            .collect();
        let rank = span_dimension(&rows, SpanField::Q).unwrap();
        assert_eq!(rank + rational_kernel(&m).len(), 3);
    }

    #[test]
    fn companion_and_charpoly() {
        let f = IntPoly::from_i64(&[1, -4, 6, -4, 1]); // (t-1)^4
        let a = RatMatrix::companion(&f);
        assert_eq!(a[(1, 0)], rat(1));
        // last column = negated coefficients
        assert_eq!(a[(0, 3)], rat(-1));
        assert_eq!(a[(1, 3)], rat(4));
        assert_eq!(a[(2, 3)], rat(-6));
        assert_eq!(a[(3, 3)], rat(4));
        assert_eq!(a.char_poly(), f);
    }

    #[test]
    fn standard_j_is_skew_and_symplectic() {
        let j = RatMatrix::standard_j(6);
        assert!(j.is_skew());
        assert_eq!(j.det(), rat(1));
        assert!(RatMatrix::identity(6).is_symplectic());
    }

    #[test]
    fn pow_matches_repeated_mul() {
        let m = RatMatrix::from_i64(&[&[1, 1], &[0, 1]]);
        assert_eq!(m.pow(5)[(0, 1)], rat(5));
        assert_eq!(m.pow(0), RatMatrix::identity(2));
    }
}
