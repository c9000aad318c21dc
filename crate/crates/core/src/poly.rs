//! Exact univariate integer polynomials and cyclotomic generation.
//!
//! Coefficients are arbitrary-precision integers, stored little-endian
//! (index = power of t). Cyclotomic polynomials come from the classical
//! recursion: divide t^k - 1 exactly by the cyclotomics of the proper
//! divisors of k. A degree-bounded factorizer recognizes products of
//! cyclotomics by trial division, which is all the factoring the
//! hypergeometric construction needs.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::collections::HashMap;
use std::sync::Mutex;
use std::sync::OnceLock;

/// Dense univariate polynomial over Z, little-endian coefficients.
///
/// The zero polynomial is the empty coefficient vector; all constructors
/// trim trailing zeros so the leading coefficient is nonzero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntPoly {
    coeffs: Vec<BigInt>,
}

impl IntPoly {
    /// Builds a polynomial from little-endian coefficients, trimming.
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().map_or(false, Zero::is_zero) {
            coeffs.pop();
        }
        IntPoly { coeffs }
    }

    /// Builds from machine integers, little-endian.
    pub fn from_i64(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    /// The zero polynomial.
    pub fn zero() -> Self {
        IntPoly { coeffs: vec![] }
    }

    /// The constant polynomial 1.
    pub fn one() -> Self {
        IntPoly {
            coeffs: vec![BigInt::one()],
        }
    }

    /// t^k - 1.
    pub fn t_pow_minus_one(k: usize) -> Self {
        let mut c = vec![BigInt::zero(); k + 1];
        c[0] = -BigInt::one();
        c[k] = BigInt::one();
        IntPoly { coeffs: c }
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// True iff every coefficient is zero.
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient of t^i (zero beyond the degree).
    pub fn coeff(&self, i: usize) -> BigInt {
        self.coeffs.get(i).cloned().unwrap_or_else(BigInt::zero)
    }

    /// Little-endian coefficient slice.
    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    /// Leading coefficient (zero for the zero polynomial).
    pub fn leading(&self) -> BigInt {
        self.coeffs.last().cloned().unwrap_or_else(BigInt::zero)
    }

    /// True iff monic.
    pub fn is_monic(&self) -> bool {
        self.leading().is_one()
    }

    /// Value at 0, i.e. the constant term.
    pub fn constant_term(&self) -> BigInt {
        self.coeff(0)
    }

    /// Exact sum.
    pub fn add(&self, other: &IntPoly) -> IntPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut c = Vec::with_capacity(n);
        for i in 0..n {
            c.push(self.coeff(i) + other.coeff(i));
        }
        IntPoly::new(c)
    }

    /// Exact difference self - other.
    pub fn sub(&self, other: &IntPoly) -> IntPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut c = Vec::with_capacity(n);
        for i in 0..n {
            c.push(self.coeff(i) - other.coeff(i));
        }
        IntPoly::new(c)
    }

    /// Exact product.
    pub fn mul(&self, other: &IntPoly) -> IntPoly {
        if self.is_zero() || other.is_zero() {
            return IntPoly::zero();
        }
        let mut c = vec![BigInt::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        IntPoly::new(c)
    }

    /// Exact division; returns None when the division has a remainder or
    /// the divisor's leading coefficient does not divide on the nose.
    pub fn div_exact(&self, divisor: &IntPoly) -> Option<IntPoly> {
        if divisor.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(IntPoly::zero());
        }
        if self.degree() < divisor.degree() {
            return None;
        }
        let mut rem = self.coeffs.clone();
        let dl = divisor.leading();
        let dd = divisor.degree();
        let qd = self.degree() - dd;
        let mut q = vec![BigInt::zero(); qd + 1];
        for i in (0..=qd).rev() {
            let num = rem[i + dd].clone();
            if (&num % &dl) != BigInt::zero() {
                return None;
            }
            let c = num / &dl;
            for (j, d) in divisor.coeffs.iter().enumerate() {
                rem[i + j] -= &c * d;
            }
            q[i] = c;
        }
        if rem.iter().any(|c| !c.is_zero()) {
            return None;
        }
        Some(IntPoly::new(q))
    }

    /// Polynomial gcd over Q, returned primitive with positive leading
    /// coefficient (subresultant-free: content-stripped Euclid).
    pub fn gcd(&self, other: &IntPoly) -> IntPoly {
        let mut a = self.primitive_part();
        let mut b = other.primitive_part();
        while !b.is_zero() {
            let r = a.pseudo_rem(&b).primitive_part();
            a = b;
            b = r;
        }
        if a.leading().is_negative() {
            a = a.neg();
        }
        a
    }

    /// Pseudo-remainder of self by other (leading-coefficient scaled).
    fn pseudo_rem(&self, other: &IntPoly) -> IntPoly {
        let mut rem = self.clone();
        let dl = other.leading();
        let dd = other.degree();
        while !rem.is_zero() && rem.degree() >= dd {
            let shift = rem.degree() - dd;
            let lead = rem.leading();
            // rem <- dl*rem - lead * t^shift * other
            let mut scaled = Vec::with_capacity(rem.coeffs.len());
            for c in &rem.coeffs {
                scaled.push(c * &dl);
            }
            for (j, d) in other.coeffs.iter().enumerate() {
                scaled[shift + j] -= &lead * d;
            }
            rem = IntPoly::new(scaled);
        }
        rem
    }

    /// Content (gcd of coefficients), non-negative.
    pub fn content(&self) -> BigInt {
        let mut g = BigInt::zero();
        for c in &self.coeffs {
            g = gcd_big(&g, c);
        }
        g
    }

    /// self divided by its content (zero stays zero).
    pub fn primitive_part(&self) -> IntPoly {
        let c = self.content();
        if c.is_zero() || c.is_one() {
            return self.clone();
        }
        IntPoly::new(self.coeffs.iter().map(|x| x / &c).collect())
    }

    /// Negation.
    pub fn neg(&self) -> IntPoly {
        IntPoly::new(self.coeffs.iter().map(|c| -c).collect())
    }

    /// Coefficient list reversed (the "reciprocal" polynomial t^deg·p(1/t)).
    pub fn reversed(&self) -> IntPoly {
        let mut c = self.coeffs.clone();
        c.reverse();
        IntPoly::new(c)
    }

    /// True iff the coefficient list is a palindrome (self-reciprocal).
    pub fn is_palindrome(&self) -> bool {
        *self == self.reversed()
    }
}

fn gcd_big(a: &BigInt, b: &BigInt) -> BigInt {
    use num_integer::Integer;
    a.gcd(b)
}

/// Euler's totient for small k.
pub fn euler_phi(k: u32) -> u32 {
    let mut n = k;
    let mut result = k;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            while n % p == 0 {
                n /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result
}

/// The k-th cyclotomic polynomial, memoized.
///
/// Computed as (t^k - 1) / prod of cyclotomic(d) over proper divisors d,
/// each division exact by construction.
pub fn cyclotomic(k: u32) -> IntPoly {
    static CACHE: OnceLock<Mutex<HashMap<u32, IntPoly>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(p) = cache.lock().unwrap().get(&k) {
        return p.clone();
    }
    let result = if k == 1 {
        IntPoly::from_i64(&[-1, 1])
    } else {
        let mut num = IntPoly::t_pow_minus_one(k as usize);
        for d in 1..k {
            if k % d == 0 {
                let cd = cyclotomic(d);
                num = num
                    .div_exact(&cd)
                    .expect("cyclotomic division is always exact");
            }
        }
        num
    };
    cache.lock().unwrap().insert(k, result.clone());
    result
}

/// Multiset of cyclotomic indices, sorted ascending; the canonical name
/// of a cyclotomic-product polynomial.
pub type CycMultiset = Vec<u32>;

/// Product of cyclotomics named by a multiset of indices.
pub fn cyclotomic_product(ms: &[u32]) -> IntPoly {
    let mut p = IntPoly::one();
    for &k in ms {
        p = p.mul(&cyclotomic(k));
    }
    p
}

/// All multisets of cyclotomic indices whose degrees sum to n,
/// sorted lexicographically. These are exactly the monic degree-n
/// products of cyclotomic polynomials.
pub fn cyclotomic_products_of_degree(n: usize) -> Vec<CycMultiset> {
    // indices with totient <= n suffice; phi(k) >= sqrt(k/2), so every
    // such index satisfies k <= 2 n^2
    let mut ks: Vec<u32> = (1..=(2 * (n as u32) * (n as u32) + 2))
        .filter(|&k| euler_phi(k) as usize <= n)
        .collect();
    ks.sort();
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(rem: usize, min_idx: usize, ks: &[u32], cur: &mut Vec<u32>, out: &mut Vec<CycMultiset>) {
        if rem == 0 {
            out.push(cur.clone());
            return;
        }
        for (i, &k) in ks.iter().enumerate().skip(min_idx) {
            let d = euler_phi(k) as usize;
            if d > rem {
                continue;
            }
            cur.push(k);
            rec(rem - d, i, ks, cur, out);
            cur.pop();
        }
    }
    rec(n, 0, &ks, &mut cur, &mut out);
    out.sort();
    out
}

/// Factors a monic polynomial into cyclotomics by trial division.
/// Returns the sorted index multiset, or None if a non-cyclotomic factor
/// remains.
pub fn cyclotomic_factor(p: &IntPoly) -> Option<CycMultiset> {
    if !p.is_monic() {
        return None;
    }
    let mut rem = p.clone();
    let mut ms = Vec::new();
    let mut k = 1u32;
    // totient-bounded search: indices with phi(k) <= deg(rem)
    while rem.degree() > 0 {
        if euler_phi(k) as usize <= rem.degree() {
            let ck = cyclotomic(k);
            if let Some(q) = rem.div_exact(&ck) {
                ms.push(k);
                rem = q;
                continue; // same k again for multiplicity
            }
        }
        k += 1;
        // phi(k) >= sqrt(k/2), so this bound is safely past every k
        // with phi(k) <= deg(p)
        if k as usize > 2 * p.degree() * p.degree() + 6 {
            break;
        }
    }
    if rem == IntPoly::one() {
        ms.sort();
        Some(ms)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclotomic_small_values() {
        assert_eq!(cyclotomic(1), IntPoly::from_i64(&[-1, 1]));
        assert_eq!(cyclotomic(2), IntPoly::from_i64(&[1, 1]));
        assert_eq!(cyclotomic(4), IntPoly::from_i64(&[1, 0, 1]));
        // t^6 - t^5 + t^4 - t^3 + t^2 - t + 1
        assert_eq!(cyclotomic(14), IntPoly::from_i64(&[1, -1, 1, -1, 1, -1, 1]));
        // t^6 - t^3 + 1
        assert_eq!(cyclotomic(18), IntPoly::from_i64(&[1, 0, 0, -1, 0, 0, 1]));
    }

    #[test]
    fn cyclotomic_product_identity_to_200() {
        for k in 1..=200usize {
            let mut prod = IntPoly::one();
            for d in 1..=k {
                if k % d == 0 {
                    prod = prod.mul(&cyclotomic(d as u32));
                }
            }
            assert_eq!(prod, IntPoly::t_pow_minus_one(k), "k={k}");
        }
    }

    #[test]
    fn cyclotomic_degrees_are_totients() {
        for k in 1..=100u32 {
            assert_eq!(cyclotomic(k).degree(), euler_phi(k) as usize, "k={k}");
        }
    }

    #[test]
    fn cyclotomic_palindromes() {
        for k in 3..=60u32 {
            assert!(cyclotomic(k).is_palindrome(), "k={k}");
        }
        assert_eq!(cyclotomic(1).constant_term(), BigInt::from(-1));
        assert_eq!(cyclotomic(2).constant_term(), BigInt::from(1));
    }

    #[test]
    fn degree_six_products_count() {
        // 78 monic degree-6 cyclotomic products
        assert_eq!(cyclotomic_products_of_degree(6).len(), 78);
    }

    #[test]
    fn factor_roundtrip() {
        for ms in cyclotomic_products_of_degree(6) {
            let p = cyclotomic_product(&ms);
            assert_eq!(cyclotomic_factor(&p), Some(ms.clone()), "ms={ms:?}");
        }
        // a non-cyclotomic polynomial is rejected
        assert_eq!(cyclotomic_factor(&IntPoly::from_i64(&[2, 0, 1])), None);
        assert_eq!(cyclotomic_factor(&IntPoly::from_i64(&[-1, 1, 1])), None);
    }

    #[test]
    fn gcd_and_division() {
        let f = cyclotomic_product(&[1, 1, 2, 2, 4]);
        let g = cyclotomic_product(&[18]);
        assert_eq!(f.gcd(&g), IntPoly::one());
        let h = f.mul(&g);
        assert_eq!(h.div_exact(&f), Some(g.clone()));
        assert_eq!(h.div_exact(&g), Some(f.clone()));
        let shared = cyclotomic_product(&[1, 5]).gcd(&cyclotomic_product(&[1, 1, 8]));
        assert_eq!(shared, cyclotomic(1));
    }
}
