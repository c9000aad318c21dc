//! Square matrices over Z/m with exact modular arithmetic.
//!
//! Entries are reduced residues in [0, m). Inversion works for any
//! invertible matrix over any modulus by CRT over the prime-power parts:
//! Gaussian elimination over Z/p^a always finds unit pivots in an
//! invertible matrix, while a single elimination pass over a composite
//! modulus can strand itself on zero-divisor pivots.

use crate::error::{Error, Result};
use crate::factor::factor_u64;
use crate::matq::{mod_inv_u64, RatMatrix};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};

/// Dense square matrix over Z/m.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModMatrix {
    m: u64,
    n: usize,
    data: Vec<u64>,
}

impl ModMatrix {
    /// Builds from row-major residues, reducing mod m.
    pub fn new(n: usize, m: u64, data: Vec<u64>) -> Self {
        assert!(m >= 2);
        assert_eq!(data.len(), n * n);
        let data = data.into_iter().map(|x| x % m).collect();
        ModMatrix { m, n, data }
    }

    /// Identity mod m.
    pub fn identity(n: usize, m: u64) -> Self {
        let mut data = vec![0; n * n];
        for i in 0..n {
            data[i * n + i] = 1 % m;
        }
        ModMatrix { m, n, data }
    }

    /// Reduces an exact rational matrix mod m (CRT over prime powers for
    /// the denominator inverses).
    pub fn from_rat(a: &RatMatrix, m: u64) -> Result<Self> {
        assert_eq!(a.rows(), a.cols());
        let n = a.rows();
        let mb = BigInt::from(m);
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let x = &a[(i, j)];
                if x.denom().is_one() {
                    let r = x.numer().mod_floor(&mb).to_u64().unwrap();
                    data.push(r);
                } else {
                    // CRT the residue over prime-power parts of m
                    let mut res = 0u64;
                    let mut merged = 1u64;
                    for (p, e) in factor_u64(m) {
                        let q = p.pow(e);
                        let num = x.numer().mod_floor(&BigInt::from(q)).to_u64().unwrap();
                        let den = x.denom().mod_floor(&BigInt::from(q)).to_u64().unwrap();
                        let inv = mod_inv_u64(den, q)
                            .ok_or(Error::DenominatorNotInvertible(p))?;
                        let rq = (num as u128 * inv as u128 % q as u128) as u64;
                        res = crt_pair(res, merged, rq, q);
                        merged *= q;
                    }
                    data.push(res);
                }
            }
        }
        Ok(ModMatrix { m, n, data })
    }

    /// Modulus.
    pub fn modulus(&self) -> u64 {
        self.m
    }

    /// Dimension.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Row-major residues.
    pub fn data(&self) -> &[u64] {
        &self.data
    }

    /// Entry accessor.
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.n + j]
    }

    /// Matrix product mod m.
    pub fn mul(&self, other: &ModMatrix) -> ModMatrix {
        assert_eq!(self.m, other.m);
        assert_eq!(self.n, other.n);
        let n = self.n;
        let m = self.m as u128;
        let mut data = vec![0u64; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k] as u128;
                if a == 0 {
                    continue;
                }
                for j in 0..n {
                    let b = other.data[k * n + j] as u128;
                    if b != 0 {
                        let cell = &mut data[i * n + j];
                        *cell = ((*cell as u128 + a * b % m) % m) as u64;
                    }
                }
            }
        }
        ModMatrix {
            m: self.m,
            n,
            data,
        }
    }

    /// Power mod m.
    pub fn pow(&self, mut e: u64) -> ModMatrix {
        let mut base = self.clone();
        let mut acc = ModMatrix::identity(self.n, self.m);
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

    /// True iff this is the identity mod m.
    pub fn is_identity(&self) -> bool {
        *self == ModMatrix::identity(self.n, self.m)
    }

    /// Inverse mod m via CRT over prime-power parts; error when singular.
    pub fn inverse(&self) -> Result<ModMatrix> {
        let facs = factor_u64(self.m);
        let mut res = ModMatrix::identity(self.n, 1.max(self.m)); // placeholder
        let mut merged = 0u64;
        for (p, e) in facs {
            let q = p.pow(e);
            let inv_q = self.reduce(q).inverse_prime_power(p, q)?;
            if merged == 0 {
                res = inv_q.lift(self.m, q);
                merged = q;
            } else {
                let lifted = inv_q.lift(self.m, q);
                res = res.crt_merge(merged, &lifted, q, self.m);
                merged *= q;
            }
        }
        debug_assert!(self.mul(&res).is_identity());
        Ok(res)
    }

    /// Gauss–Jordan over Z/q, q = p^e: pivots must be units (p-coprime
    /// entries); succeeds exactly when the matrix is invertible mod q.
    fn inverse_prime_power(&self, p: u64, q: u64) -> Result<ModMatrix> {
        assert_eq!(self.m, q);
        let n = self.n;
        let mut a = self.data.clone();
        let mut inv = ModMatrix::identity(n, q).data;
        for col in 0..n {
            let piv = (col..n).find(|&r| a[r * n + col] % p != 0);
            let piv = piv.ok_or(Error::NotInvertibleMod(q))?;
            if piv != col {
                for j in 0..n {
                    a.swap(piv * n + j, col * n + j);
                    inv.swap(piv * n + j, col * n + j);
                }
            }
            let pv = a[col * n + col];
            let pv_inv = mod_inv_u64(pv, q).ok_or(Error::NotInvertibleMod(q))?;
            for j in 0..n {
                a[col * n + j] = (a[col * n + j] as u128 * pv_inv as u128 % q as u128) as u64;
                inv[col * n + j] =
                    (inv[col * n + j] as u128 * pv_inv as u128 % q as u128) as u64;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[r * n + col];
                if f == 0 {
                    continue;
                }
                for j in 0..n {
                    let sub = f as u128 * a[col * n + j] as u128 % q as u128;
                    a[r * n + j] = ((a[r * n + j] as u128 + q as u128 - sub) % q as u128) as u64;
                    let sub = f as u128 * inv[col * n + j] as u128 % q as u128;
                    inv[r * n + j] =
                        ((inv[r * n + j] as u128 + q as u128 - sub) % q as u128) as u64;
                }
            }
        }
        Ok(ModMatrix {
            m: q,
            n,
            data: inv,
        })
    }

    /// Reduces mod a divisor m' of m.
    pub fn reduce(&self, m2: u64) -> ModMatrix {
        assert_eq!(self.m % m2, 0, "reduce target must divide the modulus");
        ModMatrix {
            m: m2,
            n: self.n,
            data: self.data.iter().map(|&x| x % m2).collect(),
        }
    }

    /// Reinterprets residues mod q as residues mod m (q | m); the entries
    /// are unchanged — this is the canonical section used before CRT.
    fn lift(&self, m: u64, q: u64) -> ModMatrix {
        assert_eq!(self.m, q);
        assert_eq!(m % q, 0);
        ModMatrix {
            m,
            n: self.n,
            data: self.data.clone(),
        }
    }

    /// Entrywise CRT merge: self carries residues mod ma, other mod mb.
    fn crt_merge(&self, ma: u64, other: &ModMatrix, mb: u64, m: u64) -> ModMatrix {
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| crt_pair(a % ma, ma, b % mb, mb) % m)
            .collect();
        ModMatrix {
            m,
            n: self.n,
            data,
        }
    }
}

/// CRT for one residue pair: x ≡ a (mod ma), x ≡ b (mod mb), coprime
/// moduli; with ma = 1 returns b.
fn crt_pair(a: u64, ma: u64, b: u64, mb: u64) -> u64 {
    if ma == 1 {
        return b % mb;
    }
    if mb == 1 {
        return a % ma;
    }
    let inv = mod_inv_u64(ma % mb, mb).expect("CRT moduli coprime");
    let diff = ((b as i128 - a as i128).rem_euclid(mb as i128)) as u128;
    let t = diff * inv as u128 % mb as u128;
    (a as u128 + t * ma as u128) as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matq::rat;

    #[test]
    fn mul_and_identity() {
        let a = ModMatrix::new(2, 7, vec![1, 2, 3, 4]);
        let i = ModMatrix::identity(2, 7);
        assert_eq!(a.mul(&i), a);
        assert_eq!(a.pow(0), i);
        assert_eq!(a.pow(3), a.mul(&a).mul(&a));
    }

    #[test]
    fn inverse_prime_and_composite() {
        let a = ModMatrix::new(2, 5, vec![1, 2, 3, 4]);
        let inv = a.inverse().unwrap();
        assert!(a.mul(&inv).is_identity());
        // invertible mod 6 but every entry of some column is a zero divisor:
        // needs the CRT path
        let b = ModMatrix::new(2, 6, vec![2, 3, 3, 2]);
        let binv = b.inverse().unwrap();
        assert!(b.mul(&binv).is_identity());
        // singular matrix is rejected
        let s = ModMatrix::new(2, 6, vec![2, 4, 1, 2]);
        assert!(s.inverse().is_err());
    }

    #[test]
    fn from_rat_with_denominators() {
        let mut a = RatMatrix::identity(2);
        a[(0, 1)] = rat(1) / rat(5); // 1/5 == 5 mod 8 (5*5=25=1)
        let m = ModMatrix::from_rat(&a, 8).unwrap();
        assert_eq!(m.get(0, 1), 5);
        // denominator divisible by the modulus prime fails
        let err = ModMatrix::from_rat(&a, 5);
        assert!(err.is_err());
    }

    #[test]
    fn reduce_compatibility() {
        let a = ModMatrix::new(2, 12, vec![11, 7, 5, 1]);
        assert_eq!(a.reduce(4).get(0, 0), 3);
        assert_eq!(a.reduce(3).get(0, 0), 2);
    }
}
