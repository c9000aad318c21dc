//! Constructive membership in Sp(n,Z): expressing an integer symplectic
//! matrix as a word in a fixed set of elementary symplectic transvections.
//!
//! The generating set (for s = n/2, hyperbolic basis e_1..e_s, f_1..f_s,
//! form J = [[0, I], [-I, 0]]):
//!   * long upper   U_i  = 1 + E_{i, s+i}                    (i = 1..s)
//!   * long lower   V_i  = 1 + E_{s+i, i}                    (i = 1..s)
//!   * short upper  S_ij = 1 + E_{i, s+j} + E_{j, s+i}       (i < j)
//!   * short lower  T_ij = 1 + E_{s+i, j} + E_{s+j, i}       (i < j)
//!   * linear       G_ij = 1 + E_{i, j} - E_{s+j, s+i}       (i ≠ j)
//! Every nilpotent part squares to zero, so the k-th power of a generator
//! is obtained by scaling its off-diagonal part by k (k of any size, hence
//! big-integer exponents).

use crate::error::{Error, Result};
use crate::matq::{rat, RatMatrix};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// A word over the standard generator alphabet: (generator index, exponent).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymplecticWord {
    /// Letters in product order (leftmost factor first).
    pub letters: Vec<(usize, BigInt)>,
    /// The matrix the word evaluates to.
    pub target: RatMatrix,
}

fn with_units(n: usize, units: &[(usize, usize, i64)]) -> RatMatrix {
    let mut m = RatMatrix::identity(n);
    for &(i, j, c) in units {
        m[(i, j)] = rat(c);
    }
    m
}

/// The standard elementary symplectic generating set of Sp(n,Z), in the
/// documented fixed order (long upper, long lower, short upper, short
/// lower, linear).
pub fn standard_generators(n: usize) -> Vec<RatMatrix> {
    assert!(n % 2 == 0 && n >= 2, "even degree required");
    let s = n / 2;
    let mut gens = Vec::new();
    for i in 0..s {
        gens.push(with_units(n, &[(i, s + i, 1)]));
    }
    for i in 0..s {
        gens.push(with_units(n, &[(s + i, i, 1)]));
    }
    for i in 0..s {
        for j in (i + 1)..s {
            gens.push(with_units(n, &[(i, s + j, 1), (j, s + i, 1)]));
        }
    }
    for i in 0..s {
        for j in (i + 1)..s {
            gens.push(with_units(n, &[(s + i, j, 1), (s + j, i, 1)]));
        }
    }
    for i in 0..s {
        for j in 0..s {
            if i != j {
                gens.push(with_units(n, &[(i, j, 1), (s + j, s + i, -1)]));
            }
        }
    }
    gens
}

/// gen^e for a standard generator: 1 + e·(gen − 1).
pub fn generator_power(gens: &[RatMatrix], idx: usize, e: &BigInt) -> RatMatrix {
    let n = gens[idx].rows();
    let mut m = RatMatrix::identity(n);
    let ee = BigRational::from_integer(e.clone());
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let off = &gens[idx][(i, j)];
                if !off.is_zero() {
                    m[(i, j)] = off * &ee;
                }
            }
        }
    }
    m
}

/// Evaluates a word over standard_generators(n).
pub fn evaluate(letters: &[(usize, BigInt)], n: usize) -> RatMatrix {
    let gens = standard_generators(n);
    let mut acc = RatMatrix::identity(n);
    for (idx, e) in letters {
        acc = acc.mul(&generator_power(&gens, *idx, e));
    }
    acc
}

/// Euclidean quotient: a = q·b + r with 0 ≤ r < |b|.
fn div_euclid_big(a: &BigInt, b: &BigInt) -> BigInt {
    let (q, r) = a.div_mod_floor(b);
    if r.is_negative() {
        q + BigInt::one()
    } else {
        q
    }
}

/// Elimination state: the working matrix plus the log of applied row
/// operations (left multiplications by generator powers).
struct Reducer {
    work: RatMatrix,
    gens: Vec<RatMatrix>,
    s: usize,
    ops: Vec<(usize, BigInt)>,
}

impl Reducer {
    fn new(g: &RatMatrix) -> Reducer {
        let n = g.rows();
        Reducer {
            work: g.clone(),
            gens: standard_generators(n),
            s: n / 2,
            ops: Vec::new(),
        }
    }

    fn idx_long_upper(&self, i: usize) -> usize {
        i
    }
    fn idx_long_lower(&self, i: usize) -> usize {
        self.s + i
    }
    fn idx_short_upper(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        let mut k = 0;
        for a in 0..i {
            k += self.s - a - 1;
        }
        2 * self.s + k + (j - i - 1)
    }
    fn idx_short_lower(&self, i: usize, j: usize) -> usize {
        let pairs = self.s * (self.s - 1) / 2;
        self.idx_short_upper(i, j) + pairs
    }
    fn idx_linear(&self, i: usize, j: usize) -> usize {
        let pairs = self.s * (self.s - 1) / 2;
        let mut k = 0;
        for a in 0..self.s {
            for b in 0..self.s {
                if a != b {
                    if (a, b) == (i, j) {
                        return 2 * self.s + 2 * pairs + k;
                    }
                    k += 1;
                }
            }
        }
        unreachable!("linear generator index");
    }

    /// Applies gen^e on the left and records it.
    fn apply(&mut self, idx: usize, e: BigInt) {
        if e.is_zero() {
            return;
        }
        let t = generator_power(&self.gens, idx, &e);
        self.work = t.mul(&self.work);
        self.ops.push((idx, e));
    }

    fn entry(&self, i: usize, j: usize) -> BigInt {
        let v = &self.work[(i, j)];
        debug_assert!(v.is_integer());
        v.to_integer()
    }

    /// Gcd-merge of the column entries at rows (a_row, b_row): repeated
    /// Euclidean reduction through the op "row_target += c · row_source"
    /// supplied by `add` (target_is_a selects the direction). Ends with the
    /// gcd at a_row and 0 at b_row.
    fn euclid_pair(
        &mut self,
        col: usize,
        a_row: usize,
        b_row: usize,
        add: &dyn Fn(&mut Reducer, bool, BigInt),
    ) {
        loop {
            let b = self.entry(b_row, col);
            if b.is_zero() {
                break;
            }
            let a = self.entry(a_row, col);
            if a.is_zero() {
                add(self, true, BigInt::one());
                add(self, false, -BigInt::one());
                continue;
            }
            let q = div_euclid_big(&a, &b);
            add(self, true, -q);
            let a2 = self.entry(a_row, col);
            if !a2.is_zero() {
                let b2 = self.entry(b_row, col);
                let q2 = div_euclid_big(&b2, &a2);
                add(self, false, -q2);
            }
        }
    }

    /// Squared Weyl element on the hyperbolic pair (k, s+k): negates rows k
    /// and s+k (built from long-root transvections).
    fn negate_pair(&mut self, k: usize) {
        for _ in 0..2 {
            self.apply(self.idx_long_upper(k), BigInt::one());
            self.apply(self.idx_long_lower(k), -BigInt::one());
            self.apply(self.idx_long_upper(k), BigInt::one());
        }
    }
}

/// Expresses g ∈ Sp(n,Z) as a word in standard_generators(n) by symplectic
/// Gaussian elimination: the first column is reduced to e_k with coupled
/// row operations (the symplectic relations then pin the partner column up
/// to transvection-clearable entries), recursing over hyperbolic pairs; the
/// inverse of the applied operation sequence is the word.
pub fn express(g: &RatMatrix) -> Result<SymplecticWord> {
    let n = g.rows();
    if !g.is_integral() {
        return Err(Error::NotIntegral);
    }
    if !g.is_symplectic() {
        return Err(Error::NotSymplectic);
    }
    let s = n / 2;
    let mut red = Reducer::new(g);

    for k in 0..s {
        // ---- column k -> e_k ----
        // (1) gcd-collect the remaining top entries into row k (linear ops)
        for i in (k + 1)..s {
            red.euclid_pair(k, k, i, &|r, target_is_a, c| {
                if target_is_a {
                    r.apply(r.idx_linear(k, i), c); // row_k += c·row_i
                } else {
                    r.apply(r.idx_linear(i, k), c);
                }
            });
        }
        // (2) pull the bottom_k entry into top_k (full SL_2 on the pair)
        red.euclid_pair(k, k, s + k, &|r, target_is_a, c| {
            if target_is_a {
                r.apply(r.idx_long_upper(k), c); // row_k += c·row_{s+k}
            } else {
                r.apply(r.idx_long_lower(k), c);
            }
        });
        // (3) merge each remaining bottom entry into top_k; the companion
        // row of each short op lands on an already-cleared entry
        for j in (k + 1)..s {
            red.euclid_pair(k, k, s + j, &|r, target_is_a, c| {
                if target_is_a {
                    r.apply(r.idx_short_upper(k, j), c); // row_k += c·row_{s+j}
                } else {
                    r.apply(r.idx_short_lower(k, j), c); // row_{s+j} += c·row_k
                }
            });
        }
        if red.entry(k, k).is_negative() {
            red.negate_pair(k);
        }
        debug_assert!(red.entry(k, k).is_one(), "column gcd must be 1");

        // ---- column s+k -> e_{s+k} ----
        // the (s+k, s+k) entry is forced to 1 by the symplectic relations;
        // entries in completed rows are forced to 0
        let col = s + k;
        for j in (k + 1)..s {
            let c = red.entry(j, col);
            red.apply(red.idx_short_upper(k, j), -c);
        }
        for j in (k + 1)..s {
            let c = red.entry(s + j, col);
            red.apply(red.idx_linear(k, j), c);
        }
        let c = red.entry(k, col);
        red.apply(red.idx_long_upper(k), -c);
    }
    debug_assert!(red.work == RatMatrix::identity(n), "reduction incomplete");

    // T_N ... T_1 g = 1  =>  g = T_1^{-1} ... T_N^{-1}
    let letters: Vec<(usize, BigInt)> = red.ops.iter().map(|(i, e)| (*i, -e)).collect();
    let check = evaluate(&letters, n);
    assert!(check == *g, "round-trip check failed");
    Ok(SymplecticWord {
        letters,
        target: g.clone(),
    })
}

/// Serializes words for external tooling: a header naming each generator in
/// row-major integer form, then one word per line as `g<i>^<e>` tokens
/// (1-based indices). The identity is exported as the token `1`.
pub fn export_words(words: &[SymplecticWord], n: usize) -> String {
    let gens = standard_generators(n);
    let mut out = String::new();
    out.push_str(&format!("# symplectic generators, degree {n}, row-major\n"));
    for (i, g) in gens.iter().enumerate() {
        let flat: Vec<String> = (0..n)
            .flat_map(|r| (0..n).map(move |c| (r, c)))
            .map(|(r, c)| g[(r, c)].to_integer().to_string())
            .collect();
        out.push_str(&format!("# g{} = {}\n", i + 1, flat.join(" ")));
    }
    for w in words {
        if w.letters.is_empty() {
            out.push_str("1\n");
        } else {
            let toks: Vec<String> = w
                .letters
                .iter()
                .map(|(i, e)| format!("g{}^{}", i + 1, e))
                .collect();
            out.push_str(&toks.join(" "));
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generators_are_symplectic() {
        for n in [4usize, 6] {
            let gens = standard_generators(n);
            let s = n / 2;
            assert_eq!(gens.len(), 2 * s + s * (s - 1) + s * (s - 1));
            for g in &gens {
                assert!(g.is_symplectic(), "generator not symplectic");
                let nmat = g.sub(&RatMatrix::identity(n));
                assert_eq!(nmat.mul(&nmat), RatMatrix::zeros(n, n));
            }
        }
    }

    #[test]
    fn generator_index_lookup() {
        let red = Reducer::new(&RatMatrix::identity(6));
        let gens = standard_generators(6);
        assert_eq!(gens[red.idx_long_upper(2)][(2, 5)], rat(1));
        assert_eq!(gens[red.idx_long_lower(0)][(3, 0)], rat(1));
        let g = &gens[red.idx_short_upper(0, 2)];
        assert_eq!(g[(0, 5)], rat(1));
        assert_eq!(g[(2, 3)], rat(1));
        let g = &gens[red.idx_short_lower(1, 2)];
        assert_eq!(g[(4, 2)], rat(1));
        assert_eq!(g[(5, 1)], rat(1));
        let g = &gens[red.idx_linear(2, 0)];
        assert_eq!(g[(2, 0)], rat(1));
        assert_eq!(g[(3, 5)], rat(-1));
    }

    #[test]
    fn identity_is_empty_word() {
        let w = express(&RatMatrix::identity(6)).unwrap();
        assert!(w.letters.is_empty());
    }

    #[test]
    fn single_generators_roundtrip() {
        for n in [4usize, 6] {
            for g in standard_generators(n) {
                let w = express(&g).unwrap();
                assert_eq!(evaluate(&w.letters, n), g);
            }
        }
    }

    #[test]
    fn random_products_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for n in [4usize, 6] {
            let gens = standard_generators(n);
            for _ in 0..15 {
                let len = rng.gen_range(1..=50);
                let mut m = RatMatrix::identity(n);
                for _ in 0..len {
                    let i = rng.gen_range(0..gens.len());
                    let e = BigInt::from([-2i64, -1, 1, 2, 3][rng.gen_range(0..5)]);
                    m = m.mul(&generator_power(&gens, i, &e));
                }
                let w = express(&m).unwrap();
                assert_eq!(evaluate(&w.letters, n), m);
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        let mut m = RatMatrix::identity(4);
        m[(0, 0)] = rat(2);
        assert!(matches!(express(&m), Err(Error::NotSymplectic)));
        let mut m = RatMatrix::identity(4);
        m[(0, 2)] = BigRational::new(1.into(), 2.into());
        assert!(matches!(express(&m), Err(Error::NotIntegral)));
    }

    #[test]
    fn export_format() {
        let g = standard_generators(4).remove(0);
        let w = express(&g).unwrap();
        let id = express(&RatMatrix::identity(4)).unwrap();
        let text = export_words(&[w, id], 4);
        assert!(text.starts_with("# symplectic generators, degree 4"));
        assert!(text.contains("# g1 = 1 0 1 0 0 1 0 0 0 0 1 0 0 0 0 1"));
        assert!(text.lines().any(|l| l == "g1^1"));
        assert!(text.lines().any(|l| l == "1"));
    }
}
