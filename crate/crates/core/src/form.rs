//! The invariant symplectic form of a hypergeometric group, base changes
//! onto the standard form J, and the k̄-minimizing normalization.
//!
//! For admissible (f, g) the group is absolutely irreducible, so the skew
//! form Φ with x·Φ·xᵀ = Φ for every generator x is unique up to scalar; it
//! is computed as the kernel of an integer linear system. A base change g
//! with g·J·gᵀ = Φ turns H into L = g⁻¹Hg ≤ Sp(n,Q). Because different g
//! select different (in general non-equivalent) invariant lattices, the
//! normalization generates a deterministic family of candidates and keeps
//! the one minimizing k̄ = lcm of the minimal integral powers of the
//! generators of L.

use crate::construct::HypergroupData;
use crate::error::{Error, Result};
use crate::matq::RatMatrix;
use crate::words;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Default bound for the minimal-integral-power search.
pub const KBAR_BOUND: u64 = 360;

/// A normalized group: the form, the base change onto J, and the
/// standard-form generators.
#[derive(Debug, Clone)]
pub struct FormData {
    /// Invariant skew form (integral, primitive, positive leading entry).
    pub phi: RatMatrix,
    /// g with g·J_n·gᵀ = Φ.
    pub basechange_g: RatMatrix,
    /// Generators of L = g⁻¹ H g, each preserving J_n exactly.
    pub l_generators: Vec<RatMatrix>,
    /// The transvection h = g⁻¹ h_1 g.
    pub h: RatMatrix,
    /// lcm over generators l of the minimal k ≥ 1 with l^k integral.
    pub kbar: u64,
    /// The standard form J_n.
    pub j_n: RatMatrix,
    /// Which candidate of the deterministic family was selected.
    pub candidate_index: usize,
    /// Human-readable candidate description.
    pub candidate_label: String,
}

/// Solves {X = −Xᵀ, A X Aᵀ = X, B X Bᵀ = X} over Q (invariance under B is
/// equivalent to invariance under h_0 = B⁻¹); the solution space must be
/// one-dimensional. Returns the primitive integral representative whose
/// first nonzero upper-triangular entry is positive.
pub fn invariant_form(h: &HypergroupData) -> Result<RatMatrix> {
    let n = h.a.rows();
    // unknowns: upper-triangular entries x_{ij}, i < j (X skew)
    let mut var_of = vec![vec![usize::MAX; n]; n];
    let mut vars = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            var_of[i][j] = vars.len();
            vars.push((i, j));
        }
    }
    let nv = vars.len();
    let mut rows: Vec<Vec<BigRational>> = Vec::new();
    for gmat in [&h.a, &h.b] {
        for r in 0..n {
            for c in (r + 1)..n {
                let mut row = vec![BigRational::zero(); nv];
                // (G X Gᵀ)_{rc} − X_{rc} = Σ_{a≠b} G_{ra} G_{cb} X_{ab} − X_{rc}
                for a in 0..n {
                    for b in 0..n {
                        if a == b {
                            continue;
                        }
                        let coef = &gmat[(r, a)] * &gmat[(c, b)];
                        if coef.is_zero() {
                            continue;
                        }
                        if a < b {
                            row[var_of[a][b]] += coef;
                        } else {
                            row[var_of[b][a]] -= coef;
                        }
                    }
                }
                row[var_of[r][c]] -= BigRational::one();
                if row.iter().any(|x| !x.is_zero()) {
                    rows.push(row);
                }
            }
        }
    }
    let mut sys = RatMatrix::zeros(rows.len(), nv);
    for (i, row) in rows.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            sys[(i, j)] = x.clone();
        }
    }
    let kernel = crate::matq::rational_kernel(&sys);
    if kernel.len() != 1 {
        return Err(Error::FormNotUnique(kernel.len()));
    }
    let v = &kernel[0];
    let mut phi = RatMatrix::zeros(n, n);
    for (k, &(i, j)) in vars.iter().enumerate() {
        phi[(i, j)] = BigRational::from_integer(v[k].clone());
        phi[(j, i)] = BigRational::from_integer(-v[k].clone());
    }
    if phi.det().is_zero() {
        return Err(Error::FormDegenerate);
    }
    debug_assert!(phi.is_skew());
    Ok(phi)
}

// ---------------------------------------------------------------------------
// skew Smith normal form (integral congruence reduction)
// ---------------------------------------------------------------------------

/// Result of the integral congruence reduction PᵀΦP = ⊕ [[0, d_i], [−d_i, 0]].
#[derive(Debug, Clone)]
pub struct SkewSnf {
    /// Unimodular P with columns ordered (e_1, f_1, e_2, f_2, ...).
    pub p: Vec<Vec<BigInt>>,
    /// The block parameters d_1..d_s (positive).
    pub ds: Vec<BigInt>,
}

fn round_div(a: &BigInt, b: &BigInt) -> BigInt {
    // nearest integer to a/b (ties toward +infinity), b > 0 not required
    let two = BigInt::from(2);
    if b.is_positive() {
        (two.clone() * a + b).div_floor(&(two * b))
    } else {
        let nb = -b;
        -((two.clone() * a + &nb).div_floor(&(two * nb)))
    }
}

/// Integral congruence reduction of a nondegenerate skew integer matrix:
/// gcd-pivoted elimination applying every column operation together with
/// the same row operation, so P stays unimodular and PᵀΦP keeps skew shape.
pub fn skew_snf(phi: &RatMatrix) -> Result<SkewSnf> {
    let n = phi.rows();
    let mut m: Vec<Vec<BigInt>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    debug_assert!(phi[(i, j)].is_integer());
                    phi[(i, j)].to_integer()
                })
                .collect()
        })
        .collect();
    let mut p: Vec<Vec<BigInt>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { BigInt::one() } else { BigInt::zero() })
                .collect()
        })
        .collect();

    let col_op = |m: &mut Vec<Vec<BigInt>>, p: &mut Vec<Vec<BigInt>>, i: usize, j: usize, q: &BigInt| {
        for r in 0..n {
            let add = q * &m[r][j];
            m[r][i] += add;
        }
        for c in 0..n {
            let add = q * &m[j][c];
            m[i][c] += add;
        }
        for r in 0..n {
            let add = q * &p[r][j];
            p[r][i] += add;
        }
    };
    let swap = |m: &mut Vec<Vec<BigInt>>, p: &mut Vec<Vec<BigInt>>, i: usize, j: usize| {
        for r in 0..n {
            m[r].swap(i, j);
        }
        m.swap(i, j);
        for r in 0..n {
            p[r].swap(i, j);
        }
    };

    let mut ds = Vec::new();
    let mut base = 0;
    while base < n {
        // minimal nonzero |entry| in the trailing block
        let mut best: Option<(usize, usize)> = None;
        for i in base..n {
            for j in base..n {
                if !m[i][j].is_zero()
                    && best.map_or(true, |(bi, bj)| m[i][j].abs() < m[bi][bj].abs())
                {
                    best = Some((i, j));
                }
            }
        }
        let (i, mut j) = best.ok_or(Error::FormDegenerate)?;
        swap(&mut m, &mut p, base, i);
        if j == base {
            j = i;
        } else if j == i {
            j = base;
        }
        swap(&mut m, &mut p, base + 1, j);
        if m[base][base + 1].is_negative() {
            swap(&mut m, &mut p, base, base + 1);
        }
        loop {
            let pivot = m[base][base + 1].clone();
            let mut done = true;
            for c in (base + 2)..n {
                let q = round_div(&m[base][c], &pivot);
                if !q.is_zero() {
                    col_op(&mut m, &mut p, c, base + 1, &(-q));
                }
                if !m[base][c].is_zero() {
                    done = false;
                }
            }
            for c in (base + 2)..n {
                let q = round_div(&m[base + 1][c], &pivot);
                if !q.is_zero() {
                    col_op(&mut m, &mut p, c, base, &q);
                }
                if !m[base + 1][c].is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
            // a survivor smaller than the pivot exists; move it into the pivot
            let mut bst: Option<(BigInt, usize, usize)> = None;
            for c in (base + 2)..n {
                for r in [base, base + 1] {
                    if !m[r][c].is_zero()
                        && bst.as_ref().map_or(true, |(v, _, _)| m[r][c].abs() < *v)
                    {
                        bst = Some((m[r][c].abs(), r, c));
                    }
                }
            }
            if let Some((v, r, c)) = bst {
                if v < pivot {
                    let tgt = if r == base { base + 1 } else { base };
                    swap(&mut m, &mut p, tgt, c);
                    if m[base][base + 1].is_negative() {
                        swap(&mut m, &mut p, base, base + 1);
                    }
                }
            }
        }
        ds.push(m[base][base + 1].clone());
        base += 2;
    }
    Ok(SkewSnf { p, ds })
}

/// Reorders the pair-block columns (e1, f1, e2, f2, ...) of P to the J
/// layout (e1, e2, ..., f1, f2, ...) and returns the result as a matrix.
fn reorder_to_j(snf: &SkewSnf, n: usize) -> RatMatrix {
    let s = n / 2;
    let mut perm = Vec::with_capacity(n);
    for i in 0..s {
        perm.push(2 * i);
    }
    for i in 0..s {
        perm.push(2 * i + 1);
    }
    let mut p2 = RatMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            p2[(r, c)] = BigRational::from_integer(snf.p[r][perm[c]].clone());
        }
    }
    p2
}

/// The scaled standard form [[0, D], [−D, 0]].
fn j_scaled(n: usize, ds: &[BigInt]) -> RatMatrix {
    let s = n / 2;
    let mut j = RatMatrix::zeros(n, n);
    for i in 0..s {
        j[(i, s + i)] = BigRational::from_integer(ds[i].clone());
        j[(s + i, i)] = BigRational::from_integer(-ds[i].clone());
    }
    j
}

/// Base change from the skew Smith normal form: g = P₂⁻ᵀ·diag(1, D) with
/// g·J·gᵀ = Φ; unimodular exactly when all dᵢ = 1.
pub fn snf_basechange(phi: &RatMatrix) -> Result<RatMatrix> {
    let n = phi.rows();
    let snf = skew_snf(phi)?;
    let p2 = reorder_to_j(&snf, n);
    debug_assert!(p2.transpose().mul(phi).mul(&p2) == j_scaled(n, &snf.ds));
    let s = n / 2;
    let mut q = RatMatrix::identity(n);
    for i in 0..s {
        q[(s + i, s + i)] = BigRational::from_integer(snf.ds[i].clone());
    }
    let p2t_inv = p2
        .transpose()
        .inverse()
        .ok_or(Error::FormDegenerate)?;
    Ok(p2t_inv.mul(&q))
}

// ---------------------------------------------------------------------------
// greedy symplectic Gram–Schmidt
// ---------------------------------------------------------------------------

/// Which vector of a hyperbolic pair absorbs the 1/⟨e,f⟩ scaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsScale {
    /// Scale f (the default).
    F,
    /// Scale e.
    E,
}

/// Partner-selection rule for the greedy pairing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsPivot {
    /// First remaining vector with nonzero pairing.
    First,
    /// Minimal |pairing| (ties by position).
    MinAbs,
    /// Maximal |pairing| (ties by position).
    MaxAbs,
}

/// Deterministic knobs for one Gram–Schmidt run.
#[derive(Debug, Clone, Copy)]
pub struct GsOptions {
    pub scale: GsScale,
    pub pivot: GsPivot,
    /// Scan for a pair with |⟨e,f⟩| = 1 before the greedy choice.
    pub prefer_unit: bool,
    /// Process the initial basis in reversed order.
    pub reverse: bool,
}

impl Default for GsOptions {
    fn default() -> Self {
        GsOptions {
            scale: GsScale::F,
            pivot: GsPivot::First,
            prefer_unit: false,
            reverse: false,
        }
    }
}

fn pairing(phi: &RatMatrix, u: &[BigRational], v: &[BigRational]) -> BigRational {
    let n = u.len();
    let mut acc = BigRational::zero();
    for i in 0..n {
        if u[i].is_zero() {
            continue;
        }
        for j in 0..n {
            if !v[j].is_zero() && !phi[(i, j)].is_zero() {
                acc += &u[i] * &phi[(i, j)] * &v[j];
            }
        }
    }
    acc
}

/// Greedy symplectic Gram–Schmidt: hyperbolic pairs (e_i, f_i) with
/// ⟨e_i, f_i⟩ = 1 and Φ-orthogonal complements, exact rational arithmetic.
/// Returns U (rows e_1..e_s, f_1..f_s) with U·Φ·Uᵀ = J.
pub fn symplectic_gs(phi: &RatMatrix, opts: GsOptions) -> Result<RatMatrix> {
    let n = phi.rows();
    if !phi.is_skew() {
        return Err(Error::FormDegenerate);
    }
    let mut remaining: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        BigRational::one()
                    } else {
                        BigRational::zero()
                    }
                })
                .collect()
        })
        .collect();
    if opts.reverse {
        remaining.reverse();
    }
    let mut es: Vec<Vec<BigRational>> = Vec::new();
    let mut fs: Vec<Vec<BigRational>> = Vec::new();
    while !remaining.is_empty() {
        let mut pick: Option<(usize, usize)> = None;
        if opts.prefer_unit {
            'outer: for i in 0..remaining.len() {
                for j in 0..remaining.len() {
                    if i != j {
                        let c = pairing(phi, &remaining[i], &remaining[j]);
                        if c.abs() == BigRational::one() {
                            pick = Some((i, j));
                            break 'outer;
                        }
                    }
                }
            }
        }
        if pick.is_none() {
            let cands: Vec<(usize, BigRational)> = (1..remaining.len())
                .map(|j| (j, pairing(phi, &remaining[0], &remaining[j])))
                .filter(|(_, c)| !c.is_zero())
                .collect();
            if cands.is_empty() {
                return Err(Error::FormDegenerate);
            }
            let j = match opts.pivot {
                GsPivot::First => cands[0].0,
                GsPivot::MinAbs => {
                    cands
                        .iter()
                        .min_by(|a, b| a.1.abs().cmp(&b.1.abs()).then(a.0.cmp(&b.0)))
                        .unwrap()
                        .0
                }
                GsPivot::MaxAbs => {
                    cands
                        .iter()
                        .max_by(|a, b| a.1.abs().cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
                        .unwrap()
                        .0
                }
            };
            pick = Some((0, j));
        }
        let (i, j) = pick.unwrap();
        let (mut e, f0) = if i < j {
            let f0 = remaining.remove(j);
            let e = remaining.remove(i);
            (e, f0)
        } else {
            let e = remaining.remove(i);
            let f0 = remaining.remove(j);
            (e, f0)
        };
        let mut f = f0;
        let c = pairing(phi, &e, &f);
        match opts.scale {
            GsScale::F => {
                for x in f.iter_mut() {
                    *x /= &c;
                }
            }
            GsScale::E => {
                for x in e.iter_mut() {
                    *x /= &c;
                }
            }
        }
        let mut next = Vec::with_capacity(remaining.len());
        for v in &remaining {
            let a = pairing(phi, v, &f);
            let b = pairing(phi, &e, v);
            let w: Vec<BigRational> = (0..n).map(|t| &v[t] - &a * &e[t] - &b * &f[t]).collect();
            next.push(w);
        }
        remaining = next;
        es.push(e);
        fs.push(f);
    }
    let mut u = RatMatrix::zeros(n, n);
    for (r, v) in es.iter().chain(fs.iter()).enumerate() {
        for c in 0..n {
            u[(r, c)] = v[c].clone();
        }
    }
    debug_assert!(u.mul(phi).mul(&u.transpose()) == RatMatrix::standard_j(n));
    Ok(u)
}

/// Base change with g·J_n·gᵀ = Φ from the default greedy Gram–Schmidt.
pub fn symplectic_basechange(phi: &RatMatrix) -> Result<RatMatrix> {
    let u = symplectic_gs(phi, GsOptions::default())?;
    u.inverse().ok_or(Error::FormDegenerate)
}

// ---------------------------------------------------------------------------
// candidate family and k̄-minimizing selection
// ---------------------------------------------------------------------------

fn gs_candidate(phi: &RatMatrix, opts: GsOptions) -> Result<RatMatrix> {
    let u = symplectic_gs(phi, opts)?;
    u.inverse().ok_or(Error::FormDegenerate)
}

/// diag(c, ..., c, 1/c, ..., 1/c) ∈ Sp(n,Q): rescales the lattice while
/// fixing J exactly.
fn symplectic_scalar(n: usize, num: i64, den: i64) -> RatMatrix {
    let s = n / 2;
    let c = BigRational::new(num.into(), den.into());
    let cinv = c.recip();
    let mut m = RatMatrix::identity(n);
    for i in 0..s {
        m[(i, i)] = c.clone();
        m[(s + i, s + i)] = cinv.clone();
    }
    m
}

/// Seeded unimodular symplectic twist: short product of standard
/// elementary generators with small exponents.
fn random_twist(n: usize, rng: &mut ChaCha8Rng) -> RatMatrix {
    let gens = words::standard_generators(n);
    let mut t = RatMatrix::identity(n);
    let len = rng.gen_range(2..=6);
    for _ in 0..len {
        let i = rng.gen_range(0..gens.len());
        let e = BigInt::from([-2i64, -1, 1, 2][rng.gen_range(0..4)]);
        t = t.mul(&words::generator_power(&gens, i, &e));
    }
    t
}

/// The deterministic candidate list (label, base change), lazily truncated
/// to the requested count; seeded twists fill the tail.
fn candidate_list(
    phi: &RatMatrix,
    count: usize,
    seed: u64,
) -> Result<Vec<(String, RatMatrix)>> {
    let n = phi.rows();
    let mut out: Vec<(String, RatMatrix)> = Vec::new();
    let push = |label: &str, g: Result<RatMatrix>, out: &mut Vec<(String, RatMatrix)>| {
        if let Ok(g) = g {
            out.push((label.to_string(), g));
        }
    };
    push("gs-base", gs_candidate(phi, GsOptions::default()), &mut out);
    push("skew-snf", snf_basechange(phi), &mut out);
    push(
        "gs-scale-e",
        gs_candidate(
            phi,
            GsOptions {
                scale: GsScale::E,
                ..Default::default()
            },
        ),
        &mut out,
    );
    push(
        "gs-pivot-min",
        gs_candidate(
            phi,
            GsOptions {
                pivot: GsPivot::MinAbs,
                ..Default::default()
            },
        ),
        &mut out,
    );
    push(
        "gs-pivot-max",
        gs_candidate(
            phi,
            GsOptions {
                pivot: GsPivot::MaxAbs,
                ..Default::default()
            },
        ),
        &mut out,
    );
    push(
        "gs-unit",
        gs_candidate(
            phi,
            GsOptions {
                prefer_unit: true,
                ..Default::default()
            },
        ),
        &mut out,
    );
    push(
        "gs-unit-min",
        gs_candidate(
            phi,
            GsOptions {
                prefer_unit: true,
                pivot: GsPivot::MinAbs,
                ..Default::default()
            },
        ),
        &mut out,
    );
    push(
        "gs-reversed",
        gs_candidate(
            phi,
            GsOptions {
                reverse: true,
                ..Default::default()
            },
        ),
        &mut out,
    );
    // symplectic scalar rescalings of the two deterministic base points
    let bases: Vec<(String, RatMatrix)> = out
        .iter()
        .filter(|(l, _)| l == "gs-base" || l == "skew-snf")
        .cloned()
        .collect();
    for (num, den) in [(2i64, 1i64), (1, 2), (3, 1), (1, 3), (6, 1), (1, 6)] {
        for (bl, bg) in &bases {
            if out.len() >= count {
                break;
            }
            let s = symplectic_scalar(n, num, den);
            out.push((format!("{bl}*diag({num}/{den})"), bg.mul(&s)));
        }
    }
    // seeded unimodular symplectic twists
    if !bases.is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = 0usize;
        while out.len() < count && t < 4 * count {
            let (bl, bg) = &bases[t % bases.len()];
            let tw = random_twist(n, &mut rng);
            out.push((format!("{bl}*twist{t}"), bg.mul(&tw)));
            t += 1;
        }
    }
    out.truncate(count.max(1));
    if out.is_empty() {
        return Err(Error::NoIntegralCandidate);
    }
    Ok(out)
}

/// Minimal k ≥ 1 with mᵏ integral, up to the bound.
fn minimal_integral_power(m: &RatMatrix, bound: u64) -> Option<u64> {
    let mut acc = m.clone();
    for k in 1..=bound {
        if acc.is_integral() {
            return Some(k);
        }
        acc = acc.mul(m);
    }
    None
}

fn max_abs_entry(mats: &[RatMatrix]) -> BigRational {
    let mut best = BigRational::zero();
    for m in mats {
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                let a = m[(i, j)].abs();
                if a > best {
                    best = a;
                }
            }
        }
    }
    best
}

/// Evaluates one base-change candidate; `None` when some generator has no
/// integral power within the bound (the candidate is discarded).
fn evaluate_candidate(
    hdata: &HypergroupData,
    phi: &RatMatrix,
    g: &RatMatrix,
    index: usize,
    label: &str,
) -> Result<Option<FormData>> {
    let n = phi.rows();
    let j = RatMatrix::standard_j(n);
    debug_assert!(g.mul(&j).mul(&g.transpose()) == *phi, "candidate fails gJgᵀ=Φ");
    let ginv = g.inverse().ok_or(Error::FormDegenerate)?;
    let l_generators: Vec<RatMatrix> = hdata
        .generators()
        .iter()
        .map(|x| ginv.mul(x).mul(g))
        .collect();
    for l in &l_generators {
        if !l.is_symplectic() {
            return Err(Error::NotSymplectic);
        }
    }
    let h = ginv.mul(&hdata.h_1).mul(g);
    if h.rank_minus_identity() != 1 {
        return Err(Error::NotATransvection);
    }
    let mut kbar = 1u64;
    for l in &l_generators {
        match minimal_integral_power(l, KBAR_BOUND) {
            Some(k) => kbar = kbar.lcm(&k),
            None => return Ok(None),
        }
    }
    Ok(Some(FormData {
        phi: phi.clone(),
        basechange_g: g.clone(),
        l_generators,
        h,
        kbar,
        j_n: j,
        candidate_index: index,
        candidate_label: label.to_string(),
    }))
}

/// Computes Φ, generates `candidates` base changes, and returns the
/// FormData minimizing k̄ (ties: smaller maximum absolute generator entry,
/// then candidate index). Deterministic for a fixed seed.
pub fn normalize_group(hdata: &HypergroupData, candidates: usize, seed: u64) -> Result<FormData> {
    let phi = invariant_form(hdata)?;
    let list = candidate_list(&phi, candidates.max(1), seed)?;
    let mut best: Option<(u64, BigRational, usize, FormData)> = None;
    for (idx, (label, g)) in list.iter().enumerate() {
        let Some(fd) = evaluate_candidate(hdata, &phi, g, idx, label)? else {
            continue;
        };
        let ma = max_abs_entry(&fd.l_generators);
        let better = match &best {
            None => true,
            Some((bk, bma, bidx, _)) => {
                (fd.kbar, &ma, &idx) < (*bk, bma, bidx)
            }
        };
        if better {
            best = Some((fd.kbar, ma, idx, fd));
        }
    }
    best.map(|(_, _, _, fd)| fd).ok_or(Error::NoIntegralCandidate)
}

/// Runs one labeled candidate from the deterministic family (used to probe
/// alternative invariant-lattice classes in diagnostics and tests).
pub fn normalize_with_candidate(hdata: &HypergroupData, label: &str) -> Result<FormData> {
    let phi = invariant_form(hdata)?;
    let list = candidate_list(&phi, 32, 0)?;
    for (idx, (l, g)) in list.iter().enumerate() {
        if l == label {
            if let Some(fd) = evaluate_candidate(hdata, &phi, g, idx, l)? {
                return Ok(fd);
            }
            return Err(Error::KbarUnbounded(KBAR_BOUND));
        }
    }
    Err(Error::NoIntegralCandidate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::{build_group, enumerate_pairs, PairConvention, PolyPair};
    use crate::matq::rat;
    use num_bigint::BigInt;

    fn group(f: &[u32], g: &[u32]) -> HypergroupData {
        build_group(&PolyPair::from_indices(f, g).unwrap()).unwrap()
    }

    #[test]
    fn form_unique_and_invariant() {
        let h = group(&[1, 1, 1, 1, 1, 1], &[14]);
        let phi = invariant_form(&h).unwrap();
        assert!(phi.is_skew());
        assert!(!phi.det().is_zero());
        for x in [&h.h_inf, &h.h_0, &h.h_1] {
            assert_eq!(x.mul(&phi).mul(&x.transpose()), phi);
        }
    }

    #[test]
    fn degree_four_form_det_is_square() {
        for pair in enumerate_pairs(4, PairConvention::Unordered).unwrap() {
            let h = build_group(&pair).unwrap();
            let phi = invariant_form(&h).unwrap();
            let d = phi.det().to_integer();
            assert!(d > BigInt::from(0), "pairing det positive for skew");
            let r = d.sqrt();
            assert_eq!(&r * &r, d, "det not a perfect square: {}", pair.label());
        }
    }

    #[test]
    fn gs_fixes_standard_form() {
        let j = RatMatrix::standard_j(6);
        let g = symplectic_basechange(&j).unwrap();
        assert_eq!(g, RatMatrix::identity(6));
    }

    #[test]
    fn gs_random_unimodular_property() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let j4 = RatMatrix::standard_j(4);
        for _ in 0..25 {
            // random unimodular u, phi = u J uᵀ
            let mut u = RatMatrix::identity(4);
            for _ in 0..8 {
                let i = rng.gen_range(0..4);
                let j = rng.gen_range(0..4);
                if i != j {
                    let c = rat(rng.gen_range(-3i64..=3));
                    let mut t = RatMatrix::identity(4);
                    t[(i, j)] = c;
                    u = u.mul(&t);
                }
            }
            let phi = u.mul(&j4).mul(&u.transpose());
            if phi.det().is_zero() {
                continue;
            }
            let g = symplectic_basechange(&phi).unwrap();
            assert_eq!(g.mul(&j4).mul(&g.transpose()), phi);
        }
    }

    #[test]
    fn snf_reduces_known_form() {
        let h = group(&[1, 1, 1, 1, 1, 1], &[14]);
        let phi = invariant_form(&h).unwrap();
        let snf = skew_snf(&phi).unwrap();
        assert_eq!(snf.ds.len(), 3);
        for d in &snf.ds {
            assert!(d > &BigInt::from(0));
        }
        let g = snf_basechange(&phi).unwrap();
        let j = RatMatrix::standard_j(6);
        assert_eq!(g.mul(&j).mul(&g.transpose()), phi);
    }

    #[test]
    fn normalize_identity_form() {
        // a pair whose conjugated group already preserves J would pick the
        // identity; emulate by checking the invariant on a normalized group
        let h = group(&[1, 1, 1, 1, 1, 1], &[14]);
        let fd = normalize_group(&h, 8, 1).unwrap();
        let j = RatMatrix::standard_j(6);
        for l in &fd.l_generators {
            assert_eq!(l.mul(&j).mul(&l.transpose()), j);
        }
        assert_eq!(fd.basechange_g.mul(&j).mul(&fd.basechange_g.transpose()), fd.phi);
        assert_eq!(fd.h.rank_minus_identity(), 1);
        let n1 = fd.h.sub(&RatMatrix::identity(6));
        assert_eq!(n1.mul(&n1), RatMatrix::zeros(6, 6));
        // conjugation consistency: g·l·g⁻¹ = original generator
        let ginv = fd.basechange_g.inverse().unwrap();
        for (l, x) in fd.l_generators.iter().zip(h.generators().iter()) {
            assert_eq!(fd.basechange_g.mul(l).mul(&ginv), *x);
        }
    }

    #[test]
    fn normalize_finds_integral_class_for_row_774_pair() {
        let h = group(&[1, 1, 1, 1, 1, 1], &[14]);
        let fd = normalize_group(&h, 8, 1).unwrap();
        assert_eq!(fd.kbar, 1, "an integral candidate exists (chose {})", fd.candidate_label);
        for l in &fd.l_generators {
            assert!(l.is_integral());
        }
    }

    #[test]
    fn scalar_candidates_are_symplectic() {
        let s = symplectic_scalar(6, 3, 2);
        assert!(s.is_symplectic());
    }
}
