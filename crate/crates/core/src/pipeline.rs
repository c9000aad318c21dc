//! End-to-end orchestration: runs every analysis stage on a single pair,
//! sweeps a whole degree with a content-addressed per-row cache, emits
//! CSV/JSONL reports, and re-verifies the internal consistency of
//! serialized rows.
//!
//! The stage order is fixed: build, normalize, density, integer-points,
//! exceptional-primes, closure, verify. Every stage records a status
//! string; failures never panic and never abort the sweep — the row
//! carries `failed:` / `budget-exceeded:` / `skipped:` markers instead.

use std::fs;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::congruence::{closure_level_and_index, Budget};
use crate::construct::{
    build_group, coeff_and_criterion, enumerate_pairs, PairConvention, PolyPair,
};
use crate::density::{exceptional_primes, is_dense};
use crate::error::{Error, Result};
use crate::factor::{factor_bigint, factor_u64, format_factored};
use crate::form::{normalize_group, normalize_with_candidate};
use crate::matq::RatMatrix;
use crate::zpoints::{integer_points_with, verify_zpoints, THIN_SUBPRODUCTS};

/// Stage names in pipeline order.
pub const STAGES: [&str; 7] = [
    "build",
    "normalize",
    "density",
    "integer-points",
    "exceptional-primes",
    "closure",
    "verify",
];

/// Maximum number of integer-point retries (with enlarged thinned
/// generating sets) when the congruence verification rejects a set.
const VERIFY_RETRIES: u32 = 2;

/// Budget for factoring report quantities (indices, denominators).
const REPORT_RHO_BUDGET: u64 = 400_000;

/// Reproducibility and resource knobs shared by `analyze` and `sweep`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PipelineConfig {
    /// Degree of the pairs (even).
    pub degree: usize,
    /// Pair-listing convention for sweeps.
    pub convention: PairConvention,
    /// Seed for every randomized choice (base-change twists, product
    /// replacement, thinning). Fixed seed + fixed config = identical output.
    pub seed: u64,
    /// Number of base-change candidates tried during normalization.
    pub candidates: usize,
    /// Pin the base-change candidate by label instead of selecting the
    /// best-scoring one. Different candidates produce different integral
    /// lattices, whose integer points can have different closure
    /// invariants; pinning makes a specific lattice reproducible.
    pub class: Option<String>,
    /// Memory/size budgets for orbit and transversal computations.
    pub budget: Budget,
    /// Stop after the density verdict (used for fast full-degree counts).
    pub density_only: bool,
    /// Output directory for sweep artifacts (CSV, JSONL, cache). None
    /// disables caching and file output.
    pub out_dir: Option<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            degree: 6,
            convention: PairConvention::Unordered,
            seed: 7,
            candidates: 24,
            class: None,
            budget: Budget::default(),
            density_only: false,
            out_dir: None,
        }
    }
}

impl PipelineConfig {
    /// Digest of the semantically relevant fields. `out_dir` is excluded
    /// so cache entries stay valid when only the output location moves.
    pub fn digest(&self) -> String {
        let key = serde_json::json!({
            "degree": self.degree,
            "convention": self.convention,
            "seed": self.seed,
            "candidates": self.candidates,
            "class": self.class,
            "budget": self.budget,
            "density_only": self.density_only,
        });
        let mut h = Sha256::new();
        h.update(key.to_string().as_bytes());
        hex_string(&h.finalize())
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Status of one pipeline stage.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct StageStatus {
    pub stage: String,
    pub status: String,
}

/// Complete per-pair result. Optional fields are absent when the
/// corresponding stage did not run or did not succeed.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct RowReport {
    /// Ordinal in the enumeration, when the pair came from a sweep.
    pub nr: Option<usize>,
    /// Canonical pair label.
    pub pair: String,
    /// |leading nonzero coefficient of f - g|.
    pub coeff: u64,
    /// Sufficient arithmeticity criterion: coeff <= 2.
    pub sv_arithmetic: bool,
    /// Zariski density verdict.
    pub dense: Option<bool>,
    /// Integrality defect bound of the selected conjugate.
    pub kbar: Option<u64>,
    /// Label of the selected base-change candidate.
    pub candidate_label: Option<String>,
    /// Primes dividing the denominator lcm of the normalized generators.
    pub mu_primes: Option<Vec<u64>>,
    /// Index of the integer points in the group, factored.
    pub int_index: Option<String>,
    /// Exceptional primes (candidates with proper mod-p image).
    pub pi: Option<Vec<u64>>,
    /// Closure level as an integer.
    pub level: Option<u64>,
    /// Closure level, factored string.
    pub i_level: Option<String>,
    /// Closure index in Sp(n, Z/level), factored string.
    pub i_index: Option<String>,
    /// Per-prime level exponents for every examined prime.
    pub level_exponents: Option<Vec<(u64, u32)>>,
    /// Whether the congruence verification of the chosen integer-point
    /// generators succeeded.
    pub verified: Option<bool>,
    /// Integer-point generators, row-major integer strings per matrix.
    pub lz_generators: Option<Vec<Vec<String>>>,
    /// Status per stage, in pipeline order.
    pub statuses: Vec<StageStatus>,
}

impl RowReport {
    fn new(pair: &PolyPair) -> Self {
        let (coeff, sv) = coeff_and_criterion(pair);
        RowReport {
            nr: pair.nr,
            pair: pair.label(),
            coeff,
            sv_arithmetic: sv,
            dense: None,
            kbar: None,
            candidate_label: None,
            mu_primes: None,
            int_index: None,
            pi: None,
            level: None,
            i_level: None,
            i_index: None,
            level_exponents: None,
            verified: None,
            lz_generators: None,
            statuses: Vec::new(),
        }
    }

    fn push_status(&mut self, stage: &str, status: impl Into<String>) {
        self.statuses.push(StageStatus {
            stage: stage.to_string(),
            status: status.into(),
        });
    }

    /// Marks every stage from `from` (index into `STAGES`) as skipped.
    fn skip_from(&mut self, from: usize, reason: &str) {
        for stage in &STAGES[from..] {
            self.push_status(stage, format!("skipped: {reason}"));
        }
    }

    /// The recorded status of a stage, if any.
    pub fn status_of(&self, stage: &str) -> Option<&str> {
        self.statuses
            .iter()
            .find(|s| s.stage == stage)
            .map(|s| s.status.as_str())
    }

    /// One-line roll-up: the first status that is neither ok nor skipped,
    /// prefixed by its stage; "ok" when every stage that ran succeeded.
    pub fn overall_status(&self) -> String {
        for s in &self.statuses {
            if s.status.starts_with("ok") || s.status.starts_with("skipped") {
                continue;
            }
            return format!("{}: {}", s.stage, s.status);
        }
        "ok".to_string()
    }

    /// True when any stage ran out of its memory or size budget.
    pub fn budget_limited(&self) -> bool {
        self.statuses
            .iter()
            .any(|s| s.status.contains("budget-exceeded"))
    }
}

/// Renders an error as a stage status, classifying resource exhaustion
/// separately from genuine failures.
fn classify(e: &Error) -> String {
    match e {
        Error::MemoryBudgetExceeded { .. }
        | Error::TransversalBudgetExceeded(_)
        | Error::LevelSearchExceeded { .. } => format!("budget-exceeded: {e}"),
        _ => format!("failed: {e}"),
    }
}

/// Factored rendering of a positive integer, falling back to the plain
/// decimal string when factoring exceeds its budget.
fn factored_string(x: &BigInt) -> String {
    match factor_bigint(x, REPORT_RHO_BUDGET) {
        Ok(f) => format_factored(&f),
        Err(_) => x.to_string(),
    }
}

/// Distinct primes of a positive integer, ascending.
fn primes_of_bigint(x: &BigInt) -> Option<Vec<u64>> {
    let f = factor_bigint(x, REPORT_RHO_BUDGET).ok()?;
    let mut primes = Vec::with_capacity(f.len());
    for (p, _) in f {
        primes.push(u64::try_from(&p).ok()?);
    }
    primes.sort_unstable();
    Some(primes)
}

/// Serializes an integral matrix as row-major integer strings.
fn mat_to_strings(m: &RatMatrix) -> Vec<String> {
    assert!(m.is_integral(), "only integral matrices are serialized");
    m.data().iter().map(|x| x.numer().to_string()).collect()
}

/// Parses a matrix serialized by `mat_to_strings`.
fn strings_to_mat(entries: &[String]) -> Result<RatMatrix> {
    let n2 = entries.len();
    let mut n = 0usize;
    while (n + 1) * (n + 1) <= n2 {
        n += 1;
    }
    if n == 0 || n * n != n2 {
        return Err(Error::MalformedReport(format!(
            "matrix entry count {n2} is not a positive square"
        )));
    }
    let mut data = Vec::with_capacity(n2);
    for s in entries {
        let v: BigInt = s
            .parse()
            .map_err(|_| Error::MalformedReport(format!("bad integer entry: {s}")))?;
        data.push(BigRational::from_integer(v));
    }
    Ok(RatMatrix::new(n, n, data))
}

/// Reconstructs the integer-point generators stored in a report.
pub fn report_lz_matrices(report: &RowReport) -> Result<Vec<RatMatrix>> {
    let gens = report.lz_generators.as_ref().ok_or_else(|| {
        Error::MalformedReport("report has no integer-point generators".into())
    })?;
    gens.iter().map(|entries| strings_to_mat(entries)).collect()
}

/// Runs the full stage pipeline on one pair. Never panics on budget or
/// verification failures: every outcome is recorded in the statuses.
pub fn analyze(pair: &PolyPair, config: &PipelineConfig) -> RowReport {
    let mut r = RowReport::new(pair);

    // Stage 1: companion matrices and the transvection.
    let hdata = match build_group(pair) {
        Ok(h) => {
            r.push_status("build", "ok");
            h
        }
        Err(e) => {
            r.push_status("build", classify(&e));
            r.skip_from(1, "group construction failed");
            return r;
        }
    };

    // Stage 2: invariant form and base change into Sp(n, Q).
    let normalized = match &config.class {
        Some(label) => normalize_with_candidate(&hdata, label),
        None => normalize_group(&hdata, config.candidates, config.seed),
    };
    let form = match normalized {
        Ok(f) => {
            r.push_status("normalize", "ok");
            f
        }
        Err(e) => {
            r.push_status("normalize", classify(&e));
            // Density is a conjugation invariant, so the verdict can still
            // be decided on the raw generators; all later stages need the
            // normalized form and are skipped.
            match is_dense(&hdata.generators(), &hdata.h_1) {
                Ok(Some(cert)) => {
                    r.dense = Some(true);
                    r.mu_primes = primes_of_bigint(&cert.mu);
                    r.push_status("density", "ok (raw generators)");
                    r.skip_from(3, "no normalized form");
                }
                Ok(None) => {
                    r.dense = Some(false);
                    r.push_status("density", "non-dense");
                    r.skip_from(3, "non-dense");
                }
                Err(e2) => {
                    r.push_status("density", classify(&e2));
                    r.skip_from(3, "density undecided");
                }
            }
            return r;
        }
    };
    r.kbar = Some(form.kbar);
    r.candidate_label = Some(form.candidate_label.clone());

    // Stage 3: Zariski density of the normalized group.
    let cert = match is_dense(&form.l_generators, &form.h) {
        Ok(Some(c)) => {
            r.dense = Some(true);
            r.push_status("density", "ok");
            c
        }
        Ok(None) => {
            r.dense = Some(false);
            r.push_status("density", "non-dense");
            r.skip_from(3, "non-dense");
            return r;
        }
        Err(e) => {
            r.push_status("density", classify(&e));
            r.skip_from(3, "density undecided");
            return r;
        }
    };
    r.mu_primes = primes_of_bigint(&cert.mu);

    if config.density_only {
        r.skip_from(3, "density-only run");
        return r;
    }

    // Stages 4-7, with a bounded retry that enlarges the thinned
    // integer-point generating set whenever verification rejects it.
    let mut attempt: u32 = 0;
    loop {
        let subproducts = THIN_SUBPRODUCTS << attempt;
        let zseed = config.seed.wrapping_add(1009 * u64::from(attempt));

        let mut data = match integer_points_with(
            &form.l_generators,
            &form.h,
            &config.budget,
            zseed,
            subproducts,
        ) {
            Ok(d) => d,
            Err(e) => {
                r.push_status("integer-points", classify(&e));
                r.skip_from(4, "no integer points");
                return r;
            }
        };
        r.int_index = Some(factored_string(&data.index));

        let zcert = match exceptional_primes(
            &data.lz_generators,
            &data.lambda,
            &config.budget,
            config.seed,
        ) {
            Ok(c) => c,
            Err(e) => {
                r.push_status("integer-points", "ok");
                r.push_status("exceptional-primes", classify(&e));
                r.skip_from(5, "no exceptional-prime set");
                return r;
            }
        };

        let closure = match closure_level_and_index(
            &data.lz_generators,
            &zcert.pi,
            &config.budget,
            config.seed,
        ) {
            Ok(c) => c,
            Err(e) => {
                r.pi = Some(zcert.pi.clone());
                r.push_status("integer-points", "ok");
                r.push_status("exceptional-primes", "ok");
                r.push_status("closure", classify(&e));
                r.skip_from(6, "no closure level");
                return r;
            }
        };

        let lz_strings: Vec<Vec<String>> =
            data.lz_generators.iter().map(mat_to_strings).collect();
        let fill = |r: &mut RowReport| {
            r.pi = Some(zcert.pi.clone());
            r.level = Some(closure.level);
            r.i_level = Some(closure.level_string());
            r.i_index = Some(closure.index_string());
            r.level_exponents = Some(closure.exponents.clone());
            r.lz_generators = Some(lz_strings.clone());
            r.push_status("integer-points", "ok");
            r.push_status("exceptional-primes", "ok");
            r.push_status("closure", "ok");
        };

        match verify_zpoints(&mut data, closure.level, &config.budget) {
            Ok(true) => {
                fill(&mut r);
                r.verified = Some(true);
                r.push_status("verify", "ok");
                return r;
            }
            Ok(false) if attempt < VERIFY_RETRIES => {
                attempt += 1;
                continue;
            }
            Ok(false) => {
                fill(&mut r);
                r.verified = Some(false);
                r.push_status(
                    "verify",
                    "failed: chosen integer-point generators do not generate the congruence image",
                );
                return r;
            }
            Err(e) => {
                fill(&mut r);
                r.push_status("verify", classify(&e));
                return r;
            }
        }
    }
}

/// Aggregate counters of a sweep.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq, Eq)]
pub struct SweepSummary {
    pub total: usize,
    pub dense: usize,
    pub non_dense: usize,
    pub undecided: usize,
    pub verified: usize,
    pub budget_limited: usize,
    pub cache_hits: usize,
}

fn io_err(e: std::io::Error) -> Error {
    Error::Io(e.to_string())
}

/// Content address of a row: pair label plus the config digest.
fn cache_key(label: &str, config_digest: &str) -> String {
    let mut h = Sha256::new();
    h.update(label.as_bytes());
    h.update(b"\n");
    h.update(config_digest.as_bytes());
    let full = hex_string(&h.finalize());
    full[..24].to_string()
}

/// Writes a file atomically (temp file in the same directory + rename).
fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let tmp = path.with_extension(format!("tmp-{}", std::process::id()));
    fs::write(&tmp, text).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)?;
    Ok(())
}

/// Analyzes every admissible pair of the configured degree. Rows are
/// cached per (pair, config) content address under `out_dir/cache`, so
/// interrupted sweeps resume without recomputation. With an `out_dir`,
/// also writes `report.csv`, `rows.jsonl` and `summary.json`.
pub fn sweep(config: &PipelineConfig) -> Result<(Vec<RowReport>, SweepSummary)> {
    let pairs = enumerate_pairs(config.degree, config.convention)?;
    let digest = config.digest();
    let cache_dir: Option<PathBuf> = match &config.out_dir {
        Some(d) => {
            let p = Path::new(d).join("cache");
            fs::create_dir_all(&p).map_err(io_err)?;
            Some(p)
        }
        None => None,
    };

    let mut reports = Vec::with_capacity(pairs.len());
    let mut summary = SweepSummary {
        total: pairs.len(),
        ..SweepSummary::default()
    };

    for pair in &pairs {
        let key = cache_key(&pair.label(), &digest);
        let mut cached: Option<RowReport> = None;
        if let Some(dir) = &cache_dir {
            if let Ok(text) = fs::read_to_string(dir.join(format!("{key}.json"))) {
                if let Ok(rep) = serde_json::from_str::<RowReport>(&text) {
                    if rep.pair == pair.label() {
                        cached = Some(rep);
                    }
                }
            }
        }
        let report = match cached {
            Some(rep) => {
                summary.cache_hits += 1;
                rep
            }
            None => {
                let rep = analyze(pair, config);
                if let Some(dir) = &cache_dir {
                    let text = serde_json::to_string_pretty(&rep)
                        .map_err(|e| Error::Io(e.to_string()))?;
                    write_atomic(&dir.join(format!("{key}.json")), &text)?;
                }
                rep
            }
        };
        match report.dense {
            Some(true) => summary.dense += 1,
            Some(false) => summary.non_dense += 1,
            None => summary.undecided += 1,
        }
        if report.verified == Some(true) {
            summary.verified += 1;
        }
        if report.budget_limited() {
            summary.budget_limited += 1;
        }
        reports.push(report);
    }

    if let Some(d) = &config.out_dir {
        let dir = Path::new(d);
        write_atomic(&dir.join("report.csv"), &to_csv(&reports))?;
        let mut jsonl = String::new();
        for r in &reports {
            jsonl.push_str(&serde_json::to_string(r).map_err(|e| Error::Io(e.to_string()))?);
            jsonl.push('\n');
        }
        write_atomic(&dir.join("rows.jsonl"), &jsonl)?;
        let stext =
            serde_json::to_string_pretty(&summary).map_err(|e| Error::Io(e.to_string()))?;
        write_atomic(&dir.join("summary.json"), &stext)?;
    }

    Ok((reports, summary))
}

/// Quotes a CSV field when needed (commas, quotes or newlines).
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Renders an optional prime list: absent -> empty, empty -> "-",
/// otherwise semicolon-joined.
fn primes_field(v: &Option<Vec<u64>>) -> String {
    match v {
        None => String::new(),
        Some(v) if v.is_empty() => "-".to_string(),
        Some(v) => v
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join(";"),
    }
}

/// Deterministic CSV rendering of a report list.
pub fn to_csv(reports: &[RowReport]) -> String {
    let mut out = String::from("Nr,Pair,Mu,Int,Pi,iLevel,iIndex,Coeff,SV,Status\n");
    for r in reports {
        let nr = r.nr.map(|x| x.to_string()).unwrap_or_default();
        let fields = [
            nr,
            csv_field(&r.pair),
            csv_field(&primes_field(&r.mu_primes)),
            csv_field(r.int_index.as_deref().unwrap_or("")),
            csv_field(&primes_field(&r.pi)),
            csv_field(r.i_level.as_deref().unwrap_or("")),
            csv_field(r.i_index.as_deref().unwrap_or("")),
            r.coeff.to_string(),
            if r.sv_arithmetic { "yes" } else { "no" }.to_string(),
            csv_field(&r.overall_status()),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Re-checks the internal consistency of a serialized report. Returns a
/// list of violated invariants; an empty list means the report passes.
pub fn verify_report(report: &RowReport) -> Vec<String> {
    let mut bad = Vec::new();

    match PolyPair::parse(&report.pair) {
        Ok(pair) => {
            let (coeff, sv) = coeff_and_criterion(&pair);
            if coeff != report.coeff {
                bad.push(format!(
                    "coeff mismatch: recomputed {coeff}, reported {}",
                    report.coeff
                ));
            }
            if sv != report.sv_arithmetic {
                bad.push("arithmeticity criterion flag mismatch".to_string());
            }
        }
        Err(e) => bad.push(format!("pair label does not parse: {e}")),
    }

    match (&report.i_level, &report.i_index) {
        (Some(l), Some(i)) => {
            if (l == "1") != (i == "1") {
                bad.push("level 1 and index 1 must occur together".to_string());
            }
        }
        (Some(_), None) | (None, Some(_)) => {
            bad.push("level and index must be reported together".to_string());
        }
        (None, None) => {}
    }

    if let Some(m) = report.level {
        if m == 0 {
            bad.push("level must be positive".to_string());
        } else {
            let f = factor_u64(m);
            let fs = format_factored(
                &f.iter()
                    .map(|&(p, e)| (BigInt::from(p), e))
                    .collect::<Vec<_>>(),
            );
            if report.i_level.as_deref() != Some(fs.as_str()) {
                bad.push(format!(
                    "factored level {fs} disagrees with reported {:?}",
                    report.i_level
                ));
            }
            if let Some(exps) = &report.level_exponents {
                let mut prod: u128 = 1;
                for &(p, e) in exps {
                    prod = prod.saturating_mul(u128::from(p).saturating_pow(e));
                }
                if prod != u128::from(m) {
                    bad.push("level exponents do not multiply to the level".to_string());
                }
            }
            if let Some(pi) = &report.pi {
                for (p, _) in &f {
                    if *p != 2 && *p != 3 && !pi.contains(p) {
                        bad.push(format!("level prime {p} outside the exceptional set"));
                    }
                }
            }
        }
    }

    if report.lz_generators.is_some() {
        match report_lz_matrices(report) {
            Ok(mats) => {
                for (i, g) in mats.iter().enumerate() {
                    if !g.is_symplectic() {
                        bad.push(format!("integer-point generator {i} is not symplectic"));
                    }
                }
            }
            Err(e) => bad.push(format!("integer-point generators malformed: {e}")),
        }
    }

    if report.dense == Some(false) && report.i_level.is_some() {
        bad.push("closure data reported for a non-dense group".to_string());
    }

    bad
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fast_config() -> PipelineConfig {
        PipelineConfig::default()
    }

    #[test]
    fn non_dense_pair_short_circuits() {
        let pair = PolyPair::from_indices(&[1, 1, 3, 3], &[9]).unwrap();
        let config = fast_config();
        let r = analyze(&pair, &config);
        assert_eq!(r.dense, Some(false));
        assert!(r.i_level.is_none());
        assert!(r.i_index.is_none());
        assert_eq!(r.status_of("density"), Some("non-dense"));
        assert_eq!(
            r.status_of("closure"),
            Some("skipped: non-dense"),
            "later stages must be skipped"
        );
        assert_eq!(r.overall_status(), "density: non-dense");
        assert!(verify_report(&r).is_empty(), "{:?}", verify_report(&r));

        // Determinism: identical config, identical report.
        let r2 = analyze(&pair, &config);
        assert_eq!(r, r2);
        assert_eq!(
            serde_json::to_string(&r).unwrap(),
            serde_json::to_string(&r2).unwrap()
        );
    }

    #[test]
    fn integral_sample_pair_end_to_end() {
        // (t-1)^6 paired with the 14th cyclotomic polynomial: integral
        // class, integer points of index 1, closure level 2 with index
        // 36 = |Sp(6,2)| / 8!.
        let pair = PolyPair::from_indices(&[1, 1, 1, 1, 1, 1], &[14]).unwrap();
        let config = fast_config();
        let r = analyze(&pair, &config);
        assert_eq!(r.dense, Some(true), "statuses: {:?}", r.statuses);
        assert_eq!(r.kbar, Some(1));
        assert_eq!(r.int_index.as_deref(), Some("1"));
        assert_eq!(r.mu_primes.as_deref(), Some(&[][..]));
        assert_eq!(r.i_level.as_deref(), Some("2"));
        assert_eq!(r.i_index.as_deref(), Some("2^2*3^2"));
        assert_eq!(r.level, Some(2));
        assert_eq!(r.verified, Some(true));
        assert_eq!(r.overall_status(), "ok");
        let exps = r.level_exponents.clone().unwrap();
        assert!(exps.contains(&(2, 1)));
        assert!(exps.contains(&(3, 0)));

        // The serialized generators reconstruct to symplectic matrices.
        let mats = report_lz_matrices(&r).unwrap();
        assert!(!mats.is_empty());
        for m in &mats {
            assert!(m.is_integral() && m.is_symplectic());
        }

        assert!(verify_report(&r).is_empty(), "{:?}", verify_report(&r));

        // Tampering is detected.
        let mut broken = r.clone();
        broken.i_index = Some("1".to_string());
        assert!(!verify_report(&broken).is_empty());
        let mut broken2 = r.clone();
        broken2.coeff += 1;
        assert!(!verify_report(&broken2).is_empty());
    }

    #[test]
    fn csv_layout_is_stable() {
        let mut a = RowReport::new(&PolyPair::from_indices(&[1, 1, 1, 1, 1, 1], &[14]).unwrap());
        a.nr = Some(774);
        a.dense = Some(true);
        a.mu_primes = Some(vec![]);
        a.int_index = Some("1".into());
        a.pi = Some(vec![2]);
        a.i_level = Some("2".into());
        a.i_index = Some("2^2*3^2".into());
        a.push_status("build", "ok");
        let b = RowReport::new(&PolyPair::from_indices(&[1, 1, 3, 3], &[9]).unwrap());
        let csv = to_csv(&[a, b]);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "Nr,Pair,Mu,Int,Pi,iLevel,iIndex,Coeff,SV,Status"
        );
        assert_eq!(
            lines.next().unwrap(),
            "774,C1^6 | C14,-,1,2,2,2^2*3^2,5,no,ok"
        );
        let second = lines.next().unwrap();
        assert!(second.starts_with(",C1^2*C3^2 | C9,,,,,,"), "{second}");
        assert!(lines.next().is_none());
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn config_digest_tracks_semantic_fields() {
        let a = PipelineConfig::default();
        let mut b = a.clone();
        assert_eq!(a.digest(), b.digest());
        b.out_dir = Some("/tmp/elsewhere".into());
        assert_eq!(a.digest(), b.digest(), "out_dir must not affect the digest");
        b.seed = 8;
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn cache_write_and_key_are_stable() {
        let dir = std::env::temp_dir().join(format!("row-cache-test-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let key = cache_key("C1^6 | C14", "abc");
        assert_eq!(key, cache_key("C1^6 | C14", "abc"));
        assert_ne!(key, cache_key("C1^6 | C14", "abd"));
        assert_eq!(key.len(), 24);

        let pair = PolyPair::from_indices(&[1, 1, 3, 3], &[9]).unwrap();
        let rep = RowReport::new(&pair);
        let path = dir.join(format!("{key}.json"));
        write_atomic(&path, &serde_json::to_string_pretty(&rep).unwrap()).unwrap();
        let back: RowReport = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(rep, back);
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn malformed_matrix_strings_are_rejected()  {
        assert!(strings_to_mat(&["1".into(), "2".into(), "3".into()]).is_err());
        assert!(strings_to_mat(&["1".into(), "x".into(), "3".into(), "4".into()]).is_err());
        let ok = strings_to_mat(&["1".into(), "0".into(), "0".into(), "1".into()]).unwrap();
        assert_eq!(ok.rows(), 2);
    }
}
