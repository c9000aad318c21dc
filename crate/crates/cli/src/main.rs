//! Command-line front end for the symplectic hypergeometric pipeline.
//!
//! Subcommands:
//!   enumerate     list admissible pairs of a degree
//!   analyze       run the full pipeline on one pair
//!   sweep         run the pipeline over every pair of a degree
//!   verify        re-check the invariants of a serialized row report
//!   export-words  express integer-point generators over the standard
//!                 elementary generators of Sp(n, Z)

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use sphg::congruence::Budget;
use sphg::construct::{enumerate_pairs, PairConvention, PolyPair};
use sphg::pipeline::{
    analyze, report_lz_matrices, sweep, to_csv, verify_report, PipelineConfig, RowReport,
};
use sphg::words::{export_words, express};

#[derive(Parser)]
#[command(
    name = "sphg",
    about = "Symplectic hypergeometric groups: density, integer points, arithmetic-closure level and index",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Seed for every randomized choice; fixed seed means identical output.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Number of base-change candidates tried during normalization.
    #[arg(long, default_value_t = 24)]
    candidates: usize,
    /// Pin the base-change candidate class by label (e.g. "gs-scale-e")
    /// instead of letting the heuristic pick; different classes yield
    /// different integral lattices and possibly different closure values.
    #[arg(long)]
    class: Option<String>,
    /// Override the orbit-slot budget (also: SPHG_MAX_ORBIT_SLOTS).
    #[arg(long)]
    max_orbit_slots: Option<u64>,
    /// Override the level-exponent search cap (also: SPHG_LEVEL_CAP).
    #[arg(long)]
    level_cap: Option<u32>,
    /// Override the coset-transversal cap (also: SPHG_TRANSVERSAL_CAP).
    #[arg(long)]
    transversal_cap: Option<usize>,
}

impl CommonOpts {
    fn budget(&self) -> Budget {
        let mut b = Budget::from_env();
        if let Some(v) = self.max_orbit_slots {
            b.max_orbit_slots = v;
        }
        if let Some(v) = self.level_cap {
            b.level_cap = v;
        }
        if let Some(v) = self.transversal_cap {
            b.transversal_cap = v;
        }
        b
    }

    fn config(&self, degree: usize, ordered: bool, density_only: bool) -> PipelineConfig {
        PipelineConfig {
            degree,
            convention: if ordered {
                PairConvention::Ordered
            } else {
                PairConvention::Unordered
            },
            seed: self.seed,
            candidates: self.candidates,
            class: self.class.clone(),
            budget: self.budget(),
            density_only,
            out_dir: None,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// List every admissible pair of the given degree.
    Enumerate {
        /// Even degree n.
        #[arg(long, default_value_t = 6)]
        degree: usize,
        /// Count (f, g) and (g, f) separately.
        #[arg(long)]
        ordered: bool,
    },
    /// Run the full pipeline on a single pair.
    Analyze {
        /// Pair label, e.g. "C1^6 | C14".
        #[arg(long)]
        pair: String,
        /// Write the row report as JSON to this file (stdout summary always).
        #[arg(long)]
        json: Option<PathBuf>,
        /// Stop after the density verdict.
        #[arg(long)]
        density_only: bool,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run the pipeline over every pair of a degree, with caching.
    Sweep {
        /// Even degree n.
        #[arg(long, default_value_t = 6)]
        degree: usize,
        /// Count (f, g) and (g, f) separately.
        #[arg(long)]
        ordered: bool,
        /// Output directory (cache, report.csv, rows.jsonl, summary.json).
        #[arg(long)]
        out: PathBuf,
        /// Stop each row after the density verdict.
        #[arg(long)]
        density_only: bool,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Re-check the invariants of a serialized row report.
    Verify {
        /// Path to a row-report JSON file.
        #[arg(long)]
        row: PathBuf,
    },
    /// Express integer-point generators over the standard elementary
    /// generators of Sp(n, Z).
    ExportWords {
        /// Path to a row-report JSON file with integer-point generators.
        #[arg(long)]
        row: PathBuf,
        /// Write the word list to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_row(path: &PathBuf) -> Result<RowReport> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read row report {}", path.display()))?;
    serde_json::from_str(&text)
        .with_context(|| format!("cannot parse row report {}", path.display()))
}

fn print_row_summary(r: &RowReport) {
    println!("pair:      {}", r.pair);
    if let Some(nr) = r.nr {
        println!("nr:        {nr}");
    }
    println!("coeff:     {}", r.coeff);
    println!(
        "criterion: {}",
        if r.sv_arithmetic {
            "coeff <= 2 (arithmetic)"
        } else {
            "coeff > 2 (inconclusive)"
        }
    );
    match r.dense {
        Some(true) => println!("dense:     yes"),
        Some(false) => println!("dense:     no"),
        None => println!("dense:     undecided"),
    }
    if let Some(k) = r.kbar {
        println!("kbar:      {k}");
    }
    if let Some(l) = &r.candidate_label {
        println!("class:     {l}");
    }
    if let Some(m) = &r.mu_primes {
        let s = if m.is_empty() {
            "- (integral)".to_string()
        } else {
            m.iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(";")
        };
        println!("mu primes: {s}");
    }
    if let Some(i) = &r.int_index {
        println!("Int:       {i}");
    }
    if let Some(pi) = &r.pi {
        let s = if pi.is_empty() {
            "-".to_string()
        } else {
            pi.iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(";")
        };
        println!("Pi:        {s}");
    }
    if let Some(l) = &r.i_level {
        println!("level:     {l}");
    }
    if let Some(i) = &r.i_index {
        println!("index:     {i}");
    }
    if let Some(v) = r.verified {
        println!("verified:  {}", if v { "yes" } else { "no" });
    }
    println!("status:    {}", r.overall_status());
    for s in &r.statuses {
        println!("  {:<18} {}", s.stage, s.status);
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Enumerate { degree, ordered } => {
            let convention = if ordered {
                PairConvention::Ordered
            } else {
                PairConvention::Unordered
            };
            let pairs = enumerate_pairs(degree, convention)?;
            for p in &pairs {
                let nr = p.nr.map(|x| x.to_string()).unwrap_or_default();
                println!("{:>5}  {}  coeff={}", nr, p.label(), p.coeff);
            }
            eprintln!("{} admissible pairs of degree {}", pairs.len(), degree);
        }
        Command::Analyze {
            pair,
            json,
            density_only,
            common,
        } => {
            let p = PolyPair::parse(&pair)?;
            let config = common.config(p.n, false, density_only);
            let report = analyze(&p, &config);
            print_row_summary(&report);
            if let Some(path) = json {
                fs::write(&path, serde_json::to_string_pretty(&report)?)
                    .with_context(|| format!("cannot write {}", path.display()))?;
                eprintln!("wrote {}", path.display());
            }
        }
        Command::Sweep {
            degree,
            ordered,
            out,
            density_only,
            common,
        } => {
            let mut config = common.config(degree, ordered, density_only);
            config.out_dir = Some(out.display().to_string());
            let (reports, summary) = sweep(&config)?;
            print!("{}", to_csv(&reports));
            eprintln!(
                "total={} dense={} non-dense={} undecided={} verified={} budget-limited={} cache-hits={}",
                summary.total,
                summary.dense,
                summary.non_dense,
                summary.undecided,
                summary.verified,
                summary.budget_limited,
                summary.cache_hits
            );
            eprintln!("artifacts in {}", out.display());
        }
        Command::Verify { row } => {
            let report = load_row(&row)?;
            let violations = verify_report(&report);
            if violations.is_empty() {
                println!("ok: {}", report.pair);
            } else {
                for v in &violations {
                    println!("violation: {v}");
                }
                bail!("{} invariant violation(s)", violations.len());
            }
        }
        Command::ExportWords { row, out } => {
            let report = load_row(&row)?;
            let mats = report_lz_matrices(&report)?;
            if mats.is_empty() {
                bail!("report carries no integer-point generators");
            }
            let n = mats[0].rows();
            let mut words = Vec::with_capacity(mats.len());
            for (i, m) in mats.iter().enumerate() {
                let w = express(m).with_context(|| {
                    format!("generator {i} could not be expressed over the standard generators")
                })?;
                words.push(w);
            }
            let text = export_words(&words, n);
            match out {
                Some(path) => {
                    fs::write(&path, &text)
                        .with_context(|| format!("cannot write {}", path.display()))?;
                    eprintln!("wrote {} words to {}", words.len(), path.display());
                }
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}
