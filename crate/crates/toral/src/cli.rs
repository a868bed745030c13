//! Command-line surface: `analyze`, `primes`, `construct`, `verify`,
//! `orbit`, `equidist`.
//!
//! Exit codes: 0 when every assertion passes, 1 when a mathematically
//! guaranteed invariant is falsified at runtime, 2 on input errors
//! (parse failures, caps, non-ergodic inputs to constructions).
//!
//! Output is byte-identical across runs for a fixed config: JSON objects
//! are key-sorted, integers are emitted at arbitrary precision, and every
//! algorithmic choice upstream is deterministic.

use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::equidist;
use crate::error::{Error, Result};
use crate::matrix::{companion, IntMatrix, Rat};
use crate::modular::find_split_primes;
use crate::orbit::{
    certify_distance_bound, construct_general, orbit_bruteforce, uniform_sequence,
    ConstructOptions, Construction, OrbitRecord, TorusPoint,
};
use crate::poly::{factor_rational, IntPoly};

#[derive(Parser, Debug)]
#[command(
    name = "toral",
    about = "Exact periodic-orbit toolkit for ergodic endomorphisms of the n-torus",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub output: OutputConfig,
}

#[derive(Args, Debug)]
pub struct OutputConfig {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    /// Write the report to a file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads for the distance scans (affects speed only).
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,

    /// Upper end of the split-prime scan.
    #[arg(long, global = true, default_value_t = crate::modular::DEFAULT_SCAN_CAP)]
    pub scan_cap: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Structural report: characteristic/minimal polynomial, factorization,
    /// discriminant, ergodicity.
    Analyze {
        /// Matrix: inline JSON array-of-rows, or a path to a JSON/text file.
        matrix: String,
    },
    /// Split primes of the (irreducible) characteristic polynomial.
    Primes {
        matrix: String,
        /// How many split primes to certify.
        #[arg(long, default_value_t = 3)]
        count: usize,
        /// Start the scan at this prime.
        #[arg(long, default_value_t = 3)]
        p_min: u64,
    },
    /// Construct the periodic orbit at one level.
    Construct {
        matrix: String,
        #[arg(long, default_value_t = 1)]
        level: u32,
        /// Force this split prime for the leading block.
        #[arg(long)]
        prime: Option<u64>,
        /// Re-derive analytic periods by brute iteration where feasible.
        #[arg(long, default_value_t = false)]
        brute_verify: bool,
    },
    /// Construct levels 1..=K and run every verification on each record.
    Verify {
        matrix: String,
        #[arg(long, default_value_t = 3)]
        levels: u32,
        #[arg(long)]
        prime: Option<u64>,
        /// Grid side for the box-count checks.
        #[arg(long, default_value_t = 4)]
        grid: u32,
        #[arg(long, default_value_t = false)]
        brute_verify: bool,
    },
    /// Brute-force forward orbit of a rational point.
    Orbit {
        matrix: String,
        /// Comma-separated rational coordinates, e.g. "1/2,0".
        point: String,
        /// Iteration cap (default: state-space bound).
        #[arg(long)]
        iter_cap: Option<u64>,
    },
    /// Equidistribution trend of the constructed sequence (or a
    /// demonstration scan for non-ergodic matrices).
    Equidist {
        matrix: String,
        #[arg(long, default_value_t = 3)]
        levels: u32,
        #[arg(long, default_value_t = 4)]
        grid: u32,
        /// Denominator cap of the non-ergodic demonstration scan.
        #[arg(long, default_value_t = 6)]
        max_denominator: u64,
    },
}

/// Parse args, run, and map errors to the exit-code contract.
pub fn main_entry<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version with success
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::ContractViolation(_) => 1,
                _ => 2,
            }
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let report = match &cli.command {
        Command::Analyze { matrix } => cmd_analyze(&parse_matrix_arg(matrix)?)?,
        Command::Primes {
            matrix,
            count,
            p_min,
        } => cmd_primes(&parse_matrix_arg(matrix)?, *count, *p_min, &cli.output)?,
        Command::Construct {
            matrix,
            level,
            prime,
            brute_verify,
        } => cmd_construct(
            &parse_matrix_arg(matrix)?,
            *level,
            options(&cli.output, *prime, *brute_verify),
        )?,
        Command::Verify {
            matrix,
            levels,
            prime,
            grid,
            brute_verify,
        } => cmd_verify(
            &parse_matrix_arg(matrix)?,
            *levels,
            *grid,
            options(&cli.output, *prime, *brute_verify),
        )?,
        Command::Orbit {
            matrix,
            point,
            iter_cap,
        } => {
            let mut opts = options(&cli.output, None, false);
            opts.iter_cap = *iter_cap;
            cmd_orbit(&parse_matrix_arg(matrix)?, &parse_point(point)?, opts)?
        }
        Command::Equidist {
            matrix,
            levels,
            grid,
            max_denominator,
        } => cmd_equidist(
            &parse_matrix_arg(matrix)?,
            *levels,
            *grid,
            *max_denominator,
            options(&cli.output, None, false),
        )?,
    };
    emit(&report, &cli.output)
}

fn options(out: &OutputConfig, prime: Option<u64>, brute_verify: bool) -> ConstructOptions {
    ConstructOptions {
        prime_override: prime,
        scan_cap: out.scan_cap,
        brute_verify,
        jobs: out.jobs.max(1),
        ..Default::default()
    }
}

/// A rendered report: structured JSON plus preformatted text and CSV views.
pub struct Report {
    pub json: Value,
    pub text: String,
    pub csv: String,
}

fn emit(report: &Report, out: &OutputConfig) -> Result<()> {
    let body = match out.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report.json).expect("serializable");
            s.push('\n');
            s
        }
        Format::Text => report.text.clone(),
        Format::Csv => report.csv.clone(),
    };
    match &out.out {
        Some(path) => {
            let mut f = std::fs::File::create(path)
                .map_err(|e| Error::InvalidInput(format!("cannot create {path:?}: {e}")))?;
            f.write_all(body.as_bytes())
                .map_err(|e| Error::InvalidInput(format!("write failed: {e}")))?;
        }
        None => print!("{body}"),
    }
    Ok(())
}

// ---- input parsing ----

/// Inline JSON (starts with '[') or a path to a JSON / whitespace text file.
pub fn parse_matrix_arg(arg: &str) -> Result<IntMatrix> {
    let inline = arg.trim_start().starts_with('[');
    let text = if inline {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg)
            .map_err(|e| Error::InvalidInput(format!("cannot read {arg}: {e}")))?
    };
    parse_matrix_text(&text)
}

pub fn parse_matrix_text(text: &str) -> Result<IntMatrix> {
    let trimmed = text.trim();
    if trimmed.starts_with('[') {
        let v: Value = serde_json::from_str(trimmed)
            .map_err(|e| Error::InvalidInput(format!("matrix JSON: {e}")))?;
        let rows = v
            .as_array()
            .ok_or_else(|| Error::InvalidInput("matrix JSON must be an array of rows".into()))?;
        let parsed: Result<Vec<Vec<BigInt>>> = rows
            .iter()
            .map(|row| {
                row.as_array()
                    .ok_or_else(|| Error::InvalidInput("matrix rows must be arrays".into()))?
                    .iter()
                    .map(json_to_bigint)
                    .collect()
            })
            .collect();
        build_square(parsed?)
    } else {
        let parsed: Result<Vec<Vec<BigInt>>> = trimmed
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.split_whitespace()
                    .map(|tok| {
                        BigInt::from_str(tok)
                            .map_err(|e| Error::InvalidInput(format!("integer {tok:?}: {e}")))
                    })
                    .collect()
            })
            .collect();
        build_square(parsed?)
    }
}

fn build_square(rows: Vec<Vec<BigInt>>) -> Result<IntMatrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidInput(
            "matrix must be square and non-empty".into(),
        ));
    }
    Ok(IntMatrix::from_rows(rows))
}

fn json_to_bigint(v: &Value) -> Result<BigInt> {
    match v {
        Value::Number(n) => BigInt::from_str(&n.to_string())
            .map_err(|_| Error::InvalidInput(format!("not an integer: {n}"))),
        Value::String(s) => {
            BigInt::from_str(s).map_err(|_| Error::InvalidInput(format!("not an integer: {s:?}")))
        }
        other => Err(Error::InvalidInput(format!("not an integer: {other}"))),
    }
}

/// Comma-separated rational coordinates: "1/2,0" → (1/2, 0).
pub fn parse_point(s: &str) -> Result<TorusPoint> {
    let coords: Result<Vec<Rat>> = s
        .split(',')
        .map(|tok| {
            let tok = tok.trim();
            let (num, den) = match tok.split_once('/') {
                Some((a, b)) => (a.trim(), b.trim()),
                None => (tok, "1"),
            };
            let num = BigInt::from_str(num)
                .map_err(|e| Error::InvalidInput(format!("coordinate {tok:?}: {e}")))?;
            let den = BigInt::from_str(den)
                .map_err(|e| Error::InvalidInput(format!("coordinate {tok:?}: {e}")))?;
            if den.is_zero() {
                return Err(Error::InvalidInput(format!("zero denominator in {tok:?}")));
            }
            Ok(Rat::new(num, den))
        })
        .collect();
    TorusPoint::from_rationals(&coords?)
}

// ---- JSON helpers ----

fn big_json(x: &BigInt) -> Value {
    Value::Number(serde_json::from_str(&x.to_string()).expect("integer literal"))
}

fn biguint_json(x: &num_bigint::BigUint) -> Value {
    Value::Number(serde_json::from_str(&x.to_string()).expect("integer literal"))
}

fn poly_json(f: &IntPoly) -> Value {
    Value::Array(f.coeffs().iter().map(big_json).collect())
}

fn rat_json(r: &Rat) -> Value {
    json!({ "num": big_json(r.numer()), "den": big_json(r.denom()) })
}

fn point_json(p: &TorusPoint) -> Value {
    json!({
        "u": Value::Array(p.coords().iter().map(big_json).collect()),
        "m": big_json(p.denom()),
    })
}

fn orbit_json(rec: &OrbitRecord) -> Value {
    json!({
        "base": point_json(&rec.base),
        "T": biguint_json(&rec.period),
        "d_sq": rec.d_sq.as_ref().map(rat_json).unwrap_or(Value::Null),
        "d_exact": rec.d_exact,
        "metric_float": rec.metric_float().map(|m| json!(m)).unwrap_or(Value::Null),
        "construction": rec.construction.as_str(),
        "level": rec.level.map(|k| json!(k)).unwrap_or(Value::Null),
        "prime_data": rec.prime_data.iter().map(|b| json!({
            "poly": b.poly.to_string(),
            "primes": b.primes.iter().map(|pa| json!({
                "p": pa.p,
                "k": pa.k,
                "root": big_json(&pa.root),
            })).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    })
}

fn rat_display(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn d_sq_display(rec: &OrbitRecord) -> String {
    match &rec.d_sq {
        Some(d) => rat_display(d),
        None => "-".into(),
    }
}

fn metric_display(rec: &OrbitRecord) -> String {
    match rec.metric_float() {
        Some(m) => format!("{m:.6}"),
        None => "-".into(),
    }
}

fn primes_display(rec: &OrbitRecord) -> String {
    rec.prime_data
        .iter()
        .map(|b| {
            b.primes
                .iter()
                .map(|pa| format!("{}^{}", pa.p, pa.k))
                .collect::<Vec<_>>()
                .join("*")
        })
        .collect::<Vec<_>>()
        .join("|")
}

// ---- commands ----

pub fn cmd_analyze(a: &IntMatrix) -> Result<Report> {
    let f = a.char_poly();
    let factors = factor_rational(&f)?;
    let irreducible = factors.len() == 1 && factors[0].1 == 1;
    let minimal = a.minimal_poly();
    let disc = f.discriminant()?;
    let erg = a.ergodicity();

    let json = json!({
        "dim": a.dim(),
        "det": big_json(&erg.det),
        "charpoly": { "display": f.to_string(), "coeffs": poly_json(&f) },
        "minimal_poly": { "display": minimal.to_string(), "coeffs": poly_json(&minimal) },
        "factors": factors.iter().map(|(g, e)| json!({
            "display": g.to_string(),
            "coeffs": poly_json(g),
            "multiplicity": e,
        })).collect::<Vec<_>>(),
        "irreducible": irreducible,
        "discriminant": big_json(&disc),
        "ergodic": erg.ergodic,
        "unity_witness": erg.unity_witness.map(|m| json!(m)).unwrap_or(Value::Null),
        "singular": erg.det.is_zero(),
    });

    let mut text = String::new();
    text += &format!("dimension     : {}\n", a.dim());
    text += &format!("det           : {}\n", erg.det);
    text += &format!("char poly     : {f}\n");
    text += &format!("minimal poly  : {minimal}\n");
    text += &format!(
        "factors       : {}\n",
        factors
            .iter()
            .map(|(g, e)| if *e == 1 {
                format!("({g})")
            } else {
                format!("({g})^{e}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    );
    text += &format!("irreducible   : {irreducible}\n");
    text += &format!("discriminant  : {disc}\n");
    text += &format!("ergodic       : {}\n", erg.ergodic);
    if let Some(m) = erg.unity_witness {
        text += &format!("unity witness : Φ_{m} divides the characteristic polynomial\n");
    }
    if erg.det.is_zero() {
        text += "warning       : matrix is singular (not an endomorphism)\n";
    }

    let mut csv = String::from("key,value\n");
    csv += &format!("dim,{}\n", a.dim());
    csv += &format!("det,{}\n", erg.det);
    csv += &format!("charpoly,{f}\n");
    csv += &format!("irreducible,{irreducible}\n");
    csv += &format!("discriminant,{disc}\n");
    csv += &format!("ergodic,{}\n", erg.ergodic);

    Ok(Report { json, text, csv })
}

pub fn cmd_primes(a: &IntMatrix, count: usize, p_min: u64, out: &OutputConfig) -> Result<Report> {
    let f = a.char_poly();
    let factors = factor_rational(&f)?;
    if factors.len() != 1 || factors[0].1 != 1 {
        return Err(Error::InvalidInput(
            "split-prime scan requires an irreducible characteristic polynomial".into(),
        ));
    }
    let certs = find_split_primes(&f, count, p_min, out.scan_cap)?;

    let json = json!({
        "poly": { "display": f.to_string(), "coeffs": poly_json(&f) },
        "certs": certs.iter().map(|c| json!({
            "p": c.p,
            "roots": c.roots,
            "disc": big_json(&c.disc),
            "f0": big_json(&c.f0),
        })).collect::<Vec<_>>(),
    });

    let mut text = format!("split primes of {f}\n");
    for c in &certs {
        text += &format!(
            "p = {:<8} roots mod p: {}\n",
            c.p,
            c.roots
                .iter()
                .map(|r| r.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        );
    }
    let mut csv = String::from("p,roots\n");
    for c in &certs {
        csv += &format!(
            "{},{}\n",
            c.p,
            c.roots
                .iter()
                .map(|r| r.to_string())
                .collect::<Vec<_>>()
                .join(";")
        );
    }
    Ok(Report { json, text, csv })
}

pub fn cmd_construct(a: &IntMatrix, level: u32, opts: ConstructOptions) -> Result<Report> {
    let gen = construct_general(a, level, &opts)?;
    let json = json!({
        "level": level,
        "frame": orbit_json(&gen.frame_record),
        "pulled": orbit_json(&gen.pulled_record),
        "conjugator_det": big_json(&gen.conjugator.det()),
        "period_multiplier": biguint_json(&gen.period_multiplier),
    });
    let mut text = format!("level {level}\n");
    for (tag, rec) in [("frame", &gen.frame_record), ("orbit", &gen.pulled_record)] {
        text += &format!(
            "{tag:<6} T = {:<12} d² = {:<16} d^nT = {:<10} primes {} base {}\n",
            rec.period,
            d_sq_display(rec),
            metric_display(rec),
            primes_display(rec),
            rec.base,
        );
    }
    let mut csv = String::from("record,level,T,d_sq,dnT,primes\n");
    for (tag, rec) in [("frame", &gen.frame_record), ("pulled", &gen.pulled_record)] {
        csv += &format!(
            "{tag},{level},{},{},{},{}\n",
            rec.period,
            d_sq_display(rec),
            metric_display(rec),
            primes_display(rec),
        );
    }
    Ok(Report { json, text, csv })
}

/// Everything `verify` asserts per level, for the report.
struct LevelChecks {
    cell_occupancy: bool,
    packing: bool,
    density: bool,
    wedge_pairs: Option<usize>,
    brute_agreement: Option<bool>,
}

fn verify_level_checks(
    rec: &OrbitRecord,
    frame: &IntMatrix,
    grid: u32,
    opts: &ConstructOptions,
) -> Result<LevelChecks> {
    // fixed points have no gap to check, the measure bounds start at T ≥ 2,
    // and orbits beyond the materialization cap carry no point list
    let has_gap = rec.period > num_bigint::BigUint::one() && rec.d_sq.is_some();
    let cell = rec.points.is_none() || equidist::cell_occupancy_check(rec)?;
    if !cell {
        return Err(Error::ContractViolation(
            "cell occupancy falsified the recorded minimum gap".into(),
        ));
    }
    let packing = if has_gap {
        equidist::packing_bound_check(rec)?
    } else {
        true
    };
    if !packing {
        return Err(Error::ContractViolation(
            "packing upper bound T·(d/2)^n·ω_n ≤ 1 failed".into(),
        ));
    }
    let density = if has_gap {
        equidist::density_bound_check(rec, grid)?
    } else {
        true
    };
    if !density {
        return Err(Error::ContractViolation(
            "density bound count ≤ C₁·d^{-n}·g^{-n} failed".into(),
        ));
    }
    if rec.points.is_some() {
        let report = equidist::box_counts(rec, grid)?;
        let total: u64 = report.counts.iter().sum();
        if num_bigint::BigUint::from(total) != rec.period {
            return Err(Error::ContractViolation(
                "box counts do not sum to the period".into(),
            ));
        }
    }

    // wedge certificate applies to irreducible-frame orbits
    let wedge_pairs = if rec.construction == Construction::Irreducible && has_gap {
        let b = &rec.prime_data[0];
        let f = &b.poly;
        let (p, k) = (b.primes[0].p, b.primes[0].k);
        let t = rec.period.to_u64().unwrap_or(u64::MAX);
        let pairs = ((t.saturating_mul(t.saturating_sub(1))) / 2).min(200) as usize;
        let cert = certify_distance_bound(rec, &companion(f)?, p, k, pairs)?;
        Some(cert.pairs_checked)
    } else {
        None
    };

    let brute_agreement = if opts.brute_verify {
        match rec.base.denom().to_u64() {
            Some(m) if m <= 100_000 => {
                let (_, brute) = orbit_bruteforce(frame, &rec.base, opts)?;
                if brute.period != rec.period {
                    return Err(Error::ContractViolation(format!(
                        "brute-force period {} disagrees with analytic period {}",
                        brute.period, rec.period
                    )));
                }
                Some(true)
            }
            _ => None,
        }
    } else {
        None
    };

    Ok(LevelChecks {
        cell_occupancy: cell,
        packing,
        density,
        wedge_pairs,
        brute_agreement,
    })
}

pub fn cmd_verify(a: &IntMatrix, levels: u32, grid: u32, opts: ConstructOptions) -> Result<Report> {
    let seq = uniform_sequence(a, levels, &opts)?;

    let mut level_rows = Vec::new();
    let mut text_rows = String::new();
    let mut csv = String::from("record,k,primes,T,d_sq,dnT\n");
    for l in &seq.levels {
        let frame = &l.construction.frame_record;
        let checks = verify_level_checks(frame, &l.construction.frame_matrix, grid, &opts)?;
        let pulled = &l.construction.pulled_record;
        if pulled.d_sq.is_some() && pulled.period > num_bigint::BigUint::one() {
            // the pulled record satisfies the same measure bounds
            if !equidist::packing_bound_check(pulled)? {
                return Err(Error::ContractViolation(
                    "packing bound failed on the pulled-back orbit".into(),
                ));
            }
            if !equidist::cell_occupancy_check(pulled)? {
                return Err(Error::ContractViolation(
                    "cell occupancy failed on the pulled-back orbit".into(),
                ));
            }
        }

        level_rows.push(json!({
            "k": l.level,
            "frame": orbit_json(frame),
            "pulled": orbit_json(pulled),
            "checks": {
                "cell_occupancy": checks.cell_occupancy,
                "packing": checks.packing,
                "density": checks.density,
                "wedge_pairs": checks.wedge_pairs.map(|p| json!(p)).unwrap_or(Value::Null),
                "brute_agreement": checks.brute_agreement.map(|b| json!(b)).unwrap_or(Value::Null),
            },
        }));
        text_rows += &format!(
            "k = {:<3} T = {:<12} d² = {:<18} d^nT = {:<12} primes {}\n",
            l.level,
            frame.period,
            d_sq_display(frame),
            metric_display(frame),
            primes_display(frame),
        );
        for (tag, rec) in [("frame", frame), ("pulled", pulled)] {
            csv += &format!(
                "{tag},{},{},{},{},{}\n",
                l.level,
                primes_display(rec),
                rec.period,
                d_sq_display(rec),
                metric_display(rec),
            );
        }
    }

    // equidistribution trend over the materialized frame records
    let materialized: Vec<OrbitRecord> = seq
        .levels
        .iter()
        .map(|l| l.construction.frame_record.clone())
        .filter(|r| r.points.is_some())
        .collect();
    let trend = if materialized.len() >= 2 {
        let report = equidist::convergence_report(&materialized, grid)?;
        if !report.improved {
            return Err(Error::ContractViolation(
                "box deviation did not improve from the first to the deepest level".into(),
            ));
        }
        Some(report)
    } else {
        None
    };

    let json = json!({
        "levels": level_rows,
        "min_frame_dnT": seq.min_frame_metric.map(|m| json!(m)).unwrap_or(Value::Null),
        "min_pulled_dnT": seq.min_pulled_metric.map(|m| json!(m)).unwrap_or(Value::Null),
        "grid": grid,
        "max_dev": trend.as_ref().map(|t| Value::Array(
            t.rows.iter().map(|r| json!(r.max_dev)).collect()
        )).unwrap_or(Value::Null),
        "all_checks_passed": true,
    });

    let mut text = format!("uniform sequence for {} levels\n", levels);
    text += &text_rows;
    if let Some(c) = seq.min_frame_metric {
        text += &format!("empirical constant C = min d^nT = {c:.6}\n");
    }
    if let Some(t) = &trend {
        text += &format!(
            "max_dev trend on {0}×{0} grid: {1}\n",
            grid,
            t.rows
                .iter()
                .map(|r| format!("{:.4}", r.max_dev))
                .collect::<Vec<_>>()
                .join(" → ")
        );
    }
    text += "all checks passed\n";

    Ok(Report { json, text, csv })
}

pub fn cmd_orbit(a: &IntMatrix, start: &TorusPoint, opts: ConstructOptions) -> Result<Report> {
    if start.dim() != a.dim() {
        return Err(Error::InvalidInput(format!(
            "point dimension {} does not match matrix dimension {}",
            start.dim(),
            a.dim()
        )));
    }
    let (preperiod, rec) = orbit_bruteforce(a, start, &opts)?;
    let json = json!({
        "start": point_json(start),
        "preperiod": preperiod,
        "orbit": orbit_json(&rec),
    });
    let mut text = format!("start     : {start}\n");
    text += &format!("preperiod : {preperiod}\n");
    text += &format!("period    : {}\n", rec.period);
    text += &format!("d²        : {}\n", d_sq_display(&rec));
    text += &format!("d^nT      : {}\n", metric_display(&rec));
    if let Some(points) = &rec.points {
        if points.len() <= 24 {
            text += "points    :\n";
            for p in points {
                text += &format!("  {p}\n");
            }
        }
    }
    let csv = format!(
        "preperiod,T,d_sq,dnT\n{preperiod},{},{},{}\n",
        rec.period,
        d_sq_display(&rec),
        metric_display(&rec)
    );
    Ok(Report { json, text, csv })
}

pub fn cmd_equidist(
    a: &IntMatrix,
    levels: u32,
    grid: u32,
    max_denominator: u64,
    opts: ConstructOptions,
) -> Result<Report> {
    let erg = a.ergodicity();
    if !erg.ergodic {
        // demonstration scan only: no convergence can hold
        let rows = equidist::nonergodic_demo(a, max_denominator, grid)?;
        let json = json!({
            "ergodic": false,
            "reason": erg.reason(),
            "grid": grid,
            "orbits": rows.iter().map(|r| json!({
                "denominator": r.denominator,
                "T": r.period,
                "max_dev": r.max_dev,
            })).collect::<Vec<_>>(),
        });
        let mut text = format!(
            "matrix is not ergodic ({}); demonstration scan only\n",
            erg.reason()
        );
        let min_dev = rows.iter().map(|r| r.max_dev).fold(f64::INFINITY, f64::min);
        for r in &rows {
            text += &format!(
                "den = {:<6} T = {:<8} max_dev = {:.4}\n",
                r.denominator, r.period, r.max_dev
            );
        }
        text += &format!("minimum deviation over the scan: {min_dev:.4} (bounded away from 0)\n");
        let mut csv = String::from("denominator,T,max_dev\n");
        for r in &rows {
            csv += &format!("{},{},{}\n", r.denominator, r.period, r.max_dev);
        }
        return Ok(Report { json, text, csv });
    }

    let seq = uniform_sequence(a, levels, &opts)?;
    // orbits beyond the materialization cap cannot be binned
    let kept: Vec<&crate::orbit::SequenceLevel> = seq
        .levels
        .iter()
        .filter(|l| l.construction.frame_record.points.is_some())
        .collect();
    if kept.len() < 2 {
        return Err(Error::InvalidInput(
            "need at least two materialized levels for a trend".into(),
        ));
    }
    let records: Vec<OrbitRecord> = kept
        .iter()
        .map(|l| l.construction.frame_record.clone())
        .collect();
    let report = equidist::convergence_report(&records, grid)?;
    if !report.improved {
        return Err(Error::ContractViolation(
            "box deviation did not improve from the first to the deepest level".into(),
        ));
    }

    let json = json!({
        "ergodic": true,
        "grid": grid,
        "levels": report.rows.iter().zip(&kept).map(|(r, l)| json!({
            "k": l.level,
            "T": r.period,
            "max_dev": r.max_dev,
            "dnT": l.frame_metric.map(|m| json!(m)).unwrap_or(Value::Null),
        })).collect::<Vec<_>>(),
        "improved": report.improved,
    });
    let mut text = format!("equidistribution trend on a {grid}×{grid} grid\n");
    // plot-ready rows: level, max_dev, d^nT
    let mut csv = String::from("level,max_dev,dnT\n");
    for (r, l) in report.rows.iter().zip(&kept) {
        text += &format!(
            "k = {:<3} T = {:<12} max_dev = {:<10.4} d^nT = {}\n",
            l.level,
            r.period,
            r.max_dev,
            l.frame_metric
                .map(|m| format!("{m:.6}"))
                .unwrap_or("-".into()),
        );
        csv += &format!(
            "{},{},{}\n",
            l.level,
            r.max_dev,
            l.frame_metric.map(|m| m.to_string()).unwrap_or("-".into())
        );
    }
    text += &format!(
        "deviation improved from level {} to level {}: {}\n",
        kept[0].level,
        kept[kept.len() - 1].level,
        report.improved
    );
    Ok(Report { json, text, csv })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_inline_json_matrix() {
        let m = parse_matrix_arg("[[2,1],[1,1]]").unwrap();
        assert_eq!(m, IntMatrix::from_i64(&[&[2, 1], &[1, 1]]));
    }

    #[test]
    fn parse_text_matrix() {
        let m = parse_matrix_text("2 1\n1 1\n").unwrap();
        assert_eq!(m, IntMatrix::from_i64(&[&[2, 1], &[1, 1]]));
    }

    #[test]
    fn parse_rejects_ragged_matrix() {
        assert!(parse_matrix_text("[[1,2],[3]]").is_err());
        assert!(parse_matrix_text("1 2\n3\n").is_err());
    }

    #[test]
    fn parse_point_examples() {
        let p = parse_point("1/2,0").unwrap();
        assert_eq!(p.denom(), &BigInt::from(2));
        assert_eq!(p.coords(), &[BigInt::one(), BigInt::zero()]);
        // negative and mixed denominators canonicalize
        let q = parse_point("-1/3, 1/2").unwrap();
        assert_eq!(q.denom(), &BigInt::from(6));
        assert_eq!(q.coords(), &[BigInt::from(4), BigInt::from(3)]);
        assert!(parse_point("1/0").is_err());
        assert!(parse_point("x,y").is_err());
    }

    #[test]
    fn analyze_cat_map_report() {
        let rep = cmd_analyze(&IntMatrix::from_i64(&[&[2, 1], &[1, 1]])).unwrap();
        assert_eq!(rep.json["charpoly"]["display"], "x^2 - 3x + 1");
        assert_eq!(rep.json["irreducible"], true);
        assert_eq!(rep.json["ergodic"], true);
        assert_eq!(rep.json["discriminant"], json!(5));
    }

    #[test]
    fn analyze_reports_unity_witness() {
        let rep = cmd_analyze(&IntMatrix::from_i64(&[&[0, -1], &[1, 0]])).unwrap();
        assert_eq!(rep.json["ergodic"], false);
        assert_eq!(rep.json["unity_witness"], json!(4));
        let id = cmd_analyze(&IntMatrix::identity(2)).unwrap();
        assert_eq!(id.json["unity_witness"], json!(1));
    }

    #[test]
    fn json_output_is_deterministic() {
        let a = IntMatrix::from_i64(&[&[2, 1], &[1, 1]]);
        let r1 = serde_json::to_string(&cmd_analyze(&a).unwrap().json).unwrap();
        let r2 = serde_json::to_string(&cmd_analyze(&a).unwrap().json).unwrap();
        assert_eq!(r1, r2);
    }
}
