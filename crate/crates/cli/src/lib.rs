//! Command-line front end for the point-counting laboratory.
//!
//! Every subcommand produces a flat list of check rows — `name`,
//! `fingerprint`, exact decimal `lhs`/`rhs`, a `pass` flag, named inputs
//! and free-form notes — rendered as text, JSON or CSV.  Output is fully
//! deterministic for a fixed command line and cache state: rows never
//! mention wall-clock time, worker count only changes how an enumeration
//! is split, and map-valued fields are kept in sorted order.
//!
//! Exit codes: 0 all checks passed, 1 at least one check failed (or an
//! internal error), 2 malformed input, 3 budget exceeded, 4 cache
//! integrity violation.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use cilab_core::counter::{self, CountOptions, CountRecord, CountTable};
use cilab_core::poly::{self, CiSpec};
use cilab_core::zeta::{self, MiddlePolynomial};
use cilab_core::{dynamics, theorems, Error, ErrorCategory, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::{BigInt, BigUint};
use serde::Serialize;

/// Exit code when every reported check passed.
pub const EXIT_PASS: i32 = 0;
/// Exit code when at least one check failed or an internal error occurred.
pub const EXIT_CHECK_FAILED: i32 = 1;
/// Exit code for malformed specs, flags or parameters.
pub const EXIT_PARSE: i32 = 2;
/// Exit code when an enumeration would exceed the configured budget.
pub const EXIT_BUDGET: i32 = 3;
/// Exit code when the count cache contradicts a recomputation.
pub const EXIT_INTEGRITY: i32 = 4;

fn exit_code_for(err: &Error) -> i32 {
    match err.category() {
        ErrorCategory::Parse => EXIT_PARSE,
        ErrorCategory::Budget => EXIT_BUDGET,
        ErrorCategory::Integrity => EXIT_INTEGRITY,
        ErrorCategory::Other => EXIT_CHECK_FAILED,
    }
}

// ---------------------------------------------------------------------------
// Report rows
// ---------------------------------------------------------------------------

/// One verification (or bookkeeping) outcome.
///
/// `lhs` and `rhs` hold exact decimal strings when the check compares two
/// integers; when a square root was eliminated, both sides are the squared
/// values and a note says so.  Purely numeric diagnostics live in `inputs`.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub fingerprint: String,
    pub lhs: String,
    pub rhs: String,
    pub pass: bool,
    pub inputs: BTreeMap<String, String>,
    pub notes: Vec<String>,
}

impl CheckRow {
    fn new(name: &str, fingerprint: &str) -> CheckRow {
        CheckRow {
            name: name.to_string(),
            fingerprint: fingerprint.to_string(),
            lhs: String::new(),
            rhs: String::new(),
            pass: true,
            inputs: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    fn sides(mut self, lhs: impl ToString, rhs: impl ToString) -> Self {
        self.lhs = lhs.to_string();
        self.rhs = rhs.to_string();
        self
    }

    fn passed(mut self, pass: bool) -> Self {
        self.pass = pass;
        self
    }

    fn input(mut self, key: &str, value: impl ToString) -> Self {
        self.inputs.insert(key.to_string(), value.to_string());
        self
    }

    fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    fn notes_from(mut self, notes: &[String]) -> Self {
        self.notes.extend(notes.iter().cloned());
        self
    }
}

/// Top-level document for the JSON format.
#[derive(Debug, Serialize)]
struct ReportDoc<'a> {
    checks: &'a [CheckRow],
}

fn join(items: impl IntoIterator<Item = impl ToString>, sep: &str) -> String {
    items
        .into_iter()
        .map(|item| item.to_string())
        .collect::<Vec<_>>()
        .join(sep)
}

// ---------------------------------------------------------------------------
// Command line
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "cilab",
    version,
    about = "Point-count laboratory for projective complete intersections over finite fields",
    max_term_width = 100
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format for the check report.
    #[arg(long, global = true, env = "CILAB_FORMAT", value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Worker threads for point enumeration (results are identical for any value).
    #[arg(long, global = true, env = "CILAB_THREADS", default_value_t = 1)]
    threads: usize,

    /// Directory holding the persistent count cache; omitted means in-memory only.
    #[arg(long, global = true, env = "CILAB_CACHE")]
    cache: Option<PathBuf>,

    /// Seed for random generation and internal modulus searches.
    #[arg(long, global = true, env = "CILAB_SEED", default_value_t = 0)]
    seed: u64,

    /// Relative tolerance for numeric root-modulus comparisons.
    #[arg(long, global = true, env = "CILAB_TOLERANCE", default_value_t = zeta::DEFAULT_RH_TOLERANCE)]
    tolerance: f64,

    /// Maximum projective representatives a single enumeration may visit.
    #[arg(long, global = true, env = "CILAB_BUDGET", default_value_t = counter::DEFAULT_ENUMERATION_BUDGET)]
    budget: u64,

    /// Recount cache hits and fail on any disagreement with stored values.
    #[arg(long, global = true, env = "CILAB_AUDIT")]
    audit: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Count points over F_{p^m} for m = 1..=max-ext, filling the cache.
    Count(CountArgs),
    /// Reconstruct the middle polynomial and run the critical-line checks.
    Zeta(ZetaArgs),
    /// Run one verification family.
    Verify {
        #[command(subcommand)]
        check: VerifyCommand,
    },
    /// Lefschetz-number models and diagonal-rotation periods.
    Dynamics(DynamicsArgs),
    /// Generate random smooth specs and write them as JSON files.
    Gen(GenArgs),
    /// Full battery per spec, aggregated into one report.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct CountArgs {
    /// Spec files (JSON).
    #[arg(long, required = true, num_args = 1..)]
    spec: Vec<PathBuf>,
    /// Highest extension degree to count over.
    #[arg(long, default_value_t = 1)]
    max_ext: u32,
    /// Also record points where the Jacobian loses rank.
    #[arg(long)]
    smooth: bool,
}

#[derive(Debug, Args)]
struct ZetaArgs {
    /// Spec files (JSON).
    #[arg(long, required = true, num_args = 1..)]
    spec: Vec<PathBuf>,
    /// Cap on the extension degrees the reconstruction may consume.
    #[arg(long)]
    max_ext: Option<u32>,
}

#[derive(Debug, Subcommand)]
enum VerifyCommand {
    /// Deviation of each count from the ambient projective-space count.
    ProjectiveBound(ProjectiveArgs),
    /// Deviation of a hyperplane-complement count from Q^n.
    AffineBound(AffineArgs),
    /// Multidegree bounds on the total Betti number.
    BettiBounds(BettiArgs),
    /// Reconstructed degree equals twice the genus, for curve specs.
    Genus(ZetaArgs),
    /// Exhaustive multidegree scan: genus 2 never occurs.
    Genus2(Genus2Args),
    /// Degree-(q+1) plane curves counted over F_{q^2} attain 1 + q^3 exactly.
    Fermat(FermatArgs),
}

#[derive(Debug, Args)]
struct ProjectiveArgs {
    /// Spec files (JSON).
    #[arg(long, required = true, num_args = 1..)]
    spec: Vec<PathBuf>,
    /// Check the bound over every extension degree up to this.
    #[arg(long, default_value_t = 1)]
    max_ext: u32,
}

#[derive(Debug, Args)]
struct AffineArgs {
    /// Spec files (JSON).
    #[arg(long, required = true, num_args = 1..)]
    spec: Vec<PathBuf>,
    /// Coordinate hyperplane x_i = 0 to remove.
    #[arg(long, default_value_t = 0)]
    hyperplane: usize,
    /// Tuning parameter d >= -1 in the exponent (n + d + 1)/2.
    #[arg(long, default_value_t = -1, allow_hyphen_values = true)]
    tuning: i64,
    /// Extension degree to count over.
    #[arg(long, default_value_t = 1)]
    ext: u32,
}

#[derive(Debug, Args)]
struct BettiArgs {
    /// Spec files (JSON).
    #[arg(long, required = true, num_args = 1..)]
    spec: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct Genus2Args {
    /// Largest ambient projective dimension to scan.
    #[arg(long, default_value_t = 6)]
    max_ambient: usize,
    /// Largest degree allowed in a multidegree tuple.
    #[arg(long, default_value_t = 6)]
    max_degree: u32,
}

#[derive(Debug, Args)]
struct FermatArgs {
    /// Family parameters; each q must be a prime power.
    #[arg(long, required = true, num_args = 1..)]
    q: Vec<u64>,
}

#[derive(Debug, Args)]
struct DynamicsArgs {
    /// Largest dimension for the model Lefschetz numbers.
    #[arg(long, default_value_t = 5)]
    max_n: usize,
    /// Largest eigenvalue base for the model Lefschetz numbers.
    #[arg(long, default_value_t = 10)]
    max_q: u64,
    /// Largest genus for the identity-map table.
    #[arg(long, default_value_t = 8)]
    max_genus: u64,
    /// Largest family parameter k for the rotation periods.
    #[arg(long, default_value_t = 6)]
    max_k: u64,
    /// Largest dimension n for the rotation periods.
    #[arg(long, default_value_t = 4)]
    max_dim: u32,
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Field characteristic.
    #[arg(long)]
    p: u64,
    /// Ambient projective dimension N.
    #[arg(long)]
    ambient: usize,
    /// Comma-separated form degrees, e.g. 2,2.
    #[arg(long, required = true, value_delimiter = ',')]
    degrees: Vec<u32>,
    /// How many specs to generate (consecutive seeds).
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Extension degrees over which candidate smoothness is probed.
    #[arg(long, default_value_t = 2)]
    probe_depth: u32,
    /// Directory the spec files are written into.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Spec files (JSON).
    #[arg(long, required = true, num_args = 1..)]
    spec: Vec<PathBuf>,
    /// Highest extension degree to count over (default: enough to
    /// reconstruct the middle polynomial plus one sign check).
    #[arg(long)]
    max_ext: Option<u32>,
    /// Tuning parameter for the hyperplane-complement bound.
    #[arg(long, default_value_t = -1, allow_hyphen_values = true)]
    tuning: i64,
    /// Coordinate hyperplane removed for the complement bound.
    #[arg(long, default_value_t = 0)]
    hyperplane: usize,
}

// ---------------------------------------------------------------------------
// Execution context
// ---------------------------------------------------------------------------

struct Ctx {
    options: CountOptions,
    table: CountTable,
    tolerance: f64,
    seed: u64,
}

impl Ctx {
    /// Cache-aware count.  Smoothness scanning only happens on cache
    /// misses (or under --audit, which recounts); hits return the stored
    /// value alone.
    fn count(&mut self, spec: &CiSpec, m: u32, smooth: bool) -> Result<CountRecord> {
        let mut options = self.options.clone();
        options.check_smoothness = smooth;
        counter::count_with_cache(&mut self.table, spec, m, &options)
    }

    /// Symmetry-route reconstruction: counts up to ceil(b/2) plus however
    /// many check degrees the sign disambiguation needs, all through the
    /// cache.  `cap` limits the extension degrees this may consume.
    fn reconstruct(&mut self, spec: &CiSpec, cap: u32) -> Result<(usize, MiddlePolynomial)> {
        let b = usize::try_from(zeta::middle_betti(spec.ambient(), spec.degrees())?)
            .expect("middle rank fits usize");
        let h = b.div_ceil(2);
        if h as u64 > u64::from(cap) {
            return Err(Error::InvalidParameter(format!(
                "reconstruction needs counts up to extension degree {h}, but --max-ext is {cap}"
            )));
        }
        let mut counts = Vec::with_capacity(h);
        for m in 1..=h as u32 {
            counts.push(self.count(spec, m, false)?.count);
        }
        let (p, n) = (spec.p(), spec.n());
        let poly = MiddlePolynomial::reconstruct_with_symmetry_auto(&counts, p, n, b, |d| {
            if u64::from(d) > u64::from(cap) {
                return Err(Error::InvalidParameter(format!(
                    "sign disambiguation needs a degree-{d} count, but --max-ext is {cap}"
                )));
            }
            Ok(self.count(spec, d, false)?.count)
        })?;
        Ok((b, poly))
    }
}

fn open_cache(dir: Option<&Path>) -> Result<CountTable> {
    match dir {
        None => Ok(CountTable::in_memory()),
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            CountTable::open(dir.join("counts.csv"))
        }
    }
}

fn load_specs(paths: &[PathBuf]) -> Result<Vec<(PathBuf, CiSpec)>> {
    paths
        .iter()
        .map(|path| {
            // An unreadable spec is a bad-input failure (exit 2), same as a
            // malformed one, and the message must name the file.
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::InvalidParameter(format!("cannot read spec {}: {e}", path.display()))
            })?;
            Ok((path.clone(), poly::parse_spec(&text)?))
        })
        .collect()
}

/// Convert a recoverable (category Other) error into a failing row;
/// re-raise anything that should change the process exit code instead.
fn soft_fail(rows: &mut Vec<CheckRow>, name: &str, fingerprint: &str, err: Error) -> Result<()> {
    if err.category() == ErrorCategory::Other {
        rows.push(CheckRow::new(name, fingerprint).passed(false).note(format!("error: {err}")));
        Ok(())
    } else {
        Err(err)
    }
}

// ---------------------------------------------------------------------------
// Row builders shared by subcommands
// ---------------------------------------------------------------------------

fn count_row(rec: &CountRecord, spec: &CiSpec, smooth: bool) -> CheckRow {
    let q = BigUint::from(spec.p()).pow(rec.extension_degree);
    let mut row = CheckRow::new("count", &rec.fingerprint)
        .sides(&rec.count, &rec.count)
        .input("m", rec.extension_degree)
        .input("q", q)
        .input("ambient", spec.ambient())
        .input("degrees", join(spec.degrees(), ","));
    if smooth {
        row = row.passed(rec.anomalies.is_empty());
        for point in &rec.anomalies {
            row = row.note(format!("jacobian loses rank at element indices [{}]", join(point, ",")));
        }
    }
    row
}

fn deviation_row(report: &theorems::DeviationReport) -> CheckRow {
    let lhs = &report.deviation * &report.deviation;
    let rhs = BigUint::from(report.constant).pow(2)
        * BigUint::from(report.q).pow(report.exponent_num as u32);
    CheckRow::new(&report.name, &report.fingerprint)
        .sides(lhs, rhs)
        .passed(report.pass)
        .input("q", report.q)
        .input("n", report.n)
        .input("constant", report.constant)
        .input("deviation", &report.deviation)
        .input("exponent-num", report.exponent_num)
        .input("ratio", report.ratio)
        .input("vacuous", report.vacuous)
        .note("sides are squared: the bound is constant * Q^(exponent-num/2)")
        .notes_from(&report.notes)
}

fn zeta_rows(ctx: &mut Ctx, spec: &CiSpec, cap: u32) -> Result<Vec<CheckRow>> {
    let fp = spec.fingerprint().to_string();
    let mut rows = Vec::new();
    let (b, poly) = match ctx.reconstruct(spec, cap) {
        Ok(pair) => pair,
        Err(err) => {
            soft_fail(&mut rows, "zeta-reconstruction", &fp, err)?;
            return Ok(rows);
        }
    };
    rows.push(
        CheckRow::new("zeta-reconstruction", &fp)
            .sides(poly.actual_degree(), b)
            .passed(poly.actual_degree() == b)
            .input("q", poly.q())
            .input("n", poly.n())
            .input(
                "sign",
                match poly.sign() {
                    Some(sign) => format!("{sign:+}"),
                    None => "n/a".to_string(),
                },
            )
            .input("coefficients", join(poly.coeffs(), ","))
            .note("integer coefficients from exact symmetric-function recursion"),
    );
    match zeta::verify_rh(&poly, ctx.tolerance) {
        Ok(rh) => rows.push(
            CheckRow::new("critical-line", &fp)
                .passed(rh.pass)
                .input("symmetry", rh.symmetry)
                .input(
                    "symmetry-sign",
                    match rh.symmetry_sign {
                        Some(sign) => format!("{sign:+}"),
                        None => "n/a".to_string(),
                    },
                )
                .input("moduli-ok", rh.moduli_ok)
                .input("worst-relative-error", rh.worst_relative_error)
                .input("tolerance", rh.tolerance)
                .input("coefficient-bounds-ok", rh.coefficient_bounds_ok)
                .input("distinct-roots", rh.roots.len()),
        ),
        Err(err) => soft_fail(&mut rows, "critical-line", &fp, err)?,
    }
    if spec.n() == 1 {
        match theorems::check_genus_consistency(&poly, spec.ambient(), spec.degrees()) {
            Ok(report) => rows.push(
                CheckRow::new("genus-consistency", &fp)
                    .sides(report.poly_degree, BigInt::from(2) * &report.genus)
                    .passed(report.pass)
                    .input("genus", &report.genus),
            ),
            Err(err) => soft_fail(&mut rows, "genus-consistency", &fp, err)?,
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Subcommand handlers
// ---------------------------------------------------------------------------

fn cmd_count(ctx: &mut Ctx, args: &CountArgs) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    for (_, spec) in load_specs(&args.spec)? {
        for m in 1..=args.max_ext {
            let rec = ctx.count(&spec, m, args.smooth)?;
            rows.push(count_row(&rec, &spec, args.smooth));
        }
    }
    Ok(rows)
}

fn cmd_zeta(ctx: &mut Ctx, args: &ZetaArgs) -> Result<Vec<CheckRow>> {
    let cap = args.max_ext.unwrap_or(u32::MAX);
    let mut rows = Vec::new();
    for (_, spec) in load_specs(&args.spec)? {
        rows.extend(zeta_rows(ctx, &spec, cap)?);
    }
    Ok(rows)
}

fn cmd_projective(ctx: &mut Ctx, args: &ProjectiveArgs) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    for (_, spec) in load_specs(&args.spec)? {
        for m in 1..=args.max_ext {
            let count = ctx.count(&spec, m, false)?.count;
            match theorems::check_projective_deviation(
                spec.fingerprint(),
                spec.ambient(),
                spec.degrees(),
                spec.p(),
                m,
                &count,
            ) {
                Ok(report) => rows.push(deviation_row(&report)),
                Err(err) => soft_fail(&mut rows, "projective-deviation", spec.fingerprint(), err)?,
            }
        }
    }
    Ok(rows)
}

fn cmd_affine(ctx: &mut Ctx, args: &AffineArgs) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    for (_, spec) in load_specs(&args.spec)? {
        let fp = spec.fingerprint().to_string();
        let section = match poly::hyperplane_section(&spec, args.hyperplane) {
            Ok(section) => section,
            Err(err) => {
                soft_fail(&mut rows, "affine-deviation", &fp, err)?;
                continue;
            }
        };
        let full = ctx.count(&spec, args.ext, false)?.count;
        let section_count = ctx.count(&section, args.ext, false)?.count;
        let affine = &full - &section_count;
        match theorems::check_affine_deviation(
            &fp,
            spec.ambient(),
            spec.degrees(),
            spec.p(),
            args.ext,
            &affine,
            args.tuning,
        ) {
            Ok(report) => rows.push(
                deviation_row(&report)
                    .input("hyperplane", args.hyperplane)
                    .input("affine", &affine)
                    .input("section", &section_count),
            ),
            Err(err) => soft_fail(&mut rows, "affine-deviation", &fp, err)?,
        }
    }
    Ok(rows)
}

fn cmd_betti(args: &BettiArgs) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    for (_, spec) in load_specs(&args.spec)? {
        rows.extend(betti_rows(&spec)?);
    }
    Ok(rows)
}

fn betti_rows(spec: &CiSpec) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    match theorems::betti_bound_reports(spec.ambient(), spec.degrees()) {
        Ok(reports) => {
            for report in reports {
                rows.push(
                    CheckRow::new(&report.name, spec.fingerprint())
                        .sides(&report.lhs, &report.rhs)
                        .passed(report.pass)
                        .input("ambient", spec.ambient())
                        .input("degrees", join(spec.degrees(), ",")),
                );
            }
        }
        Err(err) => soft_fail(&mut rows, "betti-sum-bound", spec.fingerprint(), err)?,
    }
    Ok(rows)
}

fn cmd_genus(ctx: &mut Ctx, args: &ZetaArgs) -> Result<Vec<CheckRow>> {
    let cap = args.max_ext.unwrap_or(u32::MAX);
    let mut rows = Vec::new();
    for (_, spec) in load_specs(&args.spec)? {
        let fp = spec.fingerprint().to_string();
        if spec.n() != 1 {
            rows.push(
                CheckRow::new("genus-consistency", &fp)
                    .passed(false)
                    .note(format!("dimension {}: the genus chain applies to curves", spec.n())),
            );
            continue;
        }
        let (_, poly) = match ctx.reconstruct(&spec, cap) {
            Ok(pair) => pair,
            Err(err) => {
                soft_fail(&mut rows, "genus-consistency", &fp, err)?;
                continue;
            }
        };
        match theorems::check_genus_consistency(&poly, spec.ambient(), spec.degrees()) {
            Ok(report) => rows.push(
                CheckRow::new("genus-consistency", &fp)
                    .sides(report.poly_degree, BigInt::from(2) * &report.genus)
                    .passed(report.pass)
                    .input("genus", &report.genus)
                    .input("q", spec.p()),
            ),
            Err(err) => soft_fail(&mut rows, "genus-consistency", &fp, err)?,
        }
    }
    Ok(rows)
}

fn cmd_genus2(args: &Genus2Args) -> Result<Vec<CheckRow>> {
    let survey = theorems::genus_survey(args.max_ambient, args.max_degree);
    let offenders = survey.iter().filter(|(_, _, g)| *g == BigInt::from(2)).count();
    let genera: std::collections::BTreeSet<&BigInt> = survey.iter().map(|(_, _, g)| g).collect();
    Ok(vec![CheckRow::new("genus-two-absent", "")
        .sides(offenders, 0)
        .passed(offenders == 0)
        .input("max-ambient", args.max_ambient)
        .input("max-degree", args.max_degree)
        .input("tuples", survey.len())
        .input("distinct-genera", genera.len())])
}

fn cmd_fermat(ctx: &mut Ctx, args: &FermatArgs) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    for &q in &args.q {
        match theorems::check_maximal_curve(q, &ctx.options) {
            Ok(report) => rows.push(
                CheckRow::new("maximal-curve", "")
                    .sides(&report.observed, &report.expected)
                    .passed(report.pass)
                    .input("q", report.q)
                    .input("p", report.p)
                    .input("m", report.m)
                    .input("degree", report.degree)
                    .input("genus", &report.genus)
                    .input("deviation", &report.deviation)
                    .input("bound", &report.bound)
                    .input("meets-bound-exactly", report.meets_bound_exactly)
                    .note("the deviation from 1 + q^2 must equal 2g sqrt(Q) exactly"),
            ),
            Err(err) => soft_fail(&mut rows, "maximal-curve", "", err)?,
        }
    }
    Ok(rows)
}

fn cmd_dynamics(args: &DynamicsArgs) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();

    // Model Lefschetz numbers against the independently computed ambient
    // point count, plus the telescoping difference between dimensions.
    let mut cases = 0u64;
    let mut mismatches = 0u64;
    for n in 0..=args.max_n {
        for q in 1..=args.max_q {
            cases += 1;
            let lambda = dynamics::frobenius_model_lambda(n, q);
            if lambda != counter::count_pn(n, q) {
                mismatches += 1;
            }
            if n > 0 {
                let prev = dynamics::frobenius_model_lambda(n - 1, q);
                if &lambda - &prev != BigUint::from(q).pow(n as u32) {
                    mismatches += 1;
                }
            }
        }
    }
    rows.push(
        CheckRow::new("lefschetz-model", "")
            .sides(mismatches, 0)
            .passed(mismatches == 0)
            .input("max-n", args.max_n)
            .input("max-q", args.max_q)
            .input("cases", cases)
            .note("model number equals the ambient count and telescopes by q^n"),
    );

    // Identity maps on closed orientable surfaces: the Lefschetz number is
    // the Euler characteristic 2 - 2g.
    let mut id_mismatches = 0u64;
    for g in 0..=args.max_genus {
        if dynamics::identity_surface_lambda(g) != BigInt::from(2) - BigInt::from(2 * g) {
            id_mismatches += 1;
        }
    }
    rows.push(
        CheckRow::new("identity-lefschetz", "")
            .sides(id_mismatches, 0)
            .passed(id_mismatches == 0)
            .input("max-genus", args.max_genus),
    );

    // The genus-2 identity map as the boundary illustration: at q = 1 the
    // deviation ratio is 2g = 4, inside the bound but far from zero.
    match dynamics::check_lefschetz_raw("identity-on-genus-2-surface", 1, 4, 1, &BigInt::from(-2)) {
        Ok(report) => rows.push(
            CheckRow::new("identity-lefschetz-illustration", "")
                .sides(&report.deviation * &report.deviation, {
                    BigUint::from(report.constant) * BigUint::from(report.constant)
                })
                .passed(report.pass)
                .input("observed", &report.observed)
                .input("model", &report.model)
                .input("constant", report.constant)
                .input("ratio", report.ratio)
                .notes_from(&report.notes),
        ),
        Err(err) => soft_fail(&mut rows, "identity-lefschetz-illustration", "", err)?,
    }

    // Diagonal rotations: closed-form minimal period against the linear
    // scan, and the k^n / n divergence floor.
    let mut period_cases = 0u64;
    let mut period_mismatches = 0u64;
    for k in 2..=args.max_k {
        for n in 1..=args.max_dim {
            period_cases += 1;
            let closed = dynamics::minimal_period(k, n)?;
            let order = k.pow(n);
            let mut scan = None;
            for m in 1..=order {
                if dynamics::has_periodic_point(k, n, m)? {
                    scan = Some(m);
                    break;
                }
            }
            if scan != Some(closed) || closed * u64::from(n) < order {
                period_mismatches += 1;
            }
        }
    }
    rows.push(
        CheckRow::new("diagonal-period", "")
            .sides(period_mismatches, 0)
            .passed(period_mismatches == 0)
            .input("max-k", args.max_k)
            .input("max-dim", args.max_dim)
            .input("cases", period_cases)
            .note("closed form equals the scan and clears the k^n/n floor"),
    );

    Ok(rows)
}

fn cmd_gen(ctx: &mut Ctx, args: &GenArgs) -> Result<Vec<CheckRow>> {
    std::fs::create_dir_all(&args.out_dir)?;
    let mut rows = Vec::new();
    for i in 0..args.count as u64 {
        let seed = ctx.seed.wrapping_add(i);
        let spec = match poly::random_ci(
            args.p,
            args.ambient,
            &args.degrees,
            seed,
            args.probe_depth,
            &ctx.options,
        ) {
            Ok(spec) => spec,
            Err(err) => {
                soft_fail(&mut rows, "gen", "", err)?;
                continue;
            }
        };
        let file = args.out_dir.join(format!("ci-{}.json", &spec.fingerprint()[..16]));
        std::fs::write(&file, poly::serialize(&spec))?;
        rows.push(
            CheckRow::new("gen", spec.fingerprint())
                .input("p", args.p)
                .input("ambient", args.ambient)
                .input("degrees", join(&args.degrees, ","))
                .input("seed", seed)
                .input("probe-depth", args.probe_depth)
                .note(format!("wrote {}", file.display())),
        );
    }
    Ok(rows)
}

fn cmd_report(ctx: &mut Ctx, args: &ReportArgs) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    let mut by_dimension: BTreeMap<usize, Vec<theorems::DeviationReport>> = BTreeMap::new();

    for (_, spec) in load_specs(&args.spec)? {
        let fp = spec.fingerprint().to_string();
        let b = usize::try_from(zeta::middle_betti(spec.ambient(), spec.degrees())?)
            .expect("middle rank fits usize");
        let cap = args.max_ext.unwrap_or((b.div_ceil(2) as u32) + 1).max(1);

        for m in 1..=cap {
            let rec = ctx.count(&spec, m, true)?;
            rows.push(count_row(&rec, &spec, true));
            match theorems::check_projective_deviation(
                &fp,
                spec.ambient(),
                spec.degrees(),
                spec.p(),
                m,
                &rec.count,
            ) {
                Ok(report) => {
                    rows.push(deviation_row(&report));
                    by_dimension.entry(report.n).or_default().push(report);
                }
                Err(err) => soft_fail(&mut rows, "projective-deviation", &fp, err)?,
            }
        }

        rows.extend(zeta_rows(ctx, &spec, cap)?);
        rows.extend(betti_rows(&spec)?);

        match poly::hyperplane_section(&spec, args.hyperplane) {
            Ok(section) => {
                let full = ctx.count(&spec, 1, false)?.count;
                let section_count = ctx.count(&section, 1, false)?.count;
                let affine = &full - &section_count;
                match theorems::check_affine_deviation(
                    &fp,
                    spec.ambient(),
                    spec.degrees(),
                    spec.p(),
                    1,
                    &affine,
                    args.tuning,
                ) {
                    Ok(report) => rows.push(
                        deviation_row(&report)
                            .input("hyperplane", args.hyperplane)
                            .input("affine", &affine)
                            .input("section", &section_count),
                    ),
                    Err(err) => soft_fail(&mut rows, "affine-deviation", &fp, err)?,
                }
            }
            Err(err) => soft_fail(&mut rows, "affine-deviation", &fp, err)?,
        }
    }

    // Observed constants per dimension, for plotting against the proved
    // ones: max deviation ratio over the corpus and the remaining slack.
    for (n, reports) in &by_dimension {
        if let Some(summary) = theorems::empirical_constant(reports) {
            rows.push(
                CheckRow::new("empirical-constant", "")
                    .passed(summary.slack > 0.0)
                    .input("n", n)
                    .input("samples", summary.samples)
                    .input("max-ratio", summary.max_ratio)
                    .input("min-constant", summary.min_constant)
                    .input("slack", summary.slack),
            );
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn emit<W: Write>(out: &mut W, rows: &[CheckRow], format: Format) {
    match format {
        Format::Text => {
            for row in rows {
                let mut line =
                    format!("[{}] {}", if row.pass { "PASS" } else { "FAIL" }, row.name);
                if !row.fingerprint.is_empty() {
                    let short = &row.fingerprint[..row.fingerprint.len().min(12)];
                    line.push_str(&format!(" fp={short}"));
                }
                if !row.lhs.is_empty() || !row.rhs.is_empty() {
                    line.push_str(&format!(" lhs={} rhs={}", row.lhs, row.rhs));
                }
                for (key, value) in &row.inputs {
                    line.push_str(&format!(" {key}={value}"));
                }
                let _ = writeln!(out, "{line}");
                for note in &row.notes {
                    let _ = writeln!(out, "    note: {note}");
                }
            }
            let passed = rows.iter().filter(|r| r.pass).count();
            let _ = writeln!(out, "{passed}/{} checks passed", rows.len());
        }
        Format::Json => {
            let doc = ReportDoc { checks: rows };
            let _ = writeln!(
                out,
                "{}",
                serde_json::to_string_pretty(&doc).expect("report serialisation cannot fail")
            );
        }
        Format::Csv => {
            let _ = writeln!(out, "name,fingerprint,lhs,rhs,pass,inputs,notes");
            for row in rows {
                let inputs =
                    join(row.inputs.iter().map(|(k, v)| format!("{k}={v}")), "; ");
                let notes = row.notes.join("; ");
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    csv_field(&row.name),
                    csv_field(&row.fingerprint),
                    csv_field(&row.lhs),
                    csv_field(&row.rhs),
                    row.pass,
                    csv_field(&inputs),
                    csv_field(&notes)
                );
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

/// Parse `argv`, run the requested subcommand, render its report to `out`
/// and return the process exit code.
pub fn run<I, T, W>(argv: I, out: &mut W) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    W: Write,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version renderings are successful outcomes.
            let code = if err.use_stderr() { EXIT_PARSE } else { EXIT_PASS };
            let _ = write!(out, "{}", err.render());
            return code;
        }
    };
    if cli.threads == 0 || cli.budget == 0 {
        let _ = writeln!(out, "error: --threads and --budget must be at least 1");
        return EXIT_PARSE;
    }
    if !(cli.tolerance > 0.0 && cli.tolerance.is_finite()) {
        let _ = writeln!(out, "error: --tolerance must be a positive finite number");
        return EXIT_PARSE;
    }

    let table = match open_cache(cli.cache.as_deref()) {
        Ok(table) => table,
        Err(err) => {
            let _ = writeln!(out, "error: {err}");
            return exit_code_for(&err);
        }
    };
    let mut ctx = Ctx {
        options: CountOptions {
            workers: cli.threads,
            budget: cli.budget,
            check_smoothness: false,
            field_seed: cli.seed,
            audit: cli.audit,
        },
        table,
        tolerance: cli.tolerance,
        seed: cli.seed,
    };

    let rows = match &cli.command {
        Command::Count(args) => cmd_count(&mut ctx, args),
        Command::Zeta(args) => cmd_zeta(&mut ctx, args),
        Command::Verify { check } => match check {
            VerifyCommand::ProjectiveBound(args) => cmd_projective(&mut ctx, args),
            VerifyCommand::AffineBound(args) => cmd_affine(&mut ctx, args),
            VerifyCommand::BettiBounds(args) => cmd_betti(args),
            VerifyCommand::Genus(args) => cmd_genus(&mut ctx, args),
            VerifyCommand::Genus2(args) => cmd_genus2(args),
            VerifyCommand::Fermat(args) => cmd_fermat(&mut ctx, args),
        },
        Command::Dynamics(args) => cmd_dynamics(args),
        Command::Gen(args) => cmd_gen(&mut ctx, args),
        Command::Report(args) => cmd_report(&mut ctx, args),
    };
    let rows = match rows {
        Ok(rows) => rows,
        Err(err) => {
            let _ = writeln!(out, "error: {err}");
            return exit_code_for(&err);
        }
    };
    emit(out, &rows, cli.format);
    if rows.iter().all(|row| row.pass) {
        EXIT_PASS
    } else {
        EXIT_CHECK_FAILED
    }
}
