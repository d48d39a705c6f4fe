//! Exhaustive projective point counting over extension fields.
//!
//! Points of P^N(F_{q}) are enumerated through canonical representatives:
//! the first nonzero coordinate is scaled to 1.  Representatives split into
//! charts by the position c of that leading 1; chart c contributes q^{N-c}
//! representatives, and the chart totals sum to |P^N(F_q)|.  The full range of
//! representatives is a single contiguous index space, so it can be split
//! into disjoint contiguous ranges processed by independent workers whose
//! subtotals are combined by exact addition — the result is identical to a
//! serial scan by construction, for any worker count.
//!
//! The inner loop works in a fixed-size field: elements are their stable
//! enumeration indices, multiplication goes through discrete-log/antilog
//! tables built once per field from a generator of the unit group, and
//! addition works digit-wise on base-p digit vectors (XOR in characteristic
//! 2).  Term evaluation sums per-variable logs, amortising exponentiation
//! across the whole batch of points.
//!
//! Counts are returned as exact unbounded integers and can be cached in an
//! append-only CSV table keyed by (spec fingerprint, extension degree); a
//! `put` that contradicts a stored count is a hard integrity error.

use crate::gf;
use crate::poly::{self, CiSpec, HomogeneousPoly};
use crate::{Error, Result};
use num_bigint::BigUint;
use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

/// Default cap on how many representatives a single count may visit.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 1_000_000_000;

/// Cap on the cardinality of a counting field: the kernel's log/antilog and
/// digit tables are linear in q, and any field larger than this is far past
/// what the representative budget admits anyway.
pub const KERNEL_FIELD_CAP: u64 = 1 << 22;

/// Sentinel in the log table marking the zero element.
const LOG_ZERO: u32 = u32::MAX;

/// Knobs for a single counting run.
#[derive(Debug, Clone)]
pub struct CountOptions {
    /// Number of parallel workers; 1 means a serial scan.  The count and the
    /// anomaly list are independent of this value.
    pub workers: usize,
    /// Maximum representatives the scan may visit.
    pub budget: u64,
    /// Record points whose Jacobian rank falls below the codimension.
    pub check_smoothness: bool,
    /// Seed for the counting field's modulus search.  Counts do not depend
    /// on the modulus, so this only needs to be fixed, not chosen.
    pub field_seed: u64,
    /// On a cache hit, recount anyway and fail if the stored value differs.
    pub audit: bool,
}

impl Default for CountOptions {
    fn default() -> Self {
        CountOptions {
            workers: 1,
            budget: DEFAULT_ENUMERATION_BUDGET,
            check_smoothness: false,
            field_seed: 0,
            audit: false,
        }
    }
}

/// Result of one projective count.
#[derive(Debug, Clone)]
pub struct CountRecord {
    pub fingerprint: String,
    /// Extension degree m: the count is over F_{p^m}.
    pub extension_degree: u32,
    /// |X(F_{p^m})| as an exact integer.
    pub count: BigUint,
    /// Wall-clock time of the scan (zero for cache hits).
    pub wall: Duration,
    /// Points (as coordinate element indices) with Jacobian rank < r; only
    /// populated when smoothness checking was requested, in scan order.
    pub anomalies: Vec<Vec<u64>>,
    pub from_cache: bool,
}

/// 1 + q + ... + q^n = |P^n(F_q)|.
pub fn count_pn(n: usize, q: u64) -> BigUint {
    let q = BigUint::from(q);
    let mut acc = BigUint::from(1u32);
    let mut pow = BigUint::from(1u32);
    for _ in 0..n {
        pow *= &q;
        acc += &pow;
    }
    acc
}

// ---------------------------------------------------------------------------
// Kernel field: index arithmetic with log/antilog and digit tables
// ---------------------------------------------------------------------------

struct KernelField {
    p: u64,
    m: usize,
    q: u64,
    qm1: u64,
    /// antilog[k] = index of g^k, length q - 1.
    antilog: Vec<u32>,
    /// log[index] for nonzero indices; LOG_ZERO at index 0.
    log: Vec<u32>,
    /// Base-p digits of every index, flattened (len q * m); empty when
    /// addition has a cheaper route (p = 2 uses XOR, m = 1 uses residues).
    digits: Vec<u16>,
    p_pows: Vec<u64>,
    minus_one: u64,
}

impl KernelField {
    fn build(field: &gf::ExtensionField) -> Result<KernelField> {
        let p = field.characteristic();
        let m = field.degree();
        let q = field.order();
        let qm1 = q - 1;
        // Find a generator of the unit group: order q-1 exactly, verified
        // against the prime factorisation of q-1.
        let prime_factors = distinct_prime_factors(qm1);
        let mut generator = None;
        for idx in 1..q {
            let g = field.element_from_index(idx)?;
            let ok = prime_factors
                .iter()
                .all(|&ell| field.pow(&g, (qm1 / ell) as u128).map(|x| x != field.one()).unwrap_or(false));
            if ok {
                generator = Some(g);
                break;
            }
        }
        let g = generator.expect("every finite field has a primitive element");
        let mut antilog = vec![0u32; qm1.max(1) as usize];
        let mut log = vec![LOG_ZERO; q as usize];
        let mut acc = field.one();
        for k in 0..qm1 as usize {
            let idx = field.index_of(&acc)?;
            antilog[k] = idx as u32;
            log[idx as usize] = k as u32;
            acc = field.mul(&acc, &g)?;
        }
        debug_assert_eq!(acc, field.one(), "generator order must divide q - 1");
        let digits = if p > 2 && m > 1 {
            let mut d = vec![0u16; (q as usize) * m];
            for idx in 0..q {
                let mut k = idx;
                for j in 0..m {
                    d[idx as usize * m + j] = (k % p) as u16;
                    k /= p;
                }
            }
            d
        } else {
            Vec::new()
        };
        let p_pows = (0..m).map(|j| p.pow(j as u32)).collect();
        let minus_one = field.index_of(&field.embed_base(p - 1))?;
        Ok(KernelField { p, m, q, qm1, antilog, log, digits, p_pows, minus_one })
    }

    #[inline]
    fn add(&self, a: u64, b: u64) -> u64 {
        if self.p == 2 {
            a ^ b
        } else if self.m == 1 {
            let s = a + b;
            if s >= self.p { s - self.p } else { s }
        } else {
            let da = &self.digits[a as usize * self.m..a as usize * self.m + self.m];
            let db = &self.digits[b as usize * self.m..b as usize * self.m + self.m];
            let mut out = 0u64;
            for j in 0..self.m {
                let mut s = da[j] as u64 + db[j] as u64;
                if s >= self.p {
                    s -= self.p;
                }
                out += s * self.p_pows[j];
            }
            out
        }
    }

    #[inline]
    fn mul(&self, a: u64, b: u64) -> u64 {
        if a == 0 || b == 0 {
            return 0;
        }
        let s = self.log[a as usize] as u64 + self.log[b as usize] as u64;
        let s = if s >= self.qm1 { s - self.qm1 } else { s };
        self.antilog[s as usize] as u64
    }

    #[inline]
    fn neg(&self, a: u64) -> u64 {
        self.mul(a, self.minus_one)
    }

    #[inline]
    fn sub(&self, a: u64, b: u64) -> u64 {
        self.add(a, self.neg(b))
    }

    #[inline]
    fn inv(&self, a: u64) -> u64 {
        debug_assert!(a != 0);
        let l = self.log[a as usize] as u64;
        self.antilog[((self.qm1 - l) % self.qm1) as usize] as u64
    }
}

fn distinct_prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

// ---------------------------------------------------------------------------
// Prepared forms: terms with the coefficient's log and sparse exponents
// ---------------------------------------------------------------------------

struct PreparedTerm {
    log_coeff: u64,
    /// (variable, exponent) pairs with exponent > 0.
    vars: Vec<(u32, u32)>,
}

struct PreparedPoly {
    terms: Vec<PreparedTerm>,
}

fn prepare_poly(f: &HomogeneousPoly, kf: &KernelField) -> PreparedPoly {
    let terms = f
        .terms()
        .iter()
        .map(|t| {
            // The prime-subfield embedding of residue c has index c.
            let log_coeff = kf.log[t.coeff as usize] as u64;
            let vars = t
                .exps
                .iter()
                .enumerate()
                .filter(|&(_, &e)| e > 0)
                .map(|(v, &e)| (v as u32, e))
                .collect();
            PreparedTerm { log_coeff, vars }
        })
        .collect();
    PreparedPoly { terms }
}

/// Value of a prepared form at a point given by coordinate indices, with
/// the coordinate logs pre-fetched into `logs` (LOG_ZERO marks 0).
#[inline]
fn eval_prepared(kf: &KernelField, f: &PreparedPoly, logs: &[u32]) -> u64 {
    let mut acc = 0u64;
    'term: for t in &f.terms {
        let mut s = t.log_coeff;
        for &(v, e) in &t.vars {
            let l = logs[v as usize];
            if l == LOG_ZERO {
                continue 'term;
            }
            s += l as u64 * e as u64;
        }
        acc = kf.add(acc, kf.antilog[(s % kf.qm1) as usize] as u64);
    }
    acc
}

/// Jacobian rank at a point, all in index arithmetic.  `jac` is r rows of
/// N+1 prepared entries.
fn jacobian_rank_prepared(kf: &KernelField, jac: &[Vec<PreparedPoly>], logs: &[u32]) -> usize {
    let rows = jac.len();
    let cols = jac.first().map_or(0, |r| r.len());
    let mut mat: Vec<u64> = Vec::with_capacity(rows * cols);
    for row in jac {
        for entry in row {
            mat.push(eval_prepared(kf, entry, logs));
        }
    }
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let pivot = match (rank..rows).find(|&r| mat[r * cols + col] != 0) {
            Some(r) => r,
            None => continue,
        };
        if pivot != rank {
            for c in 0..cols {
                mat.swap(rank * cols + c, pivot * cols + c);
            }
        }
        let inv = kf.inv(mat[rank * cols + col]);
        for r in rank + 1..rows {
            let lead = mat[r * cols + col];
            if lead == 0 {
                continue;
            }
            let factor = kf.mul(lead, inv);
            for c in col..cols {
                let scaled = kf.mul(factor, mat[rank * cols + c]);
                mat[r * cols + c] = kf.sub(mat[r * cols + c], scaled);
            }
        }
        rank += 1;
    }
    rank
}

// ---------------------------------------------------------------------------
// The scan
// ---------------------------------------------------------------------------

struct ScanOutput {
    count: u64,
    anomalies: Vec<Vec<u64>>,
}

/// Scan representatives with global indices in [start, end).
///
/// Chart c (the position of the leading 1) covers a contiguous block of
/// q^{N-c} indices; within a chart the free coordinates form an odometer
/// with the last coordinate fastest.
fn scan_range(
    kf: &KernelField,
    polys: &[PreparedPoly],
    jac: Option<&[Vec<PreparedPoly>]>,
    codim: usize,
    ambient: usize,
    start: u64,
    end: u64,
) -> ScanOutput {
    let q = kf.q;
    let nvars = ambient + 1;
    let mut coords = vec![0u64; nvars];
    let mut logs = vec![LOG_ZERO; nvars];
    let mut count = 0u64;
    let mut anomalies = Vec::new();
    let mut chart_start = 0u64;
    for chart in 0..nvars {
        let free = ambient - chart;
        let chart_size = q.pow(free as u32);
        let lo = start.max(chart_start);
        let hi = end.min(chart_start + chart_size);
        if lo < hi {
            // Decode the first local index into the odometer.
            for c in coords.iter_mut() {
                *c = 0;
            }
            coords[chart] = 1;
            let mut local = lo - chart_start;
            for offset in 0..free {
                coords[ambient - offset] = local % q;
                local /= q;
            }
            for _ in lo..hi {
                for (l, &c) in logs.iter_mut().zip(coords.iter()) {
                    *l = kf.log[c as usize];
                }
                let mut on_variety = true;
                for f in polys {
                    if eval_prepared(kf, f, &logs) != 0 {
                        on_variety = false;
                        break;
                    }
                }
                if on_variety {
                    count += 1;
                    if let Some(jac) = jac {
                        if jacobian_rank_prepared(kf, jac, &logs) < codim {
                            anomalies.push(coords.clone());
                        }
                    }
                }
                // Odometer step: last coordinate fastest.
                for pos in (chart + 1..nvars).rev() {
                    coords[pos] += 1;
                    if coords[pos] < q {
                        break;
                    }
                    coords[pos] = 0;
                }
            }
        }
        chart_start += chart_size;
        if chart_start >= end {
            break;
        }
    }
    ScanOutput { count, anomalies }
}

/// Count |X(F_{p^m})| by exhaustive enumeration of canonical projective
/// representatives.
///
/// With `check_smoothness` set, every point found on X also has its Jacobian
/// rank computed; points of rank < r are reported as anomalies.  The scan is
/// split across `options.workers` contiguous index ranges; results are
/// bit-identical for every worker count.
pub fn count_projective(spec: &CiSpec, m: u32, options: &CountOptions) -> Result<CountRecord> {
    let t0 = Instant::now();
    if m == 0 {
        return Err(Error::InvalidParameter("extension degree must be at least 1".into()));
    }
    let p = spec.p();
    let ambient = spec.ambient();
    let q128 = (p as u128)
        .checked_pow(m)
        .ok_or(Error::FieldTooLarge { p, m: m as usize, limit: KERNEL_FIELD_CAP })?;
    // Total representatives: sum over charts of q^{N-c}.
    let mut total: u128 = 0;
    let mut pow: u128 = 1;
    for _ in 0..=ambient {
        total = total
            .checked_add(pow)
            .ok_or(Error::EnumerationBudget { required: u128::MAX, budget: options.budget })?;
        pow = pow
            .checked_mul(q128)
            .ok_or(Error::EnumerationBudget { required: u128::MAX, budget: options.budget })?;
    }
    if total > options.budget as u128 {
        return Err(Error::EnumerationBudget { required: total, budget: options.budget });
    }
    let field = gf::make_field_with_limit(p, m as usize, options.field_seed, KERNEL_FIELD_CAP)?;
    let kf = KernelField::build(&field)?;
    let polys: Vec<PreparedPoly> = spec.polys().iter().map(|f| prepare_poly(f, &kf)).collect();
    let jac: Option<Vec<Vec<PreparedPoly>>> = options.check_smoothness.then(|| {
        spec.jacobian()
            .iter()
            .map(|row| row.iter().map(|f| prepare_poly(f, &kf)).collect())
            .collect()
    });
    let total = total as u64;
    let workers = options.workers.max(1);
    let outputs: Vec<ScanOutput> = if workers == 1 || total < 2 {
        vec![scan_range(&kf, &polys, jac.as_deref(), spec.r(), ambient, 0, total)]
    } else {
        let bounds: Vec<u64> = (0..=workers)
            .map(|w| ((total as u128 * w as u128) / workers as u128) as u64)
            .collect();
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let kf = &kf;
                    let polys = &polys;
                    let jac = jac.as_deref();
                    let (lo, hi) = (bounds[w], bounds[w + 1]);
                    scope.spawn(move || scan_range(kf, polys, jac, spec.r(), ambient, lo, hi))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("scan worker panicked")).collect()
        })
    };
    let mut count = BigUint::from(0u32);
    let mut anomalies = Vec::new();
    for out in outputs {
        count += BigUint::from(out.count);
        anomalies.extend(out.anomalies);
    }
    Ok(CountRecord {
        fingerprint: spec.fingerprint().to_string(),
        extension_degree: m,
        count,
        wall: t0.elapsed(),
        anomalies,
        from_cache: false,
    })
}

/// Run smoothness-checking counts for every extension degree up to `depth`.
///
/// Returns whether all scans were anomaly-free, along with the records
/// (whose counts are valid point counts and can be reused).  This is
/// evidence of smoothness at rational points only, not a proof of
/// smoothness over the closure.
pub fn probe_smoothness(spec: &CiSpec, depth: u32, options: &CountOptions) -> Result<(bool, Vec<CountRecord>)> {
    let mut opts = options.clone();
    opts.check_smoothness = true;
    let mut clean = true;
    let mut records = Vec::with_capacity(depth as usize);
    for m in 1..=depth {
        let rec = count_projective(spec, m, &opts)?;
        clean &= rec.anomalies.is_empty();
        records.push(rec);
    }
    Ok((clean, records))
}

/// Counts of X and of its hyperplane section x_i = 0, with the difference:
/// the points of the affine complement X \ {x_i = 0} over F_{p^m}.
#[derive(Debug, Clone)]
pub struct AffineComplementCount {
    pub affine: BigUint,
    pub full: CountRecord,
    pub section: CountRecord,
    pub section_spec: CiSpec,
}

/// Count |X(F_{p^m})| minus its hyperplane-section points; the section's
/// spec is built by substituting x_i = 0 and lives in P^{N-1}.
pub fn count_affine_complement(
    spec: &CiSpec,
    hyperplane: usize,
    m: u32,
    options: &CountOptions,
) -> Result<AffineComplementCount> {
    let section_spec = poly::hyperplane_section(spec, hyperplane)?;
    let full = count_projective(spec, m, options)?;
    let section = count_projective(&section_spec, m, options)?;
    debug_assert!(section.count <= full.count, "section points are a subset");
    let affine = &full.count - &section.count;
    Ok(AffineComplementCount { affine, full, section, section_spec })
}

// ---------------------------------------------------------------------------
// Count cache
// ---------------------------------------------------------------------------

const CACHE_HEADER: &str = "fingerprint,m,count";

/// Append-only cache of counts keyed by (fingerprint, extension degree).
///
/// The backing store is a CSV file with header `fingerprint,m,count`; rows
/// are only ever appended.  A `put` whose value contradicts a stored row is
/// an integrity error, as is a malformed or duplicated-but-different row on
/// load.
#[derive(Debug)]
pub struct CountTable {
    path: Option<PathBuf>,
    map: BTreeMap<(String, u32), BigUint>,
}

impl CountTable {
    /// A cache with no backing file.
    pub fn in_memory() -> CountTable {
        CountTable { path: None, map: BTreeMap::new() }
    }

    /// Open (creating if needed) a file-backed cache.
    pub fn open(path: impl AsRef<Path>) -> Result<CountTable> {
        let path = path.as_ref().to_path_buf();
        let mut table = CountTable { path: Some(path.clone()), map: BTreeMap::new() };
        if !path.exists() {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            let mut f = std::fs::File::create(&path)?;
            writeln!(f, "{CACHE_HEADER}")?;
            return Ok(table);
        }
        let reader = BufReader::new(std::fs::File::open(&path)?);
        for (line_no, line) in reader.lines().enumerate() {
            let line = line?;
            if line_no == 0 {
                if line.trim() != CACHE_HEADER {
                    return Err(Error::CacheFormat { line_no, line });
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            let parsed = (|| -> Option<(String, u32, BigUint)> {
                let [fp, m, count] = parts.as_slice() else { return None };
                let fp_ok = fp.len() == 64
                    && fp.chars().all(|c| c.is_ascii_hexdigit() && !c.is_ascii_uppercase());
                if !fp_ok {
                    return None;
                }
                Some((fp.to_string(), m.parse().ok()?, count.parse().ok()?))
            })();
            let Some((fp, m, count)) = parsed else {
                return Err(Error::CacheFormat { line_no, line });
            };
            match table.map.get(&(fp.clone(), m)) {
                Some(existing) if *existing != count => {
                    return Err(Error::CacheIntegrity {
                        fingerprint: fp,
                        m,
                        stored: existing.to_string(),
                        computed: count.to_string(),
                    });
                }
                _ => {
                    table.map.insert((fp, m), count);
                }
            }
        }
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get(&self, fingerprint: &str, m: u32) -> Option<&BigUint> {
        self.map.get(&(fingerprint.to_string(), m))
    }

    /// Record a count.  Idempotent for identical values; a conflicting value
    /// for an existing key is an integrity error and nothing is written.
    pub fn put(&mut self, fingerprint: &str, m: u32, count: &BigUint) -> Result<()> {
        if let Some(existing) = self.map.get(&(fingerprint.to_string(), m)) {
            if existing != count {
                return Err(Error::CacheIntegrity {
                    fingerprint: fingerprint.to_string(),
                    m,
                    stored: existing.to_string(),
                    computed: count.to_string(),
                });
            }
            return Ok(());
        }
        if let Some(path) = &self.path {
            let mut f = std::fs::OpenOptions::new().append(true).open(path)?;
            writeln!(f, "{fingerprint},{m},{count}")?;
            f.flush()?;
        }
        self.map.insert((fingerprint.to_string(), m), count.clone());
        Ok(())
    }
}

/// Cache-aware counting: consult the table first, count on a miss and store
/// the result.  In audit mode a hit is recounted and compared against the
/// stored value, failing with an integrity error on mismatch.
pub fn count_with_cache(
    table: &mut CountTable,
    spec: &CiSpec,
    m: u32,
    options: &CountOptions,
) -> Result<CountRecord> {
    if let Some(stored) = table.get(spec.fingerprint(), m) {
        let stored = stored.clone();
        if options.audit {
            let rec = count_projective(spec, m, options)?;
            if rec.count != stored {
                return Err(Error::CacheIntegrity {
                    fingerprint: spec.fingerprint().to_string(),
                    m,
                    stored: stored.to_string(),
                    computed: rec.count.to_string(),
                });
            }
            return Ok(rec);
        }
        return Ok(CountRecord {
            fingerprint: spec.fingerprint().to_string(),
            extension_degree: m,
            count: stored,
            wall: Duration::ZERO,
            anomalies: Vec::new(),
            from_cache: true,
        });
    }
    let rec = count_projective(spec, m, options)?;
    table.put(spec.fingerprint(), m, &rec.count)?;
    Ok(rec)
}
