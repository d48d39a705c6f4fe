//! Sparse homogeneous forms and complete-intersection specs.
//!
//! A [`HomogeneousPoly`] is a list of terms (coefficient, exponent vector)
//! over the prime field F_p, every exponent vector summing to the form's
//! degree.  Terms are kept sorted lexicographically by exponent vector with
//! no zero coefficients and no repeated exponent vectors, so equal forms have
//! equal representations.
//!
//! A [`CiSpec`] bundles r such forms in N+1 variables: the intended zero
//! locus is a complete intersection of dimension n = N - r in P^N.  The spec
//! carries a canonical content fingerprint (used as the cache key for point
//! counts) and records how deeply its smoothness has been probed.  Smoothness
//! is checked at rational points of extension fields via the rank of the
//! Jacobian matrix of formal partial derivatives; a probe is evidence, not a
//! proof, which is why the probed depth is recorded rather than a flag.

use crate::counter::{self, CountOptions};
use crate::gf::{self, ExtensionField, FieldElement};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Attempt cap for the rejection search in [`random_ci`].
const MAX_GENERATION_ATTEMPTS: u32 = 400;

/// One term of a homogeneous form: a nonzero residue mod p times a monomial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    /// Canonical residue in (0, p).
    pub coeff: u64,
    /// Exponents, one per variable; their sum is the form's degree.
    pub exps: Vec<u32>,
}

/// A homogeneous form in `nvars` variables with coefficients in F_p.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomogeneousPoly {
    nvars: usize,
    degree: u32,
    terms: Vec<Term>,
}

impl HomogeneousPoly {
    /// Build a form from raw signed residues, validating arity and
    /// homogeneity, reducing mod p, dropping terms that reduce to zero, and
    /// sorting terms into canonical order.  `poly_index` labels errors.
    fn new_indexed(
        poly_index: usize,
        nvars: usize,
        degree: u32,
        raw_terms: Vec<(i64, Vec<u32>)>,
        p: u64,
    ) -> Result<Self> {
        let mut terms = Vec::with_capacity(raw_terms.len());
        for (c, exps) in raw_terms {
            if exps.len() != nvars {
                return Err(Error::WrongTermArity {
                    poly_index,
                    expected: nvars,
                    found: exps.len(),
                });
            }
            let total: u32 = exps.iter().sum();
            if total != degree {
                return Err(Error::NonHomogeneousTerm {
                    poly_index,
                    expected: degree,
                    found: total,
                });
            }
            let coeff = c.rem_euclid(p as i64) as u64;
            if coeff != 0 {
                terms.push(Term { coeff, exps });
            }
        }
        terms.sort_by(|a, b| a.exps.cmp(&b.exps));
        if terms.windows(2).any(|w| w[0].exps == w[1].exps) {
            return Err(Error::DuplicateExponentVector { poly_index });
        }
        Ok(HomogeneousPoly { nvars, degree, terms })
    }

    /// Public constructor; see [`Self::new_indexed`].
    pub fn new(nvars: usize, degree: u32, raw_terms: Vec<(i64, Vec<u32>)>, p: u64) -> Result<Self> {
        Self::new_indexed(0, nvars, degree, raw_terms, p)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// A form with no terms (every coefficient reduced to zero).
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Formal partial derivative with respect to variable `var`, reduced mod
    /// p.  In characteristic p a term whose exponent is divisible by p
    /// differentiates to zero, so the result may have fewer terms or be the
    /// zero form.
    pub fn derivative(&self, var: usize, p: u64) -> HomogeneousPoly {
        let mut terms = Vec::new();
        for t in &self.terms {
            let e = t.exps[var];
            if e == 0 {
                continue;
            }
            let coeff = t.coeff * (e as u64 % p) % p;
            if coeff == 0 {
                continue;
            }
            let mut exps = t.exps.clone();
            exps[var] -= 1;
            terms.push(Term { coeff, exps });
        }
        terms.sort_by(|a, b| a.exps.cmp(&b.exps));
        HomogeneousPoly {
            nvars: self.nvars,
            degree: self.degree.saturating_sub(1),
            terms,
        }
    }
}

/// Evaluate a form at a point over F_{p^m}, where the form's coefficients
/// are injected through the canonical embedding of the prime subfield.
///
/// Exponentiation is amortised with per-variable power tables: for each
/// variable the powers up to its largest exponent in `f` are computed once
/// and shared by all terms.
pub fn evaluate(
    f: &HomogeneousPoly,
    field: &ExtensionField,
    point: &[FieldElement],
) -> Result<FieldElement> {
    if point.len() != f.nvars {
        return Err(Error::DimensionMismatch {
            what: format!("point has {} coordinates, form has {} variables", point.len(), f.nvars),
        });
    }
    let mut max_e = vec![0u32; f.nvars];
    for t in &f.terms {
        for (v, &e) in t.exps.iter().enumerate() {
            max_e[v] = max_e[v].max(e);
        }
    }
    let mut pows: Vec<Vec<FieldElement>> = Vec::with_capacity(f.nvars);
    for (v, &me) in max_e.iter().enumerate() {
        let mut tower = Vec::with_capacity(me as usize + 1);
        tower.push(field.one());
        for e in 1..=me as usize {
            let next = field.mul(&tower[e - 1], &point[v])?;
            tower.push(next);
        }
        pows.push(tower);
    }
    let mut acc = field.zero();
    for t in &f.terms {
        let mut val = field.embed_base(t.coeff);
        for (v, &e) in t.exps.iter().enumerate() {
            if e > 0 {
                val = field.mul(&val, &pows[v][e as usize])?;
            }
        }
        acc = field.add(&acc, &val)?;
    }
    Ok(acc)
}

/// A complete-intersection spec: r homogeneous forms in N+1 variables over
/// F_p, cutting out an intended n = N - r dimensional subvariety of P^N.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CiSpec {
    p: u64,
    e: u32,
    ambient: usize,
    polys: Vec<HomogeneousPoly>,
    degrees: Vec<u32>,
    fingerprint: String,
    smoothness_verified_up_to: u32,
    /// Formal Jacobian matrix, row i = partials of polys[i], computed once.
    jacobian: Vec<Vec<HomogeneousPoly>>,
}

impl CiSpec {
    /// Build a spec for a positive-dimensional complete intersection:
    /// requires 1 <= r <= N - 1 (so n >= 1) and every form nonzero.
    pub fn new(p: u64, ambient: usize, polys: Vec<HomogeneousPoly>) -> Result<Self> {
        Self::build(p, ambient, polys, false)
    }

    fn build(p: u64, ambient: usize, polys: Vec<HomogeneousPoly>, allow_zero_dim: bool) -> Result<Self> {
        if !gf::is_prime_u64(p) {
            return Err(Error::UnsupportedFieldParameters { p, e: 1 });
        }
        let r = polys.len();
        let max_r = if allow_zero_dim { ambient } else { ambient.saturating_sub(1) };
        if r == 0 || r > max_r {
            return Err(Error::BadCodimension { r, ambient });
        }
        for (i, f) in polys.iter().enumerate() {
            if f.nvars != ambient + 1 {
                return Err(Error::DimensionMismatch {
                    what: format!("polynomial {i} has {} variables, ambient P^{ambient} needs {}", f.nvars, ambient + 1),
                });
            }
            if f.degree == 0 || f.is_zero() {
                return Err(Error::ZeroPolynomial { poly_index: i });
            }
            for &Term { coeff, .. } in &f.terms {
                debug_assert!(coeff > 0 && coeff < p);
            }
        }
        let degrees = polys.iter().map(|f| f.degree).collect();
        let jacobian = polys
            .iter()
            .map(|f| (0..=ambient).map(|v| f.derivative(v, p)).collect())
            .collect();
        let mut spec = CiSpec {
            p,
            e: 1,
            ambient,
            polys,
            degrees,
            fingerprint: String::new(),
            smoothness_verified_up_to: 0,
            jacobian,
        };
        spec.fingerprint = spec.compute_fingerprint();
        Ok(spec)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Base-field extension degree over the prime field; always 1 here.
    pub fn e(&self) -> u32 {
        self.e
    }

    /// N, for the ambient space P^N.
    pub fn ambient(&self) -> usize {
        self.ambient
    }

    /// Codimension r (number of forms).
    pub fn r(&self) -> usize {
        self.polys.len()
    }

    /// Dimension n = N - r of the intended variety (0 only for internal
    /// hyperplane-section specs).
    pub fn n(&self) -> usize {
        self.ambient - self.polys.len()
    }

    pub fn polys(&self) -> &[HomogeneousPoly] {
        &self.polys
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    /// Canonical content hash (lowercase hex), stable across term order in
    /// the input and across runs.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// Largest extension degree m such that every point of X(F_{p^k}) for
    /// k <= m passed the Jacobian rank test; 0 means never probed.
    pub fn smoothness_verified_up_to(&self) -> u32 {
        self.smoothness_verified_up_to
    }

    pub(crate) fn set_smoothness_verified_up_to(&mut self, depth: u32) {
        self.smoothness_verified_up_to = depth;
    }

    /// The formal Jacobian matrix: `jacobian()[i][v]` is the partial of form
    /// i with respect to variable v (possibly the zero form).
    pub fn jacobian(&self) -> &[Vec<HomogeneousPoly>] {
        &self.jacobian
    }

    fn compute_fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(format!("ci-v1;p={};e={};N={};r={}", self.p, self.e, self.ambient, self.polys.len()));
        for f in &self.polys {
            hasher.update(format!(";d={}", f.degree));
            for t in &f.terms {
                let exps: Vec<String> = t.exps.iter().map(|e| e.to_string()).collect();
                hasher.update(format!(";{}:{}", t.coeff, exps.join(",")));
            }
        }
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

// ---------------------------------------------------------------------------
// Spec files
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    p: u64,
    e: u32,
    #[serde(rename = "N")]
    ambient: usize,
    polys: Vec<PolyFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolyFile {
    deg: u32,
    terms: Vec<TermFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermFile {
    /// Coefficient as a residue vector over the prime field; length e (= 1).
    c: Vec<i64>,
    e: Vec<u32>,
}

/// Parse a spec from its JSON form.
///
/// The only supported base fields are prime: `e` must be 1 and `p` prime.
/// Coefficients may be any signed integers; they are reduced mod p.
pub fn parse_spec(json: &str) -> Result<CiSpec> {
    let file: SpecFile = serde_json::from_str(json)?;
    if file.e != 1 || !gf::is_prime_u64(file.p) {
        return Err(Error::UnsupportedFieldParameters { p: file.p, e: file.e });
    }
    let mut polys = Vec::with_capacity(file.polys.len());
    for (i, pf) in file.polys.into_iter().enumerate() {
        let mut raw = Vec::with_capacity(pf.terms.len());
        for t in pf.terms {
            if t.c.len() != 1 {
                return Err(Error::WrongTermArity {
                    poly_index: i,
                    expected: 1,
                    found: t.c.len(),
                });
            }
            raw.push((t.c[0], t.e));
        }
        polys.push(HomogeneousPoly::new_indexed(i, file.ambient + 1, pf.deg, raw, file.p)?);
    }
    CiSpec::new(file.p, file.ambient, polys)
}

/// Serialise a spec back to JSON with terms in canonical order, so that
/// `parse_spec(serialize(s))` reproduces `s` exactly.
pub fn serialize(spec: &CiSpec) -> String {
    let file = SpecFile {
        p: spec.p,
        e: spec.e,
        ambient: spec.ambient,
        polys: spec
            .polys
            .iter()
            .map(|f| PolyFile {
                deg: f.degree,
                terms: f
                    .terms
                    .iter()
                    .map(|t| TermFile {
                        c: vec![t.coeff as i64],
                        e: t.exps.clone(),
                    })
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("spec serialisation cannot fail")
}

/// Substitute x_i = 0: the spec of the hyperplane section, living in P^{N-1}
/// with the same codimension (its dimension drops by one and may reach 0).
///
/// Fails if any form vanishes identically on the hyperplane, since the
/// section would then not be cut out by the stated number of forms.
pub fn hyperplane_section(spec: &CiSpec, hyperplane: usize) -> Result<CiSpec> {
    if hyperplane > spec.ambient {
        return Err(Error::HyperplaneOutOfRange {
            index: hyperplane,
            ambient: spec.ambient,
        });
    }
    let mut polys = Vec::with_capacity(spec.polys.len());
    for (i, f) in spec.polys.iter().enumerate() {
        let raw: Vec<(i64, Vec<u32>)> = f
            .terms
            .iter()
            .filter(|t| t.exps[hyperplane] == 0)
            .map(|t| {
                let mut exps = t.exps.clone();
                exps.remove(hyperplane);
                (t.coeff as i64, exps)
            })
            .collect();
        if raw.is_empty() {
            return Err(Error::DegenerateSection { poly_index: i, hyperplane });
        }
        polys.push(HomogeneousPoly::new_indexed(i, spec.ambient, f.degree, raw, spec.p)?);
    }
    CiSpec::build(spec.p, spec.ambient - 1, polys, true)
}

/// All exponent vectors of total degree `degree` in `nvars` variables, in
/// lexicographic order.
pub fn monomials(nvars: usize, degree: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut current = vec![0u32; nvars];
    fill_monomials(&mut out, &mut current, 0, degree);
    out
}

fn fill_monomials(out: &mut Vec<Vec<u32>>, current: &mut Vec<u32>, pos: usize, remaining: u32) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(current.clone());
        return;
    }
    for e in 0..=remaining {
        current[pos] = e;
        fill_monomials(out, current, pos + 1, remaining - e);
    }
    current[pos] = 0;
}

/// Rank of the Jacobian matrix at a rational point of X over F_{p^m}.
///
/// The point must lie on the variety (all forms vanish there); the rank is
/// computed by exact Gaussian elimination over the field.  For a smooth
/// point the rank equals the codimension r.
pub fn jacobian_rank_at(
    spec: &CiSpec,
    field: &ExtensionField,
    point: &[FieldElement],
) -> Result<usize> {
    if field.characteristic() != spec.p {
        return Err(Error::DimensionMismatch {
            what: format!(
                "field characteristic {} does not match spec characteristic {}",
                field.characteristic(),
                spec.p
            ),
        });
    }
    for f in &spec.polys {
        if !evaluate(f, field, point)?.is_zero() {
            return Err(Error::PointNotOnVariety);
        }
    }
    let mut matrix = Vec::with_capacity(spec.polys.len());
    for row in &spec.jacobian {
        let mut out_row = Vec::with_capacity(row.len());
        for entry in row {
            out_row.push(evaluate(entry, field, point)?);
        }
        matrix.push(out_row);
    }
    matrix_rank(field, matrix)
}

/// Rank by Gaussian elimination with exact field arithmetic.
fn matrix_rank(field: &ExtensionField, mut m: Vec<Vec<FieldElement>>) -> Result<usize> {
    let rows = m.len();
    if rows == 0 {
        return Ok(0);
    }
    let cols = m[0].len();
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let pivot = match (rank..rows).find(|&r| !m[r][col].is_zero()) {
            Some(r) => r,
            None => continue,
        };
        m.swap(rank, pivot);
        let inv = field.inv(&m[rank][col])?;
        for r in rank + 1..rows {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = field.mul(&m[r][col], &inv)?;
            for c in col..cols {
                let scaled = field.mul(&factor, &m[rank][c])?;
                m[r][c] = field.sub(&m[r][c], &scaled)?;
            }
        }
        rank += 1;
    }
    Ok(rank)
}

/// Generate a spec with dense random forms of the given degrees, rejecting
/// candidates until one passes the smoothness probe: every rational point
/// over F_{p^k} for k <= `probe_depth` must have Jacobian rank r.
///
/// Deterministic for fixed arguments.  The returned spec records
/// `smoothness_verified_up_to = probe_depth`.
pub fn random_ci(
    p: u64,
    ambient: usize,
    degrees: &[u32],
    seed: u64,
    probe_depth: u32,
    options: &CountOptions,
) -> Result<CiSpec> {
    if degrees.is_empty() {
        return Err(Error::BadCodimension { r: 0, ambient });
    }
    if probe_depth == 0 {
        return Err(Error::InvalidParameter("probe depth must be at least 1".into()));
    }
    if degrees.iter().any(|&d| d == 0) {
        return Err(Error::InvalidParameter("degrees must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_GENERATION_ATTEMPTS {
        let mut polys = Vec::with_capacity(degrees.len());
        for &d in degrees {
            let mut raw = Vec::new();
            for exps in monomials(ambient + 1, d) {
                let c = rng.gen_range(0..p) as i64;
                if c != 0 {
                    raw.push((c, exps));
                }
            }
            if raw.is_empty() {
                // Identically-zero sample; certainly not a complete
                // intersection, so resample the whole candidate.
                break;
            }
            polys.push(HomogeneousPoly::new(ambient + 1, d, raw, p)?);
        }
        if polys.len() != degrees.len() {
            continue;
        }
        let mut spec = CiSpec::new(p, ambient, polys)?;
        let (clean, _records) = counter::probe_smoothness(&spec, probe_depth, options)?;
        if clean {
            spec.set_smoothness_verified_up_to(probe_depth);
            return Ok(spec);
        }
    }
    Err(Error::GenerationFailed { attempts: MAX_GENERATION_ATTEMPTS })
}
