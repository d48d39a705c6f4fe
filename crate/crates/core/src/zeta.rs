//! Middle-cohomology Frobenius data from point counts.
//!
//! For a smooth complete intersection X of dimension n over F_q, the count
//! over every extension splits into a fixed "ambient" part and a middle
//! part:
//!
//!   N_d = T_d + (-1)^n S_d,   T_d = sum of q^{kd} over 0 <= k <= n, 2k != n,
//!
//! where S_d is the d-th power sum of the b inverse roots of the middle
//! characteristic polynomial P(T) = 1 + c_1 T + ... + c_b T^b.  This module
//! goes back and forth along that identity:
//!
//! * cohomological bookkeeping — Euler characteristic of X from its ambient
//!   dimension and multidegree, the middle Betti number b, total Betti sums,
//!   and the genus of complete-intersection curves;
//! * reconstruction — recover the c_k from observed counts, either all b of
//!   them by Newton's identities, or just the first ceil(b/2) with the rest
//!   filled in through the reciprocal symmetry c_{b-j} = ± q^{n(b-2j)/2} c_j
//!   (the cheap route: low coefficients need only low-degree counts);
//! * prediction — run the identity forward to predict counts from a
//!   reconstructed polynomial, which is also how a symmetry sign candidate
//!   is accepted or rejected;
//! * verification — check reciprocal symmetry, the critical-line condition
//!   |1/rho| = q^{n/2} for every root, and the binomial coefficient bounds
//!   that follow from it.
//!
//! Everything except the root moduli is exact integer arithmetic; root
//! moduli are computed at quad precision after exact squarefree deflation.

use crate::roots::{self, Dd};
use crate::{Error, Result};
use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Default relative tolerance for the root-modulus check; quad-precision
/// simple-root refinement leaves errors far below this.
pub const DEFAULT_RH_TOLERANCE: f64 = 1e-8;

// ---------------------------------------------------------------------------
// Cohomological bookkeeping
// ---------------------------------------------------------------------------

/// Euler characteristic of a smooth complete intersection in P^`ambient`
/// with the given multidegree: the product of the degrees times the
/// h^n-coefficient of (1+h)^{N+1} / prod (1 + d_i h), extracted by exact
/// truncated power series.
pub fn euler_characteristic_ci(ambient: usize, degrees: &[u32]) -> Result<BigInt> {
    let r = degrees.len();
    if r == 0 || r > ambient {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= #degrees <= ambient dimension, got {r} in P^{ambient}"
        )));
    }
    if degrees.iter().any(|&d| d == 0) {
        return Err(Error::InvalidParameter("degrees must be positive".into()));
    }
    let n = ambient - r;
    // (1+h)^{N+1} truncated at h^n, by Pascal's recurrence on each factor.
    let mut series = vec![BigInt::zero(); n + 1];
    series[0] = BigInt::one();
    for _ in 0..=ambient {
        for k in (1..=n).rev() {
            let prev = series[k - 1].clone();
            series[k] += prev;
        }
    }
    // Divide by each (1 + d h): c'_k = c_k - d * c'_{k-1}.
    for &d in degrees {
        let d = BigInt::from(d);
        for k in 1..=n {
            let t = &d * &series[k - 1];
            series[k] -= t;
        }
    }
    let product: BigInt = degrees.iter().map(|&d| BigInt::from(d)).product();
    Ok(product * &series[n])
}

/// Middle Betti number b_n of a smooth complete intersection: all other
/// Betti numbers are 0 or 1 by Lefschetz, so b_n is pinned down by the
/// Euler characteristic alone.
pub fn middle_betti(ambient: usize, degrees: &[u32]) -> Result<u64> {
    let n = ambient - degrees.len();
    let chi = euler_characteristic_ci(ambient, degrees)?;
    let b = if n % 2 == 0 {
        &chi - BigInt::from(n)
    } else {
        BigInt::from(n + 1) - &chi
    };
    if b.sign() == Sign::Minus {
        return Err(Error::NegativeBetti { chi: chi.to_i64().unwrap_or(i64::MAX) });
    }
    b.to_u64().ok_or(Error::NegativeBetti { chi: chi.to_i64().unwrap_or(i64::MAX) })
}

/// Sum of all Betti numbers of a smooth complete intersection of dimension
/// n with middle Betti number `middle`: the non-middle ones contribute 1 in
/// each even degree.
pub fn total_betti_smooth(n: usize, middle: u64) -> u64 {
    let evens_not_middle = if n % 2 == 0 { n as u64 } else { n as u64 + 1 };
    middle + evens_not_middle
}

/// Sum of the cohomology ranks in degrees 0..=n (middle included): the
/// below-middle even degrees contribute 1 each.
pub fn betti_sum_up_to_middle(n: usize, middle: u64) -> u64 {
    middle + n.div_ceil(2) as u64
}

/// Genus of a smooth complete-intersection curve in P^`ambient` by
/// adjunction: g = 1 + (1/2) (prod d_i) (sum d_i - ambient - 1).
pub fn genus_from_degrees(ambient: usize, degrees: &[u32]) -> Result<BigInt> {
    if degrees.len() + 1 != ambient {
        return Err(Error::InvalidParameter(format!(
            "a curve in P^{ambient} needs {} defining forms, got {}",
            ambient - 1,
            degrees.len()
        )));
    }
    let product: BigInt = degrees.iter().map(|&d| BigInt::from(d)).product();
    let degree_sum: BigInt = degrees.iter().map(|&d| BigInt::from(d)).sum();
    let twice_g_minus_2 = product * (degree_sum - BigInt::from(ambient as u64 + 1));
    let two = BigInt::from(2);
    let (half, rem) = (&twice_g_minus_2 / &two, &twice_g_minus_2 % &two);
    if !rem.is_zero() {
        return Err(Error::GenusNotIntegral { degrees: degrees.to_vec() });
    }
    let g = BigInt::one() + half;
    if g.sign() == Sign::Minus {
        return Err(Error::NegativeGenus {
            degrees: degrees.to_vec(),
            genus: g.to_i64().unwrap_or(i64::MIN),
        });
    }
    Ok(g)
}

// ---------------------------------------------------------------------------
// The trace identity, forwards and backwards
// ---------------------------------------------------------------------------

/// Ambient contribution to the count over F_{q^d}: sum of q^{kd} over
/// 0 <= k <= n with 2k != n.  (For n = 0 this is empty.)
pub fn t_d(n: usize, q: u64, d: u32) -> BigUint {
    let qd = BigUint::from(q).pow(d);
    let mut acc = BigUint::zero();
    let mut pow = BigUint::one();
    for k in 0..=n {
        if 2 * k != n {
            acc += &pow;
        }
        if k < n {
            pow *= &qd;
        }
    }
    acc
}

/// Middle power sums S_1, S_2, ... from observed counts N_1, N_2, ...:
/// S_d = (-1)^n (N_d - T_d).
pub fn middle_power_sums(counts: &[BigUint], n: usize, q: u64) -> Vec<BigInt> {
    counts
        .iter()
        .enumerate()
        .map(|(i, nd)| {
            let d = i as u32 + 1;
            let diff = BigInt::from(nd.clone()) - BigInt::from(t_d(n, q, d));
            if n % 2 == 0 {
                diff
            } else {
                -diff
            }
        })
        .collect()
}

/// Coefficients c_0..=c_b of prod (1 - alpha_j T) from the power sums of
/// the alpha_j, by Newton's identities over the rationals.  Fails if fewer
/// than b sums are supplied or if any coefficient comes out non-integral
/// (which proves the power sums are not those of b algebraic numbers with
/// integral symmetric functions — in practice, a wrong b or a bad count).
pub fn newton_coefficients(power_sums: &[BigInt], b: usize) -> Result<Vec<BigInt>> {
    if power_sums.len() < b {
        return Err(Error::InsufficientPowerSums { needed: b, got: power_sums.len() });
    }
    // sigma_k = (1/k) sum_{i=1..k} (-1)^{i-1} sigma_{k-i} S_i, c_k = (-1)^k sigma_k.
    let mut sigma: Vec<BigRational> = vec![BigRational::one()];
    for k in 1..=b {
        let mut acc = BigRational::zero();
        for i in 1..=k {
            let term = &sigma[k - i] * BigRational::from(power_sums[i - 1].clone());
            if i % 2 == 1 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        sigma.push(acc / BigRational::from(BigInt::from(k as u64)));
    }
    sigma
        .into_iter()
        .enumerate()
        .map(|(k, s)| {
            if !s.is_integer() {
                return Err(Error::NonIntegerCoefficient { index: k });
            }
            let v = s.to_integer();
            Ok(if k % 2 == 0 { v } else { -v })
        })
        .collect()
}

/// Power sums p_1..=p_`how_many` of the inverse roots of the polynomial
/// with coefficients c_0..=c_b (c_0 = 1), by running Newton's identities
/// forward; exact integer arithmetic throughout.
pub fn power_sums_from_coeffs(coeffs: &[BigInt], how_many: usize) -> Vec<BigInt> {
    let b = coeffs.len() - 1;
    let mut sums: Vec<BigInt> = Vec::with_capacity(how_many);
    for k in 1..=how_many {
        let mut acc = BigInt::zero();
        for i in 1..=(k - 1).min(b) {
            acc -= &coeffs[i] * &sums[k - i - 1];
        }
        if k <= b {
            acc -= BigInt::from(k as u64) * &coeffs[k];
        }
        sums.push(acc);
    }
    sums
}

// ---------------------------------------------------------------------------
// The middle characteristic polynomial
// ---------------------------------------------------------------------------

/// P(T) = 1 + c_1 T + ... + c_b T^b attached to the middle cohomology of a
/// dimension-n variety over F_q, with the reciprocal-symmetry sign when one
/// is uniquely determined by the coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MiddlePolynomial {
    coeffs: Vec<BigInt>,
    q: u64,
    n: usize,
    sign: Option<i8>,
}

impl MiddlePolynomial {
    /// Wrap explicit coefficients (ascending, constant term must be 1).
    pub fn from_coeffs(coeffs: Vec<BigInt>, q: u64, n: usize) -> Result<MiddlePolynomial> {
        if coeffs.first().map_or(true, |c| !c.is_one()) {
            return Err(Error::ConstantTermNotOne);
        }
        let sign = detect_symmetry_sign(&coeffs, q, n);
        Ok(MiddlePolynomial { coeffs, q, n, sign })
    }

    /// Reconstruct all b coefficients from the counts N_1..=N_b (further
    /// counts are ignored) by Newton's identities.
    pub fn reconstruct_full(counts: &[BigUint], q: u64, n: usize, b: usize) -> Result<MiddlePolynomial> {
        let sums = middle_power_sums(counts, n, q);
        let coeffs = newton_coefficients(&sums, b)?;
        MiddlePolynomial::from_coeffs(coeffs, q, n)
    }

    /// Reconstruct from counts N_1..=N_h only, h = ceil(b/2), completing
    /// the upper half through the reciprocal symmetry
    ///
    ///   c_{b-j} = epsilon q^{n(b-2j)/2} c_j.
    ///
    /// Both signs are tried; a candidate survives if its internal overlap
    /// constraint holds and it predicts `check_count` points over
    /// F_{q^check_d}.  The check degree must exceed h for the two
    /// candidates to be distinguishable — h + 1 is the canonical choice.
    /// Exactly one survivor is required.
    pub fn reconstruct_with_symmetry(
        counts: &[BigUint],
        q: u64,
        n: usize,
        b: usize,
        check_d: u32,
        check_count: &BigUint,
    ) -> Result<MiddlePolynomial> {
        if n % 2 == 1 && b % 2 == 1 {
            return Err(Error::InvalidParameter(format!(
                "reciprocal symmetry with n = {n}, b = {b} would need half-integral powers of q"
            )));
        }
        let h = b.div_ceil(2);
        let sums = middle_power_sums(counts, n, q);
        let low = newton_coefficients(&sums, h)?;
        let expected_count = BigInt::from(check_count.clone());
        let mut survivors: Vec<MiddlePolynomial> = Vec::new();
        let mut rejections: Vec<String> = Vec::new();
        for sign in [1i8, -1] {
            match complete_by_symmetry(&low, b, n, q, sign) {
                Ok(coeffs) => {
                    let candidate = MiddlePolynomial { coeffs, q, n, sign: Some(sign) };
                    let predicted = candidate.predict_count(check_d);
                    if predicted == expected_count {
                        survivors.push(candidate);
                    } else {
                        rejections.push(format!(
                            "sign {sign:+} predicts {predicted} points over degree {check_d}, observed {expected_count}"
                        ));
                    }
                }
                Err(reason) => rejections.push(format!("sign {sign:+}: {reason}")),
            }
        }
        match survivors.len() {
            1 => Ok(survivors.pop().expect("exactly one survivor")),
            0 => Err(Error::NoConsistentSign { detail: rejections.join("; ") }),
            _ => Err(Error::AmbiguousSign),
        }
    }

    /// Like `reconstruct_with_symmetry`, fetching check counts on demand
    /// and escalating the check degree when one degree cannot separate the
    /// signs (which happens exactly when every coefficient the candidates
    /// disagree on below that degree is zero).  The candidates always
    /// disagree at c_b = +-q^{nb/2}, so a check at degree b is decisive and
    /// the escalation terminates.
    pub fn reconstruct_with_symmetry_auto(
        counts: &[BigUint],
        q: u64,
        n: usize,
        b: usize,
        mut fetch_count: impl FnMut(u32) -> Result<BigUint>,
    ) -> Result<MiddlePolynomial> {
        let h = b.div_ceil(2);
        let mut d = h as u32 + 1;
        loop {
            let check = fetch_count(d)?;
            match MiddlePolynomial::reconstruct_with_symmetry(counts, q, n, b, d, &check) {
                Err(Error::AmbiguousSign) if (d as usize) < b => d += 1,
                other => return other,
            }
        }
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    /// Degree of the stored coefficient vector.
    pub fn b(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Degree with trailing zero coefficients discounted (the honest degree
    /// of P as a polynomial).
    pub fn actual_degree(&self) -> usize {
        self.coeffs.iter().rposition(|c| !c.is_zero()).unwrap_or(0)
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Reciprocal-symmetry sign, when the coefficients determine one.
    pub fn sign(&self) -> Option<i8> {
        self.sign
    }

    /// The count over F_{q^d} this polynomial implies: T_d + (-1)^n S_d.
    /// A candidate polynomial that is not a genuine Frobenius polynomial
    /// can predict a negative value, which simply rejects it.
    pub fn predict_count(&self, d: u32) -> BigInt {
        let sums = power_sums_from_coeffs(&self.coeffs, d as usize);
        let s_d = &sums[d as usize - 1];
        let t = BigInt::from(t_d(self.n, self.q, d));
        if self.n % 2 == 0 {
            t + s_d
        } else {
            t - s_d
        }
    }
}

/// q^{e/2} as an exact integer; `e` must be even.
fn half_power(q: u64, e: usize) -> BigInt {
    debug_assert!(e % 2 == 0, "half-integral power of q requested");
    BigInt::from(q).pow((e / 2) as u32)
}

/// Extend c_0..=c_h to c_0..=c_b via c_k = sign * q^{n(2k-b)/2} c_{b-k};
/// at k = h the relation constrains the Newton value instead of defining a
/// new one, and a violation rejects this sign.
fn complete_by_symmetry(
    low: &[BigInt],
    b: usize,
    n: usize,
    q: u64,
    sign: i8,
) -> std::result::Result<Vec<BigInt>, String> {
    let h = b.div_ceil(2);
    debug_assert_eq!(low.len(), h + 1);
    let mut coeffs = vec![BigInt::zero(); b + 1];
    coeffs[..=h].clone_from_slice(low);
    for k in h..=b {
        let mirrored = &coeffs[b - k];
        let scale = half_power(q, n * (2 * k - b));
        let expected = if sign == 1 { mirrored * &scale } else { -(mirrored * &scale) };
        if k == h {
            if coeffs[h] != expected {
                return Err(format!(
                    "overlap constraint fails: c_{h} = {} but symmetry requires {expected}",
                    coeffs[h]
                ));
            }
        } else {
            coeffs[k] = expected;
        }
    }
    Ok(coeffs)
}

/// The sign for which c_{b-j} = sign * q^{n(b-2j)/2} c_j holds for all j,
/// if exactly one does.  (Both can never hold: c_b = sign * q^{nb/2} c_0
/// and c_0 = 1.)  Half-integral exponents are compared by squaring plus a
/// sign test.
fn detect_symmetry_sign(coeffs: &[BigInt], q: u64, n: usize) -> Option<i8> {
    [1i8, -1].into_iter().find(|&s| symmetry_holds(coeffs, q, n, s))
}

fn symmetry_holds(coeffs: &[BigInt], q: u64, n: usize, sign: i8) -> bool {
    let b = coeffs.len() - 1;
    for j in 0..=b / 2 {
        let e = n * (b - 2 * j);
        let lhs = &coeffs[b - j];
        let rhs = &coeffs[j];
        if e % 2 == 0 {
            let scaled = rhs * half_power(q, e);
            let scaled = if sign == 1 { scaled } else { -scaled };
            if *lhs != scaled {
                return false;
            }
        } else {
            // lhs = sign * q^{e/2} rhs with odd e: square both sides and
            // match signs separately.
            let sign_matches = match (lhs.sign(), rhs.sign()) {
                (Sign::NoSign, Sign::NoSign) => true,
                (l, r) if sign == 1 => l == r,
                (l, r) => l == -r,
            };
            if !sign_matches || lhs * lhs != rhs * rhs * BigInt::from(q).pow(e as u32) {
                return false;
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Critical-line verification
// ---------------------------------------------------------------------------

/// One root of the middle polynomial, at quad precision.
#[derive(Debug, Clone)]
pub struct RootSummary {
    pub re: f64,
    pub im: f64,
    pub multiplicity: usize,
    /// |1/rho|, to be compared with q^{n/2}.
    pub inverse_modulus: f64,
    /// | |1/rho| - q^{n/2} | / q^{n/2}.
    pub relative_error: f64,
}

/// Outcome of the critical-line checks on a middle polynomial.
#[derive(Debug, Clone)]
pub struct RhReport {
    /// All three checks passed.
    pub pass: bool,
    /// Some sign makes the reciprocal symmetry hold exactly.
    pub symmetry: bool,
    pub symmetry_sign: Option<i8>,
    /// Every root satisfies | |1/rho| - q^{n/2} | <= tol * q^{n/2}.
    pub moduli_ok: bool,
    pub worst_relative_error: f64,
    pub tolerance: f64,
    /// |c_j| <= C(b, j) q^{nj/2} for every j (checked exactly, squared).
    pub coefficient_bounds_ok: bool,
    pub roots: Vec<RootSummary>,
}

fn binomial(n: usize, k: usize) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k.min(n - k) {
        acc = acc * BigInt::from((n - i) as u64) / BigInt::from((i + 1) as u64);
    }
    acc
}

/// Run the three critical-line checks: exact reciprocal symmetry, root
/// moduli at quad precision against the relative tolerance, and the exact
/// squared coefficient bounds |c_j|^2 <= C(b,j)^2 q^{nj}.
pub fn verify_rh(poly: &MiddlePolynomial, tolerance: f64) -> Result<RhReport> {
    let b = poly.b();
    let q = poly.q();
    let n = poly.n();
    let symmetry_sign = detect_symmetry_sign(poly.coeffs(), q, n);
    let symmetry = symmetry_sign.is_some();

    // Root moduli: find roots of P exactly deflated, then compare |1/rho|
    // with q^{n/2} in double-double arithmetic.
    let rational: Vec<BigRational> =
        poly.coeffs().iter().map(|c| BigRational::from(c.clone())).collect();
    let target = Dd::from_rational(&BigRational::from(BigInt::from(q).pow(n as u32))).sqrt();
    let mut roots = Vec::new();
    let mut worst = 0.0f64;
    if poly.actual_degree() > 0 {
        for (z, multiplicity) in roots::rational_poly_roots(&rational)? {
            // P(0) = 1, so rho != 0 and the inverse is safe.
            let inv_modulus = Dd::ONE.div(z.modulus());
            let rel = inv_modulus.sub(target).abs().div(target).to_f64();
            worst = worst.max(rel);
            roots.push(RootSummary {
                re: z.re.to_f64(),
                im: z.im.to_f64(),
                multiplicity,
                inverse_modulus: inv_modulus.to_f64(),
                relative_error: rel,
            });
        }
    }
    let moduli_ok = worst <= tolerance;

    let q_big = BigInt::from(q);
    let coefficient_bounds_ok = poly.coeffs().iter().enumerate().all(|(j, c)| {
        let bound = binomial(b, j);
        c * c <= &bound * &bound * q_big.pow((n * j) as u32)
    });

    Ok(RhReport {
        pass: symmetry && moduli_ok && coefficient_bounds_ok,
        symmetry,
        symmetry_sign,
        moduli_ok,
        worst_relative_error: worst,
        tolerance,
        coefficient_bounds_ok,
        roots,
    })
}
