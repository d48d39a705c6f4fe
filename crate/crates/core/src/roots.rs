//! Root extraction for integer polynomials at quad precision.
//!
//! The reciprocal-root modulus checks downstream need root moduli to far
//! better than f64 round-off, so this module carries its own compensated
//! ("double-double") arithmetic: a value is an unevaluated sum hi + lo of
//! two f64s, giving roughly 106 bits of effective mantissa.  On top of that
//! sit complex numbers and Aberth's simultaneous root iteration.
//!
//! Aberth converges fast on simple roots but degrades badly on multiple
//! ones, so callers never see that case: `rational_poly_roots` first splits
//! the polynomial into squarefree factors with Yun's algorithm, performed
//! exactly over the rationals, and runs the iteration on each factor —
//! every root it refines is simple by construction, and the factor's index
//! in the decomposition is the root's multiplicity.

use crate::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

// ---------------------------------------------------------------------------
// Double-double arithmetic
// ---------------------------------------------------------------------------

/// Unevaluated sum of two f64s with |lo| at most half an ulp of hi.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

/// Exact sum: s + e == a + b with s = fl(a + b).
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let v = s - a;
    let e = (a - (s - v)) + (b - v);
    (s, e)
}

/// `two_sum` specialised to |a| >= |b|.
#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

/// Exact product: p + e == a * b with p = fl(a * b), via fused multiply-add.
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    /// Nearest double-double to an exact rational: the leading component is
    /// the f64 approximation, the trailing one the f64 of the exact residue.
    pub fn from_rational(x: &BigRational) -> Dd {
        let hi = rational_to_f64(x);
        if !hi.is_finite() {
            return Dd { hi, lo: 0.0 };
        }
        let residue = x - BigRational::from_float(hi).expect("finite f64 is rational");
        let lo = rational_to_f64(&residue);
        let (hi, lo) = quick_two_sum(hi, lo);
        Dd { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, other: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, other.hi);
        let e = e + self.lo + other.lo;
        let (hi, lo) = quick_two_sum(s, e);
        Dd { hi, lo }
    }

    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    pub fn sub(self, other: Dd) -> Dd {
        self.add(other.neg())
    }

    pub fn mul(self, other: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, other.hi);
        let e = e + self.hi * other.lo + self.lo * other.hi;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    pub fn div(self, other: Dd) -> Dd {
        // Three rounds of long division in f64 quotient digits.
        let q0 = self.hi / other.hi;
        let r = self.sub(other.mul(Dd::from_f64(q0)));
        let q1 = r.hi / other.hi;
        let r = r.sub(other.mul(Dd::from_f64(q1)));
        let q2 = r.hi / other.hi;
        let (s, e) = two_sum(q0, q1);
        let (hi, lo) = quick_two_sum(s, e + q2);
        Dd { hi, lo }
    }

    pub fn abs(self) -> Dd {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            self.neg()
        } else {
            self
        }
    }

    pub fn sqrt(self) -> Dd {
        if self.hi == 0.0 && self.lo == 0.0 {
            return Dd::ZERO;
        }
        // One Newton step on the f64 seed doubles its precision.
        let s = Dd::from_f64(self.hi.sqrt());
        let s = s.add(self.div(s)).mul(Dd::from_f64(0.5));
        s.add(self.div(s)).mul(Dd::from_f64(0.5))
    }
}

/// f64 nearest to num/den, safe against overflow of either part: scale both
/// by a common power of two until they fit, then divide.
fn rational_to_f64(x: &BigRational) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let num = x.numer();
    let den = x.denom();
    let shift = num.bits().max(den.bits()).saturating_sub(900) as usize;
    let num_f = (num >> shift).to_f64().unwrap_or(f64::NAN);
    let den_f = (den >> shift).to_f64().unwrap_or(f64::NAN);
    // The shifted parts lose at most 1 ulp each relative to the true
    // quotient; that error is swallowed by the residue pass above.
    num_f / den_f
}

// ---------------------------------------------------------------------------
// Complex double-double
// ---------------------------------------------------------------------------

/// Complex number with double-double real and imaginary parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cdd {
    pub re: Dd,
    pub im: Dd,
}

impl Cdd {
    pub const ZERO: Cdd = Cdd { re: Dd::ZERO, im: Dd::ZERO };

    pub fn new(re: f64, im: f64) -> Cdd {
        Cdd { re: Dd::from_f64(re), im: Dd::from_f64(im) }
    }

    pub fn from_dd(re: Dd) -> Cdd {
        Cdd { re, im: Dd::ZERO }
    }

    pub fn add(self, other: Cdd) -> Cdd {
        Cdd { re: self.re.add(other.re), im: self.im.add(other.im) }
    }

    pub fn sub(self, other: Cdd) -> Cdd {
        Cdd { re: self.re.sub(other.re), im: self.im.sub(other.im) }
    }

    pub fn mul(self, other: Cdd) -> Cdd {
        Cdd {
            re: self.re.mul(other.re).sub(self.im.mul(other.im)),
            im: self.re.mul(other.im).add(self.im.mul(other.re)),
        }
    }

    pub fn div(self, other: Cdd) -> Cdd {
        let d = other.re.mul(other.re).add(other.im.mul(other.im));
        let re = self.re.mul(other.re).add(self.im.mul(other.im)).div(d);
        let im = self.im.mul(other.re).sub(self.re.mul(other.im)).div(d);
        Cdd { re, im }
    }

    pub fn modulus_squared(self) -> Dd {
        self.re.mul(self.re).add(self.im.mul(self.im))
    }

    pub fn modulus(self) -> Dd {
        self.modulus_squared().sqrt()
    }
}

// ---------------------------------------------------------------------------
// Exact polynomial utilities over the rationals
// ---------------------------------------------------------------------------

/// Degree as Option: None for the zero polynomial.  Coefficients ascending.
fn rat_deg(f: &[BigRational]) -> Option<usize> {
    f.iter().rposition(|c| !c.is_zero())
}

fn rat_trim(mut f: Vec<BigRational>) -> Vec<BigRational> {
    let len = rat_deg(&f).map_or(0, |d| d + 1);
    f.truncate(len);
    f
}

pub fn rat_derivative(f: &[BigRational]) -> Vec<BigRational> {
    f.iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c * BigRational::from(BigInt::from(k)))
        .collect()
}

/// Quotient and remainder of exact polynomial long division.
fn rat_divmod(num: &[BigRational], den: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
    let dd = rat_deg(den).expect("division by zero polynomial");
    let lead = den[dd].clone();
    let mut rem = rat_trim(num.to_vec());
    let Some(dn) = rat_deg(&rem) else {
        return (Vec::new(), Vec::new());
    };
    if dn < dd {
        return (Vec::new(), rem);
    }
    let mut quot = vec![BigRational::zero(); dn - dd + 1];
    for k in (0..=dn - dd).rev() {
        let c = &rem[k + dd] / &lead;
        if c.is_zero() {
            continue;
        }
        for j in 0..=dd {
            let t = &den[j] * &c;
            rem[k + j] -= t;
        }
        quot[k] = c;
    }
    (rat_trim(quot), rat_trim(rem))
}

/// Exact quotient; panics if the division leaves a remainder (callers only
/// divide by known factors).
fn rat_div_exact(num: &[BigRational], den: &[BigRational]) -> Vec<BigRational> {
    let (q, r) = rat_divmod(num, den);
    assert!(r.is_empty(), "inexact polynomial division");
    q
}

/// Monic gcd by the Euclidean algorithm; gcd of two zero polynomials is
/// empty.  Remainders are normalised monic each round to tame coefficient
/// growth.
pub fn rat_gcd(f: &[BigRational], g: &[BigRational]) -> Vec<BigRational> {
    let mut a = rat_trim(f.to_vec());
    let mut b = rat_trim(g.to_vec());
    while !b.is_empty() {
        let (_, mut r) = rat_divmod(&a, &b);
        if let Some(d) = rat_deg(&r) {
            let lead = r[d].clone();
            for c in r.iter_mut() {
                *c /= &lead;
            }
        }
        a = b;
        b = r;
    }
    if let Some(d) = rat_deg(&a) {
        let lead = a[d].clone();
        for c in a.iter_mut() {
            *c /= &lead;
        }
    }
    a
}

/// Yun's squarefree decomposition: f ~ prod_i g_i^i with each g_i squarefree
/// and the g_i pairwise coprime.  Returns the nonconstant (g_i, i) pairs.
/// Constant and zero inputs decompose into nothing.
pub fn squarefree_decomposition(f: &[BigRational]) -> Vec<(Vec<BigRational>, usize)> {
    let f = rat_trim(f.to_vec());
    if rat_deg(&f).unwrap_or(0) == 0 {
        return Vec::new();
    }
    let df = rat_derivative(&f);
    let a = rat_gcd(&f, &df);
    let mut b = rat_div_exact(&f, &a);
    let mut d: Vec<BigRational> = {
        let c = rat_div_exact(&df, &a);
        let db = rat_derivative(&b);
        sub_poly(&c, &db)
    };
    let mut out = Vec::new();
    let mut i = 1usize;
    while rat_deg(&b).unwrap_or(0) > 0 {
        let g = rat_gcd(&b, &d);
        if rat_deg(&g).unwrap_or(0) > 0 {
            out.push((g.clone(), i));
        }
        b = rat_div_exact(&b, &g);
        let c = rat_div_exact(&d, &g);
        let db = rat_derivative(&b);
        d = sub_poly(&c, &db);
        i += 1;
    }
    out
}

fn sub_poly(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); a.len().max(b.len())];
    for (k, c) in a.iter().enumerate() {
        out[k] += c;
    }
    for (k, c) in b.iter().enumerate() {
        out[k] -= c;
    }
    rat_trim(out)
}

// ---------------------------------------------------------------------------
// Aberth iteration
// ---------------------------------------------------------------------------

const ABERTH_MAX_ITERATIONS: usize = 200;
const ABERTH_CONVERGENCE: f64 = 1e-26;

/// Polynomial and derivative value by Horner evaluation.
fn horner(coeffs: &[Dd], z: Cdd) -> (Cdd, Cdd) {
    let mut p = Cdd::ZERO;
    let mut dp = Cdd::ZERO;
    for &c in coeffs.iter().rev() {
        dp = dp.mul(z).add(p);
        p = p.mul(z).add(Cdd::from_dd(c));
    }
    (p, dp)
}

/// All roots of a squarefree polynomial with real coefficients, by Aberth's
/// simultaneous iteration.  `coeffs` is ascending with nonzero leading and
/// constant terms (callers strip zero roots first; zeta numerators have
/// constant term 1 anyway).
fn aberth(coeffs: &[Dd]) -> Result<Vec<Cdd>> {
    let n = coeffs.len() - 1;
    if n == 1 {
        return Ok(vec![Cdd::from_dd(coeffs[0].neg().div(coeffs[1]))]);
    }
    // Cauchy-style inclusion radius: 1 + max |a_k / a_n|.
    let lead = coeffs[n].to_f64().abs();
    let radius = 1.0
        + coeffs[..n]
            .iter()
            .map(|c| (c.to_f64() / lead).abs())
            .fold(0.0f64, f64::max);
    // Initial guesses on a circle, angle-offset so no guess is real (real
    // roots would otherwise trap a symmetric iteration on the axis).
    let mut z: Vec<Cdd> = (0..n)
        .map(|k| {
            let theta = std::f64::consts::TAU * (k as f64) / (n as f64) + 0.41;
            Cdd::new(radius * theta.cos(), radius * theta.sin())
        })
        .collect();
    for _ in 0..ABERTH_MAX_ITERATIONS {
        let mut worst = 0.0f64;
        for i in 0..n {
            let (p, dp) = horner(coeffs, z[i]);
            let newton = p.div(dp);
            let mut repulsion = Cdd::ZERO;
            for j in 0..n {
                if j != i {
                    let diff = z[i].sub(z[j]);
                    repulsion = repulsion.add(Cdd::new(1.0, 0.0).div(diff));
                }
            }
            let denom = Cdd::new(1.0, 0.0).sub(newton.mul(repulsion));
            let w = newton.div(denom);
            z[i] = z[i].sub(w);
            let scale = z[i].modulus().to_f64().max(1.0);
            worst = worst.max(w.modulus().to_f64() / scale);
        }
        if worst < ABERTH_CONVERGENCE {
            return Ok(z);
        }
    }
    Err(Error::InvalidParameter("root iteration did not converge".into()))
}

/// Roots with multiplicities of a rational polynomial, ascending
/// coefficients.  Zero roots (trailing zero coefficients) are returned
/// exactly; everything else is refined to double-double accuracy on the
/// squarefree factors.
pub fn rational_poly_roots(coeffs: &[BigRational]) -> Result<Vec<(Cdd, usize)>> {
    let trimmed = rat_trim(coeffs.to_vec());
    let Some(deg) = rat_deg(&trimmed) else {
        return Err(Error::InvalidParameter("zero polynomial has no well-defined roots".into()));
    };
    if deg == 0 {
        return Ok(Vec::new());
    }
    let zero_mult = trimmed.iter().take_while(|c| c.is_zero()).count();
    let mut out: Vec<(Cdd, usize)> = Vec::new();
    if zero_mult > 0 {
        out.push((Cdd::ZERO, zero_mult));
    }
    let deflated = trimmed[zero_mult..].to_vec();
    for (factor, mult) in squarefree_decomposition(&deflated) {
        let dd_coeffs: Vec<Dd> = factor.iter().map(Dd::from_rational).collect();
        for root in aberth(&dd_coeffs)? {
            out.push((root, mult));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn rat(n: i64) -> BigRational {
        BigRational::from(BigInt::from(n))
    }

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn pow10(k: usize) -> BigInt {
        (0..k).fold(BigInt::one(), |acc, _| acc * 10)
    }

    /// Expand prod (1 - r_k T) from the list of integer reciprocal roots.
    fn expand_from_inverse_roots(inv_roots: &[i64]) -> Vec<BigRational> {
        let mut coeffs = vec![BigRational::one()];
        for &r in inv_roots {
            let mut next = vec![BigRational::zero(); coeffs.len() + 1];
            for (k, c) in coeffs.iter().enumerate() {
                next[k] += c;
                next[k + 1] -= c * rat(r);
            }
            coeffs = next;
        }
        coeffs
    }

    #[test]
    fn compensated_arithmetic_beats_f64_round_off() {
        // 1/3 in double-double is accurate to ~1e-32; times 3 gives 1.
        let third = Dd::ONE.div(Dd::from_f64(3.0));
        let back = third.mul(Dd::from_f64(3.0)).sub(Dd::ONE);
        assert!(back.to_f64().abs() < 1e-30);
        // sqrt(2)^2 - 2 stays at ~1e-32, far below f64's 1e-16.
        let s = Dd::from_f64(2.0).sqrt();
        let err = s.mul(s).sub(Dd::from_f64(2.0));
        assert!(err.to_f64().abs() < 1e-30);
        // Exact rational conversion keeps the residue: 1e-25 survives
        // addition to 1 and comes back out.
        let x = BigRational::one() + BigRational::new(BigInt::one(), pow10(25));
        let dd = Dd::from_rational(&x);
        assert!((dd.sub(Dd::ONE).to_f64() - 1e-25).abs() < 1e-38);
    }

    #[test]
    fn rational_conversion_handles_huge_values() {
        let big = BigRational::from(pow10(400));
        assert!(Dd::from_rational(&big).hi.is_infinite());
        let huge_ratio = BigRational::new(pow10(400) + 1, pow10(400));
        let dd = Dd::from_rational(&huge_ratio);
        assert!((dd.to_f64() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gcd_and_exact_division() {
        // (T-1)(T-2) and (T-1)(T-3) share exactly (T-1).
        let f = vec![rat(2), rat(-3), rat(1)];
        let g = vec![rat(3), rat(-4), rat(1)];
        assert_eq!(rat_gcd(&f, &g), vec![rat(-1), rat(1)]);
        // Coprime inputs give a constant gcd.
        let h = vec![rat(5), rat(1)];
        let d = rat_gcd(&f, &h);
        assert_eq!(rat_deg(&d), Some(0));
        let q = rat_div_exact(&f, &[rat(-1), rat(1)]);
        assert_eq!(q, vec![rat(-2), rat(1)]);
    }

    #[test]
    fn squarefree_decomposition_recovers_multiplicities() {
        // (1 - T)^3 (1 + T)^2 (1 - 2T): factors by multiplicity.
        let mut f = expand_from_inverse_roots(&[1, 1, 1, -1, -1, 2]);
        // Scale by 7 to confirm content does not disturb the structure.
        for c in f.iter_mut() {
            *c *= rat(7);
        }
        let parts = squarefree_decomposition(&f);
        let mults: Vec<usize> = parts.iter().map(|&(_, m)| m).collect();
        assert_eq!(mults, vec![1, 2, 3]);
        let degs: Vec<usize> = parts.iter().map(|(g, _)| rat_deg(g).unwrap()).collect();
        assert_eq!(degs, vec![1, 1, 1]);
        // Multiplicity-1 factor is (monic multiple of) 1 - 2T: root at 1/2.
        let (g1, _) = &parts[0];
        assert_eq!((-&g1[0] / &g1[1]), ratio(1, 2));
    }

    #[test]
    fn simple_real_roots_to_quad_precision() {
        // prod_{k=1..10} (1 - kT): inverse roots 1..10, roots 1/k.
        let coeffs = expand_from_inverse_roots(&[1, 2, 3, 4, 5, 6, 7, 8, 9, 10]);
        let roots = rational_poly_roots(&coeffs).unwrap();
        assert_eq!(roots.len(), 10);
        let mut found: Vec<f64> = roots
            .iter()
            .map(|(z, m)| {
                assert_eq!(*m, 1);
                assert!(z.im.to_f64().abs() < 1e-24);
                z.re.to_f64()
            })
            .collect();
        found.sort_by(f64::total_cmp);
        for (k, r) in found.iter().rev().enumerate() {
            let expect = 1.0 / (k as f64 + 1.0);
            assert!((r - expect).abs() < 1e-22, "root {r} vs {expect}");
        }
    }

    #[test]
    fn conjugate_pair_on_the_critical_circle() {
        // 1 - 2T + 5T^2 has roots of modulus exactly 1/sqrt(5).
        let coeffs = vec![rat(1), rat(-2), rat(5)];
        let roots = rational_poly_roots(&coeffs).unwrap();
        assert_eq!(roots.len(), 2);
        for (z, _) in roots {
            let m2 = z.modulus_squared().to_f64();
            assert!((m2 - 0.2).abs() < 1e-28, "modulus^2 {m2}");
        }
    }

    #[test]
    fn repeated_roots_are_deflated_not_smeared() {
        // (1 - 3T)^2 (1 - 2T + 5T^2)^3: naive iteration would see the
        // multiple roots at ~1e-5 accuracy; deflation keeps them sharp.
        let base = vec![rat(1), rat(-2), rat(5)];
        let mut f = vec![BigRational::one()];
        for _ in 0..2 {
            f = mul_poly(&f, &[rat(1), rat(-3)]);
        }
        for _ in 0..3 {
            f = mul_poly(&f, &base);
        }
        let roots = rational_poly_roots(&f).unwrap();
        let mut m2 = 0;
        let mut m3 = 0;
        for (z, mult) in roots {
            match mult {
                2 => {
                    m2 += 1;
                    assert!((z.re.to_f64() - 1.0 / 3.0).abs() < 1e-25);
                    assert!(z.im.to_f64().abs() < 1e-25);
                }
                3 => {
                    m3 += 1;
                    assert!((z.modulus_squared().to_f64() - 0.2).abs() < 1e-26);
                }
                other => panic!("unexpected multiplicity {other}"),
            }
        }
        assert_eq!((m2, m3), (1, 2));
    }

    #[test]
    fn zero_roots_and_degenerate_inputs() {
        // T^2 (1 - T): zero root of multiplicity 2 reported exactly.
        let coeffs = vec![rat(0), rat(0), rat(1), rat(-1)];
        let roots = rational_poly_roots(&coeffs).unwrap();
        assert!(roots.iter().any(|(z, m)| *m == 2 && *z == Cdd::ZERO));
        assert!(roots.iter().any(|(z, m)| *m == 1 && (z.re.to_f64() - 1.0).abs() < 1e-25));
        // Constants have no roots; the zero polynomial is rejected.
        assert!(rational_poly_roots(&[rat(4)]).unwrap().is_empty());
        assert!(rational_poly_roots(&[]).is_err());
    }

    fn mul_poly(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
        let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                let t = x * y;
                out[i + j] += t;
            }
        }
        out
    }
}
