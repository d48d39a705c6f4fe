//! End-to-end pipeline tests: enumerate points, reconstruct the middle
//! polynomial, and run every verification layer on top of the same data.
//!
//! Each scenario pins its expected numbers from an independent source
//! (classical formulas or hand-derived eigenvalue data), so these tests
//! exercise the whole chain counter -> zeta -> theorems at once.

use cilab_core::counter::{self, CountOptions, CountTable};
use cilab_core::poly::{self, CiSpec};
use cilab_core::zeta::{self, MiddlePolynomial};
use cilab_core::{theorems, Error};
use num_bigint::{BigInt, BigUint};

fn spec_from(json: &str) -> CiSpec {
    poly::parse_spec(json).expect("test spec parses")
}

/// x^3 + y^3 + z^3 = 0 in P^2 over F_5.
fn fermat_cubic_f5() -> CiSpec {
    spec_from(
        r#"{"p":5,"e":1,"N":2,"polys":[{"deg":3,"terms":[
            {"c":[1],"e":[3,0,0]},{"c":[1],"e":[0,3,0]},{"c":[1],"e":[0,0,3]}]}]}"#,
    )
}

fn counts_up_to(spec: &CiSpec, max_m: u32, options: &CountOptions) -> Vec<BigUint> {
    (1..=max_m)
        .map(|m| {
            let rec = counter::count_projective(spec, m, options).expect("count fits budget");
            assert!(
                rec.anomalies.is_empty(),
                "unexpected singular point over extension {m}: {:?}",
                rec.anomalies
            );
            rec.count
        })
        .collect()
}

/// The full chain on one elliptic curve.
///
/// Over F_5 cubing is a bijection (gcd(3,4) = 1), so the Fermat cubic has
/// exactly as many points as the line x + y + z = 0, namely 6.  The trace
/// of Frobenius is therefore 0, the curve is supersingular, and the
/// eigenvalues are +-i sqrt(5): N_2 = 26 - (-10) = 36 and N_3 = 126.
#[test]
fn elliptic_curve_end_to_end() {
    let spec = fermat_cubic_f5();
    let options = CountOptions { check_smoothness: true, ..CountOptions::default() };
    let counts = counts_up_to(&spec, 3, &options);
    let expected: Vec<BigUint> =
        [6u32, 36, 126].iter().map(|&n| BigUint::from(n)).collect();
    assert_eq!(counts, expected);

    // Reconstruction from N_1, N_2 must give 1 + 5T^2 (trace zero, det q).
    let poly = MiddlePolynomial::reconstruct_full(&counts[..2], 5, 1, 2).unwrap();
    let coeffs: Vec<BigInt> = [1, 0, 5].iter().map(|&c| BigInt::from(c)).collect();
    assert_eq!(poly.coeffs(), &coeffs[..]);

    // The held-out count is predicted exactly.
    assert_eq!(poly.predict_count(3), BigInt::from(126));

    // The symmetry route needs only N_1 plus the degree-2 check and must
    // land on the same polynomial, with the sign pinned to +1.
    let sym =
        MiddlePolynomial::reconstruct_with_symmetry(&counts[..1], 5, 1, 2, 2, &counts[1])
            .unwrap();
    assert_eq!(sym.coeffs(), poly.coeffs());
    assert_eq!(sym.sign(), Some(1));

    // Critical-line report: both roots on |1/rho| = sqrt(5), exactly
    // symmetric coefficients, binomial bounds satisfied.
    let rh = zeta::verify_rh(&poly, zeta::DEFAULT_RH_TOLERANCE).unwrap();
    assert!(rh.pass && rh.symmetry && rh.moduli_ok && rh.coefficient_bounds_ok);
    assert_eq!(rh.roots.len(), 2);
    assert!(rh.worst_relative_error < 1e-20, "exact arithmetic feeds clean roots");

    // Degree of the reconstruction is twice the genus.
    let genus = theorems::check_genus_consistency(&poly, 2, &[3]).unwrap();
    assert!(genus.pass);
    assert_eq!(genus.genus, BigInt::from(1));

    // Point-count deviation bound over every counted extension.
    for (i, count) in counts.iter().enumerate() {
        let report =
            theorems::check_projective_deviation(spec.fingerprint(), 2, &[3], 5, i as u32 + 1, count)
                .unwrap();
        assert!(report.pass, "deviation bound fails over extension {}", i + 1);
    }

    // Hyperplane complement: removing x = 0 leaves the 5 affine points
    // (the section y^3 + z^3 = 0 has the single rational point [-1 : 1]),
    // so the affine count hits q on the nose.
    let aff = counter::count_affine_complement(&spec, 0, 1, &options).unwrap();
    assert_eq!(aff.section.count, BigUint::from(1u32));
    assert_eq!(aff.affine, BigUint::from(5u32));
    let report = theorems::check_affine_deviation(
        spec.fingerprint(),
        2,
        &[3],
        5,
        1,
        &aff.affine,
        -1,
    )
    .unwrap();
    assert!(report.pass && !report.vacuous);
    assert!(report.deviation == BigUint::from(0u32));
}

/// Both reconstruction routes agree on a random smooth plane quartic.
///
/// The full route consumes N_1..N_6; the symmetry route consumes N_1..N_3
/// plus check counts fetched on demand.  Their outputs must be identical,
/// and the common polynomial must predict the held-out N_7 exactly.
#[test]
fn quartic_curve_dual_route_reconstruction() {
    let options = CountOptions { check_smoothness: true, ..CountOptions::default() };
    let spec = poly::random_ci(3, 2, &[4], 11, 2, &options).expect("smooth quartic found");
    let counts = counts_up_to(&spec, 7, &options);

    let full = MiddlePolynomial::reconstruct_full(&counts[..6], 3, 1, 6).unwrap();
    let sym = MiddlePolynomial::reconstruct_with_symmetry_auto(&counts[..3], 3, 1, 6, |d| {
        Ok(counts[d as usize - 1].clone())
    })
    .unwrap();
    assert_eq!(full.coeffs(), sym.coeffs());
    assert!(sym.sign().is_some());

    assert_eq!(full.predict_count(7), BigInt::from(counts[6].clone()));

    let rh = zeta::verify_rh(&full, zeta::DEFAULT_RH_TOLERANCE).unwrap();
    assert!(rh.pass, "random smooth quartic fails the critical-line suite");

    // A smooth plane quartic has genus 3.
    let genus = theorems::check_genus_consistency(&full, 2, &[4]).unwrap();
    assert!(genus.pass);
    assert_eq!(genus.genus, BigInt::from(3));
}

/// A split quadric surface has a repeated middle eigenvalue.
///
/// x0 x1 = x2 x3 is P^1 x P^1, so N_d = (3^d + 1)^2 and both middle
/// eigenvalues equal q: the reconstruction is (1 - 3T)^2 and the root
/// finder must report one double root with |1/rho| = 3 = q^{n/2}.
#[test]
fn split_quadric_surface_repeated_eigenvalue() {
    let spec = spec_from(
        r#"{"p":3,"e":1,"N":3,"polys":[{"deg":2,"terms":[
            {"c":[1],"e":[1,1,0,0]},{"c":[-1],"e":[0,0,1,1]}]}]}"#,
    );
    let options = CountOptions { check_smoothness: true, ..CountOptions::default() };
    let counts = counts_up_to(&spec, 3, &options);
    let expected: Vec<BigUint> =
        [16u32, 100, 784].iter().map(|&n| BigUint::from(n)).collect();
    assert_eq!(counts, expected);

    let poly = MiddlePolynomial::reconstruct_full(&counts[..2], 3, 2, 2).unwrap();
    let coeffs: Vec<BigInt> = [1, -6, 9].iter().map(|&c| BigInt::from(c)).collect();
    assert_eq!(poly.coeffs(), &coeffs[..]);
    assert_eq!(poly.predict_count(3), BigInt::from(784));

    let rh = zeta::verify_rh(&poly, zeta::DEFAULT_RH_TOLERANCE).unwrap();
    assert!(rh.pass);
    assert_eq!(rh.roots.len(), 1, "double root must be deflated to one entry");
    assert_eq!(rh.roots[0].multiplicity, 2);
    assert!(rh.worst_relative_error < 1e-20);
}

/// A nodal curve leaks through none of the checks.
///
/// y^2 z = x^3 + x^2 z over F_5 has a split node at [0:0:1], so its counts
/// are exactly q^d and the would-be middle data degenerates: Newton's
/// identities give 1 - T (degree 1, not 2g = 2), reciprocal symmetry
/// fails, and the symmetry route has no consistent sign at all.  The
/// enumerator must also flag the node itself.
#[test]
fn nodal_cubic_control_fails_the_smooth_pipeline() {
    let spec = spec_from(
        r#"{"p":5,"e":1,"N":2,"polys":[{"deg":3,"terms":[
            {"c":[-1],"e":[3,0,0]},{"c":[-1],"e":[2,0,1]},{"c":[1],"e":[0,2,1]}]}]}"#,
    );
    let options = CountOptions { check_smoothness: true, ..CountOptions::default() };

    let mut counts = Vec::new();
    for m in 1..=2u32 {
        let rec = counter::count_projective(&spec, m, &options).unwrap();
        assert_eq!(rec.anomalies, vec![vec![0, 0, 1]], "the node sits at [0:0:1]");
        counts.push(rec.count);
    }
    let expected: Vec<BigUint> = [5u32, 25].iter().map(|&n| BigUint::from(n)).collect();
    assert_eq!(counts, expected);

    let poly = MiddlePolynomial::reconstruct_full(&counts, 5, 1, 2).unwrap();
    assert_eq!(poly.actual_degree(), 1, "degenerate data collapses to 1 - T");

    let rh = zeta::verify_rh(&poly, zeta::DEFAULT_RH_TOLERANCE).unwrap();
    assert!(!rh.pass && !rh.symmetry);

    let genus = theorems::check_genus_consistency(&poly, 2, &[3]).unwrap();
    assert!(!genus.pass, "degree 1 is not twice the genus of a smooth cubic");

    match MiddlePolynomial::reconstruct_with_symmetry(&counts[..1], 5, 1, 2, 2, &counts[1]) {
        Err(Error::NoConsistentSign { .. }) => {}
        other => panic!("expected no consistent sign, got {other:?}"),
    }
}

/// Counts survive a cache round trip across separate table instances.
#[test]
fn cache_round_trip_across_reopen() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("counts.csv");
    let spec = fermat_cubic_f5();
    let options = CountOptions::default();

    let cold: Vec<BigUint> = {
        let mut table = CountTable::open(&path).unwrap();
        (1..=2)
            .map(|m| {
                let rec = counter::count_with_cache(&mut table, &spec, m, &options).unwrap();
                assert!(!rec.from_cache);
                rec.count
            })
            .collect()
    };

    // A fresh table over the same file serves both counts from storage,
    // and auditing recounts them without complaint.
    let mut table = CountTable::open(&path).unwrap();
    assert_eq!(table.len(), 2);
    for (i, expected) in cold.iter().enumerate() {
        let rec = counter::count_with_cache(&mut table, &spec, i as u32 + 1, &options).unwrap();
        assert!(rec.from_cache);
        assert_eq!(&rec.count, expected);
    }
    let audit = CountOptions { audit: true, ..CountOptions::default() };
    for (i, expected) in cold.iter().enumerate() {
        let rec = counter::count_with_cache(&mut table, &spec, i as u32 + 1, &audit).unwrap();
        assert_eq!(&rec.count, expected);
    }
}
