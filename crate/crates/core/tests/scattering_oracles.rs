use std::f64::consts::PI;

use levinson2d::potential::PotentialSpec;
use levinson2d::radial::DEFAULT_STEPS;
use levinson2d::scattering::*;
use levinson2d::specfun::{bessel_j, bessel_j_prime, bessel_y, bessel_y_prime};

/// Closed-form square-well phase: interior `J_m(q r)`, `q^2 = k^2 + V0`.
fn square_well_eta(v0: f64, a: f64, m: i32, k: f64) -> f64 {
    let q = (k * k + v0).sqrt();
    let beta = q * a * bessel_j_prime(m, q * a).unwrap() / bessel_j(m, q * a).unwrap();
    let rho = k * a;
    let num = rho * bessel_j_prime(m, rho).unwrap() - beta * bessel_j(m, rho).unwrap();
    let den = rho * bessel_y_prime(m, rho).unwrap() - beta * bessel_y(m, rho).unwrap();
    principal_mod_pi((num / den).atan())
}

#[test]
fn square_well_m0_k1() {
    let spec = PotentialSpec::square_well(1.0, 1.0);
    let p = phase_shift_principal(&spec, 0, 1.0, DEFAULT_STEPS).unwrap();
    let beta = 2f64.sqrt() * bessel_j_prime(0, 2f64.sqrt()).unwrap() / bessel_j(0, 2f64.sqrt()).unwrap();
    // high-precision reference values
    assert!((beta + 1.377_105_350_174_29).abs() < 1e-12, "beta = {beta}");
    assert!((p.tan_eta - 0.679_818_233_897_589).abs() < 1e-8, "tan eta = {}", p.tan_eta);
    assert!((p.eta - square_well_eta(1.0, 1.0, 0, 1.0)).abs() < 1e-9);
}

#[test]
fn ode_matches_closed_form_square_well() {
    let ks = log_grid(0.1, 20.0, 50).unwrap();
    for &v0 in &[1.0, 9.0] {
        let spec = PotentialSpec::square_well(v0, 1.0);
        for m in 0..=4u32 {
            for &k in &ks {
                let ode = phase_shift_principal(&spec, m, k, DEFAULT_STEPS).unwrap().eta;
                let exact = square_well_eta(v0, 1.0, m as i32, k);
                let d = principal_mod_pi(ode - exact);
                assert!(d.abs() < 1e-6, "V0={v0} m={m} k={k}: {ode} vs {exact}");
            }
        }
    }
}

#[test]
fn identity_holds_for_two_wells() {
    let u = PotentialSpec::square_well(1.1, 1.0);
    let ut = PotentialSpec::square_well(1.0, 1.0);
    let c = phase_difference_identity(&u, &ut, 0, 2.0, DEFAULT_STEPS).unwrap();
    assert!(c.deviation < 1e-6, "{c:?}");
}

#[test]
fn identity_against_free_wave() {
    let spec = PotentialSpec::square_well(1.0, 1.0);
    let zero = PotentialSpec::zero(1.0);
    for m in 0..=2u32 {
        for &k in &[1.0, 2.0, 5.0, 10.0] {
            let c = phase_difference_identity(&spec, &zero, m, k, DEFAULT_STEPS).unwrap();
            assert!(c.eta_tilde.abs() < 1e-6);
            assert!(c.deviation < 1e-6, "m={m} k={k}: {c:?}");
        }
    }
}

#[test]
fn normalised_free_solution_is_bessel() {
    let (r, u, eta) = normalized_solution(&PotentialSpec::zero(1.0), 1, 3.0, DEFAULT_STEPS).unwrap();
    assert!(eta.abs() < 1e-8);
    for i in (0..r.len()).step_by(397) {
        let exact = free_wave(1, 3.0, r[i]).unwrap();
        assert!((u[i] - exact).abs() < 1e-7, "r={} {} vs {exact}", r[i], u[i]);
    }
}

#[test]
fn highk_law_for_square_wells() {
    for &v0 in &[0.5, 1.0, 2.0] {
        let spec = PotentialSpec::square_well(v0, 1.0);
        let s = phase_shift_principal(&spec, 0, 50.0, DEFAULT_STEPS).unwrap().eta.sin();
        let est = highk_estimate(&spec, 50.0).unwrap();
        assert!(((s - est) / est).abs() < 0.05, "V0={v0}: {s} vs {est}");
    }
}

#[test]
fn curve_is_anchored_and_continuous() {
    let spec = PotentialSpec::square_well_k0a(3.0, 1.0);
    let grid = default_k_grid(1.0);
    let curve = phase_curve(&spec, 0, &grid, DEFAULT_STEPS).unwrap();
    let last = *curve.eta.last().unwrap();
    assert!(last > -PI / 2.0 && last <= PI / 2.0);
    assert!(curve.certificate.ok() && curve.certificate.refined);
    assert!(curve.eta.windows(2).all(|w| (w[1] - w[0]).abs() < PI / 2.0));
    let fit = threshold_extrapolate(&curve).unwrap();
    assert_eq!(fit.n_hat, 1, "{fit:?}");
}

#[test]
fn threshold_fits_for_square_well_family() {
    let grid = default_k_grid(1.0);
    let expected = [
        (0.5, [1, 0, 0, 0]),
        (1.0, [1, 0, 0, 0]),
        (2.0, [1, 0, 0, 0]),
        (3.0, [1, 1, 0, 0]),
        (4.5, [2, 1, 1, 0]),
    ];
    for (k0a, ns) in expected {
        let spec = PotentialSpec::square_well_k0a(k0a, 1.0);
        for m in 0..4u32 {
            let curve = phase_curve(&spec, m, &grid, DEFAULT_STEPS).unwrap();
            let fit = threshold_extrapolate(&curve).unwrap();
            let target = ns[m as usize] as f64 * PI;
            let tol = match fit.variant {
                Branch::Power => 0.05,
                Branch::Log => 0.15,
            };
            assert_eq!(fit.n_hat, ns[m as usize] as i64, "k0a={k0a} m={m}: {fit:?}");
            assert!((fit.eta0 - target).abs() <= tol, "k0a={k0a} m={m}: {fit:?}");
            if m == 0 {
                assert_eq!(fit.variant, Branch::Log, "k0a={k0a}: {fit:?}");
            } else {
                assert_eq!(fit.variant, Branch::Power, "k0a={k0a} m={m}: {fit:?}");
            }
        }
    }
}

#[test]
fn parseval_for_synthetic_and_square_well() {
    let set = PartialWaveSet::new(1.3, vec![0.4, -1.1, 0.7, 2.9, -0.2, 0.05]).unwrap();
    let cs = cross_sections(&set, 512);
    assert!((integrate_differential(&cs) - cs.total).abs() < 1e-10);

    let spec = PotentialSpec::square_well(1.0, 1.0);
    let m_max = default_m_max(&spec, 1.0, DEFAULT_STEPS).unwrap();
    let eta = (0..=m_max)
        .map(|m| phase_shift_principal(&spec, m, 1.0, DEFAULT_STEPS).unwrap().eta)
        .collect();
    let set = PartialWaveSet::new(1.0, eta).unwrap();
    let cs = cross_sections(&set, 512);
    assert!((integrate_differential(&cs) - cs.total).abs() < 1e-10);
}

#[test]
fn refining_the_grid_keeps_branch_integers() {
    let spec = PotentialSpec::square_well_k0a(4.5, 1.0);
    let coarse = log_grid(1e-3, 50.0, 200).unwrap();
    let fine = log_grid(1e-3, 50.0, 399).unwrap();
    let c = phase_curve(&spec, 1, &coarse, DEFAULT_STEPS).unwrap();
    let f = phase_curve(&spec, 1, &fine, DEFAULT_STEPS).unwrap();
    for (i, &k) in c.k.iter().enumerate() {
        let j = fine.iter().position(|&x| (x - k).abs() <= 1e-12 * k).unwrap();
        assert!((c.eta[i] - f.eta[j]).abs() < 1e-9, "k={k}");
    }
}

#[test]
fn csv_has_expected_columns() {
    let spec = PotentialSpec::square_well(1.0, 1.0);
    let curve = phase_curve(&spec, 2, &log_grid(0.5, 5.0, 8).unwrap(), DEFAULT_STEPS).unwrap();
    let csv = curve.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("m,k,eta,tan_eta,sin_eta"));
    assert_eq!(lines.count(), 8);
}
