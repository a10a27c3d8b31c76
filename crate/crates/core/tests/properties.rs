use std::f64::consts::{FRAC_PI_2, PI};

use proptest::prelude::*;

use levinson2d::bound::square_well_oracle;
use levinson2d::config::fmt_f64;
use levinson2d::potential::{Piece, PotentialSpec};
use levinson2d::radial::integrate_regular;
use levinson2d::scattering::*;

fn pieces() -> impl Strategy<Value = PotentialSpec> {
    (0.5f64..3.0, prop::collection::vec((0.05f64..1.0, -20.0f64..5.0), 1..5)).prop_map(|(a, raw)| {
        let total: f64 = raw.iter().map(|p| p.0).sum();
        let mut outer = 0.0;
        let n = raw.len();
        let pieces = raw
            .iter()
            .enumerate()
            .map(|(i, &(w, v))| {
                outer += w / total * a;
                Piece {
                    outer: if i == n - 1 { a } else { outer },
                    value: v,
                }
            })
            .collect();
        PotentialSpec::piecewise_constant(pieces)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vanishes_beyond_cutoff(spec in pieces(), t in 0.0f64..10.0) {
        let r = spec.cutoff * (1.0 + 1e-12) + t;
        prop_assert_eq!(spec.evaluate(r).unwrap().to_bits(), 0f64.to_bits());
    }

    #[test]
    fn integral_is_additive(s1 in pieces(), d in 0.1f64..10.0) {
        let s2 = PotentialSpec::square_well(d, s1.cutoff);
        let sum = s1.try_add(&s2).unwrap();
        let lhs = sum.integral_line().unwrap();
        let rhs = s1.integral_line().unwrap() + s2.integral_line().unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn config_round_trip_is_exact(spec in pieces()) {
        let back = PotentialSpec::load_str(&spec.to_config_text()).unwrap();
        for i in 0..200 {
            let r = spec.cutoff * 1.2 * (i as f64 + 0.5) / 200.0;
            prop_assert_eq!(spec.evaluate(r).unwrap().to_bits(), back.evaluate(r).unwrap().to_bits());
        }
    }

    #[test]
    fn float_text_round_trips(x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL) {
        prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), if x == 0.0 { 0 } else { x.to_bits() });
    }

    #[test]
    fn principal_range(t in -1e3f64..1e3) {
        let p = principal_mod_pi(t);
        prop_assert!(p > -FRAC_PI_2 && p <= FRAC_PI_2);
        let d = (t - p) / PI;
        prop_assert!((d - d.round()).abs() < 1e-9);
    }

    #[test]
    fn amplitude_is_even_and_parseval_holds(
        k in 0.1f64..10.0,
        eta in prop::collection::vec(-4.0f64..4.0, 1..12),
        theta in 0.0f64..PI,
    ) {
        let set = PartialWaveSet::new(k, eta).unwrap();
        prop_assert!((amplitude(&set, theta) - amplitude(&set, -theta)).norm() < 1e-12);
        let cs = cross_sections(&set, 512);
        prop_assert!(cs.total >= 0.0);
        prop_assert!((integrate_differential(&cs) - cs.total).abs() <= 1e-10 * (1.0 + cs.total));
    }

    #[test]
    fn square_well_counts_monotone_and_ordered(k0a in 0.05f64..8.0, dk in 0.0f64..2.0) {
        let mut prev_m = usize::MAX;
        for m in 0..=4u32 {
            let lo = square_well_oracle(k0a * k0a, 1.0, m).unwrap().n_minus;
            let hi = square_well_oracle((k0a + dk).powi(2), 1.0, m).unwrap().n_minus;
            prop_assert!(hi >= lo, "m={} k0a={} -> {}: {} > {}", m, k0a, k0a + dk, lo, hi);
            prop_assert!(lo <= prev_m, "m={} k0a={}", m, k0a);
            prev_m = lo;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn beta_invariant_under_rescaling(spec in pieces(), m in 0u32..5, k2 in -5.0f64..20.0, c in 1e-3f64..1e3) {
        let sol = integrate_regular(&spec, m, k2, 1000).unwrap();
        if sol.boundary.f.abs() > 1e-12 * sol.boundary.fp.abs() * spec.cutoff {
            let b = sol.beta().unwrap();
            let b2 = sol.rescaled(c).beta().unwrap();
            prop_assert!((b - b2).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn free_particle_has_no_phase(m in 0u32..6, ka in 0.01f64..10.0) {
        let p = phase_shift_principal(&PotentialSpec::zero(1.0), m, ka, 2000).unwrap();
        prop_assert!(p.eta.abs() < 1e-6);
    }

    #[test]
    fn phase_is_scale_invariant(k0a in 0.3f64..5.0, ka in 0.05f64..10.0, lambda in 0.2f64..5.0, m in 0u32..4) {
        let s1 = PotentialSpec::square_well_k0a(k0a, 1.0);
        let s2 = PotentialSpec::square_well_k0a(k0a, lambda);
        let e1 = phase_shift_principal(&s1, m, ka, 2000).unwrap().eta;
        let e2 = phase_shift_principal(&s2, m, ka / lambda, 2000).unwrap().eta;
        prop_assert!(principal_mod_pi(e1 - e2).abs() < 1e-9, "{} vs {}", e1, e2);
    }

    #[test]
    fn identity_for_random_well_pairs(d1 in 0.1f64..5.0, d2 in 0.1f64..5.0, m in 0u32..3, ka in 1.0f64..8.0) {
        let u = PotentialSpec::square_well(d1, 1.0);
        let ut = PotentialSpec::square_well(d2, 1.0);
        let c = phase_difference_identity(&u, &ut, m, ka, 4000).unwrap();
        prop_assert!(c.deviation < 1e-6, "{:?}", c);
    }
}
