//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::f64::consts::FRAC_2_PI;
use std::fs;
use std::process::Command;

use levinson2d::bound::{count_negative, square_well_oracle, tune_threshold, ZeroEnergy};
use levinson2d::levinson::{sweep, verify, Status, VerifyOptions};
use levinson2d::potential::PotentialSpec;
use levinson2d::radial::{node_count_zero_energy, DEFAULT_STEPS};
use levinson2d::scattering::*;
use levinson2d::specfun::*;

const FAMILY: [f64; 5] = [0.5, 1.0, 2.0, 3.0, 4.5];

type SpecFn = fn(i32, f64) -> Result<f64, levinson2d::error::DomainError>;
type Criterion = fn() -> (bool, String);

// --- independent oracles -----------------------------------------------

/// Term-by-term ascending series for J_m.
fn j_series(m: i32, x: f64) -> f64 {
    let mut term = (0.5 * x).powi(m) / (1..=m).map(f64::from).product::<f64>();
    let mut sum = term;
    for k in 1..100 {
        term *= -(0.25 * x * x) / (k as f64 * (k + m) as f64);
        sum += term;
    }
    sum
}

/// First positive zero of J_m by scanning the series and bisecting.
fn first_zero_series(m: i32) -> f64 {
    let mut lo = 0.5;
    while j_series(m, lo) * j_series(m, lo + 0.1) > 0.0 {
        lo += 0.1;
    }
    let mut hi = lo + 0.1;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if j_series(m, lo) * j_series(m, mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Closed-form square-well phase: interior J_m(qr), q^2 = k^2 + V0.
fn square_well_eta(v0: f64, m: i32, k: f64) -> f64 {
    let q = (k * k + v0).sqrt();
    let beta = q * bessel_j_prime(m, q).unwrap() / bessel_j(m, q).unwrap();
    let num = k * bessel_j_prime(m, k).unwrap() - beta * bessel_j(m, k).unwrap();
    let den = k * bessel_y_prime(m, k).unwrap() - beta * bessel_y(m, k).unwrap();
    principal_mod_pi((num / den).atan())
}

// --- criteria ------------------------------------------------------------

fn levinson_family() -> (bool, String) {
    let opts = VerifyOptions::default();
    let mut worst: f64 = 0.0;
    for &k0a in &FAMILY {
        let spec = PotentialSpec::square_well_k0a(k0a, 1.0);
        for m in 0..4u32 {
            let v = verify(&spec, m, &opts).unwrap();
            let oracle = square_well_oracle(k0a * k0a, 1.0, m).unwrap();
            if v.status != Status::Pass || v.n_total != oracle.n_total {
                return (false, format!("k0a={k0a} m={m}: {:?}, oracle n={}", v.status, oracle.n_total));
            }
            worst = worst.max(v.residual.unwrap());
        }
    }
    (true, format!("25/25 pass, worst residual {worst:.2e} rad"))
}

fn threshold_crossings() -> (bool, String) {
    let j01 = first_zero_series(0);
    let j11 = first_zero_series(1);
    let zeros_ok = (j01 - bessel_j_zero(0, 1).unwrap()).abs() < 1e-6 && (j11 - bessel_j_zero(1, 1).unwrap()).abs() < 1e-6;
    let shape = PotentialSpec::square_well(1.0, 1.0);
    let opts = VerifyOptions::default();
    let d1: Vec<f64> = (0..6).map(|i| 2.0 + 0.2 * i as f64).collect();
    let d2: Vec<f64> = (0..5).map(|i| 3.4 + 0.2 * i as f64).collect();
    let t1 = sweep(&shape, &[1], &d1, &opts);
    let t2 = sweep(&shape, &[2], &d2, &opts);
    let ok1 = t1.crossings.len() == 1 && t1.crossings[0].brackets(j01) && t1.crossings[0].n_lo == 0;
    let ok2 = t2.crossings.len() == 1 && t2.crossings[0].brackets(j11) && t2.crossings[0].n_lo == 0;
    let c = |t: &levinson2d::levinson::SweepTable| {
        t.crossings
            .iter()
            .map(|c| format!("({:.1}, {:.1}]", c.depth_lo, c.depth_hi))
            .collect::<Vec<_>>()
            .join(" ")
    };
    (
        zeros_ok && ok1 && ok2,
        format!("n1 0->1 in {} around {j01:.6}; n2 0->1 in {} around {j11:.6}", c(&t1), c(&t2)),
    )
}

fn zero_energy_bookkeeping() -> (bool, String) {
    let shape = PotentialSpec::square_well(1.0, 1.0);
    let j11 = bessel_j_zero(1, 1).unwrap();
    let j01 = bessel_j_zero(0, 1).unwrap();
    let s2 = tune_threshold(&shape, 2, j11, DEFAULT_STEPS).unwrap();
    let r2 = count_negative(&shape.with_strength(s2), 2, DEFAULT_STEPS).unwrap();
    let s1 = tune_threshold(&shape, 1, j01, DEFAULT_STEPS).unwrap();
    let r1 = count_negative(&shape.with_strength(s1), 1, DEFAULT_STEPS).unwrap();
    let ok = r2.zero_energy == ZeroEnergy::Bound
        && r2.n_total == r2.n_minus + 1
        && r1.zero_energy == ZeroEnergy::RegularNotNormalizable
        && r1.n_total == r1.n_minus;
    (
        ok,
        format!(
            "m=2 at {s2:.9}: {} (target {}pi); m=1 at {s1:.9}: {} (target {}pi)",
            r2.zero_energy.as_str(),
            r2.n_total,
            r1.zero_energy.as_str(),
            r1.n_total
        ),
    )
}

fn matching_fidelity() -> (bool, String) {
    let ks = log_grid(0.1, 20.0, 50).unwrap();
    let mut worst: f64 = 0.0;
    for &v0 in &[1.0, 4.5 * 4.5] {
        let spec = PotentialSpec::square_well(v0, 1.0);
        for m in 0..=4u32 {
            for &k in &ks {
                let ode = phase_shift_principal(&spec, m, k, DEFAULT_STEPS).unwrap().eta;
                worst = worst.max(principal_mod_pi(ode - square_well_eta(v0, m as i32, k)).abs());
            }
        }
    }
    (worst <= 1e-6, format!("max |d eta| = {worst:.2e} (tol 1e-6)"))
}

fn integral_identity() -> (bool, String) {
    let spec = PotentialSpec::square_well(1.0, 1.0);
    let zero = PotentialSpec::zero(1.0);
    let mut worst: f64 = 0.0;
    for m in 0..=2u32 {
        for &ka in &[1.0, 2.0, 5.0, 10.0] {
            let c = phase_difference_identity(&spec, &zero, m, ka, DEFAULT_STEPS).unwrap();
            let sin_eta = phase_shift_principal(&spec, m, ka, DEFAULT_STEPS).unwrap().eta.sin();
            worst = worst.max((sin_eta - c.rhs).abs());
        }
    }
    (worst <= 1e-6, format!("max |sin eta - integral| = {worst:.2e} (tol 1e-6)"))
}

fn high_energy_law() -> (bool, String) {
    let k = 50.0;
    let mut worst: f64 = 0.0;
    for &v0 in &[0.5, 1.0, 2.0] {
        let spec = PotentialSpec::square_well(v0, 1.0);
        let s = phase_shift_principal(&spec, 0, k, DEFAULT_STEPS).unwrap().eta.sin();
        let law = v0 / (2.0 * k);
        worst = worst.max(((s - law) / law).abs());
    }
    (worst <= 0.05, format!("max relative deviation {:.2}% (tol 5%)", 100.0 * worst))
}

fn parseval() -> (bool, String) {
    let set = PartialWaveSet::new(1.3, vec![0.4, -1.1, 0.7, 2.9, -0.2, 0.05]).unwrap();
    let cs = cross_sections(&set, 512);
    let d1 = (integrate_differential(&cs) - cs.total).abs();

    let spec = PotentialSpec::square_well(1.0, 1.0);
    let m_max = default_m_max(&spec, 1.0, DEFAULT_STEPS).unwrap();
    let eta = (0..=m_max)
        .map(|m| phase_shift_principal(&spec, m, 1.0, DEFAULT_STEPS).unwrap().eta)
        .collect();
    let cs = cross_sections(&PartialWaveSet::new(1.0, eta).unwrap(), 512);
    let d2 = (integrate_differential(&cs) - cs.total).abs();
    (
        d1 <= 1e-10 && d2 <= 1e-10,
        format!("synthetic {d1:.1e}, square well (M={m_max}) {d2:.1e} (tol 1e-10)"),
    )
}

fn oracle_equivalence() -> (bool, String) {
    for &k0a in &FAMILY {
        let spec = PotentialSpec::square_well_k0a(k0a, 1.0);
        for m in 0..4u32 {
            let ode = count_negative(&spec, m, DEFAULT_STEPS).unwrap().n_minus;
            let exact = square_well_oracle(k0a * k0a, 1.0, m).unwrap().n_minus;
            let sturm = node_count_zero_energy(&spec, m, DEFAULT_STEPS).unwrap();
            if ode != exact || ode != sturm {
                return (false, format!("k0a={k0a} m={m}: ode {ode}, analytic {exact}, sturm {sturm}"));
            }
        }
    }
    (true, "25/25 agree (scan, analytic, Sturm)".into())
}

fn special_functions() -> (bool, String) {
    let mut wr: f64 = 0.0;
    for m in 0..=10 {
        for i in 0..=499 {
            let x = 0.1 + i as f64 * (49.9 / 499.0);
            let w = bessel_j(m + 1, x).unwrap() * bessel_y(m, x).unwrap() - bessel_j(m, x).unwrap() * bessel_y(m + 1, x).unwrap();
            wr = wr.max((w - FRAC_2_PI / x).abs());
        }
    }
    let h = 1e-5;
    let mut fd: f64 = 0.0;
    for m in 0..=5 {
        for &x in &[0.3, 1.0, 2.5, 7.0, 20.0] {
            let pairs: [(SpecFn, SpecFn); 3] = [(bessel_j, bessel_j_prime), (bessel_y, bessel_y_prime), (bessel_k, bessel_k_prime)];
            for (f, fp) in pairs {
                let num = (f(m, x + h).unwrap() - f(m, x - h).unwrap()) / (2.0 * h);
                let d = fp(m, x).unwrap();
                fd = fd.max((num - d).abs() / d.abs().max(1.0));
            }
        }
    }
    let mut seam: f64 = 0.0;
    for &s in &[SERIES_SEAM, ASYMPTOTIC_SEAM] {
        let below = s * (1.0 - 1e-15);
        let dx = s - below;
        for m in 0..6 {
            let lo = cylinder_pair(m, below).unwrap();
            let hi = cylinder_pair(m, s).unwrap();
            seam = seam
                .max((lo.j + lo.jp * dx - hi.j).abs())
                .max((lo.y + lo.yp * dx - hi.y).abs())
                .max((lo.jp - hi.jp).abs())
                .max((lo.yp - hi.yp).abs());
        }
    }
    (
        wr <= 1e-10 && fd <= 1e-6 && seam <= 1e-11,
        format!("Wronskian {wr:.1e} (1e-10), derivative {fd:.1e} (1e-6), seam {seam:.1e} (1e-11)"),
    )
}

fn determinism() -> (bool, String) {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(
        dir.join("c.cfg"),
        "potential.kind = square_well\npotential.depth = 9\npotential.radius = 1\nchannels.m_max = 3\n",
    )
    .unwrap();
    let bin = env!("CARGO_BIN_EXE_levinson2d");
    let mut codes = Vec::new();
    for (out, threads) in [("t1", "1"), ("t8", "8"), ("t1b", "1")] {
        let st = Command::new(bin)
            .args(["verify", "--config", "c.cfg", "--out", out, "--threads", threads])
            .current_dir(dir)
            .output()
            .unwrap();
        codes.push(st.status.code());
    }
    let mut same = true;
    for f in ["levinson.json", "levinson.txt"] {
        let a = fs::read(dir.join("t1").join(f)).unwrap();
        same &= a == fs::read(dir.join("t8").join(f)).unwrap();
        same &= a == fs::read(dir.join("t1b").join(f)).unwrap();
    }
    (
        same && codes.iter().all(|c| *c == Some(0)),
        format!("threads 1/8/1 byte-identical: {same}, exit codes {codes:?}"),
    )
}

fn main() {
    let criteria: [(&str, Criterion); 10] = [
        ("levinson identity, square-well family", levinson_family),
        ("threshold crossings", threshold_crossings),
        ("zero-energy bookkeeping", zero_energy_bookkeeping),
        ("matching-formula fidelity", matching_fidelity),
        ("exact integral identity", integral_identity),
        ("high-energy law", high_energy_law),
        ("parseval consistency", parseval),
        ("oracle equivalence", oracle_equivalence),
        ("special-function suite", special_functions),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (ok, detail) = check();
        if !ok {
            failed += 1;
        }
        println!("{} {:>2}. {name}: {detail}", if ok { "PASS" } else { "FAIL" }, i + 1);
    }
    println!("acceptance: {}/{} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
