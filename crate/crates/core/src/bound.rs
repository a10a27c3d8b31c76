//! Negative-energy bound states and zero-energy states per channel.
//!
//! A state at `E = -kappa^2` exists when the interior regular solution
//! matches the decaying exterior `K_m(kappa r)`. With `L(x) = x K'_m(x)/K_m(x)`
//! the matching function is written pole-free as
//! `N(kappa) = a f'(a) - L(kappa a) f(a)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::DomainError;
use crate::potential::PotentialSpec;
use crate::radial::{node_count_zero_energy, RadialError, RadialProblem};
use crate::specfun::{bessel_j, bessel_j_prime, bessel_k_log_derivative};

pub const SCAN_POINTS: usize = 2000;
/// Lower end of the regular scan, times `1/a`.
pub const KAPPA_MIN: f64 = 1e-6;
/// Lowest `kappa a` reached when a root is known to sit below `KAPPA_MIN`.
pub const KAPPA_FLOOR: f64 = 1e-300;
pub const ENERGY_TOL: f64 = 1e-10;
/// Zero-energy detection: `|a f' + m f| <= TOL_MATCH |f|`.
pub const TOL_MATCH: f64 = 1e-6;
/// Analytic zero-energy detection: `|J_{m-1}(k0 a)| <= ORACLE_ZERO_TOL`.
pub const ORACLE_ZERO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundError {
    #[error(transparent)]
    Radial(#[from] RadialError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("well depth must be positive, got {0}")]
    NonPositiveDepth(f64),
    #[error("no zero-energy crossing for m = {m} within strength [{lo}, {hi}]")]
    NoThreshold { m: u32, lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroEnergy {
    None,
    RegularNotNormalizable,
    Bound,
}

impl ZeroEnergy {
    pub fn as_str(self) -> &'static str {
        match self {
            ZeroEnergy::None => "none",
            ZeroEnergy::RegularNotNormalizable => "regular_not_normalizable",
            ZeroEnergy::Bound => "bound",
        }
    }

    /// A zero-energy solution is normalisable only for `m > 1`.
    pub fn classify(exists: bool, m: u32) -> Self {
        match (exists, m > 1) {
            (false, _) => ZeroEnergy::None,
            (true, true) => ZeroEnergy::Bound,
            (true, false) => ZeroEnergy::RegularNotNormalizable,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundStateReport {
    pub m: u32,
    /// ascending, all in `(-max|V|, 0)`
    pub energies: Vec<f64>,
    pub n_minus: usize,
    pub zero_energy: ZeroEnergy,
    pub n_total: usize,
    pub tol_match: f64,
    /// `near_threshold`: a root lies below the regular scan range;
    /// `merged_with_zero_energy`: a root within the matching tolerance of
    /// `E = 0` was attributed to the zero-energy state
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl BoundStateReport {
    fn new(m: u32, mut energies: Vec<f64>, zero_energy: ZeroEnergy, flags: Vec<String>) -> Self {
        energies.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n_minus = energies.len();
        BoundStateReport {
            m,
            n_total: n_minus + (zero_energy == ZeroEnergy::Bound) as usize,
            energies,
            n_minus,
            zero_energy,
            tol_match: TOL_MATCH,
            flags,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroEnergyProbe {
    pub class: ZeroEnergy,
    /// `a W(0) = (a f' + m f) / f` at the cutoff
    pub mismatch: f64,
}

/// Classifies the `E = 0` solution. The exterior partner is `r^-m`, or the
/// bounded constant for `m = 0`, so matching needs `a f'/f = -m`. The free
/// `m = 0` constant solution is not counted.
pub fn zero_energy_probe(spec: &PotentialSpec, m: u32, steps: usize) -> Result<ZeroEnergyProbe, BoundError> {
    if spec.max_abs() == 0.0 {
        return Ok(ZeroEnergyProbe {
            class: ZeroEnergy::None,
            mismatch: 2.0 * m as f64,
        });
    }
    let (b, _) = RadialProblem::new(spec, steps)?.boundary(m, 0.0)?;
    let num = b.a_fp() + m as f64 * b.f;
    let mismatch = if b.f == 0.0 { f64::INFINITY } else { num / b.f };
    Ok(ZeroEnergyProbe {
        class: ZeroEnergy::classify(mismatch.abs() <= TOL_MATCH, m),
        mismatch,
    })
}

struct ScanOutcome {
    kappas: Vec<f64>,
    near_threshold: bool,
}

/// Roots of `n` on `[lo, hi]` from a log-spaced sign scan, plus one root
/// below `lo` when `sign_at_zero` disagrees with `n(lo)`.
fn scan_roots<F>(n: F, lo: f64, hi: f64, sign_at_zero: f64, de_tol: f64, floor: f64) -> ScanOutcome
where
    F: Fn(f64) -> f64 + Sync,
{
    let (l0, l1) = (lo.ln(), hi.ln());
    let grid: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| (l0 + (l1 - l0) * i as f64 / (SCAN_POINTS - 1) as f64).exp())
        .collect();
    let values: Vec<f64> = grid.par_iter().map(|&k| n(k)).collect();

    let mut kappas = Vec::new();
    for i in 0..SCAN_POINTS - 1 {
        let (a, b) = (values[i], values[i + 1]);
        if a == 0.0 {
            kappas.push(grid[i]);
        } else if a * b < 0.0 {
            kappas.push(bisect(&n, grid[i], grid[i + 1], a, de_tol, false));
        }
    }
    let mut near_threshold = false;
    if sign_at_zero != 0.0 && values[0] != 0.0 && values[0].signum() != sign_at_zero {
        near_threshold = true;
        let f_floor = n(floor);
        if f_floor.signum() != values[0].signum() {
            kappas.push(bisect(&n, floor, lo, f_floor, de_tol, true));
        } else {
            // still below the floor
            kappas.push(floor);
        }
    }
    kappas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ScanOutcome { kappas, near_threshold }
}

/// Bisection to `|kappa_hi^2 - kappa_lo^2| <= de_tol`, geometric when `log_mid`.
fn bisect<F: Fn(f64) -> f64>(n: &F, mut lo: f64, mut hi: f64, mut f_lo: f64, de_tol: f64, log_mid: bool) -> f64 {
    for _ in 0..2000 {
        if hi * hi - lo * lo <= de_tol && (!log_mid || hi / lo < 1.0 + 1e-12) {
            break;
        }
        let mid = if log_mid { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = n(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Limit of `L_m(x)` as `x -> 0`.
fn k_log_derivative_at_zero(m: u32) -> f64 {
    -(m as f64)
}

/// Roots lying within the matching tolerance of `E = 0` when a zero-energy
/// solution has been detected.
fn merge_threshold(m: u32, kappas: &mut Vec<f64>, a: f64, zero: ZeroEnergy, flags: &mut Vec<String>) {
    if zero == ZeroEnergy::None {
        return;
    }
    let limit = 2.0 * (m.max(1) as f64) * TOL_MATCH;
    let before = kappas.len();
    kappas.retain(|k| (k * a).powi(2) > limit);
    if kappas.len() != before {
        flags.push("merged_with_zero_energy".into());
    }
}

/// Bound states by sign scan of the matching function on
/// `kappa in [1e-6/a, 1.01 sqrt(max|V|)]`, each root bisected to
/// `|dE| <= 1e-10`. A root below the scan range is located down to
/// `kappa a = 1e-300` and flagged `near_threshold`.
pub fn count_negative(spec: &PotentialSpec, m: u32, steps: usize) -> Result<BoundStateReport, BoundError> {
    let a = spec.cutoff;
    let vmax = spec.max_abs();
    let probe = zero_energy_probe(spec, m, steps)?;
    if vmax == 0.0 {
        return Ok(BoundStateReport::new(m, Vec::new(), probe.class, Vec::new()));
    }
    let problem = RadialProblem::new(spec, steps)?;
    let n = |kappa: f64| -> f64 {
        let (b, _) = problem
            .boundary(m, -kappa * kappa)
            .expect("validated potential integrates");
        let l = bessel_k_log_derivative(m as i32, kappa * a).expect("positive argument");
        b.a_fp() - l * b.f
    };
    let (b0, _) = problem.boundary(m, 0.0)?;
    let at_zero = b0.a_fp() - k_log_derivative_at_zero(m) * b0.f;
    let sign_at_zero = if probe.class == ZeroEnergy::None { at_zero.signum() } else { 0.0 };
    let out = scan_roots(n, KAPPA_MIN / a, 1.01 * vmax.sqrt(), sign_at_zero, ENERGY_TOL, KAPPA_FLOOR / a);

    let mut flags = Vec::new();
    if out.near_threshold {
        flags.push("near_threshold".into());
    }
    let mut kappas = out.kappas;
    merge_threshold(m, &mut kappas, a, probe.class, &mut flags);
    let energies = kappas.iter().map(|k| -k * k).filter(|&e| e > -vmax).collect();
    Ok(BoundStateReport::new(m, energies, probe.class, flags))
}

/// Closed-form square well (`J_m` inside, `K_m` outside), no ODE.
pub fn square_well_oracle(v0: f64, a: f64, m: u32) -> Result<BoundStateReport, BoundError> {
    if !(v0 > 0.0) {
        return Err(BoundError::NonPositiveDepth(v0));
    }
    let mi = m as i32;
    let k0 = v0.sqrt();
    let xi = k0 * a;
    // J_{-1} = -J_1
    let jm1 = if m == 0 { -bessel_j(1, xi)? } else { bessel_j(mi - 1, xi)? };
    let zero = ZeroEnergy::classify(jm1.abs() <= ORACLE_ZERO_TOL, m);

    let n = |kappa: f64| -> f64 {
        let qa = ((k0 - kappa) * (k0 + kappa)).max(0.0).sqrt() * a;
        let j = bessel_j(mi, qa).expect("positive argument");
        let jp = qa * bessel_j_prime(mi, qa).expect("positive argument");
        let l = bessel_k_log_derivative(mi, kappa * a).expect("positive argument");
        (jp - l * j) / j.hypot(jp)
    };
    // at kappa = 0: q a = xi
    let (j, jp) = (bessel_j(mi, xi)?, xi * bessel_j_prime(mi, xi)?);
    let at_zero = (jp + m as f64 * j) / j.hypot(jp);
    let sign_at_zero = if zero == ZeroEnergy::None { at_zero.signum() } else { 0.0 };
    let out = scan_roots(n, KAPPA_MIN / a, k0 * (1.0 - 1e-12), sign_at_zero, 1e-13, KAPPA_FLOOR / a);

    let mut flags = Vec::new();
    if out.near_threshold {
        flags.push("near_threshold".into());
    }
    let mut kappas = out.kappas;
    merge_threshold(m, &mut kappas, a, zero, &mut flags);
    let energies = kappas.iter().map(|k| -k * k).collect();
    Ok(BoundStateReport::new(m, energies, zero, flags))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub m: u32,
    pub n_scan: usize,
    pub n_sturm: usize,
    pub consistent: bool,
}

/// Compares the matching-scan count with the zero-energy node count.
pub fn cross_validate(spec: &PotentialSpec, m: u32, steps: usize) -> Result<CrossValidation, BoundError> {
    let n_scan = count_negative(spec, m, steps)?.n_minus;
    let n_sturm = node_count_zero_energy(spec, m, steps)?;
    Ok(CrossValidation {
        m,
        n_scan,
        n_sturm,
        consistent: n_scan == n_sturm,
    })
}

/// Zero-energy matching, scale-free: `(a f' + m f) / |(f, a f')|`.
fn threshold_function(shape: &PotentialSpec, m: u32, strength: f64, steps: usize) -> Result<f64, BoundError> {
    let spec = shape.with_strength(strength);
    let (b, _) = RadialProblem::new(&spec, steps)?.boundary(m, 0.0)?;
    Ok((b.a_fp() + m as f64 * b.f) / b.f.hypot(b.a_fp()))
}

/// Tunes the strength `k0 a` of `shape` to the zero-energy threshold of
/// channel `m` nearest `seed`, searching `[0.9, 1.1] * seed`. Returns the
/// weaker edge of the final bracket, so the state has not yet dipped below
/// zero energy.
pub fn tune_threshold(shape: &PotentialSpec, m: u32, seed: f64, steps: usize) -> Result<f64, BoundError> {
    let (lo, hi) = (0.9 * seed, 1.1 * seed);
    let g = |s: f64| threshold_function(shape, m, s, steps);
    let samples = 41;
    let pts: Vec<f64> = (0..samples).map(|i| lo + (hi - lo) * i as f64 / (samples - 1) as f64).collect();
    let vals: Vec<f64> = pts.iter().map(|&s| g(s)).collect::<Result<_, _>>()?;
    let mut best: Option<(f64, f64, f64)> = None;
    for i in 0..samples - 1 {
        if vals[i] == 0.0 {
            return Ok(pts[i]);
        }
        if vals[i] * vals[i + 1] < 0.0 {
            let mid = 0.5 * (pts[i] + pts[i + 1]);
            if best.is_none_or(|(a, b, _)| (mid - seed).abs() < (0.5 * (a + b) - seed).abs()) {
                best = Some((pts[i], pts[i + 1], vals[i]));
            }
        }
    }
    let (mut a, mut b, mut ga) = best.ok_or(BoundError::NoThreshold { m, lo, hi })?;
    while b - a > 1e-13 * b {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let gm = g(mid)?;
        if gm == 0.0 {
            return Ok(mid);
        }
        if gm.signum() == ga.signum() {
            a = mid;
            ga = gm;
        } else {
            b = mid;
        }
    }
    Ok(a)
}
