//! Phase shifts, unwrapped phase curves, threshold fits, amplitudes and
//! cross sections, and the two integral identities for the phase shift.
//!
//! Exterior solution convention: `R_m = sqrt(k) [cos(eta) J_m(kr) - sin(eta) Y_m(kr)]`
//! for `r > a`, so `u = sqrt(r) R_m` tends to
//! `sqrt(2/pi) cos(kr - m pi/2 - pi/4 + eta)`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::fmt_f64;
use crate::error::DomainError;
use crate::potential::{PotentialError, PotentialSpec};
use crate::radial::{Boundary, RadialError, RadialProblem};
use crate::specfun::{bessel_j, cylinder_pair};

/// Default wavenumber grid, in units of `1/a`.
pub const DEFAULT_KA_MIN: f64 = 1e-3;
pub const DEFAULT_KA_MAX: f64 = 50.0;
pub const DEFAULT_K_POINTS: usize = 400;

/// Threshold fits use the lowest decade of the grid and need this many points.
pub const MIN_FIT_POINTS: usize = 25;
/// A fit whose RMS residual exceeds this is not accepted.
pub const MAX_FIT_RESIDUAL: f64 = 0.05;
/// The smallest grid point must satisfy `k a <= MAX_THRESHOLD_KA`.
pub const MAX_THRESHOLD_KA: f64 = 1e-2;
/// `highk_estimate` refuses `k a` below this.
pub const MIN_HIGHK_KA: f64 = 10.0;
/// Contribution to `sigma_t` below which channels are dropped by default.
pub const CHANNEL_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScatteringError {
    #[error(transparent)]
    Radial(#[from] RadialError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error("wavenumber must be positive, got {0}")]
    NonPositiveK(f64),
    #[error("k grid: {0}")]
    BadGrid(String),
    #[error("phase jumps by {jump:.3} rad between k = {k_lo:e} and k = {k_hi:e}; refine the grid")]
    Continuity { k_lo: f64, k_hi: f64, jump: f64 },
    #[error("k a = {ka} is below {MIN_HIGHK_KA}, outside the high-energy regime")]
    HighKOutOfRange { ka: f64 },
    #[error("k a = {ka} too small to extract the asymptotic amplitude (need >= 0.5)")]
    NormalizationRange { ka: f64 },
    #[error("channel curves do not share k = {k}")]
    MismatchedK { k: f64 },
    #[error("channels must be m = 0, 1, 2, ... in order")]
    ChannelOrder,
}

/// Principal-branch phase shift at one wavenumber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrincipalPhase {
    /// `tan(eta)`; infinite when the denominator of the matching formula vanishes
    pub tan_eta: f64,
    /// in `(-pi/2, pi/2]`
    pub eta: f64,
}

/// Maps an angle to `(-pi/2, pi/2]` modulo `pi`.
pub fn principal_mod_pi(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(PI);
    if t > FRAC_PI_2 {
        t -= PI;
    }
    t
}

/// Matching formula from the pole-free pair `(f(a), a f'(a))`:
/// `tan eta = [rho J' f - a f' J] / [rho Y' f - a f' Y]`, which equals the
/// textbook form with `beta = a f'/f` after dividing through by `f`.
pub fn phase_from_pair(f: f64, a_fp: f64, m: u32, rho: f64) -> Result<PrincipalPhase, ScatteringError> {
    if !(rho > 0.0) {
        return Err(ScatteringError::NonPositiveK(rho));
    }
    let c = cylinder_pair(m as i32, rho)?;
    let num = rho * c.jp * f - a_fp * c.j;
    let den = rho * c.yp * f - a_fp * c.y;
    let eta = if den == 0.0 {
        FRAC_PI_2
    } else {
        principal_mod_pi(num.atan2(den))
    };
    let tan_eta = if den == 0.0 { f64::INFINITY } else { num / den };
    Ok(PrincipalPhase { tan_eta, eta })
}

/// Same as [`phase_from_pair`] given `beta` directly.
pub fn phase_from_beta(beta: f64, m: u32, rho: f64) -> Result<PrincipalPhase, ScatteringError> {
    phase_from_pair(1.0, beta, m, rho)
}

pub fn phase_from_boundary(b: &Boundary, m: u32, k: f64) -> Result<PrincipalPhase, ScatteringError> {
    phase_from_pair(b.f, b.a_fp(), m, k * b.radius)
}

pub fn phase_shift_principal(spec: &PotentialSpec, m: u32, k: f64, steps: usize) -> Result<PrincipalPhase, ScatteringError> {
    if !(k > 0.0) {
        return Err(ScatteringError::NonPositiveK(k));
    }
    let problem = RadialProblem::new(spec, steps)?;
    let (b, _) = problem.boundary(m, k * k)?;
    phase_from_boundary(&b, m, k)
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, ScatteringError> {
    if !(lo > 0.0 && hi > lo && lo.is_finite() && hi.is_finite()) {
        return Err(ScatteringError::BadGrid(format!("need 0 < k_min < k_max, got [{lo}, {hi}]")));
    }
    if n < 2 {
        return Err(ScatteringError::BadGrid(format!("need at least 2 points, got {n}")));
    }
    let (l0, l1) = (lo.ln(), hi.ln());
    let mut g: Vec<f64> = (0..n)
        .map(|i| (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp())
        .collect();
    g[0] = lo;
    g[n - 1] = hi;
    Ok(g)
}

/// The default grid `[1e-3, 50] / a`, 400 points.
pub fn default_k_grid(cutoff: f64) -> Vec<f64> {
    log_grid(DEFAULT_KA_MIN / cutoff, DEFAULT_KA_MAX / cutoff, DEFAULT_K_POINTS).expect("valid default grid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub potential: String,
    pub r_steps: usize,
    pub k_points: usize,
    /// high-energy estimate of `eta(k_max)` the anchor was chosen against
    pub anchor_estimate: f64,
}

/// Result of checking the unwrapped curve for branch jumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityCertificate {
    pub max_jump: f64,
    /// first interval `(k_lo, k_hi)` that failed, if any
    pub violation: Option<(f64, f64)>,
    /// whether the 2x refined grid was checked as well
    pub refined: bool,
}

impl ContinuityCertificate {
    pub fn ok(&self) -> bool {
        self.violation.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseShiftCurve {
    pub m: u32,
    pub k: Vec<f64>,
    /// unwrapped, continuous in `k`
    pub eta: Vec<f64>,
    /// principal-branch `tan(eta)` as returned by the matching formula
    pub tan_eta: Vec<f64>,
    pub anchor_k: f64,
    pub cutoff: f64,
    pub meta: CurveMeta,
    pub certificate: ContinuityCertificate,
}

impl PhaseShiftCurve {
    /// CSV with header `m,k,eta,tan_eta,sin_eta`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("m,k,eta,tan_eta,sin_eta\n");
        for i in 0..self.k.len() {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                self.m,
                fmt_f64(self.k[i]),
                fmt_f64(self.eta[i]),
                fmt_f64(self.tan_eta[i]),
                fmt_f64(self.eta[i].sin())
            ));
        }
        s
    }

    pub fn check_continuity(&self) -> Result<(), ScatteringError> {
        match self.certificate.violation {
            None => Ok(()),
            Some((k_lo, k_hi)) => Err(ScatteringError::Continuity {
                k_lo,
                k_hi,
                jump: self.certificate.max_jump,
            }),
        }
    }

    /// Value at a grid point matching `k` exactly.
    pub fn eta_at(&self, k: f64) -> Option<f64> {
        self.k.iter().position(|&x| x == k).map(|i| self.eta[i])
    }
}

/// Picks `p + j pi` nearest to `target`.
fn nearest_branch(p: f64, target: f64) -> f64 {
    p + ((target - p) / PI).round() * PI
}

/// Unwraps principal values from the top of the grid downward. Returns the
/// curve and the largest neighbour jump with its index.
fn unwrap_downward(principal: &[f64], anchor: f64) -> (Vec<f64>, f64, usize) {
    let n = principal.len();
    let mut eta = vec![0.0; n];
    eta[n - 1] = anchor;
    let mut max_jump = 0.0;
    let mut worst = n - 1;
    for i in (0..n - 1).rev() {
        eta[i] = nearest_branch(principal[i], eta[i + 1]);
        let jump = (eta[i] - eta[i + 1]).abs();
        if jump > max_jump {
            max_jump = jump;
            worst = i;
        }
    }
    (eta, max_jump, worst)
}

fn principal_values(problem: &RadialProblem, m: u32, ks: &[f64]) -> Result<Vec<PrincipalPhase>, ScatteringError> {
    ks.par_iter()
        .map(|&k| {
            let (b, _) = problem.boundary(m, k * k)?;
            phase_from_boundary(&b, m, k)
        })
        .collect()
}

/// Unwrapped phase curve without failing on a continuity violation; the
/// certificate records the outcome. With `refine`, principal values at the
/// geometric midpoints are computed too and the interleaved grid must
/// reproduce every coarse branch choice.
pub fn phase_curve_unchecked(
    spec: &PotentialSpec,
    m: u32,
    k_grid: &[f64],
    steps: usize,
    refine: bool,
) -> Result<PhaseShiftCurve, ScatteringError> {
    if k_grid.len() < 2 {
        return Err(ScatteringError::BadGrid("need at least 2 points".into()));
    }
    if !(k_grid[0] > 0.0) || k_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ScatteringError::BadGrid("k must be positive and strictly increasing".into()));
    }
    let problem = RadialProblem::new(spec, steps)?;
    let coarse = principal_values(&problem, m, k_grid)?;
    let p: Vec<f64> = coarse.iter().map(|c| c.eta).collect();

    let k_max = *k_grid.last().unwrap();
    let estimate = -spec.integral_line()? / (2.0 * k_max);
    let anchor = nearest_branch(p[p.len() - 1], estimate);
    let (eta, max_jump, worst) = unwrap_downward(&p, anchor);

    let mut violation = (max_jump >= FRAC_PI_2).then(|| (k_grid[worst], k_grid[worst + 1]));
    let mut max_seen = max_jump;
    if refine && violation.is_none() {
        let mids: Vec<f64> = k_grid.windows(2).map(|w| (w[0] * w[1]).sqrt()).collect();
        let mid_p = principal_values(&problem, m, &mids)?;
        let mut fine = Vec::with_capacity(2 * p.len() - 1);
        for i in 0..p.len() {
            fine.push(p[i]);
            if i < mids.len() {
                fine.push(mid_p[i].eta);
            }
        }
        let (fine_eta, fine_jump, fine_worst) = unwrap_downward(&fine, anchor);
        max_seen = max_seen.max(fine_jump);
        if fine_jump >= FRAC_PI_2 {
            let i = fine_worst / 2;
            violation = Some((k_grid[i], k_grid[(i + 1).min(k_grid.len() - 1)]));
        } else if let Some(i) = (0..p.len()).find(|&i| fine_eta[2 * i] != eta[i]) {
            let lo = i.min(k_grid.len() - 2);
            violation = Some((k_grid[lo], k_grid[lo + 1]));
        }
    }

    Ok(PhaseShiftCurve {
        m,
        k: k_grid.to_vec(),
        eta,
        tan_eta: coarse.iter().map(|c| c.tan_eta).collect(),
        anchor_k: k_max,
        cutoff: spec.cutoff,
        meta: CurveMeta {
            potential: spec.fingerprint(),
            r_steps: steps,
            k_points: k_grid.len(),
            anchor_estimate: estimate,
        },
        certificate: ContinuityCertificate {
            max_jump: max_seen,
            violation,
            refined: refine,
        },
    })
}

/// Unwrapped phase curve, anchored at the largest `k` by the high-energy
/// estimate and continued downward. Fails if the 2x-refined continuity
/// check trips.
pub fn phase_curve(spec: &PotentialSpec, m: u32, k_grid: &[f64], steps: usize) -> Result<PhaseShiftCurve, ScatteringError> {
    let curve = phase_curve_unchecked(spec, m, k_grid, steps, true)?;
    curve.check_continuity()?;
    Ok(curve)
}

// ---------------------------------------------------------------------------
// Threshold extrapolation

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `tan(eta) ~ b (ka)^{2p}`
    Power,
    /// `tan(eta) ~ pi / (2 ln(ka))`
    Log,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Power => "power",
            Branch::Log => "log",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdFitModel {
    pub variant: Branch,
    /// `round(eta0 / pi)`
    pub n_hat: i64,
    /// extrapolated `eta(0)`
    pub eta0: f64,
    /// `b` (power) or the log amplitude `A` (log)
    pub coefficient: f64,
    /// `2p`, power variant only
    pub exponent: Option<u32>,
    /// shift `s` in `ln(ka) + s`, log variant only
    pub log_shift: Option<f64>,
    /// RMS residual of the chosen variant (radians)
    pub residual: f64,
    /// RMS residual of the variant not chosen
    pub other_residual: f64,
    pub window_points: usize,
}

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
pub enum FitError {
    #[error("smallest k a = {0} exceeds {MAX_THRESHOLD_KA}")]
    NotAtThreshold(f64),
    #[error("lowest decade holds {0} points, need {MIN_FIT_POINTS}")]
    WindowTooSmall(usize),
    #[error("no threshold model fits (best residual {0:.3e} rad)")]
    NoModelFits(f64),
}

struct LinearFit {
    c0: f64,
    c1: f64,
    rms: f64,
}

/// Least squares for `y = c0 + c1 t`.
fn fit_line(t: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = t.len() as f64;
    let mt = t.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let stt: f64 = t.iter().map(|t| (t - mt).powi(2)).sum();
    let sty: f64 = t.iter().zip(y).map(|(t, y)| (t - mt) * (y - my)).sum();
    let scale = t.iter().map(|t| t.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let (c1, c0) = if stt <= 1e-24 * scale * scale * n {
        (0.0, my)
    } else {
        let c1 = sty / stt;
        (c1, my - c1 * mt)
    };
    let ss: f64 = t.iter().zip(y).map(|(t, y)| (y - c0 - c1 * t).powi(2)).sum();
    let rms = (ss / n).sqrt();
    rms.is_finite().then_some(LinearFit { c0, c1, rms })
}

/// `pi/2 + atan((2/pi)(ln rho + s))`: rises from 0 at threshold, so
/// `eta = eta0 - A * log_basis` has `eta -> eta0` as `rho -> 0`, and
/// `A = 1` reproduces `tan(eta - eta0) = pi / (2 (ln rho + s))` exactly.
fn log_basis(ln_rho: f64, s: f64) -> f64 {
    FRAC_PI_2 + ((ln_rho + s) / FRAC_PI_2).atan()
}

fn fit_log(ln_rho: &[f64], y: &[f64]) -> Option<(LinearFit, f64)> {
    let eval = |s: f64| {
        let t: Vec<f64> = ln_rho.iter().map(|&l| -log_basis(l, s)).collect();
        fit_line(&t, y)
    };
    let mut best: Option<(LinearFit, f64)> = None;
    let n = 1600;
    let (lo, hi) = (-40.0, 40.0);
    let ds = (hi - lo) / n as f64;
    let mut best_i = 0;
    for i in 0..=n {
        let s = lo + i as f64 * ds;
        if let Some(fit) = eval(s) {
            if best.as_ref().is_none_or(|(b, _)| fit.rms < b.rms) {
                best = Some((fit, s));
                best_i = i;
            }
        }
    }
    // golden-section refinement around the best scan point
    let (mut a, mut b) = (lo + (best_i as f64 - 1.0) * ds, lo + (best_i as f64 + 1.0) * ds);
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let rms = |s: f64| eval(s).map_or(f64::INFINITY, |f| f.rms);
    let mut c = b - gr * (b - a);
    let mut d = a + gr * (b - a);
    let (mut fc, mut fd) = (rms(c), rms(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = rms(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = rms(d);
        }
    }
    let s = 0.5 * (a + b);
    if let Some(fit) = eval(s) {
        if best.as_ref().is_none_or(|(b, _)| fit.rms < b.rms) {
            best = Some((fit, s));
        }
    }
    best
}

/// Fits both threshold forms on the lowest decade of the curve and keeps
/// the better one. The power form is preferred unless the log form is at
/// least twice as good and the power residual is above `1e-6` rad.
pub fn threshold_extrapolate(curve: &PhaseShiftCurve) -> Result<ThresholdFitModel, FitError> {
    let a = curve.cutoff;
    let ka_min = curve.k[0] * a;
    if ka_min > MAX_THRESHOLD_KA {
        return Err(FitError::NotAtThreshold(ka_min));
    }
    let window: Vec<usize> = (0..curve.k.len())
        .take_while(|&i| curve.k[i] * a <= 10.0 * ka_min * (1.0 + 1e-12))
        .collect();
    if window.len() < MIN_FIT_POINTS {
        return Err(FitError::WindowTooSmall(window.len()));
    }
    let rho: Vec<f64> = window.iter().map(|&i| curve.k[i] * a).collect();
    let y: Vec<f64> = window.iter().map(|&i| curve.eta[i]).collect();
    let rho_max = *rho.last().unwrap();

    let mut power: Option<(LinearFit, u32)> = None;
    for p in 1..=3u32 {
        let t: Vec<f64> = rho.iter().map(|r| (r / rho_max).powi(2 * p as i32)).collect();
        if let Some(fit) = fit_line(&t, &y) {
            if power.as_ref().is_none_or(|(b, _)| fit.rms < b.rms) {
                power = Some((fit, p));
            }
        }
    }
    let ln_rho: Vec<f64> = rho.iter().map(|r| r.ln()).collect();
    let log = fit_log(&ln_rho, &y);

    let power_rms = power.as_ref().map_or(f64::INFINITY, |(f, _)| f.rms);
    let log_rms = log.as_ref().map_or(f64::INFINITY, |(f, _)| f.rms);
    let use_log = log_rms < 0.5 * power_rms && power_rms > 1e-6;

    let model = if use_log {
        let (fit, s) = log.unwrap();
        ThresholdFitModel {
            variant: Branch::Log,
            n_hat: (fit.c0 / PI).round() as i64,
            eta0: fit.c0,
            coefficient: fit.c1,
            exponent: None,
            log_shift: Some(s),
            residual: fit.rms,
            other_residual: power_rms,
            window_points: rho.len(),
        }
    } else {
        let (fit, p) = power.ok_or(FitError::NoModelFits(f64::INFINITY))?;
        ThresholdFitModel {
            variant: Branch::Power,
            n_hat: (fit.c0 / PI).round() as i64,
            eta0: fit.c0,
            coefficient: fit.c1 / rho_max.powi(2 * p as i32),
            exponent: Some(2 * p),
            log_shift: None,
            residual: fit.rms,
            other_residual: log_rms,
            window_points: rho.len(),
        }
    };
    if !(model.residual <= MAX_FIT_RESIDUAL) {
        return Err(FitError::NoModelFits(model.residual));
    }
    Ok(model)
}

// ---------------------------------------------------------------------------
// Amplitude and cross sections

/// Phase shifts of channels `m = 0..=M` at one wavenumber.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialWaveSet {
    pub k: f64,
    pub eta: Vec<f64>,
}

impl PartialWaveSet {
    pub fn new(k: f64, eta: Vec<f64>) -> Result<Self, ScatteringError> {
        if !(k > 0.0) {
            return Err(ScatteringError::NonPositiveK(k));
        }
        Ok(PartialWaveSet { k, eta })
    }

    /// Picks the value at `k` from each curve; every curve must contain `k`
    /// as a grid point and curves must be ordered `m = 0, 1, ...`.
    pub fn from_curves(curves: &[PhaseShiftCurve], k: f64) -> Result<Self, ScatteringError> {
        let mut eta = Vec::with_capacity(curves.len());
        for (i, c) in curves.iter().enumerate() {
            if c.m as usize != i {
                return Err(ScatteringError::ChannelOrder);
            }
            eta.push(c.eta_at(k).ok_or(ScatteringError::MismatchedK { k })?);
        }
        Self::new(k, eta)
    }

    pub fn m_max(&self) -> usize {
        self.eta.len().saturating_sub(1)
    }
}

/// `f(theta) = sum_{m=-M..M} sqrt(2/(pi k)) e^{i eta_|m|} sin(eta_|m|) e^{i m theta}`.
pub fn amplitude(set: &PartialWaveSet, theta: f64) -> Complex64 {
    let pref = (2.0 / (PI * set.k)).sqrt();
    let mut sum = Complex64::new(0.0, 0.0);
    for (m, &eta) in set.eta.iter().enumerate() {
        let partial = Complex64::from_polar(eta.sin(), eta);
        // +m and -m together give 2 cos(m theta)
        let angular = if m == 0 { 1.0 } else { 2.0 * (m as f64 * theta).cos() };
        sum += partial * angular;
    }
    sum * pref
}

/// `sigma_t = (4/k)(sin^2 eta_0 + 2 sum_{m>=1} sin^2 eta_m)`.
pub fn total_cross_section(set: &PartialWaveSet) -> f64 {
    let s: f64 = set
        .eta
        .iter()
        .enumerate()
        .map(|(m, e)| if m == 0 { e.sin().powi(2) } else { 2.0 * e.sin().powi(2) })
        .sum();
    4.0 / set.k * s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSections {
    /// uniform grid on `[0, 2 pi)`
    pub theta: Vec<f64>,
    pub sigma: Vec<f64>,
    pub total: f64,
}

pub fn cross_sections(set: &PartialWaveSet, n_theta: usize) -> CrossSections {
    let theta: Vec<f64> = (0..n_theta).map(|i| 2.0 * PI * i as f64 / n_theta as f64).collect();
    let sigma = theta.iter().map(|&t| amplitude(set, t).norm_sqr()).collect();
    CrossSections {
        theta,
        sigma,
        total: total_cross_section(set),
    }
}

/// Rectangle rule on the uniform periodic grid; exact for the trigonometric
/// polynomial `|f|^2` while `n_theta > 2 M`.
pub fn integrate_differential(cs: &CrossSections) -> f64 {
    let n = cs.sigma.len() as f64;
    cs.sigma.iter().sum::<f64>() * 2.0 * PI / n
}

/// Partial sum `sum_{m=-M..M} i^|m| J_|m|(kr) e^{i m theta}` of the plane wave.
pub fn plane_wave_check(k: f64, r: f64, theta: f64, m_max: u32) -> Result<Complex64, ScatteringError> {
    let x = k * r;
    let mut sum = Complex64::new(bessel_j(0, x)?, 0.0);
    for m in 1..=m_max {
        let im = Complex64::i().powu(m);
        sum += im * bessel_j(m as i32, x)? * 2.0 * (m as f64 * theta).cos();
    }
    Ok(sum)
}

/// Smallest `M` past `k a` whose channel adds less than
/// [`CHANNEL_CUTOFF`] to `sigma_t`.
pub fn default_m_max(spec: &PotentialSpec, k: f64, steps: usize) -> Result<u32, ScatteringError> {
    let problem = RadialProblem::new(spec, steps)?;
    let ka = k * spec.cutoff;
    for m in 0..=1000u32 {
        let (b, _) = problem.boundary(m, k * k)?;
        let eta = phase_from_boundary(&b, m, k)?.eta;
        let weight = if m == 0 { 1.0 } else { 2.0 };
        if m as f64 > ka && 4.0 / k * weight * eta.sin().powi(2) < CHANNEL_CUTOFF {
            return Ok(m);
        }
    }
    Ok(1000)
}

// ---------------------------------------------------------------------------
// High-energy law and the two-potential identity

/// `sin(eta) ~ -(1/(2k)) int_0^a V dr` for `k a >= 10`, the same for every `m`.
pub fn highk_estimate(spec: &PotentialSpec, k: f64) -> Result<f64, ScatteringError> {
    let ka = k * spec.cutoff;
    if !(ka >= MIN_HIGHK_KA) {
        return Err(ScatteringError::HighKOutOfRange { ka });
    }
    Ok(-spec.integral_line()? / (2.0 * k))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    /// `sin(eta - eta_tilde)` from the two phase computations
    pub lhs: f64,
    /// `-(pi/(2k)) int (U - U~) u u~ dr` with both solutions normalised to
    /// `sqrt(2/pi) cos(kr - m pi/2 - pi/4 + eta)` at large `r`
    pub rhs: f64,
    pub deviation: f64,
    pub eta: f64,
    pub eta_tilde: f64,
}

/// A regular solution rescaled to the continuum normalisation.
struct NormalizedWave {
    u: Vec<f64>,
    eta: f64,
}

fn normalized_wave(problem: &RadialProblem, m: u32, k: f64) -> Result<NormalizedWave, ScatteringError> {
    let sol = problem.solve(m, k * k)?;
    let b = sol.boundary;
    let eta = phase_from_boundary(&b, m, k)?.eta;
    let end = problem.end();
    let c = cylinder_pair(m as i32, k * end)?;
    let (s, co) = eta.sin_cos();
    let sk = k.sqrt();
    let ext_f = sk * (co * c.j - s * c.y);
    let ext_fp = sk * k * (co * c.jp - s * c.yp);
    // least-squares match of value and radius-weighted slope
    let scale = (ext_f * b.f + end * end * ext_fp * b.fp) / (b.f * b.f + end * end * b.fp * b.fp);
    let u = sol.u.iter().map(|u| u * scale).collect();
    Ok(NormalizedWave { u, eta })
}

/// Composite Simpson in `x = ln r` (3/8 rule on the last panel when the
/// interval count is odd).
fn simpson_log_mesh(r: &[f64], g: &[f64]) -> f64 {
    // integrand in x is g(r) * r
    let h = (r[1] / r[0]).ln();
    let y: Vec<f64> = r.iter().zip(g).map(|(r, g)| r * g).collect();
    let n = y.len() - 1;
    let (even_n, tail) = if n.is_multiple_of(2) {
        (n, 0.0)
    } else {
        let j = n - 3;
        (j, 3.0 * h / 8.0 * (y[j] + 3.0 * y[j + 1] + 3.0 * y[j + 2] + y[j + 3]))
    };
    let mut s = y[0] + y[even_n];
    for (i, yi) in y.iter().enumerate().take(even_n).skip(1) {
        s += if i % 2 == 1 { 4.0 * yi } else { 2.0 * yi };
    }
    s * h / 3.0 + tail
}

/// Checks `sin(eta - eta~) = -(pi/(2k)) int (U - U~) u u~ dr`.
pub fn phase_difference_identity(
    spec_u: &PotentialSpec,
    spec_ut: &PotentialSpec,
    m: u32,
    k: f64,
    steps: usize,
) -> Result<IdentityCheck, ScatteringError> {
    if !(k > 0.0) {
        return Err(ScatteringError::NonPositiveK(k));
    }
    let end = spec_u.cutoff.max(spec_ut.cutoff);
    if k * end < 0.5 {
        return Err(ScatteringError::NormalizationRange { ka: k * end });
    }
    let pu = RadialProblem::with_end(spec_u, steps, end)?;
    let pt = RadialProblem::with_end(spec_ut, steps, end)?;
    let wu = normalized_wave(&pu, m, k)?;
    let wt = normalized_wave(&pt, m, k)?;
    let r = pu.radii();
    let integrand: Vec<f64> = r
        .iter()
        .enumerate()
        .map(|(i, &ri)| (spec_u.value_at(ri) - spec_ut.value_at(ri)) * wu.u[i] * wt.u[i])
        .collect();
    let integral = simpson_log_mesh(r, &integrand);
    let rhs = -PI / (2.0 * k) * integral;
    let lhs = (wu.eta - wt.eta).sin();
    Ok(IdentityCheck {
        lhs,
        rhs,
        deviation: (lhs - rhs).abs(),
        eta: wu.eta,
        eta_tilde: wt.eta,
    })
}

/// The continuum-normalised free wave `sqrt(k r) J_m(k r)` at `r`.
pub fn free_wave(m: u32, k: f64, r: f64) -> Result<f64, ScatteringError> {
    Ok((k * r).sqrt() * bessel_j(m as i32, k * r)?)
}

/// Continuum-normalised regular solution on its mesh, for inspection.
pub fn normalized_solution(spec: &PotentialSpec, m: u32, k: f64, steps: usize) -> Result<(Vec<f64>, Vec<f64>, f64), ScatteringError> {
    let p = RadialProblem::new(spec, steps)?;
    let w = normalized_wave(&p, m, k)?;
    Ok((p.radii().to_vec(), w.u, w.eta))
}
