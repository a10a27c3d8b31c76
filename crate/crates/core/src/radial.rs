//! Regular solution of the 2D radial equation inside the cutoff.
//!
//! The equation `u'' + [k^2 - V - (m^2 - 1/4)/r^2] u = 0` for
//! `u = sqrt(r) f_m` is solved on a logarithmic mesh `x = ln r`, where it
//! becomes `R_xx = [m^2 + r^2 (V - k^2)] R` for `R = f_m`: no first
//! derivative, no singular coefficient, and a regular solution that behaves
//! like `e^{m x}` at the inner edge. A fixed-step Numerov scheme then keeps
//! its fourth-order accuracy all the way down to the start radius, which
//! uniform-`r` Numerov does not for the `sqrt(r)` start of the `m = 0`
//! channel.
//!
//! The solution is normalised as `f_m -> r^m / (2^m m!)` at the origin.
//! Stored values carry a common scale `exp(log_scale)` so deep forbidden
//! regions never overflow.

use thiserror::Error;

use crate::potential::{PotentialKind, PotentialSpec, ValidationReport};

pub const DEFAULT_STEPS: usize = 4000;
pub const MIN_STEPS: usize = 100;
/// Start radius as a fraction of the outer radius.
pub const START_FRACTION: f64 = 1e-6;

const RESCALE_AT: f64 = 1e100;
const RESCALE_BY: f64 = 1e-100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RadialError {
    #[error("need at least {MIN_STEPS} steps, got {0}")]
    TooFewSteps(usize),
    #[error("potential failed validation: {0}")]
    InvalidPotential(ValidationReport),
    #[error("integration failed (non-finite value) for m = {m}, k^2 = {k2}")]
    NonFinite { m: u32, k2: f64 },
    #[error("f_m(a) = 0: the log-derivative has a pole here")]
    BetaPole,
    #[error("outer radius {end} is inside the cutoff {cutoff}")]
    ShortDomain { end: f64, cutoff: f64 },
}

/// Values of `f_m` and `f'_m` at the outer radius, in the stored scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boundary {
    pub f: f64,
    pub fp: f64,
    pub radius: f64,
    pub log_scale: f64,
}

impl Boundary {
    /// `a f'(a)`: together with `f` the pole-free form of the log-derivative.
    pub fn a_fp(&self) -> f64 {
        self.radius * self.fp
    }

    pub fn beta(&self) -> Result<f64, RadialError> {
        if self.f == 0.0 {
            return Err(RadialError::BetaPole);
        }
        Ok(self.a_fp() / self.f)
    }

    /// `(f_m(a), f'_m(a))` with the origin normalisation restored. May
    /// overflow to infinity for very deep wells.
    pub fn unscaled(&self) -> (f64, f64) {
        let s = self.log_scale.exp();
        (self.f * s, self.fp * s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialSolution {
    pub m: u32,
    pub k2: f64,
    /// `r_1 < ... < r_N`, with `r_N` the outer radius
    pub radii: Vec<f64>,
    /// `u = sqrt(r) f_m` in the stored scale
    pub u: Vec<f64>,
    pub boundary: Boundary,
    /// sign changes of `u` on `(0, r_N)`
    pub node_count: usize,
}

impl RadialSolution {
    pub fn beta(&self) -> Result<f64, RadialError> {
        self.boundary.beta()
    }

    /// `u` values with the origin normalisation restored.
    pub fn u_unscaled(&self) -> Vec<f64> {
        let s = self.boundary.log_scale.exp();
        self.u.iter().map(|u| u * s).collect()
    }

    /// `f_m(r_i)` in the stored scale.
    pub fn f_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.radii.iter().zip(&self.u).map(|(r, u)| u / r.sqrt())
    }

    /// Multiplies the stored values by `c`. The boundary pair scales along,
    /// so `beta` is unchanged.
    pub fn rescaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.u.iter_mut().for_each(|u| *u *= c);
        out.boundary.f *= c;
        out.boundary.fp *= c;
        out
    }
}

/// Counts strict sign changes; an exact zero counts as one change.
pub fn count_sign_changes(values: &[f64]) -> usize {
    let mut count = 0;
    let mut prev_sign = 0.0;
    for &v in values {
        if v == 0.0 {
            if prev_sign != 0.0 {
                count += 1;
            }
            prev_sign = 0.0;
            continue;
        }
        let s = v.signum();
        if prev_sign != 0.0 && s != prev_sign {
            count += 1;
        }
        prev_sign = s;
    }
    count
}

/// A potential sampled on a logarithmic mesh from `START_FRACTION * end`
/// to `end`, reusable across channels and energies.
#[derive(Debug, Clone)]
pub struct RadialProblem {
    r: Vec<f64>,
    r2v: Vec<f64>,
    r2: Vec<f64>,
    h: f64,
    ghost_r2: f64,
    ghost_r2v: f64,
    end: f64,
}

impl RadialProblem {
    /// Mesh ending at the cutoff.
    pub fn new(spec: &PotentialSpec, steps: usize) -> Result<Self, RadialError> {
        Self::with_end(spec, steps, spec.cutoff)
    }

    /// Mesh ending at `end >= cutoff`. Beyond the cutoff the equation is the
    /// free one, so the solution there is still the exact continuation.
    pub fn with_end(spec: &PotentialSpec, steps: usize, end: f64) -> Result<Self, RadialError> {
        if steps < MIN_STEPS {
            return Err(RadialError::TooFewSteps(steps));
        }
        let report = spec.validate();
        if !report.is_ok() {
            return Err(RadialError::InvalidPotential(report));
        }
        if end < spec.cutoff {
            return Err(RadialError::ShortDomain {
                end,
                cutoff: spec.cutoff,
            });
        }
        let start = end * START_FRACTION;
        let h = (end / start).ln() / steps as f64;
        let ln_start = start.ln();
        let mut r: Vec<f64> = (0..=steps)
            .map(|i| (ln_start + i as f64 * h).exp())
            .collect();
        r[steps] = end;
        // breakpoints that fall between mesh points are left where they are;
        // Numerov drops to second order locally at such jumps
        let r2: Vec<f64> = r.iter().map(|r| r * r).collect();
        let r2v = r.iter().zip(&r2).map(|(&ri, r2)| r2 * spec.value_at(ri)).collect();
        let ghost = end * h.exp();
        let ghost_v = continued_value(spec, end, ghost);
        Ok(RadialProblem {
            r,
            r2v,
            r2,
            h,
            ghost_r2: ghost * ghost,
            ghost_r2v: ghost * ghost * ghost_v,
            end,
        })
    }

    pub fn steps(&self) -> usize {
        self.r.len() - 1
    }

    pub fn radii(&self) -> &[f64] {
        &self.r
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    /// Full solution including stored `u` values.
    pub fn solve(&self, m: u32, k2: f64) -> Result<RadialSolution, RadialError> {
        let mut store = Vec::with_capacity(self.r.len());
        let (boundary, nodes) = self.run(m, k2, Some(&mut store))?;
        let u = store.iter().zip(&self.r).map(|(f, r)| f * r.sqrt()).collect();
        Ok(RadialSolution {
            m,
            k2,
            radii: self.r.clone(),
            u,
            boundary,
            node_count: nodes,
        })
    }

    /// Only the boundary pair and node count; no per-point storage.
    pub fn boundary(&self, m: u32, k2: f64) -> Result<(Boundary, usize), RadialError> {
        self.run(m, k2, None)
    }

    fn run(&self, m: u32, k2: f64, mut store: Option<&mut Vec<f64>>) -> Result<(Boundary, usize), RadialError> {
        let n = self.r.len();
        let h2 = self.h * self.h;
        let mf = m as f64;
        let m2 = mf * mf;
        let g = |i: usize| m2 + self.r2v[i] - k2 * self.r2[i];
        let w = |gi: f64| 1.0 - h2 * gi / 12.0;

        // series start: f = r^m/(2^m m!) (1 - c r^2), c = (k^2 - V)/(4(m+1))
        let seed = |i: usize| {
            let c = (k2 * self.r2[i] - self.r2v[i]) / (4.0 * (mf + 1.0));
            1.0 - c
        };
        let mut log_scale = mf * (self.r[0] / 2.0).ln() - ln_factorial(m);
        let mut f_prev = seed(0);
        let mut f_cur = (mf * self.h).exp() * seed(1);
        let mut g_prev = g(0);
        let mut g_cur = g(1);
        let mut w_prev = w(g_prev);
        let mut w_cur = w(g_cur);

        let mut nodes = 0usize;
        let mut last_sign = f_cur.signum();
        if let Some(s) = store.as_deref_mut() {
            s.push(f_prev);
            s.push(f_cur);
        }

        for i in 1..n - 1 {
            let g_next = g(i + 1);
            let w_next = w(g_next);
            let mut f_next = ((12.0 - 10.0 * w_cur) * f_cur - w_prev * f_prev) / w_next;
            if !f_next.is_finite() {
                return Err(RadialError::NonFinite { m, k2 });
            }
            if f_next == 0.0 {
                nodes += 1;
                last_sign = 0.0;
            } else {
                let s = f_next.signum();
                if last_sign != 0.0 && s != last_sign {
                    nodes += 1;
                }
                last_sign = s;
            }
            if f_next.abs() > RESCALE_AT {
                f_next *= RESCALE_BY;
                f_cur *= RESCALE_BY;
                if let Some(st) = store.as_deref_mut() {
                    st.iter_mut().for_each(|v| *v *= RESCALE_BY);
                }
                log_scale -= RESCALE_BY.ln();
            }
            if let Some(st) = store.as_deref_mut() {
                st.push(f_next);
            }
            f_prev = f_cur;
            f_cur = f_next;
            g_prev = g_cur;
            g_cur = g_next;
            w_prev = w_cur;
            w_cur = w_next;
        }

        // ghost point one step past the end, then the Numerov-consistent
        // central derivative (fourth order)
        let g_ghost = m2 + self.ghost_r2v - k2 * self.ghost_r2;
        let w_ghost = w(g_ghost);
        let f_ghost = ((12.0 - 10.0 * w_cur) * f_cur - w_prev * f_prev) / w_ghost;
        let df_dx = (f_ghost * (1.0 - h2 * g_ghost / 6.0) - f_prev * (1.0 - h2 * g_prev / 6.0)) / (2.0 * self.h);
        let fp = df_dx / self.end;
        if !(f_cur.is_finite() && fp.is_finite()) || (f_cur == 0.0 && fp == 0.0) {
            return Err(RadialError::NonFinite { m, k2 });
        }
        Ok((
            Boundary {
                f: f_cur,
                fp,
                radius: self.end,
                log_scale,
            },
            nodes,
        ))
    }
}

/// The interior potential continued one mesh step past `end`, so the
/// derivative stencil sees the inside equation rather than the jump at the
/// cutoff.
fn continued_value(spec: &PotentialSpec, end: f64, r: f64) -> f64 {
    if end > spec.cutoff {
        return 0.0;
    }
    match &spec.kind {
        PotentialKind::Tabulated { r: rs, v } if rs.len() >= 2 => {
            let n = rs.len();
            if rs[n - 1] < end {
                return spec.value_at(end);
            }
            let slope = (v[n - 1] - v[n - 2]) / (rs[n - 1] - rs[n - 2]);
            v[n - 1] + slope * (r - rs[n - 1])
        }
        _ => spec.value_at(end),
    }
}

fn ln_factorial(m: u32) -> f64 {
    (1..=m).map(|i| (i as f64).ln()).sum()
}

/// Regular solution for channel `m` at energy parameter `k2` (any sign).
pub fn integrate_regular(spec: &PotentialSpec, m: u32, k2: f64, steps: usize) -> Result<RadialSolution, RadialError> {
    RadialProblem::new(spec, steps)?.solve(m, k2)
}

/// `beta_m = a f'_m(a) / f_m(a)`.
pub fn beta(sol: &RadialSolution) -> Result<f64, RadialError> {
    sol.beta()
}

/// Number of negative-energy states by Sturm oscillation: nodes of the
/// zero-energy regular solution inside the cutoff, plus one if its exterior
/// continuation (`A r^m + B r^-m`, or `A + B ln r` for `m = 0`) crosses zero
/// beyond it.
pub fn node_count_zero_energy(spec: &PotentialSpec, m: u32, steps: usize) -> Result<usize, RadialError> {
    let (b, nodes) = RadialProblem::new(spec, steps)?.boundary(m, 0.0)?;
    Ok(nodes + exterior_zero_crossing(&b, m) as usize)
}

/// Whether the zero-energy exterior continuation has a node beyond the cutoff.
pub fn exterior_zero_crossing(b: &Boundary, m: u32) -> bool {
    let a_fp = b.a_fp();
    if m == 0 {
        // f = f(a) + a f'(a) ln(r/a)
        return a_fp != 0.0 && a_fp.signum() != b.f.signum();
    }
    // f = A (r/a)^m + B (a/r)^m with A = (f + a f'/m)/2, B = (f - a f'/m)/2
    let mf = m as f64;
    let big_a = 0.5 * (b.f + a_fp / mf);
    let big_b = 0.5 * (b.f - a_fp / mf);
    big_a != 0.0 && big_b != 0.0 && big_a.signum() != big_b.signum() && big_a.signum() != b.f.signum()
}
