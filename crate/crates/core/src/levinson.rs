//! Per-channel verdicts `eta_m(0) = n_m pi`, depth sweeps and summaries.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bound::{count_negative, BoundError, BoundStateReport};
use crate::config::fmt_f64;
use crate::potential::PotentialSpec;
use crate::radial::DEFAULT_STEPS;
use crate::scattering::{
    log_grid, phase_curve_unchecked, threshold_extrapolate, Branch, ScatteringError, ThresholdFitModel,
    DEFAULT_KA_MAX, DEFAULT_KA_MIN, DEFAULT_K_POINTS,
};

pub const TOL_POWER: f64 = 0.05;
pub const TOL_LOG: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    /// wavenumber grid in units of `1/a`
    pub ka_min: f64,
    pub ka_max: f64,
    pub k_points: usize,
    pub r_steps: usize,
    pub tol_power: f64,
    pub tol_log: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            ka_min: DEFAULT_KA_MIN,
            ka_max: DEFAULT_KA_MAX,
            k_points: DEFAULT_K_POINTS,
            r_steps: DEFAULT_STEPS,
            tol_power: TOL_POWER,
            tol_log: TOL_LOG,
        }
    }
}

impl VerifyOptions {
    pub fn tolerance(&self, branch: Branch) -> f64 {
        match branch {
            Branch::Power => self.tol_power,
            Branch::Log => self.tol_log,
        }
    }

    pub fn k_grid(&self, cutoff: f64) -> Result<Vec<f64>, ScatteringError> {
        log_grid(self.ka_min / cutoff, self.ka_max / cutoff, self.k_points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevinsonVerdict {
    pub m: u32,
    /// extrapolated `eta(0)`; absent when no fit was accepted
    pub eta0: Option<f64>,
    pub model: Option<ThresholdFitModel>,
    pub bound: BoundStateReport,
    pub n_total: usize,
    /// `|eta0 - n_total pi|`
    pub residual: Option<f64>,
    pub tolerance: Option<f64>,
    pub status: Status,
    /// why the verdict is not a pass
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LevinsonError {
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error(transparent)]
    Scattering(#[from] ScatteringError),
}

/// Extrapolates the unwrapped phase to threshold and compares it with the
/// bound-state count, including a normalisable zero-energy state.
pub fn verify(spec: &PotentialSpec, m: u32, options: &VerifyOptions) -> Result<LevinsonVerdict, LevinsonError> {
    let bound = count_negative(spec, m, options.r_steps)?;
    let n_total = bound.n_total;
    let inconclusive = |reason: String, model: Option<ThresholdFitModel>| LevinsonVerdict {
        m,
        eta0: model.as_ref().map(|f| f.eta0),
        residual: model.as_ref().map(|f| (f.eta0 - n_total as f64 * PI).abs()),
        tolerance: model.as_ref().map(|f| options.tolerance(f.variant)),
        model,
        bound: bound.clone(),
        n_total,
        status: Status::Inconclusive,
        reason: Some(reason),
    };

    let grid = options.k_grid(spec.cutoff)?;
    let curve = phase_curve_unchecked(spec, m, &grid, options.r_steps, true)?;
    if let Err(e) = curve.check_continuity() {
        return Ok(inconclusive(e.to_string(), None));
    }
    let fit = match threshold_extrapolate(&curve) {
        Ok(f) => f,
        Err(e) => return Ok(inconclusive(e.to_string(), None)),
    };
    let residual = (fit.eta0 - n_total as f64 * PI).abs();
    let tolerance = options.tolerance(fit.variant);
    let counted = fit.n_hat == n_total as i64;
    let (status, reason) = if residual <= tolerance && counted {
        (Status::Pass, None)
    } else if !counted {
        (
            Status::Fail,
            Some(format!("eta0/pi rounds to {} but {} states are bound", fit.n_hat, n_total)),
        )
    } else {
        (
            Status::Fail,
            Some(format!("residual {residual:.3e} exceeds {tolerance}")),
        )
    };
    Ok(LevinsonVerdict {
        m,
        eta0: Some(fit.eta0),
        model: Some(fit),
        bound,
        n_total,
        residual: Some(residual),
        tolerance: Some(tolerance),
        status,
        reason,
    })
}

/// One line of a summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    /// dimensionless strength `a sqrt(max|V|)`
    pub depth: f64,
    pub m: u32,
    pub n_total: usize,
    pub eta0_over_pi: Option<f64>,
    pub residual: Option<f64>,
    pub branch: Option<Branch>,
    pub status: Status,
}

impl SummaryRow {
    pub fn from_verdict(depth: f64, v: &LevinsonVerdict) -> Self {
        SummaryRow {
            depth,
            m: v.m,
            n_total: v.n_total,
            eta0_over_pi: v.eta0.map(|e| e / PI),
            residual: v.residual,
            branch: v.model.as_ref().map(|f| f.variant),
            status: v.status,
        }
    }

    /// Row for a job that could not run at all.
    pub fn failed(depth: f64, m: u32) -> Self {
        SummaryRow {
            depth,
            m,
            n_total: 0,
            eta0_over_pi: None,
            residual: None,
            branch: None,
            status: Status::Fail,
        }
    }
}

/// Strength interval over which `n_total` of channel `m` steps up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub m: u32,
    pub depth_lo: f64,
    pub depth_hi: f64,
    pub n_lo: usize,
    pub n_hi: usize,
}

impl Crossing {
    pub fn brackets(&self, depth: f64) -> bool {
        self.depth_lo < depth && depth <= self.depth_hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SummaryRow>,
    pub crossings: Vec<Crossing>,
}

/// Verifies every `(depth, m)` with `shape` rescaled to strength `depth`.
/// Rows come out ordered by depth then `m` whatever the scheduling; a job
/// that errors is recorded as a failed row.
pub fn sweep(shape: &PotentialSpec, m_list: &[u32], depths: &[f64], options: &VerifyOptions) -> SweepTable {
    let mut jobs: Vec<(f64, u32)> = depths
        .iter()
        .flat_map(|&d| m_list.iter().map(move |&m| (d, m)))
        .collect();
    jobs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    jobs.dedup();
    let rows: Vec<SummaryRow> = jobs
        .par_iter()
        .map(|&(depth, m)| {
            let spec = shape.with_strength(depth);
            match verify(&spec, m, options) {
                Ok(v) => SummaryRow::from_verdict(depth, &v),
                Err(_) => SummaryRow::failed(depth, m),
            }
        })
        .collect();
    let crossings = crossings(&rows);
    SweepTable { rows, crossings }
}

fn crossings(rows: &[SummaryRow]) -> Vec<Crossing> {
    let mut ms: Vec<u32> = rows.iter().map(|r| r.m).collect();
    ms.sort_unstable();
    ms.dedup();
    let mut out = Vec::new();
    for m in ms {
        let chan: Vec<&SummaryRow> = rows.iter().filter(|r| r.m == m).collect();
        for w in chan.windows(2) {
            if w[1].n_total > w[0].n_total {
                out.push(Crossing {
                    m,
                    depth_lo: w[0].depth,
                    depth_hi: w[1].depth,
                    n_lo: w[0].n_total,
                    n_hi: w[1].n_total,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Overall {
    Pass,
    Fail,
    Inconclusive,
}

impl Overall {
    pub fn of(rows: &[SummaryRow]) -> Self {
        if rows.iter().any(|r| r.status == Status::Fail) {
            Overall::Fail
        } else if rows.iter().any(|r| r.status == Status::Inconclusive) {
            Overall::Inconclusive
        } else {
            Overall::Pass
        }
    }

    /// 0 pass, 1 fail, 3 inconclusive.
    pub fn exit_code(self) -> i32 {
        match self {
            Overall::Pass => 0,
            Overall::Fail => 1,
            Overall::Inconclusive => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Overall::Pass => "PASS",
            Overall::Fail => "FAIL",
            Overall::Inconclusive => "INCONCLUSIVE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub crossings: Vec<Crossing>,
    pub overall: Overall,
}

pub fn report(rows: Vec<SummaryRow>, crossings: Vec<Crossing>) -> Summary {
    let overall = Overall::of(&rows);
    Summary {
        rows,
        crossings,
        overall,
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), fmt_f64)
}

impl Summary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serialises");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{:>24} {:>3} {:>7} {:>24} {:>24} {:>6} {:>12}\n",
            "depth", "m", "n_total", "eta0/pi", "residual", "branch", "status"
        );
        for r in &self.rows {
            s.push_str(&format!(
                "{:>24} {:>3} {:>7} {:>24} {:>24} {:>6} {:>12}\n",
                fmt_f64(r.depth),
                r.m,
                r.n_total,
                opt(r.eta0_over_pi),
                opt(r.residual),
                r.branch.map_or("-", Branch::as_str),
                r.status.as_str()
            ));
        }
        for c in &self.crossings {
            s.push_str(&format!(
                "m = {}: n_total {} -> {} for depth in ({}, {}]\n",
                c.m,
                c.n_lo,
                c.n_hi,
                fmt_f64(c.depth_lo),
                fmt_f64(c.depth_hi)
            ));
        }
        s.push_str(&format!("overall: {}\n", self.overall.as_str()));
        s
    }
}
