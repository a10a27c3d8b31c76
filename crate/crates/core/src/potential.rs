//! Finite-range central potentials.
//!
//! Natural units throughout: `hbar = 1` and `2 mu = 1`, so `E = k^2` and the
//! radial equation carries `V` directly. Attractive wells are negative: a
//! square well of depth `V0 > 0` has `V = -V0` for `r <= a`.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{fmt_f64, ConfigError, FlatConfig};

pub const POTENTIAL_KEYS: &[&str] = &[
    "potential.kind",
    "potential.depth",
    "potential.radius",
    "potential.table",
    "potential.samples",
    "potential.pieces",
];

/// One constant piece, covering `(previous outer, outer]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub outer: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialKind {
    Zero,
    SquareWell { depth: f64 },
    PiecewiseConstant { pieces: Vec<Piece> },
    Tabulated { r: Vec<f64>, v: Vec<f64> },
}

impl PotentialKind {
    pub fn name(&self) -> &'static str {
        match self {
            PotentialKind::Zero => "zero",
            PotentialKind::SquareWell { .. } => "square_well",
            PotentialKind::PiecewiseConstant { .. } => "piecewise_constant",
            PotentialKind::Tabulated { .. } => "tabulated",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub cutoff: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PotentialError {
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("potential failed validation: {0}")]
    Invalid(ValidationReport),
    #[error("cannot add potentials with cutoffs {0} and {1}")]
    CutoffMismatch(f64, f64),
    #[error("cannot add {0} and {1} potentials")]
    UnsupportedSum(&'static str, &'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    /// cutoff is not a positive finite number
    Cutoff(f64),
    /// a depth, value or sample is NaN or infinite
    NonFinite(String),
    /// `|r V(r)|` does not fall toward the origin
    OriginSingularity { r: f64, r_v: f64 },
    /// nonzero potential at or beyond the cutoff, or samples past it
    Range(String),
    /// radii not strictly increasing or not starting above zero
    Grid(String),
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Cutoff(a) => write!(f, "cutoff must be positive and finite, got {a}"),
            Violation::NonFinite(what) => write!(f, "non-finite value in {what}"),
            Violation::OriginSingularity { r, r_v } => write!(
                f,
                "origin singularity: |r V(r)| = {r_v:e} at r = {r:e} does not vanish toward r = 0"
            ),
            Violation::Range(msg) => write!(f, "range violation: {msg}"),
            Violation::Grid(msg) => write!(f, "grid violation: {msg}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
    pub fn has_origin_violation(&self) -> bool {
        self.violations
            .iter()
            .any(|v| matches!(v, Violation::OriginSingularity { .. }))
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_ok() {
            return write!(f, "pass");
        }
        let msgs: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        write!(f, "{}", msgs.join("; "))
    }
}

impl PotentialSpec {
    pub fn zero(cutoff: f64) -> Self {
        PotentialSpec {
            kind: PotentialKind::Zero,
            cutoff,
        }
    }

    /// Attractive for `depth > 0`: `V = -depth` inside the cutoff.
    pub fn square_well(depth: f64, cutoff: f64) -> Self {
        PotentialSpec {
            kind: PotentialKind::SquareWell { depth },
            cutoff,
        }
    }

    /// Square well parametrised by the dimensionless strength `k0 a`.
    pub fn square_well_k0a(k0a: f64, cutoff: f64) -> Self {
        Self::square_well((k0a / cutoff).powi(2), cutoff)
    }

    /// The cutoff is the outer radius of the last piece.
    pub fn piecewise_constant(pieces: Vec<Piece>) -> Self {
        let cutoff = pieces.last().map_or(0.0, |p| p.outer);
        PotentialSpec {
            kind: PotentialKind::PiecewiseConstant { pieces },
            cutoff,
        }
    }

    pub fn tabulated(r: Vec<f64>, v: Vec<f64>, cutoff: f64) -> Self {
        PotentialSpec {
            kind: PotentialKind::Tabulated { r, v },
            cutoff,
        }
    }

    pub fn evaluate(&self, r: f64) -> Result<f64, PotentialError> {
        if !(r > 0.0) {
            return Err(PotentialError::NonPositiveRadius(r));
        }
        Ok(self.value_at(r))
    }

    /// `V(r)` without the radius check; `r > cutoff` gives exactly zero.
    pub fn value_at(&self, r: f64) -> f64 {
        if r > self.cutoff {
            return 0.0;
        }
        match &self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::SquareWell { depth } => -depth,
            PotentialKind::PiecewiseConstant { pieces } => pieces
                .iter()
                .find(|p| r <= p.outer)
                .map_or(0.0, |p| p.value),
            PotentialKind::Tabulated { r: rs, v } => interpolate(rs, v, r),
        }
    }

    /// Largest `|V|` anywhere.
    pub fn max_abs(&self) -> f64 {
        match &self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::SquareWell { depth } => depth.abs(),
            PotentialKind::PiecewiseConstant { pieces } => {
                pieces.iter().map(|p| p.value.abs()).fold(0.0, f64::max)
            }
            PotentialKind::Tabulated { v, .. } => v.iter().map(|x| x.abs()).fold(0.0, f64::max),
        }
    }

    /// Radii where the potential or its slope may jump, `cutoff` last.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = match &self.kind {
            PotentialKind::PiecewiseConstant { pieces } => pieces.iter().map(|p| p.outer).collect(),
            PotentialKind::Tabulated { r, .. } => r.clone(),
            _ => Vec::new(),
        };
        pts.retain(|&r| r > 0.0 && r < self.cutoff);
        pts.push(self.cutoff);
        pts
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let kind = match &self.kind {
            PotentialKind::Zero => PotentialKind::Zero,
            PotentialKind::SquareWell { depth } => PotentialKind::SquareWell {
                depth: depth * factor,
            },
            PotentialKind::PiecewiseConstant { pieces } => PotentialKind::PiecewiseConstant {
                pieces: pieces
                    .iter()
                    .map(|p| Piece {
                        outer: p.outer,
                        value: p.value * factor,
                    })
                    .collect(),
            },
            PotentialKind::Tabulated { r, v } => PotentialKind::Tabulated {
                r: r.clone(),
                v: v.iter().map(|x| x * factor).collect(),
            },
        };
        PotentialSpec {
            kind,
            cutoff: self.cutoff,
        }
    }

    /// Dimensionless strength `a sqrt(max|V|)`; equals `k0 a` for a square well.
    pub fn strength(&self) -> f64 {
        self.cutoff * self.max_abs().sqrt()
    }

    /// Same shape rescaled to strength `k0a`. A zero strength gives the zero
    /// potential; a shape with no strength stays as it is.
    pub fn with_strength(&self, k0a: f64) -> Self {
        if k0a == 0.0 {
            return Self::zero(self.cutoff);
        }
        if let PotentialKind::SquareWell { .. } = self.kind {
            return Self::square_well_k0a(k0a, self.cutoff);
        }
        let s = self.strength();
        if s == 0.0 {
            return self.clone();
        }
        self.scaled((k0a / s).powi(2))
    }

    /// Sum of two potentials sharing a cutoff.
    pub fn try_add(&self, other: &Self) -> Result<Self, PotentialError> {
        if self.cutoff != other.cutoff {
            return Err(PotentialError::CutoffMismatch(self.cutoff, other.cutoff));
        }
        use PotentialKind::*;
        match (&self.kind, &other.kind) {
            (Zero, _) => Ok(other.clone()),
            (_, Zero) => Ok(self.clone()),
            (SquareWell { depth: d1 }, SquareWell { depth: d2 }) => {
                Ok(Self::square_well(d1 + d2, self.cutoff))
            }
            (Tabulated { r: r1, .. }, Tabulated { r: r2, .. }) => {
                // below the first sample a table is held constant, so the
                // merged table is exact only when both start at one radius
                if r1.first() != r2.first() {
                    return Err(PotentialError::UnsupportedSum("tabulated", "tabulated"));
                }
                let mut r: Vec<f64> = r1.iter().chain(r2).copied().collect();
                r.sort_by(f64::total_cmp);
                r.dedup();
                let v = r.iter().map(|&x| self.value_at(x) + other.value_at(x)).collect();
                Ok(Self::tabulated(r, v, self.cutoff))
            }
            (Tabulated { .. }, _) | (_, Tabulated { .. }) => Err(PotentialError::UnsupportedSum(
                self.kind.name(),
                other.kind.name(),
            )),
            _ => {
                let mut outer = self.breakpoints();
                outer.extend(other.breakpoints());
                outer.sort_by(f64::total_cmp);
                outer.dedup();
                let mut inner = 0.0;
                let pieces = outer
                    .iter()
                    .map(|&o| {
                        let mid = 0.5 * (inner + o);
                        inner = o;
                        Piece {
                            outer: o,
                            value: self.value_at(mid) + other.value_at(mid),
                        }
                    })
                    .collect();
                Ok(Self::piecewise_constant(pieces))
            }
        }
    }

    pub fn validate(&self) -> ValidationReport {
        let mut out = Vec::new();
        let a = self.cutoff;
        if !(a.is_finite() && a > 0.0) {
            out.push(Violation::Cutoff(a));
            return ValidationReport { violations: out };
        }
        match &self.kind {
            PotentialKind::Zero => {}
            PotentialKind::SquareWell { depth } => {
                if !depth.is_finite() {
                    out.push(Violation::NonFinite("potential.depth".into()));
                }
            }
            PotentialKind::PiecewiseConstant { pieces } => {
                if pieces.is_empty() {
                    out.push(Violation::Grid("no pieces".into()));
                }
                let mut prev = 0.0;
                for p in pieces {
                    if !(p.outer.is_finite() && p.value.is_finite()) {
                        out.push(Violation::NonFinite(format!("piece ending at {}", p.outer)));
                    }
                    if !(p.outer > prev) {
                        out.push(Violation::Grid(format!(
                            "piece radii must increase strictly ({} after {prev})",
                            p.outer
                        )));
                    }
                    prev = p.outer;
                }
                if let Some(last) = pieces.last() {
                    if last.outer > a {
                        out.push(Violation::Range(format!("piece ends at {} beyond cutoff {a}", last.outer)));
                    }
                }
            }
            PotentialKind::Tabulated { r, v } => validate_table(r, v, a, &mut out),
        }
        ValidationReport { violations: out }
    }

    /// `int_0^a V(r) dr` by adaptive Simpson on each smooth piece.
    pub fn integral_line(&self) -> Result<f64, PotentialError> {
        let report = self.validate();
        if !report.is_ok() {
            return Err(PotentialError::Invalid(report));
        }
        let mut total = 0.0;
        let mut lo = 0.0;
        for hi in self.breakpoints() {
            // evaluate just inside each piece so jumps at the ends are excluded
            let f = |r: f64| self.value_at(r.clamp(lo + (hi - lo) * 1e-15, hi));
            total += adaptive_simpson(&f, lo, hi, 1e-13 * (hi - lo).max(1e-300), 50);
            lo = hi;
        }
        Ok(total)
    }

    /// Flat config text that [`PotentialSpec::from_config`] reads back exactly.
    pub fn to_config_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "potential.kind = {}", self.kind.name());
        let _ = writeln!(s, "potential.radius = {}", fmt_f64(self.cutoff));
        match &self.kind {
            PotentialKind::Zero => {}
            PotentialKind::SquareWell { depth } => {
                let _ = writeln!(s, "potential.depth = {}", fmt_f64(*depth));
            }
            PotentialKind::PiecewiseConstant { pieces } => {
                let body: Vec<String> = pieces
                    .iter()
                    .map(|p| format!("{}:{}", fmt_f64(p.outer), fmt_f64(p.value)))
                    .collect();
                let _ = writeln!(s, "potential.pieces = {}", body.join(","));
            }
            PotentialKind::Tabulated { r, v } => {
                let body: Vec<String> = r
                    .iter()
                    .zip(v)
                    .map(|(r, v)| format!("{}:{}", fmt_f64(*r), fmt_f64(*v)))
                    .collect();
                let _ = writeln!(s, "potential.samples = {}", body.join(","));
            }
        }
        s
    }

    /// Builds and validates a spec from the `potential.*` keys.
    pub fn from_config(cfg: &FlatConfig) -> Result<Self, ConfigError> {
        let kind = cfg.require("potential.kind")?;
        let radius: f64 = cfg.require_value("potential.radius")?;
        if !(radius.is_finite() && radius > 0.0) {
            return Err(ConfigError::invalid("potential.radius", "must be positive and finite"));
        }
        let spec = match kind {
            "zero" => Self::zero(radius),
            "square_well" => Self::square_well(cfg.require_value("potential.depth")?, radius),
            "piecewise_constant" => {
                let text = cfg.require("potential.pieces")?;
                let pairs = parse_pairs(text).map_err(|m| ConfigError::invalid("potential.pieces", m))?;
                let pieces: Vec<Piece> = pairs
                    .into_iter()
                    .map(|(outer, value)| Piece { outer, value })
                    .collect();
                match pieces.last() {
                    Some(p) if p.outer != radius => {
                        return Err(ConfigError::invalid(
                            "potential.pieces",
                            format!("last piece must end at potential.radius = {radius}"),
                        ))
                    }
                    _ => {}
                }
                Self::piecewise_constant(pieces)
            }
            "tabulated" => {
                let (r, v) = match (cfg.get("potential.table"), cfg.get("potential.samples")) {
                    (Some(_), Some(_)) => {
                        return Err(ConfigError::invalid(
                            "potential.table",
                            "give either potential.table or potential.samples, not both",
                        ))
                    }
                    (Some(path), None) => read_table(&cfg.resolve_path(path))?,
                    (None, Some(text)) => parse_pairs(text)
                        .map_err(|m| ConfigError::invalid("potential.samples", m))?
                        .into_iter()
                        .unzip(),
                    (None, None) => return Err(ConfigError::Missing("potential.table".into())),
                };
                Self::tabulated(r, v, radius)
            }
            other => {
                return Err(ConfigError::invalid(
                    "potential.kind",
                    format!("unknown kind `{other}` (expected zero, square_well, piecewise_constant, tabulated)"),
                ))
            }
        };
        let report = spec.validate();
        if !report.is_ok() {
            let key = match spec.kind {
                PotentialKind::Tabulated { .. } => "potential.table",
                PotentialKind::PiecewiseConstant { .. } => "potential.pieces",
                PotentialKind::SquareWell { .. } => "potential.depth",
                PotentialKind::Zero => "potential.radius",
            };
            return Err(ConfigError::invalid(key, report.to_string()));
        }
        Ok(spec)
    }

    /// Loads a config document from disk.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_config(&FlatConfig::load(path)?)
    }

    /// Parses inline config text; relative table paths resolve against the
    /// working directory.
    pub fn load_str(text: &str) -> Result<Self, ConfigError> {
        Self::from_config(&FlatConfig::parse(text)?)
    }

    /// Short stable fingerprint of the spec, used to tag derived data.
    pub fn fingerprint(&self) -> String {
        // FNV-1a over the canonical config text
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.to_config_text().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        format!("{h:016x}")
    }
}

fn interpolate(rs: &[f64], v: &[f64], r: f64) -> f64 {
    if rs.is_empty() {
        return 0.0;
    }
    if r <= rs[0] {
        return v[0];
    }
    let i = rs.partition_point(|&x| x < r);
    if i >= rs.len() {
        return *v.last().unwrap();
    }
    let (r0, r1) = (rs[i - 1], rs[i]);
    let t = (r - r0) / (r1 - r0);
    v[i - 1] + t * (v[i] - v[i - 1])
}

fn validate_table(r: &[f64], v: &[f64], a: f64, out: &mut Vec<Violation>) {
    if r.len() != v.len() {
        out.push(Violation::Grid(format!("{} radii but {} values", r.len(), v.len())));
        return;
    }
    if r.len() < 2 {
        out.push(Violation::Grid("table needs at least two samples".into()));
        return;
    }
    if r.iter().chain(v).any(|x| !x.is_finite()) {
        out.push(Violation::NonFinite("potential.table".into()));
        return;
    }
    if !(r[0] > 0.0) {
        out.push(Violation::Grid(format!("first radius must be positive, got {}", r[0])));
    }
    if let Some(w) = r.windows(2).find(|w| !(w[1] > w[0])) {
        out.push(Violation::Grid(format!(
            "radii must increase strictly ({} after {})",
            w[1], w[0]
        )));
        return;
    }
    let last = r.len() - 1;
    if r[last] > a {
        out.push(Violation::Range(format!("sample at r = {} beyond cutoff {a}", r[last])));
    } else if r[last] == a && v[last] != 0.0 {
        out.push(Violation::Range(format!(
            "sample at r = a = {a} must be 0, got {}",
            v[last]
        )));
    }
    // |r V| must fall toward the origin over the smallest decade
    // samples at the cutoff itself are pinned to zero and say nothing here
    let decade_end = (r[0] * 10.0).min(a * (1.0 - 1e-12));
    let n = r.iter().take_while(|&&x| x <= decade_end).count();
    if n < 2 {
        return;
    }
    let rv: Vec<f64> = r[..n].iter().zip(v).map(|(r, v)| (r * v).abs()).collect();
    let rising_inward = rv.windows(2).any(|w| w[0] > w[1] * (1.0 + 1e-12));
    let flat_nonzero = rv[0] > 0.0 && rv[0] >= rv[n - 1] * (1.0 - 1e-12);
    if rising_inward || flat_nonzero {
        out.push(Violation::OriginSingularity { r: r[0], r_v: rv[0] });
    }
}

fn parse_pairs(text: &str) -> Result<Vec<(f64, f64)>, String> {
    text.split(',')
        .map(|item| {
            let (a, b) = item
                .split_once(':')
                .ok_or_else(|| format!("expected `r:value`, got `{}`", item.trim()))?;
            let a = a.trim().parse::<f64>().map_err(|e| format!("`{}`: {e}", a.trim()))?;
            let b = b.trim().parse::<f64>().map_err(|e| format!("`{}`: {e}", b.trim()))?;
            Ok((a, b))
        })
        .collect()
}

/// Reads a two-column CSV with header `r,V`.
pub fn read_table(path: &Path) -> Result<(Vec<f64>, Vec<f64>), ConfigError> {
    let table_err = |msg: String| ConfigError::Table {
        path: path.to_path_buf(),
        msg,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| table_err(e.to_string()))?;
    let headers = rdr.headers().map_err(|e| table_err(e.to_string()))?.clone();
    if headers.len() != 2 || &headers[0] != "r" || &headers[1] != "V" {
        return Err(table_err(format!("header must be `r,V`, got `{}`", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut r = Vec::new();
    let mut v = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| table_err(e.to_string()))?;
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| table_err(format!("row {}: `{s}`: {e}", i + 2)))
        };
        r.push(parse(&rec[0])?);
        v.push(parse(&rec[1])?);
    }
    Ok((r, v))
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, depth)
}
