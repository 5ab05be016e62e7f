//! Model parameters, equilibrium phases and momentum grids.
//!
//! All energies are in units of the exchange J and all times in units of ħ/J.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use crate::bdg;
use crate::error::{invalid, Error, Result};

/// Default tolerance on the boundary functions.
pub const BOUNDARY_TOL: f64 = 1e-9;

/// One point of the model: anisotropy γ, uniform field λ₁ = h₁/J,
/// alternating field λ₂ = h₂/J and DM strength d = D/J.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingSet {
    pub gamma: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub dm: f64,
}

impl CouplingSet {
    pub fn new(gamma: f64, lambda1: f64, lambda2: f64, dm: f64) -> Result<Self> {
        let g = Self { gamma, lambda1, lambda2, dm };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma", self.gamma),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("dm", self.dm),
        ] {
            if !v.is_finite() {
                return Err(invalid(name, format!("must be finite, got {v}")));
            }
        }
        if self.gamma == 0.0 {
            return Err(invalid("gamma", "anisotropy must be nonzero"));
        }
        Ok(())
    }

    /// Same anisotropy, new fields.
    pub fn with_fields(&self, lambda1: f64, lambda2: f64, dm: f64) -> Self {
        Self { gamma: self.gamma, lambda1, lambda2, dm }
    }

    pub fn get(&self, axis: Axis) -> f64 {
        match axis {
            Axis::Lambda1 => self.lambda1,
            Axis::Lambda2 => self.lambda2,
            Axis::Dm => self.dm,
        }
    }

    pub fn set(&mut self, axis: Axis, value: f64) {
        match axis {
            Axis::Lambda1 => self.lambda1 = value,
            Axis::Lambda2 => self.lambda2 = value,
            Axis::Dm => self.dm = value,
        }
    }
}

/// A sudden quench g₀ → g₁ at fixed anisotropy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuenchSpec {
    pub initial: CouplingSet,
    pub target: CouplingSet,
}

impl QuenchSpec {
    /// Validates both points, the shared anisotropy, and that the initial
    /// point has a unique gapped ground state (not chiral, not on a boundary).
    pub fn new(initial: CouplingSet, target: CouplingSet) -> Result<Self> {
        initial.validate()?;
        target.validate()?;
        if initial.gamma != target.gamma {
            return Err(invalid(
                "gamma",
                format!("anisotropy is not quenched (initial {}, final {})", initial.gamma, target.gamma),
            ));
        }
        match classify_phase(&initial, BOUNDARY_TOL)? {
            PhaseLabel::Ch => {
                return Err(Error::InadmissibleInitialState {
                    reason: "initial point lies in the gapless chiral phase".into(),
                })
            }
            PhaseLabel::Boundary => {
                return Err(Error::InadmissibleInitialState {
                    reason: "initial point lies on a critical surface".into(),
                })
            }
            _ => {}
        }
        Ok(Self { initial, target })
    }

    pub fn is_trivial(&self) -> bool {
        self.initial == self.target
    }
}

/// Equilibrium phase of a parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhaseLabel {
    PmI,
    PmII,
    Afm,
    Ch,
    Boundary,
}

impl PhaseLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            PhaseLabel::PmI => "PM-I",
            PhaseLabel::PmII => "PM-II",
            PhaseLabel::Afm => "AFM",
            PhaseLabel::Ch => "CH",
            PhaseLabel::Boundary => "BOUNDARY",
        }
    }

    pub fn is_disordered(&self) -> bool {
        matches!(self, PhaseLabel::PmI | PhaseLabel::PmII)
    }
}

impl fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The four boundary functions `[B₁, B₂, B₃, B₄]`:
///
/// * `B₁ = λ₁² − 1 − λ₂²`            (PM-I ↔ AFM, d < γ)
/// * `B₂ = λ₂² − λ₁² − γ² + d²`      (PM-II ↔ AFM, d < γ)
/// * `B₃ = λ₁² − 1 − λ₂² − d² + γ²`  (PM-I ↔ CH, d > γ)
/// * `B₄ = λ₁² − λ₂²`                (PM-II ↔ CH, d > γ)
pub fn boundary_values(g: &CouplingSet) -> [f64; 4] {
    let l1 = g.lambda1 * g.lambda1;
    let l2 = g.lambda2 * g.lambda2;
    let gm = g.gamma * g.gamma;
    let d = g.dm * g.dm;
    [l1 - 1.0 - l2, l2 - l1 - gm + d, l1 - 1.0 - l2 - d + gm, l1 - l2]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Regime {
    WeakDm,
    Degenerate,
    StrongDm,
}

fn regime(g: &CouplingSet, tol: f64) -> Regime {
    let (d, gm) = (g.dm.abs(), g.gamma.abs());
    if (d - gm).abs() <= tol {
        Regime::Degenerate
    } else if d < gm {
        Regime::WeakDm
    } else {
        Regime::StrongDm
    }
}

/// Classifies `g` by the signs of the boundary functions that are active in
/// its DM regime. Negative `d` is classified by `|d|` (the boundaries depend
/// on d² only); `|d| = |γ|` is reported as [`PhaseLabel::Boundary`].
pub fn classify_phase(g: &CouplingSet, tol: f64) -> Result<PhaseLabel> {
    let b = boundary_values(g);
    let label = match regime(g, tol) {
        Regime::Degenerate => PhaseLabel::Boundary,
        Regime::WeakDm => {
            if b[0].abs() <= tol || b[1].abs() <= tol {
                PhaseLabel::Boundary
            } else if b[0] > 0.0 && b[1] < 0.0 {
                PhaseLabel::PmI
            } else if b[1] > 0.0 && b[0] < 0.0 {
                PhaseLabel::PmII
            } else if b[0] < 0.0 && b[1] < 0.0 {
                PhaseLabel::Afm
            } else {
                return Err(Error::AmbiguousRegion { signs: b });
            }
        }
        Regime::StrongDm => {
            if b[2].abs() <= tol || b[3].abs() <= tol {
                PhaseLabel::Boundary
            } else if b[2] > 0.0 && b[3] > 0.0 {
                PhaseLabel::PmI
            } else if b[3] < 0.0 && b[2] < 0.0 {
                PhaseLabel::PmII
            } else if b[2] < 0.0 && b[3] > 0.0 {
                PhaseLabel::Ch
            } else {
                return Err(Error::AmbiguousRegion { signs: b });
            }
        }
    };
    Ok(label)
}

/// Quadrature nodes and weights on (0, π/2).
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid {
    phis: Vec<f64>,
    weights: Vec<f64>,
}

impl MomentumGrid {
    /// Midpoint rule with `n_modes` cells; never touches 0 or π/2.
    pub fn midpoint(n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(invalid("n_modes", "must be positive"));
        }
        let h = FRAC_PI_2 / n_modes as f64;
        let phis = (0..n_modes).map(|k| (k as f64 + 0.5) * h).collect();
        Ok(Self { phis, weights: vec![h; n_modes] })
    }

    /// The N/4 momenta of an N-site ring in the antiperiodic fermion sector,
    /// φ_p = (2p − 1)π/N, each weighted 2π/N so that the quadrature rule
    /// reproduces −(1/N) log L exactly.
    pub fn finite_chain(n_sites: usize) -> Result<Self> {
        if n_sites < 4 || !n_sites.is_multiple_of(4) {
            return Err(invalid("size", format!("chain length must be a positive multiple of 4, got {n_sites}")));
        }
        let n = n_sites as f64;
        let phis = (1..=n_sites / 4).map(|p| (2 * p - 1) as f64 * std::f64::consts::PI / n).collect();
        Ok(Self { phis, weights: vec![2.0 * std::f64::consts::PI / n; n_sites / 4] })
    }

    pub fn from_points(phis: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if phis.is_empty() || phis.len() != weights.len() {
            return Err(invalid("grid", "need equally many (nonzero) nodes and weights"));
        }
        if phis.iter().any(|&p| !(p > 0.0 && p < FRAC_PI_2)) {
            return Err(invalid("grid", "nodes must lie strictly inside (0, π/2)"));
        }
        if phis.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("grid", "nodes must be strictly increasing"));
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(invalid("grid", "weights must be positive"));
        }
        Ok(Self { phis, weights })
    }

    pub fn n_modes(&self) -> usize {
        self.phis.len()
    }

    pub fn phis(&self) -> &[f64] {
        &self.phis
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Smallest single-quasiparticle excitation energy `min_k |ω_k(φ)|` over the
/// grid. Vanishes on the critical surfaces and inside the chiral phase.
pub fn min_quasiparticle_gap(g: &CouplingSet, grid: &MomentumGrid) -> f64 {
    grid.phis()
        .iter()
        .map(|&phi| {
            bdg::mode_levels(g, phi).iter().map(|e| e.abs()).fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Fraction of grid modes whose 4×4 block does not have exactly two negative
/// levels. Nonzero only where the Bogoliubov vacuum is not the block ground
/// state (the chiral phase).
pub fn inverted_mode_fraction(g: &CouplingSet, grid: &MomentumGrid) -> f64 {
    let inverted = grid
        .phis()
        .iter()
        .filter(|&&phi| bdg::mode_levels(g, phi).iter().filter(|&&e| e < 0.0).count() != 2)
        .count();
    inverted as f64 / grid.n_modes() as f64
}

/// Coordinate axes of the (λ₁, λ₂, d) parameter space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Lambda1,
    Lambda2,
    Dm,
}

impl Axis {
    pub fn name(&self) -> &'static str {
        match self {
            Axis::Lambda1 => "lambda1",
            Axis::Lambda2 => "lambda2",
            Axis::Dm => "d",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "lambda1" | "l1" => Some(Axis::Lambda1),
            "lambda2" | "l2" => Some(Axis::Lambda2),
            "d" | "dm" => Some(Axis::Dm),
            _ => None,
        }
    }
}

/// A 2-D slice of parameter space: two free axes, the third held at `fixed`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub x: Axis,
    pub y: Axis,
    pub fixed: f64,
}

impl Plane {
    pub fn new(x: Axis, y: Axis, fixed: f64) -> Result<Self> {
        if x == y {
            return Err(invalid("plane", "the two scan axes must differ"));
        }
        Ok(Self { x, y, fixed })
    }

    pub fn fixed_axis(&self) -> Axis {
        [Axis::Lambda1, Axis::Lambda2, Axis::Dm]
            .into_iter()
            .find(|a| *a != self.x && *a != self.y)
            .expect("three axes, two taken")
    }

    /// The parameter point at plane coordinates (x, y), anisotropy from `base`.
    pub fn point(&self, base: &CouplingSet, x: f64, y: f64) -> CouplingSet {
        let mut g = base.with_fields(0.0, 0.0, 0.0);
        g.set(self.fixed_axis(), self.fixed);
        g.set(self.x, x);
        g.set(self.y, y);
        g
    }
}

/// A rectangular grid of plane coordinates, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2d {
    pub x_range: (f64, f64),
    pub nx: usize,
    pub y_range: (f64, f64),
    pub ny: usize,
}

impl Grid2d {
    pub fn new(x_range: (f64, f64), nx: usize, y_range: (f64, f64), ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(invalid("grid2d", "both axes need at least one point"));
        }
        Ok(Self { x_range, nx, y_range, ny })
    }

    fn coord(range: (f64, f64), n: usize, i: usize) -> f64 {
        if n == 1 {
            range.0
        } else {
            range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64
        }
    }

    /// Grid points, x varying fastest.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut pts = Vec::with_capacity(self.nx * self.ny);
        for j in 0..self.ny {
            for i in 0..self.nx {
                pts.push((Self::coord(self.x_range, self.nx, i), Self::coord(self.y_range, self.ny, j)));
            }
        }
        pts
    }
}

/// Result of walking the straight segment g₀ → g₁.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentCrossing {
    pub crosses: bool,
    /// Segment parameters s ∈ [0, 1] where a critical surface is met.
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
struct SegmentState {
    label: Option<PhaseLabel>,
    regime: Regime,
    signs: Vec<bool>,
}

fn segment_state(g: &CouplingSet) -> SegmentState {
    let b = boundary_values(g);
    let regime = regime(g, BOUNDARY_TOL);
    let signs = match regime {
        Regime::WeakDm => vec![b[0] > 0.0, b[1] > 0.0],
        // B₄ factorises into the two lines λ₁ = ±λ₂, which cross at the origin.
        Regime::StrongDm => vec![b[2] > 0.0, g.lambda1 > g.lambda2, g.lambda1 > -g.lambda2],
        Regime::Degenerate => Vec::new(),
    };
    SegmentState { label: classify_phase(g, BOUNDARY_TOL).ok(), regime, signs }
}

fn states_differ(a: &SegmentState, b: &SegmentState) -> bool {
    if a.label != b.label || a.label == Some(PhaseLabel::Boundary) || b.label == Some(PhaseLabel::Boundary) {
        return true;
    }
    a.regime == b.regime && a.signs != b.signs
}

fn lerp(q: &QuenchSpec, s: f64) -> CouplingSet {
    let (a, b) = (&q.initial, &q.target);
    a.with_fields(
        a.lambda1 + s * (b.lambda1 - a.lambda1),
        a.lambda2 + s * (b.lambda2 - a.lambda2),
        a.dm + s * (b.dm - a.dm),
    )
}

/// Samples the boundary functions along g₀ → g₁ and reports every place where
/// a critical surface is crossed or touched.
pub fn segment_crosses_boundary(q: &QuenchSpec, samples: usize) -> Result<SegmentCrossing> {
    if samples < 2 {
        return Err(invalid("samples", "need at least two samples"));
    }
    if q.is_trivial() {
        return Ok(SegmentCrossing { crosses: false, params: Vec::new() });
    }
    let s_at = |k: usize| k as f64 / (samples - 1) as f64;
    let mut params: Vec<f64> = Vec::new();
    let mut prev = segment_state(&lerp(q, 0.0));
    if prev.label == Some(PhaseLabel::Boundary) {
        params.push(0.0);
    }
    for k in 1..samples {
        let (sa, sb) = (s_at(k - 1), s_at(k));
        let cur = segment_state(&lerp(q, sb));
        if cur.label == Some(PhaseLabel::Boundary) {
            params.push(sb);
        } else if prev.label != Some(PhaseLabel::Boundary) && states_differ(&prev, &cur) {
            // Locate the switch between the two samples.
            let (mut lo, mut hi) = (sa, sb);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if states_differ(&prev, &segment_state(&lerp(q, mid))) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            params.push(0.5 * (lo + hi));
        }
        prev = cur;
    }
    params.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    Ok(SegmentCrossing { crosses: !params.is_empty(), params })
}
