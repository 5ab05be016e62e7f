//! Loschmidt amplitude, rate function and critical times in the
//! thermodynamic limit.
//!
//! The amplitude factorises over momenta, G(t) = Π_p G_p(t), and the rate
//! function is F(t) = −(1/π) ∫₀^{π/2} log|G_φ(t)| dφ. A dynamical transition
//! happens at every (φ*, t*) where a single mode amplitude vanishes.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;

use crate::bdg::{self, BogoliubovDecomp, ModeEcho};
use crate::error::{invalid, Error, Result};
use crate::linalg::{bisect, golden_section_min, pairwise_sum};
use crate::model::{CouplingSet, Grid2d, MomentumGrid, Plane, QuenchSpec};
use crate::C64;

/// Floor applied to |G_φ| before taking the logarithm.
pub const MODULUS_FLOOR: f64 = 1e-30;
/// Default |G_φ| threshold for accepting a critical point.
pub const DEFAULT_EPS_CRIT: f64 = 1e-6;
/// Critical times closer than this are the same event.
pub const DEDUP_TOL: f64 = 1e-3;

const RASTER_DT: f64 = 0.01;
const CANDIDATE_LEVEL: f64 = 0.25;
const DEGENERACY_NUDGE: f64 = 1e-10;

fn initial_frame(g: &CouplingSet, phi: f64) -> Result<BogoliubovDecomp> {
    let d = bdg::diagonalize_mode(&bdg::build_mode_matrix(g, phi)).map_err(|e| match e {
        Error::DegenerateMode { phi, gap } => Error::InadmissibleInitialState {
            reason: format!("initial block is degenerate at phi = {phi} (gap {gap:e})"),
        },
        other => other,
    })?;
    if !d.vacuum_is_ground() {
        return Err(Error::InadmissibleInitialState {
            reason: format!("Bogoliubov vacuum is not the block ground state at phi = {phi}; levels {:?}", d.omegas),
        });
    }
    Ok(d)
}

fn final_frame(g: &CouplingSet, phi: f64) -> BogoliubovDecomp {
    for p in [phi, phi + DEGENERACY_NUDGE, phi - DEGENERACY_NUDGE] {
        if let Ok(d) = bdg::diagonalize_mode(&bdg::build_mode_matrix(g, p)) {
            return d;
        }
    }
    // A level crossing at exactly this momentum: the echo is continuous
    // through it, so any consistent ordering of the levels will do.
    bdg::diagonalize_mode_unchecked(&bdg::build_mode_matrix(g, phi))
}

/// Echo weights and energies of the mode at `phi`.
pub fn mode_echo(q: &QuenchSpec, phi: f64) -> Result<ModeEcho> {
    let a = initial_frame(&q.initial, phi)?;
    let b = final_frame(&q.target, phi);
    Ok(bdg::QuenchOverlap { phi, q: a.frame.adjoint() * b.frame, omegas_initial: a.omegas, omegas_final: b.omegas }
        .echo())
}

/// G_φ(t) for a single mode.
pub fn mode_amplitude(q: &QuenchSpec, phi: f64, t: f64) -> Result<C64> {
    Ok(mode_echo(q, phi)?.amplitude(t))
}

/// Mode echoes on a quadrature grid, computed once and reused for all times.
#[derive(Debug, Clone)]
pub struct EchoTable {
    pub echoes: Vec<ModeEcho>,
    pub weights: Vec<f64>,
}

impl EchoTable {
    pub fn new(q: &QuenchSpec, grid: &MomentumGrid) -> Result<Self> {
        let echoes = grid
            .phis()
            .par_iter()
            .map(|&phi| mode_echo(q, phi))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { echoes, weights: grid.weights().to_vec() })
    }

    pub fn rate(&self, t: f64) -> f64 {
        let terms: Vec<f64> = self
            .echoes
            .iter()
            .zip(&self.weights)
            .map(|(e, w)| w * e.amplitude(t).norm().max(MODULUS_FLOOR).ln())
            .collect();
        -pairwise_sum(&terms) / std::f64::consts::PI
    }

    /// Grid index and value of the smallest |G_φ(t)|.
    pub fn min_modulus(&self, t: f64) -> (usize, f64) {
        self.echoes
            .iter()
            .map(|e| e.amplitude(t).norm())
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc })
    }
}

/// Times 0, dt, 2dt, … up to and including `t_max` (within rounding).
pub fn time_grid(t_max: f64, dt: f64) -> Result<Vec<f64>> {
    if !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(invalid("t_max", "must be finite and non-negative"));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid("dt", "must be positive"));
    }
    let n = (t_max / dt + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| k as f64 * dt).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateSeries {
    pub times: Vec<f64>,
    pub rate: Vec<f64>,
}

pub fn rate_function(q: &QuenchSpec, grid: &MomentumGrid, times: &[f64]) -> Result<RateSeries> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(invalid("times", "must be finite"));
    }
    let table = EchoTable::new(q, grid)?;
    let rate = times.par_iter().map(|&t| table.rate(t)).collect();
    Ok(RateSeries { times: times.to_vec(), rate })
}

/// Smallest |G_φ(t)| over φ ∈ (0, π/2): grid scan followed by a golden-section
/// refinement around the best node. Returns `(φ, |G_φ(t)|)`.
pub fn min_mode_modulus(q: &QuenchSpec, grid: &MomentumGrid, t: f64) -> Result<(f64, f64)> {
    let table = EchoTable::new(q, grid)?;
    let (i, v) = table.min_modulus(t);
    let phis = grid.phis();
    let lo = if i == 0 { phis[0] * 1e-3 } else { phis[i - 1] };
    let hi = if i + 1 == phis.len() { FRAC_PI_2 - (FRAC_PI_2 - phis[i]) * 1e-3 } else { phis[i + 1] };
    let mut err = None;
    let (phi, fv) = golden_section_min(
        |p| match mode_amplitude(q, p, t) {
            Ok(z) => z.norm(),
            Err(e) => {
                err = Some(e);
                f64::INFINITY
            }
        },
        lo,
        hi,
        1e-12,
    );
    if let Some(e) = err {
        return Err(e);
    }
    Ok(if fv < v { (phi, fv) } else { (phis[i], v) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub t: f64,
    pub phi: f64,
    /// |G_φ*(t*)| at the refined point.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacingStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalTimes {
    pub points: Vec<CriticalPoint>,
    /// Times where the sampled rate function has a cusp-like kink.
    pub cusp_times: Vec<f64>,
    pub t_max: f64,
}

impl CriticalTimes {
    /// True when exactly one of the zero search and the cusp detector
    /// reports a transition.
    pub fn detectors_disagree(&self) -> bool {
        self.points.is_empty() != self.cusp_times.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t).collect()
    }

    pub fn spacing(&self) -> Option<SpacingStats> {
        if self.points.len() < 2 {
            return None;
        }
        let gaps: Vec<f64> = self.points.windows(2).map(|w| w[1].t - w[0].t).collect();
        Some(SpacingStats {
            min: gaps.iter().cloned().fold(f64::INFINITY, f64::min),
            max: gaps.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            mean: gaps.iter().sum::<f64>() / gaps.len() as f64,
        })
    }
}

/// Newton iteration on (Re G, Im G) = 0 in the (φ, t) plane.
fn newton_polish(q: &QuenchSpec, mut phi: f64, mut t: f64) -> Result<(f64, f64, f64)> {
    const H: f64 = 1e-6;
    let mut echo = mode_echo(q, phi)?;
    let mut z = echo.amplitude(t);
    for _ in 0..40 {
        if z.norm() < 1e-14 {
            break;
        }
        let dz_dt = echo.amplitude_dt(t);
        let zp = mode_echo(q, (phi + H).min(FRAC_PI_2 - 1e-15))?.amplitude(t);
        let zm = mode_echo(q, (phi - H).max(1e-15))?.amplitude(t);
        let dz_dphi = (zp - zm) / (2.0 * H);
        let det = dz_dphi.re * dz_dt.im - dz_dt.re * dz_dphi.im;
        if det.abs() < 1e-300 {
            break;
        }
        let dphi = -(z.re * dz_dt.im - dz_dt.re * z.im) / det;
        let dt = -(dz_dphi.re * z.im - z.re * dz_dphi.im) / det;
        let mut step = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let (np, nt) = (phi + step * dphi, t + step * dt);
            if np > 0.0 && np < FRAC_PI_2 {
                let ne = mode_echo(q, np)?;
                let nz = ne.amplitude(nt);
                if nz.norm() < z.norm() {
                    phi = np;
                    t = nt;
                    echo = ne;
                    z = nz;
                    improved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !improved || (step * dphi).abs() + (step * dt).abs() < 1e-15 {
            break;
        }
    }
    Ok((phi, t, z.norm()))
}

fn refine_candidate(q: &QuenchSpec, phi0: f64, t0: f64, h_phi: f64) -> Result<(f64, f64, f64)> {
    let (mut phi, mut t) = (phi0, t0);
    for _ in 0..3 {
        let echo = mode_echo(q, phi)?;
        t = golden_section_min(|s| echo.amplitude(s).norm(), t - 2.0 * RASTER_DT, t + 2.0 * RASTER_DT, 1e-12).0;
        let lo = (phi - 2.0 * h_phi).max(0.25 * phi);
        let hi = (phi + 2.0 * h_phi).min(FRAC_PI_2 - 0.25 * (FRAC_PI_2 - phi));
        let mut err = None;
        phi = golden_section_min(
            |p| match mode_amplitude(q, p, t) {
                Ok(z) => z.norm(),
                Err(e) => {
                    err = Some(e);
                    f64::INFINITY
                }
            },
            lo,
            hi,
            1e-12,
        )
        .0;
        if let Some(e) = err {
            return Err(e);
        }
    }
    newton_polish(q, phi, t)
}

fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

/// Finds every t* ∈ (0, t_max] where some mode amplitude vanishes.
///
/// A raster over the quadrature nodes and a fine time grid picks out local
/// minima of |G_φ(t)|; each is refined by alternating line searches and a
/// Newton step on the complex zero, and accepted when the residual modulus
/// drops below `eps_crit`.
pub fn find_critical_times(q: &QuenchSpec, grid: &MomentumGrid, t_max: f64, eps_crit: f64) -> Result<CriticalTimes> {
    let ct = search_critical_times(q, grid, t_max, eps_crit)?;
    if ct.detectors_disagree() {
        log::warn!(
            "cusp detector disagrees with zero search: {} critical times, {} kinks",
            ct.points.len(),
            ct.cusp_times.len()
        );
    }
    Ok(ct)
}

fn search_critical_times(q: &QuenchSpec, grid: &MomentumGrid, t_max: f64, eps_crit: f64) -> Result<CriticalTimes> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(invalid("t_max", "must be positive and finite"));
    }
    if !(eps_crit > 0.0) {
        return Err(invalid("eps_crit", "must be positive"));
    }
    let table = EchoTable::new(q, grid)?;
    let n = table.echoes.len();
    let nt = (t_max / RASTER_DT).ceil() as usize + 1;

    let steps: Vec<[C64; 6]> =
        table.echoes.iter().map(|e| e.energies.map(|en| C64::from_polar(1.0, -en * RASTER_DT))).collect();
    let mut phases: Vec<[C64; 6]> = vec![[C64::new(1.0, 0.0); 6]; n];
    let mut rows: [Vec<f64>; 3] = [vec![f64::INFINITY; n], vec![f64::INFINITY; n], vec![f64::INFINITY; n]];
    let mut rate = Vec::with_capacity(nt + 1);
    let mut candidates: Vec<(usize, usize)> = Vec::new();
    let mut logs = vec![0.0; n];

    for k in 0..=nt {
        if k % 256 == 0 {
            let t = k as f64 * RASTER_DT;
            for (ph, e) in phases.iter_mut().zip(&table.echoes) {
                *ph = e.energies.map(|en| C64::from_polar(1.0, -en * t));
            }
        }
        rows.rotate_left(1);
        for i in 0..n {
            let e = &table.echoes[i];
            let z: C64 = (0..6).map(|s| phases[i][s] * e.weights[s]).sum();
            let m = z.norm();
            rows[2][i] = m;
            logs[i] = table.weights[i] * m.max(MODULUS_FLOOR).ln();
            for s in 0..6 {
                phases[i][s] *= steps[i][s];
            }
        }
        rate.push(-pairwise_sum(&logs) / std::f64::consts::PI);
        if k >= 2 {
            let [a, b, c] = &rows;
            for i in 0..n {
                let v = b[i];
                if v >= CANDIDATE_LEVEL {
                    continue;
                }
                let lo = i.saturating_sub(1);
                let hi = (i + 1).min(n - 1);
                let is_min = (lo..=hi).all(|j| v <= a[j] && v <= c[j] && (j == i || v <= b[j]));
                if is_min {
                    candidates.push((i, k - 1));
                }
            }
        }
    }

    let h_phi = if n > 1 { grid.phis()[1] - grid.phis()[0] } else { FRAC_PI_2 / 4.0 };
    let refined = candidates
        .par_iter()
        .map(|&(i, k)| refine_candidate(q, grid.phis()[i], k as f64 * RASTER_DT, h_phi))
        .collect::<Result<Vec<_>>>()?;
    let mut points: Vec<CriticalPoint> = refined
        .into_iter()
        .filter(|&(phi, t, r)| r < eps_crit && t > 0.0 && t <= t_max && phi > 0.0 && phi < FRAC_PI_2)
        .map(|(phi, t, residual)| CriticalPoint { t, phi, residual })
        .collect();
    points.sort_by(|a, b| a.t.total_cmp(&b.t));
    let mut dedup: Vec<CriticalPoint> = Vec::with_capacity(points.len());
    for p in points {
        match dedup.last_mut() {
            Some(last) if (p.t - last.t).abs() < DEDUP_TOL => {
                if p.residual < last.residual {
                    *last = p;
                }
            }
            _ => dedup.push(p),
        }
    }

    let second: Vec<f64> = rate.windows(3).map(|w| (w[2] - 2.0 * w[1] + w[0]).abs()).collect();
    let threshold = (50.0 * median(second.clone())).max(1e-12);
    let cusp_times: Vec<f64> = second
        .iter()
        .enumerate()
        .filter(|(k, &d)| d > threshold && (*k + 1) as f64 * RASTER_DT <= t_max)
        .map(|(k, _)| (k + 1) as f64 * RASTER_DT)
        .collect();
    Ok(CriticalTimes { points: dedup, cusp_times, t_max })
}

pub fn detect_dqpt(q: &QuenchSpec, grid: &MomentumGrid, t_max: f64, eps_crit: f64) -> Result<bool> {
    Ok(!find_critical_times(q, grid, t_max, eps_crit)?.points.is_empty())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub x: f64,
    pub y: f64,
    pub dqpt: bool,
    pub n_tstar: usize,
    pub first_tstar: Option<f64>,
    /// Set when the point could not be evaluated; the other fields are then
    /// placeholders.
    pub failure: Option<String>,
}

/// Runs the critical-time search for quenches from `initial` to every point
/// of `grid2d` in `plane`. Points that fail are kept as flagged rows.
pub fn scan_region(
    initial: &CouplingSet,
    plane: &Plane,
    grid2d: &Grid2d,
    momenta: &MomentumGrid,
    t_max: f64,
    eps_crit: f64,
) -> Result<Vec<ScanRow>> {
    // The initial point is shared by every row, so it is validated up front.
    QuenchSpec::new(*initial, *initial)?;
    let rows: Vec<(ScanRow, bool)> = grid2d
        .points()
        .par_iter()
        .map(|&(x, y)| {
            let res = QuenchSpec::new(*initial, plane.point(initial, x, y))
                .and_then(|q| search_critical_times(&q, momenta, t_max, eps_crit));
            match res {
                Ok(ct) => (
                    ScanRow {
                        x,
                        y,
                        dqpt: !ct.points.is_empty(),
                        n_tstar: ct.points.len(),
                        first_tstar: ct.points.first().map(|p| p.t),
                        failure: None,
                    },
                    ct.detectors_disagree(),
                ),
                Err(e) => {
                    let row = ScanRow { x, y, dqpt: false, n_tstar: 0, first_tstar: None, failure: Some(e.to_string()) };
                    (row, false)
                }
            }
        })
        .collect();
    let disagreements = rows.iter().filter(|r| r.1).count();
    if disagreements > 0 {
        log::warn!("cusp detector disagrees with zero search at {disagreements} of {} scan points", rows.len());
    }
    Ok(rows.into_iter().map(|r| r.0).collect())
}

/// Closed-form critical times for quenches with λ₂ = d = 0 in both points.
///
/// The mode amplitude then factorises into two-level pieces; one vanishes
/// when an entry of 𝒯 has unit modulus at φ* and
/// t* = (2n + 1)π / (ω_i − ω_{2+j}). Returns the `n_max` earliest times.
pub fn tfi_reference_times(q: &QuenchSpec, n_max: usize) -> Result<Vec<f64>> {
    for g in [&q.initial, &q.target] {
        if g.lambda2 != 0.0 || g.dm != 0.0 {
            return Err(invalid("quench", "closed form needs lambda2 = d = 0 on both sides"));
        }
    }
    const SAMPLES: usize = 4000;
    let t_entry = |phi: f64| -> Result<Option<(nalgebra::Matrix2<C64>, [f64; 4])>> {
        let a = initial_frame(&q.initial, phi)?;
        let b = final_frame(&q.target, phi);
        let ov = bdg::quench_overlap(&a, &b)?;
        Ok(ov.t_matrix().ok().map(|t| (t, ov.omegas_final)))
    };
    let level = |phi: f64, i: usize, j: usize| -> f64 {
        match t_entry(phi) {
            Ok(Some((t, _))) => t[(i, j)].norm() - 1.0,
            _ => f64::INFINITY,
        }
    };
    let phis: Vec<f64> = (0..SAMPLES).map(|k| (k as f64 + 0.5) * FRAC_PI_2 / SAMPLES as f64).collect();
    let mut times = Vec::new();
    for (i, j) in [(0, 0), (1, 1), (0, 1), (1, 0)] {
        let vals: Vec<f64> = phis.iter().map(|&p| level(p, i, j)).collect();
        for k in 1..SAMPLES {
            let (fa, fb) = (vals[k - 1], vals[k]);
            if !(fa.is_finite() && fb.is_finite()) || (fa < 0.0) == (fb < 0.0) {
                continue;
            }
            let root = bisect(|p| level(p, i, j), phis[k - 1], phis[k], 1e-15);
            if let Ok(Some((_, om))) = t_entry(root) {
                let gap = om[i] - om[2 + j];
                if gap > 0.0 {
                    times.extend((0..n_max).map(|n| (2 * n + 1) as f64 * std::f64::consts::PI / gap));
                }
            }
        }
    }
    if times.is_empty() {
        return Err(Error::NoSolution("no mode reaches |T| = 1; the quench does not cross a critical point".into()));
    }
    times.sort_by(f64::total_cmp);
    times.truncate(n_max);
    Ok(times)
}
