//! Bipartite and multipartite entanglement measures after a quench.
//!
//! Pair entanglement is the logarithmic negativity of nearest-neighbour
//! two-site states. Multipartite entanglement is the generalized geometric
//! measure (GGM), 1 − max over bipartitions of the largest Schmidt weight; the
//! effective version keeps only the one- and two-site reductions that
//! dominate for these translation-invariant states.

use nalgebra::{DMatrix, Matrix2, Matrix4};
use rayon::prelude::*;

use crate::ed::{self, SpinState};
use crate::error::{invalid, Error, Result};
use crate::model::{CouplingSet, Grid2d, Plane, QuenchSpec};
use crate::realspace::{self, LocalQuench};
use crate::C64;

const STATE_TOL: f64 = 1e-8;
/// Largest ring for the full GGM.
pub const MAX_GGM_SITES: usize = 12;

fn check_density_matrix(rho: &Matrix4<C64>) -> Result<()> {
    if crate::linalg::max_norm((rho - rho.adjoint()).iter()) > STATE_TOL {
        return Err(Error::InvalidState("density matrix is not Hermitian".into()));
    }
    if (rho.trace() - C64::new(1.0, 0.0)).norm() > STATE_TOL {
        return Err(Error::InvalidState(format!("trace {} differs from one", rho.trace())));
    }
    let min = rho.symmetric_eigenvalues().min();
    if min < -STATE_TOL {
        return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
    }
    Ok(())
}

/// Partial transpose on the second qubit.
pub fn partial_transpose(rho: &Matrix4<C64>) -> Matrix4<C64> {
    Matrix4::from_fn(|r, c| {
        let (a, b) = (r / 2, r % 2);
        let (ap, bp) = (c / 2, c % 2);
        rho[(2 * a + bp, 2 * ap + b)]
    })
}

/// N(ρ) = (‖ρ^{T_B}‖₁ − 1)/2, clipped at zero against rounding.
pub fn negativity(rho: &Matrix4<C64>) -> Result<f64> {
    check_density_matrix(rho)?;
    let pt = partial_transpose(rho);
    let pt = (pt + pt.adjoint()) * C64::new(0.5, 0.0);
    let norm: f64 = pt.symmetric_eigenvalues().iter().map(|e| e.abs()).sum();
    Ok(((norm - 1.0) / 2.0).max(0.0))
}

/// E_N = log₂(2N + 1).
pub fn log_negativity(rho: &Matrix4<C64>) -> Result<f64> {
    Ok((2.0 * negativity(rho)? + 1.0).log2())
}

/// 1 − max(μ_e, μ_o, μ_eo) from the largest eigenvalues of the even-site,
/// odd-site and even–odd pair reductions.
pub fn ggm_effective(mu_e: f64, mu_o: f64, mu_eo: f64) -> f64 {
    1.0 - mu_e.max(mu_o).max(mu_eo)
}

pub fn max_eigenvalue2(rho: &Matrix2<C64>) -> f64 {
    rho.symmetric_eigenvalues().max()
}

pub fn max_eigenvalue4(rho: &Matrix4<C64>) -> f64 {
    rho.symmetric_eigenvalues().max()
}

fn max_eigenvalue_dyn(rho: &DMatrix<C64>) -> f64 {
    rho.clone().symmetric_eigenvalues().max()
}

/// Full GGM: 1 − max over all bipartitions of the largest eigenvalue of the
/// smaller reduced state.
pub fn ggm_full(state: &SpinState) -> Result<f64> {
    let n = state.size;
    if n > MAX_GGM_SITES {
        return Err(Error::SizeLimit { size: n, limit: MAX_GGM_SITES, what: "full GGM" });
    }
    if (state.norm() - 1.0).abs() > STATE_TOL {
        return Err(Error::InvalidState(format!("state norm {} differs from one", state.norm())));
    }
    let mut best: f64 = 0.0;
    for mask in 1usize..(1 << n) {
        let k = mask.count_ones() as usize;
        // Each bipartition once: the side with at most N/2 sites, and for
        // equal halves the side without the last site.
        if 2 * k > n || (2 * k == n && mask & (1 << (n - 1)) != 0) {
            continue;
        }
        best = best.max(max_eigenvalue_dyn(&ed::bipartition_gram(state, mask)));
    }
    Ok(1.0 - best)
}

/// Which engine produced a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Covariance,
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntanglementSeries {
    pub times: Vec<f64>,
    /// Pair (2, 3) in 1-based site numbers: even site first.
    pub logneg_eo: Vec<f64>,
    /// Pair (1, 2): odd site first.
    pub logneg_oe: Vec<f64>,
    pub ggm: Vec<f64>,
    pub engine: Engine,
}

struct LocalRdms {
    rho_o: Matrix2<C64>,
    rho_e: Matrix2<C64>,
    rho_oe: Matrix4<C64>,
    rho_eo: Matrix4<C64>,
}

fn measures(r: &LocalRdms) -> Result<(f64, f64, f64)> {
    let ggm = ggm_effective(max_eigenvalue2(&r.rho_e), max_eigenvalue2(&r.rho_o), max_eigenvalue4(&r.rho_eo));
    Ok((log_negativity(&r.rho_eo)?, log_negativity(&r.rho_oe)?, ggm))
}

fn series_from(times: &[f64], engine: Engine, rdms: Vec<Result<LocalRdms>>) -> Result<EntanglementSeries> {
    let mut s = EntanglementSeries {
        times: times.to_vec(),
        logneg_eo: Vec::with_capacity(times.len()),
        logneg_oe: Vec::with_capacity(times.len()),
        ggm: Vec::with_capacity(times.len()),
        engine,
    };
    for r in rdms {
        let (eo, oe, g) = measures(&r?)?;
        s.logneg_eo.push(eo);
        s.logneg_oe.push(oe);
        s.ggm.push(g);
    }
    Ok(s)
}

/// Local measures along a quench, from the covariance engine on an N-site ring.
pub fn entanglement_series_covariance(q: &QuenchSpec, n: usize, times: &[f64]) -> Result<EntanglementSeries> {
    let h0 = realspace::build_bdg_realspace(&q.initial, n)?;
    let h1 = realspace::build_bdg_realspace(&q.target, n)?;
    let lq = LocalQuench::new(&h0, &h1, 3)?;
    let rdms = times
        .par_iter()
        .map(|&t| {
            let b = lq.block_at(t);
            Ok(LocalRdms {
                rho_o: realspace::rdm1_from_block(&b, 0),
                rho_e: realspace::rdm1_from_block(&b, 1),
                rho_oe: realspace::rdm2_from_block(&b, 0),
                rho_eo: realspace::rdm2_from_block(&b, 1),
            })
        })
        .collect();
    series_from(times, Engine::Covariance, rdms)
}

fn to_m2(m: &DMatrix<C64>) -> Matrix2<C64> {
    Matrix2::from_fn(|r, c| m[(r, c)])
}

fn to_m4(m: &DMatrix<C64>) -> Matrix4<C64> {
    Matrix4::from_fn(|r, c| m[(r, c)])
}

/// The same measures from exact states of an N-site ring.
pub fn entanglement_series_ed(q: &QuenchSpec, n: usize, times: &[f64]) -> Result<EntanglementSeries> {
    const CHUNK: usize = 128;
    let (_, gs) = ed::quench_initial_state(q, n)?;
    let h1 = ed::build_spin_hamiltonian(&q.target, n)?;
    let ev = ed::Evolver::new(&h1, &gs.state)?;
    let mut rdms = Vec::with_capacity(times.len());
    // States are produced in batches to bound memory at N = 12.
    for chunk in times.chunks(CHUNK) {
        let states = ev.states_at(chunk);
        rdms.extend(states.par_iter().map(ed_rdms).collect::<Vec<_>>());
    }
    series_from(times, Engine::Exact, rdms)
}

fn ed_rdms(s: &SpinState) -> Result<LocalRdms> {
    Ok(LocalRdms {
        rho_o: to_m2(&ed::rdm_partial_trace(s, &[0])?),
        rho_e: to_m2(&ed::rdm_partial_trace(s, &[1])?),
        rho_oe: to_m4(&ed::rdm_partial_trace(s, &[0, 1])?),
        rho_eo: to_m4(&ed::rdm_partial_trace(s, &[1, 2])?),
    })
}

/// Effective GGM of an exact state, from the reductions of sites 1, 2 and
/// the pair (2, 3) in 1-based numbering.
pub fn ggm_effective_of_state(s: &SpinState) -> Result<f64> {
    let r = ed_rdms(s)?;
    Ok(ggm_effective(max_eigenvalue2(&r.rho_e), max_eigenvalue2(&r.rho_o), max_eigenvalue4(&r.rho_eo)))
}

/// Time-averaged GGM and its standard deviation over [0, τ].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluctuationStat {
    pub mean: f64,
    pub sigma: f64,
    pub tau: f64,
}

fn trapezoid(times: &[f64], ys: &[f64]) -> f64 {
    times.windows(2).zip(ys.windows(2)).map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1])).sum()
}

/// σ_G = sqrt(⟨(G − ⟨G⟩)²⟩) with ⟨·⟩ the trapezoid average over [0, τ].
pub fn ggm_fluctuation(series: &EntanglementSeries, tau: f64) -> Result<FluctuationStat> {
    if !(tau > 0.0) {
        return Err(invalid("tau", "window must be positive"));
    }
    let end = series.times.last().copied().unwrap_or(0.0);
    if series.times.first().copied() != Some(0.0) || end < tau - 1e-9 {
        return Err(Error::WindowTooShort { end, tau });
    }
    let k = series.times.iter().take_while(|&&t| t <= tau + 1e-9).count();
    let (ts, gs) = (&series.times[..k], &series.ggm[..k]);
    let span = ts[k - 1] - ts[0];
    let mean = trapezoid(ts, gs) / span;
    // Centred second pass; ⟨G²⟩ − ⟨G⟩² loses everything for near-constant series.
    let sq: Vec<f64> = gs.iter().map(|g| (g - mean).powi(2)).collect();
    let var = trapezoid(ts, &sq) / span;
    Ok(FluctuationStat { mean, sigma: var.sqrt(), tau })
}

/// Number of separate windows of at least `min_duration` in which the pair
/// negativity stays below `threshold` and later rises above it again.
pub fn collapse_revival_count(times: &[f64], logneg: &[f64], threshold: f64, min_duration: f64) -> usize {
    let mut count = 0;
    let mut start: Option<f64> = None;
    for (&t, &e) in times.iter().zip(logneg) {
        match start {
            None if e < threshold => start = Some(t),
            Some(s) if e >= threshold => {
                if t - s >= min_duration {
                    count += 1;
                }
                start = None;
            }
            _ => {}
        }
    }
    count
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluctuationRow {
    pub x: f64,
    pub y: f64,
    pub sigma: f64,
}

/// σ_G for quenches from `initial` to each point of the plane grid on an
/// N-site ring.
pub fn fluctuation_scan(
    initial: &CouplingSet,
    plane: &Plane,
    grid2d: &Grid2d,
    n: usize,
    tau: f64,
    dt: f64,
    engine: Engine,
) -> Result<Vec<FluctuationRow>> {
    QuenchSpec::new(*initial, *initial)?;
    if crate::model::classify_phase(initial, crate::model::BOUNDARY_TOL)? == crate::model::PhaseLabel::Afm {
        log::warn!("initial state is ordered; the finite-ring ground state is one member of a quasi-degenerate pair");
    }
    let times = crate::loschmidt::time_grid(tau, dt)?;
    let point = |x: f64, y: f64| -> Result<FluctuationRow> {
        let q = QuenchSpec::new(*initial, plane.point(initial, x, y))?;
        let s = match engine {
            Engine::Covariance => entanglement_series_covariance(&q, n, &times)?,
            Engine::Exact => entanglement_series_ed(&q, n, &times)?,
        };
        Ok(FluctuationRow { x, y, sigma: ggm_fluctuation(&s, tau)?.sigma })
    };
    match engine {
        Engine::Covariance => grid2d.points().par_iter().map(|&(x, y)| point(x, y)).collect(),
        // The exact series already parallelises over time; nesting would only
        // multiply the memory held at once.
        Engine::Exact => grid2d.points().iter().map(|&(x, y)| point(x, y)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bell() -> Matrix4<C64> {
        let h = C64::new(0.5, 0.0);
        let z = C64::new(0.0, 0.0);
        Matrix4::new(h, z, z, h, z, z, z, z, z, z, z, z, h, z, z, h)
    }

    #[test]
    fn bell_state_has_unit_log_negativity() {
        assert!((negativity(&bell()).unwrap() - 0.5).abs() < 1e-14);
        assert!((log_negativity(&bell()).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn product_and_mixed_states_are_not_entangled() {
        let mut rho = Matrix4::<C64>::zeros();
        rho[(0, 0)] = C64::new(1.0, 0.0);
        assert_eq!(negativity(&rho).unwrap(), 0.0);
        let mixed = Matrix4::<C64>::identity() * C64::new(0.25, 0.0);
        assert_eq!(negativity(&mixed).unwrap(), 0.0);
    }

    #[test]
    fn invalid_density_matrices_are_rejected() {
        let mut rho = bell();
        rho[(0, 0)] = C64::new(0.7, 0.0);
        assert!(matches!(negativity(&rho), Err(Error::InvalidState(_))));
    }

    #[test]
    fn ggm_of_ghz_and_product_states() {
        let n = 6;
        let mut amps = nalgebra::DVector::zeros(1 << n);
        amps[0] = C64::new(1.0, 0.0);
        let product = SpinState { size: n, amps: amps.clone() };
        assert!(ggm_full(&product).unwrap().abs() < 1e-14);
        amps[0] = C64::new(0.5f64.sqrt(), 0.0);
        amps[(1 << n) - 1] = C64::new(0.5f64.sqrt(), 0.0);
        let ghz = SpinState { size: n, amps };
        assert!((ggm_full(&ghz).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn fluctuation_of_constant_series_vanishes() {
        let times: Vec<f64> = (0..=200).map(|k| k as f64 * 0.1).collect();
        let s = EntanglementSeries {
            ggm: vec![0.3; times.len()],
            logneg_eo: vec![0.0; times.len()],
            logneg_oe: vec![0.0; times.len()],
            times,
            engine: Engine::Covariance,
        };
        let f = ggm_fluctuation(&s, 20.0).unwrap();
        assert!(f.sigma < 1e-7 && (f.mean - 0.3).abs() < 1e-14);
        assert!(matches!(ggm_fluctuation(&s, 25.0), Err(Error::WindowTooShort { .. })));
    }

    #[test]
    fn collapse_windows_are_counted() {
        let times: Vec<f64> = (0..100).map(|k| k as f64 * 0.1).collect();
        let e: Vec<f64> = times.iter().map(|&t| if (2.0..4.0).contains(&t) || (6.0..8.0).contains(&t) { 0.0 } else { 0.1 }).collect();
        assert_eq!(collapse_revival_count(&times, &e, 1e-3, 1.0), 2);
    }
}
