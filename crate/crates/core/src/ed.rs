//! Exact diagonalisation of the periodic spin ring.
//!
//! The Hamiltonian is assembled directly from Pauli strings, independently of
//! any fermionic mapping:
//!
//! ```text
//! H = Σ_j [ (1+γ)/4 σˣσˣ + (1−γ)/4 σʸσʸ + d/4 (σˣσʸ − σʸσˣ) ]_{j,j+1}
//!   + Σ_j ½ (λ₁ + (−1)^j λ₂) σᶻ_j
//! ```
//!
//! Basis states are bit strings with bit value 1 for spin down; site 0 is the
//! most significant bit, so amplitudes follow the usual Kronecker ordering.

use nalgebra::{DMatrix, DVector};

use crate::bdg;
use crate::error::{invalid, Error, Result};
use crate::linalg::{eigh, matmul_hn, matmul_nn};
use crate::model::{CouplingSet, MomentumGrid, QuenchSpec};
use crate::C64;

/// Largest ring the dense sector diagonalisation accepts.
pub const MAX_ED_SITES: usize = 12;
/// Tolerance for matching the ED ground state to the momentum-space vacuum.
pub const SECTOR_MATCH_TOL: f64 = 1e-8;
const DEGENERACY_TOL: f64 = 1e-8;

/// Parity of the number of spins pointing up (equivalently of the fermion number).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn of(n: usize, state: usize) -> Self {
        let ups = n as u32 - state.count_ones();
        if ups.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpinHamiltonian {
    pub size: usize,
    /// Sparse rows: `rows[s]` lists `(s', ⟨s'|H|s⟩)`.
    rows: Vec<Vec<(usize, C64)>>,
}

fn y_factor(bit: usize) -> C64 {
    // σʸ|↑⟩ = i|↓⟩, σʸ|↓⟩ = −i|↑⟩.
    if bit == 0 {
        C64::new(0.0, 1.0)
    } else {
        C64::new(0.0, -1.0)
    }
}

pub fn build_spin_hamiltonian(g: &CouplingSet, n: usize) -> Result<SpinHamiltonian> {
    g.validate()?;
    if n < 4 || !n.is_multiple_of(2) {
        return Err(invalid("size", format!("ring length must be even and at least 4, got {n}")));
    }
    if n > MAX_ED_SITES {
        return Err(Error::SizeLimit { size: n, limit: MAX_ED_SITES, what: "exact diagonalisation" });
    }
    let dim = 1usize << n;
    let pos = |j: usize| n - 1 - j;
    let mu: Vec<f64> =
        (0..n).map(|j| g.lambda1 + if j % 2 == 0 { -g.lambda2 } else { g.lambda2 }).collect();
    let (cxx, cyy, cd) = ((1.0 + g.gamma) / 4.0, (1.0 - g.gamma) / 4.0, g.dm / 4.0);
    let rows = (0..dim)
        .map(|s| {
            let mut row = Vec::with_capacity(n + 1);
            let diag: f64 = (0..n).map(|j| 0.5 * mu[j] * if (s >> pos(j)) & 1 == 0 { 1.0 } else { -1.0 }).sum();
            row.push((s, C64::new(diag, 0.0)));
            for j in 0..n {
                let k = (j + 1) % n;
                let (bj, bk) = ((s >> pos(j)) & 1, (s >> pos(k)) & 1);
                let (yj, yk) = (y_factor(bj), y_factor(bk));
                let amp = C64::new(cxx, 0.0) + yj * yk * cyy + (yk - yj) * cd;
                row.push((s ^ (1 << pos(j)) ^ (1 << pos(k)), amp));
            }
            row
        })
        .collect();
    Ok(SpinHamiltonian { size: n, rows })
}

impl SpinHamiltonian {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn apply(&self, psi: &DVector<C64>) -> DVector<C64> {
        let mut out = DVector::zeros(self.dim());
        for (s, row) in self.rows.iter().enumerate() {
            for &(t, a) in row {
                out[t] += a * psi[s];
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for (s, row) in self.rows.iter().enumerate() {
            for &(t, a) in row {
                m[(t, s)] += a;
            }
        }
        m
    }

    pub fn sector_basis(&self, parity: Parity) -> Vec<usize> {
        (0..self.dim()).filter(|&s| Parity::of(self.size, s) == parity).collect()
    }

    /// Dense block of H on one parity sector. Fails if H mixes sectors.
    pub fn sector_matrix(&self, parity: Parity) -> Result<(Vec<usize>, DMatrix<C64>)> {
        let basis = self.sector_basis(parity);
        let mut index = vec![usize::MAX; self.dim()];
        for (i, &s) in basis.iter().enumerate() {
            index[s] = i;
        }
        let mut m = DMatrix::zeros(basis.len(), basis.len());
        for (i, &s) in basis.iter().enumerate() {
            for &(t, a) in &self.rows[s] {
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let r = index[t];
                if r == usize::MAX {
                    return Err(Error::InvalidState("Hamiltonian does not conserve parity".into()));
                }
                m[(r, i)] += a;
            }
        }
        Ok((basis, m))
    }
}

#[derive(Debug, Clone)]
pub struct SectorSpectrum {
    pub parity: Parity,
    pub basis: Vec<usize>,
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

pub fn diagonalize_sector(h: &SpinHamiltonian, parity: Parity) -> Result<SectorSpectrum> {
    let (basis, m) = h.sector_matrix(parity)?;
    let e = eigh(&m);
    Ok(SectorSpectrum { parity, basis, values: e.values, vectors: e.vectors })
}

/// A state of the full 2^N space.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinState {
    pub size: usize,
    pub amps: DVector<C64>,
}

impl SpinState {
    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn overlap(&self, other: &SpinState) -> C64 {
        self.amps.dotc(&other.amps)
    }

    fn from_sector(size: usize, spec: &SectorSpectrum, col: usize) -> Self {
        let mut amps = DVector::zeros(1 << size);
        for (i, &s) in spec.basis.iter().enumerate() {
            amps[s] = spec.vectors[(i, col)];
        }
        Self { size, amps }
    }
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub state: SpinState,
    pub energy: f64,
    pub parity: Parity,
    /// Distance to the next level in either sector.
    pub gap: f64,
    /// True when another level lies within 1e-8; the chosen state is then one
    /// parity-definite member of a degenerate multiplet.
    pub degenerate: bool,
}

fn gap_and_degeneracy(energy: f64, chosen: &SectorSpectrum, col: usize, other: &SectorSpectrum) -> (f64, bool) {
    let mut gap = f64::INFINITY;
    for (k, &e) in chosen.values.iter().enumerate() {
        if k != col {
            gap = gap.min((e - energy).abs());
        }
    }
    for &e in &other.values {
        gap = gap.min((e - energy).abs());
    }
    (gap, gap < DEGENERACY_TOL)
}

/// Lowest state over both parity sectors.
pub fn ground_state(h: &SpinHamiltonian) -> Result<GroundState> {
    let even = diagonalize_sector(h, Parity::Even)?;
    let odd = diagonalize_sector(h, Parity::Odd)?;
    let (chosen, other) = if even.values[0] <= odd.values[0] + DEGENERACY_TOL { (&even, &odd) } else { (&odd, &even) };
    let energy = chosen.values[0];
    let (gap, degenerate) = gap_and_degeneracy(energy, chosen, 0, other);
    if degenerate {
        log::warn!("ED ground state is degenerate (gap {gap:e}); returning the {:?}-parity member", chosen.parity);
    }
    Ok(GroundState { state: SpinState::from_sector(h.size, chosen, 0), energy, parity: chosen.parity, gap, degenerate })
}

/// The even-sector eigenstate whose energy matches `reference` within `tol`.
pub fn ground_state_matching(h: &SpinHamiltonian, reference: f64, tol: f64) -> Result<GroundState> {
    let even = diagonalize_sector(h, Parity::Even)?;
    let (col, closest) = even
        .values
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - reference).abs().total_cmp(&(b.1 - reference).abs()))
        .map(|(k, &e)| (k, e))
        .expect("nonempty sector");
    if (closest - reference).abs() > tol {
        return Err(Error::SectorMismatch { reference, closest, diff: (closest - reference).abs() });
    }
    let odd = diagonalize_sector(h, Parity::Odd)?;
    let (gap, degenerate) = gap_and_degeneracy(closest, &even, col, &odd);
    Ok(GroundState { state: SpinState::from_sector(h.size, &even, col), energy: closest, parity: Parity::Even, gap, degenerate })
}

/// Vacuum energy Σ_p (ω₃ + ω₄) of the momentum blocks of an N-site ring.
pub fn momentum_vacuum_energy(g: &CouplingSet, n: usize) -> Result<f64> {
    let grid = MomentumGrid::finite_chain(n)?;
    let mut e = 0.0;
    for &phi in grid.phis() {
        let d = bdg::diagonalize_mode(&bdg::build_mode_matrix(g, phi))?;
        if !d.vacuum_is_ground() {
            return Err(Error::InadmissibleInitialState {
                reason: format!("block at phi = {phi} has its vacuum above the ground state"),
            });
        }
        e += d.vacuum_energy();
    }
    Ok(e)
}

/// Spectral representation of a state under H₁, for repeated evolution.
#[derive(Debug, Clone)]
pub struct Evolver {
    size: usize,
    parts: Vec<(SectorSpectrum, DVector<C64>)>,
}

impl Evolver {
    pub fn new(h1: &SpinHamiltonian, state: &SpinState) -> Result<Self> {
        if state.size != h1.size {
            return Err(invalid("state", "state and Hamiltonian sizes differ"));
        }
        let mut parts = Vec::new();
        for parity in [Parity::Even, Parity::Odd] {
            let basis = h1.sector_basis(parity);
            let local = DVector::from_iterator(basis.len(), basis.iter().map(|&s| state.amps[s]));
            if local.norm() == 0.0 {
                continue;
            }
            let spec = diagonalize_sector(h1, parity)?;
            let coeffs = spec.vectors.adjoint() * local;
            parts.push((spec, coeffs));
        }
        Ok(Self { size: h1.size, parts })
    }

    pub fn state_at(&self, t: f64) -> SpinState {
        let mut amps = DVector::zeros(1 << self.size);
        for (spec, c) in &self.parts {
            let phased = DVector::from_iterator(
                c.len(),
                c.iter().zip(&spec.values).map(|(a, &e)| a * C64::from_polar(1.0, -e * t)),
            );
            let local = &spec.vectors * phased;
            for (i, &s) in spec.basis.iter().enumerate() {
                amps[s] = local[i];
            }
        }
        SpinState { size: self.size, amps }
    }

    /// States at many times, one matrix product per sector.
    pub fn states_at(&self, times: &[f64]) -> Vec<SpinState> {
        let mut out: Vec<SpinState> =
            times.iter().map(|_| SpinState { size: self.size, amps: DVector::zeros(1 << self.size) }).collect();
        for (spec, c) in &self.parts {
            let phased = DMatrix::from_fn(c.len(), times.len(), |i, k| c[i] * C64::from_polar(1.0, -spec.values[i] * times[k]));
            let local = matmul_nn(&spec.vectors, &phased);
            for (k, st) in out.iter_mut().enumerate() {
                for (i, &s) in spec.basis.iter().enumerate() {
                    st.amps[s] = local[(i, k)];
                }
            }
        }
        out
    }

    /// ⟨ψ|e^{−iH₁t}|ψ⟩.
    pub fn return_amplitude(&self, t: f64) -> C64 {
        self.parts
            .iter()
            .flat_map(|(spec, c)| c.iter().zip(&spec.values).map(move |(a, &e)| C64::from_polar(a.norm_sqr(), -e * t)))
            .sum()
    }
}

pub fn evolve(state: &SpinState, h1: &SpinHamiltonian, t: f64) -> Result<SpinState> {
    Ok(Evolver::new(h1, state)?.state_at(t))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdEcho {
    pub times: Vec<f64>,
    pub amplitude: Vec<C64>,
    /// −(1/N) log |G|².
    pub rate: Vec<f64>,
}

/// Initial ground state of a quench, matched to the momentum-space vacuum.
pub fn quench_initial_state(q: &QuenchSpec, n: usize) -> Result<(SpinHamiltonian, GroundState)> {
    let h0 = build_spin_hamiltonian(&q.initial, n)?;
    let reference = momentum_vacuum_energy(&q.initial, n)?;
    let gs = ground_state_matching(&h0, reference, SECTOR_MATCH_TOL)?;
    Ok((h0, gs))
}

pub fn loschmidt_echo_ed(q: &QuenchSpec, n: usize, times: &[f64]) -> Result<EdEcho> {
    let (_, gs) = quench_initial_state(q, n)?;
    let h1 = build_spin_hamiltonian(&q.target, n)?;
    let ev = Evolver::new(&h1, &gs.state)?;
    let amplitude: Vec<C64> = times.iter().map(|&t| ev.return_amplitude(t)).collect();
    let rate = amplitude.iter().map(|z| -(z.norm_sqr().max(1e-300)).ln() / n as f64).collect();
    Ok(EdEcho { times: times.to_vec(), amplitude, rate })
}

/// Reduced density matrix of `sites` (in the given order, first most
/// significant) obtained by tracing out the rest.
pub fn rdm_partial_trace(state: &SpinState, sites: &[usize]) -> Result<DMatrix<C64>> {
    let n = state.size;
    let mut seen = 0usize;
    for &s in sites {
        if s >= n || seen & (1 << s) != 0 {
            return Err(invalid("sites", "sites must be distinct and inside the ring"));
        }
        seen |= 1 << s;
    }
    let k = sites.len();
    let rest: Vec<usize> = (0..n).filter(|s| seen & (1 << s) == 0).collect();
    let pos = |j: usize| n - 1 - j;
    let mut m = DMatrix::<C64>::zeros(1 << k, 1 << (n - k));
    for (idx, &a) in state.amps.iter().enumerate() {
        let mut r = 0;
        for &s in sites {
            r = (r << 1) | ((idx >> pos(s)) & 1);
        }
        let mut c = 0;
        for &s in &rest {
            c = (c << 1) | ((idx >> pos(s)) & 1);
        }
        m[(r, c)] = a;
    }
    Ok(matmul_nn(&m, &m.adjoint()))
}

/// Gram matrix `ψ_A ψ_A†` for the bipartition given by the bit mask `subset`;
/// smaller of the two sides.
pub(crate) fn bipartition_gram(state: &SpinState, subset: usize) -> DMatrix<C64> {
    let n = state.size;
    let k = subset.count_ones() as usize;
    let pos_bits: Vec<usize> = (0..n).map(|j| n - 1 - j).collect();
    let inside: Vec<usize> = (0..n).filter(|j| subset & (1 << j) != 0).map(|j| pos_bits[j]).collect();
    let outside: Vec<usize> = (0..n).filter(|j| subset & (1 << j) == 0).map(|j| pos_bits[j]).collect();
    let mut m = DMatrix::<C64>::zeros(1 << k, 1 << (n - k));
    for (idx, &a) in state.amps.iter().enumerate() {
        let r = inside.iter().fold(0, |acc, &p| (acc << 1) | ((idx >> p) & 1));
        let c = outside.iter().fold(0, |acc, &p| (acc << 1) | ((idx >> p) & 1));
        m[(r, c)] = a;
    }
    if k <= n - k {
        matmul_nn(&m, &m.adjoint())
    } else {
        matmul_hn(&m, &m)
    }
}
