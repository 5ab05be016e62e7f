//! Finite rings in real space via Majorana covariance matrices.
//!
//! Each site carries two Majoranas, A_j = c_j + c_j† and B_j = i(c_j† − c_j),
//! stored at indices 2j and 2j + 1. A Gaussian state is described by the real
//! antisymmetric Γ with ⟨w_k w_l⟩ = δ_kl − iΓ_kl, and a quadratic Hamiltonian
//! H = (i/4) Σ A_kl w_k w_l evolves it as Γ(t) = O Γ Oᵀ with O = e^{At}.
//!
//! Spins map to fermions with σᶻ = 2n − 1; the even-parity sector of the
//! periodic spin ring is the antiperiodic fermion ring.

use nalgebra::{DMatrix, Matrix2, Matrix4};

use crate::error::{invalid, Error, Result};
use crate::linalg::{eigh, matmul_nn, Eigh};
use crate::model::CouplingSet;
use crate::C64;

/// Largest ring handled by the dense covariance engine.
pub const MAX_SITES: usize = 4096;

const GAPLESS_TOL: f64 = 1e-10;

/// Nambu Hamiltonian H = ½ Ψ† H_BdG Ψ with Ψ = (c₁…c_N, c₁†…c_N†).
#[derive(Debug, Clone)]
pub struct BdgRealSpace {
    pub size: usize,
    pub matrix: DMatrix<C64>,
}

pub fn build_bdg_realspace(g: &CouplingSet, n: usize) -> Result<BdgRealSpace> {
    g.validate()?;
    if n < 4 || !n.is_multiple_of(4) {
        return Err(invalid("size", format!("ring length must be a positive multiple of 4, got {n}")));
    }
    if n > MAX_SITES {
        return Err(Error::SizeLimit { size: n, limit: MAX_SITES, what: "covariance engine" });
    }
    let mut h = DMatrix::<C64>::zeros(n, n);
    let mut delta = DMatrix::<C64>::zeros(n, n);
    for j in 0..n {
        let k = (j + 1) % n;
        let sign = if k == 0 { -1.0 } else { 1.0 };
        let hop = C64::new(0.5, 0.5 * g.dm) * sign;
        h[(j, k)] += hop;
        h[(k, j)] += hop.conj();
        delta[(j, k)] += C64::new(0.5 * g.gamma * sign, 0.0);
        delta[(k, j)] -= C64::new(0.5 * g.gamma * sign, 0.0);
        // Site j is odd in 1-based counting when j is even.
        let alt = if j % 2 == 0 { -g.lambda2 } else { g.lambda2 };
        h[(j, j)] = C64::new(g.lambda1 + alt, 0.0);
    }
    let mut m = DMatrix::<C64>::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&h);
    m.view_mut((0, n), (n, n)).copy_from(&delta);
    m.view_mut((n, 0), (n, n)).copy_from(&(-delta.conjugate()));
    m.view_mut((n, n), (n, n)).copy_from(&(-h.conjugate()));
    Ok(BdgRealSpace { size: n, matrix: m })
}

impl BdgRealSpace {
    /// Real antisymmetric A with H = (i/4) wᵀ A w.
    pub fn majorana_generator(&self) -> DMatrix<f64> {
        let n = self.size;
        // Ψ = Ω w with c_j = (A_j + iB_j)/2.
        let mut omega = DMatrix::<C64>::zeros(2 * n, 2 * n);
        for j in 0..n {
            omega[(j, 2 * j)] = C64::new(0.5, 0.0);
            omega[(j, 2 * j + 1)] = C64::new(0.0, 0.5);
            omega[(n + j, 2 * j)] = C64::new(0.5, 0.0);
            omega[(n + j, 2 * j + 1)] = C64::new(0.0, -0.5);
        }
        let k = crate::linalg::matmul_hn(&omega, &matmul_nn(&self.matrix, &omega));
        k.map(|z| 2.0 * z.im)
    }

    /// Quasiparticle levels of H_BdG, ascending (they come in ± pairs).
    pub fn levels(&self) -> Vec<f64> {
        eigh(&self.matrix).values
    }

    /// −½ Σ of the positive BdG levels.
    pub fn ground_energy(&self) -> f64 {
        -0.5 * self.levels().iter().filter(|&&e| e > 0.0).sum::<f64>()
    }

    /// max |τ H* τ + H| with τ exchanging the particle and hole halves.
    pub fn particle_hole_residual(&self) -> f64 {
        let n = self.size;
        let m = &self.matrix;
        let mut r: f64 = 0.0;
        for i in 0..2 * n {
            for j in 0..2 * n {
                let (pi, pj) = ((i + n) % (2 * n), (j + n) % (2 * n));
                r = r.max((m[(pi, pj)].conj() + m[(i, j)]).norm());
            }
        }
        r
    }
}

/// Spectral decomposition of iA, reused for every evolution time.
#[derive(Debug, Clone)]
pub struct Propagator {
    eig: Eigh,
    adjoint: DMatrix<C64>,
    generator: DMatrix<f64>,
}

impl Propagator {
    pub fn new(h: &BdgRealSpace) -> Self {
        let a = h.majorana_generator();
        let ia = a.map(|x| C64::new(0.0, x));
        let eig = eigh(&ia);
        let adjoint = eig.vectors.adjoint();
        Self { eig, adjoint, generator: a }
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.generator
    }

    /// Ground-state covariance Γ = Re(i V sign(ε) V†).
    pub fn ground_covariance(&self) -> Result<CovarianceState> {
        let v = &self.eig.vectors;
        if let Some(&e) = self.eig.values.iter().find(|e| e.abs() < GAPLESS_TOL) {
            return Err(Error::GaplessGroundState { level: e });
        }
        let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| {
            v[(i, j)] * C64::new(0.0, self.eig.values[j].signum())
        });
        let g = matmul_nn(&scaled, &v.adjoint());
        Ok(CovarianceState { gamma: g.map(|z| z.re), time: 0.0 })
    }

    /// V_idx e^{-iεt} V†, with the phases applied to the selected rows only.
    fn rows_complex(&self, t: f64, idx: &[usize]) -> DMatrix<C64> {
        let v = &self.eig.vectors;
        let phases: Vec<C64> = self.eig.values.iter().map(|&e| C64::from_polar(1.0, -e * t)).collect();
        let sub = DMatrix::from_fn(idx.len(), v.ncols(), |r, c| v[(idx[r], c)] * phases[c]);
        matmul_nn(&sub, &self.adjoint)
    }

    /// O(t) = e^{At}.
    pub fn orthogonal(&self, t: f64) -> DMatrix<f64> {
        let all: Vec<usize> = (0..self.eig.vectors.nrows()).collect();
        self.rows_complex(t, &all).map(|z| z.re)
    }

    /// The rows `idx` of O(t), without forming the whole matrix.
    pub fn rows(&self, t: f64, idx: &[usize]) -> DMatrix<f64> {
        self.rows_complex(t, idx).map(|z| z.re)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceState {
    pub gamma: DMatrix<f64>,
    pub time: f64,
}

pub fn ground_covariance(h: &BdgRealSpace) -> Result<CovarianceState> {
    Propagator::new(h).ground_covariance()
}

pub fn evolve_covariance(state: &CovarianceState, h1: &BdgRealSpace, t: f64) -> Result<CovarianceState> {
    if state.gamma.nrows() != 2 * h1.size {
        return Err(invalid("state", "covariance and Hamiltonian sizes differ"));
    }
    let o = Propagator::new(h1).orthogonal(t);
    Ok(CovarianceState { gamma: &o * &state.gamma * o.transpose(), time: state.time + t })
}

impl CovarianceState {
    pub fn n_sites(&self) -> usize {
        self.gamma.nrows() / 2
    }

    /// ⟨H⟩ = ¼ Σ A_kl Γ_kl.
    pub fn energy(&self, h: &BdgRealSpace) -> f64 {
        0.25 * h.majorana_generator().component_mul(&self.gamma).sum()
    }

    pub fn antisymmetry_residual(&self) -> f64 {
        (&self.gamma + self.gamma.transpose()).abs().max()
    }

    /// max |Γ² + 1|, zero for pure Gaussian states.
    pub fn purity_residual(&self) -> f64 {
        let n = self.gamma.nrows();
        (&self.gamma * &self.gamma + DMatrix::<f64>::identity(n, n)).abs().max()
    }

    /// Covariance restricted to sites `first .. first + count`.
    pub fn local_block(&self, first: usize, count: usize) -> DMatrix<f64> {
        self.gamma.view((2 * first, 2 * first), (2 * count, 2 * count)).into_owned()
    }
}

fn pauli() -> [Matrix2<C64>; 4] {
    let o = C64::new(0.0, 0.0);
    let l = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    [
        Matrix2::new(l, o, o, l),
        Matrix2::new(o, l, l, o),
        Matrix2::new(o, -i, i, o),
        Matrix2::new(l, o, o, -l),
    ]
}

fn kron2(a: &Matrix2<C64>, b: &Matrix2<C64>) -> Matrix4<C64> {
    Matrix4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

/// One-site reduced density matrix of local site `j` of a covariance block.
/// Basis |↑⟩, |↓⟩; parity forbids ⟨σˣ⟩ and ⟨σʸ⟩.
pub fn rdm1_from_block(block: &DMatrix<f64>, j: usize) -> Matrix2<C64> {
    let z = block[(2 * j, 2 * j + 1)];
    let p = pauli();
    (p[0] + p[3] * C64::new(z, 0.0)) * C64::new(0.5, 0.0)
}

/// Two-site reduced density matrix of local sites `j, j + 1`, basis
/// |s_j s_{j+1}⟩ with s_j the more significant index.
pub fn rdm2_from_block(block: &DMatrix<f64>, j: usize) -> Matrix4<C64> {
    let g = |a: usize, b: usize| block[(a, b)];
    let (a0, b0, a1, b1) = (2 * j, 2 * j + 1, 2 * j + 2, 2 * j + 3);
    let z0 = g(a0, b0);
    let z1 = g(a1, b1);
    let xx = -g(b0, a1);
    let yy = g(a0, b1);
    let xy = g(b0, b1);
    let yx = -g(a0, a1);
    let zz = g(a0, b0) * g(a1, b1) - g(a0, a1) * g(b0, b1) + g(a0, b1) * g(b0, a1);
    let p = pauli();
    let mut rho = kron2(&p[0], &p[0]);
    for (c, a, b) in [(z0, 3, 0), (z1, 0, 3), (xx, 1, 1), (yy, 2, 2), (xy, 1, 2), (yx, 2, 1), (zz, 3, 3)] {
        rho += kron2(&p[a], &p[b]) * C64::new(c, 0.0);
    }
    rho * C64::new(0.25, 0.0)
}

pub fn single_site_rdm(state: &CovarianceState, j: usize) -> Result<Matrix2<C64>> {
    if j >= state.n_sites() {
        return Err(invalid("site", format!("site {j} outside a ring of {}", state.n_sites())));
    }
    Ok(rdm1_from_block(&state.local_block(j, 1), 0))
}

/// Reduced density matrix of the neighbouring sites (j, j + 1), 0-based.
pub fn pair_rdm(state: &CovarianceState, j: usize) -> Result<Matrix4<C64>> {
    if j + 1 >= state.n_sites() {
        return Err(invalid("site", format!("pair ({j}, {}) not inside the open segment of the ring", j + 1)));
    }
    Ok(rdm2_from_block(&state.local_block(j, 2), 0))
}

/// Covariance blocks of the first `sites` sites after a quench, evolving only
/// the rows of O(t) that are needed.
#[derive(Debug, Clone)]
pub struct LocalQuench {
    propagator: Propagator,
    gamma0: DMatrix<f64>,
    sites: usize,
}

impl LocalQuench {
    pub fn new(initial: &BdgRealSpace, target: &BdgRealSpace, sites: usize) -> Result<Self> {
        if initial.size != target.size {
            return Err(invalid("size", "initial and final rings differ"));
        }
        if sites == 0 || sites > initial.size {
            return Err(invalid("sites", "block must fit in the ring"));
        }
        let gamma0 = ground_covariance(initial)?.gamma;
        Ok(Self { propagator: Propagator::new(target), gamma0, sites })
    }

    pub fn block_at(&self, t: f64) -> DMatrix<f64> {
        let idx: Vec<usize> = (0..2 * self.sites).collect();
        let o = self.propagator.rows(t, &idx);
        &o * &self.gamma0 * o.transpose()
    }
}
