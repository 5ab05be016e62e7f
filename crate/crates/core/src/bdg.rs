//! Per-momentum 4×4 Bogoliubov problem.
//!
//! For each φ ∈ (0, π/2) the Hamiltonian block in the Nambu basis
//! Ψ = (a_p, b_p, a†₋ₚ, b†₋ₚ) reads
//!
//! ```text
//! H̃ = [[ (cosφ + d sinφ)σx + Λ ,  −iγ sinφ σx               ],
//!       [  iγ sinφ σx           , −(cosφ − d sinφ)σx − Λ     ]]
//! ```
//!
//! with Λ = diag(λ₁ − λ₂, λ₁ + λ₂), and Ĥ_p = Ψ†H̃Ψ exactly.
//!
//! The diagonalising frame M is stored as a full 4×4 unitary whose columns are
//! ordered ω₁ ≥ ω₂ (creation-type quasiparticles) followed by the two lowest
//! levels. When the block has a particle-hole partner map (d = 0 or λ₂ = 0),
//! column 2+j is the partner of column j and M takes the familiar
//! `[[U, −iV], [−iV*, U*]]` shape. With both d and λ₂ nonzero no such map
//! exists and only the unitary frame is meaningful.

use nalgebra::{Matrix2, Matrix4, Vector4};

use crate::error::{invalid, Error, Result};
use crate::model::CouplingSet;
use crate::C64;

/// Relative tolerance for the degeneracy and partner checks.
const LEVEL_TOL: f64 = 1e-12;
const PARTNER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeMatrix {
    pub phi: f64,
    pub h: Matrix4<C64>,
}

pub fn build_mode_matrix(g: &CouplingSet, phi: f64) -> ModeMatrix {
    let (s, c) = phi.sin_cos();
    let plus = C64::new(c + g.dm * s, 0.0);
    let minus = C64::new(c - g.dm * s, 0.0);
    let la = C64::new(g.lambda1 - g.lambda2, 0.0);
    let lb = C64::new(g.lambda1 + g.lambda2, 0.0);
    let pair = C64::new(0.0, g.gamma * s);
    let z = C64::new(0.0, 0.0);
    #[rustfmt::skip]
    let h = Matrix4::new(
        la,    plus,  z,      -pair,
        plus,  lb,    -pair,  z,
        z,     pair,  -la,    -minus,
        pair,  z,     -minus, -lb,
    );
    ModeMatrix { phi, h }
}

/// The four block levels, ascending.
pub fn mode_levels(g: &CouplingSet, phi: f64) -> [f64; 4] {
    let ev = build_mode_matrix(g, phi).h.symmetric_eigenvalues();
    let mut v = [ev[0], ev[1], ev[2], ev[3]];
    v.sort_by(f64::total_cmp);
    v
}

/// Particle-hole conjugation C(x, y) = (−y*, x*) on the Nambu spinor.
fn partner(v: &Vector4<C64>) -> Vector4<C64> {
    Vector4::new(-v[2].conj(), -v[3].conj(), v[0].conj(), v[1].conj())
}

/// Makes the largest-modulus entry real and positive.
fn fix_gauge(v: &mut Vector4<C64>) {
    let mut k = 0;
    for i in 1..4 {
        if v[i].norm() > v[k].norm() * (1.0 + 1e-12) {
            k = i;
        }
    }
    let phase = v[k] / v[k].norm();
    *v *= phase.conj();
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BogoliubovDecomp {
    pub phi: f64,
    /// Unitary frame; column k is the eigenvector of level `omegas[k]`.
    pub frame: Matrix4<C64>,
    /// Levels in frame order: ω₁ ≥ ω₂ are the two largest, ω₃, ω₄ the two smallest.
    pub omegas: [f64; 4],
    /// True when columns 3 and 4 are particle-hole partners of columns 1 and 2.
    pub partner_shape: bool,
}

impl BogoliubovDecomp {
    pub fn u_block(&self) -> Matrix2<C64> {
        self.frame.fixed_view::<2, 2>(0, 0).into_owned()
    }

    /// V such that the top-right block of M equals −iV.
    pub fn v_block(&self) -> Matrix2<C64> {
        self.frame.fixed_view::<2, 2>(0, 2).into_owned() * C64::new(0.0, 1.0)
    }

    /// Energy of the quasiparticle vacuum |Φ⟩ (no ω₁, ω₂ excitations).
    pub fn vacuum_energy(&self) -> f64 {
        self.omegas[2] + self.omegas[3]
    }

    /// Whether |Φ⟩ is the ground state of the block.
    pub fn vacuum_is_ground(&self) -> bool {
        self.omegas[1] >= 0.0 && self.omegas[2].max(self.omegas[3]) <= 0.0
    }

    pub fn unitarity_residual(&self) -> f64 {
        crate::linalg::max_norm((self.frame.adjoint() * self.frame - Matrix4::identity()).iter())
    }

    /// max |M†H̃M − diag(ω)|.
    pub fn diagonal_residual(&self, m: &ModeMatrix) -> f64 {
        let d = self.frame.adjoint() * m.h * self.frame;
        let mut r: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                let target = if i == j { self.omegas[i] } else { 0.0 };
                r = r.max((d[(i, j)] - target).norm());
            }
        }
        r
    }

    /// max deviation of the frame from `[[U, −iV], [−iV*, U*]]`.
    pub fn shape_residual(&self) -> f64 {
        let m = &self.frame;
        let mut r: f64 = 0.0;
        for j in 0..2 {
            let p = partner(&m.column(j).into_owned());
            r = r.max(crate::linalg::max_norm((p - m.column(j + 2)).iter()));
        }
        r
    }
}

/// Diagonalises a block without the degeneracy check between the upper and
/// lower level pairs.
pub fn diagonalize_mode_unchecked(m: &ModeMatrix) -> BogoliubovDecomp {
    let eig = m.h.symmetric_eigen();
    let mut idx = [0usize, 1, 2, 3];
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals: Vec<f64> = idx.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut cols: Vec<Vector4<C64>> = idx.iter().map(|&k| eig.eigenvectors.column(k).into_owned()).collect();
    for c in cols.iter_mut() {
        fix_gauge(c);
    }
    let scale = vals.iter().fold(1.0f64, |a, v| a.max(v.abs()));

    // Try the particle-hole partners of the two upper columns.
    let lower = [vals[2], vals[3]];
    let mut partners = Vec::with_capacity(2);
    for j in 0..2 {
        let p = partner(&cols[j]);
        let hp = m.h * p;
        let rho = p.dotc(&hp).re;
        let res = (hp - p * C64::new(rho, 0.0)).norm();
        if res < PARTNER_TOL * scale && lower.iter().any(|l| (l - rho).abs() < PARTNER_TOL * scale) {
            partners.push((p, rho));
        }
    }
    let partner_shape = partners.len() == 2 && (partners[0].0.dotc(&partners[1].0)).norm() < PARTNER_TOL;
    let mut omegas = [vals[0], vals[1], vals[2], vals[3]];
    if partner_shape {
        omegas[2] = partners[0].1;
        omegas[3] = partners[1].1;
        cols[2] = partners[0].0;
        cols[3] = partners[1].0;
    } else {
        // Put the lower column with the larger overlap on C(col₁) third.
        let p = partner(&cols[0]);
        if cols[3].dotc(&p).norm() > cols[2].dotc(&p).norm() + 1e-12 {
            cols.swap(2, 3);
            omegas.swap(2, 3);
        }
    }
    let frame = Matrix4::from_columns(&[cols[0], cols[1], cols[2], cols[3]]);
    BogoliubovDecomp { phi: m.phi, frame, omegas, partner_shape }
}

/// Diagonalises the block, failing when the second and third levels coincide
/// (the split into creation and annihilation quasiparticles is then undefined).
pub fn diagonalize_mode(m: &ModeMatrix) -> Result<BogoliubovDecomp> {
    let d = diagonalize_mode_unchecked(m);
    let lo = d.omegas[2].max(d.omegas[3]);
    let scale = d.omegas.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    if d.omegas[1] - lo < LEVEL_TOL * scale {
        return Err(Error::DegenerateMode { phi: m.phi, gap: d.omegas[1] - lo });
    }
    Ok(d)
}

/// Overlap of the initial and final frames at one momentum,
/// Q = M₀†M₁ = [[𝒰, −i𝒱], [·, ·]].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuenchOverlap {
    pub phi: f64,
    pub q: Matrix4<C64>,
    pub omegas_initial: [f64; 4],
    pub omegas_final: [f64; 4],
}

pub fn quench_overlap(initial: &BogoliubovDecomp, target: &BogoliubovDecomp) -> Result<QuenchOverlap> {
    if (initial.phi - target.phi).abs() > 1e-9 {
        return Err(invalid("phi", format!("frames at different momenta ({} vs {})", initial.phi, target.phi)));
    }
    Ok(QuenchOverlap {
        phi: initial.phi,
        q: initial.frame.adjoint() * target.frame,
        omegas_initial: initial.omegas,
        omegas_final: target.omegas,
    })
}

/// 𝒰 and 𝒱 from the blocks of two frames of the partner shape:
/// 𝒰 = U₀†U₁ + V₀ᵀV₁*, 𝒱 = U₀†V₁ − V₀ᵀU₁*.
pub fn overlap_from_blocks(
    u0: &Matrix2<C64>,
    v0: &Matrix2<C64>,
    u1: &Matrix2<C64>,
    v1: &Matrix2<C64>,
) -> (Matrix2<C64>, Matrix2<C64>) {
    let uu = u0.adjoint() * u1 + v0.transpose() * v1.conjugate();
    let vv = u0.adjoint() * v1 - v0.transpose() * u1.conjugate();
    (uu, vv)
}

fn minor(q: &Matrix4<C64>, a: usize, b: usize) -> C64 {
    q[(0, a)] * q[(1, b)] - q[(0, b)] * q[(1, a)]
}

/// Echo weights and energies of one mode; see [`QuenchOverlap::echo`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeEcho {
    pub phi: f64,
    pub weights: [f64; 6],
    pub energies: [f64; 6],
}

impl ModeEcho {
    /// G_p(t) = Σ_S w_S e^{−iE_S t}.
    pub fn amplitude(&self, t: f64) -> C64 {
        self.weights
            .iter()
            .zip(&self.energies)
            .map(|(&w, &e)| C64::from_polar(w, -e * t))
            .sum()
    }

    /// ∂G_p/∂t.
    pub fn amplitude_dt(&self, t: f64) -> C64 {
        self.weights
            .iter()
            .zip(&self.energies)
            .map(|(&w, &e)| C64::new(0.0, -e) * C64::from_polar(w, -e * t))
            .sum()
    }
}

impl QuenchOverlap {
    pub fn u_overlap(&self) -> Matrix2<C64> {
        self.q.fixed_view::<2, 2>(0, 0).into_owned()
    }

    pub fn v_overlap(&self) -> Matrix2<C64> {
        self.q.fixed_view::<2, 2>(0, 2).into_owned() * C64::new(0.0, 1.0)
    }

    /// 𝒯 = 𝒰⁻¹𝒱.
    pub fn t_matrix(&self) -> Result<Matrix2<C64>> {
        let u = self.u_overlap();
        let det = u.determinant();
        if det.norm() < 1e-12 {
            return Err(Error::SingularOverlap { phi: self.phi, det: det.norm() });
        }
        Ok(u.try_inverse().expect("nonsingular") * self.v_overlap())
    }

    /// The six terms of the mode amplitude, in the order
    /// `[1, |𝒯₁₁|², |𝒯₂₂|², |𝒯₁₂|², |𝒯₂₁|², |det 𝒯|²]` (each scaled by
    /// |det 𝒰|²). Weights are squared 2×2 minors of the top rows of Q, so no
    /// inverse is needed and they sum to one. Energies are absolute, the
    /// reference term carrying ω₃ + ω₄.
    pub fn echo(&self) -> ModeEcho {
        let q = &self.q;
        let w = [
            minor(q, 0, 1).norm_sqr(),
            minor(q, 1, 2).norm_sqr(),
            minor(q, 0, 3).norm_sqr(),
            minor(q, 1, 3).norm_sqr(),
            minor(q, 0, 2).norm_sqr(),
            minor(q, 2, 3).norm_sqr(),
        ];
        let total: f64 = w.iter().sum();
        let o = &self.omegas_final;
        ModeEcho {
            phi: self.phi,
            weights: w.map(|x| x / total),
            energies: [o[2] + o[3], o[0] + o[3], o[1] + o[2], o[0] + o[2], o[1] + o[3], o[0] + o[1]],
        }
    }
}
