//! Cross-engine consistency suite against exact diagonalisation.
//!
//! Every check compares an engine with ED on the same finite ring and reports
//! the largest observed deviation next to its tolerance.

use crate::ed;
use crate::error::Result;
use crate::loschmidt;
use crate::model::{CouplingSet, MomentumGrid, QuenchSpec};
use crate::realspace;
use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub name: String,
    pub deviation: f64,
    pub tolerance: f64,
}

impl OracleCheck {
    pub fn passed(&self) -> bool {
        self.deviation <= self.tolerance
    }
}

/// The quenches exercised by the suite (γ = 0.8): PM-I into AFM, and PM-I
/// into the chiral phase.
pub fn reference_quenches() -> Vec<(&'static str, QuenchSpec)> {
    let g = |l1, l2, d| CouplingSet::new(0.8, l1, l2, d).expect("valid anchor");
    vec![
        ("pm1-to-afm", QuenchSpec::new(g(1.5, 0.0, 0.0), g(0.0, 0.2, 0.0)).expect("valid quench")),
        ("pm1-to-ch", QuenchSpec::new(g(1.5, 0.0, 0.0), g(0.4, 0.2, 1.0)).expect("valid quench")),
    ]
}

/// Energy gate: the even-sector ED level matched to the momentum vacuum.
pub fn vacuum_gate(g: &CouplingSet, n: usize) -> Result<f64> {
    let reference = ed::momentum_vacuum_energy(g, n)?;
    let h = ed::build_spin_hamiltonian(g, n)?;
    let gs = ed::ground_state_matching(&h, reference, ed::SECTOR_MATCH_TOL)?;
    Ok((gs.energy - reference).abs())
}

/// max_t | |Π_p G_p(t)| − |G_ED(t)| | over the given times.
pub fn loschmidt_deviation(q: &QuenchSpec, n: usize, times: &[f64]) -> Result<f64> {
    let grid = MomentumGrid::finite_chain(n)?;
    let echoes = grid.phis().iter().map(|&phi| loschmidt::mode_echo(q, phi)).collect::<Result<Vec<_>>>()?;
    let exact = ed::loschmidt_echo_ed(q, n, times)?;
    Ok(times
        .iter()
        .zip(&exact.amplitude)
        .map(|(&t, z)| {
            let product: C64 = echoes.iter().map(|e| e.amplitude(t)).product();
            (product.norm() - z.norm()).abs()
        })
        .fold(0.0, f64::max))
}

/// Largest elementwise deviation between covariance-engine and ED reduced
/// density matrices (every site and every neighbouring pair) at the given times.
pub fn rdm_deviation(q: &QuenchSpec, n: usize, times: &[f64]) -> Result<f64> {
    let h0 = realspace::build_bdg_realspace(&q.initial, n)?;
    let h1 = realspace::build_bdg_realspace(&q.target, n)?;
    let s0 = realspace::ground_covariance(&h0)?;
    let (_, gs) = ed::quench_initial_state(q, n)?;
    let ev = ed::Evolver::new(&ed::build_spin_hamiltonian(&q.target, n)?, &gs.state)?;
    let mut worst: f64 = 0.0;
    for &t in times {
        let cov = realspace::evolve_covariance(&s0, &h1, t)?;
        let psi = ev.state_at(t);
        for j in 0..n {
            let a = realspace::single_site_rdm(&cov, j)?;
            let b = ed::rdm_partial_trace(&psi, &[j])?;
            for r in 0..2 {
                for c in 0..2 {
                    worst = worst.max((a[(r, c)] - b[(r, c)]).norm());
                }
            }
            if j + 1 < n {
                let a = realspace::pair_rdm(&cov, j)?;
                let b = ed::rdm_partial_trace(&psi, &[j, j + 1])?;
                for r in 0..4 {
                    for c in 0..4 {
                        worst = worst.max((a[(r, c)] - b[(r, c)]).norm());
                    }
                }
            }
        }
    }
    Ok(worst)
}

/// The full suite on an `n`-site ring.
pub fn run_suite(n: usize) -> Result<Vec<OracleCheck>> {
    let times: Vec<f64> = (0..200).map(|k| 10.0 * k as f64 / 199.0).collect();
    let mut checks = Vec::new();
    for (name, q) in reference_quenches() {
        checks.push(OracleCheck {
            name: format!("{name}: vacuum energy gate (N={n})"),
            deviation: vacuum_gate(&q.initial, n)?,
            tolerance: 1e-10,
        });
        let bdg_energy = realspace::build_bdg_realspace(&q.initial, n)?.ground_energy();
        let ed_energy = ed::quench_initial_state(&q, n)?.1.energy;
        checks.push(OracleCheck {
            name: format!("{name}: BdG vs ED ground energy (N={n})"),
            deviation: (bdg_energy - ed_energy).abs(),
            tolerance: 1e-10,
        });
        checks.push(OracleCheck {
            name: format!("{name}: |Loschmidt amplitude| momentum vs ED (N={n}, 200 times)"),
            deviation: loschmidt_deviation(&q, n, &times)?,
            tolerance: 1e-8,
        });
        checks.push(OracleCheck {
            name: format!("{name}: Wick vs ED reduced density matrices (N={n})"),
            deviation: rdm_deviation(&q, n, &[0.0, 1.0, 5.0, 10.0])?,
            tolerance: 1e-8,
        });
    }
    // λ₂ = 0, d-only quench: H₀ and H₁ commute.
    let g = |d| CouplingSet::new(0.8, 0.5, 0.0, d).expect("valid");
    let q = QuenchSpec::new(g(0.2), g(1.5))?;
    let echo = ed::loschmidt_echo_ed(&q, n, &times)?;
    checks.push(OracleCheck {
        name: format!("commuting quench: ED |G| = 1 (N={n})"),
        deviation: echo.amplitude.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max),
        tolerance: 1e-8,
    });
    Ok(checks)
}
