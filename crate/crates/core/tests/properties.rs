//! Property tests for the model, mode-block and correlator invariants.

use dqpt_core::bdg::{build_mode_matrix, diagonalize_mode, mode_levels, quench_overlap};
use dqpt_core::ed::{self, SpinState};
use dqpt_core::entanglement::{self, EntanglementSeries, Engine};
use dqpt_core::loschmidt;
use dqpt_core::model::{classify_phase, segment_crosses_boundary, PhaseLabel, BOUNDARY_TOL};
use dqpt_core::realspace;
use dqpt_core::{CouplingSet, QuenchSpec, C64};
use nalgebra::{DMatrix, DVector, Matrix4};
use proptest::prelude::*;
use std::f64::consts::FRAC_PI_2;

fn couplings() -> impl Strategy<Value = CouplingSet> {
    (0.1f64..1.5, -2.0f64..2.0, -2.0f64..2.0, 0.0f64..2.0).prop_map(|(g, a, b, d)| CouplingSet::new(g, a, b, d).unwrap())
}

/// Quenches whose initial point is gapped and not chiral.
fn quenches() -> impl Strategy<Value = QuenchSpec> {
    (couplings(), -2.0f64..2.0, -2.0f64..2.0, 0.0f64..2.0).prop_filter_map("inadmissible start", |(g0, a, b, d)| {
        if classify_phase(&g0, BOUNDARY_TOL).ok()? == PhaseLabel::Boundary {
            return None;
        }
        QuenchSpec::new(g0, g0.with_fields(a, b, d)).ok()
    })
}

fn phase_rotated(m: &Matrix4<C64>, phases: &[f64; 4]) -> Matrix4<C64> {
    let mut out = *m;
    for (j, &a) in phases.iter().enumerate() {
        let z = C64::from_polar(1.0, a);
        for i in 0..4 {
            out[(i, j)] *= z;
        }
    }
    out
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    sorted(m.clone().symmetric_eigen().eigenvalues.iter().copied().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn phase_membership_is_symmetric_under_field_reflection(g in couplings()) {
        let label = classify_phase(&g, BOUNDARY_TOL).unwrap();
        prop_assume!(label != PhaseLabel::Boundary);
        for (a, b) in [(-g.lambda1, g.lambda2), (g.lambda1, -g.lambda2)] {
            let reflected = classify_phase(&g.with_fields(a, b, g.dm), BOUNDARY_TOL).unwrap();
            prop_assert_eq!(reflected, label);
        }
    }

    #[test]
    fn identical_endpoints_never_cross(q in quenches()) {
        let q = QuenchSpec::new(q.initial, q.initial).unwrap();
        prop_assert!(!segment_crosses_boundary(&q, 101).unwrap().crosses);
    }

    #[test]
    fn mode_matrix_is_hermitian_and_frame_diagonalises(g in couplings(), phi in 0.0f64..FRAC_PI_2) {
        let m = build_mode_matrix(&g, phi);
        prop_assert!(dqpt_core::linalg::max_norm((m.h - m.h.adjoint()).iter()) < 1e-15);
        let dec = diagonalize_mode(&m);
        prop_assume!(dec.is_ok());
        let dec = dec.unwrap();
        prop_assert!(dec.unitarity_residual() < 1e-10);
        prop_assert!(dec.diagonal_residual(&m) < 1e-10);
    }

    #[test]
    fn levels_are_plus_minus_pairs_without_dm_or_alternation(
        gamma in 0.1f64..1.5, l1 in -2.0f64..2.0, phi in 0.0f64..FRAC_PI_2,
    ) {
        let g = CouplingSet::new(gamma, l1, 0.0, 0.0).unwrap();
        let w = mode_levels(&g, phi);
        let neg = sorted(w.iter().map(|x| -x).collect());
        for (a, b) in w.iter().zip(&neg) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn lower_levels_mirror_upper_levels_without_dm(
        gamma in 0.1f64..1.5, l1 in -2.0f64..2.0, l2 in -2.0f64..2.0, phi in 0.0f64..FRAC_PI_2,
    ) {
        let g = CouplingSet::new(gamma, l1, l2, 0.0).unwrap();
        let dec = diagonalize_mode(&build_mode_matrix(&g, phi));
        prop_assume!(dec.is_ok());
        let w = dec.unwrap().omegas;
        prop_assert!((w[2] + w[0]).abs() < 1e-10);
        prop_assert!((w[3] + w[1]).abs() < 1e-10);
    }

    #[test]
    fn dm_terms_commute_at_zero_alternation(
        gamma in 0.1f64..1.5, l1 in -2.0f64..2.0, d1 in 0.0f64..2.0, d2 in 0.0f64..2.0, phi in 0.0f64..FRAC_PI_2,
    ) {
        let a = build_mode_matrix(&CouplingSet::new(gamma, l1, 0.0, d1).unwrap(), phi).h;
        let b = build_mode_matrix(&CouplingSet::new(gamma, l1, 0.0, d2).unwrap(), phi).h;
        prop_assert!(dqpt_core::linalg::max_norm((a * b - b * a).iter()) < 1e-12);
    }

    #[test]
    fn overlap_moduli_do_not_depend_on_eigenvector_phases(
        q in quenches(), phi in 0.01f64..1.56,
        p0 in prop::array::uniform4(0.0f64..6.3), p1 in prop::array::uniform4(0.0f64..6.3),
    ) {
        let d0 = diagonalize_mode(&build_mode_matrix(&q.initial, phi));
        let d1 = diagonalize_mode(&build_mode_matrix(&q.target, phi));
        prop_assume!(d0.is_ok() && d1.is_ok());
        let (d0, d1) = (d0.unwrap(), d1.unwrap());
        let base = quench_overlap(&d0, &d1).unwrap();
        let (mut r0, mut r1) = (d0, d1);
        r0.frame = phase_rotated(&d0.frame, &p0);
        r1.frame = phase_rotated(&d1.frame, &p1);
        let rotated = quench_overlap(&r0, &r1).unwrap();
        if let (Ok(t), Ok(s)) = (base.t_matrix(), rotated.t_matrix()) {
            for (a, b) in t.iter().zip(s.iter()) {
                prop_assert!((a.norm() - b.norm()).abs() < 1e-10 * (1.0 + a.norm()));
            }
        }
        let (w, v) = (base.echo().weights, rotated.echo().weights);
        for (a, b) in w.iter().zip(&v) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn mode_echo_never_exceeds_one(q in quenches(), phi in 0.001f64..1.57, t in 0.0f64..100.0) {
        let e = loschmidt::mode_echo(&q, phi);
        prop_assume!(e.is_ok());
        let e = e.unwrap();
        prop_assert!(e.amplitude(t).norm() <= 1.0 + 1e-9);
        prop_assert!((e.amplitude(0.0).norm() - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pair_reductions_repeat_every_two_sites(q in quenches(), no_dm in any::<bool>(), t in 0.0f64..20.0) {
        let strip = |g: CouplingSet| g.with_fields(g.lambda1, g.lambda2, 0.0);
        let q = if no_dm { QuenchSpec::new(strip(q.initial), strip(q.target)).unwrap() } else { q };
        let n = 16;
        let h0 = realspace::build_bdg_realspace(&q.initial, n).unwrap();
        let h1 = realspace::build_bdg_realspace(&q.target, n).unwrap();
        let s0 = realspace::ground_covariance(&h0);
        prop_assume!(s0.is_ok());
        let s = realspace::evolve_covariance(&s0.unwrap(), &h1, t).unwrap();
        for j in 0..n - 3 {
            let a = realspace::pair_rdm(&s, j).unwrap();
            let b = realspace::pair_rdm(&s, j + 2).unwrap();
            prop_assert!(dqpt_core::linalg::max_norm((a - b).iter()) < 1e-9);
        }
        // Reflection about a site maps the even-odd pair onto the odd-even
        // pair; it is a symmetry only when neither Hamiltonian has a DM term.
        if q.initial.dm == 0.0 && q.target.dm == 0.0 {
            let eo = DMatrix::from_iterator(4, 4, realspace::pair_rdm(&s, 1).unwrap().iter().copied());
            let oe = DMatrix::from_iterator(4, 4, realspace::pair_rdm(&s, 0).unwrap().iter().copied());
            for (x, y) in hermitian_eigenvalues(&eo).iter().zip(hermitian_eigenvalues(&oe)) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
        for j in 0..n - 1 {
            let rho = DMatrix::from_iterator(4, 4, realspace::pair_rdm(&s, j).unwrap().iter().copied());
            prop_assert!(dqpt_core::linalg::max_abs_diff(&rho, &rho.adjoint()) < 1e-12);
            prop_assert!((rho.trace() - C64::new(1.0, 0.0)).norm() < 1e-12);
            prop_assert!(hermitian_eigenvalues(&rho)[0] > -1e-10);
        }
    }

    #[test]
    fn complementary_reductions_share_their_spectrum(
        re in prop::collection::vec(-1.0f64..1.0, 64), im in prop::collection::vec(-1.0f64..1.0, 64), mask in 1usize..63,
    ) {
        let amps = DVector::from_iterator(64, re.iter().zip(&im).map(|(&a, &b)| C64::new(a, b)));
        let norm = amps.norm();
        prop_assume!(norm > 1e-3);
        let s = SpinState { size: 6, amps: amps / C64::new(norm, 0.0) };
        let a: Vec<usize> = (0..6).filter(|k| mask & (1 << k) != 0).collect();
        let b: Vec<usize> = (0..6).filter(|k| mask & (1 << k) == 0).collect();
        let ea = hermitian_eigenvalues(&ed::rdm_partial_trace(&s, &a).unwrap());
        let eb = hermitian_eigenvalues(&ed::rdm_partial_trace(&s, &b).unwrap());
        let nonzero = |v: &[f64]| v.iter().rev().take(1 << a.len().min(b.len())).copied().collect::<Vec<_>>();
        for (x, y) in nonzero(&ea).iter().zip(nonzero(&eb)) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn werner_negativity_matches_brute_force_transpose(p in 0.0f64..1.0) {
        let h = 0.5f64.sqrt();
        let singlet = [0.0, h, -h, 0.0];
        let rho = Matrix4::from_fn(|r, c| {
            C64::new(p * singlet[r] * singlet[c] + if r == c { (1.0 - p) / 4.0 } else { 0.0 }, 0.0)
        });
        // Transpose the second qubit by swapping its bit between row and column.
        let pt = DMatrix::from_fn(4, 4, |r, c| rho[((r & 2) | (c & 1), (c & 2) | (r & 1))]);
        let brute: f64 = hermitian_eigenvalues(&pt).iter().filter(|&&e| e < 0.0).map(|e| -e).sum();
        prop_assert!((entanglement::negativity(&rho).unwrap() - brute).abs() < 1e-12);
        prop_assert!((brute - ((3.0 * p - 1.0) / 4.0).max(0.0)).abs() < 1e-12);
    }

    #[test]
    fn sinusoid_fluctuation_is_amplitude_over_root_two(a in 0.01f64..0.5, w in 2.0f64..20.0) {
        let times: Vec<f64> = (0..=20_000).map(|k| k as f64 * 0.001).collect();
        let ggm: Vec<f64> = times.iter().map(|t| a * (w * t).sin()).collect();
        let s = EntanglementSeries {
            logneg_eo: vec![0.0; times.len()],
            logneg_oe: vec![0.0; times.len()],
            ggm,
            times,
            engine: Engine::Exact,
        };
        let sigma = entanglement::ggm_fluctuation(&s, 20.0).unwrap().sigma;
        prop_assert!((sigma / (a / 2f64.sqrt()) - 1.0).abs() < 0.01);
    }
}
