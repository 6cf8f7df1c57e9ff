use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use qrt::ed::{
    branch_selected_ground, build_hamiltonian, ground_state, lanczos_lowest, photon_current, qfi_fidelity, solve,
    FockConfig, LanczosOptions,
};
use qrt::model::ModelParams;
use qrt::state::{solve_branch, Branch};
use qrt::{critical_g1, qfi_np, QrtError, SolverOptions};

fn params(delta: f64, th: f64, g1: f64) -> ModelParams {
    ModelParams::new(1.0, delta, 0.1, th, g1).unwrap()
}

fn cfg(n_max: usize) -> FockConfig {
    FockConfig { n_max, ..Default::default() }
}

/// −3Δ/2 plus the constant of the quadratic fluctuation Hamiltonian.
fn effective_np_energy(p: &ModelParams) -> f64 {
    let gs = solve_branch(p, Branch::Normal, &[], &SolverOptions::default()).unwrap();
    -1.5 * p.delta + gs.bogo.e_ground - gs.couplings.iter().sum::<f64>()
}

#[test]
fn decoupled_spectrum() {
    let p = ModelParams::new(1.0, 20.0, 0.0, 0.3, 0.0).unwrap();
    let g = ground_state(&build_hamiltonian(&p, &cfg(3)).unwrap()).unwrap();
    assert!((g.e0 + 30.0).abs() < 1e-10);
    assert!((g.gap - 1.0).abs() < 1e-9);
}

#[test]
fn hamiltonian_is_hermitian() {
    let p = params(20.0, -PI / 3.0, 0.8);
    assert!(build_hamiltonian(&p, &cfg(4)).unwrap().hermiticity_error() < 1e-12);
    let gs = solve_branch(&p, Branch::Chiral, &[], &SolverOptions::default()).unwrap();
    let shifted = FockConfig { n_max: 4, displaced_frame: Some(gs.disp), ..Default::default() };
    assert!(build_hamiltonian(&p, &shifted).unwrap().hermiticity_error() < 1e-12);
}

#[test]
fn lanczos_matches_dense_diagonalization() {
    let p = params(5.0, 0.7, 0.6);
    let h = build_hamiltonian(&p, &cfg(2)).unwrap();
    let dense = DMatrix::from_fn(h.dim, h.dim, |r, c| h.get(r, c));
    let mut ev: Vec<f64> = SymmetricEigen::new(dense).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    let g = ground_state(&h).unwrap();
    assert!((g.e0 - ev[0]).abs() < 1e-9);
    assert!((g.e1 - ev[1]).abs() < 1e-9);
}

#[test]
fn lanczos_deflation_finds_second_level() {
    let p = params(5.0, -2.0, 0.4);
    let h = build_hamiltonian(&p, &cfg(3)).unwrap();
    let o = LanczosOptions::default();
    let (e0, v0) = lanczos_lowest(&h, &[], &o).unwrap();
    let (e1, _) = lanczos_lowest(&h, &[v0], &o).unwrap();
    assert!(e1 > e0);
}

#[test]
fn spectrum_symmetric_under_flux_reversal() {
    let a = ground_state(&build_hamiltonian(&params(10.0, 0.7, 0.4), &cfg(5)).unwrap()).unwrap();
    let b = ground_state(&build_hamiltonian(&params(10.0, -0.7, 0.4), &cfg(5)).unwrap()).unwrap();
    assert!((a.e0 - b.e0).abs() < 1e-9);
    assert!((a.gap - b.gap).abs() < 1e-8);
}

#[test]
fn regression_ground_energy() {
    let p = params(20.0, -2.0 * PI / 3.0, 0.3);
    let r = solve(&p, &cfg(8), 1e-8).unwrap();
    assert!((r.e0 + 30.282435611743196).abs() < 1e-9, "{}", r.e0);
    assert!(r.converged && r.cutoff_shift < 1e-8);
    // the normal-phase current is a finite-Δ correction
    assert!(r.current.abs() < 1e-3);
}

#[test]
fn truncation_is_variational() {
    let p = params(10.0, -1.0, 0.45);
    let e: Vec<f64> = [3, 5, 7]
        .iter()
        .map(|&n| ground_state(&build_hamiltonian(&p, &cfg(n)).unwrap()).unwrap().e0)
        .collect();
    assert!(e[0] >= e[1] - 1e-10 && e[1] >= e[2] - 1e-10, "{e:?}");
}

#[test]
fn normal_phase_energy_and_gap_approach_effective_theory() {
    let mut prev = (f64::INFINITY, f64::INFINITY);
    for delta in [10.0, 20.0, 50.0] {
        let p = params(delta, -2.0 * PI / 3.0, 0.3);
        let g = ground_state(&build_hamiltonian(&p, &cfg(8)).unwrap()).unwrap();
        let eps = solve_branch(&p, Branch::Normal, &[], &SolverOptions::default()).unwrap().eps_soft();
        let de = (g.e0 - effective_np_energy(&p)).abs();
        let dg = (g.gap - eps).abs() / eps;
        // both deviations are first order in ω/Δ
        assert!(de * delta < 0.5 && dg * delta < 0.25, "Δ={delta}: {de} {dg}");
        assert!(de < prev.0 && dg < prev.1);
        prev = (de, dg);
    }
}

#[test]
fn zero_coupling_fisher_information() {
    // second-order perturbation theory in g around the vacuum: I = 4Δω Σ_q 1/(Δ+ω_q)²
    for (delta, th) in [(10.0, -2.0 * PI / 3.0), (20.0, 0.5)] {
        let p = params(delta, th, 0.0);
        let exact: f64 = (0..3)
            .map(|k| {
                let q = 2.0 * PI * k as f64 / 3.0;
                let wq = 1.0 + 0.2 * (q - th).cos();
                4.0 * delta / (delta + wq).powi(2)
            })
            .sum();
        let (a, b) = (qfi_fidelity(&p, &cfg(4), 1e-3).unwrap(), qfi_fidelity(&p, &cfg(4), 5e-4).unwrap());
        let fid = (4.0 * b - a) / 3.0;
        assert!((fid - exact).abs() < 1e-6 * exact, "{fid} vs {exact}");
        assert_eq!(qfi_np(&p).unwrap().value, 0.0);
    }
}

#[test]
fn fidelity_step_converged() {
    let p = params(10.0, -2.0 * PI / 3.0, 0.3);
    let a = qfi_fidelity(&p, &cfg(6), 2e-3).unwrap();
    let b = qfi_fidelity(&p, &cfg(6), 1e-3).unwrap();
    assert!((a - b).abs() < 1e-3 * b);
}

#[test]
fn fidelity_approaches_effective_qfi_with_frequency_ratio() {
    let th = -2.0 * PI / 3.0;
    let gc = critical_g1(&params(10.0, th, 0.1)).unwrap().1;
    let g1 = 0.8 * gc;
    let target = qfi_np(&params(10.0, th, g1)).unwrap().value;
    let errs: Vec<f64> = [10.0, 20.0, 50.0]
        .iter()
        .map(|&d| (qfi_fidelity(&params(d, th, g1), &cfg(8), 1e-3 * g1).unwrap() - target).abs() / target)
        .collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
}

#[test]
fn chiral_phase_carries_current() {
    let opts = SolverOptions::default();
    let a = branch_selected_ground(&params(20.0, -PI / 3.0, 0.8), 6, &opts).unwrap();
    let b = branch_selected_ground(&params(20.0, PI / 3.0, 0.8), 6, &opts).unwrap();
    assert_eq!(a.branch, Branch::Chiral);
    assert!(a.current.abs() > 1.0, "{}", a.current);
    assert!((a.current + b.current).abs() < 1e-6 * a.current.abs());
}

#[test]
fn ferro_phase_current_vanishes_with_frequency_ratio() {
    let opts = SolverOptions::default();
    let f = |d: f64| branch_selected_ground(&params(d, -2.0 * PI / 3.0, 0.6), 6, &opts).unwrap();
    let (a, b) = (f(20.0), f(100.0));
    assert_eq!(a.branch, Branch::Ferro);
    assert!(a.current.abs() < 0.01 && b.current.abs() < a.current.abs());
}

#[test]
fn vacuum_current_is_zero() {
    let p = params(20.0, -PI / 3.0, 0.0);
    let h = build_hamiltonian(&p, &cfg(3)).unwrap();
    let g = ground_state(&h).unwrap();
    assert!(photon_current(&p, &cfg(3), &g.state).abs() < 1e-12);
}

#[test]
fn oversized_basis_rejected() {
    let p = params(20.0, 0.0, 0.3);
    let c = FockConfig { n_max: 20, max_dim: 10_000, ..Default::default() };
    assert!(matches!(build_hamiltonian(&p, &c), Err(QrtError::DimensionTooLarge { dim: 74088, limit: 10_000 })));
    assert!(matches!(build_hamiltonian(&p, &cfg(0)), Err(QrtError::Domain(_))));
}
