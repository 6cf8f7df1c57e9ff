use std::f64::consts::PI;

use qrt::model::{critical_theta, ModelParams, PhaseKind};
use qrt::modes::{fsp_coupling, fsp_coupling_derivative};
use qrt::qfi::{perturbative_qfi, qfi_of_state};
use qrt::state::{neighbors, solve_branch, Branch};
use qrt::symplectic::vacuum_overlap;
use qrt::{qfi, qfi_csp, qfi_fsp, qfi_np, DerivativeMode, QrtError, SolverOptions};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn g1c(th: f64) -> f64 {
    qrt::critical_g1(&ModelParams::reference(th, 0.1)).unwrap().1
}

/// 8(1 − |⟨0(g1−δ)|0(g1+δ)⟩|)/(2δ)² from the Bogoliubov vacua alone.
fn overlap_qfi(p: &ModelParams, branch: Branch, delta: f64) -> f64 {
    let opts = SolverOptions::default();
    let gs = solve_branch(p, branch, &[], &opts).unwrap();
    let (m, pl) = neighbors(&gs, delta, &opts).unwrap();
    let f = vacuum_overlap(&m.bogo.t, &pl.bogo.t);
    8.0 * (1.0 - f) / (2.0 * delta).powi(2)
}

#[test]
fn np_perturbative_sum_matches_momentum_form() {
    for (th, u) in [(-2.0 * PI / 3.0, 0.5), (-1.0, 0.9), (0.4, 0.3), (2.5, 0.99)] {
        let p = ModelParams::reference(th, u * g1c(th));
        let gs = solve_branch(&p, Branch::Normal, &[], &SolverOptions::default()).unwrap();
        let terms = perturbative_qfi([2.0 * p.g1; 3], &gs.bogo);
        let closed = qfi_np(&p).unwrap();
        let sum: f64 = terms.iter().map(|t| t.value).sum();
        assert!(rel(sum, closed.value) < 1e-10, "{sum} vs {}", closed.value);
        // a uniform perturbation only creates pairs (q, −q)
        let k0 = &closed.contributions[0];
        assert_eq!((k0.i, k0.j), (0, 0));
        let nonzero = terms.iter().filter(|t| t.value > 1e-12 * sum).count();
        assert_eq!(nonzero, 2);
        let pair = closed.contributions[1].value + closed.contributions[2].value;
        let mut vals: Vec<f64> = terms.iter().map(|t| t.value).filter(|v| *v > 1e-12 * sum).collect();
        let mut want = vec![k0.value, pair];
        vals.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        for (a, b) in vals.iter().zip(&want) {
            assert!(rel(*a, *b) < 1e-9);
        }
    }
}

#[test]
fn fsp_perturbative_sum_matches_closed_form() {
    for (th, u) in [(-2.0 * PI / 3.0, 1.2), (PI, 1.01), (-2.0, 3.0)] {
        let p = ModelParams::reference(th, u * g1c(th));
        let gs = solve_branch(&p, Branch::Ferro, &[], &SolverOptions::default()).unwrap();
        let sum: f64 = perturbative_qfi([fsp_coupling_derivative(&p); 3], &gs.bogo).iter().map(|t| t.value).sum();
        let generic = qfi_of_state(&gs, DerivativeMode::Total, None, &SolverOptions::default()).unwrap().value;
        let closed = qfi_fsp(&p).unwrap().value;
        assert!(rel(sum, closed) < 1e-10);
        assert!(rel(generic, closed) < 1e-10);
    }
}

#[test]
fn fsp_coupling_derivative_matches_finite_difference() {
    for (th, g1) in [(-2.0 * PI / 3.0, 0.6), (PI, 0.5), (2.0, 1.7)] {
        let p = ModelParams::reference(th, g1);
        let h = 1e-5;
        let fd = (fsp_coupling(&p.with_g1(g1 + h)) - fsp_coupling(&p.with_g1(g1 - h))) / (2.0 * h);
        assert!(rel(fd, fsp_coupling_derivative(&p)) < 1e-6);
    }
}

#[test]
fn gaussian_overlap_fidelity_matches_each_phase() {
    let cases = [
        (Branch::Normal, -2.0 * PI / 3.0, -1.0),
        (Branch::Normal, -PI / 3.0, -1.0),
        (Branch::Ferro, -2.0 * PI / 3.0, 1.0),
        (Branch::Chiral, -PI / 3.0, 1.0),
        (Branch::Chiral, 0.7, 1.0),
    ];
    for (branch, th, side) in cases {
        let gc = g1c(th);
        for k in 0..20 {
            let d = 10f64.powf(-2.5 + 2.0 * k as f64 / 19.0);
            let p = ModelParams::reference(th, gc * (1.0 + side * d));
            let exact = match branch {
                Branch::Normal => qfi_np(&p),
                Branch::Ferro => qfi_fsp(&p),
                Branch::Chiral => qfi_csp(&p),
            }
            .unwrap()
            .value;
            let fid = overlap_qfi(&p, branch, 1e-3 * gc * d);
            assert!(rel(fid, exact) < 1e-3, "{branch:?} θ={th} d={d}: {fid} vs {exact}");
        }
    }
}

#[test]
fn regression_values() {
    let p = ModelParams::reference(-2.0 * PI / 3.0, 0.4);
    assert!(rel(qfi_np(&p).unwrap().value, 34.16394158168747) < 1e-12);
    let p = ModelParams::reference(-2.0 * PI / 3.0, 0.6);
    assert!(rel(qfi_fsp(&p).unwrap().value, 5.09804335197971) < 1e-12);
    let p = ModelParams::reference(-PI / 3.0, 0.8);
    assert!(rel(qfi_csp(&p).unwrap().value, 0.21809401923968813) < 1e-8);
}

#[test]
fn np_vanishes_without_coupling() {
    for th in [-2.0, 0.0, 1.0] {
        assert_eq!(qfi_np(&ModelParams::reference(th, 0.0)).unwrap().value, 0.0);
    }
}

#[test]
fn np_diverges_at_the_boundary() {
    let th = -2.0 * PI / 3.0;
    let p = ModelParams::reference(th, g1c(th) * (1.0 + 1e-9));
    assert!(matches!(qfi_np(&p), Err(QrtError::Divergent)));
    let near = qfi_np(&p.with_g1(g1c(th) * (1.0 - 1e-6))).unwrap().value;
    assert!(near > 1e10, "{near}");
}

#[test]
fn fsp_decays_as_inverse_tenth_power() {
    let p = ModelParams::reference(-2.0 * PI / 3.0, 50.0);
    let r = qfi_fsp(&p.with_g1(100.0)).unwrap().value / qfi_fsp(&p).unwrap().value;
    assert!(rel(r, 2f64.powi(-10)) < 1e-3, "{r}");
}

#[test]
fn fsp_rejected_below_boundary() {
    let p = ModelParams::reference(-2.0 * PI / 3.0, 0.3);
    assert!(matches!(qfi_fsp(&p), Err(QrtError::OutsideFsp(_))));
}

#[test]
fn chiral_total_derivative_is_step_converged() {
    let opts = SolverOptions::default();
    for (th, g1) in [(-PI / 3.0, 0.8), (0.0, 0.8), (1.2, 0.6)] {
        let p = ModelParams::reference(th, g1);
        let gs = solve_branch(&p, Branch::Chiral, &[], &opts).unwrap();
        let h = qrt::state::fd_step(&p);
        let a = qfi_of_state(&gs, DerivativeMode::Total, Some(&neighbors(&gs, h, &opts).unwrap()), &opts).unwrap().value;
        let b = qfi_of_state(&gs, DerivativeMode::Total, Some(&neighbors(&gs, h / 2.0, &opts).unwrap()), &opts).unwrap().value;
        assert!(rel(a, b) < 1e-6, "{a} vs {b}");
        // the fixed-displacement derivative misses the response of the amplitude
        let e = qfi_of_state(&gs, DerivativeMode::Explicit, None, &opts).unwrap().value;
        assert!(rel(e, a) > 1e-3);
    }
}

#[test]
fn dispatch_by_phase() {
    let thc = critical_theta(1.0, 0.1);
    let cases = [
        (-2.0 * PI / 3.0, 0.3, PhaseKind::Np),
        (-2.0 * PI / 3.0, 0.6, PhaseKind::Fsp),
        (-PI / 3.0, 0.8, PhaseKind::Csp),
        (0.0, 0.8, PhaseKind::Fasp),
        (thc - 0.3, 0.9, PhaseKind::Csp),
    ];
    for (th, g1, kind) in cases {
        let p = ModelParams::reference(th, g1);
        let r = qfi(&p).unwrap();
        assert_eq!(r.phase.kind, kind);
        let direct = match kind {
            PhaseKind::Np => qfi_np(&p),
            PhaseKind::Fsp => qfi_fsp(&p),
            _ => qfi_csp(&p),
        }
        .unwrap()
        .value;
        assert_eq!(r.value, direct);
    }
    let th = -2.0 * PI / 3.0;
    assert!(matches!(qfi(&ModelParams::reference(th, g1c(th))), Err(QrtError::AmbiguousPhase(_))));
}
