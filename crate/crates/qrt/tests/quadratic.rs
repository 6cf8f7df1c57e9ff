use std::f64::consts::PI;

use num_complex::Complex64;
use qrt::ed;
use qrt::meanfield::{csp_displacement, energy, stationarity_residual, Displacement};
use qrt::model::{boundary_g1c, critical_theta, ModelParams, Quasimomentum};
use qrt::modes::{fsp_coupling, fsp_displacement, fsp_modes, modes_with_coupling, np_modes};
use qrt::symplectic::{build_csp_matrix, diagonalize_couplings, symplectic_diagonalize};
use qrt::QrtError;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

/// ε_q from the two-mode closed form, written out independently of the library.
fn eps_by_hand(th: f64, c: f64, q: f64) -> f64 {
    let wq = 1.0 - 2.0 * c + 0.2 * (th - q).cos();
    let wm = 1.0 - 2.0 * c + 0.2 * (th + q).cos();
    0.5 * (((wq + wm).powi(2) - 16.0 * c * c).sqrt() + wq - wm)
}

#[test]
fn np_spectrum_regression() {
    let th = -2.0 * PI / 3.0;
    let m = np_modes(&ModelParams::reference(th, 0.4)).unwrap();
    let pinned = [0.4837354648979129, 0.5061249880929698, 0.8061249880929698];
    for q in Quasimomentum::ALL {
        let e = m.get(q).eps;
        assert!(close(e, eps_by_hand(th, 0.16, q.value()), 1e-14));
        assert!(close(e, pinned[q.index()], 1e-13));
    }
}

#[test]
fn np_soft_mode_closes() {
    let th = -2.0 * PI / 3.0;
    let gc = boundary_g1c(Quasimomentum::Zero, th, 1.0, 0.1).unwrap();
    let e: Vec<f64> = [1e-2, 1e-4, 1e-6].iter().map(|d| np_modes(&ModelParams::reference(th, gc * (1.0 - d))).unwrap().min_eps()).collect();
    assert!(e[0] > e[1] && e[1] > e[2] && e[2] < 1e-2);
    assert!(matches!(np_modes(&ModelParams::reference(th, gc * 1.01)), Err(QrtError::GapClosed { .. })));
}

#[test]
fn np_energy_constant_matches_closed_form() {
    let p = ModelParams::reference(-2.0 * PI / 3.0, 0.4);
    let m = np_modes(&p).unwrap();
    // E_q = (√(S² − 16c²) − S)/4 and ε_q + ε_{−q} = √(S² − 16c²)
    for q in Quasimomentum::ALL {
        let (a, b) = (m.get(q), m.get(q.neg()));
        let s = a.omega_q + b.omega_q;
        assert!(close(a.eps + b.eps, (s * s - 16.0 * m.c * m.c).sqrt(), 1e-14));
        assert!(close(a.e_const, 0.25 * ((s * s - 16.0 * m.c * m.c).sqrt() - s), 1e-14));
    }
}

#[test]
fn fsp_displacement_limits() {
    let th = -2.0 * PI / 3.0;
    let gc = boundary_g1c(Quasimomentum::Zero, th, 1.0, 0.1).unwrap();
    assert!(fsp_displacement(&ModelParams::reference(th, gc)).unwrap().max_abs() < 1e-7);
    assert!(matches!(fsp_displacement(&ModelParams::reference(th, gc * 0.99)), Err(QrtError::OutsideFsp(_))));

    // decoupled cavities: single-Rabi amplitude √(g²/ω² − Δ²/(16g²))
    let p = ModelParams::new(1.0, 400.0, 0.0, 0.0, 0.8).unwrap();
    let alpha = fsp_displacement(&p).unwrap().alpha(&p)[0];
    let g = p.g();
    let raw = (g * g / (p.omega * p.omega) - p.delta * p.delta / (16.0 * g * g)).sqrt();
    assert!(close(alpha.re, raw, 1e-13));
    assert_eq!(alpha.im, 0.0);
}

#[test]
fn fsp_displacement_is_a_stationary_minimum() {
    let p = ModelParams::reference(-2.0 * PI / 3.0, 0.6);
    let d = fsp_displacement(&p).unwrap();
    assert!(close(d.a[0], 0.5204164998665332, 1e-13));
    assert!(stationarity_residual(&p, &d) < 1e-12);
    assert!(energy(&p, &d) < energy(&p, &Displacement::zero()));
}

#[test]
fn fsp_spectrum_regression_and_limits() {
    let th = -2.0 * PI / 3.0;
    let p = ModelParams::reference(th, 0.6);
    let m = fsp_modes(&p).unwrap();
    let pinned = [0.7025622748198199, 0.7063640435001927, 1.0063640435001926];
    for q in Quasimomentum::ALL {
        assert!(close(m.get(q).eps, eps_by_hand(th, fsp_coupling(&p), q.value()), 1e-14));
        assert!(close(m.get(q).eps, pinned[q.index()], 1e-13));
    }
    let far = fsp_modes(&ModelParams::reference(th, 200.0)).unwrap();
    for q in Quasimomentum::ALL {
        assert!((far.get(q).eps - (1.0 + 0.2 * (th - q.value()).cos())).abs() < 1e-8);
    }
    let gc = boundary_g1c(Quasimomentum::Zero, th, 1.0, 0.1).unwrap();
    let near = fsp_modes(&ModelParams::reference(th, gc * (1.0 + 1e-8))).unwrap();
    assert!(near.get(Quasimomentum::Zero).eps < 1e-3);
}

#[test]
fn csp_solution_regression() {
    let p = ModelParams::reference(-PI / 3.0, 0.8);
    let mf = csp_displacement(&p, &[]).unwrap();
    let d = mf.disp;
    assert!(close(d.a[0], -0.8521923098584805, 1e-9));
    assert!(close(d.a[1], 0.7569253611356465, 1e-9));
    assert_eq!(d.a[1], d.a[2]);
    assert!(close(d.b[1], 0.14668808218519624, 1e-9));
    assert_eq!(d.b[0], 0.0);
    assert!(d.b.iter().sum::<f64>().abs() < 1e-15);
    assert!(mf.degenerate, "chirality doublet must be flagged");
    assert!(d.b[1] > 0.0);
    assert!(stationarity_residual(&p, &d) < 1e-10);
}

#[test]
fn csp_solution_is_a_local_minimum() {
    for (th, g1) in [(-PI / 3.0, 0.8), (-1.0, 0.6), (0.5, 0.9), (0.0, 0.8)] {
        let p = ModelParams::reference(th, g1);
        let d = csp_displacement(&p, &[]).unwrap().disp;
        let e0 = energy(&p, &d);
        for k in 0..6 {
            for s in [-1e-3, 1e-3] {
                let mut x = d;
                if k < 3 {
                    x.a[k] += s;
                } else {
                    x.b[k - 3] += s;
                }
                assert!(energy(&p, &x) >= e0, "θ = {th}, coordinate {k}");
            }
        }
    }
}

#[test]
fn fasp_is_frustrated_and_real() {
    let d = csp_displacement(&ModelParams::reference(0.0, 0.8), &[]).unwrap().disp;
    assert!(d.b.iter().all(|b| b.abs() < 1e-12));
    assert!((d.a[1] - d.a[2]).abs() < 1e-12);
    assert!((d.a[0] - d.a[1]).abs() > 0.1);
    assert!(d.a[0] * d.a[1] < 0.0);
}

#[test]
fn chiral_amplitude_jumps_at_critical_angle() {
    let tc = critical_theta(1.0, 0.1);
    let inside = csp_displacement(&ModelParams::reference(-tc + 0.01, 0.6), &[]).unwrap().disp;
    assert!(inside.b[1].abs() > 0.05);
    let outside = fsp_displacement(&ModelParams::reference(-tc - 0.01, 0.6)).unwrap();
    assert_eq!(outside.b, [0.0; 3]);
}

#[test]
fn matrix_at_zero_displacement_is_normal_phase_form() {
    let p = ModelParams::reference(-0.7, 0.35);
    let m = build_csp_matrix(&p, &Displacement::zero());
    assert!((m - m.adjoint()).norm() < 1e-15);
    for n in 0..3 {
        assert!((m[(n, n + 3)] - Complex64::new(-p.g1 * p.g1 * p.omega, 0.0)).norm() < 1e-15);
    }
    let sol = symplectic_diagonalize(&m).unwrap();
    let mut e = np_modes(&p).unwrap().eps_sorted();
    e.sort_by(|a, b| a.total_cmp(b));
    for i in 0..3 {
        assert!((sol.eps[i] - e[i]).abs() < 1e-12);
    }
}

#[test]
fn csp_matrix_regression() {
    let p = ModelParams::reference(-PI / 3.0, 0.8);
    let d = csp_displacement(&p, &[]).unwrap().disp;
    let m = build_csp_matrix(&p, &d);
    assert!((m[(0, 0)].re - 0.4738827295417182).abs() < 1e-9);
    assert!((m[(0, 3)].re - -0.02611727045828182).abs() < 1e-9);
    assert!((m[(0, 1)] - Complex64::new(0.025, -0.05 * (PI / 3.0).sin())).norm() < 1e-15);
}

#[test]
fn csp_spectrum_matches_truncated_fock_diagonalization() {
    let p = ModelParams::reference(-PI / 3.0, 0.8);
    let d = csp_displacement(&p, &[]).unwrap().disp;
    let c = d.couplings(&p);
    let sol = diagonalize_couplings(&p, c).unwrap();
    let pinned = [0.7324367785726689, 1.0261921769832127, 1.0399346954528472];
    for i in 0..3 {
        assert!(close(sol.eps[i], pinned[i], 1e-8));
    }
    let h = ed::quadratic_hamiltonian(&p, c, 12);
    let g = ed::ground_state(&h).unwrap();
    let shift: f64 = c.iter().sum();
    assert!((g.e0 - (sol.e_ground - shift)).abs() < 1e-8, "{} vs {}", g.e0, sol.e_ground - shift);
    assert!((g.gap - sol.eps[0]).abs() < 1e-8, "{} vs {}", g.gap, sol.eps[0]);
}

#[test]
fn unstable_matrix_is_rejected() {
    let p = ModelParams::reference(-2.0 * PI / 3.0, 0.8);
    // NP quadratic form far past its boundary
    assert!(matches!(diagonalize_couplings(&p, [0.64; 3]), Err(QrtError::DynamicalInstability(_))));
    assert!(modes_with_coupling(&p, 0.64).is_err());
}
