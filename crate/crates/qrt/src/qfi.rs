//! Quantum Fisher information with respect to g1 in each phase.

use serde::{Deserialize, Serialize};

use crate::error::{QrtError, Result};
use crate::meanfield::{lambda_over_delta_partial, refine, Displacement, SolverOptions};
use crate::model::{classify_phase, soft_quasimomentum, ModelParams, PhaseKind, PhaseLabel, Quasimomentum};
use crate::modes::{fsp_coupling, fsp_coupling_derivative, modes_with_coupling, MomentumModes};
use crate::state::{fd_step, neighbors, solve_branch, Branch, GroundState};
use crate::symplectic::SymplecticSolution;

/// How ∂_{g1}(λₙ²/Δₙ) treats the displacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DerivativeMode {
    /// Displacement re-solved at g1 ± h.
    #[default]
    Total,
    /// Displacement held fixed.
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QfiTerm {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QfiResult {
    pub value: f64,
    pub phase: PhaseLabel,
    pub contributions: Vec<QfiTerm>,
}

fn finish(phase: PhaseLabel, contributions: Vec<QfiTerm>) -> Result<QfiResult> {
    let value: f64 = contributions.iter().map(|t| t.value).sum();
    if !value.is_finite() {
        return Err(QrtError::Divergent);
    }
    Ok(QfiResult { value, phase, contributions })
}

/// 4D²Σ_q 2/(ω_q+ω_{−q}−4c)², shared by the NP and FSP closed forms.
fn momentum_qfi(p: &ModelParams, c: f64, dc: f64, kind: PhaseKind) -> Result<QfiResult> {
    let modes: MomentumModes = modes_with_coupling(p, c).map_err(|_| QrtError::Divergent)?;
    let mut terms = Vec::with_capacity(3);
    for q in Quasimomentum::ALL {
        let s = modes.get(q).omega_q + modes.get(q.neg()).omega_q - 4.0 * c;
        if s <= 0.0 {
            return Err(QrtError::Divergent);
        }
        terms.push(QfiTerm { i: q.index(), j: q.neg().index(), value: 4.0 * dc * dc * 2.0 / (s * s) });
    }
    finish(PhaseLabel { kind, soft_q: soft_quasimomentum(p.theta, p.omega, p.j_hop) }, terms)
}

/// I = 16ω²g1² Σ_q 2/(ω_q+ω_{−q}−4ωg1²)².
pub fn qfi_np(p: &ModelParams) -> Result<QfiResult> {
    momentum_qfi(p, p.g1 * p.g1 * p.omega, 2.0 * p.g1 * p.omega, PhaseKind::Np)
}

/// I = (2Jcosθ+ω)⁶/(64 g1¹⁰ω⁴) Σ_q 2/(ω′_q+ω′_{−q}−4λ′²/Δ′)².
pub fn qfi_fsp(p: &ModelParams) -> Result<QfiResult> {
    crate::modes::fsp_displacement(p)?;
    momentum_qfi(p, fsp_coupling(p), fsp_coupling_derivative(p), PhaseKind::Fsp)
}

/// Second-order perturbative QFI for ∂H = Σₙ Dₙ xₙ², summed over two-quasiparticle states.
pub fn perturbative_qfi(d: [f64; 3], sol: &SymplecticSolution) -> Vec<QfiTerm> {
    let w = sol.quadrature_weights();
    let mut terms = Vec::with_capacity(6);
    for i in 0..3 {
        for j in i..3 {
            let x: num_complex::Complex64 = (0..3).map(|n| w[(n, i)].conj() * w[(n, j)].conj() * d[n]).sum();
            let value = if i == j {
                8.0 * x.norm_sqr() / (2.0 * sol.eps[i]).powi(2)
            } else {
                16.0 * x.norm_sqr() / (sol.eps[i] + sol.eps[j]).powi(2)
            };
            terms.push(QfiTerm { i, j, value });
        }
    }
    terms
}

/// ∂_{g1}(λₙ²/Δₙ) per cavity.
pub fn derivative_lambda_over_delta(p: &ModelParams, disp: &Displacement, mode: DerivativeMode, opts: &SolverOptions) -> Result<[f64; 3]> {
    if mode == DerivativeMode::Explicit || disp.max_abs() == 0.0 {
        return Ok(disp.a.map(|a| lambda_over_delta_partial(p.g1, p.omega, a)));
    }
    let h = fd_step(p);
    let at = |g1: f64| -> Result<[f64; 3]> {
        let q = p.with_g1(g1);
        let mf = refine(&q, disp, opts).ok_or(QrtError::StepTooLarge { g1 })?;
        Ok(mf.disp.couplings(&q))
    };
    let (cp, cm) = (at(p.g1 + h)?, at(p.g1 - h)?);
    Ok(std::array::from_fn(|n| (cp[n] - cm[n]) / (2.0 * h)))
}

/// Derivative of the couplings for a solved state, reusing precomputed neighbors when given.
pub fn coupling_derivative(gs: &GroundState, mode: DerivativeMode, nb: Option<&(GroundState, GroundState)>, opts: &SolverOptions) -> Result<[f64; 3]> {
    let p = &gs.params;
    match (gs.branch, mode) {
        (Branch::Normal, _) => Ok([2.0 * p.g1 * p.omega; 3]),
        (Branch::Ferro, DerivativeMode::Total) => Ok([fsp_coupling_derivative(p); 3]),
        (_, DerivativeMode::Explicit) => Ok(gs.disp.a.map(|a| lambda_over_delta_partial(p.g1, p.omega, a))),
        (Branch::Chiral, DerivativeMode::Total) => {
            let h = fd_step(p);
            let owned;
            let (m, pl) = match nb {
                Some(pair) => (&pair.0, &pair.1),
                None => {
                    owned = neighbors(gs, h, opts)?;
                    (&owned.0, &owned.1)
                }
            };
            let dh = pl.params.g1 - m.params.g1;
            Ok(std::array::from_fn(|n| (pl.couplings[n] - m.couplings[n]) / dh))
        }
    }
}

/// QFI of a solved state from the generic perturbative sum.
pub fn qfi_of_state(gs: &GroundState, mode: DerivativeMode, nb: Option<&(GroundState, GroundState)>, opts: &SolverOptions) -> Result<QfiResult> {
    let d = coupling_derivative(gs, mode, nb, opts)?;
    finish(gs.phase, perturbative_qfi(d, &gs.bogo))
}

/// QFI on the chiral branch (CSP or FASP).
pub fn qfi_csp(p: &ModelParams) -> Result<QfiResult> {
    qfi_csp_with(p, &[], DerivativeMode::Total, &SolverOptions::default())
}

pub fn qfi_csp_with(p: &ModelParams, seeds: &[Displacement], mode: DerivativeMode, opts: &SolverOptions) -> Result<QfiResult> {
    let gs = solve_branch(p, Branch::Chiral, seeds, opts)?;
    qfi_of_state(&gs, mode, None, opts)
}

/// Dispatch on the phase.
pub fn qfi(p: &ModelParams) -> Result<QfiResult> {
    let label = classify_phase(p, crate::model::DEFAULT_PHASE_TOL)?;
    let mut r = match label.kind {
        PhaseKind::Np => qfi_np(p)?,
        PhaseKind::Fsp => qfi_fsp(p)?,
        PhaseKind::Csp | PhaseKind::Fasp => qfi_csp(p)?,
    };
    r.phase = label;
    Ok(r)
}
