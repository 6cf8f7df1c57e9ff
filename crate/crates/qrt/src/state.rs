//! Effective ground state for a given branch: displacement, couplings and Bogoliubov transform.

use serde::{Deserialize, Serialize};

use crate::error::{QrtError, Result};
use crate::meanfield::{csp_displacement_with, refine, Displacement, SolverOptions};
use crate::model::{classify_phase, critical_g1, soft_quasimomentum, ModelParams, PhaseKind, PhaseLabel};
use crate::modes::{fsp_coupling, fsp_displacement, fsp_modes, np_modes, MomentumModes};
use crate::symplectic::{diagonalize_couplings, SymplecticSolution};

/// Which effective Hamiltonian is expanded around.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Normal,
    Ferro,
    Chiral,
}

impl Branch {
    pub fn of(kind: PhaseKind) -> Self {
        match kind {
            PhaseKind::Np => Branch::Normal,
            PhaseKind::Fsp => Branch::Ferro,
            PhaseKind::Csp | PhaseKind::Fasp => Branch::Chiral,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    pub params: ModelParams,
    pub branch: Branch,
    pub phase: PhaseLabel,
    pub disp: Displacement,
    /// λₙ²/Δₙ per cavity.
    pub couplings: [f64; 3],
    pub bogo: SymplecticSolution,
    /// Present for the translation-invariant branches.
    pub modes: Option<MomentumModes>,
    pub degenerate: bool,
}

impl GroundState {
    pub fn eps_soft(&self) -> f64 {
        self.bogo.eps[0]
    }
}

fn label_for(p: &ModelParams, branch: Branch) -> PhaseLabel {
    let soft_q = soft_quasimomentum(p.theta, p.omega, p.j_hop);
    let kind = match branch {
        Branch::Normal => PhaseKind::Np,
        Branch::Ferro => PhaseKind::Fsp,
        Branch::Chiral => {
            if p.theta.abs() <= crate::model::DEFAULT_PHASE_TOL {
                PhaseKind::Fasp
            } else {
                PhaseKind::Csp
            }
        }
    };
    PhaseLabel { kind, soft_q }
}

fn gap_as_divergent(e: QrtError) -> QrtError {
    match e {
        QrtError::GapClosed { .. } => QrtError::Divergent,
        other => other,
    }
}

/// Solve the ground state on a fixed branch. `seeds` warm-start the chiral solver.
pub fn solve_branch(p: &ModelParams, branch: Branch, seeds: &[Displacement], opts: &SolverOptions) -> Result<GroundState> {
    let phase = label_for(p, branch);
    match branch {
        Branch::Normal => {
            let modes = np_modes(p).map_err(gap_as_divergent)?;
            let c = [p.g1 * p.g1 * p.omega; 3];
            let bogo = diagonalize_couplings(p, c).map_err(gap_as_divergent)?;
            Ok(GroundState { params: *p, branch, phase, disp: Displacement::zero(), couplings: c, bogo, modes: Some(modes), degenerate: false })
        }
        Branch::Ferro => {
            let disp = fsp_displacement(p)?;
            let modes = fsp_modes(p).map_err(gap_as_divergent)?;
            let c = [fsp_coupling(p); 3];
            let bogo = diagonalize_couplings(p, c).map_err(gap_as_divergent)?;
            Ok(GroundState { params: *p, branch, phase, disp, couplings: c, bogo, modes: Some(modes), degenerate: false })
        }
        Branch::Chiral => {
            let mf = csp_displacement_with(p, seeds, opts)?;
            chiral_from(p, phase, mf.disp, mf.degenerate)
        }
    }
}

fn chiral_from(p: &ModelParams, phase: PhaseLabel, disp: Displacement, degenerate: bool) -> Result<GroundState> {
    let c = disp.couplings(p);
    let bogo = diagonalize_couplings(p, c).map_err(gap_as_divergent)?;
    Ok(GroundState { params: *p, branch: Branch::Chiral, phase, disp, couplings: c, bogo, modes: None, degenerate })
}

/// Classify, then solve on the matching branch.
pub fn solve(p: &ModelParams, tol: f64, seeds: &[Displacement], opts: &SolverOptions) -> Result<GroundState> {
    let label = classify_phase(p, tol)?;
    let mut gs = solve_branch(p, Branch::of(label.kind), seeds, opts)?;
    gs.phase = label;
    Ok(gs)
}

/// Central-difference step h = max(1e−6, 1e−4·|g1c − g1|).
pub fn fd_step(p: &ModelParams) -> f64 {
    let gc = critical_g1(p).map(|(_, g)| g).unwrap_or(p.g1);
    (1e-4 * (gc - p.g1).abs()).max(1e-6)
}

/// The same branch re-solved at g1 ± h, continuing from this state's displacement.
pub fn neighbors(gs: &GroundState, h: f64, opts: &SolverOptions) -> Result<(GroundState, GroundState)> {
    let at = |g1: f64| -> Result<GroundState> {
        let p = gs.params.with_g1(g1);
        match gs.branch {
            Branch::Chiral => {
                let mf = refine(&p, &gs.disp, opts).ok_or(QrtError::StepTooLarge { g1 })?;
                chiral_from(&p, gs.phase, mf.disp, gs.degenerate)
            }
            b => {
                let mut s = solve_branch(&p, b, &[], opts)?;
                s.phase = gs.phase;
                Ok(s)
            }
        }
    };
    let g = gs.params.g1;
    Ok((at(g - h)?, at(g + h)?))
}
