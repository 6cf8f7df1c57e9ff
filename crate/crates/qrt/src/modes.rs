//! Momentum-space Bogoliubov modes for the translation-invariant phases (NP and FSP).

use serde::{Deserialize, Serialize};

use crate::error::{QrtError, Result};
use crate::meanfield::Displacement;
use crate::model::{boundary_g1c, ModelParams, Quasimomentum};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub q: Quasimomentum,
    /// ω_q (NP) or ω′_q (FSP).
    pub omega_q: f64,
    pub xi: f64,
    pub mu: f64,
    pub nu: f64,
    pub eps: f64,
    pub e_const: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumModes {
    /// Indexed by [`Quasimomentum::index`].
    pub modes: [Mode; 3],
    /// Anomalous coupling c = λ²/Δ (g1²ω in the NP).
    pub c: f64,
}

impl MomentumModes {
    pub fn get(&self, q: Quasimomentum) -> &Mode {
        &self.modes[q.index()]
    }

    pub fn min_eps(&self) -> f64 {
        self.modes.iter().map(|m| m.eps).fold(f64::INFINITY, f64::min)
    }

    pub fn eps_sorted(&self) -> [f64; 3] {
        let mut e = [self.modes[0].eps, self.modes[1].eps, self.modes[2].eps];
        e.sort_by(|a, b| a.total_cmp(b));
        e
    }

    pub fn e_total(&self) -> f64 {
        self.modes.iter().map(|m| m.e_const).sum()
    }
}

fn omega_q(p: &ModelParams, c: f64, q: Quasimomentum) -> f64 {
    p.omega - 2.0 * c + 2.0 * p.j_hop * (p.theta - q.value()).cos()
}

/// Bogoliubov modes of Σ ω_q a†a − c(a_q a_{−q} + h.c.) with ω_q built from anomalous coupling c.
pub fn modes_with_coupling(p: &ModelParams, c: f64) -> Result<MomentumModes> {
    let mut out = [None; 3];
    for q in Quasimomentum::ALL {
        let wq = omega_q(p, c, q);
        let wmq = omega_q(p, c, q.neg());
        let s = wq + wmq;
        let rad = s * s - 16.0 * c * c;
        if rad < 0.0 || s <= 0.0 {
            return Err(QrtError::GapClosed { eps: 0.0 });
        }
        let root = rad.sqrt();
        let eps = 0.5 * (root + wq - wmq);
        if eps < 1e-12 * p.omega {
            return Err(QrtError::GapClosed { eps });
        }
        let xi = 0.25 * ((s + 4.0 * c) / (s - 4.0 * c)).ln();
        out[q.index()] = Some(Mode {
            q,
            omega_q: wq,
            xi,
            mu: xi.cosh(),
            nu: xi.sinh(),
            eps,
            e_const: 0.25 * (root - s),
        });
    }
    Ok(MomentumModes { modes: out.map(|m| m.expect("all quasimomenta filled")), c })
}

pub fn np_modes(p: &ModelParams) -> Result<MomentumModes> {
    modes_with_coupling(p, p.g1 * p.g1 * p.omega)
}

/// κ = ω + 2J cos θ.
fn kappa(p: &ModelParams) -> f64 {
    p.omega + 2.0 * p.j_hop * p.theta.cos()
}

/// Rescaled FSP amplitude squared, Ã² = g1²ω²/κ² − 1/(16 g1²).
pub fn fsp_amplitude_sq(p: &ModelParams) -> f64 {
    let k = kappa(p);
    p.g1 * p.g1 * p.omega * p.omega / (k * k) - 1.0 / (16.0 * p.g1 * p.g1)
}

pub fn fsp_displacement(p: &ModelParams) -> Result<Displacement> {
    let gc = boundary_g1c(Quasimomentum::Zero, p.theta, p.omega, p.j_hop)?;
    if p.g1 < gc {
        return Err(QrtError::OutsideFsp(format!("g1 = {} below g1c(0) = {gc}", p.g1)));
    }
    let a = fsp_amplitude_sq(p).max(0.0).sqrt();
    Ok(Displacement { a: [a; 3], b: [0.0; 3] })
}

/// λ′²/Δ′ = κ³/(64 g1⁴ ω²).
pub fn fsp_coupling(p: &ModelParams) -> f64 {
    kappa(p).powi(3) / (64.0 * p.g1.powi(4) * p.omega * p.omega)
}

/// ∂_{g1}(λ′²/Δ′) along the FSP solution.
pub fn fsp_coupling_derivative(p: &ModelParams) -> f64 {
    -kappa(p).powi(3) / (16.0 * p.g1.powi(5) * p.omega * p.omega)
}

pub fn fsp_modes(p: &ModelParams) -> Result<MomentumModes> {
    fsp_displacement(p)?;
    modes_with_coupling(p, fsp_coupling(p))
}
