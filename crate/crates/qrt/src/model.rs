//! Model parameters, quasimomenta, phase boundaries and phase classification.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{QrtError, Result};

/// Default relative tolerance for boundary proximity in [`classify_phase`].
pub const DEFAULT_PHASE_TOL: f64 = 1e-9;

/// Map an angle to the canonical interval (−π, π].
pub fn normalize_angle(theta: f64) -> f64 {
    let mut t = theta % (2.0 * PI);
    if t <= -PI {
        t += 2.0 * PI;
    } else if t > PI {
        t -= 2.0 * PI;
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega: f64,
    pub delta: f64,
    pub j_hop: f64,
    pub theta: f64,
    pub g1: f64,
}

impl ModelParams {
    pub fn new(omega: f64, delta: f64, j_hop: f64, theta: f64, g1: f64) -> Result<Self> {
        let all = [omega, delta, j_hop, theta, g1];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(QrtError::Domain("non-finite parameter".into()));
        }
        if omega <= 0.0 || delta <= 0.0 {
            return Err(QrtError::Domain("omega and delta must be positive".into()));
        }
        if g1 < 0.0 {
            return Err(QrtError::Domain("g1 must be nonnegative".into()));
        }
        if j_hop < 0.0 || 2.0 * j_hop >= omega {
            return Err(QrtError::Domain("hopping must satisfy 0 <= 2J < omega".into()));
        }
        Ok(Self { omega, delta, j_hop, theta: normalize_angle(theta), g1 })
    }

    /// Construct from the bare coupling g instead of g1.
    pub fn from_g(omega: f64, delta: f64, j_hop: f64, theta: f64, g: f64) -> Result<Self> {
        Self::new(omega, delta, j_hop, theta, g / (delta * omega).sqrt())
    }

    /// ω=1, J=0.1, Δ=10⁴.
    pub fn reference(theta: f64, g1: f64) -> Self {
        Self::new(1.0, 1e4, 0.1, theta, g1).expect("reference parameters are valid")
    }

    pub fn g(&self) -> f64 {
        self.g1 * (self.delta * self.omega).sqrt()
    }

    pub fn with_g1(&self, g1: f64) -> Self {
        Self { g1, ..*self }
    }

    pub fn with_theta(&self, theta: f64) -> Self {
        Self { theta: normalize_angle(theta), ..*self }
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        Self { delta, ..*self }
    }

    pub fn theta_c(&self) -> f64 {
        critical_theta(self.omega, self.j_hop)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quasimomentum {
    Zero,
    Plus,
    Minus,
}

impl Quasimomentum {
    pub const ALL: [Quasimomentum; 3] = [Quasimomentum::Zero, Quasimomentum::Plus, Quasimomentum::Minus];

    pub fn value(self) -> f64 {
        match self {
            Quasimomentum::Zero => 0.0,
            Quasimomentum::Plus => 2.0 * PI / 3.0,
            Quasimomentum::Minus => -2.0 * PI / 3.0,
        }
    }

    pub fn neg(self) -> Self {
        match self {
            Quasimomentum::Zero => Quasimomentum::Zero,
            Quasimomentum::Plus => Quasimomentum::Minus,
            Quasimomentum::Minus => Quasimomentum::Plus,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Quasimomentum::Zero => 0,
            Quasimomentum::Plus => 1,
            Quasimomentum::Minus => 2,
        }
    }
}

impl fmt::Display for Quasimomentum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quasimomentum::Zero => "0",
            Quasimomentum::Plus => "+2pi/3",
            Quasimomentum::Minus => "-2pi/3",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhaseKind {
    #[serde(rename = "NP")]
    Np,
    #[serde(rename = "FSP")]
    Fsp,
    #[serde(rename = "CSP")]
    Csp,
    #[serde(rename = "FASP")]
    Fasp,
}

impl PhaseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PhaseKind::Np => "NP",
            PhaseKind::Fsp => "FSP",
            PhaseKind::Csp => "CSP",
            PhaseKind::Fasp => "FASP",
        }
    }

    /// CSP and FASP share the 6×6 machinery.
    pub fn is_chiral_branch(self) -> bool {
        matches!(self, PhaseKind::Csp | PhaseKind::Fasp)
    }
}

impl fmt::Display for PhaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseLabel {
    pub kind: PhaseKind,
    pub soft_q: Quasimomentum,
}

/// Second-order boundary g1c(q, θ).
pub fn boundary_g1c(q: Quasimomentum, theta: f64, omega: f64, j_hop: f64) -> Result<f64> {
    if !(omega > 0.0) || !(2.0 * j_hop.abs() < omega) {
        return Err(QrtError::Domain(format!("need omega > 0 and 2|J| < omega (omega = {omega}, J = {j_hop})")));
    }
    let q = q.value();
    let cm = (q - theta).cos();
    let cp = (q + theta).cos();
    let num = (2.0 * j_hop * cm + omega) * (2.0 * j_hop * cp + omega);
    let den = 4.0 * j_hop * omega * (cm + cp) + 4.0 * omega * omega;
    if den <= 0.0 {
        return Err(QrtError::Domain(format!("boundary denominator {den} <= 0")));
    }
    let r = num / den;
    if r < 0.0 {
        return Err(QrtError::Domain(format!("boundary radicand {r} < 0")));
    }
    Ok(r.sqrt())
}

pub fn critical_theta(omega: f64, j_hop: f64) -> f64 {
    (-2.0 * j_hop / ((8.0 * j_hop * j_hop + omega * omega).sqrt() + omega)).acos()
}

/// Quasimomentum whose boundary is lowest at this θ. Ties at |θ| = θc resolve to q = 0.
pub fn soft_quasimomentum(theta: f64, omega: f64, j_hop: f64) -> Quasimomentum {
    let theta = normalize_angle(theta);
    if theta.abs() >= critical_theta(omega, j_hop) {
        Quasimomentum::Zero
    } else if theta < 0.0 {
        Quasimomentum::Plus
    } else if theta > 0.0 {
        Quasimomentum::Minus
    } else {
        Quasimomentum::Plus
    }
}

/// The lowest boundary over q together with the soft quasimomentum.
pub fn critical_g1(p: &ModelParams) -> Result<(Quasimomentum, f64)> {
    let q = soft_quasimomentum(p.theta, p.omega, p.j_hop);
    Ok((q, boundary_g1c(q, p.theta, p.omega, p.j_hop)?))
}

pub fn classify_phase(p: &ModelParams, tol: f64) -> Result<PhaseLabel> {
    let theta = normalize_angle(p.theta);
    let (soft_q, gc) = critical_g1(p)?;
    let rel = (p.g1 - gc) / gc;
    if rel.abs() <= tol {
        return Err(QrtError::AmbiguousPhase(format!("g1 = {} within tolerance of g1c = {gc}", p.g1)));
    }
    if rel < 0.0 {
        return Ok(PhaseLabel { kind: PhaseKind::Np, soft_q });
    }
    let thc = critical_theta(p.omega, p.j_hop);
    if (theta.abs() - thc).abs() <= tol * thc {
        return Err(QrtError::AmbiguousPhase(format!("|theta| = {} within tolerance of theta_c", theta.abs())));
    }
    let kind = if theta.abs() > thc {
        PhaseKind::Fsp
    } else if theta.abs() <= tol {
        PhaseKind::Fasp
    } else {
        PhaseKind::Csp
    };
    Ok(PhaseLabel { kind, soft_q })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_interval() {
        assert_eq!(normalize_angle(PI), PI);
        assert_eq!(normalize_angle(-PI), PI);
        assert!((normalize_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_strong_hopping() {
        assert!(ModelParams::new(1.0, 1.0, 0.5, 0.0, 0.1).is_err());
        assert!(ModelParams::new(1.0, 1.0, 0.1, 0.0, -0.1).is_err());
    }

    #[test]
    fn g_round_trip() {
        let p = ModelParams::new(1.3, 20.0, 0.1, 0.4, 0.37).unwrap();
        let q = ModelParams::from_g(1.3, 20.0, 0.1, 0.4, p.g()).unwrap();
        assert!((q.g1 - p.g1).abs() < 1e-15);
    }
}
