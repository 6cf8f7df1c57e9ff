//! Photon-number measurement on the first cavity and its error-propagation precision.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QrtError, Result};
use crate::meanfield::SolverOptions;
use crate::model::{PhaseLabel, Quasimomentum};
use crate::qfi::{qfi_of_state, DerivativeMode};
use crate::state::{fd_step, neighbors, Branch, GroundState};

/// Units of the coherent part |α₁|².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CoherentScale {
    /// |Ã₁|², the Δ-independent amplitude.
    #[default]
    Rescaled,
    /// (Δ/ω)|Ã₁|².
    Physical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonStats {
    /// Mean from the phase-specific closed forms.
    pub mean: f64,
    /// Variance from the phase-specific closed forms (NP/FSP two-mode form, chiral quartic polynomial).
    pub var_printed: f64,
    /// Variance from Wick's theorem on the full transform.
    pub var_exact: f64,
    /// Fluctuation part ⟨ã₁†ã₁⟩.
    pub fluct: f64,
    /// |α₁|² in the chosen units.
    pub coherent: f64,
}

/// Row 1 of T in the (c, c†) layout where a₁† = Σ tᵢcᵢ + t_{i+3}cᵢ†.
fn first_row(gs: &GroundState) -> [Complex64; 6] {
    let t = &gs.bogo.t;
    std::array::from_fn(|k| if k < 3 { t[(3, k)] } else { t[(0, k - 3)].conj() })
}

fn alpha1(gs: &GroundState, scale: CoherentScale) -> Complex64 {
    let a = Complex64::new(gs.disp.a[0], gs.disp.b[0]);
    match scale {
        CoherentScale::Rescaled => a,
        CoherentScale::Physical => a * (gs.params.delta / gs.params.omega).sqrt(),
    }
}

/// ⟨N̂₁²⟩ as the explicit quartic polynomial in t = row 1 of T and α₁.
pub fn n1_second_moment_poly(t: &[Complex64; 6], al: Complex64) -> f64 {
    let n = |k: usize| t[k - 1].norm_sqr();
    let tk = |k: usize| t[k - 1];
    let c = |k: usize| t[k - 1].conj();
    let a2 = al.norm_sqr();
    let al2 = al * al;
    let alc2 = al.conj() * al.conj();
    let s: Complex64 = Complex64::new(
        a2 * a2 + n(1) * n(1) + 3.0 * a2 * n(1) + 2.0 * n(1) * n(2) + 2.0 * n(1) * n(3) + 2.0 * n(1) * n(4)
            + n(1) * n(5) + n(1) * n(6)
            + n(2) * n(2) + 3.0 * a2 * n(2) + 2.0 * n(2) * n(3) + n(2) * n(4) + 2.0 * n(2) * n(5) + n(2) * n(6)
            + n(3) * n(3) + 3.0 * a2 * n(3) + n(3) * n(4) + n(3) * n(5) + 2.0 * n(3) * n(6)
            + a2 * n(4) + a2 * n(5) + a2 * n(6),
        0.0,
    ) + tk(1) * tk(4) * c(2) * c(5)
        + tk(1) * tk(4) * c(3) * c(6)
        + al2 * tk(1) * tk(4)
        + tk(2) * tk(5) * c(1) * c(4)
        + tk(3) * tk(6) * c(1) * c(4)
        + alc2 * c(1) * c(4)
        + tk(2) * tk(5) * c(3) * c(6)
        + al2 * tk(2) * tk(5)
        + tk(3) * tk(6) * c(2) * c(5)
        + alc2 * c(2) * c(5)
        + al2 * tk(3) * tk(6)
        + alc2 * c(3) * c(6);
    s.re
}

pub fn photon_stats(gs: &GroundState, scale: CoherentScale) -> PhotonStats {
    let t = first_row(gs);
    let al = alpha1(gs, scale);
    let ada: f64 = (0..3).map(|i| t[i].norm_sqr()).sum();
    let aad: f64 = (3..6).map(|i| t[i].norm_sqr()).sum();
    // ⟨a a⟩ for a₁ = Σ t*_{i+3} cᵢ + t*ᵢ cᵢ†
    let aa: Complex64 = (0..3).map(|i| t[i + 3].conj() * t[i].conj()).sum();
    let coherent = al.norm_sqr();
    let var_exact = ada * aad + aa.norm_sqr() + 2.0 * (al.conj() * al.conj() * aa).re + coherent * (ada + aad);
    let mean_chiral = ada + coherent;
    let (mean, var_printed) = match (&gs.modes, gs.branch) {
        (Some(m), Branch::Normal | Branch::Ferro) => {
            let z = m.get(Quasimomentum::Zero);
            let q = m.get(Quasimomentum::Plus);
            let mean = (z.nu * z.nu + 2.0 * q.nu * q.nu) / 3.0 + coherent;
            let var = 2.0 / 9.0 * (z.mu * z.mu * z.nu * z.nu + q.mu * q.mu * q.nu * q.nu);
            (mean, var)
        }
        _ => (mean_chiral, n1_second_moment_poly(&t, al) - mean_chiral * mean_chiral),
    };
    PhotonStats { mean, var_printed, var_exact, fluct: ada, coherent }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementResult {
    pub phase: PhaseLabel,
    pub n1_mean: f64,
    pub n1_var: f64,
    pub dn1_dg1: f64,
    /// F from the phase-specific variance.
    pub inv_variance: f64,
    pub qfi: f64,
    pub qcrb_ratio: f64,
    pub n1_var_exact: f64,
    pub inv_variance_exact: f64,
    pub qcrb_ratio_exact: f64,
    /// FSP only: the closed-form inverted variance with the extended denominator.
    pub inv_variance_fsp_closed: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalOptions {
    pub derivative: DerivativeMode,
    pub coherent: CoherentScale,
    pub solver: SolverOptions,
}

fn fsp_closed(gs: &GroundState, m: &GroundState, pl: &GroundState, scale: CoherentScale) -> Option<f64> {
    let nus = |g: &GroundState| {
        let md = g.modes.as_ref()?;
        let (z, q) = (md.get(Quasimomentum::Zero), md.get(Quasimomentum::Plus));
        Some((z.nu * z.nu + 2.0 * q.nu * q.nu, z.mu * z.mu * z.nu * z.nu + q.mu * q.mu * q.nu * q.nu))
    };
    let dh = pl.params.g1 - m.params.g1;
    let d_nu = (nus(pl)?.0 - nus(m)?.0) / dh;
    let d_al = (alpha1(pl, scale).norm_sqr() - alpha1(m, scale).norm_sqr()) / dh;
    let (s_nu, s_mn) = nus(gs)?;
    let a2 = alpha1(gs, scale).norm_sqr();
    let num = (d_nu + 3.0 * d_al).powi(2);
    Some(num / (2.0 * s_mn + 6.0 * s_nu + 9.0 * a2))
}

/// F = (∂_{g1}⟨N̂₁⟩)²/⟨ΔN̂₁⟩² and its ratio to the QFI.
pub fn inverted_variance(gs: &GroundState, opts: &EvalOptions) -> Result<MeasurementResult> {
    let nb = neighbors(gs, fd_step(&gs.params), &opts.solver)?;
    let qfi = qfi_of_state(gs, opts.derivative, Some(&nb), &opts.solver)?.value;
    measurement_with(gs, &nb, qfi, opts)
}

/// As [`inverted_variance`] with the g1 ± h states and the QFI already computed.
pub fn measurement_with(gs: &GroundState, nb: &(GroundState, GroundState), qfi: f64, opts: &EvalOptions) -> Result<MeasurementResult> {
    let stats = photon_stats(gs, opts.coherent);
    let (sm, sp) = (photon_stats(&nb.0, opts.coherent), photon_stats(&nb.1, opts.coherent));
    let dn = (sp.mean - sm.mean) / (nb.1.params.g1 - nb.0.params.g1);
    if stats.var_printed <= 0.0 || stats.var_exact <= 0.0 {
        return Err(QrtError::ZeroVariance);
    }
    let f = dn * dn / stats.var_printed;
    let fx = dn * dn / stats.var_exact;
    let closed = if gs.branch == Branch::Ferro { fsp_closed(gs, &nb.0, &nb.1, opts.coherent) } else { None };
    Ok(MeasurementResult {
        phase: gs.phase,
        n1_mean: stats.mean,
        n1_var: stats.var_printed,
        dn1_dg1: dn,
        inv_variance: f,
        qfi,
        qcrb_ratio: f / qfi,
        n1_var_exact: stats.var_exact,
        inv_variance_exact: fx,
        qcrb_ratio_exact: fx / qfi,
        inv_variance_fsp_closed: closed,
    })
}
