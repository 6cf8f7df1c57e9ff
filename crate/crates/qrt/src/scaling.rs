//! Parameter sweeps, power-law fits, Heisenberg-limit verdicts and adiabatic preparation time.

use serde::{Deserialize, Serialize};

use crate::error::{QrtError, Result};
use crate::meanfield::Displacement;
use crate::measure::{measurement_with, EvalOptions};
use crate::model::{classify_phase, soft_quasimomentum, ModelParams, PhaseKind, Quasimomentum};
use crate::modes::np_modes;
use crate::qfi::qfi_of_state;
use crate::state::{fd_step, neighbors, solve_branch, Branch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    G1,
    Theta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Spacing {
    /// `range` holds (d_min, d_max) in normalized distance; x = x_c(1 + side·d).
    LogDistance,
    /// `range` holds (x_min, x_max).
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: Axis,
    pub base: ModelParams,
    /// Critical value x_c on the swept axis.
    pub critical: f64,
    /// +1 or −1: which side of x_c a log-distance sweep samples.
    pub side: f64,
    pub range: (f64, f64),
    pub n_points: usize,
    pub spacing: Spacing,
    /// Force a branch instead of classifying each point.
    pub branch: Option<Branch>,
    pub phase_tol: f64,
    pub options: EvalOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub x: f64,
    pub distance: f64,
    pub phase: String,
    pub qfi: f64,
    pub n1: f64,
    pub var_n1: f64,
    pub f: f64,
    pub ratio: f64,
    pub eps_soft: f64,
    pub status: String,
    pub var_n1_exact: f64,
    pub f_exact: f64,
    pub n1_fluct: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub axis: Axis,
    pub control: ModelParams,
    pub critical: f64,
    pub rows: Vec<SweepRow>,
}

pub fn normalized_distance(x: f64, critical: f64) -> f64 {
    if critical == 0.0 {
        x.abs()
    } else {
        (x / critical - 1.0).abs()
    }
}

fn sample_points(spec: &SweepSpec) -> Result<Vec<f64>> {
    let (lo, hi) = spec.range;
    let n = spec.n_points;
    if n == 0 || !(lo.is_finite() && hi.is_finite()) || hi < lo || (n > 1 && hi == lo) {
        return Err(QrtError::Domain("empty or invalid sweep range".into()));
    }
    let t = |k: usize| if n == 1 { 0.0 } else { k as f64 / (n - 1) as f64 };
    Ok(match spec.spacing {
        Spacing::Linear => (0..n).map(|k| lo + (hi - lo) * t(k)).collect(),
        Spacing::LogDistance => {
            if lo <= 0.0 {
                return Err(QrtError::Domain("log-distance range must be positive".into()));
            }
            let (a, b) = (lo.ln(), hi.ln());
            // far to near, so warm starts walk toward the critical point
            (0..n).map(|k| spec.critical * (1.0 + spec.side * (b + (a - b) * t(k)).exp())).collect()
        }
    })
}

fn failed_row(x: f64, distance: f64, phase: String, status: &str) -> SweepRow {
    SweepRow {
        x,
        distance,
        phase,
        qfi: f64::NAN,
        n1: f64::NAN,
        var_n1: f64::NAN,
        f: f64::NAN,
        ratio: f64::NAN,
        eps_soft: f64::NAN,
        status: status.to_string(),
        var_n1_exact: f64::NAN,
        f_exact: f64::NAN,
        n1_fluct: f64::NAN,
        degenerate: false,
    }
}

/// Evaluate I, ⟨N̂₁⟩, its variance, F and the soft gap along one axis.
pub fn sweep(spec: &SweepSpec) -> Result<SweepTable> {
    let xs = sample_points(spec)?;
    let mut rows = Vec::with_capacity(xs.len());
    let mut warm: Option<Displacement> = None;
    for x in xs {
        let p = match spec.axis {
            Axis::G1 => spec.base.with_g1(x),
            Axis::Theta => spec.base.with_theta(x),
        };
        let distance = normalized_distance(x, spec.critical);
        let branch = match spec.branch {
            Some(b) => b,
            None => match classify_phase(&p, spec.phase_tol) {
                Ok(l) => Branch::of(l.kind),
                Err(e) => {
                    rows.push(failed_row(x, distance, String::new(), e.tag()));
                    continue;
                }
            },
        };
        let seeds: Vec<Displacement> = warm.into_iter().collect();
        let gs = match solve_branch(&p, branch, &seeds, &spec.options.solver) {
            Ok(g) => g,
            Err(e) => {
                rows.push(failed_row(x, distance, String::new(), e.tag()));
                continue;
            }
        };
        if gs.branch == Branch::Chiral {
            warm = Some(gs.disp);
        }
        let phase = gs.phase.kind.as_str().to_string();
        let eps_soft = gs.eps_soft();
        let eval = neighbors(&gs, fd_step(&p), &spec.options.solver).and_then(|nb| {
            let q = qfi_of_state(&gs, spec.options.derivative, Some(&nb), &spec.options.solver)?;
            let m = measurement_with(&gs, &nb, q.value, &spec.options);
            Ok((q.value, m))
        });
        let stats = crate::measure::photon_stats(&gs, spec.options.coherent);
        match eval {
            Ok((qfi, Ok(m))) => rows.push(SweepRow {
                x,
                distance,
                phase,
                qfi,
                n1: m.n1_mean,
                var_n1: m.n1_var,
                f: m.inv_variance,
                ratio: m.qcrb_ratio,
                eps_soft,
                status: "ok".into(),
                var_n1_exact: m.n1_var_exact,
                f_exact: m.inv_variance_exact,
                n1_fluct: stats.fluct,
                degenerate: gs.degenerate,
            }),
            Ok((qfi, Err(e))) => rows.push(SweepRow {
                qfi,
                n1: stats.mean,
                var_n1: stats.var_printed,
                eps_soft,
                var_n1_exact: stats.var_exact,
                n1_fluct: stats.fluct,
                degenerate: gs.degenerate,
                ..failed_row(x, distance, phase, e.tag())
            }),
            Err(e) => rows.push(SweepRow {
                n1: stats.mean,
                var_n1: stats.var_printed,
                eps_soft,
                var_n1_exact: stats.var_exact,
                n1_fluct: stats.fluct,
                ..failed_row(x, distance, phase, e.tag())
            }),
        }
    }
    rows.sort_by(|a, b| a.x.total_cmp(&b.x));
    Ok(SweepTable { axis: spec.axis, control: spec.base, critical: spec.critical, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Column {
    Qfi,
    N1,
    VarN1,
    F,
    EpsSoft,
}

impl Column {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "I" | "qfi" => Some(Column::Qfi),
            "N1" | "n1" => Some(Column::N1),
            "var_N1" | "var_n1" => Some(Column::VarN1),
            "F" | "f" => Some(Column::F),
            "eps_soft" => Some(Column::EpsSoft),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Column::Qfi => "I",
            Column::N1 => "N1",
            Column::VarN1 => "var_N1",
            Column::F => "F",
            Column::EpsSoft => "eps_soft",
        }
    }

    fn value(self, r: &SweepRow) -> f64 {
        match self {
            Column::Qfi => r.qfi,
            Column::N1 => r.n1,
            Column::VarN1 => r.var_n1,
            Column::F => r.f,
            Column::EpsSoft => r.eps_soft,
        }
    }

    /// Vanishing columns report y ~ d^{+nu}; all others y ~ d^{−nu}.
    pub fn vanishes(self) -> bool {
        self == Column::EpsSoft
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub nu: f64,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub window: (f64, f64),
    pub n_points: usize,
    pub poor_fit: bool,
}

/// Least-squares slope of ln y against ln d for points with d in `window`.
pub fn fit_power_law(d: &[f64], y: &[f64], window: (f64, f64)) -> Result<ExponentFit> {
    let (lo, hi) = window;
    let pts: Vec<(f64, f64)> = d
        .iter()
        .zip(y)
        .filter(|(&d, &y)| d >= lo * (1.0 - 1e-9) && d <= hi * (1.0 + 1e-9) && d > 0.0 && y > 0.0 && y.is_finite())
        .map(|(&d, &y)| (d.ln(), y.ln()))
        .collect();
    if pts.len() < 8 {
        return Err(QrtError::InsufficientPoints(format!("{} points in window (need 8)", pts.len())));
    }
    let (xmin, xmax) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let decades = (xmax - xmin) / std::f64::consts::LN_10;
    if decades < 1.5 - 1e-9 {
        return Err(QrtError::InsufficientPoints(format!("window spans {decades:.3} decades (need 1.5)")));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(ExponentFit {
        nu: -slope,
        slope,
        intercept,
        r2,
        window: (xmin.exp(), xmax.exp()),
        n_points: pts.len(),
        poor_fit: r2 < 0.99,
    })
}

pub fn fit_exponent(table: &SweepTable, column: Column, window: (f64, f64)) -> Result<ExponentFit> {
    let d: Vec<f64> = table.rows.iter().map(|r| r.distance).collect();
    let y: Vec<f64> = table.rows.iter().map(|r| column.value(r)).collect();
    let mut fit = fit_power_law(&d, &y, window)?;
    if column.vanishes() {
        fit.nu = fit.slope;
    }
    Ok(fit)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "HL")]
    Heisenberg,
    #[serde(rename = "sub-HL")]
    SubHeisenberg,
    #[serde(rename = "super-HL")]
    SuperHeisenberg,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeisenbergVerdict {
    pub verdict: Verdict,
    /// nu_I − (2 nu_N + 2 nu_eps).
    pub residual: f64,
}

/// Compare I ~ ⟨N⟩²T² with T ~ 1/ε.
pub fn heisenberg_verdict(nu_i: f64, nu_n: f64, nu_eps: f64, tol: f64) -> HeisenbergVerdict {
    let residual = nu_i - (2.0 * nu_n + 2.0 * nu_eps);
    let verdict = if residual.abs() < tol {
        Verdict::Heisenberg
    } else if residual < 0.0 {
        Verdict::SubHeisenberg
    } else {
        Verdict::SuperHeisenberg
    };
    HeisenbergVerdict { verdict, residual }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticEstimate {
    pub q: Quasimomentum,
    /// Upper bound on the sweep rate at g1.
    pub rate_bound: f64,
    /// Schedule v(g1) = γ(ω+2Jcosθcos q−4g1²ω)^{3/2}.
    pub rate: f64,
    /// T = ∫₀^{g1} dg/v(g).
    pub time: f64,
    pub eps_soft: f64,
    pub time_times_eps: f64,
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            left + right + diff / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Adiabatic ramp 0 → g1 in the NP along the soft mode; γ sets the schedule amplitude.
pub fn adiabatic_rate_bound(p: &ModelParams, gamma: f64) -> Result<AdiabaticEstimate> {
    let label = classify_phase(p, crate::model::DEFAULT_PHASE_TOL)?;
    if label.kind != PhaseKind::Np {
        return Err(QrtError::Domain("adiabatic estimate requires the NP".into()));
    }
    if gamma <= 0.0 {
        return Err(QrtError::Domain("gamma must be positive".into()));
    }
    let q = soft_quasimomentum(p.theta, p.omega, p.j_hop);
    let kq = p.omega + 2.0 * p.j_hop * p.theta.cos() * q.value().cos();
    let gap = |g: f64| kq - 4.0 * g * g * p.omega;
    if gap(p.g1) <= 0.0 {
        return Err(QrtError::Domain("g1 beyond the ramp endpoint".into()));
    }
    let rate = |g: f64| gamma * gap(g).powf(1.5);
    let rate_bound = 2.0 * p.g1 * kq.sqrt() / (kq + 4.0 * p.g1 * p.g1 * p.omega) * gap(p.g1).powf(1.5);
    let inv = |g: f64| 1.0 / rate(g);
    let scale = p.g1 / rate(p.g1);
    let time = if p.g1 == 0.0 { 0.0 } else { adaptive_simpson(&inv, 0.0, p.g1, 1e-13 * scale) };
    let eps_soft = np_modes(p)?.min_eps();
    Ok(AdiabaticEstimate { q, rate_bound, rate: rate(p.g1), time, eps_soft, time_times_eps: time * eps_soft })
}
