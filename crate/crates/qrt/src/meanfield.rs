//! Rescaled mean-field displacements and the chiral-branch solver.
//!
//! Amplitudes are stored as Ãₙ = Aₙ·√(ω/Δ), B̃ₙ = Bₙ·√(ω/Δ), which removes Δ from the
//! stationarity equations. The chiral solver works on the two-parameter ansatz
//! A₁ = b, A₂ = A₃ = a, B₁ = 0, B₂ = −B₃ = β with β eliminated analytically.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QrtError, Result};
use crate::model::ModelParams;
use crate::modes::fsp_amplitude_sq;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Displacement {
    pub a: [f64; 3],
    pub b: [f64; 3],
}

impl Displacement {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Raw amplitudes αₙ = √(Δ/ω)(Ãₙ + iB̃ₙ).
    pub fn alpha(&self, p: &ModelParams) -> [Complex64; 3] {
        let s = (p.delta / p.omega).sqrt();
        std::array::from_fn(|n| Complex64::new(s * self.a[n], s * self.b[n]))
    }

    /// λₙ²/Δₙ for each cavity.
    pub fn couplings(&self, p: &ModelParams) -> [f64; 3] {
        self.a.map(|a| lambda_over_delta(p.g1, p.omega, a))
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().chain(self.b.iter()).fold(0.0, |m, x| m.max(x.abs()))
    }

    fn from_reduced(p: &ModelParams, a: f64, b: f64) -> Self {
        let beta = reduced_beta(p, a, b);
        Self { a: [b, a, a], b: [0.0, beta, -beta] }
    }

    fn reduced(&self) -> (f64, f64) {
        (0.5 * (self.a[1] + self.a[2]), self.a[0])
    }
}

/// λ²/Δ at rescaled amplitude Ã: g1²ω/(1+16g1²Ã²)^{3/2}.
pub fn lambda_over_delta(g1: f64, omega: f64, a: f64) -> f64 {
    g1 * g1 * omega / (1.0 + 16.0 * g1 * g1 * a * a).powf(1.5)
}

/// ∂_{g1}(λ²/Δ) at fixed Ã.
pub fn lambda_over_delta_partial(g1: f64, omega: f64, a: f64) -> f64 {
    let x = 1.0 + 16.0 * g1 * g1 * a * a;
    2.0 * g1 * omega / x.powf(1.5) - 48.0 * g1.powi(3) * omega * a * a / x.powf(2.5)
}

/// Rescaled mean-field energy per unit Δ/ω (constant −3ω/2 offsets dropped).
pub fn energy(p: &ModelParams, d: &Displacement) -> f64 {
    let (w, j, g) = (p.omega, p.j_hop, p.g1);
    let (ct, st) = (p.theta.cos(), p.theta.sin());
    let mut e = 0.0;
    for n in 0..3 {
        let m = (n + 1) % 3;
        let (an, bn, am, bm) = (d.a[n], d.b[n], d.a[m], d.b[m]);
        e += w * (an * an + bn * bn) - 0.5 * w * (1.0 + 16.0 * g * g * an * an).sqrt();
        e += 2.0 * j * ((an * am + bn * bm) * ct + st * (bn * am - bm * an));
    }
    e
}

/// Gradient of [`energy`] ordered (Ã₁, Ã₂, Ã₃, B̃₁, B̃₂, B̃₃).
pub fn gradient(p: &ModelParams, d: &Displacement) -> [f64; 6] {
    let (w, j, g) = (p.omega, p.j_hop, p.g1);
    let (ct, st) = (p.theta.cos(), p.theta.sin());
    let mut out = [0.0; 6];
    for n in 0..3 {
        let nx = (n + 1) % 3;
        let pv = (n + 2) % 3;
        let an = d.a[n];
        out[n] = 2.0 * w * an - 8.0 * g * g * w * an / (1.0 + 16.0 * g * g * an * an).sqrt()
            + 2.0 * j * (ct * (d.a[nx] + d.a[pv]) + st * (d.b[pv] - d.b[nx]));
        out[n + 3] = 2.0 * w * d.b[n] + 2.0 * j * (ct * (d.b[nx] + d.b[pv]) + st * (d.a[nx] - d.a[pv]));
    }
    out
}

pub fn stationarity_residual(p: &ModelParams, d: &Displacement) -> f64 {
    gradient(p, d).iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn reduced_consts(p: &ModelParams) -> (f64, f64) {
    let (w, j) = (p.omega, p.j_hop);
    let s = j * j * p.theta.sin().powi(2) / (w - j * p.theta.cos());
    (s, j * p.theta.cos() + s)
}

fn reduced_beta(p: &ModelParams, a: f64, b: f64) -> f64 {
    -p.j_hop * p.theta.sin() * (a - b) / (p.omega - p.j_hop * p.theta.cos())
}

fn reduced_system(p: &ModelParams, a: f64, b: f64) -> ([f64; 2], [[f64; 2]; 2]) {
    let (w, g) = (p.omega, p.g1);
    let (s, k) = reduced_consts(p);
    let f = |x: f64| 4.0 * g * g * w / (1.0 + 16.0 * g * g * x * x).sqrt();
    let fp = |x: f64| -64.0 * g.powi(4) * w * x / (1.0 + 16.0 * g * g * x * x).powf(1.5);
    let r = [(w - f(b) - 2.0 * s) * b + 2.0 * k * a, (w - f(a) - 2.0 * s) * a + k * (a + b)];
    let jac = [
        [2.0 * k, (w - f(b) - 2.0 * s) - fp(b) * b],
        [(w - f(a) - 2.0 * s) - fp(a) * a + k, k],
    ];
    (r, jac)
}

fn norm2(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

/// Damped Newton on the reduced stationarity equations.
fn newton(p: &ModelParams, start: (f64, f64), max_iter: usize) -> ((f64, f64), f64) {
    let (mut a, mut b) = start;
    let (mut r, mut jac) = reduced_system(p, a, b);
    for _ in 0..max_iter {
        let rn = norm2(r);
        if rn < 1e-15 {
            break;
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det.abs() < 1e-300 || !det.is_finite() {
            break;
        }
        let da = -(jac[1][1] * r[0] - jac[0][1] * r[1]) / det;
        let db = -(-jac[1][0] * r[0] + jac[0][0] * r[1]) / det;
        let mut lam = 1.0;
        let mut accepted = false;
        while lam > 1e-8 {
            let (na, nb) = (a + lam * da, b + lam * db);
            let (nr, nj) = reduced_system(p, na, nb);
            if norm2(nr) < rn * (1.0 - 1e-4 * lam) {
                a = na;
                b = nb;
                r = nr;
                jac = nj;
                accepted = true;
                break;
            }
            lam *= 0.5;
        }
        if !accepted {
            break;
        }
        if (lam * da).hypot(lam * db) < 1e-16 * (1.0 + a.hypot(b)) {
            break;
        }
    }
    ((a, b), norm2(r))
}

fn reduced_energy(p: &ModelParams, a: f64, b: f64) -> f64 {
    energy(p, &Displacement::from_reduced(p, a, b))
}

fn nelder_mead(f: impl Fn(f64, f64) -> f64, start: (f64, f64), scale: f64, iters: usize) -> (f64, f64) {
    let mut s = [
        [start.0, start.1],
        [start.0 + scale, start.1],
        [start.0, start.1 + scale],
    ];
    let mut fv = s.map(|x| f(x[0], x[1]));
    for _ in 0..iters {
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&i, &k| fv[i].total_cmp(&fv[k]));
        s = idx.map(|i| s[i]);
        fv = idx.map(|i| fv[i]);
        if (fv[2] - fv[0]).abs() < 1e-16 * (1.0 + fv[0].abs()) {
            break;
        }
        let c = [(s[0][0] + s[1][0]) / 2.0, (s[0][1] + s[1][1]) / 2.0];
        let pt = |t: f64| [c[0] + t * (s[2][0] - c[0]), c[1] + t * (s[2][1] - c[1])];
        let xr = pt(-1.0);
        let fr = f(xr[0], xr[1]);
        if fr < fv[0] {
            let xe = pt(-2.0);
            let fe = f(xe[0], xe[1]);
            if fe < fr {
                s[2] = xe;
                fv[2] = fe;
            } else {
                s[2] = xr;
                fv[2] = fr;
            }
        } else if fr < fv[1] {
            s[2] = xr;
            fv[2] = fr;
        } else {
            let xc = pt(0.5);
            let fc = f(xc[0], xc[1]);
            if fc < fv[2] {
                s[2] = xc;
                fv[2] = fc;
            } else {
                for i in 1..3 {
                    s[i] = [(s[i][0] + s[0][0]) / 2.0, (s[i][1] + s[0][1]) / 2.0];
                    fv[i] = f(s[i][0], s[i][1]);
                }
            }
        }
    }
    let best = (0..3).min_by(|&i, &k| fv[i].total_cmp(&fv[k])).unwrap();
    (s[best][0], s[best][1])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Seed for the random multi-start points.
    pub seed: u64,
    pub random_starts: usize,
    /// Residual (rescaled units) accepted as stationary.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { seed: 0x51c3_7a, random_starts: 12, tol: 1e-11, max_iter: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldSolution {
    pub disp: Displacement,
    pub energy: f64,
    pub residual: f64,
    /// Set when distinct minima with equal energy were found (the returned one is canonical).
    pub degenerate: bool,
}

fn canonical(a: f64, b: f64, beta: f64) -> (f64, f64) {
    let flip = if beta.abs() > 1e-12 { beta < 0.0 } else if b.abs() > 1e-12 { b < 0.0 } else { a < 0.0 };
    if flip {
        (-a, -b)
    } else {
        (a, b)
    }
}

/// a = b: the trivial or the ferromagnetic solution, which belong to the other branches.
fn uniform(x: (f64, f64)) -> bool {
    (x.0 - x.1).abs() < 1e-9 * (1.0 + x.0.abs())
}

/// Newton from a single nearby seed, keeping the seed's branch. `None` if it does not converge
/// or collapses onto a uniform solution from a non-uniform seed.
pub fn refine(p: &ModelParams, seed: &Displacement, opts: &SolverOptions) -> Option<MeanFieldSolution> {
    let s = seed.reduced();
    let (x, res) = newton(p, s, opts.max_iter);
    if res > opts.tol || (seed.max_abs() > 0.0 && x.0.hypot(x.1) < 1e-9) || (!uniform(s) && uniform(x)) {
        return None;
    }
    let disp = Displacement::from_reduced(p, x.0, x.1);
    Some(MeanFieldSolution { disp, energy: energy(p, &disp), residual: stationarity_residual(p, &disp), degenerate: false })
}

pub fn csp_displacement(p: &ModelParams, seeds: &[Displacement]) -> Result<MeanFieldSolution> {
    csp_displacement_with(p, seeds, &SolverOptions::default())
}

/// Lowest-energy non-uniform stationary point of the reduced chiral ansatz.
pub fn csp_displacement_with(p: &ModelParams, seeds: &[Displacement], opts: &SolverOptions) -> Result<MeanFieldSolution> {
    let mut starts: Vec<(f64, f64)> = seeds.iter().map(|s| s.reduced()).collect();
    let fsp = fsp_amplitude_sq(p);
    if fsp > 0.0 {
        starts.push((fsp.sqrt(), fsp.sqrt()));
    }
    for r in [0.01, 0.03, 0.1, 0.2, 0.4, 0.8] {
        starts.extend([(-0.5 * r, r), (0.5 * r, -r), (r, r), (-r, r), (r, 0.0)]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.random_starts {
        starts.push((rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    }

    let mut found: Vec<((f64, f64), f64, f64)> = Vec::new();
    let mut best_res = f64::INFINITY;
    for &s in &starts {
        let (x, res) = newton(p, s, opts.max_iter);
        best_res = best_res.min(res);
        if res <= opts.tol && x.0.is_finite() && x.1.is_finite() && !uniform(x) {
            found.push((x, res, reduced_energy(p, x.0, x.1)));
        }
    }
    if found.is_empty() {
        // derivative-free fallback from the lowest-energy start
        let e = |a: f64, b: f64| reduced_energy(p, a, b);
        let s0 = *starts.iter().min_by(|x, y| e(x.0, x.1).total_cmp(&e(y.0, y.1))).unwrap();
        let m = nelder_mead(e, s0, 0.05, 4000);
        let (x, res) = newton(p, m, opts.max_iter);
        best_res = best_res.min(res);
        if res <= opts.tol && !uniform(x) {
            found.push((x, res, e(x.0, x.1)));
        } else if res <= opts.tol {
            return Err(QrtError::NoChiralSolution);
        }
    }
    if found.is_empty() {
        return Err(QrtError::NoConvergence { residual: best_res });
    }
    let best = found.iter().min_by(|x, y| x.2.total_cmp(&y.2)).unwrap();
    let (emin, (a0, b0)) = (best.2, best.0);
    let etol = 1e-12 * (1.0 + emin.abs());
    let degenerate = found
        .iter()
        .any(|f| f.2 <= emin + etol && (f.0 .0 - a0).abs() + (f.0 .1 - b0).abs() > 1e-6);
    let (a, b) = canonical(a0, b0, reduced_beta(p, a0, b0));
    let disp = Displacement::from_reduced(p, a, b);
    Ok(MeanFieldSolution {
        disp,
        energy: energy(p, &disp),
        residual: stationarity_residual(p, &disp),
        degenerate,
    })
}
