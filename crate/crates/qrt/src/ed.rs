//! Truncated-Fock exact diagonalization of the full three-cavity, three-qubit Hamiltonian
//! H = Σₙ ωaₙ†aₙ + (Δ/2)σₙᶻ + g(aₙ+aₙ†)σₙˣ + J(e^{iθ}aₙ†aₙ₊₁ + h.c.).

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QrtError, Result};
use crate::meanfield::Displacement;
use crate::model::ModelParams;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FockConfig {
    pub n_max: usize,
    /// Center of the photon basis (rescaled amplitudes; raw α = √(Δ/ω)·(Ã + iB̃)).
    pub displaced_frame: Option<Displacement>,
    /// Coefficients bₙ of Σ bₙσₙˣ.
    pub bias: [f64; 3],
    pub max_dim: usize,
}

impl Default for FockConfig {
    fn default() -> Self {
        Self { n_max: 8, displaced_frame: None, bias: [0.0; 3], max_dim: 400_000 }
    }
}

impl FockConfig {
    pub fn dim(&self) -> usize {
        (self.n_max + 1).pow(3) * 8
    }

    fn alphas(&self, p: &ModelParams) -> [Complex64; 3] {
        self.displaced_frame.map(|d| d.alpha(p)).unwrap_or([ZERO; 3])
    }
}

/// Compressed sparse rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub dim: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<Complex64>,
}

impl SparseMatrix {
    fn from_triplets(dim: usize, mut t: Vec<(usize, usize, Complex64)>) -> Self {
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; dim + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut data: Vec<Complex64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                data.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..dim {
            indptr[r + 1] += indptr[r];
        }
        Self { dim, indptr, indices, data }
    }

    pub fn matvec(&self, x: &[Complex64], y: &mut [Complex64]) {
        for r in 0..self.dim {
            let mut s = ZERO;
            for k in self.indptr[r]..self.indptr[r + 1] {
                s += self.data[k] * x[self.indices[k]];
            }
            y[r] = s;
        }
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let row = &self.indices[self.indptr[r]..self.indptr[r + 1]];
        match row.binary_search(&c) {
            Ok(k) => self.data[self.indptr[r] + k],
            Err(_) => ZERO,
        }
    }

    /// max |H − H†| over stored entries.
    pub fn hermiticity_error(&self) -> f64 {
        let mut m: f64 = 0.0;
        for r in 0..self.dim {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let c = self.indices[k];
                m = m.max((self.data[k] - self.get(c, r).conj()).norm());
            }
        }
        m
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }
}

struct Basis {
    d: usize,
}

impl Basis {
    fn encode(&self, n: [usize; 3], s: [usize; 3]) -> usize {
        ((n[0] * self.d + n[1]) * self.d + n[2]) * 8 + s[0] * 4 + s[1] * 2 + s[2]
    }

    fn decode(&self, idx: usize) -> ([usize; 3], [usize; 3]) {
        let sp = idx % 8;
        let ph = idx / 8;
        ([ph / (self.d * self.d), (ph / self.d) % self.d, ph % self.d], [sp / 4, (sp / 2) % 2, sp % 2])
    }
}

/// Hermitian by construction: the triplet list is averaged with its conjugate transpose.
pub fn build_hamiltonian(p: &ModelParams, cfg: &FockConfig) -> Result<SparseMatrix> {
    let dim = cfg.dim();
    if cfg.n_max < 1 {
        return Err(QrtError::Domain("n_max must be at least 1".into()));
    }
    if dim > cfg.max_dim {
        return Err(QrtError::DimensionTooLarge { dim, limit: cfg.max_dim });
    }
    let basis = Basis { d: cfg.n_max + 1 };
    let al = cfg.alphas(p);
    let (w, g) = (p.omega, p.g());
    let ph = Complex64::from_polar(p.j_hop, p.theta);
    let mut konst = ZERO;
    for k in 0..3 {
        let l = (k + 1) % 3;
        konst += w * al[k].norm_sqr();
        let h = ph * al[k].conj() * al[l];
        konst += h + h.conj();
    }
    let mut trip: Vec<(usize, usize, Complex64)> = Vec::with_capacity(dim * 40);
    for col in 0..dim {
        let (n, s) = basis.decode(col);
        let mut push = |n2: [usize; 3], s2: [usize; 3], v: Complex64| {
            if v != ZERO {
                trip.push((basis.encode(n2, s2), col, v));
            }
        };
        let mut diag = konst;
        for k in 0..3 {
            diag += w * n[k] as f64 + 0.5 * p.delta * if s[k] == 0 { 1.0 } else { -1.0 };
        }
        push(n, s, diag);
        for k in 0..3 {
            let mut fl = s;
            fl[k] ^= 1;
            push(n, fl, Complex64::new(2.0 * g * al[k].re + cfg.bias[k], 0.0));
            if n[k] > 0 {
                let mut m = n;
                m[k] -= 1;
                let amp = (n[k] as f64).sqrt();
                push(m, s, w * al[k].conj() * amp);
                push(m, fl, Complex64::new(g * amp, 0.0));
            }
            if n[k] < cfg.n_max {
                let mut m = n;
                m[k] += 1;
                let amp = ((n[k] + 1) as f64).sqrt();
                push(m, s, w * al[k] * amp);
                push(m, fl, Complex64::new(g * amp, 0.0));
            }
        }
        for k in 0..3 {
            let l = (k + 1) % 3;
            // e^{iθ}J (aₖ† + αₖ*)(a_l + α_l) and its conjugate
            let pairs = [(k, l, ph), (l, k, ph.conj())];
            for &(up, dn, c) in &pairs {
                if n[dn] > 0 && n[up] < cfg.n_max {
                    let mut m = n;
                    m[dn] -= 1;
                    m[up] += 1;
                    push(m, s, c * ((n[dn] * (n[up] + 1)) as f64).sqrt());
                }
                if n[up] < cfg.n_max {
                    let mut m = n;
                    m[up] += 1;
                    push(m, s, c * al[dn] * ((n[up] + 1) as f64).sqrt());
                }
                if n[dn] > 0 {
                    let mut m = n;
                    m[dn] -= 1;
                    push(m, s, c * al[up].conj() * (n[dn] as f64).sqrt());
                }
            }
        }
    }
    let mut sym = Vec::with_capacity(2 * trip.len());
    for &(r, c, v) in &trip {
        sym.push((r, c, v * 0.5));
        sym.push((c, r, v.conj() * 0.5));
    }
    Ok(SparseMatrix::from_triplets(dim, sym))
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn orthogonalize(w: &mut [Complex64], against: &[Vec<Complex64>]) {
    for _ in 0..2 {
        for u in against {
            let c = dot(u, w);
            for (x, y) in w.iter_mut().zip(u) {
                *x -= c * y;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LanczosOptions {
    pub krylov: usize,
    pub restarts: usize,
    /// Residual ‖Hx − Ex‖ accepted, relative to max(1, |E|).
    pub tol: f64,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { krylov: 120, restarts: 200, tol: 1e-11, seed: 7 }
    }
}

/// Lowest eigenpair of `h` in the complement of `deflate`, by thick-free restarted Lanczos
/// with full reorthogonalization.
pub fn lanczos_lowest(h: &SparseMatrix, deflate: &[Vec<Complex64>], opts: &LanczosOptions) -> Result<(f64, Vec<Complex64>)> {
    let n = h.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let mut best = f64::INFINITY;
    let mut hv = vec![ZERO; n];
    for _ in 0..opts.restarts {
        orthogonalize(&mut v, deflate);
        let nv = norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        let m = opts.krylov.min(n - deflate.len());
        let mut basis: Vec<Vec<Complex64>> = vec![v.clone()];
        let (mut alpha, mut beta) = (Vec::with_capacity(m), Vec::with_capacity(m));
        for j in 0..m {
            h.matvec(&basis[j], &mut hv);
            let a = dot(&basis[j], &hv).re;
            alpha.push(a);
            let mut w = hv.clone();
            orthogonalize(&mut w, &basis);
            orthogonalize(&mut w, deflate);
            let b = norm(&w);
            if b < 1e-14 * (1.0 + a.abs()) || j + 1 == m {
                break;
            }
            beta.push(b);
            w.iter_mut().for_each(|x| *x /= b);
            basis.push(w);
        }
        let k = alpha.len();
        let t = DMatrix::from_fn(k, k, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let (imin, &e) = eig.eigenvalues.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        let mut x = vec![ZERO; n];
        for (i, b) in basis.iter().take(k).enumerate() {
            let c = eig.eigenvectors[(i, imin)];
            for (xi, bi) in x.iter_mut().zip(b) {
                *xi += bi * c;
            }
        }
        orthogonalize(&mut x, deflate);
        let nx = norm(&x);
        x.iter_mut().for_each(|z| *z /= nx);
        h.matvec(&x, &mut hv);
        let res = hv.iter().zip(&x).map(|(a, b)| (a - b * e).norm_sqr()).sum::<f64>().sqrt();
        best = best.min(res);
        if res <= opts.tol * e.abs().max(1.0) {
            return Ok((e, x));
        }
        v = x;
    }
    Err(QrtError::NoConvergence { residual: best })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdGround {
    pub e0: f64,
    pub e1: f64,
    pub gap: f64,
    pub state: Vec<Complex64>,
}

pub fn ground_state(h: &SparseMatrix) -> Result<EdGround> {
    ground_state_with(h, &LanczosOptions::default())
}

pub fn ground_state_with(h: &SparseMatrix, opts: &LanczosOptions) -> Result<EdGround> {
    let (e0, state) = lanczos_lowest(h, &[], opts)?;
    let (e1, _) = lanczos_lowest(h, std::slice::from_ref(&state), opts)?;
    Ok(EdGround { e0, e1, gap: (e1 - e0).max(0.0), state })
}

/// Lowest eigenvalue only.
pub fn ground_energy(h: &SparseMatrix) -> Result<f64> {
    Ok(lanczos_lowest(h, &[], &LanczosOptions::default())?.0)
}

/// 8(1 − |⟨ψ(g1−δ)|ψ(g1+δ)⟩|)/(2δ)²; one-sided when g1 < δ.
pub fn qfi_fidelity(p: &ModelParams, cfg: &FockConfig, delta: f64) -> Result<f64> {
    let (lo, hi, span) = if p.g1 >= delta { (p.g1 - delta, p.g1 + delta, 2.0 * delta) } else { (p.g1, p.g1 + delta, delta) };
    let state = |g1: f64| -> Result<EdGround> {
        let gs = ground_state(&build_hamiltonian(&p.with_g1(g1), cfg)?)?;
        if gs.gap < 1e-9 * p.omega {
            return Err(QrtError::DegenerateGroundState { gap: gs.gap });
        }
        Ok(gs)
    };
    let (a, b) = (state(lo)?, state(hi)?);
    let f = dot(&a.state, &b.state).norm().min(1.0);
    Ok(8.0 * (1.0 - f) / (span * span))
}

fn photon_op_expect(cfg: &FockConfig, p: &ModelParams, state: &[Complex64], f: impl Fn(usize, &[usize; 3]) -> Vec<([usize; 3], Complex64)>) -> Complex64 {
    let _ = p;
    let basis = Basis { d: cfg.n_max + 1 };
    let mut acc = ZERO;
    for (idx, &amp) in state.iter().enumerate() {
        if amp == ZERO {
            continue;
        }
        let (n, s) = basis.decode(idx);
        for (m, c) in f(idx, &n) {
            acc += state[basis.encode(m, s)].conj() * c * amp;
        }
    }
    acc
}

/// ⟨aₖ⟩ in the basis frame (without the frame shift).
fn lowering(cfg: &FockConfig, p: &ModelParams, state: &[Complex64], k: usize) -> Complex64 {
    photon_op_expect(cfg, p, state, |_, n| {
        if n[k] == 0 {
            vec![]
        } else {
            let mut m = *n;
            m[k] -= 1;
            vec![(m, Complex64::new((n[k] as f64).sqrt(), 0.0))]
        }
    })
}

/// ⟨aₖ†a_l⟩ in the basis frame.
fn hop(cfg: &FockConfig, p: &ModelParams, state: &[Complex64], k: usize, l: usize) -> Complex64 {
    photon_op_expect(cfg, p, state, |_, n| {
        if n[l] == 0 {
            return vec![];
        }
        let mut m = *n;
        let mut c = (n[l] as f64).sqrt();
        m[l] -= 1;
        if m[k] >= cfg.n_max {
            return vec![];
        }
        c *= ((m[k] + 1) as f64).sqrt();
        m[k] += 1;
        vec![(m, Complex64::new(c, 0.0))]
    })
}

/// ⟨aₖ†a_l⟩ in the lab frame, aₖ → ãₖ + αₖ.
fn lab_hop(cfg: &FockConfig, p: &ModelParams, state: &[Complex64], k: usize, l: usize) -> Complex64 {
    let al = cfg.alphas(p);
    hop(cfg, p, state, k, l) + al[k].conj() * lowering(cfg, p, state, l) + al[l] * lowering(cfg, p, state, k).conj() + al[k].conj() * al[l]
}

/// ⟨N̂₁⟩ in the lab frame.
pub fn photon_number(p: &ModelParams, cfg: &FockConfig, state: &[Complex64]) -> f64 {
    lab_hop(cfg, p, state, 0, 0).re
}

/// ⟨I_ph⟩ = i⟨(a₁†a₂ + a₂†a₃ + a₃†a₁) − h.c.⟩ in the lab frame.
pub fn photon_current(p: &ModelParams, cfg: &FockConfig, state: &[Complex64]) -> f64 {
    let s: Complex64 = (0..3).map(|k| lab_hop(cfg, p, state, k, (k + 1) % 3)).sum();
    (Complex64::i() * (s - s.conj())).re
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdResult {
    pub e0: f64,
    pub gap: f64,
    pub n1: f64,
    pub current: f64,
    /// |e0(n_max+2) − e0(n_max)| below `tol`.
    pub converged: bool,
    pub cutoff_shift: f64,
}

/// Ground-state summary with a cutoff check at n_max + 2.
pub fn solve(p: &ModelParams, cfg: &FockConfig, tol: f64) -> Result<EdResult> {
    let g = ground_state(&build_hamiltonian(p, cfg)?)?;
    let bigger = FockConfig { n_max: cfg.n_max + 2, ..*cfg };
    let e_big = ground_energy(&build_hamiltonian(p, &bigger)?)?;
    let shift = (g.e0 - e_big).abs();
    Ok(EdResult {
        e0: g.e0,
        gap: g.gap,
        n1: photon_number(p, cfg, &g.state),
        current: photon_current(p, cfg, &g.state),
        converged: shift < tol,
        cutoff_shift: shift,
    })
}

/// Quadratic bosonic Hamiltonian Σ ω aₙ†aₙ − cₙ(aₙ+aₙ†)² + hopping on three truncated modes.
pub fn quadratic_hamiltonian(p: &ModelParams, c: [f64; 3], n_max: usize) -> SparseMatrix {
    let d = n_max + 1;
    let dim = d * d * d;
    let enc = |n: [usize; 3]| (n[0] * d + n[1]) * d + n[2];
    let ph = Complex64::from_polar(p.j_hop, p.theta);
    let mut trip = Vec::new();
    for col in 0..dim {
        let n = [col / (d * d), (col / d) % d, col % d];
        let mut diag = 0.0;
        for k in 0..3 {
            diag += p.omega * n[k] as f64 - c[k] * (2.0 * n[k] as f64 + 1.0);
            if n[k] >= 2 {
                let mut m = n;
                m[k] -= 2;
                trip.push((enc(m), col, Complex64::new(-c[k] * ((n[k] * (n[k] - 1)) as f64).sqrt(), 0.0)));
            }
            if n[k] + 2 <= n_max {
                let mut m = n;
                m[k] += 2;
                trip.push((enc(m), col, Complex64::new(-c[k] * (((n[k] + 1) * (n[k] + 2)) as f64).sqrt(), 0.0)));
            }
            let l = (k + 1) % 3;
            for &(up, dn, cc) in &[(k, l, ph), (l, k, ph.conj())] {
                if n[dn] > 0 && n[up] < n_max {
                    let mut m = n;
                    m[dn] -= 1;
                    m[up] += 1;
                    trip.push((enc(m), col, cc * ((n[dn] * (n[up] + 1)) as f64).sqrt()));
                }
            }
        }
        trip.push((col, col, Complex64::new(diag, 0.0)));
    }
    SparseMatrix::from_triplets(dim, trip)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchGround {
    pub branch: crate::state::Branch,
    pub disp: Displacement,
    pub e0: f64,
    pub current: f64,
    pub n1: f64,
}

/// ED in the displaced frame of every mean-field branch that solves at `p`; the lowest e0 wins.
pub fn branch_selected_ground(p: &ModelParams, n_max: usize, opts: &crate::meanfield::SolverOptions) -> Result<BranchGround> {
    use crate::state::{solve_branch, Branch};
    let mut best: Option<BranchGround> = None;
    for branch in [Branch::Normal, Branch::Ferro, Branch::Chiral] {
        let Ok(gs) = solve_branch(p, branch, &[], opts) else { continue };
        let cfg = FockConfig { n_max, displaced_frame: Some(gs.disp), ..Default::default() };
        let g = ground_state(&build_hamiltonian(p, &cfg)?)?;
        if best.as_ref().map_or(true, |b| g.e0 < b.e0 - 1e-9 * g.e0.abs().max(1.0)) {
            best = Some(BranchGround {
                branch,
                disp: gs.disp,
                e0: g.e0,
                current: photon_current(p, &cfg, &g.state),
                n1: photon_number(p, &cfg, &g.state),
            });
        }
    }
    best.ok_or(QrtError::Domain("no mean-field branch solves at this point".into()))
}
