//! Bosonic (symplectic) diagonalization of 6×6 quadratic forms.
//!
//! Convention: the fluctuation Hamiltonian is H = ½Ψ†𝓗Ψ − ½Tr h with Ψ = (a₁,a₂,a₃,a₁†,a₂†,a₃†)ᵀ
//! and 𝓗 = [[h, D], [D*, h*]]. The matrix `M` handed around publicly is 𝓗/2, so the positive
//! eigenvalues of Λ₋M are half the excitation energies.

use nalgebra::{SMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{QrtError, Result};
use crate::meanfield::Displacement;
use crate::model::ModelParams;

pub type CMat6 = SMatrix<Complex64, 6, 6>;
pub type CMat3 = SMatrix<Complex64, 3, 3>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Λ₋ = diag(1,1,1,−1,−1,−1).
pub fn lambda_minus() -> CMat6 {
    CMat6::from_fn(|i, k| if i != k { ZERO } else if i < 3 { Complex64::new(1.0, 0.0) } else { Complex64::new(-1.0, 0.0) })
}

/// Ring hopping matrix: h[n][n+1] = J e^{iθ}, h[n][n−1] = J e^{−iθ}.
pub fn hopping(j_hop: f64, theta: f64) -> CMat3 {
    let mut h = CMat3::zeros();
    for n in 0..3 {
        h[(n, (n + 1) % 3)] += Complex64::from_polar(j_hop, theta);
        h[(n, (n + 2) % 3)] += Complex64::from_polar(j_hop, -theta);
    }
    h
}

/// 𝓗 for ω a†a − cₙ(a+a†)² plus hopping.
pub fn bdg_matrix(omega: f64, j_hop: f64, theta: f64, c: [f64; 3]) -> CMat6 {
    let h = hopping(j_hop, theta);
    let mut m = CMat6::zeros();
    for r in 0..3 {
        for k in 0..3 {
            m[(r, k)] = h[(r, k)];
            m[(r + 3, k + 3)] = h[(r, k)].conj();
        }
        m[(r, r)] += omega - 2.0 * c[r];
        m[(r + 3, r + 3)] += omega - 2.0 * c[r];
        m[(r, r + 3)] = Complex64::new(-2.0 * c[r], 0.0);
        m[(r + 3, r)] = Complex64::new(-2.0 * c[r], 0.0);
    }
    m
}

/// The matrix M of H = αMα† for the displaced chiral-branch Hamiltonian.
pub fn build_csp_matrix(p: &ModelParams, disp: &Displacement) -> CMat6 {
    bdg_matrix(p.omega, p.j_hop, p.theta, disp.couplings(p)) * Complex64::new(0.5, 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticSolution {
    /// Ψ = T (c; c†); T = [[U, V*], [V, U*]].
    pub t: CMat6,
    /// Excitation energies, ascending.
    pub eps: [f64; 3],
    /// Constant of the normal-ordered quadratic form: ½(Σε − Tr h).
    pub e_ground: f64,
}

impl SymplecticSolution {
    /// Coefficients of cᵢ in the quadrature xₙ = aₙ + aₙ†, i.e. (U + V)ₙᵢ.
    pub fn quadrature_weights(&self) -> CMat3 {
        CMat3::from_fn(|n, i| self.t[(n, i)] + self.t[(n + 3, i)])
    }

    /// ‖TΛ₋T† − Λ₋‖ (max entry).
    pub fn symplectic_error(&self) -> f64 {
        let l = lambda_minus();
        (self.t * l * self.t.adjoint() - l).iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

/// Colpa's construction: 𝓗 = K†K, diagonalize KΛ₋K†, T = K⁻¹U√E.
pub fn symplectic_diagonalize(m: &CMat6) -> Result<SymplecticSolution> {
    let two = Complex64::new(2.0, 0.0);
    let hm = (m + m.adjoint()) * Complex64::new(0.5, 0.0) * two;
    if hm.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(QrtError::DynamicalInstability("non-finite matrix".into()));
    }
    // complex Cholesky takes square roots of negative pivots without complaint, so test definiteness first
    let spec = SymmetricEigen::new(hm).eigenvalues;
    let top = spec.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if spec.iter().any(|&x| x <= 1e-13 * top) {
        return Err(QrtError::DynamicalInstability("quadratic form not positive definite".into()));
    }
    let chol = hm
        .cholesky()
        .ok_or_else(|| QrtError::DynamicalInstability("quadratic form not positive definite".into()))?;
    let k = chol.l().adjoint();
    let w = k * lambda_minus() * k.adjoint();
    let w = (w + w.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(w);
    let mut order: Vec<usize> = (0..6).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let pos = &order[3..];
    let eps: [f64; 3] = std::array::from_fn(|i| eig.eigenvalues[pos[i]]);
    let scale = eps[2].abs().max(1e-300);
    if eps[0] < 1e-12 * scale {
        return Err(QrtError::GapClosed { eps: eps[0] });
    }
    let mut up = SMatrix::<Complex64, 6, 3>::zeros();
    for (c, &idx) in pos.iter().enumerate() {
        let s = eps[c].sqrt();
        for r in 0..6 {
            up[(r, c)] = eig.eigenvectors[(r, idx)] * s;
        }
    }
    let tp = k
        .solve_upper_triangular(&up)
        .ok_or_else(|| QrtError::DynamicalInstability("singular Cholesky factor".into()))?;
    let mut t = CMat6::zeros();
    for r in 0..3 {
        for c in 0..3 {
            let u = tp[(r, c)];
            let v = tp[(r + 3, c)];
            t[(r, c)] = u;
            t[(r + 3, c)] = v;
            t[(r, c + 3)] = v.conj();
            t[(r + 3, c + 3)] = u.conj();
        }
    }
    let tr_h: f64 = (0..3).map(|n| hm[(n, n)].re).sum();
    let e_ground = 0.5 * (eps.iter().sum::<f64>() - tr_h);
    Ok(SymplecticSolution { t, eps, e_ground })
}

/// Bogoliubov solution for uniform or site-dependent anomalous couplings.
pub fn diagonalize_couplings(p: &ModelParams, c: [f64; 3]) -> Result<SymplecticSolution> {
    symplectic_diagonalize(&(bdg_matrix(p.omega, p.j_hop, p.theta, c) * Complex64::new(0.5, 0.0)))
}

/// |⟨0₁|0₂⟩| for two Gaussian vacua with transforms T₁, T₂.
pub fn vacuum_overlap(t1: &CMat6, t2: &CMat6) -> f64 {
    let l = lambda_minus();
    let t1_inv = l * t1.adjoint() * l;
    let r = t1_inv * t2;
    let a = r.fixed_view::<3, 3>(0, 0).into_owned();
    1.0 / a.determinant().norm().sqrt()
}
