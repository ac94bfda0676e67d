//! Dense reference solvers used to cross-check the shooting solver.
//!
//! [`DenseRelative`] diagonalizes the full relative-coordinate Hamiltonian at
//! fixed K̄ in the exchange-symmetric sector. With ẽ = EE/√2 and s̃ = SS/√2 the
//! operator on (ẽ, ES₊, m, s̃), ES₋ = −i·m, is real symmetric (units 2Ω²/Δ, r_b0):
//!
//! ```text
//! ẽ  : (K̄ − 1)/η²                  ẽ·ES₊ = −1/(√2 η)
//! ES₊: (K̄ − 1)/(2η²) − ½           ES₊·m = −c̄ ∂_r,  ES₊·s̃ = −1/(√2 η)
//! m  : (K̄ − 1)/(2η²) − ½           m·ES₊ = +c̄ ∂_r
//! s̃  : −1 + min(1/r⁶, cap)
//! ```
//!
//! Derivatives use the Fourier differentiation matrix on a periodic box folded
//! by parity (ẽ, ES₊, s̃ even; m odd).

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::model::Reduced;
use crate::relsolver::RelState;

pub struct DenseRelative {
    /// Half-line cell centres (r_b0 units).
    pub r: Vec<f64>,
    pub h: f64,
    /// Eigenvalues ω̄, ascending.
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Periodic Fourier differentiation matrix on `n` (even) points of spacing `h`.
fn fourier_derivative(n: usize, h: f64) -> DMatrix<f64> {
    let period = n as f64 * h;
    let scale = 2.0 * std::f64::consts::PI / period;
    DMatrix::from_fn(n, n, |j, k| {
        if j == k {
            0.0
        } else {
            let d = j as i64 - k as i64;
            let sign = if d.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let arg = d as f64 * std::f64::consts::PI / n as f64;
            scale * 0.5 * sign / arg.tan()
        }
    })
}

impl DenseRelative {
    /// `m` cells on (0, half_width); V/(2Ω²/Δ) capped at `v_cap`.
    pub fn new(red: &Reduced, kb: f64, m: usize, half_width: f64, v_cap: f64) -> Result<Self> {
        if m < 4 || half_width <= 0.0 {
            return Err(Error::Config("dense grid too small".into()));
        }
        let n = 2 * m;
        let h = half_width / m as f64;
        let d = fourier_derivative(n, h);
        // Full grid x_j = −L + (j + ½)h; index m + i is r_i, its mirror is m − 1 − i.
        let a_plus = DMatrix::from_fn(m, m, |i, j| d[(m + i, m + j)] + d[(m + i, m - 1 - j)]);
        let a_minus = DMatrix::from_fn(m, m, |i, j| d[(m + i, m + j)] - d[(m + i, m - 1 - j)]);
        let r: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) * h).collect();
        let e2 = red.eta * red.eta;
        let cb = red.c_bar();
        let g = 1.0 / (std::f64::consts::SQRT_2 * red.eta);
        let photon = (kb - 1.0) / (2.0 * e2) - 0.5;
        let mut hm = DMatrix::<f64>::zeros(4 * m, 4 * m);
        for i in 0..m {
            hm[(i, i)] = (kb - 1.0) / e2;
            hm[(m + i, m + i)] = photon;
            hm[(2 * m + i, 2 * m + i)] = photon;
            hm[(3 * m + i, 3 * m + i)] = -1.0 + r[i].powi(-6).min(v_cap);
            for (x, y) in [(i, m + i), (m + i, 3 * m + i)] {
                hm[(x, y)] = -g;
                hm[(y, x)] = -g;
            }
            for j in 0..m {
                // ES₊ row acts on odd m; the m row acts on even ES₊.
                hm[(m + i, 2 * m + j)] = -cb * a_minus[(i, j)];
                hm[(2 * m + i, m + j)] = cb * a_plus[(i, j)];
            }
        }
        let eig = SymmetricEigen::new(hm);
        let mut order: Vec<usize> = (0..4 * m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(4 * m, 4 * m, |i, k| eig.eigenvectors[(i, order[k])]);
        Ok(Self { r, h, values, vectors })
    }

    /// Grid vector of a state, scaled so its Euclidean norm is the half-line norm.
    pub fn sample<A: RelState + ?Sized>(&self, state: &A) -> DVector<f64> {
        let m = self.r.len();
        let w = (2.0 * self.h).sqrt();
        let mut v = DVector::zeros(4 * m);
        for (i, &r) in self.r.iter().enumerate() {
            let l = state.local(r);
            v[i] = w * l.ee / std::f64::consts::SQRT_2;
            v[m + i] = w * l.psi;
            v[2 * m + i] = w * l.m;
            v[3 * m + i] = w * l.ss / std::f64::consts::SQRT_2;
        }
        v
    }

    /// |⟨k|f⟩|²/‖f‖² for every eigenvector k.
    pub fn spectral_weights<A: RelState + ?Sized>(&self, state: &A) -> Vec<f64> {
        let v = self.sample(state);
        let nrm = v.norm_squared();
        let proj = self.vectors.tr_mul(&v);
        proj.iter().map(|p| p * p / nrm).collect()
    }

    /// Fraction of a state carried by eigenvalues in (lo, hi].
    pub fn weight_in<A: RelState + ?Sized>(&self, state: &A, lo: f64, hi: f64) -> f64 {
        self.spectral_weights(state)
            .iter()
            .zip(&self.values)
            .filter(|(_, &w)| w > lo && w <= hi)
            .map(|(p, _)| p)
            .sum()
    }
}

/// Coulomb-condition oracle: cell-centred finite differences for
/// −ψ'' + κ/(x⁶ − 1)·ψ = λψ on (0, 1) with ψ'(0) = 0 and ψ(1) = 0.
/// The n-th state satisfies λ_n(ω̄) = κε.
pub fn fd_coulomb_eigenvalue(kappa: f64, n_level: usize, cells: usize) -> f64 {
    let h = 1.0 / cells as f64;
    let mut a = DMatrix::<f64>::zeros(cells, cells);
    for i in 0..cells {
        let x = (i as f64 + 0.5) * h;
        let left = if i == 0 { 0.0 } else { 1.0 };
        let right = 1.0;
        let ghost = if i + 1 == cells { 1.0 } else { 0.0 };
        a[(i, i)] = (left + right + ghost) / (h * h) + kappa / (x.powi(6) - 1.0);
        if i > 0 {
            a[(i, i - 1)] = -1.0 / (h * h);
        }
        if i + 1 < cells {
            a[(i, i + 1)] = -1.0 / (h * h);
        }
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev[n_level - 1]
}

/// ω̄_n from the finite-difference oracle by bisection of λ_n − κε on [lo, hi].
pub fn fd_coulomb_dispersion(red: &Reduced, kb: f64, n: usize, cells: usize, lo: f64, hi: f64) -> Option<f64> {
    let f = |wb: f64| {
        let (kap, eps) = red.kappa_eps(wb, kb);
        fd_coulomb_eigenvalue(kap, n, cells) - kap * eps
    };
    crate::numerics::roots::bisect(f, lo, hi, 1e-7)
}
