//! Energy-normalized continuum basis, overlaps, spectral decomposition and
//! the Hellmann–Feynman velocity.
//!
//! Overlaps are evaluated on r > 0 (the integrands are even). Principal-value
//! products are split by partial fractions and each pole is subtracted
//! analytically: PV∫₀^R G/(r − a) dr = ∫₀^R (G − G(a))/(r − a) dr + G(a)·ln((R − a)/a).

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::solve::{AlphaPrescription, RadialSolution, SolveOptions};
use super::state::{Local, RelativeEigenstate};
use crate::error::{Error, Result};
use crate::model::Reduced;
use crate::numerics::quad::{gl_panel, graded_breaks};

/// Anything with relative-coordinate components that can enter an overlap.
pub trait RelState: Sync {
    fn local(&self, r: f64) -> Local;
    /// Pole position of SS (r_b0 units) if SS carries a principal-value pole.
    fn pole(&self) -> Option<f64>;
    /// SS·(r − pole), finite at the pole.
    fn ss_tilde(&self, r: f64) -> f64;
    fn alpha(&self) -> Complex64;
    /// Points where components are non-smooth.
    fn kinks(&self) -> Vec<f64>;
    fn support(&self) -> f64;
}

impl RelState for RelativeEigenstate {
    fn local(&self, r: f64) -> Local {
        RelativeEigenstate::local(self, r)
    }
    fn pole(&self) -> Option<f64> {
        if self.coulomb {
            None
        } else {
            Some(self.rb)
        }
    }
    fn ss_tilde(&self, r: f64) -> f64 {
        self.ss_times_distance(r)
    }
    fn alpha(&self) -> Complex64 {
        self.alpha
    }
    fn kinks(&self) -> Vec<f64> {
        vec![self.rb]
    }
    fn support(&self) -> f64 {
        RelativeEigenstate::support(self)
    }
}

/// A state given by closures (used for test vectors).
pub struct FnState<F: Fn(f64) -> Local + Sync> {
    pub f: F,
    pub support: f64,
}

impl<F: Fn(f64) -> Local + Sync> RelState for FnState<F> {
    fn local(&self, r: f64) -> Local {
        (self.f)(r)
    }
    fn pole(&self) -> Option<f64> {
        None
    }
    fn ss_tilde(&self, _r: f64) -> f64 {
        0.0
    }
    fn alpha(&self) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }
    fn support(&self) -> f64 {
        self.support
    }
}

fn integrate_breaks<F: FnMut(f64) -> f64>(mut f: F, r_max: f64, sing: &[f64]) -> f64 {
    let br = graded_breaks(0.0, r_max, sing, 48, 1e-11 * r_max);
    br.windows(2).map(|w| gl_panel(&mut f, w[0], w[1])).sum()
}

/// PV∫₀^R G(r)/(r − a) dr.
fn pv_integral<G: Fn(f64) -> f64>(g: G, a: f64, r_max: f64, sing: &[f64]) -> f64 {
    let ga = g(a);
    let sub = integrate_breaks(|r| (g(r) - ga) / (r - a), r_max, sing);
    sub + ga * ((r_max - a) / a).ln()
}

/// ⟨a|b⟩ for two states with distinct poles (or at most one pole).
pub fn overlap<A: RelState + ?Sized, B: RelState + ?Sized>(a: &A, b: &B) -> Complex64 {
    overlap_with(a, b, true)
}

/// Overlap with (`conjugate`) or without complex conjugation of the bra.
/// Only the delta weights can be complex, so the two forms differ only there.
pub fn overlap_with<A: RelState + ?Sized, B: RelState + ?Sized>(a: &A, b: &B, conjugate: bool) -> Complex64 {
    let r_max = a.support().max(b.support());
    let mut sing: Vec<f64> = a.kinks();
    sing.extend(b.kinks());
    let photonic = integrate_breaks(
        |r| {
            let (la, lb) = (a.local(r), b.local(r));
            la.ee * lb.ee + 2.0 * la.psi * lb.psi + 2.0 * la.m * lb.m
        },
        r_max,
        &sing,
    );
    let ss = match (a.pole(), b.pole()) {
        (None, None) => integrate_breaks(|r| a.local(r).ss * b.local(r).ss, r_max, &sing),
        (Some(pa), None) => pv_integral(|r| a.ss_tilde(r) * b.local(r).ss, pa, r_max, &sing),
        (None, Some(pb)) => pv_integral(|r| a.local(r).ss * b.ss_tilde(r), pb, r_max, &sing),
        (Some(pa), Some(pb)) => {
            let d = pa - pb;
            let g = |r: f64| a.ss_tilde(r) * b.ss_tilde(r) / d;
            pv_integral(g, pa, r_max, &sing) - pv_integral(g, pb, r_max, &sing)
        }
    };
    let mut total = Complex64::new(photonic + ss, 0.0);
    if let Some(pa) = a.pole() {
        let alpha = if conjugate { a.alpha().conj() } else { a.alpha() };
        total += alpha * b.local(pa).ss;
    }
    if let Some(pb) = b.pole() {
        total += a.local(pb).ss * b.alpha();
    }
    total
}

/// ‖ψ‖² of a normalizable state (no delta part).
pub fn norm_sqr<A: RelState + ?Sized>(a: &A) -> f64 {
    integrate_breaks(
        |r| {
            let l = a.local(r);
            l.ee * l.ee + 2.0 * l.psi * l.psi + 2.0 * l.m * l.m + l.ss * l.ss
        },
        a.support(),
        &a.kinks(),
    )
}

/// Photonic weight ∫(EE² + ES₊² + |ES₋|²) and the non-SS norm ∫(EE² + 2ES₊² + 2|ES₋|²) on r > 0.
fn photonic_parts<A: RelState + ?Sized>(a: &A) -> (f64, f64) {
    let k = a.kinks();
    let w = integrate_breaks(
        |r| {
            let l = a.local(r);
            l.ee * l.ee + l.psi * l.psi + l.m * l.m
        },
        a.support(),
        &k,
    );
    let n = integrate_breaks(
        |r| {
            let l = a.local(r);
            l.ee * l.ee + 2.0 * l.psi * l.psi + 2.0 * l.m * l.m
        },
        a.support(),
        &k,
    );
    (w, n)
}

/// ⟨∂H/∂K⟩/c for a normalizable state: ∂_K H is c on EE and c/2 on ES and SE.
pub fn hf_group_velocity<A: RelState + ?Sized>(a: &A) -> f64 {
    let (w, _) = photonic_parts(a);
    w / norm_sqr(a)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenBasis {
    pub k_bar: f64,
    pub d_omega: f64,
    pub prescription: AlphaPrescription,
    pub states: Vec<RelativeEigenstate>,
    /// Energy normalizations N(ω_i).
    pub norms: Vec<f64>,
    /// Largest |⟨i|j⟩|·dω/√(N_i N_j) over neighbours 0 < |i − j| ≤ 2.
    pub max_leakage: f64,
}

impl EigenBasis {
    pub fn omegas(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.omega_bar).collect()
    }

    /// Normalized overlap of neighbours i, j (energy normalization, δ → 1/dω on the diagonal).
    pub fn leakage(&self, i: usize, j: usize) -> f64 {
        overlap(&self.states[i], &self.states[j]).norm() * self.d_omega / (self.norms[i] * self.norms[j]).sqrt()
    }

    /// Hellmann–Feynman velocity (units of c) of every discrete basis member,
    /// whose norm is N(ω)/dω plus its finite non-SS part.
    pub fn hf_velocities(&self) -> Vec<f64> {
        self.states
            .par_iter()
            .zip(&self.norms)
            .map(|(s, n)| {
                let (w, reg) = photonic_parts(s);
                w / (n / self.d_omega + reg)
            })
            .collect()
    }
}

/// Solves every ω̄ of a uniform grid at fixed K̄ without the orthogonality check.
pub fn build_eigenbasis_unchecked(red: &Reduced, kb: f64, omega_grid: &[f64], opt: &SolveOptions) -> Result<EigenBasis> {
    if omega_grid.len() < 2 {
        return Err(Error::Config("ω grid needs at least two points".into()));
    }
    let d_omega = (omega_grid[omega_grid.len() - 1] - omega_grid[0]) / (omega_grid.len() - 1) as f64;
    let states: Vec<RelativeEigenstate> = omega_grid
        .par_iter()
        .map(|&wb| {
            RadialSolution::solve(red, wb, kb, opt, true)
                .map(|s| RelativeEigenstate::from_solution(s, opt.prescription, false, 2))
        })
        .collect::<Result<Vec<_>>>()?;
    let norms: Vec<f64> = states.iter().map(|s| s.energy_norm()).collect();
    let mut basis = EigenBasis { k_bar: kb, d_omega, prescription: opt.prescription, states, norms, max_leakage: 0.0 };
    let n = basis.states.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..(i + 3).min(n)).map(move |j| (i, j))).collect();
    basis.max_leakage = pairs.par_iter().map(|&(i, j)| basis.leakage(i, j)).reduce(|| 0.0, f64::max);
    Ok(basis)
}

/// As above, failing if neighbour leakage exceeds 10 %.
pub fn build_eigenbasis(red: &Reduced, kb: f64, omega_grid: &[f64], opt: &SolveOptions) -> Result<EigenBasis> {
    let b = build_eigenbasis_unchecked(red, kb, omega_grid, opt)?;
    if b.max_leakage > 0.10 {
        return Err(Error::Orthogonality(format!("neighbour leakage {:.3}", b.max_leakage)));
    }
    Ok(b)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Decomposition {
    pub omega_bar: Vec<f64>,
    /// |⟨Ψ_ω|Ψ⟩|²/N(ω), scaled to unit Σ·dω.
    pub density: Vec<f64>,
    /// Σ|⟨Ψ_ω|Ψ⟩|²/N(ω)·dω divided by ‖Ψ‖² (captured fraction).
    pub captured: f64,
    pub peak_omega: f64,
    pub fwhm: f64,
    pub d_omega: f64,
}

/// Spectral density of a normalizable state over the basis window.
pub fn decompose<A: RelState + ?Sized>(state: &A, basis: &EigenBasis) -> Decomposition {
    let raw: Vec<f64> = basis
        .states
        .par_iter()
        .zip(&basis.norms)
        .map(|(s, n)| overlap(s, state).norm_sqr() / n)
        .collect();
    let total: f64 = raw.iter().sum::<f64>() * basis.d_omega;
    let density: Vec<f64> = raw.iter().map(|v| v / total).collect();
    let omega_bar = basis.omegas();
    let (ip, _) = density
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let fwhm = full_width_half_max(&omega_bar, &density, ip);
    Decomposition {
        peak_omega: omega_bar[ip],
        omega_bar,
        density,
        captured: total / norm_sqr(state),
        fwhm,
        d_omega: basis.d_omega,
    }
}

/// FWHM about sample `ip` by linear interpolation of the half-maximum crossings.
pub fn full_width_half_max(x: &[f64], y: &[f64], ip: usize) -> f64 {
    let half = 0.5 * y[ip];
    let mut left = x[0];
    for i in (0..ip).rev() {
        if y[i] < half {
            left = x[i] + (half - y[i]) / (y[i + 1] - y[i]) * (x[i + 1] - x[i]);
            break;
        }
    }
    let mut right = x[x.len() - 1];
    for i in ip + 1..x.len() {
        if y[i] < half {
            right = x[i - 1] + (y[i - 1] - half) / (y[i - 1] - y[i]) * (x[i] - x[i - 1]);
            break;
        }
    }
    right - left
}
