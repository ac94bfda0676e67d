//! Relative-coordinate eigenproblem with the pole at r_b(ω).
//!
//! Reduced equation: ψ'' = κ(1/(x⁶ − 1) − ε)ψ with x = r/r_b(ω), ψ'(0) = 0 and
//! ψ → 0 at infinity. The inside and outside are shot with RK4 and joined
//! through the exact Frobenius pair at x = 1.

pub mod basis;
pub mod dispersion;
pub mod frobenius;
pub mod solve;
pub mod state;

pub use basis::{build_eigenbasis, build_eigenbasis_unchecked, decompose, hf_group_velocity, overlap, Decomposition, EigenBasis, FnState, RelState};
pub use dispersion::{branches, coulomb_dispersion, DispersionBranch, Method};
pub use frobenius::LocalBasis;
pub use solve::{inside_nodes, integrate_inside, integrate_inside_with, match_singularity, AlphaPrescription, Connection, RadialSolution, SolveOptions, Window};
pub use state::{Local, RelativeEigenstate, SampledComponents};

use crate::error::Result;
use crate::model::Reduced;

/// Coulomb state of branch n at K̄: ψ(r_b) = 0, no exterior and no delta part.
pub fn coulomb_state(red: &Reduced, kb: f64, n: usize, opt: &SolveOptions, samples: usize) -> Result<RelativeEigenstate> {
    let wb = coulomb_dispersion(red, kb, n, opt)?;
    let sol = RadialSolution::solve(red, wb, kb, opt, false)?;
    Ok(RelativeEigenstate::from_solution(sol, opt.prescription, true, samples))
}

/// Continuum eigenstate at (ω̄, K̄) with its delta weight.
pub fn eigenstate(red: &Reduced, wb: f64, kb: f64, opt: &SolveOptions, samples: usize) -> Result<RelativeEigenstate> {
    let sol = RadialSolution::solve(red, wb, kb, opt, true)?;
    Ok(RelativeEigenstate::from_solution(sol, opt.prescription, false, samples))
}
