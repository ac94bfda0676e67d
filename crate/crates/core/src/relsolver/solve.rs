//! Shooting on both sides of the pole and connection through the local basis.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::frobenius::LocalBasis;
use crate::error::{Error, Result};
use crate::model::{EffectiveProblem, Reduced};
use crate::numerics::ode::{integrate_nodes, Trajectory};
use crate::wkb::v_reduced;

/// How the imaginary part of the delta weight is treated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AlphaPrescription {
    /// α ∝ c₁ + d₁ − iπc₂ (infinitesimal Rydberg decay limit).
    Causal,
    /// α ∝ c₁ + d₁, standing waves of the Hermitian problem.
    #[default]
    PrincipalValue,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Outer integration edge in units of r_b(ω); extended automatically if ψ has not decayed.
    pub x_max: f64,
    /// Cap on the RK4 step (units of r_b).
    pub h_max: f64,
    pub series_terms: usize,
    /// Pole regularizer carried for reporting (units of r_b⁶).
    pub epsilon: f64,
    pub prescription: AlphaPrescription,
    /// Required |ψ(r_max)|/max|ψ|.
    pub decay_tol: f64,
    /// Largest accepted relative residual of the window fits.
    pub fit_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            x_max: 3.0,
            h_max: 2e-3,
            series_terms: 48,
            epsilon: 1e-8,
            prescription: AlphaPrescription::PrincipalValue,
            decay_tol: 1e-6,
            fit_tol: 1e-4,
        }
    }
}

/// Matching window |x − 1| ∈ [δ_in, δ_out].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub delta_in: f64,
    pub delta_out: f64,
}

impl Window {
    /// δ_out = min(0.1, 10/U²), δ_in = min(0.5/U², δ_out/2).
    pub fn for_u2(u2: f64) -> Self {
        let delta_out = 0.1f64.min(10.0 / u2);
        Self { delta_in: (0.5 / u2).min(0.5 * delta_out), delta_out }
    }
}

/// Connection coefficients across the pole.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Connection {
    pub c1: f64,
    pub c2: f64,
    /// Weight of ψ₁⁺ in the decaying exterior (vanishes for the pure Bessel equation).
    pub d1: f64,
    pub residual_inside: f64,
    pub residual_outside: f64,
}

/// Two independent inside solutions on [0, 1 − δ_in].
#[derive(Clone, Debug)]
pub struct InsideSolutions {
    /// ψ(0) = 1, ψ'(0) = 0.
    pub even: Trajectory,
    /// ψ(0) = 0, ψ'(0) = 1.
    pub odd: Trajectory,
}

/// q(x) of ψ'' = q ψ.
pub fn q_of(prob: &EffectiveProblem) -> impl Fn(f64) -> f64 + Copy {
    let (k, e) = (prob.kappa, prob.e_red);
    move |x: f64| k * (v_reduced(x) - e)
}

/// Base step satisfying both resolution rules: 20 points per π of local phase
/// and 50 points inside the singular layer |x − 1| < 1/U².
pub fn base_step(prob: &EffectiveProblem, window: &Window, h_max: f64) -> f64 {
    let q = q_of(prob);
    let u2 = prob.kappa / 6.0;
    let mut pmax: f64 = 0.0;
    for i in 0..=200 {
        let x = (1.0 - window.delta_out) * i as f64 / 200.0;
        pmax = pmax.max(q(x).abs().sqrt());
    }
    let h_phase = if pmax > 0.0 { std::f64::consts::PI / (20.0 * pmax) } else { h_max };
    h_max.min(1.0 / (50.0 * u2)).min(h_phase)
}

/// Node list from 0 to `end`, graded geometrically toward x = 1.
pub fn inside_nodes(h: f64, end: f64) -> Vec<f64> {
    let mut xs = vec![0.0];
    let mut x = 0.0;
    while x < end {
        let step = h.min(0.05 * (1.0 - x));
        x = if x + step >= end - 1e-15 { end } else { x + step };
        xs.push(x);
    }
    xs
}

/// Node list from `x_max` down to `end`: step h near the pole, growing
/// geometrically outward, capped by the local wavelength.
fn outside_nodes<Q: Fn(f64) -> f64>(q: &Q, h: f64, x_max: f64, end: f64) -> Vec<f64> {
    let mut xs = vec![x_max];
    let mut x = x_max;
    while x > end {
        let far = 1.0 / (20.0 * q(x).abs().sqrt().max(1e-12));
        let step = h.max(0.02 * (x - 1.0)).min(far).min(0.05 * (x - 1.0));
        x = if x - step <= end + 1e-15 { end } else { x - step };
        xs.push(x);
    }
    xs
}

/// Rejects node lists that under-resolve the local phase or the singular layer.
pub fn check_resolution(prob: &EffectiveProblem, nodes: &[f64]) -> Result<()> {
    let q = q_of(prob);
    let u2 = prob.kappa / 6.0;
    for w in nodes.windows(2) {
        let h = (w[1] - w[0]).abs();
        let xm = 0.5 * (w[0] + w[1]);
        let p = q(xm).abs().sqrt();
        if h * p > std::f64::consts::PI / 20.0 * 1.0001 {
            return Err(Error::Resolution(format!("step {h:.3e} at x={xm:.4} exceeds 1/20 of the local phase")));
        }
        if (1.0 - xm).abs() < 1.0 / u2 && h > 1.0 / (50.0 * u2) * 1.0001 {
            return Err(Error::Resolution("fewer than 50 points in the singular layer".into()));
        }
    }
    Ok(())
}

/// Integrates the even and odd inside solutions of ψ'' = q ψ on the given nodes.
pub fn integrate_inside_with<Q: Fn(f64) -> f64>(q: &Q, nodes: &[f64]) -> InsideSolutions {
    InsideSolutions { even: integrate_nodes(q, nodes, 1.0, 0.0), odd: integrate_nodes(q, nodes, 0.0, 1.0) }
}

/// Inside solutions of the relative problem on a checked grid.
pub fn integrate_inside(prob: &EffectiveProblem, nodes: &[f64]) -> Result<InsideSolutions> {
    check_resolution(prob, nodes)?;
    Ok(integrate_inside_with(&q_of(prob), nodes))
}

fn lsq2(rows: &[(f64, f64, f64)]) -> Result<(f64, f64, f64)> {
    if rows.len() < 3 {
        return Err(Error::FitConditioning("too few samples in the matching window".into()));
    }
    let a = DMatrix::from_fn(rows.len(), 2, |i, j| if j == 0 { rows[i].0 } else { rows[i].1 });
    let y = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.2));
    let svd = a.clone().svd(true, true);
    let sol = svd
        .solve(&y, 1e-14)
        .map_err(|e| Error::FitConditioning(e.to_string()))?;
    let res = (&a * &sol - &y).norm() / y.norm().max(1e-300);
    Ok((sol[0], sol[1], res))
}

/// Least-squares fit of a sampled solution to the two local branches in a window.
pub fn fit_window(tr: &Trajectory, basis: &LocalBasis, lo: f64, hi: f64) -> Result<(f64, f64, f64)> {
    let rows: Vec<(f64, f64, f64)> = tr
        .x
        .iter()
        .zip(&tr.y)
        .filter(|(x, _)| {
            let t = (**x - 1.0).abs();
            t >= lo * (1.0 - 1e-12) && t <= hi * (1.0 + 1e-12)
        })
        .map(|(x, y)| {
            let (p1, _, p2, _) = basis.branches(*x - 1.0);
            (p1, p2, *y)
        })
        .collect();
    lsq2(&rows)
}

/// Fits the inside solution to c₁ψ₁⁻ + c₂ψ₂⁻ and a decaying outside solution to
/// d₁ψ₁⁺ + c₂ψ₂⁺ (continuity fixes the ψ₂ weight).
pub fn match_singularity(
    inside: &Trajectory,
    outside: Option<&Trajectory>,
    basis: &LocalBasis,
    window: &Window,
    fit_tol: f64,
) -> Result<(Connection, f64)> {
    let (c1, c2, r_in) = fit_window(inside, basis, window.delta_in, window.delta_out)?;
    if c1 == 0.0 && c2 == 0.0 {
        return Err(Error::FitConditioning("trivial solution (c₁ = c₂ = 0)".into()));
    }
    let (d1, scale, r_out) = match outside {
        Some(tr) => {
            let (e1, e2, r) = fit_window(tr, basis, window.delta_in, window.delta_out)?;
            if e2 == 0.0 {
                return Err(Error::FitConditioning("exterior has no singular branch".into()));
            }
            (c2 * e1 / e2, c2 / e2, r)
        }
        None => (0.0, 0.0, 0.0),
    };
    if r_in > fit_tol || r_out > fit_tol {
        return Err(Error::FitConditioning(format!("window residuals {r_in:.2e}/{r_out:.2e}")));
    }
    Ok((Connection { c1, c2, d1, residual_inside: r_in, residual_outside: r_out }, scale))
}

/// Full solution of the relative problem at one (ω, K), normalized to ψ(0) = 1.
#[derive(Clone, Debug)]
pub struct RadialSolution {
    pub prob: EffectiveProblem,
    pub basis: LocalBasis,
    pub window: Window,
    pub conn: Connection,
    pub inner: Trajectory,
    outer: Option<Trajectory>,
    outer_scale: f64,
    pub x_max: f64,
    tail_rate: f64,
}

impl RadialSolution {
    /// Solves inside and outside; the outside is skipped when `with_exterior` is false.
    pub fn solve(red: &Reduced, wb: f64, kb: f64, opt: &SolveOptions, with_exterior: bool) -> Result<Self> {
        let prob = EffectiveProblem::reduced_only(*red, wb, kb, opt.epsilon)?;
        Self::solve_problem(prob, opt, with_exterior)
    }

    pub fn solve_problem(prob: EffectiveProblem, opt: &SolveOptions, with_exterior: bool) -> Result<Self> {
        let u2 = prob.kappa / 6.0;
        let window = Window::for_u2(u2);
        let basis = LocalBasis::coulomb(prob.kappa, prob.e_red, opt.series_terms);
        let h = base_step(&prob, &window, opt.h_max);
        let q = q_of(&prob);
        let nodes = inside_nodes(h, 1.0 - window.delta_in);
        let inner = integrate_nodes(&q, &nodes, 1.0, 0.0);
        let (mut outer, mut x_max, mut tail_rate) = (None, opt.x_max, 0.0);
        if with_exterior {
            if prob.e_red >= 0.0 {
                return Err(Error::Domain("state lies in the two-polariton scattering continuum".into()));
            }
            let k_inf = (-prob.kappa * prob.e_red).sqrt();
            // extend the box until the exterior has decayed by the requested factor
            let need = 1.0 + (1.0 / opt.decay_tol).ln() / k_inf * 1.2;
            x_max = x_max.max(need).min(200.0);
            tail_rate = k_inf;
            let onodes = outside_nodes(&q, h.max(1e-6), x_max, 1.0 + window.delta_in);
            let qx = q(x_max);
            outer = Some(integrate_nodes(&q, &onodes, 1.0, -qx.max(0.0).sqrt()));
        }
        let (conn, outer_scale) = match_singularity(&inner, outer.as_ref(), &basis, &window, opt.fit_tol)?;
        Ok(Self { prob, basis, window, conn, inner, outer, outer_scale, x_max, tail_rate })
    }

    pub fn u2(&self) -> f64 {
        self.basis.c
    }

    /// ψ(1) = c₂/U².
    pub fn psi_at_pole(&self) -> f64 {
        self.conn.c2 / self.basis.c
    }

    pub fn has_exterior(&self) -> bool {
        self.outer.is_some()
    }

    /// (ψ, dψ/dx) at x ≥ 0 in units of r_b(ω).
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let t = x - 1.0;
        let w = &self.window;
        if t < 0.0 {
            if -t > w.delta_out {
                return self.inner.eval(x);
            }
            let (p1, d1, p2, d2) = self.basis.branches(if t == 0.0 { -1e-300 } else { t });
            return (self.conn.c1 * p1 + self.conn.c2 * p2, self.conn.c1 * d1 + self.conn.c2 * d2);
        }
        if self.outer.is_none() || self.conn.c2 == 0.0 {
            return (if t == 0.0 { self.psi_at_pole() } else { 0.0 }, 0.0);
        }
        if t <= w.delta_out {
            let (p1, d1, p2, d2) = self.basis.branches(t.max(1e-300));
            return (self.conn.d1 * p1 + self.conn.c2 * p2, self.conn.d1 * d1 + self.conn.c2 * d2);
        }
        let tr = self.outer.as_ref().unwrap();
        if x >= self.x_max {
            let (y, _) = tr.eval(self.x_max);
            let v = self.outer_scale * y * (-(self.tail_rate) * (x - self.x_max)).exp();
            return (v, -self.tail_rate * v);
        }
        let (y, dy) = tr.eval(x);
        (self.outer_scale * y, self.outer_scale * dy)
    }

    /// Zeros of ψ on (0, 1]; a pole value below `tol`·max(|c₁|, 1)·U⁻² counts as the zero at r_b.
    pub fn node_count(&self, tol: f64) -> usize {
        let mut n = self.inner.sign_changes();
        let mut prev = *self.inner.y.last().unwrap();
        let m = 24;
        for k in 1..m {
            let t = -self.window.delta_in * (1.0 - k as f64 / m as f64);
            let (v, _) = self.eval(1.0 + t);
            if prev != 0.0 && v.signum() != prev.signum() {
                n += 1;
            }
            prev = v;
        }
        let end = self.psi_at_pole();
        if self.conn.c2.abs() <= tol * self.conn.c1.abs().max(1.0) || end.signum() != prev.signum() {
            n += 1;
        }
        n
    }

    /// Largest |ψ| over the sampled nodes.
    pub fn max_abs(&self) -> f64 {
        let a = self.inner.y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let b = self
            .outer
            .as_ref()
            .map(|o| o.y.iter().fold(0.0f64, |m, v| m.max((v * self.outer_scale).abs())))
            .unwrap_or(0.0);
        a.max(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_ordering() {
        for u2 in [0.5, 5.0, 50.0, 5000.0] {
            let w = Window::for_u2(u2);
            assert!(w.delta_in < w.delta_out && w.delta_out <= 0.1);
        }
    }

    #[test]
    fn pole_value_and_connection_are_consistent() {
        let red = Reduced::new(0.05, 40.0, 0.01);
        let s = RadialSolution::solve(&red, -0.3, 0.98, &SolveOptions::default(), true).unwrap();
        let (v, _) = s.eval(1.0 - 1e-9);
        assert!((v - s.psi_at_pole()).abs() < 1e-6 * s.max_abs());
        let (w, _) = s.eval(1.0 + 1e-9);
        assert!((w - s.psi_at_pole()).abs() < 1e-6 * s.max_abs());
    }
}
