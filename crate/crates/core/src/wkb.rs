//! WKB quantization of the region inside the blockade radius.
//!
//! In x = r/r_b(ω) the local momentum is p(x) = √(κ(ε − v(x))) with
//! v(x) = 1/(x⁶ − 1). The phase ∫p dx is quantized as nπ when an inner
//! turning point exists and as (n − 1/4)π when the whole interval is allowed.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EffectiveProblem, PolaritonParams, Reduced};
use crate::numerics::{quad, roots};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WkbVariant {
    TurningPoint,
    NoTurningPoint,
}

impl WkbVariant {
    /// Phase offset subtracted from n in the quantization rule.
    pub fn shift(&self) -> f64 {
        match self {
            WkbVariant::TurningPoint => 0.0,
            WkbVariant::NoTurningPoint => 0.25,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WkbSolution {
    pub n: usize,
    pub omega_bar: f64,
    pub k_bar: f64,
    /// ∫ p dr over the allowed interval.
    pub phase_integral: f64,
    /// Inner turning point in units of r_b(ω) (0 if none).
    pub x0: f64,
    pub variant: WkbVariant,
}

/// Reduced potential v(x) = 1/(x⁶ − 1).
#[inline]
pub fn v_reduced(x: f64) -> f64 {
    1.0 / (x.powi(6) - 1.0)
}

/// Local momentum √(m(E − V_eff(r))) in 1/µm (or 1/r_b0 for reduced problems);
/// imaginary in forbidden regions.
pub fn local_momentum(prob: &EffectiveProblem, r: f64) -> Complex64 {
    let x = r / prob.rb;
    let p2 = prob.kappa * (prob.e_red - v_reduced(x));
    Complex64::new(p2, 0.0).sqrt() / prob.rb
}

/// Inner turning point of ε − v(x) on [0, 1): located by a sign change on a
/// sample grid and refined by bisection. Returns 0 when the interval is all allowed.
pub fn turning_point(e_red: f64) -> f64 {
    let f = |x: f64| e_red - v_reduced(x);
    if f(0.0) >= 0.0 {
        return 0.0;
    }
    let m = 400;
    let xs: Vec<f64> = (0..=m).map(|i| (i as f64 / m as f64) * (1.0 - 1e-9)).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let k = roots::sign_changes(&vals).last().copied().unwrap_or(m - 1);
    roots::bisect(f, xs[k], xs[k + 1], 1e-15).unwrap_or(xs[k])
}

/// ∫_a^b √max(p2(x), 0) dx with square-root substitutions at both ends, so that
/// both a 1/√(b−x) momentum edge and a √(x−a) turning point are smooth.
pub fn allowed_phase<P: Fn(f64) -> f64>(p2: P, a: f64, b: f64, abs_tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let wa = (m - a).sqrt();
    let wb = (b - m).sqrt();
    let lower = |w: f64| 2.0 * w * p2(a + w * w).max(0.0).sqrt();
    let upper = |u: f64| 2.0 * u * p2(b - u * u).max(0.0).sqrt();
    let (i1, _) = quad::integrate(lower, 0.0, wa, 0.5 * abs_tol, 1e-13);
    let (i2, _) = quad::integrate(upper, 0.0, wb, 0.5 * abs_tol, 1e-13);
    i1 + i2
}

/// 2u·p(1 − u²), with 1 − x⁶ = u²(1 + x + … + x⁵) so nothing cancels at the pole.
fn edge_integrand(kappa: f64, e_red: f64, u: f64) -> f64 {
    let x = 1.0 - u * u;
    let s = 1.0 + x * (1.0 + x * (1.0 + x * (1.0 + x * (1.0 + x))));
    2.0 * (kappa * (e_red * u * u + 1.0 / s)).max(0.0).sqrt()
}

/// Phase ∫p dx over the allowed part of [0, 1), with the turning point and variant.
pub fn quantization_integral(prob: &EffectiveProblem) -> Result<(f64, f64, WkbVariant)> {
    phase_for(prob.kappa, prob.e_red)
}

fn phase_for(kappa: f64, e_red: f64) -> Result<(f64, f64, WkbVariant)> {
    let x0 = turning_point(e_red);
    if x0 >= 1.0 {
        return Err(Error::Domain("empty classically allowed interval".into()));
    }
    let variant = if x0 > 0.0 { WkbVariant::TurningPoint } else { WkbVariant::NoTurningPoint };
    let m = 0.5 * (x0 + 1.0);
    let lower = |w: f64| 2.0 * w * (kappa * (e_red - v_reduced(x0 + w * w))).max(0.0).sqrt();
    let (i1, _) = quad::integrate(lower, 0.0, (m - x0).sqrt(), 0.5e-10, 1e-13);
    let (i2, _) = quad::integrate(|u| edge_integrand(kappa, e_red, u), 0.0, (1.0 - m).sqrt(), 0.5e-10, 1e-13);
    Ok((i1 + i2, x0, variant))
}

/// Quantization mismatch Φ/π − (n − shift) at (ω̄, K̄).
pub fn mismatch(red: &Reduced, wb: f64, kb: f64, n: usize) -> Result<f64> {
    let prob = EffectiveProblem::reduced_only(*red, wb, kb, 1e-8)?;
    let (ph, _, var) = quantization_integral(&prob)?;
    Ok(ph / std::f64::consts::PI - (n as f64 - var.shift()))
}

fn solution_at(red: &Reduced, wb: f64, kb: f64, n: usize) -> Result<WkbSolution> {
    let prob = EffectiveProblem::reduced_only(*red, wb, kb, 1e-8)?;
    let (phase_integral, x0, variant) = quantization_integral(&prob)?;
    Ok(WkbSolution { n, omega_bar: wb, k_bar: kb, phase_integral, x0, variant })
}

/// Scans `grid` for sign changes of `f` and refines them; returns the roots found.
fn scan_roots<F: Fn(f64) -> Result<f64>>(f: F, grid: &[f64], xtol: f64) -> Vec<f64> {
    let vals: Vec<f64> = grid.iter().map(|&x| f(x).unwrap_or(f64::NAN)).collect();
    let mut out = Vec::new();
    for i in roots::sign_changes(&vals) {
        let g = |x: f64| f(x).unwrap_or(f64::NAN);
        let r = roots::brent(g, grid[i], grid[i + 1], xtol, 200)
            .or_else(|| roots::bisect(|x| f(x).unwrap_or(f64::NAN), grid[i], grid[i + 1], xtol));
        if let Some(r) = r {
            out.push(r);
        }
    }
    out
}

/// ω̄ grid in (−1, ω̄_max], log-spaced in 1 + ω̄ (levels accumulate at ω̄ → −1).
fn omega_grid(points: usize, wb_max: f64) -> Vec<f64> {
    let (a, b) = (1e-5f64.ln(), (1.0 + wb_max).ln());
    (0..points).map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp() - 1.0).collect()
}

/// Root ω̄ of the quantization condition at fixed K̄ for branch n.
pub fn wkb_dispersion(red: &Reduced, kb: f64, n: usize) -> Result<WkbSolution> {
    if n == 0 {
        return Err(Error::Config("branch index starts at 1".into()));
    }
    let grid = omega_grid(240, 6.0);
    let found = scan_roots(|wb| mismatch(red, wb, kb, n), &grid, 1e-11);
    let clean: Vec<f64> = found
        .iter()
        .copied()
        .filter(|&wb| mismatch(red, wb, kb, n).map(|m| m.abs() < 1e-5).unwrap_or(false))
        .collect();
    let pool = if clean.is_empty() { &found } else { &clean };
    // Where the branch folds back several roots exist; keep the one continuing
    // the closed form from K̄ → 1.
    let seed = closed_form_dispersion(red, kb, n).unwrap_or(f64::INFINITY);
    let best = pool
        .iter()
        .copied()
        .min_by(|a, b| (a - seed).abs().total_cmp(&(b - seed).abs()))
        .ok_or_else(|| Error::NoRoot(format!("no WKB level n={n} at K̄={kb}")))?;
    solution_at(red, best, kb, n)
}

/// Root K̄ of the quantization condition at fixed ω̄ for branch n.
pub fn wkb_momentum(red: &Reduced, wb: f64, n: usize) -> Result<WkbSolution> {
    if n == 0 {
        return Err(Error::Config("branch index starts at 1".into()));
    }
    // sample 1 − K̄ logarithmically from the validity floor up to 1 − K̄ = 200
    let lo = (red.rho.powi(3) * 1.0001).max(1e-9).ln();
    let hi = 200f64.ln();
    let m = 300;
    let grid: Vec<f64> = (0..m).map(|i| 1.0 - (hi - (hi - lo) * i as f64 / (m - 1) as f64).exp()).collect();
    let found = scan_roots(|kb| mismatch(red, wb, kb, n), &grid, 1e-12);
    let best = found
        .iter()
        .copied()
        .filter(|&kb| mismatch(red, wb, kb, n).map(|m| m.abs() < 1e-5).unwrap_or(false))
        .next_back()
        .or_else(|| found.last().copied())
        .ok_or_else(|| Error::NoRoot(format!("no WKB momentum n={n} at ω̄={wb}")))?;
    solution_at(red, wb, best, n)
}

/// Closed-form constant A = [Γ(2/3)/(Γ(1/6)√π)]².
pub fn a_constant() -> f64 {
    let v = puruspe::gamma(2.0 / 3.0) / (puruspe::gamma(1.0 / 6.0) * std::f64::consts::PI.sqrt());
    v * v
}

/// ∫₀¹ x³/√(1 − x⁶) dx = Γ(2/3)√π/Γ(1/6), the limiting phase per √κ.
pub fn limit_integral() -> f64 {
    puruspe::gamma(2.0 / 3.0) * std::f64::consts::PI.sqrt() / puruspe::gamma(1.0 / 6.0)
}

/// Closed-form dispersion (1+ω̄)/(1−K̄) = A·F(ω)²/n², solved for ω̄ by damped
/// fixed-point iteration (damping 0.5, at most 200 iterations).
pub fn closed_form_dispersion(red: &Reduced, kb: f64, n: usize) -> Result<f64> {
    let a = a_constant();
    let rhs = |wb: f64| a * red.f_of(wb).powi(2) * (1.0 - kb) / (n * n) as f64 - 1.0;
    let mut wb = rhs(0.0);
    for _ in 0..200 {
        let next = rhs(wb.max(-1.0 + 1e-12));
        let upd = 0.5 * wb + 0.5 * next;
        if (upd - wb).abs() < 1e-14 * (1.0 + wb.abs()) {
            return Ok(upd);
        }
        wb = upd;
    }
    Err(Error::Convergence("closed-form fixed point did not settle".into()))
}

/// K̄ of the closed form at fixed ω̄: 1 − K̄ = n²(1 + ω̄)^{4/3}/(A F0²).
pub fn closed_form_momentum(red: &Reduced, wb: f64, n: usize) -> f64 {
    1.0 - (n * n) as f64 * (1.0 + wb).powf(4.0 / 3.0) / (a_constant() * red.f0 * red.f0)
}

/// dω̄/dK̄ of the closed form: −(3/4)·A·F(ω)²/n² (velocity in units of v_g).
pub fn closed_form_slope(red: &Reduced, wb: f64, n: usize) -> f64 {
    -0.75 * a_constant() * red.f_of(wb).powi(2) / (n * n) as f64
}

/// Quantized velocity −(3/4)·A·(g²r_b(ω)/cΔ)²·v_g/n² in µm/µs.
pub fn wkb_group_velocity(p: &PolaritonParams, omega: f64, n: usize) -> Result<f64> {
    let red = p.reduced();
    let wb = omega / p.omega_unit();
    if wb <= -1.0 {
        return Err(Error::Domain("ω below the resonance threshold".into()));
    }
    Ok(closed_form_slope(&red, wb, n) * p.vg())
}

/// Slope dω̄/dK̄ of the full quantization root at fixed ω̄ by a centred difference in ω̄.
pub fn wkb_slope(red: &Reduced, wb: f64, n: usize, dw: f64) -> Result<f64> {
    let kp = wkb_momentum(red, wb + dw, n)?.k_bar;
    let km = wkb_momentum(red, wb - dw, n)?.k_bar;
    Ok(2.0 * dw / (kp - km))
}

/// Cumulative phase φ(x) = ∫_{x0}^{x} p dx' tabulated on a grid uniform in u = √(1 − x).
#[derive(Clone, Debug)]
pub struct PhaseTable {
    pub x0: f64,
    /// u_k descending from √(1 − x0) to 0 (x ascending).
    u: Vec<f64>,
    phi: Vec<f64>,
}

impl PhaseTable {
    pub fn new(kappa: f64, e_red: f64, points: usize) -> Self {
        let x0 = turning_point(e_red);
        let umax = (1.0 - x0).sqrt();
        let u: Vec<f64> = (0..=points).map(|i| umax * (1.0 - i as f64 / points as f64)).collect();
        let mut phi = vec![0.0; u.len()];
        for k in 1..u.len() {
            // x = 1 − u², dx = −2u du; integrate in u from u[k-1] down to u[k]
            let seg = quad::gl_panel(|uu| edge_integrand(kappa, e_red, uu), u[k], u[k - 1]);
            phi[k] = phi[k - 1] + seg;
        }
        Self { x0, u, phi }
    }

    /// φ(x); zero below the turning point.
    pub fn phase(&self, x: f64) -> f64 {
        if x <= self.x0 {
            return 0.0;
        }
        if x >= 1.0 {
            return *self.phi.last().unwrap();
        }
        let uu = (1.0 - x).sqrt();
        let n = self.u.len() - 1;
        let t = (self.u[0] - uu) / self.u[0] * n as f64;
        let k = (t.floor() as usize).min(n - 1);
        let f = t - k as f64;
        self.phi[k] * (1.0 - f) + self.phi[k + 1] * f
    }

    pub fn total(&self) -> f64 {
        *self.phi.last().unwrap()
    }
}

/// Minimum distance in the (K̄, ω̄) plane from each point of `a` to the polyline `b`.
pub fn perpendicular_spacing(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<f64> {
    a.iter()
        .map(|&(x, y)| {
            b.windows(2)
                .map(|s| {
                    let (x1, y1) = s[0];
                    let (x2, y2) = s[1];
                    let (dx, dy) = (x2 - x1, y2 - y1);
                    let l2 = dx * dx + dy * dy;
                    let t = if l2 > 0.0 { (((x - x1) * dx + (y - y1) * dy) / l2).clamp(0.0, 1.0) } else { 0.0 };
                    ((x - x1 - t * dx).powi(2) + (y - y1 - t * dy).powi(2)).sqrt()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}
