//! Variational initial states and wavepacket observables.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EffectiveProblem, Reduced};
use crate::numerics::{linear_fit, parabolic_offset};
use crate::propagator::{Observer, TwoExcitationField};
use crate::wkb::{self, PhaseTable};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationalSpec {
    pub n: usize,
    /// Frequency width σ̄ (units of 2Ω²/Δ).
    pub sigma: f64,
    pub omega_center: f64,
    /// Half-width of the ω̄ integration; defaults to 4σ̄.
    pub omega_window: Option<f64>,
    /// Trapezoid nodes across the window (at least 64).
    pub nodes: usize,
    /// Centre-of-mass position R₀ of the packet (units of r_b0).
    pub r_center: f64,
}

impl VariationalSpec {
    pub fn new(n: usize, sigma: f64, omega_center: f64, r_center: f64) -> Self {
        Self { n, sigma, omega_center, omega_window: None, nodes: 64, r_center }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || !(self.sigma > 0.0) {
            return Err(Error::Config("variational state needs n ≥ 1 and σ > 0".into()));
        }
        if self.half_window() < 4.0 * self.sigma - 1e-12 {
            return Err(Error::Config("ω window must cover ±4σ".into()));
        }
        Ok(())
    }

    fn half_window(&self) -> f64 {
        self.omega_window.unwrap_or(4.0 * self.sigma)
    }
}

/// K̄_n(ω̄) from the full quantization condition, falling back to the closed form.
pub fn branch_momentum(red: &Reduced, wb: f64, n: usize) -> Result<f64> {
    match wkb::wkb_momentum(red, wb, n) {
        Ok(s) => Ok(s.k_bar),
        Err(_) => Ok(wkb::closed_form_momentum(red, wb, n)),
    }
}

/// Relative profile at one ω: [cos φ(r_b) − cos φ(r)]·r⁶/(r⁶ − r_b⁶) inside r_b.
pub struct RelativeProfile {
    pub omega_bar: f64,
    pub k_bar: f64,
    pub rb: f64,
    table: PhaseTable,
}

impl RelativeProfile {
    pub fn new(red: &Reduced, wb: f64, n: usize) -> Result<Self> {
        let kb = branch_momentum(red, wb, n)?;
        // Tail nodes may sit just outside the validity window; only a positive
        // mass is required to build the profile.
        let prob = match EffectiveProblem::reduced_only(*red, wb, kb, 1e-8) {
            Ok(p) => (p.kappa, p.e_red),
            Err(Error::Validity(_)) if red.bracket(wb, kb) > 0.0 && wb > -1.0 => red.kappa_eps(wb, kb),
            Err(e) => return Err(e),
        };
        Ok(Self { omega_bar: wb, k_bar: kb, rb: red.rb_of(wb), table: PhaseTable::new(prob.0, prob.1, 400) })
    }

    /// cos φ(r_b) − cos φ(r); vanishes at r = r_b.
    pub fn bracket(&self, r: f64) -> f64 {
        let x = (r / self.rb).min(1.0);
        self.table.total().cos() - self.table.phase(x).cos()
    }

    pub fn value(&self, r: f64) -> f64 {
        let r = r.abs();
        if r >= self.rb {
            return 0.0;
        }
        let x6 = (r / self.rb).powi(6);
        self.bracket(r) * x6 / (x6 - 1.0)
    }
}

/// SS-only packet Σ_ω w e^{iK_n(ω)(R−R₀)} e^{−(ω−ω_c)²/σ²} profile_ω(r), normalized to 1.
pub fn variational_ss(spec: &VariationalSpec, red: &Reduced, n_grid: usize, h: f64) -> Result<TwoExcitationField> {
    spec.validate()?;
    let nodes = spec.nodes.max(64);
    let hw = spec.half_window();
    let lo = (spec.omega_center - hw).max(-1.0 + 1e-6);
    let hi = spec.omega_center + hw;
    let dw = (hi - lo) / (nodes - 1) as f64;
    let profiles: Vec<(f64, RelativeProfile)> = (0..nodes)
        .into_par_iter()
        .map(|k| {
            let wb = lo + dw * k as f64;
            let trap = if k == 0 || k == nodes - 1 { 0.5 } else { 1.0 };
            let weight = trap * dw * (-((wb - spec.omega_center) / spec.sigma).powi(2)).exp();
            match RelativeProfile::new(red, wb, spec.n) {
                Ok(p) => Ok(Some((weight, p))),
                // Far tails of the window may leave the validity range.
                Err(_) if weight < 1e-3 * dw => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let kr = red.k_per_rb0(1.0);
    let mut f = TwoExcitationField::zeros(n_grid, h);
    f.ss.par_chunks_mut(n_grid).enumerate().for_each(|(i, row)| {
        for (j, v) in row.iter_mut().enumerate() {
            let r = (i as f64 - j as f64) * h;
            let big_r = 0.5 * (i + j) as f64 * h;
            let mut acc = Complex64::new(0.0, 0.0);
            for (w, p) in &profiles {
                if r.abs() < p.rb {
                    let phase = kr * p.k_bar * (big_r - spec.r_center);
                    acc += Complex64::from_polar(w * p.value(r), phase);
                }
            }
            *v = acc;
        }
    });
    let nrm = f.norm_sqr();
    if !(nrm > 0.0) {
        return Err(Error::LowSignal("variational state vanishes on the grid".into()));
    }
    f.scale(1.0 / nrm.sqrt());
    Ok(f)
}

/// Mean over diagonals |z − z′| < r_max of the refined argmax of |EE| along R.
pub fn peak_position(f: &TwoExcitationField, r_max: f64) -> Result<f64> {
    let n = f.n;
    let dmax = ((r_max / f.h).floor() as i64).min(n as i64 - 1);
    let global = f.ee.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut inside: f64 = 0.0;
    let mut sum = 0.0;
    let mut count = 0usize;
    for d in -dmax..=dmax {
        let j0 = if d < 0 { (-d) as usize } else { 0 };
        let len = n - d.unsigned_abs() as usize;
        let at = |k: usize| {
            let j = j0 + k;
            let i = (j as i64 + d) as usize;
            f.ee[i * n + j].norm()
        };
        let (mut kb, mut vb) = (0usize, -1.0);
        for k in 0..len {
            let v = at(k);
            if v > vb {
                kb = k;
                vb = v;
            }
        }
        inside = inside.max(vb);
        let off = if kb > 0 && kb + 1 < len { parabolic_offset(at(kb - 1), vb, at(kb + 1)) } else { 0.0 };
        let j = (j0 + kb) as f64 + off;
        sum += (2.0 * j + d as f64) * 0.5 * f.h;
        count += 1;
    }
    if count == 0 || !(inside > 1e-6 * global) || global == 0.0 {
        return Err(Error::LowSignal("|EE| inside the tracking band is below 1e-6 of its maximum".into()));
    }
    Ok(sum / count as f64)
}

/// Records (t, R_peak) after the transient.
pub struct PeakTracker {
    pub r_max: f64,
    pub t_start: f64,
    pub track: Vec<(f64, f64)>,
}

impl PeakTracker {
    pub fn new(r_max: f64, t_start: f64) -> Self {
        Self { r_max, t_start, track: Vec::new() }
    }
}

impl Observer for PeakTracker {
    fn observe(&mut self, field: &TwoExcitationField) -> Result<()> {
        if field.t >= self.t_start {
            self.track.push((field.t, peak_position(field, self.r_max)?));
        }
        Ok(())
    }
}

/// R_peak(t) for a set of snapshots.
pub fn track_peaks(snapshots: &[TwoExcitationField], r_max: f64) -> Result<Vec<(f64, f64)>> {
    if snapshots.len() < 3 {
        return Err(Error::Config("peak tracking needs at least three snapshots".into()));
    }
    snapshots.par_iter().map(|s| peak_position(s, r_max).map(|p| (s.t, p))).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VelocityFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub rms: f64,
    /// Residual rms above 10% of the fitted range.
    pub nonlinear: bool,
}

/// Least-squares slope of the track between fractions `window.0` and `window.1` of its length.
pub fn extract_velocity(track: &[(f64, f64)], window: (f64, f64)) -> Result<VelocityFit> {
    let n = track.len();
    let a = ((window.0 * n as f64).floor() as usize).min(n);
    let b = ((window.1 * n as f64).ceil() as usize).min(n);
    if b < a + 3 {
        return Err(Error::Config("velocity fit needs at least three points".into()));
    }
    let (t, r): (Vec<f64>, Vec<f64>) = track[a..b].iter().copied().unzip();
    let (slope, intercept, stderr, rms) = linear_fit(&t, &r);
    let range = r.iter().cloned().fold(f64::MIN, f64::max) - r.iter().cloned().fold(f64::MAX, f64::min);
    Ok(VelocityFit { slope, stderr, intercept, rms, nonlinear: rms > 0.1 * range })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublePeak {
    /// (r, Σ_R |EE|²) samples.
    pub marginal: Vec<(f64, f64)>,
    pub maxima: Vec<f64>,
    /// Marginal at r = 0 over its maximum.
    pub dip_ratio: f64,
}

impl DoublePeak {
    pub fn count(&self) -> usize {
        self.maxima.len()
    }
}

/// Local maxima below this fraction of the global maximum are ignored.
pub const PEAK_FLOOR: f64 = 0.25;

/// Relative-coordinate marginal of |EE|² on |r| ≤ r_max and its local maxima.
pub fn detect_double_peak(f: &TwoExcitationField, r_max: f64) -> DoublePeak {
    let n = f.n;
    let dmax = ((r_max / f.h).floor() as i64).min(n as i64 - 1);
    let marginal: Vec<(f64, f64)> = (-dmax..=dmax)
        .map(|d| {
            let j0 = if d < 0 { (-d) as usize } else { 0 };
            let len = n - d.unsigned_abs() as usize;
            let s: f64 = (0..len)
                .map(|k| {
                    let j = j0 + k;
                    let i = (j as i64 + d) as usize;
                    f.ee[i * n + j].norm_sqr()
                })
                .sum();
            (d as f64 * f.h, s * f.h)
        })
        .collect();
    let top = marginal.iter().map(|p| p.1).fold(0.0, f64::max);
    let mut maxima = Vec::new();
    for k in 1..marginal.len().saturating_sub(1) {
        let (a, b, c) = (marginal[k - 1].1, marginal[k].1, marginal[k + 1].1);
        if b > a && b >= c && b > PEAK_FLOOR * top {
            maxima.push(marginal[k].0);
        }
    }
    let centre = marginal[dmax as usize].1;
    DoublePeak { dip_ratio: if top > 0.0 { centre / top } else { 0.0 }, marginal, maxima }
}
