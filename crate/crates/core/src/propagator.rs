//! Split-step propagation of the two-excitation amplitudes EE, ES, SE, SS on
//! an N×N grid of photon/Rydberg positions (z, z′).
//!
//! Everything runs in reduced units: energy 2Ω²/Δ, length r_b0, time Δ/2Ω².
//! Photon light shifts −g²/Δ′ (Δ′ = Δ − iγ/2) are carried with the kinetic
//! factor; the on-site factor holds the E↔S couplings, the Rydberg shifts,
//! Rydberg decay and V(z − z′) on SS.

use nalgebra::Matrix3;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PolaritonParams;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Medium constants in reduced units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Medium {
    pub delta: f64,
    pub omega: f64,
    pub g: f64,
    pub c: f64,
    /// Intermediate-state linewidth γ.
    pub gamma: f64,
    /// Rydberg linewidth γ′.
    pub gamma_r: f64,
    /// Cap on V near z = z′.
    pub v_cap: f64,
}

impl Medium {
    pub fn from_params(p: &PolaritonParams) -> Self {
        let e0 = p.omega_unit();
        let rb0 = p.rb0();
        Self {
            delta: p.delta / e0,
            omega: p.omega_c / e0,
            g: p.g / e0,
            c: p.c / (e0 * rb0),
            gamma: p.gamma / e0,
            gamma_r: p.gamma_r / e0,
            v_cap: 1e3,
        }
    }

    /// From groups: η = Ω/g, F0, ρ = Ω/Δ and the linewidths over Δ.
    pub fn from_groups(eta: f64, f0: f64, rho: f64, gamma_over_delta: f64, gamma_r_over_delta: f64) -> Self {
        let delta = 1.0 / (2.0 * rho * rho);
        let omega = rho * delta;
        Self {
            delta,
            omega,
            g: omega / eta,
            c: 1.0 / (2.0 * f0 * eta * eta),
            gamma: gamma_over_delta * delta,
            gamma_r: gamma_r_over_delta * delta,
            v_cap: 1e3,
        }
    }

    pub fn eta(&self) -> f64 {
        self.omega / self.g
    }

    pub fn vg(&self) -> f64 {
        self.eta().powi(2) * self.c
    }

    fn delta_c(&self) -> Complex64 {
        Complex64::new(self.delta, -0.5 * self.gamma)
    }

    pub fn potential(&self, r: f64) -> f64 {
        let r6 = r.powi(6);
        if r6 * self.v_cap <= 1.0 {
            self.v_cap
        } else {
            1.0 / r6
        }
    }

    /// Light shift −g²/Δ′ of one photon.
    pub fn light_shift(&self) -> Complex64 {
        -self.g * self.g / self.delta_c()
    }

    /// On-site generator in the basis (EE, ES, SE, SS) without photon light shifts.
    pub fn onsite(&self, r: f64) -> [[Complex64; 4]; 4] {
        let dc = self.delta_c();
        let k = -self.g * self.omega / dc;
        let s = -self.omega * self.omega / dc - 0.5 * I * self.gamma_r;
        let z = Complex64::new(0.0, 0.0);
        [
            [z, k, k, z],
            [k, s, z, k],
            [k, z, s, k],
            [z, k, k, 2.0 * s + self.potential(r)],
        ]
    }
}

/// ζ admissibility v_g ζ/c < 0.1(1 − K̄)².
pub fn zeta_admissible(eta: f64, zeta: f64, k_bar: f64) -> Result<()> {
    let lhs = eta * eta * zeta;
    let rhs = 0.1 * (1.0 - k_bar).powi(2);
    if !(zeta > 0.0) || lhs >= rhs {
        return Err(Error::Validity(format!("scaling ζ = {zeta:e}: v_g ζ/c = {lhs:.4} not below 0.1(1−K̄)² = {rhs:.4}")));
    }
    Ok(())
}

/// z → ζz, g → g/√ζ, r_b → ζ r_b (C6 → ζ⁶ C6); g²r_b/cΔ is unchanged.
pub fn scale_params(p: &PolaritonParams, zeta: f64, k_bar: f64) -> Result<PolaritonParams> {
    zeta_admissible(p.omega_c / p.g, zeta, k_bar)?;
    PolaritonParams::new(p.g / zeta.sqrt(), p.omega_c, p.delta, p.gamma, p.gamma_r, p.c6 * zeta.powi(6), p.c)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoExcitationField {
    pub n: usize,
    pub h: f64,
    pub t: f64,
    /// Row-major over (z index, z′ index).
    pub ee: Vec<Complex64>,
    pub es: Vec<Complex64>,
    pub se: Vec<Complex64>,
    pub ss: Vec<Complex64>,
}

impl TwoExcitationField {
    pub fn zeros(n: usize, h: f64) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); n * n];
        Self { n, h, t: 0.0, ee: z.clone(), es: z.clone(), se: z.clone(), ss: z }
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    pub fn length(&self) -> f64 {
        self.n as f64 * self.h
    }

    pub fn components(&self) -> [&Vec<Complex64>; 4] {
        [&self.ee, &self.es, &self.se, &self.ss]
    }

    pub fn norm_sqr(&self) -> f64 {
        // Row sums are collected before adding so the result is thread-count independent.
        let n = self.n;
        let s: f64 = self
            .components()
            .iter()
            .map(|c| c.par_chunks(n).map(|row| row.iter().map(|v| v.norm_sqr()).sum::<f64>()).collect::<Vec<_>>().iter().sum::<f64>())
            .sum();
        s * self.h * self.h
    }

    pub fn scale(&mut self, a: f64) {
        for c in [&mut self.ee, &mut self.es, &mut self.se, &mut self.ss] {
            c.par_iter_mut().for_each(|v| *v *= a);
        }
    }

    /// max |ee(z,z′) − ee(z′,z)|, |ss − ssᵀ|, |es − seᵀ|.
    pub fn symmetry_error(&self) -> f64 {
        let n = self.n;
        let mut err: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (self.idx(i, j), self.idx(j, i));
                err = err
                    .max((self.ee[a] - self.ee[b]).norm())
                    .max((self.ss[a] - self.ss[b]).norm())
                    .max((self.es[a] - self.se[b]).norm());
            }
        }
        err
    }

    /// ‖a − b‖ in the field norm.
    pub fn distance(&self, other: &Self) -> f64 {
        let mut s = 0.0;
        for (a, b) in self.components().iter().zip(other.components()) {
            s += a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>();
        }
        (s * self.h * self.h).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KineticMode {
    /// Exact one-cell shifts per step (c·τ = h).
    CellShift,
    /// Fourier kinetic factor on a periodic grid (any τ).
    Spectral,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Open,
    Periodic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub tau: f64,
    pub t_final: f64,
    pub zeta: f64,
    /// Support bound on |z − z′| (reduced length), None for no cutoff.
    pub cutoff_radius: Option<f64>,
    pub snapshot_times: Vec<f64>,
    pub kinetic: KineticMode,
    pub boundary: Boundary,
    /// Width of the absorbing ramp at z, z′ ∈ {0, L}.
    pub absorbing_width: Option<f64>,
    /// Observers run every this many steps.
    pub observe_every: usize,
}

impl EvolutionConfig {
    /// Cell-shift configuration with τ = h/c.
    pub fn cell_shift(medium: &Medium, h: f64, t_final: f64) -> Self {
        Self {
            tau: h / medium.c,
            t_final,
            zeta: 1.0,
            cutoff_radius: None,
            snapshot_times: Vec::new(),
            kinetic: KineticMode::CellShift,
            boundary: Boundary::Open,
            absorbing_width: None,
            observe_every: 1,
        }
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.tau - 1e-9).ceil().max(0.0) as usize
    }

    pub fn validate(&self, medium: &Medium, h: f64) -> Result<()> {
        if !(self.tau > 0.0) || !(self.t_final >= 0.0) {
            return Err(Error::Config("τ must be positive and t_f non-negative".into()));
        }
        if self.kinetic == KineticMode::CellShift && ((medium.c * self.tau - h) / h).abs() > 1e-9 {
            return Err(Error::Config(format!("c·τ = {} differs from h = {h}", medium.c * self.tau)));
        }
        if self.kinetic == KineticMode::Spectral && self.boundary != Boundary::Periodic {
            return Err(Error::Config("spectral kinetic factor needs periodic boundaries".into()));
        }
        if let Some(rc) = self.cutoff_radius {
            if rc < 2.0 {
                return Err(Error::Config(format!("cutoff radius {rc} below 2 r_b")));
            }
        }
        if self.observe_every == 0 {
            return Err(Error::Config("observe_every must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// exp(−iWτ/2) for one separation: 3×3 on (EE, A₊, SS) and a scalar on A₋,
/// with A± = (ES ± SE)/√2.
#[derive(Clone, Copy, Debug)]
struct OnSite {
    m: Matrix3<Complex64>,
    minus: Complex64,
}

pub struct Propagator {
    pub medium: Medium,
    pub cfg: EvolutionConfig,
    n: usize,
    h: f64,
    onsite: Vec<OnSite>,
    band: usize,
    phase1: Complex64,
    phase2: Complex64,
    ramp: Vec<f64>,
}

fn onsite_factor(medium: &Medium, r: f64, dt: f64) -> OnSite {
    let w = medium.onsite(r);
    let s2 = std::f64::consts::SQRT_2;
    let w3 = Matrix3::new(
        w[0][0],
        s2 * w[0][1],
        w[0][3],
        s2 * w[1][0],
        w[1][1],
        s2 * w[1][3],
        w[3][0],
        s2 * w[3][1],
        w[3][3],
    );
    OnSite { m: (w3 * (-I * dt)).exp(), minus: (-I * dt * w[1][1]).exp() }
}

impl Propagator {
    pub fn new(medium: Medium, cfg: EvolutionConfig, n: usize, h: f64) -> Result<Self> {
        cfg.validate(&medium, h)?;
        let band = match cfg.cutoff_radius {
            Some(rc) => ((rc / h).floor() as usize).min(n),
            None => n,
        };
        let onsite = (0..n).map(|d| onsite_factor(&medium, d as f64 * h, 0.5 * cfg.tau)).collect();
        let ls = medium.light_shift();
        let phase1 = (-I * cfg.tau * ls).exp();
        let phase2 = phase1 * phase1;
        let ramp = match cfg.absorbing_width {
            Some(w) if w > 0.0 => {
                let strength = 5.0 * medium.c / w;
                (0..n)
                    .map(|i| {
                        let z = (i as f64 + 0.5) * h;
                        let d = z.min(n as f64 * h - z);
                        if d < w {
                            (-strength * cfg.tau * (1.0 - d / w).powi(2)).exp()
                        } else {
                            1.0
                        }
                    })
                    .collect()
            }
            _ => vec![1.0; n],
        };
        Ok(Self { medium, cfg, n, h, onsite, band, phase1, phase2, ramp })
    }

    /// Separation |i − j| in cells (minimum image when periodic).
    #[inline]
    fn sep(&self, i: usize, j: usize) -> usize {
        let d = i.abs_diff(j);
        match self.cfg.boundary {
            Boundary::Open => d,
            Boundary::Periodic => d.min(self.n - d),
        }
    }

    fn onsite_step(&self, f: &mut TwoExcitationField) {
        let n = self.n;
        let s2 = std::f64::consts::FRAC_1_SQRT_2;
        let rows = f
            .ee
            .par_chunks_mut(n)
            .zip(f.es.par_chunks_mut(n))
            .zip(f.se.par_chunks_mut(n))
            .zip(f.ss.par_chunks_mut(n));
        rows.enumerate().for_each(|(i, (((ee, es), se), ss))| {
            for j in 0..n {
                let d = self.sep(i, j);
                if d > self.band {
                    continue;
                }
                let o = &self.onsite[d];
                let ap = (es[j] + se[j]) * s2;
                let am = (es[j] - se[j]) * s2;
                let v = nalgebra::Vector3::new(ee[j], ap, ss[j]);
                let u = o.m * v;
                let am = am * o.minus;
                ee[j] = u[0];
                ss[j] = u[2];
                es[j] = (u[1] + am) * s2;
                se[j] = (u[1] - am) * s2;
            }
        });
    }

    fn shift_step(&self, f: &mut TwoExcitationField) {
        let n = self.n;
        let periodic = self.cfg.boundary == Boundary::Periodic;
        let prev = |i: usize| -> Option<usize> {
            if i > 0 {
                Some(i - 1)
            } else if periodic {
                Some(n - 1)
            } else {
                None
            }
        };
        let zero = Complex64::new(0.0, 0.0);
        let (p1, p2) = (self.phase1, self.phase2);
        let old_ee = std::mem::take(&mut f.ee);
        let old_es = std::mem::take(&mut f.es);
        let old_se = std::mem::take(&mut f.se);
        let mut ee = vec![zero; n * n];
        let mut es = vec![zero; n * n];
        let mut se = vec![zero; n * n];
        ee.par_chunks_mut(n).zip(es.par_chunks_mut(n)).zip(se.par_chunks_mut(n)).enumerate().for_each(
            |(i, ((ee, es), se))| {
                let pi = prev(i);
                for j in 0..n {
                    let pj = prev(j);
                    if let (Some(a), Some(b)) = (pi, pj) {
                        ee[j] = old_ee[a * n + b] * p2;
                    }
                    if let Some(a) = pi {
                        es[j] = old_es[a * n + j] * p1;
                    }
                    if let Some(b) = pj {
                        se[j] = old_se[i * n + b] * p1;
                    }
                }
            },
        );
        f.ee = ee;
        f.es = es;
        f.se = se;
    }

    fn spectral_step(&self, f: &mut TwoExcitationField) {
        let n = self.n;
        let k: Vec<f64> = (0..n)
            .map(|m| {
                let m = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
                2.0 * std::f64::consts::PI * m / (n as f64 * self.h)
            })
            .collect();
        let (c, tau, p1) = (self.medium.c, self.cfg.tau, self.phase1);
        let ph = |kk: f64| (-I * c * kk * tau).exp();
        let pk: Vec<Complex64> = k.iter().map(|&kk| ph(kk)).collect();
        fft2(&mut f.ee, n, false);
        fft2(&mut f.es, n, false);
        fft2(&mut f.se, n, false);
        for a in 0..n {
            for b in 0..n {
                let ix = a * n + b;
                f.ee[ix] *= pk[a] * pk[b] * p1 * p1;
                f.es[ix] *= pk[a] * p1;
                f.se[ix] *= pk[b] * p1;
            }
        }
        fft2(&mut f.ee, n, true);
        fft2(&mut f.es, n, true);
        fft2(&mut f.se, n, true);
    }

    /// One step: on-site half step, kinetic step, on-site half step.
    pub fn step(&self, f: &mut TwoExcitationField) {
        self.onsite_step(f);
        match self.cfg.kinetic {
            KineticMode::CellShift => self.shift_step(f),
            KineticMode::Spectral => self.spectral_step(f),
        }
        self.onsite_step(f);
        if self.cfg.absorbing_width.is_some() {
            self.apply_ramp(f);
        }
        f.t += self.cfg.tau;
    }

    fn apply_ramp(&self, f: &mut TwoExcitationField) {
        let n = self.n;
        let ramp = &self.ramp;
        for c in [&mut f.ee, &mut f.es, &mut f.se, &mut f.ss] {
            c.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
                for (j, v) in row.iter_mut().enumerate() {
                    *v *= ramp[i] * ramp[j];
                }
            });
        }
    }

    /// Zeroes all components beyond the cutoff; returns the discarded norm.
    pub fn apply_cutoff(&self, f: &mut TwoExcitationField) -> f64 {
        if self.band >= self.n {
            return 0.0;
        }
        let n = self.n;
        let band = self.band;
        let h2 = self.h * self.h;
        let mut lost = 0.0;
        for c in [&mut f.ee, &mut f.es, &mut f.se, &mut f.ss] {
            lost += c
                .par_chunks_mut(n)
                .enumerate()
                .map(|(i, row)| {
                    let mut s = 0.0;
                    for (j, v) in row.iter_mut().enumerate() {
                        if self.sep(i, j) > band {
                            s += v.norm_sqr();
                            *v = Complex64::new(0.0, 0.0);
                        }
                    }
                    s
                })
                .collect::<Vec<_>>()
                .iter()
                .sum::<f64>();
        }
        lost * h2
    }
}

/// In-place 2D FFT (unnormalized forward, normalized inverse).
pub fn fft2(data: &mut [Complex64], n: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    for row in data.chunks_mut(n) {
        fft.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        for i in 0..n {
            col[i] = data[i * n + j];
        }
        fft.process(&mut col);
        for i in 0..n {
            data[i * n + j] = col[i];
        }
    }
    if inverse {
        let s = 1.0 / (n * n) as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }
}

/// Called during [`evolve`] every `observe_every` steps and at the end.
pub trait Observer {
    fn observe(&mut self, field: &TwoExcitationField) -> Result<()>;
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeriesRow {
    pub t: f64,
    pub norm: f64,
    /// Cumulative norm removed by the cutoff.
    pub discarded: f64,
}

#[derive(Clone, Debug)]
pub struct Evolution {
    pub snapshots: Vec<TwoExcitationField>,
    pub series: Vec<SeriesRow>,
    pub field: TwoExcitationField,
}

/// Runs the step loop, applying the cutoff after every step.
pub fn evolve(
    initial: TwoExcitationField,
    medium: Medium,
    cfg: EvolutionConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<Evolution> {
    let prop = Propagator::new(medium, cfg.clone(), initial.n, initial.h)?;
    let mut f = initial;
    let steps = cfg.n_steps();
    let mut snaps_due: Vec<(f64, bool)> = cfg.snapshot_times.iter().map(|&t| (t, false)).collect();
    let mut snapshots = Vec::new();
    let mut series = Vec::new();
    let mut discarded = prop.apply_cutoff(&mut f);
    let mut record = |f: &TwoExcitationField, discarded: f64, observers: &mut [&mut dyn Observer]| -> Result<()> {
        series.push(SeriesRow { t: f.t, norm: f.norm_sqr(), discarded });
        for o in observers.iter_mut() {
            o.observe(f)?;
        }
        Ok(())
    };
    record(&f, discarded, observers)?;
    for s in 1..=steps {
        prop.step(&mut f);
        discarded += prop.apply_cutoff(&mut f);
        for (t, done) in snaps_due.iter_mut() {
            if !*done && f.t >= *t - 0.5 * cfg.tau {
                snapshots.push(f.clone());
                *done = true;
            }
        }
        if s % cfg.observe_every == 0 || s == steps {
            record(&f, discarded, observers)?;
        }
    }
    Ok(Evolution { snapshots, series, field: f })
}

/// Reference propagator: exp(−iHt) by Taylor series on a periodic grid with
/// the Fourier kinetic operator, used to measure splitting errors.
pub struct TaylorOracle {
    medium: Medium,
    n: usize,
    h: f64,
    k: Vec<f64>,
}

impl TaylorOracle {
    pub fn new(medium: Medium, n: usize, h: f64) -> Self {
        let k = (0..n)
            .map(|m| {
                let m = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
                2.0 * std::f64::consts::PI * m / (n as f64 * h)
            })
            .collect();
        Self { medium, n, h, k }
    }

    fn kinetic(&self, f: &[Complex64], comp: usize) -> Vec<Complex64> {
        let n = self.n;
        let ls = self.medium.light_shift();
        let mut g = f.to_vec();
        fft2(&mut g, n, false);
        for a in 0..n {
            for b in 0..n {
                let e = match comp {
                    0 => self.medium.c * (self.k[a] + self.k[b]) + 2.0 * ls,
                    1 => self.medium.c * self.k[a] + ls,
                    _ => self.medium.c * self.k[b] + ls,
                };
                g[a * n + b] *= e;
            }
        }
        fft2(&mut g, n, true);
        g
    }

    pub fn apply_h(&self, f: &TwoExcitationField) -> TwoExcitationField {
        let n = self.n;
        let mut out = TwoExcitationField::zeros(n, self.h);
        out.t = f.t;
        out.ee = self.kinetic(&f.ee, 0);
        out.es = self.kinetic(&f.es, 1);
        out.se = self.kinetic(&f.se, 2);
        for i in 0..n {
            for j in 0..n {
                let d = i.abs_diff(j).min(n - i.abs_diff(j));
                let w = self.medium.onsite(d as f64 * self.h);
                let ix = i * n + j;
                let v = [f.ee[ix], f.es[ix], f.se[ix], f.ss[ix]];
                let mut r = [Complex64::new(0.0, 0.0); 4];
                for a in 0..4 {
                    for b in 0..4 {
                        r[a] += w[a][b] * v[b];
                    }
                }
                out.ee[ix] += r[0];
                out.es[ix] += r[1];
                out.se[ix] += r[2];
                out.ss[ix] = r[3];
            }
        }
        out
    }

    /// Crude bound on ‖H‖.
    fn norm_bound(&self) -> f64 {
        let kmax = std::f64::consts::PI / self.h;
        let m = &self.medium;
        2.0 * m.c * kmax + 2.0 * m.light_shift().norm() + 4.0 * (m.g * m.omega / m.delta).abs() + 2.0 * m.omega * m.omega / m.delta + m.v_cap + m.gamma_r
    }

    pub fn evolve(&self, f: &TwoExcitationField, t: f64) -> TwoExcitationField {
        let sub = (t * self.norm_bound() / 0.5).ceil().max(1.0) as usize;
        let dt = t / sub as f64;
        let mut cur = f.clone();
        for _ in 0..sub {
            let mut term = cur.clone();
            let mut acc = cur.clone();
            for k in 1..60 {
                let mut ht = self.apply_h(&term);
                let s = -I * dt / k as f64;
                for c in [&mut ht.ee, &mut ht.es, &mut ht.se, &mut ht.ss] {
                    c.iter_mut().for_each(|v| *v *= s);
                }
                term = ht;
                for (a, b) in [(&mut acc.ee, &term.ee), (&mut acc.es, &term.es), (&mut acc.se, &term.se), (&mut acc.ss, &term.ss)] {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                }
                if term.norm_sqr().sqrt() < 1e-15 * acc.norm_sqr().sqrt() {
                    break;
                }
            }
            cur = acc;
        }
        cur.t = f.t + t;
        cur
    }
}
