//! Medium parameters, normalized units and the closed-form relative problem.
//!
//! Physical units: angular frequencies in rad/µs ("angular MHz"), lengths in µm,
//! times in µs. Internally everything is reduced to
//!
//! * energy unit `2Ω²/Δ` (so `ω̄ = ωΔ/2Ω²`),
//! * length unit `r_b0 = r_b(ω = 0)`,
//! * momentum unit `2g²/cΔ` for the centre-of-mass momentum (`K̄`),
//!
//! which leaves the groups `η = Ω/g`, `F0 = g²r_b0/(cΔ)`, `ρ = Ω/Δ`, `γ/Δ`, `γ'/Δ`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in µm/µs.
pub const C_LIGHT: f64 = 2.997_924_58e8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolaritonParams {
    /// Collective coupling g (rad/µs).
    pub g: f64,
    /// Control Rabi frequency Ω (rad/µs).
    pub omega_c: f64,
    /// Single-photon detuning Δ > 0 (rad/µs).
    pub delta: f64,
    /// Intermediate-state linewidth γ (rad/µs).
    pub gamma: f64,
    /// Rydberg linewidth γ' (rad/µs).
    pub gamma_r: f64,
    /// Van der Waals coefficient C6 (rad/µs · µm⁶).
    pub c6: f64,
    /// Light speed (µm/µs).
    pub c: f64,
}

/// The dimensionless groups that fully determine the reduced problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessGroups {
    /// Ω/g
    pub eta: f64,
    /// g² r_b0 / (cΔ)
    pub f0: f64,
    /// Ω/Δ
    pub rho: f64,
    /// γ/Δ
    #[serde(default)]
    pub gamma_bar: f64,
    /// γ'/Δ
    #[serde(default)]
    pub gamma_r_bar: f64,
}

impl PolaritonParams {
    pub fn new(g: f64, omega_c: f64, delta: f64, gamma: f64, gamma_r: f64, c6: f64, c: f64) -> Result<Self> {
        let p = Self { g, omega_c, delta, gamma, gamma_r, c6, c };
        p.validate()?;
        Ok(p)
    }

    /// Rebuilds dimensional parameters from the groups with Δ and c fixed.
    pub fn from_groups(gr: DimensionlessGroups, delta: f64, c: f64) -> Result<Self> {
        if !(gr.eta > 0.0 && gr.f0 > 0.0 && gr.rho > 0.0 && delta > 0.0 && c > 0.0) {
            return Err(Error::Config("groups, Δ and c must be positive".into()));
        }
        let omega_c = gr.rho * delta;
        let g = omega_c / gr.eta;
        let rb0 = gr.f0 * c * delta / (g * g);
        let c6 = rb0.powi(6) * 2.0 * omega_c * omega_c / delta;
        Self::new(g, omega_c, delta, gr.gamma_bar * delta, gr.gamma_r_bar * delta, c6, c)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.g, self.omega_c, self.delta, self.gamma, self.gamma_r, self.c6, self.c];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("non-finite parameter".into()));
        }
        if self.g <= 0.0 || self.omega_c <= 0.0 || self.delta <= 0.0 || self.c <= 0.0 {
            return Err(Error::Config("g, Ω, Δ and c must be positive".into()));
        }
        if self.c6 * self.delta <= 0.0 {
            return Err(Error::Validity("C6·Δ must be positive".into()));
        }
        if self.gamma < 0.0 || self.gamma_r < 0.0 {
            return Err(Error::Config("decay rates must be non-negative".into()));
        }
        if self.omega_c / self.delta > 0.5 {
            return Err(Error::Validity(format!("Ω/Δ = {} exceeds 0.5", self.omega_c / self.delta)));
        }
        if self.omega_c / self.g > 0.5 {
            return Err(Error::Validity(format!("Ω/g = {} exceeds 0.5", self.omega_c / self.g)));
        }
        Ok(())
    }

    /// Soft warnings (Ω/Δ or Ω/g above 0.1).
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.omega_c / self.delta > 0.1 {
            w.push(format!("Ω/Δ = {:.3} > 0.1: adiabatic elimination is marginal", self.omega_c / self.delta));
        }
        if self.omega_c / self.g > 0.1 {
            w.push(format!("Ω/g = {:.3} > 0.1: polariton picture is marginal", self.omega_c / self.g));
        }
        w
    }

    pub fn groups(&self) -> DimensionlessGroups {
        DimensionlessGroups {
            eta: self.omega_c / self.g,
            f0: self.g * self.g * self.rb0() / (self.c * self.delta),
            rho: self.omega_c / self.delta,
            gamma_bar: self.gamma / self.delta,
            gamma_r_bar: self.gamma_r / self.delta,
        }
    }

    /// 2Ω²/Δ, the energy unit.
    pub fn omega_unit(&self) -> f64 {
        2.0 * self.omega_c * self.omega_c / self.delta
    }

    /// 2g²/(cΔ), the momentum unit.
    pub fn k_unit(&self) -> f64 {
        2.0 * self.g * self.g / (self.c * self.delta)
    }

    /// EIT group velocity (Ω²/g²)c.
    pub fn vg(&self) -> f64 {
        self.omega_c * self.omega_c / (self.g * self.g) * self.c
    }

    pub fn rb0(&self) -> f64 {
        (self.c6 / self.omega_unit()).powf(1.0 / 6.0)
    }

    pub fn reduced(&self) -> Reduced {
        let g = self.groups();
        Reduced { eta: g.eta, f0: g.f0, rho: g.rho }
    }
}

/// Dimensionless (ω̄, K̄) coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizedPoint {
    pub omega_bar: f64,
    pub k_bar: f64,
}

impl NormalizedPoint {
    pub fn from_physical(p: &PolaritonParams, omega: f64, big_k: f64) -> Self {
        Self { omega_bar: omega / p.omega_unit(), k_bar: big_k / p.k_unit() }
    }

    pub fn to_physical(&self, p: &PolaritonParams) -> (f64, f64) {
        (self.omega_bar * p.omega_unit(), self.k_bar * p.k_unit())
    }
}

/// The groups needed by the stationary problem (decay is ignored there).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reduced {
    pub eta: f64,
    pub f0: f64,
    pub rho: f64,
}

impl Reduced {
    pub fn new(eta: f64, f0: f64, rho: f64) -> Self {
        Self { eta, f0, rho }
    }

    /// F(ω) = g² r_b(ω)/(cΔ).
    pub fn f_of(&self, wb: f64) -> f64 {
        self.f0 * (1.0 + wb).powf(-1.0 / 6.0)
    }

    /// r_b(ω)/r_b0.
    pub fn rb_of(&self, wb: f64) -> f64 {
        (1.0 + wb).powf(-1.0 / 6.0)
    }

    /// Mass bracket 1 − K̄ + η²(1+2ω̄).
    pub fn bracket(&self, wb: f64, kb: f64) -> f64 {
        1.0 - kb + self.eta * self.eta * (1.0 + 2.0 * wb)
    }

    /// Photon-pair detuning 1 − K̄ + ω̄η² (EE denominator).
    pub fn ee_den(&self, wb: f64, kb: f64) -> f64 {
        1.0 - kb + wb * self.eta * self.eta
    }

    /// (κ, ε) of ψ'' = κ(1/(x⁶−1) − ε)ψ in x = r/r_b(ω).
    pub fn kappa_eps(&self, wb: f64, kb: f64) -> (f64, f64) {
        let br = self.bracket(wb, kb);
        let f = self.f_of(wb);
        let kap = f * f * br / (1.0 + wb);
        let e2 = self.eta * self.eta;
        let eps = (1.0 + wb) * (br - e2 / self.ee_den(wb, kb) - 1.0 / (1.0 + wb));
        (kap, eps)
    }

    /// d(r_b/r_b0)/dω̄.
    pub fn drb_dwb(&self, wb: f64) -> f64 {
        -(1.0 / 6.0) * (1.0 + wb).powf(-7.0 / 6.0)
    }

    /// Photon speed in r_b0·(2Ω²/Δ) units.
    pub fn c_bar(&self) -> f64 {
        1.0 / (2.0 * self.f0 * self.eta * self.eta)
    }

    /// EIT group velocity in the same units.
    pub fn vg_bar(&self) -> f64 {
        self.eta * self.eta * self.c_bar()
    }

    /// K in units of 1/r_b0 for a given K̄.
    pub fn k_per_rb0(&self, kb: f64) -> f64 {
        2.0 * self.f0 * kb
    }
}

/// The relative-coordinate problem at fixed (ω, K).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveProblem {
    /// Effective mass (µs/µm², ħ = 1).
    pub mass: f64,
    /// Relative energy E (rad/µs).
    pub energy: f64,
    /// r_b(ω) (µm).
    pub rb: f64,
    /// Quoted interaction strength (g²r_b/√6Δc)·√((1−K̄)/(1+ω̄)).
    pub u: f64,
    /// Regularizer of the pole, in units of r_b⁶.
    pub epsilon: f64,
    pub omega_bar: f64,
    pub k_bar: f64,
    /// Coefficient κ = m r_b² (2Ω²/Δ + ω) of the reduced equation.
    pub kappa: f64,
    /// Reduced energy E/(2Ω²/Δ + ω).
    pub e_red: f64,
    /// 2Ω²/Δ + ω (rad/µs).
    pub depth: f64,
    pub reduced: Reduced,
}

impl EffectiveProblem {
    /// Local coefficient √(κ/6) of the equation near x = 1.
    pub fn u_local(&self) -> f64 {
        (self.kappa / 6.0).sqrt()
    }

    pub fn f_omega(&self) -> f64 {
        self.reduced.f_of(self.omega_bar)
    }

    pub fn bracket(&self) -> f64 {
        self.reduced.bracket(self.omega_bar, self.k_bar)
    }

    /// Reduced problem without physical units (for tests and sweeps).
    pub fn reduced_only(red: Reduced, wb: f64, kb: f64, epsilon: f64) -> Result<Self> {
        check_window(&red, wb, kb)?;
        let (kappa, e_red) = red.kappa_eps(wb, kb);
        let f = red.f_of(wb);
        Ok(Self {
            mass: kappa / (red.rb_of(wb).powi(2) * (1.0 + wb)),
            energy: e_red * (1.0 + wb),
            rb: red.rb_of(wb),
            u: f / 6f64.sqrt() * ((1.0 - kb) / (1.0 + wb)).sqrt(),
            epsilon,
            omega_bar: wb,
            k_bar: kb,
            kappa,
            e_red,
            depth: 1.0 + wb,
            reduced: red,
        })
    }
}

fn check_window(red: &Reduced, wb: f64, kb: f64) -> Result<()> {
    if !(wb > -1.0) {
        return Err(Error::Domain(format!("ω̄ = {wb} ≤ −1: no resonance radius")));
    }
    if 1.0 - kb < red.rho.powi(3) {
        return Err(Error::Validity(format!("1 − K̄ = {} below (Ω/Δ)³ = {}", 1.0 - kb, red.rho.powi(3))));
    }
    if red.bracket(wb, kb) <= 0.0 {
        return Err(Error::Validity("non-positive effective mass".into()));
    }
    if red.ee_den(wb, kb) <= 0.0 {
        return Err(Error::Validity("photon-pair denominator 1 − K̄ + ω̄η² is not positive".into()));
    }
    Ok(())
}

/// r_b(ω) = (C6/(2Ω²/Δ + ω))^{1/6}.
pub fn blockade_radius(p: &PolaritonParams, omega: f64) -> Result<f64> {
    let d = p.omega_unit() + omega;
    if d <= 0.0 {
        return Err(Error::Domain(format!("2Ω²/Δ + ω = {d} ≤ 0")));
    }
    Ok((p.c6 / d).powf(1.0 / 6.0))
}

/// Regularized C6/(r⁶ − r_b⁶ + iε r_b⁶) in rad/µs.
pub fn effective_potential(prob: &EffectiveProblem, p: &PolaritonParams, omega: f64, r: f64) -> Result<Complex64> {
    let rb = blockade_radius(p, omega)?;
    let rb6 = rb.powi(6);
    Ok(Complex64::new(p.c6, 0.0) / Complex64::new(r.powi(6) - rb6, prob.epsilon * rb6))
}

/// Fills the relative problem at physical (ω, K).
pub fn effective_mass_energy(p: &PolaritonParams, omega: f64, big_k: f64) -> Result<EffectiveProblem> {
    effective_mass_energy_eps(p, omega, big_k, 1e-8)
}

pub fn effective_mass_energy_eps(p: &PolaritonParams, omega: f64, big_k: f64, epsilon: f64) -> Result<EffectiveProblem> {
    let np = NormalizedPoint::from_physical(p, omega, big_k);
    let red = p.reduced();
    let mut prob = EffectiveProblem::reduced_only(red, np.omega_bar, np.k_bar, epsilon)?;
    let rb = blockade_radius(p, omega)?;
    let depth = p.omega_unit() + omega;
    let br = red.bracket(np.omega_bar, np.k_bar);
    prob.mass = p.g.powi(4) / (2.0 * p.omega_c * p.omega_c * p.delta * p.c * p.c) * br / (1.0 + np.omega_bar).powi(2);
    prob.energy = prob.e_red * depth;
    prob.rb = rb;
    prob.depth = depth;
    prob.u = p.g * p.g * rb / (6f64.sqrt() * p.delta * p.c) * ((1.0 - np.k_bar) / (1.0 + np.omega_bar)).sqrt();
    Ok(prob)
}

/// True iff E < V_eff(0), i.e. the relative wavefunction is pushed out to ±r_b.
pub fn repulsive_core_predicate(p: &PolaritonParams, omega: f64, big_k: f64) -> Result<bool> {
    let prob = effective_mass_energy(p, omega, big_k)?;
    Ok(prob.e_red < -1.0)
}

/// Same predicate on the reduced groups.
pub fn repulsive_core_reduced(red: &Reduced, wb: f64, kb: f64) -> Result<bool> {
    check_window(red, wb, kb)?;
    Ok(red.kappa_eps(wb, kb).1 < -1.0)
}

/// Parses `{"value": v, "unit": "..."}` style tags into internal units.
pub fn to_internal(value: f64, unit: &str) -> Result<f64> {
    let two_pi = 2.0 * std::f64::consts::PI;
    Ok(match unit {
        "MHz_2pi" => value * two_pi,
        "kHz_2pi" => value * two_pi * 1e-3,
        "GHz_2pi" => value * two_pi * 1e3,
        "rad_per_us" => value,
        "um" => value,
        "mm" => value * 1e3,
        "um_per_us" => value,
        "m_per_s" => value,
        "MHz_2pi_um6" => value * two_pi,
        "us" => value,
        other => return Err(Error::Config(format!("unknown unit tag '{other}'"))),
    })
}
