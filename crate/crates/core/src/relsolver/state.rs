//! Eigenstates and their four-component reconstruction.
//!
//! Components in the relative coordinate r (units of r_b0), with ψ = ES₊:
//!
//! * EE  = −η/(1 − K̄ + ω̄η²) · ψ
//! * ES₋ = −i/(F(ω)·(1 − K̄ + η²(1+2ω̄))) · ∂ₓψ
//! * SS  = −1/(η(1+ω̄)) · ψ · x⁶/(x⁶ − 1)  (principal value) + α δ(r − r_b)
//!
//! where ES± = (ES ± SE)/2. The norm is ∫ dr over the real line of
//! ½|EE|² + |ES₊|² + |ES₋|² + ½|SS|².

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::solve::{AlphaPrescription, RadialSolution};

/// Local values of (EE, ES₊, m, SS) with ES₋ = −i·m.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Local {
    pub ee: f64,
    pub psi: f64,
    pub m: f64,
    pub ss: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampledComponents {
    pub r: Vec<f64>,
    pub ee: Vec<f64>,
    pub es_plus: Vec<f64>,
    /// Imaginary part of ES₋ (the real part vanishes).
    pub es_minus_im: Vec<f64>,
    pub ss_regular: Vec<f64>,
}

/// A solved relative eigenstate (continuum member or Coulomb state).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RelativeEigenstate {
    pub omega_bar: f64,
    pub k_bar: f64,
    pub c1: f64,
    pub c2: f64,
    pub d1: f64,
    pub alpha: Complex64,
    /// Pole strength of SS: SS ≈ β/(r − r_b).
    pub beta: f64,
    /// r_b(ω)/r_b0.
    pub rb: f64,
    /// True when the delta part and the exterior are dropped (ψ(r_b) = 0 state).
    pub coulomb: bool,
    pub r_grid: Vec<f64>,
    pub psi: Vec<Complex64>,
    pub components: Option<SampledComponents>,
    #[serde(skip)]
    pub(crate) solution: Option<RadialSolution>,
}

impl RelativeEigenstate {
    pub fn from_solution(sol: RadialSolution, prescription: AlphaPrescription, coulomb: bool, samples: usize) -> Self {
        let p = &sol.prob;
        let red = p.reduced;
        let rb = red.rb_of(p.omega_bar);
        let f = red.f_of(p.omega_bar);
        let pref = -rb / (red.eta * f * f * p.bracket());
        let jump = sol.conn.c1 + sol.conn.d1;
        let alpha = match (coulomb, prescription) {
            (true, _) => Complex64::new(0.0, 0.0),
            (false, AlphaPrescription::PrincipalValue) => Complex64::new(pref * jump, 0.0),
            (false, AlphaPrescription::Causal) => Complex64::new(pref * jump, -std::f64::consts::PI * pref * sol.conn.c2),
        };
        let beta = if coulomb { 0.0 } else { pref * sol.conn.c2 };
        let r_max = if coulomb { rb } else { sol.x_max * rb };
        let r_grid: Vec<f64> = (0..samples).map(|i| r_max * i as f64 / (samples - 1).max(1) as f64).collect();
        let mut st = Self {
            omega_bar: p.omega_bar,
            k_bar: p.k_bar,
            c1: sol.conn.c1,
            c2: sol.conn.c2,
            d1: sol.conn.d1,
            alpha,
            beta,
            rb,
            coulomb,
            r_grid,
            psi: Vec::new(),
            components: None,
            solution: Some(sol),
        };
        st.psi = st.r_grid.iter().map(|&r| Complex64::new(st.local(r).psi, 0.0)).collect();
        st
    }

    pub fn solution(&self) -> &RadialSolution {
        self.solution.as_ref().expect("state carries its solution")
    }

    /// Coefficients (EE/ψ, ES₋ scale, SS/ψ scale).
    fn coeffs(&self) -> (f64, f64, f64) {
        let p = &self.solution().prob;
        let red = p.reduced;
        (
            -red.eta / red.ee_den(p.omega_bar, p.k_bar),
            1.0 / (red.f_of(p.omega_bar) * p.bracket()),
            -1.0 / (red.eta * (1.0 + p.omega_bar)),
        )
    }

    /// Components at r ≥ 0 (units of r_b0); SS excludes the delta part.
    pub fn local(&self, r: f64) -> Local {
        let x = r / self.rb;
        if self.coulomb && x >= 1.0 {
            return Local::default();
        }
        let (psi, dpsi) = self.solution().eval(x);
        let (cee, cm, css) = self.coeffs();
        let x6 = x.powi(6);
        Local { ee: cee * psi, psi, m: cm * dpsi, ss: css * psi * x6 / (x6 - 1.0) }
    }

    /// s̃(r) = SS(r)·(r − r_b), finite at the pole.
    pub fn ss_times_distance(&self, r: f64) -> f64 {
        let x = r / self.rb;
        if (x - 1.0).abs() < 1e-12 {
            return self.beta;
        }
        self.local(r).ss * (r - self.rb)
    }

    /// Energy normalization N(ω) = (|α|² + π²β²)/|dr_b/dω̄|.
    pub fn energy_norm(&self) -> f64 {
        let red = self.solution().prob.reduced;
        (self.alpha.norm_sqr() + (std::f64::consts::PI * self.beta).powi(2)) / red.drb_dwb(self.omega_bar).abs()
    }

    /// Fills the sampled components on `r_grid`.
    pub fn reconstruct_components(&mut self) -> &SampledComponents {
        let mut c = SampledComponents {
            r: self.r_grid.clone(),
            ee: Vec::new(),
            es_plus: Vec::new(),
            es_minus_im: Vec::new(),
            ss_regular: Vec::new(),
        };
        for &r in &self.r_grid {
            let l = self.local(r);
            c.ee.push(l.ee);
            c.es_plus.push(l.psi);
            c.es_minus_im.push(-l.m);
            c.ss_regular.push(if (r - self.rb).abs() < 1e-12 { f64::NAN } else { l.ss });
        }
        self.components = Some(c);
        self.components.as_ref().unwrap()
    }

    /// Outer edge of the support used in overlaps.
    pub fn support(&self) -> f64 {
        if self.coulomb {
            self.rb
        } else {
            self.solution().x_max * self.rb
        }
    }
}
