//! Scenario files: one JSON document per run.
//!
//! Dimensional quantities carry explicit unit tags (`{"value": 30, "unit": "MHz_2pi"}`).
//! Plain numbers are read in the reduced units of the library: energy 2Ω²/Δ,
//! length r_b0, time Δ/2Ω².

use serde::{Deserialize, Serialize};

use rydcoul::model::{to_internal, C_LIGHT};
use rydcoul::propagator::Boundary;
use rydcoul::relsolver::{AlphaPrescription, Method};
use rydcoul::{DimensionlessGroups, Error, PolaritonParams, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Dispersion,
    #[serde(alias = "wkb_map")]
    Wkb,
    Decompose,
    Evolve,
    #[serde(alias = "potential_profile")]
    Potential,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::Dispersion => "dispersion",
            Kind::Wkb => "wkb",
            Kind::Decompose => "decompose",
            Kind::Evolve => "evolve",
            Kind::Potential => "potential",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Quantity {
    pub value: f64,
    pub unit: String,
}

impl Quantity {
    pub fn internal(&self) -> Result<f64> {
        to_internal(self.value, &self.unit)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ParamsSpec {
    Groups {
        /// Ω/g
        eta: f64,
        /// g²r_b0/(cΔ)
        f0: f64,
        /// Ω/Δ
        rho: f64,
        #[serde(default)]
        gamma_over_delta: f64,
        #[serde(default)]
        gamma_r_over_delta: f64,
    },
    Physical {
        g: Quantity,
        omega_c: Quantity,
        delta: Quantity,
        #[serde(default)]
        gamma: Option<Quantity>,
        #[serde(default)]
        gamma_r: Option<Quantity>,
        /// Either C6 or the blockade radius r_b0 must be given.
        #[serde(default)]
        c6: Option<Quantity>,
        #[serde(default)]
        rb: Option<Quantity>,
        #[serde(default)]
        c: Option<Quantity>,
    },
}

impl ParamsSpec {
    /// Dimensionless groups of the medium; physical entries are validated on the way.
    pub fn groups(&self) -> Result<(DimensionlessGroups, Vec<String>)> {
        match self {
            ParamsSpec::Groups { eta, f0, rho, gamma_over_delta, gamma_r_over_delta } => {
                let gr = DimensionlessGroups {
                    eta: *eta,
                    f0: *f0,
                    rho: *rho,
                    gamma_bar: *gamma_over_delta,
                    gamma_r_bar: *gamma_r_over_delta,
                };
                // Δ and c only set the scale; any positive values give the same groups.
                let p = PolaritonParams::from_groups(gr, 1.0, 1.0)?;
                Ok((gr, p.warnings()))
            }
            ParamsSpec::Physical { .. } => {
                let p = self.physical()?;
                Ok((p.groups(), p.warnings()))
            }
        }
    }

    pub fn physical(&self) -> Result<PolaritonParams> {
        match self {
            ParamsSpec::Physical { g, omega_c, delta, gamma, gamma_r, c6, rb, c } => {
                let opt = |q: &Option<Quantity>| q.as_ref().map(|q| q.internal()).transpose();
                let (g, om, de) = (g.internal()?, omega_c.internal()?, delta.internal()?);
                let c = opt(c)?.unwrap_or(C_LIGHT);
                let c6 = match (opt(c6)?, opt(rb)?) {
                    (Some(v), None) => v,
                    (None, Some(r)) => r.powi(6) * 2.0 * om * om / de,
                    _ => return Err(Error::Config("physical parameters need exactly one of c6 and rb".into())),
                };
                PolaritonParams::new(g, om, de, opt(gamma)?.unwrap_or(0.0), opt(gamma_r)?.unwrap_or(0.0), c6, c)
            }
            ParamsSpec::Groups { .. } => Err(Error::Config("no physical parameters in group mode".into())),
        }
    }
}

/// A list of values or an inclusive linear range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Values {
    List(Vec<f64>),
    Range { start: f64, stop: f64, count: usize },
}

impl Values {
    pub fn to_vec(&self) -> Result<Vec<f64>> {
        let v = match self {
            Values::List(v) => v.clone(),
            Values::Range { start, stop, count } => match count {
                0 => Vec::new(),
                1 => vec![*start],
                _ => (0..*count).map(|i| start + (stop - start) * i as f64 / (*count - 1) as f64).collect(),
            },
        };
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("value list is empty or not finite".into()));
        }
        Ok(v)
    }
}

fn default_n_max() -> usize {
    4
}

fn default_methods() -> Vec<Method> {
    vec![Method::Exact, Method::Wkb]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionSpec {
    pub k_bar: Values,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WkbSpec {
    pub k_bar: Values,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    /// ω̄ at which branch slopes dω̄/dK̄ are reported.
    #[serde(default)]
    pub slope_at: f64,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposeSpec {
    pub k_bar: f64,
    pub n: Vec<usize>,
    pub omega_min: f64,
    pub omega_max: f64,
    pub d_omega: f64,
    #[serde(default)]
    pub prescription: AlphaPrescription,
    /// Fail when neighbouring basis states leak above 10%.
    #[serde(default = "yes")]
    pub check_orthogonality: bool,
}

/// A time in reduced units or with a unit tag: "us", "delta_over_omega_sq"
/// (Δ/Ω²) or "l_over_vg" (medium length over v_g).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeSpec {
    Reduced(f64),
    Tagged(Quantity),
}

fn default_sigma() -> f64 {
    // Ω²/2Δ in units of 2Ω²/Δ
    0.25
}

fn default_nodes() -> usize {
    64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub n: usize,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub omega_center: f64,
    #[serde(default)]
    pub omega_window: Option<f64>,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    /// Centre-of-mass position in units of r_b0.
    pub r_center: f64,
}

fn default_transient() -> f64 {
    0.1
}

fn default_fit_window() -> (f64, f64) {
    (0.0, 1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackSpec {
    #[serde(default = "default_transient")]
    pub transient_fraction: f64,
    /// Fractions of the post-transient track used by the velocity fit.
    #[serde(default = "default_fit_window")]
    pub fit_window: (f64, f64),
    /// Rows |z − z′| below this enter the peak average; defaults to r_b(ω_c).
    #[serde(default)]
    pub r_max: Option<f64>,
}

impl Default for TrackSpec {
    fn default() -> Self {
        Self { transient_fraction: default_transient(), fit_window: default_fit_window(), r_max: None }
    }
}

fn default_snapshots() -> Vec<f64> {
    vec![0.25, 0.5, 1.0]
}

fn default_observe_every() -> usize {
    20
}

fn default_zeta() -> f64 {
    1.0
}

fn default_boundary() -> Boundary {
    Boundary::Open
}

fn default_double_peak_range() -> f64 {
    2.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSpec {
    /// Medium length in units of r_b0.
    pub length: f64,
    pub cells_per_rb: f64,
    pub t_final: TimeSpec,
    #[serde(default = "default_zeta")]
    pub zeta: f64,
    /// Cutoff on |z − z′| in units of r_b0.
    #[serde(default)]
    pub cutoff_radius: Option<f64>,
    /// Snapshot times as fractions of t_final.
    #[serde(default = "default_snapshots")]
    pub snapshots: Vec<f64>,
    #[serde(default = "default_boundary")]
    pub boundary: Boundary,
    #[serde(default)]
    pub absorbing_width: Option<f64>,
    #[serde(default = "default_observe_every")]
    pub observe_every: usize,
    pub initial: InitialSpec,
    #[serde(default)]
    pub track: TrackSpec,
    /// Half-range of the relative-coordinate marginal, units of r_b0.
    #[serde(default = "default_double_peak_range")]
    pub double_peak_range: f64,
    /// Override of the potential cap near z = z′ (units of 2Ω²/Δ).
    #[serde(default)]
    pub v_cap: Option<f64>,
}

fn default_epsilon() -> f64 {
    1e-8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub omega_bar: f64,
    pub k_bar: f64,
    /// Relative distances in units of r_b0.
    pub r: Values,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: Kind,
    pub params: ParamsSpec,
    #[serde(default)]
    pub dispersion: Option<DispersionSpec>,
    #[serde(default)]
    pub wkb: Option<WkbSpec>,
    #[serde(default)]
    pub decompose: Option<DecomposeSpec>,
    #[serde(default)]
    pub evolve: Option<EvolveSpec>,
    #[serde(default)]
    pub potential: Option<PotentialSpec>,
}

fn need<'a, T>(v: &'a Option<T>, kind: Kind) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| Error::Config(format!("kind '{}' needs a '{}' section", kind.as_str(), kind.as_str())))
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive, got {v}")))
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("malformed scenario: {e}")))
    }

    /// Checks every section the chosen kind uses before anything is computed.
    pub fn validate(&self) -> Result<()> {
        self.params.groups()?;
        match self.kind {
            Kind::Dispersion => {
                let d = need(&self.dispersion, self.kind)?;
                d.k_bar.to_vec()?;
                if d.n_max == 0 || d.methods.is_empty() {
                    return Err(Error::Config("dispersion needs n_max ≥ 1 and at least one method".into()));
                }
            }
            Kind::Wkb => {
                let w = need(&self.wkb, self.kind)?;
                w.k_bar.to_vec()?;
                if w.n_max == 0 || w.slope_at <= -1.0 {
                    return Err(Error::Config("wkb needs n_max ≥ 1 and slope_at > −1".into()));
                }
            }
            Kind::Decompose => {
                let d = need(&self.decompose, self.kind)?;
                positive("d_omega", d.d_omega)?;
                if d.n.is_empty() || d.n.contains(&0) {
                    return Err(Error::Config("decompose needs branch indices ≥ 1".into()));
                }
                if !(d.omega_min > -1.0 && d.omega_max > d.omega_min) {
                    return Err(Error::Config("decompose window must satisfy −1 < omega_min < omega_max".into()));
                }
                if (d.omega_max - d.omega_min) / d.d_omega > 20_000.0 {
                    return Err(Error::Config("decompose grid exceeds 20000 points".into()));
                }
            }
            Kind::Evolve => {
                let e = need(&self.evolve, self.kind)?;
                positive("length", e.length)?;
                positive("cells_per_rb", e.cells_per_rb)?;
                positive("zeta", e.zeta)?;
                if e.initial.n == 0 || !(e.initial.sigma > 0.0) || e.initial.nodes < 2 {
                    return Err(Error::Config("initial state needs n ≥ 1, σ > 0 and ≥ 2 nodes".into()));
                }
                if !(e.initial.r_center > 0.0 && e.initial.r_center < e.length) {
                    return Err(Error::Config("initial r_center must lie inside the medium".into()));
                }
                if e.snapshots.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
                    return Err(Error::Config("snapshot fractions must lie in (0, 1]".into()));
                }
                let (a, b) = e.track.fit_window;
                if !(0.0..1.0).contains(&e.track.transient_fraction) || !(0.0 <= a && a < b && b <= 1.0) {
                    return Err(Error::Config("track fractions must lie in [0, 1] with a < b".into()));
                }
                if let Some(rc) = e.cutoff_radius {
                    positive("cutoff_radius", rc)?;
                }
                if let TimeSpec::Tagged(q) = &e.t_final {
                    if !matches!(q.unit.as_str(), "us" | "delta_over_omega_sq" | "l_over_vg") {
                        return Err(Error::Config(format!("unknown time unit '{}'", q.unit)));
                    }
                    if q.unit == "us" && matches!(self.params, ParamsSpec::Groups { .. }) {
                        return Err(Error::Config("times in µs need physical parameters".into()));
                    }
                }
                if (e.length * e.cells_per_rb).round() < 8.0 {
                    return Err(Error::Config("evolution grid needs at least 8 cells".into()));
                }
            }
            Kind::Potential => {
                let p = need(&self.potential, self.kind)?;
                p.r.to_vec()?;
                positive("epsilon", p.epsilon)?;
            }
        }
        Ok(())
    }
}
