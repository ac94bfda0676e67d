//! Scenario runners. Each builds an [`OutputSet`] in memory; nothing touches
//! the output directory until the whole scenario has succeeded.

use serde::Serialize;
use serde_json::json;

use rydcoul::propagator::{evolve, EvolutionConfig, Medium, TwoExcitationField};
use rydcoul::relsolver::{self, build_eigenbasis, build_eigenbasis_unchecked, decompose, Method, SolveOptions};
use rydcoul::wavepacket::{self, PeakTracker, VariationalSpec};
use rydcoul::{model, propagator, wkb, DimensionlessGroups, Error, Reduced, Result};

use crate::config::{
    DecomposeSpec, DispersionSpec, EvolveSpec, Kind, PotentialSpec, ScenarioConfig, TimeSpec, WkbSpec,
};
use crate::output::{num, OutputSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SnapshotFormat {
    #[default]
    Csv,
    JsonGz,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    pub snapshot_format: SnapshotFormat,
}

fn reduced(gr: &DimensionlessGroups) -> Reduced {
    Reduced::new(gr.eta, gr.f0, gr.rho)
}

/// Validates the scenario, then runs it.
pub fn run(cfg: &ScenarioConfig, opts: RunOptions) -> Result<OutputSet> {
    cfg.validate()?;
    let (groups, warnings) = cfg.params.groups()?;
    let mut out = OutputSet::new();
    let extra = match cfg.kind {
        Kind::Dispersion => run_dispersion(cfg.dispersion.as_ref().unwrap(), &groups, &mut out)?,
        Kind::Wkb => run_wkb(cfg.wkb.as_ref().unwrap(), &groups, &mut out)?,
        Kind::Decompose => run_decompose(cfg.decompose.as_ref().unwrap(), &groups, &mut out)?,
        Kind::Evolve => run_evolve(cfg, cfg.evolve.as_ref().unwrap(), &groups, opts, &mut out)?,
        Kind::Potential => run_potential(cfg.potential.as_ref().unwrap(), &groups, &mut out)?,
    };
    out.add_json(
        "scenario.json",
        &json!({
            "kind": cfg.kind.as_str(),
            "groups": groups,
            "warnings": warnings,
            "results": extra,
            "config": cfg,
        }),
    )?;
    Ok(out)
}

fn dispersion_rows(branches: &[relsolver::DispersionBranch]) -> Vec<Vec<String>> {
    branches
        .iter()
        .flat_map(|b| {
            b.samples
                .iter()
                .map(move |(k, w)| vec![num(*k), num(*w), b.n.to_string(), b.method.as_str().to_string()])
        })
        .collect()
}

fn run_dispersion(spec: &DispersionSpec, gr: &DimensionlessGroups, out: &mut OutputSet) -> Result<serde_json::Value> {
    let red = reduced(gr);
    let ks = spec.k_bar.to_vec()?;
    let opt = SolveOptions::default();
    let mut all = Vec::new();
    for m in &spec.methods {
        all.extend(relsolver::branches(&red, &ks, spec.n_max, *m, &opt));
    }
    let missing: Vec<_> = all
        .iter()
        .filter(|b| b.samples.len() < ks.len())
        .map(|b| json!({"n": b.n, "method": b.method.as_str(), "found": b.samples.len()}))
        .collect();
    let slopes: Vec<_> = all.iter().map(|b| json!({"n": b.n, "method": b.method.as_str(), "slope_sign": b.slope_sign()})).collect();
    out.add_csv("dispersion.csv", &["k_bar", "omega_bar", "n", "method"], &dispersion_rows(&all))?;
    Ok(json!({"incomplete_branches": missing, "slope_signs": slopes}))
}

fn run_wkb(spec: &WkbSpec, gr: &DimensionlessGroups, out: &mut OutputSet) -> Result<serde_json::Value> {
    let red = reduced(gr);
    let ks = spec.k_bar.to_vec()?;
    let mut rows = Vec::new();
    for n in 1..=spec.n_max {
        for &kb in &ks {
            if let Ok(s) = wkb::wkb_dispersion(&red, kb, n) {
                let variant = serde_json::to_value(s.variant).unwrap_or_default();
                rows.push(vec![
                    num(kb),
                    num(s.omega_bar),
                    n.to_string(),
                    Method::Wkb.as_str().into(),
                    num(s.phase_integral),
                    num(s.x0),
                    variant.as_str().unwrap_or("").into(),
                ]);
            }
            if let Ok(w) = wkb::closed_form_dispersion(&red, kb, n) {
                rows.push(vec![num(kb), num(w), n.to_string(), Method::ClosedForm.as_str().into(), String::new(), String::new(), String::new()]);
            }
        }
    }
    out.add_csv("wkb.csv", &["k_bar", "omega_bar", "n", "method", "phase_integral", "x0", "variant"], &rows)?;
    let vel: Vec<Vec<String>> = (1..=spec.n_max)
        .map(|n| {
            let full = wkb::wkb_slope(&red, spec.slope_at, n, 1e-4).map(num).unwrap_or_default();
            vec![n.to_string(), num(spec.slope_at), full, num(wkb::closed_form_slope(&red, spec.slope_at, n))]
        })
        .collect();
    out.add_csv("velocity.csv", &["n", "omega_bar", "slope_wkb", "slope_closed_form"], &vel)?;
    Ok(json!({"a_constant": wkb::a_constant()}))
}

#[derive(Serialize)]
struct BranchReport {
    n: usize,
    omega_n: f64,
    peak_omega: f64,
    fwhm: f64,
    spacing: Option<f64>,
    fwhm_over_spacing: Option<f64>,
    captured: f64,
}

fn run_decompose(spec: &DecomposeSpec, gr: &DimensionlessGroups, out: &mut OutputSet) -> Result<serde_json::Value> {
    let red = reduced(gr);
    let opt = SolveOptions { prescription: spec.prescription, ..SolveOptions::default() };
    let count = ((spec.omega_max - spec.omega_min) / spec.d_omega).round() as usize + 1;
    let grid: Vec<f64> = (0..count).map(|i| spec.omega_min + spec.d_omega * i as f64).collect();
    let basis = if spec.check_orthogonality {
        build_eigenbasis(&red, spec.k_bar, &grid, &opt)?
    } else {
        build_eigenbasis_unchecked(&red, spec.k_bar, &grid, &opt)?
    };
    let n_hi = spec.n.iter().copied().max().unwrap_or(1) + 1;
    let roots: Vec<Option<f64>> = (1..=n_hi).map(|n| relsolver::coulomb_dispersion(&red, spec.k_bar, n, &opt).ok()).collect();
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    let mut samples = Vec::new();
    for &n in &spec.n {
        let mut st = relsolver::coulomb_state(&red, spec.k_bar, n, &opt, 201)?;
        let d = decompose(&st, &basis);
        for (w, p) in d.omega_bar.iter().zip(&d.density) {
            rows.push(vec![num(spec.k_bar), num(*w), n.to_string(), num(*p)]);
        }
        let wn = st.omega_bar;
        let spacing = [n.checked_sub(2).and_then(|i| roots[i]), roots[n]]
            .iter()
            .flatten()
            .map(|w| (w - wn).abs())
            .fold(None, |m: Option<f64>, s| Some(m.map_or(s, |m| m.min(s))));
        reports.push(BranchReport {
            n,
            omega_n: wn,
            peak_omega: d.peak_omega,
            fwhm: d.fwhm,
            spacing,
            fwhm_over_spacing: spacing.map(|s| d.fwhm / s),
            captured: d.captured,
        });
        st.reconstruct_components();
        samples.push(json!({"n": n, "omega_bar": wn, "k_bar": spec.k_bar, "rb": st.rb, "c1": st.c1, "components": st.components}));
    }
    out.add_csv("decomposition.csv", &["k_bar", "omega_bar", "n", "density"], &rows)?;
    out.add_json(
        "decomposition.json",
        &json!({
            "k_bar": spec.k_bar,
            "d_omega": basis.d_omega,
            "prescription": spec.prescription,
            "max_leakage": basis.max_leakage,
            "branches": reports,
        }),
    )?;
    out.add_json("coulomb_states.json", &samples)?;
    Ok(json!({"max_leakage": basis.max_leakage}))
}

/// Everything the evolve runner needs, resolved and checked before any compute.
pub struct EvolvePlan {
    pub red: Reduced,
    pub medium: Medium,
    pub cfg: EvolutionConfig,
    pub n_grid: usize,
    pub h: f64,
    pub spec: VariationalSpec,
    pub track_r_max: f64,
    pub t_start: f64,
}

pub fn plan_evolve(scn: &ScenarioConfig, e: &EvolveSpec, gr: &DimensionlessGroups) -> Result<EvolvePlan> {
    let eta = gr.eta * e.zeta.sqrt();
    let red = Reduced::new(eta, gr.f0, gr.rho);
    let spec = VariationalSpec {
        n: e.initial.n,
        sigma: e.initial.sigma,
        omega_center: e.initial.omega_center,
        omega_window: e.initial.omega_window,
        nodes: e.initial.nodes,
        r_center: e.initial.r_center,
    };
    spec.validate()?;
    if e.zeta != 1.0 {
        // Checked at the closed-form momentum of the packet.
        let kb = wkb::closed_form_momentum(&red, spec.omega_center, spec.n);
        propagator::zeta_admissible(gr.eta, e.zeta, kb)?;
    }
    let mut medium = Medium::from_groups(eta, gr.f0, gr.rho, gr.gamma_bar, gr.gamma_r_bar);
    if let Some(v) = e.v_cap {
        medium.v_cap = v;
    }
    let h = 1.0 / e.cells_per_rb;
    let n_grid = (e.length / h).round() as usize;
    let t_final = match &e.t_final {
        TimeSpec::Reduced(t) => *t,
        TimeSpec::Tagged(q) => match q.unit.as_str() {
            "delta_over_omega_sq" => 2.0 * q.value,
            "l_over_vg" => q.value * e.length / medium.vg(),
            _ => q.value * scn.params.physical()?.omega_unit(),
        },
    };
    if !(t_final > 0.0) {
        return Err(Error::Config("t_final must be positive".into()));
    }
    let mut cfg = EvolutionConfig::cell_shift(&medium, h, t_final);
    cfg.zeta = e.zeta;
    cfg.cutoff_radius = e.cutoff_radius;
    cfg.snapshot_times = e.snapshots.iter().map(|f| f * t_final).collect();
    cfg.boundary = e.boundary;
    cfg.absorbing_width = e.absorbing_width;
    cfg.observe_every = e.observe_every;
    cfg.validate(&medium, h)?;
    let track_r_max = e.track.r_max.unwrap_or_else(|| red.rb_of(spec.omega_center));
    Ok(EvolvePlan { red, medium, cfg, n_grid, h, spec, track_r_max, t_start: e.track.transient_fraction * t_final })
}

fn snapshot_rows(f: &TwoExcitationField) -> Vec<Vec<String>> {
    let n = f.n;
    let mut rows = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let k = f.idx(i, j);
            let mut r = vec![num((i as f64 + 0.5) * f.h), num((j as f64 + 0.5) * f.h)];
            for c in f.components() {
                r.push(num(c[k].re));
                r.push(num(c[k].im));
            }
            rows.push(r);
        }
    }
    rows
}

fn run_evolve(
    scn: &ScenarioConfig,
    e: &EvolveSpec,
    gr: &DimensionlessGroups,
    opts: RunOptions,
    out: &mut OutputSet,
) -> Result<serde_json::Value> {
    let plan = plan_evolve(scn, e, gr)?;
    let init = wavepacket::variational_ss(&plan.spec, &plan.red, plan.n_grid, plan.h)?;
    let mut tracker = PeakTracker::new(plan.track_r_max, plan.t_start);
    let ev = evolve(init, plan.medium, plan.cfg.clone(), &mut [&mut tracker])?;

    let series: Vec<Vec<String>> = ev.series.iter().map(|s| vec![num(s.t), num(s.norm), num(s.discarded)]).collect();
    out.add_csv("series.csv", &["t", "norm", "discarded"], &series)?;
    let track: Vec<Vec<String>> = tracker.track.iter().map(|(t, r)| vec![num(*t), num(*r)]).collect();
    out.add_csv("track.csv", &["t", "r_peak"], &track)?;

    let vg = plan.medium.vg();
    let fit = wavepacket::extract_velocity(&tracker.track, e.track.fit_window).ok();
    let predicted = wkb::wkb_slope(&plan.red, plan.spec.omega_center, plan.spec.n, 1e-4).ok();
    let velocity = json!({
        "v_g": vg,
        "slope": fit.map(|f| f.slope),
        "slope_over_vg": fit.map(|f| f.slope / vg),
        "stderr_over_vg": fit.map(|f| f.stderr / vg),
        "nonlinear": fit.map(|f| f.nonlinear),
        "predicted_over_vg": predicted,
        "closed_form_over_vg": wkb::closed_form_slope(&plan.red, plan.spec.omega_center, plan.spec.n),
    });
    out.add_json("velocity.json", &velocity)?;

    let peaks: Vec<_> = ev
        .snapshots
        .iter()
        .map(|s| {
            let d = wavepacket::detect_double_peak(s, e.double_peak_range);
            json!({"t": s.t, "count": d.count(), "maxima": d.maxima, "dip_ratio": d.dip_ratio})
        })
        .collect();
    let predicate = model::repulsive_core_reduced(&plan.red, plan.spec.omega_center, wavepacket::branch_momentum(&plan.red, plan.spec.omega_center, plan.spec.n)?).ok();
    out.add_json("double_peak.json", &json!({"repulsive_core_predicate": predicate, "snapshots": peaks}))?;
    if let Some(last) = ev.snapshots.last() {
        let d = wavepacket::detect_double_peak(last, e.double_peak_range);
        let rows: Vec<Vec<String>> = d.marginal.iter().map(|(r, v)| vec![num(*r), num(*v)]).collect();
        out.add_csv("marginal.csv", &["r", "ee_marginal"], &rows)?;
    }

    for (k, s) in ev.snapshots.iter().enumerate() {
        match opts.snapshot_format {
            SnapshotFormat::Csv => out.add_csv(
                &format!("snapshot_{k:03}.csv"),
                &["z", "z_prime", "ee_re", "ee_im", "es_re", "es_im", "se_re", "se_im", "ss_re", "ss_im"],
                &snapshot_rows(s),
            )?,
            SnapshotFormat::JsonGz => out.add_json_gz(&format!("snapshot_{k:03}.json.gz"), s)?,
        }
    }
    Ok(json!({
        "eta_scaled": plan.red.eta,
        "grid_cells": plan.n_grid,
        "h": plan.h,
        "tau": plan.cfg.tau,
        "t_final": plan.cfg.t_final,
        "steps": plan.cfg.n_steps(),
        "velocity": velocity,
    }))
}

fn run_potential(spec: &PotentialSpec, gr: &DimensionlessGroups, out: &mut OutputSet) -> Result<serde_json::Value> {
    let red = reduced(gr);
    let prob = model::EffectiveProblem::reduced_only(red, spec.omega_bar, spec.k_bar, spec.epsilon)?;
    let rs = spec.r.to_vec()?;
    let rows: Vec<Vec<String>> = rs
        .iter()
        .map(|&r| {
            let x = r / prob.rb;
            let d = num_complex::Complex64::new(x.powi(6) - 1.0, spec.epsilon);
            let v = (1.0 + spec.omega_bar) / d;
            vec![num(r), num(x), num(v.re), num(v.im)]
        })
        .collect();
    out.add_csv("potential.csv", &["r", "x", "v_re", "v_im"], &rows)?;
    let core = model::repulsive_core_reduced(&red, spec.omega_bar, spec.k_bar)?;
    Ok(json!({
        "rb": prob.rb,
        "kappa": prob.kappa,
        "e_red": prob.e_red,
        "energy": prob.energy,
        "mass": prob.mass,
        "u": prob.u,
        "repulsive_core": core,
    }))
}
