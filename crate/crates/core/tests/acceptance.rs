//! Acceptance report: one PASS/FAIL line per criterion. Always exits 0; the
//! lines are the result.

use num_complex::Complex64;

use rydcoul::model::{self, C_LIGHT};
use rydcoul::propagator::{evolve, Boundary, Evolution, EvolutionConfig, KineticMode, Medium, Propagator, TaylorOracle, TwoExcitationField};
use rydcoul::relsolver::{self, basis, FnState, Local, SolveOptions};
use rydcoul::wavepacket::{self, PeakTracker, VariationalSpec};
use rydcoul::{wkb, PolaritonParams, Reduced};

const A1_TOL: f64 = 0.05;
const A2_FWHM_RATIO: f64 = 0.2;
const A2_CAPTURE_TOL: f64 = 0.02;
const A3_TOL: f64 = 0.10;
const A4_DIP: f64 = 0.8;
const A4_RANGE: f64 = 2.0;
const A5_TOL: f64 = 1e-10;
const A7_SLOPE_TOL: f64 = 0.2;
const A7_NORM_TOL: f64 = 1e-10;
const A7_CUTOFF_TOL: f64 = 0.01;
const A8_QUOTED: f64 = 0.014;
const A8_TOL: f64 = 0.01;

fn report(id: &str, pass: bool, detail: String) {
    println!("{id} {} {detail}", if pass { "PASS" } else { "FAIL" });
}

fn opt() -> SolveOptions {
    SolveOptions::default()
}

fn a1() {
    let red = Reduced::new(0.05, 40.0, 0.01);
    let dev = |kb: f64, n: usize| -> Option<f64> {
        let w = relsolver::coulomb_dispersion(&red, kb, n, &opt()).ok()?;
        let k = wkb::wkb_dispersion(&red, kb, n).ok()?.omega_bar;
        Some(((1.0 + k) / (1.0 + w) - 1.0).abs())
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for n in 1..=4 {
        let d: Vec<Option<f64>> = [0.95, 0.98, 0.995].iter().map(|&k| dev(k, n)).collect();
        let fmt = |v: Option<f64>| v.map_or("none".to_string(), |x| format!("{:.2}%", 100.0 * x));
        match (d[1], d[2]) {
            (Some(mid), Some(hi)) => pass &= mid < A1_TOL && hi < mid,
            _ => pass = false,
        }
        parts.push(format!("n={n}:[{},{},{}]", fmt(d[0]), fmt(d[1]), fmt(d[2])));
    }
    report("A1", pass, format!("|Δ(1+ω̄)|/(1+ω̄) at K̄=0.95,0.98,0.995 {}", parts.join(" ")));
}

fn a2() {
    let red = Reduced::new(0.01, 40.0, 0.01);
    let kb = 0.95;
    let roots: Vec<f64> = (1..=4).map(|n| relsolver::coulomb_dispersion(&red, kb, n, &opt()).unwrap()).collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for n in 1..=3 {
        let wn = roots[n - 1];
        let spacing = [n.checked_sub(2).map(|i| roots[i]), Some(roots[n])]
            .iter()
            .flatten()
            .map(|w| (w - wn).abs())
            .fold(f64::INFINITY, f64::min);
        let half = (0.35 * spacing).min(0.05);
        let dw = half / 20.0;
        let m = (2.0 * half / dw).round() as usize;
        let grid: Vec<f64> = (0..=m).map(|i| wn - half + 2.0 * half * i as f64 / m as f64).collect();
        let b = match relsolver::build_eigenbasis_unchecked(&red, kb, &grid, &opt()) {
            Ok(b) => b,
            Err(e) => {
                pass = false;
                parts.push(format!("n={n}: basis failed ({e})"));
                continue;
            }
        };
        let c = relsolver::coulomb_state(&red, kb, n, &opt(), 2).unwrap();
        let d = basis::decompose(&c, &b);
        let ratio = d.fwhm / spacing;
        pass &= ratio < A2_FWHM_RATIO && (d.captured - 1.0).abs() < A2_CAPTURE_TOL;
        parts.push(format!("n={n}: FWHM/spacing={ratio:.3} captured(±{half:.3})={:.3}", d.captured));
    }
    report("A2", pass, parts.join("; "));
}

struct Run {
    red: Reduced,
    medium: Medium,
    evo: Evolution,
    track: Vec<(f64, f64)>,
    spec: VariationalSpec,
}

struct RunSpec {
    eta: f64,
    f0: f64,
    rho: f64,
    gamma: f64,
    gamma_r: f64,
    length: f64,
    cells_per_rb: f64,
    t_final: f64,
    snapshots: Vec<f64>,
    spec: VariationalSpec,
    cutoff: f64,
}

fn run(s: &RunSpec, t_final_in_l_over_vg: bool) -> Run {
    let red = Reduced::new(s.eta, s.f0, s.rho);
    let medium = Medium::from_groups(s.eta, s.f0, s.rho, s.gamma, s.gamma_r);
    let h = 1.0 / s.cells_per_rb;
    let n_grid = (s.length / h).round() as usize;
    let tf = if t_final_in_l_over_vg { s.t_final * s.length / medium.vg() } else { s.t_final };
    let mut cfg = EvolutionConfig::cell_shift(&medium, h, tf);
    cfg.cutoff_radius = Some(s.cutoff);
    cfg.snapshot_times = s.snapshots.iter().map(|f| f * tf).collect();
    cfg.observe_every = 20;
    let init = wavepacket::variational_ss(&s.spec, &red, n_grid, h).unwrap();
    let mut tracker = PeakTracker::new(red.rb_of(s.spec.omega_center), 0.1 * tf);
    let evo = evolve(init, medium, cfg, &mut [&mut tracker]).unwrap();
    Run { red, medium, evo, track: tracker.track, spec: s.spec.clone() }
}

fn group_velocity_spec(n: usize) -> RunSpec {
    RunSpec {
        eta: 0.05,
        f0: 40.0,
        rho: 0.25,
        gamma: 0.05,
        gamma_r: 0.01,
        length: 14.0,
        cells_per_rb: 60.0,
        t_final: 0.006,
        snapshots: vec![0.25, 0.5, 0.75, 1.0],
        spec: VariationalSpec::new(n, 0.25, 0.0, 10.0),
        cutoff: 3.0,
    }
}

fn a3() {
    let mut pass = true;
    let mut parts = Vec::new();
    for n in 1..=3 {
        let r = run(&group_velocity_spec(n), true);
        let fit = wavepacket::extract_velocity(&r.track, (0.0, 1.0));
        let predicted = wkb::wkb_slope(&r.red, r.spec.omega_center, n, 1e-4);
        match (fit, predicted) {
            (Ok(f), Ok(p)) => {
                let v = f.slope / r.medium.vg();
                let rel = (v / p - 1.0).abs();
                pass &= rel < A3_TOL;
                parts.push(format!("n={n}: v/v_g={v:.2}±{:.2} predicted={p:.2} ({:.0}%)", f.stderr / r.medium.vg(), 100.0 * rel));
            }
            (f, p) => {
                pass = false;
                parts.push(format!("n={n}: fit={:?} predicted={:?}", f.map(|f| f.slope), p));
            }
        }
    }
    report("A3", pass, parts.join("; "));
}

fn repulsive_core_spec(cutoff: f64) -> RunSpec {
    RunSpec {
        eta: 0.05,
        f0: 40.0,
        rho: 0.25,
        gamma: 0.05,
        gamma_r: 0.01,
        length: 8.0,
        cells_per_rb: 30.0,
        t_final: 0.003,
        snapshots: vec![0.5, 1.0],
        spec: VariationalSpec::new(1, 0.1, -0.4527, 4.0),
        cutoff,
    }
}

fn lab_params() -> PolaritonParams {
    let mhz = 2.0 * std::f64::consts::PI;
    let (g, omega, delta) = (17e3 * mhz, 1.5 * mhz, 30.0 * mhz);
    let c6 = 2.0 * omega * omega / delta * 25f64.powi(6);
    PolaritonParams::new(g, omega, delta, 3.0 * mhz, 0.1 * mhz, c6, C_LIGHT).unwrap()
}

fn predicate(r: &Run) -> bool {
    let kb = wavepacket::branch_momentum(&r.red, r.spec.omega_center, r.spec.n).unwrap();
    model::repulsive_core_reduced(&r.red, r.spec.omega_center, kb).unwrap()
}

fn a4(s1: &Run) {
    let mid = wavepacket::detect_double_peak(&s1.evo.snapshots[0], A4_RANGE);
    let per_side = mid.maxima.iter().filter(|m| **m > 0.0).count() == 1 && mid.maxima.iter().filter(|m| **m < 0.0).count() == 1;
    let s1_ok = per_side && mid.dip_ratio < A4_DIP;
    let s1_pred = predicate(s1);

    let gr = lab_params().groups();
    let zeta: f64 = 1.2e7;
    let lab = run(
        &RunSpec {
            eta: gr.eta * zeta.sqrt(),
            f0: gr.f0,
            rho: gr.rho,
            gamma: gr.gamma_bar,
            gamma_r: gr.gamma_r_bar,
            length: 16.0,
            cells_per_rb: 20.0,
            t_final: 20.0,
            snapshots: vec![0.25, 0.5, 1.0],
            spec: VariationalSpec::new(1, 0.25, 0.0, 10.0),
            cutoff: 3.0,
        },
        false,
    );
    let single = |k: usize| {
        let d = wavepacket::detect_double_peak(&lab.evo.snapshots[k], A4_RANGE);
        d.maxima.len() == 1 && d.maxima[0].abs() <= lab.evo.snapshots[k].h
    };
    let lab_ok = single(0) || single(2);
    let lab_pred = predicate(&lab);
    let pass = s1_ok && lab_ok && s1_pred == s1_ok && lab_pred == !lab_ok;
    report(
        "A4",
        pass,
        format!(
            "repulsive-core run maxima={:?} dip={:.3} predicate={s1_pred}; scaled-lab single max at r=0 (t_f/4 or t_f)={lab_ok} predicate={lab_pred}",
            mid.maxima.iter().map(|m| (m * 1e3).round() / 1e3).collect::<Vec<_>>(),
            mid.dip_ratio
        ),
    );
}

fn a5() {
    let support = 2.0;
    let bump = |r: f64| (-(r - 0.7).powi(2) / 0.02).exp();
    let ss = FnState { f: move |r: f64| Local { ss: bump(r), ..Default::default() }, support };
    let ee = FnState { f: move |r: f64| Local { ee: bump(r), ..Default::default() }, support };
    let es = FnState { f: move |r: f64| Local { psi: bump(r), ..Default::default() }, support };
    let pure = [basis::hf_group_velocity(&ss), basis::hf_group_velocity(&ee), basis::hf_group_velocity(&es)];
    let pure_ok = pure[0].abs() < A5_TOL && (pure[1] - 1.0).abs() < A5_TOL && (pure[2] - 0.5).abs() < A5_TOL;
    let red = Reduced::new(0.05, 40.0, 0.01);
    let grid: Vec<f64> = (0..=60).map(|i| -0.6 + 0.01 * i as f64).collect();
    let b = relsolver::build_eigenbasis_unchecked(&red, 0.98, &grid, &opt()).unwrap();
    let v = b.hf_velocities();
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pass = pure_ok && lo >= -A5_TOL && hi <= 1.0 + A5_TOL;
    report("A5", pass, format!("pure SS/EE/ES = {:.3}/{:.3}/{:.3}; basis v_hf in [{lo:.4}, {hi:.4}]", pure[0], pure[1], pure[2]));
}

fn a6() {
    let band = |f0: f64| {
        let red = Reduced::new(0.05, f0, 0.01);
        let (mut a2, mut p2) = (0.0, 0.0);
        let m = 200;
        for i in 0..m {
            let wb = -0.6 + 0.6 * i as f64 / (m - 1) as f64;
            let st = relsolver::eigenstate(&red, wb, 0.95, &opt(), 2).unwrap();
            let s = st.solution();
            let k = 2000;
            let w: f64 = (0..k).map(|j| s.eval((j as f64 + 0.5) / k as f64 * 0.999).0.powi(2)).sum::<f64>() / k as f64;
            a2 += st.alpha.norm_sqr() / w;
            p2 += s.psi_at_pole().powi(2) / w;
        }
        ((a2 / m as f64).sqrt(), (p2 / m as f64).sqrt())
    };
    let f0s = [20.0, 40.0, 80.0, 160.0];
    let v: Vec<(f64, f64)> = f0s.iter().map(|&f| band(f)).collect();
    let pass = v.windows(2).all(|w| w[1].0 < w[0].0 && w[1].1 < w[0].1);
    let fmt: Vec<String> = f0s.iter().zip(&v).map(|(f, (a, p))| format!("F0={f}: |α|={a:.3} |ψ(r_b)|={p:.3}")).collect();
    report("A6", pass, format!("band RMS over ω̄∈[−0.6,0] at K̄=0.95: {}", fmt.join(", ")));
}

fn a7(s1: &Run) {
    // splitting order against the Taylor reference
    let mut m = Medium::from_groups(0.3, 2.0, 0.25, 0.0, 0.0);
    m.v_cap = 20.0;
    let (n, l) = (64, 4.0);
    let h = l / n as f64;
    let mut f0 = TwoExcitationField::zeros(n, h);
    for i in 0..n {
        for j in 0..n {
            let (z, zp) = (i as f64 * h - 2.0, j as f64 * h - 2.0);
            let g = (-(z * z + zp * zp) / 0.5).exp();
            let k = f0.idx(i, j);
            f0.ss[k] = Complex64::new(g, 0.0);
            f0.ee[k] = Complex64::new(0.3 * g, 0.1 * g);
            f0.es[k] = Complex64::new(0.2 * (-((z - 0.3).powi(2) + zp * zp) / 0.5).exp(), 0.0);
            f0.se[k] = Complex64::new(0.2 * (-((zp - 0.3).powi(2) + z * z) / 0.5).exp(), 0.0);
        }
    }
    let tf = 0.4;
    let reference = TaylorOracle::new(m, n, h).evolve(&f0, tf);
    let errs: Vec<f64> = (0..4)
        .map(|k| {
            let cfg = EvolutionConfig {
                tau: 0.02 / 2f64.powi(k),
                t_final: tf,
                zeta: 1.0,
                cutoff_radius: None,
                snapshot_times: vec![],
                kinetic: KineticMode::Spectral,
                boundary: Boundary::Periodic,
                absorbing_width: None,
                observe_every: 1000,
            };
            evolve(f0.clone(), m, cfg, &mut []).unwrap().field.distance(&reference)
        })
        .collect();
    let x: Vec<f64> = (0..4).map(|k| -(k as f64) * 2f64.ln()).collect();
    let y: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let (slope, ..) = rydcoul::numerics::linear_fit(&x, &y);

    // norm per step without decay
    let mut cfg = EvolutionConfig::cell_shift(&m, h, 1.0);
    cfg.boundary = Boundary::Periodic;
    let p = Propagator::new(m, cfg, n, h).unwrap();
    let mut f = f0.clone();
    let mut worst: f64 = 0.0;
    let mut prev = f.norm_sqr();
    for _ in 0..50 {
        p.step(&mut f);
        let now = f.norm_sqr();
        worst = worst.max((now / prev - 1.0).abs());
        prev = now;
    }

    // cutoff 3 vs 6 on the EE relative marginal at t_f/2
    let wide = run(&repulsive_core_spec(6.0), true);
    let ma = wavepacket::detect_double_peak(&s1.evo.snapshots[0], A4_RANGE).marginal;
    let mb = wavepacket::detect_double_peak(&wide.evo.snapshots[0], A4_RANGE).marginal;
    let num: f64 = ma.iter().zip(&mb).map(|(a, b)| (a.1 - b.1).powi(2)).sum();
    let den: f64 = mb.iter().map(|b| b.1 * b.1).sum();
    let cut = (num / den).sqrt();

    let pass = (slope - 2.0).abs() < A7_SLOPE_TOL && worst < A7_NORM_TOL && cut < A7_CUTOFF_TOL;
    report("A7", pass, format!("splitting order={slope:.3}; max |Δnorm|/step={worst:.1e}; cutoff 3 vs 6 marginal gap={:.2}%", 100.0 * cut));
}

fn a8() {
    let a = wkb::a_constant();
    let rel = (a / A8_QUOTED - 1.0).abs();
    report("A8", rel < A8_TOL, format!("A={a:.6} vs quoted {A8_QUOTED} ({:.1}%); (3/4)A={:.5}", 100.0 * rel, 0.75 * a));
}

fn main() {
    a1();
    a2();
    a3();
    let s1 = run(&repulsive_core_spec(3.0), true);
    a4(&s1);
    a5();
    a6();
    a7(&s1);
    a8();
}
