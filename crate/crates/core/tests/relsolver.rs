use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use proptest::prelude::*;

use rydcoul::numerics::{ode, roots};
use rydcoul::oracle;
use rydcoul::relsolver::{self, basis, AlphaPrescription, FnState, Local, RadialSolution, SolveOptions};
use rydcoul::{wkb, Reduced};

fn base_regime() -> Reduced {
    Reduced::new(0.05, 40.0, 0.01)
}

fn opt() -> SolveOptions {
    SolveOptions::default()
}

#[test]
fn free_even_solution_is_cosine() {
    let k = 7.3;
    let nodes = relsolver::inside_nodes(1e-3, 0.5);
    let sol = relsolver::integrate_inside_with(&|_| -k * k, &nodes);
    for (x, y) in sol.even.x.iter().zip(&sol.even.y) {
        assert!((y - (k * x).cos()).abs() < 1e-8, "x={x}");
    }
    for (x, y) in sol.odd.x.iter().zip(&sol.odd.y) {
        assert!((y - (k * x).sin() / k).abs() < 1e-8);
    }
}

#[test]
fn square_well_levels() {
    // ψ'' = (V − λ)ψ on (0, 1), V = −v0 for x < a, ψ'(0) = 0, ψ(1) = 0
    let (v0, a) = (60.0, 0.6);
    // two segments so no RK stage straddles the discontinuity
    let m = 5000;
    let left: Vec<f64> = (0..=3000).map(|i| a * i as f64 / 3000.0).collect();
    let right: Vec<f64> = (0..=m - 3000).map(|i| a + (1.0 - a) * i as f64 / (m - 3000) as f64).collect();
    let shoot = |lam: f64| {
        let (_, y, dy) = ode::integrate_nodes(&|_| -v0 - lam, &left, 1.0, 0.0).last();
        ode::integrate_nodes(&|_| -lam, &right, y, dy).last().1
    };
    // cos(kx) inside, sin or sinh of p(1 − x) outside; log-derivative match at a without poles
    let det = |lam: f64| {
        let k = (v0 + lam).sqrt();
        let (p, c, s) = if lam > 0.0 {
            let p = lam.sqrt();
            (p, (p * (1.0 - a)).cos(), (p * (1.0 - a)).sin())
        } else {
            let p = (-lam).sqrt();
            (p, (p * (1.0 - a)).cosh(), (p * (1.0 - a)).sinh())
        };
        k * (k * a).sin() * s - p * (k * a).cos() * c
    };
    let mut found = 0;
    let mut lam = -v0 + 1e-3;
    let step = 0.05;
    let mut prev = shoot(lam);
    while lam < 80.0 && found < 3 {
        let next = shoot(lam + step);
        if prev.signum() != next.signum() {
            let shot = roots::bisect(shoot, lam, lam + step, 1e-12).unwrap();
            let exact = roots::bisect(det, shot - 0.02, shot + 0.02, 1e-13).unwrap();
            assert!((shot - exact).abs() < 1e-6 * exact.abs().max(1.0), "{shot} {exact}");
            found += 1;
        }
        prev = next;
        lam += step;
    }
    assert_eq!(found, 3);
}

/// Cell-centred finite differences on (0, 1) with ψ'(0) = 0, ψ(1) = 0; n-th eigenvector.
fn fd_coulomb_vector(kappa: f64, n: usize, cells: usize) -> (Vec<f64>, Vec<f64>) {
    let h = 1.0 / cells as f64;
    let x: Vec<f64> = (0..cells).map(|i| (i as f64 + 0.5) * h).collect();
    let a = DMatrix::from_fn(cells, cells, |i, j| {
        if i == j {
            let left = if i == 0 { 0.0 } else { 1.0 };
            let ghost = if i + 1 == cells { 1.0 } else { 0.0 };
            (left + 1.0 + ghost) / (h * h) + kappa / (x[i].powi(6) - 1.0)
        } else if i.abs_diff(j) == 1 {
            -1.0 / (h * h)
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..cells).collect();
    order.sort_by(|&p, &q| eig.eigenvalues[p].total_cmp(&eig.eigenvalues[q]));
    let v = eig.eigenvectors.column(order[n - 1]).iter().copied().collect();
    (x, v)
}

#[test]
fn coulomb_state_matches_dense_eigenvector() {
    let red = base_regime();
    // n = 1 meets 1e-3 at 400 cells; n = 2 needs 800 and shows the oracle's O(h²) error
    let mut errs = Vec::new();
    for (n, cells) in [(1, 400), (2, 400), (2, 800)] {
        let c = relsolver::coulomb_state(&red, 0.98, n, &opt(), 2).unwrap();
        let s = c.solution();
        let (x, v) = fd_coulomb_vector(s.prob.kappa, n, cells);
        let ours: Vec<f64> = x.iter().map(|&xi| s.eval(xi).0).collect();
        let norm = |u: &[f64]| u.iter().map(|a| a * a).sum::<f64>().sqrt();
        let (na, nb) = (norm(&ours), norm(&v));
        let sign = if ours.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        // interior part: stay one matching window away from the pole
        let err: f64 = x
            .iter()
            .zip(ours.iter().zip(&v))
            .filter(|(xi, _)| **xi < 0.9)
            .map(|(_, (a, b))| (a / na - sign * b / nb).powi(2))
            .sum::<f64>()
            .sqrt();
        errs.push(err);
    }
    assert!(errs[0] < 1e-3 && errs[2] < 1e-3, "{errs:?}");
    assert!(errs[1] / errs[2] > 3.5, "{errs:?}");
}

#[test]
fn coulomb_states_satisfy_sturm_and_pole_conditions() {
    let red = base_regime();
    let mut prev = f64::INFINITY;
    for n in 1..=4 {
        let c = relsolver::coulomb_state(&red, 0.98, n, &opt(), 2).unwrap();
        let s = c.solution();
        assert_eq!(s.node_count(1e-6), n);
        assert!(s.conn.c2.abs() < 1e-6 * s.conn.c1.abs().max(1.0));
        assert_eq!(c.alpha, Complex64::new(0.0, 0.0));
        assert!(c.omega_bar < prev);
        prev = c.omega_bar;
    }
}

#[test]
fn exact_roots_match_dense_oracle() {
    let red = base_regime();
    for n in 1..=3 {
        let w = relsolver::coulomb_dispersion(&red, 0.98, n, &opt()).unwrap();
        let fd = oracle::fd_coulomb_dispersion(&red, 0.98, n, 400, 0.8 * (1.0 + w) - 1.0, 1.2 * (1.0 + w) - 1.0).unwrap();
        assert!(((1.0 + fd) / (1.0 + w) - 1.0).abs() < 0.02, "n={n}: {w} {fd}");
    }
}

#[test]
fn exact_roots_match_wkb() {
    let red = base_regime();
    for n in 1..=4 {
        let w = relsolver::coulomb_dispersion(&red, 0.98, n, &opt()).unwrap();
        let k = wkb::wkb_dispersion(&red, 0.98, n).unwrap().omega_bar;
        assert!(((1.0 + k) / (1.0 + w) - 1.0).abs() < 0.05, "n={n}");
    }
}

#[test]
fn wkb_gap_closes_toward_k_one() {
    // n = 1 has no WKB root at K̄ = 0.95 in this regime
    let red = base_regime();
    let dev = |kb: f64, n: usize| {
        let w = relsolver::coulomb_dispersion(&red, kb, n, &opt()).unwrap();
        let k = wkb::wkb_dispersion(&red, kb, n).unwrap().omega_bar;
        ((1.0 + k) / (1.0 + w) - 1.0).abs()
    };
    for n in 2..=3 {
        assert!(dev(0.99, n) < dev(0.95, n), "n={n}");
    }
}

#[test]
fn grid_refinement() {
    let red = base_regime();
    let fine = SolveOptions { h_max: 0.5 * opt().h_max, ..opt() };
    for n in 1..=3 {
        let a = relsolver::coulomb_dispersion(&red, 0.98, n, &opt()).unwrap();
        let b = relsolver::coulomb_dispersion(&red, 0.98, n, &fine).unwrap();
        assert!((a - b).abs() < 4e-10 * (1.0 + a.abs()), "n={n}: {}", a - b);
    }
}

#[test]
fn under_resolved_grid_is_rejected() {
    let red = base_regime();
    let prob = rydcoul::EffectiveProblem::reduced_only(red, -0.4, 0.98, 1e-8).unwrap();
    let coarse = relsolver::inside_nodes(0.05, 0.99);
    assert!(matches!(relsolver::integrate_inside(&prob, &coarse), Err(rydcoul::Error::Resolution(_))));
}

#[test]
fn component_reconstruction() {
    let red = base_regime();
    let c = relsolver::coulomb_state(&red, 0.98, 1, &opt(), 2).unwrap();
    let rb = c.rb;
    // ψ'(0) = 0 and ES₋ vanishes at the origin
    let h = 1e-4 * rb;
    let (p0, p1, p2) = (c.local(0.0).psi, c.local(h).psi, c.local(2.0 * h).psi);
    let d0 = (-3.0 * p0 + 4.0 * p1 - p2) / (2.0 * h);
    assert!(d0.abs() < 1e-6 * c.solution().max_abs() / rb);
    assert!(c.local(0.0).m.abs() < 1e-12);
    // SS/ES₊ prefactor ~ g/Ω at r_b/2, within a factor 2, once x⁶/(1 − x⁶) is divided out
    let l = c.local(0.5 * rb);
    let x6 = 0.5f64.powi(6);
    let ratio = (l.ss / l.psi).abs() * (1.0 - x6) / x6 * red.eta;
    assert!((0.5..2.0).contains(&ratio), "{ratio}");
    // EE peaks in the allowed band between the turning point and the edge
    let rs: Vec<f64> = (0..=2000).map(|i| rb * i as f64 / 2000.0).collect();
    let (imax, _) = rs.iter().enumerate().fold((0, 0.0), |acc, (i, &r)| {
        let v = c.local(r).ee.abs();
        if v > acc.1 {
            (i, v)
        } else {
            acc
        }
    });
    let x0 = wkb::turning_point(c.solution().prob.e_red);
    assert!(rs[imax] > x0 * rb && (rs[imax] - rb).abs() < 0.25 * rb, "{} {}", rs[imax], rb);
    // Coulomb state: nothing outside r_b
    assert_eq!(c.local(1.01 * rb), Local::default());
}

#[test]
fn continuum_state_is_continuous_and_decays() {
    let red = base_regime();
    let s = RadialSolution::solve(&red, -0.3, 0.98, &opt(), true).unwrap();
    let (a, _) = s.eval(1.0 - 1e-9);
    let (b, _) = s.eval(1.0 + 1e-9);
    assert!((a - b).abs() < 1e-6 * s.max_abs());
    let (tail, _) = s.eval(s.x_max);
    assert!(tail.abs() < 1e-6 * s.max_abs());
}

#[test]
fn trivial_solution_is_rejected() {
    let nodes = relsolver::inside_nodes(1e-3, 0.99);
    let zero = ode::integrate_nodes(&|_| -1.0, &nodes, 0.0, 0.0);
    assert!(zero.y.iter().all(|v| *v == 0.0));
    let red = base_regime();
    let prob = rydcoul::EffectiveProblem::reduced_only(red, -0.4, 0.98, 1e-8).unwrap();
    let s = RadialSolution::solve_problem(prob, &opt(), false).unwrap();
    assert!(s.conn.c1.abs() + s.conn.c2.abs() > 0.0);
}

#[test]
fn decoupling_shrinks_pole_amplitudes() {
    // band RMS of |α| and |ψ(r_b)| with ψ scaled to unit interior RMS
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
    let v: Vec<(f64, f64)> = [20.0, 40.0, 80.0].iter().map(|&f| band(f)).collect();
    for w in v.windows(2) {
        assert!(w[1].0 < w[0].0 && w[1].1 < w[0].1, "{v:?}");
    }
}

fn a2_basis(red: &Reduced, center: f64, half: f64, d_omega: f64, prescription: AlphaPrescription) -> basis::EigenBasis {
    let m = (2.0 * half / d_omega).round() as usize;
    let grid: Vec<f64> = (0..=m).map(|i| center - half + 2.0 * half * i as f64 / m as f64).collect();
    let o = SolveOptions { prescription, ..opt() };
    relsolver::build_eigenbasis_unchecked(red, 0.95, &grid, &o).unwrap()
}

#[test]
fn principal_value_basis_is_orthonormal() {
    let red = Reduced::new(0.01, 40.0, 0.01);
    let b = a2_basis(&red, -0.6, 0.02, 0.0025, AlphaPrescription::PrincipalValue);
    assert!(b.max_leakage < 0.05, "{}", b.max_leakage);
    assert!(b.hf_velocities().iter().all(|v| *v >= -1e-10));
}

#[test]
fn decomposition_peaks_at_level() {
    let red = Reduced::new(0.01, 40.0, 0.01);
    let c = relsolver::coulomb_state(&red, 0.95, 3, &opt(), 2).unwrap();
    let b = a2_basis(&red, c.omega_bar, 0.05, 0.0025, AlphaPrescription::PrincipalValue);
    let d = basis::decompose(&c, &b);
    assert!((d.peak_omega - c.omega_bar).abs() <= d.d_omega);
    let below = relsolver::coulomb_dispersion(&red, 0.95, 4, &opt()).unwrap();
    assert!(d.fwhm < 0.2 * (c.omega_bar - below), "{} {}", d.fwhm, c.omega_bar - below);
}

#[test]
fn narrow_state_is_captured_by_window() {
    let red = Reduced::new(0.01, 20.0, 0.01);
    let c = relsolver::coulomb_state(&red, 0.95, 3, &opt(), 2).unwrap();
    let b = a2_basis(&red, c.omega_bar, 0.05, 0.0025, AlphaPrescription::PrincipalValue);
    let d = basis::decompose(&c, &b);
    assert!((d.captured - 1.0).abs() < 0.02, "{}", d.captured);
}

#[test]
fn hf_velocity_of_pure_components() {
    let support = 2.0;
    let bump = |r: f64| (-(r - 0.7).powi(2) / 0.02).exp();
    let ss = FnState { f: move |r: f64| Local { ss: bump(r), ..Default::default() }, support };
    let ee = FnState { f: move |r: f64| Local { ee: bump(r), ..Default::default() }, support };
    let es = FnState { f: move |r: f64| Local { psi: bump(r), ..Default::default() }, support };
    assert!(basis::hf_group_velocity(&ss).abs() < 1e-14);
    assert!((basis::hf_group_velocity(&ee) - 1.0).abs() < 1e-12);
    assert!((basis::hf_group_velocity(&es) - 0.5).abs() < 1e-12);
}

#[test]
fn components_have_parity() {
    // EE ∝ ψ is even and ES₋ ∝ ψ' is odd: the even solution has ψ'(0) = 0
    let red = base_regime();
    let c = relsolver::coulomb_state(&red, 0.98, 2, &opt(), 2).unwrap();
    let s = c.solution();
    let (_, d0) = s.eval(0.0);
    assert_eq!(d0, 0.0);
    assert!(c.local(0.0).ee.abs() > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn hf_velocity_nonnegative(wb in -0.8f64..0.5) {
        let red = base_regime();
        let st = relsolver::eigenstate(&red, wb, 0.98, &opt(), 2).unwrap();
        let b = basis::EigenBasis {
            k_bar: 0.98,
            d_omega: 1e-3,
            prescription: AlphaPrescription::PrincipalValue,
            norms: vec![st.energy_norm()],
            states: vec![st],
            max_leakage: 0.0,
        };
        prop_assert!(b.hf_velocities()[0] >= -1e-10);
    }

}

#[test]
fn window_weight_matches_dense_diagonalization() {
    // the pole continuum alone is not complete: compare the weight both assign to one window
    let red = base_regime();
    let (r0, s) = (1.2, 0.05);
    let f = FnState { f: move |r: f64| Local { ss: (-(r - r0).powi(2) / (2.0 * s * s)).exp(), ..Default::default() }, support: r0 + 10.0 * s };
    let (lo, hi) = ((r0 + 6.0 * s).powf(-6.0) - 1.0, (r0 - 6.0 * s).powf(-6.0) - 1.0);
    let dense = oracle::DenseRelative::new(&red, 0.98, 300, 5.0, 50.0).unwrap();
    let reference = dense.weight_in(&f, lo, hi);
    let m = 400;
    let grid: Vec<f64> = (0..=m).map(|i| lo + (hi - lo) * i as f64 / m as f64).collect();
    let b = relsolver::build_eigenbasis(&red, 0.98, &grid, &opt()).unwrap();
    let d = basis::decompose(&f, &b);
    assert!((d.captured - reference).abs() < 0.02, "{} {}", d.captured, reference);
}
