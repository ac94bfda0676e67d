//! Coulomb-state dispersion: roots of c₂(ω) = 0 labelled by node count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::solve::{RadialSolution, SolveOptions};
use crate::error::{Error, Result};
use crate::model::Reduced;
use crate::numerics::roots;
use crate::wkb;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Wkb,
    ClosedForm,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Wkb => "wkb",
            Method::ClosedForm => "closed_form",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersionBranch {
    pub n: usize,
    /// (K̄, ω̄) pairs.
    pub samples: Vec<(f64, f64)>,
    pub method: Method,
}

impl DispersionBranch {
    /// Sign of dω̄/dK̄ between consecutive samples (+1, −1 or 0 if mixed).
    pub fn slope_sign(&self) -> i32 {
        let s: Vec<f64> = self
            .samples
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect();
        if s.iter().all(|v| *v < 0.0) {
            -1
        } else if s.iter().all(|v| *v > 0.0) {
            1
        } else {
            0
        }
    }
}

/// (c₂, total zero count on (0, 1]) of the even inside solution at (ω̄, K̄).
fn c2_and_nodes(red: &Reduced, wb: f64, kb: f64, opt: &SolveOptions) -> Option<(f64, usize)> {
    let s = RadialSolution::solve(red, wb, kb, opt, false).ok()?;
    Some((s.conn.c2, s.node_count(0.0)))
}

/// Exact ω̄_n(K̄): the zero of c₂ where the n-th node enters through r_b.
pub fn coulomb_dispersion(red: &Reduced, kb: f64, n: usize, opt: &SolveOptions) -> Result<f64> {
    if n == 0 {
        return Err(Error::Config("branch index starts at 1".into()));
    }
    let seed = wkb::wkb_dispersion(red, kb, n).ok().map(|s| 1.0 + s.omega_bar);
    let mut ranges: Vec<(f64, f64, usize)> = Vec::new();
    if let Some(s) = seed {
        ranges.push((0.7 * s, 1.3 * s, 48));
    }
    ranges.push((0.02, 7.0, 300));
    for (lo, hi, m) in ranges {
        let (lo, hi) = (lo.max(1e-6), hi);
        let grid: Vec<f64> = (0..=m).map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / m as f64).exp() - 1.0).collect();
        let vals: Vec<Option<(f64, usize)>> = grid.iter().map(|&wb| c2_and_nodes(red, wb, kb, opt)).collect();
        let mut cands = Vec::new();
        for i in 0..m {
            if let (Some((c_a, n_a)), Some((c_b, n_b))) = (vals[i], vals[i + 1]) {
                let pair = (n_a.min(n_b), n_a.max(n_b));
                if c_a.signum() != c_b.signum() && pair == (n - 1, n) {
                    cands.push(i);
                }
            }
        }
        let target = seed.map(|s| s - 1.0).unwrap_or(0.0);
        if let Some(&i) = cands.iter().min_by(|a, b| {
            let da = (grid[**a] - target).abs();
            let db = (grid[**b] - target).abs();
            da.partial_cmp(&db).unwrap()
        }) {
            let f = |wb: f64| c2_and_nodes(red, wb, kb, opt).map(|v| v.0).unwrap_or(f64::NAN);
            let xtol = 1e-10 * (1.0 + grid[i].abs());
            return roots::brent(f, grid[i], grid[i + 1], xtol, 200)
                .ok_or_else(|| Error::Convergence(format!("c₂ bracket collapsed for n={n}")));
        }
    }
    Err(Error::NoRoot(format!("no Coulomb state n={n} at K̄={kb}")))
}

/// Branches n = 1..=n_max sampled at the given K̄ values; missing points are skipped.
pub fn branches(red: &Reduced, k_bars: &[f64], n_max: usize, method: Method, opt: &SolveOptions) -> Vec<DispersionBranch> {
    (1..=n_max)
        .map(|n| {
            let samples: Vec<(f64, f64)> = k_bars
                .par_iter()
                .map(|&kb| {
                    let w = match method {
                        Method::Exact => coulomb_dispersion(red, kb, n, opt),
                        Method::Wkb => wkb::wkb_dispersion(red, kb, n).map(|s| s.omega_bar),
                        Method::ClosedForm => wkb::closed_form_dispersion(red, kb, n),
                    };
                    w.ok().map(|w| (kb, w))
                })
                .collect::<Vec<_>>()
                .into_iter()
                .flatten()
                .collect();
            DispersionBranch { n, samples, method }
        })
        .collect()
}
