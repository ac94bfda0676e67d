//! Local solutions of t·y'' = q(t)·y about the regular singular point t = 0.
//!
//! With q(t) = Σ q_j t^j the two Frobenius solutions are
//! y₁ = Σ a_k t^{k+1} (a₀ = 1) and y₂ = q₀·y₁·ln|t| + Σ b_k t^k (b₀ = 1).
//! The free coefficient b₁ is fixed so that y₂/q₀ reduces to −π√s·Y₁(2U√s)/U
//! (t = −s < 0) and 2√t·K₁(2U√t)/U (t > 0) for constant q = U².

use crate::numerics::EULER_GAMMA;

#[derive(Clone, Debug)]
pub struct LocalBasis {
    a: Vec<f64>,
    b: Vec<f64>,
    /// q₀ = U², the coefficient of the logarithm.
    pub c: f64,
}

impl LocalBasis {
    /// Builds both series from the Taylor coefficients of q(t).
    pub fn from_q(q: &[f64], terms: usize) -> Self {
        let qj = |j: usize| q.get(j).copied().unwrap_or(0.0);
        let c = qj(0);
        let mut a = vec![0.0; terms];
        a[0] = 1.0;
        for m in 0..terms - 1 {
            let s: f64 = (0..=m).map(|j| qj(j) * a[m - j]).sum();
            a[m + 1] = s / ((m + 2) * (m + 1)) as f64;
        }
        let mut b = vec![0.0; terms];
        b[0] = 1.0;
        if terms > 1 {
            b[1] = c * ((c.ln()) + 2.0 * EULER_GAMMA - 1.0);
        }
        for m in 1..terms - 1 {
            let s: f64 = (0..=m).map(|j| qj(j) * b[m - j]).sum();
            b[m + 1] = (s - c * a[m] * (2 * m + 1) as f64) / ((m + 1) * m) as f64;
        }
        Self { a, b, c }
    }

    /// Local basis for ψ'' = κ(1/(x⁶−1) − ε)ψ at x = 1 + t, where
    /// x⁶ − 1 = t·P(t) and q(t) = κ/P(t) − κεt.
    pub fn coulomb(kappa: f64, e_red: f64, terms: usize) -> Self {
        const P: [f64; 6] = [6.0, 15.0, 20.0, 15.0, 6.0, 1.0];
        let mut inv = vec![0.0; terms];
        inv[0] = 1.0 / 6.0;
        for m in 1..terms {
            let s: f64 = (1..=m.min(5)).map(|k| P[k] * inv[m - k]).sum();
            inv[m] = -s / 6.0;
        }
        let mut q: Vec<f64> = inv.iter().map(|v| kappa * v).collect();
        if terms > 1 {
            q[1] -= kappa * e_red;
        }
        Self::from_q(&q, terms)
    }

    /// (y₁, y₁', y₂, y₂') at t ≠ 0.
    pub fn eval(&self, t: f64) -> (f64, f64, f64, f64) {
        let mut y1 = 0.0;
        let mut d1 = 0.0;
        let mut g = 0.0;
        let mut dg = 0.0;
        let mut tp = 1.0; // t^k
        let mut tpm = 0.0; // t^{k-1}
        for k in 0..self.a.len() {
            y1 += self.a[k] * tp * t;
            d1 += (k + 1) as f64 * self.a[k] * tp;
            g += self.b[k] * tp;
            if k > 0 {
                dg += k as f64 * self.b[k] * tpm;
            }
            tpm = tp;
            tp *= t;
        }
        let l = t.abs().ln();
        let y2 = self.c * y1 * l + g;
        let d2 = self.c * (d1 * l + y1 / t) + dg;
        (y1, d1, y2, d2)
    }

    /// Branches normalized so ψ(1) = c₂/U² on either side: (ψ₁, ψ₁', ψ₂, ψ₂').
    /// Inside (t < 0): ψ₁⁻ = −y₁, ψ₂⁻ = y₂/U². Outside: ψ₁⁺ = y₁, ψ₂⁺ = y₂/U².
    pub fn branches(&self, t: f64) -> (f64, f64, f64, f64) {
        let (y1, d1, y2, d2) = self.eval(t);
        let s = if t < 0.0 { -1.0 } else { 1.0 };
        (s * y1, s * d1, y2 / self.c, d2 / self.c)
    }
}
