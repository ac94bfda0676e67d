//! Fixed-step RK4 for linear second-order equations y'' = q(x) y.

/// Sampled solution: abscissae, values and first derivatives.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub dy: Vec<f64>,
}

impl Trajectory {
    pub fn last(&self) -> (f64, f64, f64) {
        let k = self.x.len() - 1;
        (self.x[k], self.y[k], self.dy[k])
    }

    /// Cubic Hermite interpolation of (y, y') at `x`; the samples must be monotone in x.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let n = self.x.len();
        let asc = self.x[n - 1] > self.x[0];
        let k = if asc {
            self.x.partition_point(|&v| v <= x)
        } else {
            self.x.partition_point(|&v| v >= x)
        };
        let i = k.clamp(1, n - 1) - 1;
        hermite(self.x[i], self.y[i], self.dy[i], self.x[i + 1], self.y[i + 1], self.dy[i + 1], x)
    }

    /// Zero crossings of y, counted over consecutive samples.
    pub fn sign_changes(&self) -> usize {
        self.y.windows(2).filter(|w| w[0] != 0.0 && w[0].signum() != w[1].signum()).count()
    }
}

/// Cubic Hermite value and slope between (x0,y0,d0) and (x1,y1,d1).
pub fn hermite(x0: f64, y0: f64, d0: f64, x1: f64, y1: f64, d1: f64, x: f64) -> (f64, f64) {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let (t2, t3) = (t * t, t * t * t);
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let y = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
    let dh00 = (6.0 * t2 - 6.0 * t) / h;
    let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
    let dh01 = (-6.0 * t2 + 6.0 * t) / h;
    let dh11 = 3.0 * t2 - 2.0 * t;
    (y, dh00 * y0 + dh10 * d0 + dh01 * y1 + dh11 * d1)
}

#[inline]
pub fn rk4_step<Q: Fn(f64) -> f64>(q: &Q, x: f64, y: f64, dy: f64, h: f64) -> (f64, f64) {
    let k1y = dy;
    let k1d = q(x) * y;
    let qm = q(x + 0.5 * h);
    let k2y = dy + 0.5 * h * k1d;
    let k2d = qm * (y + 0.5 * h * k1y);
    let k3y = dy + 0.5 * h * k2d;
    let k3d = qm * (y + 0.5 * h * k2y);
    let k4y = dy + h * k3d;
    let k4d = q(x + h) * (y + h * k3y);
    (
        y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y),
        dy + h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d),
    )
}

/// Integrates from `x0` through the sorted node list `xs` (first entry must be x0).
pub fn integrate_nodes<Q: Fn(f64) -> f64>(q: &Q, xs: &[f64], y0: f64, dy0: f64) -> Trajectory {
    let mut tr = Trajectory {
        x: Vec::with_capacity(xs.len()),
        y: Vec::with_capacity(xs.len()),
        dy: Vec::with_capacity(xs.len()),
    };
    let (mut y, mut dy) = (y0, dy0);
    tr.x.push(xs[0]);
    tr.y.push(y);
    tr.dy.push(dy);
    for w in xs.windows(2) {
        let (ny, nd) = rk4_step(q, w[0], y, dy, w[1] - w[0]);
        y = ny;
        dy = nd;
        // keep magnitudes bounded for long exponential runs
        let s = y.abs().max(dy.abs());
        if s > 1e100 {
            for v in tr.y.iter_mut().chain(tr.dy.iter_mut()) {
                *v /= s;
            }
            y /= s;
            dy /= s;
        }
        tr.x.push(w[1]);
        tr.y.push(y);
        tr.dy.push(dy);
    }
    tr
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk4_is_fourth_order_on_harmonic_oscillator() {
        let q = |_x: f64| -1.0;
        let err = |n: usize| {
            let xs: Vec<f64> = (0..=n).map(|i| 2.0 * i as f64 / n as f64).collect();
            let tr = integrate_nodes(&q, &xs, 1.0, 0.0);
            (tr.last().1 - 2f64.cos()).abs()
        };
        let ratio = err(20) / err(40);
        assert!(ratio > 14.0 && ratio < 18.0, "{ratio}");
    }

    #[test]
    fn hermite_reproduces_cubics() {
        let f = |x: f64| x * x * x - 2.0 * x;
        let d = |x: f64| 3.0 * x * x - 2.0;
        let (y, dy) = hermite(0.5, f(0.5), d(0.5), 1.5, f(1.5), d(1.5), 1.1);
        assert!((y - f(1.1)).abs() < 1e-13 && (dy - d(1.1)).abs() < 1e-12);
    }
}
