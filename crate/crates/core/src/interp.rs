//! Interpolation helpers: monotone piecewise-cubic (Fritsch-Carlson
//! limited) interpolation, pool-adjacent-violators projection, and the
//! one-sided power-law endpoint fit used for vanishing integrands.

use crate::error::{Error, Result};

/// Monotone piecewise-cubic Hermite interpolant.
///
/// Nodal slopes come from the nonuniform 3-point difference formula and
/// are then limited a la Fritsch-Carlson so the interpolant preserves
/// the monotonicity of the data.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(x: &[f64], y: &[f64]) -> Result<Self> {
        if x.len() != y.len() || x.len() < 2 {
            return Err(Error::Validation(
                "monotone cubic needs >= 2 aligned points".into(),
            ));
        }
        for w in x.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Validation(
                    "monotone cubic abscissae must be strictly increasing".into(),
                ));
            }
        }
        let n = x.len();
        let mut d = vec![0.0; n];
        for i in 0..n {
            let (i0, i1, i2) = if i == 0 {
                (0, 1, 2.min(n - 1))
            } else if i == n - 1 {
                (n - 3.min(n - 1), n - 2, n - 1)
            } else {
                (i - 1, i, i + 1)
            };
            if i0 == i1 || i1 == i2 {
                // only two points overall
                d[i] = (y[1] - y[0]) / (x[1] - x[0]);
                continue;
            }
            let (x0, x1, x2) = (x[i0], x[i1], x[i2]);
            let xi = x[i];
            d[i] = y[i0] * (2.0 * xi - x1 - x2) / ((x0 - x1) * (x0 - x2))
                + y[i1] * (2.0 * xi - x0 - x2) / ((x1 - x0) * (x1 - x2))
                + y[i2] * (2.0 * xi - x0 - x1) / ((x2 - x0) * (x2 - x1));
        }
        // Fritsch-Carlson limiter per interval
        for i in 0..n - 1 {
            let h = x[i + 1] - x[i];
            let delta = (y[i + 1] - y[i]) / h;
            if delta == 0.0 {
                d[i] = 0.0;
                d[i + 1] = 0.0;
                continue;
            }
            let a = d[i] / delta;
            let b = d[i + 1] / delta;
            if a < 0.0 {
                d[i] = 0.0;
            }
            if b < 0.0 {
                d[i + 1] = 0.0;
            }
            let a = (d[i] / delta).max(0.0);
            let b = (d[i + 1] / delta).max(0.0);
            let norm2 = a * a + b * b;
            if norm2 > 9.0 {
                let tau = 3.0 / norm2.sqrt();
                d[i] = tau * a * delta;
                d[i + 1] = tau * b * delta;
            }
        }
        Ok(MonotoneCubic {
            x: x.to_vec(),
            y: y.to_vec(),
            d,
        })
    }

    fn segment(&self, xq: f64) -> usize {
        match self
            .x
            .binary_search_by(|v| v.partial_cmp(&xq).unwrap())
        {
            Ok(i) => i.min(self.x.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.x.len() - 2),
        }
    }

    /// Evaluate the interpolant (linear extrapolation outside the grid).
    pub fn eval(&self, xq: f64) -> f64 {
        let i = self.segment(xq);
        let h = self.x[i + 1] - self.x[i];
        let t = (xq - self.x[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }

    /// Derivative of the interpolant.
    pub fn eval_deriv(&self, xq: f64) -> f64 {
        let i = self.segment(xq);
        let h = self.x[i + 1] - self.x[i];
        let t = (xq - self.x[i]) / h;
        let t2 = t * t;
        let h00 = (6.0 * t2 - 6.0 * t) / h;
        let h10 = 3.0 * t2 - 4.0 * t + 1.0;
        let h01 = (-6.0 * t2 + 6.0 * t) / h;
        let h11 = 3.0 * t2 - 2.0 * t;
        h00 * self.y[i] + h10 * self.d[i] + h01 * self.y[i + 1] + h11 * self.d[i + 1]
    }
}

/// Project `y` onto the cone of nonincreasing sequences (least squares),
/// returning the projection and its l2 distance from the input.
pub fn pava_decreasing(y: &[f64]) -> (Vec<f64>, f64) {
    // classic pool-adjacent-violators on the negated sequence
    let n = y.len();
    let mut level: Vec<f64> = Vec::with_capacity(n);
    let mut weight: Vec<f64> = Vec::with_capacity(n);
    for &v in y {
        level.push(v);
        weight.push(1.0);
        while level.len() >= 2 {
            let m = level.len();
            if level[m - 2] >= level[m - 1] {
                break;
            }
            let w = weight[m - 2] + weight[m - 1];
            let merged = (level[m - 2] * weight[m - 2] + level[m - 1] * weight[m - 1]) / w;
            level.truncate(m - 2);
            weight.truncate(m - 2);
            level.push(merged);
            weight.push(w);
        }
    }
    let mut out = Vec::with_capacity(n);
    for (lv, w) in level.iter().zip(weight.iter()) {
        for _ in 0..(*w as usize) {
            out.push(*lv);
        }
    }
    let dist = out
        .iter()
        .zip(y.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    (out, dist)
}

/// One-sided power-law endpoint panel.
///
/// Fits `g(x) ~ c * x^alpha` through positive samples `(gaps, vals)`
/// (gap = distance to the endpoint) and returns the integral of the fit
/// over `[0, width]` together with the fitted exponent. Falls back to a
/// half-open trapezoid when the data are unusable.
pub fn power_law_panel(gaps: &[f64], vals: &[f64], width: f64) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = gaps
        .iter()
        .zip(vals.iter())
        .filter(|(g, v)| **g > 0.0 && **v > 0.0 && g.is_finite() && v.is_finite())
        .map(|(g, v)| (g.ln(), v.ln()))
        .collect();
    let fallback = {
        let last = vals.last().copied().unwrap_or(0.0).max(0.0);
        (0.5 * last * width, f64::NAN)
    };
    if pts.len() < 3 || width <= 0.0 {
        return fallback;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let det = n * sxx - sx * sx;
    if det.abs() < 1e-30 {
        return fallback;
    }
    let alpha = (n * sxy - sx * sy) / det;
    let lnc = (sy - alpha * sx) / n;
    if !alpha.is_finite() || alpha <= -0.9 || alpha > 20.0 {
        return fallback;
    }
    let c = lnc.exp();
    (c * width.powf(alpha + 1.0) / (alpha + 1.0), alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_cubic_reproduces_smooth_data() {
        let x: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|&t| (-t).exp()).collect();
        let mc = MonotoneCubic::new(&x, &y).unwrap();
        let mut t = 0.05;
        while t < 3.9 {
            let err = (mc.eval(t) - (-t as f64).exp()).abs();
            assert!(err < 2e-5, "t = {t}, err = {err}");
            let derr = (mc.eval_deriv(t) + (-t as f64).exp()).abs();
            assert!(derr < 2e-3, "t = {t}, deriv err = {derr}");
            t += 0.0173;
        }
    }

    #[test]
    fn monotone_cubic_preserves_monotonicity() {
        // data with a hard knee that defeats plain cubic splines
        let x = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [10.0, 9.9, 9.8, 2.0, 1.9, 1.8];
        let mc = MonotoneCubic::new(&x, &y).unwrap();
        let mut prev = f64::INFINITY;
        let mut t = 0.0;
        while t <= 5.0 {
            let v = mc.eval(t);
            assert!(v <= prev + 1e-12, "rises at t = {t}");
            prev = v;
            t += 0.01;
        }
    }

    #[test]
    fn pava_identity_on_decreasing_input() {
        let y = [5.0, 4.0, 2.5, 1.0];
        let (p, dist) = pava_decreasing(&y);
        assert_eq!(p, y.to_vec());
        assert_eq!(dist, 0.0);
    }

    #[test]
    fn pava_pools_violators() {
        let y = [3.0, 1.0, 2.0, 0.5];
        let (p, dist) = pava_decreasing(&y);
        assert!(dist > 0.0);
        for w in p.windows(2) {
            assert!(w[0] >= w[1] - 1e-15);
        }
        // projection preserves the mean over the pooled block
        assert!((p[1] - 1.5).abs() < 1e-12 && (p[2] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn power_law_panel_recovers_exact_power() {
        let gaps: Vec<f64> = (1..=5).map(|i| i as f64 * 0.01).collect();
        let vals: Vec<f64> = gaps.iter().map(|g| 2.0 * g.powf(0.5)).collect();
        let (panel, alpha) = power_law_panel(&gaps, &vals, 0.05);
        let exact = 2.0 * 0.05f64.powf(1.5) / 1.5;
        assert!((alpha - 0.5).abs() < 1e-10);
        assert!((panel - exact).abs() < 1e-12 * exact.max(1.0));
    }
}
