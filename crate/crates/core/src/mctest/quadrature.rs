//! Deterministic quadrature used by the divergence profiles.

use std::f64::consts::FRAC_PI_2;

/// Trapezoid rule on tabulated points.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2).zip(ys.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum()
}

/// Double-exponential (tanh-sinh) rule on `[a, b]`. Tolerates integrable
/// endpoint singularities; `f` is never evaluated at the endpoints. Nodes
/// resolve distances down to the smallest float near `a` but only to the
/// machine epsilon near `b`, so put a singularity at `a`.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, level: u32) -> f64 {
    let h = 0.5f64.powi(level as i32);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut sum = FRAC_PI_2 * f(mid);
    let mut k = 1;
    loop {
        let t = k as f64 * h;
        let u = FRAC_PI_2 * t.sinh();
        let cu = u.cosh();
        let w = FRAC_PI_2 * t.cosh() / (cu * cu);
        // distance from the nearer endpoint, without cancellation
        let dist = (b - a) / ((2.0 * u).exp() + 1.0);
        let (left, right) = (a + dist, b - dist);
        let (use_left, use_right) = (left > a, right < b);
        if w < 1e-300 || !(use_left || use_right) {
            break;
        }
        if use_left {
            sum += w * f(left);
        }
        if use_right {
            sum += w * f(right);
        }
        k += 1;
    }
    sum * h * half
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_is_exact_on_lines() {
        let xs = [0.0, 0.5, 2.0];
        let ys = xs.map(|x| 3.0 * x + 1.0);
        assert!((trapezoid(&xs, &ys) - 8.0).abs() < 1e-15);
    }

    #[test]
    fn tanh_sinh_handles_endpoint_singularities() {
        assert!((tanh_sinh(|x| x * x, 0.0, 1.0, 6) - 1.0 / 3.0).abs() < 1e-12);
        assert!((tanh_sinh(|x| x.powf(-0.5), 0.0, 1.0, 7) - 2.0).abs() < 1e-9);
        assert!((tanh_sinh(|x| x.powf(-0.75), 0.0, 1.0, 8) - 4.0).abs() < 1e-6);
        assert!((tanh_sinh(|x| (1.0 - x).powf(-0.5), 0.0, 1.0, 8) - 2.0).abs() < 1e-6);
    }
}
