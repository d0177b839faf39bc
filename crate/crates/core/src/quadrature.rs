//! Composite trapezoid rules on uniform grids.

use crate::scalar::Real;

/// Composite trapezoid weights for `n` equally spaced nodes with spacing `h`.
pub fn trapezoid_weights<T: Real>(n: usize, h: T) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![T::zero()],
        _ => {
            let mut w = vec![h; n];
            w[0] = h * T::half();
            w[n - 1] = h * T::half();
            w
        }
    }
}

/// Trapezoid integral of equally spaced samples.
pub fn trapezoid<T: Real>(values: &[T], h: T) -> T {
    match values.len() {
        0 | 1 => T::zero(),
        n => {
            let inner: T = values[1..n - 1].iter().copied().sum();
            h * (inner + T::half() * (values[0] + values[n - 1]))
        }
    }
}

/// Running trapezoid integral: `out[j] = ∫_{x_0}^{x_j} f`.
pub fn cumulative_trapezoid<T: Real>(values: &[T], h: T) -> Vec<T> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = T::zero();
    for (j, &v) in values.iter().enumerate() {
        if j > 0 {
            acc += T::half() * h * (values[j - 1] + v);
        }
        out.push(acc);
    }
    out
}

/// Adaptive-free reference quadrature of a smooth function on `[a, b]` using a
/// fine composite Simpson rule with `2 * panels` subintervals.
pub fn simpson<T: Real>(f: impl Fn(T) -> T, a: T, b: T, panels: usize) -> T {
    let n = 2 * panels.max(1);
    let h = (b - a) / T::from_count(n);
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let x = a + h * T::from_count(i);
        acc += if i % 2 == 1 { T::lit(4.0) } else { T::two() } * f(x);
    }
    acc * h / T::lit(3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_integrates_linear_exactly() {
        let h = 0.25;
        let v: Vec<f64> = (0..9).map(|i| 3.0 * i as f64 * h + 1.0).collect();
        // ∫_0^2 (3x + 1) dx = 8
        assert!((trapezoid(&v, h) - 8.0).abs() < 1e-14);
        let c = cumulative_trapezoid(&v, h);
        assert!((c[8] - 8.0).abs() < 1e-14);
        assert_eq!(c[0], 0.0);
    }

    #[test]
    fn weights_sum_to_length() {
        let w = trapezoid_weights(11, 0.1_f64);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert_eq!(trapezoid_weights::<f64>(1, 0.1), vec![0.0]);
    }

    #[test]
    fn simpson_is_accurate_on_smooth_integrand() {
        let v = simpson(|x: f64| x.sin(), 0.0, std::f64::consts::PI, 200);
        assert!((v - 2.0).abs() < 1e-9);
    }
}
