//! Quadrature rules: Gauss-Legendre on intervals, trapezoid on periodic axes
//! (spectrally accurate there), and tanh-sinh for endpoint-singular integrands.

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// P_n(x) and its derivative by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Legendre nodes and weights mapped to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (xs, ws) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        xs.iter().map(|x| mid + half * x).collect(),
        ws.iter().map(|w| half * w).collect(),
    )
}

/// Equispaced nodes and weights for a periodic axis of period b - a.
pub fn periodic_trapezoid(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let h = (b - a) / n as f64;
    (
        (0..n).map(|i| a + i as f64 * h).collect(),
        vec![h; n],
    )
}

/// Tanh-sinh quadrature on the open interval (a, b).
///
/// The integrand receives `(x, x - a, b - x)` with the endpoint distances
/// computed without cancellation, so integrable endpoint singularities can be
/// evaluated accurately. Node count doubles per level until the estimate is
/// stable to `tol`.
pub fn tanh_sinh<F: Fn(f64, f64, f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let t_max = 4.2;
    let mut prev = f64::NAN;
    let mut result = 0.0;
    for level in 2..=12u32 {
        let n = 1usize << level;
        let h = t_max / n as f64;
        let mut sum = 0.0;
        for k in -(n as i64)..=(n as i64) {
            let t = k as f64 * h;
            let s = std::f64::consts::FRAC_PI_2 * t.sinh();
            let x = s.tanh();
            let dx = std::f64::consts::FRAC_PI_2 * t.cosh() / s.cosh().powi(2);
            // 1 -+ tanh(s) without cancellation.
            let one_minus = 2.0 / ((2.0 * s).exp() + 1.0);
            let one_plus = 2.0 / ((-2.0 * s).exp() + 1.0);
            let (dist_a, dist_b) = (half * one_plus, half * one_minus);
            if dist_a <= 0.0 || dist_b <= 0.0 {
                continue;
            }
            let v = f(mid + half * x, dist_a, dist_b);
            if v.is_finite() {
                sum += v * dx;
            }
        }
        result = sum * h * half;
        if (result - prev).abs() <= tol * result.abs().max(1.0) {
            return result;
        }
        prev = result;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_exact_on_polynomials() {
        // Degree-2n-1 exactness: integrate x^k on [-1, 1].
        let (xs, ws) = gauss_legendre(8);
        for k in 0..16usize {
            let num: f64 = xs.iter().zip(&ws).map(|(x, w)| w * x.powi(k as i32)).sum();
            let exact = if k % 2 == 1 {
                0.0
            } else {
                2.0 / (k as f64 + 1.0)
            };
            assert_relative_eq!(num, exact, epsilon = 1e-13);
        }
    }

    #[test]
    fn gauss_legendre_mapped() {
        let (xs, ws) = gauss_legendre_on(32, 0.0, std::f64::consts::PI);
        let integral: f64 = xs.iter().zip(&ws).map(|(x, w)| w * x.sin()).sum();
        assert_relative_eq!(integral, 2.0, epsilon = 1e-13);
    }

    #[test]
    fn trapezoid_is_spectral_on_periodic() {
        let (xs, ws) = periodic_trapezoid(32, 0.0, 2.0 * std::f64::consts::PI);
        let integral: f64 = xs
            .iter()
            .zip(&ws)
            .map(|(x, w)| w * (x.sin().powi(2) + 0.5 * (3.0 * x).cos()))
            .sum();
        assert_relative_eq!(integral, std::f64::consts::PI, epsilon = 1e-12);
    }

    #[test]
    fn tanh_sinh_endpoint_singularity() {
        // int_0^1 1/sqrt(1-x) dx = 2.
        let v = tanh_sinh(|_, _, db| 1.0 / db.sqrt(), 0.0, 1.0, 1e-13);
        assert_relative_eq!(v, 2.0, epsilon = 1e-11);
    }
}
