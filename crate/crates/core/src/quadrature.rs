//! Numerical quadrature: double-exponential (tanh-sinh) for integrands with
//! endpoint singularities, and fixed-order Gauss-Legendre.

use std::f64::consts::FRAC_PI_2;

/// Integrates `f` over `[a, b]` with the tanh-sinh rule, halving the step
/// until two successive levels agree to `tol` (relative, absolute floor 1e-300).
///
/// Abscissae are formed from their distance to the nearer endpoint, so an
/// endpoint at 0 is approached down to the smallest positive doubles.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let half = 0.5 * (b - a);
    // Contribution of the node pair at parameter s (s > 0) plus its mirror.
    let pair = |s: f64| -> f64 {
        let u = FRAC_PI_2 * s.sinh();
        let e = (-2.0 * u).exp();
        // distance from an endpoint, scaled to [0, 2]: 1 - tanh(u) = 2e/(1+e)
        let d = 2.0 * e / (1.0 + e);
        let cosh_u = u.cosh();
        let w = FRAC_PI_2 * s.cosh() / (cosh_u * cosh_u);
        if d == 0.0 || !w.is_finite() {
            return 0.0;
        }
        let left = a + half * d;
        let right = b - half * d;
        let mut acc = 0.0;
        if left > a && left < b {
            acc += f(left);
        }
        if right > a && right < b {
            acc += f(right);
        }
        w * acc
    };
    let mut h = 0.5;
    let mut sum = FRAC_PI_2 * f(0.5 * (a + b));
    let mut k = 1;
    loop {
        let s = k as f64 * h;
        let term = pair(s);
        sum += term;
        if s > 6.5 {
            break;
        }
        k += 1;
    }
    let mut estimate = half * h * sum;
    for _level in 0..12 {
        h *= 0.5;
        // add the odd multiples of the new step
        let mut k = 1;
        loop {
            let s = k as f64 * h;
            if s > 6.5 {
                break;
            }
            sum += pair(s);
            k += 2;
        }
        let next = half * h * sum;
        let done = (next - estimate).abs() <= tol * next.abs().max(1e-300);
        estimate = next;
        if done {
            break;
        }
    }
    estimate
}

/// Gauss-Legendre nodes and weights of order `n` on `[-1, 1]`.
pub fn gauss_legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n == 0 { 0.0 } else { p0 };
            dp = nf * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Integrates `f` over `[a, b]` with an `n`-point Gauss-Legendre rule.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let (nodes, weights) = gauss_legendre_rule(n);
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    nodes
        .iter()
        .zip(&weights)
        .map(|(x, w)| w * f(c + h * x))
        .sum::<f64>()
        * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tanh_sinh_smooth_and_singular() {
        let v = tanh_sinh(|x| x.exp(), 0.0, 1.0, 1e-14);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-13);
        // ∫_0^1 x^{-1/2} = 2
        let v = tanh_sinh(|x| x.powf(-0.5), 0.0, 1.0, 1e-14);
        assert!((v - 2.0).abs() < 1e-10, "{v}");
        // ∫_0^1 ln x = -1
        let v = tanh_sinh(|x| x.ln(), 0.0, 1.0, 1e-14);
        assert!((v + 1.0).abs() < 1e-10, "{v}");
    }

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let v = gauss_legendre(|x| x.powi(9) - 3.0 * x * x, -1.0, 2.0, 5);
        let exact = (2f64.powi(10) - 1.0) / 10.0 - (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-12);
        let (_, w) = gauss_legendre_rule(33);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }
}
