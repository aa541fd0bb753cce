//! Composite Gauss–Legendre quadrature.

use std::sync::OnceLock;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// found by Newton iteration on the Legendre polynomial.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
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
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn rule16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// Integrates `f` over `[a, b]` with `panels` equal panels of the 16-point rule.
pub fn integrate(a: f64, b: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let (nodes, weights) = rule16();
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + h * p as f64;
        let mid = lo + 0.5 * h;
        let half = 0.5 * h;
        let mut s = 0.0;
        for (x, w) in nodes.iter().zip(weights) {
            s += w * f(mid + half * x);
        }
        total += s * half;
    }
    total
}

/// Points and weights of the composite 16-point rule on `[a, b]`.
pub fn panel_points(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let (nodes, weights) = rule16();
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * nodes.len());
    for p in 0..panels {
        let mid = a + h * (p as f64 + 0.5);
        for (x, w) in nodes.iter().zip(weights) {
            out.push((mid + 0.5 * h * x, 0.5 * h * w));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixteen_point_rule_matches_tabulated_values() {
        let (x, w) = gauss_legendre(16);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // largest node and its weight from standard tables
        assert!((x[15] - 0.989_400_934_991_649_9).abs() < 1e-14);
        assert!((w[15] - 0.027_152_459_411_754_1).abs() < 1e-14);
    }

    #[test]
    fn integrates_polynomials_and_gaussian() {
        // exact for degree <= 31 on each panel
        let v = integrate(0.0, 2.0, 1, |x| x.powi(31));
        assert!((v - 2f64.powi(32) / 32.0).abs() / v < 1e-13);
        let g = integrate(-10.0, 10.0, 20, |x| (-0.5 * x * x).exp());
        assert!((g - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-13);
        let pts = panel_points(-10.0, 10.0, 20);
        let g2: f64 = pts.iter().map(|(x, w)| w * (-0.5 * x * x).exp()).sum();
        assert!((g2 - g).abs() < 1e-13);
    }
}
