//! Gauss–Legendre rules and a refine-until-stable composite integrator.

use std::f64::consts::PI;

/// Nodes and weights of the n-point Gauss–Legendre rule on [−1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// ∫_a^b f with this rule.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(mid + half * x);
        }
        s * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 1..n {
        let k = k as f64;
        let p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    (p1, n * (x * p1 - p0) / (x * x - 1.0))
}

/// Outcome of a converged composite integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    /// ∫|f|, the scale against which convergence is judged.
    pub magnitude: f64,
    /// Last change between refinements, relative to `magnitude`.
    pub achieved: f64,
    pub panels: usize,
}

/// Composite Gauss–Legendre on equal panels, doubling the panel count
/// until two successive results differ by less than `tol` relative to
/// ∫|f|. `Err` carries the last relative change when `max_panels` is hit.
pub fn integrate_composite(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    tol: f64,
    max_panels: usize,
    f: impl Fn(f64) -> f64,
) -> Result<Integral, f64> {
    let eval = |panels: usize| {
        let h = (b - a) / panels as f64;
        let mut value = 0.0;
        let mut magnitude = 0.0;
        for p in 0..panels {
            let lo = a + h * p as f64;
            let hi = lo + h;
            let half = 0.5 * h;
            let mid = 0.5 * (lo + hi);
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let v = f(mid + half * x);
                value += w * half * v;
                magnitude += w * half * v.abs();
            }
        }
        (value, magnitude)
    };
    let mut panels = 1;
    let (mut prev, _) = eval(panels);
    let mut achieved = f64::INFINITY;
    while panels < max_panels {
        panels *= 2;
        let (value, magnitude) = eval(panels);
        achieved = if magnitude > 0.0 { (value - prev).abs() / magnitude } else { 0.0 };
        if achieved <= tol {
            return Ok(Integral { value, magnitude, achieved, panels });
        }
        prev = value;
    }
    Err(achieved)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(8);
        // degree 15 is the exactness limit of 8 points
        let v = rule.integrate(0.0, 2.0, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-10);
        let w: f64 = rule.weights.iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn large_rules_are_accurate() {
        for n in [16, 64, 257] {
            let rule = GaussLegendre::new(n);
            let v = rule.integrate(0.0, PI, |x| x.sin());
            assert!((v - 2.0).abs() < 1e-13, "n={n}: {v}");
        }
    }

    #[test]
    fn composite_converges_on_gaussian() {
        let rule = GaussLegendre::new(16);
        let r = integrate_composite(&rule, 0.0, 8.0, 1e-12, 1 << 10, |x| (-x * x).exp()).unwrap();
        assert!((r.value - PI.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn composite_reports_failure() {
        let rule = GaussLegendre::new(4);
        let r = integrate_composite(&rule, 0.0, 1.0, 1e-14, 2, |x| (200.0 * x).sin());
        assert!(r.is_err());
    }
}
