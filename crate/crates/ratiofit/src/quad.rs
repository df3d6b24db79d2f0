//! Gauss-Legendre quadrature for population-risk oracles.
//!
//! Nodes and weights are computed by Newton iteration on the Legendre
//! recurrence; 2048 nodes on a 1-D interval resolve the Gaussian-mixture
//! integrands used by the tests to far below 1e-10.

/// Nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Rule with `n` nodes.
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "need at least two nodes");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi-style initial guess for the i-th root.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_deriv(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integrate f over [a, b].
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Integrate f over the 2-D box [a0,b0] x [a1,b1] with the tensor rule.
    pub fn integrate_2d(
        &self,
        (a0, b0): (f64, f64),
        (a1, b1): (f64, f64),
        mut f: impl FnMut(f64, f64) -> f64,
    ) -> f64 {
        let half0 = 0.5 * (b0 - a0);
        let mid0 = 0.5 * (a0 + b0);
        let half1 = 0.5 * (b1 - a1);
        let mid1 = 0.5 * (a1 + b1);
        let mut total = 0.0;
        for (&x0, &w0) in self.nodes.iter().zip(&self.weights) {
            let u = mid0 + half0 * x0;
            let mut inner = 0.0;
            for (&x1, &w1) in self.nodes.iter().zip(&self.weights) {
                inner += w1 * f(u, mid1 + half1 * x1);
            }
            total += w0 * inner;
        }
        total * half0 * half1
    }
}

/// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 2..=n {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = p_next;
    }
    let d = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, d)
}
