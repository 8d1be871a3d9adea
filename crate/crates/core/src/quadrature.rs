//! Composite Gauss–Legendre rules on the season domain.
//!
//! Panels are split at every breakpoint of the bases involved, so products of
//! piecewise polynomial elements are integrated exactly. Panels are further
//! capped in length so Fourier elements are resolved to rounding error.

use std::f64::consts::PI;

/// Gauss points per panel; exact for polynomials up to degree 15.
pub const GAUSS_POINTS: usize = 8;

/// Minimum number of panels covering the full domain.
pub const MIN_PANELS: usize = 256;

/// Nodes and weights of a quadrature rule on some interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
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

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

impl Quadrature {
    /// Composite rule on `[a, b]` split at `breaks` (values outside are
    /// ignored) with no panel longer than `max_panel`.
    pub fn composite(a: f64, b: f64, breaks: &[f64], max_panel: f64) -> Self {
        let mut cuts: Vec<f64> = Vec::with_capacity(breaks.len() + 2);
        cuts.push(a);
        cuts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
        cuts.push(b);
        cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        cuts.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * (b - a).abs().max(1.0));

        let (gx, gw) = gauss_legendre(GAUSS_POINTS);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for pair in cuts.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            let pieces = ((hi - lo) / max_panel).ceil().max(1.0) as usize;
            let h = (hi - lo) / pieces as f64;
            for p in 0..pieces {
                let pa = lo + p as f64 * h;
                let pb = if p + 1 == pieces { hi } else { pa + h };
                let half = 0.5 * (pb - pa);
                let mid = 0.5 * (pa + pb);
                for (x, w) in gx.iter().zip(&gw) {
                    nodes.push(mid + half * x);
                    weights.push(half * w);
                }
            }
        }
        Quadrature { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integral of a function sampled at the rule's nodes.
    pub fn integrate_values(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.weights.len());
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, w)| w * f(x))
            .sum()
    }
}
