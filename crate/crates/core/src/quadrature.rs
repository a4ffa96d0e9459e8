//! Adaptive Gauss-Legendre quadrature.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Nodes and weights of the `n`-point Gauss-Legendre rule on [-1, 1].
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = libm::cos(core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

pub(crate) struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Rule {
    pub(crate) fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        Rule { nodes, weights }
    }

    pub(crate) fn apply<F: FnMut(f64) -> f64>(&self, f: &mut F, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(c + h * x);
        }
        s * h
    }

    /// Adaptive bisection until the two-panel estimate agrees with the one-panel one.
    pub(crate) fn adaptive<F: FnMut(f64) -> f64>(
        &self,
        f: &mut F,
        a: f64,
        b: f64,
        tol: f64,
    ) -> Result<f64> {
        let whole = self.apply(f, a, b);
        self.refine(f, a, b, whole, tol, 0)
    }

    fn refine<F: FnMut(f64) -> f64>(
        &self,
        f: &mut F,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let left = self.apply(f, a, m);
        let right = self.apply(f, m, b);
        let both = left + right;
        if !both.is_finite() {
            return Err(Error::Quadrature(a, b));
        }
        if (both - whole).abs() <= tol * (1.0 + both.abs()) {
            return Ok(both);
        }
        if depth >= 40 {
            return Err(Error::Quadrature(a, b));
        }
        Ok(self.refine(f, a, m, left, 0.5 * tol, depth + 1)?
            + self.refine(f, m, b, right, 0.5 * tol, depth + 1)?)
    }
}
