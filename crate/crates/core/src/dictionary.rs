//! Parametric feature maps θ ↦ φ(θ) ∈ ℝ^T with analytic derivatives up to order three.
//!
//! Dictionaries expose the raw (unnormalised) map. [`FeatureJet`] turns it into the
//! unit-norm feature, its θ-derivatives, the metric `g = ‖∂φ‖²` with two of its
//! derivatives, and the covariant features `φ^{[i]} = (g^{-1/2} ∂_θ)^i φ`.

use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use nalgebra::DVector;

use crate::error::{Error, Result};

/// A smooth parametric family of vectors of fixed length on a compact interval.
pub trait Dictionary {
    /// Length T of every feature vector.
    fn dim(&self) -> usize;

    /// Compact parameter interval `[lo, hi]`.
    fn domain(&self) -> (f64, f64);

    /// Raw feature and its first three θ-derivatives. No domain check.
    fn raw_jet(&self, theta: f64) -> [DVector<f64>; 4];

    /// Raw feature only. Override when cheaper than the full jet.
    fn raw(&self, theta: f64) -> DVector<f64> {
        let [d0, ..] = self.raw_jet(theta);
        d0
    }

    fn check(&self, theta: f64) -> Result<()> {
        let (lo, hi) = self.domain();
        if theta.is_finite() && theta >= lo && theta <= hi {
            Ok(())
        } else {
            Err(Error::Domain(theta))
        }
    }

    /// Unit-norm feature φ(θ).
    fn feature(&self, theta: f64) -> Result<DVector<f64>> {
        self.check(theta)?;
        let mut v = self.raw(theta);
        let n = v.norm();
        if n <= 0.0 || !n.is_finite() {
            return Err(Error::Domain(theta));
        }
        v /= n;
        Ok(v)
    }

    /// k-th θ-derivative of the unit-norm feature, k ≤ 3.
    fn deriv(&self, theta: f64, k: usize) -> Result<DVector<f64>> {
        if k > 3 {
            return Err(Error::Invalid("derivative order above 3"));
        }
        let jet = self.jet(theta)?;
        Ok(jet.deriv[k].clone())
    }

    fn jet(&self, theta: f64) -> Result<FeatureJet> {
        self.check(theta)?;
        FeatureJet::from_raw(self.raw_jet(theta)).ok_or(Error::Domain(theta))
    }
}

/// Normalised feature with derivatives, metric and covariant features at one θ.
#[derive(Debug, Clone)]
pub struct FeatureJet {
    /// θ-derivatives of φ = φ_raw / ‖φ_raw‖, orders 0..=3.
    pub deriv: [DVector<f64>; 4],
    /// `g`, `g'`, `g''`.
    pub g: [f64; 3],
    /// `φ^{[0]} .. φ^{[3]}`.
    pub cov: [DVector<f64>; 4],
}

impl FeatureJet {
    pub fn from_raw(raw: [DVector<f64>; 4]) -> Option<Self> {
        let [p0, p1, p2, p3] = &raw;
        let s0 = p0.dot(p0);
        if !(s0 > 0.0) || !s0.is_finite() {
            return None;
        }
        let s1 = 2.0 * p0.dot(p1);
        let s2 = 2.0 * (p1.dot(p1) + p0.dot(p2));
        let s3 = 2.0 * (3.0 * p1.dot(p2) + p0.dot(p3));
        let m = inv_sqrt_jet(s0, s1, s2, s3);
        let d0 = p0 * m[0];
        let d1 = p1 * m[0] + p0 * m[1];
        let d2 = p2 * m[0] + p1 * (2.0 * m[1]) + p0 * m[2];
        let d3 = p3 * m[0] + p2 * (3.0 * m[1]) + p1 * (3.0 * m[2]) + p0 * m[3];

        let g0 = d1.dot(&d1);
        if !(g0 > 0.0) {
            return None;
        }
        let g1 = 2.0 * d1.dot(&d2);
        let g2 = 2.0 * (d2.dot(&d2) + d1.dot(&d3));
        let rg = libm::sqrt(g0);
        let c1 = &d1 / rg;
        let c2 = &d2 / g0 - &d1 * (0.5 * g1 / (g0 * g0));
        let c3 = (&d3 / g0 - &d2 * (1.5 * g1 / (g0 * g0)) - &d1 * (0.5 * g2 / (g0 * g0))
            + &d1 * (g1 * g1 / (g0 * g0 * g0)))
            / rg;
        Some(FeatureJet {
            cov: [d0.clone(), c1, c2, c3],
            deriv: [d0, d1, d2, d3],
            g: [g0, g1, g2],
        })
    }
}

/// Derivatives 0..=3 of `S^{-1/2}` given derivatives of S.
pub(crate) fn inv_sqrt_jet(s0: f64, s1: f64, s2: f64, s3: f64) -> [f64; 4] {
    let r = 1.0 / libm::sqrt(s0);
    let r3 = r / s0;
    let r5 = r3 / s0;
    let r7 = r5 / s0;
    [
        r,
        -0.5 * r3 * s1,
        0.75 * r5 * s1 * s1 - 0.5 * r3 * s2,
        -1.875 * r7 * s1 * s1 * s1 + 2.25 * r5 * s1 * s2 - 0.5 * r3 * s3,
    ]
}

/// Gaussian bumps `exp(-(t_i - θ)² / (2σ²))` sampled on a fixed grid.
#[derive(Debug, Clone)]
pub struct GaussianLocation {
    sigma: f64,
    grid: Vec<f64>,
    domain: (f64, f64),
}

impl GaussianLocation {
    pub fn new(sigma: f64, grid: Vec<f64>, domain: (f64, f64)) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::Invalid("sigma must be positive"));
        }
        check_grid_and_domain(&grid, domain)?;
        Ok(GaussianLocation { sigma, grid, domain })
    }

    /// `T` equispaced samples on `[a, b]`.
    pub fn uniform(sigma: f64, t: usize, a: f64, b: f64, domain: (f64, f64)) -> Result<Self> {
        Self::new(sigma, linspace(a, b, t), domain)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl Dictionary for GaussianLocation {
    fn dim(&self) -> usize {
        self.grid.len()
    }

    fn domain(&self) -> (f64, f64) {
        self.domain
    }

    fn raw(&self, theta: f64) -> DVector<f64> {
        DVector::from_iterator(
            self.grid.len(),
            self.grid.iter().map(|&t| {
                let u = (theta - t) / self.sigma;
                libm::exp(-0.5 * u * u)
            }),
        )
    }

    fn raw_jet(&self, theta: f64) -> [DVector<f64>; 4] {
        let n = self.grid.len();
        let s = self.sigma;
        let mut out = [
            DVector::zeros(n),
            DVector::zeros(n),
            DVector::zeros(n),
            DVector::zeros(n),
        ];
        for (i, &t) in self.grid.iter().enumerate() {
            let u = (theta - t) / s;
            let e = libm::exp(-0.5 * u * u);
            out[0][i] = e;
            out[1][i] = -u / s * e;
            out[2][i] = (u * u - 1.0) / (s * s) * e;
            out[3][i] = -(u * u * u - 3.0 * u) / (s * s * s) * e;
        }
        out
    }
}

/// Trigonometric features `(1, √2 cos 2πfθ, √2 sin 2πfθ)_{1≤f≤f_c}`, T = 2f_c + 1.
///
/// The induced kernel is the Dirichlet kernel of order `f_c`.
#[derive(Debug, Clone)]
pub struct FourierLowpass {
    cutoff: usize,
    domain: (f64, f64),
}

impl FourierLowpass {
    pub fn new(cutoff: usize, domain: (f64, f64)) -> Result<Self> {
        if cutoff == 0 {
            return Err(Error::Invalid("cutoff must be at least 1"));
        }
        if !(domain.0 < domain.1) || !domain.0.is_finite() || !domain.1.is_finite() {
            return Err(Error::Invalid("empty domain"));
        }
        Ok(FourierLowpass { cutoff, domain })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Constant metric `4π² f_c (f_c + 1) / 3`.
    pub fn metric(&self) -> f64 {
        let f = self.cutoff as f64;
        4.0 * PI * PI * f * (f + 1.0) / 3.0
    }
}

impl Dictionary for FourierLowpass {
    fn dim(&self) -> usize {
        2 * self.cutoff + 1
    }

    fn domain(&self) -> (f64, f64) {
        self.domain
    }

    fn raw_jet(&self, theta: f64) -> [DVector<f64>; 4] {
        let n = self.dim();
        let mut out = [
            DVector::zeros(n),
            DVector::zeros(n),
            DVector::zeros(n),
            DVector::zeros(n),
        ];
        out[0][0] = 1.0;
        for f in 1..=self.cutoff {
            let w = 2.0 * PI * f as f64;
            let (s, c) = libm::sincos(w * theta);
            let (ic, is) = (2 * f - 1, 2 * f);
            out[0][ic] = SQRT_2 * c;
            out[1][ic] = -SQRT_2 * w * s;
            out[2][ic] = -SQRT_2 * w * w * c;
            out[3][ic] = SQRT_2 * w * w * w * s;
            out[0][is] = SQRT_2 * s;
            out[1][is] = SQRT_2 * w * c;
            out[2][is] = -SQRT_2 * w * w * s;
            out[3][is] = -SQRT_2 * w * w * w * c;
        }
        out
    }
}

/// Decaying exponentials `exp(-θ t_i)` on a grid of nonnegative times, θ > 0.
#[derive(Debug, Clone)]
pub struct ExponentialDecay {
    grid: Vec<f64>,
    domain: (f64, f64),
}

impl ExponentialDecay {
    pub fn new(grid: Vec<f64>, domain: (f64, f64)) -> Result<Self> {
        check_grid_and_domain(&grid, domain)?;
        if !(domain.0 > 0.0) {
            return Err(Error::Invalid("decay rates must be positive"));
        }
        if grid.iter().any(|&t| t < 0.0) {
            return Err(Error::Invalid("sample times must be nonnegative"));
        }
        Ok(ExponentialDecay { grid, domain })
    }
}

impl Dictionary for ExponentialDecay {
    fn dim(&self) -> usize {
        self.grid.len()
    }

    fn domain(&self) -> (f64, f64) {
        self.domain
    }

    fn raw(&self, theta: f64) -> DVector<f64> {
        DVector::from_iterator(self.grid.len(), self.grid.iter().map(|&t| libm::exp(-theta * t)))
    }

    fn raw_jet(&self, theta: f64) -> [DVector<f64>; 4] {
        let n = self.grid.len();
        let mut out = [
            DVector::zeros(n),
            DVector::zeros(n),
            DVector::zeros(n),
            DVector::zeros(n),
        ];
        for (i, &t) in self.grid.iter().enumerate() {
            let e = libm::exp(-theta * t);
            out[0][i] = e;
            out[1][i] = -t * e;
            out[2][i] = t * t * e;
            out[3][i] = -t * t * t * e;
        }
        out
    }
}

/// The built-in dictionaries behind one type, as selected by configuration.
#[derive(Debug, Clone)]
pub enum BuiltinDictionary {
    GaussianLocation(GaussianLocation),
    FourierLowpass(FourierLowpass),
    ExponentialDecay(ExponentialDecay),
}

macro_rules! delegate {
    ($self:ident, $d:ident => $e:expr) => {
        match $self {
            BuiltinDictionary::GaussianLocation($d) => $e,
            BuiltinDictionary::FourierLowpass($d) => $e,
            BuiltinDictionary::ExponentialDecay($d) => $e,
        }
    };
}

impl Dictionary for BuiltinDictionary {
    fn dim(&self) -> usize {
        delegate!(self, d => d.dim())
    }

    fn domain(&self) -> (f64, f64) {
        delegate!(self, d => d.domain())
    }

    fn raw_jet(&self, theta: f64) -> [DVector<f64>; 4] {
        delegate!(self, d => d.raw_jet(theta))
    }

    fn raw(&self, theta: f64) -> DVector<f64> {
        delegate!(self, d => d.raw(theta))
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![a],
        _ => (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

fn check_grid_and_domain(grid: &[f64], domain: (f64, f64)) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::Invalid("sample grid must be finite and nonempty"));
    }
    if !(domain.0 < domain.1) || !domain.0.is_finite() || !domain.1.is_finite() {
        return Err(Error::Invalid("empty domain"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd4(f: &dyn Fn(f64) -> DVector<f64>, x: f64, h: f64) -> DVector<f64> {
        (f(x - 2.0 * h) - f(x - h) * 8.0 + f(x + h) * 8.0 - f(x + 2.0 * h)) / (12.0 * h)
    }

    fn check_derivs<D: Dictionary>(d: &D) {
        let (lo, hi) = d.domain();
        let h = 1e-4 * (hi - lo);
        for k in 0..5 {
            let t = lo + (hi - lo) * (0.1 + 0.2 * k as f64);
            for order in 1..=3 {
                let exact = d.deriv(t, order).unwrap();
                let prev = |x: f64| d.jet(x).unwrap().deriv[order - 1].clone();
                let approx = fd4(&prev, t, h);
                let rel = (&exact - &approx).norm() / exact.norm().max(1e-300);
                assert!(rel < 1e-4, "order {order} at {t}: rel {rel}");
            }
        }
    }

    #[test]
    fn builtin_derivatives_match_finite_differences() {
        check_derivs(&GaussianLocation::uniform(0.05, 200, 0.0, 1.0, (0.2, 0.8)).unwrap());
        check_derivs(&FourierLowpass::new(3, (0.0, 1.0)).unwrap());
        check_derivs(&ExponentialDecay::new(linspace(0.0, 20.0, 300), (0.5, 2.0)).unwrap());
    }

    #[test]
    fn features_have_unit_norm_and_reject_outside_domain() {
        let d = GaussianLocation::uniform(0.05, 100, 0.0, 1.0, (0.2, 0.8)).unwrap();
        assert!((d.feature(0.5).unwrap().norm() - 1.0).abs() < 1e-14);
        assert_eq!(d.feature(0.9), Err(Error::Domain(0.9)));
        assert_eq!(d.feature(f64::NAN).is_err(), true);
    }

    #[test]
    fn fourier_metric_is_constant() {
        let d = FourierLowpass::new(4, (0.0, 1.0)).unwrap();
        for t in [0.0, 0.13, 0.77] {
            let jet = d.jet(t).unwrap();
            assert!((jet.g[0] - d.metric()).abs() < 1e-9 * d.metric());
            assert!(jet.g[1].abs() < 1e-7 * d.metric());
        }
    }

    #[test]
    fn covariant_features_are_orthonormal_where_expected() {
        let d = GaussianLocation::uniform(0.04, 400, 0.0, 1.0, (0.3, 0.7)).unwrap();
        let j = d.jet(0.41).unwrap();
        assert!(j.cov[0].dot(&j.cov[1]).abs() < 1e-12);
        assert!((j.cov[1].norm() - 1.0).abs() < 1e-12);
        assert!((j.cov[2].dot(&j.cov[0]) + 1.0).abs() < 1e-12);
        assert!(j.cov[2].dot(&j.cov[1]).abs() < 1e-10);
    }
}
