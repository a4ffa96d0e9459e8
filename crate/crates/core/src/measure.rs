//! Finite measures on signal labels, mixed norms, and the observation model
//! `Y = B Φ(ϑ) + W`.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::dictionary::Dictionary;
use crate::error::{Error, Result};

/// `ν = Σ_z a_z δ_z` over `n` atoms, represented by its weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Rejects negative or non-finite weights and measures without positive mass.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some(i) = weights.iter().position(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::NegativeWeight(i));
        }
        if !weights.iter().any(|&w| w > 0.0) {
            return Err(Error::EmptyMeasure);
        }
        Ok(DiscreteMeasure { weights })
    }

    /// Counting measure on `n` atoms.
    pub fn counting(n: usize) -> Result<Self> {
        Self::new(alloc::vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `ν(𝒵)`.
    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn a_max(&self) -> f64 {
        self.weights.iter().cloned().fold(0.0, f64::max)
    }

    /// `‖f‖_{L^p(ν)}` for `p ∈ [1, ∞]`; `L^∞` is the max over positive-weight atoms.
    pub fn lp_norm(&self, f: &[f64], p: f64) -> Result<f64> {
        if f.len() != self.len() {
            return Err(Error::Shape("function length differs from measure size"));
        }
        check_exponent(p)?;
        Ok(self.lp_norm_unchecked(f.iter().cloned(), p))
    }

    pub(crate) fn lp_norm_unchecked<I: IntoIterator<Item = f64>>(&self, f: I, p: f64) -> f64 {
        let pairs = self.weights.iter().zip(f);
        if p.is_infinite() {
            pairs
                .filter(|(w, _)| **w > 0.0)
                .fold(0.0, |m, (_, v)| m.max(v.abs()))
        } else if p == 1.0 {
            pairs.map(|(w, v)| w * v.abs()).sum()
        } else if p == 2.0 {
            libm::sqrt(pairs.map(|(w, v)| w * v * v).sum())
        } else {
            libm::pow(pairs.map(|(w, v)| w * libm::pow(v.abs(), p)).sum(), 1.0 / p)
        }
    }

    /// `Σ_k ‖B_k‖_{L^p(ν)}` over the columns of `B` (n × K), `p ∈ [1, 2]`.
    pub fn mixed_norm(&self, b: &DMatrix<f64>, p: f64) -> Result<f64> {
        if !(1.0..=2.0).contains(&p) {
            return Err(Error::BadExponent(p));
        }
        if b.nrows() != self.len() {
            return Err(Error::Shape("rows of B differ from measure size"));
        }
        Ok(b
            .column_iter()
            .map(|c| self.lp_norm_unchecked(c.iter().cloned(), p))
            .sum())
    }

    /// `‖F‖_{L_T} = (Σ_z a_z ‖F(z)‖²)^{1/2}` for the rows of `F` (n × T).
    pub fn signal_norm(&self, f: &DMatrix<f64>) -> Result<f64> {
        if f.nrows() != self.len() {
            return Err(Error::Shape("rows differ from measure size"));
        }
        Ok(libm::sqrt(
            f.row_iter()
                .zip(&self.weights)
                .map(|(r, w)| w * r.norm_squared())
                .sum(),
        ))
    }

    /// Unit dual element `v(f)` with `‖v‖_{L^q} = 1` and `⟨v, f⟩_ν = ‖f‖_{L^p}`.
    ///
    /// For `f = 0` this is the constant `ν(𝒵)^{-1/q}`.
    pub fn dual_unit(&self, f: &[f64], p: f64) -> Result<Vec<f64>> {
        let norm = self.lp_norm(f, p)?;
        if !(p < f64::INFINITY) {
            return Err(Error::BadExponent(p));
        }
        if norm == 0.0 {
            let q = conjugate(p);
            let c = if q.is_infinite() {
                1.0
            } else {
                libm::pow(self.mass(), -1.0 / q)
            };
            return Ok(alloc::vec![c; f.len()]);
        }
        Ok(f.iter()
            .map(|&v| {
                let s = if v > 0.0 {
                    1.0
                } else if v < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                if p == 1.0 {
                    s
                } else {
                    s * libm::pow(v.abs() / norm, p - 1.0)
                }
            })
            .collect())
    }
}

/// Conjugate exponent `q` with `1/p + 1/q = 1`.
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if p >= 1.0 && !p.is_nan() {
        Ok(())
    } else {
        Err(Error::BadExponent(p))
    }
}

/// Coefficients `B` (n × K) and parameters `ϑ` (K) of a mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureParams {
    pub b: DMatrix<f64>,
    pub theta: Vec<f64>,
}

impl MixtureParams {
    pub fn new(b: DMatrix<f64>, theta: Vec<f64>) -> Result<Self> {
        if b.ncols() != theta.len() {
            return Err(Error::Shape("columns of B differ from number of parameters"));
        }
        Ok(MixtureParams { b, theta })
    }

    pub fn empty(n: usize) -> Self {
        MixtureParams {
            b: DMatrix::zeros(n, 0),
            theta: Vec::new(),
        }
    }

    pub fn n_signals(&self) -> usize {
        self.b.nrows()
    }

    pub fn n_atoms(&self) -> usize {
        self.theta.len()
    }

    /// Indices of components whose coefficient column is nonzero on the support of ν.
    pub fn support(&self, nu: &DiscreteMeasure) -> Vec<usize> {
        (0..self.n_atoms())
            .filter(|&k| {
                self.b
                    .column(k)
                    .iter()
                    .zip(nu.weights())
                    .any(|(v, w)| *w > 0.0 && *v != 0.0)
            })
            .collect()
    }
}

/// Feature matrix with rows `φ(θ_k)ᵀ` (K × T).
pub fn feature_matrix<D: Dictionary>(dict: &D, theta: &[f64]) -> Result<DMatrix<f64>> {
    let mut phi = DMatrix::zeros(theta.len(), dict.dim());
    for (k, &t) in theta.iter().enumerate() {
        phi.row_mut(k).copy_from(&dict.feature(t)?.transpose());
    }
    Ok(phi)
}

/// `Y = B Φ(ϑ) + W`; pass `None` for noiseless data.
pub fn synthesize<D: Dictionary>(
    dict: &D,
    params: &MixtureParams,
    noise: Option<&DMatrix<f64>>,
) -> Result<DMatrix<f64>> {
    let phi = feature_matrix(dict, &params.theta)?;
    let mut y = &params.b * phi;
    if let Some(w) = noise {
        if w.shape() != y.shape() {
            return Err(Error::Shape("noise shape differs from signal shape"));
        }
        y += w;
    }
    Ok(y)
}

/// `R̂ = ν(𝒵)^{-1/2} ‖B* Φ(ϑ*) − B̂ Φ(ϑ̂)‖_{L_T}`.
pub fn prediction_error<D: Dictionary>(
    dict: &D,
    nu: &DiscreteMeasure,
    estimate: &MixtureParams,
    truth: &MixtureParams,
) -> Result<f64> {
    if estimate.n_signals() != nu.len() || truth.n_signals() != nu.len() {
        return Err(Error::Shape("coefficient rows differ from measure size"));
    }
    let diff = synthesize(dict, truth, None)? - synthesize(dict, estimate, None)?;
    Ok(nu.signal_norm(&diff)? / libm::sqrt(nu.mass()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms_on_small_examples() {
        let nu = DiscreteMeasure::new(alloc::vec![1.0, 2.0, 0.0]).unwrap();
        let f = [3.0, -4.0, 100.0];
        assert!((nu.lp_norm(&f, 1.0).unwrap() - 11.0).abs() < 1e-15);
        assert!((nu.lp_norm(&f, 2.0).unwrap() - libm::sqrt(41.0)).abs() < 1e-14);
        assert_eq!(nu.lp_norm(&f, f64::INFINITY).unwrap(), 4.0);
        assert!((nu.lp_norm(&f, 3.0).unwrap() - libm::cbrt(27.0 + 128.0)).abs() < 1e-12);
        assert_eq!(nu.lp_norm(&f, 0.5), Err(Error::BadExponent(0.5)));
    }

    #[test]
    fn measure_validation() {
        assert_eq!(DiscreteMeasure::new(alloc::vec![0.0, 0.0]), Err(Error::EmptyMeasure));
        assert_eq!(DiscreteMeasure::new(alloc::vec![1.0, -1.0]), Err(Error::NegativeWeight(1)));
        let b = DMatrix::from_row_slice(2, 1, &[3.0, 4.0]);
        let nu = DiscreteMeasure::counting(2).unwrap();
        assert!((nu.mixed_norm(&b, 2.0).unwrap() - 5.0).abs() < 1e-15);
        assert_eq!(nu.mixed_norm(&b, 3.0), Err(Error::BadExponent(3.0)));
    }

    #[test]
    fn dual_unit_pairs_to_norm() {
        let nu = DiscreteMeasure::new(alloc::vec![0.5, 1.0, 2.0]).unwrap();
        let f = [1.0, -2.0, 0.5];
        for p in [1.0, 1.5, 2.0] {
            let v = nu.dual_unit(&f, p).unwrap();
            let pair: f64 = nu.weights().iter().zip(&v).zip(&f).map(|((a, x), y)| a * x * y).sum();
            assert!((pair - nu.lp_norm(&f, p).unwrap()).abs() < 1e-12);
            assert!((nu.lp_norm(&v, conjugate(p)).unwrap() - 1.0).abs() < 1e-12);
        }
        let v0 = nu.dual_unit(&[0.0; 3], 2.0).unwrap();
        assert!((nu.lp_norm(&v0, 2.0).unwrap() - 1.0).abs() < 1e-14);
    }
}
