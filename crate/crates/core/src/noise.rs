//! Gaussian noise, the suprema `M_i`, χ² tail bounds, and the constants and
//! tuning parameters prescribed by the corollaries.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::certificates::CertificateConstants;
use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::kernel::{FeatureGrid, KernelModel};
use crate::measure::DiscreteMeasure;
use crate::search::{argmax, golden_max};

/// I.i.d. centered Gaussian noise with variance `σ²Δ_T` per entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub sigma: f64,
    pub delta_t: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(sigma: f64, delta_t: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::Invalid("noise level must be nonnegative"));
        }
        if !(delta_t > 0.0) || !delta_t.is_finite() {
            return Err(Error::Invalid("variance decay must be positive"));
        }
        Ok(NoiseModel { sigma, delta_t, seed })
    }

    /// Standard deviation of each entry.
    pub fn scale(&self) -> f64 {
        self.sigma * libm::sqrt(self.delta_t)
    }
}

/// An `n × T` noise matrix drawn from stream `stream` of the model seed.
///
/// Entries are drawn row by row, so the result depends only on `(seed, stream, n, T)`.
pub fn sample_noise(model: &NoiseModel, n: usize, t: usize, stream: u64) -> DMatrix<f64> {
    let s = model.scale();
    if s == 0.0 {
        return DMatrix::zeros(n, t);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(model.seed);
    rng.set_stream(stream);
    let mut w = DMatrix::zeros(n, t);
    for i in 0..n {
        for j in 0..t {
            let x: f64 = StandardNormal.sample(&mut rng);
            w[(i, j)] = s * x;
        }
    }
    w
}

/// Location and value of a supremum over `θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupStat {
    pub value: f64,
    pub theta: f64,
    pub grid_step: f64,
}

/// `sup_θ ‖⟨W(·), φ^{[i]}(θ)⟩‖_{L^q(ν)}` for `W` of shape `n × T`.
///
/// Scans the tabulated features, then polishes by golden section between the
/// neighbours of the best grid point. Ties go to the smaller `θ`.
pub fn sup_stat<D: Dictionary>(
    w: &DMatrix<f64>,
    model: &KernelModel<D>,
    grid: &FeatureGrid,
    nu: &DiscreteMeasure,
    i: usize,
    q: f64,
) -> Result<SupStat> {
    if i > grid.max_order() {
        return Err(Error::Invalid("feature grid lacks the requested order"));
    }
    if w.nrows() != nu.len() {
        return Err(Error::Shape("rows of W differ from measure size"));
    }
    if w.ncols() != grid.cov[i].nrows() {
        return Err(Error::Shape("columns of W differ from feature dimension"));
    }
    if !(q >= 1.0) {
        return Err(Error::BadExponent(q));
    }
    let corr = w * &grid.cov[i];
    let values: Vec<f64> = corr
        .column_iter()
        .map(|c| nu.lp_norm_unchecked(c.iter().cloned(), q))
        .collect();
    let k = match argmax(&values) {
        Some(k) => k,
        None => return Err(Error::Invalid("non-finite correlations")),
    };
    let mut best = SupStat {
        value: values[k],
        theta: grid.theta[k],
        grid_step: grid.step,
    };
    if best.value == 0.0 {
        return Ok(best);
    }
    let dict = model.dictionary();
    let a = grid.theta[k.saturating_sub(1)];
    let b = grid.theta[(k + 1).min(grid.len() - 1)];
    let mut f = |t: f64| match feature_of_order(dict, t, i) {
        Ok(phi) => nu.lp_norm_unchecked((w * phi).iter().cloned(), q),
        Err(_) => f64::NEG_INFINITY,
    };
    let (t, v) = golden_max(&mut f, a, b, 1e-12 * (1.0 + (b - a).abs()));
    if v > best.value {
        best.value = v;
        best.theta = t;
    }
    Ok(best)
}

pub(crate) fn feature_of_order<D: Dictionary>(
    dict: &D,
    theta: f64,
    i: usize,
) -> Result<nalgebra::DVector<f64>> {
    if i == 0 {
        dict.feature(theta)
    } else {
        let mut jet = dict.jet(theta)?;
        Ok(core::mem::replace(&mut jet.cov[i], nalgebra::DVector::zeros(0)))
    }
}

/// `f_n(x) = exp(−x(1 − 2√(n/x)))`.
pub fn f_tail(n: usize, x: f64) -> f64 {
    libm::exp(-x + 2.0 * libm::sqrt(n as f64 * x))
}

/// `g_n(x) = x^{n/2} e^{−x/2} / Γ(n/2)`, evaluated in the log domain.
pub fn g_tail(n: usize, x: f64) -> f64 {
    let h = 0.5 * n as f64;
    if x == 0.0 {
        return 0.0;
    }
    libm::exp(h * libm::log(x) - 0.5 * x - libm::lgamma(h))
}

/// Tail bound for `sup_θ Σ_z a_z ⟨h(θ), W(z)⟩²` when `‖h‖ ≤ C₁` and `‖D̃h‖ ≤ C₂`.
///
/// Returns the raw bound, which may exceed 1.
#[allow(clippy::too_many_arguments)]
pub fn chi2_bound(
    u: f64,
    n: usize,
    c1: f64,
    c2: f64,
    sigma: f64,
    delta_t: f64,
    a_max: f64,
    diam: f64,
) -> Result<f64> {
    if n == 0 || !(c1 > 0.0) {
        return Err(Error::Invalid("chi-square bound needs n ≥ 1 and C1 > 0"));
    }
    let scale = sigma * sigma * a_max * delta_t * c1 * c1;
    if scale == 0.0 {
        return Ok(0.0);
    }
    if !(u >= (n as f64 + 1.0) * scale) {
        return Err(Error::Precondition("u below (n+1)·σ²·a_max·Δ_T·C1²"));
    }
    let x = u / scale;
    let lead = 4.0 * c2 * diam / (c1 * libm::exp2(0.5 * n as f64));
    Ok(f_tail(n, x) + lead * g_tail(n, x))
}

/// Constants of the probability events and of the corollaries.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoreticalConstants {
    /// `𝒞`, the event level `M_i ≤ 𝒞κν(𝒵)`.
    pub c_cal: f64,
    /// `𝒞′ = 𝒞 ∨ 1`.
    pub c_prime: f64,
    /// `C`.
    pub c_big: f64,
    pub c0: f64,
    pub c1: f64,
    pub c1_prime: f64,
    pub c2: f64,
    pub c2_prime: f64,
    pub c3: f64,
    pub certificate: CertificateConstants,
    pub l22: f64,
    pub l3: f64,
}

impl TheoreticalConstants {
    /// `𝒞κν(𝒵)`.
    pub fn event_threshold(&self, kappa: f64, nu_mass: f64) -> f64 {
        self.c_cal * kappa * nu_mass
    }

    /// `𝒞₀ √s ν(𝒵)^{1/p} κ`.
    pub fn prediction_bound(&self, s: usize, nu_mass: f64, p: f64, kappa: f64) -> f64 {
        self.c0 * libm::sqrt(s as f64) * libm::pow(nu_mass, 1.0 / p) * kappa
    }
}

/// Assemble the event and rate constants from the certificate constants.
///
/// Requires positive constants and `C_F ≤ 1`.
pub fn event_constants(
    cc: &CertificateConstants,
    l22: f64,
    l3: f64,
) -> Result<TheoreticalConstants> {
    let (cf, df, cn, cnp, dn, cb, db) =
        (cc.c_f, cc.d_f, cc.c_n, cc.c_n_prime, cc.d_n, cc.c_b, cc.d_b);
    let all = [cf, df, cn, cnp, dn, cb, db, l22, l3];
    if all.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Invalid("constants must be positive and finite"));
    }
    if cf > 1.0 {
        return Err(Error::Invalid("C_F must not exceed 1"));
    }
    let c_cal = (cf / (2.0 * (2.0 - cf + df))).min(cn / (2.0 * (cnp + dn + 0.5)));
    let c_prime = c_cal.max(1.0);
    let c_big = 4.0
        * c_prime
        * (1.0 + c_prime / cn * (2.0 * cnp + dn + 1.0) + c_prime / cf * (3.0 - 2.0 * cf + df));
    let c0 = (db + 2.0 * cb) * c_big;
    let s22 = libm::sqrt(2.0 * l22);
    let c1_prime = libm::sqrt(c_cal * c_cal / (2.0 * l22).max(1.0));
    let c1 = libm::sqrt(2.0) / c1_prime;
    let c2_prime = 4.0 * 1f64.max(s22).max(libm::sqrt(l3) / libm::sqrt(l22));
    let c2 = 3.0 * c2_prime.max(1.0);
    let c3 = 2.0 / c_cal * s22.max(1.0);
    Ok(TheoreticalConstants {
        c_cal,
        c_prime,
        c_big,
        c0,
        c1,
        c1_prime,
        c2,
        c2_prime,
        c3,
        certificate: cc.clone(),
        l22,
        l3,
    })
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 1.0 {
        Ok(())
    } else {
        Err(Error::Invalid("confidence level τ must exceed 1"))
    }
}

/// `𝒞₁σ√(a_max Δ_T n / ν(𝒵)²)(1 + √(1 + log τ / n))`, the tuning for `p = 2`.
#[allow(clippy::too_many_arguments)]
pub fn kappa_p2(
    tau: f64,
    n: usize,
    sigma: f64,
    delta_t: f64,
    a_max: f64,
    nu_mass: f64,
    c1: f64,
) -> Result<f64> {
    check_tau(tau)?;
    let nf = n as f64;
    Ok(c1 * sigma * libm::sqrt(a_max * delta_t * nf) / nu_mass
        * (1.0 + libm::sqrt(1.0 + libm::log(tau) / nf)))
}

/// `𝒞₃σ√(Δ_T log τ)/ν(𝒵)`, the tuning for `p = 1`.
pub fn kappa_p1(tau: f64, sigma: f64, delta_t: f64, nu_mass: f64, c3: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok(c3 * sigma * libm::sqrt(delta_t * libm::log(tau)) / nu_mass)
}

/// `F(n) = g_n(n) e^{−n/2} / 2^{n/2}`.
pub fn f_seq(n: usize) -> f64 {
    let h = 0.5 * n as f64;
    g_tail(n, n as f64) * libm::exp(-h) / libm::exp2(h)
}

/// `𝒞₂(1/τ + diam·F(n)/√τ)`.
pub fn failure_prob_p2(tau: f64, n: usize, diam: f64, c2: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok(c2 * (1.0 / tau + diam * f_seq(n) / libm::sqrt(tau)))
}

/// `𝒞₄ n (diam/(τ√log τ) ∨ 1/τ)`.
pub fn failure_prob_p1(tau: f64, n: usize, diam: f64, c4: f64) -> Result<f64> {
    check_tau(tau)?;
    let a = diam / (tau * libm::sqrt(libm::log(tau)));
    Ok(c4 * n as f64 * a.max(1.0 / tau))
}

/// `𝒞₄ = 3𝒞₄′`.
pub fn c4_from_prime(c4_prime: f64) -> f64 {
    3.0 * c4_prime
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::E;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    fn unit_constants() -> CertificateConstants {
        CertificateConstants {
            c_n: 1.0,
            c_n_prime: 1.0,
            c_f: 1.0,
            c_b: 2.0,
            d_n: 1.0,
            d_f: 1.0,
            d_b: 2.0,
            r: 0.5,
            rho: 1.0,
            u_inf: 0.1,
            u_inf_prime: 0.1,
        }
    }

    #[test]
    fn tails_at_reference_points() {
        for n in 1..6 {
            assert!(close(f_tail(n, 4.0 * n as f64), 1.0, 1e-14));
            assert!(close(f_tail(n, 9.0 * n as f64), libm::exp(-3.0 * n as f64), 1e-13));
        }
        assert!(close(g_tail(2, 2.0), 2.0 / E, 1e-15));
        assert!(close(f_seq(2), libm::exp(-2.0), 1e-15));
    }

    #[test]
    fn chi2_bound_formula() {
        let b = chi2_bound(2.0, 1, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let want = f_tail(1, 2.0) + 4.0 / libm::sqrt(2.0) * g_tail(1, 2.0);
        assert!(close(b, want, 1e-15));
        let b0 = chi2_bound(5.0, 2, 1.0, 3.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(b0, f_tail(2, 5.0));
        assert!(matches!(
            chi2_bound(1.9, 1, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0),
            Err(Error::Precondition(_))
        ));
        assert_eq!(chi2_bound(1.0, 1, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0), Ok(0.0));
    }

    #[test]
    fn unit_event_constants() {
        let mut cc = unit_constants();
        cc.c_b = 1.0;
        cc.d_b = 1.0;
        let tc = event_constants(&cc, 0.5, 1.0).unwrap();
        assert!(close(tc.c_cal, 0.2, 1e-15));
        assert_eq!(tc.c_prime, 1.0);
        assert!(close(tc.c1_prime, tc.c_cal, 1e-15));
        let tc = event_constants(&unit_constants(), 0.5, 1.0).unwrap();
        assert!(close(tc.c0, 6.0 * tc.c_big, 1e-15));
        // C = 4(1 + (2+1+1) + (3−2+1)) with all unit inputs.
        assert!(close(tc.c_big, 28.0, 1e-15));
    }

    #[test]
    fn tuning_parameters() {
        let n = 3;
        let k = kappa_p2(libm::exp(3.0 * n as f64), n, 1.0, 1.0, 1.0, 1.0, 2.0).unwrap();
        assert!(close(k, 2.0 * libm::sqrt(3.0) * 3.0, 1e-14));
        let k = kappa_p2(E.powi(n as i32), n, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!(close(k, (1.0 + libm::sqrt(2.0)) * libm::sqrt(3.0), 1e-14));
        let k = kappa_p2(1.0 + 1e-12, 2, 1.0, 1.0, 1.0, 2.0, 1.0).unwrap();
        assert!(close(k, libm::sqrt(2.0), 1e-10));
        assert!(kappa_p2(1.0, 2, 1.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(close(kappa_p1(E, 0.5, 4.0, 2.0, 3.0).unwrap(), 1.5, 1e-15));
        assert_eq!(kappa_p1(E, 0.0, 1.0, 1.0, 1.0).unwrap(), 0.0);
        let a = kappa_p1(10.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let b = kappa_p1(10.0, 1.0, 4.0, 1.0, 1.0).unwrap();
        assert!(close(b, 2.0 * a, 1e-15));
    }

    #[test]
    fn failure_probabilities() {
        assert!(failure_prob_p2(1e30, 4, 10.0, 5.0).unwrap() < 1e-13);
        assert!(failure_prob_p1(1e30, 4, 10.0, 5.0).unwrap() < 1e-27);
        assert!(failure_prob_p2(0.5, 4, 10.0, 5.0).is_err());
        let mut prev = f_seq(2);
        for n in [4, 8, 16, 32] {
            let f = f_seq(n);
            assert!(f < prev);
            prev = f;
        }
        let p = failure_prob_p1(E, 2, 3.0, 1.0).unwrap();
        assert!(close(p, 2.0 * 3.0 / E, 1e-15));
    }

    #[test]
    fn zero_noise_and_determinism() {
        let m = NoiseModel::new(0.0, 1.0, 7).unwrap();
        assert_eq!(sample_noise(&m, 2, 5, 0), DMatrix::zeros(2, 5));
        let m = NoiseModel::new(1.0, 0.5, 7).unwrap();
        assert_eq!(sample_noise(&m, 2, 5, 3), sample_noise(&m, 2, 5, 3));
        assert_ne!(sample_noise(&m, 2, 5, 3), sample_noise(&m, 2, 5, 4));
    }
}
