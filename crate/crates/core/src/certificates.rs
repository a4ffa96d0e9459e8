//! Dual certificates: Gram blocks, separation thresholds, certificate construction,
//! and grid verification of the near/far bounds.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernel::CovariantKernel;
use crate::limit::LimitKernelSpec;
use crate::measure::DiscreteMeasure;

/// `‖A‖_{op,ℓ∞}`, the largest absolute row sum.
pub fn op_norm_inf(a: &DMatrix<f64>) -> f64 {
    a.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrices `Γ^{[i,j]}_{kl} = K^{[i,j]}(θ_k, θ_l)` for a configuration ϑ.
#[derive(Debug, Clone)]
pub struct GramBundle {
    pub g00: DMatrix<f64>,
    pub g10: DMatrix<f64>,
    pub g01: DMatrix<f64>,
    pub g11: DMatrix<f64>,
    pub g20: DMatrix<f64>,
    pub g21: DMatrix<f64>,
    pub g12: DMatrix<f64>,
}

impl GramBundle {
    pub fn new<K: CovariantKernel>(kernel: &K, theta: &[f64]) -> Result<Self> {
        let cache = kernel.prepare(theta)?;
        let s = theta.len();
        let m = |i, j| DMatrix::from_fn(s, s, |a, b| kernel.cov_cached(&cache, i, j, a, b));
        Ok(GramBundle {
            g00: m(0, 0),
            g10: m(1, 0),
            g01: m(0, 1),
            g11: m(1, 1),
            g20: m(2, 0),
            g21: m(2, 1),
            g12: m(1, 2),
        })
    }

    /// `A_{ℓ∞}(ϑ)`: the largest of the six operator norms.
    pub fn a_inf(&self) -> f64 {
        let id = DMatrix::<f64>::identity(self.g00.nrows(), self.g00.ncols());
        [
            op_norm_inf(&(&id - &self.g00)),
            op_norm_inf(&(&id - &self.g11)),
            op_norm_inf(&(&id + &self.g20)),
            op_norm_inf(&self.g10),
            op_norm_inf(&self.g01),
            op_norm_inf(&self.g12),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// `A_{ℓ∞}(ϑ)` for a kernel and configuration.
pub fn a_inf<K: CovariantKernel>(kernel: &K, theta: &[f64]) -> Result<f64> {
    Ok(GramBundle::new(kernel, theta)?.a_inf())
}

/// Random configurations tried per separation value in [`delta_search`].
pub const RESTARTS: usize = 64;

/// Upper estimate of `δ(u, s) = inf{δ : A_{ℓ∞}(ϑ) ≤ u for all δ-separated ϑ}`.
///
/// Separations are scanned downward from the largest feasible one; the answer is the
/// last value whose worst configuration (equispaced placements plus [`RESTARTS`]
/// random ones) still satisfies the bound. Returns `+∞` when even the widest spread
/// fails.
pub fn delta_search<K: CovariantKernel>(kernel: &K, u: f64, s: usize, step: f64) -> Result<f64> {
    if !(u > 0.0) || s == 0 {
        return Err(Error::Invalid("delta_search needs u > 0 and s >= 1"));
    }
    if !(step > 0.0) {
        return Err(Error::Invalid("grid step must be positive"));
    }
    if s == 1 {
        return Ok(step);
    }
    let diam = kernel.diameter();
    let top = diam / (s - 1) as f64;
    if top < step {
        return Ok(f64::INFINITY);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_de17a);
    let worst = |delta: f64, rng: &mut ChaCha8Rng| worst_a_inf(kernel, s, delta, rng);
    if worst(top, &mut rng)? > u {
        return Ok(f64::INFINITY);
    }
    // coarse pass, then refine inside the first failing bracket
    let coarse = (64.0 * step).min(top);
    let mut ok = top;
    let mut d = top - coarse;
    while d >= step {
        if worst(d, &mut rng)? > u {
            break;
        }
        ok = d;
        d -= coarse;
    }
    let mut d = ok - step;
    while d >= step && d > ok - coarse - 0.5 * step {
        if worst(d, &mut rng)? > u {
            break;
        }
        ok = d;
        d -= step;
    }
    Ok(ok)
}

fn worst_a_inf<K: CovariantKernel>(
    kernel: &K,
    s: usize,
    delta: f64,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let (lo, hi) = kernel.domain();
    let (x0, x1) = (kernel.position(lo), kernel.position(hi));
    let (xa, xb) = if x0 <= x1 { (x0, x1) } else { (x1, x0) };
    let span = xb - xa;
    let width = delta * (s - 1) as f64;
    let slack = (span - width).max(0.0);
    let place = |xs: &[f64]| -> Result<f64> {
        let theta: Vec<f64> = xs
            .iter()
            .map(|&x| kernel.inverse_position(x.clamp(xa, xb)).clamp(lo, hi))
            .collect();
        a_inf(kernel, &theta)
    };
    let mut worst: f64 = 0.0;
    let offsets = 8;
    for j in 0..=offsets {
        let start = xa + slack * j as f64 / offsets as f64;
        let xs: Vec<f64> = (0..s).map(|k| start + delta * k as f64).collect();
        worst = worst.max(place(&xs)?);
    }
    for _ in 0..RESTARTS {
        let gaps: Vec<f64> = (0..s - 1).map(|_| rng.gen::<f64>()).collect();
        let extra: f64 = gaps.iter().sum::<f64>();
        let w: f64 = rng.gen();
        let budget = slack * w * w;
        let scale = if extra > 0.0 { budget / extra } else { 0.0 };
        let used = width + budget;
        let mut x = xa + (span - used).max(0.0) * rng.gen::<f64>();
        let mut xs = Vec::with_capacity(s);
        xs.push(x);
        for g in &gaps {
            x += delta + g * scale;
            xs.push(x);
        }
        worst = worst.max(place(&xs)?);
    }
    Ok(worst)
}

/// `(H^{(1)}, H^{(2)})` for the limit kernel at radius `r` and metric ratio `ρ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub h1: f64,
    pub h2: f64,
}

pub fn thresholds(limit: &LimitKernelSpec, r: f64, rho: f64) -> Result<Thresholds> {
    let (eps, _) = limit.eps_far(r / rho);
    let nu = limit.nu_near(rho * r);
    thresholds_from(eps, nu, limit.l[1][0], limit.l[2][0], limit.l[2][1])
}

/// Threshold arithmetic from `ε_∞(r/ρ)`, `ν_∞(ρr)` and the `L` constants.
pub fn thresholds_from(
    eps: f64,
    nu: f64,
    l10: f64,
    l20: f64,
    l21: f64,
) -> Result<Thresholds> {
    if !(eps > 0.0) || !(nu > 0.0) {
        return Err(Error::Infeasible);
    }
    let h1 = 0.5f64.min(l20).min(l21).min(nu / 10.0).min(eps / 10.0);
    let h2 = (1.0 / 6.0f64)
        .min(8.0 * eps / (10.0 * (5.0 + 2.0 * l10)))
        .min(8.0 * nu / (9.0 * (2.0 * l20 + 2.0 * l21 + 4.0)));
    Ok(Thresholds { h1, h2 })
}

/// Constants of the interpolating (`C_*`) and derivative (`c_*`) certificates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateConstants {
    pub c_n: f64,
    pub c_n_prime: f64,
    pub c_f: f64,
    pub c_b: f64,
    pub d_n: f64,
    pub d_f: f64,
    pub d_b: f64,
    pub r: f64,
    pub rho: f64,
    pub u_inf: f64,
    pub u_inf_prime: f64,
}

impl CertificateConstants {
    /// Constants implied by the limit kernel at radius `r`, metric ratio `ρ`, and
    /// separation levels `u_∞`, `u′_∞`.
    pub fn from_limit(
        limit: &LimitKernelSpec,
        r: f64,
        rho: f64,
        u_inf: f64,
        u_inf_prime: f64,
    ) -> Result<Self> {
        let (eps, _) = limit.eps_far(r / rho);
        let nu = limit.nu_near(rho * r);
        if !(eps > 0.0) || !(nu > 0.0) {
            return Err(Error::Infeasible);
        }
        let l = &limit.l;
        Ok(CertificateConstants {
            c_n: nu / 180.0,
            c_n_prime: 0.625 * l[2][0] + 0.125 * l[2][1] + 0.5,
            c_f: eps / 10.0,
            c_b: 2.0,
            d_n: 0.125 * l[2][0] + 0.625 * l[2][1] + 0.875,
            d_f: 1.25 * l[1][0] + 1.75,
            d_b: 2.0,
            r,
            rho,
            u_inf,
            u_inf_prime,
        })
    }
}

/// Hypotheses on `r`, `u`, proximity and separation under which the two
/// certificates are guaranteed, with the separation they require.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feasibility {
    pub thresholds: Thresholds,
    pub radius_ok: bool,
    pub interpolating_ok: bool,
    pub derivative_ok: bool,
    /// `2 max(r, ρ δ_∞(u_∞, s))`.
    pub separation: f64,
    /// `2 max(r, ρ δ_∞(u′_∞, s))`.
    pub separation_prime: f64,
}

/// Evaluate the hypotheses given `𝒱_T`, `δ_∞(u_∞, s)` and `δ_∞(u′_∞, s)`.
pub fn feasibility(
    limit: &LimitKernelSpec,
    cc: &CertificateConstants,
    s: usize,
    v: f64,
    delta: f64,
    delta_prime: f64,
) -> Result<Feasibility> {
    let th = thresholds(limit, cc.r, cc.rho)?;
    let radius_ok = cc.r > 0.0 && cc.r < 1.0 / libm::sqrt(2.0 * limit.l[2][0]);
    let sm1 = (s.max(1) - 1) as f64;
    let interpolating_ok = radius_ok
        && cc.u_inf > 0.0
        && cc.u_inf < th.h2
        && delta.is_finite()
        && v <= th.h1
        && sm1 * v <= th.h2 - cc.u_inf;
    let derivative_ok = cc.u_inf_prime > 0.0
        && cc.u_inf_prime < 1.0 / 6.0
        && delta_prime.is_finite()
        && v <= 1.0
        && sm1 * v + cc.u_inf_prime <= 1.0 / 6.0;
    Ok(Feasibility {
        thresholds: th,
        radius_ok,
        interpolating_ok,
        derivative_ok,
        separation: 2.0 * cc.r.max(cc.rho * delta),
        separation_prime: 2.0 * cc.r.max(cc.rho * delta_prime),
    })
}

/// Smallest pairwise metric distance of a configuration (`+∞` for fewer than two points).
pub fn min_separation<K: CovariantKernel>(kernel: &K, theta: &[f64]) -> f64 {
    let pos: Vec<f64> = theta.iter().map(|&t| kernel.position(t)).collect();
    let mut m = f64::INFINITY;
    for a in 0..pos.len() {
        for b in a + 1..pos.len() {
            m = m.min((pos[a] - pos[b]).abs());
        }
    }
    m
}

/// Refuse configurations that are not separated by more than `required`.
pub fn check_separation<K: CovariantKernel>(kernel: &K, theta: &[f64], required: f64) -> Result<()> {
    let min = min_separation(kernel, theta);
    if min > required {
        Ok(())
    } else {
        Err(Error::Separation { min, required })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateKind {
    /// `η(θ*_k) = V_k`, `D̃₁η(θ*_k) = 0`.
    Interpolating,
    /// `η(θ*_k) = 0`, `D̃₁η(θ*_k) = V_k`.
    Derivative,
}

/// `η(z, θ) = Σ_k α_k(z) K(θ, θ*_k) + ξ_k(z) K^{[0,1]}(θ, θ*_k)`.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub theta_star: Vec<f64>,
    /// Targets, n × s.
    pub v: DMatrix<f64>,
    /// n × s.
    pub alpha: DMatrix<f64>,
    /// n × s.
    pub xi: DMatrix<f64>,
    gram: GramBundle,
}

/// Largest tolerated `‖I − Γ_SC‖_{op,ℓ∞}` before refusing to build a certificate.
pub const SCHUR_LIMIT: f64 = 0.99;

/// Solve the `2s × 2s` interpolation system for every signal label.
pub fn build_certificate<K: CovariantKernel>(
    kernel: &K,
    theta_star: &[f64],
    v: &DMatrix<f64>,
    kind: CertificateKind,
) -> Result<Certificate> {
    let s = theta_star.len();
    if v.ncols() != s || s == 0 {
        return Err(Error::Shape("targets must have one column per parameter"));
    }
    let gram = GramBundle::new(kernel, theta_star)?;
    let id = DMatrix::<f64>::identity(s, s);
    if op_norm_inf(&(&id - &gram.g11)) >= 1.0 {
        return Err(Error::IllConditioned("‖I − Γ11‖ ≥ 1"));
    }
    let g11_lu = gram.g11.clone().lu();
    let g11_inv_g10 = g11_lu
        .solve(&gram.g10)
        .ok_or(Error::IllConditioned("Γ11 singular"))?;
    let schur = &gram.g00 - gram.g10.transpose() * &g11_inv_g10;
    if op_norm_inf(&(&id - &schur)) >= SCHUR_LIMIT {
        return Err(Error::IllConditioned("‖I − Γ_SC‖ ≥ 0.99"));
    }
    let schur_lu = schur.lu();
    // columns of the transposed targets are the per-signal right-hand sides
    let vt = v.transpose();
    let (alpha_t, xi_t) = match kind {
        CertificateKind::Interpolating => {
            let a = schur_lu
                .solve(&vt)
                .ok_or(Error::IllConditioned("Γ_SC singular"))?;
            let x = -(&g11_inv_g10 * &a);
            (a, x)
        }
        CertificateKind::Derivative => {
            let w = g11_lu.solve(&vt).ok_or(Error::IllConditioned("Γ11 singular"))?;
            let a = -schur_lu
                .solve(&(gram.g10.transpose() * &w))
                .ok_or(Error::IllConditioned("Γ_SC singular"))?;
            let x = &w - &g11_inv_g10 * &a;
            (a, x)
        }
    };
    Ok(Certificate {
        kind,
        theta_star: theta_star.to_vec(),
        v: v.clone(),
        alpha: alpha_t.transpose(),
        xi: xi_t.transpose(),
        gram,
    })
}

impl Certificate {
    pub fn gram(&self) -> &GramBundle {
        &self.gram
    }

    /// Values of `η`, `D̃₁η` or `D̃₂η` (order 0, 1, 2) at `pts`, one column per point (n × m).
    pub fn eval<K: CovariantKernel>(&self, kernel: &K, pts: &[f64], order: usize) -> Result<DMatrix<f64>> {
        if order > 2 {
            return Err(Error::Invalid("certificate order above 2"));
        }
        let s = self.theta_star.len();
        let n = self.alpha.nrows();
        let mut out = DMatrix::zeros(n, pts.len());
        for (c, chunk) in pts.chunks(256).enumerate() {
            let mut all = self.theta_star.clone();
            all.extend_from_slice(chunk);
            let cache = kernel.prepare(&all)?;
            for (m, _) in chunk.iter().enumerate() {
                let mut ka = DVector::zeros(s);
                let mut kx = DVector::zeros(s);
                for k in 0..s {
                    ka[k] = kernel.cov_cached(&cache, order, 0, s + m, k);
                    kx[k] = kernel.cov_cached(&cache, order, 1, s + m, k);
                }
                let col = &self.alpha * ka + &self.xi * kx;
                out.column_mut(c * 256 + m).copy_from(&col);
            }
        }
        Ok(out)
    }

    /// `η(z, θ)` at one point.
    pub fn eval_at<K: CovariantKernel>(&self, kernel: &K, z: usize, theta: f64, order: usize) -> Result<f64> {
        if z >= self.alpha.nrows() {
            return Err(Error::Shape("signal index out of range"));
        }
        Ok(self.eval(kernel, &[theta], order)?[(z, 0)])
    }

    /// `‖P‖_{L_T}` for `P(z) = Σ_k α_k(z) φ(θ*_k) + ξ_k(z) φ^{[1]}(θ*_k)`, from Gram blocks.
    pub fn norm_lt(&self, nu: &DiscreteMeasure) -> Result<f64> {
        if nu.len() != self.alpha.nrows() {
            return Err(Error::Shape("measure size differs from certificate rows"));
        }
        let mut acc = 0.0;
        for (z, &w) in nu.weights().iter().enumerate() {
            let a = self.alpha.row(z).transpose();
            let x = self.xi.row(z).transpose();
            let q = a.dot(&(&self.gram.g00 * &a))
                + 2.0 * a.dot(&(&self.gram.g01 * &x))
                + x.dot(&(&self.gram.g11 * &x));
            acc += w * q;
        }
        Ok(libm::sqrt(acc.max(0.0)))
    }

    /// `max_k ‖f_k‖_{L^q}` over the columns of a coefficient matrix.
    pub fn star_norm(nu: &DiscreteMeasure, f: &DMatrix<f64>, q: f64) -> f64 {
        f.column_iter()
            .map(|c| nu.lp_norm_unchecked(c.iter().cloned(), q))
            .fold(0.0, f64::max)
    }
}

/// One checked inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationRow {
    /// Grid index, or `None` for global (norm) checks.
    pub point: Option<usize>,
    pub assumption: &'static str,
    pub region: &'static str,
    pub theta: Option<f64>,
    /// Bound minus measured value.
    pub margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub rows: Vec<VerificationRow>,
    pub grid_step: f64,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    /// Smallest margin per (assumption, region).
    pub fn worst(&self) -> Vec<(&'static str, &'static str, f64)> {
        let mut out: Vec<(&'static str, &'static str, f64)> = Vec::new();
        for r in &self.rows {
            match out.iter_mut().find(|(a, g, _)| *a == r.assumption && *g == r.region) {
                Some(e) => e.2 = e.2.min(r.margin),
                None => out.push((r.assumption, r.region, r.margin)),
            }
        }
        out
    }
}

/// Margins below this are failures; equalities at `θ = θ*_k` hold up to rounding.
pub const MARGIN_TOL: f64 = 1e-10;

/// Check both certificates against their near/far bounds on a metric grid.
///
/// `p` must be interpolating and `q_cert` a derivative certificate on the same ϑ*.
#[allow(clippy::too_many_arguments)]
pub fn verify_assumptions<K: CovariantKernel>(
    kernel: &K,
    nu: &DiscreteMeasure,
    q: f64,
    p: &Certificate,
    q_cert: &Certificate,
    cc: &CertificateConstants,
    step: f64,
) -> Result<VerificationReport> {
    if p.kind != CertificateKind::Interpolating || q_cert.kind != CertificateKind::Derivative {
        return Err(Error::Invalid("expected an interpolating and a derivative certificate"));
    }
    if p.theta_star != q_cert.theta_star {
        return Err(Error::Invalid("certificates built on different parameters"));
    }
    let r = cc.r;
    check_separation(kernel, &p.theta_star, 2.0 * r)?;
    let grid = kernel.metric_grid(step)?;
    let eta_p = p.eval(kernel, &grid, 0)?;
    let eta_q = q_cert.eval(kernel, &grid, 0)?;
    let star: Vec<f64> = p.theta_star.iter().map(|&t| kernel.position(t)).collect();
    let n = nu.len();
    let mut rows = Vec::new();
    let mut push = |point, assumption, region, theta, margin: f64| {
        rows.push(VerificationRow {
            point,
            assumption,
            region,
            theta,
            margin,
            pass: margin >= -MARGIN_TOL,
        });
    };
    for (i, &t) in grid.iter().enumerate() {
        let x = kernel.position(t);
        let (k, signed) = star
            .iter()
            .enumerate()
            .map(|(k, &xs)| (k, x - xs))
            .fold((0, f64::INFINITY), |b, c| if c.1.abs() < b.1.abs() { c } else { b });
        let d = signed.abs();
        let np = nu.lp_norm_unchecked(eta_p.column(i).iter().cloned(), q);
        let nq = nu.lp_norm_unchecked(eta_q.column(i).iter().cloned(), q);
        if d <= r {
            let sg = if signed > 0.0 {
                1.0
            } else if signed < 0.0 {
                -1.0
            } else {
                0.0
            };
            let dev_p = nu.lp_norm_unchecked((0..n).map(|z| eta_p[(z, i)] - p.v[(z, k)]), q);
            let dev_q = nu.lp_norm_unchecked((0..n).map(|z| eta_q[(z, i)] - q_cert.v[(z, k)] * sg * d), q);
            push(Some(i), "A1", "near_decay", Some(t), 1.0 - cc.c_n * d * d - np);
            push(Some(i), "A1", "near_target", Some(t), cc.c_n_prime * d * d - dev_p);
            push(Some(i), "A2", "near", Some(t), cc.d_n * d * d - dev_q);
        } else {
            push(Some(i), "A1", "far", Some(t), 1.0 - cc.c_f - np);
            push(Some(i), "A2", "far", Some(t), cc.d_f - nq);
        }
    }
    let s = p.theta_star.len() as f64;
    let exponent = 0.5 / crate::measure::conjugate(q) - 0.5 / q;
    let scale = libm::sqrt(s) * libm::pow(nu.mass(), exponent);
    push(None, "A1", "norm", None, cc.c_b * scale - p.norm_lt(nu)?);
    push(None, "A2", "norm", None, cc.d_b * scale - q_cert.norm_lt(nu)?);
    Ok(VerificationReport { rows, grid_step: step })
}

/// Which quadratic decay bound to check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayCase {
    /// `η(θ₀) = 0`, `D̃₁η(θ₀) = 0`, `‖D̃₂η‖ ≤ δ` ⟹ `‖η‖ ≤ (δ/2) 𝔡²`.
    Vanishing { delta: f64 },
    /// `η(θ₀) = V`, `‖D̃₂η − V K^{[0,2]}‖ ≤ δ < ε` ⟹ `‖η‖ ≤ 1 − ((ε − δ)/2) 𝔡²`.
    Peak { delta: f64, eps: f64 },
}

/// Pointwise check of the decay bound on samples `(𝔡(θ, θ₀), ‖η(θ)‖)` within radius `r`.
///
/// For the peak case the hypotheses `δ < ε` and `r < L^{-1/2}` must hold, otherwise
/// the check fails.
pub fn quadratic_decay_check(samples: &[(f64, f64)], case: DecayCase, r: f64, l: f64) -> bool {
    let tol = 1e-12;
    match case {
        DecayCase::Vanishing { delta } => samples
            .iter()
            .filter(|(d, _)| *d <= r)
            .all(|&(d, v)| v <= 0.5 * delta * d * d + tol),
        DecayCase::Peak { delta, eps } => {
            if !(delta < eps) || !(r * libm::sqrt(l) < 1.0) {
                return false;
            }
            samples
                .iter()
                .filter(|(d, _)| *d <= r)
                .all(|&(d, v)| v <= 1.0 - 0.5 * (eps - delta) * d * d + tol)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn op_norm_examples() {
        assert_eq!(op_norm_inf(&DMatrix::identity(3, 3)), 1.0);
        assert_eq!(op_norm_inf(&DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 0.0, 3.0])), 3.0);
        assert_eq!(op_norm_inf(&DMatrix::zeros(2, 2)), 0.0);
    }

    #[test]
    fn threshold_arithmetic() {
        let t = thresholds_from(10.0, 10.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(t.h1, 0.5);
        assert!(t.h2 <= 1.0 / 6.0);
        assert_eq!(thresholds_from(0.0, 1.0, 1.0, 1.0, 1.0), Err(Error::Infeasible));
    }

    #[test]
    fn decay_check_trivial() {
        let samples = [(0.0, 0.0), (0.1, 0.0), (0.5, 0.0)];
        assert!(quadratic_decay_check(&samples, DecayCase::Vanishing { delta: 1e-3 }, 1.0, 1.0));
        assert!(!quadratic_decay_check(&[(0.1, 1.0)], DecayCase::Vanishing { delta: 1.0 }, 1.0, 1.0));
    }
}
