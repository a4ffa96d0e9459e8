//! Limit kernels: translation-invariant profiles in metric coordinates.
//!
//! A limit kernel is `K_∞(θ, θ′) = f(G(θ) − G(θ′))` with an even profile `f`
//! normalised so that `f(0) = 1` and `f''(0) = −1`. Its covariant derivatives are
//! `K_∞^{[i,j]}(θ, θ′) = (−1)^j f^{(i+j)}(G(θ) − G(θ′))`.

use alloc::vec::Vec;

use crate::dictionary::{BuiltinDictionary, Dictionary};
use crate::error::{Error, Result};
use crate::kernel::CovariantKernel;
use crate::search::golden_max;

/// Even kernel profile with closed-form derivatives up to order six.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    /// `exp(−d²/2)`.
    Gaussian,
    /// `sin(a d) / (a d)` with `a = √3`.
    Sinc,
    /// `1 / cosh(d)`.
    Sech,
}

const SINC_A: f64 = 1.732_050_807_568_877_2;

impl Profile {
    /// `f^{(k)}(d)` for `k ≤ 6`.
    pub fn deriv(self, k: usize, d: f64) -> f64 {
        match self {
            Profile::Gaussian => {
                let (mut h0, mut h1) = (1.0, d);
                let hk = if k == 0 {
                    1.0
                } else {
                    for m in 1..k {
                        let h2 = d * h1 - m as f64 * h0;
                        h0 = h1;
                        h1 = h2;
                    }
                    h1
                };
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * hk * libm::exp(-0.5 * d * d)
            }
            Profile::Sinc => libm::pow(SINC_A, k as f64) * sinc_deriv(k, SINC_A * d),
            Profile::Sech => {
                let poly = sech_poly(k);
                let t = libm::tanh(d);
                let mut acc = 0.0;
                for c in poly.iter().rev() {
                    acc = acc * t + c;
                }
                acc / libm::cosh(d)
            }
        }
    }
}

/// Derivatives of `sin(y)/y`.
fn sinc_deriv(k: usize, y: f64) -> f64 {
    if y.abs() < 1.5 {
        // termwise derivative of Σ (−1)^n y^{2n} / (2n+1)!
        let mut acc = 0.0;
        let mut fact = 1.0; // (2n+1)!
        for n in 0..40usize {
            if n > 0 {
                fact *= (2 * n) as f64 * (2 * n + 1) as f64;
            }
            let e = 2 * n;
            if e < k {
                continue;
            }
            let mut falling = 1.0;
            for m in 0..k {
                falling *= (e - m) as f64;
            }
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * falling * libm::pow(y, (e - k) as f64) / fact;
        }
        acc
    } else {
        // Leibniz on sin(y) · y^{-1}
        let mut acc = 0.0;
        let mut binom = 1.0;
        for m in 0..=k {
            if m > 0 {
                binom = binom * (k - m + 1) as f64 / m as f64;
            }
            let j = k - m;
            let mut jf = 1.0;
            for i in 2..=j {
                jf *= i as f64;
            }
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let inv = sign * jf / libm::pow(y, (j + 1) as f64);
            let s = libm::sin(y + m as f64 * core::f64::consts::FRAC_PI_2);
            acc += binom * s * inv;
        }
        acc
    }
}

/// Polynomial `P_k` (coefficients in `tanh`) with `sech^{(k)} = sech · P_k(tanh)`.
fn sech_poly(k: usize) -> [f64; 8] {
    let mut p = [0.0; 8];
    p[0] = 1.0;
    for _ in 0..k {
        let mut q = [0.0; 8];
        for (i, &c) in p.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            // −t · c t^i
            if i + 1 < 8 {
                q[i + 1] -= c;
            }
            // (1 − t²) · i c t^{i−1}
            if i >= 1 {
                q[i - 1] += i as f64 * c;
                if i + 1 < 8 {
                    q[i + 1] -= i as f64 * c;
                }
            }
        }
        p = q;
    }
    p
}

/// Metric coordinate `G` of the limit kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricMap {
    /// `G(θ) = scale · (θ − origin)`.
    Linear { scale: f64, origin: f64 },
    /// `G(θ) = ½ ln θ`, θ > 0.
    HalfLog,
}

impl MetricMap {
    pub fn position(self, theta: f64) -> f64 {
        match self {
            MetricMap::Linear { scale, origin } => scale * (theta - origin),
            MetricMap::HalfLog => 0.5 * libm::log(theta),
        }
    }

    pub fn inverse(self, x: f64) -> f64 {
        match self {
            MetricMap::Linear { scale, origin } => origin + x / scale,
            MetricMap::HalfLog => libm::exp(2.0 * x),
        }
    }

    /// `g_∞(θ) = G′(θ)²`.
    pub fn metric(self, theta: f64) -> f64 {
        match self {
            MetricMap::Linear { scale, .. } => scale * scale,
            MetricMap::HalfLog => 0.25 / (theta * theta),
        }
    }
}

/// Limit kernel on a compact window together with its uniform constants.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitKernelSpec {
    pub profile: Profile,
    pub map: MetricMap,
    domain: (f64, f64),
    /// `L_{i,j} = sup |K_∞^{[i,j]}|`, `i, j ≤ 2`.
    pub l: [[f64; 3]; 3],
    /// `L_3 = sup h_∞`.
    pub l3: f64,
    /// `inf g_∞`.
    pub m_g: f64,
}

impl LimitKernelSpec {
    pub fn new(profile: Profile, map: MetricMap, domain: (f64, f64)) -> Result<Self> {
        if !(domain.0 < domain.1) || !domain.0.is_finite() || !domain.1.is_finite() {
            return Err(Error::Invalid("empty domain"));
        }
        if matches!(map, MetricMap::HalfLog) && !(domain.0 > 0.0) {
            return Err(Error::Invalid("log metric needs a positive domain"));
        }
        let diam = (map.position(domain.1) - map.position(domain.0)).abs();
        let mut l = [[0.0; 3]; 3];
        for (i, row) in l.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = profile_sup(profile, i + j, diam);
            }
        }
        let m_g = map.metric(domain.0).min(map.metric(domain.1));
        Ok(LimitKernelSpec {
            profile,
            map,
            domain,
            l,
            l3: -profile.deriv(6, 0.0),
            m_g,
        })
    }

    /// Limit kernel paired with a built-in dictionary on the same window.
    pub fn for_builtin(dict: &BuiltinDictionary) -> Result<Self> {
        let domain = dict.domain();
        let mid = 0.5 * (domain.0 + domain.1);
        match dict {
            BuiltinDictionary::GaussianLocation(d) => Self::new(
                Profile::Gaussian,
                MetricMap::Linear {
                    scale: 1.0 / (core::f64::consts::SQRT_2 * d.sigma()),
                    origin: mid,
                },
                domain,
            ),
            BuiltinDictionary::FourierLowpass(d) => Self::new(
                Profile::Sinc,
                MetricMap::Linear {
                    scale: libm::sqrt(d.metric()),
                    origin: mid,
                },
                domain,
            ),
            BuiltinDictionary::ExponentialDecay(_) => {
                Self::new(Profile::Sech, MetricMap::HalfLog, domain)
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        (self.map.position(self.domain.1) - self.map.position(self.domain.0)).abs()
    }

    /// `K_∞^{[i,j]}(θ, θ′)`.
    pub fn cov(&self, i: usize, j: usize, t: f64, s: f64) -> f64 {
        let d = self.map.position(t) - self.map.position(s);
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        sign * self.profile.deriv(i + j, d)
    }

    pub fn h(&self) -> f64 {
        self.l3
    }

    /// `ε_∞(r) = 1 − sup{|K_∞| : 𝔡 ≥ r}`; `(1, true)` when no pair is that far apart.
    pub fn eps_far(&self, r: f64) -> (f64, bool) {
        let diam = self.diameter();
        if r > diam {
            return (1.0, true);
        }
        let f = |d: f64| self.profile.deriv(0, d).abs();
        (1.0 - interval_sup(f, r.max(0.0), diam), false)
    }

    /// `ν_∞(r) = −sup{K_∞^{[0,2]} : 𝔡 ≤ r}`.
    pub fn nu_near(&self, r: f64) -> f64 {
        let f = |d: f64| self.profile.deriv(2, d);
        -interval_sup(f, 0.0, r.max(0.0).min(self.diameter()))
    }
}

fn profile_sup(profile: Profile, k: usize, diam: f64) -> f64 {
    interval_sup(|d| profile.deriv(k, d).abs(), 0.0, diam)
}

/// Dense scan plus golden polish of a one-dimensional supremum.
fn interval_sup<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    if b <= a {
        return f(a);
    }
    let n = (libm::ceil((b - a) / 1e-3) as usize).clamp(64, 200_000);
    let xs: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut best = f64::NEG_INFINITY;
    for i in 0..vals.len() {
        let left = if i > 0 { vals[i - 1] } else { f64::NEG_INFINITY };
        let right = if i + 1 < vals.len() { vals[i + 1] } else { f64::NEG_INFINITY };
        if vals[i] >= left && vals[i] >= right {
            let (_, v) = golden_max(&f, xs[i.saturating_sub(1)], xs[(i + 1).min(n)], 1e-12);
            best = best.max(v).max(vals[i]);
        }
    }
    best
}

impl CovariantKernel for LimitKernelSpec {
    type Cache = Vec<f64>;

    fn domain(&self) -> (f64, f64) {
        self.domain
    }

    fn position(&self, theta: f64) -> f64 {
        self.map.position(theta)
    }

    fn inverse_position(&self, x: f64) -> f64 {
        self.map.inverse(x)
    }

    fn prepare(&self, pts: &[f64]) -> Result<Vec<f64>> {
        pts.iter()
            .map(|&t| {
                if t >= self.domain.0 && t <= self.domain.1 {
                    Ok(self.map.position(t))
                } else {
                    Err(Error::Domain(t))
                }
            })
            .collect()
    }

    fn cov_cached(&self, cache: &Vec<f64>, i: usize, j: usize, a: usize, b: usize) -> f64 {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        sign * self.profile.deriv(i + j, cache[a] - cache[b])
    }
}
