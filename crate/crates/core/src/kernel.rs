//! Kernel `K(θ, θ′) = ⟨φ(θ), φ(θ′)⟩`, its Riemannian metric, covariant derivatives,
//! and the near/far functionals used by the certificate thresholds.

use alloc::vec::Vec;

use nalgebra::DVector;

use crate::dictionary::{inv_sqrt_jet, Dictionary, FeatureJet};
use crate::error::{Error, Result};
use crate::limit::LimitKernelSpec;
use crate::quadrature::Rule;
use crate::search::golden_max;

/// Anything with covariant derivatives `K^{[i,j]}` and a metric coordinate `G`.
pub trait CovariantKernel {
    /// Data precomputed at a list of points for repeated pairwise evaluation.
    type Cache;

    fn domain(&self) -> (f64, f64);

    /// Metric coordinate `G(θ)`; distances are `|G(θ) − G(θ′)|`.
    fn position(&self, theta: f64) -> f64;

    fn inverse_position(&self, x: f64) -> f64;

    fn prepare(&self, pts: &[f64]) -> Result<Self::Cache>;

    /// `K^{[i,j]}(pts[a], pts[b])`, `i, j ≤ 3`.
    fn cov_cached(&self, cache: &Self::Cache, i: usize, j: usize, a: usize, b: usize) -> f64;

    fn dist(&self, t: f64, s: f64) -> f64 {
        (self.position(t) - self.position(s)).abs()
    }

    fn diameter(&self) -> f64 {
        let (lo, hi) = self.domain();
        self.dist(lo, hi)
    }

    /// Points equispaced in metric arclength with spacing `step`, both ends included.
    fn metric_grid(&self, step: f64) -> Result<Vec<f64>> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::Invalid("grid step must be positive"));
        }
        let (lo, hi) = self.domain();
        let (x0, x1) = (self.position(lo), self.position(hi));
        let diam = (x1 - x0).abs();
        if diam < step {
            return Err(Error::GridTooCoarse("step exceeds the metric diameter"));
        }
        let dir = if x1 >= x0 { 1.0 } else { -1.0 };
        let n = libm::floor(diam / step) as usize;
        if n > 50_000_000 {
            return Err(Error::Invalid("grid step too small"));
        }
        let mut grid = Vec::with_capacity(n + 2);
        grid.push(lo);
        for k in 1..=n {
            let x = x0 + dir * k as f64 * step;
            if (x1 - x) * dir <= 1e-12 * step {
                break;
            }
            grid.push(self.inverse_position(x).clamp(lo, hi));
        }
        grid.push(hi);
        Ok(grid)
    }

    /// `K^{[i,j]}(t, s)` for single points.
    fn cov_at(&self, i: usize, j: usize, t: f64, s: f64) -> Result<f64> {
        let c = self.prepare(&[t, s])?;
        Ok(self.cov_cached(&c, i, j, 0, 1))
    }
}

/// Number of panels of the cumulative metric table.
const PANELS: usize = 64;

/// Kernel built from a dictionary, with a tabulated metric coordinate.
#[derive(Debug, Clone)]
pub struct KernelModel<D> {
    dict: D,
    edges: Vec<f64>,
    cum: Vec<f64>,
    rule: (Vec<f64>, Vec<f64>),
}

impl<D: Dictionary> KernelModel<D> {
    pub fn new(dict: D) -> Result<Self> {
        let (lo, hi) = dict.domain();
        let edges: Vec<f64> = (0..=PANELS)
            .map(|i| lo + (hi - lo) * i as f64 / PANELS as f64)
            .collect();
        let rule = Rule::new(16);
        let mut cum = Vec::with_capacity(PANELS + 1);
        cum.push(0.0);
        for w in edges.windows(2) {
            let mut f = |t: f64| libm::sqrt(raw_metric(&dict, t));
            let v = rule.adaptive(&mut f, w[0], w[1], 1e-13)?;
            let last = *cum.last().unwrap();
            cum.push(last + v);
        }
        let mut model = KernelModel {
            dict,
            edges,
            cum,
            rule: crate::quadrature::gauss_legendre(16),
        };
        let mid = model.arclength(0.5 * (lo + hi));
        for c in model.cum.iter_mut() {
            *c -= mid;
        }
        Ok(model)
    }

    pub fn dictionary(&self) -> &D {
        &self.dict
    }

    /// Arclength from `lo` to `θ` (before anchoring).
    fn arclength(&self, theta: f64) -> f64 {
        let (lo, hi) = self.dict.domain();
        let t = theta.clamp(lo, hi);
        let k = panel_index(&self.edges, t);
        let a = self.edges[k];
        if t == a {
            return self.cum[k];
        }
        let (c, h) = (0.5 * (a + t), 0.5 * (t - a));
        let mut s = 0.0;
        for (x, w) in self.rule.0.iter().zip(&self.rule.1) {
            s += w * libm::sqrt(raw_metric(&self.dict, c + h * x));
        }
        self.cum[k] + s * h
    }

    pub fn kernel(&self, t: f64, s: f64) -> Result<f64> {
        Ok(self.dict.feature(t)?.dot(&self.dict.feature(s)?))
    }

    /// `g_T(θ) = ‖∂_θ φ(θ)‖²`.
    pub fn metric_g(&self, theta: f64) -> Result<f64> {
        self.dict.check(theta)?;
        Ok(raw_metric(&self.dict, theta))
    }

    /// Signed geodesic coordinate `G(θ)`, anchored at the domain midpoint.
    pub fn metric_position(&self, theta: f64) -> Result<f64> {
        self.dict.check(theta)?;
        Ok(self.arclength(theta))
    }

    /// `𝔡_T(θ, θ′)`.
    pub fn metric_dist(&self, t: f64, s: f64) -> Result<f64> {
        Ok((self.metric_position(t)? - self.metric_position(s)?).abs())
    }

    /// `K^{[i,j]}(θ, θ′) = ⟨φ^{[i]}(θ), φ^{[j]}(θ′)⟩`, `i, j ≤ 3`.
    pub fn cov(&self, i: usize, j: usize, t: f64, s: f64) -> Result<f64> {
        if i > 3 || j > 3 {
            return Err(Error::Invalid("covariant order above 3"));
        }
        let a = self.dict.jet(t)?;
        let b = self.dict.jet(s)?;
        Ok(a.cov[i].dot(&b.cov[j]))
    }

    /// Covariant feature `φ^{[i]}(θ)`.
    pub fn phi_cov(&self, i: usize, theta: f64) -> Result<DVector<f64>> {
        if i > 3 {
            return Err(Error::Invalid("covariant order above 3"));
        }
        let mut jet = self.dict.jet(theta)?;
        Ok(core::mem::replace(&mut jet.cov[i], DVector::zeros(0)))
    }

    /// `h_T(θ) = K^{[3,3]}(θ, θ)`.
    pub fn h(&self, theta: f64) -> Result<f64> {
        let jet = self.dict.jet(theta)?;
        Ok(jet.cov[3].norm_squared())
    }

    /// `K^{[i,j]}` computed from kernel partial derivatives through the recursion
    /// `D_{i+1,j} = g^{i/2} ∂_θ (g^{-i/2} D_{i,j})` and the symmetric one in θ′.
    pub fn cov_recursion(&self, i: usize, j: usize, t: f64, s: f64) -> Result<f64> {
        if i > 3 || j > 3 {
            return Err(Error::Invalid("covariant order above 3"));
        }
        self.dict.check(t)?;
        self.dict.check(s)?;
        let rt = self.dict.raw_jet(t);
        let rs = self.dict.raw_jet(s);
        let mt = norm_jet(&rt).ok_or(Error::Domain(t))?;
        let ms = norm_jet(&rs).ok_or(Error::Domain(s))?;
        let p = kernel_partials(&rt, &mt, &rs, &ms);
        let gt = diagonal_metric_jet(&kernel_partials(&rt, &mt, &rt, &mt));
        let gs = diagonal_metric_jet(&kernel_partials(&rs, &ms, &rs, &ms));
        // θ-recursion for each θ′-derivative order b.
        let mut e = [0.0; 4];
        for (b, eb) in e.iter_mut().enumerate() {
            let col = Jet::new([p[0][b], p[1][b], p[2][b], p[3][b]], 4);
            *eb = covariant_recursion(col, gt, i).v[0];
        }
        let d = covariant_recursion(Jet::new(e, 4), gs, j).v[0];
        Ok(d / (libm::pow(gt.v[0], 0.5 * i as f64) * libm::pow(gs.v[0], 0.5 * j as f64)))
    }

    /// `ε_T(r) = 1 − sup{|K_T| : 𝔡_T ≥ r}` on a metric grid; `(1, true)` if no pair qualifies.
    pub fn eps_far(&self, r: f64, step: f64) -> Result<(f64, bool)> {
        let grid = self.metric_grid(step)?;
        let cache = self.prepare(&grid)?;
        let pos: Vec<f64> = grid.iter().map(|&t| self.position(t)).collect();
        let mut best: Option<(usize, usize, f64)> = None;
        for a in 0..grid.len() {
            for b in a + 1..grid.len() {
                if (pos[a] - pos[b]).abs() >= r {
                    let v = self.cov_cached(&cache, 0, 0, a, b).abs();
                    if best.map_or(true, |(_, _, m)| v > m) {
                        best = Some((a, b, v));
                    }
                }
            }
        }
        let Some((a, b, v)) = best else {
            return Ok((1.0, true));
        };
        let polished = self.polish_pair(&grid, a, b, |t, s| {
            if self.dist(t, s) >= r {
                self.cov_at(0, 0, t, s).map(f64::abs).unwrap_or(f64::NEG_INFINITY)
            } else {
                f64::NEG_INFINITY
            }
        });
        Ok((1.0 - v.max(polished), false))
    }

    /// `ν_T(r) = −sup{K_T^{[0,2]} : 𝔡_T ≤ r}` on a metric grid.
    pub fn nu_near(&self, r: f64, step: f64) -> Result<f64> {
        let grid = self.metric_grid(step)?;
        let cache = self.prepare(&grid)?;
        let pos: Vec<f64> = grid.iter().map(|&t| self.position(t)).collect();
        let mut best = (0, 0, f64::NEG_INFINITY);
        for a in 0..grid.len() {
            for b in 0..grid.len() {
                if (pos[a] - pos[b]).abs() <= r {
                    let v = self.cov_cached(&cache, 0, 2, a, b);
                    if v > best.2 {
                        best = (a, b, v);
                    }
                }
            }
        }
        let polished = self.polish_pair(&grid, best.0, best.1, |t, s| {
            if self.dist(t, s) <= r {
                self.cov_at(0, 2, t, s).unwrap_or(f64::NEG_INFINITY)
            } else {
                f64::NEG_INFINITY
            }
        });
        Ok(-best.2.max(polished))
    }

    /// Coordinate-wise golden polish of a pair sup around grid indices `(a, b)`.
    fn polish_pair<F: Fn(f64, f64) -> f64>(&self, grid: &[f64], a: usize, b: usize, f: F) -> f64 {
        let bracket = |i: usize| (grid[i.saturating_sub(1)], grid[(i + 1).min(grid.len() - 1)]);
        let (mut t, mut s) = (grid[a], grid[b]);
        let mut v = f(t, s);
        for _ in 0..3 {
            let (lo, hi) = bracket(a);
            let (x, fx) = golden_max(|x| f(x, s), lo, hi, 1e-10 * (hi - lo).max(1e-300));
            if fx > v {
                t = x;
                v = fx;
            }
            let (lo, hi) = bracket(b);
            let (y, fy) = golden_max(|y| f(t, y), lo, hi, 1e-10 * (hi - lo).max(1e-300));
            if fy > v {
                s = y;
                v = fy;
            }
        }
        v
    }
}

impl<D: Dictionary> CovariantKernel for KernelModel<D> {
    type Cache = Vec<FeatureJet>;

    fn domain(&self) -> (f64, f64) {
        self.dict.domain()
    }

    fn position(&self, theta: f64) -> f64 {
        self.arclength(theta)
    }

    fn inverse_position(&self, x: f64) -> f64 {
        let (lo, hi) = self.dict.domain();
        let k = match self.cum.iter().position(|&c| c >= x) {
            Some(0) => return lo,
            Some(k) => k - 1,
            None => return hi,
        };
        let (a, b) = (self.edges[k], self.edges[k + 1]);
        let (ca, cb) = (self.cum[k], self.cum[k + 1]);
        let mut t = a + (b - a) * (x - ca) / (cb - ca);
        let (mut lo_b, mut hi_b) = (a, b);
        for _ in 0..60 {
            let f = self.arclength(t) - x;
            if f.abs() <= 1e-14 * (1.0 + x.abs()) {
                break;
            }
            if f > 0.0 {
                hi_b = t;
            } else {
                lo_b = t;
            }
            let d = libm::sqrt(raw_metric(&self.dict, t));
            let mut next = t - f / d;
            if !(next > lo_b && next < hi_b) {
                next = 0.5 * (lo_b + hi_b);
            }
            if next == t {
                break;
            }
            t = next;
        }
        t
    }

    fn prepare(&self, pts: &[f64]) -> Result<Vec<FeatureJet>> {
        pts.iter().map(|&t| self.dict.jet(t)).collect()
    }

    fn cov_cached(&self, cache: &Vec<FeatureJet>, i: usize, j: usize, a: usize, b: usize) -> f64 {
        cache[a].cov[i].dot(&cache[b].cov[j])
    }
}

fn panel_index(edges: &[f64], t: f64) -> usize {
    let n = edges.len() - 1;
    let lo = edges[0];
    let hi = edges[n];
    let k = libm::floor((t - lo) / (hi - lo) * n as f64) as isize;
    k.clamp(0, n as isize - 1) as usize
}

/// `g(θ)` from the raw feature: `(‖ψ′‖²‖ψ‖² − (ψ·ψ′)²) / ‖ψ‖⁴`.
fn raw_metric<D: Dictionary>(dict: &D, theta: f64) -> f64 {
    let [p0, p1, ..] = dict.raw_jet(theta);
    let s = p0.norm_squared();
    let c = p0.dot(&p1);
    ((p1.norm_squared() * s - c * c) / (s * s)).max(0.0)
}

fn norm_jet(raw: &[DVector<f64>; 4]) -> Option<[f64; 4]> {
    let [p0, p1, p2, p3] = raw;
    let s0 = p0.dot(p0);
    if !(s0 > 0.0) {
        return None;
    }
    Some(inv_sqrt_jet(
        s0,
        2.0 * p0.dot(p1),
        2.0 * (p1.dot(p1) + p0.dot(p2)),
        2.0 * (3.0 * p1.dot(p2) + p0.dot(p3)),
    ))
}

const BINOM: [[f64; 4]; 4] = [
    [1.0, 0.0, 0.0, 0.0],
    [1.0, 1.0, 0.0, 0.0],
    [1.0, 2.0, 1.0, 0.0],
    [1.0, 3.0, 3.0, 1.0],
];

/// `∂_θ^a ∂_{θ′}^b K` for `a, b ≤ 3`, from raw inner products and normalisations.
fn kernel_partials(
    rt: &[DVector<f64>; 4],
    mt: &[f64; 4],
    rs: &[DVector<f64>; 4],
    ms: &[f64; 4],
) -> [[f64; 4]; 4] {
    let mut c = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            c[a][b] = rt[a].dot(&rs[b]);
        }
    }
    let mut p = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            let mut acc = 0.0;
            for a1 in 0..=a {
                for b1 in 0..=b {
                    acc += BINOM[a][a1] * BINOM[b][b1] * c[a1][b1] * mt[a - a1] * ms[b - b1];
                }
            }
            p[a][b] = acc;
        }
    }
    p
}

/// `(g, g′, g″)` from partials on the diagonal: `g = ∂∂′K`, `g′ = 2∂²∂′K`,
/// `g″ = 2∂³∂′K + 2∂²∂′²K`.
fn diagonal_metric_jet(p: &[[f64; 4]; 4]) -> Jet {
    Jet::new([p[1][1], 2.0 * p[2][1], 2.0 * p[3][1] + 2.0 * p[2][2], 0.0], 3)
}

/// Truncated derivative jet `(f, f′, …)` of length `len ≤ 4`.
#[derive(Debug, Clone, Copy)]
struct Jet {
    v: [f64; 4],
    len: usize,
}

impl Jet {
    fn new(v: [f64; 4], len: usize) -> Self {
        Jet { v, len }
    }

    fn mul(self, o: Jet) -> Jet {
        let len = self.len.min(o.len);
        let mut v = [0.0; 4];
        for (k, vk) in v.iter_mut().enumerate().take(len) {
            for m in 0..=k {
                *vk += BINOM[k][m] * self.v[m] * o.v[k - m];
            }
        }
        Jet::new(v, len)
    }

    fn powf(self, alpha: f64) -> Jet {
        let [g0, g1, g2, g3] = self.v;
        let p = |e: f64| libm::pow(g0, e);
        let v = [
            p(alpha),
            alpha * p(alpha - 1.0) * g1,
            alpha * (alpha - 1.0) * p(alpha - 2.0) * g1 * g1 + alpha * p(alpha - 1.0) * g2,
            alpha * (alpha - 1.0) * (alpha - 2.0) * p(alpha - 3.0) * g1 * g1 * g1
                + 3.0 * alpha * (alpha - 1.0) * p(alpha - 2.0) * g1 * g2
                + alpha * p(alpha - 1.0) * g3,
        ];
        Jet::new(v, self.len)
    }

    fn derivative(self) -> Jet {
        let mut v = [0.0; 4];
        v[..3].copy_from_slice(&self.v[1..]);
        Jet::new(v, self.len.saturating_sub(1))
    }
}

/// `D_i f` for a jet of `f`, given the metric jet.
fn covariant_recursion(f: Jet, g: Jet, i: usize) -> Jet {
    let mut d = f;
    for k in 0..i {
        let e = 0.5 * k as f64;
        d = if k == 0 {
            d.derivative()
        } else {
            g.powf(e).mul(d.mul(g.powf(-e)).derivative())
        };
    }
    d
}

/// Sup of `|K_T^{[i,j]} − K_∞^{[i,j]}|` and `|h_T − h_∞|`, and the metric ratio `ρ_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProximityReport {
    /// `𝒱_T`.
    pub v: f64,
    /// `ρ_T = max(sup √(g_T/g_∞), sup √(g_∞/g_T))`.
    pub rho: f64,
    /// `𝒱_T ≤ L_{2,2} ∧ L_3`.
    pub feasible: bool,
    pub grid_step: f64,
}

/// Proximity of a finite kernel to its limit on a metric grid of the finite kernel.
pub fn proximity<D: Dictionary>(
    model: &KernelModel<D>,
    limit: &LimitKernelSpec,
    step: f64,
) -> Result<ProximityReport> {
    let grid = model.metric_grid(step)?;
    let cache = model.prepare(&grid)?;
    let lim = limit.prepare(&grid)?;
    let mut v: f64 = 0.0;
    let mut rho: f64 = 1.0;
    for (a, &t) in grid.iter().enumerate() {
        let g = cache[a].g[0];
        let gi = limit.map.metric(t);
        rho = rho.max(libm::sqrt(g / gi)).max(libm::sqrt(gi / g));
        v = v.max((cache[a].cov[3].norm_squared() - limit.h()).abs());
    }
    // all pairwise products at once: column a of `cols[i]` is φ^{[i]}(grid[a])
    let cols: Vec<nalgebra::DMatrix<f64>> = (0..3)
        .map(|i| {
            nalgebra::DMatrix::from_fn(model.dictionary().dim(), grid.len(), |r, a| cache[a].cov[i][r])
        })
        .collect();
    for i in 0..3 {
        for j in 0..3 {
            let prod = cols[i].transpose() * &cols[j];
            for a in 0..grid.len() {
                for b in a..grid.len() {
                    let d = prod[(a, b)] - limit.cov_cached(&lim, i, j, a, b);
                    v = v.max(d.abs());
                }
            }
        }
    }
    Ok(ProximityReport {
        v,
        rho,
        feasible: v <= limit.l[2][2].min(limit.l3),
        grid_step: step,
    })
}

/// Covariant features `φ^{[i]}`, `i ≤ max_order`, tabulated on a metric grid.
///
/// Column `k` of `cov[i]` is `φ^{[i]}(theta[k])`.
#[derive(Debug, Clone)]
pub struct FeatureGrid {
    pub theta: Vec<f64>,
    pub step: f64,
    pub cov: Vec<nalgebra::DMatrix<f64>>,
}

impl FeatureGrid {
    pub fn new<D: Dictionary>(model: &KernelModel<D>, step: f64, max_order: usize) -> Result<Self> {
        if max_order > 3 {
            return Err(Error::Invalid("covariant order above 3"));
        }
        let theta = model.metric_grid(step)?;
        let t = model.dictionary().dim();
        let mut cov = alloc::vec![nalgebra::DMatrix::zeros(t, theta.len()); max_order + 1];
        for (k, &th) in theta.iter().enumerate() {
            if max_order == 0 {
                cov[0].set_column(k, &model.dictionary().feature(th)?);
                continue;
            }
            let jet = model.dictionary().jet(th)?;
            for (i, m) in cov.iter_mut().enumerate() {
                m.set_column(k, &jet.cov[i]);
            }
        }
        Ok(FeatureGrid { theta, step, cov })
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn max_order(&self) -> usize {
        self.cov.len() - 1
    }
}
