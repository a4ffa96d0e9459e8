//! Penalised least squares over `(B, ϑ)`:
//! `(1/2ν(𝒵))‖Y − BΦ(ϑ)‖²_{L_T} + κ‖B‖_{ℓ1,L^p(ν)}` for `p ∈ {1, 2}`.
//!
//! Atoms are inserted greedily at the maximiser of the residual correlation, `B` is
//! fitted by accelerated proximal gradient, and `ϑ` by damped Gauss–Newton.

use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, DVector};

use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::kernel::{CovariantKernel, FeatureGrid, KernelModel};
use crate::measure::{conjugate, feature_matrix, synthesize, DiscreteMeasure, MixtureParams};
use crate::noise::{sup_stat, SupStat};

/// Alternations of the `B` and `ϑ` steps per outer iteration.
const ALTERNATIONS: usize = 200;
/// Gauss–Newton iterations per `ϑ` step.
const REFINE_ITERS: usize = 50;
/// Relative fit decrease below which a Gauss–Newton run stops.
const REFINE_RTOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub kappa: f64,
    /// 1 or 2.
    pub p: f64,
    pub k_max: usize,
    /// Metric step of the insertion grid.
    pub grid_step: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Relative objective decrease below which alternation stops.
    pub tol_obj: f64,
    /// Relative change of `B` below which the proximal iteration stops.
    pub tol_inner: f64,
    pub tol_dual: f64,
    pub refine: bool,
}

impl SolverConfig {
    pub fn new(kappa: f64, p: f64) -> Result<Self> {
        let c = SolverConfig {
            kappa,
            p,
            k_max: 32,
            grid_step: 0.05,
            max_outer: 50,
            max_inner: 5000,
            tol_obj: 1e-10,
            tol_inner: 1e-12,
            tol_dual: 1e-3,
            refine: true,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return Err(Error::Invalid("kappa must be positive"));
        }
        if self.p != 1.0 && self.p != 2.0 {
            return Err(Error::BadExponent(self.p));
        }
        if self.k_max == 0 {
            return Err(Error::Invalid("capacity must be at least 1"));
        }
        if !(self.grid_step > 0.0) {
            return Err(Error::Invalid("grid step must be positive"));
        }
        if !(self.tol_obj >= 0.0 && self.tol_inner >= 0.0 && self.tol_dual >= 0.0) {
            return Err(Error::Invalid("tolerances must be nonnegative"));
        }
        Ok(())
    }

    /// Merge radius in metric units.
    pub fn merge_radius(&self) -> f64 {
        0.25 * self.grid_step
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TraceEvent {
    Init,
    Insert { theta: f64 },
    Refit,
    Prune { removed: usize },
    Merge,
    Converged,
    Capacity,
    Stalled,
    MaxIter,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceEvent::Init => write!(f, "init"),
            TraceEvent::Insert { theta } => write!(f, "insert:{theta}"),
            TraceEvent::Refit => write!(f, "refit"),
            TraceEvent::Prune { removed } => write!(f, "prune:{removed}"),
            TraceEvent::Merge => write!(f, "merge"),
            TraceEvent::Converged => write!(f, "converged"),
            TraceEvent::Capacity => write!(f, "capacity"),
            TraceEvent::Stalled => write!(f, "stalled"),
            TraceEvent::MaxIter => write!(f, "max_iter"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub objective: f64,
    pub event: TraceEvent,
    pub dual_sup: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveTrace {
    pub rows: Vec<TraceRow>,
    /// Final `sup_θ ‖⟨R, φ(θ)⟩‖_{L^q(ν)}`.
    pub dual_sup: f64,
    /// Dual check passed; otherwise the returned point is the best iterate.
    pub converged: bool,
}

impl SolveTrace {
    pub fn objectives(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(|r| r.objective)
    }

    pub fn warning(&self) -> bool {
        !self.converged
    }
}

/// `(1/2ν(𝒵))‖Y − BΦ(ϑ)‖²_{L_T} + κ‖B‖_{ℓ1,L^p(ν)}`, `p ∈ [1, 2]`.
pub fn objective<D: Dictionary>(
    y: &DMatrix<f64>,
    dict: &D,
    nu: &DiscreteMeasure,
    params: &MixtureParams,
    kappa: f64,
    p: f64,
) -> Result<f64> {
    if y.nrows() != nu.len() || params.n_signals() != nu.len() {
        return Err(Error::Shape("rows differ from measure size"));
    }
    let r = y - synthesize(dict, params, None)?;
    let fit = nu.signal_norm(&r)?;
    Ok(0.5 * fit * fit / nu.mass() + kappa * nu.mixed_norm(&params.b, p)?)
}

/// `sup_θ ‖⟨R(·), φ(θ)⟩‖_{L^q(ν)}` over the grid with local polish.
pub fn dual_sup<D: Dictionary>(
    residual: &DMatrix<f64>,
    model: &KernelModel<D>,
    grid: &FeatureGrid,
    nu: &DiscreteMeasure,
    q: f64,
) -> Result<SupStat> {
    sup_stat(residual, model, grid, nu, 0, q)
}

/// One proximal gradient step `prox_{step·κν‖·‖}(B − step·G)` in the `ν`-weighted geometry.
///
/// `p = 2` soft-thresholds each column's `L²(ν)` norm; `p = 1` soft-thresholds
/// entries. Rows with zero weight are set to zero.
pub fn group_prox_step(
    b: &DMatrix<f64>,
    gradient: &DMatrix<f64>,
    step: f64,
    kappa_nu: f64,
    p: f64,
    nu: &DiscreteMeasure,
) -> Result<DMatrix<f64>> {
    if b.shape() != gradient.shape() || b.nrows() != nu.len() {
        return Err(Error::Shape("B, gradient and measure disagree"));
    }
    if !(step > 0.0) {
        return Err(Error::Invalid("step must be positive"));
    }
    let mut v = b - gradient * step;
    prox_in_place(&mut v, step * kappa_nu, p, nu.weights())?;
    Ok(v)
}

fn prox_in_place(v: &mut DMatrix<f64>, thr: f64, p: f64, a: &[f64]) -> Result<()> {
    for (z, &w) in a.iter().enumerate() {
        if w == 0.0 {
            v.row_mut(z).fill(0.0);
        }
    }
    if p == 2.0 {
        for mut col in v.column_iter_mut() {
            let norm = libm::sqrt(col.iter().zip(a).map(|(x, w)| w * x * x).sum());
            if norm <= thr {
                col.fill(0.0);
            } else {
                col *= 1.0 - thr / norm;
            }
        }
    } else if p == 1.0 {
        for x in v.iter_mut() {
            *x = if *x > thr {
                *x - thr
            } else if *x < -thr {
                *x + thr
            } else {
                0.0
            };
        }
    } else {
        return Err(Error::BadExponent(p));
    }
    Ok(())
}

/// Quadratic model of the fit at fixed `ϑ`: `Γ = ΦΦᵀ`, `C = YΦᵀ`.
struct FixedFit<'a> {
    gamma: DMatrix<f64>,
    c: DMatrix<f64>,
    yy: f64,
    lip: f64,
    a: &'a [f64],
    mass: f64,
}

impl<'a> FixedFit<'a> {
    fn new(y: &DMatrix<f64>, phi: &DMatrix<f64>, nu: &'a DiscreteMeasure) -> Self {
        let gamma = phi * phi.transpose();
        let c = y * phi.transpose();
        let a = nu.weights();
        let yy = y
            .row_iter()
            .zip(a)
            .map(|(r, w)| w * r.norm_squared())
            .sum();
        let lip = if gamma.nrows() == 0 {
            0.0
        } else {
            gamma
                .clone()
                .symmetric_eigenvalues()
                .iter()
                .cloned()
                .fold(0.0, f64::max)
        };
        FixedFit {
            gamma,
            c,
            yy,
            lip,
            a,
            mass: nu.mass(),
        }
    }

    fn inner(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
        x.row_iter()
            .zip(y.row_iter())
            .zip(self.a)
            .map(|((u, v), w)| w * u.dot(&v))
            .sum::<f64>()
            / self.mass
    }

    /// Gradient in the `ν`-weighted inner product.
    fn gradient(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        b * &self.gamma - &self.c
    }

    fn smooth(&self, b: &DMatrix<f64>) -> f64 {
        let t = b * &self.gamma - &self.c * 2.0;
        0.5 * (self.yy / self.mass + self.inner(b, &t))
    }
}

fn penalty(b: &DMatrix<f64>, a: &[f64], p: f64) -> f64 {
    b.column_iter()
        .map(|c| {
            if p == 1.0 {
                c.iter().zip(a).map(|(x, w)| w * x.abs()).sum::<f64>()
            } else {
                libm::sqrt(c.iter().zip(a).map(|(x, w)| w * x * x).sum::<f64>())
            }
        })
        .sum()
}

/// Accelerated proximal gradient with backtracking and adaptive restart.
///
/// Returns the iterate with the smallest objective seen, starting point included.
fn fista(
    fit: &FixedFit<'_>,
    b0: DMatrix<f64>,
    kappa: f64,
    p: f64,
    max_inner: usize,
    tol: f64,
) -> Result<DMatrix<f64>> {
    let kn = kappa * fit.mass;
    let total = |b: &DMatrix<f64>| fit.smooth(b) + kappa * penalty(b, fit.a, p);
    let mut best_val = total(&b0);
    let mut best = b0.clone();
    if b0.ncols() == 0 || fit.lip <= 0.0 {
        return Ok(best);
    }
    let mut lip = fit.lip;
    let mut x = b0.clone();
    let mut yk = b0;
    let mut t = 1.0;
    for _ in 0..max_inner {
        let g = fit.gradient(&yk);
        let fy = fit.smooth(&yk);
        let xn = loop {
            let mut v = &yk - &g / lip;
            prox_in_place(&mut v, kn / lip, p, fit.a)?;
            let d = &v - &yk;
            let quad = fy + fit.inner(&g, &d) + 0.5 * lip * fit.inner(&d, &d);
            if fit.smooth(&v) <= quad + 1e-14 * (1.0 + fy.abs()) || !lip.is_finite() {
                break v;
            }
            lip *= 2.0;
        };
        let val = total(&xn);
        if val < best_val {
            best_val = val;
            best = xn.clone();
        }
        let step = &xn - &x;
        let restart = fit.inner(&(&yk - &xn), &step) > 0.0;
        let tn = if restart {
            1.0
        } else {
            0.5 * (1.0 + libm::sqrt(1.0 + 4.0 * t * t))
        };
        yk = if restart {
            xn.clone()
        } else {
            &xn + &step * ((t - 1.0) / tn)
        };
        let change = step.norm();
        x = xn;
        t = tn;
        if change <= tol * (1.0 + x.norm()) {
            break;
        }
    }
    Ok(best)
}

/// Convex subproblem at fixed `ϑ`: minimise the objective over `B`.
///
/// Returns `B` and the objective.
pub fn solve_fixed<D: Dictionary>(
    y: &DMatrix<f64>,
    dict: &D,
    nu: &DiscreteMeasure,
    theta: &[f64],
    config: &SolverConfig,
    warm: Option<&DMatrix<f64>>,
) -> Result<(DMatrix<f64>, f64)> {
    config.validate()?;
    if y.nrows() != nu.len() || y.ncols() != dict.dim() {
        return Err(Error::Shape("observation shape differs from measure and dictionary"));
    }
    let phi = feature_matrix(dict, theta)?;
    let fit = FixedFit::new(y, &phi, nu);
    let b0 = match warm {
        Some(w) if w.shape() == (nu.len(), theta.len()) => w.clone(),
        Some(_) => return Err(Error::Shape("warm start shape")),
        None => DMatrix::zeros(nu.len(), theta.len()),
    };
    let b = fista(&fit, b0, config.kappa, config.p, config.max_inner, config.tol_inner)?;
    let params = MixtureParams::new(b, theta.to_vec())?;
    let obj = objective(y, dict, nu, &params, config.kappa, config.p)?;
    Ok((params.b, obj))
}

/// Minimise the fit term over `ϑ` with `B` fixed, keeping each `θ_k` in the domain.
///
/// Damped Gauss–Newton with a projected backtracking line search; the fit never
/// increases.
pub fn refine_theta<D: Dictionary>(
    y: &DMatrix<f64>,
    b: &DMatrix<f64>,
    theta: &[f64],
    dict: &D,
    nu: &DiscreteMeasure,
) -> Result<Vec<f64>> {
    refine_theta_iters(y, b, theta, dict, nu, REFINE_ITERS)
}

fn fidelity<D: Dictionary>(
    y: &DMatrix<f64>,
    b: &DMatrix<f64>,
    theta: &[f64],
    dict: &D,
    nu: &DiscreteMeasure,
) -> Result<f64> {
    let r = y - b * feature_matrix(dict, theta)?;
    let f = nu.signal_norm(&r)?;
    Ok(0.5 * f * f / nu.mass())
}

fn refine_theta_iters<D: Dictionary>(
    y: &DMatrix<f64>,
    b: &DMatrix<f64>,
    theta: &[f64],
    dict: &D,
    nu: &DiscreteMeasure,
    iters: usize,
) -> Result<Vec<f64>> {
    let k = theta.len();
    if b.ncols() != k || b.nrows() != nu.len() || y.nrows() != nu.len() {
        return Err(Error::Shape("B, ϑ and measure disagree"));
    }
    let (lo, hi) = dict.domain();
    let a = nu.weights();
    let m = nu.mass();
    let mut th = theta.to_vec();
    if k == 0 {
        return Ok(th);
    }
    // W_kl = Σ_z a_z B_zk B_zl / m.
    let mut wts = DMatrix::zeros(k, k);
    for (z, &w) in a.iter().enumerate() {
        let row = b.row(z);
        wts += row.transpose() * row * (w / m);
    }
    let mut fid = fidelity(y, b, &th, dict, nu)?;
    let mut damping = 1e-6;
    for _ in 0..iters {
        let mut phi = DMatrix::zeros(k, dict.dim());
        let mut dphi = DMatrix::zeros(k, dict.dim());
        for (i, &t) in th.iter().enumerate() {
            let jet = dict.jet(t)?;
            phi.row_mut(i).copy_from(&jet.deriv[0].transpose());
            dphi.row_mut(i).copy_from(&jet.deriv[1].transpose());
        }
        let r = y - b * &phi;
        let pr = &r * dphi.transpose();
        let grad = DVector::from_iterator(
            k,
            (0..k).map(|i| -(0..a.len()).map(|z| a[z] * b[(z, i)] * pr[(z, i)]).sum::<f64>() / m),
        );
        let h = wts.component_mul(&(&dphi * dphi.transpose()));
        let gnorm = grad.amax();
        if gnorm == 0.0 || !gnorm.is_finite() {
            break;
        }
        let mut improved = false;
        let mut converged = false;
        while damping < 1e12 {
            let mut sys = h.clone();
            for i in 0..k {
                let d = h[(i, i)];
                sys[(i, i)] = d + damping * if d > 0.0 { d } else { 1.0 };
            }
            let dir = match sys.lu().solve(&(-&grad)) {
                Some(d) if d.iter().all(|v| v.is_finite()) => d,
                _ => {
                    damping *= 10.0;
                    continue;
                }
            };
            let cand: Vec<f64> = th
                .iter()
                .zip(dir.iter())
                .map(|(t, d)| (t + d).clamp(lo, hi))
                .collect();
            let slope: f64 = grad
                .iter()
                .zip(cand.iter().zip(&th))
                .map(|(g, (c, t))| g * (c - t))
                .sum();
            let f = fidelity(y, b, &cand, dict, nu)?;
            if f < fid && f <= fid + 1e-4 * slope {
                th = cand;
                converged = fid - f <= REFINE_RTOL * fid;
                fid = f;
                damping = (damping * 0.1).max(1e-12);
                improved = true;
                break;
            }
            damping *= 10.0;
        }
        if !improved || converged {
            break;
        }
    }
    Ok(th)
}

/// Greedy insertion solver bound to a kernel and an insertion grid.
pub struct Solver<'a, D> {
    model: &'a KernelModel<D>,
    grid: FeatureGrid,
    config: SolverConfig,
}

impl<'a, D: Dictionary> Solver<'a, D> {
    pub fn new(model: &'a KernelModel<D>, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let grid = FeatureGrid::new(model, config.grid_step, 0)?;
        Ok(Solver { model, grid, config })
    }

    /// Reuse a tabulated grid; it must carry order-0 features.
    pub fn with_grid(
        model: &'a KernelModel<D>,
        grid: FeatureGrid,
        config: SolverConfig,
    ) -> Result<Self> {
        config.validate()?;
        if grid.is_empty() || grid.cov.is_empty() {
            return Err(Error::Invalid("empty insertion grid"));
        }
        Ok(Solver { model, grid, config })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn grid(&self) -> &FeatureGrid {
        &self.grid
    }

    fn objective_of(&self, y: &DMatrix<f64>, nu: &DiscreteMeasure, s: &MixtureParams) -> Result<f64> {
        objective(y, self.model.dictionary(), nu, s, self.config.kappa, self.config.p)
    }

    fn residual(&self, y: &DMatrix<f64>, s: &MixtureParams) -> Result<DMatrix<f64>> {
        Ok(y - synthesize(self.model.dictionary(), s, None)?)
    }

    fn fit_b(&self, y: &DMatrix<f64>, nu: &DiscreteMeasure, s: &MixtureParams) -> Result<MixtureParams> {
        let dict = self.model.dictionary();
        let phi = feature_matrix(dict, &s.theta)?;
        let fit = FixedFit::new(y, &phi, nu);
        let c = &self.config;
        let b = fista(&fit, s.b.clone(), c.kappa, c.p, c.max_inner, c.tol_inner)?;
        MixtureParams::new(b, s.theta.clone())
    }

    /// Alternate the `B` and `ϑ` steps, pruning empty atoms, until the objective stalls.
    fn polish(
        &self,
        y: &DMatrix<f64>,
        nu: &DiscreteMeasure,
        mut s: MixtureParams,
        mut obj: f64,
    ) -> Result<(MixtureParams, f64, usize)> {
        let mut removed = 0;
        for _ in 0..ALTERNATIONS {
            let start = obj;
            let cand = self.fit_b(y, nu, &s)?;
            let v = self.objective_of(y, nu, &cand)?;
            if v <= obj {
                s = cand;
                obj = v;
            }
            let (pruned, count) = prune(&s, nu);
            if count > 0 {
                let v = self.objective_of(y, nu, &pruned)?;
                if v <= obj {
                    s = pruned;
                    obj = v;
                    removed += count;
                }
            }
            if self.config.refine && s.n_atoms() > 0 {
                let th = refine_theta(y, &s.b, &s.theta, self.model.dictionary(), nu)?;
                let cand = MixtureParams::new(s.b.clone(), th)?;
                let v = self.objective_of(y, nu, &cand)?;
                if v <= obj {
                    s = cand;
                    obj = v;
                }
            }
            if start - obj <= self.config.tol_obj * obj.abs() {
                break;
            }
        }
        Ok((s, obj, removed))
    }

    /// Merge the closest pair of atoms within the merge radius if that does not
    /// increase the objective.
    fn try_merge(
        &self,
        y: &DMatrix<f64>,
        nu: &DiscreteMeasure,
        s: &MixtureParams,
        obj: f64,
    ) -> Result<Option<(MixtureParams, f64)>> {
        let k = s.n_atoms();
        let mut pair = None;
        let mut closest = self.config.merge_radius();
        for i in 0..k {
            for j in i + 1..k {
                let d = self.model.dist(s.theta[i], s.theta[j]);
                if d < closest {
                    closest = d;
                    pair = Some((i, j));
                }
            }
        }
        let Some((i, j)) = pair else {
            return Ok(None);
        };
        let (wi, wj) = (s.b.column(i).norm(), s.b.column(j).norm());
        let t = if wi + wj > 0.0 {
            (wi * s.theta[i] + wj * s.theta[j]) / (wi + wj)
        } else {
            0.5 * (s.theta[i] + s.theta[j])
        };
        let mut b = s.b.clone();
        let cj = b.column(j).clone_owned();
        b.column_mut(i).axpy(1.0, &cj, 1.0);
        let b = b.remove_column(j);
        let mut theta = s.theta.clone();
        theta[i] = t;
        theta.remove(j);
        let merged = MixtureParams::new(b, theta)?;
        let v = self.objective_of(y, nu, &merged)?;
        let (merged, v, _) = self.polish(y, nu, merged, v)?;
        Ok(if v <= obj { Some((merged, v)) } else { None })
    }

    fn dual_check(
        &self,
        y: &DMatrix<f64>,
        nu: &DiscreteMeasure,
        s: &MixtureParams,
    ) -> Result<(SupStat, bool)> {
        let q = conjugate(self.config.p);
        let r = self.residual(y, s)?;
        let ds = dual_sup(&r, self.model, &self.grid, nu, q)?;
        let kn = self.config.kappa * nu.mass();
        let tol = self.config.tol_dual;
        let mut ok = ds.value <= kn * (1.0 + tol);
        if ok && s.n_atoms() > 0 {
            let corr = &r * feature_matrix(self.model.dictionary(), &s.theta)?.transpose();
            for (k, col) in corr.column_iter().enumerate() {
                if s.b.column(k).iter().all(|v| *v == 0.0) {
                    continue;
                }
                let g = nu.lp_norm_unchecked(col.iter().cloned(), q);
                if (g - kn).abs() > tol * kn {
                    ok = false;
                }
            }
        }
        Ok((ds, ok))
    }

    /// Fit `(B, ϑ)` to `Y` (n × T).
    pub fn solve(
        &self,
        y: &DMatrix<f64>,
        nu: &DiscreteMeasure,
    ) -> Result<(MixtureParams, SolveTrace)> {
        let dict = self.model.dictionary();
        if y.nrows() != nu.len() || y.ncols() != dict.dim() {
            return Err(Error::Shape("observation shape differs from measure and dictionary"));
        }
        let c = &self.config;
        let kn = c.kappa * nu.mass();
        let mut s = MixtureParams::empty(nu.len());
        let mut obj = self.objective_of(y, nu, &s)?;
        let mut trace = SolveTrace::default();
        let (mut ds, mut ok) = self.dual_check(y, nu, &s)?;
        trace.rows.push(TraceRow {
            iter: 0,
            objective: obj,
            event: TraceEvent::Init,
            dual_sup: ds.value,
        });
        let mut finished = false;
        for iter in 1..=c.max_outer {
            if ok {
                trace.rows.push(TraceRow {
                    iter,
                    objective: obj,
                    event: TraceEvent::Converged,
                    dual_sup: ds.value,
                });
                finished = true;
                break;
            }
            let start = obj;
            let mut event = TraceEvent::Refit;
            let crowded = s
                .theta
                .iter()
                .any(|&t| self.model.dist(t, ds.theta) < c.merge_radius());
            if ds.value > kn * (1.0 + c.tol_dual) && !crowded {
                if s.n_atoms() >= c.k_max {
                    trace.rows.push(TraceRow {
                        iter,
                        objective: obj,
                        event: TraceEvent::Capacity,
                        dual_sup: ds.value,
                    });
                    finished = true;
                    break;
                }
                let mut theta = s.theta.clone();
                theta.push(ds.theta);
                let b = s.b.clone().insert_column(s.n_atoms(), 0.0);
                s = MixtureParams::new(b, theta)?;
                event = TraceEvent::Insert { theta: ds.theta };
            }
            let (next, v, removed) = self.polish(y, nu, s.clone(), obj)?;
            if v <= obj {
                s = next;
                obj = v;
            }
            (ds, _) = self.dual_check(y, nu, &s)?;
            trace.rows.push(TraceRow {
                iter,
                objective: obj,
                event,
                dual_sup: ds.value,
            });
            if removed > 0 {
                trace.rows.push(TraceRow {
                    iter,
                    objective: obj,
                    event: TraceEvent::Prune { removed },
                    dual_sup: ds.value,
                });
            }
            while let Some((merged, v)) = self.try_merge(y, nu, &s, obj)? {
                s = merged;
                obj = v;
                (ds, _) = self.dual_check(y, nu, &s)?;
                trace.rows.push(TraceRow {
                    iter,
                    objective: obj,
                    event: TraceEvent::Merge,
                    dual_sup: ds.value,
                });
            }
            (ds, ok) = self.dual_check(y, nu, &s)?;
            let inserted = matches!(event, TraceEvent::Insert { .. });
            if !ok && !inserted && start - obj <= c.tol_obj * obj.abs() {
                trace.rows.push(TraceRow {
                    iter,
                    objective: obj,
                    event: TraceEvent::Stalled,
                    dual_sup: ds.value,
                });
                finished = true;
                break;
            }
        }
        if !finished {
            if ok {
                trace.rows.push(TraceRow {
                    iter: c.max_outer,
                    objective: obj,
                    event: TraceEvent::Converged,
                    dual_sup: ds.value,
                });
            } else {
                trace.rows.push(TraceRow {
                    iter: c.max_outer,
                    objective: obj,
                    event: TraceEvent::MaxIter,
                    dual_sup: ds.value,
                });
            }
        }
        trace.dual_sup = ds.value;
        trace.converged = ok;
        Ok((s, trace))
    }
}

/// Drop atoms whose coefficients vanish on the support of `ν`.
fn prune(s: &MixtureParams, nu: &DiscreteMeasure) -> (MixtureParams, usize) {
    let keep = s.support(nu);
    let removed = s.n_atoms() - keep.len();
    if removed == 0 {
        return (s.clone(), 0);
    }
    let b = s.b.select_columns(keep.iter());
    let theta = keep.iter().map(|&k| s.theta[k]).collect();
    (MixtureParams { b, theta }, removed)
}

/// Build a solver and fit `Y` in one call.
pub fn solve<D: Dictionary>(
    y: &DMatrix<f64>,
    model: &KernelModel<D>,
    nu: &DiscreteMeasure,
    config: &SolverConfig,
) -> Result<(MixtureParams, SolveTrace)> {
    Solver::new(model, config.clone())?.solve(y, nu)
}
