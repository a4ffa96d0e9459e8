//! Certificate reports, single trials and Monte Carlo studies.

use crate::config::{ExperimentConfig, SweepPoint};
use anyhow::{bail, Context, Result};
use nalgebra::DMatrix;
use offgrid_core::certificates::{
    build_certificate, check_separation, delta_search, feasibility, min_separation,
    verify_assumptions, CertificateConstants, CertificateKind, Feasibility, VerificationReport,
};
use offgrid_core::dictionary::BuiltinDictionary;
use offgrid_core::kernel::{proximity, CovariantKernel, FeatureGrid, KernelModel, ProximityReport};
use offgrid_core::limit::LimitKernelSpec;
use offgrid_core::measure::{conjugate, prediction_error, synthesize, DiscreteMeasure, MixtureParams};
use offgrid_core::noise::{
    c4_from_prime, event_constants, failure_prob_p1, failure_prob_p2, kappa_p1, kappa_p2,
    sample_noise, sup_stat, NoiseModel, TheoreticalConstants,
};
use offgrid_core::solver::{SolveTrace, Solver, SolverConfig};
use offgrid_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::time::Instant;

/// Slack on the prediction bound that absorbs grid estimation of the constants.
pub const BOUND_SLACK: f64 = 0.05;

/// Everything computed once per sweep point: certificate analysis, truth and tuning.
pub struct Setup {
    pub point: SweepPoint,
    pub p: f64,
    pub model: KernelModel<BuiltinDictionary>,
    pub limit: LimitKernelSpec,
    pub nu: DiscreteMeasure,
    pub truth: MixtureParams,
    pub proximity: ProximityReport,
    pub radius: f64,
    /// `ε_T(r)` and `ν_T(r)` on the proximity grid.
    pub eps_far: f64,
    pub nu_near: f64,
    pub u_inf: f64,
    pub u_inf_prime: f64,
    pub delta: f64,
    pub delta_prime: f64,
    pub feasibility: Feasibility,
    /// Separation both certificates need, `max` of the two `2 max(r, ρδ)`.
    pub required: f64,
    pub certificate: CertificateConstants,
    pub constants: TheoreticalConstants,
    pub verification: VerificationReport,
    /// `‖P‖_{L_T}` and its bound `2√s ν(𝒵)^{1/2p − 1/2q}`.
    pub p_norm: f64,
    pub p_norm_bound: f64,
    pub noise: NoiseModel,
    pub tau: f64,
    pub kappa: f64,
    pub threshold: f64,
    pub bound: f64,
    pub failure_prob: f64,
}

impl Setup {
    pub fn new(cfg: &ExperimentConfig, point: SweepPoint) -> Result<Self> {
        let SweepPoint { t, s, n } = point;
        let p = cfg.study.p;
        let q = conjugate(p);
        let cs = &cfg.certificate;
        let dict = cfg.dictionary.build(t)?;
        let limit = LimitKernelSpec::for_builtin(&dict)?;
        let model = KernelModel::new(dict)?;
        let nu = cfg.measure.build(n)?;

        let prox = proximity(&model, &limit, cs.proximity_step)?;
        let radius = cs.radius.unwrap_or(0.5 / (2.0 * limit.l[2][0]).sqrt());
        let (eps_far, _) = model.eps_far(radius, cs.proximity_step)?;
        let nu_near = model.nu_near(radius, cs.proximity_step)?;
        let th = offgrid_core::certificates::thresholds(&limit, radius, prox.rho)?;
        let sm1 = (s - 1) as f64;
        let u_inf = 0.5 * (th.h2 - sm1 * prox.v);
        let u_inf_prime = 0.5 * (1.0 / 6.0 - sm1 * prox.v);
        if !(u_inf > 0.0 && u_inf_prime > 0.0) {
            return Err(Error::Precondition("proximity too large for the requested sparsity").into());
        }
        let delta = delta_search(&limit, u_inf, s, cs.search_step)?;
        let delta_prime = delta_search(&limit, u_inf_prime, s, cs.search_step)?;
        let certificate = CertificateConstants::from_limit(&limit, radius, prox.rho, u_inf, u_inf_prime)?;
        let feas = feasibility(&limit, &certificate, s, prox.v, delta, delta_prime)?;
        if !(feas.interpolating_ok && feas.derivative_ok) {
            return Err(Error::Infeasible.into());
        }
        let required = feas.separation.max(feas.separation_prime);

        let theta = match &cfg.truth.theta {
            Some(th) => th.clone(),
            None => place(&model, s, cfg.truth.separation * required)?,
        };
        check_separation(&model, &theta, required)?;
        let truth = truth_coefficients(cfg, &theta, n)?;

        // certificate targets: the dual sign pattern of each true column
        let mut v = DMatrix::zeros(n, s);
        for k in 0..s {
            let col: Vec<f64> = truth.b.column(k).iter().cloned().collect();
            let d = nu.dual_unit(&col, p)?;
            v.column_mut(k).copy_from_slice(&d);
        }
        let pc = build_certificate(&model, &theta, &v, CertificateKind::Interpolating)?;
        let qc = build_certificate(&model, &theta, &v, CertificateKind::Derivative)?;
        let verification = verify_assumptions(&model, &nu, q, &pc, &qc, &certificate, cs.verify_step)?;
        let p_norm = pc.norm_lt(&nu)?;
        let p_norm_bound =
            2.0 * (s as f64).sqrt() * nu.mass().powf(0.5 / p - 0.5 / q);

        let constants = event_constants(&certificate, limit.l[2][2], limit.l3)?;
        let delta_t = cfg.noise.delta_t(t);
        let noise = NoiseModel::new(cfg.noise.sigma, delta_t, cfg.seed)?;
        let tau = cfg.study.tau.unwrap_or(t as f64);
        let diam = model.diameter();
        let (kappa, failure_prob) = if p == 1.0 {
            let c3 = cfg.solver.kappa_constant.unwrap_or(constants.c3);
            let k = kappa_p1(tau, noise.sigma, delta_t, nu.mass(), c3)?;
            (k, failure_prob_p1(tau, n, diam, c4_from_prime(cfg.study.c4_prime))?)
        } else {
            let c1 = cfg.solver.kappa_constant.unwrap_or(constants.c1);
            let k = kappa_p2(tau, n, noise.sigma, delta_t, nu.a_max(), nu.mass(), c1)?;
            (k, failure_prob_p2(tau, n, diam, constants.c2)?)
        };
        let kappa = cfg.solver.kappa.unwrap_or(kappa);
        if !(kappa > 0.0) {
            bail!("κ must be positive; set solver.kappa when σ = 0");
        }
        let threshold = constants.event_threshold(kappa, nu.mass());
        let bound = constants.prediction_bound(s, nu.mass(), p, kappa);
        Ok(Setup {
            point,
            p,
            model,
            limit,
            nu,
            truth,
            proximity: prox,
            radius,
            eps_far,
            nu_near,
            u_inf,
            u_inf_prime,
            delta,
            delta_prime,
            feasibility: feas,
            required,
            certificate,
            constants,
            verification,
            p_norm,
            p_norm_bound,
            noise,
            tau,
            kappa,
            threshold,
            bound,
            failure_prob,
        })
    }

    /// True when every checked inequality and the norm bound hold.
    pub fn certified(&self) -> bool {
        self.verification.all_pass() && self.p_norm <= self.p_norm_bound
    }

    pub fn solver_config(&self, cfg: &ExperimentConfig) -> Result<SolverConfig> {
        let mut c = SolverConfig::new(self.kappa, self.p)?;
        c.k_max = cfg.solver.k_max;
        c.grid_step = cfg.solver.grid_step;
        c.max_outer = cfg.solver.max_outer;
        c.max_inner = cfg.solver.max_inner;
        c.refine = cfg.solver.refine;
        c.validate()?;
        Ok(c)
    }

    /// `(quantity, value, grid_step)` rows of the kernel and certificate analysis; the
    /// grid step is empty for exact quantities.
    pub fn diagnostics(&self) -> Vec<(String, String, String)> {
        let c = &self.constants;
        let f = &self.feasibility;
        let lim = &self.limit;
        let prox = self.proximity.grid_step.to_string();
        let verify = self.verification.grid_step.to_string();
        let mut rows: Vec<(String, String, String)> = Vec::new();
        let mut push = |k: &str, v: String, step: &str| rows.push((k.into(), v, step.into()));
        push("status", if self.certified() { "pass" } else { "fail" }.into(), "");
        push("samples", self.point.t.to_string(), "");
        push("sparsity", self.point.s.to_string(), "");
        push("signals", self.point.n.to_string(), "");
        push("V_T", self.proximity.v.to_string(), &prox);
        push("rho_T", self.proximity.rho.to_string(), &prox);
        push("radius", self.radius.to_string(), "");
        push("eps_far", self.eps_far.to_string(), &prox);
        push("nu_near", self.nu_near.to_string(), &prox);
        push("m_g", lim.m_g.to_string(), "");
        for i in 0..3 {
            for j in 0..3 {
                push(&format!("L_{i}{j}"), lim.l[i][j].to_string(), "");
            }
        }
        push("L_3", lim.l3.to_string(), "");
        push("h1", f.thresholds.h1.to_string(), "");
        push("h2", f.thresholds.h2.to_string(), "");
        push("u_inf", self.u_inf.to_string(), "");
        push("u_inf_prime", self.u_inf_prime.to_string(), "");
        push("delta", self.delta.to_string(), "");
        push("delta_prime", self.delta_prime.to_string(), "");
        push("separation_required", self.required.to_string(), "");
        push("separation_actual", min_separation(&self.model, &self.truth.theta).to_string(), "");
        push("interpolating_ok", f.interpolating_ok.to_string(), &prox);
        push("derivative_ok", f.derivative_ok.to_string(), &prox);
        push("verification_pass", self.verification.all_pass().to_string(), &verify);
        for (a, r, m) in self.verification.worst() {
            push(&format!("margin_{a}_{r}"), m.to_string(), &verify);
        }
        push("p_norm", self.p_norm.to_string(), "");
        push("p_norm_bound", self.p_norm_bound.to_string(), "");
        push("C_cal", c.c_cal.to_string(), "");
        push("C_big", c.c_big.to_string(), "");
        push("C0", c.c0.to_string(), "");
        push("C1", c.c1.to_string(), "");
        push("C2", c.c2.to_string(), "");
        push("C3", c.c3.to_string(), "");
        push("tau", self.tau.to_string(), "");
        push("kappa", self.kappa.to_string(), "");
        push("event_threshold", self.threshold.to_string(), "");
        push("prediction_bound", self.bound.to_string(), "");
        push("bound_slack", BOUND_SLACK.to_string(), "");
        push("failure_prob", self.failure_prob.to_string(), "");
        for (k, t) in self.truth.theta.iter().enumerate() {
            push(&format!("theta_{k}"), t.to_string(), "");
        }
        rows
    }
}

/// `s` points equispaced in arclength with the given spacing, centered in the domain.
fn place(model: &KernelModel<BuiltinDictionary>, s: usize, spacing: f64) -> Result<Vec<f64>> {
    let (lo, hi) = model.domain();
    let (x0, x1) = (model.position(lo), model.position(hi));
    let span = spacing * (s - 1) as f64;
    if span >= (x1 - x0).abs() {
        return Err(Error::Precondition("domain too short for the requested separation").into());
    }
    let dir = (x1 - x0).signum();
    let start = 0.5 * (x0 + x1) - dir * 0.5 * span;
    Ok((0..s)
        .map(|k| model.inverse_position(start + dir * k as f64 * spacing).clamp(lo, hi))
        .collect())
}

/// `B*` with entries `± a_k u`, `u ∈ [0.5, 1.5]`, drawn from the config seed.
fn truth_coefficients(cfg: &ExperimentConfig, theta: &[f64], n: usize) -> Result<MixtureParams> {
    let s = theta.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x7a11_b0a7);
    let b = DMatrix::from_fn(n, s, |_, k| {
        let a = cfg.truth.amplitudes.as_ref().map_or(1.0, |a| a[k]);
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        sign * a * rng.gen_range(0.5..1.5)
    });
    Ok(MixtureParams::new(b, theta.to_vec())?)
}

/// Certificate analysis at the base point of the config.
pub fn run_certificate_report(cfg: &ExperimentConfig) -> Result<Setup> {
    Setup::new(cfg, cfg.base_point())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub rep: u64,
    pub r_hat: f64,
    pub bound: f64,
    pub m0: f64,
    pub m1: f64,
    pub m2: f64,
    pub event_ok: bool,
    pub kappa: f64,
    pub atoms: usize,
    /// The solver stopped without meeting its optimality check.
    pub warning: bool,
    pub runtime_ms: u64,
}

impl TrialResult {
    /// `R̂ ≤ (1 + slack)·bound` whenever the event holds.
    pub fn coherent(&self) -> bool {
        !self.event_ok || self.r_hat <= (1.0 + BOUND_SLACK) * self.bound
    }
}

/// Shared state of the replicates of one sweep point.
pub struct TrialRunner<'a> {
    pub setup: &'a Setup,
    solver: Solver<'a, BuiltinDictionary>,
    sup_grid: FeatureGrid,
}

impl<'a> TrialRunner<'a> {
    pub fn new(cfg: &ExperimentConfig, setup: &'a Setup) -> Result<Self> {
        let solver = Solver::new(&setup.model, setup.solver_config(cfg)?)?;
        let sup_grid = FeatureGrid::new(&setup.model, cfg.certificate.sup_step, 2)?;
        Ok(TrialRunner { setup, solver, sup_grid })
    }

    /// Observed signals of replicate `rep`.
    pub fn signals(&self, rep: u64) -> Result<DMatrix<f64>> {
        let st = self.setup;
        let w = sample_noise(&st.noise, st.point.n, st.point.t, rep);
        Ok(synthesize(st.model.dictionary(), &st.truth, Some(&w))?)
    }

    /// Synthesize, solve and evaluate replicate `rep`.
    pub fn run(&self, rep: u64) -> Result<(TrialResult, MixtureParams, SolveTrace)> {
        let start = Instant::now();
        let st = self.setup;
        let SweepPoint { t, n, .. } = st.point;
        let dict = st.model.dictionary();
        let w = sample_noise(&st.noise, n, t, rep);
        let y = synthesize(dict, &st.truth, Some(&w))?;
        let (est, trace) = self.solver.solve(&y, &st.nu)?;
        let r_hat = prediction_error(dict, &st.nu, &est, &st.truth)?;
        let q = conjugate(st.p);
        let mut m = [0.0; 3];
        for (i, mi) in m.iter_mut().enumerate() {
            *mi = sup_stat(&w, &st.model, &self.sup_grid, &st.nu, i, q)?.value;
        }
        let event_ok = m.iter().all(|&v| v <= st.threshold);
        let res = TrialResult {
            rep,
            r_hat,
            bound: st.bound,
            m0: m[0],
            m1: m[1],
            m2: m[2],
            event_ok,
            kappa: st.kappa,
            atoms: est.n_atoms(),
            warning: trace.warning(),
            runtime_ms: start.elapsed().as_millis() as u64,
        };
        Ok((res, est, trace))
    }
}

/// One replicate at the base point with its data.
pub struct Trial {
    pub setup: Setup,
    pub result: TrialResult,
    /// Observed `Y`, one row per signal.
    pub signals: DMatrix<f64>,
    pub estimate: MixtureParams,
    pub trace: SolveTrace,
}

pub fn run_trial(cfg: &ExperimentConfig, rep: u64) -> Result<Trial> {
    let setup = Setup::new(cfg, cfg.base_point())?;
    let (result, signals, estimate, trace) = {
        let runner = TrialRunner::new(cfg, &setup)?;
        let (res, est, trace) = runner.run(rep)?;
        (res, runner.signals(rep)?, est, trace)
    };
    Ok(Trial { setup, result, signals, estimate, trace })
}

/// Aggregates of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub point: SweepPoint,
    pub p: f64,
    pub tau: f64,
    pub kappa: f64,
    pub replicates: usize,
    pub median_r2: f64,
    pub q10_r2: f64,
    pub q90_r2: f64,
    pub event_fraction: f64,
    pub event_threshold: f64,
    pub failure_prob: f64,
    pub bound: f64,
    pub certified: bool,
    pub coherent: bool,
    pub warnings: usize,
}

/// Fitted log-log slope of median `R̂²` against `T` at fixed `(s, n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFit {
    pub s: usize,
    pub n: usize,
    pub points: usize,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    pub trials: Vec<(SweepPoint, TrialResult)>,
    pub summary: Vec<SweepSummary>,
    pub slopes: Vec<SlopeFit>,
}

/// All replicates at every sweep point. Replicates run in the current rayon pool and
/// are collected by index, so the output does not depend on scheduling.
pub fn run_study(cfg: &ExperimentConfig) -> Result<StudyResult> {
    let mut trials = Vec::new();
    let mut summary = Vec::new();
    for point in cfg.sweep() {
        let setup = Setup::new(cfg, point).with_context(|| format!("sweep point {point:?}"))?;
        let runner = TrialRunner::new(cfg, &setup)?;
        let reps = cfg.study.replicates as u64;
        let res: Vec<TrialResult> = (0..reps)
            .into_par_iter()
            .map(|r| runner.run(r).map(|x| x.0))
            .collect::<Result<_>>()?;
        let mut r2: Vec<f64> = res.iter().map(|x| x.r_hat * x.r_hat).collect();
        r2.sort_by(f64::total_cmp);
        let events = res.iter().filter(|x| x.event_ok).count();
        let certified = setup.certified();
        summary.push(SweepSummary {
            point,
            p: setup.p,
            tau: setup.tau,
            kappa: setup.kappa,
            replicates: res.len(),
            median_r2: quantile(&r2, 0.5),
            q10_r2: quantile(&r2, 0.1),
            q90_r2: quantile(&r2, 0.9),
            event_fraction: events as f64 / res.len() as f64,
            event_threshold: setup.threshold,
            failure_prob: setup.failure_prob,
            bound: setup.bound,
            certified,
            coherent: !certified || res.iter().all(TrialResult::coherent),
            warnings: res.iter().filter(|x| x.warning).count(),
        });
        trials.extend(res.into_iter().map(|r| (point, r)));
    }
    let slopes = fit_slopes(&summary);
    Ok(StudyResult { trials, summary, slopes })
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], level: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        len => {
            let h = level * (len - 1) as f64;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(len - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

/// Least-squares slope of `y` on `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn fit_slopes(summary: &[SweepSummary]) -> Vec<SlopeFit> {
    let mut keys: Vec<(usize, usize)> = Vec::new();
    for row in summary {
        let k = (row.point.s, row.point.n);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .filter_map(|(s, n)| {
            let rows: Vec<&SweepSummary> = summary
                .iter()
                .filter(|r| r.point.s == s && r.point.n == n)
                .collect();
            if rows.len() < 2 {
                return None;
            }
            let x: Vec<f64> = rows.iter().map(|r| (r.point.t as f64).ln()).collect();
            let y: Vec<f64> = rows.iter().map(|r| r.median_r2.ln()).collect();
            Some(SlopeFit {
                s,
                n,
                points: rows.len(),
                slope: ls_slope(&x, &y),
            })
        })
        .collect()
}
