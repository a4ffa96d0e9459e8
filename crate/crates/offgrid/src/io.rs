//! CSV tables. Every writer emits a fixed header, even for empty tables.

use crate::experiments::{Setup, StudyResult, TrialResult};
use anyhow::Result;
use nalgebra::DMatrix;
use offgrid_core::measure::MixtureParams;
use offgrid_core::solver::SolveTrace;
use std::io::Write;

pub const DIAGNOSTICS_HEADER: [&str; 3] = ["quantity", "value", "grid_step"];
pub const VERIFICATION_HEADER: [&str; 6] = ["point", "assumption", "region", "theta", "margin", "pass"];
pub const TRACE_HEADER: [&str; 4] = ["iter", "objective", "event", "dual_sup"];
pub const TRIAL_HEADER: [&str; 13] = [
    "samples", "sparsity", "signals", "rep", "r_hat", "bound", "m0", "m1", "m2", "event_ok", "kappa",
    "atoms", "warning",
];
pub const SUMMARY_HEADER: [&str; 17] = [
    "samples",
    "sparsity",
    "signals",
    "p",
    "tau",
    "kappa",
    "replicates",
    "median_r2",
    "q10_r2",
    "q90_r2",
    "event_fraction",
    "event_threshold",
    "failure_prob",
    "bound",
    "certified",
    "coherent",
    "warnings",
];
pub const SLOPE_HEADER: [&str; 4] = ["sparsity", "signals", "points", "slope"];
pub const PLOT_HEADER: [&str; 4] = ["x", "y", "lo", "hi"];

fn writer<W: Write>(out: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    Ok(w)
}

pub fn write_diagnostics<W: Write>(out: W, rows: &[(String, String, String)]) -> Result<()> {
    let mut w = writer(out, &DIAGNOSTICS_HEADER)?;
    for (k, v, step) in rows {
        w.write_record([k, v, step])?;
    }
    w.flush()?;
    Ok(())
}

/// Diagnostics of a refused configuration: its status and the reason.
pub fn write_refusal<W: Write>(out: W, message: &str) -> Result<()> {
    let row = |k: &str, v: &str| (k.to_string(), v.to_string(), String::new());
    write_diagnostics(out, &[row("status", "refused"), row("reason", message)])
}

/// One row per signal `z`: `z,y_0..y_{T-1}`.
pub fn write_signals<W: Write>(out: W, y: &DMatrix<f64>) -> Result<()> {
    let mut header = vec!["z".to_string()];
    header.extend((0..y.ncols()).map(|t| format!("y_{t}")));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&header)?;
    for (z, row) in y.row_iter().enumerate() {
        let mut rec = vec![z.to_string()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per atom `k`: `k,theta,b_z0..b_z{n-1}`.
pub fn write_params<W: Write>(out: W, params: &MixtureParams) -> Result<()> {
    let mut header = vec!["k".to_string(), "theta".to_string()];
    header.extend((0..params.n_signals()).map(|z| format!("b_z{z}")));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&header)?;
    for (k, t) in params.theta.iter().enumerate() {
        let mut rec = vec![k.to_string(), t.to_string()];
        rec.extend(params.b.column(k).iter().map(f64::to_string));
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_verification<W: Write>(out: W, setup: &Setup) -> Result<()> {
    let mut w = writer(out, &VERIFICATION_HEADER)?;
    for r in &setup.verification.rows {
        w.write_record([
            r.point.map_or(String::new(), |p| p.to_string()),
            r.assumption.to_string(),
            r.region.to_string(),
            r.theta.map_or(String::new(), |t| t.to_string()),
            r.margin.to_string(),
            r.pass.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace<W: Write>(out: W, trace: &SolveTrace) -> Result<()> {
    let mut w = writer(out, &TRACE_HEADER)?;
    for r in &trace.rows {
        w.write_record([
            r.iter.to_string(),
            r.objective.to_string(),
            r.event.to_string(),
            r.dual_sup.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn trial_record(t: usize, s: usize, n: usize, r: &TrialResult) -> Vec<String> {
    vec![
        t.to_string(),
        s.to_string(),
        n.to_string(),
        r.rep.to_string(),
        r.r_hat.to_string(),
        r.bound.to_string(),
        r.m0.to_string(),
        r.m1.to_string(),
        r.m2.to_string(),
        r.event_ok.to_string(),
        r.kappa.to_string(),
        r.atoms.to_string(),
        r.warning.to_string(),
    ]
}

/// A single trial row with its wall-clock time appended.
pub fn write_trial<W: Write>(out: W, setup: &Setup, r: &TrialResult) -> Result<()> {
    let mut header = TRIAL_HEADER.to_vec();
    header.push("runtime_ms");
    let mut w = writer(out, &header)?;
    let p = setup.point;
    let mut rec = trial_record(p.t, p.s, p.n, r);
    rec.push(r.runtime_ms.to_string());
    w.write_record(rec)?;
    w.flush()?;
    Ok(())
}

/// Per-replicate rows of a study; wall-clock times are left out to keep reruns identical.
pub fn write_trials<W: Write>(out: W, study: &StudyResult) -> Result<()> {
    let mut w = writer(out, &TRIAL_HEADER)?;
    for (p, r) in &study.trials {
        w.write_record(trial_record(p.t, p.s, p.n, r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary<W: Write>(out: W, study: &StudyResult) -> Result<()> {
    let mut w = writer(out, &SUMMARY_HEADER)?;
    for r in &study.summary {
        w.write_record([
            r.point.t.to_string(),
            r.point.s.to_string(),
            r.point.n.to_string(),
            r.p.to_string(),
            r.tau.to_string(),
            r.kappa.to_string(),
            r.replicates.to_string(),
            r.median_r2.to_string(),
            r.q10_r2.to_string(),
            r.q90_r2.to_string(),
            r.event_fraction.to_string(),
            r.event_threshold.to_string(),
            r.failure_prob.to_string(),
            r.bound.to_string(),
            r.certified.to_string(),
            r.coherent.to_string(),
            r.warnings.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_slopes<W: Write>(out: W, study: &StudyResult) -> Result<()> {
    let mut w = writer(out, &SLOPE_HEADER)?;
    for f in &study.slopes {
        w.write_record([
            f.s.to_string(),
            f.n.to_string(),
            f.points.to_string(),
            f.slope.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Median `R̂²` with its 10% and 90% quantiles against the swept axis: `T` if it varies,
/// else `s`, else `n`.
pub fn write_plot<W: Write>(out: W, study: &StudyResult) -> Result<()> {
    let varies = |f: fn(&crate::config::SweepPoint) -> usize| {
        study.summary.windows(2).any(|w| f(&w[0].point) != f(&w[1].point))
    };
    let axis: fn(&crate::config::SweepPoint) -> usize = if varies(|p| p.t) {
        |p| p.t
    } else if varies(|p| p.s) {
        |p| p.s
    } else {
        |p| p.n
    };
    let mut w = writer(out, &PLOT_HEADER)?;
    for r in &study.summary {
        w.write_record([
            axis(&r.point).to_string(),
            r.median_r2.to_string(),
            r.q10_r2.to_string(),
            r.q90_r2.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Write the four study tables into `dir`.
pub fn write_study(dir: &std::path::Path, study: &StudyResult) -> Result<()> {
    use std::fs::File;
    std::fs::create_dir_all(dir)?;
    write_trials(File::create(dir.join("trials.csv"))?, study)?;
    write_summary(File::create(dir.join("summary.csv"))?, study)?;
    write_slopes(File::create(dir.join("slopes.csv"))?, study)?;
    write_plot(File::create(dir.join("plot.csv"))?, study)?;
    Ok(())
}
