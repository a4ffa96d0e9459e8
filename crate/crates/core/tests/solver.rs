use nalgebra::DMatrix;
use offgrid_core::dictionary::{BuiltinDictionary, Dictionary, GaussianLocation};
use offgrid_core::kernel::{CovariantKernel, FeatureGrid, KernelModel};
use offgrid_core::measure::{
    feature_matrix, prediction_error, synthesize, DiscreteMeasure, MixtureParams,
};
use offgrid_core::noise::{sample_noise, NoiseModel};
use offgrid_core::solver::{
    dual_sup, objective, refine_theta, solve, solve_fixed, SolverConfig, TraceEvent,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gaussian(t: usize) -> KernelModel<BuiltinDictionary> {
    let d = GaussianLocation::uniform(0.03, t, 0.0, 1.0, (0.1, 0.9)).unwrap();
    KernelModel::new(BuiltinDictionary::GaussianLocation(d)).unwrap()
}

fn truth(n: usize, theta: &[f64], seed: u64) -> MixtureParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = DMatrix::from_fn(n, theta.len(), |_, _| {
        let m: f64 = rng.gen_range(0.5..1.5);
        if rng.gen::<bool>() {
            m
        } else {
            -m
        }
    });
    MixtureParams::new(b, theta.to_vec()).unwrap()
}

/// Objective summed entry by entry.
fn objective_by_hand(
    y: &DMatrix<f64>,
    phi: &DMatrix<f64>,
    a: &[f64],
    b: &DMatrix<f64>,
    kappa: f64,
    p: f64,
) -> f64 {
    let mass: f64 = a.iter().sum();
    let mut fit = 0.0;
    for z in 0..y.nrows() {
        for t in 0..y.ncols() {
            let mut pred = 0.0;
            for k in 0..b.ncols() {
                pred += b[(z, k)] * phi[(k, t)];
            }
            fit += a[z] * (y[(z, t)] - pred).powi(2);
        }
    }
    let mut pen = 0.0;
    for k in 0..b.ncols() {
        let mut s = 0.0;
        for z in 0..b.nrows() {
            s += a[z] * b[(z, k)].abs().powf(p);
        }
        pen += s.powf(1.0 / p);
    }
    fit / (2.0 * mass) + kappa * pen
}

#[test]
fn objective_examples() {
    let m = gaussian(64);
    let dict = m.dictionary();
    let nu = DiscreteMeasure::new(vec![0.5, 1.0, 2.0]).unwrap();
    let tr = truth(3, &[0.3, 0.6], 1);
    let y = synthesize(dict, &tr, None).unwrap();
    let empty = MixtureParams::empty(3);
    let e = objective(&y, dict, &nu, &empty, 0.7, 2.0).unwrap();
    let energy: f64 = (0..3).map(|z| nu.weights()[z] * y.row(z).norm_squared()).sum();
    assert!((e - energy / (2.0 * nu.mass())).abs() < 1e-14);
    let at_truth = objective(&y, dict, &nu, &tr, 0.7, 2.0).unwrap();
    assert!((at_truth - 0.7 * nu.mixed_norm(&tr.b, 2.0).unwrap()).abs() < 1e-13);

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let y = DMatrix::from_fn(3, 64, |_, _| rng.gen_range(-1.0..1.0));
    let est = MixtureParams::new(
        DMatrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0)),
        vec![0.2, 0.45, 0.8],
    )
    .unwrap();
    let phi = feature_matrix(dict, &est.theta).unwrap();
    for p in [1.0, 1.5, 2.0] {
        let got = objective(&y, dict, &nu, &est, 0.3, p).unwrap();
        let want = objective_by_hand(&y, &phi, nu.weights(), &est.b, 0.3, p);
        assert!((got - want).abs() < 1e-12 * want, "p={p}: {got} vs {want}");
    }
}

#[test]
fn dual_sup_examples() {
    let m = gaussian(128);
    let grid = FeatureGrid::new(&m, 0.05, 0).unwrap();
    let nu1 = DiscreteMeasure::counting(1).unwrap();
    let zero = DMatrix::zeros(1, 128);
    assert_eq!(dual_sup(&zero, &m, &grid, &nu1, 2.0).unwrap().value, 0.0);

    let t0 = 0.437;
    let phi = m.dictionary().feature(t0).unwrap();
    let r = DMatrix::from_row_slice(1, 128, phi.as_slice());
    let ds = dual_sup(&r, &m, &grid, &nu1, 2.0).unwrap();
    assert!((ds.value - 1.0).abs() < 1e-12);
    assert!(m.dist(ds.theta, t0) < 1e-5);

    let nu2 = DiscreteMeasure::new(vec![1.0, 2.0]).unwrap();
    let a = m.dictionary().feature(0.3).unwrap();
    let b = m.dictionary().feature(0.7).unwrap();
    let mut r = DMatrix::zeros(2, 128);
    r.row_mut(0).copy_from(&(&a + &b * 0.5).transpose());
    r.row_mut(1).copy_from(&(&a * 0.5 + &b).transpose());
    let ds = dual_sup(&r, &m, &grid, &nu2, 2.0).unwrap();
    let fine = FeatureGrid::new(&m, 0.005, 0).unwrap();
    let corr = &r * &fine.cov[0];
    let brute = corr
        .column_iter()
        .map(|c| (c[0] * c[0] + 2.0 * c[1] * c[1]).sqrt())
        .fold(0.0, f64::max);
    assert!(ds.value >= brute - 1e-12);
    assert!(ds.value - brute < 1e-4);
}

#[test]
fn zero_observation_gives_zero_solution() {
    let m = gaussian(64);
    let nu = DiscreteMeasure::counting(2).unwrap();
    let y = DMatrix::zeros(2, 64);
    let (est, trace) = solve(&y, &m, &nu, &SolverConfig::new(0.1, 2.0).unwrap()).unwrap();
    assert_eq!(est.n_atoms(), 0);
    assert_eq!(trace.rows.last().unwrap().objective, 0.0);
    assert!(trace.converged);
}

#[test]
fn noiseless_recovery() {
    let m = gaussian(128);
    let nu = DiscreteMeasure::new(vec![1.0, 0.5, 2.0]).unwrap();
    let spots: [&[f64]; 3] = [&[0.52], &[0.3, 0.65], &[0.25, 0.5, 0.75]];
    for (s, theta) in spots.iter().enumerate() {
        let tr = truth(3, theta, 10 + s as u64);
        let y = synthesize(m.dictionary(), &tr, None).unwrap();
        for p in [1.0, 2.0] {
            let cfg = SolverConfig::new(1e-8, p).unwrap();
            let (est, trace) = solve(&y, &m, &nu, &cfg).unwrap();
            assert_eq!(est.n_atoms(), theta.len(), "s={} p={p}: {:?}", s + 1, est.theta);
            let mut found = est.theta.clone();
            found.sort_by(f64::total_cmp);
            for (a, b) in found.iter().zip(theta.iter()) {
                assert!(m.dist(*a, *b) <= 1e-3, "{a} vs {b}");
            }
            let err = prediction_error(m.dictionary(), &nu, &est, &tr).unwrap();
            let scale = prediction_error(m.dictionary(), &nu, &MixtureParams::empty(3), &tr).unwrap();
            assert!(err <= 1e-6 * scale, "relative error {}", err / scale);
            let objs: Vec<f64> = trace.objectives().collect();
            assert!(objs.windows(2).all(|w| w[1] <= w[0]));
            let inserts = trace
                .rows
                .iter()
                .filter(|r| matches!(r.event, TraceEvent::Insert { .. }))
                .count();
            assert!(inserts >= theta.len());
        }
    }
}

#[test]
fn two_atoms_below_plugin_bound() {
    let m = gaussian(128);
    let nu = DiscreteMeasure::counting(2).unwrap();
    let tr = truth(2, &[0.3, 0.7], 5);
    let y = synthesize(m.dictionary(), &tr, None).unwrap();
    let kappa = 1e-3;
    let cfg = SolverConfig::new(kappa, 2.0).unwrap();
    let (est, trace) = solve(&y, &m, &nu, &cfg).unwrap();
    assert_eq!(est.n_atoms(), 2);
    let plug = kappa * nu.mixed_norm(&tr.b, 2.0).unwrap();
    let got = objective(&y, m.dictionary(), &nu, &est, kappa, 2.0).unwrap();
    assert!(got <= plug * (1.0 + 1e-6));
    assert!(trace.converged);
}

/// Projected subgradient descent on the fixed-ϑ problem with diminishing steps.
fn subgradient_reference(
    y: &DMatrix<f64>,
    phi: &DMatrix<f64>,
    a: &[f64],
    kappa: f64,
    p: f64,
    iters: usize,
) -> f64 {
    let n = y.nrows();
    let k = phi.nrows();
    let mass: f64 = a.iter().sum();
    let mut b = DMatrix::<f64>::zeros(n, k);
    let mut best = f64::INFINITY;
    let gram = phi * phi.transpose();
    let lip = gram.clone().symmetric_eigenvalues().max() * a.iter().cloned().fold(0.0, f64::max) / mass;
    for it in 0..iters {
        let val = objective_by_hand(y, phi, a, &b, kappa, p);
        best = best.min(val);
        let r = y - &b * phi;
        let mut g = DMatrix::zeros(n, k);
        let corr = &r * phi.transpose();
        for z in 0..n {
            for j in 0..k {
                g[(z, j)] = -a[z] * corr[(z, j)] / mass;
            }
        }
        for j in 0..k {
            if p == 2.0 {
                let norm: f64 = (0..n).map(|z| a[z] * b[(z, j)].powi(2)).sum::<f64>().sqrt();
                if norm > 0.0 {
                    for z in 0..n {
                        g[(z, j)] += kappa * a[z] * b[(z, j)] / norm;
                    }
                }
            } else {
                for z in 0..n {
                    g[(z, j)] += kappa * a[z] * b[(z, j)].signum() * (b[(z, j)] != 0.0) as u8 as f64;
                }
            }
        }
        let step = 1.0 / (lip * (1.0 + it as f64).sqrt());
        b -= g * step;
    }
    best.min(objective_by_hand(y, phi, a, &b, kappa, p))
}

#[test]
fn oracle_mode_matches_subgradient_reference() {
    let m = gaussian(64);
    let theta: Vec<f64> = (0..7).map(|k| 0.15 + 0.1 * k as f64).collect();
    let nu = DiscreteMeasure::new(vec![1.0, 0.5, 2.0, 1.5, 0.25]).unwrap();
    let tr = truth(5, &theta, 3);
    let noise = sample_noise(&NoiseModel::new(0.1, 1.0, 9).unwrap(), 5, 64, 0);
    let y = synthesize(m.dictionary(), &tr, Some(&noise)).unwrap();
    let phi = feature_matrix(m.dictionary(), &theta).unwrap();
    for p in [1.0, 2.0] {
        let mut cfg = SolverConfig::new(0.05, p).unwrap();
        cfg.max_inner = 100_000;
        let (_, fast) = solve_fixed(&y, m.dictionary(), &nu, &theta, &cfg, None).unwrap();
        let slow = subgradient_reference(&y, &phi, nu.weights(), 0.05, p, 100_000);
        assert!(fast <= slow + 1e-6, "p={p}: {fast} vs {slow}");
        assert!(slow - fast < 1e-3, "p={p}: reference far off: {fast} vs {slow}");
    }
}

#[test]
fn single_signal_penalties_coincide() {
    let m = gaussian(128);
    let nu = DiscreteMeasure::counting(1).unwrap();
    let tr = truth(1, &[0.3, 0.62], 4);
    let noise = sample_noise(&NoiseModel::new(0.05, 1.0, 1).unwrap(), 1, 128, 0);
    let y = synthesize(m.dictionary(), &tr, Some(&noise)).unwrap();
    let mut objs = vec![];
    for p in [1.0, 2.0] {
        let cfg = SolverConfig::new(0.02, p).unwrap();
        let (est, _) = solve(&y, &m, &nu, &cfg).unwrap();
        objs.push(objective(&y, m.dictionary(), &nu, &est, 0.02, 1.0).unwrap());
    }
    assert!((objs[0] - objs[1]).abs() < 1e-8, "{objs:?}");
}

#[test]
fn refine_theta_examples() {
    let m = gaussian(128);
    let dict = m.dictionary();
    let nu = DiscreteMeasure::counting(2).unwrap();
    let tr = truth(2, &[0.35, 0.7], 6);
    let y = synthesize(dict, &tr, None).unwrap();
    let th = refine_theta(&y, &tr.b, &tr.theta, dict, &nu).unwrap();
    for (a, b) in th.iter().zip(&tr.theta) {
        assert!((a - b).abs() < 1e-10);
    }

    let fid = |theta: &[f64]| {
        let p = MixtureParams::new(tr.b.clone(), theta.to_vec()).unwrap();
        objective(&y, dict, &nu, &p, 1e-300, 2.0).unwrap()
    };
    let moved = [0.35 + 0.01, 0.7 - 0.008];
    let th = refine_theta(&y, &tr.b, &moved, dict, &nu).unwrap();
    assert!(fid(&th) < fid(&moved));
    for k in 0..2 {
        assert!((th[k] - tr.theta[k]).abs() < (moved[k] - tr.theta[k]).abs());
    }

    // Truth just outside the domain: the atom stays on the boundary.
    let wide = GaussianLocation::uniform(0.03, 128, 0.0, 1.0, (0.0, 1.0)).unwrap();
    let outside = MixtureParams::new(DMatrix::from_element(1, 1, 1.0), vec![0.05]).unwrap();
    let y = synthesize(&wide, &outside, None).unwrap();
    let nu1 = DiscreteMeasure::counting(1).unwrap();
    let th = refine_theta(&y, &outside.b, &[0.1], dict, &nu1).unwrap();
    assert_eq!(th, vec![0.1]);
}
