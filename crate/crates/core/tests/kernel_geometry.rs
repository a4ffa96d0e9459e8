use offgrid_core::dictionary::{
    linspace, BuiltinDictionary, Dictionary, ExponentialDecay, FourierLowpass, GaussianLocation,
};
use offgrid_core::kernel::{proximity, CovariantKernel, KernelModel};
use offgrid_core::limit::LimitKernelSpec;

fn gaussian(t: usize) -> KernelModel<BuiltinDictionary> {
    let d = GaussianLocation::uniform(0.03, t, 0.0, 1.0, (0.2, 0.8)).unwrap();
    KernelModel::new(BuiltinDictionary::GaussianLocation(d)).unwrap()
}

fn fourier() -> KernelModel<BuiltinDictionary> {
    let d = FourierLowpass::new(6, (0.0, 0.5)).unwrap();
    KernelModel::new(BuiltinDictionary::FourierLowpass(d)).unwrap()
}

fn exponential() -> KernelModel<BuiltinDictionary> {
    let d = ExponentialDecay::new(linspace(0.0, 30.0, 600), (0.5, 3.0)).unwrap();
    KernelModel::new(BuiltinDictionary::ExponentialDecay(d)).unwrap()
}

#[test]
fn recursion_and_feature_paths_agree() {
    for m in [gaussian(256), fourier(), exponential()] {
        let (lo, hi) = m.dictionary().domain();
        for k in 0..20 {
            let t = lo + (hi - lo) * ((k * 7 % 20) as f64 + 0.5) / 20.0;
            let s = lo + (hi - lo) * ((k * 3 % 20) as f64 + 0.25) / 20.0;
            for i in 0..4 {
                for j in 0..4 {
                    let a = m.cov(i, j, t, s).unwrap();
                    let b = m.cov_recursion(i, j, t, s).unwrap();
                    assert!((a - b).abs() < 1e-7 * (1.0 + a.abs()), "{i}{j} {t} {s}: {a} vs {b}");
                }
            }
        }
    }
}

#[test]
fn gaussian_kernel_matches_closed_form_for_dense_sampling() {
    let m = gaussian(2000);
    let sigma: f64 = 0.03;
    for (t, s) in [(0.4, 0.43), (0.5, 0.5), (0.3, 0.36)] {
        let exact = (-(t - s) * (t - s) / (4.0 * sigma * sigma)).exp();
        assert!((m.kernel(t, s).unwrap() - exact).abs() < 1e-9);
        let d = m.metric_dist(t, s).unwrap();
        assert!((d - (t - s).abs() / (2f64.sqrt() * sigma)).abs() < 1e-6);
    }
}

#[test]
fn fourier_dirichlet_value() {
    let d = FourierLowpass::new(2, (0.0, 1.0)).unwrap();
    let m = KernelModel::new(d).unwrap();
    assert!(m.kernel(0.3, 0.5).unwrap().abs() < 1e-14);
    let x: f64 = 0.07;
    let dir = (5.0 * std::f64::consts::PI * x).sin() / (5.0 * (std::f64::consts::PI * x).sin());
    assert!((m.kernel(0.1, 0.1 + x).unwrap() - dir).abs() < 1e-14);
}

#[test]
fn metric_grid_is_equispaced_in_arclength() {
    let m = exponential();
    let g = m.metric_grid(0.05).unwrap();
    for w in g.windows(2).take(g.len() - 2) {
        assert!((m.metric_dist(w[0], w[1]).unwrap() - 0.05).abs() < 1e-10);
    }
}

#[test]
fn gaussian_proximity_is_small() {
    let m = gaussian(512);
    let limit = LimitKernelSpec::for_builtin(m.dictionary()).unwrap();
    let rep = proximity(&m, &limit, 0.2).unwrap();
    println!("{rep:?}");
    assert!(rep.v < 1e-3 && rep.feasible);
    assert!(rep.rho < 1.0001);
}

