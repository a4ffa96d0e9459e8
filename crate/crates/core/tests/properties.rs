use nalgebra::DMatrix;
use offgrid_core::certificates::op_norm_inf;
use offgrid_core::dictionary::{BuiltinDictionary, GaussianLocation};
use offgrid_core::kernel::KernelModel;
use offgrid_core::measure::{conjugate, prediction_error, synthesize, DiscreteMeasure, MixtureParams};
use offgrid_core::noise::{sample_noise, NoiseModel};
use offgrid_core::solver::{objective, solve, SolverConfig};
use proptest::prelude::*;

fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.1f64..3.0, n)
}

fn values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, n)
}

/// `‖f‖_{L^q}` for `f` stored as rows, one column per component.
fn star(nu: &DiscreteMeasure, f: &DMatrix<f64>, q: f64) -> f64 {
    f.column_iter()
        .map(|c| nu.lp_norm(c.as_slice(), q).unwrap())
        .fold(0.0, f64::max)
}

proptest! {
    #[test]
    fn log_convexity_of_lq_norms(a in weights(6), f in values(6)) {
        let nu = DiscreteMeasure::new(a).unwrap();
        let l2 = nu.lp_norm(&f, 2.0).unwrap();
        let linf = nu.lp_norm(&f, f64::INFINITY).unwrap();
        for q in [3.0, 4.0, 8.0] {
            let lq = nu.lp_norm(&f, q).unwrap();
            let rhs = l2.powf(2.0 / q) * linf.powf((q - 2.0) / q);
            prop_assert!(lq <= rhs + 1e-12 * (1.0 + rhs));
        }
    }

    #[test]
    fn dual_unit_attains_the_norm(a in weights(5), f in values(5), p in 1.0f64..2.0) {
        let nu = DiscreteMeasure::new(a).unwrap();
        let v = nu.dual_unit(&f, p).unwrap();
        let pair: f64 = nu.weights().iter().zip(&v).zip(&f).map(|((w, x), y)| w * x * y).sum();
        let norm = nu.lp_norm(&f, p).unwrap();
        prop_assert!((pair - norm).abs() < 1e-10 * (1.0 + norm));
        if norm > 0.0 {
            prop_assert!((nu.lp_norm(&v, conjugate(p)).unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn operator_norm_on_star_norm_fields(
        entries in prop::collection::vec(-2.0f64..2.0, 9),
        a in weights(4),
        fields in prop::collection::vec(-1.0f64..1.0, 12),
        q in prop::sample::select(vec![1.0, 2.0, 3.0, f64::INFINITY]),
    ) {
        let mat = DMatrix::from_row_slice(3, 3, &entries);
        let nu = DiscreteMeasure::new(a).unwrap();
        let opn = op_norm_inf(&mat);
        // random field: rows are atoms z, columns components
        let mut f = DMatrix::from_row_slice(4, 3, &fields);
        let s = star(&nu, &f, q);
        prop_assume!(s > 1e-9);
        f /= s;
        let af = &f * mat.transpose();
        prop_assert!(star(&nu, &af, q) <= opn * (1.0 + 1e-12) + 1e-12);
        // the maximiser: constant sign pattern of the heaviest row
        let k = (0..3)
            .max_by(|&i, &j| {
                let ri: f64 = mat.row(i).iter().map(|v| v.abs()).sum();
                let rj: f64 = mat.row(j).iter().map(|v| v.abs()).sum();
                ri.total_cmp(&rj)
            })
            .unwrap();
        let c = if q.is_infinite() { 1.0 } else { nu.mass().powf(-1.0 / q) };
        let fstar = DMatrix::from_fn(4, 3, |_, l| c * mat[(k, l)].signum());
        let attained = star(&nu, &(&fstar * mat.transpose()), q);
        prop_assert!((attained - opn).abs() < 1e-6 * (1.0 + opn));
    }

    #[test]
    fn mixed_norm_ignores_column_order(a in weights(3), b in prop::collection::vec(-2.0f64..2.0, 12)) {
        let nu = DiscreteMeasure::new(a).unwrap();
        let m = DMatrix::from_row_slice(3, 4, &b);
        let mut rev = m.clone();
        for k in 0..4 {
            rev.set_column(k, &m.column(3 - k));
        }
        for p in [1.0, 1.5, 2.0] {
            let x = nu.mixed_norm(&m, p).unwrap();
            let y = nu.mixed_norm(&rev, p).unwrap();
            prop_assert!((x - y).abs() < 1e-12 * (1.0 + x));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn relabeling_atoms_leaves_the_fit_unchanged(
        seed in 0u64..1000,
        mags in prop::collection::vec(0.6f64..1.4, 4),
    ) {
        let d = GaussianLocation::uniform(0.03, 96, 0.0, 1.0, (0.1, 0.9)).unwrap();
        let model = KernelModel::new(BuiltinDictionary::GaussianLocation(d)).unwrap();
        let nu = DiscreteMeasure::counting(2).unwrap();
        let b = DMatrix::from_row_slice(2, 2, &[mags[0], -mags[1], mags[2], mags[3]]);
        let tr = MixtureParams::new(b.clone(), vec![0.3, 0.65]).unwrap();
        let swapped = MixtureParams::new(
            DMatrix::from_columns(&[b.column(1), b.column(0)]),
            vec![0.65, 0.3],
        )
        .unwrap();
        let noise = sample_noise(&NoiseModel::new(0.05, 1.0, seed).unwrap(), 2, 96, 0);
        let y1 = synthesize(model.dictionary(), &tr, Some(&noise)).unwrap();
        let y2 = synthesize(model.dictionary(), &swapped, Some(&noise)).unwrap();
        prop_assert!((&y1 - &y2).amax() < 1e-14);
        let cfg = SolverConfig::new(0.02, 2.0).unwrap();
        let (e1, _) = solve(&y1, &model, &nu, &cfg).unwrap();
        let (e2, _) = solve(&y2, &model, &nu, &cfg).unwrap();
        let r1 = prediction_error(model.dictionary(), &nu, &e1, &tr).unwrap();
        let r2 = prediction_error(model.dictionary(), &nu, &e2, &swapped).unwrap();
        prop_assert!((r1 - r2).abs() < 1e-9 * (1.0 + r1));
        let o1 = objective(&y1, model.dictionary(), &nu, &e1, 0.02, 2.0).unwrap();
        let o2 = objective(&y2, model.dictionary(), &nu, &e2, 0.02, 2.0).unwrap();
        prop_assert!((o1 - o2).abs() < 1e-12 * (1.0 + o1));
    }
}
