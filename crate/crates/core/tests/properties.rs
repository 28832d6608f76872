//! Invariants checked on random inputs.

use nalgebra::DMatrix;
use proptest::prelude::*;

use ou_semigroup::geometry::intervals::IntervalSequence;
use ou_semigroup::geometry::polar_decompose;
use ou_semigroup::mehler::{
    log_bound_block2d, log_kernel_1d, log_kernel_block2d, log_kernel_diag, log_kernel_kappa, KernelSpec, RotationCoupling,
};
use ou_semigroup::model::{lyapunov_residual, OUModel, SpectralParams, Time};
use ou_semigroup::model_file::{emit_model, parse_model, ModelSpec};
use ou_semigroup::normal_form::{decompose, reconstruct, CanonicalForm, RotationBlock};
use ou_semigroup::semigroup::{apply_kolmogorov, Field, QuadratureOptions, SupportBox};
use ou_semigroup::weaktype::dyadic::smm_membership;
use ou_semigroup::weaktype::large_t::salpha_residual;
use ou_semigroup::weaktype::{alpha_grid, salpha_solve, weak_type_scan, Reference, TestFunction};

fn rates(max_dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.2f64..3.0, 1..=max_dim)
}

fn point(n: usize, scale: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-scale..scale, n)
}

fn rates_and_points(max_dim: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    rates(max_dim).prop_flat_map(|r| {
        let n = r.len();
        (Just(r), point(n, 3.0), point(n, 3.0))
    })
}

/// A normal model from canonical data, an orthogonal basis from a QR
/// factorization and an SPD whitening.
fn normal_model() -> impl Strategy<Value = OUModel> {
    (0usize..=2, 0usize..=2)
        .prop_filter("nonempty", |(b, s)| b + s > 0)
        .prop_flat_map(|(blocks, scalars)| {
            let n = 2 * blocks + scalars;
            (
                prop::collection::vec((0.3f64..2.5, 0.3f64..3.0), blocks),
                prop::collection::vec(0.3f64..2.5, scalars),
                prop::collection::vec(-1.0f64..1.0, n * n),
                prop::collection::vec(-1.0f64..1.0, n * n),
            )
        })
        .prop_map(|(blocks, scalars, q, g)| {
            let blocks = blocks.into_iter().map(|(rate, frequency)| RotationBlock { rate, frequency }).collect();
            let mut form = CanonicalForm::from_parts(blocks, scalars).unwrap();
            let n = form.dim();
            form.basis = DMatrix::from_vec(n, n, q).qr().q();
            let g = DMatrix::from_vec(n, n, g);
            form.whitening = &g * g.transpose() + DMatrix::identity(n, n);
            reconstruct(&form).unwrap()
        })
}

/// Largest number of 3-dilated intervals containing one point. It is reached
/// near the origin, where the widths change fastest; beyond |p| = 40 the count
/// settles at 3.
const MAX_DILATE_OVERLAP: usize = 5;

fn sorted_spectrum(m: &DMatrix<f64>) -> Vec<(f64, f64)> {
    let mut values: Vec<(f64, f64)> = m.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect();
    values.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    values
}

proptest! {
    #[test]
    fn diagonal_kernel_tensorizes((r, x, u) in rates_and_points(6), t in 1e-3f64..10.0) {
        let params = SpectralParams::new(r.clone()).unwrap();
        let joint = log_kernel_diag(&params, t, &x, &u).unwrap();
        let parts: f64 = (0..r.len()).map(|j| log_kernel_1d(r[j], t, x[j], u[j]).unwrap()).sum();
        prop_assert!((joint - parts).abs() <= 1e-13 * parts.abs().max(1.0));
    }

    #[test]
    fn diagonal_kernel_is_symmetric((r, x, u) in rates_and_points(4), t in 1e-3f64..10.0) {
        let params = SpectralParams::new(r).unwrap();
        let a = log_kernel_diag(&params, t, &x, &u).unwrap();
        let b = log_kernel_diag(&params, t, &u, &x).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn half_cross_block_kernel_stays_below_the_bound(
        rate in 0.2f64..3.0, frequency in -20.0f64..20.0, t in 1e-3f64..10.0,
        x in point(2, 3.0), u in point(2, 3.0),
    ) {
        let x = [x[0], x[1]];
        let u = [u[0], u[1]];
        let kernel = log_kernel_block2d(rate, frequency, t, x, u, RotationCoupling::HalfCross).unwrap();
        let bound = log_bound_block2d(rate, t, x, u).unwrap();
        prop_assert!(kernel <= bound + 1e-12 * (1.0 + bound.abs()));
    }

    #[test]
    fn half_kappa_kernel_is_the_block_bound(
        rate in 0.2f64..3.0, t in 1e-3f64..10.0, x in point(2, 3.0), u in point(2, 3.0),
    ) {
        let spec = KernelSpec::new(SpectralParams::new(vec![rate, rate]).unwrap(), 0.5).unwrap();
        let kappa = log_kernel_kappa(&spec, t, &x, &u).unwrap();
        let bound = log_bound_block2d(rate, t, [x[0], x[1]], [u[0], u[1]]).unwrap();
        prop_assert!((kappa - bound).abs() <= 1e-12 * (1.0 + bound.abs()));
    }

    #[test]
    fn kappa_kernel_decreases_in_kappa(
        (r, x, u) in rates_and_points(3), t in 1e-3f64..10.0, low in 0.1f64..1.0, step in 0.01f64..1.0,
    ) {
        let params = SpectralParams::new(r).unwrap();
        let at = |kappa: f64| log_kernel_kappa(&KernelSpec::new(params.clone(), kappa).unwrap(), t, &x, &u).unwrap();
        let (a, b) = (at(low), at(low + step));
        prop_assert!(a >= b - 1e-12 * (1.0 + b.abs()));
    }

    #[test]
    fn model_files_roundtrip(model in normal_model()) {
        let spec = ModelSpec { name: Some("random".into()), model };
        prop_assert_eq!(parse_model(&emit_model(&spec)).unwrap(), spec);
    }

    #[test]
    fn polar_roundtrip(r in rates(3), seed in point(3, 4.0), beta in 0.5f64..12.0) {
        let n = r.len();
        let xi = &seed[..n];
        prop_assume!(xi.iter().map(|v| v * v).sum::<f64>() > 1e-6);
        let params = SpectralParams::new(r).unwrap();
        let p = polar_decompose(xi, beta, &params).unwrap();
        let back = p.compose(&params);
        let err: f64 = back.iter().zip(xi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-10 * xi.iter().map(|v| v.abs()).fold(1.0, f64::max));
        prop_assert!((params.quadratic_form(&p.xi_tilde) - beta).abs() <= 1e-10 * beta);
    }

    #[test]
    fn level_grows_along_rays(r in rates(3), seed in point(3, 2.0), s in -3.0f64..3.0) {
        let n = r.len();
        let xi = &seed[..n];
        prop_assume!(xi.iter().map(|v| v * v).sum::<f64>() > 1e-6);
        let params = SpectralParams::new(r).unwrap();
        let h = 1e-4;
        let before = params.quadratic_form(&params.dilate(s, xi));
        let after = params.quadratic_form(&params.dilate(s + h, xi));
        prop_assert!(after > before);
    }

    #[test]
    fn intervals_partition_and_overlap_boundedly(p in -80.0f64..80.0) {
        let mut seq = IntervalSequence::new();
        let nu = seq.locate(p).unwrap();
        let (left, right) = seq.interval(nu).unwrap();
        prop_assert!(left <= p && p <= right);
        let next_left = seq.interval(nu + 1).unwrap().0;
        prop_assert!((next_left - right).abs() <= 1e-12 * right.abs().max(1.0));
        let overlap = seq.overlap_count(p, 3.0).unwrap();
        prop_assert!(overlap <= MAX_DILATE_OVERLAP);
        if p.abs() >= 40.0 {
            prop_assert!(overlap <= 3);
        }
    }

    #[test]
    fn dyadic_shells_partition_pairs(
        (r, x, u) in rates_and_points(3), t in 1e-3f64..1.0, k in 1usize..=3,
    ) {
        let params = SpectralParams::new(r.clone()).unwrap();
        let k = k.min(r.len());
        let hits = (0..16).flat_map(|a| (0..16).map(move |b| (a, b)))
            .filter(|&(a, b)| smm_membership(&x, &u, t, a, b, k, &params))
            .count();
        prop_assert_eq!(hits, 1);
    }

    #[test]
    fn salpha_root_has_small_residual(
        r in rates(3), dir in point(3, 1.0), beta in 1.0f64..8.0, log_alpha in 3.0f64..12.0, integral in 1e-3f64..1.0,
    ) {
        let n = r.len();
        let dir = &dir[..n];
        prop_assume!(dir.iter().map(|v| v * v).sum::<f64>() > 1e-4);
        let params = SpectralParams::new(r).unwrap();
        let xi_tilde = polar_decompose(dir, beta, &params).unwrap().xi_tilde;
        let alpha = log_alpha.exp();
        let s = salpha_solve(&xi_tilde, integral, alpha, &params).unwrap();
        // Residual is in log space, so this is a relative error on alpha.
        prop_assert!(salpha_residual(&xi_tilde, s, integral, alpha, &params).abs() <= 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lyapunov_and_convergence(model in normal_model()) {
        prop_assert!(lyapunov_residual(&model) <= 1e-10 * model.invariant_covariance().amax().max(1.0));
        let slowest = model.eigenvalues().iter().map(|e| e.re.abs()).fold(f64::INFINITY, f64::min);
        let q_t = model.covariance_matrix(Time::Finite(25.0 / slowest)).unwrap();
        prop_assert!((&q_t - model.invariant_covariance()).amax() <= 1e-8 * model.invariant_covariance().amax());
    }

    #[test]
    fn normal_forms_preserve_the_spectrum(model in normal_model()) {
        let form = decompose(&model).unwrap();
        let again = reconstruct(&form).unwrap();
        let a = sorted_spectrum(model.drift());
        let b = sorted_spectrum(again.drift());
        for (p, q) in a.iter().zip(&b) {
            prop_assert!((p.0 - q.0).abs() <= 1e-8 && (p.1 - q.1).abs() <= 1e-8, "{:?} vs {:?}", a, b);
        }
        prop_assert_eq!(decompose(&model).unwrap(), form);
    }

    #[test]
    fn canonical_invariant_covariance_is_diagonal(model in normal_model()) {
        let form = decompose(&model).unwrap();
        let t = form.transform();
        let canonical = &t * model.invariant_covariance() * t.transpose();
        let rates = form.coordinate_rates();
        let n = rates.dim();
        let want = DMatrix::from_fn(n, n, |i, j| if i == j { 0.5 / rates.rates()[i] } else { 0.0 });
        prop_assert!((canonical - want).amax() <= 1e-8);
    }

    #[test]
    fn semigroup_contracts_bounded_functions(
        rate in 0.3f64..2.0, center in -2.0f64..2.0, width in 0.1f64..1.0, x in -3.0f64..3.0, t in 1e-2f64..5.0,
    ) {
        let model = OUModel::diagonal(&[rate]).unwrap();
        let eval = move |u: &[f64]| (-(u[0] - center).powi(2) / (2.0 * width * width)).exp();
        let field = Field::new(&eval).with_support(SupportBox::new(vec![center - 10.0 * width], vec![center + 10.0 * width]).unwrap());
        let value = apply_kolmogorov(&model, &field, &[x], t, &QuadratureOptions::default()).unwrap().value;
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&value));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn level_set_measures_decrease_in_alpha(rate in 0.5f64..2.0, atom in 0.5f64..2.5, seed in any::<u64>()) {
        let params = SpectralParams::new(vec![rate]).unwrap();
        let model = OUModel::diagonal(&[rate]).unwrap();
        let f = TestFunction::atoms(Reference::invariant(params), vec![vec![atom]], vec![1.0]).unwrap();
        let report = weak_type_scan(&model, &f, &alpha_grid(5.0, 500.0, 6), 2000, seed).unwrap();
        prop_assert!(report.is_monotone());
    }
}
