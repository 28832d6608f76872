use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Metric, VerifyOptions};
use crate::catalog;
use crate::error::Result;
use crate::geometry::{
    build_interval_sequence, intervals::IntervalSequence, polar_decompose, transversality, tube_measure, verify_inequality, TubeMethod, TubeSpec,
};
use crate::mehler::{
    kernel_1d, log_bound_block2d, log_kernel_1d, log_kernel_block2d, log_kernel_diag, log_kernel_general,
    transition_log_kernel, KernelSpec, RotationCoupling,
};
use crate::model::{lyapunov_residual, OUModel, SpectralParams, Time};
use crate::normal_form::{decompose, reconstruct, CanonicalForm, RotationBlock};
use crate::quadrature::{adaptive_legendre, tensor_indices, GaussRule};
use crate::rng::{domain, normal, normals, stream};
use crate::semigroup::{apply_kolmogorov, apply_mehler, sde_sample, Field, QuadratureOptions, SupportBox};
use crate::weaktype::recursion::{generate_instances, tune_constant};
use crate::weaktype::{
    alpha_grid, default_decay, kappa_weak_type_scan, large_t_levelset, salpha_solve, weak_type_scan, Reference,
    TestFunction,
};

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    uniform(rng, lo.ln(), hi.ln()).exp()
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

fn min_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(f64::INFINITY, f64::min)
}

/// Position `index` of criterion `id`, so criteria never share streams.
fn rng_for(options: &VerifyOptions, id: u64, index: u64) -> ChaCha8Rng {
    stream(options.seed, domain::VERIFY, (id << 40) | index)
}

pub(super) fn tensorization(options: &VerifyOptions) -> Result<Vec<Metric>> {
    let samples = options.budget(10_000);
    let errors = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(options.seed, domain::KERNEL_CHECKS, i as u64);
            let n = 1 + i % 6;
            let rates: Vec<f64> = (0..n).map(|_| uniform(&mut rng, 0.1, 3.0)).collect();
            let t = log_uniform(&mut rng, 1e-3, 10.0);
            let x: Vec<f64> = (0..n).map(|_| 1.5 * normal(&mut rng)).collect();
            let u: Vec<f64> = (0..n).map(|_| 1.5 * normal(&mut rng)).collect();
            let params = SpectralParams::new(rates.clone())?;
            let joint = log_kernel_diag(&params, t, &x, &u)?;
            let mut parts = 0.0;
            for j in 0..n {
                parts += log_kernel_1d(rates[j], t, x[j], u[j])?;
            }
            Ok((joint - parts).abs() / parts.abs().max(1.0))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(vec![Metric::at_most("max relative log error", max_of(errors), 1e-13), Metric::info("samples", samples as f64)])
}

fn bump_field(center: &[f64], width: f64) -> (impl Fn(&[f64]) -> f64 + Sync + '_, SupportBox) {
    let support = SupportBox::new(
        center.iter().map(|c| c - 10.0 * width).collect(),
        center.iter().map(|c| c + 10.0 * width).collect(),
    )
    .expect("positive width");
    let eval = move |u: &[f64]| {
        let d2: f64 = u.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
        (-d2 / (2.0 * width * width)).exp()
    };
    (eval, support)
}

pub(super) fn two_routes(options: &VerifyOptions) -> Result<Vec<Metric>> {
    let models: Vec<OUModel> =
        ["classical-1d", "diagonal-2d", "rotation-2d"].iter().map(|n| Ok(catalog::load(n)?.model)).collect::<Result<_>>()?;
    let opts = QuadratureOptions::default();
    let cases = 50;
    let mut worst: f64 = 0.0;
    for i in 0..cases {
        let mut rng = rng_for(options, 2, i as u64);
        let model = &models[i % models.len()];
        let n = model.dim();
        let x: Vec<f64> = (0..n).map(|_| uniform(&mut rng, -2.0, 2.0)).collect();
        let t = log_uniform(&mut rng, 0.1, 5.0);
        let center: Vec<f64> = (0..n).map(|_| 0.5 * normal(&mut rng)).collect();
        let (eval, support) = bump_field(&center, 0.4);
        let field = Field::new(&eval).with_support(support);
        let a = apply_kolmogorov(model, &field, &x, t, &opts)?.value;
        let b = apply_mehler(model, &field, &x, t, &opts)?.value;
        worst = worst.max((a - b).abs());
    }
    Ok(vec![Metric::at_most("max |kolmogorov - mehler|", worst, 1e-6), Metric::info("cases", cases as f64)])
}

/// `int K_t(x, u) gamma_inf(du)` in one dimension by adaptive quadrature
/// around the transition mean.
fn mass_1d(rate: f64, t: f64, x: f64) -> Result<f64> {
    let mean = (-rate * t).exp() * x;
    let sd = (-(-2.0 * rate * t).exp_m1() / (2.0 * rate)).sqrt();
    let density = |u: f64| (rate / std::f64::consts::PI).sqrt() * (-rate * u * u).exp();
    let value = adaptive_legendre(
        |u| vec![kernel_1d(rate, t, x, u).unwrap_or(0.0) * density(u)],
        mean - 14.0 * sd,
        mean + 14.0 * sd,
        1e-12,
    )?[0];
    Ok(value)
}

/// Tensor Gauss-Hermite mass of the diagonal kernel in `n <= 3` dimensions.
fn mass_hermite(params: &SpectralParams, t: f64, x: &[f64]) -> Result<f64> {
    let rule = GaussRule::standard_normal(64);
    let n = params.dim();
    let mut total = 0.0;
    for idx in tensor_indices(rule.len(), n) {
        let u: Vec<f64> = idx.iter().zip(params.rates()).map(|(&i, l)| rule.nodes[i] / (2.0 * l).sqrt()).collect();
        let w: f64 = idx.iter().map(|&i| rule.weights[i]).product();
        total += w * log_kernel_diag(params, t, x, &u)?.exp();
    }
    Ok(total)
}

pub(super) fn markov_and_chapman_kolmogorov(_options: &VerifyOptions) -> Result<Vec<Metric>> {
    let mut mass_error: f64 = 0.0;
    for rate in [0.5, 1.0, 2.0] {
        for i in 0..12 {
            let t = 1e-3 * 1e4f64.powf(i as f64 / 11.0);
            for x in [-2.0, -0.5, 0.0, 1.0, 3.0] {
                mass_error = mass_error.max((mass_1d(rate, t, x)? - 1.0).abs());
            }
        }
    }
    let mut hermite_error: f64 = 0.0;
    for rates in [vec![1.0, 2.0], vec![0.5, 1.0, 1.5]] {
        let params = SpectralParams::new(rates)?;
        for t in [0.5, 1.0, 2.0, 5.0] {
            for x in [[0.3, -0.7, 0.5], [1.0, 0.2, -0.4]] {
                let mass = mass_hermite(&params, t, &x[..params.dim()])?;
                hermite_error = hermite_error.max((mass - 1.0).abs());
            }
        }
    }
    let rate = 1.0;
    let density = |u: f64| (rate / std::f64::consts::PI).sqrt() * (-rate * u * u).exp();
    let mut ck_error: f64 = 0.0;
    let times = [0.05, 0.3, 1.0, 3.0];
    let points = [-1.5, 0.0, 0.7, 2.0];
    for &s in &times {
        for &t in &times {
            for &x in &points {
                for &v in &points {
                    let want = kernel_1d(rate, s + t, x, v)?;
                    // Normalized by `want`, since far-apart x and v give values near 1e-25.
                    let integrand = |u: f64| {
                        vec![kernel_1d(rate, s, x, u).unwrap_or(0.0) * kernel_1d(rate, t, u, v).unwrap_or(0.0) * density(u) / want]
                    };
                    // The integrand is Gaussian in u: the product of the
                    // time-s law from x and the time-t backward factor to v.
                    let var_s = -(-2.0 * rate * s).exp_m1() / (2.0 * rate);
                    let var_t = -(-2.0 * rate * t).exp_m1() / (2.0 * rate) * (2.0 * rate * t).exp();
                    let precision = 1.0 / var_s + 1.0 / var_t;
                    let mean = ((-rate * s).exp() * x / var_s + (rate * t).exp() * v / var_t) / precision;
                    let sd = precision.recip().sqrt();
                    let got = adaptive_legendre(integrand, mean - 14.0 * sd, mean + 14.0 * sd, 1e-10)?[0];
                    ck_error = ck_error.max((got - 1.0).abs());
                }
            }
        }
    }
    Ok(vec![
        Metric::at_most("max |mass - 1|, n = 1", mass_error, 1e-8),
        Metric::at_most("max |mass - 1|, n = 2, 3", hermite_error, 1e-8),
        Metric::at_most("max relative Chapman-Kolmogorov error", ck_error, 1e-6),
    ])
}

pub(super) fn block_bound(options: &VerifyOptions) -> Result<Vec<Metric>> {
    const RATES: [f64; 3] = [0.3, 1.0, 2.5];
    const FREQUENCIES: [f64; 6] = [0.1, -0.1, 1.0, -1.0, 10.0, -10.0];
    let samples = options.budget(1_000_000);
    let margins = (0..samples)
        .into_par_iter()
        .map(|i| {
            let rate = RATES[i % 3];
            let frequency = FREQUENCIES[(i / 3) % 6];
            let t = 1e-3 * 1e4f64.powf(((i / 18) % 30) as f64 / 29.0);
            let mut rng = stream(options.seed, domain::KERNEL_CHECKS, (4 << 40) | i as u64);
            let z = normals(&mut rng, 4);
            let (x, u) = ([z[0], z[1]], [z[2], z[3]]);
            let bound = log_bound_block2d(rate, t, x, u)?;
            let slack = 1e-12 * (1.0 + bound.abs());
            let halved = bound - log_kernel_block2d(rate, frequency, t, x, u, RotationCoupling::HalfCross)?;
            let exact = bound - log_kernel_block2d(rate, frequency, t, x, u, RotationCoupling::Exact)?;
            Ok((halved, halved < -slack, exact < -slack))
        })
        .collect::<Result<Vec<(f64, bool, bool)>>>()?;
    let violations = margins.iter().filter(|m| m.1).count();
    let exact_violations = margins.iter().filter(|m| m.2).count();
    Ok(vec![
        Metric::at_most("violations", violations as f64, 0.0),
        Metric::info("min log margin", min_of(margins.iter().map(|m| m.0))),
        Metric::info("samples", samples as f64),
        Metric::info("violations of the exact block kernel", exact_violations as f64),
    ])
}

pub(super) fn local_bound_chain(options: &VerifyOptions) -> Result<Vec<Metric>> {
    let params = SpectralParams::new(vec![0.3, 1.0, 2.5])?;
    let report = verify_inequality("local-bound-chain", options.budget(1_000_000), options.seed, &params)?;
    Ok(vec![
        Metric::at_most("violations", report.violations as f64, 0.0),
        Metric::info("min margin", report.min_margin),
        Metric::info("samples", report.samples as f64),
    ])
}

pub(super) fn lyapunov(_options: &VerifyOptions) -> Result<Vec<Metric>> {
    let mut residual: f64 = 0.0;
    let mut convergence: f64 = 0.0;
    let models = catalog::shipped_models();
    for spec in &models {
        let model = &spec.model;
        residual = residual.max(lyapunov_residual(model));
        let slowest = model.eigenvalues().iter().map(|e| e.re.abs()).fold(f64::INFINITY, f64::min);
        let horizon = 20.0 / slowest;
        let q_t = model.covariance_matrix(Time::Finite(horizon))?;
        let q_inf = model.invariant_covariance();
        convergence = convergence.max((&q_t - q_inf).amax() / q_inf.amax());
    }
    Ok(vec![
        Metric::at_most("max Lyapunov residual", residual, 1e-10),
        Metric::at_most("max relative |Q_t - Q_inf| at t = 20 / slowest rate", convergence, 1e-8),
        Metric::info("models", models.len() as f64),
    ])
}

/// A random normal model: canonical blocks and rates seen through a random
/// orthogonal basis and a random symmetric positive definite whitening.
fn random_normal_model(rng: &mut ChaCha8Rng) -> Result<OUModel> {
    let n = rng.random_range(2..=6);
    let block_count = rng.random_range(0..=n / 2);
    let blocks = (0..block_count)
        .map(|_| {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            RotationBlock { rate: uniform(rng, 0.3, 2.5), frequency: sign * uniform(rng, 0.2, 3.0) }
        })
        .collect();
    let scalars = (0..n - 2 * block_count).map(|_| uniform(rng, 0.3, 2.5)).collect();
    let mut form = CanonicalForm::from_parts(blocks, scalars)?;
    let gaussian = DMatrix::from_fn(n, n, |_, _| normal(rng));
    form.basis = gaussian.qr().q();
    let g = DMatrix::from_fn(n, n, |_, _| normal(rng));
    form.whitening = &g * g.transpose() / n as f64 + DMatrix::identity(n, n) * 0.5;
    reconstruct(&form)
}

pub(super) fn normal_form_roundtrip(options: &VerifyOptions) -> Result<Vec<Metric>> {
    let count = 50;
    let results = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(options, 7, i as u64);
            let model = random_normal_model(&mut rng)?;
            let form = decompose(&model)?;
            let again = reconstruct(&form)?;
            let drift_error = (again.drift() - model.drift()).amax() / model.drift().amax().max(1.0);
            let invariant = model.invariant_measure();
            let mut kernel_error: f64 = 0.0;
            for _ in 0..4 {
                let x = invariant.sample(&mut rng);
                let u = invariant.sample(&mut rng);
                let t = uniform(&mut rng, 0.1, 3.0);
                let direct = transition_log_kernel(&model, t, &x, &u)?;
                let canonical =
                    log_kernel_general(&form, t, &form.to_canonical(&x), &form.to_canonical(&u), RotationCoupling::Exact)?;
                kernel_error = kernel_error.max((direct - canonical).abs());
            }
            Ok((drift_error, kernel_error))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    Ok(vec![
        Metric::at_most("max relative drift reconstruction error", max_of(results.iter().map(|r| r.0)), 1e-8),
        Metric::at_most("max |log kernel original - canonical|", max_of(results.iter().map(|r| r.1)), 1e-8),
        Metric::info("models", count as f64),
    ])
}

pub(super) fn sde_sampling(options: &VerifyOptions) -> Result<Vec<Metric>> {
    let model = catalog::load("correlated-2d")?.model;
    let x = [1.0, -0.5];
    let t = 0.7;
    let count = 100_000;
    let seed = options.seed;
    let batch = sde_sample(&model, &x, t, count, seed)?;
    let mean = model.drift_exp(t) * nalgebra::DVector::from_column_slice(&x);
    let cov = model.covariance_matrix(Time::Finite(t))?;
    let m = batch.mean();
    let c = batch.covariance();
    let n = count as f64;
    let mut mean_z: f64 = 0.0;
    let mut cov_z: f64 = 0.0;
    for i in 0..2 {
        mean_z = mean_z.max((m[i] - mean[i]).abs() / (cov[(i, i)] / n).sqrt());
        for j in 0..2 {
            let sd = ((cov[(i, i)] * cov[(j, j)] + cov[(i, j)].powi(2)) / n).sqrt();
            cov_z = cov_z.max((c[(i, j)] - cov[(i, j)]).abs() / sd);
        }
    }
    let repeat = sde_sample(&model, &x, t, count, seed)?;
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| crate::Error::InvalidParameter(e.to_string()))?
        .install(|| sde_sample(&model, &x, t, count, seed))?;
    let mismatches = batch.samples.iter().zip(&repeat.samples).zip(&single.samples).filter(|((a, b), c)| a != b || a != c).count();
    Ok(vec![
        Metric::at_most("max mean deviation in standard errors", mean_z, 4.0),
        Metric::at_most("max covariance deviation in standard errors", cov_z, 4.0),
        Metric::at_most("samples differing between reruns", mismatches as f64, 0.0),
    ])
}

fn unit_vector(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    loop {
        let z = normals(rng, k);
        let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return z.into_iter().map(|v| v / norm).collect();
        }
    }
}

pub(super) fn geometry(options: &VerifyOptions) -> Result<Vec<Metric>> {
    let gap = build_interval_sequence(-50.0, 50.0)?.max_gap();
    let mut sequence = IntervalSequence::new();
    let overlap = (-5000..=5000)
        .map(|i| sequence.overlap_count(f64::from(i) * 1e-2, 3.0))
        .collect::<Result<Vec<usize>>>()?
        .into_iter()
        .max()
        .unwrap_or(0);

    let params3 = SpectralParams::new(vec![1.0, 2.0, 3.0])?;
    let samples = options.budget(10_000);
    let roundtrip = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(options, 9, i as u64);
            let xi: Vec<f64> = (0..3).map(|_| 3.0 * normal(&mut rng)).collect();
            let beta = uniform(&mut rng, 0.5, 12.0);
            let p = polar_decompose(&xi, beta, &params3)?;
            let back = p.compose(&params3);
            let err: f64 = back.iter().zip(&xi).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let norm: f64 = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
            Ok(err / norm)
        })
        .collect::<Result<Vec<f64>>>()?;

    let params13 = SpectralParams::new(vec![1.0, 3.0])?;
    let beta = 5.0;
    let cosines: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(options, 9, (1 << 32) | i as u64);
            let dir = unit_vector(&mut rng, 2);
            let scale = (beta / params13.quadratic_form(&dir)).sqrt();
            let xi: Vec<f64> = dir.iter().map(|v| v * scale).collect();
            transversality(uniform(&mut rng, 0.0, 3.0), &xi, &params13)
        })
        .collect();

    let params12 = SpectralParams::new(vec![1.0, 2.0])?;
    // Not reduced in quick mode: the smallest caps collect only a few hundred hits.
    let budget = 200_000;
    let mut ratios = Vec::new();
    let mut worst_z: f64 = 0.0;
    for (bi, beta) in [4.0f64, 6.0, 8.0, 10.0].into_iter().enumerate() {
        for (ai, radius) in [0.1f64, 0.3, 1.0].into_iter().enumerate() {
            let spec = TubeSpec::through(params12.clone(), beta, &[1.0, 1.0], radius)?;
            let quadrature = tube_measure(&spec, TubeMethod::Quadrature)?;
            let seed = options.seed.wrapping_add((bi * 3 + ai) as u64);
            let mc = tube_measure(&spec, TubeMethod::MonteCarlo { budget, seed })?;
            let combined = (quadrature.std_error.powi(2) + mc.std_error.powi(2)).sqrt();
            worst_z = worst_z.max((quadrature.value - mc.value).abs() / combined);
            ratios.push(quadrature.value * beta.sqrt() * beta.exp() / radius);
        }
    }
    let spread = max_of(ratios.iter().copied()) / min_of(ratios.iter().copied());
    Ok(vec![
        Metric::at_most("max interval partition gap", gap, 1e-12),
        Metric::info("max 3-dilate overlap on [-50, 50]", overlap as f64),
        Metric::at_most("max relative polar roundtrip error", max_of(roundtrip), 1e-10),
        Metric::above("min cos psi", min_of(cosines), 0.0),
        Metric::at_most("tube ratio max/min", spread, 10.0),
        Metric::at_most("max |quadrature - monte carlo| in standard errors", worst_z, 3.0),
    ])
}

pub(super) fn empirical_lemmas(options: &VerifyOptions) -> Result<Vec<Metric>> {
    let params = SpectralParams::new(vec![1.0, 2.0])?;
    let budget = options.budget(100_000);
    let mut metrics = Vec::new();
    for id in ["lemma-4.1", "lemma-4.2a", "lemma-4.2b", "stima-t"] {
        let base = verify_inequality(id, budget, options.seed, &params)?;
        let doubled = verify_inequality(id, 2 * budget, options.seed, &params)?;
        metrics.push(Metric::above(format!("{id} infimum"), doubled.min_margin, 0.0));
        metrics.push(Metric::at_most(format!("{id} drift on doubling"), base.drift(&doubled), 0.2));
    }
    Ok(metrics)
}

/// Rates, kappa, family name and the test function of one scan.
pub type WeakTypeConfiguration = (Vec<f64>, f64, &'static str, TestFunction);

pub fn weak_type_configurations() -> Result<Vec<WeakTypeConfiguration>> {
    let mut out = Vec::new();
    for rates in [vec![1.0], vec![1.0, 2.0]] {
        let params = SpectralParams::new(rates.clone())?;
        let reference = Reference::invariant(params);
        // Centers sit in the tail so that sup_t H_t f on the time grid stays
        // well above the largest alpha scanned.
        let (atoms, weights, center, width): (Vec<Vec<f64>>, Vec<f64>, Vec<f64>, f64) = if rates.len() == 1 {
            (vec![vec![2.0]], vec![1.0], vec![2.0], 1e-4)
        } else {
            (vec![vec![1.0, 0.5], vec![-0.8, 0.3], vec![0.2, -1.1]], vec![1.0; 3], vec![1.0, 0.5], 0.01)
        };
        for kappa in [1.0, 0.5] {
            out.push((rates.clone(), kappa, "atoms", TestFunction::atoms(reference.clone(), atoms.clone(), weights.clone())?));
            out.push((rates.clone(), kappa, "bump", TestFunction::bump(reference.clone(), center.clone(), width)?));
        }
    }
    Ok(out)
}

pub(super) fn weak_type(options: &VerifyOptions) -> Result<Vec<Metric>> {
    let alphas = alpha_grid(10.0, 1000.0, 9);
    let budget = options.budget(1_000_000);
    let mut metrics = Vec::new();
    for (rates, kappa, family, f) in weak_type_configurations()? {
        let params = SpectralParams::new(rates.clone())?;
        let report = if kappa == 1.0 {
            weak_type_scan(&OUModel::diagonal(&rates)?, &f, &alphas, budget, options.seed)?
        } else {
            kappa_weak_type_scan(&KernelSpec::new(params, kappa)?, &f, &alphas, budget, options.seed)?
        };
        let label = format!("n={} kappa={kappa} {family}", rates.len());
        metrics.push(Metric::at_most(format!("{label} slope"), report.slope, 0.05));
        metrics.push(Metric::at_most(
            format!("{label} monotonicity breaks"),
            report.measures.windows(2).filter(|w| w[1] > w[0]).count() as f64,
            0.0,
        ));
        metrics.push(Metric::info(format!("{label} max quotient"), report.max_quotient()));
        metrics.push(Metric::info(format!("{label} max standard error"), max_of(report.std_errors.iter().copied())));
        let upper = report.alphas.len() / 2;
        let tail_slope = crate::weaktype::level_set::log_log_slope(&report.alphas[upper..], &report.quotients[upper..]);
        metrics.push(Metric::info(format!("{label} slope over the upper half"), tail_slope));
    }
    Ok(metrics)
}

pub(super) fn forbidden_zones(options: &VerifyOptions) -> Result<Vec<Metric>> {
    let count = if options.quick { 5 } else { 20 };
    let instances = generate_instances(count, options.seed)?;
    let suite = tune_constant(&instances, 4096.0)?;
    let runs: Vec<_> = suite.runs.iter().chain(&suite.refined).collect();
    let overlapping = runs.iter().filter(|r| !r.disjoint()).count();
    let uncovered: usize = runs.iter().map(|r| r.uncovered).sum();
    let unstable = suite.runs.iter().zip(&suite.refined).filter(|(a, b)| a.disjoint() != b.disjoint() || a.covered() != b.covered()).count();
    let unordered = runs.iter().filter(|r| !r.levels_nondecreasing()).count();
    let spread = max_of(runs.iter().filter_map(|r| r.ratio_spread()));
    let ratios: Vec<f64> = runs.iter().flat_map(|r| r.zone_ratios.iter().copied()).filter(|r| r.is_finite() && *r > 0.0).collect();
    let suite_spread = max_of(ratios.iter().copied()) / min_of(ratios.iter().copied());
    Ok(vec![
        Metric::at_most("runs with overlapping balls", overlapping as f64, 0.0),
        Metric::at_most("uncovered level-set points", uncovered as f64, 0.0),
        Metric::at_most("verdicts changed by grid doubling", unstable as f64, 0.0),
        Metric::at_most("runs with decreasing levels", unordered as f64, 0.0),
        Metric::at_most("max per-run zone ratio max/min", spread, 20.0),
        Metric::info("M", suite.m_const),
        Metric::info("instances", instances.len() as f64),
        Metric::info("max zones in a run", runs.iter().map(|r| r.selections.len()).max().unwrap_or(0) as f64),
        Metric::info("zone ratio max/min across the suite", suite_spread),
    ])
}

pub(super) fn large_time(options: &VerifyOptions) -> Result<Vec<Metric>> {
    let params = SpectralParams::new(vec![1.0, 2.0])?;
    let f = TestFunction::bump(Reference::invariant(params.clone()), vec![1.0, 0.5], 0.3)?;
    let measure = f.discretize(24);
    let budget = options.budget(100_000);
    let mut scaled = Vec::new();
    let mut metrics = Vec::new();
    for log_alpha in [4.0f64, 6.0, 8.0] {
        let estimate = large_t_levelset(&params, &measure, log_alpha.exp(), default_decay(&params), budget, options.seed)?;
        metrics.push(Metric::info(format!("alpha gamma(A) at alpha = e^{log_alpha}"), estimate.scaled));
        scaled.push(estimate.scaled);
    }
    let spread = max_of(scaled.iter().copied()) / min_of(scaled.iter().copied());

    let rate = 1.3;
    let iso = SpectralParams::new(vec![rate, rate])?;
    let mut closed_form_error: f64 = 0.0;
    for log_alpha in [4.0f64, 6.0, 8.0] {
        for integral in [1e-3, 0.05, 0.5, 1.0] {
            for angle in [0.0f64, 1.0, 2.5] {
                let xi = [angle.cos() * (log_alpha / rate).sqrt(), angle.sin() * (log_alpha / rate).sqrt()];
                let s = salpha_solve(&xi, integral, log_alpha.exp(), &iso)?;
                let want = ((log_alpha - integral.ln()) / log_alpha).ln() / (2.0 * rate);
                closed_form_error = closed_form_error.max((s - want).abs());
            }
        }
    }
    let mut out = vec![
        Metric::at_most("alpha gamma(A) max/min", spread, 10.0),
        Metric::at_most("max |s_alpha - closed form|", closed_form_error, 1e-10),
    ];
    out.extend(metrics);
    Ok(out)
}
