//! The semigroup `H_t` applied to functions, by the Kolmogorov formula and by
//! integrating the Mehler kernel, plus exact sampling of the process.

use crate::error::{check_dim, check_time, Error, Result};
use crate::mehler::{log_kernel_general, RotationCoupling};
use crate::model::{OUModel, Time};
use crate::normal_form::{decompose, CanonicalForm};
use crate::quadrature::{tensor_indices, GaussRule};
use crate::rng::{domain, normals, stream};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// Axis-aligned box `[lo, hi]` outside which a field vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SupportBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidParameter("support box needs lo < hi on every axis".into()));
        }
        Ok(Self { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| a <= v && v <= b)
    }
}

/// A scalar field with an optional declared support.
#[derive(Clone)]
pub struct Field<'a> {
    eval: &'a (dyn Fn(&[f64]) -> f64 + Sync),
    support: Option<SupportBox>,
}

impl<'a> Field<'a> {
    pub fn new(eval: &'a (dyn Fn(&[f64]) -> f64 + Sync)) -> Self {
        Self { eval, support: None }
    }

    pub fn with_support(mut self, support: SupportBox) -> Self {
        self.support = Some(support);
        self
    }

    pub fn support(&self) -> Option<&SupportBox> {
        self.support.as_ref()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    /// Nodes per axis for tensor rules.
    pub order: usize,
    /// Tensor rules are used up to this dimension, Monte Carlo above it.
    pub max_tensor_dim: usize,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self { order: 64, max_tensor_dim: 3, mc_samples: 200_000, seed: 0 }
    }
}

/// A value with its standard error (zero for deterministic quadrature).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    fn exact(value: f64) -> Self {
        Self { value, std_error: 0.0 }
    }
}

/// Mass outside `mean +- WINDOW sd` is below `1e-22`.
const WINDOW: f64 = 10.0;

fn gaussian_window(mean: &[f64], cov: &DMatrix<f64>, support: &SupportBox) -> Option<SupportBox> {
    let mut lo = Vec::with_capacity(mean.len());
    let mut hi = Vec::with_capacity(mean.len());
    for (j, &m) in mean.iter().enumerate() {
        let sd = cov[(j, j)].sqrt();
        let a = support.lo[j].max(m - WINDOW * sd);
        let b = support.hi[j].min(m + WINDOW * sd);
        if !(a < b) {
            return None;
        }
        lo.push(a);
        hi.push(b);
    }
    Some(SupportBox { lo, hi })
}

/// Tensor Gauss–Legendre over a box of `integrand(u) du`.
fn integrate_box(region: &SupportBox, order: usize, integrand: impl Fn(&[f64]) -> f64 + Sync) -> f64 {
    let rules: Vec<GaussRule> =
        region.lo.iter().zip(&region.hi).map(|(&a, &b)| GaussRule::legendre_on(order, a, b)).collect();
    let dim = region.dim();
    tensor_indices(order, dim)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|idx| {
            let mut u = vec![0.0; dim];
            let mut w = 1.0;
            for (j, &i) in idx.iter().enumerate() {
                u[j] = rules[j].nodes[i];
                w *= rules[j].weights[i];
            }
            w * integrand(&u)
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum()
}

/// Tensor Gauss–Hermite for `E g(Z)`, `Z` standard normal in `dim` dimensions.
fn integrate_normal(dim: usize, order: usize, g: impl Fn(&[f64]) -> f64 + Sync) -> f64 {
    let rule = GaussRule::standard_normal(order);
    tensor_indices(order, dim)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|idx| {
            let z: Vec<f64> = idx.iter().map(|&i| rule.nodes[i]).collect();
            let w: f64 = idx.iter().map(|&i| rule.weights[i]).product();
            w * g(&z)
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum()
}

fn monte_carlo_normal(dim: usize, opts: &QuadratureOptions, g: impl Fn(&[f64]) -> f64 + Sync) -> Estimate {
    let count = opts.mc_samples.max(2);
    let (sum, sum_sq) = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(opts.seed, domain::MONTE_CARLO, i as u64);
            let v = g(&normals(&mut rng, dim));
            (v, v * v)
        })
        .collect::<Vec<(f64, f64)>>()
            .iter()
            .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let mean = sum / count as f64;
    let var = (sum_sq / count as f64 - mean * mean).max(0.0) * count as f64 / (count - 1) as f64;
    Estimate { value: mean, std_error: (var / count as f64).sqrt() }
}

/// `H_t f(x) = integral of f(e^{tB}x - y) d gamma_t(y)`.
pub fn apply_kolmogorov(model: &OUModel, f: &Field, x: &[f64], t: f64, opts: &QuadratureOptions) -> Result<Estimate> {
    check_time(t)?;
    let n = model.dim();
    check_dim(n, x.len())?;
    let mean: Vec<f64> = (model.drift_exp(t) * DVector::from_column_slice(x)).as_slice().to_vec();
    let cov = model.covariance_matrix(Time::Finite(t))?;
    if let Some(support) = f.support() {
        check_dim(n, support.dim())?;
        if n <= opts.max_tensor_dim {
            let Some(region) = gaussian_window(&mean, &cov, support) else {
                return Ok(Estimate::exact(0.0));
            };
            let law = crate::model::GaussianMeasure::new(cov)?;
            let value = integrate_box(&region, opts.order, |u| {
                let d: Vec<f64> = u.iter().zip(&mean).map(|(a, b)| a - b).collect();
                f.eval(u) * law.log_density(&d).map(f64::exp).unwrap_or(0.0)
            });
            return Ok(Estimate::exact(value));
        }
    }
    let eig = cov.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::CholeskyFailure);
    }
    let factor = &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let shifted = |z: &[f64]| {
        let y = &factor * DVector::from_column_slice(z);
        let u: Vec<f64> = mean.iter().zip(y.iter()).map(|(m, v)| m + v).collect();
        f.eval(&u)
    };
    if n <= opts.max_tensor_dim {
        Ok(Estimate::exact(integrate_normal(n, opts.order, shifted)))
    } else {
        Ok(monte_carlo_normal(n, opts, shifted))
    }
}

/// `H_t f(x) = integral of K_t(x, u) f(u) d gamma_inf(u)` with the kernel of
/// the canonical form.
pub fn apply_mehler(model: &OUModel, f: &Field, x: &[f64], t: f64, opts: &QuadratureOptions) -> Result<Estimate> {
    let form = decompose(model)?;
    apply_mehler_with(model, &form, f, x, t, opts)
}

pub fn apply_mehler_with(
    model: &OUModel,
    form: &CanonicalForm,
    f: &Field,
    x: &[f64],
    t: f64,
    opts: &QuadratureOptions,
) -> Result<Estimate> {
    check_time(t)?;
    let n = model.dim();
    check_dim(n, x.len())?;
    let y = form.to_canonical(x);
    let inverse = form.inverse_transform();
    let kernel = |v: &[f64]| log_kernel_general(form, t, &y, v, RotationCoupling::Exact).map(f64::exp).unwrap_or(0.0);
    if let Some(support) = f.support() {
        check_dim(n, support.dim())?;
        if n <= opts.max_tensor_dim {
            let mean: Vec<f64> = (model.drift_exp(t) * DVector::from_column_slice(x)).as_slice().to_vec();
            let cov = model.covariance_matrix(Time::Finite(t))?;
            let Some(region) = gaussian_window(&mean, &cov, support) else {
                return Ok(Estimate::exact(0.0));
            };
            let invariant = model.invariant_measure();
            let transform = form.transform();
            let value = integrate_box(&region, opts.order, |u| {
                let v = (&transform * DVector::from_column_slice(u)).as_slice().to_vec();
                kernel(&v) * f.eval(u) * invariant.log_density(u).map(f64::exp).unwrap_or(0.0)
            });
            return Ok(Estimate::exact(value));
        }
    }
    let scales: Vec<f64> = form.coordinate_rates().rates().iter().map(|r| (0.5 / r).sqrt()).collect();
    let integrand = |z: &[f64]| {
        let v: Vec<f64> = z.iter().zip(&scales).map(|(a, s)| a * s).collect();
        let u = &inverse * DVector::from_column_slice(&v);
        kernel(&v) * f.eval(u.as_slice())
    };
    if n <= opts.max_tensor_dim {
        Ok(Estimate::exact(integrate_normal(n, opts.order, integrand)))
    } else {
        Ok(monte_carlo_normal(n, opts, integrand))
    }
}

/// Strictly increasing positive times with at least one point on each side
/// of `t = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TGrid {
    points: Vec<f64>,
    split_at_one: usize,
}

impl TGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::InvalidParameter("grid times must be positive and finite".into()));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("grid times must be strictly increasing".into()));
        }
        let split_at_one = points.partition_point(|&t| t <= 1.0);
        if split_at_one == 0 || split_at_one == points.len() {
            return Err(Error::InvalidParameter("grid needs points in both (0,1] and (1,inf)".into()));
        }
        Ok(Self { points, split_at_one })
    }

    /// `count` log-spaced points on `[lo, hi]` plus the point `t = 1`.
    pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo > 0.0 && lo < hi && count >= 2) {
            return Err(Error::InvalidParameter("log_spaced needs 0 < lo < hi and count >= 2".into()));
        }
        let (a, b) = (lo.ln(), hi.ln());
        let mut points: Vec<f64> =
            (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect();
        points.push(1.0);
        points.sort_by(f64::total_cmp);
        points.dedup_by(|p, q| (*p - *q).abs() <= 1e-15 * q.abs());
        Self::new(points)
    }

    /// 200 log-spaced points on `[1e-4, 1e2]` plus `t = 1`.
    pub fn standard() -> Self {
        Self::log_spaced(1e-4, 1e2, 200).expect("static grid is valid")
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn split_at_one(&self) -> usize {
        self.split_at_one
    }

    pub fn small_times(&self) -> &[f64] {
        &self.points[..self.split_at_one]
    }

    pub fn large_times(&self) -> &[f64] {
        &self.points[self.split_at_one..]
    }
}

impl Default for TGrid {
    fn default() -> Self {
        Self::standard()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaximalValue {
    pub value: f64,
    pub argmax_t: f64,
    /// Supremum over `t <= 1`.
    pub small_t: f64,
    /// Supremum over `t > 1`.
    pub large_t: f64,
}

/// Maximum of `|h(t)|` over the grid; the earliest maximizer is reported.
pub fn maximal_by(grid: &TGrid, h: impl Fn(f64) -> Result<f64>) -> Result<MaximalValue> {
    let mut best = MaximalValue { value: f64::NEG_INFINITY, argmax_t: grid.points[0], small_t: 0.0, large_t: 0.0 };
    for (i, &t) in grid.points.iter().enumerate() {
        let v = h(t)?.abs();
        if v > best.value {
            best.value = v;
            best.argmax_t = t;
        }
        if i < grid.split_at_one {
            best.small_t = best.small_t.max(v);
        } else {
            best.large_t = best.large_t.max(v);
        }
    }
    Ok(best)
}

/// `sup_t |H_t f(x)|` over the grid, using the Kolmogorov route.
pub fn maximal(model: &OUModel, f: &Field, x: &[f64], grid: &TGrid, opts: &QuadratureOptions) -> Result<MaximalValue> {
    maximal_by(grid, |t| Ok(apply_kolmogorov(model, f, x, t, opts)?.value))
}

/// Exact draws from the transition law `N(e^{tB}x, Q_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub dim: usize,
    pub samples: Vec<Vec<f64>>,
}

impl SampleBatch {
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for s in &self.samples {
            for (a, b) in m.iter_mut().zip(s) {
                *a += b;
            }
        }
        m.iter_mut().for_each(|v| *v /= self.samples.len() as f64);
        m
    }

    /// Unbiased sample covariance.
    pub fn covariance(&self) -> DMatrix<f64> {
        let m = self.mean();
        let mut c = DMatrix::zeros(self.dim, self.dim);
        for s in &self.samples {
            let d = DVector::from_iterator(self.dim, s.iter().zip(&m).map(|(a, b)| a - b));
            c += &d * d.transpose();
        }
        c / (self.samples.len() as f64 - 1.0)
    }
}

struct Transition {
    propagator: DMatrix<f64>,
    factor: DMatrix<f64>,
}

impl Transition {
    fn new(model: &OUModel, dt: f64) -> Result<Self> {
        check_time(dt)?;
        let cov = model.covariance_matrix(Time::Finite(dt))?;
        let factor = cov.cholesky().ok_or(Error::CholeskyFailure)?.l();
        Ok(Self { propagator: model.drift_exp(dt), factor })
    }

    fn step(&self, x: &DVector<f64>, z: &[f64]) -> DVector<f64> {
        &self.propagator * x + &self.factor * DVector::from_column_slice(z)
    }
}

pub fn sde_sample(model: &OUModel, x: &[f64], t: f64, count: usize, seed: u64) -> Result<SampleBatch> {
    check_dim(model.dim(), x.len())?;
    if count == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    let step = Transition::new(model, t)?;
    let start = DVector::from_column_slice(x);
    let n = model.dim();
    let samples = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, domain::SDE, i as u64);
            step.step(&start, &normals(&mut rng, n)).as_slice().to_vec()
        })
        .collect();
    Ok(SampleBatch { dim: n, samples })
}

/// One path observed at `times`, using exact Gaussian transitions.
pub fn sde_path(model: &OUModel, x: &[f64], times: &[f64], seed: u64) -> Result<Vec<Vec<f64>>> {
    Ok(sde_paths(model, x, times, 1, seed)?.pop().expect("one path"))
}

pub fn sde_paths(model: &OUModel, x: &[f64], times: &[f64], count: usize, seed: u64) -> Result<Vec<Vec<Vec<f64>>>> {
    check_dim(model.dim(), x.len())?;
    if times.is_empty() || times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("path times must be nonempty and strictly increasing".into()));
    }
    let mut steps = Vec::with_capacity(times.len());
    let mut previous = 0.0;
    for &t in times {
        steps.push(Transition::new(model, t - previous)?);
        previous = t;
    }
    let n = model.dim();
    let start = DVector::from_column_slice(x);
    Ok((0..count)
        .into_par_iter()
        .map(|p| {
            let mut rng = stream(seed, domain::SDE, p as u64);
            let mut state = start.clone();
            steps
                .iter()
                .map(|s| {
                    state = s.step(&state, &normals(&mut rng, n));
                    state.as_slice().to_vec()
                })
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_linear_fields() {
        let model = OUModel::diagonal(&[1.0, 2.0]).unwrap();
        let opts = QuadratureOptions::default();
        let one = |_: &[f64]| 1.0;
        let first = |y: &[f64]| y[1];
        let x = [0.3, -0.8];
        let v = apply_kolmogorov(&model, &Field::new(&one), &x, 0.7, &opts).unwrap();
        assert!((v.value - 1.0).abs() < 1e-10);
        let v = apply_kolmogorov(&model, &Field::new(&first), &x, 0.7, &opts).unwrap();
        assert!((v.value - (-1.4f64).exp() * x[1]).abs() < 1e-12);
        let v = apply_mehler(&model, &Field::new(&one), &x, 0.7, &opts).unwrap();
        assert!((v.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn grid_validation() {
        assert!(TGrid::new(vec![0.5, 0.4, 2.0]).is_err());
        assert!(TGrid::new(vec![0.5, 0.9]).is_err());
        let g = TGrid::standard();
        assert_eq!(g.points().len(), 201);
        assert!(g.points().contains(&1.0));
        assert_eq!(*g.small_times().last().unwrap(), 1.0);
    }
}
