//! Mehler kernels: densities of `H_t` with respect to the invariant measure,
//! evaluated in log space.

use crate::error::{check_dim, check_time, Error, Result};
use crate::model::{OUModel, SpectralParams, Time};
use crate::normal_form::CanonicalForm;
use std::f64::consts::TAU;

/// `1 - e^{-2 rate t}` without cancellation at small `t`.
#[inline]
pub fn decay_gap(rate: f64, t: f64) -> f64 {
    -(-2.0 * rate * t).exp_m1()
}

#[inline]
fn log_1d_unchecked(rate: f64, t: f64, x: f64, u: f64) -> f64 {
    let gap = decay_gap(rate, t);
    let a = (-rate * t).exp();
    -0.5 * gap.ln() - rate * a * (a * (x * x + u * u) - 2.0 * x * u) / gap
}

pub fn log_kernel_1d(rate: f64, t: f64, x: f64, u: f64) -> Result<f64> {
    check_time(t)?;
    if !(rate > 0.0) {
        return Err(Error::InvalidRate(rate));
    }
    Ok(log_1d_unchecked(rate, t, x, u))
}

/// One-dimensional factor `exp(rate x^2) (1-e^{-2 rate t})^{-1/2}
/// exp(-rate (x - e^{-rate t} u)^2 / (1-e^{-2 rate t}))`.
pub fn kernel_1d(rate: f64, t: f64, x: f64, u: f64) -> Result<f64> {
    Ok(log_kernel_1d(rate, t, x, u)?.exp())
}

pub fn log_kernel_diag(params: &SpectralParams, t: f64, x: &[f64], u: &[f64]) -> Result<f64> {
    check_time(t)?;
    check_dim(params.dim(), x.len())?;
    check_dim(params.dim(), u.len())?;
    let mut log_gap = 0.0;
    let mut quadratic = 0.0;
    for ((&rate, &xi), &ui) in params.rates().iter().zip(x).zip(u) {
        let gap = decay_gap(rate, t);
        let a = (-rate * t).exp();
        log_gap += gap.ln();
        quadratic += rate * a * (a * (xi * xi + ui * ui) - 2.0 * xi * ui) / gap;
    }
    Ok(-0.5 * log_gap - quadratic)
}

/// Tensor product of the one-dimensional kernels.
pub fn kernel_diag(params: &SpectralParams, t: f64, x: &[f64], u: &[f64]) -> Result<f64> {
    Ok(log_kernel_diag(params, t, x, u)?.exp())
}

/// The kernel with the Gaussian factor `exp(rate_j x_j^2)` kept only for the
/// first `global` coordinates. Indicators of `M_k` and of the cell are left
/// to the caller.
pub fn log_kernel_localized(params: &SpectralParams, global: usize, t: f64, x: &[f64], u: &[f64]) -> Result<f64> {
    if global > params.dim() {
        return Err(Error::InvalidParameter(format!("{global} global coordinates in dimension {}", params.dim())));
    }
    let full = log_kernel_diag(params, t, x, u)?;
    let local: f64 = params.rates()[global..].iter().zip(&x[global..]).map(|(r, v)| r * v * v).sum();
    Ok(full - local)
}

/// How the rotation enters the two-dimensional block kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationCoupling {
    /// Transition density of the block semigroup: the diagonal kernel
    /// evaluated at the rotated point.
    Exact,
    /// The cross term with half the exact coefficient. Dominated by
    /// `bound_block2d`; not a Markov kernel.
    HalfCross,
}

impl RotationCoupling {
    fn coefficient(self) -> f64 {
        match self {
            RotationCoupling::Exact => 2.0,
            RotationCoupling::HalfCross => 1.0,
        }
    }
}

pub fn log_kernel_block2d(
    rate: f64,
    frequency: f64,
    t: f64,
    x: [f64; 2],
    u: [f64; 2],
    coupling: RotationCoupling,
) -> Result<f64> {
    check_time(t)?;
    if !(rate > 0.0) {
        return Err(Error::InvalidRate(rate));
    }
    Ok(log_block_unchecked(rate, frequency, t, x, u, coupling))
}

#[inline]
fn log_block_unchecked(rate: f64, frequency: f64, t: f64, x: [f64; 2], u: [f64; 2], coupling: RotationCoupling) -> f64 {
    let gap = decay_gap(rate, t);
    let a = (-rate * t).exp();
    let angle = (frequency * t).rem_euclid(TAU);
    let (sin, cos) = angle.sin_cos();
    let inner = x[0] * u[0] + x[1] * u[1];
    let wedge = x[0] * u[1] - x[1] * u[0];
    let diagonal = log_1d_unchecked(rate, t, x[0], u[0]) + log_1d_unchecked(rate, t, x[1], u[1]);
    diagonal - coupling.coefficient() * rate * a * ((1.0 - cos) * inner + sin * wedge) / gap
}

/// Kernel of the block `[[-rate, frequency], [-frequency, -rate]]`, `Q = I`.
pub fn kernel_block2d(
    rate: f64,
    frequency: f64,
    t: f64,
    x: [f64; 2],
    u: [f64; 2],
    coupling: RotationCoupling,
) -> Result<f64> {
    Ok(log_kernel_block2d(rate, frequency, t, x, u, coupling)?.exp())
}

pub fn log_bound_block2d(rate: f64, t: f64, x: [f64; 2], u: [f64; 2]) -> Result<f64> {
    check_time(t)?;
    if !(rate > 0.0) {
        return Err(Error::InvalidRate(rate));
    }
    let gap = decay_gap(rate, t);
    let a = (-rate * t).exp();
    let dx = [x[0] - a * u[0], x[1] - a * u[1]];
    Ok(rate * (x[0] * x[0] + x[1] * x[1]) - gap.ln() - 0.5 * rate * (dx[0] * dx[0] + dx[1] * dx[1]) / gap)
}

/// Frequency-independent majorant of the block kernel.
pub fn bound_block2d(rate: f64, t: f64, x: [f64; 2], u: [f64; 2]) -> Result<f64> {
    Ok(log_bound_block2d(rate, t, x, u)?.exp())
}

/// Rates plus the damping factor applied to the quadratic exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    pub params: SpectralParams,
    pub kappa: f64,
}

impl KernelSpec {
    pub fn new(params: SpectralParams, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!("kappa must be positive, got {kappa}")));
        }
        Ok(Self { params, kappa })
    }

    pub fn plain(params: SpectralParams) -> Self {
        Self { params, kappa: 1.0 }
    }
}

pub fn log_kernel_kappa(spec: &KernelSpec, t: f64, x: &[f64], u: &[f64]) -> Result<f64> {
    if spec.kappa == 1.0 {
        return log_kernel_diag(&spec.params, t, x, u);
    }
    check_time(t)?;
    check_dim(spec.params.dim(), x.len())?;
    check_dim(spec.params.dim(), u.len())?;
    let mut total = 0.0;
    for ((&rate, &xi), &ui) in spec.params.rates().iter().zip(x).zip(u) {
        let gap = decay_gap(rate, t);
        let d = xi - (-rate * t).exp() * ui;
        total += rate * xi * xi - 0.5 * gap.ln() - spec.kappa * rate * d * d / gap;
    }
    Ok(total)
}

/// Diagonal kernel with its quadratic exponent scaled by `kappa`.
pub fn kernel_kappa(spec: &KernelSpec, t: f64, x: &[f64], u: &[f64]) -> Result<f64> {
    Ok(log_kernel_kappa(spec, t, x, u)?.exp())
}

/// Kernel of a canonical form, with arguments in canonical coordinates.
pub fn log_kernel_general(form: &CanonicalForm, t: f64, y: &[f64], v: &[f64], coupling: RotationCoupling) -> Result<f64> {
    check_time(t)?;
    check_dim(form.dim(), y.len())?;
    check_dim(form.dim(), v.len())?;
    let mut total = 0.0;
    for (j, b) in form.blocks.iter().enumerate() {
        let i = 2 * j;
        total += log_block_unchecked(b.rate, b.frequency, t, [y[i], y[i + 1]], [v[i], v[i + 1]], coupling);
    }
    let offset = 2 * form.blocks.len();
    for (k, &rate) in form.scalars.iter().enumerate() {
        total += log_1d_unchecked(rate, t, y[offset + k], v[offset + k]);
    }
    Ok(total)
}

pub fn kernel_general(form: &CanonicalForm, t: f64, y: &[f64], v: &[f64], coupling: RotationCoupling) -> Result<f64> {
    Ok(log_kernel_general(form, t, y, v, coupling)?.exp())
}

/// Exact kernel of any model: `N(u; e^{tB}x, Q_t) / N(u; 0, Q_inf)`.
pub fn transition_log_kernel(model: &OUModel, t: f64, x: &[f64], u: &[f64]) -> Result<f64> {
    check_time(t)?;
    check_dim(model.dim(), x.len())?;
    check_dim(model.dim(), u.len())?;
    let qt = model.covariance(Time::Finite(t))?;
    let mean = model.drift_exp(t) * nalgebra::DVector::from_column_slice(x);
    let shifted: Vec<f64> = u.iter().zip(mean.iter()).map(|(a, b)| a - b).collect();
    Ok(qt.log_density(&shifted)? - model.invariant_measure().log_density(u)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn one_dimensional_values() {
        let t = 2f64.ln();
        let want = 1f64.exp() * (0.75f64).powf(-0.5) * (-4.0f64 / 3.0).exp();
        assert_relative_eq!(kernel_1d(1.0, t, 1.0, 0.0).unwrap(), want, max_relative = 1e-14);
        assert_relative_eq!(kernel_1d(2.0, 0.3, 0.0, 0.0).unwrap(), decay_gap(2.0, 0.3).powf(-0.5));
        for &(x, u) in &[(-3.0, 3.0), (2.5, -1.0), (0.0, 3.0)] {
            assert!((kernel_1d(1.0, 100.0, x, u).unwrap() - 1.0).abs() < 1e-10);
        }
        assert!(kernel_1d(1.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn block_kernel_edge_cases() {
        let x = [0.3, -1.2];
        let u = [1.1, 0.4];
        let diag = SpectralParams::new(vec![1.0, 1.0]).unwrap();
        let full_turn = kernel_block2d(1.0, TAU, 1.0, x, u, RotationCoupling::Exact).unwrap();
        assert_relative_eq!(full_turn, kernel_diag(&diag, 1.0, &x, &u).unwrap(), max_relative = 1e-12);
        let tiny = kernel_block2d(1.0, 1e-8, 0.5, x, u, RotationCoupling::HalfCross).unwrap();
        assert_relative_eq!(tiny, kernel_diag(&diag, 0.5, &x, &u).unwrap(), max_relative = 1e-6);
        let origin = kernel_block2d(0.7, 3.0, 0.2, [0.0; 2], [0.0; 2], RotationCoupling::Exact).unwrap();
        assert_relative_eq!(origin, 1.0 / decay_gap(0.7, 0.2), max_relative = 1e-14);
    }

    #[test]
    fn exact_block_matches_gaussian_transition() {
        let (rate, freq, t) = (1.0, 1.3, 0.7);
        let model = OUModel::new(
            nalgebra::DMatrix::identity(2, 2),
            nalgebra::DMatrix::from_row_slice(2, 2, &[-rate, freq, -freq, -rate]),
        )
        .unwrap();
        let x = [0.4, -0.9];
        let u = [-0.2, 1.5];
        let want = transition_log_kernel(&model, t, &x, &u).unwrap();
        let got = log_kernel_block2d(rate, freq, t, x, u, RotationCoupling::Exact).unwrap();
        assert!((want - got).abs() < 1e-12, "{want} vs {got}");
        let halved = log_kernel_block2d(rate, freq, t, x, u, RotationCoupling::HalfCross).unwrap();
        assert!((want - halved).abs() > 1e-3);
    }

    #[test]
    fn bound_at_origin_and_strict_for_zero_frequency() {
        assert_relative_eq!(bound_block2d(1.5, 0.4, [0.0; 2], [0.0; 2]).unwrap(), 1.0 / decay_gap(1.5, 0.4));
        let (x, u) = ([0.5, 0.2], [-0.3, 0.9]);
        let k = kernel_block2d(1.0, 0.0, 0.6, x, u, RotationCoupling::HalfCross).unwrap();
        assert!(k < bound_block2d(1.0, 0.6, x, u).unwrap());
    }

    #[test]
    fn half_kappa_matches_block_bound() {
        let params = SpectralParams::new(vec![0.9, 0.9]).unwrap();
        let spec = KernelSpec::new(params, 0.5).unwrap();
        let (x, u) = ([0.7, -0.4], [1.2, 0.3]);
        let k = kernel_kappa(&spec, 0.35, &x, &u).unwrap();
        assert_relative_eq!(k, bound_block2d(0.9, 0.35, x, u).unwrap(), max_relative = 1e-13);
    }

    #[test]
    fn general_kernel_origin_value() {
        use crate::normal_form::RotationBlock;
        let form = CanonicalForm::from_parts(vec![RotationBlock { rate: 1.2, frequency: 0.5 }], vec![0.4]).unwrap();
        let got = kernel_general(&form, 0.3, &[0.0; 3], &[0.0; 3], RotationCoupling::Exact).unwrap();
        assert_relative_eq!(got, 1.0 / decay_gap(1.2, 0.3) / decay_gap(0.4, 0.3).sqrt(), max_relative = 1e-13);
    }
}
