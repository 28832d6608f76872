//! The `(Q, B)` model: validation, covariance integrals, Gaussian measures
//! and the infinitesimal generator.

use crate::error::{check_dim, check_time, Error, Result};
use crate::quadrature::adaptive_legendre;
use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use std::f64::consts::PI;

/// A time in `(0, +inf]`, with infinity as a first-class value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Time {
    Finite(f64),
    Infinite,
}

impl From<f64> for Time {
    fn from(t: f64) -> Self {
        if t == f64::INFINITY {
            Time::Infinite
        } else {
            Time::Finite(t)
        }
    }
}

/// Positive rates of a diagonal drift `diag(-rate_1, ..., -rate_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralParams {
    rates: Vec<f64>,
    rate_max: f64,
    rate_min: f64,
}

impl SpectralParams {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::InvalidParameter("at least one rate is required".into()));
        }
        if let Some(&bad) = rates.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::InvalidRate(bad));
        }
        let rate_max = rates.iter().copied().fold(f64::MIN, f64::max);
        let rate_min = rates.iter().copied().fold(f64::MAX, f64::min);
        Ok(Self { rates, rate_max, rate_min })
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn dim(&self) -> usize {
        self.rates.len()
    }

    pub fn rate_max(&self) -> f64 {
        self.rate_max
    }

    pub fn rate_min(&self) -> f64 {
        self.rate_min
    }

    /// Restriction to the coordinates `range` (e.g. the global block).
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        Self::new(self.rates[range].to_vec())
    }

    /// The quadratic form `sum rate_j x_j^2`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.rates.iter().zip(x).map(|(r, v)| r * v * v).sum()
    }

    /// Anisotropic dilation `x -> e^{rate s} x`.
    pub fn dilate(&self, s: f64, x: &[f64]) -> Vec<f64> {
        self.rates.iter().zip(x).map(|(r, v)| (r * s).exp() * v).collect()
    }

    /// The invariant measure `diag(1 / (2 rate_j))`.
    pub fn invariant_measure(&self) -> GaussianMeasure {
        let cov = DMatrix::from_diagonal(&DVector::from_iterator(
            self.dim(),
            self.rates.iter().map(|r| 0.5 / r),
        ));
        GaussianMeasure::new(cov).expect("diagonal positive covariance")
    }
}

/// Zero-mean Gaussian measure with a stored Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMeasure {
    sigma: DMatrix<f64>,
    lower: DMatrix<f64>,
    lower_inv: DMatrix<f64>,
    log_norm: f64,
}

impl GaussianMeasure {
    pub fn new(sigma: DMatrix<f64>) -> Result<Self> {
        if !sigma.is_square() {
            return Err(Error::NotSquare { rows: sigma.nrows(), cols: sigma.ncols() });
        }
        let n = sigma.nrows();
        let chol = sigma.clone().cholesky().ok_or(Error::CholeskyFailure)?;
        let lower = chol.l();
        let log_det: f64 = lower.diagonal().iter().map(|d| 2.0 * d.ln()).sum();
        let lower_inv = lower
            .clone()
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .ok_or(Error::CholeskyFailure)?;
        let log_norm = -0.5 * n as f64 * (2.0 * PI).ln() - 0.5 * log_det;
        Ok(Self { sigma, lower, lower_inv, log_norm })
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    /// Lower Cholesky factor `L` with `L L^T = sigma`.
    pub fn cholesky_lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    pub fn log_norm(&self) -> f64 {
        self.log_norm
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        let z = &self.lower_inv * DVector::from_column_slice(x);
        Ok(self.log_norm - 0.5 * z.norm_squared())
    }

    pub fn density(&self, x: &[f64]) -> Result<f64> {
        Ok(self.log_density(x)?.exp())
    }

    /// Maps a standard normal vector `z` to `L z`.
    pub fn color(&self, z: &[f64]) -> Vec<f64> {
        (&self.lower * DVector::from_column_slice(z)).as_slice().to_vec()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z: Vec<f64> = (0..self.dim())
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        self.color(&z)
    }
}

/// A validated Ornstein–Uhlenbeck model: diffusion matrix `Q` (symmetric
/// positive definite) and Hurwitz drift `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct OUModel {
    diffusion: DMatrix<f64>,
    drift: DMatrix<f64>,
    eigenvalues: Vec<Complex<f64>>,
    invariant: DMatrix<f64>,
}

const SYMMETRY_TOL: f64 = 1e-12;

impl OUModel {
    pub fn new(diffusion: DMatrix<f64>, drift: DMatrix<f64>) -> Result<Self> {
        for m in [&diffusion, &drift] {
            if !m.is_square() {
                return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
            }
        }
        check_dim(diffusion.nrows(), drift.nrows())?;
        if diffusion.iter().chain(drift.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite matrix entry".into()));
        }
        let scale = diffusion.amax().max(1.0);
        let asymmetry = (&diffusion - diffusion.transpose()).amax();
        if asymmetry > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric { asymmetry });
        }
        let diffusion = (&diffusion + diffusion.transpose()) * 0.5;
        let min_eigenvalue = diffusion.clone().symmetric_eigen().eigenvalues.min();
        if min_eigenvalue <= 0.0 {
            return Err(Error::NotPositiveDefinite { min_eigenvalue });
        }
        let mut eigenvalues: Vec<Complex<f64>> = drift.complex_eigenvalues().iter().copied().collect();
        eigenvalues.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        if let Some(bad) = eigenvalues.iter().find(|e| !(e.re < 0.0)) {
            return Err(Error::NotHurwitz { real_part: bad.re });
        }
        let invariant = solve_lyapunov(&drift, &diffusion)?;
        Ok(Self { diffusion, drift, eigenvalues, invariant })
    }

    /// Diagonal model `Q = I`, `B = diag(-rates)`.
    pub fn diagonal(rates: &[f64]) -> Result<Self> {
        let params = SpectralParams::new(rates.to_vec())?;
        let n = params.dim();
        let drift = DMatrix::from_diagonal(&DVector::from_iterator(n, rates.iter().map(|r| -r)));
        Self::new(DMatrix::identity(n, n), drift)
    }

    pub fn dim(&self) -> usize {
        self.drift.nrows()
    }

    pub fn diffusion(&self) -> &DMatrix<f64> {
        &self.diffusion
    }

    pub fn drift(&self) -> &DMatrix<f64> {
        &self.drift
    }

    /// Eigenvalues of the drift, sorted by real then imaginary part.
    pub fn eigenvalues(&self) -> &[Complex<f64>] {
        &self.eigenvalues
    }

    /// `Q_inf`, the solution of `B X + X B^T = -Q`.
    pub fn invariant_covariance(&self) -> &DMatrix<f64> {
        &self.invariant
    }

    pub fn invariant_measure(&self) -> GaussianMeasure {
        GaussianMeasure::new(self.invariant.clone()).expect("Lyapunov solution is positive definite")
    }

    pub fn drift_exp(&self, t: f64) -> DMatrix<f64> {
        (&self.drift * t).exp()
    }

    /// Rates of the drift when it is diagonal.
    pub fn diagonal_rates(&self) -> Option<SpectralParams> {
        let n = self.dim();
        let scale = self.drift.amax();
        for i in 0..n {
            for j in 0..n {
                if i != j && self.drift[(i, j)].abs() > SYMMETRY_TOL * scale {
                    return None;
                }
            }
        }
        SpectralParams::new((0..n).map(|i| -self.drift[(i, i)]).collect()).ok()
    }

    /// Per-coordinate rates when `Q = I` and the drift is block diagonal with
    /// rotation blocks `[[-l, q], [-q, -l]]` on consecutive pairs and scalars.
    pub fn canonical_rates(&self) -> Option<Vec<f64>> {
        let n = self.dim();
        let ident = DMatrix::<f64>::identity(n, n);
        if (&self.diffusion - ident).amax() > SYMMETRY_TOL {
            return None;
        }
        let b = &self.drift;
        let tol = SYMMETRY_TOL * b.amax().max(1.0);
        let mut rates = Vec::with_capacity(n);
        let mut i = 0;
        while i < n {
            let paired = i + 1 < n && (b[(i, i + 1)].abs() > tol || b[(i + 1, i)].abs() > tol);
            let width = if paired { 2 } else { 1 };
            for r in i..i + width {
                for c in 0..n {
                    if (c < i || c >= i + width) && b[(r, c)].abs() > tol {
                        return None;
                    }
                }
            }
            if paired {
                let same_rate = (b[(i, i)] - b[(i + 1, i + 1)]).abs() <= tol;
                let skew = (b[(i, i + 1)] + b[(i + 1, i)]).abs() <= tol;
                if !(same_rate && skew) {
                    return None;
                }
                rates.extend([-b[(i, i)], -b[(i, i)]]);
            } else {
                rates.push(-b[(i, i)]);
            }
            i += width;
        }
        Some(rates)
    }

    /// The covariance `Q_t` (or `Q_inf`) as a Gaussian measure.
    pub fn covariance(&self, time: Time) -> Result<GaussianMeasure> {
        GaussianMeasure::new(self.covariance_matrix(time)?)
    }

    pub fn covariance_matrix(&self, time: Time) -> Result<DMatrix<f64>> {
        let t = match time {
            Time::Infinite => return Ok(self.invariant.clone()),
            Time::Finite(t) => {
                check_time(t)?;
                if t.is_infinite() {
                    return Ok(self.invariant.clone());
                }
                t
            }
        };
        let n = self.dim();
        if let Some(params) = self.diagonal_rates() {
            let r = params.rates();
            return Ok(DMatrix::from_fn(n, n, |i, j| {
                let sum = r[i] + r[j];
                self.diffusion[(i, j)] * -(-sum * t).exp_m1() / sum
            }));
        }
        if let Some(r) = self.canonical_rates() {
            return Ok(DMatrix::from_diagonal(&DVector::from_iterator(
                n,
                r.iter().map(|l| -(-2.0 * l * t).exp_m1() / (2.0 * l)),
            )));
        }
        let tolerance = 1e-12 * self.diffusion.amax().max(1.0);
        let integrand = |s: f64| {
            let e = self.drift_exp(s);
            (&e * &self.diffusion * e.transpose()).as_slice().to_vec()
        };
        let flat = adaptive_legendre(integrand, 0.0, t, tolerance)?;
        let m = DMatrix::from_column_slice(n, n, &flat);
        Ok((&m + m.transpose()) * 0.5)
    }

    /// `(1/2) tr(Q D^2 f(x)) + <Bx, grad f(x)>` by central differences.
    pub fn generator_apply(&self, f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Result<f64> {
        let n = self.dim();
        check_dim(n, x.len())?;
        let grad_step: Vec<f64> = x.iter().map(|v| f64::EPSILON.cbrt() * (1.0 + v.abs())).collect();
        let hess_step: Vec<f64> = x.iter().map(|v| f64::EPSILON.powf(0.25) * (1.0 + v.abs())).collect();
        let mut probe = x.to_vec();
        let mut eval = |shifts: &[(usize, f64)]| {
            probe.copy_from_slice(x);
            for &(i, d) in shifts {
                probe[i] += d;
            }
            f(&probe)
        };
        let bx = &self.drift * DVector::from_column_slice(x);
        let mut drift_term = 0.0;
        for i in 0..n {
            let h = grad_step[i];
            let d = (eval(&[(i, h)]) - eval(&[(i, -h)])) / (2.0 * h);
            drift_term += bx[i] * d;
        }
        let centre = eval(&[]);
        let mut trace_term = 0.0;
        for i in 0..n {
            let hi = hess_step[i];
            let dii = (eval(&[(i, hi)]) - 2.0 * centre + eval(&[(i, -hi)])) / (hi * hi);
            trace_term += self.diffusion[(i, i)] * dii;
            for j in (i + 1)..n {
                let qij = self.diffusion[(i, j)];
                if qij == 0.0 {
                    continue;
                }
                let hj = hess_step[j];
                let dij = (eval(&[(i, hi), (j, hj)]) - eval(&[(i, hi), (j, -hj)]) - eval(&[(i, -hi), (j, hj)])
                    + eval(&[(i, -hi), (j, -hj)]))
                    / (4.0 * hi * hj);
                trace_term += 2.0 * qij * dij;
            }
        }
        Ok(0.5 * trace_term + drift_term)
    }
}

/// Solves `B X + X B^T = -Q` through the Kronecker system
/// `(I (x) B + B (x) I) vec X = -vec Q`.
pub fn solve_lyapunov(drift: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = drift.nrows();
    check_dim(n, rhs.nrows())?;
    if n > 16 {
        return Err(Error::Unsupported(format!("Lyapunov solve limited to n <= 16, got {n}")));
    }
    let ident = DMatrix::<f64>::identity(n, n);
    let system = ident.kronecker(drift) + drift.kronecker(&ident);
    let vec_rhs = -DVector::from_column_slice(rhs.as_slice());
    let sol = system.lu().solve(&vec_rhs).ok_or(Error::SingularLyapunov)?;
    let x = DMatrix::from_column_slice(n, n, sol.as_slice());
    Ok((&x + x.transpose()) * 0.5)
}

/// Residual `||B X + X B^T + Q||_F` of a Lyapunov solution.
pub fn lyapunov_residual(model: &OUModel) -> f64 {
    let x = model.invariant_covariance();
    (model.drift() * x + x * model.drift().transpose() + model.diffusion()).norm()
}

pub fn validate_model(diffusion: DMatrix<f64>, drift: DMatrix<f64>) -> Result<OUModel> {
    OUModel::new(diffusion, drift)
}

pub fn covariance_qt(model: &OUModel, time: Time) -> Result<GaussianMeasure> {
    model.covariance(time)
}

pub fn gaussian_density(measure: &GaussianMeasure, x: &[f64]) -> Result<f64> {
    measure.density(x)
}

pub fn generator_apply(model: &OUModel, f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Result<f64> {
    model.generator_apply(f, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mat(n: usize, rows: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(n, n, rows)
    }

    #[test]
    fn rotation_drift_is_valid_with_complex_pair() {
        let m = OUModel::new(DMatrix::identity(2, 2), mat(2, &[-1.0, 2.0, -2.0, -1.0])).unwrap();
        let ev = m.eigenvalues();
        assert_relative_eq!(ev[0].re, -1.0, epsilon = 1e-12);
        assert_relative_eq!(ev[0].im.abs(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_models() {
        assert!(matches!(
            OUModel::new(DMatrix::identity(1, 1), mat(1, &[0.0])),
            Err(Error::NotHurwitz { .. })
        ));
        assert!(matches!(
            OUModel::new(mat(2, &[1.0, 0.5, 0.0, 1.0]), -DMatrix::identity(2, 2)),
            Err(Error::NotSymmetric { .. })
        ));
        assert!(matches!(
            OUModel::new(mat(2, &[1.0, 2.0, 2.0, 1.0]), -DMatrix::identity(2, 2)),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn one_dimensional_qt_at_ln2() {
        let m = OUModel::diagonal(&[1.0]).unwrap();
        let q = m.covariance_matrix(Time::Finite(2f64.ln())).unwrap();
        assert_relative_eq!(q[(0, 0)], 0.375, epsilon = 1e-15);
    }

    #[test]
    fn building_block_invariant_covariance() {
        let lambda = 0.7;
        let drift = mat(2, &[-lambda, lambda, -lambda, -lambda]);
        let m = OUModel::new(DMatrix::identity(2, 2), drift).unwrap();
        let inf = m.invariant_covariance();
        assert!((inf - DMatrix::identity(2, 2) / (2.0 * lambda)).amax() < 1e-12);
        assert!(lyapunov_residual(&m) < 1e-12);
    }

    #[test]
    fn density_at_origin() {
        let g = SpectralParams::new(vec![1.0]).unwrap().invariant_measure();
        assert_relative_eq!(g.density(&[0.0]).unwrap(), PI.powf(-0.5), epsilon = 1e-15);
        let g2 = SpectralParams::new(vec![1.0, 1.0]).unwrap().invariant_measure();
        assert_relative_eq!(g2.density(&[1.0, 0.0]).unwrap(), (-1f64).exp() / PI, epsilon = 1e-15);
    }

    #[test]
    fn canonical_detection() {
        let m = OUModel::new(DMatrix::identity(3, 3), mat(3, &[-1.0, 3.0, 0.0, -3.0, -1.0, 0.0, 0.0, 0.0, -2.0]))
            .unwrap();
        assert_eq!(m.canonical_rates(), Some(vec![1.0, 1.0, 2.0]));
        let j = OUModel::new(DMatrix::identity(2, 2), mat(2, &[-1.0, 1.0, 0.0, -1.0])).unwrap();
        assert_eq!(j.canonical_rates(), None);
    }
}
