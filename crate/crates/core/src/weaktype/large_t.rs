//! The large-time part of the maximal operator: the critical dilation
//! `s_alpha(xi~)` and the measure of the set where it is exceeded.

use rayon::prelude::*;
use statrs::function::gamma::gamma;

use crate::error::{check_dim, Error, Result};
use crate::geometry::polar::polar_decompose;
use crate::model::SpectralParams;
use crate::rng::{domain, normal, stream};
use crate::roots::increasing_root;
use crate::semigroup::Estimate;
use crate::weaktype::test_function::DiscreteMeasure;

/// Atoms of a discrete measure projected onto `E_beta` along the dilation
/// flow. Atoms at the origin have no projection and are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedMeasure {
    pub beta: f64,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl ProjectedMeasure {
    pub fn new(measure: &DiscreteMeasure, beta: f64, params: &SpectralParams) -> Result<Self> {
        let k = params.dim();
        let mut points = Vec::with_capacity(measure.len());
        let mut weights = Vec::with_capacity(measure.len());
        for (u, w) in measure.iter() {
            match polar_decompose(&u[..k], beta, params) {
                Ok(p) => {
                    points.push(p.xi_tilde);
                    weights.push(w);
                }
                Err(Error::ZeroVector) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(Self { beta, points, weights })
    }

    /// `sum w exp(-c |xi~ - eta~|^2)` over the projected atoms.
    pub fn overlap(&self, xi_tilde: &[f64], c: f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(eta, w)| {
                let d2: f64 = xi_tilde.iter().zip(eta).map(|(a, b)| (a - b) * (a - b)).sum();
                w * (-c * d2).exp()
            })
            .sum()
    }
}

/// `int exp(-c |xi~ - eta~|^2) f d gamma^k`, with `eta~` the projection of
/// each atom onto `E_beta`.
pub fn cap_overlap(xi_tilde: &[f64], measure: &DiscreteMeasure, c: f64, beta: f64, params: &SpectralParams) -> Result<f64> {
    check_dim(params.dim(), xi_tilde.len())?;
    Ok(ProjectedMeasure::new(measure, beta, params)?.overlap(xi_tilde, c))
}

/// The `s` where `exp(R(e^{Lambda s} xi~)) * integral = alpha`.
pub fn salpha_solve(xi_tilde: &[f64], integral: f64, alpha: f64, params: &SpectralParams) -> Result<f64> {
    check_dim(params.dim(), xi_tilde.len())?;
    if !(integral > 0.0) {
        return Err(Error::NoRoot(format!("cap integral {integral} vanishes")));
    }
    let target = alpha.ln() - integral.ln();
    if !(target > 0.0) {
        return Err(Error::NoRoot(format!("level {alpha} below the cap integral {integral}")));
    }
    let beta = params.quadratic_form(xi_tilde);
    let level = |s: f64| params.quadratic_form(&params.dilate(s, xi_tilde));
    let (a, b) = ((target / beta).ln() / (2.0 * params.rate_max()), (target / beta).ln() / (2.0 * params.rate_min()));
    let (lo, hi) = (a.min(b), a.max(b));
    let pad = 1e-6 * (1.0 + hi.abs());
    let mut s = increasing_root(|s| level(s).ln() - target.ln(), lo - pad, hi + pad)?;
    for _ in 0..2 {
        let y = params.dilate(s, xi_tilde);
        let slope: f64 = 2.0 * params.rates().iter().zip(&y).map(|(l, v)| l * l * v * v).sum::<f64>();
        s -= (params.quadratic_form(&y) - target) / slope;
    }
    Ok(s)
}

/// `log(exp(R(e^{Lambda s} xi~)) * integral) - log(alpha)`.
pub fn salpha_residual(xi_tilde: &[f64], s: f64, integral: f64, alpha: f64, params: &SpectralParams) -> f64 {
    params.quadratic_form(&params.dilate(s, xi_tilde)) + integral.ln() - alpha.ln()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LargeTEstimate {
    pub alpha: f64,
    /// `gamma^k` of the part of the annulus beyond `s_alpha`.
    pub measure: Estimate,
    /// `alpha * measure`.
    pub scaled: f64,
    /// Gaussian mass of the annulus `log(alpha)/2 <= R <= 2 log(alpha)`.
    pub annulus_mass: f64,
}

/// Estimates `gamma^k{xi in E : s(xi) > s_alpha(xi~)}` for the global
/// coordinates, sampling the annulus by its radial law.
pub fn large_t_levelset(
    params: &SpectralParams,
    measure: &DiscreteMeasure,
    alpha: f64,
    c: f64,
    budget: usize,
    seed: u64,
) -> Result<LargeTEstimate> {
    if budget == 0 {
        return Err(Error::BudgetExceeded("large-t budget is zero".into()));
    }
    let beta = alpha.ln();
    if !(beta > 0.0) {
        return Err(Error::AlphaTooSmall { alpha, threshold: 1.0 });
    }
    let k = params.dim();
    let half_k = 0.5 * k as f64;
    let (inner, outer) = (0.5 * beta, 2.0 * beta);
    let truncation = -(-(outer - inner)).exp_m1();
    let projected = ProjectedMeasure::new(measure, beta, params)?;
    let hits: Vec<Result<f64>> = (0..budget)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, domain::LARGE_T, i as u64);
            let u: f64 = rand::Rng::random(&mut rng);
            let radial = inner - (-u * truncation).ln_1p();
            let z: Vec<f64> = (0..k).map(|_| normal(&mut rng)).collect();
            let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            let xi: Vec<f64> = params.rates().iter().zip(&z).map(|(l, v)| (radial / l).sqrt() * v / norm).collect();
            let weight = radial.powf(half_k - 1.0) * (-inner).exp() * truncation / gamma(half_k);
            let polar = polar_decompose(&xi, beta, params)?;
            let integral = projected.overlap(&polar.xi_tilde, c);
            if integral <= 0.0 {
                return Ok(0.0);
            }
            let s_alpha = salpha_solve(&polar.xi_tilde, integral, alpha, params)?;
            Ok(if polar.s > s_alpha { weight } else { 0.0 })
        })
        .collect();
    let values = hits.into_iter().collect::<Result<Vec<f64>>>()?;
    let n = budget as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = (values.iter().map(|v| v * v).sum::<f64>() / n - mean * mean).max(0.0);
    let annulus_mass = statrs::function::gamma::gamma_lr(half_k, outer) - statrs::function::gamma::gamma_lr(half_k, inner);
    Ok(LargeTEstimate {
        alpha,
        measure: Estimate { value: mean, std_error: (var / n).sqrt() },
        scaled: alpha * mean,
        annulus_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isotropic_root_closed_form() {
        let params = SpectralParams::new(vec![1.5, 1.5]).unwrap();
        let alpha: f64 = 500.0;
        let beta = alpha.ln();
        let xi = [(beta / 1.5).sqrt(), 0.0];
        let integral = 0.3;
        let s = salpha_solve(&xi, integral, alpha, &params).unwrap();
        let expect = ((alpha / integral).ln() / beta).ln() / 3.0;
        assert!((s - expect).abs() < 1e-10 && s > 0.0);
        assert!(salpha_residual(&xi, s, integral, alpha, &params).abs() < 1e-8);
    }

    #[test]
    fn empty_cap_has_no_root() {
        let params = SpectralParams::new(vec![1.0]).unwrap();
        assert!(matches!(salpha_solve(&[2.0], 0.0, 50.0, &params), Err(Error::NoRoot(_))));
    }
}
