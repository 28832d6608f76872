//! Tubes `Z = {e^{Lambda s} eta : s >= 0, eta in Omega}` over caps
//! `Omega = {eta in E_beta : |eta - center| < a}` and their `mu_R` measure.

use std::cell::RefCell;
use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use statrs::function::gamma::gamma;

use crate::error::{check_dim, Error, Result};
use crate::geometry::polar::{area_ratio, polar_decompose};
use crate::model::SpectralParams;
use crate::rng::{domain, stream};
use crate::semigroup::Estimate;

const QUADRATURE_TOLERANCE: f64 = 1e-10;
const SCAN_STEP: f64 = 1e-2;
pub const MAX_MONTE_CARLO_BUDGET: usize = 1 << 30;

#[derive(Debug, Clone, PartialEq)]
pub struct TubeSpec {
    params: SpectralParams,
    beta: f64,
    center: Vec<f64>,
    radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TubeMethod {
    Quadrature,
    MonteCarlo { budget: usize, seed: u64 },
}

impl TubeSpec {
    pub fn new(params: SpectralParams, beta: f64, center: Vec<f64>, radius: f64) -> Result<Self> {
        check_dim(params.dim(), center.len())?;
        if !(beta > 0.0) || !(radius > 0.0) {
            return Err(Error::InvalidParameter(format!("tube needs beta > 0 and a > 0, got {beta}, {radius}")));
        }
        let level = params.quadratic_form(&center);
        if (level - beta).abs() > 1e-10 * beta.max(1.0) {
            return Err(Error::InvalidParameter(format!("center has R = {level}, expected {beta}")));
        }
        Ok(Self { params, beta, center, radius })
    }

    /// A tube whose center is the projection of `direction` onto `E_beta`.
    pub fn through(params: SpectralParams, beta: f64, direction: &[f64], radius: f64) -> Result<Self> {
        let center = polar_decompose(direction, beta, &params)?.xi_tilde;
        Self::new(params, beta, center, radius)
    }

    pub fn params(&self) -> &SpectralParams {
        &self.params
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Whether `xi` lies in `Z`.
    pub fn contains(&self, xi: &[f64]) -> bool {
        match polar_decompose(xi, self.beta, &self.params) {
            Ok(p) => p.s >= 0.0 && distance(&p.xi_tilde, &self.center) < self.radius,
            Err(_) => false,
        }
    }

    /// Point of `E_beta` with sphere coordinate `omega`.
    fn on_level(&self, omega: &[f64]) -> Vec<f64> {
        self.params.rates().iter().zip(omega).map(|(l, w)| (self.beta / l).sqrt() * w).collect()
    }

    fn sphere_center(&self) -> Vec<f64> {
        self.params.rates().iter().zip(&self.center).map(|(l, c)| c * (l / self.beta).sqrt()).collect()
    }

    /// `int_Omega h(xi~) dS` written over the sphere coordinate, with the
    /// surface density supplied by `h` itself as a function of `omega`.
    fn cap_integral(&self, h: &dyn Fn(&[f64]) -> Result<f64>) -> Result<f64> {
        let failure: RefCell<Option<Error>> = RefCell::new(None);
        let guarded = |omega: &[f64]| -> f64 {
            match h(omega) {
                Ok(v) => v,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    0.0
                }
            }
        };
        let scale = guarded(&self.sphere_center()).abs().max(f64::MIN_POSITIVE);
        let tol = QUADRATURE_TOLERANCE * scale;
        let value = match self.dim() {
            2 => {
                let c = self.sphere_center();
                let theta_c = c[1].atan2(c[0]);
                let at = |theta: f64| [theta.cos(), theta.sin()];
                let inside = |theta: f64| distance(&self.on_level(&at(theta)), &self.center) < self.radius;
                let (lo, hi) = match (arc_end(&inside, theta_c, 1.0), arc_end(&inside, theta_c, -1.0)) {
                    (Some(up), Some(down)) => (down, up),
                    _ => (theta_c - PI, theta_c + PI),
                };
                crate::quadrature::adaptive_legendre(|theta| vec![guarded(&at(theta))], lo, hi, tol)?[0]
            }
            3 => {
                let c = self.sphere_center();
                let (e1, e2) = orthonormal_complement(&c);
                let point = |phi: f64, psi: f64| -> [f64; 3] {
                    let (sp, cp) = phi.sin_cos();
                    let (ss, cs) = psi.sin_cos();
                    std::array::from_fn(|j| cp * c[j] + sp * (cs * e1[j] + ss * e2[j]))
                };
                let ring = |psi: f64| -> Vec<f64> {
                    let inside = |phi: f64| distance(&self.on_level(&point(phi, psi)), &self.center) < self.radius;
                    let phi_max = arc_end(&inside, 0.0, 1.0).unwrap_or(PI);
                    let inner = crate::quadrature::adaptive_legendre(
                        |phi| vec![phi.sin() * guarded(&point(phi, psi))],
                        0.0,
                        phi_max,
                        tol,
                    );
                    match inner {
                        Ok(v) => v,
                        Err(e) => {
                            failure.borrow_mut().get_or_insert(e);
                            vec![0.0]
                        }
                    }
                };
                crate::quadrature::adaptive_legendre(ring, 0.0, TAU, tol * TAU)?[0]
            }
            k => return Err(Error::Unsupported(format!("cap quadrature in dimension {k}"))),
        };
        match failure.into_inner() {
            Some(e) => Err(e),
            None => Ok(value),
        }
    }

    /// `e^{beta} int_0^inf exp(-R(e^{Lambda s} xi~) + tr(Lambda) s) ds`.
    fn scaled_ray_integral(&self, xi_tilde: &[f64]) -> Result<f64> {
        let trace: f64 = self.params.rates().iter().sum();
        let exponent = |s: f64| self.beta - self.params.quadratic_form(&self.params.dilate(s, xi_tilde)) + trace * s;
        let mut end = 1.0 / self.params.rate_min();
        while exponent(end) > -60.0 {
            end *= 2.0;
        }
        Ok(crate::quadrature::adaptive_legendre(|s| vec![exponent(s).exp()], 0.0, end, 1e-13)?[0])
    }

    fn surface_weight(&self, omega: &[f64]) -> f64 {
        let k = self.dim() as f64;
        let prod: f64 = self.params.rates().iter().product();
        let quad: f64 = self.params.rates().iter().zip(omega).map(|(l, w)| l * w * w).sum();
        self.beta.powf(0.5 * k) / prod.sqrt() * quad
    }

    fn measure_quadrature(&self) -> Result<f64> {
        let integral = self.cap_integral(&|omega| {
            let xi = self.on_level(omega);
            Ok(self.surface_weight(omega) * self.scaled_ray_integral(&xi)?)
        })?;
        Ok(integral * (-self.beta).exp())
    }

    fn measure_monte_carlo(&self, budget: usize, seed: u64) -> Result<Estimate> {
        if budget == 0 || budget > MAX_MONTE_CARLO_BUDGET {
            return Err(Error::BudgetExceeded(format!("tube Monte Carlo budget {budget}")));
        }
        let k = self.dim();
        let half_k = 0.5 * k as f64;
        let prod: f64 = self.params.rates().iter().product();
        let prefactor = PI.powf(half_k) / prod.sqrt();
        let weight_scale = (-self.beta).exp() / gamma(half_k);
        let (sum, sum_sq) = (0..budget)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(seed, domain::TUBE, i as u64);
                let omega = random_direction(&mut rng, k);
                let excess: f64 = Exp1.sample(&mut rng);
                let radius_sq = self.beta + excess;
                let xi: Vec<f64> = self
                    .params
                    .rates()
                    .iter()
                    .zip(&omega)
                    .map(|(l, w)| (radius_sq / l).sqrt() * w)
                    .collect();
                if self.contains(&xi) {
                    let w = radius_sq.powf(half_k - 1.0) * weight_scale;
                    (w, w * w)
                } else {
                    (0.0, 0.0)
                }
            })
            .collect::<Vec<(f64, f64)>>()
            .iter()
            .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
        let n = budget as f64;
        let mean = sum / n;
        let var = (sum_sq / n - mean * mean).max(0.0);
        Ok(Estimate { value: prefactor * mean, std_error: prefactor * (var / n).sqrt() })
    }

    /// Averaged local magnification of the cap under `F_s`, i.e. `|Omega_s| / |Omega|`.
    pub fn slice_area_ratio(&self, s: f64) -> Result<f64> {
        let sigma = |omega: &[f64]| -> f64 {
            let quad: f64 = self.params.rates().iter().zip(omega).map(|(l, w)| l * w * w).sum();
            quad.sqrt()
        };
        let base = self.cap_integral(&|omega| Ok(sigma(omega)))?;
        let moved = self.cap_integral(&|omega| Ok(sigma(omega) * area_ratio(s, &self.on_level(omega), &self.params)))?;
        Ok(moved / base)
    }
}

pub fn tube_measure(spec: &TubeSpec, method: TubeMethod) -> Result<Estimate> {
    match method {
        TubeMethod::Quadrature => Ok(Estimate { value: spec.measure_quadrature()?, std_error: 0.0 }),
        TubeMethod::MonteCarlo { budget, seed } => spec.measure_monte_carlo(budget, seed),
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Last parameter in `direction` from `start` where `inside` still holds,
/// or `None` if the scan wraps past a half turn.
fn arc_end(inside: &dyn Fn(f64) -> bool, start: f64, direction: f64) -> Option<f64> {
    let mut prev = 0.0;
    let mut step = SCAN_STEP;
    while step <= PI {
        if !inside(start + direction * step) {
            let (mut a, mut b) = (prev, step);
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                if inside(start + direction * m) {
                    a = m;
                } else {
                    b = m;
                }
            }
            return Some(start + direction * 0.5 * (a + b));
        }
        prev = step;
        step += SCAN_STEP;
    }
    None
}

fn orthonormal_complement(c: &[f64]) -> ([f64; 3], [f64; 3]) {
    let seed = if c[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let dot: f64 = seed.iter().zip(c).map(|(a, b)| a * b).sum();
    let mut e1: [f64; 3] = std::array::from_fn(|j| seed[j] - dot * c[j]);
    let n1 = e1.iter().map(|v| v * v).sum::<f64>().sqrt();
    e1.iter_mut().for_each(|v| *v /= n1);
    let e2 = [c[1] * e1[2] - c[2] * e1[1], c[2] * e1[0] - c[0] * e1[2], c[0] * e1[1] - c[1] * e1[0]];
    (e1, e2)
}

fn random_direction<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    loop {
        let z: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 1e-12 {
            return z.into_iter().map(|v| v / n).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::erf::erfc;

    #[test]
    fn isotropic_sector_closed_form() {
        let p = SpectralParams::new(vec![1.0, 1.0]).unwrap();
        let beta: f64 = 4.0;
        let spec = TubeSpec::through(p, beta, &[1.0, 1.0], 0.5).unwrap();
        let q = tube_measure(&spec, TubeMethod::Quadrature).unwrap().value;
        let exact = 2.0 * (0.5 / (2.0 * beta.sqrt())).asin() * (-beta).exp();
        assert!((q - exact).abs() < 1e-6 * exact, "{q} vs {exact}");
    }

    #[test]
    fn isotropic_cone_closed_form() {
        let p = SpectralParams::new(vec![1.0; 3]).unwrap();
        let beta: f64 = 5.0;
        let a = 0.7;
        let spec = TubeSpec::through(p, beta, &[1.0, -0.4, 0.3], a).unwrap();
        let q = tube_measure(&spec, TubeMethod::Quadrature).unwrap().value;
        let phi = 2.0 * (a / (2.0 * beta.sqrt())).asin();
        let radial = beta.sqrt() * (-beta).exp() / 2.0 + PI.sqrt() * erfc(beta.sqrt()) / 4.0;
        let exact = TAU * (1.0 - phi.cos()) * radial;
        assert!((q - exact).abs() < 1e-6 * exact, "{q} vs {exact}");
    }

    #[test]
    fn monte_carlo_agrees_with_quadrature() {
        let p = SpectralParams::new(vec![1.0, 2.0]).unwrap();
        let spec = TubeSpec::through(p, 4.0, &[0.5, 1.0], 1.0).unwrap();
        let q = tube_measure(&spec, TubeMethod::Quadrature).unwrap().value;
        let mc = tube_measure(&spec, TubeMethod::MonteCarlo { budget: 200_000, seed: 3 }).unwrap();
        assert!((q - mc.value).abs() < 4.0 * mc.std_error, "{q} vs {mc:?}");
    }
}
