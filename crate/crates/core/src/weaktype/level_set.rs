//! Monte Carlo estimates of `gamma_inf{x : H_* f(x) > alpha}`.

use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::mehler::KernelSpec;
use crate::model::OUModel;
use crate::rng::{domain, normal, stream};
use crate::semigroup::TGrid;
use crate::weaktype::heat::HeatOperator;
use crate::weaktype::test_function::TestFunction;

/// Proposal covariance is this multiple of `Q_inf`.
pub const PROPOSAL_WIDENING: f64 = 2.0;
pub const MAX_SCAN_BUDGET: usize = 100_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetReport {
    pub alphas: Vec<f64>,
    pub measures: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub quotients: Vec<f64>,
    /// Least-squares slope of `log(quotient)` against `log(alpha)`.
    pub slope: f64,
    /// Mass of `R > 2 log(alpha_max / ||f||_1)`, included in every measure.
    pub tail_mass: f64,
    pub samples: usize,
}

impl LevelSetReport {
    pub fn is_monotone(&self) -> bool {
        self.measures.windows(2).all(|w| w[1] <= w[0])
    }

    pub fn max_quotient(&self) -> f64 {
        self.quotients.iter().copied().fold(0.0, f64::max)
    }
}

/// Slope of the least-squares line through `(log x, log y)` over positive `y`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).filter(|(_, y)| **y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Weighted draws from `N(0, rho Q_inf)` restricted to `R <= radius`,
/// paired with the maximal function at each draw.
pub fn sample_maximal(
    heat: &HeatOperator,
    f: &TestFunction,
    grid: &TGrid,
    radius: f64,
    budget: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    let rates = heat.rates().rates().to_vec();
    let n = rates.len();
    (0..budget)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, domain::LEVEL_SET, i as u64);
            let x: Vec<f64> = rates.iter().map(|l| (PROPOSAL_WIDENING / (2.0 * l)).sqrt() * normal(&mut rng)).collect();
            let level: f64 = rates.iter().zip(&x).map(|(l, v)| l * v * v).sum();
            if level > radius {
                return Ok((0.0, 0.0));
            }
            let weight = PROPOSAL_WIDENING.powf(0.5 * n as f64) * (-level * (1.0 - 1.0 / PROPOSAL_WIDENING)).exp();
            Ok((weight, heat.maximal(f, &x, grid)?.value))
        })
        .collect()
}

fn scan(heat: &HeatOperator, f: &TestFunction, alphas: &[f64], budget: usize, seed: u64) -> Result<LevelSetReport> {
    if budget == 0 || budget > MAX_SCAN_BUDGET {
        return Err(Error::BudgetExceeded(format!("level-set budget {budget}")));
    }
    if alphas.is_empty() || alphas.iter().any(|a| !(*a > 0.0)) || alphas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("alpha grid must be positive and increasing".into()));
    }
    let relative_max = *alphas.last().expect("nonempty") / f.l1_norm();
    let radius = 2.0 * relative_max.max(std::f64::consts::E).ln();
    let n = heat.dim() as f64;
    let tail_mass = ChiSquared::new(n).expect("positive degrees of freedom").sf(2.0 * radius);
    let draws = sample_maximal(heat, f, &TGrid::standard(), radius, budget, seed)?;
    let count = budget as f64;
    let mut measures = Vec::with_capacity(alphas.len());
    let mut std_errors = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let (sum, sum_sq) = draws
            .iter()
            .filter(|(_, h)| *h > alpha)
            .fold((0.0, 0.0), |(s, q), (w, _)| (s + w, q + w * w));
        let mean = sum / count;
        measures.push(mean + tail_mass);
        std_errors.push(((sum_sq / count - mean * mean).max(0.0) / count).sqrt());
    }
    let quotients: Vec<f64> = alphas.iter().zip(&measures).map(|(a, m)| a * m).collect();
    let slope = log_log_slope(alphas, &quotients);
    Ok(LevelSetReport { alphas: alphas.to_vec(), measures, std_errors, quotients, slope, tail_mass, samples: budget })
}

/// Level sets of the maximal function of the semigroup of a canonical model.
pub fn weak_type_scan(model: &OUModel, f: &TestFunction, alphas: &[f64], budget: usize, seed: u64) -> Result<LevelSetReport> {
    scan(&HeatOperator::semigroup(model)?, f, alphas, budget, seed)
}

/// Level sets of the maximal function of the kernel with exponent `kappa`.
pub fn kappa_weak_type_scan(
    spec: &KernelSpec,
    f: &TestFunction,
    alphas: &[f64],
    budget: usize,
    seed: u64,
) -> Result<LevelSetReport> {
    scan(&HeatOperator::for_kernel(spec)?, f, alphas, budget, seed)
}

/// `count` log-spaced levels on `[lo, hi]`.
pub fn alpha_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![lo];
    }
    (0..count).map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (count - 1) as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SpectralParams;
    use crate::weaktype::test_function::Reference;

    #[test]
    fn doubling_the_function_shifts_levels_exactly() {
        let rates = SpectralParams::new(vec![1.0]).unwrap();
        let model = OUModel::diagonal(rates.rates()).unwrap();
        let f = TestFunction::atoms(Reference::invariant(rates), vec![vec![2.0]], vec![1.0]).unwrap();
        let alphas = alpha_grid(10.0, 1000.0, 5);
        let doubled: Vec<f64> = alphas.iter().map(|a| 2.0 * a).collect();
        let a = weak_type_scan(&model, &f, &alphas, 4000, 5).unwrap();
        let b = weak_type_scan(&model, &f.scaled(2.0), &doubled, 4000, 5).unwrap();
        assert_eq!(a.measures, b.measures);
        assert!(a.is_monotone());
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [1.0, 10.0, 100.0];
        let ys = [2.0, 20.0, 200.0];
        assert!((log_log_slope(&xs, &ys) - 1.0).abs() < 1e-12);
    }
}
