//! Gauss rules computed by Newton iteration on the three-term recurrences,
//! an adaptive Gauss–Legendre integrator and tensor-product helpers.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Nodes and weights of a one-dimensional Gauss rule.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Gauss–Legendre rule on `[-1, 1]`.
    pub fn legendre(order: usize) -> Self {
        assert!(order >= 1, "rule order must be positive");
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let m = order.div_ceil(2);
        let nf = order as f64;
        for i in 0..m {
            let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_eval(order, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() <= 1e-15 {
                    break;
                }
            }
            let (_, d) = legendre_eval(order, z);
            dp = if d != 0.0 { d } else { dp };
            nodes[i] = -z;
            nodes[order - 1 - i] = z;
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Gauss–Legendre rule mapped to `[lo, hi]`.
    pub fn legendre_on(order: usize, lo: f64, hi: f64) -> Self {
        Self::legendre(order).mapped(lo, hi)
    }

    fn mapped(mut self, lo: f64, hi: f64) -> Self {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        for (x, w) in self.nodes.iter_mut().zip(self.weights.iter_mut()) {
            *x = mid + half * *x;
            *w *= half;
        }
        self
    }

    /// Gauss–Hermite rule for the weight `exp(-x^2)`.
    pub fn hermite(order: usize) -> Self {
        assert!(order >= 1, "rule order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        let nf = n as f64;
        let mut z = 0.0f64;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut dp = 0.0;
            for _ in 0..200 {
                let (p, d) = hermite_eval(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() <= 1e-14 * (1.0 + z.abs()) {
                    break;
                }
            }
            let (_, d) = hermite_eval(n, z);
            if d != 0.0 {
                dp = d;
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (dp * dp);
            weights[n - 1 - i] = weights[i];
        }
        nodes.reverse();
        weights.reverse();
        Self { nodes, weights }
    }

    /// Rule for the standard normal law: `sum w_i f(x_i) ~ E f(Z)`.
    pub fn standard_normal(order: usize) -> Self {
        let mut rule = Self::hermite(order);
        let scale = 2f64.sqrt();
        let norm = PI.sqrt();
        for (x, w) in rule.nodes.iter_mut().zip(rule.weights.iter_mut()) {
            *x *= scale;
            *w /= norm;
        }
        rule
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

fn legendre_eval(n: usize, z: f64) -> (f64, f64) {
    let (mut p1, mut p2) = (1.0, 0.0);
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
    }
    let nf = n as f64;
    (p1, nf * (z * p1 - p2) / (z * z - 1.0))
}

/// Orthonormal Hermite recurrence; returns the value and derivative
/// of the normalized polynomial of degree `n`.
fn hermite_eval(n: usize, z: f64) -> (f64, f64) {
    let mut p1 = PI.powf(-0.25);
    let mut p2 = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
    }
    (p1, (2.0 * n as f64).sqrt() * p2)
}

/// Iterates over the tensor grid of `dim` copies of a rule, yielding the
/// multi-index of each node.
pub fn tensor_indices(order: usize, dim: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = order.checked_pow(dim as u32).expect("tensor grid too large");
    (0..total).map(move |mut flat| {
        let mut idx = vec![0; dim];
        for slot in idx.iter_mut() {
            *slot = flat % order;
            flat /= order;
        }
        idx
    })
}

const PANEL_ORDER: usize = 15;
const MAX_PANELS: usize = 1 << 16;

/// Adaptive Gauss–Legendre quadrature of a vector-valued integrand on
/// `[lo, hi]`. Each component must meet `tolerance` in absolute terms.
pub fn adaptive_legendre<F>(f: F, lo: f64, hi: f64, tolerance: f64) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Vec<f64>,
{
    let base = GaussRule::legendre(PANEL_ORDER);
    let panel = |a: f64, b: f64| -> Vec<f64> {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc: Vec<f64> = Vec::new();
        for (&x, &w) in base.nodes.iter().zip(&base.weights) {
            let v = f(mid + half * x);
            if acc.is_empty() {
                acc = vec![0.0; v.len()];
            }
            for (a, vi) in acc.iter_mut().zip(v) {
                *a += w * half * vi;
            }
        }
        acc
    };
    let mut total: Vec<f64> = Vec::new();
    let mut stack = vec![(lo, hi, panel(lo, hi), 0u32)];
    let mut panels = 0usize;
    let mut worst: f64 = 0.0;
    while let Some((a, b, coarse, depth)) = stack.pop() {
        let mid = 0.5 * (a + b);
        let left = panel(a, mid);
        let right = panel(mid, b);
        let err = coarse
            .iter()
            .zip(left.iter().zip(&right))
            .map(|(c, (l, r))| (c - l - r).abs())
            .fold(0.0, f64::max);
        let share = tolerance * (b - a) / (hi - lo);
        panels += 1;
        if err <= share.max(f64::EPSILON * 4.0) || depth >= 50 || panels > MAX_PANELS {
            if err > share.max(f64::EPSILON * 4.0) {
                worst = worst.max(err);
            }
            if total.is_empty() {
                total = vec![0.0; left.len()];
            }
            for (t, (l, r)) in total.iter_mut().zip(left.iter().zip(&right)) {
                *t += l + r;
            }
        } else {
            stack.push((a, mid, left, depth + 1));
            stack.push((mid, b, right, depth + 1));
        }
    }
    if worst > tolerance {
        return Err(Error::QuadratureFailure { tolerance, estimate: worst });
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let rule = GaussRule::legendre(8);
        for p in 0..16 {
            let exact = if p % 2 == 0 { 2.0 / (p as f64 + 1.0) } else { 0.0 };
            let got = rule.integrate(|x| x.powi(p));
            assert!((got - exact).abs() < 1e-14, "degree {p}: {got} vs {exact}");
        }
    }

    #[test]
    fn hermite_reproduces_gaussian_moments() {
        for order in [1usize, 2, 5, 16, 64, 128] {
            let rule = GaussRule::standard_normal(order);
            let mut double_factorial = 1.0;
            for p in (0..(2 * order).min(40)).step_by(2) {
                if p > 0 {
                    double_factorial *= (p - 1) as f64;
                }
                let got = rule.integrate(|x| x.powi(p as i32));
                assert!(
                    (got - double_factorial).abs() <= 1e-11 * double_factorial,
                    "order {order} moment {p}: {got} vs {double_factorial}"
                );
            }
        }
    }

    #[test]
    fn hermite_nodes_sorted_and_weights_positive() {
        let rule = GaussRule::hermite(64);
        assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(rule.weights.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let v = adaptive_legendre(|x| vec![(-(x * x) * 400.0).exp(), x.sin()], -1.0, 2.0, 1e-13).unwrap();
        assert!((v[0] - (PI / 400.0).sqrt()).abs() < 1e-12);
        assert!((v[1] - (1f64.cos() - 2f64.cos())).abs() < 1e-12);
    }

    #[test]
    fn tensor_indices_enumerate_grid() {
        let all: Vec<_> = tensor_indices(3, 2).collect();
        assert_eq!(all.len(), 9);
        assert_eq!(all[4], vec![1, 1]);
    }
}
