//! Dyadic shells `S^{m1,m2}_t` of `R^n x R^n` and the kernels attached to them.

use crate::error::{check_dim, Result};
use crate::geometry::intervals::{membership_mk, LocalizationGrid};
use crate::geometry::lemmas::time_scale_floor;
use crate::model::SpectralParams;

/// Shell index of a distance `d` at scale `sqrt(t)`: `0` when `d <= sqrt(t)`,
/// otherwise the `m` with `2^{m-1} sqrt(t) < d <= 2^m sqrt(t)`.
pub fn shell_index(d: f64, t: f64) -> u32 {
    let scale = t.sqrt();
    if d <= scale {
        return 0;
    }
    let mut m = (d / scale).log2().ceil().max(1.0) as u32;
    while m > 1 && d <= 2f64.powi(m as i32 - 1) * scale {
        m -= 1;
    }
    while d > 2f64.powi(m as i32) * scale {
        m += 1;
    }
    m
}

/// Whether a squared distance lies in shell `m` at time `t`. Agrees with
/// `shell_index(d, t) == m` without taking logarithms.
pub fn in_shell(d2: f64, t: f64, m: u32) -> bool {
    let upper = 4f64.powi(m as i32) * t;
    if m == 0 {
        d2 <= upper
    } else {
        d2 > 0.25 * upper && d2 <= upper
    }
}

/// `(|xi - e^{-Lambda t} eta|, |x_loc - u_loc|)` for the split after `k`.
pub fn shell_distances(x: &[f64], u: &[f64], t: f64, k: usize, params: &SpectralParams) -> (f64, f64) {
    let mut global = 0.0;
    let mut local = 0.0;
    for (j, ((&l, &a), &b)) in params.rates().iter().zip(x).zip(u).enumerate() {
        if j < k {
            let d = a - (-l * t).exp() * b;
            global += d * d;
        } else {
            local += (a - b) * (a - b);
        }
    }
    (global.sqrt(), local.sqrt())
}

/// The pair `(m1, m2)` whose shell contains `(x, u)` at time `t`.
pub fn smm_shell(x: &[f64], u: &[f64], t: f64, k: usize, params: &SpectralParams) -> (u32, u32) {
    let (g, l) = shell_distances(x, u, t, k, params);
    (shell_index(g, t), shell_index(l, t))
}

pub fn smm_membership(x: &[f64], u: &[f64], t: f64, m1: u32, m2: u32, k: usize, params: &SpectralParams) -> bool {
    smm_shell(x, u, t, k, params) == (m1, m2)
}

/// `c = min(lambda_min, 1) / 8`.
pub fn default_decay(params: &SpectralParams) -> f64 {
    params.rate_min().min(1.0) / 8.0
}

/// `log(exp(R(xi)) t^{-n/2} exp(-c 4^{m1} - c 4^{m2}))`.
pub fn smm_log_prefactor(x: &[f64], t: f64, m1: u32, m2: u32, k: usize, params: &SpectralParams, c: f64) -> f64 {
    let n = params.dim() as f64;
    let level: f64 = params.rates()[..k].iter().zip(x).map(|(l, v)| l * v * v).sum();
    level - 0.5 * n * t.ln() - c * (4f64.powi(m1 as i32) + 4f64.powi(m2 as i32))
}

/// The dyadic kernel, including the indicators of `M_k`, `x_loc in C_nu`
/// and `u_loc in 3 C_nu`.
pub fn smm_kernel(
    x: &[f64],
    u: &[f64],
    t: f64,
    m1: u32,
    m2: u32,
    grid: &LocalizationGrid,
    params: &SpectralParams,
    c: f64,
) -> Result<f64> {
    check_dim(params.dim(), x.len())?;
    check_dim(params.dim(), u.len())?;
    let k = grid.k;
    let inside = membership_mk(x, u, k)
        && grid.cell.contains(&x[k..])
        && grid.dilated.contains(&u[k..])
        && smm_membership(x, u, t, m1, m2, k, params);
    Ok(if inside { smm_log_prefactor(x, t, m1, m2, k, params, c).exp() } else { 0.0 })
}

/// Smallest admissible time `y* / ((1+|xi|)^2 4^{m1})` for a nonzero dyadic kernel.
pub fn epsilon_bound(xi: &[f64], m1: u32, rate_max: f64) -> f64 {
    let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    time_scale_floor(rate_max) / ((1.0 + norm).powi(2) * 4f64.powi(m1 as i32))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squared_shell_test_matches_index() {
        for t in [1e-3, 0.1, 0.7, 1.0] {
            for i in 0..400 {
                let d = 0.01 * i as f64;
                let m = shell_index(d, t);
                assert!(in_shell(d * d, t, m), "d={d} t={t} m={m}");
                assert!(!in_shell(d * d, t, m + 1));
            }
        }
    }

    #[test]
    fn shell_edges() {
        assert_eq!(shell_index(0.0, 1.0), 0);
        assert_eq!(shell_index(1.0, 1.0), 0);
        assert_eq!(shell_index(1.0 + 1e-12, 1.0), 1);
        assert_eq!(shell_index(2.0, 1.0), 1);
        assert_eq!(shell_index(2.0 + 1e-12, 1.0), 2);
        assert_eq!(shell_index(8.0, 0.25), 4);
    }

    #[test]
    fn epsilon_scaling() {
        let e0 = epsilon_bound(&[3.0, 4.0], 0, 2.0);
        let e1 = epsilon_bound(&[3.0, 4.0], 1, 2.0);
        assert!((e0 / e1 - 4.0).abs() < 1e-12);
        assert!(e0 < 1.0);
    }

    #[test]
    fn coincident_points_sit_in_the_first_shell() {
        let p = SpectralParams::new(vec![1.0, 2.0]).unwrap();
        let t = 0.3;
        let x = [0.5, 0.1];
        let u = [0.5 * (1.0f64 * t).exp(), 0.1];
        assert!(smm_membership(&x, &u, t, 0, 0, 1, &p));
    }
}
