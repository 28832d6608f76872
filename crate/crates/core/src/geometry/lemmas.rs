//! Randomized checks of the kernel and geometry inequalities.
//!
//! Inequalities with explicit constants report `rhs - lhs`, which must be
//! nonnegative at every sample. Inequalities with unspecified constants
//! report the sampled quantity whose infimum must stay away from zero.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::intervals::{half_width, membership_mk, Cell};
use crate::geometry::polar::{area_ratio, polar_decompose};
use crate::mehler::{log_kernel_1d, log_kernel_localized};
use crate::model::SpectralParams;
use crate::rng::{domain, stream};

pub const LEMMA_IDS: [&str; 8] = [
    "lemma-3.1",
    "local-bound-chain",
    "lemma-4.1",
    "claim-4.3",
    "lemma-4.2a",
    "lemma-4.2b",
    "stima-t",
    "area-bound",
];

#[derive(Debug, Clone, PartialEq)]
pub struct MarginReport {
    pub lemma: String,
    pub samples: usize,
    /// Smallest margin seen, `rhs - lhs` or the sampled ratio.
    pub min_margin: f64,
    /// Sample coordinates at the minimum; meaning depends on the lemma.
    pub witness: Vec<f64>,
    /// Whether the constant is explicit, so that every margin must be `>= 0`.
    pub explicit: bool,
    /// Samples with a negative margin.
    pub violations: usize,
    /// Samples whose hypotheses degenerate (both sides zero).
    pub degenerate: usize,
}

impl MarginReport {
    pub fn holds(&self) -> bool {
        if self.explicit {
            self.violations == 0
        } else {
            self.min_margin > 0.0 && self.min_margin.is_finite()
        }
    }

    /// Relative change of the infimum against another run.
    pub fn drift(&self, other: &MarginReport) -> f64 {
        (self.min_margin - other.min_margin).abs() / self.min_margin.abs().max(other.min_margin.abs())
    }
}

/// `y*`, the root of `C1 y + C2 sqrt(y) = 1` with `C1 = lambda_max e^{lambda_max}`
/// and `C2 = e^{lambda_max}`. Every point with a nonzero dyadic kernel has
/// `(1+|xi|)^2 4^{m1} t >= y*`.
pub fn time_scale_floor(rate_max: f64) -> f64 {
    let c1 = rate_max * rate_max.exp();
    let c2 = rate_max.exp();
    let r = 2.0 / (c2 + (c2 * c2 + 4.0 * c1).sqrt());
    r * r
}

enum Sample {
    Margin(f64, Vec<f64>),
    Degenerate,
    Skipped,
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    uniform(rng, lo.ln(), hi.ln()).exp()
}

fn sign(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

fn unit_vector(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    loop {
        let z: Vec<f64> = (0..k).map(|_| crate::rng::normal(rng)).collect();
        let n = norm(&z);
        if n > 1e-9 {
            return z.into_iter().map(|v| v / n).collect();
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Point with `R = level` in the direction `omega`.
fn on_level(params: &SpectralParams, omega: &[f64], level: f64) -> Vec<f64> {
    params.rates().iter().zip(omega).map(|(l, w)| (level / l).sqrt() * w).collect()
}

/// `u_j` with `|x_j - u_j| > 1/(1+|x_j|)`, at most a few widths away.
fn global_partner(rng: &mut ChaCha8Rng, x: f64) -> f64 {
    x + sign(rng) * half_width(x) * (1.0 + 1e-9 + 3.0 * rng.random::<f64>())
}

/// `u_j` with `|x_j - u_j| <= 1/(1+|x_j|)`.
fn local_partner(rng: &mut ChaCha8Rng, x: f64) -> f64 {
    x + half_width(x) * uniform(rng, -1.0, 1.0)
}

fn rate_at(params: &SpectralParams, index: usize) -> f64 {
    params.rates()[index % params.dim()]
}

fn lemma_3_1(params: &SpectralParams, rng: &mut ChaCha8Rng, index: usize) -> Sample {
    let rate = rate_at(params, index);
    let x = uniform(rng, -5.0, 5.0);
    let u = local_partner(rng, x);
    let t = log_uniform(rng, 1e-4, 10.0);
    let c = rate / f64::max(1.0, 2.0 * rate);
    let m = t.min(1.0);
    let log_rhs = rate * x * x - 0.5 * m.ln() - c * (x - u) * (x - u) / m;
    match log_kernel_1d(rate, t, x, u) {
        Ok(log_lhs) => Sample::Margin((log_rhs - log_lhs).exp(), vec![rate, x, u, t]),
        Err(_) => Sample::Skipped,
    }
}

fn local_bound_chain(params: &SpectralParams, rng: &mut ChaCha8Rng, index: usize) -> Sample {
    let rate = rate_at(params, index);
    let x = sign(rng) * log_uniform(rng, 1e-3, 50.0);
    let u = local_partner(rng, x);
    let t = log_uniform(rng, 1e-8, 1e3);
    let a = (-rate * t).exp();
    let margin = u * (2.0 * x - u * (1.0 + a)) / (1.0 + a) + 4.0;
    Sample::Margin(margin, vec![rate, x, u, t])
}

fn lemma_4_1(params: &SpectralParams, rng: &mut ChaCha8Rng) -> Sample {
    let k = rng.random_range(1..=params.dim());
    // Half of the samples sit near the small-margin regime: t close to 1,
    // small |xi| and eta nearly equal to e^{lambda t} xi.
    let critical = rng.random::<bool>();
    let t = if critical { uniform(rng, 0.5, 1.0) } else { log_uniform(rng, 1e-4, 1.0) };
    let spread = if critical { 1.0 } else { 6.0 };
    let xi: Vec<f64> = (0..k).map(|_| uniform(rng, -spread, spread)).collect();
    let eta: Vec<f64> = xi
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            let aligned = (params.rates()[j] * t).exp() * x + 0.1 * half_width(x) * uniform(rng, -1.0, 1.0);
            if critical && (x - aligned).abs() > half_width(x) {
                aligned
            } else {
                global_partner(rng, x)
            }
        })
        .collect();
    let mut value = t * t * norm(&xi).powi(2);
    for j in 0..k {
        let d = xi[j] - (-params.rates()[j] * t).exp() * eta[j];
        value += d * d;
    }
    value *= (1.0 + norm(&xi)).powi(2);
    let mut witness = vec![k as f64, t];
    witness.extend(&xi);
    witness.extend(&eta);
    Sample::Margin(value, witness)
}

fn claim_4_3(params: &SpectralParams, rng: &mut ChaCha8Rng) -> Sample {
    let n = params.dim();
    let k = rng.random_range(1..=n);
    let log_alpha = uniform(rng, 4.0, 10.0);
    let global = params.slice(0..k).expect("nonempty slice");
    let omega = unit_vector(rng, k);
    let level = 0.5 * log_alpha * rng.random::<f64>().powf(2.0 / k as f64);
    let mut x = on_level(&global, &omega, level);
    let nu: Vec<i64> = (k..n).map(|_| rng.random_range(-3..=3)).collect();
    let cell = Cell::new(&nu).expect("valid multi-index");
    for j in 0..n - k {
        x.push(cell.centers[j] + cell.half_widths[j] * uniform(rng, -1.0, 1.0));
    }
    let u: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(j, &v)| if j < k { global_partner(rng, v) } else { local_partner(rng, v) })
        .collect();
    if !membership_mk(&x, &u, k) {
        return Sample::Skipped;
    }
    let t = log_uniform(rng, 1e-5, 10.0);
    match log_kernel_localized(params, k, t, &x, &u) {
        Ok(log_k) => {
            let mut witness = vec![k as f64, log_alpha, t];
            witness.extend(&x);
            witness.extend(&u);
            Sample::Margin((log_alpha - log_k).exp(), witness)
        }
        Err(_) => Sample::Skipped,
    }
}

fn lemma_4_2(params: &SpectralParams, rng: &mut ChaCha8Rng, part_b: bool) -> Sample {
    let k = params.dim();
    let beta = uniform(rng, 2.0, 12.0);
    let xi0 = on_level(params, &unit_vector(rng, k), beta * uniform(rng, 0.5 + 1e-9, 3.0));
    let low = if part_b { 1.0 } else { 0.05 };
    let xi1 = if rng.random::<f64>() < 0.5 {
        let spread = log_uniform(rng, 1e-6, 1.0);
        let dir = unit_vector(rng, k);
        let p: Vec<f64> = xi0.iter().zip(&dir).map(|(a, d)| a + spread * d).collect();
        if params.quadratic_form(&p) < low * beta {
            return Sample::Skipped;
        }
        p
    } else {
        on_level(params, &unit_vector(rng, k), beta * uniform(rng, low, 3.0))
    };
    let (p0, p1) = match (polar_decompose(&xi0, beta, params), polar_decompose(&xi1, beta, params)) {
        (Ok(a), Ok(b)) => (a, b),
        _ => return Sample::Skipped,
    };
    let lhs = distance(&xi0, &xi1);
    let rhs = if part_b {
        beta.sqrt() * (p0.s - p1.s).abs()
    } else {
        distance(&p0.xi_tilde, &p1.xi_tilde)
    };
    if rhs < 1e-12 {
        return Sample::Degenerate;
    }
    let mut witness = vec![beta];
    witness.extend(&xi0);
    witness.extend(&xi1);
    Sample::Margin(lhs / rhs, witness)
}

fn stima_t(params: &SpectralParams, rng: &mut ChaCha8Rng) -> Sample {
    let k = params.dim();
    let m1 = rng.random_range(0..=3);
    let t = log_uniform(rng, 1e-6, 1.0);
    let xi: Vec<f64> = (0..k).map(|_| uniform(rng, -8.0, 8.0)).collect();
    let reach = 2f64.powi(m1) * t.sqrt();
    for _ in 0..1000 {
        let dir = unit_vector(rng, k);
        let r = reach * rng.random::<f64>().powf(1.0 / k as f64);
        let eta: Vec<f64> = (0..k)
            .map(|j| (params.rates()[j] * t).exp() * (xi[j] + r * dir[j]))
            .collect();
        if membership_mk(&xi, &eta, k) {
            let y = (1.0 + norm(&xi)).powi(2) * 4f64.powi(m1) * t;
            let mut witness = vec![m1 as f64, t, y];
            witness.extend(&xi);
            witness.extend(&eta);
            return Sample::Margin(y - time_scale_floor(params.rate_max()), witness);
        }
    }
    Sample::Skipped
}

fn area_bound(params: &SpectralParams, rng: &mut ChaCha8Rng) -> Sample {
    let k = params.dim();
    let beta = uniform(rng, 1.0, 10.0);
    let xi = on_level(params, &unit_vector(rng, k), beta);
    let s = uniform(rng, 0.0, 3.0);
    let ratio = area_ratio(s, &xi, params);
    let upper = ((k as f64 - 1.0) * params.rate_max() * s).exp();
    let margin = f64::min(ratio - 1.0, upper - ratio);
    let mut witness = vec![beta, s, ratio];
    witness.extend(&xi);
    Sample::Margin(margin, witness)
}

/// Runs the check `lemma_id` on `budget` samples drawn from its hypotheses,
/// with rates taken from `params`.
pub fn verify_inequality(lemma_id: &str, budget: usize, seed: u64, params: &SpectralParams) -> Result<MarginReport> {
    let position = LEMMA_IDS
        .iter()
        .position(|id| *id == lemma_id)
        .ok_or_else(|| Error::UnknownLemma(lemma_id.to_string()))?;
    let explicit = matches!(lemma_id, "local-bound-chain" | "stima-t" | "area-bound");
    let draw = |index: usize| -> Sample {
        let mut rng = stream(seed, domain::GEOMETRY, ((position as u64) << 40) | index as u64);
        match lemma_id {
            "lemma-3.1" => lemma_3_1(params, &mut rng, index),
            "local-bound-chain" => local_bound_chain(params, &mut rng, index),
            "lemma-4.1" => lemma_4_1(params, &mut rng),
            "claim-4.3" => claim_4_3(params, &mut rng),
            "lemma-4.2a" => lemma_4_2(params, &mut rng, false),
            "lemma-4.2b" => lemma_4_2(params, &mut rng, true),
            "stima-t" => stima_t(params, &mut rng),
            _ => area_bound(params, &mut rng),
        }
    };
    #[derive(Default)]
    struct Tally {
        samples: usize,
        min: Option<(f64, Vec<f64>, usize)>,
        violations: usize,
        degenerate: usize,
    }
    let merge = |mut a: Tally, b: Tally| {
        a.samples += b.samples;
        a.violations += b.violations;
        a.degenerate += b.degenerate;
        a.min = match (a.min.take(), b.min) {
            (Some(x), Some(y)) => Some(if (y.0, y.2) < (x.0, x.2) { y } else { x }),
            (x, y) => x.or(y),
        };
        a
    };
    let tally = (0..budget)
        .into_par_iter()
        .map(|i| {
            let mut t = Tally::default();
            match draw(i) {
                Sample::Margin(m, w) => {
                    t.samples = 1;
                    if m < 0.0 || m.is_nan() {
                        t.violations = 1;
                    }
                    t.min = Some((m, w, i));
                }
                Sample::Degenerate => {
                    t.samples = 1;
                    t.degenerate = 1;
                }
                Sample::Skipped => {}
            }
            t
        })
        .reduce(Tally::default, merge);
    let (min_margin, witness) = match tally.min {
        Some((m, w, _)) => (m, w),
        None if tally.degenerate > 0 => (0.0, Vec::new()),
        None => return Err(Error::BudgetExceeded(format!("no admissible samples for {lemma_id}"))),
    };
    Ok(MarginReport {
        lemma: lemma_id.to_string(),
        samples: tally.samples,
        min_margin,
        witness,
        explicit,
        violations: tally.violations,
        degenerate: tally.degenerate,
    })
}

/// Margin of a single degenerate pair for the distance comparison, which is
/// zero when both points coincide.
pub fn coincident_margin(xi: &[f64], beta: f64, params: &SpectralParams) -> Result<f64> {
    let p = polar_decompose(xi, beta, params)?;
    Ok(distance(xi, xi) - distance(&p.xi_tilde, &p.xi_tilde))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> SpectralParams {
        SpectralParams::new(vec![1.0, 2.0]).unwrap()
    }

    #[test]
    fn unknown_lemma() {
        assert!(matches!(verify_inequality("lemma-9", 10, 0, &params()), Err(Error::UnknownLemma(_))));
    }

    #[test]
    fn explicit_checks_hold() {
        for id in ["local-bound-chain", "stima-t", "area-bound"] {
            let r = verify_inequality(id, 20_000, 1, &params()).unwrap();
            assert!(r.holds() && r.explicit, "{r:?}");
        }
    }

    #[test]
    fn empirical_infima_positive() {
        for id in ["lemma-3.1", "lemma-4.1", "claim-4.3", "lemma-4.2a", "lemma-4.2b"] {
            let r = verify_inequality(id, 20_000, 1, &params()).unwrap();
            assert!(r.holds() && !r.explicit, "{r:?}");
        }
    }

    #[test]
    fn coincident_points_have_zero_margin() {
        assert_eq!(coincident_margin(&[1.0, 1.0], 2.0, &params()).unwrap(), 0.0);
    }

    #[test]
    fn floor_root() {
        let y = time_scale_floor(2.0);
        let c = 2f64.exp();
        assert!((2.0 * c * y + c * y.sqrt() - 1.0).abs() < 1e-14);
    }
}
