//! Covering of the level set of the dyadic maximal function by forbidden
//! zones, on a finite grid of the annulus times a local cell.

use rand::Rng;
use rayon::prelude::*;
use statrs::function::erf::erfc;
use std::f64::consts::PI;

use crate::error::{check_dim, Error, Result};
use crate::geometry::intervals::{membership_mk, Cell, LocalizationGrid};
use crate::geometry::polar::polar_decompose;
use crate::geometry::tube::{tube_measure, TubeMethod, TubeSpec};
use crate::model::SpectralParams;
use crate::quadrature::tensor_indices;
use crate::rng::{domain, stream};
use crate::roots::golden_max;
use crate::weaktype::dyadic::{default_decay, epsilon_bound, in_shell, shell_distances, smm_log_prefactor};
use crate::weaktype::test_function::{DiscreteMeasure, Reference, TestFunction};

pub const ITERATION_GUARD: usize = 1_000_000;
/// Slack on `s >= 0` when testing zone membership.
const DILATION_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ForbiddenZoneConfig {
    pub params: SpectralParams,
    pub k: usize,
    pub nu: Vec<i64>,
    pub m1: u32,
    pub m2: u32,
    /// The constant `M` in `A = 2 e^{lambda_max} sqrt(M)`, `B = 2 sqrt(M)`.
    pub m_const: f64,
    /// Replace the values derived from `M`.
    pub a_override: Option<f64>,
    pub b_override: Option<f64>,
    pub c: f64,
    pub global_resolution: usize,
    pub local_resolution: usize,
    pub time_points: usize,
}

impl ForbiddenZoneConfig {
    pub fn new(params: SpectralParams, k: usize, nu: Vec<i64>, m1: u32, m2: u32) -> Result<Self> {
        let n = params.dim();
        if k == 0 || k > 3 || k > n || n - k > 1 {
            return Err(Error::Unsupported(format!("recursion needs 1 <= k <= 3 and n - k <= 1, got n = {n}, k = {k}")));
        }
        check_dim(n - k, nu.len())?;
        let c = default_decay(&params);
        Ok(Self { params, k, nu, m1, m2, m_const: 2.0, a_override: None, b_override: None, c, global_resolution: 200, local_resolution: 20, time_points: 40 })
    }

    pub fn a_const(&self) -> f64 {
        self.a_override.unwrap_or_else(|| 2.0 * self.params.rate_max().exp() * self.m_const.sqrt())
    }

    pub fn b_const(&self) -> f64 {
        self.b_override.unwrap_or_else(|| 2.0 * self.m_const.sqrt())
    }

    pub fn global_params(&self) -> SpectralParams {
        self.params.slice(0..self.k).expect("k >= 1")
    }

    pub fn localization(&self) -> LocalizationGrid {
        LocalizationGrid::new(self.params.dim(), self.k, &self.nu).expect("validated in new")
    }

    /// Smallest `log(alpha)` with `lambda_min log(alpha) > k lambda_max`.
    pub fn log_alpha_threshold(&self) -> f64 {
        self.k as f64 * self.params.rate_max() / self.params.rate_min()
    }

    pub fn doubled(&self) -> Self {
        Self {
            global_resolution: 2 * self.global_resolution,
            local_resolution: 2 * self.local_resolution,
            time_points: 2 * self.time_points,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub x: Vec<f64>,
    /// `R(xi)` of the global part.
    pub level: f64,
    /// `max_t` of the dyadic average over `[epsilon, 1]`.
    pub value: f64,
    pub t_star: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelField {
    pub points: Vec<GridPoint>,
    /// Largest grid step over all axes.
    pub spacing: f64,
}

/// Cell-centered grid of `[-half, half]` with `count` points.
fn axis(half: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| -half + (i as f64 + 0.5) * 2.0 * half / count as f64).collect()
}

fn product_grid(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    if axes.is_empty() {
        return vec![Vec::new()];
    }
    let count = axes[0].len();
    tensor_indices(count, axes.len()).map(|idx| idx.iter().enumerate().map(|(j, &i)| axes[j][i]).collect()).collect()
}

/// Grid points of `E x C_nu` for the level `alpha`.
pub fn annulus_grid(config: &ForbiddenZoneConfig, alpha: f64) -> Result<(Vec<Vec<f64>>, f64)> {
    let beta = alpha.ln();
    let threshold = config.log_alpha_threshold();
    if !(beta > threshold) {
        return Err(Error::AlphaTooSmall { alpha, threshold: threshold.exp() });
    }
    let global = config.global_params();
    let global_axes: Vec<Vec<f64>> =
        global.rates().iter().map(|l| axis((2.0 * beta / l).sqrt(), config.global_resolution)).collect();
    let mut spacing = global_axes.iter().map(|a| a[1] - a[0]).fold(0.0, f64::max);
    let cell = Cell::new(&config.nu)?;
    let local_axes: Vec<Vec<f64>> = (0..cell.dim())
        .map(|j| {
            let h = cell.half_widths[j];
            axis(h, config.local_resolution).into_iter().map(|v| cell.centers[j] + v).collect()
        })
        .collect();
    for a in &local_axes {
        spacing = spacing.max(a.get(1).map_or(0.0, |b| b - a[0]));
    }
    let locals = product_grid(&local_axes);
    let mut points = Vec::new();
    for xi in product_grid(&global_axes) {
        let r = global.quadratic_form(&xi);
        if r < 0.5 * beta || r > 2.0 * beta {
            continue;
        }
        for loc in &locals {
            let mut x = xi.clone();
            x.extend(loc);
            points.push(x);
        }
    }
    if points.is_empty() {
        return Err(Error::GridTooCoarse { index: 0 });
    }
    Ok((points, spacing))
}

/// The dyadic maximal average at each point.
pub fn level_field_on(config: &ForbiddenZoneConfig, measure: &DiscreteMeasure, points: Vec<Vec<f64>>, spacing: f64) -> LevelField {
    let k = config.k;
    let grid = config.localization();
    let rate_max = config.params.rate_max();
    let reach = 2f64.powi(config.m2 as i32);
    let evaluated = points
        .into_par_iter()
        .map(|x| {
            let level = config.global_params().quadratic_form(&x[..k]);
            let epsilon = epsilon_bound(&x[..k], config.m1, rate_max);
            let mut best = GridPoint { x: Vec::new(), level, value: 0.0, t_star: 1.0, epsilon };
            if epsilon > 1.0 {
                best.x = x;
                return best;
            }
            let candidates: Vec<(&[f64], f64)> = measure
                .iter()
                .filter(|(u, _)| {
                    membership_mk(&x, u, k) && grid.dilated.contains(&u[k..]) && {
                        let d: f64 = x[k..].iter().zip(&u[k..]).map(|(a, b)| (a - b) * (a - b)).sum();
                        d.sqrt() <= reach
                    }
                })
                .collect();
            if !candidates.is_empty() {
                let steps = config.time_points.max(2);
                for i in 0..steps {
                    let t = (epsilon.ln() * (1.0 - i as f64 / (steps - 1) as f64)).exp();
                    let decays: Vec<f64> = config.params.rates()[..k].iter().map(|l| (-l * t).exp()).collect();
                    let mass: f64 = candidates
                        .iter()
                        .filter(|(u, _)| {
                            let global: f64 = decays.iter().zip(&x[..k]).zip(&u[..k]).map(|((e, a), b)| (a - e * b).powi(2)).sum();
                            let local: f64 = x[k..].iter().zip(&u[k..]).map(|(a, b)| (a - b).powi(2)).sum();
                            in_shell(global, t, config.m1) && in_shell(local, t, config.m2)
                        })
                        .map(|(_, w)| w)
                        .sum();
                    if mass > 0.0 {
                        let value = smm_log_prefactor(&x, t, config.m1, config.m2, k, &config.params, config.c).exp() * mass;
                        if value > best.value {
                            best.value = value;
                            best.t_star = t;
                        }
                    }
                }
            }
            best.x = x;
            best
        })
        .collect();
    LevelField { points: evaluated, spacing }
}

pub fn level_field(config: &ForbiddenZoneConfig, measure: &DiscreteMeasure, alpha: f64) -> Result<LevelField> {
    let (points, spacing) = annulus_grid(config, alpha)?;
    Ok(level_field_on(config, measure, points, spacing))
}

/// `B = {(eta, u_loc) : |xi - e^{-Lambda t} eta| <= r_glob, |x_loc - u_loc| <= r_loc, u_loc in 3 C_nu}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForbiddenBall {
    pub xi: Vec<f64>,
    pub t: f64,
    pub global_radius: f64,
    pub x_loc: Vec<f64>,
    pub local_radius: f64,
}

/// `Z = {(e^{Lambda s} eta, u_loc) : s >= 0, R(eta) = R(xi), |eta - xi| < a, |u_loc - x_loc| < b, u_loc in 3 C_nu}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForbiddenZone {
    pub xi: Vec<f64>,
    pub level: f64,
    pub cap_radius: f64,
    pub x_loc: Vec<f64>,
    pub local_radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub x: Vec<f64>,
    pub t: f64,
    pub value: f64,
    pub ball: ForbiddenBall,
    pub zone: ForbiddenZone,
}

impl ForbiddenBall {
    pub fn contains(&self, u: &[f64], params: &SpectralParams, dilated: &Cell) -> bool {
        let k = self.xi.len();
        let (g, l) = shell_distances(&[self.xi.as_slice(), self.x_loc.as_slice()].concat(), u, self.t, k, params);
        g <= self.global_radius && l <= self.local_radius && dilated.contains(&u[k..])
    }

    fn global_centre(&self, params: &SpectralParams) -> Vec<f64> {
        params.dilate(self.t, &self.xi)
    }

    /// Whether two balls are disjoint: exactly in the global variable, and
    /// conservatively (interval or ball test) in the local one.
    pub fn disjoint_from(&self, other: &ForbiddenBall, global: &SpectralParams, dilated: &Cell) -> bool {
        global_ellipsoids_disjoint(self, other, global) || local_parts_disjoint(self, other, dilated)
    }
}

fn global_ellipsoids_disjoint(a: &ForbiddenBall, b: &ForbiddenBall, global: &SpectralParams) -> bool {
    let (ca, cb) = (a.global_centre(global), b.global_centre(global));
    if global.dim() == 1 {
        let half_a = (global.rates()[0] * a.t).exp() * a.global_radius;
        let half_b = (global.rates()[0] * b.t).exp() * b.global_radius;
        return (ca[0] - cb[0]).abs() > half_a + half_b;
    }
    let wa: Vec<f64> = global.rates().iter().map(|l| (-2.0 * l * a.t).exp() / (a.global_radius * a.global_radius)).collect();
    let wb: Vec<f64> = global.rates().iter().map(|l| (-2.0 * l * b.t).exp() / (b.global_radius * b.global_radius)).collect();
    let dual = |mu: f64| -> f64 {
        let mut total = -1.0;
        for j in 0..global.dim() {
            let denom = mu * wa[j] + (1.0 - mu) * wb[j];
            total += mu * (1.0 - mu) * wa[j] * wb[j] * (ca[j] - cb[j]).powi(2) / denom;
        }
        total
    };
    golden_max(dual, 0.0, 1.0).1 > 0.0
}

fn local_parts_disjoint(a: &ForbiddenBall, b: &ForbiddenBall, dilated: &Cell) -> bool {
    match a.x_loc.len() {
        0 => false,
        1 => {
            let clip = |c: f64, r: f64| {
                ((c - r).max(dilated.centers[0] - dilated.half_widths[0]), (c + r).min(dilated.centers[0] + dilated.half_widths[0]))
            };
            let (lo_a, hi_a) = clip(a.x_loc[0], a.local_radius);
            let (lo_b, hi_b) = clip(b.x_loc[0], b.local_radius);
            hi_a < lo_a || hi_b < lo_b || hi_a < lo_b || hi_b < lo_a
        }
        _ => {
            let d: f64 = a.x_loc.iter().zip(&b.x_loc).map(|(p, q)| (p - q) * (p - q)).sum();
            d.sqrt() > a.local_radius + b.local_radius
        }
    }
}

impl ForbiddenZone {
    pub fn contains(&self, x: &[f64], global: &SpectralParams, dilated: &Cell) -> bool {
        let k = self.xi.len();
        let d: f64 = x[k..].iter().zip(&self.x_loc).map(|(a, b)| (a - b) * (a - b)).sum();
        if d.sqrt() >= self.local_radius || !dilated.contains(&x[k..]) {
            return false;
        }
        match polar_decompose(&x[..k], self.level, global) {
            Ok(p) => {
                let gap: f64 = p.xi_tilde.iter().zip(&self.xi).map(|(a, b)| (a - b) * (a - b)).sum();
                p.s >= -DILATION_SLACK && gap.sqrt() < self.cap_radius
            }
            Err(_) => false,
        }
    }

    /// `gamma^k(Z)`: Gaussian in the global part, Lebesgue in the local one.
    pub fn measure(&self, global: &SpectralParams, dilated: &Cell) -> Result<f64> {
        let k = self.xi.len();
        let global_mass = if k == 1 {
            let rays = if 2.0 * self.xi[0].abs() < self.cap_radius { 2.0 } else { 1.0 };
            0.5 * rays * erfc(self.level.sqrt())
        } else {
            let spec = TubeSpec::new(global.clone(), self.level, self.xi.clone(), self.cap_radius)?;
            let prod: f64 = global.rates().iter().product();
            tube_measure(&spec, TubeMethod::Quadrature)?.value * prod.sqrt() / PI.powf(0.5 * k as f64)
        };
        let local_mass = match self.x_loc.len() {
            0 => 1.0,
            1 => {
                let lo = (self.x_loc[0] - self.local_radius).max(dilated.centers[0] - dilated.half_widths[0]);
                let hi = (self.x_loc[0] + self.local_radius).min(dilated.centers[0] + dilated.half_widths[0]);
                (hi - lo).max(0.0)
            }
            d => return Err(Error::Unsupported(format!("zone measure with {d} local coordinates"))),
        };
        Ok(global_mass * local_mass)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForbiddenZoneRun {
    pub alpha: f64,
    pub k: usize,
    pub nu: Vec<i64>,
    pub m1: u32,
    pub m2: u32,
    pub a_const: f64,
    pub b_const: f64,
    pub m_const: f64,
    pub c: f64,
    pub selections: Vec<Selection>,
    /// Smallest `epsilon` over the grid.
    pub epsilon: f64,
    pub grid_points: usize,
    pub level_set_points: usize,
    /// First intersecting pair of balls, if any.
    pub overlap: Option<(usize, usize)>,
    pub uncovered: usize,
    pub zone_ratios: Vec<f64>,
    /// Smallest cap radius over the grid step.
    pub min_zone_resolution: f64,
}

impl ForbiddenZoneRun {
    pub fn disjoint(&self) -> bool {
        self.overlap.is_none()
    }

    pub fn covered(&self) -> bool {
        self.uncovered == 0
    }

    pub fn levels_nondecreasing(&self) -> bool {
        let global = |s: &Selection| s.zone.level;
        self.selections.windows(2).all(|w| global(&w[0]) <= global(&w[1]))
    }

    pub fn ratio_spread(&self) -> Option<f64> {
        let finite: Vec<f64> = self.zone_ratios.iter().copied().filter(|r| r.is_finite() && *r > 0.0).collect();
        if finite.is_empty() {
            return None;
        }
        let max = finite.iter().copied().fold(0.0, f64::max);
        let min = finite.iter().copied().fold(f64::INFINITY, f64::min);
        Some(max / min)
    }
}

fn make_selection(config: &ForbiddenZoneConfig, p: &GridPoint) -> Selection {
    let k = config.k;
    let scale = p.t_star.sqrt();
    let two = |e: u32| 2f64.powi(e as i32);
    let xi = p.x[..k].to_vec();
    let x_loc = p.x[k..].to_vec();
    Selection {
        x: p.x.clone(),
        t: p.t_star,
        value: p.value,
        ball: ForbiddenBall {
            xi: xi.clone(),
            t: p.t_star,
            global_radius: two(config.m1) * scale,
            x_loc: x_loc.clone(),
            local_radius: two(config.m2) * scale,
        },
        zone: ForbiddenZone {
            xi,
            level: p.level,
            cap_radius: config.a_const() * two(3 * config.m1) * scale,
            x_loc,
            local_radius: config.b_const() * two(2 * config.m1 + config.m2) * scale,
        },
    }
}

/// Greedy selection in order of increasing `R(xi)` with ties broken by grid
/// order, followed by the disjointness, covering and zone-measure checks.
pub fn select_zones(config: &ForbiddenZoneConfig, field: &LevelField, measure: &DiscreteMeasure, alpha: f64) -> Result<ForbiddenZoneRun> {
    let global = config.global_params();
    let dilated = config.localization().dilated;
    let mut order: Vec<usize> = (0..field.points.len()).filter(|&i| field.points[i].value >= alpha).collect();
    order.sort_by(|&a, &b| field.points[a].level.total_cmp(&field.points[b].level).then(a.cmp(&b)));
    let mut selections: Vec<Selection> = Vec::new();
    for &i in &order {
        let p = &field.points[i];
        if selections.iter().any(|s| s.zone.contains(&p.x, &global, &dilated)) {
            continue;
        }
        let s = make_selection(config, p);
        if !s.zone.contains(&p.x, &global, &dilated) {
            return Err(Error::GridTooCoarse { index: i });
        }
        selections.push(s);
        if selections.len() >= ITERATION_GUARD {
            return Err(Error::NonTermination(selections.len()));
        }
    }
    let uncovered = order
        .par_iter()
        .filter(|&&i| !selections.iter().any(|s| s.zone.contains(&field.points[i].x, &global, &dilated)))
        .count();
    let overlap = (0..selections.len())
        .into_par_iter()
        .filter_map(|a| {
            (a + 1..selections.len())
                .find(|&b| !selections[a].ball.disjoint_from(&selections[b].ball, &global, &dilated))
                .map(|b| (a, b))
        })
        .min();
    let decay = (-config.c * (4f64.powi(config.m1 as i32) + 4f64.powi(config.m2 as i32))).exp();
    let zone_ratios = selections
        .iter()
        .map(|s| {
            let inside: f64 = measure.iter().filter(|(u, _)| s.ball.contains(u, &config.params, &dilated)).map(|(_, w)| w).sum();
            Ok(s.zone.measure(&global, &dilated)? * alpha / (decay * inside))
        })
        .collect::<Result<Vec<f64>>>()?;
    let min_zone_resolution =
        selections.iter().map(|s| s.zone.cap_radius / field.spacing).fold(f64::INFINITY, f64::min);
    Ok(ForbiddenZoneRun {
        alpha,
        k: config.k,
        nu: config.nu.clone(),
        m1: config.m1,
        m2: config.m2,
        a_const: config.a_const(),
        b_const: config.b_const(),
        m_const: config.m_const,
        c: config.c,
        selections,
        epsilon: field.points.iter().map(|p| p.epsilon).fold(f64::INFINITY, f64::min),
        grid_points: field.points.len(),
        level_set_points: order.len(),
        overlap,
        uncovered,
        zone_ratios,
        min_zone_resolution,
    })
}

pub fn forbidden_zone_recursion(config: &ForbiddenZoneConfig, measure: &DiscreteMeasure, alpha: f64) -> Result<ForbiddenZoneRun> {
    let field = level_field(config, measure, alpha)?;
    select_zones(config, &field, measure, alpha)
}

/// A randomized recursion problem with `k = 1`, `n = 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecursionInstance {
    pub index: usize,
    pub config: ForbiddenZoneConfig,
    /// Equally weighted normalized bumps making up the test function.
    pub bumps: Vec<TestFunction>,
    pub measure: DiscreteMeasure,
    pub alpha: f64,
    /// `max G / alpha` on the calibration scan.
    pub calibration_ratio: f64,
}

pub const CALIBRATION_TARGET: f64 = 8.0;
const DISCRETIZATION: usize = 24;

fn draw_instance(seed: u64, attempt: u64) -> Result<(ForbiddenZoneConfig, Vec<TestFunction>)> {
    let mut rng = stream(seed, domain::INSTANCES, attempt);
    let rates = vec![rng.random_range(0.5..1.5), rng.random_range(0.5..1.5)];
    let params = SpectralParams::new(rates.clone())?;
    let nu = vec![rng.random_range(-2..=2)];
    let config = ForbiddenZoneConfig::new(params.clone(), 1, nu.clone(), rng.random_range(0..=2), rng.random_range(0..=2))?;
    let cell = Cell::new(&nu)?;
    let (s, h) = (cell.centers[0], cell.half_widths[0]);
    let reference = Reference::new(params, 1)?;
    let count = rng.random_range(1..=3);
    let mut side = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let mut bumps = Vec::with_capacity(count);
    for _ in 0..count {
        let c1 = side * (rng.random_range(3.0..9.0) / rates[0]).sqrt();
        let c2 = s + h * rng.random_range(-1.0..1.0);
        let width = f64::min(rng.random_range(0.05..0.2), h * rng.random_range(0.1..0.4));
        bumps.push(TestFunction::bump(reference.clone(), vec![c1, c2], width)?);
        side = -side;
    }
    Ok((config, bumps))
}

/// Picks the level on a coarse scan whose `max G / alpha` is closest to the
/// target among those where the level set is nonempty.
pub fn calibrate_alpha(config: &ForbiddenZoneConfig, measure: &DiscreteMeasure) -> Result<Option<(f64, f64)>> {
    let coarse = ForbiddenZoneConfig { global_resolution: 60, local_resolution: 6, time_points: 16, ..config.clone() };
    let global = config.global_params();
    let reach = measure
        .points
        .iter()
        .map(|u| u[..config.k].iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
        + 1.0;
    let half = reach * (global.rate_max() * 1.0).exp();
    let axes: Vec<Vec<f64>> = (0..config.k).map(|_| axis(half, 2 * coarse.global_resolution)).collect();
    let cell = Cell::new(&config.nu)?;
    let locals: Vec<Vec<f64>> = (0..cell.dim())
        .map(|j| axis(cell.half_widths[j], coarse.local_resolution).into_iter().map(|v| cell.centers[j] + v).collect())
        .collect();
    let mut points = Vec::new();
    for xi in product_grid(&axes) {
        for loc in product_grid(&locals) {
            points.push([xi.clone(), loc].concat());
        }
    }
    let field = level_field_on(&coarse, measure, points, 0.0);
    let threshold = config.log_alpha_threshold();
    let mut best: Option<(f64, f64)> = None;
    let mut log_alpha = (4.0 * threshold).ceil() / 4.0 + 0.25;
    while log_alpha <= 40.0 {
        let alpha = log_alpha.exp();
        let peak = field
            .points
            .iter()
            .filter(|p| p.level >= 0.5 * log_alpha && p.level <= 2.0 * log_alpha)
            .map(|p| p.value)
            .fold(0.0, f64::max);
        let ratio = peak / alpha;
        if ratio >= 1.0 {
            let score = (ratio / CALIBRATION_TARGET).ln().abs();
            if best.is_none_or(|(_, r)| score < (r / CALIBRATION_TARGET).ln().abs()) {
                best = Some((alpha, ratio));
            }
        }
        log_alpha += 0.25;
    }
    Ok(best)
}

/// `count` instances with a nonempty calibrated level set, drawn in order
/// from the instance stream of `seed`.
pub fn generate_instances(count: usize, seed: u64) -> Result<Vec<RecursionInstance>> {
    let mut out = Vec::with_capacity(count);
    let mut attempt = 0u64;
    while out.len() < count {
        if attempt > 100 * count as u64 + 100 {
            return Err(Error::BudgetExceeded("could not find enough nonvacuous instances".into()));
        }
        let (config, bumps) = draw_instance(seed, attempt)?;
        attempt += 1;
        let parts: Vec<DiscreteMeasure> = bumps.iter().map(|f| f.discretize(DISCRETIZATION)).collect();
        let share = 1.0 / parts.len() as f64;
        let measure = DiscreteMeasure::mixture(parts.iter().map(|m| (m, share)));
        if let Some((alpha, ratio)) = calibrate_alpha(&config, &measure)? {
            out.push(RecursionInstance { index: out.len(), config, bumps, measure, alpha, calibration_ratio: ratio });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub m_const: f64,
    pub runs: Vec<ForbiddenZoneRun>,
    pub refined: Vec<ForbiddenZoneRun>,
}

impl SuiteOutcome {
    pub fn all_disjoint(&self) -> bool {
        self.runs.iter().chain(&self.refined).all(ForbiddenZoneRun::disjoint)
    }

    pub fn all_covered(&self) -> bool {
        self.runs.iter().chain(&self.refined).all(ForbiddenZoneRun::covered)
    }

    /// Whether each instance gives the same verdicts on the doubled grid.
    pub fn stable_under_refinement(&self) -> bool {
        self.runs
            .iter()
            .zip(&self.refined)
            .all(|(a, b)| a.disjoint() == b.disjoint() && a.covered() == b.covered())
    }
}

/// Runs every instance at its resolution and doubled, doubling `M` from 2
/// until all balls are disjoint or `M` exceeds `m_limit`.
pub fn tune_constant(instances: &[RecursionInstance], m_limit: f64) -> Result<SuiteOutcome> {
    let fields: Vec<(LevelField, LevelField)> = instances
        .iter()
        .map(|inst| {
            Ok((
                level_field(&inst.config, &inst.measure, inst.alpha)?,
                level_field(&inst.config.doubled(), &inst.measure, inst.alpha)?,
            ))
        })
        .collect::<Result<_>>()?;
    let mut m_const = 2.0;
    loop {
        let mut runs = Vec::new();
        let mut refined = Vec::new();
        for (inst, (coarse, fine)) in instances.iter().zip(&fields) {
            let config = ForbiddenZoneConfig { m_const, ..inst.config.clone() };
            runs.push(select_zones(&config, coarse, &inst.measure, inst.alpha)?);
            refined.push(select_zones(&config.doubled(), fine, &inst.measure, inst.alpha)?);
        }
        let outcome = SuiteOutcome { m_const, runs, refined };
        if outcome.all_disjoint() || 2.0 * m_const > m_limit {
            return Ok(outcome);
        }
        m_const *= 2.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> ForbiddenZoneConfig {
        let mut c = ForbiddenZoneConfig::new(SpectralParams::new(vec![1.0, 1.2]).unwrap(), 1, vec![0], 0, 0).unwrap();
        c.global_resolution = 80;
        c.local_resolution = 6;
        c.time_points = 16;
        c
    }

    #[test]
    fn zero_function_gives_empty_run() {
        let run = forbidden_zone_recursion(&config(), &DiscreteMeasure::empty(), 20.0).unwrap();
        assert!(run.selections.is_empty() && run.disjoint() && run.covered());
    }

    #[test]
    fn narrow_bump_is_seen_by_the_first_ball() {
        let cfg = config();
        let f = TestFunction::bump(Reference::new(cfg.params.clone(), 1).unwrap(), vec![2.2, 0.1], 0.05).unwrap();
        let measure = f.discretize(DISCRETIZATION);
        let (alpha, _) = calibrate_alpha(&cfg, &measure).unwrap().expect("nonempty level set");
        let run = forbidden_zone_recursion(&cfg, &measure, alpha).unwrap();
        assert!(!run.selections.is_empty());
        let dilated = cfg.localization().dilated;
        let support = f.support();
        let first = &run.selections[0].ball;
        assert!(measure.iter().any(|(u, _)| support.contains(u) && first.contains(u, &cfg.params, &dilated)));
        assert!(run.covered() && run.levels_nondecreasing());
    }

    #[test]
    fn low_alpha_is_refused() {
        assert!(matches!(annulus_grid(&config(), 1.1), Err(Error::AlphaTooSmall { .. })));
    }
}
