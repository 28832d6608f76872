//! Interval sequences `I_s = (s - w(s), s + w(s)]` with `w(s) = 1/(1+|s|)`,
//! the cells built from them and the global/local split of `R^n x R^n`.

use crate::error::{check_dim, Error, Result};
use crate::model::SpectralParams;
use crate::roots::bisect;

pub fn half_width(s: f64) -> f64 {
    1.0 / (1.0 + s.abs())
}

/// Centers `s^(nu)`, symmetric about 0, generated on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSequence {
    nonnegative: Vec<f64>,
}

impl Default for IntervalSequence {
    fn default() -> Self {
        Self::new()
    }
}

impl IntervalSequence {
    pub fn new() -> Self {
        Self { nonnegative: vec![0.0] }
    }

    fn extend_to(&mut self, index: usize) -> Result<()> {
        while self.nonnegative.len() <= index {
            let prev = *self.nonnegative.last().expect("sequence starts at 0");
            let right = prev + half_width(prev);
            let mut next = bisect(|s| s - half_width(s) - right, right, right + 1.0)?;
            for _ in 0..2 {
                next -= (next - half_width(next) - right) / (1.0 + half_width(next).powi(2));
            }
            self.nonnegative.push(next);
        }
        Ok(())
    }

    /// The center `s^(nu)`.
    pub fn center(&mut self, nu: i64) -> Result<f64> {
        let idx = nu.unsigned_abs() as usize;
        self.extend_to(idx)?;
        let s = self.nonnegative[idx];
        Ok(if nu < 0 { -s } else { s })
    }

    /// Endpoints `(left, right)` of `I_{s^(nu)}`.
    pub fn interval(&mut self, nu: i64) -> Result<(f64, f64)> {
        let s = self.center(nu)?;
        let w = half_width(s);
        Ok((s - w, s + w))
    }

    /// Index of the interval containing `p`.
    pub fn locate(&mut self, p: f64) -> Result<i64> {
        if !p.is_finite() {
            return Err(Error::InvalidParameter("cannot locate a non-finite point".into()));
        }
        let mut nu: i64 = 0;
        loop {
            let (left, right) = self.interval(nu)?;
            if p > right {
                nu += 1;
            } else if p <= left {
                nu -= 1;
            } else {
                return Ok(nu);
            }
        }
    }

    /// Number of dilates `factor * I_{s^(nu)}` containing `p`.
    pub fn overlap_count(&mut self, p: f64, factor: f64) -> Result<usize> {
        let home = self.locate(p)?;
        let mut count = 0;
        for direction in [-1i64, 1] {
            let mut nu = if direction < 0 { home } else { home + 1 };
            loop {
                let s = self.center(nu)?;
                let w = factor * half_width(s);
                let inside = s - w < p && p <= s + w;
                let past = if direction < 0 { s + w < p } else { s - w >= p };
                if inside {
                    count += 1;
                } else if past {
                    break;
                }
                nu += direction;
            }
        }
        Ok(count)
    }
}

/// The intervals of one axis that meet `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisIntervals {
    pub indices: Vec<i64>,
    pub centers: Vec<f64>,
}

impl AxisIntervals {
    pub fn left(&self, i: usize) -> f64 {
        self.centers[i] - half_width(self.centers[i])
    }

    pub fn right(&self, i: usize) -> f64 {
        self.centers[i] + half_width(self.centers[i])
    }

    /// Largest mismatch between consecutive endpoints.
    pub fn max_gap(&self) -> f64 {
        (1..self.centers.len()).map(|i| (self.right(i - 1) - self.left(i)).abs()).fold(0.0, f64::max)
    }
}

pub fn build_interval_sequence(lo: f64, hi: f64) -> Result<AxisIntervals> {
    if !(lo < hi) {
        return Err(Error::InvalidParameter(format!("window [{lo}, {hi}] is empty")));
    }
    let mut seq = IntervalSequence::new();
    let first = seq.locate(lo)?;
    let last = seq.locate(hi)?;
    let mut indices = Vec::new();
    let mut centers = Vec::new();
    for nu in first..=last {
        indices.push(nu);
        centers.push(seq.center(nu)?);
    }
    Ok(AxisIntervals { indices, centers })
}

/// A closed rectangle `prod [s_j - h_j, s_j + h_j]` of local coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub centers: Vec<f64>,
    pub half_widths: Vec<f64>,
}

impl Cell {
    pub fn new(nu: &[i64]) -> Result<Self> {
        let mut seq = IntervalSequence::new();
        let centers = nu.iter().map(|&v| seq.center(v)).collect::<Result<Vec<_>>>()?;
        let half_widths = centers.iter().map(|&s| half_width(s)).collect();
        Ok(Self { centers, half_widths })
    }

    pub fn dim(&self) -> usize {
        self.centers.len()
    }

    pub fn dilate(&self, factor: f64) -> Self {
        Self { centers: self.centers.clone(), half_widths: self.half_widths.iter().map(|h| factor * h).collect() }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter().zip(self.centers.iter().zip(&self.half_widths)).all(|(v, (c, h))| (v - c).abs() <= *h)
    }

    pub fn volume(&self) -> f64 {
        self.half_widths.iter().map(|h| 2.0 * h).product()
    }

    pub fn lo(&self) -> Vec<f64> {
        self.centers.iter().zip(&self.half_widths).map(|(c, h)| c - h).collect()
    }

    pub fn hi(&self) -> Vec<f64> {
        self.centers.iter().zip(&self.half_widths).map(|(c, h)| c + h).collect()
    }
}

/// `k` global coordinates followed by cells `C_nu` in the local ones.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationGrid {
    pub n: usize,
    pub k: usize,
    pub cell: Cell,
    pub dilated: Cell,
}

impl LocalizationGrid {
    pub const DILATION: f64 = 3.0;

    pub fn new(n: usize, k: usize, nu: &[i64]) -> Result<Self> {
        if k > n {
            return Err(Error::InvalidParameter(format!("k = {k} exceeds n = {n}")));
        }
        check_dim(n - k, nu.len())?;
        let cell = Cell::new(nu)?;
        let dilated = cell.dilate(Self::DILATION);
        Ok(Self { n, k, cell, dilated })
    }
}

/// `|x_j - u_j| > w(x_j)` for `j < k` and `<= w(x_j)` for `j >= k`.
pub fn membership_mk(x: &[f64], u: &[f64], k: usize) -> bool {
    x.iter().zip(u).enumerate().all(|(j, (&a, &b))| {
        let global = (a - b).abs() > half_width(a);
        if j < k {
            global
        } else {
            !global
        }
    })
}

/// The coordinates where `(x, u)` satisfies the global condition, so that
/// `(x, u)` lies in `M_k` after moving them to the front.
pub fn global_coordinates(x: &[f64], u: &[f64]) -> Vec<usize> {
    (0..x.len()).filter(|&j| (x[j] - u[j]).abs() > half_width(x[j])).collect()
}

/// Membership for an arbitrary set of global coordinates, via the
/// permutation that puts them first.
pub fn membership_indexed(x: &[f64], u: &[f64], global: &[usize]) -> bool {
    let mut order: Vec<usize> = global.to_vec();
    order.extend((0..x.len()).filter(|j| !global.contains(j)));
    let px: Vec<f64> = order.iter().map(|&j| x[j]).collect();
    let pu: Vec<f64> = order.iter().map(|&j| u[j]).collect();
    membership_mk(&px, &pu, global.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImplCheck {
    pub premise: bool,
    pub conclusion: bool,
}

impl ImplCheck {
    pub fn holds(&self) -> bool {
        !self.premise || self.conclusion
    }
}

const IMPL_SLACK: f64 = 1e-12;

/// `s' in I_s` and `|s'' - s'| <= w(s')` imply `s'' in 3 I_s`.
pub fn check_impl(s: f64, s_prime: f64, s_second: f64) -> ImplCheck {
    let w = half_width(s);
    let premise = s - w < s_prime && s_prime <= s + w && (s_second - s_prime).abs() <= half_width(s_prime);
    let conclusion = s - 3.0 * w - IMPL_SLACK < s_second && s_second <= s + 3.0 * w + IMPL_SLACK;
    ImplCheck { premise, conclusion }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityRatio {
    pub min: f64,
    pub max: f64,
}

impl DensityRatio {
    pub fn spread(&self) -> f64 {
        self.max / self.min
    }
}

/// Extremes of `exp(sum rate_j u_j^2) / exp(D_nu)` over a grid of the cell
/// `factor * C_nu`, where the rates are those of the local coordinates.
pub fn density_comparability(nu: &[i64], local_rates: &SpectralParams, factor: f64, resolution: usize) -> Result<DensityRatio> {
    check_dim(local_rates.dim(), nu.len())?;
    let cell = Cell::new(nu)?.dilate(factor);
    let mut lo_exp = 0.0;
    let mut hi_exp = 0.0;
    for (j, &rate) in local_rates.rates().iter().enumerate() {
        let (c, h) = (cell.centers[j], cell.half_widths[j]);
        let values = (0..=resolution).map(|i| {
            let u = c - h + 2.0 * h * i as f64 / resolution as f64;
            rate * (u * u - c * c)
        });
        let (mn, mx) = values.fold((f64::MAX, f64::MIN), |(a, b), v| (a.min(v), b.max(v)));
        lo_exp += mn;
        hi_exp += mx;
    }
    Ok(DensityRatio { min: lo_exp.exp(), max: hi_exp.exp() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_centers() {
        let mut seq = IntervalSequence::new();
        assert_eq!(seq.interval(0).unwrap(), (-1.0, 1.0));
        assert!((seq.center(1).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        assert!((seq.center(-1).unwrap() + 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn window_partition() {
        let axis = build_interval_sequence(-10.0, 10.0).unwrap();
        assert!(axis.max_gap() <= 1e-12);
        assert!(axis.left(0) <= -10.0 && axis.right(axis.centers.len() - 1) >= 10.0);
    }

    #[test]
    fn membership_examples() {
        let x = [0.3, -1.0];
        assert!(membership_mk(&x, &x, 0));
        assert!(!membership_mk(&x, &x, 1));
        assert!(membership_mk(&[0.0], &[2.0], 1));
        assert!(membership_indexed(&[0.0, 0.0], &[0.1, 3.0], &[1]));
    }

    #[test]
    fn impl_example() {
        let c = check_impl(0.0, 0.9, 0.9 + 1.0 / 1.9);
        assert!(c.premise && c.conclusion);
        assert!(!check_impl(0.0, 1.5, 1.5).premise);
    }

    #[test]
    fn origin_density_offset_is_zero() {
        let rates = SpectralParams::new(vec![1.0]).unwrap();
        let r = density_comparability(&[0], &rates, 1.0, 200).unwrap();
        assert!((r.max - 1f64.exp()).abs() < 1e-12 && (r.min - 1.0).abs() < 1e-12);
    }
}
