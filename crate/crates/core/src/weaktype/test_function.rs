//! Nonnegative test functions normalized in `L^1` of a reference measure
//! that is Gaussian in the first `global` coordinates and Lebesgue in the rest.

use statrs::function::erf::{erf, erfc};
use std::f64::consts::PI;

use crate::error::{check_dim, Error, Result};
use crate::model::SpectralParams;
use crate::semigroup::SupportBox;

/// `gamma^k`: the invariant Gaussian in coordinates `< global`,
/// Lebesgue measure in the others.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub params: SpectralParams,
    pub global: usize,
}

impl Reference {
    pub fn new(params: SpectralParams, global: usize) -> Result<Self> {
        if global > params.dim() {
            return Err(Error::InvalidParameter(format!("{global} global coordinates in dimension {}", params.dim())));
        }
        Ok(Self { params, global })
    }

    pub fn invariant(params: SpectralParams) -> Self {
        let global = params.dim();
        Self { params, global }
    }

    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    pub fn density(&self, u: &[f64]) -> f64 {
        self.params.rates()[..self.global]
            .iter()
            .zip(u)
            .map(|(l, v)| (l / PI).sqrt() * (-l * v * v).exp())
            .product()
    }
}

/// `erf(b) - erf(a)` for `a <= b`, using `erfc` in the tails.
pub fn erf_interval(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        erfc(a) - erfc(b)
    } else if b <= 0.0 {
        erfc(-b) - erfc(-a)
    } else {
        erf(b) - erf(a)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// `exp(-|u - center|^2 / (2 width^2))`.
    Bump { center: Vec<f64>, width: f64 },
    /// Indicator of `prod [lo_j, hi_j]`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Point masses of `f d gamma^k`; weights sum to one.
    Atoms { points: Vec<Vec<f64>>, weights: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    shape: Shape,
    /// Peak value for bumps and boxes, total mass for atoms.
    scale: f64,
    reference: Reference,
}

/// Mass of the unit bump factor against the reference in one coordinate.
fn bump_factor_mass(rate: Option<f64>, center: f64, width: f64) -> f64 {
    let b = 0.5 / (width * width);
    match rate {
        Some(l) => (l / (l + b)).sqrt() * (-l * b * center * center / (l + b)).exp(),
        None => (PI / b).sqrt(),
    }
}

fn box_factor_mass(rate: Option<f64>, lo: f64, hi: f64) -> f64 {
    match rate {
        Some(l) => 0.5 * erf_interval(l.sqrt() * lo, l.sqrt() * hi),
        None => hi - lo,
    }
}

impl TestFunction {
    pub fn bump(reference: Reference, center: Vec<f64>, width: f64) -> Result<Self> {
        check_dim(reference.dim(), center.len())?;
        if !(width > 0.0) {
            return Err(Error::InvalidParameter(format!("bump width {width} must be positive")));
        }
        let shape = Shape::Bump { center, width };
        Self::normalized(shape, reference)
    }

    pub fn indicator_box(reference: Reference, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_dim(reference.dim(), lo.len())?;
        check_dim(reference.dim(), hi.len())?;
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidParameter("box needs lo < hi in every coordinate".into()));
        }
        Self::normalized(Shape::Box { lo, hi }, reference)
    }

    pub fn atoms(reference: Reference, points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::InvalidParameter("atom cloud needs matching nonempty points and weights".into()));
        }
        for p in &points {
            check_dim(reference.dim(), p.len())?;
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidParameter("atom weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidParameter("atom weights sum to zero".into()));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { shape: Shape::Atoms { points, weights }, scale: 1.0, reference })
    }

    fn normalized(shape: Shape, reference: Reference) -> Result<Self> {
        let mut f = Self { shape, scale: 1.0, reference };
        let mass = f.l1_norm();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidParameter(format!("test function has mass {mass}")));
        }
        f.scale = 1.0 / mass;
        Ok(f)
    }

    /// The same shape multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { shape: self.shape.clone(), scale: self.scale * factor, reference: self.reference.clone() }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn reference(&self) -> &Reference {
        &self.reference
    }

    pub fn dim(&self) -> usize {
        self.reference.dim()
    }

    fn rate(&self, j: usize) -> Option<f64> {
        (j < self.reference.global).then(|| self.reference.params.rates()[j])
    }

    /// `int f d gamma^k`, in closed form.
    pub fn l1_norm(&self) -> f64 {
        match &self.shape {
            Shape::Bump { center, width } => {
                self.scale * (0..self.dim()).map(|j| bump_factor_mass(self.rate(j), center[j], *width)).product::<f64>()
            }
            Shape::Box { lo, hi } => {
                self.scale * (0..self.dim()).map(|j| box_factor_mass(self.rate(j), lo[j], hi[j])).product::<f64>()
            }
            Shape::Atoms { .. } => self.scale,
        }
    }

    /// Pointwise value; atom clouds have none.
    pub fn value(&self, u: &[f64]) -> Option<f64> {
        match &self.shape {
            Shape::Bump { center, width } => {
                let d2: f64 = u.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                Some(self.scale * (-0.5 * d2 / (width * width)).exp())
            }
            Shape::Box { lo, hi } => {
                let inside = u.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| a <= v && v <= b);
                Some(if inside { self.scale } else { 0.0 })
            }
            Shape::Atoms { .. } => None,
        }
    }

    /// Box outside which `f` vanishes or is below `exp(-12.5)` of its peak.
    pub fn support(&self) -> SupportBox {
        let (lo, hi) = match &self.shape {
            Shape::Bump { center, width } => (
                center.iter().map(|c| c - 5.0 * width).collect(),
                center.iter().map(|c| c + 5.0 * width).collect(),
            ),
            Shape::Box { lo, hi } => (lo.clone(), hi.clone()),
            Shape::Atoms { points, .. } => {
                let n = self.dim();
                let lo = (0..n).map(|j| points.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min) - 1e-9).collect();
                let hi = (0..n).map(|j| points.iter().map(|p| p[j]).fold(f64::NEG_INFINITY, f64::max) + 1e-9).collect();
                (lo, hi)
            }
        };
        SupportBox::new(lo, hi).expect("support box is nonempty")
    }

    /// Point masses approximating `f d gamma^k`: the atoms themselves, or a
    /// midpoint rule with `resolution` cells per axis on the support.
    pub fn discretize(&self, resolution: usize) -> DiscreteMeasure {
        if let Shape::Atoms { points, weights } = &self.shape {
            return DiscreteMeasure {
                points: points.clone(),
                weights: weights.iter().map(|w| w * self.scale).collect(),
            };
        }
        let support = self.support();
        let n = self.dim();
        let steps: Vec<f64> = (0..n).map(|j| (support.hi[j] - support.lo[j]) / resolution as f64).collect();
        let cell: f64 = steps.iter().product();
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for idx in crate::quadrature::tensor_indices(resolution, n) {
            let u: Vec<f64> = (0..n).map(|j| support.lo[j] + (idx[j] as f64 + 0.5) * steps[j]).collect();
            let w = self.value(&u).unwrap_or(0.0) * self.reference.density(&u) * cell;
            if w > 0.0 {
                points.push(u);
                weights.push(w);
            }
        }
        DiscreteMeasure { points, weights }
    }
}

/// Weighted points `sum w_i delta_{u_i}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiscreteMeasure {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.points.iter().map(Vec::as_slice).zip(self.weights.iter().copied())
    }

    /// Concatenation of the parts with each part's weights multiplied by
    /// its factor.
    pub fn mixture<'a>(parts: impl IntoIterator<Item = (&'a DiscreteMeasure, f64)>) -> Self {
        let mut out = Self::empty();
        for (part, factor) in parts {
            out.points.extend(part.points.iter().cloned());
            out.weights.extend(part.weights.iter().map(|w| w * factor));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference(global: usize) -> Reference {
        Reference::new(SpectralParams::new(vec![1.0, 2.0]).unwrap(), global).unwrap()
    }

    #[test]
    fn discretized_mass_matches_normalization() {
        for global in [1, 2] {
            let bump = TestFunction::bump(reference(global), vec![1.5, -0.3], 0.2).unwrap();
            assert!((bump.l1_norm() - 1.0).abs() < 1e-12);
            assert!((bump.discretize(60).total() - 1.0).abs() < 1e-4);
            let b = TestFunction::indicator_box(reference(global), vec![0.5, -1.0], vec![1.0, 0.0]).unwrap();
            assert!((b.discretize(400).total() - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn erf_interval_tails() {
        let v = erf_interval(6.0, 7.0);
        assert!(v > 0.0 && (v - (erfc(6.0) - erfc(7.0))).abs() < 1e-30);
        assert!((erf_interval(-1.0, 2.0) - (erf(2.0) + erf(1.0))).abs() < 1e-15);
    }
}
