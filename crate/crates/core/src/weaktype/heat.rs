//! Closed-form evaluation of `H_t f` for the test-function families, either
//! for the exact semigroup of a canonical model or for the kernel with
//! scaled exponent `kappa`.

use crate::error::{check_dim, check_time, Error, Result};
use crate::mehler::{decay_gap, log_kernel_block2d, log_kernel_kappa, KernelSpec, RotationCoupling};
use crate::model::{OUModel, SpectralParams};
use crate::semigroup::{maximal_by, MaximalValue, TGrid};
use crate::weaktype::test_function::{erf_interval, Shape, TestFunction};

/// Coordinates of a canonical model, in their original order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Piece {
    Scalar { index: usize, rate: f64 },
    Block { index: usize, rate: f64, frequency: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum HeatOperator {
    Semigroup { pieces: Vec<Piece>, rates: SpectralParams },
    Kappa(KernelSpec),
}

impl HeatOperator {
    /// The semigroup of a model with `Q = I` and block-diagonal drift made of
    /// scalars and rotation blocks `[[-l, q], [-q, -l]]`.
    pub fn semigroup(model: &OUModel) -> Result<Self> {
        let rates = model.canonical_rates().ok_or_else(|| {
            Error::Unsupported("closed-form heat needs Q = I and a block-diagonal drift; decompose the model first".into())
        })?;
        let b = model.drift();
        let mut pieces = Vec::new();
        let mut i = 0;
        while i < rates.len() {
            let paired = i + 1 < rates.len() && b[(i, i + 1)] != 0.0;
            if paired {
                pieces.push(Piece::Block { index: i, rate: rates[i], frequency: b[(i, i + 1)] });
                i += 2;
            } else {
                pieces.push(Piece::Scalar { index: i, rate: rates[i] });
                i += 1;
            }
        }
        Ok(Self::Semigroup { pieces, rates: SpectralParams::new(rates)? })
    }

    pub fn kappa(spec: KernelSpec) -> Self {
        Self::Kappa(spec)
    }

    /// For `kappa = 1` the diagonal semigroup is used directly.
    pub fn for_kernel(spec: &KernelSpec) -> Result<Self> {
        if spec.kappa == 1.0 {
            Self::semigroup(&OUModel::diagonal(spec.params.rates())?)
        } else {
            Ok(Self::Kappa(spec.clone()))
        }
    }

    pub fn rates(&self) -> &SpectralParams {
        match self {
            Self::Semigroup { rates, .. } => rates,
            Self::Kappa(spec) => &spec.params,
        }
    }

    pub fn dim(&self) -> usize {
        self.rates().dim()
    }

    /// Mean `e^{tB} x` of the transition law.
    fn transported(pieces: &[Piece], t: f64, x: &[f64]) -> Vec<f64> {
        let mut m = vec![0.0; x.len()];
        for p in pieces {
            match *p {
                Piece::Scalar { index, rate } => m[index] = (-rate * t).exp() * x[index],
                Piece::Block { index, rate, frequency } => {
                    let a = (-rate * t).exp();
                    let (sin, cos) = (frequency * t).sin_cos();
                    let (x0, x1) = (x[index], x[index + 1]);
                    m[index] = a * (cos * x0 + sin * x1);
                    m[index + 1] = a * (-sin * x0 + cos * x1);
                }
            }
        }
        m
    }

    fn log_kernel(&self, t: f64, x: &[f64], u: &[f64]) -> Result<f64> {
        match self {
            Self::Kappa(spec) => log_kernel_kappa(spec, t, x, u),
            Self::Semigroup { pieces, .. } => {
                let mut total = 0.0;
                for p in pieces {
                    total += match *p {
                        Piece::Scalar { index, rate } => crate::mehler::log_kernel_1d(rate, t, x[index], u[index])?,
                        Piece::Block { index, rate, frequency } => log_kernel_block2d(
                            rate,
                            frequency,
                            t,
                            [x[index], x[index + 1]],
                            [u[index], u[index + 1]],
                            RotationCoupling::Exact,
                        )?,
                    };
                }
                Ok(total)
            }
        }
    }

    /// `H_t f(x) = int K_t(x, u) f(u) d gamma_inf(u)`.
    pub fn apply(&self, f: &TestFunction, x: &[f64], t: f64) -> Result<f64> {
        check_time(t)?;
        check_dim(self.dim(), x.len())?;
        check_dim(self.dim(), f.dim())?;
        if f.reference().global != self.dim() || f.reference().params != *self.rates() {
            return Err(Error::InvalidParameter("test function must be normalized against the invariant measure".into()));
        }
        let rates = self.rates().rates();
        match f.shape() {
            Shape::Atoms { points, weights } => {
                let mut total = 0.0;
                for (p, w) in points.iter().zip(weights) {
                    total += w * self.log_kernel(t, x, p)?.exp();
                }
                Ok(f.scale() * total)
            }
            Shape::Bump { center, width } => {
                let b = 0.5 / (width * width);
                let mut log_total = 0.0;
                match self {
                    Self::Semigroup { pieces, .. } => {
                        let m = Self::transported(pieces, t, x);
                        for j in 0..x.len() {
                            let var = decay_gap(rates[j], t) / (2.0 * rates[j]);
                            let spread = width * width + var;
                            log_total += 0.5 * (width * width / spread).ln() - 0.5 * (m[j] - center[j]).powi(2) / spread;
                        }
                    }
                    Self::Kappa(spec) => {
                        for j in 0..x.len() {
                            let l = rates[j];
                            let gap = decay_gap(l, t);
                            let a = (-l * t).exp();
                            let pull = spec.kappa * l / gap;
                            let p = pull * a * a + b + l;
                            let (xj, cj) = (x[j], center[j]);
                            let exponent =
                                (l * xj * xj * (b + l * (1.0 - spec.kappa)) - pull * b * (xj - a * cj).powi(2) - b * l * cj * cj) / p;
                            log_total += 0.5 * (l / (p * gap)).ln() + exponent;
                        }
                    }
                }
                Ok(f.scale() * log_total.exp())
            }
            Shape::Box { lo, hi } => {
                let mut total = f.scale();
                match self {
                    Self::Semigroup { pieces, .. } => {
                        let m = Self::transported(pieces, t, x);
                        for j in 0..x.len() {
                            let sd = (decay_gap(rates[j], t) / rates[j]).sqrt();
                            total *= 0.5 * erf_interval((lo[j] - m[j]) / sd, (hi[j] - m[j]) / sd);
                        }
                    }
                    Self::Kappa(spec) => {
                        for j in 0..x.len() {
                            let l = rates[j];
                            let gap = decay_gap(l, t);
                            let a = (-l * t).exp();
                            let pull = spec.kappa * l / gap;
                            let p = pull * a * a + l;
                            let mu = pull * a * x[j] / p;
                            let root = p.sqrt();
                            let mass = erf_interval(root * (lo[j] - mu), root * (hi[j] - mu));
                            total *= 0.5 * (l / (gap * p)).sqrt() * mass * (l * l * (1.0 - spec.kappa) * x[j] * x[j] / p).exp();
                        }
                    }
                }
                Ok(total)
            }
        }
    }

    /// `sup_t H_t f(x)` over the grid.
    pub fn maximal(&self, f: &TestFunction, x: &[f64], grid: &TGrid) -> Result<MaximalValue> {
        maximal_by(grid, |t| self.apply(f, x, t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semigroup::{apply_kolmogorov, Field, QuadratureOptions};
    use crate::weaktype::test_function::Reference;
    use nalgebra::DMatrix;

    fn check_against_quadrature(model: &OUModel, f: &TestFunction) {
        let heat = HeatOperator::semigroup(model).unwrap();
        let eval = |u: &[f64]| f.value(u).unwrap();
        let field = Field::new(&eval).with_support(f.support());
        let opts = QuadratureOptions { order: 96, ..QuadratureOptions::default() };
        for &t in &[0.05, 0.4, 2.0] {
            let x = [0.7, -0.4];
            let exact = heat.apply(f, &x, t).unwrap();
            let quad = apply_kolmogorov(model, &field, &x, t, &opts).unwrap().value;
            assert!((exact - quad).abs() < 1e-6 * exact.max(1e-3), "t={t}: {exact} vs {quad}");
        }
    }

    #[test]
    fn closed_forms_match_quadrature() {
        let rates = SpectralParams::new(vec![1.0, 2.0]).unwrap();
        let reference = Reference::invariant(rates.clone());
        let model = OUModel::diagonal(rates.rates()).unwrap();
        check_against_quadrature(&model, &TestFunction::bump(reference.clone(), vec![0.5, 0.2], 0.3).unwrap());
        check_against_quadrature(&model, &TestFunction::indicator_box(reference, vec![-0.2, 0.0], vec![0.9, 0.6]).unwrap());
        let rotation = OUModel::new(DMatrix::identity(2, 2), DMatrix::from_row_slice(2, 2, &[-1.0, 0.8, -0.8, -1.0])).unwrap();
        let iso = Reference::invariant(SpectralParams::new(vec![1.0, 1.0]).unwrap());
        check_against_quadrature(&rotation, &TestFunction::bump(iso.clone(), vec![0.5, 0.2], 0.3).unwrap());
        check_against_quadrature(&rotation, &TestFunction::indicator_box(iso, vec![-0.2, 0.0], vec![0.9, 0.6]).unwrap());
    }

    #[test]
    fn unit_kappa_formula_equals_semigroup() {
        let rates = SpectralParams::new(vec![1.0, 2.0]).unwrap();
        let reference = Reference::invariant(rates.clone());
        let spec = KernelSpec::new(rates.clone(), 1.0).unwrap();
        let kappa = HeatOperator::Kappa(spec);
        let exact = HeatOperator::semigroup(&OUModel::diagonal(rates.rates()).unwrap()).unwrap();
        let fs = [
            TestFunction::bump(reference.clone(), vec![1.0, -0.5], 0.1).unwrap(),
            TestFunction::indicator_box(reference, vec![0.0, -1.0], vec![0.5, 1.0]).unwrap(),
        ];
        for f in &fs {
            for &t in &[1e-3, 0.3, 5.0] {
                let a = kappa.apply(f, &[0.3, 1.2], t).unwrap();
                let b = exact.apply(f, &[0.3, 1.2], t).unwrap();
                assert!((a - b).abs() <= 1e-10 * b, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn smaller_kappa_dominates() {
        let rates = SpectralParams::new(vec![1.0]).unwrap();
        let f = TestFunction::bump(Reference::invariant(rates.clone()), vec![2.0], 0.05).unwrap();
        let half = HeatOperator::Kappa(KernelSpec::new(rates.clone(), 0.5).unwrap());
        let one = HeatOperator::for_kernel(&KernelSpec::plain(rates)).unwrap();
        for &x in &[-1.0, 0.0, 1.9, 3.0] {
            for &t in &[1e-3, 0.1, 1.0, 10.0] {
                assert!(half.apply(&f, &[x], t).unwrap() >= one.apply(&f, &[x], t).unwrap());
            }
        }
    }
}
