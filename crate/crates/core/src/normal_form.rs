//! Normality test and reduction of a normal model to rotation blocks and
//! scalar rates after whitening the diffusion.

use crate::error::{Error, Result};
use crate::model::{OUModel, SpectralParams};
use nalgebra::DMatrix;

/// Imaginary parts below this are treated as zero and the pair is split.
pub const DEGENERATE_FREQUENCY: f64 = 1e-10;

/// A rotation block `[[-rate, frequency], [-frequency, -rate]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationBlock {
    pub rate: f64,
    pub frequency: f64,
}

impl RotationBlock {
    pub fn drift(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[-self.rate, self.frequency, -self.frequency, -self.rate])
    }
}

/// Model with `Q = I` and drift `rate (skew - I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildingBlock {
    rate: f64,
    skew: DMatrix<f64>,
}

impl BuildingBlock {
    pub fn new(rate: f64, skew: DMatrix<f64>) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidRate(rate));
        }
        if !skew.is_square() {
            return Err(Error::NotSquare { rows: skew.nrows(), cols: skew.ncols() });
        }
        let asymmetry = (&skew + skew.transpose()).amax();
        if asymmetry > 1e-12 {
            return Err(Error::InvalidParameter(format!("matrix is not skew-symmetric ({asymmetry:.2e})")));
        }
        Ok(Self { rate, skew })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn skew(&self) -> &DMatrix<f64> {
        &self.skew
    }

    pub fn drift(&self) -> DMatrix<f64> {
        let n = self.skew.nrows();
        (&self.skew - DMatrix::identity(n, n)) * self.rate
    }

    pub fn model(&self) -> Result<OUModel> {
        let n = self.skew.nrows();
        OUModel::new(DMatrix::identity(n, n), self.drift())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalityCheck {
    pub commutator_norm: f64,
    pub tolerance: f64,
    pub is_normal: bool,
}

/// Canonical coordinates `y = basis * whitening * x`. In them the diffusion is
/// the identity and the drift is block diagonal: rotation blocks first, then
/// the scalar rates.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalForm {
    pub blocks: Vec<RotationBlock>,
    pub scalars: Vec<f64>,
    pub basis: DMatrix<f64>,
    pub whitening: DMatrix<f64>,
}

impl CanonicalForm {
    /// A form already in canonical coordinates.
    pub fn from_parts(blocks: Vec<RotationBlock>, scalars: Vec<f64>) -> Result<Self> {
        let n = 2 * blocks.len() + scalars.len();
        if n == 0 {
            return Err(Error::InvalidParameter("empty canonical form".into()));
        }
        for b in &blocks {
            if !(b.rate > 0.0) {
                return Err(Error::InvalidRate(b.rate));
            }
            if b.frequency == 0.0 || !b.frequency.is_finite() {
                return Err(Error::InvalidParameter(format!("block frequency must be nonzero, got {}", b.frequency)));
            }
        }
        if let Some(&bad) = scalars.iter().find(|s| !(**s > 0.0)) {
            return Err(Error::InvalidRate(bad));
        }
        Ok(Self { blocks, scalars, basis: DMatrix::identity(n, n), whitening: DMatrix::identity(n, n) })
    }

    pub fn dim(&self) -> usize {
        2 * self.blocks.len() + self.scalars.len()
    }

    /// Per-coordinate rates in canonical order, each block rate repeated.
    pub fn coordinate_rates(&self) -> SpectralParams {
        let rates = self
            .blocks
            .iter()
            .flat_map(|b| [b.rate, b.rate])
            .chain(self.scalars.iter().copied())
            .collect();
        SpectralParams::new(rates).expect("canonical rates are positive")
    }

    pub fn canonical_drift(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut d = DMatrix::zeros(n, n);
        for (j, b) in self.blocks.iter().enumerate() {
            d.view_mut((2 * j, 2 * j), (2, 2)).copy_from(&b.drift());
        }
        let offset = 2 * self.blocks.len();
        for (i, s) in self.scalars.iter().enumerate() {
            d[(offset + i, offset + i)] = -s;
        }
        d
    }

    pub fn canonical_model(&self) -> OUModel {
        let n = self.dim();
        OUModel::new(DMatrix::identity(n, n), self.canonical_drift()).expect("canonical drift is Hurwitz")
    }

    /// The linear map from original to canonical coordinates.
    pub fn transform(&self) -> DMatrix<f64> {
        &self.basis * &self.whitening
    }

    pub fn to_canonical(&self, x: &[f64]) -> Vec<f64> {
        (self.transform() * nalgebra::DVector::from_column_slice(x)).as_slice().to_vec()
    }

    pub fn from_canonical(&self, y: &[f64]) -> Vec<f64> {
        let inv = self.inverse_transform();
        (inv * nalgebra::DVector::from_column_slice(y)).as_slice().to_vec()
    }

    pub fn inverse_transform(&self) -> DMatrix<f64> {
        let unwhiten = self.whitening.clone().try_inverse().expect("whitening is invertible");
        unwhiten * self.basis.transpose()
    }
}

fn symmetric_sqrt(m: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let eig = m.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let root = eig.eigenvalues.map(|e| e.max(0.0).sqrt());
    let sqrt = v * DMatrix::from_diagonal(&root) * v.transpose();
    let inv = v * DMatrix::from_diagonal(&root.map(|r| 1.0 / r)) * v.transpose();
    (sqrt, inv)
}

/// Commutator test on `A = Q_inf^{-1/2} B Q_inf^{1/2}`. Default tolerance is
/// `1e-9 ||A||_F^2`.
pub fn check_normal(model: &OUModel, tolerance: Option<f64>) -> NormalityCheck {
    let (root, inv_root) = symmetric_sqrt(model.invariant_covariance());
    let a = &inv_root * model.drift() * &root;
    let at = a.transpose();
    let commutator_norm = (&a * &at - &at * &a).norm();
    let tolerance = tolerance.unwrap_or(1e-9 * a.norm_squared());
    NormalityCheck { commutator_norm, tolerance, is_normal: commutator_norm <= tolerance }
}

enum Unit {
    Block { rate: f64, frequency: f64, rows: [Vec<f64>; 2] },
    Scalar { rate: f64, row: Vec<f64> },
}

fn orient_scalar(mut row: Vec<f64>) -> Vec<f64> {
    let pivot = row.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
    if pivot < 0.0 {
        row.iter_mut().for_each(|v| *v = -*v);
    }
    row
}

/// Rotates a basis pair so that, at the column where the pair has the most
/// weight, the first vector is positive and the second vanishes.
fn orient_pair(first: Vec<f64>, second: Vec<f64>) -> [Vec<f64>; 2] {
    let col = (0..first.len())
        .max_by(|&a, &b| {
            let wa = first[a].powi(2) + second[a].powi(2);
            let wb = first[b].powi(2) + second[b].powi(2);
            wa.total_cmp(&wb).then(b.cmp(&a))
        })
        .unwrap_or(0);
    let rho = first[col].hypot(second[col]);
    let (c, s) = (first[col] / rho, second[col] / rho);
    let a: Vec<f64> = first.iter().zip(&second).map(|(p, q)| c * p + s * q).collect();
    let b: Vec<f64> = first.iter().zip(&second).map(|(p, q)| -s * p + c * q).collect();
    [a, b]
}

/// Reduces a normal model to canonical form. Blocks come first, then
/// scalars, each group in ascending rate with ties kept in Schur order.
pub fn decompose(model: &OUModel) -> Result<CanonicalForm> {
    let check = check_normal(model, None);
    if !check.is_normal {
        return Err(Error::NotNormal { commutator: check.commutator_norm, tolerance: check.tolerance });
    }
    let n = model.dim();
    let (root, whitening) = symmetric_sqrt(model.diffusion());
    let whitened = &whitening * model.drift() * &root;
    let (schur_vectors, triangular) = whitened.clone().schur().unpack();
    let scale = triangular.amax().max(1.0);
    let mut units = Vec::new();
    let mut i = 0;
    let row_of = |c: usize| -> Vec<f64> { schur_vectors.column(c).iter().copied().collect() };
    while i < n {
        let is_pair = i + 1 < n && triangular[(i + 1, i)].abs() > 1e-12 * scale;
        if !is_pair {
            units.push(Unit::Scalar { rate: -triangular[(i, i)], row: orient_scalar(row_of(i)) });
            i += 1;
            continue;
        }
        let (p, r, s, w) =
            (triangular[(i, i)], triangular[(i, i + 1)], triangular[(i + 1, i)], triangular[(i + 1, i + 1)]);
        let rate = -0.5 * (p + w);
        let frequency = 0.5 * (r - s);
        if frequency.abs() < DEGENERATE_FREQUENCY {
            log::warn!("rotation block with frequency {frequency:.3e} demoted to two scalar rates");
            let sym = DMatrix::from_row_slice(2, 2, &[p, 0.5 * (r + s), 0.5 * (r + s), w]).symmetric_eigen();
            let (c0, c1) = (row_of(i), row_of(i + 1));
            for k in 0..2 {
                let v = sym.eigenvectors.column(k);
                let row: Vec<f64> = c0.iter().zip(&c1).map(|(a, b)| v[0] * a + v[1] * b).collect();
                units.push(Unit::Scalar { rate: -sym.eigenvalues[k], row: orient_scalar(row) });
            }
        } else {
            let (first, mut second) = (row_of(i), row_of(i + 1));
            if frequency < 0.0 {
                second.iter_mut().for_each(|v| *v = -*v);
            }
            units.push(Unit::Block { rate, frequency: frequency.abs(), rows: orient_pair(first, second) });
        }
        i += 2;
    }
    let mut blocks: Vec<(f64, f64, [Vec<f64>; 2])> = Vec::new();
    let mut scalars: Vec<(f64, Vec<f64>)> = Vec::new();
    for u in units {
        match u {
            Unit::Block { rate, frequency, rows } => blocks.push((rate, frequency, rows)),
            Unit::Scalar { rate, row } => scalars.push((rate, row)),
        }
    }
    blocks.sort_by(|a, b| a.0.total_cmp(&b.0));
    scalars.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut basis = DMatrix::zeros(n, n);
    let mut next = 0;
    for (_, _, rows) in &blocks {
        for row in rows {
            for (c, v) in row.iter().enumerate() {
                basis[(next, c)] = *v;
            }
            next += 1;
        }
    }
    for (_, row) in &scalars {
        for (c, v) in row.iter().enumerate() {
            basis[(next, c)] = *v;
        }
        next += 1;
    }
    Ok(CanonicalForm {
        blocks: blocks.iter().map(|(rate, frequency, _)| RotationBlock { rate: *rate, frequency: *frequency }).collect(),
        scalars: scalars.iter().map(|(rate, _)| *rate).collect(),
        basis,
        whitening,
    })
}

/// The model whose canonical form is `form`, expressed in the original
/// coordinates.
pub fn reconstruct(form: &CanonicalForm) -> Result<OUModel> {
    let t = form.transform();
    let t_inv = form.inverse_transform();
    let drift = &t_inv * form.canonical_drift() * &t;
    let diffusion = &t_inv * t_inv.transpose();
    let diffusion = (&diffusion + diffusion.transpose()) * 0.5;
    OUModel::new(diffusion, drift)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_model_is_already_canonical() {
        let m = OUModel::new(DMatrix::identity(2, 2), DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -2.0])).unwrap();
        let f = decompose(&m).unwrap();
        assert!(f.blocks.is_empty());
        assert_eq!(f.scalars.len(), 2);
        assert!((f.scalars[0] - 1.0).abs() < 1e-14 && (f.scalars[1] - 2.0).abs() < 1e-14);
        assert!((&f.basis - DMatrix::identity(2, 2)).amax() < 1e-14);
    }

    #[test]
    fn rotation_drift_recovered() {
        let m = OUModel::new(DMatrix::identity(2, 2), DMatrix::from_row_slice(2, 2, &[-1.0, 3.0, -3.0, -1.0])).unwrap();
        let f = decompose(&m).unwrap();
        assert_eq!(f.blocks.len(), 1);
        assert!((f.blocks[0].rate - 1.0).abs() < 1e-12);
        assert!((f.blocks[0].frequency - 3.0).abs() < 1e-12);
    }

    #[test]
    fn jordan_block_is_not_normal() {
        let m = OUModel::new(DMatrix::identity(2, 2), DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0])).unwrap();
        let c = check_normal(&m, None);
        assert!(!c.is_normal && c.commutator_norm > 0.1);
        assert!(matches!(decompose(&m), Err(Error::NotNormal { .. })));
    }

    #[test]
    fn building_block_drift_and_normality() {
        let skew = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let b = BuildingBlock::new(0.8, skew).unwrap();
        let c = check_normal(&b.model().unwrap(), None);
        assert!(c.is_normal && c.commutator_norm < 1e-12);
        assert!(BuildingBlock::new(1.0, DMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn reconstruct_examples() {
        let one = reconstruct(&CanonicalForm::from_parts(vec![], vec![1.0]).unwrap()).unwrap();
        assert!((one.drift()[(0, 0)] + 1.0).abs() < 1e-15 && (one.diffusion()[(0, 0)] - 1.0).abs() < 1e-15);
        let blk =
            reconstruct(&CanonicalForm::from_parts(vec![RotationBlock { rate: 1.0, frequency: 2.0 }], vec![]).unwrap())
                .unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[-1.0, 2.0, -2.0, -1.0]);
        assert!((blk.drift() - want).amax() < 1e-15);
    }
}
