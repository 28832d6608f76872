//! Polar-like coordinates `xi = e^{Lambda s} xi~` with `R(xi~) = beta`, and
//! the geometry of the dilation flow on level sets of `R`.

use crate::error::{check_dim, Error, Result};
use crate::model::SpectralParams;
use crate::roots::bisect;

#[derive(Debug, Clone, PartialEq)]
pub struct PolarPoint {
    pub s: f64,
    pub xi_tilde: Vec<f64>,
    pub beta: f64,
}

impl PolarPoint {
    pub fn compose(&self, params: &SpectralParams) -> Vec<f64> {
        params.dilate(self.s, &self.xi_tilde)
    }
}

/// `Lambda x` as a vector.
fn weighted(params: &SpectralParams, x: &[f64]) -> Vec<f64> {
    params.rates().iter().zip(x).map(|(l, v)| l * v).collect()
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn polar_decompose(xi: &[f64], beta: f64, params: &SpectralParams) -> Result<PolarPoint> {
    check_dim(params.dim(), xi.len())?;
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!("level beta = {beta} must be positive")));
    }
    let r0 = params.quadratic_form(xi);
    if r0 == 0.0 {
        return Err(Error::ZeroVector);
    }
    let log_ratio = (r0 / beta).ln();
    let (a, b) = (log_ratio / (2.0 * params.rate_max()), log_ratio / (2.0 * params.rate_min()));
    let (lo, hi) = (a.min(b), a.max(b));
    let pad = 1e-9 * (1.0 + hi.abs());
    let gap = |s: f64| beta.ln() - params.quadratic_form(&params.dilate(-s, xi)).ln();
    let mut s = if hi - lo < 1e-300 { lo } else { bisect(gap, lo - pad, hi + pad)? };
    for _ in 0..2 {
        let y = params.dilate(-s, xi);
        let r = params.quadratic_form(&y);
        let slope = 2.0 * weighted(params, &y).iter().map(|v| v * v).sum::<f64>() / r;
        if slope > 0.0 {
            s += (r / beta).ln() / slope;
        }
    }
    Ok(PolarPoint { s, xi_tilde: params.dilate(-s, xi), beta })
}

/// Volume element of `(s, xi~) -> e^{Lambda s} xi~` against `ds dS`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LebesgueJacobian {
    /// `|e^{Lambda s} xi~|`.
    pub radial_factor: f64,
    /// `e^{tr(Lambda) s} |Lambda xi~|`.
    pub exact: f64,
    pub ratio: f64,
}

pub fn lebesgue_jacobian(point: &PolarPoint, params: &SpectralParams) -> LebesgueJacobian {
    let radial_factor = norm(&point.compose(params));
    let trace: f64 = params.rates().iter().sum();
    let exact = (trace * point.s).exp() * norm(&weighted(params, &point.xi_tilde));
    LebesgueJacobian { radial_factor, exact, ratio: exact / radial_factor }
}

/// Cosine of the angle between the flow direction `Lambda e^{Lambda s} xi`
/// and the normal of the dilated level set at `e^{Lambda s} xi`.
pub fn transversality(s: f64, xi: &[f64], params: &SpectralParams) -> f64 {
    let mut top = 0.0;
    let mut contracted = 0.0;
    let mut expanded = 0.0;
    for (&l, &x) in params.rates().iter().zip(xi) {
        let w = l * l * x * x;
        top += w;
        contracted += (-2.0 * l * s).exp() * w;
        expanded += (2.0 * l * s).exp() * w;
    }
    (top / (contracted.sqrt() * expanded.sqrt())).min(1.0)
}

/// Local area magnification `|F_s(S)| / |S|` of the surface element of
/// `E_beta` at `xi` under `F_s = e^{Lambda s}`.
pub fn area_ratio(s: f64, xi: &[f64], params: &SpectralParams) -> f64 {
    let trace: f64 = params.rates().iter().sum();
    let mut top = 0.0;
    let mut bottom = 0.0;
    for (&l, &x) in params.rates().iter().zip(xi) {
        let w = l * l * x * x;
        bottom += w;
        top += (2.0 * (trace - l) * s).exp() * w;
    }
    (top / bottom).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anisotropic_roundtrip() {
        let p = SpectralParams::new(vec![1.0, 2.0]).unwrap();
        let pt = polar_decompose(&[2.0, 1.0], 1.0, &p).unwrap();
        assert!((p.quadratic_form(&pt.xi_tilde) - 1.0).abs() < 1e-12);
        let back = pt.compose(&p);
        assert!((back[0] - 2.0).abs() < 1e-12 && (back[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn isotropic_closed_form() {
        let p = SpectralParams::new(vec![1.5; 3]).unwrap();
        let xi = [0.3, -2.0, 1.1];
        let pt = polar_decompose(&xi, 4.0, &p).unwrap();
        let expect = (p.quadratic_form(&xi) / 4.0).ln() / 3.0;
        assert!((pt.s - expect).abs() < 1e-12);
    }

    #[test]
    fn zero_is_rejected() {
        let p = SpectralParams::new(vec![1.0]).unwrap();
        assert_eq!(polar_decompose(&[0.0], 1.0, &p), Err(Error::ZeroVector));
    }

    #[test]
    fn isotropic_flow_is_normal() {
        let p = SpectralParams::new(vec![0.7, 0.7]).unwrap();
        assert!((transversality(2.0, &[1.0, 0.5], &p) - 1.0).abs() < 1e-14);
        assert_eq!(transversality(0.0, &[1.0, 0.5], &SpectralParams::new(vec![1.0, 3.0]).unwrap()), 1.0);
    }
}
