//! Closed-form covariance matrices written out entry by entry for the
//! rotated-frame protocol, rather than derived by symplectic action.
//!
//! These forms carry `(V+1)/2 · R` corrections on the rotated mode and a
//! non-orthogonal frame block `P = [[cosθ, 0], [-sinθ, -1]]`. They coincide
//! with the symplectic construction at zero angles; elsewhere they are not
//! guaranteed to satisfy the uncertainty relation, so each one is returned
//! together with a physicality report instead of being rejected.

use nalgebra::{DMatrix, Matrix2};

use super::{CovarianceMatrix, PhysicalityReport};
use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LiteralKind {
    /// Alice-Bob pair with Bob's frame rotated by `theta`.
    RotatedFrame { v: f64, theta: f64 },
    /// Eve's two-mode cloner state with frame angle `phi`.
    EntanglingCloner { w: f64, phi: f64 },
    /// Four-mode (A, B, E1, E2) state after the cloner beam splitter.
    JointAbe { v: f64, w: f64, t: f64, theta: f64, phi: f64 },
    /// Alice and Bob both measuring in rotated frames.
    TwoAngle { v: f64, theta_a: f64, theta_b: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiteralCovariance {
    pub covariance: CovarianceMatrix,
    pub physicality: PhysicalityReport,
}

/// Cross-correlation amplitudes of the joint A-B-E1-E2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointCoefficients {
    pub x_plus: f64,
    pub x_minus: f64,
    pub y_plus: f64,
    pub y_minus: f64,
}

pub fn joint_coefficients(v: f64, w: f64, t: f64) -> Result<JointCoefficients> {
    check_variance("V", v)?;
    check_variance("W", w)?;
    check_transmittance(t)?;
    Ok(JointCoefficients {
        x_plus: (t * (v * v - 1.0)).sqrt(),
        x_minus: -((1.0 - t) * (v * v - 1.0)).sqrt(),
        y_plus: (t * (w * w - 1.0)).sqrt(),
        y_minus: ((1.0 - t) * (w * w - 1.0)).sqrt(),
    })
}

fn check_variance(name: &str, v: f64) -> Result<()> {
    if !(v >= 1.0) || !v.is_finite() {
        return domain(format!("{name} must be a finite variance >= 1, got {v}"));
    }
    Ok(())
}

fn check_transmittance(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return domain(format!("transmittance must lie in [0, 1], got {t}"));
    }
    Ok(())
}

fn frame(angle: f64) -> Matrix2<f64> {
    Matrix2::new(angle.cos(), 0.0, -angle.sin(), -1.0)
}

fn shear(angle: f64) -> Matrix2<f64> {
    let s = angle.sin();
    Matrix2::new(0.0, s, s, 0.0)
}

fn rotated_block(v: f64, angle: f64) -> Matrix2<f64> {
    Matrix2::identity() * v + shear(angle) * (0.5 * (v + 1.0))
}

fn assemble(blocks: &[&[Matrix2<f64>]]) -> DMatrix<f64> {
    let n = blocks.len();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for (i, row) in blocks.iter().enumerate() {
        assert_eq!(row.len(), n);
        for (j, b) in row.iter().enumerate() {
            out.fixed_view_mut::<2, 2>(2 * i, 2 * j).copy_from(b);
        }
    }
    out
}

fn two_mode(v: f64, frame_block: Matrix2<f64>, bob: Matrix2<f64>, alice: Matrix2<f64>) -> DMatrix<f64> {
    let c = frame_block * (v * v - 1.0).sqrt();
    assemble(&[&[alice, c], &[c.transpose(), bob]])
}

pub fn literal_covariance(kind: &LiteralKind) -> Result<LiteralCovariance> {
    let i2 = Matrix2::<f64>::identity();
    let entries = match *kind {
        LiteralKind::RotatedFrame { v, theta } => {
            check_variance("V", v)?;
            two_mode(v, frame(theta), rotated_block(v, theta), i2 * v)
        }
        LiteralKind::EntanglingCloner { w, phi } => {
            check_variance("W", w)?;
            two_mode(w, frame(phi), rotated_block(w, phi), i2 * w)
        }
        LiteralKind::TwoAngle { v, theta_a, theta_b } => {
            check_variance("V", v)?;
            let cs = theta_a.cos() * theta_b.cos() - theta_a.sin() * theta_b.sin();
            let p1 = Matrix2::new(cs, -theta_a.sin(), -theta_b.sin(), -1.0);
            two_mode(v, p1, rotated_block(v, theta_b), rotated_block(v, theta_a))
        }
        LiteralKind::JointAbe { v, w, t, theta, phi } => {
            let k = joint_coefficients(v, w, t)?;
            let (p, q) = (frame(theta), frame(phi));
            let vr = i2 * v + shear(theta);
            let z = (i2 * w - vr) * (t * (1.0 - t)).sqrt();
            let z1 = vr * t + i2 * ((1.0 - t) * w);
            let z2 = vr * (1.0 - t) + i2 * (t * w);
            let zero = Matrix2::zeros();
            assemble(&[
                &[i2 * v, p * k.x_plus, p * k.x_minus, zero],
                &[p.transpose() * k.x_plus, z1, z, q * k.y_minus],
                &[p.transpose() * k.x_minus, z, z2, q * k.y_plus],
                &[zero, q.transpose() * k.y_minus, q.transpose() * k.y_plus, rotated_block(w, phi)],
            ])
        }
    };
    let covariance = CovarianceMatrix::new(entries)?;
    let physicality = covariance.physicality();
    Ok(LiteralCovariance { covariance, physicality })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{apply, beam_splitter};
    use approx::assert_abs_diff_eq;

    #[test]
    fn rotated_frame_at_zero_is_tmsvs() {
        for v in [1.0, 2.0, 6.0] {
            let lit = literal_covariance(&LiteralKind::RotatedFrame { v, theta: 0.0 }).unwrap();
            assert_abs_diff_eq!(
                lit.covariance.entries(),
                CovarianceMatrix::tmsvs(v).unwrap().entries(),
                epsilon = 1e-15
            );
            assert!(lit.physicality.physical);
        }
    }

    #[test]
    fn two_angle_at_zero_is_tmsvs() {
        let lit = literal_covariance(&LiteralKind::TwoAngle { v: 3.0, theta_a: 0.0, theta_b: 0.0 }).unwrap();
        assert_abs_diff_eq!(lit.covariance.entries(), CovarianceMatrix::tmsvs(3.0).unwrap().entries(), epsilon = 1e-15);
    }

    #[test]
    fn lossless_channel_decouples_eve() {
        let k = joint_coefficients(6.0, 2.0, 1.0).unwrap();
        assert_abs_diff_eq!(k.x_plus, 35f64.sqrt(), epsilon = 1e-15);
        assert_eq!(k.x_minus, 0.0);
        assert_abs_diff_eq!(k.y_plus, 3f64.sqrt(), epsilon = 1e-15);
        assert_eq!(k.y_minus, 0.0);
    }

    #[test]
    fn joint_blocks_at_nonzero_angle() {
        // Z, Z1, Z2 at (V=6, W=2, T=0.5, θ=0.4, φ=0), evaluated independently:
        // sin(0.4) = 0.38941834230865049166; diagonals 4, 4, -2; off-diagonals
        // T sinθ, (1-T) sinθ, -√(T(1-T)) sinθ.
        let lit = literal_covariance(&LiteralKind::JointAbe { v: 6.0, w: 2.0, t: 0.5, theta: 0.4, phi: 0.0 }).unwrap();
        let s = 0.389_418_342_308_650_5;
        let b = |i, j| lit.covariance.block(i, j).unwrap();
        assert_abs_diff_eq!(b(1, 1), Matrix2::new(4.0, 0.5 * s, 0.5 * s, 4.0), epsilon = 1e-14);
        assert_abs_diff_eq!(b(2, 2), Matrix2::new(4.0, 0.5 * s, 0.5 * s, 4.0), epsilon = 1e-14);
        assert_abs_diff_eq!(b(1, 2), Matrix2::new(-2.0, -0.5 * s, -0.5 * s, -2.0), epsilon = 1e-14);
        assert_abs_diff_eq!(b(0, 3), Matrix2::zeros(), epsilon = 0.0);
    }

    #[test]
    fn joint_at_zero_angles_equals_beam_splitter_construction() {
        let (v, w, t) = (6.0, 1.3, 0.35);
        let lit = literal_covariance(&LiteralKind::JointAbe { v, w, t, theta: 0.0, phi: 0.0 }).unwrap();
        let abe = CovarianceMatrix::tmsvs(v).unwrap().direct_sum(&CovarianceMatrix::tmsvs(w).unwrap());
        let built = apply(&beam_splitter(t, 1, 2, 4).unwrap(), &abe).unwrap();
        assert_abs_diff_eq!(lit.covariance.entries(), built.entries(), epsilon = 1e-13);
        assert!(lit.physicality.physical);
    }

    #[test]
    fn rotated_frame_physicality_is_reported() {
        let lit = literal_covariance(&LiteralKind::RotatedFrame { v: 6.0, theta: 0.9 }).unwrap();
        assert_eq!(lit.physicality, lit.covariance.physicality());
        let cloner = literal_covariance(&LiteralKind::EntanglingCloner { w: 1.2, phi: 0.0 }).unwrap();
        assert!(cloner.physicality.physical);
    }

    #[test]
    fn literal_argument_errors() {
        assert!(literal_covariance(&LiteralKind::RotatedFrame { v: 0.5, theta: 0.0 }).is_err());
        assert!(literal_covariance(&LiteralKind::JointAbe { v: 2.0, w: 1.0, t: 1.5, theta: 0.0, phi: 0.0 }).is_err());
    }
}
