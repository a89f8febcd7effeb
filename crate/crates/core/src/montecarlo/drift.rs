use std::f64::consts::TAU;

use rand_distr::{Distribution, StandardNormal};

use super::{stream, DRIFT_STREAM};
use crate::error::{domain, Error, Result};

/// Frame-angle drift: deterministic rate plus a Gaussian random walk, held
/// constant over each block of `block_size` pulses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftModel {
    pub theta0: f64,
    /// radians per pulse
    pub rate: f64,
    /// random-walk step standard deviation, radians per pulse
    pub walk_sigma: f64,
    pub block_size: usize,
}

impl DriftModel {
    pub fn fixed(theta0: f64, block_size: usize) -> Self {
        Self { theta0, rate: 0.0, walk_sigma: 0.0, block_size }
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_size == 0 {
            return Err(Error::Argument("block size must be >= 1".into()));
        }
        if !(self.walk_sigma >= 0.0) || !self.walk_sigma.is_finite() {
            return domain(format!("walk sigma must be finite and >= 0, got {}", self.walk_sigma));
        }
        if !self.theta0.is_finite() || !self.rate.is_finite() {
            return domain("drift angle and rate must be finite");
        }
        Ok(())
    }
}

/// Raw (unwrapped) block angles `θ_k = θ0 + rate·k·B + W_k`, where the walk
/// `W` gains an `N(0, walk_sigma²·B)` increment per block and `W_0 = 0`.
pub fn drift_sequence(drift: &DriftModel, n_blocks: usize, seed: u64) -> Result<Vec<f64>> {
    drift.validate()?;
    if n_blocks == 0 {
        return Err(Error::Argument("need at least one block".into()));
    }
    let b = drift.block_size as f64;
    let step_sd = drift.walk_sigma * b.sqrt();
    let mut rng = stream(seed, DRIFT_STREAM);
    let mut walk = 0.0;
    let mut out = Vec::with_capacity(n_blocks);
    for k in 0..n_blocks {
        if k > 0 && step_sd > 0.0 {
            let z: f64 = StandardNormal.sample(&mut rng);
            walk += step_sd * z;
        }
        out.push(drift.theta0 + drift.rate * k as f64 * b + walk);
    }
    Ok(out)
}

/// Angle reduced to `[0, 2π)` for reporting.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn fixed_angle_is_constant() {
        let seq = drift_sequence(&DriftModel::fixed(0.8, 100), 50, 3).unwrap();
        assert!(seq.iter().all(|&t| t == 0.8));
    }

    #[test]
    fn deterministic_rate() {
        let d = DriftModel { theta0: 0.0, rate: 0.01, walk_sigma: 0.0, block_size: 100 };
        let seq = drift_sequence(&d, 3, 0).unwrap();
        assert_abs_diff_eq!(seq[0], 0.0);
        assert_abs_diff_eq!(seq[1], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(seq[2], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn walk_increments_have_expected_moments() {
        let d = DriftModel { theta0: 0.3, rate: 1e-4, walk_sigma: 0.01, block_size: 100 };
        let n = 10_000;
        let seq = drift_sequence(&d, n, 42).unwrap();
        let inc: Vec<f64> = seq.windows(2).map(|w| w[1] - w[0]).collect();
        let m = inc.len() as f64;
        let mean = inc.iter().sum::<f64>() / m;
        let var = inc.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
        let sd_expect = 0.01 * 10.0;
        // 3σ bounds: mean error sd/√m, variance error var·√(2/m)
        assert!((mean - 0.01).abs() < 3.0 * sd_expect / m.sqrt());
        assert!((var - sd_expect * sd_expect).abs() < 3.0 * sd_expect * sd_expect * (2.0 / m).sqrt());
    }

    #[test]
    fn same_seed_same_sequence() {
        let d = DriftModel { theta0: 0.0, rate: 0.0, walk_sigma: 0.02, block_size: 10 };
        assert_eq!(drift_sequence(&d, 20, 9).unwrap(), drift_sequence(&d, 20, 9).unwrap());
        assert_ne!(drift_sequence(&d, 20, 9).unwrap(), drift_sequence(&d, 20, 10).unwrap());
    }

    #[test]
    fn invalid_models() {
        assert!(drift_sequence(&DriftModel::fixed(0.0, 0), 3, 0).is_err());
        let d = DriftModel { theta0: 0.0, rate: 0.0, walk_sigma: -1.0, block_size: 10 };
        assert!(drift_sequence(&d, 3, 0).is_err());
        assert!(drift_sequence(&DriftModel::fixed(0.0, 10), 0, 0).is_err());
    }

    #[test]
    fn wrapping() {
        assert_abs_diff_eq!(wrap_angle(-0.5), TAU - 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_angle(7.0), 7.0 - TAU, epsilon = 1e-15);
        assert_eq!(wrap_angle(0.0), 0.0);
    }
}
