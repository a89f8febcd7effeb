use nalgebra::{DMatrix, Matrix2};

use super::{apply, mode_rotation, CovarianceMatrix, PINV_CUTOFF};
use crate::error::{Error, Result};

/// How a homodyne measurement at angle `θ` is folded into the conditional covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConditioningStrategy {
    /// Rotate the measured mode so its `q` is `cosθ q + sinθ p`, then project onto `q`.
    #[default]
    Standard,
    /// Sandwich the measured block with `diag(cosθ, sinθ)` and take the pseudoinverse.
    /// Agrees with `Standard` only at `θ ∈ {0, π/2}`.
    Diagonal,
}

impl std::str::FromStr for ConditioningStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Self::Standard),
            "diagonal" => Ok(Self::Diagonal),
            other => Err(Error::Argument(format!("unknown conditioning strategy '{other}'"))),
        }
    }
}

/// Moore-Penrose pseudoinverse of a symmetric matrix by spectral
/// decomposition. Eigenvalues with `|λ| <= PINV_CUTOFF * max(1, max|λ|)` are dropped.
pub fn pseudo_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let scale = eig.eigenvalues.amax().max(1.0);
    let inv = eig.eigenvalues.map(|l| if l.abs() > PINV_CUTOFF * scale { 1.0 / l } else { 0.0 });
    &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose()
}

struct Partition {
    rest: DMatrix<f64>,
    measured: Matrix2<f64>,
    cross: DMatrix<f64>,
}

fn partition(sigma: &CovarianceMatrix, mode: usize) -> Result<Partition> {
    sigma.check_mode(mode)?;
    if sigma.n_modes() < 2 {
        return Err(Error::ModeSelection("conditioning needs at least two modes".into()));
    }
    let others: Vec<usize> = (0..sigma.n_modes()).filter(|&k| k != mode).collect();
    let idx: Vec<usize> = others.iter().flat_map(|&k| [2 * k, 2 * k + 1]).collect();
    let e = sigma.entries();
    Ok(Partition {
        rest: DMatrix::from_fn(idx.len(), idx.len(), |i, j| e[(idx[i], idx[j])]),
        measured: sigma.block(mode, mode)?,
        cross: DMatrix::from_fn(idx.len(), 2, |i, j| e[(idx[i], 2 * mode + j)]),
    })
}

/// Covariance of the unmeasured modes after a homodyne detection of
/// `measured_mode` along `cosθ q + sinθ p`. Gaussian conditioning does not
/// depend on the outcome value, so none is taken.
pub fn homodyne_condition(
    sigma: &CovarianceMatrix,
    measured_mode: usize,
    theta: f64,
    strategy: ConditioningStrategy,
) -> Result<CovarianceMatrix> {
    sigma.check_mode(measured_mode)?;
    sigma.require_physical("homodyne conditioning")?;
    let (state, projector) = match strategy {
        ConditioningStrategy::Standard => {
            let rot = mode_rotation(theta, measured_mode, sigma.n_modes())?;
            (apply(&rot, sigma)?, Matrix2::new(1.0, 0.0, 0.0, 0.0))
        }
        ConditioningStrategy::Diagonal => {
            let (s, c) = theta.sin_cos();
            (sigma.clone(), Matrix2::new(c, 0.0, 0.0, s))
        }
    };
    let p = partition(&state, measured_mode)?;
    let sandwich = projector * p.measured * projector;
    let inv = pseudo_inverse(&DMatrix::from_column_slice(2, 2, sandwich.as_slice()));
    let out = &p.rest - &p.cross * inv * p.cross.transpose();
    CovarianceMatrix::from_symmetrized(out)
}

/// Covariance of the unmeasured modes after a heterodyne (dual-homodyne)
/// detection of `measured_mode`: `A - C (B + I)^{-1} Cᵀ`.
pub fn heterodyne_condition(sigma: &CovarianceMatrix, measured_mode: usize) -> Result<CovarianceMatrix> {
    sigma.require_physical("heterodyne conditioning")?;
    let p = partition(sigma, measured_mode)?;
    let inv = (p.measured + Matrix2::identity())
        .try_inverse()
        .ok_or_else(|| Error::Singular("measured block plus vacuum is singular".into()))?;
    let inv = DMatrix::from_column_slice(2, 2, inv.as_slice());
    let out = &p.rest - &p.cross * inv * p.cross.transpose();
    CovarianceMatrix::from_symmetrized(out)
}
