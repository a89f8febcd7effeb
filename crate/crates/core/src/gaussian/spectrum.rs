use nalgebra::DMatrix;

use super::{symplectic_form, CovarianceMatrix, PHYSICAL_TOL};
use crate::error::{domain, Error, Result};

/// Symplectic eigenvalues in descending order.
///
/// These are the moduli of the eigenvalues of `iΩΣ`. They are computed from
/// the real antisymmetric `M = Σ^{1/2} Ω Σ^{1/2}`, whose square `-M² = MᵀM`
/// is symmetric with every `ν²` appearing twice.
pub fn symplectic_eigenvalues(sigma: &CovarianceMatrix) -> Result<Vec<f64>> {
    let n = sigma.n_modes();
    let eig = sigma.entries().clone().symmetric_eigen();
    let min = eig.eigenvalues.min();
    if !(min > 0.0) {
        return domain(format!("covariance matrix is not positive definite (min eigenvalue {min:e})"));
    }
    let root =
        &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt)) * eig.eigenvectors.transpose();
    let m = &root * symplectic_form(n) * &root;
    let mut sq: Vec<f64> = (m.transpose() * &m).symmetric_eigenvalues().iter().copied().collect();
    sq.sort_by(|a, b| b.total_cmp(a));
    Ok(sq.chunks(2).map(|pair| (0.5 * (pair[0] + pair[1])).max(0.0).sqrt()).collect())
}

/// Closed-form symplectic eigenvalues `(ν₊, ν₋)` of a two-mode covariance
/// `[[A, C], [Cᵀ, B]]`: `ν± = √((μ ± √(μ² - 4 det Σ)) / 2)` with
/// `μ = det A + det B + 2 det C`.
pub fn two_mode_symplectic_eigenvalues(sigma: &CovarianceMatrix) -> Result<(f64, f64)> {
    if sigma.n_modes() != 2 {
        return Err(Error::Shape { expected: 2, actual: sigma.n_modes() });
    }
    let a = sigma.block(0, 0)?.determinant();
    let b = sigma.block(1, 1)?.determinant();
    let c = sigma.block(0, 1)?.determinant();
    let det = sigma.entries().determinant();
    let mu = a + b + 2.0 * c;
    let disc = (mu * mu - 4.0 * det).max(0.0).sqrt();
    let plus = 0.5 * (mu + disc);
    if !(plus > 0.0) || det < 0.0 {
        return domain(format!("two-mode covariance has invalid symplectic invariants (mu {mu:e}, det {det:e})"));
    }
    // ν₊² ν₋² = det Σ; dividing avoids cancellation in μ - √(μ² - 4 det Σ).
    Ok((plus.sqrt(), (det / plus).sqrt()))
}

/// Entropy in bits of a single thermal mode with symplectic eigenvalue `nu`:
/// `g(ν) = ((ν+1)/2) log2((ν+1)/2) - ((ν-1)/2) log2((ν-1)/2)`.
///
/// Values within `PHYSICAL_TOL` below 1 are treated as 1; `g(1) = 0`.
pub fn g_entropy(nu: f64) -> Result<f64> {
    if !(nu >= 1.0 - PHYSICAL_TOL) {
        return domain(format!("symplectic eigenvalue must be >= 1, got {nu}"));
    }
    if !nu.is_finite() {
        return domain("symplectic eigenvalue must be finite");
    }
    let plus = 0.5 * (nu + 1.0);
    let minus = 0.5 * (nu - 1.0);
    let head = if plus > 1.0 { plus * plus.log2() } else { 0.0 };
    let tail = if minus > 0.0 { minus * minus.log2() } else { 0.0 };
    Ok(head - tail)
}

/// Sum of `g` over all symplectic eigenvalues, in bits.
pub fn von_neumann_entropy(sigma: &CovarianceMatrix) -> Result<f64> {
    symplectic_eigenvalues(sigma)?.into_iter().map(g_entropy).sum()
}
