use nalgebra::DMatrix;

use super::{CovarianceMatrix, SYMPLECTIC_TOL};
use crate::error::{domain, Error, Result};

/// Block-diagonal symplectic form with per-mode blocks `[[0, 1], [-1, 0]]`.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

/// Real `2n x 2n` matrix preserving the symplectic form, acting on quadrature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticTransform {
    entries: DMatrix<f64>,
}

impl SymplecticTransform {
    /// Validates `S Ω Sᵀ = Ω`. The tolerance grows with `max|S_ij|²` so that
    /// strongly squeezing transforms are not rejected for rounding.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = entries.shape();
        if rows != cols || rows == 0 || rows % 2 != 0 {
            return Err(Error::Argument(format!(
                "symplectic transform must be 2n x 2n with n >= 1, got {rows} x {cols}"
            )));
        }
        let scale = entries.amax().max(1.0);
        let err = symplectic_defect(&entries);
        if !(err <= SYMPLECTIC_TOL * scale * scale) {
            return domain(format!("matrix is not symplectic: max |SΩSᵀ - Ω| = {err:e}"));
        }
        Ok(Self { entries })
    }

    pub fn identity(n_modes: usize) -> Self {
        Self { entries: DMatrix::identity(2 * n_modes, 2 * n_modes) }
    }

    pub fn n_modes(&self) -> usize {
        self.entries.nrows() / 2
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// `max |S Ω Sᵀ - Ω|`.
    pub fn defect(&self) -> f64 {
        symplectic_defect(&self.entries)
    }

    /// The transform applying `self` first and then `next`.
    pub fn then(&self, next: &SymplecticTransform) -> Result<SymplecticTransform> {
        if next.n_modes() != self.n_modes() {
            return Err(Error::Shape { expected: self.n_modes(), actual: next.n_modes() });
        }
        Ok(SymplecticTransform { entries: &next.entries * &self.entries })
    }
}

fn symplectic_defect(s: &DMatrix<f64>) -> f64 {
    let omega = symplectic_form(s.nrows() / 2);
    (s * &omega * s.transpose() - omega).amax()
}

fn check_mode(mode: usize, n_modes: usize) -> Result<()> {
    if mode >= n_modes {
        return Err(Error::ModeIndex { index: mode, n_modes });
    }
    Ok(())
}

/// Phase-space rotation of one mode: the new `q` is `cosθ q + sinθ p`.
pub fn mode_rotation(theta: f64, mode: usize, n_modes: usize) -> Result<SymplecticTransform> {
    check_mode(mode, n_modes)?;
    if !theta.is_finite() {
        return domain("rotation angle must be finite");
    }
    let (s, c) = theta.sin_cos();
    let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
    let k = 2 * mode;
    m[(k, k)] = c;
    m[(k, k + 1)] = s;
    m[(k + 1, k)] = -s;
    m[(k + 1, k + 1)] = c;
    Ok(SymplecticTransform { entries: m })
}

/// Beam splitter of transmittance `t` coupling `mode_a` and `mode_b`:
/// `a' = √t a + √(1-t) b`, `b' = -√(1-t) a + √t b`.
pub fn beam_splitter(t: f64, mode_a: usize, mode_b: usize, n_modes: usize) -> Result<SymplecticTransform> {
    if !(0.0..=1.0).contains(&t) {
        return domain(format!("beam splitter transmittance must lie in [0, 1], got {t}"));
    }
    check_mode(mode_a, n_modes)?;
    check_mode(mode_b, n_modes)?;
    if mode_a == mode_b {
        return Err(Error::ModeSelection(format!("beam splitter needs two distinct modes, got {mode_a} twice")));
    }
    let (st, sr) = (t.sqrt(), (1.0 - t).sqrt());
    let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
    for q in 0..2 {
        let (a, b) = (2 * mode_a + q, 2 * mode_b + q);
        m[(a, a)] = st;
        m[(a, b)] = sr;
        m[(b, a)] = -sr;
        m[(b, b)] = st;
    }
    Ok(SymplecticTransform { entries: m })
}

/// Single-mode squeezer `diag(e^{-r}, e^{r})` on `mode`.
pub fn squeezer(r: f64, mode: usize, n_modes: usize) -> Result<SymplecticTransform> {
    check_mode(mode, n_modes)?;
    if !r.is_finite() {
        return domain("squeezing parameter must be finite");
    }
    let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
    m[(2 * mode, 2 * mode)] = (-r).exp();
    m[(2 * mode + 1, 2 * mode + 1)] = r.exp();
    Ok(SymplecticTransform { entries: m })
}

/// `S Σ Sᵀ`.
pub fn apply(s: &SymplecticTransform, sigma: &CovarianceMatrix) -> Result<CovarianceMatrix> {
    if s.n_modes() != sigma.n_modes() {
        return Err(Error::Shape { expected: s.n_modes(), actual: sigma.n_modes() });
    }
    let out = &s.entries * sigma.entries() * s.entries.transpose();
    CovarianceMatrix::from_symmetrized(out)
}
