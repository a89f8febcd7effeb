use std::fmt::Write as _;

use nalgebra::{DMatrix, Matrix2};

use super::{spectrum, symplectic_form, PHYSICAL_TOL, SYMMETRY_TOL};
use crate::error::{domain, Error, Result};

/// Real symmetric `2n x 2n` matrix of quadrature (co)variances.
///
/// Construction checks squareness, even dimension, symmetry and a strictly
/// positive diagonal. The uncertainty relation is *not* enforced here so that
/// transcribed matrices can be inspected; use [`CovarianceMatrix::physicality`]
/// or [`CovarianceMatrix::is_physical`].
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    entries: DMatrix<f64>,
}

/// Outcome of checking the uncertainty relation on a covariance matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalityReport {
    pub positive_definite: bool,
    /// Smallest symplectic eigenvalue; `None` when the matrix is not positive definite.
    pub min_symplectic_eigenvalue: Option<f64>,
    pub physical: bool,
}

impl CovarianceMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = entries.shape();
        if rows != cols || rows == 0 || rows % 2 != 0 {
            return Err(Error::Argument(format!("covariance matrix must be 2n x 2n with n >= 1, got {rows} x {cols}")));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return domain("covariance matrix has non-finite entries");
        }
        for i in 0..rows {
            for j in (i + 1)..rows {
                let gap = (entries[(i, j)] - entries[(j, i)]).abs();
                if gap > SYMMETRY_TOL {
                    return domain(format!("covariance matrix is not symmetric: |S[{i},{j}] - S[{j},{i}]| = {gap:e}"));
                }
            }
            if entries[(i, i)] <= 0.0 {
                return domain(format!("covariance matrix diagonal entry {i} is not positive ({})", entries[(i, i)]));
            }
        }
        Ok(Self { entries })
    }

    /// Builds from a matrix that is symmetric up to rounding, averaging it with its transpose.
    pub(crate) fn from_symmetrized(entries: DMatrix<f64>) -> Result<Self> {
        let sym = (&entries + entries.transpose()) * 0.5;
        Self::new(sym)
    }

    pub fn vacuum(n_modes: usize) -> Self {
        assert!(n_modes > 0, "vacuum needs at least one mode");
        Self { entries: DMatrix::identity(2 * n_modes, 2 * n_modes) }
    }

    /// Single-mode thermal state `v * I`.
    pub fn thermal(v: f64) -> Result<Self> {
        if !(v >= 1.0) {
            return domain(format!("thermal variance must be >= 1, got {v}"));
        }
        Ok(Self { entries: DMatrix::identity(2, 2) * v })
    }

    /// Two-mode squeezed vacuum with per-mode variance `v`.
    pub fn tmsvs(v: f64) -> Result<Self> {
        if !(v >= 1.0) {
            return domain(format!("two-mode squeezed vacuum needs V >= 1, got {v}"));
        }
        let c = (v * v - 1.0).sqrt();
        #[rustfmt::skip]
        let entries = DMatrix::from_row_slice(4, 4, &[
            v,   0.0, c,   0.0,
            0.0, v,   0.0, -c,
            c,   0.0, v,   0.0,
            0.0, -c,  0.0, v,
        ]);
        Ok(Self { entries })
    }

    pub fn n_modes(&self) -> usize {
        self.entries.nrows() / 2
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    /// The `2 x 2` block coupling mode `row` to mode `col`.
    pub fn block(&self, row: usize, col: usize) -> Result<Matrix2<f64>> {
        self.check_mode(row)?;
        self.check_mode(col)?;
        Ok(self.entries.fixed_view::<2, 2>(2 * row, 2 * col).into_owned())
    }

    pub(crate) fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes() {
            return Err(Error::ModeIndex { index: mode, n_modes: self.n_modes() });
        }
        Ok(())
    }

    /// Block-diagonal concatenation `self ⊕ other`.
    pub fn direct_sum(&self, other: &CovarianceMatrix) -> CovarianceMatrix {
        let (a, b) = (self.entries.nrows(), other.entries.nrows());
        let mut entries = DMatrix::zeros(a + b, a + b);
        entries.view_mut((0, 0), (a, a)).copy_from(&self.entries);
        entries.view_mut((a, a), (b, b)).copy_from(&other.entries);
        CovarianceMatrix { entries }
    }

    /// Principal submatrix on `keep_modes`, in the given order.
    pub fn reduce(&self, keep_modes: &[usize]) -> Result<CovarianceMatrix> {
        if keep_modes.is_empty() {
            return Err(Error::ModeSelection("no modes to keep".into()));
        }
        for (k, &m) in keep_modes.iter().enumerate() {
            self.check_mode(m)?;
            if keep_modes[..k].contains(&m) {
                return Err(Error::ModeSelection(format!("mode {m} listed twice")));
            }
        }
        let idx: Vec<usize> = keep_modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let entries = DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.entries[(idx[i], idx[j])]);
        Ok(CovarianceMatrix { entries })
    }

    pub fn physicality(&self) -> PhysicalityReport {
        match spectrum::symplectic_eigenvalues(self) {
            Ok(nu) => {
                let min = nu.last().copied().unwrap_or(f64::NAN);
                PhysicalityReport {
                    positive_definite: true,
                    min_symplectic_eigenvalue: Some(min),
                    physical: min >= 1.0 - PHYSICAL_TOL,
                }
            }
            Err(_) => PhysicalityReport { positive_definite: false, min_symplectic_eigenvalue: None, physical: false },
        }
    }

    pub fn is_physical(&self) -> bool {
        self.physicality().physical
    }

    pub(crate) fn require_physical(&self, what: &str) -> Result<()> {
        let report = self.physicality();
        if report.physical {
            return Ok(());
        }
        match report.min_symplectic_eigenvalue {
            Some(nu) => {
                domain(format!("{what}: covariance violates the uncertainty relation (min symplectic eigenvalue {nu})"))
            }
            None => domain(format!("{what}: covariance matrix is not positive definite")),
        }
    }

    /// `Σ + iΩ` written as the real symmetric matrix `[[Σ, -Ω], [Ω, Σ]]`.
    pub fn uncertainty_matrix(&self) -> DMatrix<f64> {
        let d = self.entries.nrows();
        let omega = symplectic_form(self.n_modes());
        let mut out = DMatrix::zeros(2 * d, 2 * d);
        out.view_mut((0, 0), (d, d)).copy_from(&self.entries);
        out.view_mut((d, d), (d, d)).copy_from(&self.entries);
        out.view_mut((0, d), (d, d)).copy_from(&(-&omega));
        out.view_mut((d, 0), (d, d)).copy_from(&omega);
        out
    }

    /// Row-major CSV dump, one matrix row per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.entries.row_iter() {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:.9e}")).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn tmsvs_unit_variance_is_two_vacua() {
        let s = CovarianceMatrix::tmsvs(1.0).unwrap();
        assert_eq!(s, CovarianceMatrix::vacuum(2));
    }

    #[test]
    fn tmsvs_off_diagonal_block() {
        let s = CovarianceMatrix::tmsvs(2.0).unwrap();
        let c = s.block(0, 1).unwrap();
        let r3 = 3f64.sqrt();
        assert_abs_diff_eq!(c, Matrix2::new(r3, 0.0, 0.0, -r3), epsilon = 1e-15);
        assert_abs_diff_eq!(s.block(1, 1).unwrap(), Matrix2::identity() * 2.0, epsilon = 0.0);
    }

    #[test]
    fn tmsvs_rejects_sub_vacuum_variance() {
        assert!(matches!(CovarianceMatrix::tmsvs(0.99), Err(Error::Domain(_))));
        assert!(CovarianceMatrix::tmsvs(f64::NAN).is_err());
    }

    #[test]
    fn new_rejects_asymmetric_and_odd() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(matches!(CovarianceMatrix::new(asym), Err(Error::Domain(_))));
        assert!(matches!(CovarianceMatrix::new(DMatrix::identity(3, 3)), Err(Error::Argument(_))));
        let neg = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
        assert!(CovarianceMatrix::new(neg).is_err());
    }

    #[test]
    fn direct_sum_of_vacua() {
        let v = CovarianceMatrix::vacuum(1);
        assert_eq!(v.direct_sum(&v), CovarianceMatrix::vacuum(2));
    }

    #[test]
    fn direct_sum_has_zero_cross_blocks() {
        let a = CovarianceMatrix::tmsvs(2.0).unwrap();
        let b = CovarianceMatrix::tmsvs(3.0).unwrap();
        let s = a.direct_sum(&b);
        assert_eq!(s.n_modes(), 4);
        for i in 0..2 {
            for j in 2..4 {
                assert_eq!(s.block(i, j).unwrap(), Matrix2::zeros());
                assert_eq!(s.block(j, i).unwrap(), Matrix2::zeros());
            }
        }
        assert_eq!(s.reduce(&[2, 3]).unwrap(), b);
    }

    #[test]
    fn reduce_tmsvs_to_thermal() {
        let s = CovarianceMatrix::tmsvs(4.5).unwrap();
        assert_eq!(s.reduce(&[0]).unwrap(), CovarianceMatrix::thermal(4.5).unwrap());
        assert_eq!(s.reduce(&[0, 1]).unwrap(), s);
    }

    #[test]
    fn reduce_rejects_bad_selections() {
        let s = CovarianceMatrix::tmsvs(2.0).unwrap();
        assert!(matches!(s.reduce(&[]), Err(Error::ModeSelection(_))));
        assert!(matches!(s.reduce(&[2]), Err(Error::ModeIndex { index: 2, n_modes: 2 })));
        assert!(matches!(s.reduce(&[1, 1]), Err(Error::ModeSelection(_))));
    }

    #[test]
    fn reduce_composes() {
        let s = CovarianceMatrix::tmsvs(2.0).unwrap().direct_sum(&CovarianceMatrix::tmsvs(5.0).unwrap());
        let once = s.reduce(&[3, 0, 2]).unwrap();
        let twice = once.reduce(&[0, 2]).unwrap();
        assert_eq!(twice, s.reduce(&[3, 2]).unwrap());
    }

    #[test]
    fn physicality_flags_squeezed_below_vacuum() {
        let bad = CovarianceMatrix::new(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, 1.0]))).unwrap();
        let rep = bad.physicality();
        assert!(rep.positive_definite && !rep.physical);
        assert_abs_diff_eq!(rep.min_symplectic_eigenvalue.unwrap(), 0.5f64.sqrt(), epsilon = 1e-12);
        assert!(CovarianceMatrix::tmsvs(7.0).unwrap().is_physical());
    }

    #[test]
    fn uncertainty_matrix_is_psd_for_vacuum() {
        let m = CovarianceMatrix::vacuum(2).uncertainty_matrix();
        let min = m.symmetric_eigenvalues().min();
        assert!(min > -1e-12);
    }

    #[test]
    fn csv_dump_has_one_line_per_row() {
        let csv = CovarianceMatrix::tmsvs(2.0).unwrap().to_csv();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().all(|l| l.split(',').count() == 4));
    }
}
