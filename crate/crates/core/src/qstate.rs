//! Density-matrix data model: validation, spectral decomposition, tensor
//! powers and the trace metric.

use crate::config::Tolerances;
use crate::linalg::{self, CMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QStateError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("not Hermitian (asymmetry {defect:e} exceeds {tol:e})")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("trace is not 1 (violation {violation:e} exceeds {tol:e})")]
    NotUnitTrace { violation: f64, tol: f64 },

    #[error("not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPSD { min_eigenvalue: f64, tol: f64 },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("dimension cap exceeded: {requested} > {cap}")]
    DimensionCapExceeded { requested: usize, cap: usize },

    #[error("spectral decomposition failed: residual {residual:e} exceeds {tol:e}")]
    NumericalFailure { residual: f64, tol: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// A validated d-dimensional quantum state.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    mat: CMatrix,
}

/// Eigenvalues (descending) and matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Column k is the eigenvector of eigenvalues[k].
    pub eigenvectors: CMatrix,
}

impl DensityMatrix {
    /// Validate a raw complex matrix as a quantum state.
    ///
    /// Checks Hermiticity, unit trace and positive semidefiniteness against
    /// the given tolerances; the first violated invariant is reported with
    /// its measured magnitude.
    pub fn validate(entries: CMatrix, tol: &Tolerances) -> Result<Self, QStateError> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(QStateError::NotSquare {
                rows: entries.nrows(),
                cols: entries.ncols(),
            });
        }
        let defect = linalg::hermiticity_defect(&entries);
        if defect > tol.herm_tol {
            return Err(QStateError::NotHermitian {
                defect,
                tol: tol.herm_tol,
            });
        }
        let tr = linalg::trace(&entries);
        let violation = (tr - Complex64::new(1.0, 0.0)).norm();
        if violation > tol.trace_tol {
            return Err(QStateError::NotUnitTrace {
                violation,
                tol: tol.trace_tol,
            });
        }
        let (vals, _) = linalg::eigh(&entries);
        let min_eigenvalue = vals.last().copied().unwrap_or(0.0);
        if min_eigenvalue < -tol.psd_tol {
            return Err(QStateError::NotPSD {
                min_eigenvalue,
                tol: tol.psd_tol,
            });
        }
        Ok(DensityMatrix {
            dim: entries.nrows(),
            mat: entries,
        })
    }

    /// Construct without re-validating; for operations whose output is a
    /// state by construction (tensor powers, basis truncations).
    pub(crate) fn trusted(mat: CMatrix) -> Self {
        DensityMatrix {
            dim: mat.nrows(),
            mat,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    /// Smallest eigenvalue (clamped at 0 within psd_tol).
    pub fn lambda_min(&self, tol: &Tolerances) -> f64 {
        let (vals, _) = linalg::eigh(&self.mat);
        let v = *vals.last().expect("non-empty spectrum");
        if v < 0.0 && v >= -tol.psd_tol {
            0.0
        } else {
            v
        }
    }

    pub fn lambda_max(&self) -> f64 {
        let (vals, _) = linalg::eigh(&self.mat);
        vals[0]
    }
}

/// Spectral decomposition with reconstruction and orthonormality checks.
///
/// Eigenvalues within psd_tol below zero are clamped to 0 (and to 1 from
/// above); the clamping never renormalises the state.
pub fn spectral_decompose(rho: &DensityMatrix, tol: &Tolerances) -> Result<Spectrum, QStateError> {
    let (raw_vals, vecs) = linalg::eigh(rho.matrix());
    // Residual check against the raw eigenvalues.
    let n = rho.dim();
    let mut recon = CMatrix::zeros(n, n);
    for (k, &lam) in raw_vals.iter().enumerate() {
        let v = vecs.column(k);
        for i in 0..n {
            for j in 0..n {
                recon[(i, j)] += v[i] * v[j].conj() * Complex64::new(lam, 0.0);
            }
        }
    }
    let residual = linalg::max_abs(&(recon - rho.matrix()));
    if residual > tol.recon_tol {
        return Err(QStateError::NumericalFailure {
            residual,
            tol: tol.recon_tol,
        });
    }
    let ortho = linalg::max_abs(&(vecs.adjoint() * &vecs - CMatrix::identity(n, n)));
    if ortho > tol.recon_tol {
        return Err(QStateError::NumericalFailure {
            residual: ortho,
            tol: tol.recon_tol,
        });
    }
    let mut eigenvalues = Vec::with_capacity(n);
    for &lam in &raw_vals {
        if lam < -tol.psd_tol {
            return Err(QStateError::NotPSD {
                min_eigenvalue: lam,
                tol: tol.psd_tol,
            });
        }
        eigenvalues.push(lam.clamp(0.0, 1.0));
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors: vecs,
    })
}

/// n-fold Kronecker power of a state.
pub fn tensor_power(
    rho: &DensityMatrix,
    n: u32,
    tol: &Tolerances,
) -> Result<DensityMatrix, QStateError> {
    if n == 0 {
        return Err(QStateError::InvalidArgument(
            "tensor power needs n >= 1".into(),
        ));
    }
    let dim = (rho.dim() as u128).checked_pow(n);
    match dim {
        Some(d) if d <= tol.dim_cap as u128 => {}
        _ => {
            return Err(QStateError::DimensionCapExceeded {
                requested: dim.map(|d| d.min(usize::MAX as u128) as usize).unwrap_or(usize::MAX),
                cap: tol.dim_cap,
            })
        }
    }
    let mut out = rho.matrix().clone();
    for _ in 1..n {
        out = linalg::kron(&out, rho.matrix());
    }
    Ok(DensityMatrix::trusted(out))
}

/// Trace distance, half the sum of |eigenvalues| of rho - rho_prime.
///
/// The difference is sign-canonicalised before diagonalising, so swapping
/// the arguments returns the bit-identical value.
pub fn trace_distance(rho: &DensityMatrix, rho_prime: &DensityMatrix) -> Result<f64, QStateError> {
    if rho.dim() != rho_prime.dim() {
        return Err(QStateError::DimensionMismatch(rho.dim(), rho_prime.dim()));
    }
    let mut diff = rho.matrix() - rho_prime.matrix();
    'canon: for v in diff.iter() {
        if v.re != 0.0 || v.im != 0.0 {
            if v.re < 0.0 || (v.re == 0.0 && v.im < 0.0) {
                diff = -diff;
            }
            break 'canon;
        }
    }
    let (vals, _) = linalg::eigh(&diff);
    Ok(0.5 * vals.iter().map(|v| v.abs()).sum::<f64>())
}

/// JSON wire format: a matrix is a nested array of [re, im] pairs, row-major.
pub type ComplexMatrixJson = Vec<Vec<[f64; 2]>>;

/// Parse the nested-array JSON representation into a dense matrix.
pub fn matrix_from_json(rows: &ComplexMatrixJson) -> Result<CMatrix, QStateError> {
    let n = rows.len();
    if n == 0 {
        return Err(QStateError::NotSquare { rows: 0, cols: 0 });
    }
    for r in rows {
        if r.len() != n {
            return Err(QStateError::NotSquare { rows: n, cols: r.len() });
        }
    }
    let mut m = CMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (j, &[re, im]) in row.iter().enumerate() {
            m[(i, j)] = Complex64::new(re, im);
        }
    }
    Ok(m)
}

/// Dump a matrix to the nested-array JSON representation.
pub fn matrix_to_json(m: &CMatrix) -> ComplexMatrixJson {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

/// Serde helper for files that are exactly one state matrix.
#[derive(Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateFile(pub ComplexMatrixJson);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_density_matrix, rng};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn diag(entries: &[f64]) -> CMatrix {
        let n = entries.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = c(e, 0.0);
        }
        m
    }

    #[test]
    fn accepts_maximally_mixed_and_pure() {
        assert!(DensityMatrix::validate(diag(&[0.5, 0.5]), &tol()).is_ok());
        assert!(DensityMatrix::validate(diag(&[1.0, 0.0]), &tol()).is_ok());
    }

    #[test]
    fn rejects_bad_trace_with_magnitude() {
        let err = DensityMatrix::validate(diag(&[0.7, 0.4]), &tol()).unwrap_err();
        match err {
            QStateError::NotUnitTrace { violation, .. } => {
                assert!((violation - 0.1).abs() < 1e-12)
            }
            other => panic!("expected NotUnitTrace, got {other:?}"),
        }
    }

    #[test]
    fn rejects_non_hermitian_and_non_psd() {
        let mut m = diag(&[0.5, 0.5]);
        m[(0, 1)] = c(0.1, 0.0);
        assert!(matches!(
            DensityMatrix::validate(m, &tol()),
            Err(QStateError::NotHermitian { .. })
        ));
        let m2 = diag(&[1.2, -0.2]);
        assert!(matches!(
            DensityMatrix::validate(m2, &tol()),
            Err(QStateError::NotPSD { .. })
        ));
    }

    #[test]
    fn spectrum_of_diagonal_state() {
        let rho = DensityMatrix::validate(diag(&[0.75, 0.25]), &tol()).unwrap();
        let s = spectral_decompose(&rho, &tol()).unwrap();
        assert!((s.eigenvalues[0] - 0.75).abs() < 1e-14);
        assert!((s.eigenvalues[1] - 0.25).abs() < 1e-14);
        assert!(s.eigenvectors[(0, 0)].norm() > 0.999);
        assert!(s.eigenvectors[(1, 1)].norm() > 0.999);
    }

    #[test]
    fn spectrum_of_plus_projector() {
        let h = 0.5;
        let m = CMatrix::from_row_slice(2, 2, &[c(h, 0.0), c(h, 0.0), c(h, 0.0), c(h, 0.0)]);
        let rho = DensityMatrix::validate(m, &tol()).unwrap();
        let s = spectral_decompose(&rho, &tol()).unwrap();
        assert!((s.eigenvalues[0] - 1.0).abs() < 1e-12);
        assert!(s.eigenvalues[1].abs() < 1e-12);
        // Leading eigenvector is |+> up to phase.
        let v = s.eigenvectors.column(0);
        let overlap = (v[0] + v[1]).norm() / 2.0f64.sqrt();
        assert!((overlap - 1.0).abs() < 1e-10);
    }

    #[test]
    fn random_states_reconstruct() {
        let mut r = rng(7);
        for _ in 0..20 {
            let rho = random_density_matrix(&mut r, 3);
            let s = spectral_decompose(&rho, &tol()).unwrap();
            // reconstruction residual is the oracle here
            let n = rho.dim();
            let mut rec = CMatrix::zeros(n, n);
            for (k, &lam) in s.eigenvalues.iter().enumerate() {
                let v = s.eigenvectors.column(k);
                for i in 0..n {
                    for j in 0..n {
                        rec[(i, j)] += v[i] * v[j].conj() * c(lam, 0.0);
                    }
                }
            }
            assert!(linalg::max_abs(&(rec - rho.matrix())) < 1e-10);
        }
    }

    #[test]
    fn tensor_power_examples() {
        let mixed = DensityMatrix::validate(diag(&[0.5, 0.5]), &tol()).unwrap();
        let p3 = tensor_power(&mixed, 3, &tol()).unwrap();
        assert_eq!(p3.dim(), 8);
        for i in 0..8 {
            assert!((p3.matrix()[(i, i)].re - 0.125).abs() < 1e-14);
        }

        let rho = DensityMatrix::validate(diag(&[0.75, 0.25]), &tol()).unwrap();
        let p1 = tensor_power(&rho, 1, &tol()).unwrap();
        assert_eq!(p1.matrix(), rho.matrix());

        let p2 = tensor_power(&rho, 2, &tol()).unwrap();
        let expect = [0.5625, 0.1875, 0.1875, 0.0625];
        for (i, &e) in expect.iter().enumerate() {
            assert!((p2.matrix()[(i, i)].re - e).abs() < 1e-14);
        }
        let tr: f64 = (0..4).map(|i| p2.matrix()[(i, i)].re).sum();
        assert!((tr - 1.0).abs() < 2.0 * tol().trace_tol);
    }

    #[test]
    fn tensor_power_respects_cap() {
        let mixed = DensityMatrix::validate(diag(&[0.5, 0.5]), &tol()).unwrap();
        assert!(matches!(
            tensor_power(&mixed, 13, &tol()),
            Err(QStateError::DimensionCapExceeded { .. })
        ));
    }

    #[test]
    fn tensor_power_is_multiplicative() {
        let mut r = rng(11);
        let rho = random_density_matrix(&mut r, 2);
        let a = tensor_power(&rho, 2, &tol()).unwrap();
        let b = tensor_power(&rho, 3, &tol()).unwrap();
        let joint = linalg::kron(a.matrix(), b.matrix());
        let direct = tensor_power(&rho, 5, &tol()).unwrap();
        assert!(linalg::max_abs(&(joint - direct.matrix())) < 1e-12);
    }

    #[test]
    fn trace_distance_examples() {
        let t = tol();
        let a = DensityMatrix::validate(diag(&[1.0, 0.0]), &t).unwrap();
        let b = DensityMatrix::validate(diag(&[0.0, 1.0]), &t).unwrap();
        let m = DensityMatrix::validate(diag(&[0.5, 0.5]), &t).unwrap();
        assert_eq!(trace_distance(&a, &a).unwrap(), 0.0);
        assert!((trace_distance(&a, &b).unwrap() - 1.0).abs() < 1e-14);
        // diag(0.5, -0.5) has |eigenvalues| summing to 1
        assert!((trace_distance(&a, &m).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn trace_distance_is_a_metric_on_random_triples() {
        let mut r = rng(23);
        for _ in 0..50 {
            let x = random_density_matrix(&mut r, 3);
            let y = random_density_matrix(&mut r, 3);
            let z = random_density_matrix(&mut r, 3);
            let dxy = trace_distance(&x, &y).unwrap();
            let dyx = trace_distance(&y, &x).unwrap();
            let dxz = trace_distance(&x, &z).unwrap();
            let dzy = trace_distance(&z, &y).unwrap();
            assert_eq!(dxy, dyx);
            assert!(dxy <= dxz + dzy + 1e-12);
            assert!((0.0..=1.0 + 1e-12).contains(&dxy));
        }
    }

    #[test]
    fn json_round_trip() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[c(0.5, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.5, 0.0)],
        );
        let j = matrix_to_json(&m);
        let back = matrix_from_json(&j).unwrap();
        assert_eq!(m, back);
        let text = serde_json::to_string(&StateFile(j)).unwrap();
        let parsed: StateFile = serde_json::from_str(&text).unwrap();
        assert_eq!(matrix_from_json(&parsed.0).unwrap(), m);
    }
}
