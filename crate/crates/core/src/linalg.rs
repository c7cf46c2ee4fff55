//! Small dense symmetric linear algebra.
//!
//! Everything here works on matrices of dimension at most [`MAX_DIM`]; the
//! hypersurface kernel never needs more than the ambient dimension `n + 1`.

use std::cmp::Ordering;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest matrix dimension handled by the kernel (ambient dimension for `n = 7`).
pub const MAX_DIM: usize = 8;

const JACOBI_MAX_SWEEPS: usize = 30;
const JACOBI_REL_THRESHOLD: f64 = 1e-14;

/// Dense symmetric matrix stored row-major.
///
/// The constructors symmetrize their input, so `get(i, j) == get(j, i)` holds
/// bit-for-bit.
#[derive(Clone, PartialEq, Serialize)]
pub struct SymMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[f64]> = self.entries.chunks(self.n).collect();
        f.debug_struct("SymMatrix")
            .field("n", &self.n)
            .field("rows", &rows)
            .finish()
    }
}

impl SymMatrix {
    /// Builds a symmetric matrix from `f(i, j)`, averaging `f(i, j)` and `f(j, i)`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        check_dim(n)?;
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                entries[i * n + j] = f(i, j);
            }
        }
        Self::from_row_major(n, entries)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument(
                "matrix rows must form a square array".into(),
            ));
        }
        Self::from_fn(n, |i, j| rows[i][j])
    }

    pub fn from_row_major(n: usize, mut entries: Vec<f64>) -> Result<Self> {
        check_dim(n)?;
        if entries.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                entries.len()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "matrix entries must be finite".into(),
            ));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (entries[i * n + j] + entries[j * n + i]);
                entries[i * n + j] = avg;
                entries[j * n + i] = avg;
            }
        }
        Ok(Self { n, entries })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::from_row_major(n, vec![0.0; n * n])
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        Self::from_fn(n, |i, j| if i == j { diag[i] } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row_major(&self) -> &[f64] {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Plain (not necessarily symmetric) product `self * other` in row-major order.
    pub fn mul_dense(&self, other: &SymMatrix) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                for j in 0..n {
                    out[i * n + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    /// `tr(self * other)` without forming the product.
    pub fn trace_product(&self, other: &SymMatrix) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn scaled(&self, factor: f64) -> SymMatrix {
        SymMatrix {
            n: self.n,
            entries: self.entries.iter().map(|v| v * factor).collect(),
        }
    }

    /// Largest entrywise difference to `other`.
    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Quadratic form `uᵀ S v`.
    pub fn bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.get(i, j) * v[j];
            }
            acc += u[i] * row;
        }
        acc
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// Congruence `Mᵀ S M` for a square `M` given row-major.
    pub fn congruence(&self, m: &[f64]) -> Result<SymMatrix> {
        let n = self.n;
        if m.len() != n * n {
            return Err(Error::InvalidArgument(
                "congruence matrix has wrong size".into(),
            ));
        }
        SymMatrix::from_fn(n, |i, j| {
            let mut acc = 0.0;
            for k in 0..n {
                for l in 0..n {
                    acc += m[k * n + i] * self.get(k, l) * m[l * n + j];
                }
            }
            acc
        })
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::InvalidArgument(format!(
            "matrix dimension {n} outside 1..={MAX_DIM}"
        )));
    }
    Ok(())
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Spectrum {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// `basis[k]` is the unit eigenvector belonging to `values[k]`.
    pub basis: Vec<Vec<f64>>,
}

impl Spectrum {
    /// `max |Q Λ Qᵀ − S|` for the matrix this spectrum was computed from.
    pub fn reconstruction_error(&self, s: &SymMatrix) -> f64 {
        let n = s.dim();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let r: f64 = (0..n)
                    .map(|k| self.basis[k][i] * self.values[k] * self.basis[k][j])
                    .sum();
                worst = worst.max((r - s.get(i, j)).abs());
            }
        }
        worst
    }

    /// `max |Qᵀ Q − I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.values.len();
        let mut worst = 0.0_f64;
        for a in 0..n {
            for b in 0..n {
                let dot: f64 = self.basis[a]
                    .iter()
                    .zip(&self.basis[b])
                    .map(|(x, y)| x * y)
                    .sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

/// Cyclic Jacobi eigen-solver.
///
/// Rotations sweep the strict upper triangle in row order; iteration stops once
/// the off-diagonal Frobenius norm drops below `1e-14 · ‖S‖_F`, or fails after
/// 30 sweeps.
pub fn sym_eigen(s: &SymMatrix) -> Result<Spectrum> {
    let n = s.dim();
    let mut a = s.entries.clone();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let threshold = JACOBI_REL_THRESHOLD * s.frobenius();

    let off_norm = |a: &[f64]| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                acc += 2.0 * a[i * n + j] * a[i * n + j];
            }
        }
        acc.sqrt()
    };

    let mut converged = off_norm(&a) <= threshold;
    let mut sweeps = 0;
    while !converged && sweeps < JACOBI_MAX_SWEEPS {
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                // A <- Jᵀ A J with J the (p, q) plane rotation.
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - sn * akq;
                    a[k * n + q] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - sn * aqk;
                    a[q * n + k] = sn * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - sn * vkq;
                    v[k * n + q] = sn * vkp + c * vkq;
                }
            }
        }
        sweeps += 1;
        converged = off_norm(&a) <= threshold;
    }
    if !converged {
        return Err(Error::EigenNonConvergence {
            sweeps,
            matrix: Box::new(s.clone()),
        });
    }

    let mut pairs: Vec<(f64, Vec<f64>)> = (0..n)
        .map(|k| {
            let mut vec: Vec<f64> = (0..n).map(|i| v[i * n + k]).collect();
            if let Some(first) = vec.iter().copied().find(|x| x.abs() > 1e-12) {
                if first < 0.0 {
                    vec.iter_mut().for_each(|x| *x = -*x);
                }
            }
            (a[k * n + k], vec)
        })
        .collect();
    pairs.sort_by(|x, y| {
        x.0.total_cmp(&y.0).then_with(|| {
            x.1.iter()
                .zip(&y.1)
                .map(|(a, b)| a.total_cmp(b))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
        })
    });
    let (values, basis) = pairs.into_iter().unzip();
    Ok(Spectrum { values, basis })
}

/// Lower-triangular Cholesky factor `L` with `g = L Lᵀ`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn new(g: &SymMatrix) -> Result<Self> {
        let n = g.dim();
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = g.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::DegenerateMetric(format!(
                    "pivot {j} is {d:e}; matrix is not positive definite"
                )));
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in (j + 1)..n {
                let mut s = g.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(Self { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `√det g`.
    pub fn sqrt_det(&self) -> f64 {
        (0..self.n).map(|i| self.l[i * self.n + i]).product()
    }

    /// Solves `L x = b`.
    pub fn forward(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = vec![0.0; n];
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[i * n + k] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
        x
    }

    /// Solves `Lᵀ x = b`.
    pub fn backward(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n {
                s -= self.l[k * n + i] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
        x
    }

    /// Solves `g x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.backward(&self.forward(b))
    }

    /// Whitening `L⁻¹ h L⁻ᵀ` of a symmetric bilinear form.
    pub fn whiten(&self, h: &SymMatrix) -> Result<SymMatrix> {
        let n = self.n;
        // columns of L⁻¹ h
        let mut tmp = vec![0.0; n * n];
        for j in 0..n {
            let col: Vec<f64> = (0..n).map(|i| h.get(i, j)).collect();
            let x = self.forward(&col);
            for i in 0..n {
                tmp[i * n + j] = x[i];
            }
        }
        // (L⁻¹ (L⁻¹ h)ᵀ)ᵀ = L⁻¹ h L⁻ᵀ since h is symmetric
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            let row: Vec<f64> = (0..n).map(|j| tmp[i * n + j]).collect();
            let x = self.forward(&row);
            for j in 0..n {
                out[i * n + j] = x[j];
            }
        }
        SymMatrix::from_row_major(n, out)
    }
}

/// Shape operator in the Cholesky-whitened frame: `L⁻¹ h L⁻ᵀ` where `g = L Lᵀ`.
///
/// The result is similar to `g⁻¹ h`, so its eigenvalues are the principal
/// curvatures.
pub fn shape_from_forms(g: &SymMatrix, h: &SymMatrix) -> Result<SymMatrix> {
    if g.dim() != h.dim() {
        return Err(Error::InvalidArgument(
            "fundamental forms differ in dimension".into(),
        ));
    }
    Cholesky::new(g)?.whiten(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_spectrum() {
        let s = sym_eigen(&SymMatrix::identity(3).unwrap()).unwrap();
        assert_eq!(s.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_spectrum_sorted() {
        let s = sym_eigen(&SymMatrix::diagonal(&[3.0, 1.0, 2.0]).unwrap()).unwrap();
        assert_eq!(s.values, vec![1.0, 2.0, 3.0]);
        assert_eq!(s.basis[0], vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn zero_matrix_is_already_diagonal() {
        let s = sym_eigen(&SymMatrix::zeros(4).unwrap()).unwrap();
        assert!(s.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn constructor_symmetrizes() {
        let s = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![4.0, 1.0]]).unwrap();
        assert_eq!(s.get(0, 1), 3.0);
        assert_eq!(s.get(1, 0), 3.0);
    }

    #[test]
    fn rejects_bad_dimensions_and_nan() {
        assert!(SymMatrix::zeros(0).is_err());
        assert!(SymMatrix::zeros(MAX_DIM + 1).is_err());
        assert!(SymMatrix::diagonal(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn shape_of_unit_forms() {
        let i = SymMatrix::identity(2).unwrap();
        assert_eq!(shape_from_forms(&i, &i).unwrap(), i);
    }

    #[test]
    fn shape_of_scaled_slice_forms() {
        let g = SymMatrix::diagonal(&[4.0, 4.0]).unwrap();
        let a = shape_from_forms(&g, &g).unwrap();
        assert!(a.max_abs_diff(&SymMatrix::identity(2).unwrap()) < 1e-15);
    }

    #[test]
    fn non_positive_metric_is_rejected() {
        let g = SymMatrix::diagonal(&[1.0, -1.0]).unwrap();
        let h = SymMatrix::identity(2).unwrap();
        assert!(matches!(
            shape_from_forms(&g, &h),
            Err(Error::DegenerateMetric(_))
        ));
    }

    #[test]
    fn cholesky_solves() {
        let g = SymMatrix::from_rows(&[vec![4.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let c = Cholesky::new(&g).unwrap();
        let x = c.solve(&[1.0, 2.0]);
        let back = g.apply(&x);
        assert!((back[0] - 1.0).abs() < 1e-14 && (back[1] - 2.0).abs() < 1e-14);
        assert!((c.sqrt_det() - 11.0_f64.sqrt()).abs() < 1e-14);
    }
}
