//! Elementary symmetric functions, higher mean curvatures and Newton tensors.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, SymMatrix};

/// Binomial coefficient `C(n, k)` as a float; zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// All elementary symmetric functions `σ₀ … σₙ` of `lambda`.
///
/// Coefficients of `∏ (x + λᵢ)` are accumulated one root at a time, which
/// needs `O(n²)` work and no subset enumeration.
pub fn elementary_symmetric_all(lambda: &[f64]) -> Vec<f64> {
    let n = lambda.len();
    let mut sigma = vec![0.0; n + 1];
    sigma[0] = 1.0;
    for (m, &l) in lambda.iter().enumerate() {
        for k in (1..=m + 1).rev() {
            sigma[k] += l * sigma[k - 1];
        }
    }
    sigma
}

/// `σₖ(λ)`.
pub fn elementary_symmetric(lambda: &[f64], k: usize) -> Result<f64> {
    check_order(lambda.len(), k)?;
    Ok(elementary_symmetric_all(lambda)[k])
}

/// `Hₖ(λ) = σₖ(λ) / C(n, k)`.
pub fn mean_curvature_k(lambda: &[f64], k: usize) -> Result<f64> {
    let n = lambda.len();
    check_order(n, k)?;
    Ok(elementary_symmetric_all(lambda)[k] / binomial(n, k))
}

fn check_order(n: usize, k: usize) -> Result<()> {
    if k > n {
        return Err(Error::InvalidArgument(format!(
            "order k = {k} exceeds the number of principal curvatures n = {n}"
        )));
    }
    Ok(())
}

/// Frame the Newton tensors of a [`CurvatureProfile`] are expressed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TensorFrame {
    /// Eigenbasis of the shape operator; every `Tₖ` is diagonal.
    Principal,
    /// Same frame as the shape operator that was passed in (the
    /// Cholesky-whitened parameter frame for hypersurface data).
    Whitened,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvatureProfile {
    /// Principal curvatures, ascending.
    pub principal: Vec<f64>,
    /// `σ₀ … σₙ`.
    pub sigma: Vec<f64>,
    /// `H₀ … Hₙ`.
    pub hk: Vec<f64>,
    /// `T₀ … T_{n−1}`.
    pub newton: Vec<SymMatrix>,
    pub frame: TensorFrame,
}

impl CurvatureProfile {
    pub fn dim(&self) -> usize {
        self.principal.len()
    }

    /// Mean curvature `H = H₁`.
    pub fn mean(&self) -> f64 {
        self.hk[1]
    }

    /// `max_i |λᵢ − H|`.
    pub fn umbilicity_defect(&self) -> f64 {
        let h = self.mean();
        self.principal
            .iter()
            .fold(0.0_f64, |m, l| m.max((l - h).abs()))
    }

    /// Profile of a diagonal shape operator with the given principal curvatures.
    pub fn from_principal(lambda: &[f64]) -> Result<Self> {
        let n = lambda.len();
        let sigma = elementary_symmetric_all(lambda);
        let hk = normalized(&sigma);
        let mut newton = Vec::with_capacity(n);
        for k in 0..n {
            // Tₖ has eigenvalues σₖ(λ with λᵢ removed)
            let diag: Vec<f64> = (0..n)
                .map(|i| {
                    let rest: Vec<f64> = lambda
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, v)| *v)
                        .collect();
                    elementary_symmetric_all(&rest)[k]
                })
                .collect();
            newton.push(SymMatrix::diagonal(&diag)?);
        }
        let mut principal = lambda.to_vec();
        principal.sort_by(f64::total_cmp);
        Ok(Self {
            principal,
            sigma,
            hk,
            newton,
            frame: TensorFrame::Principal,
        })
    }
}

fn normalized(sigma: &[f64]) -> Vec<f64> {
    let n = sigma.len() - 1;
    sigma
        .iter()
        .enumerate()
        .map(|(k, s)| s / binomial(n, k))
        .collect()
}

/// Newton tensors `T₀ = I`, `Tₖ = σₖ I − A Tₖ₋₁` of a symmetric shape operator.
///
/// The tensors are returned in the frame of `a`. The symmetric functions use
/// the eigenvalues of `a`.
pub fn newton_tensors(a: &SymMatrix) -> Result<CurvatureProfile> {
    let n = a.dim();
    let spectrum = sym_eigen(a)?;
    let sigma = elementary_symmetric_all(&spectrum.values);
    let hk = normalized(&sigma);
    let mut newton = Vec::with_capacity(n);
    newton.push(SymMatrix::identity(n)?);
    for k in 1..n {
        let at = a.mul_dense(&newton[k - 1]);
        let next = SymMatrix::from_fn(n, |i, j| {
            let id = if i == j { sigma[k] } else { 0.0 };
            id - at[i * n + j]
        })?;
        newton.push(next);
    }
    Ok(CurvatureProfile {
        principal: spectrum.values,
        sigma,
        hk,
        newton,
        frame: TensorFrame::Whitened,
    })
}

/// Invariants of the eigen-solver and the Newton recursion on random matrices.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelSelfTest {
    pub seed: u64,
    pub samples: usize,
    /// `max ‖S − V Λ Vᵀ‖∞`.
    pub max_reconstruction_error: f64,
    /// `max ‖VᵀV − I‖∞`.
    pub max_orthonormality_error: f64,
    /// `max ‖σₙ I − A T_{n−1}‖∞`.
    pub max_newton_closure: f64,
    /// `max |tr T_k − (n−k) σ_k|`.
    pub max_trace_identity: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Runs [`KernelSelfTest`] on `samples` matrices of dimension 2..=7 with
/// entries uniform in `[−1, 1]`.
pub fn kernel_selftest(samples: usize, seed: u64) -> Result<KernelSelfTest> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let tolerance = 1e-10;
    let mut out = KernelSelfTest {
        seed,
        samples,
        max_reconstruction_error: 0.0,
        max_orthonormality_error: 0.0,
        max_newton_closure: 0.0,
        max_trace_identity: 0.0,
        tolerance,
        passed: false,
    };
    for _ in 0..samples {
        let n = rng.gen_range(2..=7);
        let a = SymMatrix::from_fn(n, |_, _| rng.gen_range(-1.0..=1.0))?;
        let spec = sym_eigen(&a)?;
        out.max_reconstruction_error = out
            .max_reconstruction_error
            .max(spec.reconstruction_error(&a));
        out.max_orthonormality_error = out
            .max_orthonormality_error
            .max(spec.orthonormality_error());
        let p = newton_tensors(&a)?;
        let last = a.mul_dense(&p.newton[n - 1]);
        for i in 0..n {
            for j in 0..n {
                let id = if i == j { p.sigma[n] } else { 0.0 };
                out.max_newton_closure = out.max_newton_closure.max((id - last[i * n + j]).abs());
            }
        }
        for (k, t) in p.newton.iter().enumerate() {
            let dev = (t.trace() - (n - k) as f64 * p.sigma[k]).abs();
            out.max_trace_identity = out.max_trace_identity.max(dev);
        }
    }
    out.passed = [
        out.max_reconstruction_error,
        out.max_orthonormality_error,
        out.max_newton_closure,
        out.max_trace_identity,
    ]
    .iter()
    .all(|e| *e < tolerance);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_examples() {
        assert_eq!(elementary_symmetric(&[1.0, 1.0, 1.0], 2).unwrap(), 3.0);
        // 1·2 + 1·3 + 2·3
        assert_eq!(elementary_symmetric(&[1.0, 2.0, 3.0], 2).unwrap(), 11.0);
        assert_eq!(elementary_symmetric(&[4.0, -2.0, 0.5], 0).unwrap(), 1.0);
        assert!(elementary_symmetric(&[1.0, 2.0], 3).is_err());
    }

    #[test]
    fn mean_curvature_examples() {
        assert_eq!(mean_curvature_k(&[1.0, 1.0], 2).unwrap(), 1.0);
        assert_eq!(mean_curvature_k(&[1.0, 2.0, 3.0], 1).unwrap(), 2.0);
        assert_eq!(mean_curvature_k(&[2.0, 2.0, 2.0], 3).unwrap(), 8.0);
        assert!(mean_curvature_k(&[1.0], 2).is_err());
    }

    #[test]
    fn kernel_selftest_passes() {
        let r = kernel_selftest(200, 7).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(7, 3), 35.0);
        assert_eq!(binomial(4, 0), 1.0);
        assert_eq!(binomial(2, 3), 0.0);
    }

    #[test]
    fn umbilic_newton_tensor() {
        let p = newton_tensors(&SymMatrix::identity(2).unwrap()).unwrap();
        assert_eq!(p.newton[0], SymMatrix::identity(2).unwrap());
        assert_eq!(p.newton[1], SymMatrix::identity(2).unwrap());
        assert_eq!(p.sigma, vec![1.0, 2.0, 1.0]);
        assert_eq!(p.hk, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn principal_profile_matches_recursion() {
        let lambda = [0.5, -1.25, 2.0];
        let a = SymMatrix::diagonal(&lambda).unwrap();
        let rec = newton_tensors(&a).unwrap();
        let diag = CurvatureProfile::from_principal(&lambda).unwrap();
        for k in 0..3 {
            assert!(rec.newton[k].max_abs_diff(&diag.newton[k]) < 1e-14);
        }
        assert_eq!(diag.frame, TensorFrame::Principal);
    }
}
