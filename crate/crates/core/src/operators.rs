//! Intrinsic Hessian and the operators `L_k(u) = tr(T_k ∘ Hess u)` for fields
//! sampled on a torus grid.
//!
//! Parameter derivatives of the field are spectral (FFT along each axis).
//! Christoffel symbols of the induced metric come from central differences
//! of the first fundamental form, which is the accuracy bottleneck.

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::ambient::{WarpedAmbient, FD_STEP};
use crate::error::{Error, Result};
use crate::hypersurface::{curvature_data, first_form, ParamPoint, SurfaceFamily};
use crate::linalg::{Cholesky, SymMatrix};
use crate::quadrature::{GridKind, SurfaceGrid};

/// A scalar field on a torus grid together with its spectral first and
/// second parameter derivatives at every node.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: SurfaceGrid,
    values: Vec<f64>,
    first: Vec<Vec<f64>>,
    /// `second[a * n + b]`.
    second: Vec<Vec<f64>>,
}

impl SpectralField {
    pub fn new(grid: &SurfaceGrid, values: Vec<f64>) -> Result<Self> {
        let (periods, res) = match &grid.kind {
            GridKind::Torus { periods, res } => (periods.clone(), res.clone()),
            GridKind::Sphere { .. } => {
                return Err(Error::UnsupportedFamily(
                    "spectral derivatives need a periodic torus grid".into(),
                ))
            }
        };
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values for {} grid nodes",
                values.len(),
                grid.len()
            )));
        }
        let n = res.len();
        let mut planner = FftPlanner::new();
        let first: Vec<Vec<f64>> = (0..n)
            .map(|a| spectral_derivative(&mut planner, &values, &res, periods[a], a, 1))
            .collect();
        let mut second = vec![Vec::new(); n * n];
        for a in 0..n {
            for b in a..n {
                let d = if a == b {
                    spectral_derivative(&mut planner, &values, &res, periods[a], a, 2)
                } else {
                    spectral_derivative(&mut planner, &first[a], &res, periods[b], b, 1)
                };
                second[a * n + b] = d.clone();
                second[b * n + a] = d;
            }
        }
        Ok(Self {
            grid: grid.clone(),
            values,
            first,
            second,
        })
    }

    /// Samples `f(q)` at every node.
    pub fn from_fn(grid: &SurfaceGrid, f: impl Fn(&ParamPoint) -> f64) -> Result<Self> {
        let values = grid.nodes.iter().map(f).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &SurfaceGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn gradient_at(&self, node: usize) -> Vec<f64> {
        self.first.iter().map(|d| d[node]).collect()
    }

    /// Row-major matrix of second parameter derivatives at a node.
    pub fn second_at(&self, node: usize) -> Vec<f64> {
        self.second.iter().map(|d| d[node]).collect()
    }
}

/// Derivative of the given order along `axis` of a row-major tensor-grid array.
fn spectral_derivative(
    planner: &mut FftPlanner<f64>,
    values: &[f64],
    res: &[usize],
    period: f64,
    axis: usize,
    order: u32,
) -> Vec<f64> {
    let m = res[axis];
    let stride: usize = res[axis + 1..].iter().product();
    let fft = planner.plan_fft_forward(m);
    let ifft = planner.plan_fft_inverse(m);
    let mut out = vec![0.0; values.len()];
    let mut line = vec![Complex::new(0.0, 0.0); m];
    let multipliers: Vec<Complex<f64>> = (0..m)
        .map(|j| {
            let nyquist = m.is_multiple_of(2) && j == m / 2;
            let k = if j <= m / 2 {
                j as f64
            } else {
                j as f64 - m as f64
            };
            let kappa = 2.0 * std::f64::consts::PI * k / period;
            match order {
                1 if nyquist => Complex::new(0.0, 0.0),
                1 => Complex::new(0.0, kappa),
                2 => Complex::new(-kappa * kappa, 0.0),
                _ => unreachable!("only first and second derivatives are used"),
            }
        })
        .collect();
    let outer = values.len() / (m * stride);
    for o in 0..outer {
        for inner in 0..stride {
            let base = o * m * stride + inner;
            for (j, c) in line.iter_mut().enumerate() {
                *c = Complex::new(values[base + j * stride], 0.0);
            }
            fft.process(&mut line);
            for (c, mult) in line.iter_mut().zip(&multipliers) {
                *c *= mult;
            }
            ifft.process(&mut line);
            for (j, c) in line.iter().enumerate() {
                out[base + j * stride] = c.re / m as f64;
            }
        }
    }
    out
}

/// Christoffel symbols `Γ^k_{ij}` of the induced metric at `q` (indexed
/// `(k * n + i) * n + j`), from central differences of the first fundamental
/// form with step `1e-5 · Lₐ` along axis `a`.
pub fn induced_christoffel(
    fam: &SurfaceFamily,
    amb: &WarpedAmbient,
    q: &ParamPoint,
) -> Result<Vec<f64>> {
    let n = amb.n();
    let periods = amb.periods().ok_or_else(|| {
        Error::UnsupportedFamily("induced Christoffels need a torus chart".into())
    })?;
    let g1 = first_form(fam, amb, q)?;
    let chol = Cholesky::new(&g1)?;
    let dg: Vec<SymMatrix> = (0..n)
        .map(|a| {
            let h = FD_STEP * periods[a];
            let mut qp = q.clone();
            qp.0[a] += h;
            let mut qm = q.clone();
            qm.0[a] -= h;
            let gp = first_form(fam, amb, &qp)?;
            let gm = first_form(fam, amb, &qm)?;
            SymMatrix::from_fn(n, |i, j| (gp.get(i, j) - gm.get(i, j)) / (2.0 * h))
        })
        .collect::<Result<_>>()?;
    let mut gamma = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            let first_kind: Vec<f64> = (0..n)
                .map(|l| 0.5 * (dg[i].get(j, l) + dg[j].get(i, l) - dg[l].get(i, j)))
                .collect();
            let raised = chol.solve(&first_kind);
            for k in 0..n {
                gamma[(k * n + i) * n + j] = raised[k];
            }
        }
    }
    Ok(gamma)
}

fn require_torus(fam: &SurfaceFamily) -> Result<()> {
    if fam.is_torus_family() {
        Ok(())
    } else {
        Err(Error::UnsupportedFamily(format!(
            "intrinsic operators are only available on torus families, not {}",
            fam.kind_name()
        )))
    }
}

/// Covariant Hessian `∂ᵢ∂ⱼu − Γ^k_{ij} ∂_k u` of the field at a grid node,
/// in parameter coordinates (lower indices).
pub fn intrinsic_hessian(
    fam: &SurfaceFamily,
    amb: &WarpedAmbient,
    field: &SpectralField,
    node: usize,
) -> Result<SymMatrix> {
    require_torus(fam)?;
    field.grid.check_family(fam, amb)?;
    let n = amb.n();
    let q = &field.grid.nodes[node];
    let gamma = induced_christoffel(fam, amb, q)?;
    let grad = field.gradient_at(node);
    let second = field.second_at(node);
    SymMatrix::from_fn(n, |i, j| {
        let conn: f64 = (0..n).map(|k| gamma[(k * n + i) * n + j] * grad[k]).sum();
        second[i * n + j] - conn
    })
}

/// `L_k(u) = tr(T_k ∘ Hess u)` at a grid node, for `k ∈ {0, 1}`.
///
/// Both `T_k` and the Hessian are taken in the Cholesky-whitened parameter
/// frame, where the trace of the composition is the plain matrix trace.
pub fn lk_apply(
    k: usize,
    fam: &SurfaceFamily,
    amb: &WarpedAmbient,
    field: &SpectralField,
    node: usize,
) -> Result<f64> {
    if k > 1 {
        return Err(Error::InvalidArgument(format!(
            "L_k is only provided for k in {{0, 1}}, got {k}"
        )));
    }
    let hess = intrinsic_hessian(fam, amb, field, node)?;
    let data = curvature_data(fam, amb, &field.grid.nodes[node])?;
    let hess_w = data.metric_factor.whiten(&hess)?;
    Ok(data.profile.newton[k].trace_product(&hess_w))
}

/// [`lk_apply`] at every node of the field's grid.
pub fn lk_field(
    k: usize,
    fam: &SurfaceFamily,
    amb: &WarpedAmbient,
    field: &SpectralField,
) -> Result<Vec<f64>> {
    (0..field.grid.len())
        .into_par_iter()
        .map(|i| lk_apply(k, fam, amb, field, i))
        .collect()
}

/// Closed form `L₁(eʰ) = n(n−1) eʰ (H + ⟨N, ∂_t⟩ H₂)` at every node, together
/// with the cancellation-aware scale `n(n−1) eʰ (|H| + |⟨N, ∂_t⟩ H₂|)`.
pub fn l1_exp_height_closed_form(
    fam: &SurfaceFamily,
    amb: &WarpedAmbient,
    grid: &SurfaceGrid,
) -> Result<Vec<(f64, f64)>> {
    let n = amb.n() as f64;
    grid.nodes
        .par_iter()
        .map(|q| {
            let d = curvature_data(fam, amb, q)?;
            let a = d.mean_curvature();
            let b = d.normal_dt() * d.h2();
            let f = n * (n - 1.0) * d.height.exp();
            Ok((f * (a + b), f * (a.abs() + b.abs())))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::torus_grid;

    #[test]
    fn spectral_derivatives_of_a_mode() {
        let grid = torus_grid(&[2.0, 1.0], &[16, 8]).unwrap();
        let f = SpectralField::from_fn(&grid, |q| (std::f64::consts::PI * q.0[0]).sin()).unwrap();
        let k = std::f64::consts::PI;
        for (i, q) in grid.nodes.iter().enumerate() {
            let g = f.gradient_at(i);
            let s = f.second_at(i);
            assert!((g[0] - k * (k * q.0[0]).cos()).abs() < 1e-12);
            assert!(g[1].abs() < 1e-12);
            assert!((s[0] + k * k * (k * q.0[0]).sin()).abs() < 1e-11);
            assert!(s[1].abs() < 1e-12 && s[3].abs() < 1e-12);
        }
    }

    #[test]
    fn mixed_derivative() {
        let grid = torus_grid(&[1.0, 1.0], &[8, 8]).unwrap();
        let tau = 2.0 * std::f64::consts::PI;
        let f =
            SpectralField::from_fn(&grid, |q| (tau * q.0[0]).sin() * (tau * q.0[1]).cos()).unwrap();
        for (i, q) in grid.nodes.iter().enumerate() {
            let expect = -tau * tau * (tau * q.0[0]).cos() * (tau * q.0[1]).sin();
            assert!((f.second_at(i)[1] - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_field_has_zero_hessian() {
        let amb = WarpedAmbient::torus(vec![1.0, 1.0]).unwrap();
        let fam = SurfaceFamily::cosine_graph(2, 0.5, 0, 0.2);
        let grid = torus_grid(&[1.0, 1.0], &[8, 8]).unwrap();
        let f = SpectralField::from_fn(&grid, |_| 3.0).unwrap();
        let h = intrinsic_hessian(&fam, &amb, &f, 5).unwrap();
        assert!(h.max_abs() < 1e-12);
    }

    #[test]
    fn higher_orders_and_spheres_are_rejected() {
        let amb = WarpedAmbient::torus(vec![1.0, 1.0]).unwrap();
        let grid = torus_grid(&[1.0, 1.0], &[8, 8]).unwrap();
        let f = SpectralField::from_fn(&grid, |_| 1.0).unwrap();
        let fam = SurfaceFamily::Slice { s: 0.0 };
        assert!(lk_apply(2, &fam, &amb, &f, 0).is_err());
        let sphere = SurfaceFamily::GeodesicSphere {
            z0: 1.0,
            x0: vec![0.0, 0.0],
            rho: 1.0,
        };
        assert!(matches!(
            intrinsic_hessian(&sphere, &amb, &f, 0),
            Err(Error::UnsupportedFamily(_))
        ));
    }
}
