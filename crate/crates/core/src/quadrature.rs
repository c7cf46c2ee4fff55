//! Tensor-product quadrature on hypersurface parameter domains.
//!
//! Torus families use the uniform trapezoid rule, which is spectrally accurate
//! for smooth periodic integrands. Sphere families use Gauss–Legendre nodes in
//! each polar variable `u = cos θ` and a uniform azimuth; no node lies on a pole.
//!
//! Sums are reduced pairwise in node order, so results do not depend on how
//! many worker threads evaluated the integrand.

use rayon::prelude::*;
use serde::Serialize;

use crate::ambient::WarpedAmbient;
use crate::error::{Error, Result};
use crate::hypersurface::{
    curvature_data, sphere_euclidean_geometry, unit_sphere_jet, vertical_component, CurvatureData,
    ParamPoint, SurfaceFamily,
};

const PAIRWISE_BLOCK: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GridKind {
    Torus {
        periods: Vec<f64>,
        res: Vec<usize>,
    },
    /// `res` Gauss–Legendre nodes per polar axis, `2·res` azimuth nodes.
    Sphere {
        n: usize,
        res: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceGrid {
    pub kind: GridKind,
    pub nodes: Vec<ParamPoint>,
    /// Parameter-measure weights; the area element is applied separately.
    pub weights: Vec<f64>,
}

impl SurfaceGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Per-axis node counts.
    pub fn axis_counts(&self) -> Vec<usize> {
        match &self.kind {
            GridKind::Torus { res, .. } => res.clone(),
            GridKind::Sphere { n, res } => {
                let mut v = vec![*res; n - 1];
                v.push(2 * res);
                v
            }
        }
    }

    /// Nominal resolution used to build the grid.
    pub fn resolution(&self) -> usize {
        match &self.kind {
            GridKind::Torus { res, .. } => res[0],
            GridKind::Sphere { res, .. } => *res,
        }
    }

    /// Fails unless the grid parametrizes the given family.
    pub fn check_family(&self, fam: &SurfaceFamily, amb: &WarpedAmbient) -> Result<()> {
        match (&self.kind, fam.is_torus_family()) {
            (GridKind::Torus { periods, .. }, true) => {
                if amb.periods() != Some(periods.as_slice()) {
                    return Err(Error::GridMismatch(
                        "torus grid periods differ from the ambient fiber".into(),
                    ));
                }
            }
            (GridKind::Sphere { n, .. }, false) => {
                if *n != amb.n() {
                    return Err(Error::GridMismatch("sphere grid dimension differs".into()));
                }
            }
            _ => {
                return Err(Error::GridMismatch(format!(
                    "{} cannot be integrated on this grid",
                    fam.kind_name()
                )))
            }
        }
        Ok(())
    }
}

/// Cartesian product of per-axis (node, weight) lists; last axis varies fastest.
fn tensor_product(axes: &[(Vec<f64>, Vec<f64>)]) -> (Vec<ParamPoint>, Vec<f64>) {
    let total: usize = axes.iter().map(|(x, _)| x.len()).product();
    let mut nodes = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; axes.len()];
    for _ in 0..total {
        nodes.push(ParamPoint(
            idx.iter().zip(axes).map(|(i, (x, _))| x[*i]).collect(),
        ));
        weights.push(idx.iter().zip(axes).map(|(i, (_, w))| w[*i]).product());
        for a in (0..axes.len()).rev() {
            idx[a] += 1;
            if idx[a] < axes[a].0.len() {
                break;
            }
            idx[a] = 0;
        }
    }
    (nodes, weights)
}

fn uniform_axis(period: f64, count: usize) -> (Vec<f64>, Vec<f64>) {
    let h = period / count as f64;
    ((0..count).map(|j| j as f64 * h).collect(), vec![h; count])
}

/// Uniform trapezoid grid on the torus `∏ [0, Lᵢ)`.
pub fn torus_grid(periods: &[f64], res: &[usize]) -> Result<SurfaceGrid> {
    if periods.len() != res.len() {
        return Err(Error::InvalidArgument(
            "one resolution per torus axis required".into(),
        ));
    }
    if let Some(r) = res.iter().find(|r| **r < 4) {
        return Err(Error::InvalidArgument(format!(
            "torus resolution {r} is below the minimum of 4"
        )));
    }
    let axes: Vec<_> = periods
        .iter()
        .zip(res)
        .map(|(l, r)| uniform_axis(*l, *r))
        .collect();
    let (nodes, weights) = tensor_product(&axes);
    Ok(SurfaceGrid {
        kind: GridKind::Torus {
            periods: periods.to_vec(),
            res: res.to_vec(),
        },
        nodes,
        weights,
    })
}

/// Gauss–Legendre nodes (ascending) and weights on `[−1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(m, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes, weights)
}

/// `(P_m(x), P_m'(x))` by the three-term recurrence.
fn legendre(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Sphere chart grid: `res` nodes in each polar variable `u = cos θ ∈ (−1, 1)`
/// and `2·res` uniform azimuth nodes.
///
/// Polar axis `j` carries the area factor `(1 − u²)^{(n−2−j)/2}`. Where that
/// exponent is an integer the nodes are Gauss–Legendre in `u`; otherwise they
/// are Gauss–Legendre in `θ`, mapped to `u` with weights `w·sin θ`.
pub fn sphere_grid(n: usize, res: usize) -> Result<SurfaceGrid> {
    if n < 2 {
        return Err(Error::InvalidArgument("sphere grids need n >= 2".into()));
    }
    if res < 8 {
        return Err(Error::InvalidArgument(format!(
            "sphere resolution {res} is below the minimum of 8"
        )));
    }
    let mut axes: Vec<(Vec<f64>, Vec<f64>)> = (0..n - 1)
        .map(|j| {
            if (n - 2 - j).is_multiple_of(2) {
                gauss_legendre(res)
            } else {
                polar_angle_axis(res)
            }
        })
        .collect();
    axes.push(uniform_axis(2.0 * std::f64::consts::PI, 2 * res));
    let (nodes, weights) = tensor_product(&axes);
    Ok(SurfaceGrid {
        kind: GridKind::Sphere { n, res },
        nodes,
        weights,
    })
}

fn polar_angle_axis(res: usize) -> (Vec<f64>, Vec<f64>) {
    let half_pi = 0.5 * std::f64::consts::PI;
    let (x, w) = gauss_legendre(res);
    x.iter()
        .zip(&w)
        .map(|(x, w)| {
            let theta = half_pi * (x + 1.0);
            (-theta.cos(), half_pi * w * theta.sin())
        })
        .unzip()
}

/// Grid of the right kind for `fam` at nominal resolution `res`.
pub fn grid_for(fam: &SurfaceFamily, amb: &WarpedAmbient, res: usize) -> Result<SurfaceGrid> {
    fam.validate(amb)?;
    match amb.periods() {
        Some(periods) if fam.is_torus_family() => torus_grid(periods, &vec![res; amb.n()]),
        None if !fam.is_torus_family() => sphere_grid(amb.n(), res),
        _ => Err(Error::UnsupportedFamily(fam.kind_name().into())),
    }
}

/// Fixed-order pairwise (tree) summation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= PAIRWISE_BLOCK {
        return values.iter().fold(0.0, |acc, v| acc + v);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Weighted sum of pre-evaluated node values, rejecting non-finite terms.
fn weighted_sum(terms: Vec<f64>) -> Result<f64> {
    if let Some(index) = terms.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteIntegrand { index });
    }
    Ok(pairwise_sum(&terms))
}

/// Curvature data at every node of a grid.
#[derive(Clone, Debug)]
pub struct SurfaceSample {
    pub family: SurfaceFamily,
    pub ambient: WarpedAmbient,
    pub grid: SurfaceGrid,
    pub data: Vec<CurvatureData>,
}

impl SurfaceSample {
    /// `Σ wᵢ f(dataᵢ) √det g1ᵢ`.
    pub fn integrate<F>(&self, integrand: F) -> Result<f64>
    where
        F: Fn(&CurvatureData) -> f64 + Sync,
    {
        let terms: Vec<f64> = self
            .data
            .par_iter()
            .zip(self.grid.weights.par_iter())
            .map(|(d, w)| w * integrand(d) * d.area_element)
            .collect();
        weighted_sum(terms)
    }

    /// `∫_Σ V dΣ`, the normalization scale of the verification residuals.
    pub fn potential_integral(&self) -> Result<f64> {
        self.integrate(|d| d.potential)
    }

    pub fn area(&self) -> Result<f64> {
        self.integrate(|_| 1.0)
    }
}

/// Evaluates curvature data at every grid node (in parallel, node order kept).
pub fn sample_surface(
    fam: &SurfaceFamily,
    amb: &WarpedAmbient,
    grid: &SurfaceGrid,
) -> Result<SurfaceSample> {
    fam.validate(amb)?;
    grid.check_family(fam, amb)?;
    let data = grid
        .nodes
        .par_iter()
        .map(|q| curvature_data(fam, amb, q))
        .collect::<Result<Vec<_>>>()?;
    Ok(SurfaceSample {
        family: fam.clone(),
        ambient: amb.clone(),
        grid: grid.clone(),
        data,
    })
}

/// `∫_Σ f dΣ` over the given grid.
pub fn integrate_surface<F>(
    integrand: F,
    fam: &SurfaceFamily,
    amb: &WarpedAmbient,
    grid: &SurfaceGrid,
) -> Result<f64>
where
    F: Fn(&CurvatureData) -> f64 + Sync,
{
    sample_surface(fam, amb, grid)?.integrate(integrand)
}

/// `∫_Ω V dvol` over the inward region.
///
/// For slices and graphs `Ω = {t < u(p)}` and the `t`-integral of
/// `c·eᵗ·e^{nt}` is done exactly, leaving `∫_P c·e^{(n+1)u}/(n+1) dp` on the
/// grid. For geodesic spheres the Euclidean ball of the half-space model is
/// integrated in polar coordinates about its Euclidean centre, with
/// `res` Gauss–Legendre nodes in the radius.
pub fn weighted_volume(
    fam: &SurfaceFamily,
    amb: &WarpedAmbient,
    grid: &SurfaceGrid,
) -> Result<f64> {
    fam.validate(amb)?;
    grid.check_family(fam, amb)?;
    let n = amb.n();
    let c = amb.potential_scale();
    match fam {
        SurfaceFamily::Slice { .. } | SurfaceFamily::TorusGraph { .. } => {
            let terms = grid
                .nodes
                .par_iter()
                .zip(grid.weights.par_iter())
                .map(|(q, w)| {
                    let u = fam.height_jet(amb, &q.0)?;
                    Ok(w * c * ((n + 1) as f64 * u.value).exp() / (n + 1) as f64)
                })
                .collect::<Result<Vec<f64>>>()?;
            weighted_sum(terms)
        }
        SurfaceFamily::GeodesicSphere { z0, rho, .. } => {
            let (zc, radius) = sphere_euclidean_geometry(*z0, *rho);
            let (rn, rw) = gauss_legendre(grid.resolution());
            let vz = vertical_component(n);
            let terms = grid
                .nodes
                .par_iter()
                .zip(grid.weights.par_iter())
                .map(|(q, w)| {
                    let y = unit_sphere_jet(&q.0)?;
                    let dir = y.value[vz];
                    let radial: Vec<f64> = rn
                        .iter()
                        .zip(&rw)
                        .map(|(x, wr)| {
                            let r = 0.5 * radius * (x + 1.0);
                            let z = zc + r * dir;
                            // V dvol = (c / z) · r^n dr dω / z^{n+1}
                            0.5 * radius * wr * c * r.powi(n as i32) / z.powi(n as i32 + 2)
                        })
                        .collect();
                    Ok(w * y.area_density() * pairwise_sum(&radial))
                })
                .collect::<Result<Vec<f64>>>()?;
            weighted_sum(terms)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(5);
        // exact up to degree 9
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((integral - 2.0 / 9.0).abs() < 1e-15);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-15);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn gauss_legendre_large_order() {
        let (x, w) = gauss_legendre(128);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.exp()).sum();
        assert!((integral - (1f64.exp() - (-1f64).exp())).abs() < 1e-13);
    }

    #[test]
    fn torus_weights_sum_to_domain_measure() {
        let g = torus_grid(&[1.5, 2.0], &[8, 12]).unwrap();
        assert_eq!(g.len(), 96);
        assert!((pairwise_sum(&g.weights) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_weights_and_interior_nodes() {
        let g = sphere_grid(2, 16).unwrap();
        assert_eq!(g.len(), 16 * 32);
        assert!((pairwise_sum(&g.weights) - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!(g.nodes.iter().all(|q| q.0[0].abs() < 1.0));
        let g3 = sphere_grid(3, 16).unwrap();
        assert!((pairwise_sum(&g3.weights) - 8.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn small_resolutions_are_rejected() {
        assert!(torus_grid(&[1.0, 1.0], &[3, 8]).is_err());
        assert!(sphere_grid(2, 7).is_err());
    }

    #[test]
    fn pairwise_sum_is_exact_on_integers() {
        let v: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 500500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn mismatched_grid_is_rejected() {
        let amb = WarpedAmbient::torus(vec![1.0, 1.0]).unwrap();
        let g = torus_grid(&[2.0, 1.0], &[8, 8]).unwrap();
        let err = sample_surface(&SurfaceFamily::Slice { s: 0.0 }, &amb, &g).unwrap_err();
        assert!(matches!(err, Error::GridMismatch(_)));
    }
}
