//! The warped product `M = ℝ ×_exp P` with metric `dt² + e^{2t} g_P` over a
//! flat fiber, together with its Levi-Civita connection, curvature and the
//! potential `V = c·eᵗ`.
//!
//! Coordinates are always `(t, p₁, …, pₙ)`; index 0 is the warping direction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// Central-difference step for first derivatives in the self-tests.
pub const FD_STEP: f64 = 1e-5;
/// Step for the second-derivative stencil of the potential oracle.
pub const FD_STEP_SECOND: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Fiber {
    /// `ℝⁿ / (L₁ℤ × … × Lₙℤ)` with the flat metric.
    FlatTorus { periods: Vec<f64> },
    /// Flat `ℝⁿ`; the ambient is then hyperbolic space in horospherical coordinates.
    Euclidean,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WarpedAmbient {
    n: usize,
    fiber: Fiber,
    potential_scale: f64,
}

impl WarpedAmbient {
    pub fn new(n: usize, fiber: Fiber, potential_scale: f64) -> Result<Self> {
        if !(2..=7).contains(&n) {
            return Err(Error::InvalidArgument(format!(
                "fiber dimension must lie in 2..=7, got {n}"
            )));
        }
        if let Fiber::FlatTorus { periods } = &fiber {
            if periods.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "torus needs {n} periods, got {}",
                    periods.len()
                )));
            }
            if periods.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
                return Err(Error::InvalidArgument(
                    "torus periods must be positive".into(),
                ));
            }
        }
        if !(potential_scale.is_finite() && potential_scale > 0.0) {
            return Err(Error::InvalidArgument(
                "potential scale must be positive".into(),
            ));
        }
        Ok(Self {
            n,
            fiber,
            potential_scale,
        })
    }

    /// Torus fiber with the given periods and `c = 1`.
    pub fn torus(periods: Vec<f64>) -> Result<Self> {
        Self::new(periods.len(), Fiber::FlatTorus { periods }, 1.0)
    }

    /// Hyperbolic space `H^{n+1}` with `c = 1`.
    pub fn hyperbolic(n: usize) -> Result<Self> {
        Self::new(n, Fiber::Euclidean, 1.0)
    }

    pub fn with_potential_scale(mut self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidArgument(
                "potential scale must be positive".into(),
            ));
        }
        self.potential_scale = c;
        Ok(self)
    }

    /// Fiber dimension `n`; the ambient has dimension `n + 1`.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.n + 1
    }

    pub fn fiber(&self) -> &Fiber {
        &self.fiber
    }

    pub fn periods(&self) -> Option<&[f64]> {
        match &self.fiber {
            Fiber::FlatTorus { periods } => Some(periods),
            Fiber::Euclidean => None,
        }
    }

    pub fn potential_scale(&self) -> f64 {
        self.potential_scale
    }

    /// Builds a point, reducing torus coordinates into `[0, Lᵢ)`.
    pub fn point(&self, t: f64, p: &[f64]) -> Result<AmbientPoint> {
        if p.len() != self.n {
            return Err(Error::InvalidArgument(format!(
                "expected {} fiber coordinates, got {}",
                self.n,
                p.len()
            )));
        }
        if !t.is_finite() || p.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "ambient coordinates must be finite".into(),
            ));
        }
        let p = match &self.fiber {
            Fiber::FlatTorus { periods } => p
                .iter()
                .zip(periods)
                .map(|(x, l)| x.rem_euclid(*l))
                .collect(),
            Fiber::Euclidean => p.to_vec(),
        };
        Ok(AmbientPoint { t, p })
    }

    /// `V = c·eᵗ`.
    pub fn potential(&self, t: f64) -> f64 {
        self.potential_scale * t.exp()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AmbientPoint {
    pub t: f64,
    pub p: Vec<f64>,
}

/// `diag(1, e^{2t}, …, e^{2t})`.
pub fn metric_at(amb: &WarpedAmbient, x: &AmbientPoint) -> SymMatrix {
    metric_at_height(amb.n(), x.t)
}

fn metric_at_height(n: usize, t: f64) -> SymMatrix {
    let w = (2.0 * t).exp();
    let mut d = vec![w; n + 1];
    d[0] = 1.0;
    SymMatrix::diagonal(&d).expect("ambient dimension is within bounds")
}

/// Christoffel symbols `Γ^a_{bc}` of the second kind.
#[derive(Clone, Debug, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.data[(a * self.dim + b) * self.dim + c]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, c: usize, v: f64) {
        self.data[(a * self.dim + b) * self.dim + c] = v;
    }

    /// Contraction `Γ^a_{bc} u^b v^c`.
    pub fn contract(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|a| {
                let mut acc = 0.0;
                for b in 0..d {
                    if u[b] == 0.0 {
                        continue;
                    }
                    for c in 0..d {
                        acc += self.get(a, b, c) * u[b] * v[c];
                    }
                }
                acc
            })
            .collect()
    }

    pub fn max_abs_diff(&self, other: &Christoffel) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Closed form: `Γ^t_{ij} = −e^{2t} δ_ij`, `Γ^i_{tj} = Γ^i_{jt} = δ^i_j`, all others zero.
pub fn christoffel_at(amb: &WarpedAmbient, x: &AmbientPoint) -> Christoffel {
    christoffel_at_height(amb.n(), x.t)
}

fn christoffel_at_height(n: usize, t: f64) -> Christoffel {
    let mut g = Christoffel::zeros(n + 1);
    let w = (2.0 * t).exp();
    for i in 1..=n {
        g.set(0, i, i, -w);
        g.set(i, 0, i, 1.0);
        g.set(i, i, 0, 1.0);
    }
    g
}

/// Christoffel symbols from the Koszul formula with central differences of
/// [`metric_at`].
pub fn christoffel_fd(amb: &WarpedAmbient, x: &AmbientPoint, step: f64) -> Christoffel {
    let d = amb.dim();
    let dg: Vec<SymMatrix> = (0..d)
        .map(|c| {
            let plus = metric_at(amb, &shifted(x, c, step));
            let minus = metric_at(amb, &shifted(x, c, -step));
            SymMatrix::from_fn(d, |i, j| (plus.get(i, j) - minus.get(i, j)) / (2.0 * step))
                .expect("finite metric derivative")
        })
        .collect();
    let g = metric_at(amb, x);
    let mut out = Christoffel::zeros(d);
    for a in 0..d {
        // metric is diagonal in these coordinates
        let ginv = 1.0 / g.get(a, a);
        for b in 0..d {
            for c in 0..d {
                let first_kind = 0.5 * (dg[b].get(a, c) + dg[c].get(a, b) - dg[a].get(b, c));
                out.set(a, b, c, ginv * first_kind);
            }
        }
    }
    out
}

fn shifted(x: &AmbientPoint, coord: usize, h: f64) -> AmbientPoint {
    let mut y = x.clone();
    if coord == 0 {
        y.t += h;
    } else {
        y.p[coord - 1] += h;
    }
    y
}

/// Values of the potential and its first two covariant derivatives.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PotentialJet {
    pub value: f64,
    /// Upper-index components of `∇V`.
    pub grad: Vec<f64>,
    /// Coordinate components of the covariant Hessian.
    pub hess: SymMatrix,
}

impl PotentialJet {
    /// `max |Hess V − V g|`.
    pub fn hessian_defect(&self, g: &SymMatrix) -> f64 {
        self.hess.max_abs_diff(&g.scaled(self.value))
    }

    /// `Δ V = g^{ab} (Hess V)_{ab}`.
    pub fn laplacian(&self, g: &SymMatrix) -> f64 {
        let d = g.dim();
        (0..d).map(|a| self.hess.get(a, a) / g.get(a, a)).sum()
    }
}

/// `V = c·eᵗ` with its gradient, and `Hess V = ∂∂V − Γ ∂V` assembled from
/// [`christoffel_at`].
pub fn potential_jet(amb: &WarpedAmbient, x: &AmbientPoint) -> PotentialJet {
    let d = amb.dim();
    let v = amb.potential(x.t);
    // partial derivatives: only ∂_t V = ∂_t² V = V
    let mut dv = vec![0.0; d];
    dv[0] = v;
    let gamma = christoffel_at(amb, x);
    let hess = SymMatrix::from_fn(d, |a, b| {
        let second = if a == 0 && b == 0 { v } else { 0.0 };
        let conn: f64 = (0..d).map(|c| gamma.get(c, a, b) * dv[c]).sum();
        second - conn
    })
    .expect("finite hessian");
    // ∇V = g⁻¹ dV and g_tt = 1
    PotentialJet {
        value: v,
        grad: dv,
        hess,
    }
}

/// Hessian of `V` using only finite differences: central differences of `V`
/// and Koszul Christoffels from finite differences of the metric.
pub fn potential_hessian_fd(amb: &WarpedAmbient, x: &AmbientPoint) -> SymMatrix {
    let d = amb.dim();
    let h1 = FD_STEP;
    let h2 = FD_STEP_SECOND;
    let pot = |y: &AmbientPoint| amb.potential(y.t);
    let grad: Vec<f64> = (0..d)
        .map(|a| (pot(&shifted(x, a, h1)) - pot(&shifted(x, a, -h1))) / (2.0 * h1))
        .collect();
    let gamma = christoffel_fd(amb, x, h1);
    SymMatrix::from_fn(d, |a, b| {
        let second = if a == b {
            (pot(&shifted(x, a, h2)) - 2.0 * pot(x) + pot(&shifted(x, a, -h2))) / (h2 * h2)
        } else {
            let pp = shifted(&shifted(x, a, h2), b, h2);
            let pm = shifted(&shifted(x, a, h2), b, -h2);
            let mp = shifted(&shifted(x, a, -h2), b, h2);
            let mm = shifted(&shifted(x, a, -h2), b, -h2);
            (pot(&pp) - pot(&pm) - pot(&mp) + pot(&mm)) / (4.0 * h2 * h2)
        };
        let conn: f64 = (0..d).map(|c| gamma.get(c, a, b) * grad[c]).sum();
        second - conn
    })
    .expect("finite hessian")
}

/// Riemann tensor `R^a_{bcd}` (with `R(∂_c, ∂_d)∂_b = R^a_{bcd} ∂_a`) from
/// central differences of [`christoffel_at`].
pub fn riemann_fd(amb: &WarpedAmbient, x: &AmbientPoint, step: f64) -> Vec<f64> {
    let d = amb.dim();
    let gamma = christoffel_at(amb, x);
    let dgamma: Vec<Christoffel> = (0..d)
        .map(|c| {
            let plus = christoffel_at(amb, &shifted(x, c, step));
            let minus = christoffel_at(amb, &shifted(x, c, -step));
            let mut out = Christoffel::zeros(d);
            for i in 0..out.data.len() {
                out.data[i] = (plus.data[i] - minus.data[i]) / (2.0 * step);
            }
            out
        })
        .collect();
    let mut r = vec![0.0; d * d * d * d];
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                for e in 0..d {
                    let mut v = dgamma[c].get(a, e, b) - dgamma[e].get(a, c, b);
                    for f in 0..d {
                        v += gamma.get(a, c, f) * gamma.get(f, e, b)
                            - gamma.get(a, e, f) * gamma.get(f, c, b);
                    }
                    r[((a * d + b) * d + c) * d + e] = v;
                }
            }
        }
    }
    r
}

/// Sectional curvature of the plane spanned by `u`, `v` from a Riemann tensor
/// in the layout of [`riemann_fd`].
pub fn sectional_curvature(riemann: &[f64], g: &SymMatrix, u: &[f64], v: &[f64]) -> f64 {
    let d = g.dim();
    // R(u, v)v
    let mut rv = vec![0.0; d];
    for a in 0..d {
        let mut acc = 0.0;
        for b in 0..d {
            for c in 0..d {
                for e in 0..d {
                    acc += riemann[((a * d + b) * d + c) * d + e] * v[b] * u[c] * v[e];
                }
            }
        }
        rv[a] = acc;
    }
    let num = g.bilinear(&rv, u);
    let uu = g.bilinear(u, u);
    let vv = g.bilinear(v, v);
    let uv = g.bilinear(u, v);
    num / (uu * vv - uv * uv)
}

/// Ricci tensor `Ric_{bd} = R^a_{bad}`.
pub fn ricci_from_riemann(riemann: &[f64], d: usize) -> SymMatrix {
    SymMatrix::from_fn(d, |b, e| {
        (0..d).map(|a| riemann[((a * d + b) * d + a) * d + e]).sum()
    })
    .expect("finite ricci tensor")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvatureSelfTest {
    pub samples: usize,
    /// `max |K + 1|` over random and coordinate 2-planes.
    pub max_sectional_deviation: f64,
    /// `max |Ric(eₐ, e_b) + n δ_ab|` in the orthonormal coordinate frame.
    pub max_ricci_deviation: f64,
    /// `max |S + n(n+1)|`.
    pub max_scalar_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PotentialSelfTest {
    pub samples: usize,
    /// `max ‖Hess V − V g‖∞` using the closed-form connection.
    pub max_hessian_closed_form: f64,
    /// `max ‖Hess V − V g‖∞` using the finite-difference oracle.
    pub max_hessian_finite_difference: f64,
    /// `max |ΔV/V − (n+1)|`.
    pub max_laplacian_deviation: f64,
}

/// Tolerances of the ambient self-test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SelfTestTolerances {
    pub hessian_closed_form: f64,
    pub hessian_finite_difference: f64,
    pub laplacian: f64,
    pub sectional: f64,
    pub ricci: f64,
    pub scalar: f64,
}

impl Default for SelfTestTolerances {
    fn default() -> Self {
        Self {
            hessian_closed_form: 1e-12,
            hessian_finite_difference: 1e-6,
            laplacian: 1e-12,
            sectional: 1e-5,
            ricci: 1e-5,
            scalar: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AmbientSelfTest {
    pub seed: u64,
    pub curvature: CurvatureSelfTest,
    pub potential: PotentialSelfTest,
    pub tolerances: SelfTestTolerances,
    pub passed: bool,
}

fn random_point(amb: &WarpedAmbient, rng: &mut ChaCha8Rng) -> AmbientPoint {
    let t = rng.gen_range(-2.0..=2.0);
    let p: Vec<f64> = match amb.fiber() {
        Fiber::FlatTorus { periods } => periods.iter().map(|l| rng.gen_range(0.0..*l)).collect(),
        Fiber::Euclidean => (0..amb.n()).map(|_| rng.gen_range(-1.0..=1.0)).collect(),
    };
    amb.point(t, &p).expect("sampled point is valid")
}

/// Finite-difference curvature of the ambient at `samples` random points with
/// `t ∈ [−2, 2]`. Every fiber handled here is flat, so the expected values are
/// those of hyperbolic space: `K = −1`, `Ric = −n g`, `S = −n(n+1)`.
pub fn curvature_selftest(amb: &WarpedAmbient, samples: usize, seed: u64) -> CurvatureSelfTest {
    let n = amb.n();
    let d = amb.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_k = 0.0_f64;
    let mut max_ric = 0.0_f64;
    let mut max_s = 0.0_f64;
    for _ in 0..samples {
        let x = random_point(amb, &mut rng);
        let g = metric_at(amb, &x);
        let r = riemann_fd(amb, &x, FD_STEP);
        let mut planes: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
        let mut et = vec![0.0; d];
        et[0] = 1.0;
        let mut e1 = vec![0.0; d];
        e1[1] = 1.0;
        planes.push((et, e1));
        let i = rng.gen_range(0..d);
        let j = (i + rng.gen_range(1..d)) % d;
        let mut ei = vec![0.0; d];
        ei[i] = 1.0;
        let mut ej = vec![0.0; d];
        ej[j] = 1.0;
        planes.push((ei, ej));
        let u: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        planes.push((u, v));
        for (u, v) in &planes {
            max_k = max_k.max((sectional_curvature(&r, &g, u, v) + 1.0).abs());
        }
        let ric = ricci_from_riemann(&r, d);
        let mut scalar = 0.0;
        for a in 0..d {
            scalar += ric.get(a, a) / g.get(a, a);
            for b in 0..d {
                let normalized = ric.get(a, b) / (g.get(a, a) * g.get(b, b)).sqrt();
                let target = if a == b { -(n as f64) } else { 0.0 };
                max_ric = max_ric.max((normalized - target).abs());
            }
        }
        max_s = max_s.max((scalar + (n * (n + 1)) as f64).abs());
    }
    CurvatureSelfTest {
        samples,
        max_sectional_deviation: max_k,
        max_ricci_deviation: max_ric,
        max_scalar_deviation: max_s,
    }
}

/// `Hess V = V g` and `ΔV = (n+1)V` at `samples` random points with `t ∈ [−2, 2]`.
pub fn potential_selftest(amb: &WarpedAmbient, samples: usize, seed: u64) -> PotentialSelfTest {
    let n = amb.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut closed = 0.0_f64;
    let mut fd = 0.0_f64;
    let mut lap = 0.0_f64;
    for _ in 0..samples {
        let x = random_point(amb, &mut rng);
        let g = metric_at(amb, &x);
        let jet = potential_jet(amb, &x);
        closed = closed.max(jet.hessian_defect(&g));
        fd = fd.max(potential_hessian_fd(amb, &x).max_abs_diff(&g.scaled(jet.value)));
        lap = lap.max((jet.laplacian(&g) / jet.value - (n + 1) as f64).abs());
    }
    PotentialSelfTest {
        samples,
        max_hessian_closed_form: closed,
        max_hessian_finite_difference: fd,
        max_laplacian_deviation: lap,
    }
}

/// Curvature and potential self-tests against the default tolerances.
pub fn ambient_selftest(amb: &WarpedAmbient, samples: usize, seed: u64) -> AmbientSelfTest {
    let tol = SelfTestTolerances::default();
    let curvature = curvature_selftest(amb, samples, seed);
    let potential = potential_selftest(amb, samples, seed);
    let passed = potential.max_hessian_closed_form < tol.hessian_closed_form
        && potential.max_hessian_finite_difference < tol.hessian_finite_difference
        && potential.max_laplacian_deviation < tol.laplacian
        && curvature.max_sectional_deviation < tol.sectional
        && curvature.max_ricci_deviation < tol.ricci
        && curvature.max_scalar_deviation < tol.scalar;
    AmbientSelfTest {
        seed,
        curvature,
        potential,
        tolerances: tol,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus2() -> WarpedAmbient {
        WarpedAmbient::torus(vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn metric_examples() {
        let amb = torus2();
        let g0 = metric_at(&amb, &amb.point(0.0, &[0.3, 0.1]).unwrap());
        assert_eq!(g0, SymMatrix::identity(3).unwrap());
        let g = metric_at(&amb, &amb.point(2f64.ln(), &[0.0, 0.0]).unwrap());
        assert!(g.max_abs_diff(&SymMatrix::diagonal(&[1.0, 4.0, 4.0]).unwrap()) < 1e-14);
    }

    #[test]
    fn christoffel_at_unit_warping() {
        let amb = torus2();
        let x = amb.point(0.0, &[0.0, 0.0]).unwrap();
        let g = christoffel_at(&amb, &x);
        assert_eq!(g.get(0, 1, 1), -1.0);
        assert_eq!(g.get(1, 0, 1), 1.0);
        assert_eq!(g.get(0, 0, 0), 0.0);
        assert_eq!(g.get(1, 1, 2), 0.0);
    }

    #[test]
    fn torus_points_are_reduced() {
        let amb = WarpedAmbient::torus(vec![2.0, 3.0]).unwrap();
        let x = amb.point(0.0, &[5.0, -1.0]).unwrap();
        assert_eq!(x.p, vec![1.0, 2.0]);
    }

    #[test]
    fn invalid_ambients() {
        assert!(WarpedAmbient::torus(vec![1.0]).is_err());
        assert!(WarpedAmbient::torus(vec![1.0, 0.0]).is_err());
        assert!(WarpedAmbient::hyperbolic(8).is_err());
        assert!(WarpedAmbient::hyperbolic(2)
            .unwrap()
            .with_potential_scale(-1.0)
            .is_err());
        assert!(WarpedAmbient::new(
            2,
            Fiber::FlatTorus {
                periods: vec![1.0; 3]
            },
            1.0
        )
        .is_err());
    }

    #[test]
    fn base_slice_potential() {
        let amb = torus2();
        let jet = potential_jet(&amb, &amb.point(0.0, &[0.0, 0.0]).unwrap());
        assert_eq!(jet.value, 1.0);
        assert_eq!(jet.grad, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn selftest_passes_on_small_sample() {
        let report = ambient_selftest(&WarpedAmbient::hyperbolic(3).unwrap(), 20, 7);
        assert!(report.passed, "{report:?}");
    }
}
