//! Closed hypersurfaces `Σⁿ ⊂ ℝ ×_exp P` given by analytic immersions, and
//! their extrinsic curvature.
//!
//! Conventions: `N` is the inward unit normal, the shape operator is
//! `A(X) = −∇̄_X N`, and the second fundamental form is
//! `h_ij = ⟨N, ∇̄_{∂_i} ∂_j⟩ = ⟨A ∂_i, ∂_j⟩`. Slices then have all principal
//! curvatures equal to 1 and geodesic spheres of radius `ρ` have `coth ρ`.

use serde::Serialize;

use crate::ambient::{christoffel_at, metric_at, AmbientPoint, Fiber, WarpedAmbient};
use crate::error::{Error, Result};
use crate::linalg::{shape_from_forms, Cholesky, SymMatrix};
use crate::symmetric::{newton_tensors, CurvatureProfile};

/// One term `a·cos(2π k·x) + b·sin(2π k·x)` of a graph function, where
/// `xᵢ = pᵢ / Lᵢ` are the normalized torus coordinates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FourierMode {
    pub wavenumbers: Vec<i32>,
    pub cos: f64,
    pub sin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SurfaceFamily {
    /// `{s} × P`; requires a torus fiber.
    Slice { s: f64 },
    /// Graph `t = u(p)` of `u = base + Σ modes` over a torus fiber.
    TorusGraph { base: f64, modes: Vec<FourierMode> },
    /// Geodesic sphere of hyperbolic radius `rho` centred above the
    /// half-space point `(z0, x0)`; requires a Euclidean fiber.
    GeodesicSphere { z0: f64, x0: Vec<f64>, rho: f64 },
}

impl SurfaceFamily {
    /// Single-mode graph `base + amplitude·cos(2π x_axis)`.
    pub fn cosine_graph(n: usize, base: f64, axis: usize, amplitude: f64) -> Self {
        let mut k = vec![0; n];
        k[axis] = 1;
        SurfaceFamily::TorusGraph {
            base,
            modes: vec![FourierMode {
                wavenumbers: k,
                cos: amplitude,
                sin: 0.0,
            }],
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            SurfaceFamily::Slice { .. } => "slice",
            SurfaceFamily::TorusGraph { .. } => "torus-graph",
            SurfaceFamily::GeodesicSphere { .. } => "geodesic-sphere",
        }
    }

    pub fn is_torus_family(&self) -> bool {
        !matches!(self, SurfaceFamily::GeodesicSphere { .. })
    }

    /// Checks parameters and compatibility with the ambient fiber.
    pub fn validate(&self, amb: &WarpedAmbient) -> Result<()> {
        let n = amb.n();
        match (self, amb.fiber()) {
            (SurfaceFamily::Slice { s }, Fiber::FlatTorus { .. }) => {
                if !s.is_finite() {
                    return Err(Error::InvalidArgument("slice height must be finite".into()));
                }
            }
            (SurfaceFamily::TorusGraph { base, modes }, Fiber::FlatTorus { .. }) => {
                if !base.is_finite() {
                    return Err(Error::InvalidArgument("graph base must be finite".into()));
                }
                for (i, m) in modes.iter().enumerate() {
                    if m.wavenumbers.len() != n {
                        return Err(Error::InvalidArgument(format!(
                            "mode {i} has {} wavenumbers, expected {n}",
                            m.wavenumbers.len()
                        )));
                    }
                    if !(m.cos.is_finite() && m.sin.is_finite()) {
                        return Err(Error::InvalidArgument(format!(
                            "mode {i} has non-finite coefficients"
                        )));
                    }
                }
            }
            (SurfaceFamily::GeodesicSphere { z0, x0, rho }, Fiber::Euclidean) => {
                if !(z0.is_finite() && *z0 > 0.0) {
                    return Err(Error::InvalidArgument("sphere z0 must be positive".into()));
                }
                if !(rho.is_finite() && *rho > 0.0) {
                    return Err(Error::InvalidArgument(
                        "sphere radius must be positive".into(),
                    ));
                }
                if x0.len() != n || x0.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "sphere x0 must have {n} finite components"
                    )));
                }
            }
            (fam, _) => {
                return Err(Error::UnsupportedFamily(format!(
                    "{} is not available over a {} fiber",
                    fam.kind_name(),
                    fiber_name(amb.fiber())
                )))
            }
        }
        Ok(())
    }

    /// Values and parameter derivatives of the graph function `u`.
    pub fn height_jet(&self, amb: &WarpedAmbient, q: &[f64]) -> Result<ScalarJet> {
        let n = amb.n();
        match self {
            SurfaceFamily::Slice { s } => Ok(ScalarJet::constant(*s, n)),
            SurfaceFamily::TorusGraph { base, modes } => {
                let periods = torus_periods(amb)?;
                let mut jet = ScalarJet::constant(*base, n);
                for m in modes {
                    let w: Vec<f64> = m
                        .wavenumbers
                        .iter()
                        .zip(periods)
                        .map(|(k, l)| 2.0 * std::f64::consts::PI * f64::from(*k) / l)
                        .collect();
                    let theta: f64 = w.iter().zip(q).map(|(wi, qi)| wi * qi).sum();
                    let (sn, cs) = theta.sin_cos();
                    let d1 = -m.cos * sn + m.sin * cs;
                    let d2 = -m.cos * cs - m.sin * sn;
                    jet.value += m.cos * cs + m.sin * sn;
                    for i in 0..n {
                        jet.grad[i] += d1 * w[i];
                        for j in 0..n {
                            jet.hess[i * n + j] += d2 * w[i] * w[j];
                        }
                    }
                }
                Ok(jet)
            }
            SurfaceFamily::GeodesicSphere { .. } => Err(Error::UnsupportedFamily(
                "geodesic spheres are not graphs over the fiber".into(),
            )),
        }
    }
}

fn fiber_name(f: &Fiber) -> &'static str {
    match f {
        Fiber::FlatTorus { .. } => "torus",
        Fiber::Euclidean => "euclidean",
    }
}

fn torus_periods(amb: &WarpedAmbient) -> Result<&[f64]> {
    amb.periods()
        .ok_or_else(|| Error::UnsupportedFamily("torus family needs a torus fiber".into()))
}

/// Value, gradient and (row-major) Hessian of a scalar in parameter coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarJet {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

impl ScalarJet {
    fn constant(value: f64, n: usize) -> Self {
        Self {
            value,
            grad: vec![0.0; n],
            hess: vec![0.0; n * n],
        }
    }
}

/// Parameter point of a chart: torus coordinates `p`, or `(u₁…u_{n−1}, φ)`
/// on the sphere where `uⱼ = cos θⱼ` are polar and `φ` is the azimuth.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ParamPoint(pub Vec<f64>);

/// An immersion evaluated at one parameter point.
#[derive(Clone, Debug, PartialEq)]
pub struct Immersion {
    pub point: AmbientPoint,
    /// `∂ᵢ x` in ambient coordinates.
    pub tangents: Vec<Vec<f64>>,
    /// `∂ᵢ∂ⱼ x`, indexed `i * n + j`.
    pub second: Vec<Vec<f64>>,
    /// Any vector transverse to `Σ` on its inward side.
    pub inward_reference: Vec<f64>,
}

impl Immersion {
    /// Applies the linear reparametrization `q = M q'` (`M` row-major).
    pub fn reparametrized(&self, m: &[f64]) -> Immersion {
        let n = self.tangents.len();
        let d = self.point.p.len() + 1;
        let tangents = (0..n)
            .map(|i| {
                (0..d)
                    .map(|a| (0..n).map(|k| m[k * n + i] * self.tangents[k][a]).sum())
                    .collect()
            })
            .collect();
        let mut second = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let v = (0..d)
                    .map(|a| {
                        let mut acc = 0.0;
                        for k in 0..n {
                            for l in 0..n {
                                acc += m[k * n + i] * m[l * n + j] * self.second[k * n + l][a];
                            }
                        }
                        acc
                    })
                    .collect();
                second.push(v);
            }
        }
        Immersion {
            point: self.point.clone(),
            tangents,
            second,
            inward_reference: self.inward_reference.clone(),
        }
    }
}

/// Point, tangent basis and second derivatives of the immersion at `q`, all
/// from closed-form derivatives.
pub fn immerse(fam: &SurfaceFamily, amb: &WarpedAmbient, q: &ParamPoint) -> Result<Immersion> {
    let n = amb.n();
    if q.0.len() != n {
        return Err(Error::InvalidArgument(format!(
            "expected {n} parameters, got {}",
            q.0.len()
        )));
    }
    match fam {
        SurfaceFamily::Slice { .. } | SurfaceFamily::TorusGraph { .. } => {
            let u = fam.height_jet(amb, &q.0)?;
            let point = amb.point(u.value, &q.0)?;
            let tangents = (0..n)
                .map(|i| {
                    let mut v = vec![0.0; n + 1];
                    v[0] = u.grad[i];
                    v[i + 1] = 1.0;
                    v
                })
                .collect();
            let second = (0..n * n)
                .map(|ij| {
                    let mut v = vec![0.0; n + 1];
                    v[0] = u.hess[ij];
                    v
                })
                .collect();
            let mut inward_reference = vec![0.0; n + 1];
            inward_reference[0] = -1.0;
            Ok(Immersion {
                point,
                tangents,
                second,
                inward_reference,
            })
        }
        SurfaceFamily::GeodesicSphere { z0, x0, rho } => sphere_immersion(amb, *z0, x0, *rho, &q.0),
    }
}

#[derive(Clone, Copy)]
enum Factor {
    U,
    S,
    Cos,
    Sin,
}

fn factor_jet(f: Factor, x: f64) -> [f64; 3] {
    match f {
        Factor::U => [x, 1.0, 0.0],
        Factor::S => {
            let s = (1.0 - x * x).sqrt();
            [s, -x / s, -1.0 / (s * s * s)]
        }
        Factor::Cos => [x.cos(), -x.sin(), -x.cos()],
        Factor::Sin => [x.sin(), x.cos(), -x.sin()],
    }
}

/// Unit sphere `Sⁿ ⊂ ℝⁿ⁺¹` in the chart `(u₁…u_{n−1}, φ)` together with its
/// first and second parameter derivatives.
///
/// Component `k < n−1` is `s₁⋯s_k·u_{k+1}`, component `n−1` is
/// `s₁⋯s_{n−1}·cos φ` and component `n` is `s₁⋯s_{n−1}·sin φ`, with
/// `sⱼ = √(1 − uⱼ²)`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitSphereJet {
    pub value: Vec<f64>,
    /// `grad[k][a] = ∂_a y_k`.
    pub grad: Vec<Vec<f64>>,
    /// `hess[k][a * n + b] = ∂_a ∂_b y_k`.
    pub hess: Vec<Vec<f64>>,
}

impl UnitSphereJet {
    /// `√det(Jᵀ J)`: density of the round measure in this chart.
    pub fn area_density(&self) -> f64 {
        let n = self.grad[0].len();
        let g = SymMatrix::from_fn(n, |a, b| self.grad.iter().map(|row| row[a] * row[b]).sum())
            .expect("finite chart metric");
        Cholesky::new(&g).map(|c| c.sqrt_det()).unwrap_or(0.0)
    }
}

pub fn unit_sphere_jet(q: &[f64]) -> Result<UnitSphereJet> {
    let n = q.len();
    if n < 2 {
        return Err(Error::InvalidArgument("sphere chart needs n >= 2".into()));
    }
    for &u in &q[..n - 1] {
        if !(u.abs() < 1.0) || (1.0 - u * u).sqrt() < 1e-12 {
            return Err(Error::ChartPole(q.to_vec()));
        }
    }
    let mut value = Vec::with_capacity(n + 1);
    let mut grad = Vec::with_capacity(n + 1);
    let mut hess = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let mut factors: Vec<(usize, Factor)> = Vec::new();
        let sines = k.min(n - 1);
        for j in 0..sines {
            factors.push((j, Factor::S));
        }
        factors.push(match k {
            k if k < n - 1 => (k, Factor::U),
            k if k == n - 1 => (n - 1, Factor::Cos),
            _ => (n - 1, Factor::Sin),
        });
        let jets: Vec<(usize, [f64; 3])> = factors
            .iter()
            .map(|(a, f)| (*a, factor_jet(*f, q[*a])))
            .collect();
        // product with factor `skip` replaced by its derivative of the given order
        let product = |subst: &[(usize, usize)]| -> f64 {
            jets.iter()
                .map(|(a, j)| {
                    let order = subst.iter().find(|(b, _)| b == a).map_or(0, |(_, o)| *o);
                    j[order]
                })
                .product()
        };
        let has = |a: usize| jets.iter().any(|(b, _)| *b == a);
        value.push(product(&[]));
        grad.push(
            (0..n)
                .map(|a| if has(a) { product(&[(a, 1)]) } else { 0.0 })
                .collect(),
        );
        let mut h = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                if !(has(a) && has(b)) {
                    continue;
                }
                h[a * n + b] = if a == b {
                    product(&[(a, 2)])
                } else {
                    product(&[(a, 1), (b, 1)])
                };
            }
        }
        hess.push(h);
    }
    Ok(UnitSphereJet { value, grad, hess })
}

/// Half-space centre height and Euclidean radius of a geodesic sphere:
/// `(z₀ cosh ρ, z₀ sinh ρ)`.
pub fn sphere_euclidean_geometry(z0: f64, rho: f64) -> (f64, f64) {
    (z0 * rho.cosh(), z0 * rho.sinh())
}

/// Index of the unit-sphere component mapped to the vertical half-space axis.
pub(crate) fn vertical_component(n: usize) -> usize {
    n - 1
}

/// Unit-sphere components mapped to the fiber axes, in order.
pub(crate) fn horizontal_components(n: usize) -> impl Iterator<Item = usize> {
    (0..n - 1).chain(std::iter::once(n))
}

fn sphere_immersion(
    amb: &WarpedAmbient,
    z0: f64,
    x0: &[f64],
    rho: f64,
    q: &[f64],
) -> Result<Immersion> {
    let n = amb.n();
    let y = unit_sphere_jet(q)?;
    let (zc, radius) = sphere_euclidean_geometry(z0, rho);
    let vz = vertical_component(n);
    let z = zc + radius * y.value[vz];
    let zg: Vec<f64> = y.grad[vz].iter().map(|v| radius * v).collect();
    let zh: Vec<f64> = y.hess[vz].iter().map(|v| radius * v).collect();
    // t = −ln z
    let t = -z.ln();
    let fiber: Vec<f64> = horizontal_components(n)
        .zip(x0)
        .map(|(k, x)| x + radius * y.value[k])
        .collect();
    let point = amb.point(t, &fiber)?;
    let tangents = (0..n)
        .map(|a| {
            let mut v = Vec::with_capacity(n + 1);
            v.push(-zg[a] / z);
            v.extend(horizontal_components(n).map(|k| radius * y.grad[k][a]));
            v
        })
        .collect();
    let mut second = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            let mut v = Vec::with_capacity(n + 1);
            v.push(-zh[a * n + b] / z + zg[a] * zg[b] / (z * z));
            v.extend(horizontal_components(n).map(|k| radius * y.hess[k][a * n + b]));
            second.push(v);
        }
    }
    // Euclidean inward direction −y, converted through dt = −dz / z.
    let mut inward_reference = Vec::with_capacity(n + 1);
    inward_reference.push(y.value[vz] / z);
    inward_reference.extend(horizontal_components(n).map(|k| -y.value[k]));
    Ok(Immersion {
        point,
        tangents,
        second,
        inward_reference,
    })
}

fn first_form_of(g: &SymMatrix, imm: &Immersion) -> SymMatrix {
    let n = imm.tangents.len();
    SymMatrix::from_fn(n, |i, j| g.bilinear(&imm.tangents[i], &imm.tangents[j]))
        .expect("finite first fundamental form")
}

/// First fundamental form `g1_ij = ⟨∂ᵢx, ∂ⱼx⟩` at `q`.
pub fn first_form(fam: &SurfaceFamily, amb: &WarpedAmbient, q: &ParamPoint) -> Result<SymMatrix> {
    let imm = immerse(fam, amb, q)?;
    let g = metric_at(amb, &imm.point);
    Ok(first_form_of(&g, &imm))
}

fn normal_from(g: &SymMatrix, g1: &Cholesky, imm: &Immersion, q: &[f64]) -> Result<Vec<f64>> {
    let n = imm.tangents.len();
    let r = &imm.inward_reference;
    // remove the tangential part of r: N ∝ r − T g1⁻¹ Tᵀ g r
    let rhs: Vec<f64> = imm.tangents.iter().map(|t| g.bilinear(t, r)).collect();
    let coef = g1.solve(&rhs);
    let mut normal = r.clone();
    for i in 0..n {
        for (a, v) in normal.iter_mut().enumerate() {
            *v -= coef[i] * imm.tangents[i][a];
        }
    }
    let len = g.bilinear(&normal, &normal).sqrt();
    let scale = g.bilinear(r, r).sqrt();
    if !(len > 1e-12 * scale) {
        return Err(Error::DegenerateImmersion {
            point: q.to_vec(),
            reason: "inward reference direction is tangent".into(),
        });
    }
    normal.iter_mut().for_each(|v| *v /= len);
    Ok(normal)
}

fn chol_of_first_form(g1: &SymMatrix, q: &[f64]) -> Result<Cholesky> {
    Cholesky::new(g1).map_err(|e| Error::DegenerateImmersion {
        point: q.to_vec(),
        reason: e.to_string(),
    })
}

/// Inward unit normal (ambient coordinate components).
pub fn inward_normal(fam: &SurfaceFamily, amb: &WarpedAmbient, q: &ParamPoint) -> Result<Vec<f64>> {
    let imm = immerse(fam, amb, q)?;
    let g = metric_at(amb, &imm.point);
    let g1 = first_form_of(&g, &imm);
    normal_from(&g, &chol_of_first_form(&g1, &q.0)?, &imm, &q.0)
}

/// Everything the verification integrals need at one point of `Σ`.
#[derive(Clone, Debug)]
pub struct CurvatureData {
    pub param: ParamPoint,
    pub point: AmbientPoint,
    pub tangents: Vec<Vec<f64>>,
    /// Inward unit normal.
    pub normal: Vec<f64>,
    pub first_form: SymMatrix,
    pub second_form: SymMatrix,
    /// Shape operator in the whitened parameter frame.
    pub shape: SymMatrix,
    pub metric_factor: Cholesky,
    pub profile: CurvatureProfile,
    /// `√det g1`.
    pub area_element: f64,
    /// `V = c·eᵗ`.
    pub potential: f64,
    /// `⟨∇V, N⟩`.
    pub potential_normal: f64,
    /// `t`-coordinate of the point (height function `h`).
    pub height: f64,
}

impl CurvatureData {
    pub fn mean_curvature(&self) -> f64 {
        self.profile.hk[1]
    }

    pub fn h2(&self) -> f64 {
        self.profile.hk[2]
    }

    /// `⟨N, ∂_t⟩`.
    pub fn normal_dt(&self) -> f64 {
        // g_tt = 1
        self.normal[0]
    }

    pub fn umbilicity_defect(&self) -> f64 {
        self.profile.umbilicity_defect()
    }
}

pub fn curvature_data(
    fam: &SurfaceFamily,
    amb: &WarpedAmbient,
    q: &ParamPoint,
) -> Result<CurvatureData> {
    let imm = immerse(fam, amb, q)?;
    curvature_from_immersion(amb, &imm, q)
}

/// Curvature data of an already evaluated immersion.
pub fn curvature_from_immersion(
    amb: &WarpedAmbient,
    imm: &Immersion,
    q: &ParamPoint,
) -> Result<CurvatureData> {
    let n = imm.tangents.len();
    let g = metric_at(amb, &imm.point);
    let g1 = first_form_of(&g, imm);
    let chol = chol_of_first_form(&g1, &q.0)?;
    let normal = normal_from(&g, &chol, imm, &q.0)?;
    let gamma = christoffel_at(amb, &imm.point);
    let second_form = SymMatrix::from_fn(n, |i, j| {
        let conn = gamma.contract(&imm.tangents[i], &imm.tangents[j]);
        let acc: Vec<f64> = imm.second[i * n + j]
            .iter()
            .zip(&conn)
            .map(|(a, b)| a + b)
            .collect();
        g.bilinear(&normal, &acc)
    })
    .map_err(|_| Error::NonFinite {
        what: "second fundamental form",
        point: q.0.clone(),
    })?;
    let shape = shape_from_forms(&g1, &second_form)?;
    let profile = newton_tensors(&shape)?;
    let potential = amb.potential(imm.point.t);
    let potential_normal = potential * normal[0];
    let area_element = chol.sqrt_det();
    if !(area_element.is_finite() && area_element > 0.0) {
        return Err(Error::NonFinite {
            what: "area element",
            point: q.0.clone(),
        });
    }
    if profile.sigma.iter().any(|v| !v.is_finite()) || !potential_normal.is_finite() {
        return Err(Error::NonFinite {
            what: "curvature profile",
            point: q.0.clone(),
        });
    }
    Ok(CurvatureData {
        param: q.clone(),
        point: imm.point.clone(),
        tangents: imm.tangents.clone(),
        normal,
        first_form: g1,
        second_form,
        shape,
        metric_factor: chol,
        profile,
        area_element,
        potential,
        potential_normal,
        height: imm.point.t,
    })
}

/// Second fundamental form computed as `−⟨∇̄_{∂ᵢ}N, ∂ⱼ⟩`, differentiating the
/// normal field by central differences with the given parameter step.
/// Returned row-major and unsymmetrized.
pub fn second_form_via_normal(
    fam: &SurfaceFamily,
    amb: &WarpedAmbient,
    q: &ParamPoint,
    step: f64,
) -> Result<Vec<f64>> {
    let n = amb.n();
    let imm = immerse(fam, amb, q)?;
    let g = metric_at(amb, &imm.point);
    let gamma = christoffel_at(amb, &imm.point);
    let normal = inward_normal(fam, amb, q)?;
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        let mut qp = q.clone();
        qp.0[i] += step;
        let mut qm = q.clone();
        qm.0[i] -= step;
        let np = inward_normal(fam, amb, &qp)?;
        let nm = inward_normal(fam, amb, &qm)?;
        let conn = gamma.contract(&imm.tangents[i], &normal);
        let cov: Vec<f64> = (0..=n)
            .map(|a| (np[a] - nm[a]) / (2.0 * step) + conn[a])
            .collect();
        for j in 0..n {
            out[i * n + j] = -g.bilinear(&cov, &imm.tangents[j]);
        }
    }
    Ok(out)
}

/// Intrinsic scalar curvature `S^Σ = n(n−1)(H₂ − 1)` of a hypersurface in an
/// Einstein ambient with `Ric = −n g`.
pub fn scalar_curvature(data: &CurvatureData, n: usize) -> f64 {
    (n * (n - 1)) as f64 * (data.h2() - 1.0)
}
