//! Integral identities and inequalities evaluated on sampled hypersurfaces.
//!
//! Every check returns a report with the raw numbers and a verdict. Verdicts
//! mean "consistent at the stated tolerance"; nothing here is a proof.
//! Residuals are normalized by the scale `∫_Σ V dΣ`.

use serde::Serialize;

use crate::ambient::WarpedAmbient;
use crate::error::{Error, Result};
use crate::hypersurface::{scalar_curvature, SurfaceFamily};
use crate::quadrature::{grid_for, sample_surface, weighted_volume, SurfaceSample};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

/// Tolerances of the verification checks. Residual tolerances are relative
/// to `∫_Σ V`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Minkowski residuals and the allowed negative slack of the HK residual.
    pub identity: f64,
    /// `|HK residual|` below this counts as equality.
    pub hk_equality: f64,
    /// Mismatch allowed between the HK residual and the volume form of the inequality.
    pub linkage: f64,
    /// `max |λᵢ − H|` below this counts as umbilic.
    pub umbilic: f64,
    /// Negative slack allowed in `H − √H₂`.
    pub garding: f64,
    pub h2_integral: f64,
    /// Largest `max − min` of `H₂` accepted as constant.
    pub h2_constancy: f64,
    /// Largest spread of the intrinsic scalar curvature accepted as constant.
    pub scalar_spread: f64,
    /// Normalized residuals below this are treated as converged.
    pub convergence_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            identity: 1e-8,
            hk_equality: 1e-7,
            linkage: 1e-9,
            umbilic: 1e-8,
            garding: 1e-12,
            h2_integral: 1e-9,
            h2_constancy: 1e-8,
            scalar_spread: 1e-8,
            convergence_floor: 1e-13,
        }
    }
}

impl Tolerances {
    /// Replaces every residual tolerance (not the pointwise ones) by `tol`.
    pub fn with_residual_tolerance(mut self, tol: f64) -> Self {
        self.identity = tol;
        self.hk_equality = tol;
        self.linkage = tol;
        self.h2_integral = tol;
        self
    }
}

fn max_umbilicity_defect(sample: &SurfaceSample) -> f64 {
    sample
        .data
        .iter()
        .fold(0.0_f64, |m, d| m.max(d.umbilicity_defect()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HkReport {
    /// `∫ V/H`.
    pub i1: f64,
    /// `∫ ⟨∇V, N⟩`.
    pub i2: f64,
    pub residual: f64,
    pub scale: f64,
    pub normalized_residual: f64,
    pub umbilicity_defect: f64,
    pub min_mean_curvature: f64,
    pub corollary_lhs: f64,
    /// `(n+1) ∫_Ω V`.
    pub corollary_rhs: Option<f64>,
    /// `|(lhs − rhs) − residual| / scale`.
    pub linkage_defect: Option<f64>,
    pub nonnegative: bool,
    pub equality: bool,
    pub umbilic: bool,
    pub verdict: Verdict,
}

/// `∫ V/H + ∫⟨∇V, N⟩ ≥ 0` with equality exactly for umbilic hypersurfaces,
/// and its volume form `∫ V/H ≥ (n+1) ∫_Ω V`.
pub fn check_hk(sample: &SurfaceSample, tol: &Tolerances) -> Result<HkReport> {
    let (idx, min_h) = sample
        .data
        .iter()
        .map(|d| d.mean_curvature())
        .enumerate()
        .fold(
            (0, f64::INFINITY),
            |acc, (i, h)| if h < acc.1 { (i, h) } else { acc },
        );
    if !(min_h > 0.0) {
        return Err(Error::Hypothesis(format!(
            "mean curvature {min_h:e} is not positive at node {idx} (parameters {:?})",
            sample.grid.nodes[idx].0
        )));
    }
    let i1 = sample.integrate(|d| d.potential / d.mean_curvature())?;
    let i2 = sample.integrate(|d| d.potential_normal)?;
    let scale = sample.potential_integral()?;
    let residual = i1 + i2;
    let n = sample.ambient.n() as f64;
    let corollary_rhs =
        Some((n + 1.0) * weighted_volume(&sample.family, &sample.ambient, &sample.grid)?);
    let linkage_defect = corollary_rhs.map(|rhs| ((i1 - rhs) - residual).abs() / scale);
    let umbilicity_defect = max_umbilicity_defect(sample);
    let normalized_residual = residual / scale;
    let nonnegative = normalized_residual >= -tol.identity;
    let equality = normalized_residual.abs() <= tol.hk_equality;
    let umbilic = umbilicity_defect <= tol.umbilic;
    let linked = linkage_defect.is_none_or(|l| l <= tol.linkage);
    Ok(HkReport {
        i1,
        i2,
        residual,
        scale,
        normalized_residual,
        umbilicity_defect,
        min_mean_curvature: min_h,
        corollary_lhs: i1,
        corollary_rhs,
        linkage_defect,
        nonnegative,
        equality,
        umbilic,
        verdict: Verdict::from_bool(nonnegative && equality == umbilic && linked),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MinkowskiReport {
    pub k: usize,
    pub residual: f64,
    pub scale: f64,
    pub normalized_residual: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
}

/// `∫ (V H_k + ⟨∇V, N⟩ H_{k+1}) = 0`.
///
/// Holds for `k ∈ {0, 1}` in any Einstein warped product. Larger `k` need a
/// constant-curvature ambient and are only evaluated when
/// `allow_constant_curvature` is set (every fiber modelled here is flat).
pub fn check_minkowski(
    k: usize,
    sample: &SurfaceSample,
    tol: &Tolerances,
    allow_constant_curvature: bool,
) -> Result<MinkowskiReport> {
    let n = sample.ambient.n();
    if k + 1 > n {
        return Err(Error::InvalidArgument(format!(
            "Minkowski identity of order {k} needs H_{} but n = {n}",
            k + 1
        )));
    }
    if k >= 2 && !allow_constant_curvature {
        return Err(Error::InvalidArgument(format!(
            "Minkowski identity of order {k} only holds in constant curvature; \
             enable the constant-curvature flag to evaluate it"
        )));
    }
    let residual = sample
        .integrate(|d| d.potential * d.profile.hk[k] + d.potential_normal * d.profile.hk[k + 1])?;
    let scale = sample.potential_integral()?;
    let normalized_residual = residual / scale;
    Ok(MinkowskiReport {
        k,
        residual,
        scale,
        normalized_residual,
        tolerance: tol.identity,
        verdict: Verdict::from_bool(normalized_residual.abs() <= tol.identity),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct H2IntegralReport {
    /// `∫ (√H₂ − H) ⟨∇V, N⟩`.
    pub value: f64,
    pub scale: f64,
    pub normalized_value: f64,
    pub h2_mean: f64,
    pub h2_spread: f64,
    pub umbilicity_defect: f64,
    pub verdict: Verdict,
}

fn h2_range(sample: &SurfaceSample) -> (f64, f64) {
    sample
        .data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| {
            (lo.min(d.h2()), hi.max(d.h2()))
        })
}

/// `∫ (√H₂ − H) ⟨∇V, N⟩ ≤ 0` for constant positive `H₂`, with equality exactly
/// for umbilic hypersurfaces.
pub fn check_h2_integral(sample: &SurfaceSample, tol: &Tolerances) -> Result<H2IntegralReport> {
    let (lo, hi) = h2_range(sample);
    let spread = hi - lo;
    if !(spread < tol.h2_constancy) {
        return Err(Error::Hypothesis(format!(
            "H2 is not constant: spread {spread:e} exceeds {:e}",
            tol.h2_constancy
        )));
    }
    if !(lo > 0.0) {
        return Err(Error::Hypothesis(format!("H2 = {lo:e} is not positive")));
    }
    let value = sample.integrate(|d| (d.h2().sqrt() - d.mean_curvature()) * d.potential_normal)?;
    let scale = sample.potential_integral()?;
    let normalized_value = value / scale;
    let umbilicity_defect = max_umbilicity_defect(sample);
    let equality = normalized_value.abs() <= tol.h2_integral;
    let umbilic = umbilicity_defect <= tol.umbilic;
    Ok(H2IntegralReport {
        value,
        scale,
        normalized_value,
        h2_mean: 0.5 * (lo + hi),
        h2_spread: spread,
        umbilicity_defect,
        verdict: Verdict::from_bool(normalized_value <= tol.h2_integral && equality == umbilic),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GardingReport {
    /// `min (H − √H₂)` over the grid.
    pub min_gap: f64,
    pub min_node: usize,
    pub umbilicity_defect_at_min: f64,
    pub min_h2: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
}

/// `H ≥ √H₂` under the hypotheses "all principal curvatures positive at some
/// point" and "`H₂ > 0` everywhere".
pub fn check_garding(sample: &SurfaceSample, tol: &Tolerances) -> Result<GardingReport> {
    let (min_h2, _) = h2_range(sample);
    if !(min_h2 > 0.0) {
        return Err(Error::Hypothesis(format!(
            "H2 = {min_h2:e} is not positive everywhere"
        )));
    }
    if !sample
        .data
        .iter()
        .any(|d| d.profile.principal.iter().all(|l| *l > 0.0))
    {
        return Err(Error::Hypothesis(
            "no grid node has all principal curvatures positive".into(),
        ));
    }
    let (min_node, min_gap) = sample
        .data
        .iter()
        .map(|d| d.mean_curvature() - d.h2().sqrt())
        .enumerate()
        .fold(
            (0, f64::INFINITY),
            |acc, (i, g)| if g < acc.1 { (i, g) } else { acc },
        );
    Ok(GardingReport {
        min_gap,
        min_node,
        umbilicity_defect_at_min: sample.data[min_node].umbilicity_defect(),
        min_h2,
        tolerance: tol.garding,
        verdict: Verdict::from_bool(min_gap >= -tol.garding),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Slice,
    Sphere,
    Neither,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlexandrovReport {
    /// `max − min` of `S^Σ` over the grid.
    pub scalar_curvature_spread: f64,
    pub scalar_curvature_mean: f64,
    pub umbilicity_defect: f64,
    pub height_spread: f64,
    pub mean_curvature_mean: f64,
    pub classification: Classification,
    pub verdict: Verdict,
}

/// Constant scalar curvature and umbilicity on one sampled family.
///
/// Umbilic constant-curvature samples are tagged `slice` when the height is
/// constant with `H = 1` and `sphere` when `H > 1`; everything else is
/// `neither`. The verdict fails only for a constant-`S^Σ` sample tagged `neither`.
pub fn classify(sample: &SurfaceSample, tol: &Tolerances) -> AlexandrovReport {
    let n = sample.ambient.n();
    let stats = |f: &dyn Fn(&crate::hypersurface::CurvatureData) -> f64| {
        let (lo, hi, sum) =
            sample
                .data
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY, 0.0), |(lo, hi, s), d| {
                    let v = f(d);
                    (lo.min(v), hi.max(v), s + v)
                });
        (hi - lo, sum / sample.data.len() as f64)
    };
    let (spread, s_mean) = stats(&|d| scalar_curvature(d, n));
    let (height_spread, _) = stats(&|d| d.height);
    let (_, h_mean) = stats(&|d| d.mean_curvature());
    let defect = max_umbilicity_defect(sample);
    let constant = spread < tol.scalar_spread;
    let classification = if constant && defect < tol.umbilic {
        if height_spread < tol.umbilic && (h_mean - 1.0).abs() < tol.umbilic {
            Classification::Slice
        } else if h_mean > 1.0 {
            Classification::Sphere
        } else {
            Classification::Neither
        }
    } else {
        Classification::Neither
    };
    AlexandrovReport {
        scalar_curvature_spread: spread,
        scalar_curvature_mean: s_mean,
        umbilicity_defect: defect,
        height_spread,
        mean_curvature_mean: h_mean,
        classification,
        verdict: Verdict::from_bool(!constant || classification != Classification::Neither),
    }
}

/// [`classify`] for each family at resolution `res`.
pub fn alexandrov_scan(
    families: &[SurfaceFamily],
    amb: &WarpedAmbient,
    res: usize,
    tol: &Tolerances,
) -> Result<Vec<AlexandrovReport>> {
    families
        .iter()
        .map(|fam| {
            let grid = grid_for(fam, amb, res)?;
            Ok(classify(&sample_surface(fam, amb, &grid)?, tol))
        })
        .collect()
}

/// Checks with a residual that can be tabulated against resolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvergenceCheck {
    Hk,
    Minkowski(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub resolution: usize,
    pub normalized_residual: f64,
    /// `|value(res) − value(previous res)|`.
    pub change: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub check: ConvergenceCheck,
    pub rows: Vec<ConvergenceRow>,
    /// `|residual|` strictly decreases from row to row.
    pub strictly_decreasing: bool,
    /// `|residual|` decreases or stays below the floor.
    pub residual_decreasing: bool,
    /// Successive changes decrease or stay below the floor.
    pub changes_decreasing: bool,
    pub verdict: Verdict,
}

fn decreasing_with_floor(values: &[f64], floor: f64) -> bool {
    values.windows(2).all(|w| w[1] < w[0] || w[1] <= floor)
}

/// Residual of `check` at each resolution. Identity checks must show a
/// decreasing residual; the HK check (whose limit need not be zero) must show
/// decreasing changes between refinements.
pub fn convergence_study(
    check: ConvergenceCheck,
    fam: &SurfaceFamily,
    amb: &WarpedAmbient,
    resolutions: &[usize],
    tol: &Tolerances,
) -> Result<ConvergenceTable> {
    if resolutions.len() < 3 {
        return Err(Error::InvalidArgument(
            "a convergence study needs at least three resolutions".into(),
        ));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(resolutions.len());
    for &res in resolutions {
        let sample = sample_surface(fam, amb, &grid_for(fam, amb, res)?)?;
        let value = match check {
            ConvergenceCheck::Hk => check_hk(&sample, tol)?.normalized_residual,
            ConvergenceCheck::Minkowski(k) => {
                check_minkowski(k, &sample, tol, true)?.normalized_residual
            }
        };
        let change = rows.last().map(|r| (value - r.normalized_residual).abs());
        rows.push(ConvergenceRow {
            resolution: res,
            normalized_residual: value,
            change,
        });
    }
    let abs: Vec<f64> = rows.iter().map(|r| r.normalized_residual.abs()).collect();
    let changes: Vec<f64> = rows.iter().filter_map(|r| r.change).collect();
    let strictly_decreasing = abs.windows(2).all(|w| w[1] < w[0]);
    let residual_decreasing = decreasing_with_floor(&abs, tol.convergence_floor);
    let changes_decreasing = decreasing_with_floor(&changes, tol.convergence_floor);
    let ok = match check {
        ConvergenceCheck::Hk => changes_decreasing,
        ConvergenceCheck::Minkowski(_) => residual_decreasing,
    };
    Ok(ConvergenceTable {
        check,
        rows,
        strictly_decreasing,
        residual_decreasing,
        changes_decreasing,
        verdict: Verdict::from_bool(ok),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slice_sample(s: f64, res: usize) -> SurfaceSample {
        let amb = WarpedAmbient::torus(vec![1.0, 1.0]).unwrap();
        let fam = SurfaceFamily::Slice { s };
        sample_surface(&fam, &amb, &grid_for(&fam, &amb, res).unwrap()).unwrap()
    }

    #[test]
    fn slice_hk_is_an_equality() {
        let r = check_hk(&slice_sample(0.3, 8), &Tolerances::default()).unwrap();
        let expect = (3.0_f64 * 0.3).exp();
        assert!((r.i1 - expect).abs() < 1e-13);
        assert!((r.i2 + expect).abs() < 1e-13);
        assert!(r.residual.abs() < 1e-13);
        assert!(r.verdict.passed() && r.equality && r.umbilic);
    }

    #[test]
    fn slice_minkowski_and_h2_integral() {
        let s = slice_sample(-0.2, 8);
        let tol = Tolerances::default();
        for k in 0..2 {
            assert!(check_minkowski(k, &s, &tol, false).unwrap().residual.abs() < 1e-13);
        }
        assert!(check_minkowski(2, &s, &tol, false).is_err());
        let l = check_h2_integral(&s, &tol).unwrap();
        assert!(l.value.abs() < 1e-14 && l.verdict.passed());
        let g = check_garding(&s, &tol).unwrap();
        assert!(g.min_gap.abs() < 1e-14);
    }

    #[test]
    fn slice_classification() {
        let r = classify(&slice_sample(0.7, 8), &Tolerances::default());
        assert_eq!(r.classification, Classification::Slice);
        assert!(r.scalar_curvature_spread < 1e-10);
    }

    #[test]
    fn convergence_needs_three_resolutions() {
        let amb = WarpedAmbient::torus(vec![1.0, 1.0]).unwrap();
        let fam = SurfaceFamily::Slice { s: 0.0 };
        assert!(convergence_study(
            ConvergenceCheck::Hk,
            &fam,
            &amb,
            &[8, 16],
            &Tolerances::default()
        )
        .is_err());
    }

    #[test]
    fn residual_override() {
        let t = Tolerances::default().with_residual_tolerance(1e-15);
        assert_eq!(t.hk_equality, 1e-15);
        assert_eq!(t.umbilic, 1e-8);
    }
}
