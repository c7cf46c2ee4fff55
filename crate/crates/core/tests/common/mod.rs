//! Independent reference computations shared by the integration tests.
//!
//! Torus graphs (n = 2) are treated in the half-space model: `t = u(p)` is
//! the Euclidean graph `z = e^{−u}` with upward normal, and the hyperbolic
//! principal curvatures are `z·κᵢ + ν_z`.

#![allow(dead_code)]

use std::f64::consts::PI;

/// `(wavenumbers, cos, sin)` of one mode.
pub type Mode = ([i32; 2], f64, f64);

pub struct GraphOracle {
    pub base: f64,
    pub modes: Vec<Mode>,
    pub periods: [f64; 2],
    pub c: f64,
}

pub struct GraphPoint {
    pub u: f64,
    pub principal: [f64; 2],
    pub mean: f64,
    pub h2: f64,
    /// `dΣ / dp`.
    pub area_density: f64,
    pub potential: f64,
    pub potential_normal: f64,
}

impl GraphOracle {
    pub fn new(base: f64, modes: Vec<Mode>) -> Self {
        Self {
            base,
            modes,
            periods: [1.0, 1.0],
            c: 1.0,
        }
    }

    /// `u`, `∇u`, `Hess u` in torus coordinates.
    pub fn jet(&self, p: [f64; 2]) -> (f64, [f64; 2], [[f64; 2]; 2]) {
        let mut u = self.base;
        let mut g = [0.0; 2];
        let mut h = [[0.0; 2]; 2];
        for (k, a, b) in &self.modes {
            let w = [
                2.0 * PI * k[0] as f64 / self.periods[0],
                2.0 * PI * k[1] as f64 / self.periods[1],
            ];
            let th = w[0] * p[0] + w[1] * p[1];
            let (s, c) = th.sin_cos();
            u += a * c + b * s;
            let d1 = -a * s + b * c;
            let d2 = -a * c - b * s;
            for i in 0..2 {
                g[i] += d1 * w[i];
                for j in 0..2 {
                    h[i][j] += d2 * w[i] * w[j];
                }
            }
        }
        (u, g, h)
    }

    pub fn at(&self, p: [f64; 2]) -> GraphPoint {
        let (u, du, ddu) = self.jet(p);
        let f = (-u).exp();
        let df = [-f * du[0], -f * du[1]];
        let mut ddf = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                ddf[i][j] = f * (du[i] * du[j] - ddu[i][j]);
            }
        }
        let w = (1.0 + df[0] * df[0] + df[1] * df[1]).sqrt();
        // Euclidean shape operator g⁻¹h with g = I + ∇f∇fᵀ, h = Hess f / W
        let g = [
            [1.0 + df[0] * df[0], df[0] * df[1]],
            [df[0] * df[1], 1.0 + df[1] * df[1]],
        ];
        let det_g = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        let ginv = [
            [g[1][1] / det_g, -g[0][1] / det_g],
            [-g[1][0] / det_g, g[0][0] / det_g],
        ];
        let mut s = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                s[i][j] = (0..2).map(|k| ginv[i][k] * ddf[k][j] / w).sum();
            }
        }
        let tr = s[0][0] + s[1][1];
        let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
        let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
        let kappa = [0.5 * tr - disc, 0.5 * tr + disc];
        let principal = [f * kappa[0] + 1.0 / w, f * kappa[1] + 1.0 / w];
        GraphPoint {
            u,
            principal,
            mean: 0.5 * (principal[0] + principal[1]),
            h2: principal[0] * principal[1],
            area_density: w / (f * f),
            potential: self.c / f,
            potential_normal: -self.c / (f * w),
        }
    }

    /// Trapezoid sums over an `res × res` grid of `(∫V/H, ∫⟨∇V,N⟩, ∫V)`.
    pub fn hk_integrals(&self, res: usize) -> (f64, f64, f64) {
        let cell = self.periods[0] * self.periods[1] / (res * res) as f64;
        let (mut i1, mut i2, mut scale) = (0.0, 0.0, 0.0);
        for a in 0..res {
            for b in 0..res {
                let p = [
                    a as f64 * self.periods[0] / res as f64,
                    b as f64 * self.periods[1] / res as f64,
                ];
                let q = self.at(p);
                i1 += q.potential / q.mean * q.area_density * cell;
                i2 += q.potential_normal * q.area_density * cell;
                scale += q.potential * q.area_density * cell;
            }
        }
        (i1, i2, scale)
    }
}

/// Eigenvalues of a symmetric matrix by bisection on the inertia of `S − xI`.
pub fn bisection_eigenvalues(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len();
    let bound = 1.0 + rows.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    let below = |x: f64| -> usize {
        // negative pivots of an LDLᵀ factorization count eigenvalues below x
        let mut a: Vec<Vec<f64>> = rows.to_vec();
        for (i, r) in a.iter_mut().enumerate() {
            r[i] -= x;
        }
        let mut count = 0;
        for k in 0..n {
            let mut piv = a[k][k];
            if piv == 0.0 {
                piv = -1e-300;
            }
            if piv < 0.0 {
                count += 1;
            }
            let pivot_row = a[k].clone();
            for row in a.iter_mut().skip(k + 1) {
                let l = row[k] / piv;
                for (x, p) in row.iter_mut().zip(&pivot_row).skip(k + 1) {
                    *x -= l * p;
                }
            }
        }
        count
    };
    (0..n)
        .map(|k| {
            let (mut lo, mut hi) = (-bound, bound);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if below(mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

/// `σ_k` by explicit subset enumeration.
pub fn sigma_by_subsets(lambda: &[f64], k: usize) -> f64 {
    let n = lambda.len();
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| {
            (0..n)
                .filter(|i| m >> i & 1 == 1)
                .map(|i| lambda[i])
                .product::<f64>()
        })
        .sum()
}
