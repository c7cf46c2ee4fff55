//! Curvature of hypersurfaces in warped products `ℝ ×_exp P` and numerical
//! checks of the associated integral inequalities.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod ambient;
pub mod config;
pub mod error;
pub mod hypersurface;
pub mod linalg;
pub mod operators;
pub mod quadrature;
pub mod run;
pub mod symmetric;
pub mod verify;

pub use ambient::{AmbientPoint, Fiber, WarpedAmbient};
pub use error::{Error, Result};
pub use hypersurface::{curvature_data, CurvatureData, FourierMode, ParamPoint, SurfaceFamily};
pub use linalg::{sym_eigen, SymMatrix};
pub use quadrature::{grid_for, integrate_surface, sample_surface, SurfaceGrid, SurfaceSample};
pub use symmetric::{elementary_symmetric, mean_curvature_k, newton_tensors, CurvatureProfile};
pub use verify::{Tolerances, Verdict};
