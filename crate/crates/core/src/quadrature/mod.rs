//! Deterministic adaptive integration over `R^n_+`, `R^n`, the boundary
//! plane, spheres/hemispheres and rays.
//!
//! Unbounded directions are handled by composing fixed-order Gauss-Legendre
//! rules with the algebraic map `s -> L s / (1 - s^2)`; refinement splits the
//! reference interval, and the error estimate of every integral is the
//! difference between two consecutive refinement levels. Node ordering and
//! summation order are fixed, so results are bit-identical across runs and
//! thread counts.

mod boxes;
mod gauss;
mod grid;
mod integrate;
mod patch;
mod radial;
mod sphere;

pub use boxes::{box_level, integrate_box, support_box};
pub use gauss::GaussRule;
pub use grid::{boundary_grid, halfspace_grid, wholespace_grid, AxisKind, MappedGrid};
pub use integrate::{
    integrate_boundary, integrate_halfspace, integrate_level, integrate_on_grid, integrate_ray,
    integrate_ray_lenient, integrate_wholespace,
};
pub use patch::{cutoff, integrate_ball, integrate_singular_patch, patch_ball, patch_radius};
pub use radial::integrate_radial;
pub use sphere::{flux_sphere, flux_sphere_adaptive, sphere_rule};

/// Error-control block shared by all integrators.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_refinements: u32,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rel: 1e-8,
            abs: 1e-10,
            max_refinements: 4,
        }
    }
}

/// Quadrature configuration: rule order, starting refinement level, the
/// algebraic map scale `L`, and tolerances.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadConfig {
    pub order: usize,
    pub base_level: u32,
    pub map_scale: f64,
    /// Geometric grades toward the map's infinite endpoints, per axis.
    pub grades: u32,
    pub tol: Tolerance,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            order: 8,
            base_level: 0,
            map_scale: 2.0,
            grades: 6,
            tol: Tolerance::default(),
        }
    }
}

/// Safeguarded refinement driver: evaluates `eval` at increasing levels until
/// the level-to-level difference, floored by a quarter of the previous
/// difference, drops below tolerance. Returns the finest value and that
/// conservative estimate.
pub fn refine_levels<F>(
    mut eval: F,
    base: u32,
    tol: &Tolerance,
) -> crate::error::Result<(Vec<f64>, f64)>
where
    F: FnMut(u32) -> Vec<f64>,
{
    let mut prev = eval(base);
    let mut prev_diff = f64::INFINITY;
    let mut last_err = f64::INFINITY;
    for r in 1..=tol.max_refinements {
        let next = eval(base + r);
        let diff = prev
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let err = diff.max(0.25 * prev_diff);
        let scale = next.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if err <= tol.abs.max(tol.rel * scale) {
            return Ok((next, err));
        }
        last_err = err;
        prev_diff = diff;
        prev = next;
    }
    Err(crate::error::Error::QuadratureNonConvergence {
        estimate: last_err,
        tol: tol.abs,
        refinements: tol.max_refinements,
    })
}
