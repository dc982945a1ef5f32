//! The refinement driver and domain-shaped integrators.

use rayon::prelude::*;

use super::grid::{boundary_grid, halfspace_grid, wholespace_grid, AxisKind, MappedGrid};
use super::{QuadConfig, Tolerance};
use crate::error::Result;

/// One full pass over a grid level. Parallel over the first axis; the
/// reduction order is fixed, so the result does not depend on thread count.
pub(crate) fn eval_level<F>(f: &F, m: usize, grid: &MappedGrid) -> Vec<f64>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    let dim = grid.dim();
    let per_axis: Vec<Vec<(f64, f64)>> = (0..dim).map(|a| grid.axis_nodes(a)).collect();
    if dim == 1 {
        let mut acc = vec![0.0; m];
        for &(u, w) in &per_axis[0] {
            let v = f(&[u]);
            for c in 0..m {
                acc[c] += w * v[c];
            }
        }
        return acc;
    }
    let rest = &per_axis[1..];
    let partials: Vec<Vec<f64>> = per_axis[0]
        .par_iter()
        .map(|&(u0, w0)| {
            let mut acc = vec![0.0; m];
            let mut pt = vec![0.0; dim];
            pt[0] = u0;
            let mut idx = vec![0usize; dim - 1];
            'nodes: loop {
                let mut w = w0;
                for (a, &i) in idx.iter().enumerate() {
                    let (u, wu) = rest[a][i];
                    pt[a + 1] = u;
                    w *= wu;
                }
                let v = f(&pt);
                for c in 0..m {
                    acc[c] += w * v[c];
                }
                for a in (0..idx.len()).rev() {
                    idx[a] += 1;
                    if idx[a] < rest[a].len() {
                        continue 'nodes;
                    }
                    idx[a] = 0;
                }
                break;
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; m];
    for p in partials {
        for c in 0..m {
            total[c] += p[c];
        }
    }
    total
}

/// Single fixed-level pass, no error control. Useful when a consumer manages
/// consistency across evaluations itself (the Picard solvers do).
pub fn integrate_level<F>(f: &F, m: usize, grid: &MappedGrid) -> Vec<f64>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    eval_level(f, m, grid)
}

/// Refine until two consecutive levels agree within tolerance; the returned
/// error estimate is that difference.
pub fn integrate_on_grid<F>(
    f: &F,
    m: usize,
    base: &MappedGrid,
    tol: &Tolerance,
) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    super::refine_levels(
        |level| {
            let mut g = base.clone();
            g.level = level;
            eval_level(f, m, &g)
        },
        base.level,
        tol,
    )
}

/// `integral of f over R^n_+` for an `m`-component integrand without interior
/// singularities.
pub fn integrate_halfspace<F>(f: &F, m: usize, n: usize, cfg: &QuadConfig) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    let grid = halfspace_grid(n, cfg.order, cfg.base_level, cfg.map_scale, cfg.grades);
    integrate_on_grid(f, m, &grid, &cfg.tol)
}

/// `integral of f over R^n`.
pub fn integrate_wholespace<F>(
    f: &F,
    m: usize,
    n: usize,
    cfg: &QuadConfig,
) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    let grid = wholespace_grid(n, cfg.order, cfg.base_level, cfg.map_scale, cfg.grades);
    integrate_on_grid(f, m, &grid, &cfg.tol)
}

/// Integral over the boundary plane `Sigma = R^{n-1}`; the integrand receives
/// the `n-1` tangential coordinates.
pub fn integrate_boundary<F>(f: &F, n: usize, cfg: &QuadConfig) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let grid = boundary_grid(n, cfg.order, cfg.base_level, cfg.map_scale, cfg.grades);
    let wrapped = |xi: &[f64]| vec![f(xi)];
    let (v, e) = integrate_on_grid(&wrapped, 1, &grid, &cfg.tol)?;
    Ok((v[0], e))
}

/// Adaptive integral over the ray `[start, inf)`.
pub fn integrate_ray<F>(f: &F, start: f64, cfg: &QuadConfig) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64 + Sync,
{
    let grid = MappedGrid {
        axes: vec![AxisKind::HalfLine],
        order: cfg.order,
        level: cfg.base_level,
        scale: cfg.map_scale,
        grades: cfg.grades,
    };
    let wrapped = |u: &[f64]| vec![f(start + u[0])];
    let (v, e) = integrate_on_grid(&wrapped, 1, &grid, &cfg.tol)?;
    Ok((v[0], e))
}

/// Like [`integrate_ray`] but never fails: past the refinement budget it
/// returns the finest value together with its (too large) estimate. Used by
/// infallible field evaluators that track worst-case quadrature error on the
/// side.
pub fn integrate_ray_lenient<F>(f: &F, start: f64, cfg: &QuadConfig) -> (f64, f64)
where
    F: Fn(f64) -> f64 + Sync,
{
    let grid = MappedGrid {
        axes: vec![AxisKind::HalfLine],
        order: cfg.order,
        level: cfg.base_level,
        scale: cfg.map_scale,
        grades: cfg.grades,
    };
    let wrapped = |u: &[f64]| vec![f(start + u[0])];
    let mut g = grid;
    let mut prev = eval_level(&wrapped, 1, &g);
    let mut err = f64::INFINITY;
    for _ in 0..tol_refinements(&cfg.tol) {
        let next_grid = g.refined();
        let next = eval_level(&wrapped, 1, &next_grid);
        err = (next[0] - prev[0]).abs();
        prev = next;
        g = next_grid;
        if err <= cfg.tol.abs.max(cfg.tol.rel * prev[0].abs()) {
            break;
        }
    }
    (prev[0], err)
}

fn tol_refinements(tol: &Tolerance) -> u32 {
    tol.max_refinements.max(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cfg() -> QuadConfig {
        QuadConfig {
            order: 8,
            base_level: 0,
            map_scale: 2.0,
            grades: 8,
            tol: Tolerance {
                rel: 1e-9,
                abs: 1e-12,
                max_refinements: 5,
            },
        }
    }

    #[test]
    fn gaussian_half_integral() {
        let f = |y: &[f64]| vec![(-(y[0] * y[0] + y[1] * y[1] + y[2] * y[2])).exp()];
        let (v, _) = integrate_halfspace(&f, 1, 3, &cfg()).unwrap();
        let exact = PI.powf(1.5) / 2.0;
        assert!((v[0] - exact).abs() < 1e-8 * exact, "{} vs {exact}", v[0]);
    }

    #[test]
    fn power_law_matches_radial_reduction() {
        // integral over R^3_+ of <y>^-5 equals 2 pi / 3
        let f = |y: &[f64]| {
            let r2: f64 = y.iter().map(|v| v * v).sum();
            vec![(1.0 + r2).powf(-2.5)]
        };
        let (v, _) = integrate_halfspace(&f, 1, 3, &cfg()).unwrap();
        let exact = 2.0 * PI / 3.0;
        assert!((v[0] - exact).abs() < 1e-8 * exact, "{} vs {exact}", v[0]);
    }

    #[test]
    fn odd_integrand_vanishes() {
        let f = |y: &[f64]| {
            let r2: f64 = y.iter().map(|v| v * v).sum();
            vec![y[0] * (1.0 + r2).powf(-4.0)]
        };
        let (v, _) = integrate_halfspace(&f, 1, 3, &cfg()).unwrap();
        assert!(v[0].abs() < 1e-12);
    }

    #[test]
    fn refinement_shrinks_error_for_smooth_integrands() {
        let grid = wholespace_grid(2, 6, 0, 1.5, 6);
        let f = |y: &[f64]| {
            let r2: f64 = y.iter().map(|v| v * v).sum();
            vec![(-r2).exp() * (1.0 + y[0])]
        };
        let l0 = eval_level(&f, 1, &grid);
        let l1 = eval_level(&f, 1, &grid.refined());
        let l2 = eval_level(&f, 1, &grid.refined().refined());
        let e01 = (l1[0] - l0[0]).abs();
        let e12 = (l2[0] - l1[0]).abs();
        assert!(e12 < e01, "refinement did not reduce the estimate: {e01} -> {e12}");
    }

    #[test]
    fn nonconvergence_is_reported() {
        // integrand too rough for two refinements at order 2
        let bad = QuadConfig {
            order: 2,
            base_level: 0,
            map_scale: 1.0,
            grades: 2,
            tol: Tolerance {
                rel: 1e-14,
                abs: 1e-16,
                max_refinements: 1,
            },
        };
        let f = |y: &[f64]| vec![(10.0 * y[0]).sin().abs() * (-(y[0] * y[0])).exp()];
        let r = integrate_wholespace(&f, 1, 1, &bad);
        assert!(matches!(r, Err(Error::QuadratureNonConvergence { .. })));
    }

    #[test]
    fn ray_integral() {
        // integral over [1, inf) of s^-2 = 1
        let f = |s: f64| s.powi(-2);
        let (v, _) = integrate_ray(&f, 1.0, &cfg()).unwrap();
        assert!((v - 1.0).abs() < 1e-9, "{v}");
    }
}
