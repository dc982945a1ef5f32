//! Composite Gauss quadrature over finite axis-aligned boxes.
//!
//! The workhorse for compactly supported integrands: every node lands inside
//! the support, no coordinate map distorts the integrand, and refinement is
//! plain cell splitting. The error estimate is safeguarded by the previous
//! refinement step, since a single level-to-level difference can undershoot
//! for slowly converging integrands.

use rayon::prelude::*;

use super::gauss::GaussRule;
use super::Tolerance;
use crate::error::Result;

fn box_axis_nodes(lo: f64, hi: f64, order: usize, level: u32) -> Vec<(f64, f64)> {
    let rule = GaussRule::new(order);
    let cells = 1usize << level;
    let dt = (hi - lo) / cells as f64;
    let mut out = Vec::with_capacity(cells * order);
    for c in 0..cells {
        let a = lo + c as f64 * dt;
        for (g, w) in rule.nodes.iter().zip(&rule.weights) {
            out.push((a + 0.5 * (g + 1.0) * dt, w * 0.5 * dt));
        }
    }
    out
}

/// One pass over the box at a fixed level, deterministic reduction order.
pub fn box_level<F>(
    f: &F,
    m: usize,
    lo: &[f64],
    hi: &[f64],
    order: usize,
    level: u32,
) -> Vec<f64>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    let dim = lo.len();
    let per_axis: Vec<Vec<(f64, f64)>> = (0..dim)
        .map(|a| box_axis_nodes(lo[a], hi[a], order, level))
        .collect();
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

/// Adaptive box integral. The reported estimate is
/// `max(latest difference, latest difference of the previous step / 4)`,
/// which guards against a single accidental agreement between levels.
pub fn integrate_box<F>(
    f: &F,
    m: usize,
    lo: &[f64],
    hi: &[f64],
    order: usize,
    base_level: u32,
    tol: &Tolerance,
) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    super::refine_levels(
        |level| box_level(f, m, lo, hi, order, level),
        base_level,
        tol,
    )
}

/// Bounding box of a support ball intersected with the half space
/// (`halfspace` clips the normal axis at zero).
pub fn support_box(center: &[f64], radius: f64, halfspace: bool) -> (Vec<f64>, Vec<f64>) {
    let n = center.len();
    let mut lo: Vec<f64> = center.iter().map(|c| c - radius).collect();
    let hi: Vec<f64> = center.iter().map(|c| c + radius).collect();
    if halfspace {
        lo[n - 1] = lo[n - 1].max(0.0);
    }
    (lo, hi)
}
