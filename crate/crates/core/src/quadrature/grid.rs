//! Tensor-product grids built from mapped composite Gauss-Legendre rules.

use super::gauss::GaussRule;

/// How one axis covers its range: the full real line or the half line
/// `(0, inf)` used for the normal coordinate of the half space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisKind {
    FullLine,
    HalfLine,
}

/// Algebraic map `u = L t / (1 - t^2)` and its Jacobian; takes `(-1, 1)`
/// onto the line and `(0, 1)` onto `(0, inf)`, strictly monotonically.
#[inline]
pub(crate) fn algebraic_map(t: f64, scale: f64) -> (f64, f64) {
    let d = 1.0 - t * t;
    (scale * t / d, scale * (1.0 + t * t) / (d * d))
}

/// Tensor-product grid description.
///
/// Each axis splits its reference interval into `2^level` uniform core cells
/// on `|t| <= 1/2` plus `grades + 1` geometrically shrinking cells toward
/// every infinite endpoint (breakpoints `1 - 2^{-j-1}`). The grading keeps
/// the mapped rule accurate for integrands with power-law tails, whose
/// mapped counterparts are analytic only up to a distance proportional to
/// the distance from the endpoint. Every cell carries `order` Gauss nodes
/// per axis.
#[derive(Debug, Clone)]
pub struct MappedGrid {
    pub axes: Vec<AxisKind>,
    pub order: usize,
    pub level: u32,
    pub scale: f64,
    pub grades: u32,
}

impl MappedGrid {
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn refined(&self) -> Self {
        Self {
            level: self.level + 1,
            ..self.clone()
        }
    }

    /// Cell breakpoints of one axis in the reference coordinate, ascending.
    /// Grades are capped so the innermost breakpoint stays strictly below 1
    /// in f64.
    pub fn axis_breakpoints(&self, axis: usize) -> Vec<f64> {
        let core = 1usize << self.level;
        let grades = self.grades.min(48);
        let mut right = Vec::with_capacity(grades as usize + 1);
        for j in 1..=grades {
            right.push(1.0 - 0.5f64.powi(j as i32 + 1));
        }
        right.push(1.0);
        match self.axes[axis] {
            AxisKind::HalfLine => {
                let mut pts = Vec::with_capacity(core + right.len() + 1);
                for c in 0..=core {
                    pts.push(0.5 * c as f64 / core as f64);
                }
                pts.extend_from_slice(&right);
                pts
            }
            AxisKind::FullLine => {
                let mut pts: Vec<f64> = right.iter().map(|b| -b).collect();
                pts.reverse();
                for c in 0..=2 * core {
                    pts.push(-0.5 + 0.5 * c as f64 / core as f64);
                }
                pts.extend_from_slice(&right);
                pts
            }
        }
    }

    pub fn cells_per_axis(&self, axis: usize) -> usize {
        self.axis_breakpoints(axis).len() - 1
    }

    pub fn node_count(&self) -> usize {
        (0..self.dim())
            .map(|a| self.cells_per_axis(a) * self.order)
            .product()
    }

    /// Mapped nodes and weights for one axis, in ascending coordinate order.
    pub fn axis_nodes(&self, axis: usize) -> Vec<(f64, f64)> {
        let rule = GaussRule::new(self.order);
        let pts = self.axis_breakpoints(axis);
        let mut out = Vec::with_capacity((pts.len() - 1) * self.order);
        for cell in pts.windows(2) {
            let (a, b) = (cell[0], cell[1]);
            let dt = b - a;
            for (g, wg) in rule.nodes.iter().zip(&rule.weights) {
                let t = a + 0.5 * (g + 1.0) * dt;
                let (u, jac) = algebraic_map(t, self.scale);
                out.push((u, wg * 0.5 * dt * jac));
            }
        }
        out
    }

    /// Materialized tensor-product nodes in lexicographic order.
    pub fn nodes(&self) -> Vec<(Vec<f64>, f64)> {
        let per_axis: Vec<Vec<(f64, f64)>> =
            (0..self.dim()).map(|a| self.axis_nodes(a)).collect();
        let total = per_axis.iter().map(|v| v.len()).product();
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; self.dim()];
        'outer: loop {
            let mut pt = Vec::with_capacity(self.dim());
            let mut w = 1.0;
            for (a, &i) in idx.iter().enumerate() {
                let (u, wu) = per_axis[a][i];
                pt.push(u);
                w *= wu;
            }
            out.push((pt, w));
            // advance the multi-index, last axis fastest
            for a in (0..self.dim()).rev() {
                idx[a] += 1;
                if idx[a] < per_axis[a].len() {
                    continue 'outer;
                }
                idx[a] = 0;
            }
            break;
        }
        out
    }
}

/// Grid over the half space `R^n_+` (normal coordinate last).
pub fn halfspace_grid(n: usize, order: usize, level: u32, scale: f64, grades: u32) -> MappedGrid {
    let mut axes = vec![AxisKind::FullLine; n];
    axes[n - 1] = AxisKind::HalfLine;
    MappedGrid {
        axes,
        order,
        level,
        scale,
        grades,
    }
}

/// Grid over the whole space `R^n`.
pub fn wholespace_grid(n: usize, order: usize, level: u32, scale: f64, grades: u32) -> MappedGrid {
    MappedGrid {
        axes: vec![AxisKind::FullLine; n],
        order,
        level,
        scale,
        grades,
    }
}

/// Grid over the boundary plane, an `(n-1)`-dimensional full-line product.
pub fn boundary_grid(n: usize, order: usize, level: u32, scale: f64, grades: u32) -> MappedGrid {
    MappedGrid {
        axes: vec![AxisKind::FullLine; n - 1],
        order,
        level,
        scale,
        grades,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_is_monotone_with_positive_weights() {
        let grid = halfspace_grid(3, 8, 1, 2.0, 8);
        for a in 0..3 {
            let nodes = grid.axis_nodes(a);
            for pair in nodes.windows(2) {
                assert!(pair[1].0 > pair[0].0, "axis nodes not ascending");
            }
            assert!(nodes.iter().all(|&(_, w)| w > 0.0));
        }
        // half-line axis stays positive
        assert!(grid.axis_nodes(2).iter().all(|&(u, _)| u > 0.0));
    }

    #[test]
    fn node_count_matches() {
        let grid = wholespace_grid(2, 6, 2, 1.0, 5);
        assert_eq!(grid.nodes().len(), grid.node_count());
        // full axis: 2 * 4 core cells + 2 * 6 graded cells
        assert_eq!(grid.cells_per_axis(0), 8 + 12);
    }

    #[test]
    fn breakpoints_are_sorted() {
        let grid = halfspace_grid(3, 4, 2, 1.0, 6);
        for a in 0..3 {
            let pts = grid.axis_breakpoints(a);
            for w in pts.windows(2) {
                assert!(w[1] > w[0]);
            }
            assert_eq!(*pts.last().unwrap(), 1.0);
        }
    }

    #[test]
    fn map_jacobian_matches_difference_quotient() {
        for &t in &[-0.9, -0.4, 0.0, 0.3, 0.77] {
            let h = 1e-6;
            let (up, _) = algebraic_map(t + h, 2.0);
            let (um, _) = algebraic_map(t - h, 2.0);
            let (_, jac) = algebraic_map(t, 2.0);
            assert!(((up - um) / (2.0 * h) - jac).abs() < 1e-6 * jac.abs());
        }
    }
}
