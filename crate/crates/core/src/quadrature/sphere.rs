//! Quadrature on unit spheres and hemispheres, and surface flux.

use super::gauss::GaussRule;
use crate::error::{Error, Result};

/// Nodes and weights on `S^{n-1}` (or its upper hemisphere `x_n > 0`).
///
/// Built recursively: the polar angle against the last axis carries the
/// `sin^{n-2}` weight via a composite Gauss rule, the innermost circle uses a
/// uniform (trapezoidal) rule, which is exact for smooth periodic integrands.
pub fn sphere_rule(n: usize, order: usize, level: u32, hemisphere: bool) -> Vec<(Vec<f64>, f64)> {
    assert!(n >= 1);
    match n {
        1 => {
            let mut pts = vec![(vec![1.0], 1.0)];
            if !hemisphere {
                pts.push((vec![-1.0], 1.0));
            }
            pts
        }
        2 => {
            if hemisphere {
                // angle from the x_1 axis in (0, pi), composite Gauss
                segment_rule(0.0, std::f64::consts::PI, order, level)
                    .into_iter()
                    .map(|(phi, w)| (vec![phi.cos(), phi.sin()], w))
                    .collect()
            } else {
                let m = (order << level) * 2;
                let w = 2.0 * std::f64::consts::PI / m as f64;
                (0..m)
                    .map(|k| {
                        let th = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / m as f64;
                        (vec![th.cos(), th.sin()], w)
                    })
                    .collect()
            }
        }
        _ => {
            let phi_hi = if hemisphere {
                0.5 * std::f64::consts::PI
            } else {
                std::f64::consts::PI
            };
            let polar = segment_rule(0.0, phi_hi, order, level);
            let sub = sphere_rule(n - 1, order, level, false);
            let mut out = Vec::with_capacity(polar.len() * sub.len());
            for &(phi, wp) in &polar {
                let (s, c) = phi.sin_cos();
                let wphi = wp * s.powi(n as i32 - 2);
                for (xi, wxi) in &sub {
                    let mut pt = Vec::with_capacity(n);
                    for v in xi {
                        pt.push(s * v);
                    }
                    pt.push(c);
                    out.push((pt, wphi * wxi));
                }
            }
            out
        }
    }
}

/// Composite Gauss rule on a finite segment.
fn segment_rule(lo: f64, hi: f64, order: usize, level: u32) -> Vec<(f64, f64)> {
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

/// Flux of a vector field through the sphere (or upper hemisphere) of radius
/// `R`: surface quadrature of `field . nu` with outward normal `nu = x/|x|`.
pub fn flux_sphere<F>(field: &F, n: usize, radius: f64, order: usize, level: u32, hemisphere: bool) -> f64
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let rule = sphere_rule(n, order, level, hemisphere);
    let rpow = radius.powi(n as i32 - 1);
    let mut acc = 0.0;
    let mut pt = vec![0.0; n];
    for (sigma, w) in &rule {
        for (p, s) in pt.iter_mut().zip(sigma) {
            *p = radius * s;
        }
        let v = field(&pt);
        let dot: f64 = v.iter().zip(sigma).map(|(a, b)| a * b).sum();
        acc += w * dot * rpow;
    }
    acc
}

/// Flux with refinement-based error control.
pub fn flux_sphere_adaptive<F>(
    field: &F,
    n: usize,
    radius: f64,
    order: usize,
    hemisphere: bool,
    rel: f64,
    abs: f64,
    max_refinements: u32,
) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut prev = flux_sphere(field, n, radius, order, 0, hemisphere);
    let mut last_err = f64::INFINITY;
    for level in 1..=max_refinements {
        let next = flux_sphere(field, n, radius, order, level, hemisphere);
        let err = (next - prev).abs();
        if err <= abs.max(rel * next.abs()) {
            return Ok((next, err));
        }
        last_err = err;
        prev = next;
    }
    Err(Error::QuadratureNonConvergence {
        estimate: last_err,
        tol: abs,
        refinements: max_refinements,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sphere_areas() {
        // |S^{n-1}| = n omega_n
        let expected = [
            (2, 2.0 * PI),
            (3, 4.0 * PI),
            (4, 2.0 * PI * PI),
        ];
        for (n, area) in expected {
            let total: f64 = sphere_rule(n, 8, 1, false).iter().map(|(_, w)| w).sum();
            assert!(
                (total - area).abs() < 1e-10 * area,
                "n={n}: {total} vs {area}"
            );
        }
    }

    #[test]
    fn hemisphere_is_half() {
        for n in [2, 3, 4] {
            let full: f64 = sphere_rule(n, 8, 1, false).iter().map(|(_, w)| w).sum();
            let half: f64 = sphere_rule(n, 8, 1, true).iter().map(|(_, w)| w).sum();
            assert!((2.0 * half - full).abs() < 1e-10 * full);
            assert!(sphere_rule(n, 8, 1, true)
                .iter()
                .all(|(p, _)| p[n - 1] > 0.0));
        }
    }

    #[test]
    fn second_moment_on_sphere() {
        // integral of x_n^2 over S^{n-1} = |S^{n-1}|/n
        for n in [2, 3, 4] {
            let rule = sphere_rule(n, 8, 2, false);
            let total: f64 = rule.iter().map(|(p, w)| w * p[n - 1] * p[n - 1]).sum();
            let area: f64 = rule.iter().map(|(_, w)| w).sum();
            assert!((total - area / n as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn radial_field_flux() {
        // field x/|x|^3 in R^3 has flux 4 pi through every sphere
        let field = |x: &[f64]| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            let c = r2.powf(-1.5);
            x.iter().map(|v| v * c).collect()
        };
        for radius in [0.5, 1.0, 7.0] {
            let (fl, _) =
                flux_sphere_adaptive(&field, 3, radius, 8, false, 1e-10, 1e-12, 3).unwrap();
            assert!((fl - 4.0 * PI).abs() < 1e-9, "{fl}");
        }
    }
}
