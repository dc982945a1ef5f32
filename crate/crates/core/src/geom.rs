//! Half-space points, reflections and pair geometry.

use crate::dual::Scalar;

/// Japanese bracket `<x> = sqrt(1 + |x|^2)`.
#[inline]
pub fn bracket(x: &[f64]) -> f64 {
    (1.0 + norm_sq(x)).sqrt()
}

#[inline]
pub fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

#[inline]
pub fn norm(x: &[f64]) -> f64 {
    norm_sq(x).sqrt()
}

#[inline]
pub fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Reflection across the boundary plane: `x* = (x', -x_n)`.
pub fn reflect(x: &[f64]) -> Vec<f64> {
    let mut r = x.to_vec();
    let last = r.len() - 1;
    r[last] = -r[last];
    r
}

/// Sign `eps_j = 1 - 2 delta_{jn}`: `-1` on the normal component, `+1`
/// tangentially. Indices are zero-based, the normal component is `n - 1`.
#[inline]
pub fn reflect_sign(j: usize, n: usize) -> f64 {
    if j == n - 1 {
        -1.0
    } else {
        1.0
    }
}

/// Geometry of a source/target pair in the half space: `w = x - y`,
/// `z = x - y*` and `theta = x_n y_n / |z|^2`, which lies in `(0, 1/4]`
/// for interior pairs. `|w|^2 = |z|^2 (1 - 4 theta)`.
#[derive(Debug, Clone)]
pub struct PairGeometry<T> {
    pub w: Vec<T>,
    pub z: Vec<T>,
    pub xn: T,
    pub yn: T,
    pub w_norm_sq: T,
    pub z_norm_sq: T,
    pub theta: T,
}

impl<T: Scalar> PairGeometry<T> {
    pub fn new(x: &[T], y: &[T]) -> Self {
        let n = x.len();
        debug_assert_eq!(y.len(), n);
        let mut w = Vec::with_capacity(n);
        let mut z = Vec::with_capacity(n);
        let mut w2 = T::zero();
        let mut z2 = T::zero();
        for j in 0..n {
            let wj = x[j] - y[j];
            let zj = if j == n - 1 { x[j] + y[j] } else { wj };
            w2 = w2 + wj * wj;
            z2 = z2 + zj * zj;
            w.push(wj);
            z.push(zj);
        }
        let xn = x[n - 1];
        let yn = y[n - 1];
        let theta = xn * yn / z2;
        Self {
            w,
            z,
            xn,
            yn,
            w_norm_sq: w2,
            z_norm_sq: z2,
            theta,
        }
    }
}

impl PairGeometry<f64> {
    pub fn from_points(x: &[f64], y: &[f64]) -> Self {
        Self::new(x, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reflection_is_involutive() {
        let x = [1.0, -2.0, 3.0];
        assert_eq!(reflect(&reflect(&x)), x.to_vec());
    }

    proptest! {
        #[test]
        fn pair_identity_holds(
            xs in proptest::collection::vec(-5.0f64..5.0, 2),
            xn in 0.01f64..5.0,
            ys in proptest::collection::vec(-5.0f64..5.0, 2),
            yn in 0.01f64..5.0,
        ) {
            let x = [xs[0], xs[1], xn];
            let y = [ys[0], ys[1], yn];
            let g = PairGeometry::from_points(&x, &y);
            // |w|^2 = |z|^2 (1 - 4 theta) and 0 < theta <= 1/4
            prop_assert!(g.theta > 0.0 && g.theta <= 0.25 + 1e-15);
            let lhs = g.w_norm_sq;
            let rhs = g.z_norm_sq * (1.0 - 4.0 * g.theta);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * g.z_norm_sq);
            prop_assert!(g.w_norm_sq <= g.z_norm_sq * (1.0 + 1e-15));
        }
    }
}
