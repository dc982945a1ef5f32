//! Closed-form kernels of the stationary Stokes system.
//!
//! Covers the fundamental solutions of the Laplace/biharmonic equations, the
//! whole-space Stokes fundamental solution (Lorentz tensor), the half-space
//! Poisson tensor (Odqvist tensor), the half-space Green tensor in both its
//! compact form and its image/boundary-layer decomposition, the
//! cancellation-safe remainders `R_s`/`Q_s`, the gradient basis `Phi^{jk}`,
//! and algorithmic first and second derivatives of the Green tensor via dual
//! numbers.
//!
//! All evaluations are pure functions; per-dimension constants live in
//! [`Dimension`].

use std::ops::Index;

use crate::dim::Dimension;
use crate::dual::{Dual, Scalar};
use crate::error::{Error, Result};
use crate::geom::{self, PairGeometry};

/// Switch point between the direct and the series evaluation of `R_s`, `Q_s`.
/// Below it the direct subtraction loses four or more digits because
/// `Q_s ~ theta^2 |w|^{-s}`.
pub const THETA_SWITCH: f64 = 0.01;

/// The theta-series is truncated once the next term falls below this
/// relative size.
const SERIES_EPS: f64 = 1e-16;

const MAX_SERIES_TERMS: usize = 64;

/// An `n x n` matrix of kernel values with an optional pressure vector
/// (`q_j` for the Lorentz tensor, `k_j` for the Poisson tensor; the Green
/// tensor carries none).
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    n: usize,
    values: Vec<f64>,
    pressure: Option<Vec<f64>>,
}

impl KernelMatrix {
    pub fn new(n: usize, values: Vec<f64>, pressure: Option<Vec<f64>>) -> Self {
        debug_assert_eq!(values.len(), n * n);
        Self {
            n,
            values,
            pressure,
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn pressure(&self) -> Option<&[f64]> {
        self.pressure.as_deref()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Column `j` as a vector, `(vec K_j)_i = K_{ij}`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }
}

impl Index<(usize, usize)> for KernelMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.values[i * self.n + j]
    }
}

/// Evaluation route for the Green tensor: the compact closed form, or the
/// image-plus-boundary-layer decomposition `G = G~ + W`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreenPath {
    Formula,
    Decomposition,
}

// ---------------------------------------------------------------------------
// scalar fundamentals
// ---------------------------------------------------------------------------

/// Fundamental solution `E` of the Laplace equation as a function of
/// `|x|^2`, generic over duals.
pub(crate) fn fundamental_e<T: Scalar>(r2: T, dim: &Dimension) -> T {
    let n = dim.n();
    if n == 2 {
        // -2 kappa log |x| = -kappa log |x|^2
        -(r2.ln().scale(dim.kappa()))
    } else {
        // 2 kappa |x|^{2-n}
        r2.powf(0.5 * (2.0 - n as f64)).scale(2.0 * dim.kappa())
    }
}

/// `(E, Phi, P)` at `x`: the Laplace and biharmonic fundamental solutions and
/// the Poisson kernel `P(x) = 2 x_n / (n omega_n |x|^n)` of the half space.
pub fn scalar_fundamentals(x: &[f64], dim: &Dimension) -> Result<(f64, f64, f64)> {
    let n = dim.n();
    debug_assert_eq!(x.len(), n);
    let r2 = geom::norm_sq(x);
    if r2 == 0.0 {
        return Err(Error::SingularPoint {
            what: "fundamental solution at x = 0",
        });
    }
    let r = r2.sqrt();
    let e = fundamental_e(r2, dim);
    let phi = match n {
        2 => r2 / (8.0 * std::f64::consts::PI) * (r.ln() - 1.0),
        4 => -dim.kappa() * r.ln(),
        _ => dim.kappa() / (n as f64 - 4.0) * r.powi(4 - n as i32),
    };
    let p = 2.0 * x[n - 1] / (dim.sphere_area() * r.powi(n as i32));
    Ok((e, phi, p))
}

// ---------------------------------------------------------------------------
// Lorentz tensor
// ---------------------------------------------------------------------------

pub(crate) fn lorentz_generic<T: Scalar>(x: &[T], dim: &Dimension) -> Vec<T> {
    let n = dim.n();
    let mut r2 = T::zero();
    for v in x {
        r2 = r2 + *v * *v;
    }
    let e_half = fundamental_e(r2, dim).scale(0.5);
    // x_i x_j / (2 n omega |x|^n)
    let c = 1.0 / (2.0 * dim.sphere_area());
    let rn = r2.powf(-0.5 * n as f64);
    let mut out = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            let mut v = (x[i] * x[j] * rn).scale(c);
            if i == j {
                v = v + e_half;
            }
            out[i * n + j] = v;
        }
    }
    out
}

/// Whole-space Stokes fundamental solution
/// `U_ij = delta_ij E / 2 + x_i x_j / (2 n omega_n |x|^n)` with its pressure
/// vector `q_j = x_j / (n omega_n |x|^n)`.
pub fn lorentz_tensor(x: &[f64], dim: &Dimension) -> Result<KernelMatrix> {
    let n = dim.n();
    debug_assert_eq!(x.len(), n);
    let r2 = geom::norm_sq(x);
    if r2 == 0.0 {
        return Err(Error::SingularPoint {
            what: "Lorentz tensor at x = 0",
        });
    }
    let values = lorentz_generic(x, dim);
    let rn = r2.powf(-0.5 * n as f64);
    let pressure = x
        .iter()
        .map(|&xj| xj * rn / dim.sphere_area())
        .collect();
    Ok(KernelMatrix::new(n, values, Some(pressure)))
}

// ---------------------------------------------------------------------------
// Poisson (Odqvist) tensor
// ---------------------------------------------------------------------------

/// Half-space Poisson tensor `K_ij = 2 x_n x_i x_j / (omega_n |x|^{n+2})`
/// with its pressure vector `k_j = -d_j (4 x_n / (n omega_n |x|^n))`.
pub fn poisson_tensor(x: &[f64], dim: &Dimension) -> Result<KernelMatrix> {
    let n = dim.n();
    debug_assert_eq!(x.len(), n);
    let r2 = geom::norm_sq(x);
    if r2 == 0.0 {
        return Err(Error::SingularPoint {
            what: "Poisson tensor at x = 0",
        });
    }
    let xn = x[n - 1];
    let rp = r2.powf(-0.5 * (n as f64 + 2.0));
    let rn = r2.powf(-0.5 * n as f64);
    let c = 2.0 * xn / dim.omega() * rp;
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            values[i * n + j] = c * x[i] * x[j];
        }
    }
    // k_j = 4 x_n x_j / (omega |x|^{n+2}) - 4 delta_{jn} / (n omega |x|^n)
    let mut pressure = vec![0.0; n];
    for (j, p) in pressure.iter_mut().enumerate() {
        *p = 4.0 * xn * x[j] / dim.omega() * rp;
        if j == n - 1 {
            *p -= 4.0 * rn / dim.sphere_area();
        }
    }
    Ok(KernelMatrix::new(n, values, Some(pressure)))
}

// ---------------------------------------------------------------------------
// R_s / Q_s remainders
// ---------------------------------------------------------------------------

/// Direct evaluation, accurate for theta away from zero.
pub(crate) fn rq_direct<T: Scalar>(w2: T, z2: T, theta: T, s: f64) -> (T, T) {
    if s == 0.0 {
        let r = (z2.ln() - w2.ln()).scale(0.5);
        (r, r - theta.scale(2.0))
    } else {
        let zi = z2.powf(-0.5 * s);
        let r = w2.powf(-0.5 * s) - zi;
        // 2 s x_n y_n / |z|^{s+2} = 2 s theta |z|^{-s}
        let q = r - (theta * zi).scale(2.0 * s);
        (r, q)
    }
}

/// Series in theta: all terms of order >= 1 (for `R_s`) and >= 2 (for `Q_s`)
/// of `(1 - 4 theta)^{-s/2}` (log variant for `s = 0`). Truncation decisions
/// are taken on the primal value only, so the branch stays
/// differentiation-compatible.
pub(crate) fn rq_series<T: Scalar>(z2: T, theta: T, s: f64) -> (T, T) {
    let zi = if s == 0.0 {
        T::one()
    } else {
        z2.powf(-0.5 * s)
    };
    let theta_p = theta.value().abs();
    let mut coeff = if s == 0.0 { 2.0 } else { 2.0 * s }; // c_1
    let mut power = theta; // theta^k
    let mut power_p = theta_p;
    let mut sum_r = power.scale(coeff);
    let mut sum_q = T::zero();
    let mut sum_p = coeff * theta_p;
    for k in 1..MAX_SERIES_TERMS {
        // c_{k+1}/c_k
        let ratio = if s == 0.0 {
            4.0 * k as f64 / (k as f64 + 1.0)
        } else {
            (2.0 * s + 4.0 * k as f64) / (k as f64 + 1.0)
        };
        coeff *= ratio;
        power = power * theta;
        power_p *= theta_p;
        let contrib = power.scale(coeff);
        sum_r = sum_r + contrib;
        sum_q = sum_q + contrib;
        sum_p += coeff * power_p;
        if coeff * power_p <= SERIES_EPS * sum_p {
            break;
        }
    }
    (zi * sum_r, zi * sum_q)
}

pub(crate) fn rq_generic<T: Scalar>(w2: T, z2: T, theta: T, s: f64) -> (T, T) {
    if theta.value() >= THETA_SWITCH {
        rq_direct(w2, z2, theta, s)
    } else {
        rq_series(z2, theta, s)
    }
}

/// First-order Taylor remainders of `|w|^{-s}` about `|z|^{-s}`:
/// `R_s = |w|^{-s} - |z|^{-s}` and
/// `Q_s = R_s - 2 s x_n y_n / |z|^{s+2}` (log variants at `s = 0`),
/// evaluated cancellation-safely.
pub fn stable_rq(pair: &PairGeometry<f64>, s: f64) -> Result<(f64, f64)> {
    if s < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "remainder order s must be >= 0, got {s}"
        )));
    }
    if pair.w_norm_sq == 0.0 {
        return Err(Error::SingularPoint {
            what: "R_s/Q_s at w = 0",
        });
    }
    Ok(rq_generic(pair.w_norm_sq, pair.z_norm_sq, pair.theta, s))
}

// ---------------------------------------------------------------------------
// Green tensor
// ---------------------------------------------------------------------------

/// Compact closed form,
/// `G_ij = delta_ij kappa Q_{n-2} + w_i w_j Q_n / (2 n omega_n)
///        + x_n y_n (w_i w_j + z_i eps_j z_j) / (omega_n |z|^{n+2})`.
pub(crate) fn green_formula_generic<T: Scalar>(x: &[T], y: &[T], dim: &Dimension) -> Vec<T> {
    let n = dim.n();
    let g = PairGeometry::new(x, y);
    let (_, q_nm2) = rq_generic(g.w_norm_sq, g.z_norm_sq, g.theta, (n - 2) as f64);
    let (_, q_n) = rq_generic(g.w_norm_sq, g.z_norm_sq, g.theta, n as f64);
    let zp = g.z_norm_sq.powf(-0.5 * (n as f64 + 2.0)); // |z|^{-(n+2)}
    let xnyn_zp = (g.xn * g.yn * zp).scale(1.0 / dim.omega());
    let c2 = 1.0 / (2.0 * dim.sphere_area());
    let diag = q_nm2.scale(dim.kappa());
    let mut out = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            let eps_j = geom::reflect_sign(j, n);
            let ww = g.w[i] * g.w[j];
            let mut v = (ww * q_n).scale(c2) + xnyn_zp * (ww + (g.z[i] * g.z[j]).scale(eps_j));
            if i == j {
                v = v + diag;
            }
            out[i * n + j] = v;
        }
    }
    out
}

/// Image part `G~_ij = U_ij(x - y) - eps_j U_ij(x - y*)` plus the boundary
/// layer `W_ij` in its expanded form.
fn green_decomposition(x: &[f64], y: &[f64], dim: &Dimension) -> Vec<f64> {
    let n = dim.n();
    let g = PairGeometry::from_points(x, y);
    let e_w = fundamental_e(g.w_norm_sq, dim);
    let e_z = fundamental_e(g.z_norm_sq, dim);
    let nom = dim.sphere_area(); // n omega_n
    let wn = g.w_norm_sq.powf(-0.5 * n as f64);
    let zn = g.z_norm_sq.powf(-0.5 * n as f64);
    let znp2 = g.z_norm_sq.powf(-0.5 * (n as f64 + 2.0));
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        let din = i == n - 1;
        for j in 0..n {
            let djn = j == n - 1;
            let eps_j = geom::reflect_sign(j, n);
            // tilde G
            let mut v = (g.w[i] * g.w[j] * wn - eps_j * g.z[i] * g.z[j] * zn) / (2.0 * nom);
            if i == j {
                v += 0.5 * (e_w - eps_j * e_z);
            }
            // W, expanded
            if din && djn {
                v -= e_z;
            }
            if din {
                v += g.yn * eps_j * g.z[j] * zn / nom;
            }
            if djn {
                v -= g.xn * g.z[i] * zn / nom;
            }
            let mut tail = n as f64 * g.z[i] * eps_j * g.z[j] * znp2;
            if i == j {
                tail -= eps_j * zn;
            }
            v += g.xn * g.yn / nom * tail;
            out[i * n + j] = v;
        }
    }
    out
}

fn check_green_domain(x: &[f64], y: &[f64], n: usize) -> Result<()> {
    let (xn, yn) = (x[n - 1], y[n - 1]);
    if xn < 0.0 || yn < 0.0 {
        return Err(Error::Domain { xn, yn });
    }
    if geom::dist(x, y) == 0.0 {
        return Err(Error::SingularPoint {
            what: "Green tensor at x = y",
        });
    }
    Ok(())
}

/// Green tensor of the half-space Stokes system with zero boundary values.
/// No pressure vector is produced: the associated pressure kernel has no
/// closed form here.
pub fn green_tensor(
    x: &[f64],
    y: &[f64],
    dim: &Dimension,
    path: GreenPath,
) -> Result<KernelMatrix> {
    let n = dim.n();
    debug_assert_eq!(x.len(), n);
    debug_assert_eq!(y.len(), n);
    check_green_domain(x, y, n)?;
    let values = match path {
        GreenPath::Formula => green_formula_generic(x, y, dim),
        GreenPath::Decomposition => green_decomposition(x, y, dim),
    };
    Ok(KernelMatrix::new(n, values, None))
}

// ---------------------------------------------------------------------------
// Green tensor derivatives
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Direction {
    on_x: bool,
    coord: usize,
}

fn expand_multi_index(alpha: &[usize], beta: &[usize]) -> Vec<Direction> {
    let mut dirs = Vec::new();
    for (coord, &k) in alpha.iter().enumerate() {
        for _ in 0..k {
            dirs.push(Direction { on_x: true, coord });
        }
    }
    for (coord, &k) in beta.iter().enumerate() {
        for _ in 0..k {
            dirs.push(Direction { on_x: false, coord });
        }
    }
    dirs
}

fn green_grad1(x: &[f64], y: &[f64], dim: &Dimension, d: Direction) -> Vec<f64> {
    let mut xd: Vec<Dual<f64>> = x.iter().map(|&v| Dual::constant(v)).collect();
    let mut yd: Vec<Dual<f64>> = y.iter().map(|&v| Dual::constant(v)).collect();
    if d.on_x {
        xd[d.coord].du = 1.0;
    } else {
        yd[d.coord].du = 1.0;
    }
    green_formula_generic(&xd, &yd, dim)
        .into_iter()
        .map(|v| v.du)
        .collect()
}

fn green_grad2(x: &[f64], y: &[f64], dim: &Dimension, d1: Direction, d2: Direction) -> Vec<f64> {
    type D2 = Dual<Dual<f64>>;
    let mut xd: Vec<D2> = x.iter().map(|&v| D2::constant(v)).collect();
    let mut yd: Vec<D2> = y.iter().map(|&v| D2::constant(v)).collect();
    {
        let slot = if d1.on_x {
            &mut xd[d1.coord]
        } else {
            &mut yd[d1.coord]
        };
        slot.du.re = 1.0; // outer seed
    }
    {
        let slot = if d2.on_x {
            &mut xd[d2.coord]
        } else {
            &mut yd[d2.coord]
        };
        slot.re.du = 1.0; // inner seed
    }
    green_formula_generic(&xd, &yd, dim)
        .into_iter()
        .map(|v| v.du.du)
        .collect()
}

/// Derivative `nabla_x^alpha nabla_y^beta G_ij` for `|alpha| + |beta|` equal
/// to 1 or 2, by forward-mode dual differentiation through the compact
/// formula.
pub fn green_gradient(
    x: &[f64],
    y: &[f64],
    dim: &Dimension,
    alpha: &[usize],
    beta: &[usize],
) -> Result<KernelMatrix> {
    let n = dim.n();
    debug_assert_eq!(alpha.len(), n);
    debug_assert_eq!(beta.len(), n);
    check_green_domain(x, y, n)?;
    let dirs = expand_multi_index(alpha, beta);
    let values = match dirs.len() {
        1 => green_grad1(x, y, dim, dirs[0]),
        2 => green_grad2(x, y, dim, dirs[0], dirs[1]),
        m => return Err(Error::UnsupportedOrder { m }),
    };
    Ok(KernelMatrix::new(n, values, None))
}

/// All source-side first derivatives at once:
/// returns `(G, D)` with `D[alpha][i][j] = d/d y_alpha G_ij(x, y)` flattened
/// as `alpha * n^2 + i * n + j`. This is the kernel of the representation
/// formula for (S) and the Picard step for (NS).
pub fn green_grad_y_all(x: &[f64], y: &[f64], dim: &Dimension) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = dim.n();
    check_green_domain(x, y, n)?;
    let mut grads = vec![0.0; n * n * n];
    let mut value = vec![0.0; n * n];
    let mut xd: Vec<Dual<f64>> = x.iter().map(|&v| Dual::constant(v)).collect();
    let mut yd: Vec<Dual<f64>> = y.iter().map(|&v| Dual::constant(v)).collect();
    for alpha in 0..n {
        yd[alpha].du = 1.0;
        let g = green_formula_generic(&xd, &yd, dim);
        yd[alpha].du = 0.0;
        for (idx, v) in g.iter().enumerate() {
            grads[alpha * n * n + idx] = v.du;
            if alpha == 0 {
                value[idx] = v.re;
            }
        }
        // keep xd alive without reborrowing mutably in the loop
        let _ = &mut xd;
    }
    Ok((value, grads))
}

// ---------------------------------------------------------------------------
// gradient basis Phi^{jk}
// ---------------------------------------------------------------------------

/// Rank-3 array `Phi^{jk}_i = d_k U_ij`, the basis of `(1-n)`-homogeneous
/// fields spanning fast-decay asymptotics. Stored with `i` contiguous.
#[derive(Debug, Clone)]
pub struct StressBasis {
    n: usize,
    values: Vec<f64>,
}

impl StressBasis {
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize, i: usize) -> f64 {
        self.values[(j * self.n + k) * self.n + i]
    }

    /// The vector field `Phi^{jk}` at the evaluation point.
    pub fn field(&self, j: usize, k: usize) -> &[f64] {
        let base = (j * self.n + k) * self.n;
        &self.values[base..base + self.n]
    }
}

/// `Phi^{jk}_i(x) = c_n |x|^{-n} [ (delta_jk - n x_j x_k / |x|^2) x_i
///                  + delta_ik x_j - delta_ij x_k ]`, `c_n = 1/(2 n omega_n)`.
pub fn stress_basis(x: &[f64], dim: &Dimension) -> Result<StressBasis> {
    let n = dim.n();
    debug_assert_eq!(x.len(), n);
    let r2 = geom::norm_sq(x);
    if r2 == 0.0 {
        return Err(Error::SingularPoint {
            what: "stress basis at x = 0",
        });
    }
    let c = 1.0 / (2.0 * dim.sphere_area()) * r2.powf(-0.5 * n as f64);
    let mut values = vec![0.0; n * n * n];
    for j in 0..n {
        for k in 0..n {
            let djk = if j == k { 1.0 } else { 0.0 };
            let radial = djk - n as f64 * x[j] * x[k] / r2;
            for i in 0..n {
                let mut v = radial * x[i];
                if i == k {
                    v += x[j];
                }
                if i == j {
                    v -= x[k];
                }
                values[(j * n + k) * n + i] = c * v;
            }
        }
    }
    Ok(StressBasis { n, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn d(n: usize) -> Dimension {
        Dimension::new(n).unwrap()
    }

    #[test]
    fn scalar_fundamentals_hand_values() {
        let d3 = d(3);
        let (e, _, _) = scalar_fundamentals(&[1.0, 0.0, 0.0], &d3).unwrap();
        assert!((e - 1.0 / (4.0 * PI)).abs() < 1e-15);
        let (_, _, p) = scalar_fundamentals(&[0.0, 0.0, 1.0], &d3).unwrap();
        assert!((p - 1.0 / (2.0 * PI)).abs() < 1e-15);
        let d2 = d(2);
        let (e2, _, _) = scalar_fundamentals(&[0.6, 0.8], &d2).unwrap();
        assert!(e2.abs() < 1e-15, "E vanishes on the unit circle for n = 2");
    }

    #[test]
    fn singular_point_rejected() {
        let d3 = d(3);
        assert!(matches!(
            scalar_fundamentals(&[0.0; 3], &d3),
            Err(Error::SingularPoint { .. })
        ));
        assert!(lorentz_tensor(&[0.0; 3], &d3).is_err());
        assert!(poisson_tensor(&[0.0; 3], &d3).is_err());
    }

    #[test]
    fn lorentz_hand_values_n3() {
        let d3 = d(3);
        let u = lorentz_tensor(&[1.0, 0.0, 0.0], &d3).unwrap();
        assert!((u.get(0, 0) - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert!((u.get(1, 1) - 1.0 / (8.0 * PI)).abs() < 1e-15);
        assert!((u.get(2, 2) - 1.0 / (8.0 * PI)).abs() < 1e-15);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(u.get(i, j), 0.0);
                }
            }
        }
        let q = u.pressure().unwrap();
        assert!((q[0] - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert_eq!(q[1], 0.0);
    }

    #[test]
    fn lorentz_parity_and_homogeneity() {
        let d3 = d(3);
        let x = [0.3, -1.2, 0.7];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let u = lorentz_tensor(&x, &d3).unwrap();
        let un = lorentz_tensor(&neg, &d3).unwrap();
        for k in 0..9 {
            assert!((u.values()[k] - un.values()[k]).abs() < 1e-16);
        }
        // |x|^{n-2} homogeneity: U(2x) = 2^{2-n} U(x)
        let two: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let u2 = lorentz_tensor(&two, &d3).unwrap();
        for k in 0..9 {
            assert!((u2.values()[k] - 0.5 * u.values()[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn poisson_hand_values() {
        let d3 = d(3);
        let k = poisson_tensor(&[0.0, 0.0, 1.0], &d3).unwrap();
        assert!((k.get(2, 2) - 3.0 / (2.0 * PI)).abs() < 1e-14);
        for i in 0..3 {
            for j in 0..3 {
                if (i, j) != (2, 2) {
                    assert_eq!(k.get(i, j), 0.0);
                }
            }
        }
        // vanishes on the boundary plane
        let kb = poisson_tensor(&[1.0, -2.0, 0.0], &d3).unwrap();
        assert_eq!(kb.max_abs(), 0.0);
    }

    #[test]
    fn poisson_pressure_matches_dual_derivative() {
        // k_j = -d_j (4 x_n / (n omega |x|^n))
        let d3 = d(3);
        let x = [0.4, -0.3, 0.8];
        let k = poisson_tensor(&x, &d3).unwrap();
        let pressure = k.pressure().unwrap();
        for j in 0..3 {
            let mut xd: Vec<Dual<f64>> = x.iter().map(|&v| Dual::constant(v)).collect();
            xd[j].du = 1.0;
            let mut r2 = Dual::<f64>::zero();
            for v in &xd {
                r2 = r2 + *v * *v;
            }
            let val = xd[2] * r2.powf(-1.5) * Dual::constant(4.0 / d3.sphere_area());
            assert!((pressure[j] + val.du).abs() < 1e-14);
        }
    }

    #[test]
    fn rq_hand_values() {
        // x = (0,...,0,2), y = (0,...,0,1): |w| = 1, |z| = 3, theta = 2/9
        let x = [0.0, 0.0, 2.0];
        let y = [0.0, 0.0, 1.0];
        let pair = PairGeometry::from_points(&x, &y);
        let (_, q1) = stable_rq(&pair, 1.0).unwrap();
        assert!((q1 - 14.0 / 27.0).abs() < 1e-15);
        let (_, q3) = stable_rq(&pair, 3.0).unwrap();
        assert!((q3 - 74.0 / 81.0).abs() < 1e-15);
    }

    #[test]
    fn rq_vanishes_on_boundary_source() {
        let x = [0.4, 0.0, 1.0];
        let y = [0.0, 0.3, 0.0];
        let pair = PairGeometry::from_points(&x, &y);
        for s in [0.0, 1.0, 2.5] {
            let (r, q) = stable_rq(&pair, s).unwrap();
            assert_eq!(r, 0.0);
            assert_eq!(q, 0.0);
        }
    }

    #[test]
    fn rq_positive_and_ordered() {
        let x = [0.2, -0.1, 1.4];
        let y = [0.5, 0.3, 0.6];
        let pair = PairGeometry::from_points(&x, &y);
        for s in [0.0, 1.0, 2.0, 3.0] {
            let (r, _) = stable_rq(&pair, s).unwrap();
            assert!(r > 0.0, "R_s > 0 for interior pairs");
        }
    }

    #[test]
    fn rq_branch_agreement_around_switch() {
        // direct and series agree to <= 1e-12 relative in a band around the
        // switch point
        for s in [0.0, 1.0, 2.0, 3.0] {
            for &theta in &[0.004, 0.008, 0.01, 0.013, 0.02] {
                // synthesize a geometry: |z| = 2, x_n y_n = theta |z|^2
                let z2 = 4.0;
                let w2 = z2 * (1.0 - 4.0 * theta);
                let (rd, qd) = rq_direct(w2, z2, theta, s);
                let (rs, qs) = rq_series(z2, theta, s);
                assert!(
                    (rd - rs).abs() <= 1e-12 * rs.abs().max(1e-300),
                    "R_s branches disagree at s={s}, theta={theta}: {rd} vs {rs}"
                );
                assert!(
                    (qd - qs).abs() <= 1e-12 * qs.abs().max(rs.abs()),
                    "Q_s branches disagree at s={s}, theta={theta}: {qd} vs {qs}"
                );
            }
        }
    }

    #[test]
    fn tangential_derivative_recursion() {
        // d/dx_j Q_s = -s Q_{s+2} w_j for tangential j
        let d3 = d(3);
        let _ = d3;
        let x = [0.7, -0.2, 1.1];
        let y = [0.1, 0.4, 0.8];
        for s in [1.0, 2.0, 3.0] {
            let mut xd: Vec<Dual<f64>> = x.iter().map(|&v| Dual::constant(v)).collect();
            let yd: Vec<Dual<f64>> = y.iter().map(|&v| Dual::constant(v)).collect();
            xd[0].du = 1.0;
            let g = PairGeometry::new(&xd, &yd);
            let (_, q) = rq_generic(g.w_norm_sq, g.z_norm_sq, g.theta, s);
            let pair = PairGeometry::from_points(&x, &y);
            let (_, q2) = stable_rq(&pair, s + 2.0).unwrap();
            let expected = -s * q2 * (x[0] - y[0]);
            assert!(
                (q.du - expected).abs() < 1e-13 * expected.abs().max(1.0),
                "recursion fails at s={s}: {} vs {expected}",
                q.du
            );
        }
    }

    #[test]
    fn green_hand_value_both_paths() {
        let d3 = d(3);
        let x = [0.0, 0.0, 2.0];
        let y = [0.0, 0.0, 1.0];
        let expected = 7.0 / (54.0 * PI);
        let gf = green_tensor(&x, &y, &d3, GreenPath::Formula).unwrap();
        let gd = green_tensor(&x, &y, &d3, GreenPath::Decomposition).unwrap();
        assert!((gf.get(2, 2) - expected).abs() < 1e-12 * expected);
        assert!((gd.get(2, 2) - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn green_vanishes_on_boundary() {
        let d3 = d(3);
        let x = [0.7, -0.4, 0.0];
        let y = [0.0, 0.2, 1.3];
        let g = green_tensor(&x, &y, &d3, GreenPath::Formula).unwrap();
        assert!(g.max_abs() < 1e-16);
    }

    #[test]
    fn green_rejects_bad_domain() {
        let d3 = d(3);
        assert!(matches!(
            green_tensor(&[0.0, 0.0, -1.0], &[0.0, 0.0, -2.0], &d3, GreenPath::Formula),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            green_tensor(&[0.0, 0.0, 1.0], &[0.0, 0.0, 1.0], &d3, GreenPath::Formula),
            Err(Error::SingularPoint { .. })
        ));
    }

    #[test]
    fn green_symmetry_random_pairs() {
        let d3 = d(3);
        // fixed deterministic points
        let pairs = [
            ([0.3, -0.8, 0.9], [1.1, 0.2, 0.4]),
            ([2.0, 1.0, 0.05], [-1.0, 0.5, 2.5]),
            ([0.0, 0.0, 3.0], [0.1, 0.1, 0.001]),
        ];
        for (x, y) in pairs {
            let g = green_tensor(&x, &y, &d3, GreenPath::Formula).unwrap();
            let gt = green_tensor(&y, &x, &d3, GreenPath::Formula).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    let diff = (g.get(i, j) - gt.get(j, i)).abs();
                    assert!(diff <= 1e-13 * (1.0 + g.max_abs()), "asymmetry {diff}");
                }
            }
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let d3 = d(3);
        let x = [0.5, -0.3, 1.2];
        let y = [0.2, 0.4, 0.7];
        let h = 1e-3;
        for coord in 0..3 {
            let mut alpha = [0usize; 3];
            alpha[coord] = 1;
            let grad = green_gradient(&x, &y, &d3, &alpha, &[0; 3]).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    let f = |t: f64| {
                        let mut xs = x;
                        xs[coord] += t;
                        green_tensor(&xs, &y, &d3, GreenPath::Formula)
                            .unwrap()
                            .get(i, j)
                    };
                    let fd =
                        (-f(2.0 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2.0 * h)) / (12.0 * h);
                    let scale = fd.abs().max(1.0);
                    assert!(
                        (grad.get(i, j) - fd).abs() <= 1e-6 * scale,
                        "x-derivative mismatch at ({i},{j})"
                    );
                }
            }
        }
    }

    #[test]
    fn second_derivative_matches_iterated_differences() {
        let d3 = d(3);
        let x = [0.5, -0.3, 1.2];
        let y = [0.2, 0.4, 0.7];
        let alpha = [1, 0, 0];
        let beta = [0, 0, 1];
        let grad = green_gradient(&x, &y, &d3, &alpha, &beta).unwrap();
        let h = 1e-3;
        for i in 0..3 {
            for j in 0..3 {
                let f = |s: f64, t: f64| {
                    let mut xs = x;
                    let mut ys = y;
                    xs[0] += s;
                    ys[2] += t;
                    green_tensor(&xs, &ys, &d3, GreenPath::Formula)
                        .unwrap()
                        .get(i, j)
                };
                let g = |t: f64| {
                    (-f(2.0 * h, t) + 8.0 * f(h, t) - 8.0 * f(-h, t) + f(-2.0 * h, t))
                        / (12.0 * h)
                };
                let fd = (-g(2.0 * h) + 8.0 * g(h) - 8.0 * g(-h) + g(-2.0 * h)) / (12.0 * h);
                let scale = fd.abs().max(1.0);
                assert!(
                    (grad.get(i, j) - fd).abs() <= 1e-5 * scale,
                    "mixed second derivative mismatch at ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn unsupported_order_rejected() {
        let d3 = d(3);
        let err = green_gradient(
            &[0.0, 0.0, 2.0],
            &[0.0, 0.0, 1.0],
            &d3,
            &[2, 1, 0],
            &[0; 3],
        );
        assert!(matches!(err, Err(Error::UnsupportedOrder { m: 3 })));
    }

    #[test]
    fn boundary_derivative_identity() {
        // d/dy_n G_ij(x, 0) = K_ij(x) for j < n, all other combinations zero
        let d3 = d(3);
        let xs = [[0.9, -0.4, 0.8], [2.0, 1.0, 0.3], [0.0, 0.0, 1.5]];
        for x in xs {
            let k = poisson_tensor(&x, &d3).unwrap();
            for l in 0..3 {
                let mut beta = [0usize; 3];
                beta[l] = 1;
                let g = green_gradient(&x, &[0.0; 3], &d3, &[0; 3], &beta).unwrap();
                for i in 0..3 {
                    for j in 0..3 {
                        let expected = if j < 2 && l == 2 { k.get(i, j) } else { 0.0 };
                        assert!(
                            (g.get(i, j) - expected).abs() < 1e-13,
                            "D_y identity fails at i={i}, j={j}, l={l}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn grad_y_all_consistent_with_green_gradient() {
        let d3 = d(3);
        let x = [0.4, 0.9, 1.1];
        let y = [-0.2, 0.3, 0.6];
        let (val, grads) = green_grad_y_all(&x, &y, &d3).unwrap();
        let g = green_tensor(&x, &y, &d3, GreenPath::Formula).unwrap();
        for k in 0..9 {
            assert!((val[k] - g.values()[k]).abs() < 1e-16);
        }
        for alpha in 0..3 {
            let mut beta = [0usize; 3];
            beta[alpha] = 1;
            let gg = green_gradient(&x, &y, &d3, &[0; 3], &beta).unwrap();
            for k in 0..9 {
                assert!((grads[alpha * 9 + k] - gg.values()[k]).abs() < 1e-16);
            }
        }
    }

    #[test]
    fn stress_basis_matches_dual_derivative_of_lorentz() {
        let d3 = d(3);
        let x = [0.8, -0.5, 1.3];
        let phi = stress_basis(&x, &d3).unwrap();
        for k in 0..3 {
            let mut xd: Vec<Dual<f64>> = x.iter().map(|&v| Dual::constant(v)).collect();
            xd[k].du = 1.0;
            let u = lorentz_generic(&xd, &d3);
            for i in 0..3 {
                for j in 0..3 {
                    let expected = u[i * 3 + j].du;
                    assert!(
                        (phi.get(j, k, i) - expected).abs() < 1e-14,
                        "Phi^{{jk}}_i mismatch at j={j}, k={k}, i={i}"
                    );
                }
            }
        }
    }

    #[test]
    fn stress_basis_trace_identity() {
        // Phi^{nn} = -sum_{j<n} Phi^{jj} componentwise
        for n in [2, 3, 4] {
            let dn = d(n);
            let x: Vec<f64> = (0..n).map(|k| 0.3 + 0.4 * k as f64).collect();
            let phi = stress_basis(&x, &dn).unwrap();
            for i in 0..n {
                let mut sum = 0.0;
                for j in 0..n {
                    sum += phi.get(j, j, i);
                }
                assert!(sum.abs() < 1e-15, "trace identity violated: {sum}");
            }
        }
    }
}
