//! Representation-formula solver for the half-space Stokes system and its
//! far-field data.
//!
//! The velocity generated by a tensor force `F` with zero boundary values is
//! `v_i(x) = -sum_{alpha j} int d_{y_alpha} G_ij(x, y) F_{alpha j}(y) dy`.
//! A vector force `f` is first absorbed into the tensor part through the
//! shifted ray potential, exactly as the far-field coefficients
//! `b_j = int (y_n f_j - F_{nj})` expect.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::dim::Dimension;
use crate::error::{Error, Result};
use crate::force::{ForceSpec, ProfileFamily};
use crate::geom;
use crate::kernels;
use crate::quadrature::{self, QuadConfig};

/// Tensor force field `F_{alpha j}(y)` (row-major), with an optional support
/// radius so quadratures can skip kernel evaluations where the force
/// vanishes.
pub trait TensorField: Sync {
    fn n(&self) -> usize;
    fn eval(&self, y: &[f64]) -> Vec<f64>;
    fn support_radius(&self) -> Option<f64> {
        None
    }
}

/// Plain tensor part of a [`ForceSpec`], ignoring its vector part.
pub struct SpecTensor<'a>(pub &'a ForceSpec);

impl TensorField for SpecTensor<'_> {
    fn n(&self) -> usize {
        self.0.n
    }
    fn eval(&self, y: &[f64]) -> Vec<f64> {
        self.0.tensor_at(y)
    }
    fn support_radius(&self) -> Option<f64> {
        self.0.support_radius()
    }
}

/// Ray potential of one scalar field `g` on the half space:
/// `G_alpha(x) = -(x + e_n)_alpha int_1^inf g(s(x + e_n) - e_n) s^{n-1} ds`,
/// which satisfies `sum_alpha d_alpha G_alpha = g` whenever
/// `|g| <~ <x>^{-a}` with `a > n`.
pub fn decompose_component<G>(g: &G, x: &[f64], n: usize, ray_cfg: &QuadConfig) -> Result<Vec<f64>>
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    let mut base = x.to_vec();
    base[n - 1] += 1.0;
    let integrand = |s: f64| {
        let mut y = vec![0.0; n];
        for (yi, bi) in y.iter_mut().zip(&base) {
            *yi = s * bi;
        }
        y[n - 1] -= 1.0;
        g(&y) * s.powi(n as i32 - 1)
    };
    let mut rcfg = *ray_cfg;
    rcfg.grades = rcfg.grades.max(30);
    let (val, _) = quadrature::integrate_ray(&integrand, 1.0, &rcfg)?;
    Ok(base.iter().map(|&b| -b * val).collect())
}

/// A force spec with its vector part absorbed into the tensor part:
/// `F_total = F + Ftilde`, `f_j = sum_alpha d_alpha Ftilde_{alpha j}`.
///
/// Worst ray-quadrature error estimates observed during evaluation are
/// tracked on the side, since the field interface is infallible.
pub struct AbsorbedForce<'a> {
    spec: &'a ForceSpec,
    ray_cfg: QuadConfig,
    ray_error: AtomicU64,
}

impl AbsorbedForce<'_> {
    pub fn max_ray_error(&self) -> f64 {
        f64::from_bits(self.ray_error.load(Ordering::Relaxed))
    }

    fn record_ray_error(&self, e: f64) {
        let mut cur = self.ray_error.load(Ordering::Relaxed);
        while e > f64::from_bits(cur) {
            match self.ray_error.compare_exchange(
                cur,
                e.to_bits(),
                Ordering::Relaxed,
                Ordering::Relaxed,
            ) {
                Ok(_) => break,
                Err(c) => cur = c,
            }
        }
    }
}

/// Absorb the vector part of `spec`; requires decay `a > n` for the ray
/// potential to exist.
pub fn absorb_force<'a>(spec: &'a ForceSpec, ray_cfg: &QuadConfig) -> Result<AbsorbedForce<'a>> {
    if spec.has_f() && spec.decay <= spec.n as f64 {
        return Err(Error::DecayHypothesis {
            a: spec.decay,
            required: spec.n as f64,
        });
    }
    let mut rcfg = *ray_cfg;
    rcfg.grades = rcfg.grades.max(30);
    Ok(AbsorbedForce {
        spec,
        ray_cfg: rcfg,
        ray_error: AtomicU64::new(0),
    })
}

impl TensorField for AbsorbedForce<'_> {
    fn n(&self) -> usize {
        self.spec.n
    }

    fn eval(&self, y: &[f64]) -> Vec<f64> {
        let n = self.spec.n;
        let mut out = self.spec.tensor_at(y);
        if !self.spec.has_f() {
            return out;
        }
        let mut base = y.to_vec();
        base[n - 1] += 1.0;
        // one ray integral of the profile serves every component
        let integrand = |s: f64| {
            let mut p = vec![0.0; n];
            for (pi, bi) in p.iter_mut().zip(&base) {
                *pi = s * bi;
            }
            p[n - 1] -= 1.0;
            self.spec.profile_f(&p) * s.powi(n as i32 - 1)
        };
        let (iphi, err) = quadrature::integrate_ray_lenient(&integrand, 1.0, &self.ray_cfg);
        self.record_ray_error(err);
        for alpha in 0..n {
            for (j, cj) in self.spec.f_coeffs.iter().enumerate() {
                out[alpha * n + j] -= base[alpha] * self.spec.amplitude * cj * iphi;
            }
        }
        out
    }

    fn support_radius(&self) -> Option<f64> {
        // the ray potential spreads compact support toward the origin only,
        // so the combined support stays inside the same ball
        self.spec.support_radius()
    }
}

/// Velocity of the Stokes flow at `x`. Returns the value and the quadrature
/// error estimate; exactly zero on the boundary plane.
pub fn solve_stokes(
    force: &dyn TensorField,
    x: &[f64],
    dim: &Dimension,
    cfg: &QuadConfig,
) -> Result<(Vec<f64>, f64)> {
    let n = dim.n();
    debug_assert_eq!(x.len(), n);
    let xn = x[n - 1];
    if xn < 0.0 {
        return Err(Error::Domain { xn, yn: 0.0 });
    }
    if xn == 0.0 {
        return Ok((vec![0.0; n], 0.0));
    }
    let supp = force.support_radius();
    let integrand = |y: &[f64]| -> Vec<f64> {
        if let Some(r) = supp {
            if geom::norm(y) >= r {
                return vec![0.0; n];
            }
        }
        let fy = force.eval(y);
        if fy.iter().all(|&v| v == 0.0) {
            return vec![0.0; n];
        }
        let (_, grads) = match kernels::green_grad_y_all(x, y, dim) {
            Ok(g) => g,
            Err(_) => return vec![0.0; n],
        };
        let mut v = vec![0.0; n];
        for alpha in 0..n {
            for i in 0..n {
                let base = alpha * n * n + i * n;
                let mut acc = 0.0;
                for j in 0..n {
                    acc += grads[base + j] * fy[alpha * n + j];
                }
                v[i] -= acc;
            }
        }
        v
    };
    // the kernel is singular at y = x only where the force is nonzero
    match supp {
        Some(r) if geom::norm(x) >= r => {
            // smooth kernel over the whole compact support
            let (lo, hi) = quadrature::support_box(&vec![0.0; n], r, true);
            quadrature::integrate_box(&integrand, n, &lo, &hi, cfg.order, 1, &cfg.tol)
        }
        Some(r) => {
            // singular point inside the support: box background with the
            // patch ball removed by the smooth cutoff
            let (lo, hi) = quadrature::support_box(&vec![0.0; n], r, true);
            let delta = (0.5 * geom::norm(x).max(cfg.map_scale)).min(0.9 * xn);
            let background = |y: &[f64]| -> Vec<f64> {
                let d = geom::dist(y, x);
                let keep = 1.0 - quadrature::cutoff(d / delta);
                if keep == 0.0 {
                    return vec![0.0; n];
                }
                let mut v = integrand(y);
                for c in v.iter_mut() {
                    *c *= keep;
                }
                v
            };
            quadrature::refine_levels(
                |level| {
                    let mut total =
                        quadrature::box_level(&background, n, &lo, &hi, cfg.order, level);
                    let patch =
                        quadrature::patch_ball(&integrand, n, x, delta, cfg.order, level + 1);
                    for (t, p) in total.iter_mut().zip(&patch) {
                        *t += p;
                    }
                    total
                },
                1,
                &cfg.tol,
            )
        }
        None => quadrature::integrate_singular_patch(&integrand, n, x, true, cfg),
    }
}

/// Far-field coefficients `b_j = int_{R^n_+} (y_n f_j - F_{nj}) dy` for
/// `j < n`, with `b_n = 0`. Rejects decays for which the moment diverges.
pub fn coeffs_b(spec: &ForceSpec, dim: &Dimension, cfg: &QuadConfig) -> Result<Vec<f64>> {
    let n = dim.n();
    if matches!(spec.family, ProfileFamily::PowerLaw) && spec.decay <= n as f64 + 1.0 {
        return Err(Error::DecayHypothesis {
            a: spec.decay,
            required: n as f64 + 1.0,
        });
    }
    let m = n - 1;
    let integrand = |y: &[f64]| -> Vec<f64> {
        let f = spec.f_at(y);
        let big = spec.tensor_at(y);
        (0..m)
            .map(|j| y[n - 1] * f[j] - big[(n - 1) * n + j])
            .collect()
    };
    let (vals, _) = moment_quadrature(spec, &integrand, m, n, cfg)?;
    let mut b = vals;
    b.push(0.0);
    Ok(b)
}

/// Moment integrals route by family: compact supports use the finite box
/// rule, Gaussians the mapped tensor grid, power-law tails the strongly
/// graded radial rule.
fn moment_quadrature<F>(
    spec: &ForceSpec,
    integrand: &F,
    m: usize,
    n: usize,
    cfg: &QuadConfig,
) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    match spec.family {
        ProfileFamily::PowerLaw => {
            let mut rcfg = *cfg;
            rcfg.grades = rcfg.grades.max(36);
            quadrature::integrate_radial(integrand, m, n, true, &rcfg)
        }
        ProfileFamily::CompactBump => {
            let (lo, hi) = quadrature::support_box(&spec.center, spec.radius, true);
            quadrature::integrate_box(integrand, m, &lo, &hi, cfg.order, 1, &cfg.tol)
        }
        ProfileFamily::Gaussian => quadrature::integrate_halfspace(integrand, m, n, cfg),
    }
}

/// Error scale of the Stokes far-field expansion:
/// `delta(x) = x_n <x>^{-min(n+1, a-1)} (1 + 1_{a=n+2} log<x>)`.
pub fn delta_scale(x: &[f64], n: usize, a: f64) -> f64 {
    let xn = x[n - 1];
    let br = geom::bracket(x);
    let p = (n as f64 + 1.0).min(a - 1.0);
    let log_factor = if (a - (n as f64 + 2.0)).abs() < 1e-12 {
        1.0 + br.ln()
    } else {
        1.0
    };
    xn * br.powf(-p) * log_factor
}

/// Both sides of the moment identity
/// `int y_n f_j dy = -int Ftilde_{nj} dy` by two independent quadratures.
pub fn moment_identity(
    spec: &ForceSpec,
    dim: &Dimension,
    cfg: &QuadConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = dim.n();
    let m = n - 1;
    let lhs_f = |y: &[f64]| -> Vec<f64> {
        let f = spec.f_at(y);
        (0..m).map(|j| y[n - 1] * f[j]).collect()
    };
    let (lhs, _) = moment_quadrature(spec, &lhs_f, m, n, cfg)?;
    let absorbed = absorb_force(spec, cfg)?;
    let rhs_f = |y: &[f64]| -> Vec<f64> {
        let ft = absorbed.eval(y);
        let base = spec.tensor_at(y);
        (0..m)
            .map(|j| -(ft[(n - 1) * n + j] - base[(n - 1) * n + j]))
            .collect()
    };
    let (rhs, _) = moment_quadrature(spec, &rhs_f, m, n, cfg)?;
    Ok((lhs, rhs))
}
