//! Parametric force families for the solvers.
//!
//! A [`ForceSpec`] describes the data pair `(f, F)` of the momentum balance:
//! a vector part `f_j(x) = eps c_j phi_a(x)` and a tensor part
//! `F_{alpha j}(x) = eps C_{alpha j} phi_{a-1}(x)` drawn from one analytic
//! family. Profiles are normalized at construction so that the envelopes
//! `|f| <= eps <x-c>^{-a}` and `|F| <= eps <x-c>^{-a+1}` hold with constant
//! one on the probe set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileFamily {
    Gaussian,
    CompactBump,
    PowerLaw,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForceSpec {
    pub n: usize,
    pub family: ProfileFamily,
    /// Amplitude `eps`.
    pub amplitude: f64,
    /// Decay exponent `a`; `f64::INFINITY` is allowed for the compactly
    /// supported and Gaussian families ("effectively infinite" decay).
    pub decay: f64,
    pub center: Vec<f64>,
    /// Width (Gaussian), support radius (bump) or decay length (power law).
    pub radius: f64,
    /// When set, the scalar profile is replaced by its derivative along this
    /// axis; this makes the force mean-free for the even base profiles.
    #[serde(default)]
    pub derivative_axis: Option<usize>,
    /// Coefficients of the vector part, length `n` (empty means zero).
    #[serde(default)]
    pub f_coeffs: Vec<f64>,
    /// Coefficients of the tensor part, row-major `(alpha, j)`, length `n^2`
    /// (empty means zero).
    #[serde(default)]
    pub tensor_coeffs: Vec<f64>,
    /// Profile normalization fixed at construction; see [`ForceSpec::new`].
    #[serde(default = "one")]
    pub profile_norm: f64,
}

fn one() -> f64 {
    1.0
}

impl ForceSpec {
    /// Validates and normalizes the spec so that the stated envelopes hold
    /// with constant one over a deterministic probe set.
    pub fn new(
        n: usize,
        family: ProfileFamily,
        amplitude: f64,
        decay: f64,
        center: Vec<f64>,
        radius: f64,
        derivative_axis: Option<usize>,
        f_coeffs: Vec<f64>,
        tensor_coeffs: Vec<f64>,
    ) -> Result<Self> {
        if center.len() != n {
            return Err(Error::InvalidConfig(format!(
                "center has length {}, expected {n}",
                center.len()
            )));
        }
        if !f_coeffs.is_empty() && f_coeffs.len() != n {
            return Err(Error::InvalidConfig(format!(
                "f_coeffs has length {}, expected {n} or 0",
                f_coeffs.len()
            )));
        }
        if !tensor_coeffs.is_empty() && tensor_coeffs.len() != n * n {
            return Err(Error::InvalidConfig(format!(
                "tensor_coeffs has length {}, expected {} or 0",
                tensor_coeffs.len(),
                n * n
            )));
        }
        if radius <= 0.0 {
            return Err(Error::InvalidConfig("radius must be positive".into()));
        }
        if matches!(family, ProfileFamily::PowerLaw) && !decay.is_finite() {
            return Err(Error::InvalidConfig(
                "power-law family needs a finite decay exponent".into(),
            ));
        }
        if let Some(axis) = derivative_axis {
            if axis >= n {
                return Err(Error::InvalidConfig(format!(
                    "derivative axis {axis} out of range for n = {n}"
                )));
            }
        }
        let mut spec = Self {
            n,
            family,
            amplitude,
            decay,
            center,
            radius,
            derivative_axis,
            f_coeffs,
            tensor_coeffs,
            profile_norm: 1.0,
        };
        spec.profile_norm = spec.calibrate_norm();
        Ok(spec)
    }

    /// Compact bump of unit mass supported in `B_radius(center)`.
    pub fn unit_bump(n: usize, center: Vec<f64>, radius: f64, coeffs: Vec<f64>) -> Result<Self> {
        let mut spec = Self::new(
            n,
            ProfileFamily::CompactBump,
            1.0,
            f64::INFINITY,
            center,
            radius,
            None,
            coeffs,
            Vec::new(),
        )?;
        // rescale so the profile alone has unit mass
        spec.profile_norm = spec.profile_mass();
        Ok(spec)
    }

    /// Integral of the scalar profile over `R^n` by radial quadrature.
    pub fn profile_mass(&self) -> f64 {
        let n = self.n;
        let sphere = crate::dim::unit_ball_volume(n) * n as f64;
        let rule = crate::quadrature::GaussRule::new(32);
        let (lo, hi) = match self.family {
            ProfileFamily::CompactBump => (0.0, self.radius),
            _ => (0.0, 40.0 * self.radius.max(1.0)),
        };
        let mut acc = 0.0;
        let cells = 512;
        let dr = (hi - lo) / cells as f64;
        for c in 0..cells {
            let a = lo + c as f64 * dr;
            for (g, w) in rule.nodes.iter().zip(&rule.weights) {
                let r = a + 0.5 * (g + 1.0) * dr;
                let mut x = self.center.clone();
                x[0] += r;
                acc += w * 0.5 * dr * self.scalar_profile(&x, self.decay) * r.powi(n as i32 - 1);
            }
        }
        acc * sphere
    }

    /// Raw (unnormalized) scalar profile with decay exponent `a_eff`.
    fn scalar_profile(&self, x: &[f64], a_eff: f64) -> f64 {
        let mut d2 = 0.0;
        for (xi, ci) in x.iter().zip(&self.center) {
            d2 += (xi - ci) * (xi - ci);
        }
        let base = match self.family {
            ProfileFamily::Gaussian => (-d2 / (self.radius * self.radius)).exp(),
            ProfileFamily::CompactBump => {
                let rho2 = d2 / (self.radius * self.radius);
                if rho2 >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - rho2)).exp()
                }
            }
            ProfileFamily::PowerLaw => {
                (1.0 + d2 / (self.radius * self.radius)).powf(-0.5 * a_eff)
            }
        };
        match self.derivative_axis {
            None => base,
            Some(axis) => {
                let t = x[axis] - self.center[axis];
                match self.family {
                    ProfileFamily::Gaussian => {
                        -2.0 * t / (self.radius * self.radius) * base
                    }
                    ProfileFamily::CompactBump => {
                        let rho2 = d2 / (self.radius * self.radius);
                        if rho2 >= 1.0 {
                            0.0
                        } else {
                            let du = 1.0 - rho2;
                            -2.0 * t / (self.radius * self.radius) / (du * du) * base
                        }
                    }
                    ProfileFamily::PowerLaw => {
                        let u = 1.0 + d2 / (self.radius * self.radius);
                        -a_eff * t / (self.radius * self.radius) * u.powf(-0.5 * a_eff - 1.0)
                    }
                }
            }
        }
    }

    /// Deterministic envelope calibration:
    /// `sup |profile(x)| <x - c>^{a}` over radial probes.
    fn calibrate_norm(&self) -> f64 {
        let mut sup: f64 = 0.0;
        let probes = 400;
        let reach = match self.family {
            ProfileFamily::CompactBump => self.radius * 1.05,
            _ => 50.0 * self.radius.max(1.0),
        };
        let a = if self.decay.is_finite() {
            self.decay
        } else {
            0.0
        };
        sup = sup.max(self.scalar_profile(&self.center, self.decay).abs());
        for axis in 0..self.n {
            for k in 0..probes {
                for sign in [-1.0, 1.0] {
                    let r = reach * (k as f64 + 0.5) / probes as f64;
                    let mut x = self.center.clone();
                    x[axis] += sign * r;
                    let shifted: Vec<f64> =
                        x.iter().zip(&self.center).map(|(a, b)| a - b).collect();
                    let val = self.scalar_profile(&x, self.decay).abs()
                        * geom::bracket(&shifted).powf(a);
                    sup = sup.max(val);
                }
            }
        }
        if sup > 0.0 {
            sup
        } else {
            1.0
        }
    }

    pub fn has_f(&self) -> bool {
        self.f_coeffs.iter().any(|&c| c != 0.0)
    }

    pub fn has_tensor(&self) -> bool {
        self.tensor_coeffs.iter().any(|&c| c != 0.0)
    }

    /// Normalized scalar profile with the `f` decay exponent.
    pub fn profile_f(&self, x: &[f64]) -> f64 {
        self.scalar_profile(x, self.decay) / self.profile_norm
    }

    /// Normalized scalar profile with the `F` decay exponent `a - 1`.
    pub fn profile_tensor(&self, x: &[f64]) -> f64 {
        let a_eff = if self.decay.is_finite() {
            self.decay - 1.0
        } else {
            self.decay
        };
        self.scalar_profile(x, a_eff) / self.profile_norm
    }

    /// Vector part `f(x)`.
    pub fn f_at(&self, x: &[f64]) -> Vec<f64> {
        if !self.has_f() {
            return vec![0.0; self.n];
        }
        let p = self.amplitude * self.profile_f(x);
        self.f_coeffs.iter().map(|c| c * p).collect()
    }

    /// Tensor part `F(x)`, row-major `(alpha, j)`.
    pub fn tensor_at(&self, x: &[f64]) -> Vec<f64> {
        if !self.has_tensor() {
            return vec![0.0; self.n * self.n];
        }
        let p = self.amplitude * self.profile_tensor(x);
        self.tensor_coeffs.iter().map(|c| c * p).collect()
    }

    /// Radius outside of which the force vanishes (compact family only).
    pub fn support_radius(&self) -> Option<f64> {
        match self.family {
            ProfileFamily::CompactBump => {
                let c = geom::norm(&self.center);
                Some(c + self.radius)
            }
            _ => None,
        }
    }

    /// Sampled envelope check: returns the supremum of
    /// `|f(x)| <x-c>^a / eps` and `|F(x)| <x-c>^{a-1} / eps` over the probe
    /// rays. Both should be at most `max(|c_f|, |C_F|)` after calibration.
    pub fn envelope_sup(&self) -> (f64, f64) {
        let mut sup_f: f64 = 0.0;
        let mut sup_t: f64 = 0.0;
        let probes = 200;
        let reach = match self.family {
            ProfileFamily::CompactBump => self.radius * 1.1,
            _ => 30.0 * self.radius.max(1.0),
        };
        let a = if self.decay.is_finite() {
            self.decay
        } else {
            0.0
        };
        for axis in 0..self.n {
            for k in 0..probes {
                let r = reach * (k as f64 + 0.5) / probes as f64;
                let mut x = self.center.clone();
                x[axis] += r;
                let shifted: Vec<f64> = x.iter().zip(&self.center).map(|(p, c)| p - c).collect();
                let br = geom::bracket(&shifted);
                let fv = geom::norm(&self.f_at(&x)) * br.powf(a) / self.amplitude;
                let tv = geom::norm(&self.tensor_at(&x)) * br.powf((a - 1.0).max(0.0))
                    / self.amplitude;
                sup_f = sup_f.max(fv);
                sup_t = sup_t.max(tv);
            }
        }
        (sup_f, sup_t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_holds_after_calibration() {
        let spec = ForceSpec::new(
            3,
            ProfileFamily::PowerLaw,
            0.5,
            4.5,
            vec![0.0, 0.0, 1.0],
            1.0,
            None,
            vec![1.0, 0.0, 0.0],
            Vec::new(),
        )
        .unwrap();
        let (sf, _) = spec.envelope_sup();
        assert!(sf <= 1.0 + 1e-12, "envelope constant {sf}");
    }

    #[test]
    fn unit_bump_has_unit_mass() {
        let spec = ForceSpec::unit_bump(3, vec![0.0, 0.0, 1.0], 0.8, vec![1.0, 0.0, 0.0]).unwrap();
        // independent route: polar quadrature of the normalized profile
        let cfg = crate::quadrature::QuadConfig {
            order: 10,
            base_level: 1,
            map_scale: 2.0,
            grades: 8,
            tol: crate::quadrature::Tolerance {
                rel: 3e-6,
                abs: 1e-9,
                max_refinements: 4,
            },
        };
        let f = |y: &[f64]| vec![spec.profile_f(y)];
        let (mass, _) = crate::quadrature::integrate_radial(&f, 1, 3, false, &cfg).unwrap();
        assert!((mass[0] - 1.0).abs() < 1e-5, "mass {}", mass[0]);
    }

    #[test]
    fn compact_bump_is_supported() {
        let spec = ForceSpec::unit_bump(3, vec![0.0, 0.0, 1.0], 0.5, vec![1.0, 0.0, 0.0]).unwrap();
        let inside = spec.f_at(&[0.1, 0.0, 1.0]);
        let outside = spec.f_at(&[2.0, 0.0, 1.0]);
        assert!(inside[0] > 0.0);
        assert_eq!(outside[0], 0.0);
        assert_eq!(spec.support_radius(), Some(1.5));
    }

    #[test]
    fn derivative_profile_is_odd() {
        let spec = ForceSpec::new(
            3,
            ProfileFamily::Gaussian,
            1.0,
            f64::INFINITY,
            vec![0.0; 3],
            1.0,
            Some(0),
            vec![0.0, 1.0, 0.0],
            Vec::new(),
        )
        .unwrap();
        let plus = spec.f_at(&[0.7, 0.2, 0.1]);
        let minus = spec.f_at(&[-0.7, 0.2, 0.1]);
        assert!((plus[1] + minus[1]).abs() < 1e-15);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(ForceSpec::new(
            3,
            ProfileFamily::PowerLaw,
            1.0,
            f64::INFINITY,
            vec![0.0; 3],
            1.0,
            None,
            vec![],
            vec![],
        )
        .is_err());
        assert!(ForceSpec::new(
            3,
            ProfileFamily::Gaussian,
            1.0,
            5.0,
            vec![0.0; 2],
            1.0,
            None,
            vec![],
            vec![],
        )
        .is_err());
    }
}
