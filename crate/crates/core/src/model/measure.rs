//! Jump measures on (0, inf) and the integral transforms built on them.
//!
//! A measure here is either a Levy measure or a tail measure V(x)dx. Every
//! measure exposes its Bernstein function B(s) = int (1 - e^{-sx}) mu(dx),
//! which is enough to express all Laplace transforms of the tilted tail
//! operators in closed form.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numeric::quad::{integrate, integrate_to_infinity};
use crate::numeric::special::{factorial, gamma};
use crate::numeric::C64;

const QUAD_ABS: f64 = 1e-14;
const QUAD_REL: f64 = 1e-12;

pub trait JumpMeasure: Send + Sync {
    fn density(&self, x: f64) -> f64;
    /// mu((u, inf)), possibly infinite.
    fn tail(&self, u: f64) -> f64;
    fn total_mass(&self) -> Option<f64>;
    fn bernstein(&self, s: C64) -> C64;
    /// k-th derivative of the Bernstein function, k >= 1.
    fn bernstein_deriv(&self, s: C64, k: usize) -> C64;
    /// T_{s,a} mu(u) = int_u^inf (y-u)^a e^{-s(y-u)} mu(dy).
    fn t_op(&self, s: C64, a: usize, u: f64) -> Result<C64>;

    /// int_u^inf T_{s,a} mu(x) dx.
    fn t_op_tail(&self, s: C64, a: usize, u: f64) -> Result<C64> {
        let tail = self.tail(u);
        if !tail.is_finite() {
            return Err(Error::Divergent(format!("measure tail at u = {u}")));
        }
        let mut acc = C64::new(tail, 0.0);
        for k in 0..=a {
            acc -= s.powi(k as i32) / factorial(k) * self.t_op(s, k, u)?;
        }
        Ok(acc * factorial(a) / s.powi(a as i32 + 1))
    }

    /// Laplace transform at r of u -> T_{s,a} mu(u).
    fn t_hat(&self, s: C64, a: usize, r: C64) -> C64 {
        let h = r - s;
        let fa = factorial(a);
        if h.norm() < 0.1 * s.norm() {
            let mut acc = C64::new(0.0, 0.0);
            let mut hp = C64::new(1.0, 0.0);
            for k in (a + 1)..(a + 40) {
                let term = self.bernstein_deriv(s, k) * hp / factorial(k);
                acc += term;
                if term.norm() < 1e-17 * acc.norm() {
                    break;
                }
                hp *= h;
            }
            let sign = if a % 2 == 0 { 1.0 } else { -1.0 };
            return acc * fa * sign;
        }
        let mut br = self.bernstein(s) - self.bernstein(r);
        let mut hp = C64::new(1.0, 0.0);
        for k in 1..=a {
            hp *= h;
            br += self.bernstein_deriv(s, k) * hp / factorial(k);
        }
        br * fa / (-h).powi(a as i32 + 1)
    }
}

/// Finite mixture of exponential densities: sum m_i r_i e^{-r_i x} dx.
#[derive(Debug, Clone)]
pub struct ExpMixture {
    pub parts: Vec<(f64, f64)>,
}

impl JumpMeasure for ExpMixture {
    fn density(&self, x: f64) -> f64 {
        self.parts.iter().map(|&(m, r)| m * r * (-r * x).exp()).sum()
    }
    fn tail(&self, u: f64) -> f64 {
        self.parts.iter().map(|&(m, r)| m * (-r * u).exp()).sum()
    }
    fn total_mass(&self) -> Option<f64> {
        Some(self.parts.iter().map(|p| p.0).sum())
    }
    fn bernstein(&self, s: C64) -> C64 {
        self.parts.iter().map(|&(m, r)| m * s / (r + s)).sum()
    }
    fn bernstein_deriv(&self, s: C64, k: usize) -> C64 {
        // d^k/ds^k [-m r/(r+s)] = -m r (-1)^k k! (r+s)^{-k-1}
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        self.parts
            .iter()
            .map(|&(m, r)| sign * m * r * factorial(k) / (r + s).powi(k as i32 + 1))
            .sum()
    }
    fn t_op(&self, s: C64, a: usize, u: f64) -> Result<C64> {
        Ok(self
            .parts
            .iter()
            .map(|&(m, r)| m * r * (-r * u).exp() * factorial(a) / (s + r).powi(a as i32 + 1))
            .sum())
    }
}

/// Power-law density C x^{-1-rho} with rho in (0, 1).
#[derive(Debug, Clone)]
pub struct PowerLaw {
    pub coef: f64,
    pub rho: f64,
}

impl PowerLaw {
    fn scale(&self) -> f64 {
        self.coef * gamma(1.0 - self.rho) / self.rho
    }
}

/// Rotation angle that makes s e^{i phi} real, clipped to the allowed sector.
fn rotation(s: C64, limit: f64) -> f64 {
    (-s.arg()).clamp(-limit, limit)
}

impl JumpMeasure for PowerLaw {
    fn density(&self, x: f64) -> f64 {
        self.coef * x.powf(-1.0 - self.rho)
    }
    fn tail(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return f64::INFINITY;
        }
        self.coef * u.powf(-self.rho) / self.rho
    }
    fn total_mass(&self) -> Option<f64> {
        None
    }
    fn bernstein(&self, s: C64) -> C64 {
        s.powf(self.rho) * self.scale()
    }
    fn bernstein_deriv(&self, s: C64, k: usize) -> C64 {
        let falling: f64 = (0..k).map(|i| self.rho - i as f64).product();
        s.powf(self.rho - k as f64) * (self.scale() * falling)
    }
    fn t_op(&self, s: C64, a: usize, u: f64) -> Result<C64> {
        if u <= 0.0 {
            if a == 0 {
                return Err(Error::Divergent("T_s of a power-law measure at 0".into()));
            }
            return Ok(s.powf(self.rho - a as f64) * (self.coef * gamma(a as f64 - self.rho)));
        }
        // z = u w on the ray w = t e^{i phi}
        let phi = rotation(s, 0.49 * PI);
        let e = C64::from_polar(1.0, phi);
        let su = s * u;
        let x0 = (1.0 / su.norm()).min(1e3);
        let rho = self.rho;
        let r = integrate_to_infinity(
            |t: f64| {
                let w = e * t;
                w.powi(a as i32) * (-su * w).exp() * (C64::new(1.0, 0.0) + w).powf(-1.0 - rho)
            },
            0.0,
            x0,
            0.0,
            QUAD_REL,
        );
        Ok(r.value * e * (self.coef * u.powf(a as f64 - rho)))
    }
}

type ComplexFn = Arc<dyn Fn(C64) -> C64 + Send + Sync>;
type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Measure with a density known pointwise; transforms by quadrature along a
/// ray rotated into the sector where the density continues analytically.
#[derive(Clone)]
pub struct QuadratureMeasure {
    pub density_r: RealFn,
    pub density_c: Option<ComplexFn>,
    pub tail_fn: RealFn,
    pub mass: Option<f64>,
    pub sector: f64,
    pub scale: f64,
}

impl QuadratureMeasure {
    fn density_at(&self, z: C64) -> C64 {
        match &self.density_c {
            Some(f) => f(z),
            None => C64::new((self.density_r)(z.re), 0.0),
        }
    }

    fn angle(&self, s: C64) -> f64 {
        if self.density_c.is_some() {
            rotation(s, self.sector)
        } else {
            0.0
        }
    }

    /// int_0^inf g(z) mu(u + z) dz along the rotated ray.
    fn ray_integral<G: Fn(C64) -> C64>(&self, s: C64, u: f64, g: G) -> C64 {
        let phi = self.angle(s);
        let e = C64::from_polar(1.0, phi);
        let x0 = self.scale.max(1e-3 / s.norm().max(1e-300)).min(1e4 * self.scale);
        let r = integrate_to_infinity(
            |t: f64| {
                let z = e * t;
                g(z) * self.density_at(C64::new(u, 0.0) + z)
            },
            0.0,
            x0,
            QUAD_ABS,
            QUAD_REL,
        );
        r.value * e
    }
}

impl JumpMeasure for QuadratureMeasure {
    fn density(&self, x: f64) -> f64 {
        (self.density_r)(x)
    }
    fn tail(&self, u: f64) -> f64 {
        (self.tail_fn)(u)
    }
    fn total_mass(&self) -> Option<f64> {
        self.mass
    }
    fn bernstein(&self, s: C64) -> C64 {
        self.ray_integral(s, 0.0, |z| C64::new(1.0, 0.0) - (-s * z).exp())
    }
    fn bernstein_deriv(&self, s: C64, k: usize) -> C64 {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        self.ray_integral(s, 0.0, |z| z.powi(k as i32) * (-s * z).exp()) * sign
    }
    fn t_op(&self, s: C64, a: usize, u: f64) -> Result<C64> {
        Ok(self.ray_integral(s, u, |z| z.powi(a as i32) * (-s * z).exp()))
    }
}

/// Upper tail int_u^inf g(x) dx of a real function by quadrature.
pub fn tail_integral(g: &(dyn Fn(f64) -> f64 + Send + Sync), u: f64, scale: f64) -> f64 {
    integrate_to_infinity(|x| g(x), u, scale, QUAD_ABS, QUAD_REL).value
}

/// Finite-interval helper used by families without closed forms.
pub fn finite_integral(g: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    integrate(g, a, b, QUAD_ABS, QUAD_REL).value
}
