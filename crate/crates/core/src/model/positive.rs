//! Positive jumps with a rational Laplace transform Q(r) / prod (alpha_i + r)^{n_i}.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::poly::Poly;
use crate::numeric::series::Series;
use crate::numeric::special::factorial;
use crate::numeric::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pole {
    pub alpha: f64,
    pub n: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RationalJumpPart {
    pub rate: f64,
    pub poles: Vec<Pole>,
    /// Coefficients of Q in ascending powers.
    pub numerator: Vec<f64>,
}

/// One term c x^{k-1} e^{-alpha x} / (k-1)! of the partial-fraction density.
#[derive(Debug, Clone, Copy)]
pub struct ErlangTerm {
    pub alpha: f64,
    pub k: u32,
    pub coef: f64,
}

impl RationalJumpPart {
    pub fn new(rate: f64, poles: Vec<Pole>, numerator: Vec<f64>) -> Self {
        RationalJumpPart { rate, poles, numerator }
    }

    pub fn exponential(rate: f64, alpha: f64) -> Self {
        Self::new(rate, vec![Pole { alpha, n: 1 }], vec![alpha])
    }

    pub fn erlang(rate: f64, alpha: f64, n: u32) -> Self {
        Self::new(rate, vec![Pole { alpha, n }], vec![alpha.powi(n as i32)])
    }

    /// Mixture sum w_i Exp(alpha_i); rates must be distinct.
    pub fn hyperexponential(rate: f64, parts: &[(f64, f64)]) -> Self {
        let mut parts = parts.to_vec();
        parts.sort_by(|a, b| a.1.total_cmp(&b.1));
        let mut q = Poly::constant(0.0);
        for (i, &(w, a)) in parts.iter().enumerate() {
            let mut term = Poly::constant(w * a);
            for (l, &(_, b)) in parts.iter().enumerate() {
                if l != i {
                    term = term.mul(&Poly::linear(b, 1.0));
                }
            }
            q = q.add(&term);
        }
        let poles = parts.iter().map(|&(_, a)| Pole { alpha: a, n: 1 }).collect();
        Self::new(rate, poles, q.coeffs.iter().map(|c| c.re).collect())
    }

    pub fn m(&self) -> usize {
        self.poles.iter().map(|p| p.n as usize).sum()
    }

    pub fn alpha_min(&self) -> f64 {
        self.poles.first().map_or(f64::INFINITY, |p| p.alpha)
    }

    pub fn alpha_max(&self) -> f64 {
        self.poles.last().map_or(0.0, |p| p.alpha)
    }

    pub fn q_poly(&self) -> Poly {
        Poly::from_real(&self.numerator)
    }

    /// P1(r) = prod (alpha_l - r)^{n_l}.
    pub fn p1_poly(&self) -> Poly {
        self.poles
            .iter()
            .fold(Poly::constant(1.0), |acc, p| acc.mul(&Poly::linear(p.alpha, -1.0).pow(p.n)))
    }

    /// prod alpha^n
    pub fn alpha_product(&self) -> f64 {
        self.poles.iter().map(|p| p.alpha.powi(p.n as i32)).product()
    }

    pub fn check_pole(&self, r: C64) -> Result<()> {
        for p in &self.poles {
            if (r - p.alpha).norm() < 1e-9 * p.alpha {
                return Err(Error::PoleProximity { r: r.to_string(), alpha: p.alpha });
            }
        }
        Ok(())
    }

    /// Laplace transform of f1 at r.
    pub fn laplace(&self, r: C64) -> C64 {
        let den: C64 = self.poles.iter().map(|p| (r + p.alpha).powi(p.n as i32)).product();
        self.q_poly().eval(r) / den
    }

    /// E[e^{rY}] = Q(-r) / P1(r), finite for Re r < alpha_1.
    pub fn mgf(&self, r: C64) -> C64 {
        self.q_poly().eval(-r) / self.p1_poly().eval(r)
    }

    pub fn mean(&self) -> f64 {
        let q0 = self.numerator.first().copied().unwrap_or(0.0);
        let q1 = self.numerator.get(1).copied().unwrap_or(0.0);
        let d0 = self.alpha_product();
        let dlog: f64 = self.poles.iter().map(|p| p.n as f64 / p.alpha).sum();
        q0 / d0 * dlog - q1 / d0
    }

    /// Partial fractions of the transform, giving f1 as a signed Erlang mix.
    pub fn partial_fractions(&self) -> Vec<ErlangTerm> {
        let q = self.q_poly();
        let mut out = Vec::new();
        for (i, p) in self.poles.iter().enumerate() {
            let s0 = C64::new(-p.alpha, 0.0);
            let order = p.n as usize - 1;
            let mut g = Series::from_poly(&q, s0, order);
            for (l, o) in self.poles.iter().enumerate() {
                if l != i {
                    // (alpha_l + s)^{-n} = (-1)^n (b - s)^{-n} with b = -alpha_l
                    let f = Series::inv_linear_pow(C64::new(-o.alpha, 0.0), s0, o.n, order);
                    let sign = if o.n % 2 == 0 { 1.0 } else { -1.0 };
                    g = g.mul(&Series { c: f.c.iter().map(|&c| c * sign).collect() });
                }
            }
            for j in 0..=order {
                out.push(ErlangTerm { alpha: p.alpha, k: p.n - j as u32, coef: g.c[j].re });
            }
        }
        out
    }

    pub fn density(&self, x: f64) -> f64 {
        self.partial_fractions()
            .iter()
            .map(|t| t.coef * x.powi(t.k as i32 - 1) * (-t.alpha * x).exp() / factorial(t.k as usize - 1))
            .sum()
    }

    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            out.push(format!("positive jump rate must be positive, got {}", self.rate));
        }
        if self.poles.is_empty() {
            out.push("at least one pole is required".into());
        }
        for w in self.poles.windows(2) {
            if w[0].alpha >= w[1].alpha {
                out.push(format!(
                    "poles must be strictly increasing: alpha = {} is followed by {}",
                    w[0].alpha, w[1].alpha
                ));
            }
        }
        for p in &self.poles {
            if !(p.alpha > 0.0 && p.alpha.is_finite()) {
                out.push(format!("pole alpha = {} must be positive", p.alpha));
            }
            if p.n == 0 {
                out.push(format!("pole alpha = {} has order 0", p.alpha));
            }
        }
        let m = self.m();
        let deg = self.numerator.iter().rposition(|&c| c != 0.0).unwrap_or(0);
        if self.numerator.is_empty() {
            out.push("numerator Q is empty".into());
        } else if deg + 1 > m.max(1) {
            out.push(format!("numerator degree {deg} exceeds m - 1 = {}", m as i64 - 1));
        }
        if out.is_empty() {
            let prod = self.alpha_product();
            let q0 = self.numerator[0];
            if (q0 - prod).abs() > 1e-9 * prod {
                out.push(format!("normalization: Q(0) = {q0} differs from prod alpha^n = {prod}"));
            }
        }
        out
    }

    /// Non-fatal nonnegativity check of f1 on a log-spaced grid.
    pub fn density_warnings(&self) -> Vec<String> {
        let hi = 50.0 / self.alpha_min();
        let lo = 1e-6 * hi;
        let scale = self.density(0.0).abs().max(self.alpha_min());
        (0..512)
            .filter_map(|i| {
                let x = lo * (hi / lo).powf(i as f64 / 511.0);
                let f = self.density(x);
                (f < -1e-10 * scale).then(|| format!("f1({x:.4e}) = {f:.3e} is negative"))
            })
            .take(1)
            .collect()
    }
}
