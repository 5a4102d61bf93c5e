//! Negative-jump component S: parametric families plus a custom hook.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numeric::poly::Poly;
use crate::numeric::special::gamma;
use crate::numeric::C64;

use super::measure::{tail_integral, ExpMixture, JumpMeasure, PowerLaw, QuadratureMeasure};

/// User-supplied family. `tail` is the Levy tail V(x) = nu((x, inf)) and
/// `exponent` is G_S for subordinators or Psi_S (with h = 1) otherwise.
#[derive(Clone)]
pub struct CustomFamily {
    pub name: String,
    pub tail: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub exponent: Arc<dyn Fn(C64) -> C64 + Send + Sync>,
    pub subordinator: bool,
    pub compound_poisson: bool,
    /// Mean jump per unit time; None when infinite.
    pub mean: Option<f64>,
    pub length_scale: f64,
}

impl fmt::Debug for CustomFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomFamily")
            .field("name", &self.name)
            .field("subordinator", &self.subordinator)
            .field("compound_poisson", &self.compound_poisson)
            .field("mean", &self.mean)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub enum NegativeJumpPart {
    CompoundPoissonExp { rate: f64, p: f64 },
    CompoundPoissonMixExp { rate: f64, parts: Vec<(f64, f64)> },
    CompoundPoissonBurr { rate: f64, theta: f64, c_shape: f64, xi: f64 },
    StableSubordinator { xi: f64 },
    SpectrallyPositiveStable { xi: f64 },
    Custom(CustomFamily),
}

impl NegativeJumpPart {
    pub fn name(&self) -> &str {
        match self {
            NegativeJumpPart::CompoundPoissonExp { .. } => "cp_exp",
            NegativeJumpPart::CompoundPoissonMixExp { .. } => "cp_mix_exp",
            NegativeJumpPart::CompoundPoissonBurr { .. } => "cp_burr",
            NegativeJumpPart::StableSubordinator { .. } => "stable_subordinator",
            NegativeJumpPart::SpectrallyPositiveStable { .. } => "spectrally_positive_stable",
            NegativeJumpPart::Custom(c) => &c.name,
        }
    }

    pub fn is_subordinator(&self) -> bool {
        match self {
            NegativeJumpPart::SpectrallyPositiveStable { .. } => false,
            NegativeJumpPart::Custom(c) => c.subordinator,
            _ => true,
        }
    }

    pub fn is_compound_poisson(&self) -> bool {
        match self {
            NegativeJumpPart::CompoundPoissonExp { .. }
            | NegativeJumpPart::CompoundPoissonMixExp { .. }
            | NegativeJumpPart::CompoundPoissonBurr { .. } => true,
            NegativeJumpPart::Custom(c) => c.compound_poisson,
            _ => false,
        }
    }

    /// Jump rate for compound Poisson families.
    pub fn rate(&self) -> Option<f64> {
        match self {
            NegativeJumpPart::CompoundPoissonExp { rate, .. }
            | NegativeJumpPart::CompoundPoissonMixExp { rate, .. }
            | NegativeJumpPart::CompoundPoissonBurr { rate, .. } => Some(*rate),
            _ => None,
        }
    }

    /// E[S(1)]; infinite when the jump mean diverges.
    pub fn mean(&self) -> f64 {
        match self {
            NegativeJumpPart::CompoundPoissonExp { rate, p } => rate / p,
            NegativeJumpPart::CompoundPoissonMixExp { rate, parts } => {
                rate * parts.iter().map(|&(w, p)| w / p).sum::<f64>()
            }
            NegativeJumpPart::CompoundPoissonBurr { rate, theta, c_shape, xi } => {
                if c_shape * xi <= 1.0 {
                    f64::INFINITY
                } else {
                    rate * burr_mean(*theta, *c_shape, *xi)
                }
            }
            NegativeJumpPart::StableSubordinator { .. } => f64::INFINITY,
            NegativeJumpPart::SpectrallyPositiveStable { .. } => 0.0,
            NegativeJumpPart::Custom(c) => c.mean.unwrap_or(f64::INFINITY),
        }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        let pos = |name: &str, v: f64, out: &mut Vec<String>| {
            if !(v > 0.0 && v.is_finite()) {
                out.push(format!("{name} must be positive, got {v}"));
            }
        };
        match self {
            NegativeJumpPart::CompoundPoissonExp { rate, p } => {
                pos("negative jump rate", *rate, &mut out);
                pos("p", *p, &mut out);
            }
            NegativeJumpPart::CompoundPoissonMixExp { rate, parts } => {
                pos("negative jump rate", *rate, &mut out);
                if parts.is_empty() {
                    out.push("mixture needs at least one component".into());
                }
                for &(w, p) in parts {
                    pos("mixture weight", w, &mut out);
                    pos("mixture rate", p, &mut out);
                }
                let total: f64 = parts.iter().map(|x| x.0).sum();
                if (total - 1.0).abs() > 1e-9 {
                    out.push(format!("mixture weights sum to {total}, expected 1"));
                }
            }
            NegativeJumpPart::CompoundPoissonBurr { rate, theta, c_shape, xi } => {
                pos("negative jump rate", *rate, &mut out);
                pos("theta", *theta, &mut out);
                pos("c_shape", *c_shape, &mut out);
                pos("xi", *xi, &mut out);
            }
            NegativeJumpPart::StableSubordinator { xi } => {
                if !(*xi > 0.0 && *xi < 1.0) {
                    out.push(format!("stable subordinator index xi = {xi} must lie in (0, 1)"));
                }
            }
            NegativeJumpPart::SpectrallyPositiveStable { xi } => {
                if !(*xi > 1.0 && *xi < 2.0) {
                    out.push(format!("spectrally positive stable index xi = {xi} must lie in (1, 2)"));
                }
            }
            NegativeJumpPart::Custom(c) => {
                pos("custom length scale", c.length_scale, &mut out);
            }
        }
        out
    }

    /// The term subtracted in Psi_X: G_S for subordinators, Psi_S otherwise.
    pub fn exponent(&self, r: C64) -> C64 {
        match self {
            NegativeJumpPart::CompoundPoissonExp { rate, p } => r * *rate / (r + *p),
            NegativeJumpPart::CompoundPoissonMixExp { rate, parts } => {
                parts.iter().map(|&(w, p)| r * (rate * w) / (r + p)).sum()
            }
            NegativeJumpPart::CompoundPoissonBurr { .. } => self.levy_measure().unwrap().bernstein(r),
            NegativeJumpPart::StableSubordinator { xi } => r.powf(*xi),
            NegativeJumpPart::SpectrallyPositiveStable { xi } => -r.powf(*xi),
            NegativeJumpPart::Custom(c) => (c.exponent)(r),
        }
    }

    pub fn exponent_deriv(&self, r: C64) -> C64 {
        match self {
            NegativeJumpPart::CompoundPoissonExp { rate, p } => *rate * *p / (r + *p).powi(2),
            NegativeJumpPart::CompoundPoissonMixExp { rate, parts } => {
                parts.iter().map(|&(w, p)| rate * w * p / (r + p).powi(2)).sum()
            }
            NegativeJumpPart::CompoundPoissonBurr { .. } => {
                self.levy_measure().unwrap().bernstein_deriv(r, 1)
            }
            NegativeJumpPart::StableSubordinator { xi } => r.powf(xi - 1.0) * *xi,
            NegativeJumpPart::SpectrallyPositiveStable { xi } => -r.powf(xi - 1.0) * *xi,
            NegativeJumpPart::Custom(c) => {
                let h = 1e-6 * (1.0 + r.norm());
                ((c.exponent)(r + h) - (c.exponent)(r - h)) / (2.0 * h)
            }
        }
    }

    /// Psi_S with truncation h = 1: subordinators are compensated by their mean.
    pub fn compensated_exponent(&self, r: C64) -> C64 {
        if self.is_subordinator() {
            self.exponent(r) - r * self.mean()
        } else {
            self.exponent(r)
        }
    }

    /// Exponent as numerator / denominator polynomials, when rational.
    pub fn rational_exponent(&self) -> Option<(Poly, Poly)> {
        let parts: Vec<(f64, f64)> = match self {
            NegativeJumpPart::CompoundPoissonExp { rate, p } => vec![(*rate, *p)],
            NegativeJumpPart::CompoundPoissonMixExp { rate, parts } => {
                parts.iter().map(|&(w, p)| (rate * w, p)).collect()
            }
            _ => return None,
        };
        let den = parts.iter().fold(Poly::constant(1.0), |acc, &(_, p)| acc.mul(&Poly::linear(p, 1.0)));
        let mut num = Poly::constant(0.0);
        for (i, &(m, _)) in parts.iter().enumerate() {
            let mut term = Poly::linear(0.0, m);
            for (l, &(_, p)) in parts.iter().enumerate() {
                if l != i {
                    term = term.mul(&Poly::linear(p, 1.0));
                }
            }
            num = num.add(&term);
        }
        Some((num, den))
    }

    /// Whether the exponent continues analytically into Re r < 0.
    pub fn continues_left(&self) -> bool {
        !matches!(
            self,
            NegativeJumpPart::CompoundPoissonBurr { .. } | NegativeJumpPart::Custom(_)
        )
    }

    /// Density of the Levy measure.
    pub fn levy_density(&self, x: f64) -> f64 {
        match self {
            NegativeJumpPart::SpectrallyPositiveStable { xi } => {
                xi * (xi - 1.0) / gamma(2.0 - xi) * x.powf(-1.0 - xi)
            }
            NegativeJumpPart::Custom(c) => {
                let h = 1e-6 * x.max(1e-8);
                ((c.tail)(x - h) - (c.tail)(x + h)) / (2.0 * h)
            }
            _ => self.levy_measure().unwrap().density(x),
        }
    }

    /// V_S(x) = nu_S((x, inf)).
    pub fn levy_tail(&self, x: f64) -> f64 {
        match self {
            NegativeJumpPart::SpectrallyPositiveStable { xi } => (xi - 1.0) / gamma(2.0 - xi) * x.powf(-xi),
            NegativeJumpPart::Custom(c) => (c.tail)(x),
            _ => self.levy_measure().unwrap().tail(x),
        }
    }

    pub fn length_scale(&self) -> f64 {
        match self {
            NegativeJumpPart::CompoundPoissonExp { p, .. } => 1.0 / p,
            NegativeJumpPart::CompoundPoissonMixExp { parts, .. } => {
                parts.iter().map(|&(w, p)| w / p).sum()
            }
            NegativeJumpPart::CompoundPoissonBurr { theta, c_shape, .. } => theta.powf(1.0 / c_shape),
            NegativeJumpPart::Custom(c) => c.length_scale,
            _ => 1.0,
        }
    }

    /// Levy measure nu_S as a jump measure (subordinators only).
    pub fn levy_measure(&self) -> Result<Box<dyn JumpMeasure>> {
        match self {
            NegativeJumpPart::CompoundPoissonExp { rate, p } => {
                Ok(Box::new(ExpMixture { parts: vec![(*rate, *p)] }))
            }
            NegativeJumpPart::CompoundPoissonMixExp { rate, parts } => Ok(Box::new(ExpMixture {
                parts: parts.iter().map(|&(w, p)| (rate * w, p)).collect(),
            })),
            NegativeJumpPart::CompoundPoissonBurr { rate, theta, c_shape, xi } => {
                let (rate, theta, c, xi) = (*rate, *theta, *c_shape, *xi);
                Ok(Box::new(QuadratureMeasure {
                    density_r: Arc::new(move |x| rate * burr_density(x, theta, c, xi)),
                    density_c: Some(Arc::new(move |z| rate * burr_density_c(z, theta, c, xi))),
                    tail_fn: Arc::new(move |x| rate * burr_survival(x, theta, c, xi)),
                    mass: Some(rate),
                    sector: burr_sector(c),
                    scale: theta.powf(1.0 / c),
                }))
            }
            NegativeJumpPart::StableSubordinator { xi } => {
                Ok(Box::new(PowerLaw { coef: xi / gamma(1.0 - xi), rho: *xi }))
            }
            NegativeJumpPart::SpectrallyPositiveStable { .. } => Err(Error::Unsupported(
                "the spectrally positive stable Levy measure has no Bernstein function".into(),
            )),
            NegativeJumpPart::Custom(c) => {
                if !c.subordinator {
                    return Err(Error::Unsupported("custom family is not a subordinator".into()));
                }
                let tail = c.tail.clone();
                let tail2 = c.tail.clone();
                let mass = if c.compound_poisson { Some((c.tail)(0.0)) } else { None };
                Ok(Box::new(QuadratureMeasure {
                    density_r: Arc::new(move |x| {
                        let h = 1e-6 * x.max(1e-8);
                        (tail(x - h) - tail(x + h)) / (2.0 * h)
                    }),
                    density_c: None,
                    tail_fn: Arc::new(move |x| tail2(x)),
                    mass,
                    sector: 0.0,
                    scale: c.length_scale,
                }))
            }
        }
    }

    /// Tail measure V_S(x)dx, used in case C; requires a finite jump mean.
    pub fn tail_measure(&self) -> Result<Box<dyn JumpMeasure>> {
        match self {
            NegativeJumpPart::CompoundPoissonExp { rate, p } => {
                Ok(Box::new(ExpMixture { parts: vec![(rate / p, *p)] }))
            }
            NegativeJumpPart::CompoundPoissonMixExp { rate, parts } => Ok(Box::new(ExpMixture {
                parts: parts.iter().map(|&(w, p)| (rate * w / p, p)).collect(),
            })),
            NegativeJumpPart::SpectrallyPositiveStable { xi } => {
                Ok(Box::new(PowerLaw { coef: (xi - 1.0) / gamma(2.0 - xi), rho: xi - 1.0 }))
            }
            NegativeJumpPart::StableSubordinator { .. } => Err(Error::CaseAssumption(
                "a stable subordinator with index below 1 has infinite mean".into(),
            )),
            NegativeJumpPart::CompoundPoissonBurr { rate, theta, c_shape, xi } => {
                let (rate, theta, c, xi) = (*rate, *theta, *c_shape, *xi);
                if c * xi <= 1.0 {
                    return Err(Error::CaseAssumption(format!(
                        "Burr jumps need c_shape * xi > 1 for a finite mean, got {}",
                        c * xi
                    )));
                }
                let scale = theta.powf(1.0 / c);
                let surv = move |x: f64| rate * burr_survival(x, theta, c, xi);
                Ok(Box::new(QuadratureMeasure {
                    density_r: Arc::new(surv),
                    density_c: Some(Arc::new(move |z| rate * burr_survival_c(z, theta, c, xi))),
                    tail_fn: Arc::new(move |u| tail_integral(&surv, u, scale)),
                    mass: Some(rate * burr_mean(theta, c, xi)),
                    sector: burr_sector(c),
                    scale,
                }))
            }
            NegativeJumpPart::Custom(cf) => {
                if cf.mean.is_none() {
                    return Err(Error::CaseAssumption(format!(
                        "custom family {} has infinite mean",
                        cf.name
                    )));
                }
                let tail = cf.tail.clone();
                let tail2 = cf.tail.clone();
                let scale = cf.length_scale;
                Ok(Box::new(QuadratureMeasure {
                    density_r: Arc::new(move |x| tail(x)),
                    density_c: None,
                    tail_fn: Arc::new(move |u| tail_integral(&*tail2, u, scale)),
                    mass: if cf.subordinator { cf.mean } else { None },
                    sector: 0.0,
                    scale,
                }))
            }
        }
    }
}

fn burr_sector(c: f64) -> f64 {
    (0.45 * PI).min(0.45 * PI / c)
}

pub fn burr_mean(theta: f64, c: f64, xi: f64) -> f64 {
    theta.powf(1.0 / c) * gamma(1.0 + 1.0 / c) * gamma(xi - 1.0 / c) / gamma(xi)
}

pub fn burr_survival(x: f64, theta: f64, c: f64, xi: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    (theta / (theta + x.powf(c))).powf(xi)
}

pub fn burr_density(x: f64, theta: f64, c: f64, xi: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let xc = x.powf(c);
    xi * c * xc / x * theta.powf(xi) / (theta + xc).powf(xi + 1.0)
}

fn burr_survival_c(z: C64, theta: f64, c: f64, xi: f64) -> C64 {
    (C64::new(theta, 0.0) / (z.powf(c) + theta)).powf(xi)
}

fn burr_density_c(z: C64, theta: f64, c: f64, xi: f64) -> C64 {
    let zc = z.powf(c);
    zc / z * (xi * c * theta.powf(xi)) / (zc + theta).powf(xi + 1.0)
}

/// Burr quantile for inverse-transform sampling.
pub fn burr_quantile(u: f64, theta: f64, c: f64, xi: f64) -> f64 {
    // survival s = (theta/(theta+x^c))^xi
    let s = 1.0 - u;
    (theta * (s.powf(-1.0 / xi) - 1.0)).max(0.0).powf(1.0 / c)
}
