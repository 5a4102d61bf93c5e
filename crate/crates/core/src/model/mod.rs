//! The Levy process X(t) = ct + gamma B(t) + Z(t) - S(t).

pub mod measure;
pub mod negative;
pub mod positive;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::poly::Poly;
use crate::numeric::C64;

pub use measure::JumpMeasure;
pub use negative::{burr_quantile, CustomFamily, NegativeJumpPart};
pub use positive::{ErlangTerm, Pole, RationalJumpPart};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseLabel {
    A,
    B,
    C,
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CaseLabel::A => "A",
            CaseLabel::B => "B",
            CaseLabel::C => "C",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    fn error(message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Error, message: message.into() }
    }
    fn warning(message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Warning, message: message.into() }
    }
}

#[derive(Debug, Clone)]
pub struct LevyModel {
    pub c: f64,
    pub gamma: f64,
    pub pos: RationalJumpPart,
    pub neg: NegativeJumpPart,
}

impl LevyModel {
    pub fn new(c: f64, gamma: f64, pos: RationalJumpPart, neg: NegativeJumpPart) -> Self {
        LevyModel { c, gamma, pos, neg }
    }

    /// Builds the model and rejects it if validation reports an error.
    pub fn checked(c: f64, gamma: f64, pos: RationalJumpPart, neg: NegativeJumpPart) -> Result<Self> {
        let model = Self::new(c, gamma, pos, neg);
        if let Some(d) = validate_model(&model, None).into_iter().find(|d| d.severity == Severity::Error) {
            return Err(Error::InvalidParameter(d.message));
        }
        model.classify()?;
        Ok(model)
    }

    pub fn m(&self) -> usize {
        self.pos.m()
    }

    /// Psi_X(r) = cr + gamma^2 r^2 + lambda_1 (f1hat(-r) - 1) - S(r).
    pub fn psi(&self, r: C64) -> Result<C64> {
        self.pos.check_pole(r)?;
        Ok(r * self.c + r * r * self.gamma.powi(2) + (self.pos.mgf(r) - 1.0) * self.pos.rate
            - self.neg.exponent(r))
    }

    pub fn psi_deriv(&self, r: C64) -> Result<C64> {
        self.pos.check_pole(r)?;
        let p1 = self.pos.p1_poly();
        let q = self.pos.q_poly();
        // d/dr Q(-r)/P1(r)
        let num = -q.derivative().eval(-r) * p1.eval(r) - q.eval(-r) * p1.derivative().eval(r);
        let mgf_d = num / p1.eval(r).powi(2);
        Ok(C64::new(self.c, 0.0) + r * 2.0 * self.gamma.powi(2) + mgf_d * self.pos.rate
            - self.neg.exponent_deriv(r))
    }

    /// F(r) = P1(r)(Psi_X(r) - q), free of the poles alpha_i.
    pub fn lundberg_fn(&self, r: C64, q: f64) -> C64 {
        let p1 = self.pos.p1_poly().eval(r);
        let lam = self.pos.rate;
        p1 * (r * self.c + r * r * self.gamma.powi(2) - lam - q - self.neg.exponent(r))
            + self.pos.q_poly().eval(-r) * lam
    }

    pub fn lundberg_fn_deriv(&self, r: C64, q: f64) -> C64 {
        let p1 = self.pos.p1_poly();
        let lam = self.pos.rate;
        let g2 = self.gamma.powi(2);
        p1.derivative().eval(r) * (r * self.c + r * r * g2 - lam - q - self.neg.exponent(r))
            + p1.eval(r) * (C64::new(self.c, 0.0) + r * 2.0 * g2 - self.neg.exponent_deriv(r))
            - self.pos.q_poly().derivative().eval(-r) * lam
    }

    /// F as a polynomial when the negative exponent is rational (times its denominator).
    pub fn lundberg_poly(&self, q: f64) -> Option<Poly> {
        let (n, d) = self.neg.rational_exponent()?;
        let p1 = self.pos.p1_poly();
        let lam = self.pos.rate;
        let g2 = self.gamma.powi(2);
        let base = Poly::from_real(&[-lam - q, self.c, g2]);
        let poly = p1
            .mul(&d)
            .mul(&base)
            .add(&self.pos.q_poly().reflect().mul(&d).scale(C64::new(lam, 0.0)))
            .add(&n.mul(&p1).scale(C64::new(-1.0, 0.0)));
        Some(poly)
    }

    /// E[X(1)]; -inf when the negative jumps have infinite mean.
    pub fn mean(&self) -> f64 {
        let s = self.neg.mean();
        if s.is_infinite() {
            return f64::NEG_INFINITY;
        }
        self.c + self.pos.rate * self.pos.mean() - s
    }

    pub fn classify(&self) -> Result<CaseLabel> {
        classify_case(self)
    }

    /// Characteristic rate used to size grids and contours.
    pub fn rate_scale(&self) -> f64 {
        self.pos.alpha_max().max(1.0 / self.neg.length_scale())
    }
}

pub fn psi_x(model: &LevyModel, r: C64) -> Result<C64> {
    model.psi(r)
}

pub fn mean_x1(model: &LevyModel) -> f64 {
    model.mean()
}

pub fn classify_case(model: &LevyModel) -> Result<CaseLabel> {
    let neg = &model.neg;
    let sub = neg.is_subordinator();
    let cp = neg.is_compound_poisson();
    if model.c == 0.0 && model.gamma == 0.0 {
        if sub && !cp {
            return Ok(CaseLabel::A);
        }
        if cp {
            let mean = model.mean();
            if mean > 0.0 {
                return Ok(CaseLabel::A);
            }
            return Err(Error::ExcludedConfiguration(format!(
                "c = gamma = 0 with compound Poisson negative jumps requires E[X(1)] > 0, got {mean}"
            )));
        }
    } else if model.c > 0.0 && model.gamma == 0.0 && sub {
        return Ok(CaseLabel::B);
    }
    // case C needs int (x^2 ^ x) nu(dx) < inf
    if sub && !model.neg.mean().is_finite() {
        return Err(Error::CaseAssumption(format!(
            "case C requires negative jumps with finite mean; {} has infinite mean",
            neg.name()
        )));
    }
    Ok(CaseLabel::C)
}

/// All violated invariants; pass `q` to include the q = 0 mean condition.
pub fn validate_model(model: &LevyModel, q: Option<f64>) -> Vec<Diagnostic> {
    let mut out: Vec<Diagnostic> = Vec::new();
    if !(model.c >= 0.0 && model.c.is_finite()) {
        out.push(Diagnostic::error(format!("drift c = {} must be nonnegative", model.c)));
    }
    if !(model.gamma >= 0.0 && model.gamma.is_finite()) {
        out.push(Diagnostic::error(format!("gamma = {} must be nonnegative", model.gamma)));
    }
    let pos_errors = model.pos.validate();
    let pos_ok = pos_errors.is_empty();
    out.extend(pos_errors.into_iter().map(Diagnostic::error));
    let neg_errors = model.neg.validate();
    let neg_ok = neg_errors.is_empty();
    out.extend(neg_errors.into_iter().map(Diagnostic::error));
    if pos_ok {
        out.extend(model.pos.density_warnings().into_iter().map(Diagnostic::warning));
    }
    if pos_ok && neg_ok && out.is_empty() {
        if let Err(e) = classify_case(model) {
            out.push(Diagnostic::error(e.to_string()));
        }
        if let Some(q) = q {
            if q < 0.0 {
                out.push(Diagnostic::error(format!("q = {q} must be nonnegative")));
            } else if q == 0.0 && !(model.mean() > 0.0) {
                out.push(Diagnostic::error(Error::ConditionOne(model.mean()).to_string()));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn two_sided_exp() -> LevyModel {
        LevyModel::new(
            1.0,
            0.0,
            RationalJumpPart::exponential(1.0, 1.0),
            NegativeJumpPart::CompoundPoissonExp { rate: 1.0, p: 1.0 },
        )
    }

    #[test]
    fn classification_examples() {
        let pos = RationalJumpPart::exponential(1.0, 1.0);
        let a = LevyModel::new(0.0, 0.0, pos.clone(), NegativeJumpPart::StableSubordinator { xi: 0.5 });
        assert_eq!(a.classify().unwrap(), CaseLabel::A);
        assert_eq!(two_sided_exp().classify().unwrap(), CaseLabel::B);
        let c = LevyModel::new(0.0, 1.0, pos.clone(), NegativeJumpPart::SpectrallyPositiveStable { xi: 1.5 });
        assert_eq!(c.classify().unwrap(), CaseLabel::C);
        let excluded = LevyModel::new(0.0, 0.0, pos.clone(), NegativeJumpPart::CompoundPoissonExp { rate: 3.0, p: 1.0 });
        assert!(matches!(excluded.classify(), Err(Error::ExcludedConfiguration(_))));
        let bad_c = LevyModel::new(0.0, 1.0, pos, NegativeJumpPart::StableSubordinator { xi: 0.5 });
        assert!(matches!(bad_c.classify(), Err(Error::CaseAssumption(_))));
    }

    #[test]
    fn psi_at_zero_and_mean() {
        let m = LevyModel::new(
            0.0,
            0.0,
            RationalJumpPart::exponential(1.0, 1.0),
            NegativeJumpPart::CompoundPoissonExp { rate: 1.0, p: 2.0 },
        );
        assert_eq!(m.psi(C64::new(0.0, 0.0)).unwrap(), C64::new(0.0, 0.0));
        assert!((m.mean() - 0.5).abs() < 1e-15);
        let h = 1e-5;
        let fd = (m.psi(C64::new(h, 0.0)).unwrap() - m.psi(C64::new(-h, 0.0)).unwrap()).re / (2.0 * h);
        assert!((fd - 0.5).abs() < 1e-6 * 0.5);
        let mut g = m.clone();
        g.gamma = 0.7;
        assert_eq!(g.mean(), m.mean());
    }

    #[test]
    fn psi_is_log_mgf_for_compound_poisson() {
        // E e^{rX(1)} = exp(c r + lam1 (a/(a-r) - 1) + lam2 (p/(p+r) - 1))
        let m = LevyModel::new(
            0.4,
            0.0,
            RationalJumpPart::exponential(1.2, 2.0),
            NegativeJumpPart::CompoundPoissonExp { rate: 0.8, p: 1.5 },
        );
        for i in 0..10 {
            let r = 0.17 * i as f64 + 0.05;
            let direct = 0.4 * r + 1.2 * (2.0 / (2.0 - r) - 1.0) + 0.8 * (1.5 / (1.5 + r) - 1.0);
            let got = m.psi(C64::new(r, 0.0)).unwrap();
            assert!((got.re - direct).abs() <= 1e-10 * direct.abs() && got.im == 0.0);
        }
    }

    #[test]
    fn pole_proximity_is_an_error() {
        let m = two_sided_exp();
        assert!(matches!(m.psi(C64::new(1.0 + 1e-12, 0.0)), Err(Error::PoleProximity { .. })));
    }

    #[test]
    fn lundberg_forms_agree() {
        let m = LevyModel::new(
            0.3,
            0.5,
            RationalJumpPart::hyperexponential(1.0, &[(0.5, 1.0), (0.5, 4.0)]),
            NegativeJumpPart::CompoundPoissonMixExp { rate: 0.7, parts: vec![(0.4, 1.0), (0.6, 3.0)] },
        );
        let q = 0.6;
        let r = C64::new(0.8, 0.3);
        let f = m.lundberg_fn(r, q);
        let via_psi = m.pos.p1_poly().eval(r) * (m.psi(r).unwrap() - q);
        assert!((f - via_psi).norm() < 1e-12 * f.norm());
        let (_, d) = m.neg.rational_exponent().unwrap();
        assert!((m.lundberg_poly(q).unwrap().eval(r) - f * d.eval(r)).norm() < 1e-12 * f.norm());
        let h = 1e-6;
        let fd = (m.lundberg_fn(r + h, q) - m.lundberg_fn(r - h, q)) / (2.0 * h);
        assert!((fd - m.lundberg_fn_deriv(r, q)).norm() < 1e-7 * fd.norm());
    }

    #[test]
    fn validation_messages() {
        assert!(validate_model(&two_sided_exp(), None).is_empty());
        let mut bad = two_sided_exp();
        bad.pos.numerator = vec![2.0];
        assert!(validate_model(&bad, None).iter().any(|d| d.message.contains("normalization")));
        let mut neg = two_sided_exp();
        neg.c = 0.0;
        neg.gamma = 0.5;
        neg.neg = NegativeJumpPart::CompoundPoissonExp { rate: 5.0, p: 1.0 };
        assert!(validate_model(&neg, Some(0.0)).iter().any(|d| d.message.contains("E[X(1)]")));
    }
}
