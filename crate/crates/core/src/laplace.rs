//! Closed Laplace transforms of the negative factor and numerical inversion.

use std::f64::consts::LN_2;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CaseLabel, LevyModel};
use crate::numeric::special::factorial;
use crate::numeric::C64;
use crate::wh::WienerHopf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformKind {
    Density,
    CdfTail,
    PositiveFactor,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformForm {
    Ratio,
    CaseFormula,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InversionMethod {
    Talbot,
    GaverStehfest,
}

type Evaluator = Arc<dyn Fn(C64) -> Result<C64> + Send + Sync>;

#[derive(Clone)]
pub struct TransformHandle {
    eval: Evaluator,
    pub kind: TransformKind,
    /// Transform is analytic for Re r > abscissa.
    pub abscissa: f64,
    /// Whether evaluation is valid left of the imaginary axis.
    pub continues_left: bool,
    /// Atom subtracted before inversion (density handles only).
    pub removed_atom: f64,
}

impl std::fmt::Debug for TransformHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TransformHandle")
            .field("kind", &self.kind)
            .field("abscissa", &self.abscissa)
            .field("continues_left", &self.continues_left)
            .field("removed_atom", &self.removed_atom)
            .finish()
    }
}

impl TransformHandle {
    pub fn from_fn(f: impl Fn(C64) -> Result<C64> + Send + Sync + 'static, continues_left: bool) -> Self {
        TransformHandle {
            eval: Arc::new(f),
            kind: TransformKind::Custom,
            abscissa: 0.0,
            continues_left,
            removed_atom: 0.0,
        }
    }

    pub fn eval(&self, r: C64) -> Result<C64> {
        (self.eval)(r)
    }

    pub fn preferred_method(&self) -> InversionMethod {
        if self.continues_left {
            InversionMethod::Talbot
        } else {
            InversionMethod::GaverStehfest
        }
    }

    /// Density handle of -I with the atom at zero removed.
    pub fn density(wh: &Arc<WienerHopf>) -> Self {
        let w = wh.clone();
        let atom = wh.atom();
        TransformHandle {
            eval: Arc::new(move |r| Ok(transform_ratio(&w, r)? - atom)),
            kind: TransformKind::Density,
            abscissa: 0.0,
            continues_left: wh.model.neg.continues_left(),
            removed_atom: atom,
        }
    }

    /// Transform of the survival function u -> P[-I > u].
    pub fn cdf_tail(wh: &Arc<WienerHopf>) -> Self {
        let w = wh.clone();
        TransformHandle {
            eval: Arc::new(move |r| {
                let kh = w.kappa_hat(r)?;
                Ok((kh - w.a) / (r * kh))
            }),
            kind: TransformKind::CdfTail,
            abscissa: 0.0,
            continues_left: wh.model.neg.continues_left(),
            removed_atom: 0.0,
        }
    }

    /// E[e^{-r S}] = kappa(q, 0) / kappa(q, r) for the supremum S.
    pub fn positive_factor(wh: &Arc<WienerHopf>) -> Self {
        let w = wh.clone();
        TransformHandle {
            eval: Arc::new(move |r| Ok(w.kappa0 / w.kappa.kappa(r)?)),
            kind: TransformKind::PositiveFactor,
            abscissa: -wh.roots.beta1(),
            continues_left: true,
            removed_atom: 0.0,
        }
    }
}

/// a(q) kappa(q, -r) / (q - Psi_X(r)), taking the removable limit at certified roots.
fn transform_ratio(wh: &WienerHopf, r: C64) -> Result<C64> {
    if r.norm() == 0.0 {
        return Ok(C64::new(1.0, 0.0));
    }
    let kh = wh.kappa_hat(r)?;
    if kh.norm() == 0.0 || !(kh.re.is_finite() && kh.im.is_finite()) {
        return Err(Error::SingularPoint(r.to_string()));
    }
    Ok(wh.a / kh)
}

pub fn laplace_neg_wh(wh: &WienerHopf, r: C64, form: TransformForm) -> Result<C64> {
    match form {
        TransformForm::Ratio => {
            let near_root = wh.roots.roots.iter().any(|b| (b.value - r).norm() < 1e-6 * (1.0 + b.value.norm()));
            if near_root {
                return transform_ratio(wh, r);
            }
            let den = wh.q - wh.model.psi(r)?;
            if den.norm() < 1e-13 * (1.0 + wh.q) {
                return Err(Error::SingularPoint(r.to_string()));
            }
            Ok(wh.kappa.kappa(-r)? * wh.a / den)
        }
        TransformForm::CaseFormula => {
            if r.norm() == 0.0 {
                return Ok(C64::new(1.0, 0.0));
            }
            let a = wh.a;
            let one = C64::new(1.0, 0.0);
            let chibar = wh.chi.tail_transform(r);
            Ok(match (wh.case(), wh.model.gamma > 0.0) {
                (CaseLabel::B, _) => {
                    let c = wh.model.c;
                    let chi = wh
                        .chi
                        .transform(r)
                        .ok_or_else(|| Error::Divergent("chi has infinite mass in case B".into()))?;
                    (one * (a / c)) / (one - chi / c)
                }
                (CaseLabel::C, true) => {
                    let g2 = wh.gamma2();
                    let b = a / g2;
                    let e = one * b / (r + b);
                    e / (one + (one - e) * chibar / g2)
                }
                _ => {
                    let e = one * a / (r + a);
                    e / (one - (one - e) * (one - chibar))
                }
            })
        }
    }
}

/// Abate-Valko fixed Talbot contour with m nodes.
fn talbot(t: &TransformHandle, u: f64, m: usize) -> Result<f64> {
    let mf = m as f64;
    let r = 2.0 * mf / (5.0 * u);
    let mut acc = 0.5 * (t.eval(C64::new(r, 0.0))?.re * (r * u).exp());
    for k in 1..m {
        let th = k as f64 * std::f64::consts::PI / mf;
        let cot = th.cos() / th.sin();
        let s = C64::new(r * th * cot, r * th);
        let sigma = th + (th * cot - 1.0) * cot;
        let term = (s * u).exp() * t.eval(s)? * C64::new(1.0, sigma);
        acc += term.re;
    }
    let v = acc * r / mf;
    if !v.is_finite() {
        return Err(Error::OscillatoryDivergence(format!("Talbot sum at u = {u} is not finite")));
    }
    Ok(v)
}

fn stehfest_weights(n: usize) -> Vec<f64> {
    let h = n / 2;
    (1..=n)
        .map(|k| {
            let mut v = 0.0;
            for j in (k + 1) / 2..=k.min(h) {
                v += (j as f64).powi(h as i32) * factorial(2 * j)
                    / (factorial(h - j) * factorial(j) * factorial(j - 1) * factorial(k - j) * factorial(2 * j - k));
            }
            if (k + h) % 2 == 1 {
                -v
            } else {
                v
            }
        })
        .collect()
}

fn gaver_stehfest(t: &TransformHandle, u: f64, n: usize) -> Result<f64> {
    if n > 14 {
        return Err(Error::PrecisionInsufficient(format!(
            "Gaver-Stehfest with {n} terms needs extended precision; use at most 14"
        )));
    }
    if n % 2 == 1 || n == 0 {
        return Err(Error::InvalidParameter(format!("Gaver-Stehfest needs an even term count, got {n}")));
    }
    let w = stehfest_weights(n);
    let base = LN_2 / u;
    let mut acc = 0.0;
    for (k, wk) in w.iter().enumerate() {
        acc += wk * t.eval(C64::new(base * (k + 1) as f64, 0.0))?.re;
    }
    Ok(acc * base)
}

pub fn invert_transform(t: &TransformHandle, u: f64, method: InversionMethod, terms: usize) -> Result<f64> {
    if !(u > 0.0) {
        return Err(Error::InvalidParameter(format!("inversion needs u > 0, got {u}")));
    }
    match method {
        InversionMethod::Talbot => {
            if !t.continues_left {
                return Err(Error::Unsupported("transform has no continuation into Re r < 0".into()));
            }
            talbot(t, u, terms)
        }
        InversionMethod::GaverStehfest => gaver_stehfest(t, u, terms),
    }
}

pub fn default_terms(method: InversionMethod) -> usize {
    match method {
        InversionMethod::Talbot => 32,
        InversionMethod::GaverStehfest => 14,
    }
}

/// P[I < -u] by inverting (kappa-hat(q,r) - kappa-hat(q,0)) / (r kappa-hat(q,r)).
pub fn cdf_via_inversion(wh: &Arc<WienerHopf>, u: f64) -> Result<f64> {
    let h = TransformHandle::cdf_tail(wh);
    let method = h.preferred_method();
    invert_transform(&h, u, method, default_terms(method))
}

/// Absolutely continuous density of -I at u > 0 by inversion.
pub fn density_via_inversion(wh: &Arc<WienerHopf>, u: f64) -> Result<f64> {
    let h = TransformHandle::density(wh);
    let method = h.preferred_method();
    invert_transform(&h, u, method, default_terms(method))
}

/// Convenience wrapper building the factorization first.
pub fn laplace_for_model(model: &LevyModel, q: f64, r: C64, form: TransformForm) -> Result<C64> {
    laplace_neg_wh(&WienerHopf::new(model, q)?, r, form)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{NegativeJumpPart, RationalJumpPart};

    fn ex21() -> Arc<WienerHopf> {
        let m = LevyModel::new(
            1.0,
            0.0,
            RationalJumpPart::exponential(1.0, 1.0),
            NegativeJumpPart::CompoundPoissonExp { rate: 1.0, p: 1.0 },
        );
        Arc::new(WienerHopf::new(&m, 0.5).unwrap())
    }

    #[test]
    fn textbook_pairs() {
        let a0 = 1.3;
        let h = TransformHandle::from_fn(move |r| Ok(1.0 / (r + a0)), true);
        let ramp = TransformHandle::from_fn(|r| Ok(1.0 / (r * r)), true);
        for u in [0.1, 1.0, 5.0] {
            let f = invert_transform(&h, u, InversionMethod::Talbot, 32).unwrap();
            assert!((f / (-a0 * u).exp() - 1.0).abs() < 1e-8);
            let g = invert_transform(&ramp, u, InversionMethod::Talbot, 32).unwrap();
            assert!((g / u - 1.0).abs() < 1e-8);
            let gs = invert_transform(&h, u, InversionMethod::GaverStehfest, 14).unwrap();
            assert!((gs - (-a0 * u).exp()).abs() < 1e-4);
        }
        assert!(matches!(
            invert_transform(&h, 1.0, InversionMethod::GaverStehfest, 16),
            Err(Error::PrecisionInsufficient(_))
        ));
    }

    #[test]
    fn linearity() {
        let f = TransformHandle::from_fn(|r| Ok(1.0 / (r + 1.0)), true);
        let g = TransformHandle::from_fn(|r| Ok(1.0 / ((r + 2.0) * (r + 2.0))), true);
        let comb = TransformHandle::from_fn(|r| Ok(2.0 / (r + 1.0) - 3.0 / ((r + 2.0) * (r + 2.0))), true);
        for u in [0.3, 2.0] {
            let lhs = invert_transform(&comb, u, InversionMethod::Talbot, 32).unwrap();
            let rhs = 2.0 * invert_transform(&f, u, InversionMethod::Talbot, 32).unwrap()
                - 3.0 * invert_transform(&g, u, InversionMethod::Talbot, 32).unwrap();
            assert!((lhs - rhs).abs() < 1e-9);
        }
    }

    #[test]
    fn forms_agree_and_limit_at_zero() {
        let wh = ex21();
        for r in [C64::new(0.2, 0.0), C64::new(1.7, 0.4), C64::new(0.3, -2.0)] {
            let a = laplace_neg_wh(&wh, r, TransformForm::Ratio).unwrap();
            let b = laplace_neg_wh(&wh, r, TransformForm::CaseFormula).unwrap();
            assert!((a - b).norm() < 1e-10 * a.norm());
        }
        let tiny = laplace_neg_wh(&wh, C64::new(1e-9, 0.0), TransformForm::Ratio).unwrap();
        assert!((tiny.re - 1.0).abs() < 1e-8);
        // removable at the certified root beta_2 (which lies right of the pole at 1)
        let b2 = wh.roots.roots[1].value;
        let at_root = laplace_neg_wh(&wh, b2, TransformForm::Ratio).unwrap();
        let nearby = laplace_neg_wh(&wh, b2 * (1.0 + 1e-3), TransformForm::CaseFormula).unwrap();
        assert!((at_root - nearby).norm() < 1e-3);
    }

    #[test]
    fn positive_factor_complements_negative_factor() {
        let wh = ex21();
        let pf = TransformHandle::positive_factor(&wh);
        for r in [0.1, 0.25] {
            let r = C64::new(r, 0.0);
            let full = wh.q / (wh.q - wh.model.psi(r).unwrap());
            let neg = full / pf.eval(-r).unwrap();
            let direct = laplace_neg_wh(&wh, r, TransformForm::Ratio).unwrap();
            assert!((neg - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn factorization_on_imaginary_axis() {
        let wh = ex21();
        let pf = TransformHandle::positive_factor(&wh);
        for s in [0.0, 0.3, 1.0, 4.0] {
            let is = C64::new(0.0, s);
            let prod = if s == 0.0 {
                C64::new(1.0, 0.0)
            } else {
                wh.q / (wh.q - wh.model.psi(is).unwrap()) / pf.eval(-is).unwrap()
            };
            assert!(prod.norm() <= 1.0 + 1e-12);
            let direct = laplace_neg_wh(&wh, is, TransformForm::Ratio).unwrap();
            assert!((prod - direct).norm() < 1e-10);
        }
    }
}

/// int (1 - e^{-rx}) kappa(q,0) chi(dx) by quadrature of the chi density.
pub fn levy_exponent_quadrature(wh: &WienerHopf, r: f64) -> Result<f64> {
    let scale = wh.model.neg.length_scale().min(1.0 / wh.model.pos.alpha_max()).max(1e-6);
    let f = |x: f64| {
        if x <= 0.0 {
            return 0.0;
        }
        -(-r * x).exp_m1() * wh.chi.density(x).unwrap_or(f64::NAN)
    };
    // x = scale s^4 tames integrable singularities of chi at the origin
    let head = crate::numeric::quad::integrate(|s: f64| 4.0 * scale * s.powi(3) * f(scale * s.powi(4)), 0.0, 1.0, 1e-14, 1e-11);
    let tail = crate::numeric::quad::integrate_to_infinity(f, scale, scale, 1e-14, 1e-11);
    let v = head.value + tail.value;
    if !v.is_finite() {
        return Err(Error::NonConvergence(format!("chi quadrature at r = {r}")));
    }
    Ok(wh.kappa0 * v)
}

/// Psi_q(r) = kappa(q,0) (gamma^2 r + Phi(r)), the exponent in aW = q / (q + Psi_q).
pub fn psi_q(wh: &WienerHopf, r: f64) -> f64 {
    let rc = C64::new(r, 0.0);
    wh.kappa0 * (wh.gamma2() * r + wh.chi.phi(rc).re)
}

/// exp(-int_0^inf (1 - e^{-t Psi_q(r)}) t^{-1} e^{-qt} dt), which equals q / (q + Psi_q(r)).
pub fn frullani_reconstruction(wh: &WienerHopf, r: f64) -> Result<f64> {
    if !(wh.q > 0.0) {
        return Err(Error::InvalidParameter("the exponential-time form needs q > 0".into()));
    }
    let z = psi_q(wh, r);
    let f = |t: f64| if t <= 0.0 { z } else { -(-t * z).exp_m1() / t * (-wh.q * t).exp() };
    let x0 = 1.0 / (wh.q + z);
    let v = crate::numeric::quad::integrate(f, 0.0, x0, 1e-15, 1e-12).value
        + crate::numeric::quad::integrate_to_infinity(f, x0, x0, 1e-15, 1e-12).value;
    Ok((-v).exp())
}
