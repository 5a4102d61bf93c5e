//! Asymptotic laws for P[I < -u] as u grows, and diagnostics for their onset.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CaseLabel, NegativeJumpPart};
use crate::numeric::quad::integrate;
use crate::numeric::special::gamma;
use crate::numeric::C64;
use crate::wh::WienerHopf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailKind {
    /// D u^{-xi} / (q Gamma(1 - xi)) for a subordinator regularly varying at 0.
    StableSubordinator,
    /// kappa(q,0) chi-bar(u) / q, case B with subexponential chi.
    SubexponentialDrift,
    /// kappa(q,0) chi-bar(u), the Levy tail of the ladder height process.
    LevyTail,
    /// (lambda2 / q) (theta / (theta + u^c))^xi.
    Burr,
    /// C_xi u^{1-xi} / (a Gamma(2 - xi)).
    SpectrallyPositiveStable,
    /// nu_S-bar(u) / q, the single-big-jump law for subexponential downward jumps.
    OneBigJump,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct TailConstants {
    pub d: Option<f64>,
    pub xi: Option<f64>,
    pub kappa0: f64,
    pub c_xi: Option<f64>,
    pub lambda2: Option<f64>,
    pub theta: Option<f64>,
    pub c_shape: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TailLaw<'a> {
    pub kind: TailKind,
    pub constants: TailConstants,
    wh: &'a WienerHopf,
}

/// Result of the r^{-xi} S(r) -> D check as r decreases to 0.
#[derive(Debug, Clone, Serialize)]
pub struct IndexCheck {
    pub samples: Vec<(f64, f64)>,
    pub d: f64,
    pub drift: f64,
    pub passed: bool,
}

/// Evaluate r^{-xi} S(r) at r = 1e-2 .. 1e-6, S the Bernstein function of the
/// negative jumps. Passes when the values move by at most 1 %.
pub fn index_check(neg: &NegativeJumpPart, xi: f64) -> Result<IndexCheck> {
    if !neg.is_subordinator() {
        return Err(Error::Unsupported(format!("{} is not a subordinator", neg.name())));
    }
    let samples: Vec<(f64, f64)> = (2..=6)
        .map(|k| {
            let r = 10f64.powi(-k);
            (r, neg.exponent(C64::new(r, 0.0)).re / r.powf(xi))
        })
        .collect();
    let d = samples.last().unwrap().1;
    let lo = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let drift = (hi - lo) / d.abs();
    Ok(IndexCheck { samples, d, drift, passed: d > 0.0 && drift <= 0.01 })
}

fn stable_sp_tail(xi: f64, u: f64) -> f64 {
    (xi - 1.0) / gamma(2.0 - xi) * u.powf(-xi)
}

impl<'a> TailLaw<'a> {
    /// The law suited to the model's negative jump family.
    pub fn for_model(wh: &'a WienerHopf) -> Result<Self> {
        let kind = match (&wh.model.neg, wh.case()) {
            (NegativeJumpPart::StableSubordinator { .. }, CaseLabel::A) => TailKind::StableSubordinator,
            (NegativeJumpPart::CompoundPoissonBurr { .. }, CaseLabel::B) => TailKind::Burr,
            (NegativeJumpPart::SpectrallyPositiveStable { .. }, _) => TailKind::SpectrallyPositiveStable,
            (_, CaseLabel::B) => TailKind::SubexponentialDrift,
            _ => TailKind::LevyTail,
        };
        Self::new(wh, kind)
    }

    pub fn new(wh: &'a WienerHopf, kind: TailKind) -> Result<Self> {
        let mut k = TailConstants { kappa0: wh.kappa0, ..Default::default() };
        match (kind, &wh.model.neg) {
            (TailKind::StableSubordinator, NegativeJumpPart::StableSubordinator { xi }) => {
                let chk = index_check(&wh.model.neg, *xi)?;
                if !chk.passed {
                    return Err(Error::Unsupported(format!("r^-xi S(r) drifts by {:.3e}", chk.drift)));
                }
                k.d = Some(chk.d);
                k.xi = Some(*xi);
            }
            (TailKind::StableSubordinator, NegativeJumpPart::Custom(_)) => {
                return Err(Error::Unsupported("custom family needs an explicit index, see TailLaw::with_index".into()))
            }
            (TailKind::StableSubordinator, n) => {
                return Err(Error::Unsupported(format!("{} has no regularly varying exponent at 0", n.name())))
            }
            (TailKind::SubexponentialDrift, _) if wh.case() != CaseLabel::B => {
                return Err(Error::Unsupported("this law needs c > 0 and gamma = 0".into()))
            }
            (TailKind::Burr, NegativeJumpPart::CompoundPoissonBurr { rate, theta, c_shape, xi }) => {
                k.lambda2 = Some(*rate);
                k.theta = Some(*theta);
                k.c_shape = Some(*c_shape);
                k.xi = Some(*xi);
            }
            (TailKind::Burr, n) => {
                return Err(Error::Unsupported(format!("Burr law requested for {}", n.name())))
            }
            (TailKind::SpectrallyPositiveStable, NegativeJumpPart::SpectrallyPositiveStable { xi }) => {
                let ratio = wh.a / wh.q;
                k.xi = Some(*xi);
                k.c_xi = Some((gamma(2.0 - xi) / (xi - 1.0) - 1.0 + ratio) / xi);
            }
            (TailKind::SpectrallyPositiveStable, n) => {
                return Err(Error::Unsupported(format!("stable law requested for {}", n.name())))
            }
            (TailKind::OneBigJump, n) if n.is_compound_poisson() || n.mean().is_finite() || matches!(n, NegativeJumpPart::StableSubordinator { .. } | NegativeJumpPart::SpectrallyPositiveStable { .. }) => {}
            (TailKind::OneBigJump, n) => {
                return Err(Error::Unsupported(format!("no tail evaluator for {}", n.name())))
            }
            _ => {}
        }
        if wh.q <= 0.0 {
            return Err(Error::Unsupported("tail laws need q > 0".into()));
        }
        Ok(TailLaw { kind, constants: k, wh })
    }

    /// Regularly varying law with a user-supplied index for a custom subordinator.
    pub fn with_index(wh: &'a WienerHopf, xi: f64) -> Result<Self> {
        let chk = index_check(&wh.model.neg, xi)?;
        if !chk.passed {
            return Err(Error::Unsupported(format!("r^-xi S(r) drifts by {:.3e}", chk.drift)));
        }
        let constants = TailConstants { kappa0: wh.kappa0, d: Some(chk.d), xi: Some(xi), ..Default::default() };
        Ok(TailLaw { kind: TailKind::StableSubordinator, constants, wh })
    }

    pub fn eval(&self, u: f64) -> Result<f64> {
        if !(u > 0.0) {
            return Err(Error::InvalidParameter(format!("u = {u} must be positive")));
        }
        let q = self.wh.q;
        let k = &self.constants;
        Ok(match self.kind {
            TailKind::StableSubordinator => {
                let xi = k.xi.unwrap();
                k.d.unwrap() * u.powf(-xi) / (q * gamma(1.0 - xi))
            }
            TailKind::SubexponentialDrift => k.kappa0 * self.wh.chi.tail(u)? / q,
            TailKind::LevyTail => k.kappa0 * self.wh.chi.tail(u)?,
            TailKind::Burr => {
                let (th, c, xi) = (k.theta.unwrap(), k.c_shape.unwrap(), k.xi.unwrap());
                k.lambda2.unwrap() / q * (th / (th + u.powf(c))).powf(xi)
            }
            TailKind::SpectrallyPositiveStable => {
                let xi = k.xi.unwrap();
                k.c_xi.unwrap() * u.powf(1.0 - xi) / (self.wh.a * gamma(2.0 - xi))
            }
            TailKind::OneBigJump => match &self.wh.model.neg {
                NegativeJumpPart::SpectrallyPositiveStable { xi } => stable_sp_tail(*xi, u) / q,
                n => n.levy_tail(u) / q,
            },
        })
    }
}

/// Spectrally positive stable constant check: prod alpha^n / prod beta^k against a(q)/q.
pub fn sp_stable_constant_check(wh: &WienerHopf) -> (f64, f64) {
    let prod: C64 = wh.roots.nonzero().map(|r| r.value.powi(r.multiplicity as i32)).product();
    (wh.model.pos.alpha_product() / prod.re, wh.a / wh.q)
}

/// Asymptotic value of P[I < -u] under the law chosen for the model.
pub fn asymptotic_tail(wh: &WienerHopf, u: f64) -> Result<(f64, TailKind)> {
    let law = TailLaw::for_model(wh)?;
    Ok((law.eval(u)?, law.kind))
}

#[derive(Debug, Clone, Serialize)]
pub struct TailPoint {
    pub u: f64,
    pub cdf: f64,
    pub law: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailRatio {
    pub points: Vec<TailPoint>,
    /// ratio at the last point minus the ratio one decade earlier.
    pub last_decade_drift: f64,
}

impl TailRatio {
    pub fn last_ratio(&self) -> f64 {
        self.points.last().map(|p| p.ratio).unwrap_or(f64::NAN)
    }
}

/// F(-u) / law(u) over the grid.
pub fn tail_ratio_diagnostic(
    cdf: &dyn Fn(f64) -> Result<f64>,
    law: &dyn Fn(f64) -> Result<f64>,
    u_grid: &[f64],
) -> Result<TailRatio> {
    let mut points = Vec::with_capacity(u_grid.len());
    for &u in u_grid {
        let (f, l) = (cdf(u)?, law(u)?);
        points.push(TailPoint { u, cdf: f, law: l, ratio: f / l });
    }
    let drift = match points.last() {
        Some(last) => {
            let target = last.u / 10.0;
            let earlier = points
                .iter()
                .filter(|p| p.u <= target * (1.0 + 1e-9))
                .last()
                .or(points.first())
                .unwrap();
            last.ratio - earlier.ratio
        }
        None => f64::NAN,
    };
    Ok(TailRatio { points, last_decade_drift: drift })
}

/// Logarithmic grid with `per_decade` points per decade from lo to hi.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let n = ((hi / lo).log10() * per_decade as f64).round() as usize;
    (0..=n).map(|k| lo * 10f64.powf(k as f64 / per_decade as f64)).collect()
}

/// Tail of the two-fold convolution of the probability law with survival
/// `tail` and density `dens`, divided by tail(x). Subexponential laws give 2 in
/// the limit; light tails grow without bound. A heuristic, not a proof.
pub fn subexponential_score(tail: &dyn Fn(f64) -> f64, dens: &dyn Fn(f64) -> f64, x: f64) -> Result<f64> {
    let t0 = tail(0.0);
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(Error::InvalidParameter("needs a finite, positive total mass".into()));
    }
    let fbar = |y: f64| tail(y) / t0;
    let f = |y: f64| dens(y) / t0;
    let half = 0.5 * x;
    // P[Y1 + Y2 > x] = 2 int_0^{x/2} Fbar(x - y) f(y) dy + Fbar(x/2)^2
    let body = integrate(|y: f64| fbar(x - y) * f(y), 0.0, half, 1e-15, 1e-10);
    Ok((2.0 * body.value + fbar(half).powi(2)) / fbar(x))
}

/// Subexponential score of the normalized chi law at each x.
pub fn chi_subexponential_scores(wh: &WienerHopf, xs: &[f64]) -> Result<Vec<(f64, f64)>> {
    let tail = |y: f64| wh.chi.tail(y).unwrap_or(f64::NAN);
    let dens = |y: f64| wh.chi.density(y).unwrap_or(f64::NAN);
    xs.iter().map(|&x| Ok((x, subexponential_score(&tail, &dens, x)?))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::closed_form_exp_case;
    use crate::model::{LevyModel, RationalJumpPart};

    fn burr_model() -> LevyModel {
        LevyModel::new(
            3.0,
            0.0,
            RationalJumpPart::exponential(1.0, 2.0),
            NegativeJumpPart::CompoundPoissonBurr { rate: 1.0, theta: 1.0, c_shape: 1.0, xi: 1.0 },
        )
    }

    #[test]
    fn example1_value() {
        let m = LevyModel::new(
            0.0,
            0.0,
            RationalJumpPart::exponential(1.0, 2.0),
            NegativeJumpPart::StableSubordinator { xi: 0.5 },
        );
        let wh = WienerHopf::new(&m, 1.0).unwrap();
        let law = TailLaw::for_model(&wh).unwrap();
        assert_eq!(law.kind, TailKind::StableSubordinator);
        for u in [1.0f64, 100.0, 1e4] {
            let want = u.powf(-0.5) / gamma(0.5);
            assert!((law.eval(u).unwrap() - want).abs() < 1e-12 * want);
        }
    }

    #[test]
    fn burr_value_and_subexponential_consistency() {
        let wh = WienerHopf::new(&burr_model(), 1.0).unwrap();
        let burr = TailLaw::for_model(&wh).unwrap();
        assert_eq!(burr.kind, TailKind::Burr);
        assert!((burr.eval(9.0).unwrap() - 0.1).abs() < 1e-14);
        let p2 = TailLaw::new(&wh, TailKind::SubexponentialDrift).unwrap();
        let mut last = 0.0;
        for u in [1e3, 1e4, 1e5, 1e6] {
            last = p2.eval(u).unwrap() / burr.eval(u).unwrap();
        }
        assert!((last - 1.0).abs() < 0.05, "{last}");
    }

    #[test]
    fn ratio_against_closed_form_and_wrong_law() {
        let cf = closed_form_exp_case(1.0, 1.0, 1.0, 1.0, 0.5, 1.0).unwrap();
        let grid = log_grid(1.0, 100.0, 5);
        let good = tail_ratio_diagnostic(&|u| Ok(cf.survival(u)), &|u| Ok(cf.survival(u)), &grid).unwrap();
        assert!(good.points.iter().all(|p| (p.ratio - 1.0).abs() < 1e-12));
        let bad = tail_ratio_diagnostic(&|u| Ok(cf.survival(u)), &|u: f64| Ok(u.powf(-0.5)), &grid).unwrap();
        assert!(bad.last_ratio() < 1e-10 && bad.last_decade_drift < 0.0);
    }

    #[test]
    fn index_check_rejects_light_exponent() {
        let chk = index_check(&NegativeJumpPart::StableSubordinator { xi: 0.7 }, 0.7).unwrap();
        assert!(chk.passed && (chk.d - 1.0).abs() < 1e-12);
        let cp = NegativeJumpPart::CompoundPoissonExp { rate: 1.0, p: 1.0 };
        assert!(!index_check(&cp, 0.5).unwrap().passed);
    }

    #[test]
    fn sp_stable_constants_consistent() {
        let m = LevyModel::new(
            0.5,
            1.0,
            RationalJumpPart::exponential(1.0, 2.0),
            NegativeJumpPart::SpectrallyPositiveStable { xi: 1.5 },
        );
        let wh = WienerHopf::new(&m, 0.7).unwrap();
        let (l, r) = sp_stable_constant_check(&wh);
        assert!((l - r).abs() < 1e-9 * r);
        let law = TailLaw::for_model(&wh).unwrap();
        assert_eq!(law.kind, TailKind::SpectrallyPositiveStable);
        let xi = 1.5;
        let want = (gamma(2.0 - xi) / (xi - 1.0) - 1.0 + wh.a / wh.q) / xi;
        assert!((law.constants.c_xi.unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn subexponential_scores() {
        let wh = WienerHopf::new(&burr_model(), 1.0).unwrap();
        let s = chi_subexponential_scores(&wh, &[10.0, 100.0, 1000.0]).unwrap();
        assert!((s[2].1 - 2.0).abs() < (s[0].1 - 2.0).abs());
        assert!((s[2].1 - 2.0).abs() < 0.1);
        let light = subexponential_score(&|y: f64| (-y).exp(), &|y: f64| (-y).exp(), 50.0).unwrap();
        assert!(light > 40.0);
    }

    #[test]
    fn asymptotic_tail_picks_the_burr_law() {
        let m = LevyModel::new(
            3.0,
            0.0,
            crate::model::RationalJumpPart::exponential(1.0, 2.0),
            NegativeJumpPart::CompoundPoissonBurr { rate: 1.0, theta: 1.0, c_shape: 1.0, xi: 1.0 },
        );
        let wh = WienerHopf::new(&m, 1.0).unwrap();
        let (v, kind) = asymptotic_tail(&wh, 1e3).unwrap();
        assert_eq!(kind, TailKind::Burr);
        assert!((v - 1.0 / 1001.0).abs() < 1e-12);
    }
}
