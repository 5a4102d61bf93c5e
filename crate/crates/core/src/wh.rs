//! Wiener-Hopf factors kappa and kappa-hat, the constants E(j,a,q), and the
//! measure chi whose kappa(q,0) multiple is the Levy measure of -I.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lundberg::{cluster_tol, solve_lundberg, RootSet};
use crate::model::measure::JumpMeasure;
use crate::model::{CaseLabel, LevyModel, NegativeJumpPart, Pole, RationalJumpPart};
use crate::numeric::quad::integrate_to_infinity;
use crate::numeric::series::Series;
use crate::numeric::C64;

#[derive(Debug, Clone)]
pub struct KappaFactor {
    pub q: f64,
    pub roots: Vec<(C64, usize)>,
    pub poles: Vec<Pole>,
}

impl KappaFactor {
    pub fn new(rs: &RootSet, pos: &RationalJumpPart) -> Self {
        KappaFactor {
            q: rs.q,
            roots: rs.roots.iter().map(|r| (r.value, r.multiplicity)).collect(),
            poles: pos.poles.clone(),
        }
    }

    /// kappa(q, r) = prod (beta_j + r)^{k_j} / prod (alpha_l + r)^{n_l}.
    pub fn kappa(&self, r: C64) -> Result<C64> {
        for p in &self.poles {
            if (r + p.alpha).norm() < 1e-9 * p.alpha {
                return Err(Error::PoleProximity { r: r.to_string(), alpha: -p.alpha });
            }
        }
        let num: C64 = self.roots.iter().map(|&(b, k)| (b + r).powi(k as i32)).product();
        let den: C64 = self.poles.iter().map(|p| (r + p.alpha).powi(p.n as i32)).product();
        Ok(num / den)
    }

    fn root_product(&self, r: C64) -> C64 {
        self.roots.iter().map(|&(b, k)| (b - r).powi(k as i32)).product()
    }

    /// kappa-hat(q, r) = P1(r)(q - Psi_X(r)) / prod (beta_j - r)^{k_j}.
    pub fn kappa_hat(&self, model: &LevyModel, r: C64) -> Result<C64> {
        if self.q == 0.0 && r.norm() == 0.0 {
            return Ok(C64::new(a_at_zero(model, &self.roots), 0.0));
        }
        let near = self
            .roots
            .iter()
            .map(|&(b, _)| b)
            .filter(|b| b.norm() > 0.0)
            .find(|b| (r - b).norm() < 1e-4 * b.norm());
        if let Some(b) = near {
            // removable singularity: mean value over a small circle
            let rho = 0.01 * b.norm();
            let n = 16;
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..n {
                let z = r + C64::from_polar(rho, 2.0 * PI * (i as f64 + 0.5) / n as f64);
                acc += -model.lundberg_fn(z, self.q) / self.root_product(z);
            }
            return Ok(acc / n as f64);
        }
        Ok(-model.lundberg_fn(r, self.q) / self.root_product(r))
    }
}

fn a_at_zero(model: &LevyModel, roots: &[(C64, usize)]) -> f64 {
    let prod: C64 = roots
        .iter()
        .filter(|(b, _)| b.norm() > 0.0)
        .map(|&(b, k)| b.powi(k as i32))
        .product();
    model.mean() * model.pos.alpha_product() / prod.re
}

/// (kappa(q, r), kappa-hat(q, r)).
pub fn kappa_pair(rs: &RootSet, model: &LevyModel, r: C64) -> Result<(C64, C64)> {
    let k = KappaFactor::new(rs, &model.pos);
    Ok((k.kappa(r)?, k.kappa_hat(model, r)?))
}

/// a(q) = q / kappa(q, 0), with the limit formula at q = 0.
pub fn a_of_q(rs: &RootSet, model: &LevyModel) -> Result<f64> {
    let k = KappaFactor::new(rs, &model.pos);
    if rs.q == 0.0 {
        if !(model.mean() > 0.0) {
            return Err(Error::ConditionOne(model.mean()));
        }
        return Ok(a_at_zero(model, &k.roots));
    }
    Ok(rs.q / k.kappa(C64::new(0.0, 0.0))?.re)
}

#[derive(Debug, Clone)]
pub struct WHConstants {
    pub roots: Vec<(C64, usize)>,
    /// e[j][a] = E(j, a, q)
    pub e: Vec<Vec<C64>>,
    pub e_star: Vec<Vec<C64>>,
}

pub fn wh_constants(rs: &RootSet, model: &LevyModel) -> Result<WHConstants> {
    let roots: Vec<(C64, usize)> = rs.roots.iter().map(|r| (r.value, r.multiplicity)).collect();
    for (i, a) in roots.iter().enumerate() {
        for b in &roots[i + 1..] {
            let d = (a.0 - b.0).norm();
            if d < 10.0 * cluster_tol(a.0) {
                return Err(Error::IllSeparated(d));
            }
        }
    }
    let p1 = model.pos.p1_poly();
    let mut e = Vec::new();
    let mut e_star = Vec::new();
    for (j, &(bj, kj)) in roots.iter().enumerate() {
        let order = kj - 1;
        let mut g = Series::from_poly(&p1, bj, order);
        for (l, &(bl, kl)) in roots.iter().enumerate() {
            if l != j {
                g = g.mul(&Series::inv_linear_pow(bl, bj, kl as u32, order));
            }
        }
        let gs = g.mul_by_s(bj);
        let mut ej = Vec::new();
        let mut esj = Vec::new();
        for a in 0..kj {
            // binom(k-1, a) (k-1-a)! / (k-1)! = 1/a!
            let sign = if (1 + a + kj) % 2 == 0 { 1.0 } else { -1.0 };
            let fa: f64 = (1..=a).map(|i| i as f64).product();
            ej.push(g.c[kj - 1 - a] * sign / fa);
            esj.push(gs.c[kj - 1 - a] * sign / fa);
        }
        e.push(ej);
        e_star.push(esj);
    }
    Ok(WHConstants { roots, e, e_star })
}

/// What the tilted tail operator acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TTarget {
    /// The Levy measure nu_S.
    Measure,
    /// The tail function V_S.
    Tail,
    /// The jump-size density f_2 of a compound Poisson family.
    Density,
}

/// T_{s,a} f(u) = int_u^inf (y - u)^a e^{-s(y - u)} f(y) dy.
pub fn t_operator(neg: &NegativeJumpPart, s: C64, a: usize, target: TTarget, u: f64) -> Result<C64> {
    if s.re <= 0.0 {
        return Err(Error::InvalidParameter(format!("T_s needs Re s > 0, got {s}")));
    }
    match target {
        TTarget::Measure => match neg.levy_measure() {
            Ok(m) => m.t_op(s, a, u),
            Err(_) => t_operator_fn(&|y| neg.levy_density(y), s, a, u, neg.length_scale()),
        },
        TTarget::Tail => match neg.tail_measure() {
            Ok(m) => m.t_op(s, a, u),
            Err(_) => t_operator_fn(&|y| neg.levy_tail(y), s, a, u, neg.length_scale()),
        },
        TTarget::Density => {
            let rate = neg
                .rate()
                .ok_or_else(|| Error::Unsupported(format!("{} has no jump-size density", neg.name())))?;
            Ok(neg.levy_measure()?.t_op(s, a, u)? / rate)
        }
    }
}

/// T_{s,a} by direct quadrature for an arbitrary function.
pub fn t_operator_fn(f: &dyn Fn(f64) -> f64, s: C64, a: usize, u: f64, scale: f64) -> Result<C64> {
    let r = integrate_to_infinity(|z: f64| (-s * z).exp() * z.powi(a as i32) * f(u + z), 0.0, scale, 1e-14, 1e-11);
    if !(r.value.re.is_finite() && r.value.im.is_finite()) || r.error > 1e-6 * r.value.norm().max(1e-300) {
        return Err(Error::Divergent(format!("T_(s,{a}) at u = {u}")));
    }
    Ok(r.value)
}

/// chi = w nu + sum c_{j,a} T_{beta_j,a} nu (cases A, B) or the tail-measure analogue (case C).
#[derive(Clone)]
pub struct ChiMeasure {
    pub case: CaseLabel,
    base: Arc<dyn JumpMeasure>,
    base_weight: f64,
    terms: Vec<(C64, usize, C64)>,
}

impl std::fmt::Debug for ChiMeasure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChiMeasure").field("case", &self.case).field("terms", &self.terms).finish()
    }
}

impl ChiMeasure {
    pub fn density(&self, x: f64) -> Result<f64> {
        let mut acc = self.base_weight * self.base.density(x);
        for &(b, a, c) in &self.terms {
            acc += (c * self.base.t_op(b, a, x)?).re;
        }
        Ok(acc)
    }

    /// chi((u, inf)).
    pub fn tail(&self, u: f64) -> Result<f64> {
        let mut acc = 0.0;
        if self.base_weight != 0.0 {
            let t = self.base.tail(u);
            if !t.is_finite() {
                return Err(Error::Divergent(format!("chi tail at u = {u}")));
            }
            acc += self.base_weight * t;
        }
        for &(b, a, c) in &self.terms {
            acc += (c * self.base.t_op_tail(b, a, u)?).re;
        }
        Ok(acc)
    }

    /// Phi(r) = int (1 - e^{-rx}) chi(dx) = r times the transform of the tail.
    pub fn phi(&self, r: C64) -> C64 {
        let mut acc = self.base.bernstein(r) * self.base_weight;
        let zero = C64::new(0.0, 0.0);
        for &(b, a, c) in &self.terms {
            acc += c * (self.base.t_hat(b, a, zero) - self.base.t_hat(b, a, r));
        }
        acc
    }

    pub fn total_mass(&self) -> Option<f64> {
        let mut acc = 0.0;
        if self.base_weight != 0.0 {
            acc += self.base_weight * self.base.total_mass()?;
        }
        let zero = C64::new(0.0, 0.0);
        for &(b, a, c) in &self.terms {
            acc += (c * self.base.t_hat(b, a, zero)).re;
        }
        Some(acc)
    }

    /// Laplace transform of chi, when its mass is finite.
    pub fn transform(&self, r: C64) -> Option<C64> {
        Some(C64::new(self.total_mass()?, 0.0) - self.phi(r))
    }

    /// Laplace transform of the tail function u -> chi((u, inf)).
    pub fn tail_transform(&self, r: C64) -> C64 {
        self.phi(r) / r
    }

    pub fn base(&self) -> &dyn JumpMeasure {
        &*self.base
    }
}

pub fn chi_measure(model: &LevyModel, rs: &RootSet, constants: &WHConstants) -> Result<ChiMeasure> {
    let case = rs.case;
    let (base, weight, star): (Arc<dyn JumpMeasure>, f64, bool) = match case {
        CaseLabel::A => (Arc::from(model.neg.levy_measure()?), 1.0, false),
        CaseLabel::B => (Arc::from(model.neg.levy_measure()?), 0.0, false),
        CaseLabel::C => (Arc::from(model.neg.tail_measure()?), 1.0, true),
    };
    let mut terms = Vec::new();
    for (j, &(b, k)) in constants.roots.iter().enumerate() {
        for a in 0..k {
            let c = if star { -constants.e_star[j][a] } else { constants.e[j][a] };
            terms.push((b, a, c));
        }
    }
    Ok(ChiMeasure { case, base, base_weight: weight, terms })
}

/// Everything derived from a model and a killing rate.
#[derive(Debug, Clone)]
pub struct WienerHopf {
    pub model: LevyModel,
    pub q: f64,
    pub roots: RootSet,
    pub kappa: KappaFactor,
    pub constants: WHConstants,
    pub a: f64,
    pub kappa0: f64,
    pub chi: ChiMeasure,
}

impl WienerHopf {
    pub fn new(model: &LevyModel, q: f64) -> Result<Self> {
        let roots = solve_lundberg(model, q)?;
        Self::from_roots(model, roots)
    }

    pub fn from_roots(model: &LevyModel, roots: RootSet) -> Result<Self> {
        let kappa = KappaFactor::new(&roots, &model.pos);
        let constants = wh_constants(&roots, model)?;
        let a = a_of_q(&roots, model)?;
        let kappa0 = kappa.kappa(C64::new(0.0, 0.0))?.re;
        let chi = chi_measure(model, &roots, &constants)?;
        Ok(WienerHopf { model: model.clone(), q: roots.q, roots, kappa, constants, a, kappa0, chi })
    }

    pub fn case(&self) -> CaseLabel {
        self.roots.case
    }

    pub fn gamma2(&self) -> f64 {
        self.model.gamma.powi(2)
    }

    pub fn kappa_hat(&self, r: C64) -> Result<C64> {
        self.kappa.kappa_hat(&self.model, r)
    }

    /// Right-hand side of the master identity: a + gamma^2 r + Phi(r).
    pub fn kappa_hat_by_chi(&self, r: C64) -> C64 {
        r * self.gamma2() + self.a + self.chi.phi(r)
    }

    /// Relative gap between (q - Psi_X(r)) / kappa(q, -r) and a + gamma^2 r + Phi(r).
    pub fn master_identity_residual(&self, r: C64) -> Result<f64> {
        let lhs = (self.q - self.model.psi(r)?) / self.kappa.kappa(-r)?;
        let rhs = self.kappa_hat_by_chi(r);
        Ok((lhs - rhs).norm() / lhs.norm())
    }

    /// Mass of -I at zero: a / (a + chi(0, inf)) when gamma = 0 and chi is finite.
    pub fn atom(&self) -> f64 {
        if self.model.gamma > 0.0 {
            return 0.0;
        }
        match self.chi.total_mass() {
            Some(m) => self.a / (self.a + m),
            None => 0.0,
        }
    }
}

/// Lagrange-type sum J_0(r) over the nodes; returns (value, largest term).
pub fn j0_sum(pos: &RationalJumpPart, r: C64, nodes: &[C64]) -> (C64, f64) {
    let p1 = pos.p1_poly();
    let mgf = |z: C64| pos.mgf(z);
    let fr = mgf(r);
    let mut acc = C64::new(0.0, 0.0);
    let mut biggest: f64 = 0.0;
    for (j, &rj) in nodes.iter().enumerate() {
        let mut den = C64::new(1.0, 0.0);
        for (k, &rk) in nodes.iter().enumerate() {
            if k != j {
                den *= rk - rj;
            }
        }
        let term = p1.eval(rj) / den * (fr - mgf(rj)) / (rj - r) * pos.rate;
        biggest = biggest.max(term.norm());
        acc += term;
    }
    (acc, biggest)
}
