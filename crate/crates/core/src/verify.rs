//! Cross-checks of one model: roots, identities, density, oracles and simulation.

use std::sync::Arc;

use serde::Serialize;

use crate::density::{closed_form_exp_case, density_series, GridSpec, Method, NegWHDistribution};
use crate::error::Result;
use crate::laplace::{
    frullani_reconstruction, invert_transform, laplace_neg_wh, levy_exponent_quadrature, default_terms, TransformForm,
    TransformHandle,
};
use crate::model::{CaseLabel, LevyModel, NegativeJumpPart};
use crate::numeric::C64;
use crate::simulate::{estimate_cdf, is_exact, ks_compare, simulate_infimum, SimConfig};
use crate::wh::WienerHopf;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub note: Option<String>,
}

impl Check {
    fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), value, tolerance, pass: value <= tolerance, note: None }
    }

    fn skipped(name: &str, why: impl Into<String>) -> Self {
        Check { name: name.into(), value: f64::NAN, tolerance: f64::NAN, pass: true, note: Some(why.into()) }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub case: CaseLabel,
    pub q: f64,
    pub method: Method,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub grid: GridSpec,
    pub tol: f64,
    /// Monte Carlo paths; 0 skips the simulation check.
    pub paths: usize,
    pub seed: u64,
    pub dt: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { grid: GridSpec { richardson: true, ..Default::default() }, tol: 1e-12, paths: 10_000, seed: 1, dt: 1e-3 }
    }
}

/// Real and complex points for the identity checks, away from the poles of f1.
pub fn probe_points(model: &LevyModel) -> Vec<C64> {
    let mut out: Vec<C64> = [0.1, 0.37, 0.9, 2.3, 5.1]
        .iter()
        .filter(|&&r| model.pos.poles.iter().all(|p| (r - p.alpha).abs() > 1e-2 * p.alpha))
        .map(|&r| C64::new(r, 0.0))
        .collect();
    out.extend([C64::new(0.5, 1.0), C64::new(2.0, -3.0), C64::new(0.1, 0.1)]);
    out
}

fn is_two_sided_exp(model: &LevyModel) -> Option<(f64, f64, f64)> {
    match (&model.neg, model.pos.poles.as_slice()) {
        (NegativeJumpPart::CompoundPoissonExp { rate, p }, [pole]) if pole.n == 1 && model.gamma == 0.0 && model.c > 0.0 => {
            Some((pole.alpha, *p, *rate))
        }
        _ => None,
    }
}

pub fn verify_model(model: &LevyModel, q: f64, opts: &VerifyOptions) -> Result<VerifyReport> {
    let wh = Arc::new(WienerHopf::new(model, q)?);
    let mut checks = Vec::new();

    let cert = &wh.roots.cert;
    checks.push(
        Check { name: "roots_certified".into(), value: wh.roots.max_residual, tolerance: 1e-10, pass: wh.roots.is_certified(), note: None }
            .with_note(match cert {
                Some(c) => format!("winding {} for {} roots", c.winding_count, wh.roots.total_multiplicity()),
                None => "no contour certificate".into(),
            }),
    );

    let mut worst: f64 = 0.0;
    for r in probe_points(model) {
        worst = worst.max(wh.master_identity_residual(r)?);
    }
    checks.push(Check::at_most("master_identity", worst, 1e-8));

    let dist = density_series(&wh, opts.grid, opts.tol, 5000)?;
    checks.push(Check::at_most("mass_balance", (dist.mass_balance() - 1.0).abs(), 1e-5));
    let mut gap: f64 = 0.0;
    for r in [0.5, 1.0, 2.0] {
        let want = laplace_neg_wh(&wh, C64::new(r, 0.0), TransformForm::CaseFormula)?.re;
        gap = gap.max((dist.laplace_checkback(&wh, r)? - want).abs());
    }
    checks.push(Check::at_most("laplace_checkback", gap, 1e-4));
    let neg_min = dist.density.values.iter().fold(0.0f64, |m, v| m.min(*v));
    checks.push(Check::at_most("density_nonnegative", -neg_min, 1e-9));
    let rise = dist.survival.windows(2).fold(0.0f64, |m, w| m.max(w[1] - w[0]));
    checks.push(Check::at_most("cdf_monotone", rise, 1e-12));

    checks.push(series_vs_inversion(&wh, &dist)?);
    if let Some(renewal) = &dist.renewal_survival {
        let g = renewal.iter().zip(&dist.survival).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        checks.push(Check::at_most("renewal_consistency", g, 1e-6));
    }

    if let Some((eta, p, lambda2)) = is_two_sided_exp(model) {
        let cf = closed_form_exp_case(model.c, model.pos.rate, eta, p, q, lambda2)?;
        let mut g: f64 = 0.0;
        for k in 0..dist.density.len() {
            let u = dist.density.u(k);
            g = g.max((dist.density.values[k] - cf.density(u)).abs()).max((dist.survival[k] - cf.survival(u)).abs());
        }
        checks.push(Check::at_most("closed_form", g, 1e-6));
        checks.push(Check::at_most("closed_form_atom", (dist.atom0 - cf.atom).abs(), 1e-10));
    }

    if q > 0.0 {
        let (mut rec, mut lev): (f64, f64) = (0.0, 0.0);
        for r in [0.2, 0.7, 1.5, 4.0, 9.0] {
            let aw = laplace_neg_wh(&wh, C64::new(r, 0.0), TransformForm::CaseFormula)?.re;
            rec = rec.max((frullani_reconstruction(&wh, r)? - aw).abs() / aw);
            let closed = (-wh.kappa0 * wh.chi.phi(C64::new(r, 0.0)).re).exp();
            lev = lev.max(((-levy_exponent_quadrature(&wh, r)?).exp() - closed).abs() / closed);
        }
        checks.push(Check::at_most("frullani_reconstruction", rec, 1e-6));
        checks.push(Check::at_most("levy_exponent_quadrature", lev, 1e-6));
    }

    if opts.paths > 0 && q > 0.0 {
        let cfg = SimConfig { n_paths: opts.paths, dt: opts.dt, seed: opts.seed, bridge_correction: true };
        let samples = simulate_infimum(model, q, &cfg)?;
        let emp = estimate_cdf(&samples)?;
        let surv = |u: f64| crate::density::cdf_neg_wh(&wh, &dist, u);
        let exact = is_exact(model);
        let ks = ks_compare(&emp, &surv, dist.atom0, !exact)?;
        checks.push(
            Check { name: "monte_carlo_ks".into(), value: ks.d_n, tolerance: ks.threshold, pass: ks.ks_pass, note: None }
                .with_note(if exact { "exact event-driven paths" } else { "time grid, 25% allowance" }),
        );
        checks.push(Check {
            name: "monte_carlo_atom".into(),
            value: ks.atom_z.abs(),
            tolerance: 3.0,
            pass: ks.atom_pass,
            note: Some(format!("observed {:.6} vs model {:.6}", ks.atom_freq, ks.atom_model)),
        });
    } else {
        checks.push(Check::skipped("monte_carlo_ks", "no paths requested or q = 0"));
    }

    Ok(VerifyReport { case: wh.case(), q, method: dist.method, checks })
}

fn series_vs_inversion(wh: &Arc<WienerHopf>, dist: &NegWHDistribution) -> Result<Check> {
    if dist.method != Method::Series {
        return Ok(Check::skipped("series_vs_inversion", dist.notice.clone().unwrap_or_else(|| "inversion used".into())));
    }
    let h = TransformHandle::density(wh);
    let m = h.preferred_method();
    let n = dist.density.len();
    let step = (n / 40).max(1);
    let mut g: f64 = 0.0;
    for k in (1..n).step_by(step) {
        let v = invert_transform(&h, dist.density.u(k), m, default_terms(m))?;
        g = g.max((v - dist.density.values[k]).abs());
    }
    Ok(Check::at_most("series_vs_inversion", g, 1e-4))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RationalJumpPart;

    #[test]
    fn two_sided_exp_verifies() {
        let m = LevyModel::new(1.0, 0.0, RationalJumpPart::exponential(1.0, 1.0), NegativeJumpPart::CompoundPoissonExp { rate: 1.0, p: 1.0 });
        let rep = verify_model(&m, 0.5, &VerifyOptions { paths: 20_000, ..Default::default() }).unwrap();
        for c in &rep.checks {
            assert!(c.pass, "{c:?}");
        }
        assert!(rep.checks.iter().any(|c| c.name == "closed_form"));
    }

    #[test]
    fn stable_case_a_verifies() {
        let m = LevyModel::new(0.0, 0.0, RationalJumpPart::exponential(1.0, 2.0), NegativeJumpPart::StableSubordinator { xi: 0.6 });
        let rep = verify_model(&m, 0.5, &VerifyOptions { paths: 0, ..Default::default() }).unwrap();
        for c in &rep.checks {
            assert!(c.pass, "{c:?}");
        }
        assert_eq!(rep.method, Method::Inversion);
    }
}
