//! Acceptance suite. Each test prints one PASS/FAIL line straight to stderr so
//! the lines survive output capture. Run with `cargo test --test acceptance`.

use std::io::Write;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use whfactor::density::{cdf_neg_wh, closed_form_exp_case, density_series, GridSpec};
use whfactor::laplace::{cdf_via_inversion, density_via_inversion, frullani_reconstruction, laplace_neg_wh, levy_exponent_quadrature, TransformForm};
use whfactor::lundberg::{expected_root_count, solve_lundberg};
use whfactor::model::{NegativeJumpPart, Pole, RationalJumpPart};
use whfactor::numeric::quad::{integrate, integrate_to_infinity};
use whfactor::simulate::{estimate_cdf, is_exact, ks_compare, simulate_infimum, stable_log_laplace, SimConfig};
use whfactor::wh::{j0_sum, t_operator, TTarget, WienerHopf};
use whfactor::{CaseLabel, LevyModel, C64};

fn report(id: u32, title: &str, pass: bool, detail: &str, took: Duration) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {id:>2} {tag} {title}: {detail} [{:.1}s]", took.as_secs_f64());
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---- random models -------------------------------------------------------

fn random_pos(g: &mut ChaCha8Rng) -> RationalJumpPart {
    let rate = g.random_range(0.5..2.0);
    match g.random_range(0..3) {
        0 => RationalJumpPart::exponential(rate, g.random_range(0.5..3.0)),
        1 => RationalJumpPart::erlang(rate, g.random_range(0.8..3.0), g.random_range(2..=3)),
        _ => {
            let k = g.random_range(2..=3);
            let mut alpha = g.random_range(0.4..1.5);
            let mut parts = Vec::new();
            for _ in 0..k {
                parts.push((g.random_range(0.2..1.0), alpha));
                alpha += g.random_range(0.4..2.0);
            }
            let total: f64 = parts.iter().map(|p| p.0).sum();
            parts.iter_mut().for_each(|p| p.0 /= total);
            RationalJumpPart::hyperexponential(rate, &parts)
        }
    }
}

fn random_cp(g: &mut ChaCha8Rng, finite_mean: bool) -> NegativeJumpPart {
    let rate = g.random_range(0.3..2.0);
    match g.random_range(0..3) {
        0 => NegativeJumpPart::CompoundPoissonExp { rate, p: g.random_range(0.5..3.0) },
        1 => {
            let w = g.random_range(0.2..0.8);
            let p1 = g.random_range(0.5..1.5);
            NegativeJumpPart::CompoundPoissonMixExp { rate, parts: vec![(w, p1), (1.0 - w, p1 + g.random_range(0.5..3.0))] }
        }
        _ => {
            let c_shape = g.random_range(1.0..3.0);
            let lo = if finite_mean { 1.2 / c_shape } else { 0.5 };
            NegativeJumpPart::CompoundPoissonBurr { rate, theta: g.random_range(0.5..2.0), c_shape, xi: g.random_range(lo..lo + 1.5) }
        }
    }
}

/// Random model of the requested case with E[X(1)] > 0 whenever the mean is finite.
fn random_model(g: &mut ChaCha8Rng, case: usize) -> LevyModel {
    let pos = random_pos(g);
    let up = pos.rate * pos.mean();
    match case {
        // A: no drift, no diffusion
        0 => {
            let neg = if g.random_bool(0.5) {
                NegativeJumpPart::StableSubordinator { xi: g.random_range(0.3..0.8) }
            } else {
                let p = g.random_range(0.5..3.0);
                NegativeJumpPart::CompoundPoissonExp { rate: up * p * g.random_range(0.2..0.9), p }
            };
            LevyModel::new(0.0, 0.0, pos, neg)
        }
        // B: positive drift, subordinator
        1 => {
            let neg = if g.random_bool(0.25) {
                NegativeJumpPart::StableSubordinator { xi: g.random_range(0.3..0.8) }
            } else {
                let finite = g.random_bool(0.7);
                random_cp(g, finite)
            };
            let need = if neg.mean().is_finite() { neg.mean() - up } else { 0.0 };
            LevyModel::new(need.max(0.0) + g.random_range(0.3..1.5), 0.0, pos, neg)
        }
        // C without diffusion
        2 => {
            let neg = NegativeJumpPart::SpectrallyPositiveStable { xi: g.random_range(1.2..1.8) };
            LevyModel::new(g.random_range(0.0..1.5), 0.0, pos, neg)
        }
        // C with diffusion
        _ => {
            let neg = if g.random_bool(0.3) {
                NegativeJumpPart::SpectrallyPositiveStable { xi: g.random_range(1.2..1.8) }
            } else {
                random_cp(g, true)
            };
            let need = (neg.mean() - up).max(0.0);
            LevyModel::new(need + g.random_range(0.1..1.0), g.random_range(0.3..1.2), pos, neg)
        }
    }
}

fn finite_variance(neg: &NegativeJumpPart) -> bool {
    match neg {
        NegativeJumpPart::CompoundPoissonBurr { c_shape, xi, .. } => c_shape * xi > 2.0,
        NegativeJumpPart::StableSubordinator { .. } | NegativeJumpPart::SpectrallyPositiveStable { .. } => false,
        _ => true,
    }
}

const CASES: [&str; 4] = ["A", "B", "C(gamma=0)", "C(gamma>0)"];

fn two_sided_exp() -> LevyModel {
    LevyModel::new(1.0, 0.0, RationalJumpPart::exponential(1.0, 1.0), NegativeJumpPart::CompoundPoissonExp { rate: 1.0, p: 1.0 })
}

/// The models shipped under configs/, paired with their killing rates.
fn shipped_models() -> Vec<(&'static str, LevyModel, f64)> {
    vec![
        ("two_sided_exp", two_sided_exp(), 0.5),
        ("stable_case_a", LevyModel::new(0.0, 0.0, RationalJumpPart::exponential(1.0, 2.0), NegativeJumpPart::StableSubordinator { xi: 0.5 }), 1.0),
        (
            "burr_case_b",
            LevyModel::new(3.0, 0.0, RationalJumpPart::exponential(1.0, 2.0), NegativeJumpPart::CompoundPoissonBurr { rate: 1.0, theta: 1.0, c_shape: 1.0, xi: 1.0 }),
            1.0,
        ),
        (
            "sp_stable_case_c",
            LevyModel::new(
                0.5,
                1.0,
                RationalJumpPart::new(1.0, vec![Pole { alpha: 1.0, n: 2 }, Pole { alpha: 3.0, n: 1 }], vec![3.0]),
                NegativeJumpPart::SpectrallyPositiveStable { xi: 1.5 },
            ),
            0.7,
        ),
        (
            "erlang_diffusion_case_c",
            LevyModel::new(0.3, 0.8, RationalJumpPart::erlang(1.5, 2.0, 2), NegativeJumpPart::CompoundPoissonMixExp { rate: 1.0, parts: vec![(0.4, 1.0), (0.6, 3.0)] }),
            0.5,
        ),
    ]
}

/// int_0^inf e^{-r u} g(u) du, with u = L t^4 near the origin to absorb integrable singularities.
fn laplace_in_u(g: &dyn Fn(f64) -> f64, r: f64, scale: f64) -> f64 {
    let f = |u: f64| (-r * u).exp() * g(u);
    let head = integrate(|t: f64| if t <= 0.0 { 0.0 } else { 4.0 * scale * t.powi(3) * f(scale * t.powi(4)) }, 0.0, 1.0, 1e-15, 1e-12);
    let tail = integrate_to_infinity(f, scale, scale, 1e-15, 1e-12);
    head.value + tail.value
}

// ---- criteria -------------------------------------------------------------

#[test]
fn c01_master_identity() {
    let t0 = Instant::now();
    let mut g = rng(101);
    let mut worst = [0.0f64; 4];
    for (case, w) in worst.iter_mut().enumerate() {
        for _ in 0..10 {
            let m = random_model(&mut g, case);
            let a1 = m.pos.alpha_min();
            for q in [0.5, 1.0, 5.0] {
                let wh = WienerHopf::new(&m, q).unwrap();
                assert_eq!(wh.case(), [CaseLabel::A, CaseLabel::B, CaseLabel::C, CaseLabel::C][case]);
                for k in 0..20 {
                    let r = if k < 10 {
                        C64::new(a1 * (0.02 + 0.96 * g.random::<f64>()), 0.0)
                    } else {
                        C64::new(g.random_range(0.05..3.0), g.random_range(-3.0..3.0))
                    };
                    *w = w.max(wh.master_identity_residual(r).unwrap());
                }
            }
        }
    }
    let took = t0.elapsed();
    let pass = worst.iter().all(|&w| w <= 1e-8) && took < Duration::from_secs(30);
    let detail = CASES.iter().zip(&worst).map(|(c, w)| format!("{c} {w:.1e}")).collect::<Vec<_>>().join(", ");
    report(1, "master identity, 40 models x 3 q x 20 r, tol 1e-8", pass, &detail, took);
    assert!(pass);
}

#[test]
fn c02_root_certification() {
    let t0 = Instant::now();
    let mut g = rng(202);
    let (mut count_bad, mut beta_bad, mut limit_bad, mut limit_checked) = (0, 0, 0, 0);
    let (mut worst_res, mut worst_limit, mut worst_heavy) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..100 {
        let m = random_model(&mut g, i % 4);
        let q = g.random_range(0.1..5.0);
        let rs = solve_lundberg(&m, q).unwrap();
        let cert = rs.cert.as_ref().expect("certificate");
        if cert.winding_count != expected_root_count(&m).unwrap() as i64 || !rs.is_certified() {
            count_bad += 1;
        }
        let b1 = rs.roots[0];
        worst_res = worst_res.max(b1.residual);
        if !(b1.value.im == 0.0 && b1.value.re > 0.0 && b1.value.re < m.pos.alpha_min() && b1.residual <= 1e-10) {
            beta_bad += 1;
        }
        let mean = m.mean();
        if mean.is_finite() && mean > 0.0 {
            let small = 1e-6;
            let b = solve_lundberg(&m, small).unwrap().beta1();
            let rel = (small / b - mean).abs() / mean;
            // without a second moment the gap decays like beta1^(index - 1), far slower than q
            if finite_variance(&m.neg) {
                limit_checked += 1;
                worst_limit = worst_limit.max(rel);
                if rel > 0.01 {
                    limit_bad += 1;
                }
            } else {
                worst_heavy = worst_heavy.max(rel);
            }
        }
    }
    let took = t0.elapsed();
    let pass = count_bad == 0 && beta_bad == 0 && limit_bad == 0 && took < Duration::from_secs(60);
    let detail = format!(
        "winding mismatches {count_bad}, beta1 failures {beta_bad} (worst residual {worst_res:.1e}), q/beta1 limit off by {worst_limit:.1e} over {limit_checked} finite-variance models; info: infinite-variance worst {worst_heavy:.1e}"
    );
    report(2, "root certification, 100 models", pass, &detail, took);
    assert!(pass);
}

/// Test-side roots of c r + l1 (eta/(eta - r) - 1) - l2 r/(r + p) = q by bisection.
fn two_sided_exp_oracle(c: f64, l1: f64, eta: f64, p: f64, q: f64, l2: f64) -> (f64, f64) {
    let f = |r: f64| c * r + l1 * (eta / (eta - r) - 1.0) - l2 * r / (r + p) - q;
    let bisect = |mut lo: f64, mut hi: f64| {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (f(mid) > 0.0) == (f(hi) > 0.0) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let b1 = bisect(0.0, eta * (1.0 - 1e-15));
    let b2 = bisect(eta * (1.0 + 1e-15), eta + 10.0 * (q + l1 + l2) / c + 10.0);
    let cq = (eta - b1) / ((b2 - b1) * (b1 + p)) + (b2 - eta) / ((b2 - b1) * (b2 + p));
    (cq, (c - cq) / c)
}

#[test]
fn c03_closed_form_example() {
    let t0 = Instant::now();
    let (c, l1, eta, p, q, l2) = (1.0, 1.0, 1.0, 1.0, 0.5, 1.0);
    let (cq, atom) = two_sided_exp_oracle(c, l1, eta, p, q, l2);
    let decay = p * (c - cq) / c;
    let oracle = |u: f64| p * (c - cq) * cq / (c * c) * (-decay * u).exp();

    let wh = Arc::new(WienerHopf::new(&two_sided_exp(), q).unwrap());
    let d = density_series(&wh, GridSpec { h: None, u_max: Some(20.0), richardson: true }, 1e-12, 5000).unwrap();
    let cf = closed_form_exp_case(c, l1, eta, p, q, l2).unwrap();
    let (mut s_o, mut s_cf, mut i_o, mut i_s) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for k in 0..d.density.len() {
        let u = d.density.u(k);
        let s = d.density.values[k];
        s_o = s_o.max((s - oracle(u)).abs());
        s_cf = s_cf.max((s - cf.density(u)).abs());
        if k > 0 && k % 10 == 0 {
            let inv = density_via_inversion(&wh, u).unwrap();
            i_o = i_o.max((inv - oracle(u)).abs());
            i_s = i_s.max((inv - s).abs());
        }
    }
    let atom_err = (d.atom0 - atom).abs().max((cf.atom - atom).abs());
    let took = t0.elapsed();
    let sup = s_o.max(s_cf).max(i_o).max(i_s);
    let pass = sup <= 1e-6 && atom_err <= 1e-10 && took < Duration::from_secs(10);
    let detail = format!(
        "series-oracle {s_o:.1e}, series-closed {s_cf:.1e}, inversion-oracle {i_o:.1e}, inversion-series {i_s:.1e}, atom {atom_err:.1e}"
    );
    report(3, "closed-form exponential case on [0, 20]", pass, &detail, took);
    assert!(pass);
}

#[test]
fn c04_mass_and_checkback() {
    let t0 = Instant::now();
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, m, q) in shipped_models() {
        let wh = Arc::new(WienerHopf::new(&m, q).unwrap());
        let d = density_series(&wh, GridSpec { h: None, u_max: None, richardson: true }, 1e-8, 5000).unwrap();
        let mass = (d.mass_balance() - 1.0).abs();
        let mut gap: f64 = 0.0;
        for r in [0.5, 1.0, 2.0] {
            let want = laplace_neg_wh(&wh, C64::new(r, 0.0), TransformForm::CaseFormula).unwrap().re;
            gap = gap.max((d.laplace_checkback(&wh, r).unwrap() - want).abs());
        }
        pass &= mass <= 1e-5 && gap <= 1e-4;
        lines.push(format!("{name} mass {mass:.1e} checkback {gap:.1e}"));
    }
    report(4, "mass conservation and Laplace checkback", pass, &lines.join(", "), t0.elapsed());
    assert!(pass);
}

#[test]
fn c05_levy_measure_of_infimum() {
    let t0 = Instant::now();
    let mut models = shipped_models();
    models.push(("cp_case_a", LevyModel::new(0.0, 0.0, RationalJumpPart::exponential(2.0, 1.0), NegativeJumpPart::CompoundPoissonExp { rate: 1.0, p: 2.0 }), 0.8));
    models.push(("sp_stable_no_diffusion", LevyModel::new(0.4, 0.0, RationalJumpPart::exponential(1.0, 1.5), NegativeJumpPart::SpectrallyPositiveStable { xi: 1.4 }), 1.0));
    let rs = [0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 5.0, 8.0];
    let (mut quad, mut rec, mut literal) = (0.0f64, 0.0f64, 0.0f64);
    let mut cases = Vec::new();
    for (_, m, q) in &models {
        let wh = WienerHopf::new(m, *q).unwrap();
        cases.push(wh.case().to_string());
        for &r in &rs {
            let closed = (-wh.kappa0 * wh.chi.phi(C64::new(r, 0.0)).re).exp();
            let by_quad = (-levy_exponent_quadrature(&wh, r).unwrap()).exp();
            quad = quad.max((by_quad - closed).abs() / closed);
            let aw = laplace_neg_wh(&wh, C64::new(r, 0.0), TransformForm::CaseFormula).unwrap().re;
            rec = rec.max((frullani_reconstruction(&wh, r).unwrap() - aw).abs() / aw);
            literal = literal.max((by_quad - aw).abs() / aw);
        }
    }
    cases.sort();
    cases.dedup();
    let pass = quad <= 1e-6 && rec <= 1e-6 && cases.len() == 3;
    let detail = format!(
        "cases {}: exponent quadrature {quad:.1e}, exponential-time reconstruction {rec:.1e}; info: exp(-kappa0 int (1-e^-rx) chi(dx)) vs aW gap {literal:.2e}",
        cases.join("/")
    );
    report(5, "Levy measure of the infimum (Frullani form)", pass, &detail, t0.elapsed());
    assert!(pass);
}

#[test]
fn c06_monte_carlo_example() {
    let t0 = Instant::now();
    let m = two_sided_exp();
    let q = 0.5;
    assert!(is_exact(&m));
    let wh = Arc::new(WienerHopf::new(&m, q).unwrap());
    let d = density_series(&wh, GridSpec { h: None, u_max: None, richardson: true }, 1e-10, 5000).unwrap();
    let cfg = SimConfig { n_paths: 100_000, dt: 1e-3, seed: 20240611, bridge_correction: true };
    let emp = estimate_cdf(&simulate_infimum(&m, q, &cfg).unwrap()).unwrap();
    let ks = ks_compare(&emp, &|u| cdf_neg_wh(&wh, &d, u), d.atom0, false).unwrap();
    let took = t0.elapsed();
    let pass = ks.ks_pass && ks.atom_pass && took < Duration::from_secs(120);
    let detail = format!(
        "D = {:.4} vs {:.4} on {} positive draws, atom {:.5} vs {:.5} (z = {:.2})",
        ks.d_n, ks.threshold, ks.n_positive, ks.atom_freq, ks.atom_model, ks.atom_z
    );
    report(6, "Monte Carlo, exact paths, n = 1e5", pass, &detail, took);
    assert!(pass);
}

#[test]
fn c07_stable_subordinator_tail() {
    let t0 = Instant::now();
    let m = LevyModel::new(0.0, 0.0, RationalJumpPart::exponential(1.0, 2.0), NegativeJumpPart::StableSubordinator { xi: 0.5 });
    let wh = Arc::new(WienerHopf::new(&m, 1.0).unwrap());
    assert_eq!(wh.case(), CaseLabel::A);
    let law = |u: f64| u.powf(-0.5) / std::f64::consts::PI.sqrt();
    let ratios: Vec<f64> = [1e1, 1e2, 1e3, 1e4].iter().map(|&u| cdf_via_inversion(&wh, u).unwrap() / law(u)).collect();
    let last = ratios[3];
    let toward_one = ratios.windows(2).all(|w| (w[1] - 1.0).abs() <= (w[0] - 1.0).abs());
    let took = t0.elapsed();
    let pass = (0.9..=1.1).contains(&last) && toward_one && took < Duration::from_secs(120);
    let detail = format!("ratios at 1e1..1e4: {}", ratios.iter().map(|r| format!("{r:.5}")).collect::<Vec<_>>().join(" "));
    report(7, "stable subordinator tail u^-1/2 / Gamma(1/2)", pass, &detail, took);
    assert!(pass);
}

#[test]
fn c08_burr_tail() {
    let t0 = Instant::now();
    let (l2, theta, c_shape, xi, q) = (1.0, 1.0, 1.0, 1.0, 1.0);
    let m = LevyModel::new(3.0, 0.0, RationalJumpPart::exponential(1.0, 2.0), NegativeJumpPart::CompoundPoissonBurr { rate: l2, theta, c_shape, xi });
    let wh = WienerHopf::new(&m, q).unwrap();
    assert_eq!(wh.case(), CaseLabel::B);
    let u: f64 = 1e5;
    let lhs = wh.kappa0 * wh.chi.tail(u).unwrap() / q;
    let rhs = l2 / q * (theta / (theta + u.powf(c_shape))).powf(xi);
    let ratio = lhs / rhs;
    let pass = (ratio - 1.0).abs() <= 0.05;
    report(8, "Burr tail at u = 1e5", pass, &format!("ratio {ratio:.5}"), t0.elapsed());
    assert!(pass);
}

/// Five-point stencils for the first and second derivative.
fn d1(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

fn d2(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h)) / (12.0 * h * h)
}

#[test]
fn c09_operator_calculus() {
    let t0 = Instant::now();
    let mut g = rng(909);

    // derivative identity in s of the transformed tilted operator
    let targets = [
        (NegativeJumpPart::CompoundPoissonExp { rate: 1.3, p: 2.0 }, TTarget::Measure),
        (NegativeJumpPart::CompoundPoissonMixExp { rate: 0.8, parts: vec![(0.3, 0.7), (0.7, 2.5)] }, TTarget::Measure),
        (NegativeJumpPart::CompoundPoissonBurr { rate: 1.0, theta: 1.0, c_shape: 2.0, xi: 1.5 }, TTarget::Density),
        (NegativeJumpPart::StableSubordinator { xi: 0.5 }, TTarget::Measure),
        (NegativeJumpPart::SpectrallyPositiveStable { xi: 1.5 }, TTarget::Tail),
    ];
    let mut deriv: f64 = 0.0;
    for (neg, target) in &targets {
        for _ in 0..2 {
            let s0 = g.random_range(0.5..2.5);
            let r = g.random_range(0.3..2.5);
            let that = |s: f64, a: usize| laplace_in_u(&|u| t_operator(neg, C64::new(s, 0.0), a, *target, u).unwrap().re, r, 1.0);
            let f0 = |s: f64| that(s, 0);
            let one = that(s0, 1);
            let two = that(s0, 2);
            deriv = deriv.max((d1(&f0, s0, 1e-3) + one).abs() / one.abs());
            deriv = deriv.max((d2(&f0, s0, 2e-2) - two).abs() / two.abs());
        }
    }

    // interpolation sum vanishes
    let mut j0: f64 = 0.0;
    for _ in 0..50 {
        let pos = if g.random_bool(0.5) {
            random_pos(&mut g)
        } else {
            let a1 = g.random_range(0.5..1.5);
            let a2 = a1 + g.random_range(0.5..2.0);
            let num = vec![a1 * a1 * a2, g.random_range(0.0..1.0)];
            RationalJumpPart::new(g.random_range(0.5..2.0), vec![Pole { alpha: a1, n: 2 }, Pole { alpha: a2, n: 1 }], num)
        };
        let m = pos.m();
        let mut nodes: Vec<C64> = Vec::new();
        while nodes.len() < m + 1 {
            let z = C64::new(g.random_range(-2.0..4.0), g.random_range(-2.0..2.0));
            let clear_poles = pos.poles.iter().all(|p| (z - p.alpha).norm() > 0.2);
            if clear_poles && nodes.iter().all(|w| (z - w).norm() > 0.2) {
                nodes.push(z);
            }
        }
        let r = loop {
            let z = C64::new(g.random_range(-2.0..4.0), g.random_range(-2.0..2.0));
            if pos.poles.iter().all(|p| (z - p.alpha).norm() > 0.2) && nodes.iter().all(|w| (z - w).norm() > 0.2) {
                break z;
            }
        };
        let (v, big) = j0_sum(&pos, r, &nodes);
        j0 = j0.max(v.norm() / big);
    }

    // translation identity for families with a finite mean
    let families = [
        NegativeJumpPart::SpectrallyPositiveStable { xi: 1.3 },
        NegativeJumpPart::SpectrallyPositiveStable { xi: 1.7 },
        NegativeJumpPart::CompoundPoissonExp { rate: 1.1, p: 1.5 },
        NegativeJumpPart::CompoundPoissonMixExp { rate: 0.9, parts: vec![(0.5, 1.0), (0.5, 4.0)] },
        NegativeJumpPart::CompoundPoissonBurr { rate: 1.0, theta: 2.0, c_shape: 1.5, xi: 2.0 },
    ];
    let mut trans: f64 = 0.0;
    for neg in &families {
        for _ in 0..3 {
            let r1 = g.random_range(0.2..4.0);
            let r2 = g.random_range(0.2..4.0);
            let psi = |r: f64| neg.compensated_exponent(C64::new(r, 0.0)).re;
            let lhs = (psi(r1) - psi(r2)) / (r2 - r1);
            let that = laplace_in_u(&|u| t_operator(neg, C64::new(r2, 0.0), 0, TTarget::Tail, u).unwrap().re, r1, 1.0);
            let rhs = r2 * that - psi(r1) / r1;
            trans = trans.max((lhs - rhs).abs() / lhs.abs());
        }
    }

    let pass = deriv <= 1e-5 && j0 <= 1e-9 && trans <= 1e-7;
    let detail = format!("derivative identity {deriv:.1e}, J0 {j0:.1e} over 50 configs, translation {trans:.1e}");
    report(9, "operator calculus", pass, &detail, t0.elapsed());
    assert!(pass);
}

#[test]
fn c10_stable_pinning() {
    let t0 = Instant::now();
    let dt = 1e-3;
    let mut worst: f64 = 0.0;
    for neg in [NegativeJumpPart::StableSubordinator { xi: 0.5 }, NegativeJumpPart::StableSubordinator { xi: 0.8 }, NegativeJumpPart::SpectrallyPositiveStable { xi: 1.5 }, NegativeJumpPart::SpectrallyPositiveStable { xi: 1.2 }] {
        let xi = match neg {
            NegativeJumpPart::StableSubordinator { xi } | NegativeJumpPart::SpectrallyPositiveStable { xi } => xi,
            _ => unreachable!(),
        };
        for r in [0.5, 1.0, 2.0] {
            // the sampler draws S(dt); the model subtracts Psi_S, so the two must cancel
            let psi = neg.exponent(C64::new(r, 0.0)).re;
            worst = worst.max((stable_log_laplace(xi, r, dt) + psi).abs() / psi.abs());
        }
    }
    let pass = worst <= 1e-3;
    report(10, "stable normalization pinning, both families", pass, &format!("worst relative gap {worst:.1e}"), t0.elapsed());
    assert!(pass);
}
