//! Monte Carlo paths of X up to an independent exponential time.

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{burr_quantile, ErlangTerm, LevyModel, NegativeJumpPart, RationalJumpPart};
use crate::numeric::quad::integrate;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub bridge_correction: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { n_paths: 10_000, dt: 1e-3, seed: 1, bridge_correction: true }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt = {} must be positive", self.dt)));
        }
        if self.n_paths == 0 {
            return Err(Error::InvalidParameter("n_paths must be at least 1".into()));
        }
        Ok(())
    }
}

fn exp1(rng: &mut ChaCha8Rng) -> f64 {
    Exp1.sample(rng)
}

/// Sampler for f1, a signed Erlang mixture, by rejection from |weights|.
#[derive(Debug, Clone)]
struct PositiveSampler {
    terms: Vec<(ErlangTerm, f64)>,
    total: f64,
    signed: bool,
}

impl PositiveSampler {
    fn new(pos: &RationalJumpPart) -> Self {
        let terms: Vec<(ErlangTerm, f64)> =
            pos.partial_fractions().into_iter().map(|t| (t, t.coef / t.alpha.powi(t.k as i32))).collect();
        let total = terms.iter().map(|t| t.1.abs()).sum();
        let signed = terms.iter().any(|t| t.1 < 0.0);
        PositiveSampler { terms, total, signed }
    }

    fn erlang_density(t: &ErlangTerm, x: f64) -> f64 {
        let k = t.k as i32;
        t.alpha.powi(k) * x.powi(k - 1) * (-t.alpha * x).exp() / crate::numeric::special::factorial(t.k as usize - 1)
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        loop {
            let mut pick = rng.random::<f64>() * self.total;
            let mut chosen = &self.terms[self.terms.len() - 1].0;
            for (t, w) in &self.terms {
                if pick < w.abs() {
                    chosen = t;
                    break;
                }
                pick -= w.abs();
            }
            let x = (0..chosen.k).map(|_| exp1(rng)).sum::<f64>() / chosen.alpha;
            if !self.signed {
                return x;
            }
            let env: f64 = self.terms.iter().map(|(t, w)| w.abs() * Self::erlang_density(t, x)).sum();
            let f: f64 = self.terms.iter().map(|(t, w)| w * Self::erlang_density(t, x)).sum();
            if rng.random::<f64>() * env <= f {
                return x;
            }
        }
    }
}

/// Standard stable variable by the Chambers-Mallows-Stuck map, skewness 1.
/// Scaled so that E exp(-r Y) = exp(-r^xi) for xi < 1 and exp(r^xi) for xi in (1, 2).
pub fn stable_cms(xi: f64, u: f64, w: f64) -> f64 {
    let b = (FRAC_PI_2 * xi).tan().atan() / xi;
    let s = (1.0 + (FRAC_PI_2 * xi).tan().powi(2)).powf(0.5 / xi);
    let z = s * (xi * (u + b)).sin() / u.cos().powf(1.0 / xi) * ((u - xi * (u + b)).cos() / w).powf((1.0 - xi) / xi);
    z * (FRAC_PI_2 * xi).cos().abs().powf(1.0 / xi)
}

/// log E exp(-r dt^{1/xi} Y) / dt by quadrature over the two uniform inputs.
pub fn stable_log_laplace(xi: f64, r: f64, dt: f64) -> f64 {
    let scale = dt.powf(1.0 / xi);
    let inner = |u: f64| {
        // W ~ Exp(1) mapped through its quantile: w = -ln(1 - v)
        integrate(
            |v: f64| {
                let w = -(-v).ln_1p();
                if w <= 0.0 || !w.is_finite() {
                    return 0.0;
                }
                (-r * scale * stable_cms(xi, u, w)).exp()
            },
            0.0,
            1.0,
            1e-14,
            1e-11,
        )
        .value
    };
    let e = integrate(inner, -FRAC_PI_2, FRAC_PI_2, 1e-13, 1e-10).value / std::f64::consts::PI;
    e.ln() / dt
}

#[derive(Clone)]
enum NegSampler {
    Exp { rate: f64, p: f64 },
    MixExp { rate: f64, parts: Vec<(f64, f64)> },
    Burr { rate: f64, theta: f64, c: f64, xi: f64 },
    CustomCp { rate: f64, tail: std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync>, scale: f64 },
    Stable { xi: f64 },
}

impl NegSampler {
    fn new(neg: &NegativeJumpPart) -> Result<Self> {
        Ok(match neg {
            NegativeJumpPart::CompoundPoissonExp { rate, p } => NegSampler::Exp { rate: *rate, p: *p },
            NegativeJumpPart::CompoundPoissonMixExp { rate, parts } => {
                let tot: f64 = parts.iter().map(|x| x.0).sum();
                NegSampler::MixExp { rate: *rate, parts: parts.iter().map(|&(w, p)| (w / tot, p)).collect() }
            }
            NegativeJumpPart::CompoundPoissonBurr { rate, theta, c_shape, xi } => {
                NegSampler::Burr { rate: *rate, theta: *theta, c: *c_shape, xi: *xi }
            }
            NegativeJumpPart::StableSubordinator { xi } | NegativeJumpPart::SpectrallyPositiveStable { xi } => {
                NegSampler::Stable { xi: *xi }
            }
            NegativeJumpPart::Custom(f) if f.compound_poisson => {
                NegSampler::CustomCp { rate: (f.tail)(0.0), tail: f.tail.clone(), scale: f.length_scale }
            }
            NegativeJumpPart::Custom(f) => {
                return Err(Error::Unsupported(format!("no path sampler for custom family {}", f.name)))
            }
        })
    }

    fn rate(&self) -> f64 {
        match self {
            NegSampler::Exp { rate, .. }
            | NegSampler::MixExp { rate, .. }
            | NegSampler::Burr { rate, .. }
            | NegSampler::CustomCp { rate, .. } => *rate,
            NegSampler::Stable { .. } => 0.0,
        }
    }

    fn jump(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            NegSampler::Exp { p, .. } => exp1(rng) / p,
            NegSampler::MixExp { parts, .. } => {
                let mut pick = rng.random::<f64>();
                for &(w, p) in parts {
                    if pick < w {
                        return exp1(rng) / p;
                    }
                    pick -= w;
                }
                exp1(rng) / parts[parts.len() - 1].1
            }
            NegSampler::Burr { theta, c, xi, .. } => burr_quantile(rng.random::<f64>(), *theta, *c, *xi),
            NegSampler::CustomCp { rate, tail, scale } => {
                // solve tail(x) = v * rate by bracketing and bisection
                let target = rng.random::<f64>() * rate;
                let mut hi = *scale;
                while tail(hi) > target && hi < 1e300 {
                    hi *= 2.0;
                }
                let mut lo = 0.0;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if tail(mid) > target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= 1e-14 * hi {
                        break;
                    }
                }
                0.5 * (lo + hi)
            }
            NegSampler::Stable { .. } => unreachable!("stable parts move on the time grid"),
        }
    }
}

/// Warnings for a time step that is coarse against the model's time scales.
pub fn config_warnings(model: &LevyModel, q: f64, cfg: &SimConfig) -> Vec<String> {
    let mut out = Vec::new();
    if needs_grid(model) {
        let rate = q.max(model.pos.rate).max(model.neg.rate().unwrap_or(0.0));
        if cfg.dt * rate > 0.05 {
            out.push(format!("dt = {} is coarse against the event rate {rate}", cfg.dt));
        }
    }
    out
}

fn needs_grid(model: &LevyModel) -> bool {
    model.gamma > 0.0
        || matches!(model.neg, NegativeJumpPart::StableSubordinator { .. } | NegativeJumpPart::SpectrallyPositiveStable { .. })
}

/// Whether paths are simulated without a time grid.
pub fn is_exact(model: &LevyModel) -> bool {
    !needs_grid(model)
}

/// Simulates one path of X on [0, e_q] and returns inf X, which is <= 0.
pub struct PathSampler {
    c: f64,
    gamma: f64,
    q: f64,
    lambda1: f64,
    pos: PositiveSampler,
    neg: NegSampler,
    cfg: SimConfig,
}

impl PathSampler {
    pub fn new(model: &LevyModel, q: f64, cfg: SimConfig) -> Result<Self> {
        if !(q > 0.0) {
            return Err(Error::InvalidParameter(format!("q = {q} must be positive for a finite horizon")));
        }
        cfg.validate()?;
        Ok(PathSampler {
            c: model.c,
            gamma: model.gamma,
            q,
            lambda1: model.pos.rate,
            pos: PositiveSampler::new(&model.pos),
            neg: NegSampler::new(&model.neg)?,
            cfg,
        })
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        let horizon = exp1(rng) / self.q;
        let lam2 = self.neg.rate();
        let total = self.lambda1 + lam2;
        let mut t = 0.0;
        let mut x = 0.0f64;
        let mut min = 0.0f64;
        loop {
            let next = if total > 0.0 { t + exp1(rng) / total } else { f64::INFINITY };
            let end = next.min(horizon);
            x = self.continuous(rng, x, end - t, &mut min);
            t = end;
            if next >= horizon {
                return min;
            }
            if rng.random::<f64>() * total < self.lambda1 {
                x += self.pos.sample(rng);
            } else {
                x -= self.neg.jump(rng);
                min = min.min(x);
            }
        }
    }

    /// Moves drift, Brownian and stable parts over a span, updating the minimum.
    fn continuous(&self, rng: &mut ChaCha8Rng, mut x: f64, span: f64, min: &mut f64) -> f64 {
        let stable = match self.neg {
            NegSampler::Stable { xi } => Some(xi),
            _ => None,
        };
        if self.gamma == 0.0 && stable.is_none() {
            x += self.c * span;
            *min = min.min(x);
            return x;
        }
        let steps = (span / self.cfg.dt).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        let sd = self.gamma * (2.0 * h).sqrt();
        for _ in 0..steps {
            let mut y = x + self.c * h;
            if self.gamma > 0.0 {
                let z: f64 = StandardNormal.sample(rng);
                y += sd * z;
            }
            if let Some(xi) = stable {
                let u = (rng.random::<f64>() - 0.5) * std::f64::consts::PI;
                let w = exp1(rng);
                y -= h.powf(1.0 / xi) * stable_cms(xi, u, w);
            }
            let low = if self.gamma > 0.0 && self.cfg.bridge_correction {
                let v = 2.0 * self.gamma * self.gamma * h;
                let e = -(1.0 - rng.random::<f64>()).ln();
                0.5 * (x + y - ((y - x).powi(2) + 2.0 * v * e).sqrt())
            } else {
                x.min(y)
            };
            *min = min.min(low);
            x = y;
        }
        x
    }
}

/// RNG for path `i`: ChaCha8 seeded once, with the path index as the stream.
pub fn path_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

/// One sample of I at an independent exponential time.
pub fn simulate_infimum_sample(model: &LevyModel, q: f64, cfg: &SimConfig, rng: &mut ChaCha8Rng) -> Result<f64> {
    Ok(PathSampler::new(model, q, *cfg)?.sample(rng))
}

/// cfg.n_paths samples of I; bitwise reproducible for a fixed seed.
pub fn simulate_infimum(model: &LevyModel, q: f64, cfg: &SimConfig) -> Result<Vec<f64>> {
    let sampler = PathSampler::new(model, q, *cfg)?;
    let one = |i: usize| sampler.sample(&mut path_rng(cfg.seed, i));
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        Ok((0..cfg.n_paths).into_par_iter().map(one).collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok((0..cfg.n_paths).map(one).collect())
    }
}

/// Empirical law of -I.
#[derive(Debug, Clone)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

/// Empirical survival of -I from samples of I.
pub fn estimate_cdf(samples: &[f64]) -> Result<EmpiricalCdf> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("no samples".into()));
    }
    let mut sorted: Vec<f64> = samples.iter().map(|x| -x).collect();
    sorted.sort_by(f64::total_cmp);
    Ok(EmpiricalCdf { sorted })
}

impl EmpiricalCdf {
    pub fn n(&self) -> usize {
        self.sorted.len()
    }

    /// Fraction of samples strictly above u.
    pub fn survival(&self, u: f64) -> f64 {
        let below = self.sorted.partition_point(|&x| x <= u);
        (self.n() - below) as f64 / self.n() as f64
    }

    pub fn mean(&self) -> f64 {
        self.sorted.iter().sum::<f64>() / self.n() as f64
    }

    pub fn std_error(&self) -> f64 {
        let m = self.mean();
        let var = self.sorted.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (self.n() as f64 - 1.0).max(1.0);
        (var / self.n() as f64).sqrt()
    }

    pub fn atom_count(&self) -> usize {
        self.sorted.partition_point(|&x| x <= 0.0)
    }

    pub fn atom_freq(&self) -> f64 {
        self.atom_count() as f64 / self.n() as f64
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KsResult {
    pub d_n: f64,
    pub threshold: f64,
    pub n_positive: usize,
    pub ks_pass: bool,
    pub atom_freq: f64,
    pub atom_model: f64,
    pub atom_z: f64,
    pub atom_pass: bool,
    pub pass: bool,
}

pub const KS_C_001: f64 = 1.63;
pub const DISCRETIZATION_ALLOWANCE: f64 = 1.25;

/// KS test of the part of -I above 0 against `survival` (P[-I > u]), plus a
/// binomial z-test of the atom at 0. `inflate` widens the KS band by 25 %.
pub fn ks_compare(emp: &EmpiricalCdf, survival: &dyn Fn(f64) -> Result<f64>, atom: f64, inflate: bool) -> Result<KsResult> {
    let n = emp.n();
    let k = emp.atom_count();
    let pos = &emp.samples()[k..];
    let mass = 1.0 - atom;
    let mut d: f64 = 0.0;
    let m = pos.len();
    for (i, &x) in pos.iter().enumerate() {
        // conditional model cdf at x
        let f = 1.0 - survival(x)? / mass;
        d = d.max((f - i as f64 / m as f64).abs()).max(((i + 1) as f64 / m as f64 - f).abs());
    }
    let threshold = KS_C_001 / (m.max(1) as f64).sqrt() * if inflate { DISCRETIZATION_ALLOWANCE } else { 1.0 };
    let atom_freq = k as f64 / n as f64;
    let (atom_z, atom_pass) = if atom > 0.0 && atom < 1.0 {
        let z = (k as f64 - n as f64 * atom) / (n as f64 * atom * (1.0 - atom)).sqrt();
        (z, z.abs() <= 3.0)
    } else {
        (0.0, k == 0 || atom >= 1.0)
    };
    let ks_pass = m == 0 || d <= threshold;
    Ok(KsResult {
        d_n: d,
        threshold,
        n_positive: m,
        ks_pass,
        atom_freq,
        atom_model: atom,
        atom_z,
        atom_pass,
        pass: ks_pass && atom_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::closed_form_exp_case;

    fn ex21(p: f64) -> LevyModel {
        LevyModel::new(
            1.0,
            0.0,
            RationalJumpPart::exponential(1.0, 1.0),
            NegativeJumpPart::CompoundPoissonExp { rate: 1.0, p },
        )
    }

    #[test]
    fn no_negative_jumps_gives_zero() {
        let m = LevyModel::new(
            1.0,
            0.0,
            RationalJumpPart::exponential(1.0, 1.0),
            NegativeJumpPart::CompoundPoissonExp { rate: 0.0, p: 1.0 },
        );
        let cfg = SimConfig { n_paths: 200, ..Default::default() };
        assert!(simulate_infimum(&m, 1.0, &cfg).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn seed_determinism() {
        let cfg = SimConfig { n_paths: 500, seed: 9, ..Default::default() };
        let a = simulate_infimum(&ex21(1.0), 0.5, &cfg).unwrap();
        let b = simulate_infimum(&ex21(1.0), 0.5, &cfg).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert!(is_exact(&ex21(1.0)));
    }

    #[test]
    fn two_sided_exp_mean_atom_and_ks() {
        let cf = closed_form_exp_case(1.0, 1.0, 1.0, 1.0, 0.5, 1.0).unwrap();
        let cfg = SimConfig { n_paths: 100_000, seed: 3, ..Default::default() };
        let emp = estimate_cdf(&simulate_infimum(&ex21(1.0), 0.5, &cfg).unwrap()).unwrap();
        assert!((emp.mean() - cf.mean()).abs() < 3.0 * emp.std_error());
        let ks = ks_compare(&emp, &|u| Ok(cf.survival(u)), cf.atom, false).unwrap();
        assert!(ks.pass, "{ks:?}");
        // the same samples against a law with p 10 % off
        let wrong = closed_form_exp_case(1.0, 1.0, 1.0, 1.1, 0.5, 1.0).unwrap();
        let bad = ks_compare(&emp, &|u| Ok(wrong.survival(u)), wrong.atom, false).unwrap();
        assert!(!bad.pass);
    }

    #[test]
    fn inverse_sampled_null_passes() {
        let cf = closed_form_exp_case(1.0, 1.0, 1.0, 1.0, 0.5, 1.0).unwrap();
        let mut rng = path_rng(5, 0);
        let s: Vec<f64> = (0..20_000)
            .map(|_| {
                let v: f64 = rng.random();
                if v < cf.atom { 0.0 } else { exp1(&mut rng) / cf.rate * -1.0 }
            })
            .collect();
        let emp = estimate_cdf(&s).unwrap();
        assert!(ks_compare(&emp, &|u| Ok(cf.survival(u)), cf.atom, false).unwrap().pass);
    }

    #[test]
    fn empirical_basics() {
        let e = estimate_cdf(&[0.0]).unwrap();
        assert_eq!(e.survival(0.5), 0.0);
        let e = estimate_cdf(&[-1.0, -1.0, -2.0, 0.0]).unwrap();
        assert_eq!(e.survival(0.99), 0.75);
        assert_eq!(e.survival(1.0), 0.25);
        assert!((e.mean() - 1.0).abs() < 1e-15);
        assert!(estimate_cdf(&[]).is_err());
    }

    #[test]
    fn stable_laplace_pinned() {
        for xi in [0.5, 0.7, 1.5, 1.8] {
            let sign = if xi < 1.0 { -1.0 } else { 1.0 };
            for r in [0.5f64, 1.0, 2.0] {
                let got = stable_log_laplace(xi, r, 1e-2);
                let want = sign * r.powf(xi);
                assert!((got - want).abs() <= 1e-3 * r.powf(xi), "xi {xi} r {r}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn signed_mixture_sampler_mean() {
        // f1 with a negative partial-fraction weight: transform 6/((1+s)(2+s)(3+s)) has mean 11/6
        let pos = RationalJumpPart::new(
            1.0,
            vec![crate::model::Pole { alpha: 1.0, n: 1 }, crate::model::Pole { alpha: 2.0, n: 1 }, crate::model::Pole { alpha: 3.0, n: 1 }],
            vec![6.0],
        );
        let s = PositiveSampler::new(&pos);
        assert!(s.signed);
        let mut rng = path_rng(1, 0);
        let n = 200_000;
        let mean = (0..n).map(|_| s.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 11.0 / 6.0).abs() < 0.02, "{mean}");
    }
}
