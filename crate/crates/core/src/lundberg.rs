//! Roots of Psi_X(r) = q in the open right half-plane, with an
//! argument-principle count as certificate.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CaseLabel, LevyModel};
use crate::numeric::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Root {
    pub value: C64,
    pub multiplicity: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertResult {
    pub winding_count: i64,
    /// Lower-left and upper-right corners of the rectangle.
    pub contour: (C64, C64),
    pub residual_ok: bool,
    pub separation: f64,
    pub certified: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RootSet {
    pub q: f64,
    pub roots: Vec<Root>,
    pub case: CaseLabel,
    pub m: usize,
    pub max_residual: f64,
    pub cert: Option<CertResult>,
}

impl RootSet {
    pub fn total_multiplicity(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }

    /// The real root in [0, alpha_1).
    pub fn beta1(&self) -> f64 {
        self.roots[0].value.re
    }

    pub fn is_certified(&self) -> bool {
        self.cert.as_ref().map_or(false, |c| c.certified)
    }

    /// Roots other than the zero root inserted for q = 0.
    pub fn nonzero(&self) -> impl Iterator<Item = &Root> {
        self.roots.iter().filter(|r| r.value.norm() > 0.0)
    }

    pub fn max_modulus(&self) -> f64 {
        self.roots.iter().map(|r| r.value.norm()).fold(0.0, f64::max)
    }

    pub fn separation(&self) -> f64 {
        let mut sep = f64::INFINITY;
        for (i, a) in self.roots.iter().enumerate() {
            for b in &self.roots[i + 1..] {
                sep = sep.min((a.value - b.value).norm());
            }
        }
        sep
    }
}

pub fn cluster_tol(z: C64) -> f64 {
    1e-6 * (1.0 + z.norm())
}

/// Root count: m in case A, m + 1 otherwise.
pub fn expected_root_count(model: &LevyModel) -> Result<usize> {
    let case = model.classify()?;
    Ok(model.m() + usize::from(case != CaseLabel::A))
}

fn residual(model: &LevyModel, z: C64, q: f64) -> f64 {
    match model.psi(z) {
        Ok(v) => (v - q).norm(),
        Err(_) => f64::INFINITY,
    }
}

fn newton_polish(model: &LevyModel, mut z: C64, q: f64, real: bool) -> C64 {
    for _ in 0..50 {
        let f = model.lundberg_fn(z, q);
        let d = model.lundberg_fn_deriv(z, q);
        if d.norm() == 0.0 {
            break;
        }
        let mut step = f / d;
        if real {
            step.im = 0.0;
        }
        let next = z - step;
        if !(next.re.is_finite() && next.im.is_finite()) {
            break;
        }
        // reject steps that make things worse
        if model.lundberg_fn(next, q).norm() > f.norm() * 1.5 && step.norm() > 1e-8 * z.norm() {
            break;
        }
        z = next;
        if step.norm() <= 1e-15 * z.norm().max(1e-300) {
            break;
        }
    }
    z
}

fn bisect_real(model: &LevyModel, q: f64, mut lo: f64, mut hi: f64) -> f64 {
    let f = |x: f64| model.lundberg_fn(C64::new(x, 0.0), q).re;
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// beta_1 on (0, alpha_1): Psi_X - q goes from -q to +inf.
fn first_root(model: &LevyModel, q: f64) -> Result<f64> {
    let a1 = model.pos.alpha_min();
    let g = |x: f64| model.psi(C64::new(x, 0.0)).map(|v| v.re - q);
    let mut gap = 1e-3;
    let mut hi = a1 * (1.0 - gap);
    while g(hi)? <= 0.0 {
        gap *= 0.1;
        if gap < 1e-14 {
            return Err(Error::NonConvergence("no sign change of Psi_X - q on (0, alpha_1)".into()));
        }
        hi = a1 * (1.0 - gap);
    }
    let root = bisect_real(model, q, 0.0, hi);
    Ok(newton_polish(model, C64::new(root, 0.0), q, true).re)
}

/// Sign changes of F on a grid over (0, r_max), refined by bisection.
fn real_roots_scan(model: &LevyModel, q: f64, r_max: f64) -> Vec<f64> {
    let a1 = model.pos.alpha_min();
    let lo = 1e-9 * a1;
    let mut xs: Vec<f64> = Vec::new();
    let decades = (r_max / lo).log10();
    let n = (decades * 80.0).ceil() as usize;
    for k in 0..=n {
        xs.push(lo * (r_max / lo).powf(k as f64 / n as f64));
    }
    for p in &model.pos.poles {
        for j in 1..=12 {
            let e = 10f64.powi(-j);
            xs.push(p.alpha * (1.0 - e));
            xs.push(p.alpha * (1.0 + e));
        }
    }
    xs.sort_by(f64::total_cmp);
    let f = |x: f64| model.lundberg_fn(C64::new(x, 0.0), q).re;
    let mut out = Vec::new();
    let mut prev = (xs[0], f(xs[0]));
    for &x in &xs[1..] {
        let fx = f(x);
        if fx == 0.0 {
            out.push(x);
        } else if (fx > 0.0) != (prev.1 > 0.0) && prev.1 != 0.0 {
            let r = bisect_real(model, q, prev.0, x);
            out.push(newton_polish(model, C64::new(r, 0.0), q, true).re);
        }
        prev = (x, fx);
    }
    out
}

/// Deflated Newton from a deterministic spiral of starts in the upper quadrant.
fn newton_search(model: &LevyModel, q: f64, known: &mut Vec<C64>, want: usize, r_min: f64, r_max: f64, starts: usize) {
    let golden = 0.618_033_988_749_894_9;
    for i in 0..starts {
        if known.len() >= want {
            return;
        }
        let t = (i as f64 + 0.5) / starts as f64;
        let radius = r_min * (r_max / r_min).powf(t);
        let angle = 0.5 * PI * (0.05 + 0.9 * ((i as f64 * golden) % 1.0));
        let mut z = C64::from_polar(radius, angle);
        let mut converged = false;
        for _ in 0..100 {
            let f = model.lundberg_fn(z, q);
            let d = model.lundberg_fn_deriv(z, q);
            let mut corr = C64::new(0.0, 0.0);
            for &k in known.iter() {
                corr += 1.0 / (z - k);
            }
            let ratio = d / f - corr;
            let step = 1.0 / ratio;
            if !(step.re.is_finite() && step.im.is_finite()) {
                break;
            }
            z -= step;
            if z.re <= 0.0 {
                break;
            }
            if step.norm() < 1e-13 * z.norm() {
                converged = true;
                break;
            }
        }
        if !converged || z.re <= 0.0 {
            continue;
        }
        let z = newton_polish(model, z, q, false);
        if residual(model, z, q) > 1e-6 * (1.0 + q) {
            continue;
        }
        if z.im.abs() < 1e-9 * z.norm() {
            known.push(C64::new(z.re, 0.0));
        } else {
            known.push(z);
            known.push(z.conj());
        }
    }
}

fn cluster(values: &[C64]) -> Vec<(C64, usize)> {
    let mut out: Vec<(C64, usize, C64)> = Vec::new();
    for &v in values {
        if let Some(c) = out.iter_mut().find(|c| (c.0 - v).norm() < cluster_tol(c.0)) {
            c.2 += v;
            c.1 += 1;
            c.0 = c.2 / c.1 as f64;
        } else {
            out.push((v, 1, v));
        }
    }
    out.into_iter().map(|(z, k, _)| (z, k)).collect()
}

pub fn solve_lundberg(model: &LevyModel, q: f64) -> Result<RootSet> {
    let case = model.classify()?;
    let expected = expected_root_count(model)?;
    if !(q >= 0.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("q = {q} must be nonnegative")));
    }
    if q == 0.0 && !(model.mean() > 0.0) {
        return Err(Error::ConditionOne(model.mean()));
    }
    let beta1 = if q == 0.0 { 0.0 } else { first_root(model, q)? };
    let want_pos = if q == 0.0 { expected - 1 } else { expected };

    // candidate roots in Re > 0, beta_1 included when q > 0
    let mut found: Vec<C64> = Vec::new();
    let mut r_max = 2.0 * model.pos.alpha_max().max(beta1);
    if let Some(poly) = model.lundberg_poly(q) {
        let scale = model.rate_scale();
        for z in poly.roots() {
            if z.re > 1e-9 * scale {
                let real = z.im.abs() < 1e-7 * z.norm();
                let z0 = if real { C64::new(z.re, 0.0) } else { z };
                let z1 = newton_polish(model, z0, q, real);
                let z1 = if (z1 - z0).norm() < 1e-3 * z0.norm() { z1 } else { z0 };
                found.push(z1);
            }
        }
    } else {
        let reach = 1e6 * model.pos.alpha_max().max(1.0);
        let mut real = real_roots_scan(model, q, reach);
        real.retain(|&x| x > 0.0);
        found.extend(real.iter().map(|&x| C64::new(x, 0.0)));
        if found.iter().all(|z| (z.re - beta1).abs() > cluster_tol(C64::new(beta1, 0.0))) && q > 0.0 {
            found.push(C64::new(beta1, 0.0));
        }
        r_max = r_max.max(found.iter().map(|z| z.norm()).fold(0.0, f64::max) * 2.0);
        let mut rounds = 0;
        while found.len() < want_pos && rounds < 3 {
            let starts = 8 * (model.m() + 1) * 4usize.pow(rounds);
            let r_min = 0.05 * model.pos.alpha_min();
            newton_search(model, q, &mut found, want_pos, r_min, r_max * 2f64.powi(rounds as i32), starts);
            rounds += 1;
        }
    }

    let mut roots: Vec<Root> = cluster(&found)
        .into_iter()
        .map(|(z, k)| Root { value: z, multiplicity: k, residual: residual(model, z, q) })
        .collect();
    // the bracketed beta_1 replaces its cluster value
    if q > 0.0 {
        if let Some(r) = roots
            .iter_mut()
            .filter(|r| r.value.im == 0.0 || r.value.im.abs() < 1e-9)
            .min_by(|a, b| (a.value.re - beta1).abs().total_cmp(&(b.value.re - beta1).abs()))
        {
            r.value = C64::new(beta1, 0.0);
            r.residual = residual(model, r.value, q);
        }
    } else {
        roots.push(Root { value: C64::new(0.0, 0.0), multiplicity: 1, residual: 0.0 });
    }
    roots.sort_by(|a, b| a.value.re.total_cmp(&b.value.re).then(a.value.im.total_cmp(&b.value.im)));
    // conjugate symmetry: reuse upper-half values for lower-half roots
    let snapshot = roots.clone();
    for r in roots.iter_mut().filter(|r| r.value.im < 0.0) {
        if let Some(u) = snapshot.iter().find(|u| (u.value - r.value.conj()).norm() < cluster_tol(u.value)) {
            r.value = u.value.conj();
        }
    }
    let max_residual = roots.iter().map(|r| r.residual).fold(0.0, f64::max);
    let mut rs = RootSet { q, roots, case, m: model.m(), max_residual, cert: None };
    let cert = certify_roots(model, q, &rs)?;
    let total = rs.total_multiplicity();
    if cert.winding_count + i64::from(q == 0.0) != expected as i64 || total != expected {
        return Err(Error::CountMismatch { expected, winding: cert.winding_count, found: total });
    }
    rs.cert = Some(cert);
    Ok(rs)
}

/// Winding number of F around the rectangle [x0, x1] x [-h, h].
fn winding(model: &LevyModel, q: f64, x0: f64, x1: f64, h: f64) -> Result<i64> {
    let corners = [C64::new(x0, -h), C64::new(x1, -h), C64::new(x1, h), C64::new(x0, h)];
    let f = |z: C64| model.lundberg_fn(z, q);
    let mut total = 0.0;
    let mut scale: f64 = 0.0;
    for e in 0..4 {
        let a = corners[e];
        let b = corners[(e + 1) % 4];
        let n = 256;
        let mut prev_z = a;
        let mut prev_f = f(a);
        for k in 1..=n {
            let z = a + (b - a) * (k as f64 / n as f64);
            let fz = f(z);
            total += arg_increment(&f, prev_z, prev_f, z, fz, 0, &mut scale)?;
            prev_z = z;
            prev_f = fz;
        }
    }
    let w = total / (2.0 * PI);
    if (w - w.round()).abs() > 0.05 {
        return Err(Error::ContourThroughZero);
    }
    Ok(w.round() as i64)
}

fn arg_increment<F: Fn(C64) -> C64>(f: &F, za: C64, fa: C64, zb: C64, fb: C64, depth: usize, scale: &mut f64) -> Result<f64> {
    *scale = scale.max(fa.norm()).max(fb.norm());
    if fa.norm() <= 1e-14 * *scale || fb.norm() <= 1e-14 * *scale {
        return Err(Error::ContourThroughZero);
    }
    let d = (fb / fa).arg();
    if d.abs() < PI / 4.0 {
        return Ok(d);
    }
    if depth > 40 {
        return Err(Error::ContourThroughZero);
    }
    let zm = (za + zb) * 0.5;
    let fm = f(zm);
    Ok(arg_increment(f, za, fa, zm, fm, depth + 1, scale)? + arg_increment(f, zm, fm, zb, fb, depth + 1, scale)?)
}

pub fn certify_roots(model: &LevyModel, q: f64, rs: &RootSet) -> Result<CertResult> {
    let a1 = model.pos.alpha_min();
    let smallest = rs.nonzero().map(|r| r.value.re).fold(f64::INFINITY, f64::min);
    let mut delta = (smallest / 2.0).min(a1 / 100.0);
    let mut big = 2.0 * model.pos.alpha_max().max(rs.max_modulus());
    let inside = rs.nonzero().map(|r| r.multiplicity).sum::<usize>() as i64;
    let mut last_err = Error::ContourThroughZero;
    for attempt in 0..4 {
        match winding(model, q, delta, big, big) {
            Ok(w) => {
                let residual_ok = rs.max_residual < 1e-8 * (1.0 + q);
                return Ok(CertResult {
                    winding_count: w,
                    contour: (C64::new(delta, -big), C64::new(big, big)),
                    residual_ok,
                    separation: rs.separation(),
                    certified: w == inside && residual_ok,
                });
            }
            Err(e) => {
                last_err = e;
                delta *= 0.7;
                big *= 1.07 + 0.01 * attempt as f64;
            }
        }
    }
    Err(last_err)
}
