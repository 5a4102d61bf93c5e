//! Law of -I on a grid via convolution series, with inversion as fallback.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::laplace::{default_terms, invert_transform, InversionMethod, TransformHandle};
use crate::model::CaseLabel;
use crate::wh::WienerHopf;

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub h: f64,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn from_fn(h: f64, n: usize, f: impl Fn(f64) -> f64) -> Self {
        GridFunction { h, values: (0..n).map(|k| f(k as f64 * h)).collect() }
    }

    pub fn zeros(h: f64, n: usize) -> Self {
        GridFunction { h, values: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn u_max(&self) -> f64 {
        (self.len().saturating_sub(1)) as f64 * self.h
    }

    pub fn u(&self, k: usize) -> f64 {
        k as f64 * self.h
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, s: f64) -> Self {
        GridFunction { h: self.h, values: self.values.iter().map(|v| v * s).collect() }
    }

    pub fn add_scaled(&mut self, other: &GridFunction, s: f64) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
    }

    /// Trapezoid integral over [0, u_max].
    pub fn integral(&self) -> f64 {
        *self.cumulative().last().unwrap_or(&0.0)
    }

    /// Trapezoid integral with the Euler-Maclaurin endpoint correction, using
    /// one-sided second-order differences for the end slopes.
    pub fn integral_corrected(&self) -> f64 {
        let n = self.len();
        if n < 3 {
            return self.integral();
        }
        let v = &self.values;
        let d0 = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / 2.0;
        let d1 = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / 2.0;
        self.integral() - self.h / 12.0 * (d1 - d0)
    }

    /// Running trapezoid integral from 0.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        let mut acc = 0.0;
        for k in 0..self.len() {
            if k > 0 {
                acc += 0.5 * self.h * (self.values[k - 1] + self.values[k]);
            }
            out.push(acc);
        }
        out
    }

    fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Trapezoid convolution (f * g)(u_k) on the common grid.
pub fn convolve(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    if (f.h - g.h).abs() > 1e-12 * f.h {
        return Err(Error::GridMismatch(format!("steps {} and {}", f.h, g.h)));
    }
    let n = f.len().min(g.len());
    if n == 0 {
        return Ok(GridFunction::zeros(f.h, 0));
    }
    let raw = if n <= 64 { direct_sum(&f.values[..n], &g.values[..n]) } else { fft_sum(&f.values[..n], &g.values[..n]) };
    let values = (0..n)
        .map(|k| f.h * (raw[k] - 0.5 * (f.values[0] * g.values[k] + f.values[k] * g.values[0])))
        .collect();
    Ok(GridFunction { h: f.h, values })
}

/// Direct O(n^2) summation; reference for the FFT path.
pub fn convolve_direct(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    if (f.h - g.h).abs() > 1e-12 * f.h {
        return Err(Error::GridMismatch(format!("steps {} and {}", f.h, g.h)));
    }
    let n = f.len().min(g.len());
    let raw = direct_sum(&f.values[..n], &g.values[..n]);
    let values = (0..n)
        .map(|k| f.h * (raw[k] - 0.5 * (f.values[0] * g.values[k] + f.values[k] * g.values[0])))
        .collect();
    Ok(GridFunction { h: f.h, values })
}

fn direct_sum(f: &[f64], g: &[f64]) -> Vec<f64> {
    let n = f.len();
    (0..n).map(|k| (0..=k).map(|j| f[j] * g[k - j]).sum()).collect()
}

fn fft_sum(f: &[f64], g: &[f64]) -> Vec<f64> {
    let n = f.len();
    let size = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut a: Vec<Complex<f64>> = (0..size).map(|k| Complex::new(*f.get(k).unwrap_or(&0.0), 0.0)).collect();
    let mut b: Vec<Complex<f64>> = (0..size).map(|k| Complex::new(*g.get(k).unwrap_or(&0.0), 0.0)).collect();
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    inv.process(&mut a);
    a[..n].iter().map(|z| z.re / size as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Series,
    Inversion,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Series => "series",
            Method::Inversion => "inversion",
        })
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GridSpec {
    pub h: Option<f64>,
    pub u_max: Option<f64>,
    /// Combine steps h and h/2 to cancel the leading trapezoid error.
    pub richardson: bool,
}

const SINGULAR_CELLS: usize = 64;

#[derive(Debug, Clone)]
pub struct NegWHDistribution {
    pub atom0: f64,
    pub density: GridFunction,
    /// P[-I > u_k] on the density grid.
    pub survival: Vec<f64>,
    pub truncation_bound: f64,
    pub method: Method,
    pub terms: usize,
    pub notice: Option<String>,
    /// P[-I > u_max] from an independent route.
    pub tail_mass: f64,
    /// Case B survival from the chi renewal series, same grid.
    pub renewal_survival: Option<Vec<f64>>,
}

impl NegWHDistribution {
    pub fn u_max(&self) -> f64 {
        self.density.u_max()
    }

    /// atom + integral of the density + tail mass; equals 1 for a probability law.
    /// The integral is the end-corrected trapezoid rule.
    /// Inverted grids may carry a density singular at the origin, where the
    /// trapezoid rule is useless; the first cells use the survival values.
    pub fn mass_balance(&self) -> f64 {
        let n = self.density.len();
        let body = match self.method {
            Method::Series => self.density.integral_corrected(),
            Method::Inversion if n > 2 => {
                let k = SINGULAR_CELLS.min(n - 2);
                let rest = GridFunction { h: self.density.h, values: self.density.values[k..].to_vec() };
                (1.0 - self.atom0 - self.survival[k]) + rest.integral_corrected()
            }
            Method::Inversion => self.density.integral(),
        };
        self.atom0 + body + self.tail_mass
    }

    /// P[I < -u], cubic Hermite interpolation using the density as slope.
    pub fn cdf(&self, u: f64) -> Result<f64> {
        if u < 0.0 {
            return Err(Error::InvalidParameter(format!("u = {u} must be nonnegative")));
        }
        if u > self.u_max() * (1.0 + 1e-12) {
            return Err(Error::Extrapolation { u, u_max: self.u_max() });
        }
        let h = self.density.h;
        let k = ((u / h).floor() as usize).min(self.density.len().saturating_sub(2));
        let t = (u - k as f64 * h) / h;
        let (y0, y1) = (self.survival[k], self.survival[k + 1]);
        let (d0, d1) = (-self.density.values[k] * h, -self.density.values[k + 1] * h);
        let h00 = 2.0 * t.powi(3) - 3.0 * t * t + 1.0;
        let h10 = t.powi(3) - 2.0 * t * t + t;
        let h01 = -2.0 * t.powi(3) + 3.0 * t * t;
        let h11 = t.powi(3) - t * t;
        Ok(h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1)
    }

    pub fn density_at(&self, u: f64) -> Result<f64> {
        if u > self.u_max() * (1.0 + 1e-12) {
            return Err(Error::Extrapolation { u, u_max: self.u_max() });
        }
        let h = self.density.h;
        let k = ((u / h).floor() as usize).min(self.density.len().saturating_sub(2));
        let t = (u - k as f64 * h) / h;
        Ok((1.0 - t) * self.density.values[k] + t * self.density.values[k + 1])
    }

    /// E exp(-r(-I)) from the grid. Series grids integrate the density. Inverted
    /// grids integrate the survival by parts; near the origin, where it may have
    /// a cusp, the survival is inverted at adaptive quadrature nodes.
    pub fn laplace_checkback(&self, wh: &Arc<WienerHopf>, r: f64) -> Result<f64> {
        if self.method == Method::Series {
            return Ok(self.trapezoid_transform(r));
        }
        let h = self.density.h;
        let n = self.survival.len();
        let k0 = SINGULAR_CELLS.min(n - 1);
        let u0 = k0 as f64 * h;
        let fail = std::cell::Cell::new(None);
        let head = crate::numeric::quad::integrate_limited(
            |t: f64| {
                // u = u0 t^2 clusters nodes at the cusp
                let u = u0 * t * t;
                let s = if u == 0.0 { Ok(1.0 - self.atom0) } else { survival_inverted(wh, u) };
                match s {
                    Ok(s) => 2.0 * u0 * t * s * (-r * u).exp(),
                    Err(e) => {
                        fail.set(Some(e));
                        0.0
                    }
                }
            },
            0.0,
            1.0,
            1e-12,
            1e-10,
            400,
        );
        if let Some(e) = fail.take() {
            return Err(e);
        }
        let mut acc = 0.0;
        for k in k0..n {
            let w = if k == k0 || k == n - 1 { 0.5 } else { 1.0 };
            acc += w * self.survival[k] * (-r * k as f64 * h).exp();
        }
        Ok(1.0 - r * (head.value + h * acc) - (-r * self.u_max()).exp() * self.survival[n - 1])
    }

    /// sum_k w_k e^{-r u_k} density_k, trapezoid weights.
    pub fn trapezoid_transform(&self, r: f64) -> f64 {
        let h = self.density.h;
        let n = self.density.len();
        let mut acc = 0.0;
        for (k, v) in self.density.values.iter().enumerate() {
            let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
            acc += w * v * (-r * k as f64 * h).exp();
        }
        self.atom0 + h * acc
    }
}

/// Default grid step: the fastest rate in the problem times h is 0.02.
pub fn default_step(wh: &WienerHopf) -> f64 {
    let mut scale = wh.a.max(wh.model.pos.alpha_min()).max(wh.roots.max_modulus());
    if let Some(r) = rates_of(wh) {
        scale = scale.max(r);
    }
    0.02 / scale
}

fn rates_of(wh: &WienerHopf) -> Option<f64> {
    match &wh.model.neg {
        crate::model::NegativeJumpPart::CompoundPoissonExp { p, .. } => Some(*p),
        crate::model::NegativeJumpPart::CompoundPoissonMixExp { parts, .. } => {
            Some(parts.iter().map(|x| x.1).fold(0.0, f64::max))
        }
        _ => None,
    }
}

/// Survival P[-I > u] by inversion; method chosen by the transform.
fn survival_inverted(wh: &Arc<WienerHopf>, u: f64) -> Result<f64> {
    let h = TransformHandle::cdf_tail(wh);
    let m = h.preferred_method();
    invert_transform(&h, u, m, default_terms(m))
}

/// Grid size cap for the automatic range; heavy tails stop here.
pub const MAX_AUTO_POINTS: usize = 1 << 14;

/// Smallest doubling of u0 where the inverted survival drops below 1e-6,
/// capped at MAX_AUTO_POINTS grid points.
pub fn default_u_max(wh: &Arc<WienerHopf>, h: f64) -> Result<f64> {
    let mut u = (200.0 * h).max(1.0);
    while 2.0 * u / h < MAX_AUTO_POINTS as f64 {
        if survival_inverted(wh, u)? < 1e-6 {
            return Ok(u);
        }
        u *= 2.0;
    }
    Ok(u)
}

struct SeriesOutcome {
    density: GridFunction,
    survival_renewal: Option<Vec<f64>>,
    last_norm: f64,
    terms: usize,
}

enum SeriesError {
    Diverged(String),
    Failed(Error),
}

impl From<Error> for SeriesError {
    fn from(e: Error) -> Self {
        SeriesError::Failed(e)
    }
}

fn chi_grid(wh: &WienerHopf, h: f64, n: usize, tail: bool) -> std::result::Result<GridFunction, SeriesError> {
    let eval = |k: usize| {
        let u = k as f64 * h;
        let v = if tail { wh.chi.tail(u) } else { wh.chi.density(u) };
        match v {
            Ok(v) if v.is_finite() => Ok(v),
            Ok(_) | Err(Error::Divergent(_)) => Err(SeriesError::Diverged(format!("chi is singular at u = {u}"))),
            Err(e) => Err(SeriesError::Failed(e)),
        }
    };
    // the origin decides singularity before any bulk work
    let first = eval(0)?;
    #[cfg(feature = "parallel")]
    let rest: std::result::Result<Vec<f64>, SeriesError> = {
        use rayon::prelude::*;
        (1..n).into_par_iter().map(eval).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rest: std::result::Result<Vec<f64>, SeriesError> = (1..n).map(eval).collect();
    let mut values = Vec::with_capacity(n);
    values.push(first);
    values.extend(rest?);
    Ok(GridFunction { h, values })
}

/// Sum term_0 + term_1 + ... with term_{n+1} = step(term_n).
fn sum_series(
    first: GridFunction,
    mut step: impl FnMut(&GridFunction) -> Result<GridFunction>,
    tol: f64,
    n_max: usize,
) -> std::result::Result<(GridFunction, f64, usize), SeriesError> {
    let mut total = first.clone();
    let mut term = first;
    let mut prev = term.sup_norm();
    let mut rising = 0;
    for n in 1..=n_max {
        term = step(&term)?;
        let norm = term.sup_norm();
        if !term.is_finite() {
            return Err(SeriesError::Diverged("non-finite series term".into()));
        }
        total.add_scaled(&term, 1.0);
        if norm < tol {
            return Ok((total, norm, n + 1));
        }
        rising = if norm > prev { rising + 1 } else { 0 };
        if rising >= 3 {
            return Err(SeriesError::Diverged(format!("term norms rose three times in a row at n = {n}")));
        }
        prev = norm;
    }
    Err(SeriesError::Diverged(format!("no convergence within {n_max} terms")))
}

fn run_series(wh: &WienerHopf, h: f64, n: usize, tol: f64, n_max: usize) -> std::result::Result<SeriesOutcome, SeriesError> {
    let a = wh.a;
    match (wh.case(), wh.model.gamma > 0.0) {
        (CaseLabel::B, _) => {
            let c = wh.model.c;
            let chi = chi_grid(wh, h, n, false)?.scale(1.0 / c);
            let (sum, last, terms) = sum_series(chi.clone(), |t| convolve(t, &chi), tol, n_max)?;
            let chibar = chi_grid(wh, h, n, true)?.scale(1.0 / c);
            let mut surv = chibar.clone();
            surv.add_scaled(&convolve(&chibar, &sum)?, 1.0);
            Ok(SeriesOutcome {
                density: sum.scale(a / c),
                survival_renewal: Some(surv.values),
                last_norm: last * a / c,
                terms,
            })
        }
        (CaseLabel::C, true) => {
            let g2 = wh.gamma2();
            let b = a / g2;
            let e = GridFunction::from_fn(h, n, |u| b * (-b * u).exp());
            let chibar = chi_grid(wh, h, n, true)?;
            let mut k = chibar.clone();
            k.add_scaled(&convolve(&e, &chibar)?, -1.0);
            let k = k.scale(-1.0 / g2);
            let (sum, last, terms) = sum_series(e, |t| convolve(t, &k), tol, n_max)?;
            Ok(SeriesOutcome { density: sum, survival_renewal: None, last_norm: last, terms })
        }
        _ => {
            let e = GridFunction::from_fn(h, n, |u| a * (-a * u).exp());
            let chibar = chi_grid(wh, h, n, true)?;
            // G = chibar + E - E * chibar; next term = t - t * G
            let mut g = chibar.clone();
            g.add_scaled(&e, 1.0);
            g.add_scaled(&convolve(&e, &chibar)?, -1.0);
            let (sum, last, terms) = sum_series(
                e,
                |t| {
                    let mut next = t.clone();
                    next.add_scaled(&convolve(t, &g)?, -1.0);
                    Ok(next)
                },
                tol,
                n_max,
            )?;
            Ok(SeriesOutcome { density: sum, survival_renewal: None, last_norm: last, terms })
        }
    }
}

fn survival_from_density(atom: f64, density: &GridFunction) -> Vec<f64> {
    density.cumulative().iter().map(|c| 1.0 - atom - c).collect()
}

/// Coarse-grid values of a fine-grid (h/2) result.
fn decimate(v: &[f64]) -> Vec<f64> {
    v.iter().step_by(2).copied().collect()
}

fn richardson(coarse: &[f64], fine: &[f64]) -> Vec<f64> {
    coarse.iter().zip(decimate(fine)).map(|(c, f)| (4.0 * f - c) / 3.0).collect()
}

/// Density and survival of -I on a grid. Falls back to inversion when the
/// series diverges or chi is singular at the origin.
pub fn density_series(wh: &Arc<WienerHopf>, spec: GridSpec, tol: f64, n_max: usize) -> Result<NegWHDistribution> {
    let h = spec.h.unwrap_or_else(|| default_step(wh));
    let u_max = match spec.u_max {
        Some(u) => u,
        None => default_u_max(wh, h)?,
    };
    let n = (u_max / h).round() as usize + 1;
    let atom = wh.atom();
    let coarse = run_series(wh, h, n, tol, n_max);
    let outcome = match coarse {
        Ok(c) if spec.richardson => match run_series(wh, h / 2.0, 2 * n - 1, tol, n_max) {
            Ok(f) => {
                let dens = richardson(&c.density.values, &f.density.values);
                let sc = survival_from_density(atom, &c.density);
                let sf = survival_from_density(atom, &f.density);
                let renewal = match (&c.survival_renewal, &f.survival_renewal) {
                    (Some(a), Some(b)) => Some(richardson(a, b)),
                    _ => None,
                };
                Ok((GridFunction { h, values: dens }, richardson(&sc, &sf), renewal, c.last_norm.max(f.last_norm), c.terms.max(f.terms)))
            }
            Err(e) => Err(e),
        },
        Ok(c) => {
            let surv = survival_from_density(atom, &c.density);
            Ok((c.density, surv, c.survival_renewal, c.last_norm, c.terms))
        }
        Err(e) => Err(e),
    };
    match outcome {
        Ok((density, survival, renewal, last, terms)) => {
            let tail_mass = match &renewal {
                Some(r) => *r.last().unwrap(),
                None => survival_inverted(wh, u_max)?,
            };
            Ok(NegWHDistribution {
                renewal_survival: renewal,
                atom0: atom,
                density,
                survival,
                truncation_bound: last,
                method: Method::Series,
                terms,
                notice: None,
                tail_mass,
            })
        }
        Err(SeriesError::Failed(e)) => Err(e),
        Err(SeriesError::Diverged(why)) => {
            let mut d = density_by_inversion(wh, h, n)?;
            d.notice = Some(format!("series abandoned ({why}); values from numerical inversion"));
            Ok(d)
        }
    }
}

/// Same grid, filled pointwise by inverting the transforms.
pub fn density_by_inversion(wh: &Arc<WienerHopf>, h: f64, n: usize) -> Result<NegWHDistribution> {
    let dens_h = TransformHandle::density(wh);
    let surv_h = TransformHandle::cdf_tail(wh);
    let method = dens_h.preferred_method();
    let terms = default_terms(method);
    let eval = |k: usize| -> Result<(f64, f64)> {
        let u = k as f64 * h;
        Ok((invert_transform(&dens_h, u, method, terms)?, invert_transform(&surv_h, u, method, terms)?))
    };
    let pts: Vec<Result<(f64, f64)>> = {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            (1..n).into_par_iter().map(eval).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            (1..n).map(eval).collect()
        }
    };
    let mut dens = vec![0.0; n];
    let mut surv = vec![1.0 - wh.atom(); n];
    for (k, p) in pts.into_iter().enumerate() {
        let (d, s) = p?;
        dens[k + 1] = d;
        surv[k + 1] = s;
    }
    // the origin is not an inversion point; extrapolate linearly
    if n > 2 {
        dens[0] = (2.0 * dens[1] - dens[2]).max(0.0);
    }
    // spread between node counts as an error estimate
    let alt = if method == InversionMethod::Talbot { 24 } else { 12 };
    let mut spread: f64 = 0.0;
    for k in [n / 8, n / 4, n / 2, n - 1] {
        if k >= 1 {
            let u = k as f64 * h;
            let other = invert_transform(&dens_h, u, method, alt)?;
            spread = spread.max((other - dens[k]).abs());
        }
    }
    let tail_mass = surv[n - 1];
    Ok(NegWHDistribution {
        atom0: wh.atom(),
        density: GridFunction { h, values: dens },
        survival: surv,
        truncation_bound: spread,
        method: Method::Inversion,
        terms: 0,
        notice: None,
        tail_mass,
        renewal_survival: None,
    })
}

/// P[I < -u] from a grid result, or by inversion beyond its range.
/// Near the origin of an inverted grid the density may be singular and
/// interpolation is poor, so those points are inverted directly.
pub fn cdf_neg_wh(wh: &Arc<WienerHopf>, dist: &NegWHDistribution, u: f64) -> Result<f64> {
    if dist.method == Method::Inversion && u > 0.0 && u < SINGULAR_CELLS as f64 * dist.density.h {
        return survival_inverted(wh, u);
    }
    match dist.cdf(u) {
        Err(Error::Extrapolation { .. }) => survival_inverted(wh, u),
        other => other,
    }
}

/// Renewal-series survival for case B, for the self-consistency check.
pub fn case_b_renewal_survival(wh: &WienerHopf, h: f64, n: usize, tol: f64) -> Result<Vec<f64>> {
    if wh.case() != CaseLabel::B {
        return Err(Error::Unsupported("renewal series form is specific to case B".into()));
    }
    match run_series(wh, h, n, tol, 10_000) {
        Ok(o) => Ok(o.survival_renewal.unwrap()),
        Err(SeriesError::Failed(e)) => Err(e),
        Err(SeriesError::Diverged(w)) => Err(Error::Divergent(w)),
    }
}

/// Sup-norms of c^{-n} chi^{*n} for n = 1..=count (case B).
pub fn case_b_term_norms(wh: &WienerHopf, h: f64, n: usize, count: usize) -> Result<Vec<f64>> {
    if wh.case() != CaseLabel::B {
        return Err(Error::Unsupported("term norms are tracked for case B only".into()));
    }
    let chi = match chi_grid(wh, h, n, false) {
        Ok(g) => g.scale(1.0 / wh.model.c),
        Err(SeriesError::Failed(e)) => return Err(e),
        Err(SeriesError::Diverged(w)) => return Err(Error::Divergent(w)),
    };
    let mut term = chi.clone();
    let mut out = vec![term.sup_norm()];
    for _ in 1..count {
        term = convolve(&term, &chi)?;
        out.push(term.sup_norm());
    }
    Ok(out)
}

/// The exponential-jump case-B model solved in closed form.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ClosedFormExp {
    pub c: f64,
    pub p: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub c_q: f64,
    pub a: f64,
    pub atom: f64,
    pub rate: f64,
}

impl ClosedFormExp {
    /// P[I < -u] = (C_q / c) e^{-rate u}.
    pub fn survival(&self, u: f64) -> f64 {
        self.c_q / self.c * (-self.rate * u).exp()
    }

    pub fn density(&self, u: f64) -> f64 {
        self.a / self.c * (self.p * self.c_q / self.c) * (-self.rate * u).exp()
    }

    pub fn mean(&self) -> f64 {
        self.c_q / (self.c * self.rate)
    }

    /// Transform of u -> P[I < -u].
    pub fn survival_transform(&self, r: f64) -> f64 {
        (self.c_q / self.c) / (r + self.rate)
    }
}

/// Real roots of a3 x^3 + a2 x^2 + a1 x + a0 when all three are real.
fn real_cubic_roots(a3: f64, a2: f64, a1: f64, a0: f64) -> Option<[f64; 3]> {
    let (b, c, d) = (a2 / a3, a1 / a3, a0 / a3);
    let p = c - b * b / 3.0;
    let q = 2.0 * b.powi(3) / 27.0 - b * c / 3.0 + d;
    if p >= 0.0 {
        return None;
    }
    let m = 2.0 * (-p / 3.0).sqrt();
    let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
    let th = arg.acos() / 3.0;
    let mut r = [0.0; 3];
    for (k, x) in r.iter_mut().enumerate() {
        *x = m * (th - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - b / 3.0;
    }
    r.sort_by(f64::total_cmp);
    Some(r)
}

/// Closed form for c > 0, Exp(eta) upward jumps at rate lambda1 and
/// Exp(p) downward jumps at rate lambda2.
pub fn closed_form_exp_case(c: f64, lambda1: f64, eta: f64, p: f64, q: f64, lambda2: f64) -> Result<ClosedFormExp> {
    for (name, v) in [("c", c), ("lambda1", lambda1), ("eta", eta), ("p", p), ("q", q), ("lambda2", lambda2)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} = {v} must be positive")));
        }
    }
    // (c r - q)(eta - r)(p + r) + lambda1 r (p + r) - lambda2 r (eta - r) = 0
    let a3 = -c;
    let a2 = c * (eta - p) + q + lambda1 + lambda2;
    let a1 = c * eta * p - q * (eta - p) + lambda1 * p - lambda2 * eta;
    let a0 = -q * eta * p;
    let roots = real_cubic_roots(a3, a2, a1, a0)
        .ok_or_else(|| Error::NonConvergence("cubic does not have three real roots".into()))?;
    let beta1 = roots[1];
    let beta2 = roots[2];
    if !(0.0 < beta1 && beta1 < eta && eta < beta2) {
        return Err(Error::NonConvergence(format!("unexpected root ordering {roots:?}")));
    }
    let c_q = lambda2
        * ((eta - beta1) / ((beta2 - beta1) * (beta1 + p)) + (beta2 - eta) / ((beta2 - beta1) * (beta2 + p)));
    let a = c - c_q;
    Ok(ClosedFormExp { c, p, beta1, beta2, c_q, a, atom: a / c, rate: p * a / c })
}
