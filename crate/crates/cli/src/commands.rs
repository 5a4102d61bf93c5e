use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde_json::json;
use whfactor::config::ModelConfig;
use whfactor::density::{cdf_neg_wh, default_step, default_u_max, density_series, GridSpec, NegWHDistribution};
use whfactor::laplace::{cdf_via_inversion, laplace_neg_wh, TransformForm};
use whfactor::model::{validate_model, Severity};
use whfactor::simulate::{config_warnings, estimate_cdf, is_exact, ks_compare, simulate_infimum, SimConfig};
use whfactor::tail::{log_grid, tail_ratio_diagnostic, TailLaw};
use whfactor::verify::{probe_points, verify_model, VerifyOptions};
use whfactor::wh::WienerHopf;
use whfactor::{LevyModel, C64};

use crate::args::{Command, Common, Format};
use crate::error::CliError;
use crate::output::{num, sink, Table};

pub fn load_config(path: &Path) -> Result<ModelConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.into(), source })?;
    let json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
    let parsed = if json {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|message| CliError::Schema { path: path.into(), message })
}

struct Ctx {
    cfg: ModelConfig,
    model: LevyModel,
    q: f64,
}

fn context(c: &Common) -> Result<Ctx, CliError> {
    let cfg = load_config(&c.config)?;
    let q = c
        .q
        .or(cfg.q)
        .ok_or_else(|| CliError::Usage("no killing rate: pass --q or set q in the config".into()))?;
    if !(c.tol > 0.0) {
        return Err(CliError::Usage(format!("--tol must be positive, got {}", c.tol)));
    }
    let model = cfg.checked_model(Some(q))?;
    Ok(Ctx { cfg, model, q })
}

fn grid_spec(c: &Common) -> GridSpec {
    GridSpec { h: c.h, u_max: c.umax, richardson: true }
}

fn emit_table(c: &Common, t: &Table, extra: Option<serde_json::Value>) -> Result<(), CliError> {
    let mut w = sink(c.out.as_deref())?;
    match c.format.unwrap_or(Format::Csv) {
        Format::Csv => t.write_csv(&mut *w)?,
        Format::Json => {
            let mut v = extra.unwrap_or_else(|| json!({}));
            v["rows"] = t.to_json();
            writeln!(w, "{}", serde_json::to_string_pretty(&v).expect("serializable"))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn emit_json(c: &Common, v: &serde_json::Value) -> Result<(), CliError> {
    let mut w = sink(c.out.as_deref())?;
    writeln!(w, "{}", serde_json::to_string_pretty(v).expect("serializable"))?;
    w.flush()?;
    Ok(())
}

fn emit_pairs(c: &Common, v: &serde_json::Value) -> Result<(), CliError> {
    if c.format != Some(Format::Csv) {
        return emit_json(c, v);
    }
    let mut t = Table::new(&["key", "value"]);
    if let Some(obj) = v.as_object() {
        for (k, val) in obj {
            let s = match val {
                serde_json::Value::Number(n) => num(n.as_f64().unwrap_or(f64::NAN)),
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string().replace(',', ";"),
            };
            t.push(vec![k.clone(), s]);
        }
    }
    emit_table(c, &t, None)
}

fn notice(d: &NegWHDistribution) {
    if let Some(n) = &d.notice {
        eprintln!("notice: {n}");
    }
}

/// Runs one subcommand and returns the process exit code.
pub fn run(cmd: &Command) -> Result<i32, CliError> {
    let c = cmd.common();
    match cmd {
        Command::Validate(_) => {
            let cfg = load_config(&c.config)?;
            let model = cfg.model();
            let diags = validate_model(&model, c.q.or(cfg.q));
            let ok = diags.iter().all(|d| d.severity != Severity::Error);
            let case = model.classify().map(|k| k.to_string()).unwrap_or_else(|_| "none".into());
            for d in &diags {
                eprintln!("{}: {}", if d.severity == Severity::Error { "error" } else { "warning" }, d.message);
            }
            emit_pairs(c, &json!({ "case": case, "valid": ok, "diagnostics": diags }))?;
            Ok(if ok { 0 } else { 1 })
        }
        Command::Analyze(_) => {
            let ctx = context(c)?;
            let wh = WienerHopf::new(&ctx.model, ctx.q)?;
            let mut resid: f64 = 0.0;
            for r in probe_points(&ctx.model) {
                resid = resid.max(wh.master_identity_residual(r)?);
            }
            let roots: Vec<_> = wh
                .roots
                .roots
                .iter()
                .map(|r| json!({ "re": r.value.re, "im": r.value.im, "mult": r.multiplicity, "residual": r.residual }))
                .collect();
            let cert = wh.roots.cert.as_ref();
            let v = json!({
                "case": wh.case().to_string(),
                "q": ctx.q,
                "m": ctx.model.m(),
                "a": wh.a,
                "kappa0": wh.kappa0,
                "atom": wh.atom(),
                "beta1": wh.roots.beta1(),
                "roots": roots,
                "winding": cert.map(|c| c.winding_count),
                "certified": wh.roots.is_certified(),
                "identity_residual": resid,
                "negative_family": ctx.cfg.negative_family(),
            });
            emit_pairs(c, &v)?;
            Ok(0)
        }
        Command::Density(_) => {
            let ctx = context(c)?;
            let wh = Arc::new(WienerHopf::new(&ctx.model, ctx.q)?);
            let d = density_series(&wh, grid_spec(c), c.tol, 5000)?;
            notice(&d);
            let mut t = Table::new(&["u", "density", "cdf", "method", "truncation_bound"]);
            for k in 0..d.density.len() {
                t.push(vec![
                    num(d.density.u(k)),
                    num(d.density.values[k]),
                    num(d.survival[k]),
                    d.method.to_string(),
                    num(d.truncation_bound),
                ]);
            }
            let extra = json!({ "atom": d.atom0, "method": d.method, "mass_balance": d.mass_balance(), "notice": d.notice });
            emit_table(c, &t, Some(extra))?;
            Ok(0)
        }
        Command::Cdf { u, .. } => {
            let ctx = context(c)?;
            let wh = Arc::new(WienerHopf::new(&ctx.model, ctx.q)?);
            let mut spec = grid_spec(c);
            if let Some(&top) = u.iter().max_by(|a, b| a.total_cmp(b)) {
                if spec.u_max.is_none() {
                    let h = spec.h.unwrap_or_else(|| default_step(&wh));
                    spec.u_max = Some(default_u_max(&wh, h)?.max(top));
                }
            }
            let d = density_series(&wh, spec, c.tol, 5000)?;
            notice(&d);
            let mut t = Table::new(&["u", "cdf", "method"]);
            if u.is_empty() {
                for k in 0..d.survival.len() {
                    t.push(vec![num(d.density.u(k)), num(d.survival[k]), d.method.to_string()]);
                }
            } else {
                for &x in u {
                    if x < 0.0 {
                        return Err(CliError::Usage(format!("u = {x} must be nonnegative")));
                    }
                    t.push(vec![num(x), num(cdf_neg_wh(&wh, &d, x)?), d.method.to_string()]);
                }
            }
            emit_table(c, &t, Some(json!({ "atom": d.atom0 })))?;
            Ok(0)
        }
        Command::Laplace { r, .. } => {
            let ctx = context(c)?;
            let wh = WienerHopf::new(&ctx.model, ctx.q)?;
            let mut t = Table::new(&["r", "transform", "ratio_form"]);
            for &x in r {
                let z = C64::new(x, 0.0);
                let a = laplace_neg_wh(&wh, z, TransformForm::CaseFormula)?.re;
                let b = laplace_neg_wh(&wh, z, TransformForm::Ratio).map(|v| v.re).unwrap_or(f64::NAN);
                t.push(vec![num(x), num(a), num(b)]);
            }
            emit_table(c, &t, None)?;
            Ok(0)
        }
        Command::Asymptote { umin, per_decade, .. } => {
            let ctx = context(c)?;
            let wh = Arc::new(WienerHopf::new(&ctx.model, ctx.q)?);
            let law = TailLaw::for_model(&wh)?;
            let hi = c.umax.unwrap_or(1e4);
            if !(*umin > 0.0 && hi > *umin) {
                return Err(CliError::Usage(format!("need 0 < umin < umax, got {umin} and {hi}")));
            }
            let grid = log_grid(*umin, hi, (*per_decade).max(1));
            let rep = tail_ratio_diagnostic(&|u| cdf_via_inversion(&wh, u), &|u| law.eval(u), &grid)?;
            eprintln!("law: {:?}, last ratio {}, last-decade drift {}", law.kind, num(rep.last_ratio()), num(rep.last_decade_drift));
            let mut t = Table::new(&["u", "cdf", "law", "ratio"]);
            for p in &rep.points {
                t.push(vec![num(p.u), num(p.cdf), num(p.law), num(p.ratio)]);
            }
            let extra = json!({ "kind": law.kind, "constants": law.constants, "last_decade_drift": rep.last_decade_drift });
            emit_table(c, &t, Some(extra))?;
            Ok(0)
        }
        Command::Simulate { samples, .. } => {
            let ctx = context(c)?;
            let cfg = SimConfig { n_paths: c.paths, dt: c.dt, seed: c.seed, bridge_correction: true };
            for w in config_warnings(&ctx.model, ctx.q, &cfg) {
                eprintln!("warning: {w}");
            }
            let draws = simulate_infimum(&ctx.model, ctx.q, &cfg)?;
            let emp = estimate_cdf(&draws)?;
            if let Some(p) = samples {
                let mut w = sink(Some(p))?;
                for x in &draws {
                    writeln!(w, "{}", num(-x))?;
                }
                w.flush()?;
            }
            let wh = Arc::new(WienerHopf::new(&ctx.model, ctx.q)?);
            let d = density_series(&wh, grid_spec(c), c.tol, 5000)?;
            let exact = is_exact(&ctx.model);
            let ks = ks_compare(&emp, &|u| cdf_neg_wh(&wh, &d, u), d.atom0, !exact)?;
            let v = json!({
                "n": emp.n(),
                "mean": emp.mean(),
                "std_error": emp.std_error(),
                "atom_freq": emp.atom_freq(),
                "atom_model": d.atom0,
                "ks_vs_model": ks.d_n,
                "ks_threshold": ks.threshold,
                "atom_z": ks.atom_z,
                "exact_paths": exact,
                "pass": ks.pass,
            });
            emit_pairs(c, &v)?;
            Ok(0)
        }
        Command::Verify(_) => {
            let ctx = context(c)?;
            let opts = VerifyOptions { grid: grid_spec(c), tol: c.tol, paths: c.paths, seed: c.seed, dt: c.dt };
            let rep = verify_model(&ctx.model, ctx.q, &opts)?;
            for ch in &rep.checks {
                eprintln!("{} {}", if ch.pass { "PASS" } else { "FAIL" }, ch.name);
            }
            if c.format == Some(Format::Csv) {
                let mut t = Table::new(&["check", "value", "tolerance", "pass", "note"]);
                for ch in &rep.checks {
                    let note = ch.note.clone().unwrap_or_default().replace(',', ";");
                    t.push(vec![ch.name.clone(), num(ch.value), num(ch.tolerance), ch.pass.to_string(), note]);
                }
                emit_table(c, &t, None)?;
            } else {
                let v = json!({ "case": rep.case.to_string(), "q": rep.q, "method": rep.method, "passed": rep.passed(), "checks": rep.checks });
                emit_json(c, &v)?;
            }
            Ok(if rep.passed() { 0 } else { 2 })
        }
    }
}
