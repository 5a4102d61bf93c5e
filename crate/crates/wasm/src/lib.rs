//! Browser bindings. Every entry point takes a model config as JSON (the same
//! schema the command line accepts) and returns a JSON string.

use std::sync::Arc;

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;
use whfactor::config::ModelConfig;
use whfactor::density::{density_series, GridSpec};
use whfactor::laplace::cdf_via_inversion;
use whfactor::tail::{log_grid, tail_ratio_diagnostic, TailLaw};
use whfactor::wh::WienerHopf;

const MAX_ROWS: usize = 400;

fn setup(config: &str, q: f64) -> Result<Arc<WienerHopf>, String> {
    let cfg: ModelConfig = serde_json::from_str(config).map_err(|e| format!("config: {e}"))?;
    let q = if q > 0.0 { q } else { cfg.q.ok_or("no killing rate given")? };
    let model = cfg.checked_model(Some(q)).map_err(|e| e.to_string())?;
    Ok(Arc::new(WienerHopf::new(&model, q).map_err(|e| e.to_string())?))
}

pub fn analyze_json(config: &str, q: f64) -> Result<String, String> {
    let wh = setup(config, q)?;
    let roots: Vec<Value> = wh.roots.roots.iter().map(|r| json!([r.value.re, r.value.im])).collect();
    let v = json!({
        "case": wh.case().to_string(),
        "q": wh.q,
        "a": wh.a,
        "atom": wh.atom(),
        "beta1": wh.roots.beta1(),
        "certified": wh.roots.is_certified(),
        "roots": roots,
    });
    Ok(v.to_string())
}

/// Density and P[I < -u] on a thinned copy of the computation grid.
pub fn curve_json(config: &str, q: f64, u_max: f64) -> Result<String, String> {
    let wh = setup(config, q)?;
    let spec = GridSpec { h: None, u_max: (u_max > 0.0).then_some(u_max), richardson: true };
    let d = density_series(&wh, spec, 1e-8, 5000).map_err(|e| e.to_string())?;
    let n = d.density.len();
    let stride = n.div_ceil(MAX_ROWS).max(1);
    let (mut u, mut f, mut cdf) = (vec![], vec![], vec![]);
    for k in (0..n).step_by(stride) {
        u.push(d.density.u(k));
        f.push(d.density.values[k]);
        cdf.push(d.survival[k]);
    }
    let v = json!({ "method": d.method.to_string(), "atom": d.atom0, "notice": d.notice, "u": u, "density": f, "cdf": cdf });
    Ok(v.to_string())
}

pub fn tail_json(config: &str, q: f64, u_lo: f64, u_hi: f64) -> Result<String, String> {
    if !(u_lo > 0.0 && u_hi > u_lo) {
        return Err(format!("need 0 < lo < hi, got {u_lo} and {u_hi}"));
    }
    let wh = setup(config, q)?;
    let law = TailLaw::for_model(&wh).map_err(|e| e.to_string())?;
    let grid = log_grid(u_lo, u_hi, 4);
    let rep = tail_ratio_diagnostic(&|u| cdf_via_inversion(&wh, u), &|u| law.eval(u), &grid).map_err(|e| e.to_string())?;
    let pts: Vec<Value> = rep.points.iter().map(|p| json!([p.u, p.cdf, p.law, p.ratio])).collect();
    Ok(json!({ "kind": format!("{:?}", law.kind), "drift": rep.last_decade_drift, "points": pts }).to_string())
}

#[wasm_bindgen]
pub fn analyze(config: &str, q: f64) -> Result<String, JsValue> {
    analyze_json(config, q).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn curve(config: &str, q: f64, u_max: f64) -> Result<String, JsValue> {
    curve_json(config, q, u_max).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn tail(config: &str, q: f64, u_lo: f64, u_hi: f64) -> Result<String, JsValue> {
    tail_json(config, q, u_lo, u_hi).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EX: &str = r#"{"c": 1.0, "q": 0.5,
        "positive": {"lambda": 1.0, "poles": [{"alpha": 1.0, "n": 1}], "q_coeffs": [1.0]},
        "negative": {"family": "compound_poisson_exp", "rate": 1.0, "p": 1.0}}"#;

    #[test]
    fn analyze_reports_case_and_atom() {
        let v: Value = serde_json::from_str(&analyze_json(EX, 0.0).unwrap()).unwrap();
        assert_eq!(v["case"], "B");
        let atom = v["atom"].as_f64().unwrap();
        assert!(atom > 0.0 && atom < 1.0);
    }

    #[test]
    fn curve_tail_is_thinned_and_decreasing() {
        let v: Value = serde_json::from_str(&curve_json(EX, 0.5, 20.0).unwrap()).unwrap();
        let cdf: Vec<f64> = v["cdf"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        assert!(cdf.len() <= MAX_ROWS + 1);
        assert!(cdf.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn tail_rejects_bad_range() {
        assert!(tail_json(EX, 0.5, 10.0, 1.0).is_err());
        assert!(setup("{", 0.5).is_err());
    }
}
