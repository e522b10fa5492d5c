//! WebAssembly bindings behind the static demo page in `www/`.
//!
//! Each export returns a JSON string; the plain-Rust functions they wrap are
//! public so they can be tested natively.

use commbound::construct::{build_hilbert_blocks, commutator_ba};
use commbound::funcs::chi_eps;
use commbound::pipeline::{infer_mode, run_theorem_main, theorem_functions, PipelineConfig};
use commbound::symnorm::{singular_values, BlockMode, SingularValueSequence, SymmetricNormSpec};
use commbound::{Error, Result};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest `m` the page may request; keeps the UI responsive.
pub const MAX_DEMO_M: usize = 96;

#[derive(Debug, Serialize)]
pub struct Curve {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct Curves {
    pub chi: Curve,
    pub h: Curve,
    pub f: Curve,
    pub s: Vec<f64>,
    pub q: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct HilbertPoint {
    pub m: usize,
    pub norm: f64,
}

#[derive(Debug, Serialize)]
pub struct StageRow {
    pub m: usize,
    pub bound: f64,
    pub achieved: f64,
    pub witness: String,
    pub passed: bool,
}

#[derive(Debug, Serialize)]
pub struct StageTable {
    pub space: String,
    pub mode: BlockMode,
    pub rows: Vec<StageRow>,
    pub failures: Vec<String>,
}

fn check_m(m_max: usize) -> Result<()> {
    if !(3..=MAX_DEMO_M).contains(&m_max) {
        return Err(Error::InvalidInput(format!("m must lie in 3..={MAX_DEMO_M}, got {m_max}")));
    }
    Ok(())
}

fn sample(points: usize, lo: f64, hi: f64, g: impl Fn(f64) -> Result<f64>) -> Result<Curve> {
    let t: Vec<f64> = (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect();
    let y = t.iter().map(|&v| g(v)).collect::<Result<_>>()?;
    Ok(Curve { t, y })
}

/// `chi_eps` on `[-0.25, 1.25]`, and `h`, `f` from the operator-norm schedule
/// up to `m_max` (`h` on `[0, s_max]`, `f` on the open interval `(-1, 1)`).
pub fn curves(eps: f64, m_max: usize, points: usize) -> Result<Curves> {
    check_m(m_max)?;
    if points < 2 {
        return Err(Error::InvalidInput("need at least 2 sample points".into()));
    }
    let chi = chi_eps(eps)?;
    let cfg = PipelineConfig {
        m_max,
        ..PipelineConfig::default()
    };
    let tf = theorem_functions(&cfg, m_max)?;
    let s = tf.schedule.s().to_vec();
    let s_max = *s.last().expect("schedule has s_0");
    let edge = 1.0 - 1.0 / points as f64;
    Ok(Curves {
        chi: sample(points, -0.25, 1.25, |t| chi.eval(t))?,
        h: sample(points, 0.0, s_max, |t| tf.h.eval(t))?,
        f: sample(points, -edge, edge, |t| tf.f.eval(t))?,
        s,
        q: tf.schedule.q().to_vec(),
    })
}

/// `|[B_m, A_m]|_inf` for `m = 3..=m_max`.
pub fn hilbert_norms(m_max: usize) -> Result<Vec<HilbertPoint>> {
    check_m(m_max)?;
    (3..=m_max)
        .map(|m| {
            let x = commutator_ba(&build_hilbert_blocks(m)?)?;
            let norm = singular_values(&x)?.as_slice()[0];
            Ok(HilbertPoint { m, norm })
        })
        .collect()
}

/// Stage bound against the achieved witness ratio for `m = 3..=m_max`.
pub fn stage_table(space: &str, x0: &[f64], eps: f64, m_max: usize) -> Result<StageTable> {
    check_m(m_max)?;
    let spec: SymmetricNormSpec = space.parse()?;
    let x0 = SingularValueSequence::new(x0.to_vec())?;
    let mode = infer_mode(&spec, &x0, m_max, eps)
        .ok_or_else(|| Error::InvalidInput(format!("no verified block family for {spec} with this x0")))?;
    let cfg = PipelineConfig {
        spec,
        mode,
        x0,
        m_max,
        eps,
        ..PipelineConfig::default()
    };
    let report = run_theorem_main(&cfg)?;
    let rows = report
        .stages
        .iter()
        .map(|s| StageRow {
            m: s.m,
            bound: s.bound,
            achieved: s.achieved,
            witness: s.witness_kind.clone(),
            passed: s.passed(),
        })
        .collect();
    Ok(StageTable {
        space: cfg.spec.to_string(),
        mode,
        rows,
        failures: report.failures(),
    })
}

fn to_js<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = curves)]
pub fn curves_js(eps: f64, m_max: usize, points: usize) -> std::result::Result<String, JsError> {
    to_js(curves(eps, m_max, points))
}

#[wasm_bindgen(js_name = hilbertNorms)]
pub fn hilbert_norms_js(m_max: usize) -> std::result::Result<String, JsError> {
    to_js(hilbert_norms(m_max))
}

#[wasm_bindgen(js_name = stageTable)]
pub fn stage_table_js(space: &str, x0: Vec<f64>, eps: f64, m_max: usize) -> std::result::Result<String, JsError> {
    to_js(stage_table(space, &x0, eps, m_max))
}
