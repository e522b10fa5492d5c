//! Scalar C¹ functions: the smooth step `chi_eps`, the slowly growing `h`
//! assembled from a growth schedule, and `f(t) = |t| / h(log |t|)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

type Eval = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Open interval `(lo, hi)`; infinite endpoints allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
}

impl Domain {
    pub const REAL_LINE: Domain = Domain {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn contains(&self, t: f64) -> bool {
        t.is_finite() && t > self.lo && t < self.hi
    }
}

/// A real function with value and derivative evaluators, a declared domain,
/// and the knot points where the second derivative may jump.
#[derive(Clone)]
pub struct ScalarC1Function {
    label: String,
    domain: Domain,
    value: Eval,
    derivative: Eval,
    kinks: Vec<f64>,
}

impl fmt::Debug for ScalarC1Function {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarC1Function")
            .field("label", &self.label)
            .field("domain", &self.domain)
            .field("kinks", &self.kinks.len())
            .finish()
    }
}

impl ScalarC1Function {
    pub fn new(
        label: impl Into<String>,
        domain: Domain,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
        kinks: Vec<f64>,
    ) -> Self {
        Self {
            label: label.into(),
            domain,
            value: Arc::new(value),
            derivative: Arc::new(derivative),
            kinks,
        }
    }

    /// `sum c_i t^i`.
    pub fn polynomial(coeffs: &[f64], label: impl Into<String>) -> Self {
        let c = coeffs.to_vec();
        let dc: Vec<f64> = coeffs.iter().enumerate().skip(1).map(|(i, a)| i as f64 * a).collect();
        let horner = |c: &[f64], t: f64| c.iter().rev().fold(0.0, |acc, a| acc * t + a);
        Self::new(
            label,
            Domain::REAL_LINE,
            move |t| horner(&c, t),
            move |t| horner(&dc, t),
            Vec::new(),
        )
    }

    pub fn identity() -> Self {
        Self::polynomial(&[0.0, 1.0], "t")
    }

    pub fn square() -> Self {
        Self::polynomial(&[0.0, 0.0, 1.0], "t^2")
    }

    pub fn cube() -> Self {
        Self::polynomial(&[0.0, 0.0, 0.0, 1.0], "t^3")
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok((self.value)(t))
    }

    pub fn derivative(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok((self.derivative)(t))
    }

    fn check(&self, t: f64) -> Result<()> {
        if self.domain.contains(t) {
            Ok(())
        } else {
            Err(Error::Domain {
                label: self.label.clone(),
                arg: t,
            })
        }
    }
}

/// Closed-form trapezoid step.
///
/// `chi' ` is the trapezoid that vanishes outside `[0, 1]`, equals `1 + e` on
/// `[e/(1+e), 1/(1+e)]` and is linear on the two flanks, with `e = min(eps, 1)`
/// (for `eps >= 1` the plateau shrinks to the midpoint and the tent of height 2
/// already satisfies `chi' <= 1 + eps`).
#[derive(Debug, Clone, Copy)]
pub struct SmoothStep {
    eps: f64,
    a: f64,
    b: f64,
    height: f64,
}

impl SmoothStep {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return invalid(format!("chi_eps requires eps > 0, got {eps}"));
        }
        let e = eps.min(1.0);
        Ok(Self {
            eps,
            a: e / (1.0 + e),
            b: 1.0 / (1.0 + e),
            height: 1.0 + e,
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn knots(&self) -> [f64; 4] {
        [0.0, self.a, self.b, 1.0]
    }

    pub fn value(&self, t: f64) -> f64 {
        let (a, b, c) = (self.a, self.b, self.height);
        if t <= 0.0 {
            0.0
        } else if t >= 1.0 {
            1.0
        } else if t <= a {
            c * t * t / (2.0 * a)
        } else if t <= b {
            c * a / 2.0 + c * (t - a)
        } else {
            let u = 1.0 - t;
            1.0 - c * u * u / (2.0 * a)
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let (a, b, c) = (self.a, self.b, self.height);
        if t <= 0.0 || t >= 1.0 {
            0.0
        } else if t <= a {
            c * t / a
        } else if t <= b {
            c
        } else {
            c * (1.0 - t) / a
        }
    }
}

pub fn chi_eps(eps: f64) -> Result<ScalarC1Function> {
    let step = SmoothStep::new(eps)?;
    Ok(ScalarC1Function::new(
        format!("chi[eps={eps}]"),
        Domain::REAL_LINE,
        move |t| step.value(t),
        move |t| step.derivative(t),
        step.knots().to_vec(),
    ))
}

/// Breakpoints `s_m` and targets `q_m` with `s_0 = 0`, `q_0 = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthSchedule {
    s: Vec<f64>,
    q: Vec<f64>,
    #[serde(skip)]
    alpha: f64,
}

impl GrowthSchedule {
    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    /// `sup_m (log q_m - log q_{m-1}) / (s_m - s_{m-1})`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }
}

impl<'de> Deserialize<'de> for GrowthSchedule {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            s: Vec<f64>,
            q: Vec<f64>,
        }
        let r = Repr::deserialize(d)?;
        build_schedule(&r.s, &r.q).map_err(serde::de::Error::custom)
    }
}

pub fn build_schedule(s: &[f64], q: &[f64]) -> Result<GrowthSchedule> {
    if s.len() != q.len() {
        return invalid(format!("s and q lengths differ ({} vs {})", s.len(), q.len()));
    }
    if s.len() < 2 {
        return invalid("schedule needs at least two points");
    }
    if s.iter().chain(q).any(|v| !v.is_finite()) {
        return invalid("schedule entries must be finite");
    }
    if s[0] != 0.0 || q[0] != 1.0 {
        return invalid("schedule must start at s_0 = 0, q_0 = 1");
    }
    if s.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("s must be strictly increasing");
    }
    if q.windows(2).any(|w| w[1] < w[0]) {
        return invalid("q must be increasing");
    }
    let alpha = s
        .windows(2)
        .zip(q.windows(2))
        .map(|(sw, qw)| (qw[1].ln() - qw[0].ln()) / (sw[1] - sw[0]))
        .fold(0.0, f64::max);
    if alpha >= 1.0 {
        return Err(Error::ScheduleInfeasible { alpha });
    }
    Ok(GrowthSchedule {
        s: s.to_vec(),
        q: q.to_vec(),
        alpha,
    })
}

pub const EXTENSION_KNOT_PERIODS: usize = 256;

/// `H(t) = sum_m chi((t - s_{m-1}) / (s_m - s_{m-1})) (log q_m - log q_{m-1})`
/// for `t >= 0`, evaluated through its single active term. Past the last
/// breakpoint the final increment repeats periodically, which keeps `H` C¹
/// with the same average slope.
#[derive(Debug, Clone)]
pub struct LogGrowth {
    s: Vec<f64>,
    log_q: Vec<f64>,
    step: SmoothStep,
}

impl LogGrowth {
    pub fn new(schedule: &GrowthSchedule) -> Result<Self> {
        let alpha = schedule.alpha();
        let eps = if alpha > 0.0 { 1.0 / alpha - 1.0 } else { f64::INFINITY };
        Ok(Self {
            s: schedule.s.clone(),
            log_q: schedule.q.iter().map(|q| q.ln()).collect(),
            step: SmoothStep::new(eps)?,
        })
    }

    pub fn eps(&self) -> f64 {
        self.step.eps()
    }

    // (base log q, increment, left breakpoint, width)
    fn segment(&self, t: f64) -> (f64, f64, f64, f64) {
        let last = self.s.len() - 1;
        if t >= self.s[last] {
            let width = self.s[last] - self.s[last - 1];
            let inc = self.log_q[last] - self.log_q[last - 1];
            let j = ((t - self.s[last]) / width).floor();
            return (self.log_q[last] + j * inc, inc, self.s[last] + j * width, width);
        }
        // first index with s > t; t >= 0 = s_0 so k >= 1
        let k = self.s.partition_point(|&x| x <= t).max(1);
        (
            self.log_q[k - 1],
            self.log_q[k] - self.log_q[k - 1],
            self.s[k - 1],
            self.s[k] - self.s[k - 1],
        )
    }

    pub fn value(&self, t: f64) -> f64 {
        let t = t.abs();
        let (base, inc, left, width) = self.segment(t);
        base + self.step.value((t - left) / width) * inc
    }

    /// `H'(t)` for `t >= 0`.
    pub fn derivative(&self, t: f64) -> f64 {
        let (_, inc, left, width) = self.segment(t);
        self.step.derivative((t - left) / width) * inc / width
    }

    /// Knots of `H` on the stored schedule and the first
    /// [`EXTENSION_KNOT_PERIODS`] periods of its continuation.
    pub fn knots(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for w in self.s.windows(2) {
            for k in self.step.knots() {
                out.push(w[0] + k * (w[1] - w[0]));
            }
        }
        let last = self.s.len() - 1;
        let width = self.s[last] - self.s[last - 1];
        for j in 0..EXTENSION_KNOT_PERIODS {
            for k in self.step.knots() {
                out.push(self.s[last] + (j as f64 + k) * width);
            }
        }
        out.dedup();
        out
    }
}

/// `h(t) = exp(H(|t|))`.
pub fn build_h(schedule: &GrowthSchedule) -> Result<ScalarC1Function> {
    let growth = Arc::new(LogGrowth::new(schedule)?);
    let (gv, gd) = (growth.clone(), growth.clone());
    let mut kinks: Vec<f64> = growth.knots();
    kinks.extend(growth.knots().iter().map(|k| -k));
    kinks.sort_by(f64::total_cmp);
    kinks.dedup();
    Ok(ScalarC1Function::new(
        format!("h[alpha={:.6}]", schedule.alpha()),
        Domain::REAL_LINE,
        move |t| gv.value(t.abs()).exp(),
        move |t| {
            let d = gd.derivative(t.abs()) * gd.value(t.abs()).exp();
            if t < 0.0 {
                -d
            } else {
                d
            }
        },
        kinks,
    ))
}

/// `f(t) = |t| / h(log |t|)` on `(-1, 1)`, `f(0) = 0`.
pub fn build_f(h: &ScalarC1Function) -> Result<ScalarC1Function> {
    let h0 = h.eval(0.0)?;
    if !(h0 > 0.0) {
        return invalid("h must be positive");
    }
    let (hv, hd) = (h.clone(), h.clone());
    let mut kinks: Vec<f64> = h
        .kinks()
        .iter()
        .filter(|k| **k < 0.0)
        .flat_map(|k| [k.exp(), -k.exp()])
        .collect();
    kinks.push(0.0);
    kinks.sort_by(f64::total_cmp);
    kinks.dedup();
    let value = move |t: f64| {
        if t == 0.0 {
            0.0
        } else {
            t.abs() / (hv.value)(t.abs().ln())
        }
    };
    let derivative = move |t: f64| {
        if t == 0.0 {
            return 0.0;
        }
        let x = t.abs().ln();
        let hx = (hd.value)(x);
        let d = (1.0 - (hd.derivative)(x) / hx) / hx;
        if t < 0.0 {
            -d
        } else {
            d
        }
    };
    Ok(ScalarC1Function::new(
        format!("f[{}]", h.label()),
        Domain { lo: -1.0, hi: 1.0 },
        value,
        derivative,
        kinks,
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct C1Report {
    pub label: String,
    pub step: f64,
    pub checked: usize,
    pub skipped_near_kinks: usize,
    pub max_error: f64,
    pub worst_t: f64,
    /// Grid points where the finite-difference mismatch exceeded its bound.
    pub flagged: Vec<f64>,
}

impl C1Report {
    pub fn passed(&self) -> bool {
        self.flagged.is_empty()
    }
}

/// Compares the derivative evaluator with centered differences on `grid`.
///
/// The allowed mismatch at `t` is `1e-6 (1 + |f'(t)|) + step * |D2| +
/// 64 eps_mach (|f(t)| + 1) / step`, with `D2` the local second difference;
/// points within `2 step` of a declared knot are skipped.
pub fn verify_c1(f: &ScalarC1Function, grid: &[f64], step: f64) -> Result<C1Report> {
    if !(step > 0.0) {
        return invalid("step must be positive");
    }
    let mut report = C1Report {
        label: f.label().to_string(),
        step,
        checked: 0,
        skipped_near_kinks: 0,
        max_error: 0.0,
        worst_t: f64::NAN,
        flagged: Vec::new(),
    };
    for &t in grid {
        if !f.domain().contains(t - step) || !f.domain().contains(t + step) {
            return invalid(format!("grid point {t} +/- {step} leaves the domain of {}", f.label()));
        }
        if f.kinks().iter().any(|k| (k - t).abs() < 2.0 * step) {
            report.skipped_near_kinks += 1;
            continue;
        }
        let (fm, f0, fp) = (f.eval(t - step)?, f.eval(t)?, f.eval(t + step)?);
        let fd = (fp - fm) / (2.0 * step);
        let d = f.derivative(t)?;
        let second = (fp - 2.0 * f0 + fm) / (step * step);
        let err = (fd - d).abs();
        let bound = 1e-6 * (1.0 + d.abs()) + step * second.abs() + 64.0 * f64::EPSILON * (f0.abs() + 1.0) / step;
        report.checked += 1;
        if err > report.max_error || report.worst_t.is_nan() {
            report.max_error = report.max_error.max(err);
            report.worst_t = t;
        }
        if err > bound {
            report.flagged.push(t);
        }
    }
    Ok(report)
}

/// CSV `t,value,derivative`, 17 significant digits.
pub fn sample_csv(f: &ScalarC1Function, ts: &[f64]) -> Result<String> {
    let mut out = String::from("t,value,derivative\n");
    for &t in ts {
        out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", t, f.eval(t)?, f.derivative(t)?));
    }
    Ok(out)
}
