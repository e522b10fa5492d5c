//! End-to-end counterexample pipeline: the `p_m` schedule, the stage
//! matrices `W_m = Phi(p_m B_m)` with their blow-up witnesses, the
//! commutator pairs `(W_r, X_r)` and their direct-sum truncations.

use std::collections::BTreeMap;
use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::construct::{
    build_hilbert_blocks, commutator_ba, make_tensor_lift, verify_intertwining, verify_norm_sandwich,
    MAX_BLOCK_M, MAX_LIFT_SIZE,
};
use crate::error::{invalid, Error, Result};
use crate::funcs::{build_f, build_h, build_schedule, chi_eps, verify_c1, GrowthSchedule, LogGrowth, ScalarC1Function};
use crate::matrix::{ComplexMatrix, C64, I, ZERO};
use crate::schur::{
    dual_witness_transfer, group_labels, group_spectrum, pinch, verify_schur_commutator_identity, BlowupWitness,
    DiagonalOperator, DividedDifferenceSymbol, IdentityResidual,
};
use crate::symnorm::{
    decreasing_rearrangement, singular_values, verify_block_family, BlockMode, NormKind, SingularValueSequence,
    SymmetricNormSpec,
};

/// `K0 = (1 - e^-1) / 4`.
pub const K0: f64 = (1.0 - 1.0 / E) / 4.0;
/// `K1 = 2 K0 / (3 pi)`.
pub const K1: f64 = 2.0 * K0 / (3.0 * PI);

/// A certified inequality. `margin` is signed slack (positive means the
/// claim holds strictly); it passes when `margin >= -tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Check {
    pub pass: bool,
    pub margin: f64,
    pub tol: f64,
}

impl Check {
    pub fn at_least(value: f64, bound: f64, tol: f64) -> Self {
        let margin = value - bound;
        Check {
            pass: margin >= -tol,
            margin,
            tol,
        }
    }

    pub fn at_most(value: f64, bound: f64, tol: f64) -> Self {
        Self::at_least(bound, value, tol)
    }

    /// `residual <= tol`.
    pub fn residual(residual: f64, tol: f64) -> Self {
        Self::at_most(residual, 0.0, tol)
    }

    pub fn flag(ok: bool) -> Self {
        Check {
            pass: ok,
            margin: if ok { 0.0 } else { -1.0 },
            tol: 0.0,
        }
    }
}

pub type Checks = BTreeMap<String, Check>;

pub fn all_pass(checks: &Checks) -> bool {
    checks.values().all(|c| c.pass)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Relative Frobenius residual for exact matrix identities.
    pub identity: f64,
    /// Relative slack for norm equalities.
    pub norm: f64,
    /// Absolute slack for lower bounds.
    pub bound: f64,
    /// Eigenvalue grouping gap for pinching; 0 groups only exact repeats.
    pub group: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            identity: 1e-12,
            norm: 1e-9,
            bound: 1e-9,
            group: 0.0,
        }
    }
}

fn default_spec() -> SymmetricNormSpec {
    SymmetricNormSpec::schatten(f64::INFINITY).expect("valid")
}

fn default_mode() -> BlockMode {
    BlockMode::Sup
}

fn default_x0() -> SingularValueSequence {
    SingularValueSequence::new(vec![1.0]).expect("valid")
}

fn default_m_max() -> usize {
    64
}

fn default_eps() -> f64 {
    0.5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_spec")]
    pub spec: SymmetricNormSpec,
    #[serde(default = "default_mode")]
    pub mode: BlockMode,
    #[serde(default = "default_x0")]
    pub x0: SingularValueSequence,
    #[serde(default = "default_m_max")]
    pub m_max: usize,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            spec: default_spec(),
            mode: default_mode(),
            x0: default_x0(),
            m_max: default_m_max(),
            eps: default_eps(),
            tolerances: Tolerances::default(),
        }
    }
}

impl PipelineConfig {
    /// Checks parameters, sizes, and the block family for every lift the
    /// stages `3..=m_max` use.
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return invalid(format!("eps must lie in (0, 1), got {}", self.eps));
        }
        if self.m_max < 3 {
            return invalid(format!("m_max must be >= 3, got {}", self.m_max));
        }
        if self.m_max > MAX_BLOCK_M {
            return Err(Error::SizeLimit {
                size: self.m_max,
                limit: MAX_BLOCK_M,
            });
        }
        let k = 2 * self.m_max * self.x0.len();
        if k > MAX_LIFT_SIZE {
            return Err(Error::SizeLimit {
                size: k,
                limit: MAX_LIFT_SIZE,
            });
        }
        for m in 3..=self.m_max {
            let report = verify_block_family(&self.spec, &self.x0, 2 * m, self.eps, self.mode)?;
            if !report.passed {
                return invalid(format!(
                    "x0 does not give a {:?} block family for {} at n = {} (|x_1 + ... + x_n|_E = {}, allowed [{}, {}])",
                    self.mode,
                    self.spec,
                    2 * m,
                    report.all_ones_norm,
                    report.lower,
                    report.upper
                ));
            }
        }
        let tols = [self.tolerances.identity, self.tolerances.norm, self.tolerances.bound, self.tolerances.group];
        if tols.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return invalid("tolerances must be finite and nonnegative");
        }
        Ok(())
    }
}

/// First mode whose block family holds for every `n <= 2 m_max`, trying
/// `sup` before `sum`.
pub fn infer_mode(spec: &SymmetricNormSpec, x0: &SingularValueSequence, m_max: usize, eps: f64) -> Option<BlockMode> {
    [BlockMode::Sup, BlockMode::Sum].into_iter().find(|&mode| {
        (3..=m_max.max(3)).all(|m| {
            verify_block_family(spec, x0, 2 * m, eps, mode)
                .map(|r| r.passed)
                .unwrap_or(false)
        })
    })
}

/// `q_m = sqrt(log(m + e))`.
pub fn q_sequence(m: usize) -> f64 {
    (m as f64 + E).ln().sqrt()
}

/// `|Phi_{2m}(B_m)|_E`: each `e^-j` repeated `2 |x0|` times.
pub fn phi_b_norm(spec: &SymmetricNormSpec, x0_len: usize, m: usize) -> Result<f64> {
    let values: Vec<f64> = (1..=m)
        .flat_map(|j| std::iter::repeat_n((-(j as f64)).exp(), 2 * x0_len))
        .collect();
    spec.norm_sequence(&decreasing_rearrangement(&values)?)
}

/// `p_0 = 1` and `1/p_m = max{1, 1/p_{m-1}, m² |Phi(B_m)|_E,
/// q_m² / (e q_{m-1}²) / p_{m-1}}`.
pub fn p_sequence(cfg: &PipelineConfig, m_max: usize) -> Result<Vec<f64>> {
    if m_max < 1 {
        return invalid("m_max must be >= 1");
    }
    let mut inv = vec![1.0f64];
    for m in 1..=m_max {
        let prev = inv[m - 1];
        let growth = (m * m) as f64 * phi_b_norm(&cfg.spec, cfg.x0.len(), m)?;
        let ql = q_sequence(m).powi(2) / (E * q_sequence(m - 1).powi(2)) * prev;
        inv.push(1.0f64.max(prev).max(growth).max(ql));
    }
    Ok(inv.into_iter().map(|v| 1.0 / v).collect())
}

/// `s_m = m - log p_m` and `q_m` as a growth schedule.
pub fn theorem_schedule(p: &[f64]) -> Result<GrowthSchedule> {
    let s: Vec<f64> = p.iter().enumerate().map(|(m, pm)| m as f64 - pm.ln()).collect();
    let q: Vec<f64> = (0..p.len()).map(q_sequence).collect();
    build_schedule(&s, &q)
}

/// `K1 log(m/2) / h(m - log p)`.
pub fn stage_lower_bound(m: usize, p: f64, h: &ScalarC1Function) -> Result<f64> {
    Ok(K1 * (m as f64 / 2.0).ln() / h.eval(m as f64 - p.ln())?)
}

/// Functions shared by every stage of one configuration.
#[derive(Debug, Clone)]
pub struct TheoremFunctions {
    pub p: Vec<f64>,
    pub schedule: GrowthSchedule,
    pub h: ScalarC1Function,
    pub f: ScalarC1Function,
}

pub fn theorem_functions(cfg: &PipelineConfig, m_max: usize) -> Result<TheoremFunctions> {
    let p = p_sequence(cfg, m_max)?;
    let schedule = theorem_schedule(&p)?;
    let h = build_h(&schedule)?;
    let f = build_f(&h)?;
    Ok(TheoremFunctions { p, schedule, h, f })
}

fn op_norm(x: &ComplexMatrix) -> Result<f64> {
    Ok(singular_values(x)?.as_slice().first().copied().unwrap_or(0.0))
}

fn trace_norm(x: &ComplexMatrix) -> Result<f64> {
    Ok(singular_values(x)?.as_slice().iter().sum())
}

fn relative(residual: f64, scale: f64) -> f64 {
    IdentityResidual { residual, scale }.relative()
}

/// Relative departure from self-adjointness.
fn adjoint_defect(x: &ComplexMatrix) -> Result<f64> {
    let d = x.sub(&x.adjoint())?.frobenius_norm();
    Ok(relative(d, x.frobenius_norm()))
}

#[derive(Debug, Clone, Serialize)]
pub struct InfEstimateReport {
    pub m: usize,
    pub p: f64,
    /// `|[B, A]|_inf`
    pub ba_norm: f64,
    /// `|[f(pB), A]|_inf`
    pub comm_norm: f64,
    /// `|[f(pD), V]|_inf`
    pub reduced_norm: f64,
    /// `p K0 log(m/2) / h(m - log p)`
    pub lower: f64,
    pub checks: Checks,
}

impl InfEstimateReport {
    pub fn passed(&self) -> bool {
        all_pass(&self.checks)
    }
}

/// `|[B, A]|_inf <= pi` and `|[f(pB), A]|_inf >= p K0 log(m/2) / h(m - log p)`,
/// plus the block reduction to `[f(pD), V]`.
pub fn infestimate_check(
    m: usize,
    p: f64,
    f: &ScalarC1Function,
    h: &ScalarC1Function,
) -> Result<InfEstimateReport> {
    if !(p > 0.0 && p <= 1.0) {
        return invalid(format!("p must lie in (0, 1], got {p}"));
    }
    if p * (-1.0f64).exp() >= 1.0 {
        return Err(Error::Domain {
            label: f.label().to_string(),
            arg: p * (-1.0f64).exp(),
        });
    }
    let blocks = build_hilbert_blocks(m)?;
    let ba_norm = op_norm(&commutator_ba(&blocks)?)?;
    let comm_norm = op_norm(&blocks.b.scaled(p).apply_fn(f)?.commutator_with(&blocks.a)?)?;
    let reduced_norm = op_norm(&blocks.d.scaled(p).apply_fn(f)?.commutator_with(&blocks.v)?)?;
    let lower = p * K0 * (m as f64 / 2.0).ln() / h.eval(m as f64 - p.ln())?;
    let mut checks = Checks::new();
    checks.insert("ba_le_pi".into(), Check::at_most(ba_norm, PI, 1e-12 * PI));
    checks.insert("comm_ge_lower".into(), Check::at_least(comm_norm, lower, 1e-9 * lower));
    checks.insert(
        "block_reduction".into(),
        Check::residual(relative((comm_norm - reduced_norm).abs(), comm_norm), 1e-12),
    );
    Ok(InfEstimateReport {
        m,
        p,
        ba_norm,
        comm_norm,
        reduced_norm,
        lower,
        checks,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleStage {
    pub m: usize,
    pub p: f64,
    pub s: f64,
    pub q: f64,
    /// `|W_m|_{S^E}`
    pub w_norm: f64,
    /// `|W_m|_inf`
    pub w_sup: f64,
    /// `K1 log(m/2) / h(m - log p_m)`
    pub bound: f64,
    /// Witness ratio `|M_f(W_m)(X)|_E / |X|_E`.
    pub achieved: f64,
    /// `|[B_m, A_m]|_inf`
    pub x_inf_norm: f64,
    /// `|M_f(p_m B_m)([B_m, A_m])|_inf`
    pub image_inf_norm: f64,
    /// Which small witness was lifted.
    pub witness_kind: String,
    pub size: usize,
    pub checks: Checks,
    #[serde(skip)]
    pub witness: BlowupWitness,
    #[serde(skip)]
    pub small_witness: ComplexMatrix,
}

impl CounterexampleStage {
    pub fn passed(&self) -> bool {
        all_pass(&self.checks)
    }

    pub fn w(&self) -> &DiagonalOperator {
        &self.witness.b
    }
}

/// Self-adjoint witnesses for sum mode: Hermitian and skew parts of the
/// rank-one dual witness with the diagonal (the pinching onto the distinct
/// eigenvalues of `p B`) removed, and `i [B, A]` itself.
fn sum_mode_candidates(
    f: &ScalarC1Function,
    pb: &DiagonalOperator,
    x_inf: &ComplexMatrix,
) -> Result<(ComplexMatrix, Vec<(&'static str, ComplexMatrix)>)> {
    let y = dual_witness_transfer(f, pb, x_inf)?;
    let ya = y.adjoint();
    let herm = y.add(&ya)?.scale_real(0.5);
    let skew = y.sub(&ya)?.scale(I * 0.5);
    let n = pb.len();
    let labels = group_labels(&group_spectrum(pb, 0.0)?, n);
    let mut out = Vec::new();
    for (name, x) in [("dual_hermitian", herm), ("dual_skew", skew)] {
        let off = x.sub(&pinch(&x, &labels))?;
        if !off.is_zero() {
            out.push((name, off));
        }
    }
    out.push(("i_commutator", x_inf.scale(I)));
    Ok((y, out))
}

/// Stage `m`: `W_m = Phi_{2m}(p_m B_m)` and the lifted witness, with the
/// norm bound on `W_m`, the witness chain, and the `K1` lower bound.
pub fn build_stage(
    cfg: &PipelineConfig,
    m: usize,
    p: &[f64],
    f: &ScalarC1Function,
    h: &ScalarC1Function,
) -> Result<CounterexampleStage> {
    let tol = cfg.tolerances;
    let pm = *p
        .get(m)
        .ok_or_else(|| Error::InvalidInput(format!("p sequence has no entry for m = {m}")))?;
    let s = m as f64 - pm.ln();
    let q = q_sequence(m);
    let blocks = build_hilbert_blocks(m)?;
    let lift = make_tensor_lift(2 * m, cfg.x0.clone())?;
    let pb = blocks.b.scaled(pm);
    let w = lift.phi_diag(&pb)?;
    let w_abs: Vec<f64> = w.eigenvalues().to_vec();
    let w_norm = cfg.spec.norm_sequence(&decreasing_rearrangement(&w_abs)?)?;
    let w_sup = w_abs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut checks = Checks::new();
    let inv_m2 = 1.0 / (m * m) as f64;
    checks.insert("w_norm_le_inv_m2".into(), Check::at_most(w_norm, inv_m2, tol.norm * inv_m2));
    checks.insert("w_sup_le_w_norm".into(), Check::at_most(w_sup, w_norm, tol.norm * w_norm));

    // X_inf = [p B, A / p] = [B, A]
    let x_inf = commutator_ba(&blocks)?;
    let a_over_p = blocks.a.scale_real(1.0 / pm);
    let x_inf_p = pb.commutator_with(&a_over_p)?;
    checks.insert(
        "p_cancels".into(),
        Check::residual(relative(x_inf_p.sub(&x_inf)?.frobenius_norm(), x_inf.frobenius_norm()), tol.identity),
    );
    let x_inf_norm = op_norm(&x_inf)?;
    checks.insert("x_inf_le_pi".into(), Check::at_most(x_inf_norm, PI, tol.identity * PI));
    let schur_residual = verify_schur_commutator_identity(f, &pb, &a_over_p)?;
    checks.insert("schur_commutator".into(), Check::residual(schur_residual.relative(), tol.identity));

    let small = DividedDifferenceSymbol::new(f, &pb)?;
    let image_inf_norm = op_norm(&small.apply(&x_inf)?)?;
    let h_s = h.eval(s)?;
    let inf_lower = K0 * (m as f64 / 2.0).ln() / h_s;
    checks.insert(
        "infestimate".into(),
        Check::at_least(image_inf_norm, inf_lower, tol.bound),
    );

    let candidates = match cfg.mode {
        BlockMode::Sup => vec![("i_commutator", x_inf.scale(I))],
        BlockMode::Sum => {
            let (y, c) = sum_mode_candidates(f, &pb, &x_inf)?;
            let y_ratio = trace_norm(&small.apply(&y)?)? / trace_norm(&y)?;
            checks.insert(
                "dual_transfer".into(),
                Check::at_least(y_ratio, image_inf_norm / x_inf_norm, tol.norm * y_ratio),
            );
            c
        }
    };
    let big = DividedDifferenceSymbol::new(f, &w)?;
    let mut best: Option<(&'static str, ComplexMatrix, ComplexMatrix, f64, f64, f64)> = None;
    for (name, x_small) in candidates {
        let x = lift.psi(&x_small)?;
        let xn = cfg.spec.norm_matrix(&x)?;
        let img = cfg.spec.norm_matrix(&big.apply(&x)?)?;
        let ratio = img / xn;
        if best.as_ref().is_none_or(|b| ratio > b.5) {
            best = Some((name, x_small, x, img, xn, ratio));
        }
    }
    let (witness_kind, x_small, x, image_norm, witness_norm, achieved) =
        best.ok_or_else(|| Error::NoWitness(format!("no nonzero witness at m = {m}")))?;

    let inter = verify_intertwining(&lift, f, &pb, &x_small)?;
    checks.insert("intertwining".into(), Check::residual(inter.relative(), tol.identity));
    let image_small = small.apply(&x_small)?;
    for (name, y) in [("sandwich_witness", &x_small), ("sandwich_image", &image_small)] {
        let r = verify_norm_sandwich(&lift, &cfg.spec, y, cfg.eps, cfg.mode)?;
        let slack = (r.value - r.lower).min(r.upper - r.value);
        checks.insert(name.into(), Check::at_least(slack, 0.0, 1e-10 * r.upper));
    }
    let chain = match cfg.mode {
        BlockMode::Sup => image_inf_norm / ((1.0 + cfg.eps) * x_inf_norm),
        BlockMode::Sum => (1.0 - cfg.eps) * trace_norm(&image_small)? / trace_norm(&x_small)?,
    };
    checks.insert("witness_chain".into(), Check::at_least(achieved, chain, tol.norm * chain));
    let bound = stage_lower_bound(m, pm, h)?;
    checks.insert("k1_lower_bound".into(), Check::at_least(achieved, bound, tol.bound));

    Ok(CounterexampleStage {
        m,
        p: pm,
        s,
        q,
        w_norm,
        w_sup,
        bound,
        achieved,
        x_inf_norm,
        image_inf_norm,
        witness_kind: witness_kind.to_string(),
        size: w.len(),
        checks,
        witness: BlowupWitness {
            b: w,
            x,
            spec: cfg.spec.clone(),
            ratio: achieved,
            image_norm,
            witness_norm,
        },
        small_witness: x_small,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CommutatorPair {
    pub r: usize,
    pub size: usize,
    /// `|[W_r, X_r]|_{S^E}`
    pub first_comm_norm: f64,
    /// `|[f(W_r), X_r]|_{S^E}`
    pub second_comm_norm: f64,
    /// `|[W_r, X_r]|_inf`
    pub first_comm_sup: f64,
    /// `|M_f(W)(X2)|_E / |X2|_E`
    pub ratio: f64,
    /// Whether `ratio >= 2 r³`, the growth needed for `|[f(W_r), X_r]| >= r`.
    pub reaches_r_cubed: bool,
    pub w_norm: f64,
    pub w_sup: f64,
    pub checks: Checks,
    #[serde(skip)]
    pub w: DiagonalOperator,
    #[serde(skip)]
    pub x_r: ComplexMatrix,
    #[serde(skip)]
    pub first_s: SingularValueSequence,
    #[serde(skip)]
    pub second_s: SingularValueSequence,
}

impl CommutatorPair {
    pub fn passed(&self) -> bool {
        all_pass(&self.checks)
    }
}

/// Turns a self-adjoint `X1` with `M_f(W)(X1) != 0` into `X_r` with
/// `|[W, X_r]|_E = r^-2` and `|[f(W), X_r]|_E = r^-2 |M_f(W) X2|_E / |X2|_E`.
pub fn build_commutator_pair(
    spec: &SymmetricNormSpec,
    f: &ScalarC1Function,
    w: &DiagonalOperator,
    x1: &ComplexMatrix,
    r: usize,
    tols: &Tolerances,
) -> Result<CommutatorPair> {
    w.check_square(x1)?;
    if r == 0 {
        return invalid("r must be >= 1");
    }
    if adjoint_defect(x1)? > tols.identity {
        return invalid("X1 must be self-adjoint");
    }
    let n = w.len();
    let labels = group_labels(&group_spectrum(w, tols.group)?, n);
    let x_hat = pinch(x1, &labels);
    let x2 = x1.sub(&x_hat)?;
    if x2.is_zero() {
        return Err(Error::DegenerateWitness(
            "X1 is block diagonal with respect to the spectrum of W".into(),
        ));
    }
    let l = w.eigenvalues();
    let x3 = ComplexMatrix::from_fn(n, n, |j, k| {
        if labels[j] == labels[k] {
            ZERO
        } else {
            x2[(j, k)] * C64::new(0.0, -1.0 / (l[j] - l[k]))
        }
    });
    let x1_norm = spec.norm_matrix(x1)?;
    let x2_norm = spec.norm_matrix(&x2)?;
    let x_hat_norm = spec.norm_matrix(&x_hat)?;
    let rr = (r * r) as f64;
    let x_r = x3.scale_real(1.0 / (rr * x2_norm));

    let sym = DividedDifferenceSymbol::new(f, w)?;
    let m_x2 = sym.apply(&x2)?;
    let m_x1 = sym.apply(x1)?;
    let ratio = spec.norm_matrix(&m_x2)? / x2_norm;

    let first = w.commutator_with(&x_r)?;
    let fw = w.apply_fn(f)?;
    let second = fw.commutator_with(&x_r)?;
    let first_s = singular_values(&first)?;
    let second_s = singular_values(&second)?;
    let first_comm_norm = spec.norm_sequence(&first_s)?;
    let second_comm_norm = spec.norm_sequence(&second_s)?;
    let first_comm_sup = first_s.as_slice().first().copied().unwrap_or(0.0);

    let mut checks = Checks::new();
    let makecomm = w.commutator_with(&x3)?.scale(I).sub(&x2)?.frobenius_norm();
    checks.insert(
        "x2_eq_i_w_x3".into(),
        Check::residual(relative(makecomm, x2.frobenius_norm()), tols.identity),
    );
    checks.insert(
        "multiplier_ignores_pinching".into(),
        Check::residual(relative(m_x2.sub(&m_x1)?.frobenius_norm(), m_x1.frobenius_norm()), tols.identity),
    );
    let sc = verify_schur_commutator_identity(f, w, &x_r)?;
    checks.insert("schur_commutator".into(), Check::residual(sc.relative(), tols.identity));
    checks.insert(
        "first_comm_r2".into(),
        Check::residual((first_comm_norm * rr - 1.0).abs(), tols.norm),
    );
    checks.insert(
        "second_over_first".into(),
        Check::residual(relative((second_comm_norm / first_comm_norm - ratio).abs(), ratio), tols.norm),
    );
    checks.insert(
        "pinching_contracts".into(),
        Check::at_most(x_hat_norm, x1_norm, tols.norm * x1_norm),
    );
    checks.insert(
        "x2_le_twice_x1".into(),
        Check::at_most(x2_norm, 2.0 * x1_norm, tols.norm * x1_norm),
    );
    checks.insert("x_r_self_adjoint".into(), Check::residual(adjoint_defect(&x_r)?, tols.identity));

    let w_abs: Vec<f64> = l.to_vec();
    Ok(CommutatorPair {
        r,
        size: n,
        first_comm_norm,
        second_comm_norm,
        first_comm_sup,
        ratio,
        reaches_r_cubed: ratio >= 2.0 * (r as f64).powi(3),
        w_norm: spec.norm_sequence(&decreasing_rearrangement(&w_abs)?)?,
        w_sup: w_abs.iter().fold(0.0f64, |a, v| a.max(v.abs())),
        checks,
        w: w.clone(),
        x_r,
        first_s,
        second_s,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DirectSumRow {
    pub r_max: usize,
    pub size: usize,
    /// `sum_{r <= R} |[W_r, X_r]|_E`
    pub sum_first: f64,
    /// `|[W, X]|_E` of the truncation, from the merged s-numbers.
    pub merged_first: f64,
    /// `max_{r <= R} |[f(W_r), X_r]|_E`
    pub max_second: f64,
    /// `|[f(W), X]|_E` of the truncation.
    pub merged_second: f64,
    /// `sum_{r <= R} |W_r|_E`
    pub sum_w_norm: f64,
    /// `sup_{r <= R} |[W_r, X_r]|_inf`
    pub sup_first_inf: f64,
    /// `sup_{r <= R} |W_r|_inf`
    pub sup_w_inf: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DirectSumReport {
    pub rows: Vec<DirectSumRow>,
    pub checks: Checks,
}

/// Direct-sum truncations `R = 1..=r_max` of the pairs.
pub fn assemble_direct_sum(
    spec: &SymmetricNormSpec,
    pairs: &[CommutatorPair],
    r_max: usize,
    tols: &Tolerances,
) -> Result<DirectSumReport> {
    if r_max == 0 || r_max > pairs.len() {
        return invalid(format!("R must lie in 1..={}, got {r_max}", pairs.len()));
    }
    let basel = PI * PI / 6.0;
    let mut rows: Vec<DirectSumRow> = Vec::with_capacity(r_max);
    let mut checks = Checks::new();
    let mut worst_basel = f64::INFINITY;
    let mut monotone = true;
    let mut worst_triangle = f64::INFINITY;
    let mut worst_formula: f64 = 0.0;
    for big_r in 1..=r_max {
        let part = &pairs[..big_r];
        let first: Vec<&SingularValueSequence> = part.iter().map(|p| &p.first_s).collect();
        let second: Vec<&SingularValueSequence> = part.iter().map(|p| &p.second_s).collect();
        let merged_first = spec.norm_sequence(&SingularValueSequence::merge(&first))?;
        let merged_second = spec.norm_sequence(&SingularValueSequence::merge(&second))?;
        let row = DirectSumRow {
            r_max: big_r,
            size: part.iter().map(|p| p.size).sum(),
            sum_first: part.iter().map(|p| p.first_comm_norm).sum(),
            merged_first,
            max_second: part.iter().map(|p| p.second_comm_norm).fold(0.0, f64::max),
            merged_second,
            sum_w_norm: part.iter().map(|p| p.w_norm).sum(),
            sup_first_inf: part.iter().map(|p| p.first_comm_sup).fold(0.0, f64::max),
            sup_w_inf: part.iter().map(|p| p.w_sup).fold(0.0, f64::max),
        };
        worst_basel = worst_basel.min(basel - row.sum_first);
        worst_triangle = worst_triangle.min(row.sum_first - row.merged_first);
        if let Some(prev) = rows.last() {
            monotone &= row.max_second >= prev.max_second;
        }
        if let NormKind::Schatten { p } = spec.kind() {
            let expected = if p.is_infinite() {
                part.iter().map(|q| q.first_comm_norm).fold(0.0, f64::max)
            } else {
                part.iter().map(|q| q.first_comm_norm.powf(*p)).sum::<f64>().powf(1.0 / p)
            };
            worst_formula = worst_formula.max(relative((expected - merged_first).abs(), expected));
        }
        rows.push(row);
    }
    checks.insert("basel_bound".into(), Check::at_least(worst_basel, 0.0, tols.bound));
    checks.insert("max_second_nondecreasing".into(), Check::flag(monotone));
    checks.insert("direct_sum_le_sum".into(), Check::at_least(worst_triangle, 0.0, tols.norm));
    if matches!(spec.kind(), NormKind::Schatten { .. }) {
        checks.insert("schatten_direct_sum".into(), Check::residual(worst_formula, tols.norm));
    }
    Ok(DirectSumReport { rows, checks })
}

/// Dense block-diagonal truncations `W^(R)`, `X^(R)`.
pub fn truncation(pairs: &[CommutatorPair], r_max: usize) -> Result<(DiagonalOperator, ComplexMatrix)> {
    if r_max == 0 || r_max > pairs.len() {
        return invalid(format!("R must lie in 1..={}, got {r_max}", pairs.len()));
    }
    let part = &pairs[..r_max];
    let ws: Vec<&DiagonalOperator> = part.iter().map(|p| &p.w).collect();
    let xs: Vec<&ComplexMatrix> = part.iter().map(|p| &p.x_r).collect();
    Ok((DiagonalOperator::direct_sum(&ws)?, ComplexMatrix::direct_sum(&xs)?))
}

#[derive(Debug, Clone, Serialize)]
pub struct FunctionReport {
    pub alpha: f64,
    pub eps: f64,
    /// `(f(d) - f(0)) / d` at `d = 1e-8`; equals `1/h(log d)`, reported only.
    pub f_one_sided_quotient: f64,
    pub checks: Checks,
}

/// Grid certifications of `chi`, `h` and `f` for one schedule.
pub fn certify_functions(tf: &TheoremFunctions) -> Result<FunctionReport> {
    const REL: f64 = 1e-12;
    let sched = &tf.schedule;
    let growth = LogGrowth::new(sched)?;
    let mut checks = Checks::new();

    let worst_interp = sched
        .s()
        .iter()
        .zip(sched.q())
        .map(|(s, q)| tf.h.eval(*s).map(|v| (v - q).abs() / q))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    checks.insert("h_interpolates".into(), Check::residual(worst_interp, REL));

    let s_last = *sched.s().last().expect("nonempty schedule");
    let n = 20_000;
    let mut max_log_deriv: f64 = 0.0;
    let mut min_log_deriv = f64::INFINITY;
    for i in 0..=n {
        let t = 1.25 * s_last * i as f64 / n as f64;
        let v = tf.h.derivative(t)? / tf.h.eval(t)?;
        max_log_deriv = max_log_deriv.max(v);
        min_log_deriv = min_log_deriv.min(v);
    }
    checks.insert("h_log_derivative_le_1".into(), Check::at_most(max_log_deriv, 1.0, REL));
    checks.insert("h_nondecreasing".into(), Check::at_least(min_log_deriv, 0.0, 0.0));
    checks.insert("h_even".into(), Check::flag(tf.h.eval(-1.7)? == tf.h.eval(1.7)? && tf.h.eval(0.0)? == 1.0));

    let chi = chi_eps(growth.eps())?;
    let height = 1.0 + growth.eps().min(1.0);
    let mut max_chi: f64 = 0.0;
    for i in 0..=n {
        let t = -0.25 + 1.5 * i as f64 / n as f64;
        max_chi = max_chi.max(chi.derivative(t)?);
    }
    checks.insert(
        "chi_derivative_le_1_plus_eps".into(),
        Check::at_most(max_chi, height, height * REL),
    );

    let d = 1e-8;
    let centered = (tf.f.eval(d)? - tf.f.eval(-d)?) / (2.0 * d);
    checks.insert("f_prime_zero".into(), Check::at_most(centered.abs(), 0.0, 1e-6));
    let one_sided = (tf.f.eval(d)? - tf.f.eval(0.0)?) / d;

    let grid = 10_000;
    let mut worst_lo = f64::INFINITY;
    let mut worst_hi = f64::INFINITY;
    for i in 1..=grid {
        let t = i as f64 / (grid + 1) as f64;
        let fp = tf.f.derivative(t)?;
        let cap = 2.0 / tf.h.eval(t.ln())?;
        worst_lo = worst_lo.min(fp);
        worst_hi = worst_hi.min((cap - fp) / cap);
    }
    checks.insert("f_prime_nonnegative".into(), Check::at_least(worst_lo, 0.0, 0.0));
    checks.insert("f_prime_le_2_over_h".into(), Check::at_least(worst_hi, 0.0, REL));

    let h_grid: Vec<f64> = (0..=4000).map(|i| -s_last + 2.0 * s_last * i as f64 / 4000.0).collect();
    let hc = verify_c1(&tf.h, &h_grid, 1e-5)?;
    checks.insert("h_c1".into(), Check::flag(hc.passed()));
    let f_grid: Vec<f64> = (1..4000).map(|i| -0.99 + 1.98 * i as f64 / 4000.0).collect();
    let fc = verify_c1(&tf.f, &f_grid, 1e-7)?;
    checks.insert("f_c1".into(), Check::flag(fc.passed()));

    Ok(FunctionReport {
        alpha: sched.alpha(),
        eps: growth.eps(),
        f_one_sided_quotient: one_sided,
        checks,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremReport {
    pub config: PipelineConfig,
    pub k0: f64,
    pub k1: f64,
    pub alpha: f64,
    pub p: Vec<f64>,
    pub stages: Vec<CounterexampleStage>,
    pub pairs: Vec<CommutatorPair>,
    pub direct_sum: DirectSumReport,
    pub functions: FunctionReport,
    /// Sequence-level checks (monotonicity of `p`, `s` and the bound column).
    pub checks: Checks,
    #[serde(skip)]
    pub theorem_functions: TheoremFunctions,
}

impl TheoremReport {
    pub fn passed(&self) -> bool {
        all_pass(&self.checks)
            && all_pass(&self.functions.checks)
            && all_pass(&self.direct_sum.checks)
            && self.stages.iter().all(|s| s.passed())
            && self.pairs.iter().all(|p| p.passed())
    }

    /// Names of failing checks, prefixed by where they live.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut push = |prefix: String, checks: &Checks| {
            for (k, c) in checks {
                if !c.pass {
                    out.push(format!("{prefix}{k} (margin {:e}, tol {:e})", c.margin, c.tol));
                }
            }
        };
        push(String::new(), &self.checks);
        push("functions.".into(), &self.functions.checks);
        push("direct_sum.".into(), &self.direct_sum.checks);
        for s in &self.stages {
            push(format!("stage[m={}].", s.m), &s.checks);
        }
        for p in &self.pairs {
            push(format!("pair[r={}].", p.r), &p.checks);
        }
        out
    }
}

/// Chains the schedule, `h`, `f`, the stages `3..=m_max`, their commutator
/// pairs (stage `m` paired with `r = m - 2`) and the direct sums.
pub fn run_theorem_main(cfg: &PipelineConfig) -> Result<TheoremReport> {
    cfg.validate()?;
    let tf = theorem_functions(cfg, cfg.m_max)?;
    let mut checks = Checks::new();
    checks.insert("p0_is_one".into(), Check::flag(tf.p[0] == 1.0));
    checks.insert(
        "p_nonincreasing".into(),
        Check::flag(tf.p.windows(2).all(|w| w[1] <= w[0] && w[1] > 0.0)),
    );
    checks.insert("s_increasing".into(), Check::flag(tf.schedule.s().windows(2).all(|w| w[1] > w[0])));
    checks.insert("alpha_le_half".into(), Check::at_most(tf.schedule.alpha(), 0.5, 1e-15));

    let mut stages = Vec::new();
    let mut pairs = Vec::new();
    for m in 3..=cfg.m_max {
        let wrap = |e: Error| Error::Stage { m, cause: Box::new(e) };
        let stage = build_stage(cfg, m, &tf.p, &tf.f, &tf.h).map_err(wrap)?;
        let pair = build_commutator_pair(&cfg.spec, &tf.f, stage.w(), &stage.witness.x, m - 2, &cfg.tolerances)
            .map_err(wrap)?;
        stages.push(stage);
        pairs.push(pair);
    }
    let mut worst_ratio_match: f64 = 0.0;
    for (s, p) in stages.iter().zip(&pairs) {
        worst_ratio_match = worst_ratio_match.max(relative((p.ratio - s.achieved).abs(), s.achieved));
    }
    checks.insert("pair_ratio_matches_witness".into(), Check::residual(worst_ratio_match, cfg.tolerances.norm));
    let increasing = stages
        .windows(2)
        .filter(|w| w[0].m >= 6)
        .all(|w| w[1].bound > w[0].bound);
    checks.insert("bound_increasing_from_m6".into(), Check::flag(increasing));

    let direct_sum = assemble_direct_sum(&cfg.spec, &pairs, pairs.len(), &cfg.tolerances)?;
    let functions = certify_functions(&tf)?;
    Ok(TheoremReport {
        config: cfg.clone(),
        k0: K0,
        k1: K1,
        alpha: tf.schedule.alpha(),
        p: tf.p.clone(),
        stages,
        pairs,
        direct_sum,
        functions,
        checks,
        theorem_functions: tf,
    })
}
