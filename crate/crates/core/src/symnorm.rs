//! Symmetric sequence norms and the induced unitarily invariant matrix norms
//! `|x|_{S^E} = |s(x)|_E`.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matrix::ComplexMatrix;
use crate::svd;

/// Relative accuracy of the Luxemburg bisection.
pub const ORLICZ_REL_TOL: f64 = 1e-12;
const ORLICZ_MAX_ITER: usize = 400;

/// Nonincreasing, nonnegative finite sequence (s-numbers, decreasing
/// rearrangements).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SingularValueSequence(Vec<f64>);

impl SingularValueSequence {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return invalid("singular value sequence entries must be finite and nonnegative");
        }
        if values.windows(2).any(|w| w[0] < w[1]) {
            return invalid("singular value sequence must be nonincreasing");
        }
        Ok(Self(values))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Decreasing rearrangement of the union of several sequences (s-numbers
    /// of a direct sum).
    pub fn merge(parts: &[&SingularValueSequence]) -> Self {
        let all: Vec<f64> = parts.iter().flat_map(|p| p.0.iter().copied()).collect();
        Self(sorted_desc(all))
    }

    /// Each entry multiplied by every entry of `other` (s-numbers of a
    /// Kronecker product).
    pub fn tensor(&self, other: &SingularValueSequence) -> Self {
        let prods = self
            .0
            .iter()
            .flat_map(|a| other.0.iter().map(move |b| a * b))
            .collect();
        Self(sorted_desc(prods))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(sorted_desc(self.0.iter().map(|v| (v * c).abs()).collect()))
    }
}

impl<'de> Deserialize<'de> for SingularValueSequence {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        SingularValueSequence::new(v).map_err(serde::de::Error::custom)
    }
}

fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// `|v|` sorted nonincreasing.
pub fn decreasing_rearrangement(v: &[f64]) -> Result<SingularValueSequence> {
    if v.iter().any(|x| !x.is_finite()) {
        return invalid("non-finite entry in sequence");
    }
    Ok(SingularValueSequence(sorted_desc(v.iter().map(|x| x.abs()).collect())))
}

/// `g ≺≺ f`: every partial sum of `g` is dominated by the matching partial
/// sum of `f`, the shorter sequence padded with zeros.
pub fn submajorizes(f: &SingularValueSequence, g: &SingularValueSequence) -> bool {
    submajorizes_with_tol(f, g, 0.0)
}

/// Same as [`submajorizes`], allowing `sum g <= sum f + tol * max(1, sum f)`.
pub fn submajorizes_with_tol(f: &SingularValueSequence, g: &SingularValueSequence, tol: f64) -> bool {
    let n = f.len().max(g.len());
    let (mut sf, mut sg) = (0.0, 0.0);
    for i in 0..n {
        sf += f.0.get(i).copied().unwrap_or(0.0);
        sg += g.0.get(i).copied().unwrap_or(0.0);
        if sg > sf + tol * sf.max(1.0) {
            return false;
        }
    }
    true
}

/// Young functions accepted by the Orlicz (Luxemburg) norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum YoungFunction {
    /// `t^p`, `p >= 1`; the Luxemburg norm is then the `l_p` norm.
    Power { p: f64 },
    /// `exp(t^2) - 1`.
    ExpSquare,
    /// `t ln(1 + t)`.
    TLogOnePlusT,
}

impl YoungFunction {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            YoungFunction::Power { p } => t.powf(p),
            YoungFunction::ExpSquare => (t * t).exp_m1(),
            YoungFunction::TLogOnePlusT => t * t.ln_1p(),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            YoungFunction::Power { p } if !(p >= 1.0 && p.is_finite()) => {
                invalid(format!("orlicz power must be a finite p >= 1, got {p}"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NormKind {
    /// `l_p` of the s-numbers; `p = f64::INFINITY` is the operator norm.
    Schatten { p: f64 },
    /// Sum of the `k` largest s-numbers.
    KyFan { k: usize },
    /// Luxemburg norm `inf { l > 0 : sum M(s_i / l) <= 1 }`.
    Orlicz { young: YoungFunction },
    /// `sum w_i s_i`; entries past the end of `weights` carry weight zero.
    Lorentz { weights: Vec<f64> },
}

/// A named symmetric gauge norm on finite sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricNormSpec {
    kind: NormKind,
    label: String,
}

impl SymmetricNormSpec {
    pub fn new(kind: NormKind, label: impl Into<String>) -> Result<Self> {
        let spec = Self::unchecked(kind, label);
        spec.validate()?;
        Ok(spec)
    }

    /// Skips validation. Used to exercise [`verify_norm_axioms`] on broken
    /// gauges.
    pub fn unchecked(kind: NormKind, label: impl Into<String>) -> Self {
        Self {
            kind,
            label: label.into(),
        }
    }

    pub fn schatten(p: f64) -> Result<Self> {
        let label = if p.is_infinite() {
            "schatten:inf".to_string()
        } else {
            format!("schatten:{p}")
        };
        Self::new(NormKind::Schatten { p }, label)
    }

    pub fn kyfan(k: usize) -> Result<Self> {
        Self::new(NormKind::KyFan { k }, format!("kyfan:{k}"))
    }

    pub fn lorentz(weights: Vec<f64>) -> Result<Self> {
        let label = format!("lorentz[{}]", weights.len());
        Self::new(NormKind::Lorentz { weights }, label)
    }

    pub fn orlicz(young: YoungFunction) -> Result<Self> {
        let label = match young {
            YoungFunction::Power { p } => format!("orlicz:power:{p}"),
            YoungFunction::ExpSquare => "orlicz:exp_square".into(),
            YoungFunction::TLogOnePlusT => "orlicz:tlog".into(),
        };
        Self::new(NormKind::Orlicz { young }, label)
    }

    pub fn kind(&self) -> &NormKind {
        &self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            NormKind::Schatten { p } => {
                if !(*p >= 1.0) {
                    return invalid(format!("schatten p must lie in [1, inf], got {p}"));
                }
            }
            NormKind::KyFan { k } => {
                if *k == 0 {
                    return invalid("kyfan k must be >= 1");
                }
            }
            NormKind::Orlicz { young } => young.validate()?,
            NormKind::Lorentz { weights } => {
                if weights.is_empty() {
                    return invalid("lorentz weights must be nonempty");
                }
                if weights[0] != 1.0 {
                    return invalid("lorentz weights must start with w_1 = 1");
                }
                if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                    return invalid("lorentz weights must be finite and positive");
                }
                if weights.windows(2).any(|w| w[1] > w[0]) {
                    return invalid("lorentz weights must be nonincreasing");
                }
            }
        }
        Ok(())
    }

    /// `|s|_E` of a nonincreasing nonnegative sequence.
    pub fn norm_sequence(&self, s: &SingularValueSequence) -> Result<f64> {
        let s = s.as_slice();
        Ok(match &self.kind {
            NormKind::Schatten { p } => lp_norm(s, *p),
            NormKind::KyFan { k } => s.iter().take(*k).sum(),
            NormKind::Lorentz { weights } => s.iter().zip(weights).map(|(a, w)| a * w).sum(),
            NormKind::Orlicz { young } => luxemburg(s, young)?,
        })
    }

    /// `|x|_{S^E}`.
    pub fn norm_matrix(&self, x: &ComplexMatrix) -> Result<f64> {
        let s = singular_values(x)?;
        self.norm_sequence(&s)
    }
}

impl fmt::Display for SymmetricNormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

fn lp_norm(s: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return s.iter().copied().fold(0.0, f64::max);
    }
    if p == 1.0 {
        return s.iter().sum();
    }
    let scale = s.iter().copied().fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    // rescale only when the plain sum could overflow or underflow
    let top = scale.powf(p) * s.len() as f64;
    if top.is_finite() && top > 1e-280 {
        return s.iter().map(|v| v.powf(p)).sum::<f64>().powf(1.0 / p);
    }
    scale * s.iter().map(|v| (v / scale).powf(p)).sum::<f64>().powf(1.0 / p)
}

fn luxemburg(s: &[f64], young: &YoungFunction) -> Result<f64> {
    let top = s.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return Ok(0.0);
    }
    let modular = |lambda: f64| s.iter().map(|v| young.eval(v / lambda)).sum::<f64>();
    let fail = |detail: String| Error::Numeric {
        context: "orlicz luxemburg bisection".into(),
        detail,
    };
    let (mut lo, mut hi) = (top, top);
    let mut guard = 0;
    while modular(hi) > 1.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 200 || !hi.is_finite() {
            return Err(fail(format!("no upper bracket (top = {top})")));
        }
    }
    guard = 0;
    while modular(lo) <= 1.0 {
        lo *= 0.5;
        guard += 1;
        if guard > 200 || lo == 0.0 {
            return Err(fail(format!("no lower bracket (top = {top}); Young function bounded?")));
        }
    }
    for _ in 0..ORLICZ_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if modular(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= ORLICZ_REL_TOL * hi {
            return Ok(hi);
        }
    }
    Err(fail(format!("bracket [{lo}, {hi}] did not shrink to relative {ORLICZ_REL_TOL}")))
}

/// s-numbers of a matrix as a [`SingularValueSequence`].
pub fn singular_values(x: &ComplexMatrix) -> Result<SingularValueSequence> {
    Ok(SingularValueSequence(svd::singular_values(x)?))
}

/// Input of [`norm_e`]: either a matrix or its s-numbers.
pub enum NormArg<'a> {
    Matrix(&'a ComplexMatrix),
    Sequence(&'a SingularValueSequence),
}

pub fn norm_e(spec: &SymmetricNormSpec, x: NormArg<'_>) -> Result<f64> {
    match x {
        NormArg::Matrix(m) => spec.norm_matrix(m),
        NormArg::Sequence(s) => spec.norm_sequence(s),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AxiomViolation {
    pub axiom: &'static str,
    pub trial: usize,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AxiomReport {
    pub spec: String,
    pub trials: usize,
    pub violations: Vec<AxiomViolation>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Randomized check of homogeneity, the triangle inequality, rearrangement
/// invariance and monotonicity under submajorization.
pub fn verify_norm_axioms(spec: &SymmetricNormSpec, trials: usize, seed: u64) -> Result<AxiomReport> {
    if trials == 0 {
        return invalid("trials must be >= 1");
    }
    const TOL: f64 = 1e-10;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = Vec::new();
    let norm = |v: &[f64]| -> Result<f64> { spec.norm_sequence(&decreasing_rearrangement(v)?) };
    // raw, unsorted norm: sum of weights against the sequence as given
    let raw = |v: &[f64]| -> Result<f64> { spec.norm_sequence(&SingularValueSequence(v.iter().map(|x| x.abs()).collect())) };
    for trial in 0..trials {
        let len = rng.gen_range(1..=10);
        let f: Vec<f64> = (0..len).map(|_| random_entry(&mut rng)).collect();
        let g: Vec<f64> = (0..len).map(|_| random_entry(&mut rng)).collect();
        let (nf, ng) = (norm(&f)?, norm(&g)?);

        let c: f64 = rng.gen_range(-3.0..3.0);
        let cf: Vec<f64> = f.iter().map(|x| c * x).collect();
        let ncf = norm(&cf)?;
        if (ncf - c.abs() * nf).abs() > TOL * (1.0 + c.abs() * nf) {
            violations.push(AxiomViolation { axiom: "homogeneity", trial, f: f.clone(), g: cf, lhs: ncf, rhs: c.abs() * nf });
        }

        let sum: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a + b).collect();
        let ns = norm(&sum)?;
        if ns > nf + ng + TOL * (1.0 + nf + ng) {
            violations.push(AxiomViolation { axiom: "triangle", trial, f: f.clone(), g: g.clone(), lhs: ns, rhs: nf + ng });
        }

        // any permutation of |f| must have the same norm as f*; a gauge whose
        // raw weighted form is not maximized at f* betrays non-monotone weights
        let mut perm = f.clone();
        perm.shuffle(&mut rng);
        let np = norm(&perm)?;
        let nr = raw(&perm)?;
        if (np - nf).abs() > TOL * (1.0 + nf) || nr > nf + TOL * (1.0 + nf) {
            violations.push(AxiomViolation { axiom: "rearrangement", trial, f: f.clone(), g: perm, lhs: np.max(nr), rhs: nf });
        }

        let sub = submajorized_sample(&f, &mut rng);
        let nsub = norm(&sub)?;
        let fs = decreasing_rearrangement(&f)?;
        let ss = decreasing_rearrangement(&sub)?;
        debug_assert!(submajorizes_with_tol(&fs, &ss, 1e-12));
        if nsub > nf + TOL * (1.0 + nf) {
            violations.push(AxiomViolation { axiom: "submajorization", trial, f: fs.into_vec(), g: ss.into_vec(), lhs: nsub, rhs: nf });
        }
    }
    Ok(AxiomReport {
        spec: spec.label().to_string(),
        trials,
        violations,
    })
}

fn random_entry(rng: &mut ChaCha8Rng) -> f64 {
    match rng.gen_range(0..4) {
        0 => 0.0,
        1 => rng.gen_range(-1.0..1.0),
        _ => rng.gen_range(-10.0..10.0),
    }
}

// g ≺≺ |f|: a chain of Robin-Hood transfers (averaging two entries) followed
// by an entrywise contraction.
fn submajorized_sample(f: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut g: Vec<f64> = f.iter().map(|x| x.abs()).collect();
    let n = g.len();
    if n >= 2 {
        for _ in 0..rng.gen_range(0..4) {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            let t: f64 = rng.gen_range(0.0..=0.5);
            let (a, b) = (g[i], g[j]);
            g[i] = (1.0 - t) * a + t * b;
            g[j] = t * a + (1.0 - t) * b;
        }
    }
    for v in g.iter_mut() {
        *v *= rng.gen_range(0.0..=1.0);
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockMode {
    /// `max |a_j| <= |sum a_j x_j| <= (1 + eps) max |a_j|`
    Sup,
    /// `(1 - eps) sum |a_j| <= |sum a_j x_j| <= sum |a_j|`
    Sum,
}

impl std::str::FromStr for BlockMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sup" => Ok(BlockMode::Sup),
            "sum" => Ok(BlockMode::Sum),
            other => invalid(format!("mode must be 'sup' or 'sum', got '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockFamilyReport {
    pub passed: bool,
    pub n: usize,
    pub eps: f64,
    pub mode: BlockMode,
    /// `|x_1 + ... + x_n|_E`
    pub all_ones_norm: f64,
    /// `|x_1|_E`
    pub single_norm: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Checks the disjoint-copies estimates for `n` equidistributed copies of
/// `x0`. Evaluated at `a = (1, ..., 1)` and `a = e_1`, which suffices by
/// convexity and rearrangement invariance.
pub fn verify_block_family(
    spec: &SymmetricNormSpec,
    x0: &SingularValueSequence,
    n: usize,
    eps: f64,
    mode: BlockMode,
) -> Result<BlockFamilyReport> {
    const TOL: f64 = 1e-10;
    if n == 0 {
        return invalid("n must be >= 1");
    }
    if !(eps > 0.0) {
        return invalid("eps must be positive");
    }
    if x0.is_empty() {
        return invalid("x0 must be nonempty");
    }
    let single = spec.norm_sequence(x0)?;
    if (single - 1.0).abs() > TOL {
        return invalid(format!("x0 must satisfy |x0|_E = 1, got {single}"));
    }
    let copies: Vec<f64> = std::iter::repeat_n(x0.as_slice(), n).flatten().copied().collect();
    let all = spec.norm_sequence(&SingularValueSequence(sorted_desc(copies)))?;
    let nf = n as f64;
    let (lower, upper, ok) = match mode {
        BlockMode::Sup => {
            let ok = all >= 1.0 - TOL && all <= (1.0 + eps) * (1.0 + TOL) && single >= 1.0 - TOL && single <= (1.0 + eps) * (1.0 + TOL);
            (1.0, 1.0 + eps, ok)
        }
        BlockMode::Sum => {
            let ok = all >= (1.0 - eps) * nf * (1.0 - TOL) && all <= nf * (1.0 + TOL) && single >= (1.0 - eps) - TOL && single <= 1.0 + TOL;
            ((1.0 - eps) * nf, nf, ok)
        }
    };
    Ok(BlockFamilyReport {
        passed: ok,
        n,
        eps,
        mode,
        all_ones_norm: all,
        single_norm: single,
        lower,
        upper,
    })
}

// JSON form: {"kind": ..., "p": .., "k": .., "weights": [..], "young": {..}, "label": ..}
#[derive(Serialize, Deserialize)]
struct SpecRepr {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    p: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    weights: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    young: Option<YoungFunction>,
    #[serde(default)]
    label: Option<String>,
}

impl Serialize for SymmetricNormSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut r = SpecRepr {
            kind: String::new(),
            p: None,
            k: None,
            weights: None,
            young: None,
            label: Some(self.label.clone()),
        };
        match &self.kind {
            NormKind::Schatten { p } => {
                r.kind = "schatten".into();
                r.p = Some(if p.is_infinite() {
                    serde_json::Value::String("inf".into())
                } else {
                    serde_json::json!(p)
                });
            }
            NormKind::KyFan { k } => {
                r.kind = "kyfan".into();
                r.k = Some(*k);
            }
            NormKind::Orlicz { young } => {
                r.kind = "orlicz".into();
                r.young = Some(*young);
            }
            NormKind::Lorentz { weights } => {
                r.kind = "lorentz".into();
                r.weights = Some(weights.clone());
            }
        }
        r.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymmetricNormSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = SpecRepr::deserialize(d)?;
        let spec = match r.kind.as_str() {
            "schatten" => {
                let p = match r.p {
                    Some(serde_json::Value::String(s)) if s == "inf" || s == "infinity" => f64::INFINITY,
                    Some(serde_json::Value::Number(n)) => n.as_f64().ok_or_else(|| D::Error::custom("bad p"))?,
                    _ => return Err(D::Error::custom("schatten requires p (number or \"inf\")")),
                };
                SymmetricNormSpec::schatten(p)
            }
            "kyfan" => SymmetricNormSpec::kyfan(r.k.ok_or_else(|| D::Error::custom("kyfan requires k"))?),
            "lorentz" => SymmetricNormSpec::lorentz(r.weights.ok_or_else(|| D::Error::custom("lorentz requires weights"))?),
            "orlicz" => {
                let young = match (r.young, r.p) {
                    (Some(y), _) => y,
                    (None, Some(serde_json::Value::Number(n))) => YoungFunction::Power { p: n.as_f64().unwrap_or(f64::NAN) },
                    _ => return Err(D::Error::custom("orlicz requires a young function")),
                };
                SymmetricNormSpec::orlicz(young)
            }
            other => return Err(D::Error::custom(format!("unknown norm kind '{other}'"))),
        }
        .map_err(D::Error::custom)?;
        Ok(match r.label {
            Some(label) => SymmetricNormSpec { label, ..spec },
            None => spec,
        })
    }
}

impl std::str::FromStr for SymmetricNormSpec {
    type Err = Error;

    /// `schatten:<p|inf>`, `kyfan:<k>`, `lorentz:<w1,w2,..>`,
    /// `lorentz-geom:<ratio>:<len>`, `orlicz:power:<p>`, `orlicz:exp_square`,
    /// `orlicz:tlog`.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let kind = parts.next().unwrap_or_default();
        let arg = parts.next();
        let bad = || Error::InvalidInput(format!("cannot parse norm spec '{s}'"));
        match (kind, arg) {
            ("schatten", Some(p)) => {
                let p = if p == "inf" { f64::INFINITY } else { p.parse().map_err(|_| bad())? };
                Self::schatten(p)
            }
            ("kyfan", Some(k)) => Self::kyfan(k.parse().map_err(|_| bad())?),
            ("lorentz", Some(ws)) => {
                let w: std::result::Result<Vec<f64>, _> = ws.split(',').map(str::parse).collect();
                Self::lorentz(w.map_err(|_| bad())?)
            }
            ("lorentz-geom", Some(r)) => {
                let ratio: f64 = r.parse().map_err(|_| bad())?;
                let len: usize = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
                Self::lorentz((0..len).map(|i| ratio.powi(i as i32)).collect())
            }
            ("orlicz", Some("power")) => {
                let p: f64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
                Self::orlicz(YoungFunction::Power { p })
            }
            ("orlicz", Some("exp_square")) => Self::orlicz(YoungFunction::ExpSquare),
            ("orlicz", Some("tlog")) => Self::orlicz(YoungFunction::TLogOnePlusT),
            _ => Err(bad()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(v: &[f64]) -> SingularValueSequence {
        SingularValueSequence::new(v.to_vec()).unwrap()
    }

    #[test]
    fn rearrangement_examples() {
        assert_eq!(decreasing_rearrangement(&[1.0, -3.0, 2.0]).unwrap().as_slice(), &[3.0, 2.0, 1.0]);
        assert!(decreasing_rearrangement(&[]).unwrap().is_empty());
        assert_eq!(decreasing_rearrangement(&[5.0, 5.0, 5.0]).unwrap().as_slice(), &[5.0; 3]);
        assert!(decreasing_rearrangement(&[1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn submajorization_examples() {
        assert!(submajorizes(&seq(&[2.0, 0.0]), &seq(&[1.0, 1.0])));
        assert!(!submajorizes(&seq(&[1.0, 1.0]), &seq(&[2.0, 0.0])));
        let f = seq(&[3.0, 1.0, 0.5]);
        assert!(submajorizes(&f, &f));
        // padding
        assert!(submajorizes(&seq(&[2.0]), &seq(&[1.0, 1.0])));
        assert!(!submajorizes(&seq(&[1.0]), &seq(&[1.0, 0.1])));
    }

    #[test]
    fn sequence_invariants_enforced() {
        assert!(SingularValueSequence::new(vec![1.0, 2.0]).is_err());
        assert!(SingularValueSequence::new(vec![-1.0]).is_err());
    }

    #[test]
    fn norm_examples_on_diagonal() {
        let d = ComplexMatrix::from_diag(&[3.0, -4.0]);
        assert_eq!(SymmetricNormSpec::schatten(1.0).unwrap().norm_matrix(&d).unwrap(), 7.0);
        assert_eq!(SymmetricNormSpec::kyfan(1).unwrap().norm_matrix(&d).unwrap(), 4.0);
        assert_eq!(SymmetricNormSpec::schatten(f64::INFINITY).unwrap().norm_matrix(&d).unwrap(), 4.0);
        let two = SymmetricNormSpec::schatten(2.0).unwrap().norm_matrix(&d).unwrap();
        assert!((two - 5.0).abs() < 1e-15);
    }

    #[test]
    fn orlicz_power_matches_lp() {
        let s = seq(&[3.0, 2.0, 0.5]);
        for p in [1.0, 1.5, 2.0, 4.0] {
            let o = SymmetricNormSpec::orlicz(YoungFunction::Power { p }).unwrap().norm_sequence(&s).unwrap();
            let l = SymmetricNormSpec::schatten(p).unwrap().norm_sequence(&s).unwrap();
            assert!((o - l).abs() <= 1e-11 * l, "p={p}: {o} vs {l}");
        }
        let e = SymmetricNormSpec::orlicz(YoungFunction::ExpSquare).unwrap();
        let v = e.norm_sequence(&seq(&[1.0])).unwrap();
        // exp(1/l^2) - 1 = 1
        assert!((v - 1.0 / 2f64.ln().sqrt()).abs() < 1e-11);
    }

    #[test]
    fn spec_validation() {
        assert!(SymmetricNormSpec::schatten(0.5).is_err());
        assert!(SymmetricNormSpec::kyfan(0).is_err());
        assert!(SymmetricNormSpec::lorentz(vec![1.0, 2.0]).is_err());
        assert!(SymmetricNormSpec::lorentz(vec![0.5]).is_err());
        assert!(SymmetricNormSpec::orlicz(YoungFunction::Power { p: 0.5 }).is_err());
    }

    #[test]
    fn axioms_hold_for_shipped_norms() {
        for spec in [
            SymmetricNormSpec::schatten(2.0).unwrap(),
            SymmetricNormSpec::kyfan(3).unwrap(),
            SymmetricNormSpec::schatten(f64::INFINITY).unwrap(),
            SymmetricNormSpec::lorentz(vec![1.0, 0.5, 0.25, 0.125]).unwrap(),
            SymmetricNormSpec::orlicz(YoungFunction::TLogOnePlusT).unwrap(),
        ] {
            let r = verify_norm_axioms(&spec, 1000, 7).unwrap();
            assert!(r.passed(), "{spec}: {:?}", r.violations.first());
        }
    }

    #[test]
    fn block_family_examples() {
        let one = seq(&[1.0]);
        let kf1 = SymmetricNormSpec::kyfan(1).unwrap();
        let s1 = SymmetricNormSpec::schatten(1.0).unwrap();
        let s2 = SymmetricNormSpec::schatten(2.0).unwrap();
        for n in [1, 2, 7, 40] {
            assert!(verify_block_family(&kf1, &one, n, 0.5, BlockMode::Sup).unwrap().passed);
            assert!(verify_block_family(&s1, &one, n, 0.5, BlockMode::Sum).unwrap().passed);
        }
        let r = verify_block_family(&s2, &one, 4, 0.5, BlockMode::Sup).unwrap();
        assert!(!r.passed);
        assert!((r.all_ones_norm - 2.0).abs() < 1e-15);
        assert!(verify_block_family(&s2, &seq(&[2.0]), 4, 0.5, BlockMode::Sup).is_err());
    }

    #[test]
    fn json_shape() {
        let s = SymmetricNormSpec::schatten(f64::INFINITY).unwrap();
        let j = serde_json::to_value(&s).unwrap();
        assert_eq!(j["kind"], "schatten");
        assert_eq!(j["p"], "inf");
        let back: SymmetricNormSpec = serde_json::from_value(j).unwrap();
        assert_eq!(back, s);
        let l: SymmetricNormSpec = serde_json::from_str(r#"{"kind":"lorentz","weights":[1,0.5],"label":"L"}"#).unwrap();
        assert_eq!(l.label(), "L");
        assert!(serde_json::from_str::<SymmetricNormSpec>(r#"{"kind":"lorentz","weights":[1,2]}"#).is_err());
    }

    #[test]
    fn parse_space_flags() {
        assert_eq!("schatten:inf".parse::<SymmetricNormSpec>().unwrap(), SymmetricNormSpec::schatten(f64::INFINITY).unwrap());
        assert!("kyfan:3".parse::<SymmetricNormSpec>().is_ok());
        let g: SymmetricNormSpec = "lorentz-geom:0.5:8".parse().unwrap();
        assert!(matches!(g.kind(), NormKind::Lorentz { weights } if weights.len() == 8 && weights[3] == 0.125));
        assert!("bogus:1".parse::<SymmetricNormSpec>().is_err());
    }
}
