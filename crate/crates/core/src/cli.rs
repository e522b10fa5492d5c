//! Command-line front end. Exit codes: 0 all checks pass, 1 a certification
//! failed, 2 usage or configuration error.
//!
//! Report JSON (`theorem`): `{"manifest": {..}, "stages": [{"m", "p", "s",
//! "q", "w_norm", "bound", "achieved", "checks": {name: {"pass", "margin",
//! "tol"}}}], "pairs": [..], "direct_sum": {..}, "functions": {..}, ..}`.
//! A check passes when `margin >= -tol`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::construct::{make_tensor_lift, verify_intertwining, verify_norm_sandwich, MAX_BLOCK_M, MAX_LIFT_SIZE};
use crate::error::Error;
use crate::funcs::{sample_csv, ScalarC1Function};
use crate::matrix::ComplexMatrix;
use crate::pipeline::{
    all_pass, build_stage, certify_functions, infer_mode, infestimate_check, run_theorem_main, theorem_functions,
    Check, Checks, PipelineConfig, TheoremReport,
};
use crate::random;
use crate::schur::{
    group_labels, group_spectrum, pinch, schur_apply, verify_schur_commutator_identity, DiagonalOperator,
};
use crate::svd;
use crate::symnorm::{decreasing_rearrangement, verify_norm_axioms, BlockMode, SingularValueSequence, SymmetricNormSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "commbound", version, about = "Schur multiplier and commutator blow-up certificates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an identity / bound suite and print a JSON report.
    Verify(VerifyArgs),
    /// One CSV row per m: stage bound against achieved witness ratio.
    Sweep(SweepArgs),
    /// Full construction: report.json, stages.csv, f_E.csv.
    Theorem(TheoremArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Identities,
    Hilbert,
    Functions,
    Oracle,
    All,
}

#[derive(Debug, Args)]
pub struct SpaceArgs {
    /// Symmetric norm, e.g. schatten:inf, kyfan:1, schatten:1, lorentz:1,0.5,0.25
    #[arg(long, default_value = "schatten:inf")]
    pub space: String,
    /// Block mode; inferred from the block family when omitted.
    #[arg(long)]
    pub mode: Option<String>,
    /// Comma-separated x0 with |x0|_E = 1.
    #[arg(long, default_value = "1")]
    pub x0: String,
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub suite: Suite,
    /// Largest random matrix size.
    #[arg(long, default_value_t = 16)]
    pub n: usize,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    /// Largest Hilbert block size / schedule length.
    #[arg(long, default_value_t = 64)]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Relative tolerance for exact identities.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[command(flatten)]
    pub space: SpaceArgs,
    /// Also write verify.json into this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record the wall-clock time in the manifest (breaks byte-determinism).
    #[arg(long)]
    pub timestamp: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Inclusive range `a..b`, or a single `m`.
    #[arg(long)]
    pub m: String,
    #[command(flatten)]
    pub space: SpaceArgs,
    /// `theorem` for the p_m schedule, or a fixed p in (0, 1].
    #[arg(long, default_value = "theorem")]
    pub p: String,
    /// Absolute slack on `achieved >= bound`.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write sweep.csv here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TheoremArgs {
    /// JSON file mirroring the pipeline configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides m_max.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub space: Option<String>,
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub x0: Option<String>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Overrides the identity tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Dump W, witnesses and X_r for stages with m <= 8.
    #[arg(long)]
    pub dump_matrices: bool,
    #[arg(long)]
    pub timestamp: bool,
}

/// Stage size for `theorem` without a config file.
pub const DEFAULT_THEOREM_M: usize = 32;
const DUMP_MAX_M: usize = 8;

#[derive(Debug)]
enum CliError {
    Usage(String),
    Failed(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::SizeLimit { .. } | Error::ScheduleInfeasible { .. } => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Failed(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Failed(format!("{}: {e}", path.display()))
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub version: &'static str,
    pub timestamp: Option<u64>,
    pub passed: bool,
    pub outcome: BTreeMap<String, Check>,
}

fn manifest(command: &str, config: Value, timestamp: bool, outcome: BTreeMap<String, Check>) -> RunManifest {
    let timestamp = timestamp.then(|| {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    });
    RunManifest {
        command: command.to_string(),
        config,
        version: env!("CARGO_PKG_VERSION"),
        timestamp,
        passed: outcome.values().all(|c| c.pass),
        outcome,
    }
}

/// `{:.16e}`: 17 significant digits, '.' decimal.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_x0(s: &str) -> Result<SingularValueSequence, CliError> {
    let values: Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    let values = values.map_err(|_| CliError::Usage(format!("cannot parse --x0 '{s}'")))?;
    Ok(decreasing_rearrangement(&values)?)
}

fn parse_mode(s: &str) -> Result<BlockMode, CliError> {
    Ok(s.parse::<BlockMode>()?)
}

fn parse_range(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Usage(format!("cannot parse range '{s}' (expected a..b)"));
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a, b.trim_start_matches('=')),
        None => (s, s),
    };
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if b < a {
        return Err(CliError::Usage(format!("empty range '{s}'")));
    }
    if a < 3 {
        return Err(CliError::Usage(format!("range must start at m >= 3, got {a}")));
    }
    Ok((a, b))
}

/// Config from the space flags, inferring the mode when it is not given.
fn config_from_space(space: &SpaceArgs, m_max: usize) -> Result<PipelineConfig, CliError> {
    let spec: SymmetricNormSpec = space.space.parse()?;
    let x0 = parse_x0(&space.x0)?;
    let mode = match &space.mode {
        Some(m) => parse_mode(m)?,
        None => infer_mode(&spec, &x0, m_max, space.eps).ok_or_else(|| {
            CliError::Usage(format!(
                "no block mode works for {spec} with x0 = {:?}; pass --x0 giving a verified block family",
                x0.as_slice()
            ))
        })?,
    };
    Ok(PipelineConfig {
        spec,
        mode,
        x0,
        m_max,
        eps: space.eps,
        ..PipelineConfig::default()
    })
}

/// Runs the CLI on `args` (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    let result = match cli.command {
        Command::Verify(a) => cmd_verify(&a, out),
        Command::Sweep(a) => cmd_sweep(&a, out),
        Command::Theorem(a) => cmd_theorem(&a, out),
    };
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_FAIL,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Failed(msg)) => {
            let _ = writeln!(err, "failed: {msg}");
            EXIT_FAIL
        }
    }
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Failed(format!("stdout: {e}")))
}

fn to_json<T: Serialize>(v: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(v).map_err(|e| CliError::Failed(format!("serialize: {e}")))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn merge(into: &mut Checks, prefix: &str, checks: &Checks) {
    for (k, c) in checks {
        into.insert(format!("{prefix}{k}"), *c);
    }
}

// ---- verify ----

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<bool, CliError> {
    if a.n == 0 {
        return Err(CliError::Usage("--n must be >= 1".into()));
    }
    if a.trials == 0 {
        return Err(CliError::Usage("--trials must be >= 1".into()));
    }
    if a.m < 3 || a.m > MAX_BLOCK_M {
        return Err(CliError::Usage(format!("--m must lie in 3..={MAX_BLOCK_M}")));
    }
    if !(a.tol >= 0.0) {
        return Err(CliError::Usage("--tol must be nonnegative".into()));
    }
    let cfg = config_from_space(&a.space, a.m)?;
    let run = |s: Suite| a.suite == s || a.suite == Suite::All;
    let mut checks = Checks::new();
    let mut details = serde_json::Map::new();
    if run(Suite::Identities) {
        let (c, d) = suite_identities(a.n, a.trials, a.seed, a.tol, &cfg)?;
        merge(&mut checks, "identities.", &c);
        details.insert("identities".into(), d);
    }
    if run(Suite::Hilbert) {
        let (c, d) = suite_hilbert(a.m, &cfg)?;
        merge(&mut checks, "hilbert.", &c);
        details.insert("hilbert".into(), d);
    }
    if run(Suite::Functions) {
        let tf = theorem_functions(&cfg, a.m)?;
        let report = certify_functions(&tf)?;
        merge(&mut checks, "functions.", &report.checks);
        details.insert("functions".into(), serde_json::to_value(&report).unwrap_or(Value::Null));
    }
    if run(Suite::Oracle) {
        let (c, d) = suite_oracle(a.n, a.trials, a.seed)?;
        merge(&mut checks, "oracle.", &c);
        details.insert("oracle".into(), d);
    }
    let config = json!({
        "suite": format!("{:?}", a.suite).to_lowercase(),
        "n": a.n, "trials": a.trials, "m": a.m, "seed": a.seed, "tol": a.tol,
        "pipeline": cfg,
    });
    let passed = all_pass(&checks);
    let report = json!({
        "manifest": manifest("verify", config, a.timestamp, checks),
        "details": details,
    });
    let text = to_json(&report)? + "\n";
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        write_file(&dir.join("verify.json"), &text)?;
    }
    write_out(out, &text)?;
    Ok(passed)
}

struct Worst {
    value: f64,
    count: usize,
}

impl Worst {
    fn new() -> Self {
        Worst { value: 0.0, count: 0 }
    }

    fn push(&mut self, v: f64) {
        self.value = if v.is_nan() { f64::NAN } else { self.value.max(v) };
        self.count += 1;
    }
}

fn suite_identities(
    n_max: usize,
    trials: usize,
    seed: u64,
    tol: f64,
    cfg: &PipelineConfig,
) -> Result<(Checks, Value), CliError> {
    use rand::Rng;
    let mut rng = random::rng(seed);
    let tf = theorem_functions(cfg, cfg.m_max)?;
    let fs: [ScalarC1Function; 3] = [ScalarC1Function::square(), ScalarC1Function::cube(), tf.f.clone()];
    let mut schur = Worst::new();
    let mut inter = Worst::new();
    let mut adjoint = Worst::new();
    let mut pinching = Worst::new();
    for t in 0..trials {
        let f = &fs[t % fs.len()];
        let n = rng.gen_range(1..=n_max);
        let eig = if t % 2 == 0 {
            random::spectrum(&mut rng, n, -0.9, 0.9)
        } else {
            random::spectrum_with_repeats(&mut rng, n, -0.9, 0.9)
        };
        let b = DiagonalOperator::new(eig)?;
        let x = random::complex_matrix(&mut rng, n, n);
        schur.push(verify_schur_commutator_identity(f, &b, &x)?.relative());

        // M_f(B)(X*) = M_f(B)(X)*
        let lhs = schur_apply(f, &b, &x.adjoint())?;
        let rhs = schur_apply(f, &b, &x)?.adjoint();
        adjoint.push(lhs.sub(&rhs)?.frobenius_norm() / rhs.frobenius_norm().max(f64::MIN_POSITIVE));

        let labels = group_labels(&group_spectrum(&b, 0.0)?, n);
        let y = pinch(&x, &labels);
        let xn = cfg.spec.norm_matrix(&x)?;
        pinching.push((cfg.spec.norm_matrix(&y)? - xn) / xn);

        let small = rng.gen_range(1..=n_max.min(8));
        let len = rng.gen_range(1..=4);
        let x0 = SingularValueSequence::new(random::nonincreasing_positive(&mut rng, len))?;
        let lift = make_tensor_lift(small, x0)?;
        let bs = DiagonalOperator::new(random::spectrum_with_repeats(&mut rng, small, -0.9, 0.9))?;
        let xs = random::complex_matrix(&mut rng, small, small);
        inter.push(verify_intertwining(&lift, f, &bs, &xs)?.relative());
    }
    let mut sandwich = Checks::new();
    let one = SingularValueSequence::new(vec![1.0])?;
    let lorentz = SymmetricNormSpec::lorentz((0..64).map(|i| 0.5f64.powi(i)).collect())?;
    let lorentz_x0 = SingularValueSequence::new(vec![4.0 / 7.0; 3])?;
    let cases = [
        ("kyfan1_sup", SymmetricNormSpec::kyfan(1)?, one.clone(), BlockMode::Sup),
        ("schatten1_sum", SymmetricNormSpec::schatten(1.0)?, one, BlockMode::Sum),
        ("lorentz_geometric_sup", lorentz, lorentz_x0, BlockMode::Sup),
    ];
    for (name, spec, x0, mode) in cases {
        let mut worst = f64::INFINITY;
        for _ in 0..trials {
            let n = rng.gen_range(1..=n_max.min(8));
            let lift = make_tensor_lift(n, x0.clone())?;
            let x = random::complex_matrix(&mut rng, n, n);
            let r = verify_norm_sandwich(&lift, &spec, &x, 0.5, mode)?;
            worst = worst.min((r.value - r.lower).min(r.upper - r.value) / r.upper);
        }
        sandwich.insert(format!("sandwich_{name}"), Check::at_least(worst, 0.0, 1e-10));
    }
    let mut checks = Checks::new();
    checks.insert("schur_commutator".into(), Check::residual(schur.value, tol));
    checks.insert("intertwining".into(), Check::residual(inter.value, tol));
    checks.insert("multiplier_commutes_with_adjoint".into(), Check::residual(adjoint.value, tol));
    checks.insert("pinching_contracts".into(), Check::residual(pinching.value.max(0.0), 1e-10));
    checks.extend(sandwich);
    let detail = json!({
        "trials": trials,
        "schur_commutator_worst": schur.value,
        "intertwining_worst": inter.value,
        "schur_trials": schur.count,
    });
    Ok((checks, detail))
}

fn suite_hilbert(m_max: usize, cfg: &PipelineConfig) -> Result<(Checks, Value), CliError> {
    let tf = theorem_functions(cfg, m_max)?;
    let mut norms = Vec::new();
    let mut ba_ok = Check::flag(true);
    let mut worst_ba = f64::INFINITY;
    for m in 3..=m_max {
        let r = infestimate_check(m, 1.0, &tf.f, &tf.h)?;
        worst_ba = worst_ba.min(std::f64::consts::PI - r.ba_norm);
        if let Some(c) = r.checks.get("ba_le_pi") {
            if !c.pass {
                ba_ok = *c;
            }
        }
        norms.push(r.ba_norm);
    }
    let monotone = norms.windows(2).all(|w| w[1] >= w[0]);
    let mut checks = Checks::new();
    checks.insert(
        "ba_le_pi".into(),
        if ba_ok.pass {
            Check::at_least(worst_ba, 0.0, 1e-12 * std::f64::consts::PI)
        } else {
            ba_ok
        },
    );
    checks.insert("ba_nondecreasing".into(), Check::flag(monotone));
    let mut grid: Vec<usize> = [4usize, 8, 16, 32, 64, 128, 256].into_iter().filter(|m| *m <= m_max).collect();
    if !grid.contains(&m_max) {
        grid.push(m_max);
    }
    let mut rows = Vec::new();
    for &m in &grid {
        for p in [1.0, 0.1, 0.01] {
            let r = infestimate_check(m, p, &tf.f, &tf.h)?;
            for (k, c) in &r.checks {
                if k != "ba_le_pi" {
                    checks.insert(format!("infestimate_m{m}_p{p}.{k}"), *c);
                }
            }
            rows.push(json!({"m": m, "p": p, "comm_norm": r.comm_norm, "lower": r.lower}));
        }
    }
    Ok((checks, json!({"ba_norms": norms, "infestimate": rows})))
}

fn suite_oracle(n_max: usize, trials: usize, seed: u64) -> Result<(Checks, Value), CliError> {
    use rand::Rng;
    let mut rng = random::rng(seed ^ 0x5eed);
    let mut structured = Worst::new();
    let mut frob = Worst::new();
    for t in 0..trials {
        let n = rng.gen_range(1..=n_max);
        let x = match t % 5 {
            0 => random::hermitian(&mut rng, n),
            1 => random::hermitian(&mut rng, n).scale(crate::matrix::I),
            2 => {
                let g = random::real_matrix(&mut rng, n, n);
                g.add(&g.adjoint())?
            }
            3 => {
                let g = random::real_matrix(&mut rng, n, n);
                g.sub(&g.adjoint())?
            }
            _ => {
                let cols = n + rng.gen_range(0..3);
                random::complex_matrix(&mut rng, n, cols)
            }
        };
        let fast = svd::singular_values(&x)?;
        let jac = svd::singular_values_jacobi(&x)?;
        let scale = jac.first().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
        let diff = fast.iter().zip(&jac).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        structured.push(diff / scale);
        let f2: f64 = fast.iter().map(|s| s * s).sum();
        let xf = x.frobenius_norm().powi(2);
        frob.push((f2 - xf).abs() / xf.max(f64::MIN_POSITIVE));
    }
    // Schatten norms of diagonal matrices against the plain l_p sum
    let mut lp = Worst::new();
    for _ in 0..trials {
        let n = rng.gen_range(1..=n_max);
        let d: Vec<f64> = (0..n).map(|_| random::gaussian(&mut rng)).collect();
        let x = ComplexMatrix::from_diag(&d);
        for p in [1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
            let got = SymmetricNormSpec::schatten(p)?.norm_matrix(&x)?;
            let want = if p.is_infinite() {
                d.iter().fold(0.0f64, |a, v| a.max(v.abs()))
            } else {
                d.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
            };
            lp.push((got - want).abs() / want.max(f64::MIN_POSITIVE));
        }
    }
    let mut checks = Checks::new();
    checks.insert("structured_vs_jacobi".into(), Check::residual(structured.value, 1e-12));
    checks.insert("frobenius_identity".into(), Check::residual(frob.value, 1e-12));
    checks.insert("schatten_diagonal".into(), Check::residual(lp.value, 1e-14));
    let specs = ["schatten:1", "schatten:2", "schatten:inf", "kyfan:3", "lorentz:1,0.5,0.25", "orlicz:power:2", "orlicz:exp_square"];
    let mut axioms = Vec::new();
    for s in specs {
        let spec: SymmetricNormSpec = s.parse()?;
        let report = verify_norm_axioms(&spec, trials.min(100), seed)?;
        checks.insert(format!("axioms_{s}"), Check::flag(report.passed()));
        axioms.push(json!({"spec": s, "violations": report.violations.len()}));
    }
    Ok((
        checks,
        json!({"structured_vs_jacobi_worst": structured.value, "schatten_diagonal_worst": lp.value, "axioms": axioms}),
    ))
}

// ---- sweep ----

fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write) -> Result<bool, CliError> {
    let (lo, hi) = parse_range(&a.m)?;
    let cfg_hi = hi.clamp(3, MAX_BLOCK_M);
    let cfg = config_from_space(&a.space, cfg_hi)?;
    let (p, policy) = match a.p.as_str() {
        "theorem" => (None, "theorem".to_string()),
        v => {
            let p: f64 = v.parse().map_err(|_| CliError::Usage(format!("cannot parse --p '{v}'")))?;
            if !(p > 0.0 && p <= 1.0) {
                return Err(CliError::Usage(format!("--p must lie in (0, 1], got {p}")));
            }
            (Some(p), format!("fixed:{}", fmt17(p)))
        }
    };
    let tf = theorem_functions(&cfg, hi)?;
    let ps: Vec<f64> = match p {
        Some(v) => vec![v; hi + 1],
        None => tf.p.clone(),
    };
    let mut csv = format!(
        "# space={} mode={:?} x0={:?} eps={} p={policy}\nm,p,bound,achieved,margin,pass,reason\n",
        cfg.spec,
        cfg.mode,
        cfg.x0.as_slice(),
        cfg.eps
    );
    let mut ok = true;
    for m in lo..=hi {
        let size = 2 * m * cfg.x0.len();
        if m > MAX_BLOCK_M || size > MAX_LIFT_SIZE {
            csv.push_str(&format!(
                "{m},{},,,,,skipped: size {size} exceeds cap (m <= {MAX_BLOCK_M}, k <= {MAX_LIFT_SIZE})\n",
                fmt17(ps[m])
            ));
            continue;
        }
        let stage_cfg = PipelineConfig {
            m_max: m,
            ..cfg.clone()
        };
        match build_stage(&stage_cfg, m, &ps, &tf.f, &tf.h) {
            Ok(stage) => {
                let margin = stage.achieved - stage.bound;
                let pass = margin >= -a.tol;
                ok &= pass;
                let failed: Vec<&str> = stage
                    .checks
                    .iter()
                    .filter(|(_, c)| !c.pass)
                    .map(|(k, _)| k.as_str())
                    .collect();
                csv.push_str(&format!(
                    "{m},{},{},{},{},{pass},{}\n",
                    fmt17(stage.p),
                    fmt17(stage.bound),
                    fmt17(stage.achieved),
                    fmt17(margin),
                    if failed.is_empty() {
                        String::new()
                    } else {
                        format!("failed checks: {}", failed.join(";"))
                    }
                ));
            }
            Err(e) => {
                ok = false;
                csv.push_str(&format!("{m},{},,,,false,error: {}\n", fmt17(ps[m]), e.to_string().replace(',', ";")));
            }
        }
    }
    match &a.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
            write_file(&dir.join("sweep.csv"), &csv)?;
        }
        None => write_out(out, &csv)?,
    }
    Ok(ok)
}

// ---- theorem ----

fn theorem_config(a: &TheoremArgs) -> Result<PipelineConfig, CliError> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<PipelineConfig>(&text)
                .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?
        }
        None => PipelineConfig {
            m_max: DEFAULT_THEOREM_M,
            ..PipelineConfig::default()
        },
    };
    if let Some(m) = a.m {
        cfg.m_max = m;
    }
    if let Some(s) = &a.space {
        cfg.spec = s.parse()?;
    }
    if let Some(x) = &a.x0 {
        cfg.x0 = parse_x0(x)?;
    }
    if let Some(e) = a.eps {
        cfg.eps = e;
    }
    if let Some(t) = a.tol {
        cfg.tolerances.identity = t;
    }
    match &a.mode {
        Some(m) => cfg.mode = parse_mode(m)?,
        None if a.config.is_none() && a.space.is_some() => {
            if let Some(mode) = infer_mode(&cfg.spec, &cfg.x0, cfg.m_max, cfg.eps) {
                cfg.mode = mode;
            }
        }
        None => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn stages_csv(report: &TheoremReport) -> String {
    let mut csv = String::from(
        "m,p,s,q,w_norm,w_sup,bound,achieved,achieved_over_bound,first_comm_r2,second_comm,reaches_r_cubed,pass\n",
    );
    for (s, p) in report.stages.iter().zip(&report.pairs) {
        let r2 = (p.r * p.r) as f64;
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            s.m,
            fmt17(s.p),
            fmt17(s.s),
            fmt17(s.q),
            fmt17(s.w_norm),
            fmt17(s.w_sup),
            fmt17(s.bound),
            fmt17(s.achieved),
            fmt17(s.achieved / s.bound),
            fmt17(p.first_comm_norm * r2),
            fmt17(p.second_comm_norm),
            p.reaches_r_cubed,
            s.passed() && p.passed()
        ));
    }
    csv
}

fn function_grid() -> Vec<f64> {
    let n = 1000;
    (-n + 1..n).map(|i| i as f64 / n as f64).collect()
}

fn dump_matrices(dir: &Path, report: &TheoremReport) -> Result<(), CliError> {
    let mdir = dir.join("matrices");
    fs::create_dir_all(&mdir).map_err(|e| io_err(&mdir, e))?;
    for (s, p) in report.stages.iter().zip(&report.pairs) {
        if s.m > DUMP_MAX_M {
            continue;
        }
        let v = json!({
            "m": s.m,
            "r": p.r,
            "w": s.w().eigenvalues(),
            "small_witness": s.small_witness,
            "witness": s.witness.x,
            "x_r": p.x_r,
        });
        write_file(&mdir.join(format!("m{:03}.json", s.m)), &(to_json(&v)? + "\n"))?;
    }
    Ok(())
}

fn cmd_theorem(a: &TheoremArgs, out: &mut dyn Write) -> Result<bool, CliError> {
    let cfg = theorem_config(a)?;
    let report = run_theorem_main(&cfg).map_err(|e| match e {
        Error::Stage { .. } => CliError::Failed(e.to_string()),
        other => CliError::from(other),
    })?;
    let mut outcome = Checks::new();
    merge(&mut outcome, "", &report.checks);
    merge(&mut outcome, "functions.", &report.functions.checks);
    merge(&mut outcome, "direct_sum.", &report.direct_sum.checks);
    for s in &report.stages {
        merge(&mut outcome, &format!("stage[{:03}].", s.m), &s.checks);
    }
    for p in &report.pairs {
        merge(&mut outcome, &format!("pair[{:03}].", p.r), &p.checks);
    }
    let passed = report.passed();
    let config = json!({"pipeline": cfg, "seed": a.seed, "dump_matrices": a.dump_matrices});
    let mut doc = serde_json::to_value(&report).map_err(|e| CliError::Failed(format!("serialize: {e}")))?;
    if let Value::Object(map) = &mut doc {
        map.remove("config");
        let mut ordered = serde_json::Map::new();
        ordered.insert(
            "manifest".into(),
            serde_json::to_value(manifest("theorem", config, a.timestamp, outcome)).unwrap_or(Value::Null),
        );
        ordered.extend(std::mem::take(map));
        *map = ordered;
    }
    fs::create_dir_all(&a.out).map_err(|e| io_err(&a.out, e))?;
    write_file(&a.out.join("report.json"), &(to_json(&doc)? + "\n"))?;
    write_file(&a.out.join("stages.csv"), &stages_csv(&report))?;
    let samples = sample_csv(&report.theorem_functions.f, &function_grid())?;
    write_file(&a.out.join("f_E.csv"), &samples)?;
    if a.dump_matrices {
        dump_matrices(&a.out, &report)?;
    }
    let mut summary = format!(
        "theorem: {} stages (m = 3..{}), space {}, mode {:?}: {}\n",
        report.stages.len(),
        cfg.m_max,
        cfg.spec,
        cfg.mode,
        if passed { "all checks pass" } else { "FAILED" }
    );
    for f in report.failures() {
        summary.push_str(&format!("  failed: {f}\n"));
    }
    summary.push_str(&format!("wrote {}\n", a.out.display()));
    write_out(out, &summary)?;
    Ok(passed)
}
