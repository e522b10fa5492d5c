// One PASS/FAIL line per acceptance criterion; exits nonzero if any fails.
mod common;

use std::f64::consts::{E, PI};
use std::time::{Duration, Instant};

use commbound::construct::{build_hilbert_blocks, commutator_ba, make_tensor_lift, verify_intertwining, verify_norm_sandwich};
use commbound::funcs::{chi_eps, ScalarC1Function};
use commbound::pipeline::{
    q_sequence, run_theorem_main, theorem_functions, PipelineConfig, TheoremReport, K0, K1,
};
use commbound::random;
use commbound::schur::{schur_apply, DiagonalOperator};
use commbound::symnorm::{singular_values, BlockMode, SingularValueSequence, SymmetricNormSpec};
use commbound::ComplexMatrix;
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<T: std::fmt::Display>(err: T) -> String {
    err.to_string()
}

fn op_norm(x: &ComplexMatrix) -> Result<f64, String> {
    Ok(singular_values(x).map_err(e)?.as_slice().first().copied().unwrap_or(0.0))
}

fn cfg(m_max: usize) -> PipelineConfig {
    PipelineConfig {
        m_max,
        ..PipelineConfig::default()
    }
}

fn schur_identity() -> Outcome {
    let tf = theorem_functions(&cfg(64), 64).map_err(e)?;
    let fs = [ScalarC1Function::square(), ScalarC1Function::cube(), tf.f];
    let mut rng = random::rng(1);
    let mut worst: f64 = 0.0;
    for t in 0..500 {
        let f = &fs[t % 3];
        let n = rng.gen_range(1..=32);
        let eig = if t % 2 == 0 {
            random::spectrum(&mut rng, n, -0.9, 0.9)
        } else {
            random::spectrum_with_repeats(&mut rng, n, -0.9, 0.9)
        };
        let b = DiagonalOperator::new(eig.clone()).map_err(e)?;
        let x = random::complex_matrix(&mut rng, n, n);
        // dense [f(B), X] against M_f(B) applied to the dense [B, X]
        let bm = ComplexMatrix::from_diag(&eig);
        let fb: Vec<f64> = eig.iter().map(|v| f.eval(*v)).collect::<Result<_, _>>().map_err(e)?;
        let fm = ComplexMatrix::from_diag(&fb);
        let bx = bm.matmul(&x).and_then(|l| l.sub(&x.matmul(&bm)?)).map_err(e)?;
        let rhs = fm.matmul(&x).and_then(|l| l.sub(&x.matmul(&fm)?)).map_err(e)?;
        let lhs = schur_apply(f, &b, &bx).map_err(e)?;
        let fmax = fb.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let scale = x.frobenius_norm() * (fmax + bx.frobenius_norm() / x.frobenius_norm().max(1e-300)).max(1e-300);
        worst = worst.max(lhs.sub(&rhs).map_err(e)?.frobenius_norm() / scale);
    }
    ensure(worst <= 1e-12, || format!("worst residual {worst:e}"))?;
    Ok(format!("500 cases, worst relative residual {worst:.2e}"))
}

fn hilbert_bound() -> Outcome {
    let mut prev: f64 = 0.0;
    let mut top: f64 = 0.0;
    for m in 3..=256 {
        let blocks = build_hilbert_blocks(m).map_err(e)?;
        let v = op_norm(&commutator_ba(&blocks).map_err(e)?)?;
        ensure(v <= PI, || format!("m={m}: {v} > pi"))?;
        ensure(v >= prev, || format!("m={m}: {v} < {prev}"))?;
        prev = v;
        top = top.max(v);
    }
    Ok(format!("m=3..256, max |[B,A]| = {top:.12}"))
}

fn infestimate() -> Outcome {
    let tf = theorem_functions(&cfg(64), 64).map_err(e)?;
    let mut worst = f64::INFINITY;
    for m in [4usize, 8, 16, 32, 64] {
        let blocks = build_hilbert_blocks(m).map_err(e)?;
        for p in [1.0, 0.1, 0.01] {
            let fb = blocks.b.scaled(p).apply_fn(&tf.f).map_err(e)?;
            let comm = op_norm(&fb.commutator_with(&blocks.a).map_err(e)?)?;
            let lower = p * K0 * (m as f64 / 2.0).ln() / tf.h.eval(m as f64 - p.ln()).map_err(e)?;
            ensure(comm >= (1.0 - 1e-9) * lower, || format!("m={m} p={p}: {comm} < {lower}"))?;
            worst = worst.min(comm / lower);
        }
    }
    Ok(format!("15 grid points, min achieved/lower = {worst:.3}"))
}

fn intertwining() -> Outcome {
    let tf = theorem_functions(&cfg(64), 64).map_err(e)?;
    let fs = [ScalarC1Function::square(), ScalarC1Function::cube(), tf.f];
    let mut rng = random::rng(4);
    let mut worst: f64 = 0.0;
    for t in 0..200 {
        let n = rng.gen_range(1..=8);
        let len = rng.gen_range(1..=4);
        let x0 = SingularValueSequence::new(random::nonincreasing_positive(&mut rng, len)).map_err(e)?;
        let lift = make_tensor_lift(n, x0).map_err(e)?;
        let b = DiagonalOperator::new(random::spectrum_with_repeats(&mut rng, n, -0.9, 0.9)).map_err(e)?;
        let x = random::complex_matrix(&mut rng, n, n);
        worst = worst.max(verify_intertwining(&lift, &fs[t % 3], &b, &x).map_err(e)?.relative());
    }
    ensure(worst <= 1e-12, || format!("worst residual {worst:e}"))?;
    Ok(format!("200 cases, worst relative residual {worst:.2e}"))
}

fn sandwich() -> Outcome {
    let one = SingularValueSequence::new(vec![1.0]).map_err(e)?;
    let lorentz = SymmetricNormSpec::lorentz((0..64).map(|i| 0.5f64.powi(i)).collect()).map_err(e)?;
    let cases = [
        ("kyfan(1) sup", SymmetricNormSpec::kyfan(1).map_err(e)?, one.clone(), BlockMode::Sup),
        ("schatten(1) sum", SymmetricNormSpec::schatten(1.0).map_err(e)?, one, BlockMode::Sum),
        (
            "lorentz 2^-k sup",
            lorentz,
            SingularValueSequence::new(vec![4.0 / 7.0; 3]).map_err(e)?,
            BlockMode::Sup,
        ),
    ];
    let mut rng = random::rng(5);
    for (name, spec, x0, mode) in cases {
        for _ in 0..200 {
            let n = rng.gen_range(1..=8);
            let lift = make_tensor_lift(n, x0.clone()).map_err(e)?;
            let x = random::complex_matrix(&mut rng, n, n);
            let r = verify_norm_sandwich(&lift, &spec, &x, 0.5, mode).map_err(|err| format!("{name}: {err}"))?;
            ensure(r.passed, || format!("{name}: {} outside [{}, {}]", r.value, r.lower, r.upper))?;
        }
    }
    Ok("3 spaces x 200 matrices".into())
}

fn functions() -> Outcome {
    let tf = theorem_functions(&cfg(64), 64).map_err(e)?;
    let sched = &tf.schedule;
    for (m, (s, q)) in sched.s().iter().zip(sched.q()).enumerate() {
        ensure((q - q_sequence(m)).abs() <= 1e-15 * q, || format!("q_{m} mismatch"))?;
        let v = tf.h.eval(*s).map_err(e)?;
        ensure((v - q).abs() <= 1e-12 * q, || format!("h(s_{m}) = {v}, want {q}"))?;
    }
    let s_last = *sched.s().last().unwrap();
    let mut max_ld: f64 = 0.0;
    for i in 0..=50_000 {
        let t = 1.3 * s_last * i as f64 / 50_000.0;
        max_ld = max_ld.max(tf.h.derivative(t).map_err(e)? / tf.h.eval(t).map_err(e)?);
    }
    ensure(max_ld <= 1.0 + 1e-12, || format!("max h'/h = {max_ld}"))?;
    let eps = 0.5;
    let chi = chi_eps(eps).map_err(e)?;
    let mut max_chi: f64 = 0.0;
    for i in 0..=50_000 {
        max_chi = max_chi.max(chi.derivative(-0.5 + 2.0 * i as f64 / 50_000.0).map_err(e)?);
    }
    ensure(max_chi <= (1.0 + eps) * (1.0 + 1e-12), || format!("max chi' = {max_chi}"))?;
    let d = 1e-8;
    let fd = (tf.f.eval(d).map_err(e)? - tf.f.eval(-d).map_err(e)?) / (2.0 * d);
    ensure(fd.abs() <= 1e-6, || format!("f'(0) difference quotient {fd}"))?;
    for i in 1..=10_000 {
        let t = i as f64 / 10_001.0;
        let fp = tf.f.derivative(t).map_err(e)?;
        let cap = 2.0 / tf.h.eval(t.ln()).map_err(e)?;
        ensure(fp >= 0.0 && fp <= cap * (1.0 + 1e-12), || format!("f'({t}) = {fp}, cap {cap}"))?;
    }
    Ok(format!("max h'/h = {max_ld:.6}, max chi' = {max_chi:.6}, f'(0) ~ {fd:.1e}"))
}

fn stage_table(report: &TheoremReport) -> Outcome {
    let h = &report.theorem_functions.h;
    let mut prev_bound = f64::NEG_INFINITY;
    let mut min_margin = f64::INFINITY;
    for st in &report.stages {
        let m = st.m;
        let mf = m as f64;
        // S^inf: |Phi(p B)| = p e^-1
        ensure((st.w_norm - st.p / E).abs() <= 1e-15, || format!("m={m}: |W| = {}", st.w_norm))?;
        // p_m is defined through 1/(m^2 |Phi(B_m)|), so equality is attained up to rounding
        ensure(st.w_norm <= (1.0 + 4.0 * f64::EPSILON) / (mf * mf), || format!("m={m}: |W| = {} > 1/m^2", st.w_norm))?;
        let target = K1 * (mf / 2.0).ln() / (mf + E).ln().sqrt();
        let via_h = K1 * (mf / 2.0).ln() / h.eval(mf - st.p.ln()).map_err(e)?;
        ensure((via_h - target).abs() <= 1e-12 * target, || format!("m={m}: bound {via_h} vs {target}"))?;
        ensure(st.achieved >= target - 1e-9, || format!("m={m}: {} < {target}", st.achieved))?;
        if m >= 7 {
            ensure(target > prev_bound, || format!("bound not increasing at m={m}"))?;
        }
        prev_bound = target;
        min_margin = min_margin.min(st.achieved / target);
        ensure(st.passed(), || format!("m={m}: stage checks {:?}", failing(&st.checks)))?;
    }
    ensure(report.stages.len() == 30, || "expected m = 3..32".into())?;
    Ok(format!("m=3..32, min achieved/bound = {min_margin:.2}"))
}

fn failing(checks: &commbound::pipeline::Checks) -> Vec<&String> {
    checks.iter().filter(|(_, c)| !c.pass).map(|(k, _)| k).collect()
}

fn pair_identities(report: &TheoremReport) -> Outcome {
    for (pair, st) in report.pairs.iter().zip(&report.stages) {
        let r2 = (pair.r * pair.r) as f64;
        let scaled = pair.first_comm_norm * r2;
        ensure((scaled - 1.0).abs() <= 1e-9, || format!("r={}: r^2 |[W,X]| = {scaled}", pair.r))?;
        let ratio = pair.second_comm_norm / pair.first_comm_norm;
        ensure((ratio - st.achieved).abs() <= 1e-9 * st.achieved, || {
            format!("r={}: second/first {ratio} vs witness {}", pair.r, st.achieved)
        })?;
        for key in ["x2_eq_i_w_x3", "multiplier_ignores_pinching", "x_r_self_adjoint"] {
            let c = pair.checks.get(key).ok_or_else(|| format!("missing {key}"))?;
            ensure(c.pass && c.tol <= 1e-12, || format!("r={}: {key} margin {:e}", pair.r, c.margin))?;
        }
        ensure(pair.x_r.sub(&pair.x_r.adjoint()).map_err(e)?.is_zero(), || "X_r not self-adjoint".into())?;
    }
    Ok(format!("{} pairs", report.pairs.len()))
}

fn direct_sums(report: &TheoremReport) -> Outcome {
    let basel = PI * PI / 6.0;
    let mut prev = 0.0;
    for row in &report.direct_sum.rows {
        ensure(row.sum_first <= basel + 1e-9, || format!("R={}: {} > pi^2/6", row.r_max, row.sum_first))?;
        ensure(row.max_second >= prev, || format!("R={}: max second decreased", row.r_max))?;
        prev = row.max_second;
    }
    let partial: f64 = (1..=report.pairs.len()).map(|r| 1.0 / (r * r) as f64).sum();
    let last = report.direct_sum.rows.last().unwrap();
    ensure((last.sum_first - partial).abs() <= 1e-9, || "sum of 1/r^2 mismatch".into())?;
    Ok(format!("R=1..{}, sum |[W_r,X_r]| = {:.9}", report.pairs.len(), last.sum_first))
}

fn oracle() -> Outcome {
    use common::*;
    let mut worst: f64 = 0.0;
    for x in all_2x2() {
        worst = worst.max(max_rel_diff(singular_values(&x).map_err(e)?.as_slice(), &charpoly_singular_values(&x)));
    }
    let mut rng = random::rng(11);
    for t in 0..100 {
        let n = 3 + t % 2;
        let x = random::complex_matrix(&mut rng, n, n);
        worst = worst.max(max_rel_diff(singular_values(&x).map_err(e)?.as_slice(), &charpoly_singular_values(&x)));
    }
    ensure(worst <= 1e-10, || format!("worst relative s-number error {worst:e}"))?;
    for p in [1.0, 1.5, 2.0, 3.0, 7.5] {
        let spec = SymmetricNormSpec::schatten(p).map_err(e)?;
        for n in 1..=12 {
            let d: Vec<f64> = (0..n).map(|_| random::gaussian(&mut rng)).collect();
            let mut mags: Vec<f64> = d.iter().map(|v| v.abs()).collect();
            mags.sort_by(|a, b| b.total_cmp(a));
            let direct = mags.iter().map(|v| v.powf(p)).sum::<f64>().powf(1.0 / p);
            let got = spec.norm_matrix(&ComplexMatrix::from_diag(&d)).map_err(e)?;
            ensure(got == direct, || format!("p={p} n={n}: {got} != {direct}"))?;
        }
    }
    Ok(format!("725 matrices, worst relative error {worst:.2e}; diagonal Schatten exact"))
}

fn main() {
    let mut failed = 0;
    let mut line = |id: usize, name: &str, budget: Option<Duration>, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let mut res = f();
        let took = start.elapsed();
        if let (Ok(_), Some(b)) = (&res, budget) {
            if took > b {
                res = Err(format!("took {took:.1?}, budget {b:?}"));
            }
        }
        match res {
            Ok(msg) => println!("PASS {id:>2} {name}: {msg} [{took:.2?}]"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {id:>2} {name}: {msg} [{took:.2?}]");
            }
        }
    };
    let secs = |s| Some(Duration::from_secs(s));
    line(1, "schur commutator identity", secs(10), &mut schur_identity);
    line(2, "hilbert commutator bound", secs(30), &mut hilbert_bound);
    line(3, "commutator lower bound grid", secs(60), &mut infestimate);
    line(4, "lift intertwining", None, &mut intertwining);
    line(5, "norm sandwich", None, &mut sandwich);
    line(6, "function certifications", None, &mut functions);

    let start = Instant::now();
    let report = run_theorem_main(&cfg(32));
    let build = start.elapsed();
    let mut from_report = |id: usize, name: &str, budget, f: fn(&TheoremReport) -> Outcome| {
        line(id, name, budget, &mut || match &report {
            Ok(r) => f(r),
            Err(err) => Err(format!("pipeline failed: {err}")),
        })
    };
    from_report(7, "stage table", Some(Duration::from_secs(300).saturating_sub(build)), stage_table);
    from_report(8, "commutator pair identities", None, pair_identities);
    from_report(9, "direct-sum truncations", None, direct_sums);
    line(10, "singular value oracle", None, &mut oracle);

    println!("acceptance: {} of 10 passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
