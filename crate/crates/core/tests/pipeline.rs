use std::f64::consts::{E, PI};

use commbound::construct::{build_hilbert_blocks, make_tensor_lift};
use commbound::pipeline::{
    build_stage, infestimate_check, p_sequence, phi_b_norm, run_theorem_main, theorem_functions, truncation,
    PipelineConfig, K0, K1,
};
use commbound::schur::{commutator, DiagonalOperator};
use commbound::symnorm::{BlockMode, SingularValueSequence, SymmetricNormSpec};
use commbound::Error;

fn sup(m_max: usize) -> PipelineConfig {
    PipelineConfig {
        m_max,
        ..PipelineConfig::default()
    }
}

fn trace_class(m_max: usize) -> PipelineConfig {
    PipelineConfig {
        spec: SymmetricNormSpec::schatten(1.0).unwrap(),
        mode: BlockMode::Sum,
        ..sup(m_max)
    }
}

#[test]
fn constants_match_closed_forms() {
    assert!((K0 - 0.158_030_139_707).abs() < 1e-11);
    assert!((K1 - 0.033_535_037_189).abs() < 1e-11);
}

#[test]
fn operator_norm_schedule_is_explicit() {
    // |Phi(B_m)|_inf = e^-1, so 1/p_m = m^2/e once that term dominates
    let p = p_sequence(&sup(40), 40).unwrap();
    assert_eq!(p[0], 1.0);
    for m in 3..=40 {
        let mf = m as f64;
        assert!((p[m] - E / (mf * mf)).abs() <= 1e-15 * p[m], "m={m}");
    }
}

#[test]
fn trace_norm_of_lift_is_geometric_sum() {
    let x0 = SingularValueSequence::new(vec![1.0, 0.5]).unwrap();
    let spec = SymmetricNormSpec::schatten(1.0).unwrap();
    for m in [1, 5, 17] {
        let want: f64 = 2.0 * 2.0 * (1..=m).map(|j| (-(j as f64)).exp()).sum::<f64>();
        let got = phi_b_norm(&spec, x0.len(), m).unwrap();
        assert!((got - want).abs() <= 1e-14 * want);
    }
}

#[test]
fn stage_bound_column_simplifies() {
    // h(m - log p_m) = q_m, so the bound is K1 log(m/2) / sqrt(log(m + e))
    let report = run_theorem_main(&sup(20)).unwrap();
    assert!(report.passed(), "{:?}", report.failures());
    for st in &report.stages {
        let mf = st.m as f64;
        let want = K1 * (mf / 2.0).ln() / (mf + E).ln().sqrt();
        assert!((st.bound - want).abs() <= 1e-12 * want.abs().max(1e-300), "m={}", st.m);
        assert!(st.w_norm <= (1.0 + 1e-15) / (mf * mf));
        assert!(st.achieved >= st.bound);
    }
}

#[test]
fn hilbert_bound_and_lower_estimate_at_16() {
    let tf = theorem_functions(&sup(16), 16).unwrap();
    let r = infestimate_check(16, 0.1, &tf.f, &tf.h).unwrap();
    assert!(r.passed());
    assert!(r.ba_norm < PI && r.ba_norm > 2.5);
    assert!(r.comm_norm >= r.lower);
    assert!((r.comm_norm - r.reduced_norm).abs() <= 1e-12 * r.comm_norm);
}

#[test]
fn trace_class_witness_beats_operator_norm_witness() {
    let m = 16;
    let s1 = trace_class(m);
    let tf1 = theorem_functions(&s1, m).unwrap();
    let dual = build_stage(&s1, m, &tf1.p, &tf1.f, &tf1.h).unwrap();
    let sinf = sup(m);
    let tfi = theorem_functions(&sinf, m).unwrap();
    let plain = build_stage(&sinf, m, &tfi.p, &tfi.f, &tfi.h).unwrap();
    assert!(dual.passed() && plain.passed());
    assert!(dual.witness_kind.starts_with("dual"), "{}", dual.witness_kind);
    assert!(dual.achieved >= plain.achieved / 2.0);
    assert!(dual.achieved >= dual.bound);
}

#[test]
fn pairs_telescope_into_direct_sum() {
    let report = run_theorem_main(&sup(12)).unwrap();
    for (st, pair) in report.stages.iter().zip(&report.pairs) {
        assert_eq!(pair.r, st.m - 2);
        assert!((pair.ratio - st.achieved).abs() <= 1e-9 * st.achieved);
    }
    let (w, x) = truncation(&report.pairs, 4).unwrap();
    assert_eq!(w.len(), x.rows());
    // the truncation commutator is block diagonal with blocks [W_r, X_r]
    let whole = w.commutator_with(&x).unwrap();
    let mut offset = 0;
    for pair in &report.pairs[..4] {
        let block = pair.w.commutator_with(&pair.x_r).unwrap();
        for i in 0..pair.size {
            for j in 0..pair.size {
                assert_eq!(whole[(offset + i, offset + j)], block[(i, j)]);
            }
        }
        offset += pair.size;
    }
    let rows = &report.direct_sum.rows;
    assert!(rows.iter().all(|r| r.sum_first <= PI * PI / 6.0 + 1e-9));
    assert!(rows.windows(2).all(|w| w[1].max_second >= w[0].max_second));
}

#[test]
fn lift_of_block_matches_kronecker() {
    let blocks = build_hilbert_blocks(5).unwrap();
    let x0 = SingularValueSequence::new(vec![1.0, 0.25]).unwrap();
    let lift = make_tensor_lift(10, x0).unwrap();
    let big = lift.phi_diag(&blocks.b).unwrap();
    assert_eq!(big.len(), 20);
    let b = blocks.b.to_matrix();
    let want = commutator(&lift.phi(&b).unwrap(), &lift.psi(&blocks.a).unwrap()).unwrap();
    let got = big.commutator_with(&lift.psi(&blocks.a).unwrap()).unwrap();
    assert!(want.sub(&got).unwrap().frobenius_norm() <= 1e-14);
    assert!(DiagonalOperator::new(vec![f64::NAN]).is_err());
}

#[test]
fn invalid_configs_are_rejected() {
    let mut cfg = sup(10);
    cfg.eps = 1.5;
    assert!(matches!(run_theorem_main(&cfg), Err(Error::InvalidInput(_))));
    let mut cfg = trace_class(10);
    cfg.mode = BlockMode::Sup;
    assert!(run_theorem_main(&cfg).is_err());
    let mut cfg = sup(256);
    cfg.x0 = SingularValueSequence::new(vec![1.0; 8]).unwrap();
    assert!(run_theorem_main(&cfg).is_err());
}
