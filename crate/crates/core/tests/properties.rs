use commbound::construct::make_tensor_lift;
use commbound::funcs::ScalarC1Function;
use commbound::matrix::{ComplexMatrix, C64};
use commbound::random;
use commbound::schur::{group_labels, group_spectrum, pinch, schur_apply, DiagonalOperator};
use commbound::symnorm::{singular_values, submajorizes_with_tol, SingularValueSequence, SymmetricNormSpec};
use proptest::prelude::*;

fn specs() -> Vec<SymmetricNormSpec> {
    ["schatten:1", "schatten:2", "schatten:3.5", "schatten:inf", "kyfan:2", "lorentz:1,0.6,0.3", "orlicz:power:3", "orlicz:tlog"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn norms_are_unitarily_invariant(n in 1usize..7, seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let x = random::complex_matrix(&mut rng, n, n);
        let u = random::unitary(&mut rng, n);
        let v = random::unitary(&mut rng, n);
        let y = u.matmul(&x).unwrap().matmul(&v).unwrap();
        for spec in specs() {
            let a = spec.norm_matrix(&x).unwrap();
            let b = spec.norm_matrix(&y).unwrap();
            prop_assert!(rel(a, b) < 1e-11, "{spec}: {a} vs {b}");
        }
    }

    #[test]
    fn triangle_and_homogeneity(n in 1usize..6, seed in any::<u64>(), c in -5.0f64..5.0) {
        let mut rng = random::rng(seed);
        let x = random::complex_matrix(&mut rng, n, n);
        let y = random::complex_matrix(&mut rng, n, n);
        let s = x.add(&y).unwrap();
        for spec in specs() {
            let (nx, ny, ns) = (spec.norm_matrix(&x).unwrap(), spec.norm_matrix(&y).unwrap(), spec.norm_matrix(&s).unwrap());
            prop_assert!(ns <= (nx + ny) * (1.0 + 1e-12));
            let scaled = spec.norm_matrix(&x.scale_real(c)).unwrap();
            prop_assert!(rel(scaled, c.abs() * nx) < 1e-11 || c == 0.0);
        }
    }

    #[test]
    fn pinching_is_submajorized(n in 1usize..8, seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let x = random::complex_matrix(&mut rng, n, n);
        let b = DiagonalOperator::new(random::spectrum_with_repeats(&mut rng, n, -1.0, 1.0)).unwrap();
        let labels = group_labels(&group_spectrum(&b, 0.0).unwrap(), n);
        let p = pinch(&x, &labels);
        let sx = singular_values(&x).unwrap();
        let sp = singular_values(&p).unwrap();
        prop_assert!(submajorizes_with_tol(&sx, &sp, 1e-12 * sx.as_slice()[0]));
        for spec in specs() {
            prop_assert!(spec.norm_matrix(&p).unwrap() <= spec.norm_matrix(&x).unwrap() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn multiplier_is_linear_self_adjoint_and_dual(n in 1usize..7, seed in any::<u64>(), a in -3.0f64..3.0) {
        let mut rng = random::rng(seed);
        let f = ScalarC1Function::cube();
        let b = DiagonalOperator::new(random::spectrum_with_repeats(&mut rng, n, -2.0, 2.0)).unwrap();
        let x = random::complex_matrix(&mut rng, n, n);
        let y = random::complex_matrix(&mut rng, n, n);
        let m = |z: &ComplexMatrix| schur_apply(&f, &b, z).unwrap();
        let lhs = m(&x.scale(C64::new(a, 0.5)).add(&y).unwrap());
        let rhs = m(&x).scale(C64::new(a, 0.5)).add(&m(&y)).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().frobenius_norm() <= 1e-12 * (1.0 + rhs.frobenius_norm()));
        let adj = m(&x.adjoint()).sub(&m(&x).adjoint()).unwrap();
        prop_assert!(adj.frobenius_norm() <= 1e-13 * (1.0 + x.frobenius_norm()));
        // tr(M(X) Y*) = tr(X M(Y)*) for a real symmetric symbol
        let l = y.inner(&m(&x)).unwrap();
        let r = m(&y).inner(&x).unwrap();
        prop_assert!((l - r).norm() <= 1e-11 * (1.0 + l.norm()));
    }

    #[test]
    fn lifts_respect_products(n in 1usize..5, len in 1usize..4, seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let x0 = SingularValueSequence::new(random::nonincreasing_positive(&mut rng, len)).unwrap();
        let lift = make_tensor_lift(n, x0).unwrap();
        let u = random::complex_matrix(&mut rng, n, n);
        let v = random::complex_matrix(&mut rng, n, n);
        let x = random::complex_matrix(&mut rng, n, n);
        let lhs = lift.phi(&u).unwrap().matmul(&lift.psi(&x).unwrap()).unwrap().matmul(&lift.phi(&v).unwrap()).unwrap();
        let rhs = lift.psi(&u.matmul(&x).unwrap().matmul(&v).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().frobenius_norm() <= 1e-12 * (1.0 + rhs.frobenius_norm()));
        let h = random::hermitian(&mut rng, n);
        prop_assert!(lift.phi(&h).unwrap().is_hermitian());
        prop_assert!(lift.psi(&h).unwrap().is_hermitian());
    }

    #[test]
    fn schatten_norms_decrease_in_p(n in 1usize..7, seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let x = random::complex_matrix(&mut rng, n, n);
        let ps = [1.0, 1.5, 2.0, 4.0, 10.0, f64::INFINITY];
        let norms: Vec<f64> = ps.iter().map(|p| SymmetricNormSpec::schatten(*p).unwrap().norm_matrix(&x).unwrap()).collect();
        for w in norms.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
        let k1 = SymmetricNormSpec::kyfan(1).unwrap().norm_matrix(&x).unwrap();
        prop_assert!(rel(k1, norms[5]) < 1e-15);
    }
}
