//! Explicit Hilbert-type blocks `D, V, A, B` and the tensor lifts
//! `Phi(X) = X ⊗ I`, `Psi(X) = X ⊗ diag(x0)`.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::funcs::ScalarC1Function;
use crate::matrix::{ComplexMatrix, C64, ZERO};
use crate::schur::{DiagonalOperator, DividedDifferenceSymbol, IdentityResidual};
use crate::symnorm::{verify_block_family, BlockMode, SingularValueSequence, SymmetricNormSpec};

/// Largest `m` accepted by [`build_hilbert_blocks`].
pub const MAX_BLOCK_M: usize = 256;
/// Largest lifted dimension `n |x0|`.
pub const MAX_LIFT_SIZE: usize = 2000;

/// `D = diag(e^-1, ..., e^-m)`, `v_jk = 1 / ((k - j)(e^-j + e^-k))` off the
/// diagonal, `A = [[0, V], [-V, 0]]`, `B = diag(D, -D)`.
///
/// `V` is antisymmetric, so `A` is symmetric and `[B, A]` is skew-symmetric
/// with off-diagonal blocks `DV + VD`, whose `(j, k)` entry is `1 / (k - j)`.
#[derive(Debug, Clone, Serialize)]
pub struct HilbertBlocks {
    pub m: usize,
    pub d: DiagonalOperator,
    #[serde(skip)]
    pub v: ComplexMatrix,
    #[serde(skip)]
    pub a: ComplexMatrix,
    pub b: DiagonalOperator,
}

pub fn build_hilbert_blocks(m: usize) -> Result<HilbertBlocks> {
    if m < 3 {
        return invalid(format!("m must be >= 3, got {m}"));
    }
    if m > MAX_BLOCK_M {
        return Err(Error::SizeLimit {
            size: m,
            limit: MAX_BLOCK_M,
        });
    }
    let e: Vec<f64> = (1..=m).map(|j| (-(j as f64)).exp()).collect();
    let v = ComplexMatrix::from_fn(m, m, |j, k| {
        if j == k {
            ZERO
        } else {
            C64::new(1.0 / ((k as f64 - j as f64) * (e[j] + e[k])), 0.0)
        }
    });
    let a = ComplexMatrix::from_fn(2 * m, 2 * m, |i, j| match (i < m, j < m) {
        (true, false) => v[(i, j - m)],
        (false, true) => -v[(i - m, j)],
        _ => ZERO,
    });
    let d = DiagonalOperator::new(e.clone())?;
    let b = DiagonalOperator::new(e.iter().copied().chain(e.iter().map(|x| -x)).collect())?;
    Ok(HilbertBlocks { m, d, v, a, b })
}

/// `[B, A]`.
pub fn commutator_ba(blocks: &HilbertBlocks) -> Result<ComplexMatrix> {
    blocks.b.commutator_with(&blocks.a)
}

/// `Phi_n`, `Psi_n : M_n -> M_{n |x0|}`.
#[derive(Debug, Clone, Serialize)]
pub struct TensorLift {
    n: usize,
    x0: SingularValueSequence,
}

pub fn make_tensor_lift(n: usize, x0: SingularValueSequence) -> Result<TensorLift> {
    if n == 0 {
        return invalid("lift dimension must be >= 1");
    }
    if x0.is_empty() || x0.as_slice().iter().all(|v| *v == 0.0) {
        return invalid("x0 must be nonzero");
    }
    let k = n * x0.len();
    if k > MAX_LIFT_SIZE {
        return Err(Error::SizeLimit {
            size: k,
            limit: MAX_LIFT_SIZE,
        });
    }
    Ok(TensorLift { n, x0 })
}

impl TensorLift {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x0(&self) -> &SingularValueSequence {
        &self.x0
    }

    /// Lifted dimension `k_n = n |x0|`.
    pub fn output_size(&self) -> usize {
        self.n * self.x0.len()
    }

    fn check(&self, x: &ComplexMatrix) -> Result<()> {
        if !x.is_square() || x.rows() != self.n {
            return invalid(format!(
                "lift expects {}x{} input, got {}x{}",
                self.n,
                self.n,
                x.rows(),
                x.cols()
            ));
        }
        Ok(())
    }

    pub fn phi(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check(x)?;
        Ok(x.kron(&ComplexMatrix::identity(self.x0.len())))
    }

    pub fn psi(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check(x)?;
        Ok(x.kron(&ComplexMatrix::from_diag(self.x0.as_slice())))
    }

    /// `Phi(B)` for diagonal `B`: each eigenvalue repeated `|x0|` times.
    pub fn phi_diag(&self, b: &DiagonalOperator) -> Result<DiagonalOperator> {
        if b.len() != self.n {
            return invalid(format!("lift expects size {}, got {}", self.n, b.len()));
        }
        let r = self.x0.len();
        DiagonalOperator::new(
            b.eigenvalues()
                .iter()
                .flat_map(|&l| std::iter::repeat_n(l, r))
                .collect(),
        )
    }
}

/// `|Psi(M_f(B) X) - M_f(Phi(B)) Psi(X)|_F`.
pub fn verify_intertwining(
    lift: &TensorLift,
    f: &ScalarC1Function,
    b: &DiagonalOperator,
    x: &ComplexMatrix,
) -> Result<IdentityResidual> {
    let small = DividedDifferenceSymbol::new(f, b)?;
    let lhs = lift.psi(&small.apply(x)?)?;
    let big = DividedDifferenceSymbol::new(f, &lift.phi_diag(b)?)?;
    let rhs = big.apply(&lift.psi(x)?)?;
    let scale = lhs.frobenius_norm().max(rhs.frobenius_norm());
    Ok(IdentityResidual {
        residual: lhs.sub(&rhs)?.frobenius_norm(),
        scale,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    pub passed: bool,
    pub mode: BlockMode,
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
}

/// `mode = sup`: `|X|_inf <= |Psi X|_E <= (1 + eps)|X|_inf`;
/// `mode = sum`: `(1 - eps)|X|_1 <= |Psi X|_E <= |X|_1`.
pub fn verify_norm_sandwich(
    lift: &TensorLift,
    spec: &SymmetricNormSpec,
    x: &ComplexMatrix,
    eps: f64,
    mode: BlockMode,
) -> Result<SandwichReport> {
    const TOL: f64 = 1e-10;
    let family = verify_block_family(spec, &lift.x0, lift.n, eps, mode)?;
    if !family.passed {
        return invalid(format!(
            "block family for {spec} fails at n = {} (|sum x_j| = {})",
            lift.n, family.all_ones_norm
        ));
    }
    let value = spec.norm_matrix(&lift.psi(x)?)?;
    let s = crate::symnorm::singular_values(x)?;
    let (lower, upper) = match mode {
        BlockMode::Sup => {
            let top = s.as_slice().first().copied().unwrap_or(0.0);
            (top, (1.0 + eps) * top)
        }
        BlockMode::Sum => {
            let tr: f64 = s.as_slice().iter().sum();
            ((1.0 - eps) * tr, tr)
        }
    };
    let slack = TOL * upper.max(1e-300);
    Ok(SandwichReport {
        passed: value >= lower - slack && value <= upper + slack,
        mode,
        lower,
        value,
        upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symnorm::SymmetricNormSpec;

    #[test]
    fn blocks_m3() {
        let hb = build_hilbert_blocks(3).unwrap();
        let e = |j: i32| (-(j as f64)).exp();
        assert_eq!(hb.d.eigenvalues(), &[e(1), e(2), e(3)]);
        let v12 = hb.v[(0, 1)].re;
        assert!((v12 - 1.0 / (e(1) + e(2))).abs() < 1e-15);
        assert!((v12 - 1.987_223).abs() < 1e-6, "{v12}");
        for j in 0..3 {
            assert_eq!(hb.v[(j, j)], ZERO);
            for k in 0..3 {
                assert_eq!(hb.v[(j, k)], -hb.v[(k, j)]);
            }
        }
        assert!(hb.a.is_hermitian());
        assert!(build_hilbert_blocks(2).is_err());
        assert!(matches!(build_hilbert_blocks(MAX_BLOCK_M + 1), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn commutator_structure() {
        let m = 5;
        let hb = build_hilbert_blocks(m).unwrap();
        let c = commutator_ba(&hb).unwrap();
        for j in 0..m {
            for k in 0..m {
                assert_eq!(c[(j, k)], ZERO);
                assert_eq!(c[(j + m, k + m)], ZERO);
                let want = if j == k { 0.0 } else { 1.0 / (k as f64 - j as f64) };
                assert!((c[(j, k + m)].re - want).abs() <= 1e-14 * (1.0 + want.abs()));
                assert!((c[(j + m, k)].re - want).abs() <= 1e-14 * (1.0 + want.abs()));
            }
        }
        // (DV + VD)_{12} = 1 for m = 3
        let c3 = commutator_ba(&build_hilbert_blocks(3).unwrap()).unwrap();
        assert!((c3[(0, 4)].re - 1.0).abs() < 1e-15);
        let op = SymmetricNormSpec::schatten(f64::INFINITY).unwrap().norm_matrix(&c).unwrap();
        assert!(op <= std::f64::consts::PI);
    }

    #[test]
    fn lift_basics() {
        let one = SingularValueSequence::new(vec![1.0]).unwrap();
        let lift = make_tensor_lift(3, one).unwrap();
        let x = ComplexMatrix::from_fn(3, 3, |i, j| C64::new(i as f64, j as f64));
        assert_eq!(lift.phi(&x).unwrap(), x);
        assert_eq!(lift.psi(&x).unwrap(), x);
        assert!(make_tensor_lift(3, SingularValueSequence::new(vec![0.0, 0.0]).unwrap()).is_err());
        assert!(make_tensor_lift(3, SingularValueSequence::empty()).is_err());
        let big = SingularValueSequence::new(vec![1.0; 100]).unwrap();
        assert!(matches!(make_tensor_lift(21, big), Err(Error::SizeLimit { .. })));

        let x0 = SingularValueSequence::new(vec![1.0, 0.5]).unwrap();
        let lift = make_tensor_lift(2, x0).unwrap();
        let d = ComplexMatrix::from_diag(&[2.0, -1.0]);
        assert!(lift.phi(&d).unwrap().is_diagonal());
        assert!(lift.psi(&d).unwrap().is_diagonal());
        let h = ComplexMatrix::from_fn(2, 2, |i, j| if i == j { C64::new(1.0, 0.0) } else if i < j { C64::new(0.0, 1.0) } else { C64::new(0.0, -1.0) });
        assert!(lift.psi(&h).unwrap().is_hermitian());
        assert_eq!(lift.output_size(), 4);
        assert_eq!(lift.phi_diag(&DiagonalOperator::new(vec![2.0, -1.0]).unwrap()).unwrap().eigenvalues(), &[2.0, 2.0, -1.0, -1.0]);
    }

    #[test]
    fn trivial_lift_intertwines_exactly() {
        let lift = make_tensor_lift(3, SingularValueSequence::new(vec![1.0]).unwrap()).unwrap();
        let b = DiagonalOperator::new(vec![0.1, -0.4, 0.9]).unwrap();
        let x = ComplexMatrix::from_fn(3, 3, |i, j| C64::new((i + 2 * j) as f64, 1.0));
        let r = verify_intertwining(&lift, &ScalarC1Function::cube(), &b, &x).unwrap();
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn sandwich_tight_for_identity_lift() {
        let one = SingularValueSequence::new(vec![1.0]).unwrap();
        let lift = make_tensor_lift(3, one).unwrap();
        let x = ComplexMatrix::from_fn(3, 3, |i, j| C64::new((i * j) as f64 - 1.0, i as f64));
        let r = verify_norm_sandwich(&lift, &SymmetricNormSpec::kyfan(1).unwrap(), &x, 0.5, BlockMode::Sup).unwrap();
        assert!(r.passed && (r.value - r.lower).abs() < 1e-12 * r.value);
        let r = verify_norm_sandwich(&lift, &SymmetricNormSpec::schatten(1.0).unwrap(), &x, 0.5, BlockMode::Sum).unwrap();
        assert!(r.passed && (r.value - r.upper).abs() < 1e-12 * r.value);
        let err = verify_norm_sandwich(&lift, &SymmetricNormSpec::schatten(2.0).unwrap(), &x, 0.5, BlockMode::Sup);
        assert!(err.is_err());
    }
}
