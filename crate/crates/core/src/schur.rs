//! Divided-difference Schur multipliers `M_f(B)` for diagonal `B`.
//!
//! The symbol is `psi(l, u) = (f(l) - f(u)) / (l - u)` for `l != u` and
//! **zero** on the diagonal `l == u` (not `f'(l)`). The zero convention is
//! what makes `M_f(B)[B, X] = [f(B), X]` hold for every `X` while the
//! multiplier annihilates every block of equal eigenvalues.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::funcs::ScalarC1Function;
use crate::matrix::{ComplexMatrix, ZERO};
use crate::svd;
use crate::symnorm::SymmetricNormSpec;

/// Real diagonal matrix given by its eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagonalOperator {
    eigenvalues: Vec<f64>,
}

impl DiagonalOperator {
    pub fn new(eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return invalid("diagonal operator needs at least one eigenvalue");
        }
        if eigenvalues.iter().any(|v| !v.is_finite()) {
            return invalid("eigenvalues must be finite");
        }
        Ok(Self { eigenvalues })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_diag(&self.eigenvalues)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            eigenvalues: self.eigenvalues.iter().map(|v| v * c).collect(),
        }
    }

    /// `f(B)`.
    pub fn apply_fn(&self, f: &ScalarC1Function) -> Result<Self> {
        let ev: Result<Vec<f64>> = self.eigenvalues.iter().map(|&l| f.eval(l)).collect();
        Self::new(ev?)
    }

    /// `B ⊕ C`.
    pub fn direct_sum(parts: &[&DiagonalOperator]) -> Result<Self> {
        Self::new(parts.iter().flat_map(|p| p.eigenvalues.iter().copied()).collect())
    }

    /// `[B, X] = BX - XB`, entrywise `(l_j - l_k) x_jk`.
    pub fn commutator_with(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_square(x)?;
        let l = &self.eigenvalues;
        Ok(ComplexMatrix::from_fn(x.rows(), x.cols(), |j, k| {
            x[(j, k)] * l[j] - x[(j, k)] * l[k]
        }))
    }

    pub fn check_square(&self, x: &ComplexMatrix) -> Result<()> {
        if !x.is_square() || x.rows() != self.len() {
            return invalid(format!(
                "matrix {}x{} does not match diagonal operator of size {}",
                x.rows(),
                x.cols(),
                self.len()
            ));
        }
        Ok(())
    }
}

/// `psi_f(lambda, mu)`; zero when `lambda == mu` exactly.
pub fn divided_difference(f: &ScalarC1Function, lambda: f64, mu: f64) -> Result<f64> {
    let (fl, fm) = (f.eval(lambda)?, f.eval(mu)?);
    if lambda == mu {
        return Ok(0.0);
    }
    Ok((fl - fm) / (lambda - mu))
}

/// Cached `psi`-matrix of `M_f(B)`.
#[derive(Debug, Clone)]
pub struct DividedDifferenceSymbol {
    n: usize,
    psi: Vec<f64>,
    label: String,
}

impl DividedDifferenceSymbol {
    pub fn new(f: &ScalarC1Function, b: &DiagonalOperator) -> Result<Self> {
        let l = b.eigenvalues();
        let n = l.len();
        let fl: Vec<f64> = l.iter().map(|&x| f.eval(x)).collect::<Result<_>>()?;
        let mut psi = vec![0.0; n * n];
        for j in 0..n {
            for k in 0..n {
                if l[j] != l[k] {
                    psi[j * n + k] = (fl[j] - fl[k]) / (l[j] - l[k]);
                }
            }
        }
        Ok(Self {
            n,
            psi,
            label: f.label().to_string(),
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.psi[j * self.n + k]
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `[M X]_jk = psi_jk x_jk`.
    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if !x.is_square() || x.rows() != self.n {
            return invalid(format!(
                "matrix {}x{} does not match multiplier of size {}",
                x.rows(),
                x.cols(),
                self.n
            ));
        }
        Ok(ComplexMatrix::from_fn(self.n, self.n, |j, k| x[(j, k)] * self.get(j, k)))
    }
}

pub fn schur_apply(f: &ScalarC1Function, b: &DiagonalOperator, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    b.check_square(x)?;
    DividedDifferenceSymbol::new(f, b)?.apply(x)
}

/// `AB - BA`. Uses the O(n²) formula when either side is diagonal.
pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() || !b.is_square() || a.rows() != b.rows() {
        return invalid(format!(
            "commutator needs equal square shapes, got {}x{} and {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        ));
    }
    let n = a.rows();
    if a.is_diagonal() {
        let d = a.diagonal();
        return Ok(ComplexMatrix::from_fn(n, n, |j, k| d[j] * b[(j, k)] - b[(j, k)] * d[k]));
    }
    if b.is_diagonal() {
        let d = b.diagonal();
        return Ok(ComplexMatrix::from_fn(n, n, |j, k| a[(j, k)] * d[k] - d[j] * a[(j, k)]));
    }
    a.matmul(b)?.sub(&b.matmul(a)?)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IdentityResidual {
    /// Frobenius norm of the mismatch.
    pub residual: f64,
    /// Natural magnitude of the two sides the residual is measured against.
    pub scale: f64,
}

impl IdentityResidual {
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.residual / self.scale
        } else {
            self.residual
        }
    }
}

/// `|M_f(B)([B, X]) - [f(B), X]|_F`, with scale `|X|_F (|f(B)|_max + |B|_max max|psi|)`.
pub fn verify_schur_commutator_identity(
    f: &ScalarC1Function,
    b: &DiagonalOperator,
    x: &ComplexMatrix,
) -> Result<IdentityResidual> {
    let sym = DividedDifferenceSymbol::new(f, b)?;
    let lhs = sym.apply(&b.commutator_with(x)?)?;
    let fb = b.apply_fn(f)?;
    let rhs = fb.commutator_with(x)?;
    let fmax = fb.eigenvalues().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let bmax = b.eigenvalues().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let pmax = sym.psi.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    Ok(IdentityResidual {
        residual: lhs.sub(&rhs)?.frobenius_norm(),
        scale: x.frobenius_norm() * (fmax + bmax * pmax),
    })
}

/// A matrix certifying `|M_f(B)|_{S^E -> S^E} >= ratio`.
#[derive(Debug, Clone, Serialize)]
pub struct BlowupWitness {
    pub b: DiagonalOperator,
    #[serde(skip)]
    pub x: ComplexMatrix,
    pub spec: SymmetricNormSpec,
    pub ratio: f64,
    pub image_norm: f64,
    pub witness_norm: f64,
}

pub fn witness_ratio(
    sym: &DividedDifferenceSymbol,
    spec: &SymmetricNormSpec,
    x: &ComplexMatrix,
) -> Result<(f64, f64, f64)> {
    let xn = spec.norm_matrix(x)?;
    if xn == 0.0 {
        return invalid("witness has zero norm");
    }
    let img = spec.norm_matrix(&sym.apply(x)?)?;
    Ok((img / xn, img, xn))
}

/// Best witness among `witnesses` for the multiplier norm on `S^E`.
pub fn multiplier_norm_lower_bound(
    f: &ScalarC1Function,
    b: &DiagonalOperator,
    witnesses: &[ComplexMatrix],
    spec: &SymmetricNormSpec,
) -> Result<BlowupWitness> {
    let sym = DividedDifferenceSymbol::new(f, b)?;
    let mut best: Option<BlowupWitness> = None;
    for x in witnesses {
        b.check_square(x)?;
        if x.is_zero() {
            continue;
        }
        let (ratio, image_norm, witness_norm) = witness_ratio(&sym, spec, x)?;
        if best.as_ref().is_none_or(|w| ratio > w.ratio) {
            best = Some(BlowupWitness {
                b: b.clone(),
                x: x.clone(),
                spec: spec.clone(),
                ratio,
                image_norm,
                witness_norm,
            });
        }
    }
    best.ok_or_else(|| Error::InvalidInput("all witnesses are zero".into()))
}

/// Rank-one `X1 = u v*` from the top singular pair of `M_f(B)(X_inf)`,
/// `|X1|_1 = 1`. Trace duality with the real symmetric symbol gives
/// `|M(X1)|_1 >= |M(X_inf)|_inf / |X_inf|_inf`.
pub fn dual_witness_transfer(
    f: &ScalarC1Function,
    b: &DiagonalOperator,
    x_inf: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    b.check_square(x_inf)?;
    let image = schur_apply(f, b, x_inf)?;
    if image.is_zero() {
        return Err(Error::NoWitness("M_f(B)(X) vanishes".into()));
    }
    let svd = svd::jacobi_svd(&image)?;
    if svd.values[0] == 0.0 {
        return Err(Error::NoWitness("M_f(B)(X) vanishes".into()));
    }
    Ok(ComplexMatrix::outer(&svd.left[0], &svd.right[0]))
}

/// Indices grouped by eigenvalue: sorted single-linkage with gap `tol`.
/// Each group carries the eigenvalue of its first (smallest) member.
pub fn group_spectrum(b: &DiagonalOperator, tol: f64) -> Result<Vec<(f64, Vec<usize>)>> {
    if !(tol >= 0.0) {
        return invalid("tol must be nonnegative");
    }
    let l = b.eigenvalues();
    let mut order: Vec<usize> = (0..l.len()).collect();
    order.sort_by(|&a, &c| l[a].total_cmp(&l[c]).then(a.cmp(&c)));
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    let mut prev = f64::NAN;
    for i in order {
        match groups.last_mut() {
            Some((_, members)) if l[i] - prev <= tol => members.push(i),
            _ => groups.push((l[i], vec![i])),
        }
        prev = l[i];
    }
    for (_, members) in groups.iter_mut() {
        members.sort_unstable();
    }
    Ok(groups)
}

/// Default grouping tolerance `1e-12 max |lambda|`.
pub fn default_group_tol(b: &DiagonalOperator) -> f64 {
    1e-12 * b.eigenvalues().iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

/// Group label per index.
pub fn group_labels(groups: &[(f64, Vec<usize>)], n: usize) -> Vec<usize> {
    let mut label = vec![0; n];
    for (g, (_, members)) in groups.iter().enumerate() {
        for &i in members {
            label[i] = g;
        }
    }
    label
}

/// Pinching `sum_t Q_t X Q_t`.
pub fn pinch(x: &ComplexMatrix, labels: &[usize]) -> ComplexMatrix {
    ComplexMatrix::from_fn(x.rows(), x.cols(), |j, k| {
        if labels[j] == labels[k] {
            x[(j, k)]
        } else {
            ZERO
        }
    })
}
