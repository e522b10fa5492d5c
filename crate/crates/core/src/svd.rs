//! Singular value kernels.
//!
//! General matrices go through one-sided (Hestenes) Jacobi, which keeps high
//! relative accuracy for small singular values. Self-adjoint and
//! skew-adjoint inputs are routed to a Householder tridiagonalization
//! followed by implicit QL, since their singular values are the moduli of
//! the eigenvalues and the tridiagonal route is roughly thirty times cheaper
//! at the sizes the Hilbert sweeps reach.

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, C64, ZERO};

/// Per-pair rotation threshold: a pair is left alone once
/// `|a_p* a_q| <= JACOBI_TOL * |a_p| |a_q|`.
const JACOBI_TOL: f64 = 1e-15;
const MAX_SWEEPS: usize = 80;
const QL_MAX_ITER: usize = 100;

/// Result of a one-sided Jacobi run.
#[derive(Debug, Clone)]
pub struct JacobiSvd {
    /// Nonincreasing singular values, `min(rows, cols)` of them.
    pub values: Vec<f64>,
    /// Left singular vectors (columns), in the same order as `values`.
    pub left: Vec<Vec<C64>>,
    /// Right singular vectors (columns), in the same order as `values`.
    pub right: Vec<Vec<C64>>,
    pub sweeps: usize,
    /// `sqrt(sum_{i != j} |g_ij|^2) / |A|_F^2` of the final column Gram matrix.
    pub off_mass: f64,
}

/// One-sided Jacobi SVD with singular vectors.
pub fn jacobi_svd(x: &ComplexMatrix) -> Result<JacobiSvd> {
    if !x.is_finite() {
        return Err(Error::InvalidInput("non-finite entries".into()));
    }
    if x.rows() < x.cols() {
        let mut t = jacobi_svd(&x.adjoint())?;
        std::mem::swap(&mut t.left, &mut t.right);
        return Ok(t);
    }
    let (m, n) = (x.rows(), x.cols());
    // column-major working copy
    let mut cols: Vec<Vec<C64>> = (0..n).map(|j| (0..m).map(|i| x[(i, j)]).collect()).collect();
    let mut v: Vec<Vec<C64>> = (0..n)
        .map(|j| {
            let mut e = vec![ZERO; n];
            e[j] = C64::new(1.0, 0.0);
            e
        })
        .collect();

    let mut norms: Vec<f64> = cols.iter().map(|c| sq_norm(c)).collect();
    // Rounding noise left in a numerically dependent column cannot be made
    // relatively orthogonal; pairs below this absolute level count as done.
    let floor = f64::EPSILON * f64::EPSILON * norms.iter().sum::<f64>();
    let mut sweeps = 0;
    loop {
        if sweeps >= MAX_SWEEPS {
            return Err(Error::Numeric {
                context: "jacobi_svd".into(),
                detail: format!("no convergence after {MAX_SWEEPS} sweeps ({m}x{n})"),
            });
        }
        sweeps += 1;
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = norms[p];
                let beta = norms[q];
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = dot(&cols[p], &cols[q]);
                let g = gamma.norm();
                if g <= JACOBI_TOL * (alpha * beta).sqrt() || g <= floor {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let back = phase.conj();
                {
                    let (lo, hi) = cols.split_at_mut(q);
                    rotate(&mut lo[p], &mut hi[0], c, s, back);
                    let (lo, hi) = v.split_at_mut(q);
                    rotate(&mut lo[p], &mut hi[0], c, s, back);
                }
                norms[p] = sq_norm(&cols[p]);
                norms[q] = sq_norm(&cols[q]);
            }
        }
        if !rotated {
            break;
        }
    }

    let frob2: f64 = norms.iter().sum();
    let mut off = 0.0;
    for p in 0..n {
        for q in (p + 1)..n {
            off += 2.0 * dot(&cols[p], &cols[q]).norm_sqr();
        }
    }
    let off_mass = if frob2 > 0.0 { off.sqrt() / frob2 } else { 0.0 };

    let mut order: Vec<usize> = (0..n).collect();
    let sigma: Vec<f64> = norms.iter().map(|s| s.sqrt()).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));

    let mut values = Vec::with_capacity(n);
    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    for &j in &order {
        let s = sigma[j];
        values.push(s);
        let u: Vec<C64> = if s > 0.0 {
            cols[j].iter().map(|z| z / s).collect()
        } else {
            vec![ZERO; m]
        };
        left.push(u);
        right.push(v[j].clone());
    }
    Ok(JacobiSvd {
        values,
        left,
        right,
        sweeps,
        off_mass,
    })
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn sq_norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

// a_p <- c a_p - s e^{-i phi} a_q ; a_q <- s a_p + c e^{-i phi} a_q
fn rotate(ap: &mut [C64], aq: &mut [C64], c: f64, s: f64, back: C64) {
    for (x, y) in ap.iter_mut().zip(aq.iter_mut()) {
        let yq = *y * back;
        let xp = *x;
        *x = xp * c - yq * s;
        *y = xp * s + yq * c;
    }
}

/// Singular values of `x`, nonincreasing, length `min(rows, cols)`.
pub fn singular_values(x: &ComplexMatrix) -> Result<Vec<f64>> {
    if !x.is_finite() {
        return Err(Error::InvalidInput("non-finite entries".into()));
    }
    if x.is_square() {
        let n = x.rows();
        if x.is_real() {
            let re = x.real_parts();
            if x.is_hermitian() {
                return Ok(moduli_sorted(symmetric_eigenvalues(re, n)?));
            }
            if x.is_skew_hermitian() {
                return skew_singular_values(re, n);
            }
        } else if x.is_hermitian() {
            return hermitian_singular_values(&x.real_parts(), &x.imag_parts(), n);
        } else if x.is_skew_hermitian() {
            // i X is Hermitian: Re(iX) = -Im X, Im(iX) = Re X
            let re: Vec<f64> = x.imag_parts().iter().map(|v| -v).collect();
            return hermitian_singular_values(&re, &x.real_parts(), n);
        }
    }
    Ok(jacobi_svd(x)?.values)
}

/// Singular values through the Jacobi path only, regardless of structure.
pub fn singular_values_jacobi(x: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(jacobi_svd(x)?.values)
}

fn moduli_sorted(mut ev: Vec<f64>) -> Vec<f64> {
    for v in ev.iter_mut() {
        *v = v.abs();
    }
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

// [[Re, -Im], [Im, Re]] carries every eigenvalue of Re + i Im twice.
fn hermitian_singular_values(re: &[f64], im: &[f64], n: usize) -> Result<Vec<f64>> {
    let nn = 2 * n;
    let mut big = vec![0.0; nn * nn];
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (re[i * n + j], im[i * n + j]);
            big[i * nn + j] = a;
            big[(i + n) * nn + j + n] = a;
            big[i * nn + j + n] = -b;
            big[(i + n) * nn + j] = b;
        }
    }
    let mut ev = symmetric_eigenvalues(big, nn)?;
    ev.sort_by(|a, b| a.total_cmp(b));
    let halved: Vec<f64> = ev.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect();
    Ok(moduli_sorted(halved))
}

/// Eigenvalues of a real symmetric `n x n` matrix (row-major, consumed).
pub fn symmetric_eigenvalues(mut a: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    let mut e = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let Some(beta) = householder(&a, n, k, &mut v[..len], &mut e[k]) else {
            continue;
        };
        // p = beta * S v, S = A[k+1.., k+1..]
        for i in 0..len {
            let row = &a[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + n];
            p[i] = beta * row.iter().zip(&v[..len]).map(|(x, y)| x * y).sum::<f64>();
        }
        let kk = 0.5 * beta * v[..len].iter().zip(&p[..len]).map(|(x, y)| x * y).sum::<f64>();
        for i in 0..len {
            p[i] -= kk * v[i];
        }
        for i in 0..len {
            let (vi, wi) = (v[i], p[i]);
            let row = &mut a[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + n];
            for j in 0..len {
                row[j] -= vi * p[j] + wi * v[j];
            }
        }
    }
    if n >= 2 {
        e[n - 2] = a[(n - 1) * n + n - 2];
    }
    let mut d: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    e[n - 1] = 0.0;
    tridiagonal_ql(&mut d, &mut e)?;
    Ok(d)
}

/// Singular values of a real skew-symmetric matrix.
///
/// A skew Householder sweep leaves a skew tridiagonal `T`; `iT` is unitarily
/// similar to the real symmetric tridiagonal with zero diagonal and
/// off-diagonal `|e_k|`.
pub fn skew_singular_values(mut a: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    let mut e = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let Some(beta) = householder(&a, n, k, &mut v[..len], &mut e[k]) else {
            continue;
        };
        for i in 0..len {
            let row = &a[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + n];
            p[i] = beta * row.iter().zip(&v[..len]).map(|(x, y)| x * y).sum::<f64>();
        }
        // P S P = S + v p^T - p v^T for skew S
        for i in 0..len {
            let (vi, pi) = (v[i], p[i]);
            let row = &mut a[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + n];
            for j in 0..len {
                row[j] += vi * p[j] - pi * v[j];
            }
        }
    }
    if n >= 2 {
        e[n - 2] = a[(n - 1) * n + n - 2];
    }
    let mut d = vec![0.0; n];
    for x in e.iter_mut() {
        *x = x.abs();
    }
    e[n - 1] = 0.0;
    tridiagonal_ql(&mut d, &mut e)?;
    Ok(moduli_sorted(d))
}

// Householder vector annihilating A[k+2.., k]; writes the surviving
// subdiagonal entry to `sub`. Returns None when the column is already zero.
fn householder(a: &[f64], n: usize, k: usize, v: &mut [f64], sub: &mut f64) -> Option<f64> {
    let len = n - k - 1;
    let scale = (0..len).map(|i| a[(k + 1 + i) * n + k].abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        *sub = 0.0;
        return None;
    }
    let mut ss = 0.0;
    for i in 0..len {
        v[i] = a[(k + 1 + i) * n + k] / scale;
        ss += v[i] * v[i];
    }
    let norm = ss.sqrt();
    let alpha = if v[0] > 0.0 { -norm } else { norm };
    *sub = alpha * scale;
    v[0] -= alpha;
    let vtv = ss - 2.0 * alpha * (v[0] + alpha) + alpha * alpha;
    if vtv == 0.0 {
        return None;
    }
    Some(2.0 / vtv)
}

/// Implicit QL on a symmetric tridiagonal (diagonal `d`, off-diagonal `e`
/// with `e[i]` coupling `i` and `i + 1`). Eigenvalues are left in `d`.
pub fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    let anorm = d
        .iter()
        .zip(e.iter())
        .map(|(x, y)| x.abs() + y.abs())
        .fold(0.0, f64::max);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                let small = e[m].abs() <= f64::EPSILON * dd
                    || (iter > 30 && e[m].abs() <= f64::EPSILON * anorm);
                if small {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_MAX_ITER {
                return Err(Error::Numeric {
                    context: "tridiagonal_ql".into(),
                    detail: format!("eigenvalue {l} did not converge"),
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
