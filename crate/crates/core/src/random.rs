//! Seeded random test matrices. Every generator takes the RNG explicitly so
//! suites stay reproducible from a single `--seed`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub use rand::SeedableRng;

use crate::matrix::{ComplexMatrix, C64};

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut TestRng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn complex_gaussian(rng: &mut TestRng) -> C64 {
    C64::new(gaussian(rng), gaussian(rng))
}

pub fn complex_matrix(rng: &mut TestRng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

pub fn real_matrix(rng: &mut TestRng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| C64::new(gaussian(rng), 0.0))
}

/// `(G + G*) / 2` for Gaussian `G`.
pub fn hermitian(rng: &mut TestRng, n: usize) -> ComplexMatrix {
    let g = complex_matrix(rng, n, n);
    g.add(&g.adjoint()).expect("square").scale_real(0.5)
}

/// Haar-distributed unitary: Gram-Schmidt on a Gaussian matrix with the
/// phases of the triangular factor divided out.
pub fn unitary(rng: &mut TestRng, n: usize) -> ComplexMatrix {
    loop {
        let g = complex_matrix(rng, n, n);
        let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
        let mut ok = true;
        for j in 0..n {
            let mut v: Vec<C64> = (0..n).map(|i| g[(i, j)]).collect();
            // two passes keep the basis orthogonal to working precision
            for _ in 0..2 {
                for q in &cols {
                    let c: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                    for (vi, qi) in v.iter_mut().zip(q) {
                        *vi -= c * qi;
                    }
                }
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-8 {
                ok = false;
                break;
            }
            let phase = {
                let d: C64 = (0..n).map(|i| g[(i, j)]).zip(&v).map(|(a, b)| b.conj() * a).sum();
                if d.norm() > 0.0 {
                    d / d.norm()
                } else {
                    C64::new(1.0, 0.0)
                }
            };
            cols.push(v.iter().map(|z| z * phase / norm).collect());
        }
        if ok {
            return ComplexMatrix::from_fn(n, n, |i, j| cols[j][i]);
        }
    }
}

/// `n` distinct-ish eigenvalues uniform in `(lo, hi)`.
pub fn spectrum(rng: &mut TestRng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

/// Spectrum with deliberate repeats, to exercise grouping.
pub fn spectrum_with_repeats(rng: &mut TestRng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let distinct = (n / 2).max(1);
    let base = spectrum(rng, distinct, lo, hi);
    (0..n).map(|_| base[rng.gen_range(0..distinct)]).collect()
}

pub fn nonincreasing_positive(rng: &mut TestRng, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}
