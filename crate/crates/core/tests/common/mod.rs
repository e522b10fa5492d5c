//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use commbound::{ComplexMatrix, C64};

/// Coefficients `c_0..c_n` (with `c_n = 1`) of `det(tI - G)` by
/// Faddeev-LeVerrier.
pub fn char_poly(g: &ComplexMatrix) -> Vec<C64> {
    let n = g.rows();
    let mut coeffs = vec![C64::new(0.0, 0.0); n + 1];
    coeffs[n] = C64::new(1.0, 0.0);
    let mut m = ComplexMatrix::zeros(n, n);
    for k in 1..=n {
        // M_k = G M_{k-1} + c_{n-k+1} I
        let mut next = g.matmul(&m).unwrap();
        next = next.add(&ComplexMatrix::identity(n).scale(coeffs[n - k + 1])).unwrap();
        m = next;
        let gm = g.matmul(&m).unwrap();
        let tr: C64 = (0..n).map(|i| gm[(i, i)]).sum();
        coeffs[n - k] = -tr / k as f64;
    }
    coeffs
}

fn horner(c: &[C64], z: C64) -> (C64, C64) {
    let mut p = C64::new(0.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for a in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

/// Roots of a monic polynomial by Durand-Kerner, polished with Newton.
pub fn poly_roots(c: &[C64]) -> Vec<C64> {
    let n = c.len() - 1;
    let radius = 1.0 + c[..n].iter().map(|a| a.norm()).fold(0.0, f64::max);
    let mut z: Vec<C64> = (0..n)
        .map(|k| C64::from_polar(radius, 0.4 + 2.0 * std::f64::consts::PI * k as f64 / n as f64))
        .collect();
    for _ in 0..2000 {
        let mut moved: f64 = 0.0;
        for i in 0..n {
            let (p, _) = horner(c, z[i]);
            let mut denom = C64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    denom *= z[i] - z[j];
                }
            }
            let step = p / denom;
            z[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-18 * radius {
            break;
        }
    }
    for zi in z.iter_mut() {
        for _ in 0..5 {
            let (p, dp) = horner(c, *zi);
            if dp.norm() == 0.0 {
                break;
            }
            *zi -= p / dp;
        }
    }
    z
}

/// s-numbers from the roots of the characteristic polynomial of `X* X`.
pub fn charpoly_singular_values(x: &ComplexMatrix) -> Vec<f64> {
    let g = x.adjoint().matmul(x).unwrap();
    let n = g.rows();
    let mut s: Vec<f64> = if n == 2 {
        let tr = (g[(0, 0)] + g[(1, 1)]).re;
        let det = (g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)]).re;
        let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
        let big = 0.5 * (tr + disc);
        // small root from the product to avoid cancellation
        let small = if big > 0.0 { det / big } else { 0.0 };
        vec![big.sqrt(), small.max(0.0).sqrt()]
    } else {
        poly_roots(&char_poly(&g)).iter().map(|z| z.re.max(0.0).sqrt()).collect()
    };
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// `|eigenvalues|` of a Hermitian matrix from its characteristic polynomial.
pub fn hermitian_moduli(h: &ComplexMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = poly_roots(&char_poly(h)).iter().map(|z| z.re.abs()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Sorted pairwise products.
pub fn sorted_products(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect();
    out.sort_by(|x, y| y.total_cmp(x));
    out
}

pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let scale = a.iter().chain(b).fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

/// Every 2x2 matrix with entries from a small alphabet.
pub fn all_2x2() -> Vec<ComplexMatrix> {
    let alphabet = [
        C64::new(0.0, 0.0),
        C64::new(1.0, 0.0),
        C64::new(-2.0, 0.0),
        C64::new(0.0, 1.0),
        C64::new(0.5, -1.5),
    ];
    let mut out = Vec::new();
    for a in alphabet {
        for b in alphabet {
            for c in alphabet {
                for d in alphabet {
                    out.push(ComplexMatrix::new(2, 2, vec![a, b, c, d]).unwrap());
                }
            }
        }
    }
    out
}
