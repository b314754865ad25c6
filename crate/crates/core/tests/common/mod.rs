#![allow(dead_code)]

use iasim::linalg::{CMatrix, CVector};
use iasim::netchan::complex_gaussian;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    complex_gaussian(rows, cols, rng)
}

pub fn unit(n: usize, rng: &mut ChaCha8Rng) -> CVector {
    let v: CVector = complex_gaussian(n, 1, rng).column(0).into_owned();
    let norm = v.norm();
    v / Complex64::new(norm, 0.0)
}

pub fn hermitian(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let a = gaussian(n, n, rng);
    (&a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

pub fn hpd(n: usize, floor: f64, rng: &mut ChaCha8Rng) -> CMatrix {
    let a = gaussian(n, n, rng);
    &a * a.adjoint() + CMatrix::identity(n, n) * Complex64::new(floor, 0.0)
}

/// Eigenvalues of a Hermitian matrix through its real symmetric embedding
/// `[[A, -B], [B, A]]`, whose spectrum is that of `A + iB` with every value
/// doubled. Returned descending, one copy per value.
pub fn embedded_eigenvalues(g: &CMatrix) -> Vec<f64> {
    let n = g.nrows();
    let m = DMatrix::<f64>::from_fn(2 * n, 2 * n, |i, j| {
        let (bi, bj) = (i / n, j / n);
        let z = g[(i % n, j % n)];
        match (bi, bj) {
            (0, 0) | (1, 1) => z.re,
            (0, 1) => -z.im,
            _ => z.im,
        }
    });
    let mut values: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values.chunks(2).map(|pair| 0.5 * (pair[0] + pair[1])).collect()
}

/// `|uᴴ h|² / (uᴴ Φ u)`
pub fn sinr_of(u: &CVector, h: &CVector, phi: &CMatrix) -> f64 {
    u.dotc(h).norm_sqr() / u.dotc(&(phi * u)).re
}
