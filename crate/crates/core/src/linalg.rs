//! Dense complex linear algebra helpers on top of `nalgebra`.
//!
//! Everything in the crate carries channels, precoders and decoders as
//! [`CMatrix`] / [`CVector`]. The helpers here add the few conventions the
//! rest of the code relies on: descending eigen-order with a deterministic
//! phase, orthogonal complements with rank detection, and Hermitian solves.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative magnitude under which an entry is treated as zero when fixing
/// the phase of an eigenvector.
const PHASE_EPS: f64 = 1e-12;

/// Relative gap under which two eigenvalues are considered tied.
const TIE_EPS: f64 = 1e-12;

/// Relative singular-value threshold used for rank decisions.
pub const RANK_TOL: f64 = 1e-10;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn real(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Real diagonal matrix as a complex matrix.
pub fn diag(values: &[f64]) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { real(values[i]) } else { real(0.0) })
}

/// Standard basis vector `e_index` of length `n`.
pub fn basis(n: usize, index: usize) -> CVector {
    let mut v = CVector::zeros(n);
    v[index] = real(1.0);
    v
}

/// Inner product `aᴴ·b`.
pub fn inner(a: &CVector, b: &CVector) -> Complex64 {
    a.dotc(b)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest absolute deviation from Hermitian symmetry.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(m + mᴴ)/2`.
pub fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * real(0.5)
}

/// Rotates `v` so that its first non-negligible entry is real and positive.
pub fn fix_phase(v: &mut CVector) {
    let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return;
    }
    if let Some(lead) = v.iter().copied().find(|z| z.norm() > PHASE_EPS * scale) {
        let rot = lead.conj() / lead.norm();
        v.iter_mut().for_each(|z| *z *= rot);
    }
}

/// Index of the largest-magnitude entry, lowest index on ties.
fn dominant_index(v: &CVector) -> usize {
    let mut best = 0;
    let mut best_mag = -1.0;
    for (i, z) in v.iter().enumerate() {
        let mag = z.norm();
        if mag > best_mag * (1.0 + 1e-9) {
            best = i;
            best_mag = mag;
        }
    }
    best
}

/// Eigen-decomposition of a Hermitian matrix.
///
/// Eigenvalues come back in decreasing order with orthonormal eigenvectors in
/// matching columns. Within a group of tied eigenvalues the vectors are
/// ordered by the index of their dominant entry, and every vector has its
/// leading entry made real positive, so identical inputs give identical
/// outputs on every platform.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    assert!(m.is_square(), "hermitian_eigen needs a square matrix");
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let eig = symmetrize(m).symmetric_eigen();
    let mut pairs: Vec<(f64, CVector)> = (0..n)
        .map(|k| {
            let mut v: CVector = eig.eigenvectors.column(k).into_owned();
            fix_phase(&mut v);
            (eig.eigenvalues[k], v)
        })
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));

    let scale = pairs.iter().map(|p| p.0.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (pairs[end - 1].0 - pairs[end].0) <= TIE_EPS * scale {
            end += 1;
        }
        if end - start > 1 {
            pairs[start..end].sort_by_key(|p| dominant_index(&p.1));
        }
        start = end;
    }

    let values = pairs.iter().map(|p| p.0).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (k, (_, v)) in pairs.iter().enumerate() {
        vectors.set_column(k, v);
    }
    (values, vectors)
}

/// Ratio of extreme eigenvalues of a Hermitian positive semi-definite matrix.
/// Returns infinity when the smallest eigenvalue is not positive.
pub fn hermitian_condition(m: &CMatrix) -> f64 {
    let (values, _) = hermitian_eigen(m);
    let max = values.first().copied().unwrap_or(0.0);
    let min = values.last().copied().unwrap_or(0.0);
    if min <= 0.0 || max <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solves `a·x = b` for Hermitian positive definite `a`. Falls back to LU when
/// the Cholesky factorisation fails numerically.
pub fn hpd_solve(a: &CMatrix, b: &CMatrix) -> Option<CMatrix> {
    if let Some(chol) = a.clone().cholesky() {
        return Some(chol.solve(b));
    }
    a.clone().lu().solve(b)
}

/// Orthonormal basis of the range of `a`, using singular values above
/// `RANK_TOL·σ_max` to decide the rank.
pub fn range_basis(a: &CMatrix) -> CMatrix {
    let m = a.nrows();
    if a.ncols() == 0 || frobenius(a) == 0.0 {
        return CMatrix::zeros(m, 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > RANK_TOL * sigma_max)
        .map(|(k, _)| k)
        .collect();
    let mut basis = CMatrix::zeros(m, keep.len());
    for (col, k) in keep.into_iter().enumerate() {
        basis.set_column(col, &u.column(k));
    }
    basis
}

/// Orthonormal basis of the orthogonal complement of `range(q)`, where `q`
/// already has orthonormal columns.
///
/// Candidates are the standard basis vectors projected off `q` (twice, for
/// numerical orthogonality); the longest residuals are kept first.
pub fn orthogonal_complement(q: &CMatrix) -> CMatrix {
    let m = q.nrows();
    let want = m.saturating_sub(q.ncols());
    let mut found: Vec<CVector> = Vec::with_capacity(want);
    let project_off = |v: &mut CVector, cols: &[CVector], q: &CMatrix| {
        for _ in 0..2 {
            for k in 0..q.ncols() {
                let qk = q.column(k).into_owned();
                let coef = inner(&qk, v);
                *v -= &qk * coef;
            }
            for f in cols {
                let coef = inner(f, v);
                *v -= f * coef;
            }
        }
    };
    while found.len() < want {
        let mut best: Option<(f64, CVector)> = None;
        for i in 0..m {
            let mut v = basis(m, i);
            project_off(&mut v, &found, q);
            let norm = v.norm();
            if best.as_ref().is_none_or(|(n, _)| norm > *n * (1.0 + 1e-12)) {
                best = Some((norm, v));
            }
        }
        let (norm, v) = best.expect("at least one candidate");
        if norm < 1e-8 {
            break;
        }
        let mut v = v / real(norm);
        project_off(&mut v, &found, q);
        let norm = v.norm();
        found.push(v / real(norm));
    }
    let mut out = CMatrix::zeros(m, found.len());
    for (k, v) in found.iter().enumerate() {
        out.set_column(k, v);
    }
    out
}

/// Unitary DFT matrix, `F[i][j] = exp(-2πi·ij/n)/√n`.
pub fn dft(n: usize) -> CMatrix {
    let norm = 1.0 / (n as f64).sqrt();
    CMatrix::from_fn(n, n, |i, j| {
        let angle = -2.0 * std::f64::consts::PI * ((i * j) % n) as f64 / n as f64;
        Complex64::from_polar(norm, angle)
    })
}

/// Normalised Sylvester Hadamard matrix; `None` unless `n` is a power of two.
pub fn hadamard(n: usize) -> Option<CMatrix> {
    if n == 0 || !n.is_power_of_two() {
        return None;
    }
    let norm = 1.0 / (n as f64).sqrt();
    Some(CMatrix::from_fn(n, n, |i, j| {
        let sign = if (i & j).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        real(sign * norm)
    }))
}

/// Block-diagonal matrix from square blocks.
pub fn block_diag(blocks: &[CMatrix]) -> CMatrix {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let m: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMatrix::zeros(n, m);
    let (mut r, mut col) = (0, 0);
    for b in blocks {
        out.view_mut((r, col), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        col += b.ncols();
    }
    out
}

/// Square root of a Hermitian positive semi-definite matrix.
pub fn hermitian_sqrt(m: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let roots: Vec<f64> = values.iter().map(|v| v.max(0.0).sqrt()).collect();
    &vectors * diag(&roots) * vectors.adjoint()
}
