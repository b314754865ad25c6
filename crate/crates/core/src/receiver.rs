//! Per-UE receive processing.
//!
//! A UE knows its serving channel and the channel of its strongest interferer.
//! From those it can either null the interferer outright
//! ([`zf_null_decoder`]) or whiten against an interference-plus-noise
//! covariance ([`in_covariance`], [`mmse_decoder`]). In the multi-direction
//! scheme the whitened equivalent channel `G = Pᴴ Hᴴ Φ⁻¹ H P` is
//! eigen-decomposed and the best `L` eigenpairs are fed back to the BS as
//! stream candidates ([`build_feedback`]).

use crate::error::{Error, Result};
use crate::linalg::{
    fix_phase, hermitian_eigen, hpd_solve, identity, orthogonal_complement, range_basis, real, CMatrix, CVector,
};
use crate::precoding::MixingMatrix;

/// One fed-back stream candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackEntry {
    pub ue: usize,
    /// Unit direction in the reduced space.
    pub direction: CVector,
    /// Estimated SINR of the direction, inter-cell interference only.
    pub gain: f64,
    /// Position in the UE's descending eigenvalue order.
    pub rank: usize,
}

/// Interference-plus-noise covariance `Φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct InCovariance {
    pub phi: CMatrix,
}

impl InCovariance {
    pub fn scaled(&self, factor: f64) -> InCovariance {
        InCovariance { phi: &self.phi * real(factor) }
    }
}

/// The strongest interferer's precoding, as seen by the covariance model.
#[derive(Debug, Clone, Copy)]
pub enum InterfererPrecoders<'a> {
    /// `V_n V_nᴴ ≈ I` on the reduced space.
    Identity,
    /// Actual unit-norm transmit vectors (length `M_K`, already mixed).
    Effective(&'a [CVector]),
}

/// Unit decoder `u` with `uᴴ·[H_1P … H_nP] = 0`.
///
/// `interferers` holds the effective matrices `H_li·P`; the first `n_ri` are
/// nulled jointly. When the left null space has more than one dimension the
/// basis vector with the largest `|uᴴ·desired|` is returned (lowest index on
/// ties); without `desired` the first basis vector is used.
pub fn zf_null_decoder(interferers: &[CMatrix], n_ri: usize, desired: Option<&CVector>) -> Result<CVector> {
    let used = &interferers[..n_ri.min(interferers.len())];
    let rows = used.first().map(|m| m.nrows()).ok_or(Error::NoNullSpace)?;
    let total_cols: usize = used.iter().map(|m| m.ncols()).sum();
    let mut stacked = CMatrix::zeros(rows, total_cols);
    let mut col = 0;
    for m in used {
        if m.nrows() != rows {
            return Err(Error::DimensionMismatch { expected: rows, got: m.nrows() });
        }
        stacked.view_mut((0, col), (rows, m.ncols())).copy_from(m);
        col += m.ncols();
    }
    let null = orthogonal_complement(&range_basis(&stacked));
    if null.ncols() == 0 {
        return Err(Error::NoNullSpace);
    }
    let mut best = 0;
    if let Some(d) = desired {
        let mut best_gain = -1.0;
        for k in 0..null.ncols() {
            let gain = null.column(k).dotc(d).norm();
            if gain > best_gain * (1.0 + 1e-12) {
                best = k;
                best_gain = gain;
            }
        }
    }
    let mut u: CVector = null.column(best).into_owned();
    fix_phase(&mut u);
    Ok(u)
}

/// `Φ = (σ² + INR_rem)·I + (p/S)·H·P·V_n·V_nᴴ·Pᴴ·Hᴴ`, with `H` the strongest
/// interferer's channel (`None` when there is no interferer).
pub fn in_covariance(
    strongest: Option<&CMatrix>,
    mixing: &MixingMatrix,
    precoders: InterfererPrecoders<'_>,
    power: f64,
    streams: usize,
    noise: f64,
    inr_rem: f64,
) -> InCovariance {
    let n = mixing.dims();
    let mut phi = identity(n) * real(noise + inr_rem);
    if let Some(h) = strongest {
        let per_stream = real(power / streams as f64);
        match precoders {
            InterfererPrecoders::Identity => {
                let a = h * &mixing.p;
                phi += &a * a.adjoint() * per_stream;
            }
            InterfererPrecoders::Effective(vs) => {
                for v in vs {
                    let a = h * v;
                    phi += &a * a.adjoint() * per_stream;
                }
            }
        }
    }
    InCovariance { phi: crate::linalg::symmetrize(&phi) }
}

/// `G = Pᴴ·Hᴴ·Φ⁻¹·H·P`, formed as `BᴴB` with `B = L⁻¹HP` so the result is
/// Hermitian positive semi-definite by construction.
pub fn equivalent_channel(h: &CMatrix, mixing: &MixingMatrix, phi: &InCovariance) -> CMatrix {
    let hp = h * &mixing.p;
    match phi.phi.clone().cholesky() {
        Some(chol) => {
            let b = chol.l().solve_lower_triangular(&hp).expect("non-singular Cholesky factor");
            b.adjoint() * b
        }
        None => {
            let w = hpd_solve(&phi.phi, &hp).expect("invertible covariance");
            crate::linalg::symmetrize(&(hp.adjoint() * w))
        }
    }
}

/// Eigenpairs of a Hermitian `G`, eigenvalues descending.
pub fn eigen_directions(g: &CMatrix) -> Vec<(CVector, f64)> {
    let (values, vectors) = hermitian_eigen(g);
    values.into_iter().enumerate().map(|(k, lambda)| (vectors.column(k).into_owned(), lambda)).collect()
}

/// Dominant eigenvector of `Pᴴ Hᴴ Φ⁻¹ H P`.
pub fn init_vector(h: &CMatrix, mixing: &MixingMatrix, phi: &InCovariance) -> CVector {
    let g = equivalent_channel(h, mixing, phi);
    eigen_directions(&g).swap_remove(0).0
}

/// `u = Φ⁻¹·H·P·v0 / ‖Φ⁻¹·H·P·v0‖`.
pub fn mmse_decoder(phi: &InCovariance, h: &CMatrix, mixing: &MixingMatrix, v0: &CVector) -> Result<CVector> {
    let received = h * (&mixing.p * v0);
    whiten_normalize(phi, &received)
}

fn whiten_normalize(phi: &InCovariance, received: &CVector) -> Result<CVector> {
    if received.norm() == 0.0 {
        return Err(Error::ZeroDirection);
    }
    let rhs = CMatrix::from_column_slice(received.len(), 1, received.as_slice());
    let w = hpd_solve(&phi.phi, &rhs).ok_or(Error::ZeroDirection)?;
    let w: CVector = w.column(0).into_owned();
    let norm = w.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroDirection);
    }
    Ok(w / real(norm))
}

/// Top-`L` eigenpairs of `G` as feedback entries of `ue`. Slightly negative
/// eigenvalues from rounding are reported as zero.
pub fn build_feedback(ue: usize, g: &CMatrix, l: usize) -> Result<Vec<FeedbackEntry>> {
    if l > g.nrows() {
        return Err(Error::LTooLarge { requested: l, available: g.nrows() });
    }
    Ok(eigen_directions(g)
        .into_iter()
        .take(l)
        .enumerate()
        .map(|(rank, (direction, lambda))| FeedbackEntry { ue, direction, gain: lambda.max(0.0), rank })
        .collect())
}

/// Column-normalised `Φ⁻¹·H·P·C_d`, one decoder per chosen direction.
pub fn final_decoder(h: &CMatrix, mixing: &MixingMatrix, phi: &InCovariance, directions: &[CVector]) -> Result<CMatrix> {
    let mut u = CMatrix::zeros(h.nrows(), directions.len());
    for (k, c) in directions.iter().enumerate() {
        let col = mmse_decoder(phi, h, mixing, c)?;
        u.set_column(k, &col);
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis, c, diag, frobenius, hermitian_defect};
    use crate::netchan::MixingFamily;
    use crate::precoding::make_mixing_matrix;

    #[test]
    fn explicit_null_direction() {
        let mut h = CMatrix::from_fn(3, 3, |i, j| c(1.0 + i as f64 * j as f64, i as f64 - j as f64));
        h.set_row(1, &CMatrix::zeros(1, 3).row(0));
        let h = h.columns(0, 2).into_owned();
        let u = zf_null_decoder(&[h], 1, None);
        // rows 0 and 2 span a 2-D range, so e₂ is the only left-null direction
        let u = u.unwrap();
        assert!((u - basis(3, 1)).norm() < 1e-12);
    }

    #[test]
    fn full_rank_has_no_null_space() {
        let m = make_mixing_matrix(4, 1, 1.0, MixingFamily::Fourier).unwrap();
        let h = CMatrix::from_fn(4, 4, |i, j| c((i * 4 + j) as f64 % 5.0 + 1.0, (i + 2 * j) as f64 % 3.0));
        assert_eq!(zf_null_decoder(&[&h * &m.p], 1, None), Err(Error::NoNullSpace));
    }

    #[test]
    fn covariance_without_interferer() {
        let m = MixingMatrix::identity(3);
        let phi = in_covariance(None, &m, InterfererPrecoders::Identity, 1.0, 3, 0.1, 0.2);
        assert!(frobenius(&(phi.phi - identity(3) * real(0.3))) < 1e-15);
        let zero = CMatrix::zeros(3, 3);
        let phi = in_covariance(Some(&zero), &m, InterfererPrecoders::Identity, 1.0, 3, 0.1, 0.2);
        assert!(frobenius(&(phi.phi - identity(3) * real(0.3))) < 1e-15);
    }

    #[test]
    fn covariance_scales_quadratically() {
        let m = make_mixing_matrix(4, 1, 0.0, MixingFamily::Fourier).unwrap();
        let h = CMatrix::from_fn(4, 4, |i, j| c(i as f64 - j as f64, 0.5 * (i + j) as f64));
        let base = in_covariance(Some(&h), &m, InterfererPrecoders::Identity, 2.0, 3, 0.0, 0.0);
        let scale = c(0.0, 3.0);
        let scaled = in_covariance(Some(&(&h * scale)), &m, InterfererPrecoders::Identity, 2.0, 3, 0.0, 0.0);
        assert!(frobenius(&(scaled.phi - base.phi * real(9.0))) < 1e-10);
    }

    #[test]
    fn init_vector_diagonal() {
        let m = MixingMatrix::identity(2);
        let phi = InCovariance { phi: identity(2) };
        let v0 = init_vector(&diag(&[3.0, 1.0]), &m, &phi);
        assert!((v0 - basis(2, 0)).norm() < 1e-12);
        let tie = init_vector(&diag(&[2.0, 2.0]), &m, &phi);
        assert!((tie - basis(2, 0)).norm() < 1e-12);
    }

    #[test]
    fn mmse_whitening_disabled_and_scaled() {
        let m = MixingMatrix::identity(3);
        let h = CMatrix::from_fn(3, 3, |i, j| c((i + j) as f64, i as f64 * 0.3));
        let v0 = basis(3, 2);
        let u = mmse_decoder(&InCovariance { phi: identity(3) }, &h, &m, &v0).unwrap();
        let hv = &h * &v0;
        assert!((u.clone() - &hv / real(hv.norm())).norm() < 1e-12);
        let u5 = mmse_decoder(&InCovariance { phi: identity(3) * real(5.0) }, &h, &m, &v0).unwrap();
        assert!((u - u5).norm() < 1e-12);
        assert_eq!(
            mmse_decoder(&InCovariance { phi: identity(3) }, &CMatrix::zeros(3, 3), &m, &v0),
            Err(Error::ZeroDirection)
        );
    }

    #[test]
    fn equivalent_channel_cases() {
        let m = MixingMatrix::identity(3);
        let phi = InCovariance { phi: identity(3) };
        assert!(frobenius(&equivalent_channel(&CMatrix::zeros(3, 3), &m, &phi)) == 0.0);

        let p = make_mixing_matrix(4, 1, 0.0, MixingFamily::Fourier).unwrap();
        let h = crate::linalg::dft(4);
        let g = equivalent_channel(&h, &p, &InCovariance { phi: identity(4) });
        assert!(frobenius(&(g.clone() - identity(3))) < 1e-12);
        assert!(hermitian_defect(&g) < 1e-14);
    }

    #[test]
    fn eigen_directions_diagonal() {
        let d = eigen_directions(&diag(&[3.0, 1.0, 2.0]));
        let lambdas: Vec<f64> = d.iter().map(|e| e.1).collect();
        assert_eq!(lambdas, vec![3.0, 2.0, 1.0]);
        assert!((d[0].0.clone() - basis(3, 0)).norm() < 1e-12);
        assert!((d[1].0.clone() - basis(3, 2)).norm() < 1e-12);
        assert!((d[2].0.clone() - basis(3, 1)).norm() < 1e-12);
    }

    #[test]
    fn feedback_sizes() {
        let g = diag(&[3.0, 1.0, 2.0]);
        assert_eq!(build_feedback(0, &g, 3).unwrap().len(), 3);
        let one = build_feedback(7, &g, 1).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!((one[0].ue, one[0].gain, one[0].rank), (7, 3.0, 0));
        assert!((one[0].direction.clone() - basis(3, 0)).norm() < 1e-12);
        assert_eq!(build_feedback(0, &g, 4), Err(Error::LTooLarge { requested: 4, available: 3 }));
    }

    #[test]
    fn final_decoder_identity() {
        let m = MixingMatrix::identity(3);
        let dirs = vec![basis(3, 0), CVector::from_vec(vec![c(0.0, 0.0), c(0.6, 0.0), c(0.0, 0.8)])];
        let u = final_decoder(&identity(3), &m, &InCovariance { phi: identity(3) }, &dirs).unwrap();
        assert!((u.column(0) - &dirs[0]).norm() < 1e-12);
        assert!((u.column(1) - &dirs[1]).norm() < 1e-12);
    }
}
