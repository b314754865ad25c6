//! Mixing matrix construction and zero-forcing multi-user precoding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dft, hadamard, hermitian_condition, hpd_solve, identity, inner, real, CMatrix, CVector};
use crate::netchan::{CrossGainMode, MixingFamily};

/// Common transmit basis `P` shared by every BS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingMatrix {
    #[serde(skip)]
    pub p: CMatrix,
    pub kappa: f64,
    pub family: MixingFamily,
    pub freed_dims: usize,
}

impl MixingMatrix {
    /// `M_K`
    pub fn dims(&self) -> usize {
        self.p.nrows()
    }

    /// Dimension of the reduced (pre-mixing) space.
    pub fn cols(&self) -> usize {
        self.p.ncols()
    }

    /// Identity mixing: every dimension used, nothing freed.
    pub fn identity(dims: usize) -> MixingMatrix {
        MixingMatrix { p: identity(dims), kappa: 1.0, family: MixingFamily::Fourier, freed_dims: 0 }
    }
}

/// Builds `P = [p_1 … p_S, κ·p_{S+1} … κ·p_{M_K}]` from an orthonormal DFT or
/// Hadamard basis. With κ = 0 the trailing `N_f` columns are dropped.
pub fn make_mixing_matrix(dims: usize, freed_dims: usize, kappa: f64, family: MixingFamily) -> Result<MixingMatrix> {
    if !(0.0..=1.0).contains(&kappa) || kappa.is_nan() {
        return Err(Error::InvalidKappa(kappa));
    }
    if freed_dims >= dims {
        return Err(Error::DimensionMismatch { expected: dims.saturating_sub(1), got: freed_dims });
    }
    let base = match family {
        MixingFamily::Fourier => dft(dims),
        MixingFamily::Hadamard => hadamard(dims).ok_or(Error::HadamardUnavailable(dims))?,
    };
    let kept = dims - freed_dims;
    let p = if kappa == 0.0 {
        base.columns(0, kept).into_owned()
    } else {
        let mut p = base;
        for j in kept..dims {
            let scaled = p.column(j) * real(kappa);
            p.set_column(j, &scaled);
        }
        p
    };
    Ok(MixingMatrix { p, kappa, family, freed_dims })
}

/// ZF precoders for one BS.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet {
    /// `C̄ᴴ(C̄C̄ᴴ)⁻¹`, one column per stream, in the reduced space.
    pub raw: CMatrix,
    /// Unit-norm transmit vectors `P·v̄/‖P·v̄‖` of length `M_K`.
    pub effective: Vec<CVector>,
    /// Reduced-space pre-images of `effective`: `v̄/‖P·v̄‖`.
    pub reduced: Vec<CVector>,
}

impl PrecoderSet {
    pub fn len(&self) -> usize {
        self.effective.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effective.is_empty()
    }
}

/// Stacks directions as the rows `c_kᴴ` of `C̄`.
pub fn direction_rows(directions: &[&CVector]) -> CMatrix {
    let cols = directions.first().map_or(0, |d| d.len());
    let mut c_bar = CMatrix::zeros(directions.len(), cols);
    for (k, d) in directions.iter().enumerate() {
        c_bar.set_row(k, &d.adjoint());
    }
    c_bar
}

/// Pseudo-inverse precoding over the scheduled direction rows `C̄`, mapped
/// through `P` and normalised to unit transmit power per stream.
///
/// Rejects Gram matrices `C̄C̄ᴴ` whose condition number exceeds `cond_max`.
pub fn zf_beamform(c_bar: &CMatrix, mixing: &MixingMatrix, cond_max: f64) -> Result<PrecoderSet> {
    if c_bar.ncols() != mixing.cols() {
        return Err(Error::DimensionMismatch { expected: mixing.cols(), got: c_bar.ncols() });
    }
    let s = c_bar.nrows();
    let gram = c_bar * c_bar.adjoint();
    let cond = hermitian_condition(&gram);
    if !(cond <= cond_max) {
        return Err(Error::IllConditioned(cond));
    }
    let inv = hpd_solve(&gram, &identity(s)).ok_or(Error::IllConditioned(cond))?;
    let raw = c_bar.adjoint() * inv;

    let mut effective = Vec::with_capacity(s);
    let mut reduced = Vec::with_capacity(s);
    for k in 0..s {
        let v: CVector = raw.column(k).into_owned();
        let pv = &mixing.p * &v;
        let norm = pv.norm();
        if norm == 0.0 {
            return Err(Error::IllConditioned(f64::INFINITY));
        }
        effective.push(pv / real(norm));
        reduced.push(v / real(norm));
    }
    Ok(PrecoderSet { raw, effective, reduced })
}

/// Gain of direction `c` through precoder `v`: `|⟨c, v⟩|²` in power mode,
/// `|⟨c, v⟩|` in amplitude mode.
pub fn precoder_cross_gain(c: &CVector, v: &CVector, mode: CrossGainMode) -> Result<f64> {
    if c.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: c.len(), got: v.len() });
    }
    let ip = inner(c, v).norm();
    Ok(match mode {
        CrossGainMode::Power => ip * ip,
        CrossGainMode::Amplitude => ip,
    })
}
