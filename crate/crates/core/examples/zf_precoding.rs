//! Zero-forcing over three random reduced-space directions: the residual
//! of `C̄·V̄ = I`, the per-stream cross gains, and the rejection of
//! nearly collinear directions.

use iasim::linalg::{frobenius, identity, real, CVector};
use iasim::netchan::{complex_gaussian, CrossGainMode, MixingFamily};
use iasim::precoding::{direction_rows, make_mixing_matrix, precoder_cross_gain, zf_beamform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn unit(rng: &mut ChaCha8Rng, n: usize) -> CVector {
    let v: CVector = complex_gaussian(n, 1, rng).column(0).into_owned();
    let norm = v.norm();
    v / real(norm)
}

fn main() -> iasim::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mixing = make_mixing_matrix(4, 1, 0.0, MixingFamily::Fourier)?;
    let dirs: Vec<CVector> = (0..3).map(|_| unit(&mut rng, mixing.cols())).collect();
    let rows = direction_rows(&dirs.iter().collect::<Vec<_>>());
    let set = zf_beamform(&rows, &mixing, 1e8)?;
    println!("||C V - I||_F = {:.2e}", frobenius(&(&rows * &set.raw - identity(3))));
    for (k, (c, v)) in dirs.iter().zip(&set.reduced).enumerate() {
        let x = precoder_cross_gain(c, v, CrossGainMode::Power)?;
        println!("stream {k}: |P v| = {:.3}  cross gain {x:.3}", set.effective[k].norm());
    }

    let almost = &dirs[0] + unit(&mut rng, mixing.cols()) * real(1e-6);
    let almost = &almost / real(almost.norm());
    let rows = direction_rows(&[&dirs[0], &almost]);
    match zf_beamform(&rows, &mixing, 1e8) {
        Err(e) => println!("nearly collinear pair: {e}"),
        Ok(_) => println!("nearly collinear pair accepted"),
    }
    Ok(())
}
