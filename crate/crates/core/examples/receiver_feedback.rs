//! One UE facing one strong interferer: the whitened eigen-directions it
//! would feed back, and the ZF null decoder that removes the interferer.

use iasim::netchan::{complex_gaussian, MixingFamily};
use iasim::precoding::make_mixing_matrix;
use iasim::receiver::{build_feedback, equivalent_channel, in_covariance, zf_null_decoder, InterfererPrecoders};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> iasim::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mixing = make_mixing_matrix(4, 1, 0.0, MixingFamily::Fourier)?;
    let h = complex_gaussian(4, 4, &mut rng);
    let h_int = complex_gaussian(4, 4, &mut rng);
    let (power, streams, noise) = (1.0, 3, 1e-2);

    let phi = in_covariance(Some(&h_int), &mixing, InterfererPrecoders::Identity, power, streams, noise, 0.0);
    // whiten in units of the per-stream power so each gain is an SINR
    let g = equivalent_channel(&h, &mixing, &phi.scaled(streams as f64 / power));
    for e in build_feedback(0, &g, 3)? {
        println!("direction {} SINR {:.2} dB", e.rank, 10.0 * e.gain.log10());
    }

    let interference = &h_int * &mixing.p;
    let u = zf_null_decoder(std::slice::from_ref(&interference), 1, None)?;
    println!("null decoder residual |u^H H_int P| = {:.2e}", (u.adjoint() * &interference).norm());
    Ok(())
}
