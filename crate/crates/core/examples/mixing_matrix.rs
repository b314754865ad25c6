//! Builds the shared transmit basis for a few κ values and prints its Gram
//! matrix diagonal, showing how the freed dimension is weighted.

use iasim::linalg::hermitian_eigen;
use iasim::netchan::MixingFamily;
use iasim::precoding::make_mixing_matrix;

fn main() -> iasim::Result<()> {
    for family in [MixingFamily::Fourier, MixingFamily::Hadamard] {
        for kappa in [0.0, 0.4, 1.0] {
            let m = make_mixing_matrix(4, 1, kappa, family)?;
            let gram = m.p.adjoint() * &m.p;
            let (values, _) = hermitian_eigen(&gram);
            let sv: Vec<String> = values.iter().map(|v| format!("{:.3}", v.sqrt())).collect();
            println!("{family:?} kappa={kappa:<4} P is {}x{}  singular values [{}]", m.dims(), m.cols(), sv.join(", "));
        }
    }
    match make_mixing_matrix(6, 1, 0.0, MixingFamily::Hadamard) {
        Err(e) => println!("M_K=6 Hadamard: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
