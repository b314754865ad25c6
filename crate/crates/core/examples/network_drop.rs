//! Drops users on the 7-cell layout and prints the geometry SINR
//! distribution of the centre cell over many seeds.

use iasim::netchan::{drop_users, geometry_sinr};
use iasim::NetworkConfig;

fn main() {
    let config = NetworkConfig::default();
    let mut sinr = Vec::new();
    for seed in 0..200 {
        let geo = drop_users(&config, seed);
        let values = geometry_sinr(&geo, &config);
        sinr.extend((0..geo.n_ue()).filter(|&u| geo.bs_site[geo.serving_bs[u]] == 0).map(|u| values[u]));
    }
    sinr.sort_by(f64::total_cmp);
    println!("{} centre-cell UEs", sinr.len());
    for p in [0.05, 0.25, 0.5, 0.75, 0.95] {
        println!("  {:>3.0}% : {:>6.2} dB", p * 100.0, sinr[((sinr.len() - 1) as f64 * p) as usize]);
    }
}
