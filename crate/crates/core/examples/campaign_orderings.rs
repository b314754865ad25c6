//! Runs the correlated (M=2, K=2, ρ=0.3) and uncorrelated (M=4, K=1) desk
//! campaigns and prints mean spectral efficiency per geometry bin.
//!
//! ```text
//! cargo run --release --example campaign_orderings -- [seed]
//! ```

use iasim::simharness::{run_campaign, CampaignSettings, Scheme, SchemeSpec};
use iasim::NetworkConfig;

fn print_table(title: &str, config: &NetworkConfig, seed: u64) -> iasim::Result<()> {
    let schemes = [SchemeSpec::ia_mmse(0.0), SchemeSpec::new(Scheme::Mf), SchemeSpec::new(Scheme::OfdmRef)];
    let settings = CampaignSettings { base_seed: seed, ..CampaignSettings::default() };
    let summary = run_campaign(config, &schemes, &settings)?;
    println!("== {title}");
    println!("{:>8} {:>6} {:>9} {:>9} {:>9}", "bin_db", "n_ue", "IA_MMSE", "MF", "OFDM");
    let cols: Vec<_> = (0..schemes.len()).map(|k| summary.se_bins_for(k)).collect();
    for (i, row) in cols[0].iter().enumerate() {
        println!(
            "{:>8.1} {:>6} {:>9.3} {:>9.3} {:>9.3}",
            row.sinr_bin_db, row.n_ue, row.mean_se, cols[1][i].mean_se, cols[2][i].mean_se
        );
    }
    Ok(())
}

fn main() -> iasim::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let correlated = NetworkConfig { antennas: 2, subcarriers: 2, rho: 0.3, ..NetworkConfig::default() };
    print_table("correlated M=2 K=2 rho=0.3", &correlated, seed)?;
    let uncorrelated = NetworkConfig { antennas: 4, subcarriers: 1, rho: 0.0, ..NetworkConfig::default() };
    print_table("uncorrelated M=4 K=1", &uncorrelated, seed)?;
    Ok(())
}
