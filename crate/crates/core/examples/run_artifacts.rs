//! Writes a small campaign's CSV outputs and manifest to a directory, then
//! compares the schemes bin by bin against the OFDM reference.
//!
//! ```text
//! cargo run --release --example run_artifacts -- [out_dir]
//! ```

use std::path::PathBuf;

use iasim::cli;

fn main() -> iasim::Result<()> {
    let out: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "iasim-out".into()).into();
    let mut plan = cli::parse_config_str("M = 2\nK = 2\nrho = 0.3\nscenarios = 4\ntransmissions = 10\n")?;
    plan.campaign.bin_width_db = 2.0;
    let manifest = cli::run(&plan, &out)?;
    for o in &manifest.outputs {
        println!("{}  {}", &o.sha256[..16], out.join(&o.path).display());
    }
    let table = cli::read_se_csv(&out.join(cli::SE_FILE))?;
    let deltas = cli::compare(&[table], Some("OFDM_REF"))?;
    print!("{}", String::from_utf8_lossy(&cli::deltas_csv(&deltas)?));
    debug_assert_eq!(cli::parse_config_str(&cli::emit_config(&plan))?, plan);
    Ok(())
}
