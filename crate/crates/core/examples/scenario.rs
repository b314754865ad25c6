//! One geometry, every scheme, 50 transmissions: mean delivered SE of the
//! centre cell and the scheduler cost per scheme.

use iasim::simharness::{run_scenario, RunSettings, Scheme, SchemeSpec};
use iasim::NetworkConfig;

fn main() -> iasim::Result<()> {
    let config = NetworkConfig { antennas: 2, subcarriers: 2, rho: 0.3, ..NetworkConfig::default() };
    let settings = RunSettings { transmissions: 50, record_all: false };
    let schemes = [
        SchemeSpec::new(Scheme::IaZf),
        SchemeSpec::ia_mmse(0.0),
        SchemeSpec::ia_mmse(0.4),
        SchemeSpec::ia_mmse(1.0),
        SchemeSpec::new(Scheme::Mf),
        SchemeSpec::new(Scheme::OfdmRef),
    ];
    for spec in schemes {
        let res = run_scenario(&config, spec, 42, settings)?;
        let se = res.mean_se();
        let mean = se.iter().sum::<f64>() / se.len() as f64;
        println!(
            "{:<12} mean SE {mean:.3} bits/s/Hz, {} ZF calls, peak realised rate {:.2}",
            spec.to_text(),
            res.counters.zf_invocations,
            res.max_realized_rate
        );
    }
    Ok(())
}
