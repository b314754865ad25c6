//! Configuration files, campaign runs that write CSV artefacts, and the
//! per-bin comparison of `se_vs_sinr.csv` files.
//!
//! The configuration is one flat TOML table. Every key is optional; omitted
//! keys take the defaults of [`NetworkConfig::default`] and
//! [`CampaignSettings::default`].

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::netchan::{
    CrossGainMode, InterfererCovariance, MixingFamily, NetworkConfig, PathLossModel, SchedulerKind, SinrConvention,
    UserDrop,
};
use crate::simharness::{run_campaign, CampaignSettings, CampaignSummary, Scheme, SchemeSpec};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const SE_FILE: &str = "se_vs_sinr.csv";
pub const CDF_FILE: &str = "geometry_cdf.csv";
pub const COUNTERS_FILE: &str = "counters.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";

/// Scenario count and slot count of the full-scale protocol.
pub const FULL_SCALE: (usize, usize) = (100, 100);

/// On-disk layout of the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigFile {
    n_cells: usize,
    sectors_per_cell: usize,
    users_per_cell: usize,
    #[serde(alias = "M")]
    antennas: usize,
    #[serde(alias = "K")]
    subcarriers: usize,
    #[serde(alias = "N_f")]
    freed_dims: usize,
    kappa: f64,
    tx_power: f64,
    noise_power: f64,
    rho: f64,
    #[serde(alias = "L", skip_serializing_if = "Option::is_none")]
    feedback_dirs: Option<usize>,
    #[serde(alias = "S", skip_serializing_if = "Option::is_none")]
    streams: Option<usize>,
    r_min: f64,
    rate_cap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    inr_rem: Option<f64>,
    n_ri: usize,
    isd: f64,
    pathloss_g0: f64,
    pathloss_d0: f64,
    pathloss_exponent: f64,
    shadowing_db: f64,
    user_drop: UserDrop,
    mixing: MixingFamily,
    cross_gain: CrossGainMode,
    sinr_convention: SinrConvention,
    interferer_cov: InterfererCovariance,
    scheduler: SchedulerKind,
    exhaustive_budget: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_streams_per_ue: Option<usize>,
    freeze_fading: bool,
    zf_cond_max: f64,

    scenarios: usize,
    transmissions: usize,
    seed: u64,
    schemes: Vec<String>,
    bin_width_db: f64,
    parallel: bool,
}

impl Default for ConfigFile {
    fn default() -> Self {
        RunPlan::default().to_file()
    }
}

/// Everything a `run` needs: the network, the campaign shape and the
/// schemes to compare.
#[derive(Debug, Clone, PartialEq)]
pub struct RunPlan {
    pub config: NetworkConfig,
    pub campaign: CampaignSettings,
    pub schemes: Vec<SchemeSpec>,
}

impl Default for RunPlan {
    fn default() -> Self {
        RunPlan {
            config: NetworkConfig::default(),
            campaign: CampaignSettings::default(),
            schemes: default_schemes(),
        }
    }
}

pub fn default_schemes() -> Vec<SchemeSpec> {
    vec![SchemeSpec::ia_mmse(0.0), SchemeSpec::new(Scheme::Mf), SchemeSpec::new(Scheme::OfdmRef)]
}

impl RunPlan {
    fn to_file(&self) -> ConfigFile {
        let c = &self.config;
        ConfigFile {
            n_cells: c.n_cells,
            sectors_per_cell: c.sectors_per_cell,
            users_per_cell: c.users_per_cell,
            antennas: c.antennas,
            subcarriers: c.subcarriers,
            freed_dims: c.freed_dims,
            kappa: c.kappa,
            tx_power: c.tx_power,
            noise_power: c.noise_power,
            rho: c.rho,
            feedback_dirs: c.feedback_dirs,
            streams: c.streams,
            r_min: c.r_min,
            rate_cap: c.rate_cap,
            inr_rem: c.inr_rem,
            n_ri: c.n_ri,
            isd: c.isd,
            pathloss_g0: c.propagation.g0,
            pathloss_d0: c.propagation.d0,
            pathloss_exponent: c.propagation.exponent,
            shadowing_db: c.propagation.shadowing_db,
            user_drop: c.user_drop,
            mixing: c.mixing,
            cross_gain: c.cross_gain,
            sinr_convention: c.sinr_convention,
            interferer_cov: c.interferer_cov,
            scheduler: c.scheduler,
            exhaustive_budget: c.exhaustive_budget,
            max_streams_per_ue: c.max_streams_per_ue,
            freeze_fading: c.freeze_fading,
            zf_cond_max: c.zf_cond_max,
            scenarios: self.campaign.n_scenarios,
            transmissions: self.campaign.transmissions,
            seed: self.campaign.base_seed,
            schemes: self.schemes.iter().map(SchemeSpec::to_text).collect(),
            bin_width_db: self.campaign.bin_width_db,
            parallel: self.campaign.parallel,
        }
    }

    fn from_file(f: ConfigFile) -> Result<RunPlan> {
        let config = NetworkConfig {
            n_cells: f.n_cells,
            sectors_per_cell: f.sectors_per_cell,
            users_per_cell: f.users_per_cell,
            antennas: f.antennas,
            subcarriers: f.subcarriers,
            freed_dims: f.freed_dims,
            kappa: f.kappa,
            tx_power: f.tx_power,
            noise_power: f.noise_power,
            rho: f.rho,
            feedback_dirs: f.feedback_dirs,
            streams: f.streams,
            r_min: f.r_min,
            rate_cap: f.rate_cap,
            inr_rem: f.inr_rem,
            n_ri: f.n_ri,
            isd: f.isd,
            propagation: PathLossModel {
                g0: f.pathloss_g0,
                d0: f.pathloss_d0,
                exponent: f.pathloss_exponent,
                shadowing_db: f.shadowing_db,
            },
            user_drop: f.user_drop,
            mixing: f.mixing,
            cross_gain: f.cross_gain,
            sinr_convention: f.sinr_convention,
            interferer_cov: f.interferer_cov,
            scheduler: f.scheduler,
            exhaustive_budget: f.exhaustive_budget,
            max_streams_per_ue: f.max_streams_per_ue,
            freeze_fading: f.freeze_fading,
            zf_cond_max: f.zf_cond_max,
        };
        let schemes = f.schemes.iter().map(|s| SchemeSpec::parse(s)).collect::<Result<Vec<_>>>()?;
        let plan = RunPlan {
            config,
            campaign: CampaignSettings {
                n_scenarios: f.scenarios,
                base_seed: f.seed,
                transmissions: f.transmissions,
                bin_width_db: f.bin_width_db,
                parallel: f.parallel,
            },
            schemes,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.schemes.is_empty() {
            return Err(Error::Validation("at least one scheme required".into()));
        }
        for s in &self.schemes {
            s.effective_config(&self.config).validate()?;
        }
        if self.campaign.n_scenarios == 0 {
            return Err(Error::Validation("scenarios ≥ 1 required".into()));
        }
        if self.campaign.transmissions == 0 {
            return Err(Error::Validation("transmissions ≥ 1 required".into()));
        }
        if !(self.campaign.bin_width_db > 0.0 && self.campaign.bin_width_db.is_finite()) {
            return Err(Error::Validation(format!("bin_width_db must be positive, got {}", self.campaign.bin_width_db)));
        }
        Ok(())
    }

    /// Inclusive seed range covered by the campaign.
    pub fn seed_range(&self) -> (u64, u64) {
        let first = self.campaign.base_seed;
        (first, first + self.campaign.n_scenarios as u64 - 1)
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses configuration text. Unknown keys are rejected.
pub fn parse_config_str(text: &str) -> Result<RunPlan> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Parse {
        location: e.span().map(|s| format!("line {}", line_of(text, s.start))),
        message: e.message().to_string(),
    })?;
    RunPlan::from_file(file)
}

pub fn parse_config(path: &Path) -> Result<RunPlan> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config_str(&text).map_err(|e| match e {
        Error::Parse { location, message } => Error::Parse {
            location: Some(match location {
                Some(l) => format!("{}:{l}", path.display()),
                None => path.display().to_string(),
            }),
            message,
        },
        other => other,
    })
}

/// Serialises a plan in the same flat format [`parse_config_str`] reads.
pub fn emit_config(plan: &RunPlan) -> String {
    toml::to_string(&plan.to_file()).expect("flat config always serialises")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub path: String,
    pub sha256: String,
}

/// Record of one `run`. The manifest lists every artefact with its digest,
/// so each output file is tied to the run that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub schemes: Vec<String>,
    pub seed_first: u64,
    pub seed_last: u64,
    pub wall_clock_s: f64,
    pub outputs: Vec<OutputRecord>,
    pub config: toml::Table,
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

fn render<F: FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>>(header: &[&str], body: F) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    body(&mut w)?;
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

pub fn se_csv(summary: &CampaignSummary) -> Result<Vec<u8>> {
    render(&["scheme", "kappa", "sinr_bin_db", "mean_se_bps_hz", "n_ue"], |w| {
        for b in summary.se_bins() {
            w.write_record([b.scheme, fmt(b.kappa), fmt(b.sinr_bin_db), fmt(b.mean_se), b.n_ue.to_string()])?;
        }
        Ok(())
    })
}

pub fn cdf_csv(summary: &CampaignSummary) -> Result<Vec<u8>> {
    render(&["sinr_db", "cdf"], |w| {
        for (v, p) in summary.geometry_cdf() {
            w.write_record([fmt(v), fmt(p)])?;
        }
        Ok(())
    })
}

pub fn counters_csv(summary: &CampaignSummary) -> Result<Vec<u8>> {
    let header = ["scheme", "kappa", "schedule_calls", "candidates", "zf_invocations", "subsets_evaluated", "greedy_bound"];
    render(&header, |w| {
        for (label, kappa, c) in summary.counters() {
            w.write_record([
                label,
                fmt(kappa),
                c.schedule_calls.to_string(),
                c.candidates.to_string(),
                c.zf_invocations.to_string(),
                c.subsets_evaluated.to_string(),
                fmt(c.greedy_bound),
            ])?;
        }
        Ok(())
    })
}

/// Runs the campaign and writes the three CSVs plus `manifest.toml` into
/// `out_dir`, creating it if needed.
pub fn run(plan: &RunPlan, out_dir: &Path) -> Result<RunManifest> {
    plan.validate()?;
    let start = Instant::now();
    let summary = run_campaign(&plan.config, &plan.schemes, &plan.campaign)?;
    fs::create_dir_all(out_dir)?;
    let mut outputs = Vec::new();
    for (name, bytes) in [(SE_FILE, se_csv(&summary)?), (CDF_FILE, cdf_csv(&summary)?), (COUNTERS_FILE, counters_csv(&summary)?)] {
        fs::write(out_dir.join(name), &bytes)?;
        outputs.push(OutputRecord { path: name.to_string(), sha256: hex::encode(Sha256::digest(&bytes)) });
    }
    let (seed_first, seed_last) = plan.seed_range();
    let manifest = RunManifest {
        version: VERSION.to_string(),
        schemes: plan.schemes.iter().map(SchemeSpec::to_text).collect(),
        seed_first,
        seed_last,
        wall_clock_s: start.elapsed().as_secs_f64(),
        outputs,
        config: toml::Table::try_from(plan.to_file()).expect("flat config is a table"),
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(out_dir.join(MANIFEST_FILE), text)?;
    Ok(manifest)
}

/// Reads a manifest written by [`run`] back into a plan.
pub fn plan_from_manifest(path: &Path) -> Result<RunPlan> {
    let text = fs::read_to_string(path)?;
    let manifest: RunManifest = toml::from_str(&text).map_err(|e| Error::Parse {
        location: Some(path.display().to_string()),
        message: e.message().to_string(),
    })?;
    parse_config_str(&toml::to_string(&manifest.config).map_err(|e| Error::Io(e.to_string()))?)
}

/// One row of `se_vs_sinr.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeRow {
    pub scheme: String,
    pub kappa: f64,
    pub sinr_bin_db: f64,
    pub mean_se_bps_hz: f64,
    pub n_ue: usize,
}

impl SeRow {
    /// `IA_MMSE(κ=0)`-style label that separates κ variants.
    pub fn label(&self) -> String {
        format!("{}(k={})", self.scheme, self.kappa)
    }
}

pub fn read_se_csv(path: &Path) -> Result<Vec<SeRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    reader
        .deserialize()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e| Error::Parse { location: Some(format!("{} row {}", path.display(), i + 2)), message: e.to_string() })
        })
        .collect()
}

/// Width and offset of the bin grid spanned by `rows`, if it has at least
/// two distinct bins.
fn grid(rows: &[SeRow]) -> Option<(f64, f64)> {
    let mut edges: Vec<f64> = rows.iter().map(|r| r.sinr_bin_db).collect();
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let width = edges.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    if !width.is_finite() {
        return None;
    }
    Some((width, edges[0].rem_euclid(width)))
}

fn check_grids(a: &[SeRow], b: &[SeRow]) -> Result<()> {
    if let (Some((wa, oa)), Some((wb, ob))) = (grid(a), grid(b)) {
        let tol = 1e-9 * wa.max(wb);
        let offset_gap = (oa - ob).abs();
        if (wa - wb).abs() > tol || (offset_gap > tol && (offset_gap - wa).abs() > tol) {
            return Err(Error::BinMismatch(format!("width {wa} offset {oa} vs width {wb} offset {ob}")));
        }
    }
    Ok(())
}

/// `candidate − reference` in one bin.
#[derive(Debug, Clone, PartialEq)]
pub struct BinDelta {
    pub sinr_bin_db: f64,
    pub reference: String,
    pub candidate: String,
    pub reference_se: f64,
    pub candidate_se: f64,
    pub delta: f64,
}

impl BinDelta {
    pub fn ordering(&self) -> &'static str {
        if self.delta > 0.0 {
            "candidate"
        } else if self.delta < 0.0 {
            "reference"
        } else {
            "tie"
        }
    }
}

fn by_label(rows: &[SeRow]) -> BTreeMap<String, BTreeMap<i64, f64>> {
    let mut out: BTreeMap<String, BTreeMap<i64, f64>> = BTreeMap::new();
    for r in rows {
        // Keys on the bin edge in micro-dB to make float edges comparable.
        out.entry(r.label()).or_default().insert((r.sinr_bin_db * 1e6).round() as i64, r.mean_se_bps_hz);
    }
    out
}

fn deltas(reference: (&str, &BTreeMap<i64, f64>), candidate: (&str, &BTreeMap<i64, f64>)) -> Vec<BinDelta> {
    reference
        .1
        .iter()
        .filter_map(|(bin, &r)| {
            let &c = candidate.1.get(bin)?;
            Some(BinDelta {
                sinr_bin_db: *bin as f64 / 1e6,
                reference: reference.0.to_string(),
                candidate: candidate.0.to_string(),
                reference_se: r,
                candidate_se: c,
                delta: c - r,
            })
        })
        .collect()
}

/// Compares schemes bin by bin.
///
/// With one table every scheme is compared against `reference` (default:
/// the first scheme in the file). With several tables, each scheme of each
/// later table is compared against the same scheme in the first table.
pub fn compare(tables: &[Vec<SeRow>], reference: Option<&str>) -> Result<Vec<BinDelta>> {
    let Some(first) = tables.first() else {
        return Err(Error::Validation("compare needs at least one table".into()));
    };
    for other in &tables[1..] {
        check_grids(first, other)?;
    }
    let base = by_label(first);
    let mut out = Vec::new();
    if tables.len() == 1 {
        let ref_label = match reference {
            Some(name) => first
                .iter()
                .map(SeRow::label)
                .find(|l| *l == name || l.starts_with(&format!("{name}(")))
                .ok_or_else(|| Error::Validation(format!("reference scheme `{name}` not in table")))?,
            None => match first.first() {
                Some(r) => r.label(),
                None => return Ok(out),
            },
        };
        let mut order: Vec<String> = Vec::new();
        for r in first {
            let l = r.label();
            if l != ref_label && !order.contains(&l) {
                order.push(l);
            }
        }
        for label in order {
            out.extend(deltas((&ref_label, &base[&ref_label]), (&label, &base[&label])));
        }
    } else {
        for other in &tables[1..] {
            let cand = by_label(other);
            for (label, bins) in &base {
                if let Some(c) = cand.get(label) {
                    out.extend(deltas((label, bins), (label, c)));
                }
            }
        }
    }
    Ok(out)
}

pub fn deltas_csv(rows: &[BinDelta]) -> Result<Vec<u8>> {
    render(&["sinr_bin_db", "reference", "candidate", "reference_se", "candidate_se", "delta", "better"], |w| {
        for d in rows {
            w.write_record([
                fmt(d.sinr_bin_db),
                d.reference.clone(),
                d.candidate.clone(),
                fmt(d.reference_se),
                fmt(d.candidate_se),
                fmt(d.delta),
                d.ordering().to_string(),
            ])?;
        }
        Ok(())
    })
}

/// Overrides applied on top of a parsed configuration by `run`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOverrides {
    pub scenarios: Option<usize>,
    pub transmissions: Option<usize>,
    pub seed: Option<u64>,
    pub schemes: Vec<String>,
    pub full_scale: bool,
}

impl RunOverrides {
    pub fn apply(&self, plan: &mut RunPlan) -> Result<()> {
        if self.full_scale {
            (plan.campaign.n_scenarios, plan.campaign.transmissions) = FULL_SCALE;
        }
        if let Some(n) = self.scenarios {
            plan.campaign.n_scenarios = n;
        }
        if let Some(t) = self.transmissions {
            plan.campaign.transmissions = t;
        }
        if let Some(s) = self.seed {
            plan.campaign.base_seed = s;
        }
        if !self.schemes.is_empty() {
            plan.schemes = self.schemes.iter().map(|s| SchemeSpec::parse(s)).collect::<Result<_>>()?;
        }
        plan.validate()
    }
}

/// Paths of the files a `run` writes into `out_dir`.
pub fn output_paths(out_dir: &Path) -> [PathBuf; 4] {
    [SE_FILE, CDF_FILE, COUNTERS_FILE, MANIFEST_FILE].map(|f| out_dir.join(f))
}
