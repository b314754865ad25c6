//! Slot-level simulation and Monte-Carlo campaigns.
//!
//! A scenario fixes one geometry and runs `T` transmissions. In every slot
//! fresh fading is drawn, each UE computes its feedback, every BS schedules
//! and precodes, and the realised SINR of each stream is evaluated against
//! the actual transmissions of all BSs. Only users attached to the centre
//! cell are recorded, but every cell schedules and transmits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, real, CMatrix, CVector};
use crate::netchan::{self, ChannelSet, Geometry, InterfererCovariance, NetworkConfig, SinrConvention};
use crate::precoding::{make_mixing_matrix, MixingMatrix};
use crate::receiver::{
    build_feedback, equivalent_channel, final_decoder, in_covariance, init_vector, mmse_decoder, zf_null_decoder,
    FeedbackEntry, InterfererPrecoders,
};
use crate::rng::derive_seed;
use crate::scheduler::{
    self, greedy_zf_bound, update_pf_state, CandidatePool, PfState, RateModel, ScheduleDecision, SchedulerContext,
};

/// Transmission scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    /// Null the strongest interferer, one stream per UE.
    #[serde(rename = "IA_ZF")]
    IaZf,
    /// Whitened multi-direction feedback through the mixing matrix.
    #[serde(rename = "IA_MMSE")]
    IaMmse,
    /// Full-dimension transmission (no freed dimensions) with whitened
    /// eigen feedback and the same scheduler.
    #[serde(rename = "MF")]
    Mf,
    /// Single-user eigenmode transmission, interference treated as noise.
    #[serde(rename = "OFDM_REF")]
    OfdmRef,
}

impl Scheme {
    pub fn label(&self) -> &'static str {
        match self {
            Scheme::IaZf => "IA_ZF",
            Scheme::IaMmse => "IA_MMSE",
            Scheme::Mf => "MF",
            Scheme::OfdmRef => "OFDM_REF",
        }
    }

    pub fn parse(name: &str) -> Result<Scheme> {
        match name.trim().to_ascii_uppercase().as_str() {
            "IA_ZF" => Ok(Scheme::IaZf),
            "IA_MMSE" => Ok(Scheme::IaMmse),
            "MF" => Ok(Scheme::Mf),
            "OFDM_REF" | "OFDM" => Ok(Scheme::OfdmRef),
            other => Err(Error::Validation(format!("unknown scheme `{other}`"))),
        }
    }
}

/// A scheme plus an optional κ override (IA schemes only).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeSpec {
    pub scheme: Scheme,
    pub kappa: Option<f64>,
}

impl SchemeSpec {
    pub fn new(scheme: Scheme) -> SchemeSpec {
        SchemeSpec { scheme, kappa: None }
    }

    pub fn ia_mmse(kappa: f64) -> SchemeSpec {
        SchemeSpec { scheme: Scheme::IaMmse, kappa: Some(kappa) }
    }

    /// Parses `NAME` or `NAME:kappa`.
    pub fn parse(text: &str) -> Result<SchemeSpec> {
        let (name, kappa) = match text.split_once(':') {
            Some((n, k)) => {
                let k: f64 = k
                    .trim()
                    .parse()
                    .map_err(|_| Error::Validation(format!("bad kappa in scheme `{text}`")))?;
                (n, Some(k))
            }
            None => (text, None),
        };
        let scheme = Scheme::parse(name)?;
        if kappa.is_some() && matches!(scheme, Scheme::Mf | Scheme::OfdmRef) {
            return Err(Error::Validation(format!("scheme {} takes no kappa", scheme.label())));
        }
        Ok(SchemeSpec { scheme, kappa })
    }

    /// Canonical text form, accepted by [`SchemeSpec::parse`].
    pub fn to_text(&self) -> String {
        match self.kappa {
            Some(k) => format!("{}:{}", self.scheme.label(), k),
            None => self.scheme.label().to_string(),
        }
    }

    /// Scheme-specific view of the configuration.
    pub fn effective_config(&self, base: &NetworkConfig) -> NetworkConfig {
        let mut cfg = base.clone();
        let mk = cfg.dims();
        match self.scheme {
            Scheme::IaZf | Scheme::IaMmse => {
                if let Some(k) = self.kappa {
                    cfg.kappa = k;
                }
            }
            Scheme::Mf | Scheme::OfdmRef => {
                cfg.kappa = 1.0;
                cfg.freed_dims = 0;
                cfg.streams = Some(mk);
                cfg.feedback_dirs = Some(mk);
            }
        }
        if self.scheme == Scheme::IaZf {
            cfg.feedback_dirs = Some(1);
        }
        cfg
    }

    /// κ reported alongside results.
    pub fn reported_kappa(&self, base: &NetworkConfig) -> f64 {
        self.effective_config(base).kappa
    }
}

/// What one BS sends in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Transmission {
    pub bs: usize,
    /// Receiving UE of each stream.
    pub ues: Vec<usize>,
    /// Unit-norm transmit vectors (length `M_K`).
    pub precoders: Vec<CVector>,
    /// Unit-norm receive filter of each stream.
    pub decoders: Vec<CVector>,
    /// Scheduler's rate estimate per stream (unweighted, capped).
    pub estimated_rate: Vec<f64>,
    /// PF weight used for each stream.
    pub weights: Vec<f64>,
}

impl Transmission {
    fn empty(bs: usize) -> Transmission {
        Transmission {
            bs,
            ues: Vec::new(),
            precoders: Vec::new(),
            decoders: Vec::new(),
            estimated_rate: Vec::new(),
            weights: Vec::new(),
        }
    }
}

/// Realised power terms and rate of one stream.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamRealization {
    pub bs: usize,
    pub ue: usize,
    pub desired: f64,
    pub intra: f64,
    /// Inter-cell interference by source BS (0 for the serving BS).
    pub inter: Vec<f64>,
    pub noise: f64,
    pub sinr: f64,
    pub rate: f64,
    pub estimated_rate: f64,
}

/// Evaluates the post-combining SINR of every scheduled stream against the
/// actual transmissions of all BSs, each stream carrying power `p/S`.
/// Returns per-stream details and the delivered bits per UE.
pub fn realize_rates(
    transmissions: &[Transmission],
    channels: &ChannelSet,
    config: &NetworkConfig,
    n_ue: usize,
) -> (Vec<StreamRealization>, Vec<f64>) {
    let per_stream = config.tx_power / config.stream_count() as f64;
    let n_bs = transmissions.len();
    let mut out = Vec::new();
    let mut delivered = vec![0.0; n_ue];
    for tx in transmissions {
        for (k, (&ue, u)) in tx.ues.iter().zip(&tx.decoders).enumerate() {
            let power_through = |bs: usize, v: &CVector| -> f64 {
                let h = channels.get(ue, bs);
                per_stream * u.dotc(&(h * v)).norm_sqr()
            };
            let desired = power_through(tx.bs, &tx.precoders[k]);
            let intra: f64 = tx
                .precoders
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != k)
                .map(|(_, v)| power_through(tx.bs, v))
                .sum();
            let mut inter = vec![0.0; n_bs];
            for other in transmissions.iter().filter(|o| o.bs != tx.bs) {
                inter[other.bs] = other.precoders.iter().map(|v| power_through(other.bs, v)).sum();
            }
            let noise = config.noise_power * u.norm_squared();
            let sinr = desired / (noise + intra + inter.iter().sum::<f64>());
            let rate = (1.0 + sinr).log2().min(config.rate_cap);
            delivered[ue] += rate;
            out.push(StreamRealization {
                bs: tx.bs,
                ue,
                desired,
                intra,
                inter,
                noise,
                sinr,
                rate,
                estimated_rate: tx.estimated_rate[k],
            });
        }
    }
    (out, delivered)
}

/// Result of one simulated slot.
#[derive(Debug, Clone)]
pub struct SlotOutcome {
    pub transmissions: Vec<Transmission>,
    pub realizations: Vec<StreamRealization>,
    /// Delivered bits per UE (all UEs).
    pub delivered: Vec<f64>,
    /// Per-BS scheduler decisions (`None` for BSs without users or for the
    /// OFDM reference).
    pub decisions: Vec<Option<ScheduleDecision>>,
    /// Pool size per BS.
    pub pool_sizes: Vec<usize>,
}

/// Per-UE receive state kept between feedback and realisation.
enum UeDecoder {
    /// One decoder for the UE's single stream.
    Fixed(CVector),
    /// MMSE decoders built per chosen direction from this covariance.
    Whitened(crate::receiver::InCovariance),
}

/// One scheme running on one geometry.
pub struct Simulator {
    pub config: NetworkConfig,
    pub spec: SchemeSpec,
    pub mixing: MixingMatrix,
    pub geometry: Geometry,
    /// Residual interference per UE.
    pub inr_rem: Vec<f64>,
}

impl Simulator {
    pub fn new(base: &NetworkConfig, spec: SchemeSpec, geometry: Geometry) -> Result<Simulator> {
        let config = spec.effective_config(base);
        config.validate()?;
        let mixing = match spec.scheme {
            Scheme::OfdmRef => MixingMatrix::identity(config.dims()),
            _ => make_mixing_matrix(config.dims(), config.freed_dims, config.kappa, config.mixing)?,
        };
        let modelled = match spec.scheme {
            Scheme::IaZf => config.n_ri,
            Scheme::IaMmse | Scheme::Mf => 1,
            Scheme::OfdmRef => 0,
        };
        let inr_rem = (0..geometry.n_ue())
            .map(|ue| match config.inr_rem {
                Some(v) => v,
                None => {
                    let others = geometry.interferers_by_strength(ue);
                    let rest: f64 = others.iter().skip(modelled).map(|&b| geometry.avg_gain[ue][b]).sum();
                    config.tx_power * rest / config.subcarriers as f64
                }
            })
            .collect();
        Ok(Simulator { config, spec, mixing, geometry, inr_rem })
    }

    fn per_stream_power(&self) -> f64 {
        self.config.tx_power / self.config.stream_count() as f64
    }

    /// Normalisation applied to Φ before forming the equivalent channel.
    fn phi_scale(&self) -> f64 {
        match self.config.sinr_convention {
            SinrConvention::Normalized => 1.0 / self.per_stream_power(),
            SinrConvention::Literal => 1.0,
        }
    }

    fn context(&self) -> SchedulerContext<'_> {
        SchedulerContext {
            mixing: &self.mixing,
            rates: RateModel {
                rate_cap: self.config.rate_cap,
                cross_gain: self.config.cross_gain,
                convention: self.config.sinr_convention,
                power_per_stream: self.per_stream_power(),
            },
            cond_max: self.config.zf_cond_max,
            max_streams_per_ue: self.config.max_streams_per_ue,
            exhaustive_budget: self.config.exhaustive_budget,
        }
    }

    /// Feedback and receive state of one UE.
    fn ue_feedback(
        &self,
        ue: usize,
        channels: &ChannelSet,
        previous: Option<&[Transmission]>,
    ) -> Result<(Vec<FeedbackEntry>, UeDecoder)> {
        let geo = &self.geometry;
        let h = channels.get(ue, geo.serving_bs[ue]);
        let strongest = geo.strongest_interferer[ue];
        let precoders = match (self.config.interferer_cov, previous, strongest) {
            (InterfererCovariance::Previous, Some(prev), Some(n)) => InterfererPrecoders::Effective(&prev[n].precoders),
            _ => InterfererPrecoders::Identity,
        };
        let phi = in_covariance(
            strongest.map(|n| channels.get(ue, n)),
            &self.mixing,
            precoders,
            self.config.tx_power,
            self.config.stream_count(),
            self.config.noise_power,
            self.inr_rem[ue],
        );
        match self.spec.scheme {
            Scheme::IaMmse | Scheme::Mf => {
                let g = equivalent_channel(h, &self.mixing, &phi.scaled(self.phi_scale()));
                let fb = build_feedback(ue, &g, self.config.feedback_count())?;
                Ok((fb, UeDecoder::Whitened(phi)))
            }
            Scheme::IaZf => {
                let v0 = init_vector(h, &self.mixing, &phi);
                let desired = h * (&self.mixing.p * &v0);
                let nulled: Vec<CMatrix> = geo
                    .interferers_by_strength(ue)
                    .into_iter()
                    .take(self.config.n_ri)
                    .map(|b| channels.get(ue, b) * &self.mixing.p)
                    .collect();
                let u = if nulled.is_empty() {
                    mmse_decoder(&phi, h, &self.mixing, &v0)?
                } else {
                    match zf_null_decoder(&nulled, self.config.n_ri, Some(&desired)) {
                        Ok(u) => u,
                        Err(Error::NoNullSpace) => mmse_decoder(&phi, h, &self.mixing, &v0)?,
                        Err(e) => return Err(e),
                    }
                };
                // equivalent channel row uᴴHP, fed back as its conjugate
                let g: CVector = self.mixing.p.adjoint() * (h.adjoint() * &u);
                let gain_norm = g.norm();
                if gain_norm == 0.0 {
                    return Err(Error::ZeroDirection);
                }
                let in_power = u.dotc(&(&phi.phi * &u)).re;
                let lambda = gain_norm * gain_norm / (in_power * self.phi_scale());
                let entry = FeedbackEntry { ue, direction: g / real(gain_norm), gain: lambda, rank: 0 };
                Ok((vec![entry], UeDecoder::Fixed(u)))
            }
            Scheme::OfdmRef => unreachable!("OFDM reference has its own slot routine"),
        }
    }

    /// Runs one slot: feedback, scheduling at every BS, realisation.
    pub fn slot(&self, channels: &ChannelSet, pf: &PfState, previous: Option<&[Transmission]>) -> Result<SlotOutcome> {
        if self.spec.scheme == Scheme::OfdmRef {
            return self.ofdm_slot(channels, pf);
        }
        let n_bs = self.geometry.n_bs();
        let ctx = self.context();
        let s = self.config.stream_count();
        let mut transmissions = Vec::with_capacity(n_bs);
        let mut decisions = Vec::with_capacity(n_bs);
        let mut pool_sizes = Vec::with_capacity(n_bs);
        for bs in 0..n_bs {
            let users = self.geometry.users_of(bs);
            let mut entries = Vec::new();
            let mut decoders = Vec::new();
            for &ue in &users {
                let (fb, dec) = self.ue_feedback(ue, channels, previous)?;
                entries.extend(fb);
                decoders.push((ue, dec));
            }
            pool_sizes.push(entries.len());
            if entries.is_empty() {
                transmissions.push(Transmission::empty(bs));
                decisions.push(None);
                continue;
            }
            let pool = CandidatePool::new(entries);
            let decision = scheduler::schedule(self.config.scheduler, &pool, s, pf, &ctx)?;
            let mut tx = Transmission::empty(bs);
            for (k, &idx) in decision.chosen.iter().enumerate() {
                let entry = &pool.entries[idx];
                let dec = &decoders.iter().find(|(ue, _)| *ue == entry.ue).expect("decoder per UE").1;
                let u = match dec {
                    UeDecoder::Fixed(u) => u.clone(),
                    UeDecoder::Whitened(phi) => {
                        let h = channels.get(entry.ue, bs);
                        final_decoder(h, &self.mixing, phi, std::slice::from_ref(&entry.direction))?
                            .column(0)
                            .into_owned()
                    }
                };
                tx.ues.push(entry.ue);
                tx.precoders.push(decision.precoders.effective[k].clone());
                tx.decoders.push(u);
                tx.estimated_rate.push(decision.per_stream_rate[k]);
                tx.weights.push(pf.omega[entry.ue]);
            }
            transmissions.push(tx);
            decisions.push(Some(decision));
        }
        let (realizations, delivered) = realize_rates(&transmissions, channels, &self.config, self.geometry.n_ue());
        Ok(SlotOutcome { transmissions, realizations, delivered, decisions, pool_sizes })
    }

    fn ofdm_slot(&self, channels: &ChannelSet, pf: &PfState) -> Result<SlotOutcome> {
        let geo = &self.geometry;
        let n_bs = geo.n_bs();
        let transmissions: Vec<Transmission> =
            (0..n_bs).map(|bs| baseline_ofdm_bs(bs, geo, channels, &self.config, pf)).collect();
        let pool_sizes = (0..n_bs).map(|bs| geo.users_of(bs).len()).collect();
        let (realizations, delivered) = realize_rates(&transmissions, channels, &self.config, geo.n_ue());
        Ok(SlotOutcome { transmissions, realizations, delivered, decisions: vec![None; n_bs], pool_sizes })
    }
}

/// Eigenmodes of `HᴴH`: right singular vectors and squared singular values,
/// strongest first.
fn eigenmodes(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    hermitian_eigen(&(h.adjoint() * h))
}

/// OFDM reference at one BS: the PF-best UE is served alone on all `M_K`
/// eigenmodes with equal power. The rate estimate treats the mean inter-cell
/// interference per dimension as white noise.
pub fn baseline_ofdm_bs(bs: usize, geo: &Geometry, channels: &ChannelSet, config: &NetworkConfig, pf: &PfState) -> Transmission {
    let mk = config.dims();
    let per_stream = config.tx_power / config.stream_count() as f64;
    let model = RateModel::new(config.rate_cap);
    let mut best: Option<(f64, usize, Vec<f64>, CMatrix)> = None;
    for ue in geo.users_of(bs) {
        let h = channels.get(ue, bs);
        let (modes, vectors) = eigenmodes(h);
        let interference: f64 = (0..geo.n_bs())
            .filter(|&b| b != bs)
            .map(|b| config.tx_power * geo.avg_gain[ue][b] / config.subcarriers as f64)
            .sum();
        let rates: Vec<f64> =
            modes.iter().map(|&s| model.rate(per_stream * s.max(0.0) / (config.noise_power + interference), 1.0)).collect();
        let utility = pf.omega[ue] * rates.iter().sum::<f64>();
        if best.as_ref().is_none_or(|b| utility > b.0) {
            best = Some((utility, ue, rates, vectors));
        }
    }
    let mut tx = Transmission::empty(bs);
    if let Some((_, ue, rates, vectors)) = best {
        let h = channels.get(ue, bs);
        for k in 0..mk {
            let v: CVector = vectors.column(k).into_owned();
            let hv = h * &v;
            let norm = hv.norm();
            if norm == 0.0 {
                continue;
            }
            tx.ues.push(ue);
            tx.precoders.push(v);
            tx.decoders.push(hv / real(norm));
            tx.estimated_rate.push(rates[k]);
            tx.weights.push(pf.omega[ue]);
        }
    }
    tx
}

/// OFDM reference for every BS in one slot; returns delivered bits per UE.
pub fn baseline_ofdm(geo: &Geometry, channels: &ChannelSet, config: &NetworkConfig, pf: &PfState) -> Vec<f64> {
    let cfg = SchemeSpec::new(Scheme::OfdmRef).effective_config(config);
    let txs: Vec<Transmission> = (0..geo.n_bs()).map(|bs| baseline_ofdm_bs(bs, geo, channels, &cfg, pf)).collect();
    realize_rates(&txs, channels, &cfg, geo.n_ue()).1
}

/// Matched-filtering baseline for one slot; returns delivered bits per UE.
pub fn baseline_mf(geo: &Geometry, channels: &ChannelSet, config: &NetworkConfig, pf: &PfState) -> Result<Vec<f64>> {
    let sim = Simulator::new(config, SchemeSpec::new(Scheme::Mf), geo.clone())?;
    Ok(sim.slot(channels, pf, None)?.delivered)
}

/// Scheduler cost counters accumulated over a run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Counters {
    pub schedule_calls: u64,
    pub candidates: u64,
    pub zf_invocations: u64,
    pub subsets_evaluated: u64,
    /// Sum over calls of `(N_c − (S−1)/2)·S`.
    pub greedy_bound: f64,
}

impl Counters {
    pub fn add(&mut self, other: &Counters) {
        self.schedule_calls += other.schedule_calls;
        self.candidates += other.candidates;
        self.zf_invocations += other.zf_invocations;
        self.subsets_evaluated += other.subsets_evaluated;
        self.greedy_bound += other.greedy_bound;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub seed: u64,
    pub spec_label: String,
    pub kappa: f64,
    /// Recorded (centre-cell) UE indices.
    pub ues: Vec<usize>,
    /// Geometry SINR (dB) of each recorded UE.
    pub geometry_sinr_db: Vec<f64>,
    /// `delivered[slot][i]`: bits/use delivered to recorded UE `i`.
    pub delivered: Vec<Vec<f64>>,
    /// `streams[slot][i]`: streams served to recorded UE `i`.
    pub streams: Vec<Vec<usize>>,
    pub max_estimated_rate: f64,
    pub max_realized_rate: f64,
    pub counters: Counters,
}

impl ScenarioResult {
    /// Mean delivered bits per transmission of each recorded UE.
    pub fn mean_se(&self) -> Vec<f64> {
        let t = self.delivered.len().max(1) as f64;
        (0..self.ues.len()).map(|i| self.delivered.iter().map(|slot| slot[i]).sum::<f64>() / t).collect()
    }

    /// Fraction of slots in which each recorded UE received at least one
    /// stream.
    pub fn scheduled_share(&self) -> Vec<f64> {
        let t = self.streams.len().max(1) as f64;
        (0..self.ues.len()).map(|i| self.streams.iter().filter(|slot| slot[i] > 0).count() as f64 / t).collect()
    }
}

/// Knobs of a scenario run beyond the network configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSettings {
    pub transmissions: usize,
    /// Record every UE instead of only the centre cell.
    pub record_all: bool,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings { transmissions: 100, record_all: false }
    }
}

/// Drops a geometry from `seed` and runs `T` transmissions of one scheme.
pub fn run_scenario(config: &NetworkConfig, spec: SchemeSpec, seed: u64, settings: RunSettings) -> Result<ScenarioResult> {
    config.validate()?;
    let geometry = netchan::drop_users(config, seed);
    run_scenario_on(config, spec, geometry, seed, settings)
}

/// Runs a scheme on a given geometry.
pub fn run_scenario_on(
    config: &NetworkConfig,
    spec: SchemeSpec,
    geometry: Geometry,
    seed: u64,
    settings: RunSettings,
) -> Result<ScenarioResult> {
    let sim = Simulator::new(config, spec, geometry)?;
    let geo = &sim.geometry;
    let sinr = netchan::geometry_sinr(geo, &sim.config);
    let ues: Vec<usize> =
        (0..geo.n_ue()).filter(|&u| settings.record_all || geo.bs_site[geo.serving_bs[u]] == 0).collect();

    let mut pf = PfState::new(geo.n_ue());
    let mut previous: Option<Vec<Transmission>> = None;
    let mut delivered = Vec::with_capacity(settings.transmissions);
    let mut streams = Vec::with_capacity(settings.transmissions);
    let mut counters = Counters::default();
    let mut max_est: f64 = 0.0;
    let mut max_real: f64 = 0.0;
    let s = sim.config.stream_count();
    let mut frozen: Option<ChannelSet> = None;

    for slot in 0..settings.transmissions {
        let fading_slot = if sim.config.freeze_fading { 0 } else { slot as u64 };
        let channels = match (&frozen, sim.config.freeze_fading) {
            (Some(ch), true) => ch.clone(),
            _ => {
                let ch = netchan::gen_fading(&sim.config, geo, derive_seed(seed, &[fading_slot]));
                if sim.config.freeze_fading {
                    frozen = Some(ch.clone());
                }
                ch
            }
        };
        let outcome = sim.slot(&channels, &pf, previous.as_deref())?;
        for (bs, decision) in outcome.decisions.iter().enumerate() {
            if let Some(d) = decision {
                counters.schedule_calls += 1;
                counters.candidates += outcome.pool_sizes[bs] as u64;
                counters.zf_invocations += d.zf_invocations;
                counters.subsets_evaluated += d.subsets_evaluated;
                counters.greedy_bound += greedy_zf_bound(outcome.pool_sizes[bs], s);
            }
        }
        for r in &outcome.realizations {
            max_est = max_est.max(r.estimated_rate);
            max_real = max_real.max(r.rate);
        }
        let mut per_ue_streams = vec![0usize; geo.n_ue()];
        for r in &outcome.realizations {
            per_ue_streams[r.ue] += 1;
        }
        delivered.push(ues.iter().map(|&u| outcome.delivered[u]).collect());
        streams.push(ues.iter().map(|&u| per_ue_streams[u]).collect());
        pf = update_pf_state(&pf, &outcome.delivered, slot + 1, sim.config.r_min);
        previous = Some(outcome.transmissions);
    }

    Ok(ScenarioResult {
        seed,
        spec_label: spec.scheme.label().to_string(),
        kappa: sim.config.kappa,
        geometry_sinr_db: ues.iter().map(|&u| sinr[u]).collect(),
        ues,
        delivered,
        streams,
        max_estimated_rate: max_est,
        max_realized_rate: max_real,
        counters,
    })
}

/// One row of the SE-versus-geometry table.
#[derive(Debug, Clone, PartialEq)]
pub struct SeBin {
    pub scheme: String,
    pub kappa: f64,
    /// Lower edge of the bin (dB).
    pub sinr_bin_db: f64,
    pub mean_se: f64,
    pub n_ue: usize,
}

/// Aggregated campaign output. Keeps every scenario result so that
/// campaigns over disjoint seed ranges merge exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignSummary {
    pub schemes: Vec<SchemeSpec>,
    pub bin_width_db: f64,
    /// `results[scheme][scenario]`, scenarios ordered by seed.
    pub results: Vec<Vec<ScenarioResult>>,
}

fn bin_of(sinr: f64, width: f64) -> i64 {
    (sinr / width).floor() as i64
}

impl CampaignSummary {
    pub fn n_scenarios(&self) -> usize {
        self.results.first().map_or(0, |r| r.len())
    }

    /// Mean per-UE spectral efficiency per geometry bin, per scheme.
    pub fn se_bins(&self) -> Vec<SeBin> {
        let mut rows = Vec::new();
        for (spec_idx, per_scheme) in self.results.iter().enumerate() {
            let mut bins: std::collections::BTreeMap<i64, (f64, usize)> = Default::default();
            for res in per_scheme {
                for (sinr, se) in res.geometry_sinr_db.iter().zip(res.mean_se()) {
                    let slot = bins.entry(bin_of(*sinr, self.bin_width_db)).or_insert((0.0, 0));
                    slot.0 += se;
                    slot.1 += 1;
                }
            }
            let (label, kappa) = per_scheme
                .first()
                .map(|r| (r.spec_label.clone(), r.kappa))
                .unwrap_or_else(|| (self.schemes[spec_idx].scheme.label().to_string(), f64::NAN));
            for (bin, (sum, n)) in bins {
                rows.push(SeBin {
                    scheme: label.clone(),
                    kappa,
                    sinr_bin_db: bin as f64 * self.bin_width_db,
                    mean_se: sum / n as f64,
                    n_ue: n,
                });
            }
        }
        rows
    }

    /// Rows of [`CampaignSummary::se_bins`] for one scheme index.
    pub fn se_bins_for(&self, spec_idx: usize) -> Vec<SeBin> {
        let label = &self.results[spec_idx].first().map(|r| (r.spec_label.clone(), r.kappa));
        self.se_bins()
            .into_iter()
            .filter(|b| label.as_ref().is_some_and(|(l, k)| *l == b.scheme && (k.to_bits() == b.kappa.to_bits())))
            .collect()
    }

    /// Empirical CDF of the recorded UEs' geometry SINR.
    pub fn geometry_cdf(&self) -> Vec<(f64, f64)> {
        let mut values: Vec<f64> = self
            .results
            .first()
            .map(|r| r.iter().flat_map(|res| res.geometry_sinr_db.iter().copied()).collect())
            .unwrap_or_default();
        values.sort_by(f64::total_cmp);
        let n = values.len() as f64;
        values.into_iter().enumerate().map(|(i, v)| (v, (i + 1) as f64 / n)).collect()
    }

    /// Scheduler counters summed over scenarios, per scheme.
    pub fn counters(&self) -> Vec<(String, f64, Counters)> {
        self.results
            .iter()
            .filter_map(|per| {
                let first = per.first()?;
                let mut total = Counters::default();
                per.iter().for_each(|r| total.add(&r.counters));
                Some((first.spec_label.clone(), first.kappa, total))
            })
            .collect()
    }

    pub fn max_rates(&self) -> (f64, f64) {
        self.results.iter().flatten().fold((0.0, 0.0), |(e, r), res| {
            (f64::max(e, res.max_estimated_rate), f64::max(r, res.max_realized_rate))
        })
    }

    /// Concatenates two campaigns over the same schemes and re-sorts by seed.
    pub fn merge(&self, other: &CampaignSummary) -> Result<CampaignSummary> {
        if self.schemes != other.schemes || self.bin_width_db != other.bin_width_db {
            return Err(Error::Validation("campaigns differ in schemes or bin width".into()));
        }
        let results = self
            .results
            .iter()
            .zip(&other.results)
            .map(|(a, b)| {
                let mut all: Vec<ScenarioResult> = a.iter().chain(b).cloned().collect();
                all.sort_by_key(|r| r.seed);
                all
            })
            .collect();
        Ok(CampaignSummary { schemes: self.schemes.clone(), bin_width_db: self.bin_width_db, results })
    }
}

/// Campaign parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignSettings {
    pub n_scenarios: usize,
    pub base_seed: u64,
    pub transmissions: usize,
    pub bin_width_db: f64,
    pub parallel: bool,
}

impl Default for CampaignSettings {
    fn default() -> Self {
        CampaignSettings { n_scenarios: 20, base_seed: 1, transmissions: 20, bin_width_db: 1.0, parallel: true }
    }
}

/// Runs every scheme on scenarios seeded `base_seed .. base_seed + n`.
/// Schemes share geometry and fading draws within a scenario.
pub fn run_campaign(config: &NetworkConfig, schemes: &[SchemeSpec], settings: &CampaignSettings) -> Result<CampaignSummary> {
    if settings.n_scenarios == 0 {
        return Err(Error::Validation("n_scenarios ≥ 1 required".into()));
    }
    if !(settings.bin_width_db > 0.0) {
        return Err(Error::Validation("bin width must be positive".into()));
    }
    config.validate()?;
    for spec in schemes {
        spec.effective_config(config).validate()?;
    }
    let run = RunSettings { transmissions: settings.transmissions, record_all: false };
    let seeds: Vec<u64> = (0..settings.n_scenarios as u64).map(|i| settings.base_seed.wrapping_add(i)).collect();
    let one = |seed: &u64| -> Result<Vec<ScenarioResult>> {
        let geometry = netchan::drop_users(config, *seed);
        schemes.iter().map(|spec| run_scenario_on(config, *spec, geometry.clone(), *seed, run)).collect()
    };
    let per_seed: Vec<Vec<ScenarioResult>> = if settings.parallel {
        seeds.par_iter().map(one).collect::<Result<_>>()?
    } else {
        seeds.iter().map(one).collect::<Result<_>>()?
    };
    let mut results: Vec<Vec<ScenarioResult>> = vec![Vec::with_capacity(seeds.len()); schemes.len()];
    for row in per_seed {
        for (k, res) in row.into_iter().enumerate() {
            results[k].push(res);
        }
    }
    Ok(CampaignSummary { schemes: schemes.to_vec(), bin_width_db: settings.bin_width_db, results })
}
