//! Network geometry, propagation and MIMO-OFDM fading.
//!
//! Sites sit on a hexagonal grid (centre cell plus the first ring). Each site
//! hosts one omni BS, or three sectors when `sectors_per_cell = 3`. Users are
//! dropped uniformly inside their cell's hexagon and attach to the BS with the
//! largest average gain.
//!
//! The effective channel between a user and a BS is an `M_K×M_K`
//! block-diagonal matrix: one `M×M` Kronecker-correlated Rayleigh block per
//! subcarrier, scaled by the square root of the link's average gain.

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{block_diag, hermitian_sqrt, CMatrix};
use crate::rng::{self, PURPOSE_FADING, PURPOSE_GEOMETRY, PURPOSE_SHADOWING};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MixingFamily {
    #[default]
    Fourier,
    Hadamard,
}

/// How `‖c_k·v̄_k‖` enters the scheduling utility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CrossGainMode {
    /// `|⟨c, v̄⟩|²`
    #[default]
    Power,
    /// `|⟨c, v̄⟩|`
    Amplitude,
}

/// Where the per-stream power `p/S` is accounted for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SinrConvention {
    /// The interference-plus-noise covariance is expressed relative to the
    /// per-stream power, so fed-back eigenvalues are SINRs and the rate is
    /// `log2(1 + λ·x)`.
    #[default]
    Normalized,
    /// Eigenvalues of `Pᴴ Hᴴ Φ⁻¹ H P` with Φ in absolute units, rate
    /// `log2(1 + (p/S)·λ·x)`.
    Literal,
}

/// Model of the strongest interferer's precoder product `V_n V_nᴴ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InterfererCovariance {
    /// Identity on the reduced space.
    #[default]
    Identity,
    /// The interferer's effective precoders from the previous transmission.
    Previous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SchedulerKind {
    #[default]
    Greedy,
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum UserDrop {
    /// Exactly `users_per_cell` users per cell.
    #[default]
    Fixed,
    /// Poisson count with mean `users_per_cell`.
    Poisson,
}

/// Log-distance path loss with log-normal shadowing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossModel {
    /// Linear gain at the reference distance.
    pub g0: f64,
    /// Reference distance (m).
    pub d0: f64,
    pub exponent: f64,
    /// Shadowing standard deviation (dB); 0 disables shadowing.
    pub shadowing_db: f64,
}

impl Default for PathLossModel {
    fn default() -> Self {
        PathLossModel { g0: 1.0, d0: 50.0, exponent: 3.5, shadowing_db: 8.0 }
    }
}

impl PathLossModel {
    /// `g0·(d/d0)^(−α)·10^(shadow/10)`. Distances below `d0` (including 0)
    /// are clamped to `d0`.
    pub fn gain(&self, distance: f64, shadow_db: f64) -> f64 {
        let d = distance.max(self.d0);
        self.g0 * (d / self.d0).powf(-self.exponent) * 10f64.powf(shadow_db / 10.0)
    }

    pub fn draw_shadowing_db<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.shadowing_db <= 0.0 {
            return 0.0;
        }
        Normal::new(0.0, self.shadowing_db).expect("finite sigma").sample(rng)
    }
}

/// Free-function form of [`PathLossModel::gain`].
pub fn path_gain(distance: f64, model: &PathLossModel, shadow_db: f64) -> f64 {
    model.gain(distance, shadow_db)
}

/// Scalar parameters of the downlink system model plus the switches that
/// select between modelling variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Number of cell sites `B` (1..=7, centre first).
    pub n_cells: usize,
    /// 1 (omni) or 3 (sectorised sites, each sector its own BS).
    pub sectors_per_cell: usize,
    /// `N_u`
    pub users_per_cell: usize,
    /// `M`
    pub antennas: usize,
    /// `K`
    pub subcarriers: usize,
    /// `N_f`
    pub freed_dims: usize,
    pub kappa: f64,
    /// Total transmit power `p` per BS (linear).
    pub tx_power: f64,
    /// `σ²` per receive dimension (linear).
    pub noise_power: f64,
    /// Antenna correlation coefficient `ρ`.
    pub rho: f64,
    /// `L`; defaults to `M_K − N_f`.
    pub feedback_dirs: Option<usize>,
    /// `S`; defaults to `M_K − N_f`.
    pub streams: Option<usize>,
    pub r_min: f64,
    pub rate_cap: f64,
    /// Residual interference power per receive dimension. `None` derives it
    /// from the geometry of the interferers that are not modelled explicitly.
    pub inr_rem: Option<f64>,
    /// `N_ri`, interferers nulled by the ZF decoder.
    pub n_ri: usize,
    /// Inter-site distance (m).
    pub isd: f64,
    pub propagation: PathLossModel,
    pub user_drop: UserDrop,
    pub mixing: MixingFamily,
    pub cross_gain: CrossGainMode,
    pub sinr_convention: SinrConvention,
    pub interferer_cov: InterfererCovariance,
    pub scheduler: SchedulerKind,
    /// Maximum `C(N_c, S)` the exhaustive scheduler accepts.
    pub exhaustive_budget: u64,
    /// Per-UE stream cap; `None` lets one UE take every stream.
    pub max_streams_per_ue: Option<usize>,
    /// Keep one fading draw for the whole scenario instead of redrawing it
    /// every transmission.
    pub freeze_fading: bool,
    /// ZF feasibility threshold on `cond(C̄·C̄ᴴ)`.
    pub zf_cond_max: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            n_cells: 7,
            sectors_per_cell: 1,
            users_per_cell: 10,
            antennas: 4,
            subcarriers: 1,
            freed_dims: 1,
            kappa: 0.0,
            tx_power: 1.0,
            noise_power: 1e-5,
            rho: 0.0,
            feedback_dirs: None,
            streams: None,
            r_min: 0.1,
            rate_cap: 8.0,
            inr_rem: None,
            n_ri: 1,
            isd: 500.0,
            propagation: PathLossModel::default(),
            user_drop: UserDrop::Fixed,
            mixing: MixingFamily::Fourier,
            cross_gain: CrossGainMode::Power,
            sinr_convention: SinrConvention::Normalized,
            interferer_cov: InterfererCovariance::Identity,
            scheduler: SchedulerKind::Greedy,
            exhaustive_budget: 2_000_000,
            max_streams_per_ue: None,
            freeze_fading: false,
            zf_cond_max: 1e8,
        }
    }
}

impl NetworkConfig {
    /// `M_K = M·K`
    pub fn dims(&self) -> usize {
        self.antennas * self.subcarriers
    }

    /// Columns of the mixing matrix: `M_K − N_f` under strict truncation,
    /// `M_K` when the trailing columns are kept with weight κ.
    pub fn mixing_cols(&self) -> usize {
        if self.kappa == 0.0 {
            self.dims() - self.freed_dims
        } else {
            self.dims()
        }
    }

    /// `S`
    pub fn stream_count(&self) -> usize {
        self.streams.unwrap_or(self.dims() - self.freed_dims)
    }

    /// `L`
    pub fn feedback_count(&self) -> usize {
        self.feedback_dirs.unwrap_or(self.dims() - self.freed_dims)
    }

    pub fn n_bs(&self) -> usize {
        self.n_cells * self.sectors_per_cell
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Validation(msg));
        let mk = self.dims();
        if self.antennas == 0 || self.subcarriers == 0 {
            return fail("M ≥ 1 and K ≥ 1 required".into());
        }
        if !(1..=7).contains(&self.n_cells) {
            return fail(format!("n_cells must be in 1..=7, got {}", self.n_cells));
        }
        if self.sectors_per_cell != 1 && self.sectors_per_cell != 3 {
            return fail(format!("sectors_per_cell must be 1 or 3, got {}", self.sectors_per_cell));
        }
        if self.freed_dims >= mk {
            return fail(format!("0 ≤ N_f < M_K violated: N_f={} M_K={mk}", self.freed_dims));
        }
        if !(0.0..=1.0).contains(&self.kappa) || self.kappa.is_nan() {
            return fail(format!("kappa must lie in [0, 1], got {}", self.kappa));
        }
        let l = self.feedback_count();
        let l_max = self.mixing_cols();
        if l < 1 || l > l_max {
            return fail(format!("1 ≤ L ≤ {l_max} violated: L={l}"));
        }
        let s = self.stream_count();
        if s < 1 || s > self.mixing_cols() {
            return fail(format!("1 ≤ S ≤ {} violated: S={s}", self.mixing_cols()));
        }
        if !(self.tx_power > 0.0) {
            return fail(format!("p > 0 violated: p={}", self.tx_power));
        }
        if !(self.noise_power > 0.0) {
            return fail(format!("sigma2 > 0 violated: sigma2={}", self.noise_power));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return fail(format!("0 ≤ rho < 1 violated: rho={}", self.rho));
        }
        if !(self.rate_cap > 0.0) {
            return fail(format!("rate_cap > 0 violated: rate_cap={}", self.rate_cap));
        }
        if !(self.r_min > 0.0) {
            return fail(format!("r_min > 0 violated: r_min={}", self.r_min));
        }
        if let Some(inr) = self.inr_rem {
            if !(inr >= 0.0) {
                return fail(format!("inr_rem ≥ 0 violated: inr_rem={inr}"));
            }
        }
        if self.n_ri < 1 {
            return fail("n_ri ≥ 1 required".into());
        }
        if !(self.isd > 0.0) || !(self.propagation.d0 > 0.0) || !(self.propagation.g0 > 0.0) {
            return fail("isd, d0 and g0 must be positive".into());
        }
        if !(self.propagation.shadowing_db >= 0.0) {
            return fail("shadowing_db ≥ 0 required".into());
        }
        if self.mixing == MixingFamily::Hadamard && !mk.is_power_of_two() {
            return fail(format!("Hadamard mixing needs M_K a power of two, got {mk}"));
        }
        if !(self.zf_cond_max > 1.0) {
            return fail("zf_cond_max > 1 required".into());
        }
        if self.max_streams_per_ue == Some(0) {
            return fail("max_streams_per_ue ≥ 1 required".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub bs_positions: Vec<[f64; 2]>,
    /// Cell site hosting each BS.
    pub bs_site: Vec<usize>,
    /// Sector boresight (radians), `None` for omni BSs.
    pub bs_boresight: Vec<Option<f64>>,
    pub ue_positions: Vec<[f64; 2]>,
    /// Cell in which each UE was dropped.
    pub ue_cell: Vec<usize>,
    pub serving_bs: Vec<usize>,
    /// `avg_gain[ue][bs]`, linear.
    pub avg_gain: Vec<Vec<f64>>,
    /// `None` when the network has a single BS.
    pub strongest_interferer: Vec<Option<usize>>,
}

impl Geometry {
    pub fn n_ue(&self) -> usize {
        self.ue_positions.len()
    }

    pub fn n_bs(&self) -> usize {
        self.bs_positions.len()
    }

    /// Users attached to `bs`, in index order.
    pub fn users_of(&self, bs: usize) -> Vec<usize> {
        (0..self.n_ue()).filter(|&u| self.serving_bs[u] == bs).collect()
    }

    /// Non-serving BSs of `ue`, strongest first (ties by index).
    pub fn interferers_by_strength(&self, ue: usize) -> Vec<usize> {
        let mut others: Vec<usize> = (0..self.n_bs()).filter(|&b| b != self.serving_bs[ue]).collect();
        others.sort_by(|&a, &b| self.avg_gain[ue][b].total_cmp(&self.avg_gain[ue][a]).then(a.cmp(&b)));
        others
    }

    /// Builds a geometry from explicit gains, deriving serving and strongest
    /// interferer indices. Positions are left at the origin.
    pub fn from_gains(avg_gain: Vec<Vec<f64>>) -> Geometry {
        let n_bs = avg_gain.first().map_or(0, |g| g.len());
        let n_ue = avg_gain.len();
        let mut geo = Geometry {
            bs_positions: vec![[0.0; 2]; n_bs],
            bs_site: (0..n_bs).collect(),
            bs_boresight: vec![None; n_bs],
            ue_positions: vec![[0.0; 2]; n_ue],
            ue_cell: vec![0; n_ue],
            serving_bs: vec![0; n_ue],
            avg_gain,
            strongest_interferer: vec![None; n_ue],
        };
        geo.attach();
        geo.ue_cell = geo.serving_bs.iter().map(|&b| geo.bs_site[b]).collect();
        geo
    }

    fn attach(&mut self) {
        for ue in 0..self.n_ue() {
            let gains = &self.avg_gain[ue];
            let serving = argmax(gains, None).expect("at least one BS");
            self.serving_bs[ue] = serving;
            self.strongest_interferer[ue] = argmax(gains, Some(serving));
        }
    }
}

/// Index of the largest value, lowest index on ties, optionally skipping one.
fn argmax(values: &[f64], skip: Option<usize>) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if Some(i) == skip {
            continue;
        }
        if best.is_none_or(|b| v > values[b]) {
            best = Some(i);
        }
    }
    best
}

/// Centre of site `index` on the hexagonal grid (centre, then the first ring).
pub fn site_position(index: usize, isd: f64) -> [f64; 2] {
    if index == 0 {
        return [0.0, 0.0];
    }
    let angle = (30.0 + 60.0 * (index - 1) as f64).to_radians();
    [isd * angle.cos(), isd * angle.sin()]
}

/// Whether `(x, y)` lies inside a flat-topped hexagon of circumradius `r`
/// centred at the origin.
fn in_hexagon(x: f64, y: f64, r: f64) -> bool {
    let h = r * 3f64.sqrt() / 2.0;
    y.abs() <= h && 3f64.sqrt() * x.abs() + y.abs() <= 3f64.sqrt() * r
}

/// Horizontal sector pattern, `−min(12(θ/70°)², 20)` dB.
fn sector_gain_db(boresight: f64, bs: [f64; 2], ue: [f64; 2]) -> f64 {
    let bearing = (ue[1] - bs[1]).atan2(ue[0] - bs[0]);
    let mut off = (bearing - boresight).to_degrees();
    off = (off + 180.0).rem_euclid(360.0) - 180.0;
    -(12.0 * (off / 70.0).powi(2)).min(20.0)
}

/// Places BSs on the hexagonal grid and drops users uniformly in each cell.
pub fn drop_users(config: &NetworkConfig, seed: u64) -> Geometry {
    let mut rng = rng::stream(seed, &[PURPOSE_GEOMETRY]);
    let mut shadow_rng = rng::stream(seed, &[PURPOSE_SHADOWING]);
    let radius = config.isd / 3f64.sqrt();

    let mut bs_positions = Vec::new();
    let mut bs_site = Vec::new();
    let mut bs_boresight = Vec::new();
    for site in 0..config.n_cells {
        let pos = site_position(site, config.isd);
        if config.sectors_per_cell == 3 {
            for k in 0..3 {
                bs_positions.push(pos);
                bs_site.push(site);
                bs_boresight.push(Some((30.0 + 120.0 * k as f64).to_radians()));
            }
        } else {
            bs_positions.push(pos);
            bs_site.push(site);
            bs_boresight.push(None);
        }
    }

    let mut ue_positions = Vec::new();
    let mut ue_cell = Vec::new();
    for site in 0..config.n_cells {
        let count = match config.user_drop {
            UserDrop::Fixed => config.users_per_cell,
            UserDrop::Poisson => {
                if config.users_per_cell == 0 {
                    0
                } else {
                    let poisson = Poisson::new(config.users_per_cell as f64).expect("positive mean");
                    poisson.sample(&mut rng) as usize
                }
            }
        };
        let centre = site_position(site, config.isd);
        for _ in 0..count {
            let (x, y) = loop {
                let x = rng.random_range(-radius..radius);
                let y = rng.random_range(-radius..radius);
                if in_hexagon(x, y, radius) {
                    break (x, y);
                }
            };
            ue_positions.push([centre[0] + x, centre[1] + y]);
            ue_cell.push(site);
        }
    }

    let avg_gain: Vec<Vec<f64>> = ue_positions
        .iter()
        .map(|ue| {
            // one shadowing draw per link
            bs_positions
                .iter()
                .zip(&bs_boresight)
                .map(|(bs, boresight)| {
                    let d = ((ue[0] - bs[0]).powi(2) + (ue[1] - bs[1]).powi(2)).sqrt();
                    let shadow = config.propagation.draw_shadowing_db(&mut shadow_rng);
                    let pattern = boresight.map_or(0.0, |b| sector_gain_db(b, *bs, *ue));
                    config.propagation.gain(d, shadow + pattern)
                })
                .collect()
        })
        .collect();

    let n_ue = ue_positions.len();
    let mut geo = Geometry {
        bs_positions,
        bs_site,
        bs_boresight,
        ue_positions,
        ue_cell,
        serving_bs: vec![0; n_ue],
        avg_gain,
        strongest_interferer: vec![None; n_ue],
    };
    geo.attach();
    geo
}

/// Per-link block-diagonal channels, indexed `h[ue][bs]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub antennas: usize,
    pub subcarriers: usize,
    pub h: Vec<Vec<CMatrix>>,
}

impl ChannelSet {
    pub fn get(&self, ue: usize, bs: usize) -> &CMatrix {
        &self.h[ue][bs]
    }
}

/// Exponential correlation matrix `R[i][j] = ρ^|i−j|`.
pub fn exponential_correlation(m: usize, rho: f64) -> CMatrix {
    CMatrix::from_fn(m, m, |i, j| Complex64::new(rho.powi((i as i32 - j as i32).abs()), 0.0))
}

/// Circularly-symmetric complex Gaussian matrix with unit-variance entries.
pub fn complex_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(scale * re, scale * im)
    })
}

/// Draws every UE–BS channel: `K` independent blocks `R^½·W·R^½`, scaled by
/// the link's average amplitude gain.
pub fn gen_fading(config: &NetworkConfig, geometry: &Geometry, seed: u64) -> ChannelSet {
    let m = config.antennas;
    let root = hermitian_sqrt(&exponential_correlation(m, config.rho));
    let h = (0..geometry.n_ue())
        .map(|ue| {
            (0..geometry.n_bs())
                .map(|bs| {
                    let mut rng = rng::stream(seed, &[PURPOSE_FADING, ue as u64, bs as u64]);
                    let amp = Complex64::new(geometry.avg_gain[ue][bs].sqrt(), 0.0);
                    let blocks: Vec<CMatrix> = (0..config.subcarriers)
                        .map(|_| &root * complex_gaussian(m, m, &mut rng) * &root * amp)
                        .collect();
                    block_diag(&blocks)
                })
                .collect()
        })
        .collect();
    ChannelSet { antennas: m, subcarriers: config.subcarriers, h }
}

/// Long-term SINR of every UE in dB: `p·g_serving / (σ² + p·Σ g_other)`.
pub fn geometry_sinr(geometry: &Geometry, config: &NetworkConfig) -> Vec<f64> {
    let p = config.tx_power;
    (0..geometry.n_ue())
        .map(|ue| {
            let gains = &geometry.avg_gain[ue];
            let serving = geometry.serving_bs[ue];
            let interference: f64 =
                gains.iter().enumerate().filter(|(b, _)| *b != serving).map(|(_, g)| p * g).sum();
            10.0 * (p * gains[serving] / (config.noise_power + interference)).log10()
        })
        .collect()
}
