//! End-to-end acceptance criteria. Each test prints one `PASS`/`FAIL` line
//! and then asserts the same condition.

mod common;

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use common::*;
use iasim::cli;
use iasim::linalg::{frobenius, identity, real, CMatrix, CVector};
use iasim::netchan::{drop_users, gen_fading, Geometry, MixingFamily, NetworkConfig};
use iasim::precoding::{direction_rows, make_mixing_matrix, zf_beamform};
use iasim::receiver::{build_feedback, eigen_directions, equivalent_channel, in_covariance, zf_null_decoder, InterfererPrecoders};
use iasim::rng::derive_seed;
use iasim::scheduler::{
    exhaustive_subset_count, pf_weight, schedule_exhaustive, schedule_greedy, update_pf_state, CandidatePool, PfState,
    SchedulerContext,
};
use iasim::simharness::{
    run_campaign, run_scenario_on, CampaignSettings, CampaignSummary, RunSettings, Scheme, SchemeSpec, SeBin, Simulator,
};

fn report(id: u32, pass: bool, detail: &str, elapsed: Duration) {
    println!("criterion {id}: {} ({detail}; {:.1} s)", if pass { "PASS" } else { "FAIL" }, elapsed.as_secs_f64());
}

#[test]
fn c1_zf_and_null_space_exactness() {
    let start = Instant::now();
    let mut r = rng(101);
    let m = make_mixing_matrix(4, 1, 0.0, MixingFamily::Fourier).unwrap();
    let (mut worst_null, mut worst_zf) = (0.0f64, 0.0f64);
    let mut rejected = 0;
    for _ in 0..1000 {
        let a = gaussian(4, 4, &mut r) * &m.p;
        let u = zf_null_decoder(std::slice::from_ref(&a), 1, None).unwrap();
        worst_null = worst_null.max((u.adjoint() * &a).norm());

        let dirs: Vec<CVector> = (0..3).map(|_| unit(3, &mut r)).collect();
        let rows = direction_rows(&dirs.iter().collect::<Vec<_>>());
        match zf_beamform(&rows, &m, 1e8) {
            Ok(set) => worst_zf = worst_zf.max(frobenius(&(&rows * &set.raw - identity(3)))),
            Err(_) => rejected += 1,
        }
    }
    let elapsed = start.elapsed();
    let pass = worst_null <= 1e-9 && worst_zf <= 1e-9 && elapsed < Duration::from_secs(10);
    report(1, pass, &format!("max null residual {worst_null:.2e}, max ZF residual {worst_zf:.2e}, {rejected} rejected"), elapsed);
    assert!(pass);
}

#[test]
fn c2_eigen_feedback_correctness() {
    let start = Instant::now();
    let mut r = rng(102);
    let (mut worst_rec, mut worst_trace) = (0.0f64, 0.0f64);
    let mut ordered = true;
    for _ in 0..1000 {
        let g = hermitian(4, &mut r);
        let pairs = eigen_directions(&g);
        let mut rebuilt = CMatrix::zeros(4, 4);
        for (c, l) in &pairs {
            rebuilt += c * c.adjoint() * real(*l);
        }
        worst_rec = worst_rec.max(frobenius(&(rebuilt - &g)));
        let trace: f64 = (0..4).map(|i| g[(i, i)].re).sum();
        worst_trace = worst_trace.max((pairs.iter().map(|p| p.1).sum::<f64>() - trace).abs());
        ordered &= pairs.windows(2).all(|w| w[0].1 >= w[1].1);
    }
    let elapsed = start.elapsed();
    let pass = worst_rec <= 1e-9 && worst_trace <= 1e-9 && ordered && elapsed < Duration::from_secs(10);
    report(2, pass, &format!("max reconstruction {worst_rec:.2e}, max trace gap {worst_trace:.2e}, descending {ordered}"), elapsed);
    assert!(pass);
}

/// A scheduling pool as the receivers would build it: 4 UEs, 3 whitened
/// eigen-directions each.
fn realistic_pool(r: &mut rand_chacha::ChaCha8Rng) -> (CandidatePool, PfState) {
    use rand::Rng;
    let m = make_mixing_matrix(4, 1, 0.0, MixingFamily::Fourier).unwrap();
    let mut entries = Vec::new();
    for ue in 0..4 {
        let h = gaussian(4, 4, r) * real(10f64.powf(r.random_range(-0.5..0.5)));
        let hn = gaussian(4, 4, r) * real(0.5);
        let phi = in_covariance(Some(&hn), &m, InterfererPrecoders::Identity, 1.0, 3, 0.05, 0.0).scaled(3.0);
        entries.extend(build_feedback(ue, &equivalent_channel(&h, &m, &phi), 3).unwrap());
    }
    let omega = (0..4).map(|_| r.random_range(0.2..1.0)).collect();
    (CandidatePool::new(entries), PfState::with_weights(omega))
}

#[test]
fn c3_scheduler_oracle() {
    let start = Instant::now();
    let mut r = rng(103);
    let m = make_mixing_matrix(4, 1, 0.0, MixingFamily::Fourier).unwrap();
    let ctx = SchedulerContext::new(&m, 8.0);
    let expected_subsets = exhaustive_subset_count(12, 3);
    assert_eq!(expected_subsets, 12 + 66 + 220);
    let mut ratios = Vec::new();
    let (mut dominance, mut zf_ok, mut count_ok) = (true, true, true);
    for _ in 0..200 {
        let (pool, pf) = realistic_pool(&mut r);
        assert_eq!(pool.len(), 12);
        let g = schedule_greedy(&pool, 3, &pf, &ctx).unwrap();
        let e = schedule_exhaustive(&pool, 3, &pf, &ctx).unwrap();
        dominance &= e.utility >= g.utility;
        zf_ok &= g.zf_invocations <= (12 - 1) * 3;
        count_ok &= e.subsets_evaluated as u128 == expected_subsets;
        ratios.push(g.utility / e.utility);
    }
    ratios.sort_by(f64::total_cmp);
    let q = |p: f64| ratios[((ratios.len() - 1) as f64 * p).round() as usize];
    let median = q(0.5);
    let elapsed = start.elapsed();
    println!(
        "greedy/exhaustive ratio: min {:.4} q10 {:.4} q25 {:.4} median {:.4} q75 {:.4} max {:.4}; optimal in {}/200",
        q(0.0),
        q(0.1),
        q(0.25),
        median,
        q(0.75),
        q(1.0),
        ratios.iter().filter(|&&x| x >= 1.0 - 1e-12).count()
    );
    let pass = dominance && zf_ok && count_ok && median >= 0.90 && elapsed < Duration::from_secs(120);
    report(
        3,
        pass,
        &format!("dominance {dominance}, greedy ZF ≤ 33 {zf_ok}, exhaustive subsets = {expected_subsets} {count_ok}, median {median:.4}"),
        elapsed,
    );
    assert!(pass);
}

#[test]
fn c4_null_decoding_end_to_end() {
    let start = Instant::now();
    let cfg = NetworkConfig { n_cells: 2, ..NetworkConfig::default() };
    let geo = drop_users(&cfg, 104);
    let sim = Simulator::new(&cfg, SchemeSpec::new(Scheme::IaZf), geo.clone()).unwrap();
    let mut pf = PfState::new(geo.n_ue());
    let (mut worst, mut streams) = (0.0f64, 0usize);
    let mut previous = None;
    for slot in 0..100u64 {
        let ch = gen_fading(&sim.config, &geo, derive_seed(104, &[slot]));
        let out = sim.slot(&ch, &pf, previous.as_deref()).unwrap();
        for r in &out.realizations {
            let nulled = geo.strongest_interferer[r.ue].expect("two BSs");
            worst = worst.max(r.inter[nulled] / r.desired);
            streams += 1;
        }
        pf = update_pf_state(&pf, &out.delivered, slot as usize + 1, cfg.r_min);
        previous = Some(out.transmissions);
    }
    let elapsed = start.elapsed();
    let pass = streams > 0 && worst <= 1e-9 && elapsed < Duration::from_secs(60);
    report(4, pass, &format!("{streams} victim streams, worst nulled/desired {worst:.2e}"), elapsed);
    assert!(pass);
}

const CAMPAIGN_SEEDS: u64 = 10;

fn correlated() -> NetworkConfig {
    NetworkConfig { antennas: 2, subcarriers: 2, rho: 0.3, ..NetworkConfig::default() }
}

fn uncorrelated() -> NetworkConfig {
    NetworkConfig { antennas: 4, subcarriers: 1, rho: 0.0, ..NetworkConfig::default() }
}

fn schemes() -> [SchemeSpec; 3] {
    [SchemeSpec::ia_mmse(0.0), SchemeSpec::new(Scheme::Mf), SchemeSpec::new(Scheme::OfdmRef)]
}

/// Ten desk campaigns (20 scenarios × 20 slots) over disjoint seed ranges.
fn campaigns(cfg: NetworkConfig) -> (Vec<CampaignSummary>, Duration) {
    let start = Instant::now();
    let runs = (0..CAMPAIGN_SEEDS)
        .map(|i| {
            let settings = CampaignSettings { base_seed: 1 + 1000 * i, ..CampaignSettings::default() };
            run_campaign(&cfg, &schemes(), &settings).unwrap()
        })
        .collect();
    (runs, start.elapsed())
}

fn correlated_campaigns() -> &'static (Vec<CampaignSummary>, Duration) {
    static RUNS: OnceLock<(Vec<CampaignSummary>, Duration)> = OnceLock::new();
    RUNS.get_or_init(|| campaigns(correlated()))
}

fn uncorrelated_campaigns() -> &'static (Vec<CampaignSummary>, Duration) {
    static RUNS: OnceLock<(Vec<CampaignSummary>, Duration)> = OnceLock::new();
    RUNS.get_or_init(|| campaigns(uncorrelated()))
}

/// `(bin, a, b)` for the bins both schemes populate.
fn paired(s: &CampaignSummary, a: usize, b: usize) -> Vec<(f64, f64, f64)> {
    let bins_b: Vec<SeBin> = s.se_bins_for(b);
    s.se_bins_for(a)
        .into_iter()
        .filter_map(|x| bins_b.iter().find(|y| y.sinr_bin_db == x.sinr_bin_db).map(|y| (x.sinr_bin_db, x.mean_se, y.mean_se)))
        .collect()
}

fn format_bins(rows: &[(f64, f64, f64)]) -> String {
    rows.iter().map(|(b, x, y)| format!("{b:+.0}:{x:.2}/{y:.2}")).collect::<Vec<_>>().join(" ")
}

#[test]
fn c5_correlated_ordering() {
    let (runs, elapsed) = correlated_campaigns();
    let width = runs[0].bin_width_db;
    let mut hits = 0;
    for (i, s) in runs.iter().enumerate() {
        let low: Vec<_> = paired(s, 0, 1).into_iter().filter(|(b, _, _)| b + width <= 0.0).collect();
        let ok = !low.is_empty() && low.iter().all(|(_, ia, mf)| ia > mf);
        hits += ok as usize;
        println!("  campaign {i}: IA_MMSE(k=0)/MF below 0 dB {} -> {}", format_bins(&low), if ok { "ordered" } else { "not ordered" });
    }
    let pass = hits as f64 >= 0.8 * CAMPAIGN_SEEDS as f64 && *elapsed < Duration::from_secs(900);
    report(5, pass, &format!("IA_MMSE(k=0) > MF in every bin below 0 dB on {hits}/{CAMPAIGN_SEEDS} campaigns"), *elapsed);
    assert!(pass);
}

#[test]
fn c6_uncorrelated_ordering() {
    let (runs, elapsed) = uncorrelated_campaigns();
    let width = runs[0].bin_width_db;
    let (mut hits, mut mf_hits, mut gap_hits) = (0, 0, 0);
    for (i, s) in runs.iter().enumerate() {
        let high: Vec<_> = paired(s, 1, 0).into_iter().filter(|(b, _, _)| *b >= 2.0).collect();
        let mid: Vec<_> = paired(s, 0, 2).into_iter().filter(|(b, _, _)| *b >= -2.0 && b + width <= 2.0).collect();
        let mf_ok = !high.is_empty() && high.iter().all(|(_, mf, ia)| mf > ia);
        let gap_ok = !mid.is_empty() && mid.iter().all(|(_, ia, ofdm)| ia - ofdm >= 0.5);
        mf_hits += mf_ok as usize;
        gap_hits += gap_ok as usize;
        hits += (mf_ok && gap_ok) as usize;
        let gaps: Vec<String> = mid.iter().map(|(b, ia, o)| format!("{b:+.0}:{:+.2}", ia - o)).collect();
        println!("  campaign {i}: MF > IA above +2 dB {mf_ok}; IA - OFDM_REF in [-2, 2] dB {} -> {gap_ok}", gaps.join(" "));
    }
    let pass = hits as f64 >= 0.8 * CAMPAIGN_SEEDS as f64 && *elapsed < Duration::from_secs(900);
    report(
        6,
        pass,
        &format!("MF ordering {mf_hits}/{CAMPAIGN_SEEDS}, IA - OFDM_REF >= 0.5 {gap_hits}/{CAMPAIGN_SEEDS}, both {hits}/{CAMPAIGN_SEEDS}"),
        *elapsed,
    );
    assert!(pass);
}

#[test]
fn c7_rate_cap() {
    let start = Instant::now();
    let (mut est, mut real) = (0.0f64, 0.0f64);
    for (runs, _) in [correlated_campaigns(), uncorrelated_campaigns()] {
        for s in runs {
            let (e, r) = s.max_rates();
            est = est.max(e);
            real = real.max(r);
        }
    }
    let pass = est <= 8.0 && real <= 8.0;
    report(7, pass, &format!("max estimated {est:.4}, max realised {real:.4} bits/use"), start.elapsed());
    assert!(pass);
}

#[test]
fn c8_determinism() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut plan = cli::RunPlan::default();
    plan.campaign.n_scenarios = 4;
    plan.campaign.transmissions = 5;
    plan.campaign.parallel = false;
    let read = |d: &std::path::Path| {
        [cli::SE_FILE, cli::CDF_FILE, cli::COUNTERS_FILE].map(|f| std::fs::read(d.join(f)).unwrap())
    };
    cli::run(&plan, &dir.path().join("serial1")).unwrap();
    let manifest = dir.path().join("serial1").join(cli::MANIFEST_FILE);
    let replay = cli::plan_from_manifest(&manifest).unwrap();
    cli::run(&replay, &dir.path().join("serial2")).unwrap();
    let mut parallel = replay.clone();
    parallel.campaign.parallel = true;
    cli::run(&parallel, &dir.path().join("parallel")).unwrap();
    let a = read(&dir.path().join("serial1"));
    let pass = a == read(&dir.path().join("serial2")) && a == read(&dir.path().join("parallel"));
    report(8, pass, "two serial runs and one parallel run compared byte for byte", start.elapsed());
    assert!(pass);
}

/// Two UEs with identical average gain to a single BS at 10 dB SNR.
fn twin_geometry() -> Geometry {
    Geometry::from_gains(vec![vec![1e-4], vec![1e-4]])
}

#[test]
fn c9_proportional_fairness() {
    let start = Instant::now();
    let cfg = NetworkConfig { n_cells: 1, users_per_cell: 2, ..NetworkConfig::default() };
    let single_stream = NetworkConfig { streams: Some(1), feedback_dirs: Some(1), ..cfg.clone() };
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, c, spec) in [
        ("OFDM_REF", &cfg, SchemeSpec::new(Scheme::OfdmRef)),
        ("IA_MMSE S=1", &single_stream, SchemeSpec::ia_mmse(0.0)),
    ] {
        let res = run_scenario_on(c, spec, twin_geometry(), 109, RunSettings { transmissions: 200, record_all: true }).unwrap();
        let shares = res.scheduled_share();
        let ok = shares.iter().all(|s| (s - 0.5).abs() <= 0.1);
        pass &= ok;
        detail.push(format!("{name} shares {:.3}/{:.3}", shares[0], shares[1]));
    }
    let mut floor = PfState::new(2);
    floor = update_pf_state(&floor, &[0.05, 0.1], 1, 0.1);
    let floor_ok = floor.omega == vec![1.0, 1.0] && pf_weight(0.1, 0.1) == 1.0 && pf_weight(0.0, 0.1) == 1.0;
    pass &= floor_ok;
    detail.push(format!("omega at floor exactly 1: {floor_ok}"));
    report(9, pass, &detail.join(", "), start.elapsed());
    assert!(pass);
}
