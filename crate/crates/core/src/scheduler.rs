//! Joint stream selection and precoding at one BS.
//!
//! Every candidate is a fed-back `(direction, gain)` pair. A subset of
//! candidates is scored by zero-forcing over its directions and summing the
//! PF-weighted, capped per-stream rates `ω·min(cap, log2(1 + λ·x))`, where `x`
//! is the gain of the candidate's direction through its own ZF precoder.
//! [`schedule_exhaustive`] scores every subset of size `1..=S`;
//! [`schedule_greedy`] grows the selection one stream at a time and stops as
//! soon as no candidate improves the utility.
//!
//! Both schedulers count ZF invocations and evaluated subsets so their cost
//! can be checked against `Σ_k C(N_c, k)` and `(N_c − (S−1)/2)·S`.

use crate::error::{Error, Result};
use crate::netchan::{CrossGainMode, SinrConvention};
use crate::precoding::{direction_rows, precoder_cross_gain, zf_beamform, MixingMatrix, PrecoderSet};
use crate::receiver::FeedbackEntry;

/// All candidates of one BS.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CandidatePool {
    pub entries: Vec<FeedbackEntry>,
}

impl CandidatePool {
    pub fn new(entries: Vec<FeedbackEntry>) -> CandidatePool {
        CandidatePool { entries }
    }

    /// `N_c`
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Proportional-fair state, indexed by UE.
#[derive(Debug, Clone, PartialEq)]
pub struct PfState {
    /// Running mean of delivered bits per transmission.
    pub r_avg: Vec<f64>,
    pub omega: Vec<f64>,
    /// Transmissions accounted for so far.
    pub transmissions: usize,
}

impl PfState {
    pub fn new(n_ue: usize) -> PfState {
        PfState { r_avg: vec![0.0; n_ue], omega: vec![1.0; n_ue], transmissions: 0 }
    }

    pub fn with_weights(omega: Vec<f64>) -> PfState {
        PfState { r_avg: vec![0.0; omega.len()], omega, transmissions: 0 }
    }
}

/// `ω = r_min / max(r_min, R_avg)`
pub fn pf_weight(r_avg: f64, r_min: f64) -> f64 {
    r_min / r_min.max(r_avg)
}

/// Folds one transmission's delivered bits into the running averages.
/// `transmission_index` is 1-based: the count of transmissions including
/// this one.
pub fn update_pf_state(pf: &PfState, delivered: &[f64], transmission_index: usize, r_min: f64) -> PfState {
    assert_eq!(delivered.len(), pf.r_avg.len(), "one delivered value per UE");
    let l = transmission_index.max(1) as f64;
    let r_avg: Vec<f64> = pf.r_avg.iter().zip(delivered).map(|(avg, d)| avg + (d - avg) / l).collect();
    let omega = r_avg.iter().map(|&r| pf_weight(r, r_min)).collect();
    PfState { r_avg, omega, transmissions: transmission_index }
}

/// How a `(λ, x, ω)` triple turns into a rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateModel {
    pub rate_cap: f64,
    pub cross_gain: CrossGainMode,
    pub convention: SinrConvention,
    /// `p/S`, only used under [`SinrConvention::Literal`].
    pub power_per_stream: f64,
}

impl RateModel {
    pub fn new(rate_cap: f64) -> RateModel {
        RateModel {
            rate_cap,
            cross_gain: CrossGainMode::Power,
            convention: SinrConvention::Normalized,
            power_per_stream: 1.0,
        }
    }

    /// Capped, unweighted rate.
    pub fn rate(&self, lambda: f64, cross_gain: f64) -> f64 {
        let scale = match self.convention {
            SinrConvention::Normalized => 1.0,
            SinrConvention::Literal => self.power_per_stream,
        };
        (1.0 + scale * lambda * cross_gain).log2().min(self.rate_cap)
    }
}

/// `ω·min(cap, log2(1 + λ·x))`
pub fn stream_rate(lambda: f64, cross_gain: f64, omega: f64, model: &RateModel) -> f64 {
    omega * model.rate(lambda, cross_gain)
}

/// Everything a scheduler needs besides the pool and the weights.
#[derive(Debug, Clone, Copy)]
pub struct SchedulerContext<'a> {
    pub mixing: &'a MixingMatrix,
    pub rates: RateModel,
    pub cond_max: f64,
    pub max_streams_per_ue: Option<usize>,
    pub exhaustive_budget: u64,
}

impl<'a> SchedulerContext<'a> {
    pub fn new(mixing: &'a MixingMatrix, rate_cap: f64) -> SchedulerContext<'a> {
        SchedulerContext {
            mixing,
            rates: RateModel::new(rate_cap),
            cond_max: 1e8,
            max_streams_per_ue: None,
            exhaustive_budget: 2_000_000,
        }
    }
}

/// Score of one candidate subset.
#[derive(Debug, Clone)]
pub struct SubsetEval {
    /// Sorted candidate indices.
    pub indices: Vec<usize>,
    /// Weighted sum rate, `-∞` if the subset cannot be served together.
    pub utility: f64,
    pub precoders: Option<PrecoderSet>,
    /// Unweighted capped rate per stream, aligned with `indices`.
    pub rates: Vec<f64>,
    /// Whether ZF was run.
    pub used_zf: bool,
}

fn infeasible(indices: Vec<usize>, used_zf: bool) -> SubsetEval {
    SubsetEval { indices, utility: f64::NEG_INFINITY, precoders: None, rates: Vec::new(), used_zf }
}

/// ZF over the subset's directions, then the weighted sum of capped rates.
/// Ill-conditioned subsets and subsets breaking the per-UE stream cap score
/// `-∞` instead of failing.
pub fn evaluate_subset(subset: &[usize], pool: &CandidatePool, pf: &PfState, ctx: &SchedulerContext<'_>) -> SubsetEval {
    let mut indices = subset.to_vec();
    indices.sort_unstable();
    if let Some(cap) = ctx.max_streams_per_ue {
        let mut owners: Vec<usize> = indices.iter().map(|&i| pool.entries[i].ue).collect();
        owners.sort_unstable();
        if owners.chunk_by(|a, b| a == b).any(|run| run.len() > cap) {
            return infeasible(indices, false);
        }
    }
    let directions: Vec<_> = indices.iter().map(|&i| &pool.entries[i].direction).collect();
    let precoders = match zf_beamform(&direction_rows(&directions), ctx.mixing, ctx.cond_max) {
        Ok(set) => set,
        Err(_) => return infeasible(indices, true),
    };
    let mut utility = 0.0;
    let mut rates = Vec::with_capacity(indices.len());
    for (k, &i) in indices.iter().enumerate() {
        let entry = &pool.entries[i];
        let x = precoder_cross_gain(&entry.direction, &precoders.reduced[k], ctx.rates.cross_gain)
            .expect("directions and precoders share the reduced space");
        let rate = ctx.rates.rate(entry.gain, x);
        utility += pf.omega[entry.ue] * rate;
        rates.push(rate);
    }
    SubsetEval { indices, utility, precoders: Some(precoders), rates, used_zf: true }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleDecision {
    /// Selected candidate indices, ascending.
    pub chosen: Vec<usize>,
    /// Precoders aligned with `chosen`.
    pub precoders: PrecoderSet,
    /// Unweighted capped rate estimate per chosen stream.
    pub per_stream_rate: Vec<f64>,
    pub utility: f64,
    pub zf_invocations: u64,
    pub subsets_evaluated: u64,
}

impl ScheduleDecision {
    fn from_eval(eval: SubsetEval, zf_invocations: u64, subsets_evaluated: u64) -> ScheduleDecision {
        ScheduleDecision {
            chosen: eval.indices,
            precoders: eval.precoders.expect("feasible subset"),
            per_stream_rate: eval.rates,
            utility: eval.utility,
            zf_invocations,
            subsets_evaluated,
        }
    }
}

/// `C(n, k)`, saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// `Σ_{k=1..S} C(N_c, k)`
pub fn exhaustive_subset_count(n_c: usize, s: usize) -> u128 {
    (1..=s).map(|k| binomial(n_c, k)).sum()
}

/// Upper bound on greedy ZF invocations, `(N_c − (S−1)/2)·S`. A pool with
/// fewer than `S` candidates caps the number of rounds at `N_c`.
pub fn greedy_zf_bound(n_c: usize, s: usize) -> f64 {
    let s = s.min(n_c);
    (n_c as f64 - (s as f64 - 1.0) / 2.0) * s as f64
}

/// Whether `a` beats `b`: higher utility, or equal utility and a
/// lexicographically smaller index list.
fn better(a: &SubsetEval, b: &SubsetEval) -> bool {
    a.utility > b.utility || (a.utility == b.utility && a.indices < b.indices)
}

/// Advances `idx` to the next `k`-combination of `0..n` in lexicographic order.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Best subset of size `1..=S` by full enumeration.
pub fn schedule_exhaustive(pool: &CandidatePool, s: usize, pf: &PfState, ctx: &SchedulerContext<'_>) -> Result<ScheduleDecision> {
    let n = pool.len();
    if n == 0 || s == 0 {
        return Err(Error::Validation("exhaustive scheduling needs N_c ≥ 1 and S ≥ 1".into()));
    }
    let top = binomial(n, s.min(n));
    if top > ctx.exhaustive_budget as u128 {
        return Err(Error::BudgetExceeded { subsets: top, budget: ctx.exhaustive_budget as u128 });
    }
    let mut best: Option<SubsetEval> = None;
    let mut zf = 0u64;
    let mut evaluated = 0u64;
    for k in 1..=s.min(n) {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            let eval = evaluate_subset(&idx, pool, pf, ctx);
            evaluated += 1;
            zf += eval.used_zf as u64;
            if best.as_ref().is_none_or(|b| better(&eval, b)) {
                best = Some(eval);
            }
            if !next_combination(&mut idx, n) {
                break;
            }
        }
    }
    Ok(ScheduleDecision::from_eval(best.expect("at least one subset"), zf, evaluated))
}

/// Greedy stream selection.
///
/// Seeds with the best single stream, then repeatedly scans every remaining
/// candidate and adds the one giving the largest utility, provided it
/// strictly exceeds the current utility. Stops after `S` streams or when no
/// candidate helps.
pub fn schedule_greedy(pool: &CandidatePool, s: usize, pf: &PfState, ctx: &SchedulerContext<'_>) -> Result<ScheduleDecision> {
    let n = pool.len();
    if n == 0 || s == 0 {
        return Err(Error::Validation("greedy scheduling needs N_c ≥ 1 and S ≥ 1".into()));
    }
    let mut zf = 0u64;
    let mut evaluated = 0u64;
    let mut current: Option<SubsetEval> = None;
    for i in 0..n {
        let eval = evaluate_subset(&[i], pool, pf, ctx);
        evaluated += 1;
        zf += eval.used_zf as u64;
        if current.as_ref().is_none_or(|b| eval.utility > b.utility) {
            current = Some(eval);
        }
    }
    let mut current = current.expect("non-empty pool");
    let mut chosen = current.indices.clone();
    let mut remaining: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();

    while chosen.len() < s {
        let mut step: Option<(usize, SubsetEval)> = None;
        for (pos, &cand) in remaining.iter().enumerate() {
            let mut trial = chosen.clone();
            trial.push(cand);
            let eval = evaluate_subset(&trial, pool, pf, ctx);
            evaluated += 1;
            zf += eval.used_zf as u64;
            let threshold = step.as_ref().map_or(current.utility, |(_, e)| e.utility);
            if eval.utility > threshold {
                step = Some((pos, eval));
            }
        }
        match step {
            Some((pos, eval)) => {
                chosen.push(remaining.remove(pos));
                current = eval;
            }
            None => break,
        }
    }
    Ok(ScheduleDecision::from_eval(current, zf, evaluated))
}

/// Dispatches on the configured scheduler; exhaustive falls back to greedy
/// when the pool exceeds the budget.
pub fn schedule(
    kind: crate::netchan::SchedulerKind,
    pool: &CandidatePool,
    s: usize,
    pf: &PfState,
    ctx: &SchedulerContext<'_>,
) -> Result<ScheduleDecision> {
    match kind {
        crate::netchan::SchedulerKind::Greedy => schedule_greedy(pool, s, pf, ctx),
        crate::netchan::SchedulerKind::Exhaustive => match schedule_exhaustive(pool, s, pf, ctx) {
            Err(Error::BudgetExceeded { .. }) => schedule_greedy(pool, s, pf, ctx),
            other => other,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis, c, CVector};

    fn entry(ue: usize, direction: CVector, gain: f64) -> FeedbackEntry {
        FeedbackEntry { ue, direction, gain, rank: 0 }
    }

    fn orthogonal_pool(gains: &[f64]) -> CandidatePool {
        let n = gains.len();
        CandidatePool::new(gains.iter().enumerate().map(|(i, &g)| entry(i, basis(n, i), g)).collect())
    }

    #[test]
    fn stream_rate_cases() {
        let m = RateModel::new(8.0);
        assert_eq!(stream_rate(0.0, 1.0, 1.0, &m), 0.0);
        assert_eq!(stream_rate(255.0 + 1e-6, 1.0, 1.0, &m), 8.0);
        assert!((stream_rate(3.0, 1.0, 0.5, &m) - 1.0).abs() < 1e-15);
        let literal = RateModel { convention: SinrConvention::Literal, power_per_stream: 0.5, ..m };
        assert!((stream_rate(6.0, 1.0, 1.0, &literal) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn pf_weights() {
        assert_eq!(pf_weight(0.05, 0.1), 1.0);
        assert_eq!(pf_weight(0.1, 0.1), 1.0);
        assert_eq!(pf_weight(0.2, 0.1), 0.5);
        let mut pf = PfState::new(2);
        for l in 1..=10 {
            pf = update_pf_state(&pf, &[if l == 1 { 0.5 } else { 0.0 }, 0.0], l, 0.1);
        }
        assert!((pf.r_avg[0] - 0.05).abs() < 1e-15);
        assert_eq!(pf.omega, vec![1.0, 1.0]);
        assert_eq!(pf.transmissions, 10);
    }

    #[test]
    fn orthogonal_subset_utility() {
        let pool = orthogonal_pool(&[3.0, 7.0, 1.0]);
        let m = MixingMatrix::identity(3);
        let ctx = SchedulerContext::new(&m, 8.0);
        let pf = PfState::with_weights(vec![1.0, 0.5, 2.0]);
        let eval = evaluate_subset(&[2, 0, 1], &pool, &pf, &ctx);
        assert_eq!(eval.indices, vec![0, 1, 2]);
        let expected = 2.0 + 0.5 * 3.0 + 2.0 * 1.0;
        assert!((eval.utility - expected).abs() < 1e-12);
    }

    #[test]
    fn duplicate_directions_are_infeasible() {
        let d = CVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        let pool = CandidatePool::new(vec![entry(0, d.clone(), 2.0), entry(1, d, 3.0)]);
        let m = MixingMatrix::identity(2);
        let ctx = SchedulerContext::new(&m, 8.0);
        let eval = evaluate_subset(&[0, 1], &pool, &PfState::new(2), &ctx);
        assert_eq!(eval.utility, f64::NEG_INFINITY);
    }

    #[test]
    fn full_orthogonal_pool_selected_by_both() {
        let pool = orthogonal_pool(&[1.0, 4.0, 2.0]);
        let m = MixingMatrix::identity(3);
        let ctx = SchedulerContext::new(&m, 8.0);
        let pf = PfState::new(3);
        let ex = schedule_exhaustive(&pool, 3, &pf, &ctx).unwrap();
        let gr = schedule_greedy(&pool, 3, &pf, &ctx).unwrap();
        assert_eq!(ex.chosen, vec![0, 1, 2]);
        assert_eq!(ex.subsets_evaluated, 7);
        assert_eq!(gr.chosen, ex.chosen);
        assert_eq!(gr.utility, ex.utility);
        assert_eq!(gr.zf_invocations, 3 + 2 + 1);
    }

    #[test]
    fn zero_weights_pick_first_singleton() {
        let pool = orthogonal_pool(&[1.0, 4.0, 2.0]);
        let m = MixingMatrix::identity(3);
        let ctx = SchedulerContext::new(&m, 8.0);
        let pf = PfState::with_weights(vec![0.0; 3]);
        let ex = schedule_exhaustive(&pool, 3, &pf, &ctx).unwrap();
        assert_eq!((ex.chosen.clone(), ex.utility), (vec![0], 0.0));
        let gr = schedule_greedy(&pool, 3, &pf, &ctx).unwrap();
        assert_eq!(gr.chosen, vec![0]);
    }

    #[test]
    fn greedy_stops_when_nothing_helps() {
        // near-collinear second direction: ZF inflates the precoder and
        // wipes out the gain of both streams
        let a = basis(2, 0);
        let b = CVector::from_vec(vec![c(0.999, 0.0), c((1.0f64 - 0.999 * 0.999).sqrt(), 0.0)]);
        let pool = CandidatePool::new(vec![entry(0, a, 100.0), entry(1, b, 0.5)]);
        let m = MixingMatrix::identity(2);
        let ctx = SchedulerContext::new(&m, 8.0);
        let gr = schedule_greedy(&pool, 2, &PfState::new(2), &ctx).unwrap();
        assert_eq!(gr.chosen, vec![0]);
        assert_eq!(gr.zf_invocations, 3);
    }

    #[test]
    fn per_ue_cap() {
        let pool = CandidatePool::new(vec![entry(0, basis(2, 0), 5.0), entry(0, basis(2, 1), 5.0)]);
        let m = MixingMatrix::identity(2);
        let mut ctx = SchedulerContext::new(&m, 8.0);
        ctx.max_streams_per_ue = Some(1);
        let ex = schedule_exhaustive(&pool, 2, &PfState::new(1), &ctx).unwrap();
        assert_eq!(ex.chosen.len(), 1);
    }

    #[test]
    fn budget_guard() {
        let pool = orthogonal_pool(&[1.0; 6]);
        let m = MixingMatrix::identity(6);
        let mut ctx = SchedulerContext::new(&m, 8.0);
        ctx.exhaustive_budget = 10;
        assert!(matches!(
            schedule_exhaustive(&pool, 3, &PfState::new(6), &ctx),
            Err(Error::BudgetExceeded { subsets: 20, budget: 10 })
        ));
        let fallback = schedule(crate::netchan::SchedulerKind::Exhaustive, &pool, 3, &PfState::new(6), &ctx).unwrap();
        assert_eq!(fallback.chosen.len(), 3);
    }

    #[test]
    fn counts() {
        assert_eq!(exhaustive_subset_count(12, 3), 12 + 66 + 220);
        assert_eq!(binomial(5, 7), 0);
        assert_eq!(greedy_zf_bound(12, 3), 33.0);
    }
}
