//! Greedy versus exhaustive stream selection on random candidate pools,
//! with the ZF cost counters of each.

use iasim::netchan::{complex_gaussian, MixingFamily};
use iasim::precoding::make_mixing_matrix;
use iasim::receiver::{build_feedback, equivalent_channel, in_covariance, InterfererPrecoders};
use iasim::scheduler::{greedy_zf_bound, schedule_exhaustive, schedule_greedy, CandidatePool, PfState, SchedulerContext};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> iasim::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mixing = make_mixing_matrix(4, 1, 0.0, MixingFamily::Fourier)?;
    let ctx = SchedulerContext::new(&mixing, 8.0);
    let pf = PfState::new(4);
    for trial in 0..5 {
        let mut entries = Vec::new();
        for ue in 0..4 {
            let h = complex_gaussian(4, 4, &mut rng);
            let hn = complex_gaussian(4, 4, &mut rng);
            let phi = in_covariance(Some(&hn), &mixing, InterfererPrecoders::Identity, 1.0, 3, 0.05, 0.0).scaled(3.0);
            entries.extend(build_feedback(ue, &equivalent_channel(&h, &mixing, &phi), 3)?);
        }
        let pool = CandidatePool::new(entries);
        let greedy = schedule_greedy(&pool, 3, &pf, &ctx)?;
        let best = schedule_exhaustive(&pool, 3, &pf, &ctx)?;
        println!(
            "pool {trial}: greedy {:?} utility {:.3} ({} ZF, bound {}) | exhaustive {:?} utility {:.3} ({} subsets)",
            greedy.chosen,
            greedy.utility,
            greedy.zf_invocations,
            greedy_zf_bound(pool.len(), 3),
            best.chosen,
            best.utility,
            best.subsets_evaluated
        );
    }
    Ok(())
}
