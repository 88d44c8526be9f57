use proptest::prelude::*;
use sshqst::ensemble::with_parameters;
use sshqst::{
    compare_protocols, final_transfer_probability, run_ensemble, scaling_study, sweep2d, DisorderKind,
    DisorderSpec, EnsembleOptions, Histogram, Model, Pairing, Protocol, ProtocolSchedule, ScalingRule,
    StepControl, SweepAxis, SweepParam,
};

fn rabi() -> Protocol {
    Protocol::new(ProtocolSchedule::rabi(0.1, 86.0).unwrap(), 10).unwrap()
}

fn lz() -> Protocol {
    Protocol::new(ProtocolSchedule::lz(0.1, 0.2, 60.0, 120.0).unwrap(), 10).unwrap()
}

fn options(realizations: usize, seed: u64) -> EnsembleOptions {
    EnsembleOptions {
        realizations,
        seed,
        ..EnsembleOptions::default()
    }
}

#[test]
fn ensemble_is_identical_across_thread_counts() {
    let disorder = DisorderSpec::new(DisorderKind::OffDiagonal, 0.5).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| run_ensemble(&lz(), &disorder, &options(12, 7)).unwrap())
    };
    let one = run(1);
    let three = run(3);
    let bits = |r: &sshqst::EnsembleResult| r.samples.iter().map(|p| p.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&one), bits(&three));
    assert_eq!(one, three);
}

#[test]
fn zero_strength_paired_differences_are_constant() {
    let disorder = DisorderSpec::new(DisorderKind::OnDiagonal, 0.0).unwrap();
    let cmp = compare_protocols(&rabi(), &lz(), &disorder, &options(6, 3), Pairing::Paired).unwrap();
    let clean_rabi = final_transfer_probability(10, &rabi().schedule, None, &StepControl::default()).unwrap();
    let clean_lz = final_transfer_probability(10, &lz().schedule, None, &StepControl::default()).unwrap();
    for d in cmp.differences() {
        assert!((d - (clean_lz - clean_rabi)).abs() < 1e-12);
    }
}

#[test]
fn paired_comparison_shares_disorder() {
    let disorder = DisorderSpec::new(DisorderKind::OffDiagonal, 0.4).unwrap();
    let cmp = compare_protocols(&rabi(), &lz(), &disorder, &options(4, 11), Pairing::Paired).unwrap();
    let lz_alone = run_ensemble(&lz(), &disorder, &options(4, 11)).unwrap();
    assert_eq!(cmp.lz.samples, lz_alone.samples);
    let marginal = compare_protocols(&rabi(), &lz(), &disorder, &options(4, 11), Pairing::Marginal).unwrap();
    assert_eq!(marginal.rabi.samples, cmp.rabi.samples);
    assert_ne!(marginal.lz.samples, cmp.lz.samples);
}

#[test]
fn disorder_degrades_mean_transfer_monotonically() {
    let means: Vec<f64> = [0.2, 0.5, 0.8]
        .iter()
        .map(|&w| {
            let disorder = DisorderSpec::new(DisorderKind::OnDiagonal, w).unwrap();
            run_ensemble(&lz(), &disorder, &options(200, 1))
                .unwrap()
                .summary
                .mean
        })
        .collect();
    assert!(means[0] > means[1] && means[1] > means[2], "{means:?}");
}

#[test]
fn lz_outperforms_rabi_at_intermediate_disorder() {
    let disorder = DisorderSpec::new(DisorderKind::OnDiagonal, 0.5).unwrap();
    let cmp = compare_protocols(&rabi(), &lz(), &disorder, &options(1000, 2), Pairing::Paired).unwrap();
    assert!(
        cmp.lz.summary.fraction_above_0_9 > cmp.rabi.summary.fraction_above_0_9,
        "lz {} rabi {}",
        cmp.lz.summary.fraction_above_0_9,
        cmp.rabi.summary.fraction_above_0_9
    );
}

#[test]
fn histogram_is_a_density() {
    let disorder = DisorderSpec::new(DisorderKind::OnDiagonal, 0.3).unwrap();
    let result = run_ensemble(&lz(), &disorder, &options(40, 5)).unwrap();
    assert!((result.histogram.integral() - 1.0).abs() < 1e-12);
    assert_eq!(result.histogram.counts.iter().sum::<usize>(), 40);
    assert_eq!(result.metadata.realizations, 40);
}

#[test]
fn duration_and_delta_sweep_has_connected_high_fidelity_region() {
    let base = lz().schedule;
    let a1 = SweepAxis::new(SweepParam::Duration, vec![200.0, 220.0, 240.0, 260.0, 280.0]).unwrap();
    let a2 = SweepAxis::new(SweepParam::Delta0, vec![0.15, 0.2, 0.25]).unwrap();
    let sweep = sweep2d(&base, &a1, &a2, 10, Model::Full, &StepControl::default()).unwrap();
    let good: Vec<Vec<bool>> = sweep
        .values
        .iter()
        .map(|r| r.iter().map(|&p| p > 0.95).collect())
        .collect();
    assert!(
        good[2][1],
        "the reference point (T = 240, delta0 = 0.2) must be in the region"
    );
    let mut seen = vec![vec![false; 3]; 5];
    let mut stack = vec![(2usize, 1usize)];
    let mut size = 0;
    while let Some((i, j)) = stack.pop() {
        if seen[i][j] || !good[i][j] {
            continue;
        }
        seen[i][j] = true;
        size += 1;
        if i > 0 {
            stack.push((i - 1, j));
        }
        if i + 1 < 5 {
            stack.push((i + 1, j));
        }
        if j > 0 {
            stack.push((i, j - 1));
        }
        if j + 1 < 3 {
            stack.push((i, j + 1));
        }
    }
    assert!(size > 1, "region around the reference point is a single cell");
}

#[test]
fn duration_and_epsilon_sweep_finds_high_fidelity() {
    let base = ProtocolSchedule::lz(0.1, 0.2, 40.0, 160.0).unwrap();
    let a1 = SweepAxis::new(SweepParam::Duration, vec![200.0, 240.0, 280.0]).unwrap();
    let a2 = SweepAxis::new(SweepParam::Epsilon, vec![0.1, 0.15, 0.2]).unwrap();
    let sweep = sweep2d(&base, &a1, &a2, 10, Model::Full, &StepControl::default()).unwrap();
    assert!(
        sweep.values.iter().flatten().any(|&p| p > 0.95),
        "{:?}",
        sweep.values
    );
    let cell = with_parameters(
        &base,
        &[(SweepParam::Duration, 200.0), (SweepParam::Epsilon, 0.2)],
    )
    .unwrap();
    let direct = final_transfer_probability(10, &cell, None, &StepControl::default()).unwrap();
    assert_eq!(sweep.values[0][2], direct);
}

#[test]
fn two_level_sweep_runs_on_same_grid() {
    let base = lz().schedule;
    let a1 = SweepAxis::new(SweepParam::Duration, vec![240.0]).unwrap();
    let a2 = SweepAxis::new(SweepParam::Delta0, vec![0.2]).unwrap();
    let sweep = sweep2d(&base, &a1, &a2, 10, Model::TwoLevel, &StepControl::default()).unwrap();
    assert!(sweep.values[0][0] > 0.95);
}

#[test]
fn superlinear_scaling_recovers_long_chains() {
    let rule = ScalingRule::default();
    let control = StepControl::default();
    let fast = scaling_study(1.3, &[40], &rule, &control).unwrap();
    let linear = scaling_study(1.0, &[40], &rule, &control).unwrap();
    assert!(fast[0].transfer_probability > 0.98);
    assert!(linear[0].transfer_probability < fast[0].transfer_probability);
    let reference = scaling_study(1.3, &[10], &rule, &control).unwrap();
    assert_eq!(
        reference[0].params,
        sshqst::LzParams::new(0.1, 0.2, 60.0, 120.0).unwrap()
    );
}

proptest! {
    #[test]
    fn histogram_normalized_for_any_samples(samples in prop::collection::vec(0.0f64..=1.0, 1..300), bins in 1usize..50) {
        let h = Histogram::from_samples(&samples, bins).unwrap();
        prop_assert!((h.integral() - 1.0).abs() < 1e-12);
        prop_assert_eq!(h.counts.iter().sum::<usize>(), samples.len());
    }
}
