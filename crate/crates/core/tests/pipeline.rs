use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use samtest::harness::{
    calibrate_table, estimate_type1, estimate_type2, generate_observation, Alternative,
    EnergySampler, StatisticId,
};
use samtest::priors::{MinimaxCase, Prior, PriorSpec, PriorVariant};
use samtest::statistics::{decide, dense_statistic, t_statistic, Energies, Observation, TestSpec};
use samtest::{CoefficientMatrix, EigenProfile, ProblemDims};

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let ids = [StatisticId::sparse(4, 1.5), StatisticId::dense(4)];
    let one = in_pool(1, || calibrate_table(&ids, 40, &[0.05, 0.1], 2000, 5).unwrap());
    let four = in_pool(4, || calibrate_table(&ids, 40, &[0.05, 0.1], 2000, 5).unwrap());
    assert_eq!(one, four);

    let spec = TestSpec::dense(4, 170.0);
    let a = in_pool(1, || estimate_type1(&spec, 40, 3000, 2).unwrap());
    let b = in_pool(3, || estimate_type1(&spec, 40, 3000, 2).unwrap());
    assert_eq!(a, b);
}

#[test]
fn observation_and_energy_paths_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut theta = CoefficientMatrix::zeros(16, 30);
    theta.set(0, 3, 0.4);
    theta.set(5, 7, -0.3);
    let obs = generate_observation(&theta, 100.0, &mut rng);
    let spec = TestSpec::sparse(8, 1.0, 3.0).unwrap();
    let e = Energies::from_observation(&obs, &spec.levels()).unwrap();
    assert_eq!(decide(&spec, &obs).unwrap(), spec.decide_energies(&e).unwrap());
    let t = t_statistic(&obs, 8, 1.0).unwrap();
    assert!((spec.statistic(&e).unwrap() - t).abs() <= 1e-9 * t.abs().max(1.0));
    let dense = TestSpec::dense(8, 0.0);
    let want = dense_statistic(&obs, 8).unwrap();
    assert!((dense.statistic(&e).unwrap() - want).abs() <= 1e-9 * want);
}

/// Mean of the dense statistic from full observations and from sampled
/// energies, under a fixed alternative.
#[test]
fn energy_sampler_matches_full_model_in_law() {
    let (p, n, nu) = (20usize, 50.0, 6u64);
    let mut theta = CoefficientMatrix::zeros(nu as usize, p);
    for j in 0..3 {
        theta.set(1, j, 0.3);
    }
    let lambda = n * theta.frobenius_sq();
    let reps = 4000;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let full: f64 = (0..reps)
        .map(|_| dense_statistic(&generate_observation(&theta, n, &mut rng), nu).unwrap())
        .sum::<f64>()
        / reps as f64;
    let sampler = EnergySampler::new(&[nu], p).unwrap();
    let lambdas = samtest::harness::signal_lambdas(&theta, n, &[nu]);
    let spec = TestSpec::dense(nu, 0.0);
    let fast: f64 = (0..reps)
        .map(|_| spec.statistic(&sampler.sample(Some(&lambdas), &mut rng)).unwrap())
        .sum::<f64>()
        / reps as f64;
    let want = (p as u64 * nu) as f64 + lambda;
    let se = (2.0 * (p as u64 * nu) as f64 + 4.0 * lambda).sqrt() / (reps as f64).sqrt();
    assert!((full - want).abs() < 5.0 * se, "full={full} want={want}");
    assert!((fast - want).abs() < 5.0 * se, "fast={fast} want={want}");
}

#[test]
fn stronger_signal_lowers_type2() {
    let profile = EigenProfile::sobolev(1.0);
    let dims = ProblemDims::new(64, 3, 2000.0).unwrap();
    let spec = TestSpec::sparse(12, 1.5, 10.0).unwrap();
    let mut prev = 1.0;
    for c in [0.5, 2.0, 4.0] {
        let prior = Prior::new(PriorSpec {
            variant: PriorVariant::MinimaxCompressed { c },
            dims,
            profile: profile.clone(),
        })
        .unwrap();
        let t2 = estimate_type2(&spec, Alternative::Prior(&prior), dims.n, 2000, 4).unwrap();
        assert!(t2.rate <= prev + 0.02, "c={c}: {} > {prev}", t2.rate);
        prev = t2.rate;
    }
    assert!(prev < 0.2);
    // The uncompressed bulk prior is a valid alternative at small c.
    let bulk = Prior::new(PriorSpec {
        variant: PriorVariant::Minimax { c: 0.5, case: MinimaxCase::Bulk },
        dims,
        profile,
    })
    .unwrap();
    assert!(estimate_type2(&spec, Alternative::Prior(&bulk), dims.n, 500, 4).is_ok());
}

#[test]
fn observation_rejects_bad_input() {
    assert!(Observation::new(CoefficientMatrix::zeros(2, 2), 0.0).is_err());
    assert!(Observation::new(CoefficientMatrix::zeros(2, 2), f64::NAN).is_err());
}
