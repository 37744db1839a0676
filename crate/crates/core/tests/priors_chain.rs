use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use samtest::priors::{
    divergence_report, DivergenceMethod, MinimaxCase, Prior, PriorSpec, PriorVariant,
};
use samtest::{EigenProfile, Error, ProblemDims};

fn prior(variant: PriorVariant, p: u64, s: u64, n: f64, profile: EigenProfile) -> Result<Prior, Error> {
    Prior::new(PriorSpec { variant, dims: ProblemDims::new(p, s, n).unwrap(), profile })
}

#[test]
fn every_variant_draws_inside_the_parameter_space() {
    let sob = EigenProfile::sobolev(1.0);
    let cases = vec![
        prior(PriorVariant::Trivial { c: 1.0 }, 200, 3, 5.0, sob.clone()),
        prior(PriorVariant::Minimax { c: 0.7, case: MinimaxCase::Spike }, 500, 4, 300.0, sob.clone()),
        prior(PriorVariant::Minimax { c: 0.7, case: MinimaxCase::Bulk }, 500, 4, 3000.0, sob.clone()),
        prior(PriorVariant::MinimaxCompressed { c: 3.0 }, 500, 4, 3000.0, sob.clone()),
        prior(PriorVariant::Adaptive { c: 0.5 }, 256, 1, 4096.0, sob.clone()),
        prior(PriorVariant::AdaptiveCompressed { c: 3.0 }, 256, 1, 4096.0, sob.clone()),
        prior(PriorVariant::SobolevDense { c: 0.5, alpha0: 0.5, alpha1: 2.0 }, 100, 20, 1e5, sob.clone()),
        prior(
            PriorVariant::SobolevSparse { c: 0.5, alpha0: 0.5, alpha1: 2.0, delta: 0.1 },
            10_000,
            3,
            1e5,
            sob.clone(),
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for pr in cases {
        let pr = pr.unwrap();
        let comps = pr.components();
        for _ in 0..20 {
            let theta = pr.sample(pr.rows(), &mut rng);
            let norm = theta.frobenius_sq();
            assert!(
                comps.iter().any(|c| (c.frobenius_sq() - norm).abs() <= 1e-12 * norm.max(1e-300)),
                "{:?}: norm {norm} not among components",
                pr.spec().variant
            );
        }
    }
}

#[test]
fn compression_keeps_energy() {
    let sob = EigenProfile::sobolev(1.0);
    let plain = prior(PriorVariant::Adaptive { c: 0.5 }, 256, 1, 4096.0, sob.clone()).unwrap();
    let packed = prior(PriorVariant::AdaptiveCompressed { c: 0.5 }, 256, 1, 4096.0, sob.clone()).unwrap();
    for (a, b) in plain.components().iter().zip(packed.components()) {
        assert!((a.frobenius_sq() - b.frobenius_sq()).abs() < 1e-12 * a.frobenius_sq());
        assert!(b.rows <= a.rows);
    }
    // Large c leaves the ellipsoid without compression.
    assert!(matches!(
        prior(PriorVariant::Adaptive { c: 3.0 }, 256, 1, 4096.0, sob),
        Err(Error::InfeasibleSpec(_))
    ));
}

#[test]
fn divergence_methods() {
    let sob = EigenProfile::sobolev(1.0);
    let small = prior(PriorVariant::Trivial { c: 0.2 }, 100, 2, 10.0, sob.clone()).unwrap();
    assert_eq!(divergence_report(&small, 0.3, 0, 0).unwrap().method, DivergenceMethod::Exact);
    let big = prior(PriorVariant::Trivial { c: 0.05 }, 1_000_000, 2, 10.0, sob.clone()).unwrap();
    let r = divergence_report(&big, 0.3, 0, 0).unwrap();
    assert_eq!(r.method, DivergenceMethod::BoundOnly);
    assert!(r.value() < r.target);
    let mix = prior(PriorVariant::Adaptive { c: 0.2 }, 64, 1, 1024.0, sob).unwrap();
    let r = divergence_report(&mix, 0.3, 20_000, 1).unwrap();
    assert_eq!(r.method, DivergenceMethod::MonteCarlo);
    let (est, se) = r.monte_carlo.unwrap();
    assert!(est.is_finite() && se >= 0.0);
}
