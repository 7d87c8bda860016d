use blindid::bounds::{evaluate, BoundQuery};
use blindid::ensembles::{ConstraintScenario, Ensemble, EnsembleTag};
use blindid::lifting::{apply_a, measure};
use blindid::mc::plant_rank_one;
use blindid::recovery::{certify_weak, solve_scenario, VerdictStatus};
use blindid::rng::rng_from_seed;

fn recover(sc: &ConstraintScenario, tag: EnsembleTag, seed: u64) -> (bool, f64) {
    let ens = Ensemble::generate(sc, tag, seed).unwrap();
    let mut rng = rng_from_seed(seed + 1);
    let m0 = plant_rank_one(sc, tag.is_real(), &mut rng).unwrap();
    let rec = measure(&ens, &m0, 0.0, &mut rng).unwrap();
    let out = solve_scenario(&ens, &rec.z_tilde, sc, 10, &mut rng).unwrap().with_truth(&m0).unwrap();
    (out.is_success(&m0).unwrap(), out.residual)
}

#[test]
fn noiseless_recovery_above_threshold() {
    let cases = [
        (ConstraintScenario::subspace(6, 2, 3).unwrap(), EnsembleTag::ComplexGeneric),
        (ConstraintScenario::subspace(6, 2, 2).unwrap(), EnsembleTag::RealGeneric),
        (ConstraintScenario::mixed(6, 4, 1, 2).unwrap(), EnsembleTag::ComplexGeneric),
        (ConstraintScenario::sparsity(5, 4, 1, 4, 1).unwrap(), EnsembleTag::ComplexGeneric),
        (ConstraintScenario::subspace(7, 2, 2).unwrap(), EnsembleTag::ComplexUniformBall { radius: 0.6 }),
    ];
    for (i, (sc, tag)) in cases.iter().enumerate() {
        let (ok, residual) = recover(sc, *tag, 100 + i as u64);
        assert!(ok, "case {i}: residual {residual}");
    }
}

#[test]
fn recovered_matrix_reproduces_measurements() {
    let sc = ConstraintScenario::subspace(8, 3, 2).unwrap();
    let ens = Ensemble::generate(&sc, EnsembleTag::ComplexGeneric, 9).unwrap();
    let mut rng = rng_from_seed(9);
    let m0 = plant_rank_one(&sc, false, &mut rng).unwrap();
    let rec = measure(&ens, &m0, 0.0, &mut rng).unwrap();
    let out = solve_scenario(&ens, &rec.z_tilde, &sc, 5, &mut rng).unwrap();
    let a = apply_a(&ens, &out.m_hat).unwrap();
    let err: f64 = a.iter().zip(&rec.z_tilde).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt();
    assert!(err < 1e-8, "{err}");
}

#[test]
fn weak_certificate_agrees_with_regime() {
    let mut rng = rng_from_seed(5);
    let sc = ConstraintScenario::subspace(6, 2, 2).unwrap();
    let ens = Ensemble::generate(&sc, EnsembleTag::ComplexGeneric, 5).unwrap();
    let m0 = plant_rank_one(&sc, false, &mut rng).unwrap();
    let v = certify_weak(&ens, &m0, &sc, 50, 1e-8, &mut rng).unwrap();
    assert_eq!(v.status, VerdictStatus::CertifiedUnique);

    let low = sc.with_n(2).unwrap();
    let ens = Ensemble::generate(&low, EnsembleTag::ComplexGeneric, 5).unwrap();
    let v = certify_weak(&ens, &m0, &low, 50, 1e-8, &mut rng).unwrap();
    assert_eq!(v.status, VerdictStatus::CounterexampleFound);
    assert!(v.verify(&ens).unwrap());
}

#[test]
fn bound_report_is_consistent() {
    let q = BoundQuery::new(ConstraintScenario::subspace(10, 2, 2).unwrap());
    let r = evaluate(&q).unwrap();
    assert_eq!((r.d, r.two_d), (4, 8));
    let eps = r.epsilon_single.unwrap();
    assert!(eps > 0.0 && eps.is_finite());
    let w = r.weak_failure_bound.unwrap();
    assert!((0.0..=1.0).contains(&w));
}
