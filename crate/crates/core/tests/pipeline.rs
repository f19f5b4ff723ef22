use cdd_core::distill::{SelfGenerated, score};
use cdd_core::losses::metrics;
use cdd_core::{
    build_reference_distribution, compare_runs, crop, default_grid, generate, grid_search, reference_curve, rescale,
    train, CropSpec, DistillConfig, LossSpec, ReferenceDistribution, ReferenceSource, ShapeKind, ShapeSpec,
    TrainConfig, WeightingFunction, WeightingKind,
};

fn toy_task() -> (cdd_core::PointCloud, cdd_core::PointCloud) {
    let gt = generate(&ShapeSpec::new(ShapeKind::Sphere, 256, 3)).unwrap();
    let partial = crop(&gt, &CropSpec::new([0.0, 0.0, 1.0], 0.5).unwrap());
    (gt, partial)
}

#[test]
fn training_reduces_loss_and_distance() {
    let (gt, partial) = toy_task();
    for loss in [
        LossSpec::CdL1,
        LossSpec::CdL2,
        LossSpec::hypercd(1.0),
        LossSpec::weighted(WeightingFunction::Landau),
        LossSpec::weighted(WeightingFunction::reference(WeightingKind::LogLogistic)),
    ] {
        let mut cfg = TrainConfig::new(loss, gt.len());
        cfg.iters = 300;
        let out = train(&partial, &gt, &cfg).unwrap();
        let (first, last) = (out.log.first().unwrap(), out.log.last().unwrap());
        assert!(last.loss < first.loss, "{loss}");
        assert!(last.l2cd < first.l2cd / 3.0, "{loss}: {} -> {}", first.l2cd, last.l2cd);
        let m = metrics(&out.model.points, gt.points(), cfg.tau).unwrap();
        assert_eq!(m.l2cd, last.l2cd);
    }
}

#[test]
fn runs_sharing_seed_start_together_and_then_diverge() {
    let (gt, partial) = toy_task();
    let run = |loss| {
        let mut cfg = TrainConfig::new(loss, gt.len());
        cfg.iters = 60;
        cfg.snapshot_every = Some(20);
        train(&partial, &gt, &cfg).unwrap().snapshots
    };
    let a = run(LossSpec::CdL1);
    let b = run(LossSpec::weighted(WeightingFunction::Normal { sigma: 1.4 }));
    let rows = compare_runs(&a, &b).unwrap();
    assert_eq!(rows.iter().map(|r| r.0).collect::<Vec<_>>(), [0, 20, 40, 60]);
    assert_eq!(rows[0].1, 0.0);
    assert!(rows[1..].iter().all(|r| r.1 > 0.0));
    assert!(compare_runs(&a, &a).unwrap().iter().all(|r| r.1 == 0.0));
}

#[test]
fn self_generated_reference_feeds_distillation() {
    let cfg = DistillConfig::default();
    let source = ReferenceSource::SelfGenerated(SelfGenerated {
        shape: ShapeSpec::new(ShapeKind::Sphere, 256, 42),
        iters: 200,
        ..SelfGenerated::default()
    });
    let dist = build_reference_distribution(&source, &cfg).unwrap();
    let total: f64 = dist.p_values().iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert_eq!(dist.d_values(), &cfg.distances()[..]);
    assert_eq!(dist, build_reference_distribution(&source, &cfg).unwrap());

    let result = grid_search(&default_grid(WeightingKind::Normal), &cfg, &dist).unwrap();
    let reference = rescale(&reference_curve(&cfg).unwrap()).unwrap();
    let (at_reference, _) = score(&WeightingFunction::Normal { sigma: 1.4 }, &reference, &cfg, &dist).unwrap();
    assert!(result.objective <= at_reference);
}

#[test]
fn empirical_reference_round_trips_through_csv() {
    let cfg = DistillConfig::default();
    let dist = ReferenceDistribution::exp_decay(&cfg, 300.0).unwrap();
    let close = |a: &ReferenceDistribution| {
        assert_eq!(a.d_values(), dist.d_values());
        for (p, q) in a.p_values().iter().zip(dist.p_values()) {
            assert!((p - q).abs() <= 1e-15 * q, "{p} vs {q}");
        }
    };
    // re-normalizing already normalized mass may move the last bit
    close(&ReferenceDistribution::parse_csv(&cfg, &dist.to_csv()).unwrap());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.csv");
    std::fs::write(&path, dist.to_csv()).unwrap();
    close(&build_reference_distribution(&ReferenceSource::EmpiricalFile(path), &cfg).unwrap());
}

#[test]
fn every_kind_fits_better_than_a_flat_curve() {
    let cfg = DistillConfig::default();
    let dist = build_reference_distribution(&ReferenceSource::default(), &cfg).unwrap();
    let reference = rescale(&reference_curve(&cfg).unwrap()).unwrap();
    let flat = cdd_core::distill::objective(
        &reference,
        &cdd_core::GradientWeightCurve {
            d_values: reference.d_values.clone(),
            z_values: vec![1.0; reference.d_values.len()],
            rescaled: true,
        },
        &dist,
    )
    .unwrap();
    for kind in WeightingKind::ALL {
        let result = grid_search(&default_grid(kind), &cfg, &dist).unwrap();
        assert!(result.objective < flat, "{kind}: {} vs {flat}", result.objective);
    }
}
