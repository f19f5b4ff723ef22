use cdd_core::losses::{evaluate_with_grad, weighted_cd};
use cdd_core::pointcloud::{format_xyz, parse_xyz};
use cdd_core::{
    assign_brute, assign_kdtree, crop, default_grid, evaluate, generate, grid_search, CropSpec, DistillConfig,
    LossSpec, ParamGrid, Point3, PointCloud, ReferenceDistribution, ShapeKind, ShapeSpec, WeightingFunction,
    WeightingKind,
};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = Point3> {
    prop::array::uniform3(-2.0f64..2.0)
}

fn cloud(max: usize) -> impl Strategy<Value = Vec<Point3>> {
    prop::collection::vec(point(), 1..max)
}

/// Points on a coarse lattice, so exact distance ties are common.
fn lattice_cloud(max: usize) -> impl Strategy<Value = Vec<Point3>> {
    prop::collection::vec(prop::array::uniform3((0i32..5).prop_map(|v| v as f64 * 0.5)), 1..max)
}

fn loss_spec() -> impl Strategy<Value = LossSpec> {
    prop_oneof![
        Just(LossSpec::CdL1),
        Just(LossSpec::CdL2),
        (0.1f64..4.0).prop_map(LossSpec::hypercd),
        prop::sample::select(WeightingKind::ALL.to_vec())
            .prop_map(|k| LossSpec::weighted(WeightingFunction::reference(k))),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn losses_are_symmetric_and_nonnegative(spec in loss_spec(), a in cloud(40), b in cloud(40)) {
        let ab = evaluate(&spec, &a, &b).unwrap();
        let ba = evaluate(&spec, &b, &a).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() <= 1e-12 * ab.max(1.0));
    }

    #[test]
    fn plain_losses_vanish_on_equal_sets(spec in loss_spec(), a in cloud(40), seed in any::<u64>()) {
        // same set, reordered, with duplicates of existing points
        let mut b = a.clone();
        b.rotate_left(seed as usize % a.len());
        b.push(a[seed as usize % a.len()]);
        if !matches!(spec, LossSpec::WeightedCd { .. }) {
            prop_assert_eq!(evaluate(&spec, &a, &b).unwrap(), 0.0);
        }
        let g = evaluate_with_grad(&spec, &a, &b).unwrap();
        prop_assert!(g.grad.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn kdtree_matches_brute_force(a in cloud(300), b in cloud(300)) {
        prop_assert_eq!(assign_kdtree(&a, &b).unwrap(), assign_brute(&a, &b).unwrap());
    }

    #[test]
    fn kdtree_matches_brute_force_with_ties(a in lattice_cloud(200), b in lattice_cloud(200)) {
        prop_assert_eq!(assign_kdtree(&a, &b).unwrap(), assign_brute(&a, &b).unwrap());
    }

    #[test]
    fn constant_weighting_is_plain_cd(a in cloud(60), b in cloud(60)) {
        struct Constant;
        impl cdd_core::Weighting for Constant {
            fn pdf(&self, _: f64) -> f64 { 1.0 }
            fn pdf_prime(&self, _: f64) -> cdd_core::Result<f64> { Ok(0.0) }
            fn mode(&self) -> f64 { 0.0 }
        }
        let w = weighted_cd(&Constant, true, &a, &b).unwrap();
        let plain = evaluate(&LossSpec::CdL1, &a, &b).unwrap();
        prop_assert!((w - plain).abs() <= 1e-12);
    }

    #[test]
    fn crop_keeps_ceiling_of_ratio(
        n in 1usize..300,
        seed in any::<u64>(),
        dir in point(),
        ratio in 0.001f64..=1.0,
    ) {
        prop_assume!(dir.iter().any(|c| c.abs() > 1e-3));
        let pc = generate(&ShapeSpec::new(ShapeKind::Cube, n, seed)).unwrap();
        let kept = crop(&pc, &CropSpec::new(dir, ratio).unwrap());
        let expected = ((ratio * n as f64).ceil() as usize).clamp(1, n);
        prop_assert_eq!(kept.len(), expected);
        prop_assert!(kept.iter().all(|p| pc.points().contains(p)));
    }

    #[test]
    fn xyz_round_trip_is_exact(points in prop::collection::vec(
        prop::array::uniform3(any::<f64>().prop_filter("finite", |v| v.is_finite())), 1..50)) {
        let pc = PointCloud::new(points).unwrap();
        prop_assert!(parse_xyz(&format_xyz(&pc)).unwrap().bitwise_eq(&pc));
    }

    #[test]
    fn grid_search_ignores_axis_order(kind in prop::sample::select(WeightingKind::ALL.to_vec()), seed in any::<u64>()) {
        let cfg = DistillConfig::default();
        let dist = ReferenceDistribution::exp_decay(&cfg, 300.0).unwrap();
        let grid = default_grid(kind);
        let mut axes = grid.axes().to_vec();
        for (i, axis) in axes.iter_mut().enumerate() {
            let len = axis.len();
            axis.rotate_left((seed as usize >> (8 * i)) % len);
            if seed & (1 << i) != 0 {
                axis.reverse();
            }
        }
        let shuffled = ParamGrid::new(kind, axes).unwrap();
        let a = grid_search(&grid, &cfg, &dist).unwrap();
        let b = grid_search(&shuffled, &cfg, &dist).unwrap();
        prop_assert_eq!(a.objective, b.objective);
        prop_assert_eq!(a.evaluated, b.evaluated);
    }
}

#[test]
fn distinct_seeds_give_distinct_clouds() {
    for kind in [ShapeKind::Sphere, ShapeKind::Cube, ShapeKind::Torus] {
        let a = generate(&ShapeSpec::new(kind, 64, 1)).unwrap();
        let b = generate(&ShapeSpec::new(kind, 64, 2)).unwrap();
        assert!(!a.bitwise_eq(&b));
        assert!(a.bitwise_eq(&generate(&ShapeSpec::new(kind, 64, 1)).unwrap()));
    }
}
