//! Weighted Chamfer distance losses and loss distillation by gradient matching.
//!
//! * [`pointcloud`]: point sets, synthetic shapes, cropping, XYZ/PLY files.
//! * [`neighbors`]: exact nearest-neighbor assignment (brute force and kd-tree).
//! * [`weightfns`]: the weighting densities with modes and derivatives.
//! * [`losses`]: CD, hyperbolic CD and weighted CD with analytic gradients.
//! * [`distill`]: grid search that matches weighted-CD gradient weights to
//!   hyperbolic CD.
//! * [`trainer`]: free-point completion training and run comparison.

pub mod distill;
pub mod error;
pub mod losses;
pub mod neighbors;
pub mod pointcloud;
pub mod rng;
pub mod special;
pub mod trainer;
pub mod weightfns;

pub use distill::{
    build_reference_distribution, candidate_curve, grid_search, objective, reference_curve, rescale, Approx,
    DistillConfig, DistillResult, GradientWeightCurve, ReferenceDistribution, ReferenceSource,
};
pub use error::{Error, Result};
pub use losses::{evaluate, evaluate_with_grad, f1_score, LossGradient, LossSpec, Metrics};
pub use neighbors::{assign_brute, assign_kdtree, Nearest, NearestAssignment};
pub use pointcloud::{crop, generate, CropSpec, Point3, PointCloud, ShapeKind, ShapeSpec};
pub use trainer::{compare_runs, train, FreePointModel, Init, Optimizer, Snapshot, TrainConfig, TrainLog};
pub use weightfns::{default_grid, ParamGrid, Weighting, WeightingFunction, WeightingKind};
