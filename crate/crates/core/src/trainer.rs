//! Completion by direct optimization of a free point set.
//!
//! The trainable parameters are the output coordinates themselves. Every
//! iteration recomputes the nearest-neighbor assignment against the ground
//! truth, evaluates the configured loss and its gradient, and takes one
//! optimizer step.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::losses::{evaluate_with_grad_assigned, metrics_assigned, LossSpec};
use crate::neighbors::assign_kdtree;
use crate::pointcloud::{Point3, PointCloud};
use crate::rng::SplitMix64;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    #[default]
    Adam,
}

impl FromStr for Optimizer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sgd" => Ok(Optimizer::Sgd),
            "adam" => Ok(Optimizer::Adam),
            _ => Err(format!("unknown optimizer '{s}'; expected sgd or adam")),
        }
    }
}

/// How the free points are initialized from the partial observation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Sample partial points with replacement and add isotropic Gaussian noise.
    Jitter { sigma: f64 },
    /// Uniform in `[-1, 1]^3`.
    UniformBox,
    /// Copy the partial points in order, cycling if more are needed.
    CopyPartial,
}

impl Default for Init {
    fn default() -> Self {
        Init::Jitter { sigma: 0.05 }
    }
}

impl FromStr for Init {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            None if s == "jitter" => Ok(Init::default()),
            None if s == "uniform_box" => Ok(Init::UniformBox),
            None if s == "copy_partial" => Ok(Init::CopyPartial),
            Some(("jitter", sigma)) => {
                let sigma: f64 = sigma.parse().map_err(|_| format!("bad jitter sigma '{sigma}'"))?;
                if sigma.is_finite() && sigma >= 0.0 {
                    Ok(Init::Jitter { sigma })
                } else {
                    Err(format!("jitter sigma must be non-negative, got {sigma}"))
                }
            }
            _ => Err(format!(
                "unknown init '{s}'; expected jitter[:SIGMA], uniform_box or copy_partial"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainConfig {
    pub loss: LossSpec,
    pub iters: usize,
    pub lr: f64,
    pub optimizer: Optimizer,
    pub seed: u64,
    pub eval_every: usize,
    pub output_size: usize,
    pub init: Init,
    /// F1 distance threshold for the log.
    pub tau: f64,
    /// Keep a snapshot of the points every this many iterations (plus the
    /// first and last).
    pub snapshot_every: Option<usize>,
    /// Fill `elapsed_ms` with wall-clock time. Off by default so that logs
    /// are reproducible bit for bit.
    pub record_timing: bool,
}

impl TrainConfig {
    pub fn new(loss: LossSpec, output_size: usize) -> Self {
        Self {
            loss,
            iters: 2000,
            lr: 0.01,
            optimizer: Optimizer::Adam,
            seed: 0,
            eval_every: 100,
            output_size,
            init: Init::default(),
            tau: 0.01,
            snapshot_every: None,
            record_timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.loss.validate()?;
        if self.iters == 0 {
            return Err(invalid("iters must be at least 1"));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(invalid(format!("learning rate must be positive, got {}", self.lr)));
        }
        if self.eval_every == 0 {
            return Err(invalid("eval_every must be at least 1"));
        }
        if self.output_size == 0 {
            return Err(invalid("output_size must be at least 1"));
        }
        if self.snapshot_every == Some(0) {
            return Err(invalid("snapshot interval must be at least 1"));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(invalid(format!("tau must be positive, got {}", self.tau)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogRow {
    pub iter: usize,
    pub loss: f64,
    pub grad_norm: f64,
    pub l1cd: f64,
    pub l2cd: f64,
    pub f1: f64,
    pub elapsed_ms: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    pub rows: Vec<LogRow>,
}

impl TrainLog {
    pub const CSV_HEADER: &'static str = "iter,loss,grad_norm,l1cd,l2cd,f1,elapsed_ms";

    pub fn first(&self) -> Option<&LogRow> {
        self.rows.first()
    }

    pub fn last(&self) -> Option<&LogRow> {
        self.rows.last()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.iter, r.loss, r.grad_norm, r.l1cd, r.l2cd, r.f1, r.elapsed_ms
            );
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FreePointModel {
    pub points: Vec<Point3>,
    pub init: Init,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub iter: usize,
    pub points: Vec<Point3>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub model: FreePointModel,
    pub log: TrainLog,
    pub snapshots: Vec<Snapshot>,
}

pub fn initialize(partial: &PointCloud, output_size: usize, init: Init, seed: u64) -> Vec<Point3> {
    let mut rng = SplitMix64::new(seed);
    let src = partial.points();
    match init {
        Init::Jitter { sigma } => (0..output_size)
            .map(|_| {
                let p = src[rng.next_index(src.len())];
                [
                    p[0] + sigma * rng.next_gaussian(),
                    p[1] + sigma * rng.next_gaussian(),
                    p[2] + sigma * rng.next_gaussian(),
                ]
            })
            .collect(),
        Init::UniformBox => (0..output_size)
            .map(|_| [rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)])
            .collect(),
        Init::CopyPartial => (0..output_size).map(|i| src[i % src.len()]).collect(),
    }
}

struct Adam {
    m: Vec<Point3>,
    v: Vec<Point3>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self {
            m: vec![[0.0; 3]; n],
            v: vec![[0.0; 3]; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [Point3], grad: &[Point3], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - ADAM_BETA1.powi(self.t);
        let c2 = 1.0 - ADAM_BETA2.powi(self.t);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            for a in 0..3 {
                m[a] = ADAM_BETA1 * m[a] + (1.0 - ADAM_BETA1) * g[a];
                v[a] = ADAM_BETA2 * v[a] + (1.0 - ADAM_BETA2) * g[a] * g[a];
                let m_hat = m[a] / c1;
                let v_hat = v[a] / c2;
                p[a] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
            }
        }
    }
}

/// Runs `cfg.iters` optimizer steps. Log rows are written at iteration 0,
/// every `eval_every` iterations, and at the final iteration; each row
/// describes the points after that many steps.
pub fn train(partial: &PointCloud, gt: &PointCloud, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let start = Instant::now();
    let mut points = initialize(partial, cfg.output_size, cfg.init, cfg.seed);
    let mut adam = Adam::new(points.len());
    let mut log = TrainLog::default();
    let mut snapshots = Vec::new();

    for iter in 0..=cfg.iters {
        let assignment = assign_kdtree(&points, gt.points())?;
        let lg = evaluate_with_grad_assigned(&cfg.loss, &points, gt.points(), &assignment)?;
        if !lg.value.is_finite() {
            return Err(Error::Diverged { iter, reason: format!("loss is {}", lg.value) });
        }
        let grad_norm = lg.grad_norm();
        if !grad_norm.is_finite() {
            return Err(Error::Diverged { iter, reason: "gradient is not finite".into() });
        }
        let last = iter == cfg.iters;
        if iter % cfg.eval_every == 0 || last {
            let m = metrics_assigned(&points, gt.points(), &assignment, cfg.tau)?;
            let elapsed_ms = if cfg.record_timing {
                start.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            };
            log.rows.push(LogRow {
                iter,
                loss: lg.value,
                grad_norm,
                l1cd: m.l1cd,
                l2cd: m.l2cd,
                f1: m.f1,
                elapsed_ms,
            });
        }
        if let Some(every) = cfg.snapshot_every {
            if iter % every == 0 || last {
                snapshots.push(Snapshot { iter, points: points.clone() });
            }
        }
        if last {
            break;
        }
        match cfg.optimizer {
            Optimizer::Sgd => {
                for (p, g) in points.iter_mut().zip(&lg.grad) {
                    for a in 0..3 {
                        p[a] -= cfg.lr * g[a];
                    }
                }
            }
            Optimizer::Adam => adam.step(&mut points, &lg.grad, cfg.lr),
        }
        if let Some(bad) = points.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::Diverged {
                iter: iter + 1,
                reason: format!("point {bad} left the finite range"),
            });
        }
    }

    Ok(TrainOutcome {
        model: FreePointModel { points, init: cfg.init },
        log,
        snapshots,
    })
}

/// Frobenius distance between matching snapshots of two runs.
pub fn compare_runs(a: &[Snapshot], b: &[Snapshot]) -> Result<Vec<(usize, f64)>> {
    if a.len() != b.len() {
        return Err(invalid(format!("runs have {} and {} snapshots", a.len(), b.len())));
    }
    a.iter()
        .zip(b)
        .map(|(sa, sb)| {
            if sa.iter != sb.iter {
                return Err(invalid(format!("snapshot iterations differ: {} vs {}", sa.iter, sb.iter)));
            }
            if sa.points.len() != sb.points.len() {
                return Err(invalid(format!(
                    "snapshot {} has {} vs {} points",
                    sa.iter,
                    sa.points.len(),
                    sb.points.len()
                )));
            }
            let sq: f64 = sa
                .points
                .iter()
                .zip(&sb.points)
                .flat_map(|(p, q)| (0..3).map(move |i| (p[i] - q[i]) * (p[i] - q[i])))
                .sum();
            Ok((sa.iter, sq.sqrt()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointcloud::{crop, generate, CropSpec, ShapeKind, ShapeSpec};

    fn sphere(n: usize) -> PointCloud {
        generate(&ShapeSpec::new(ShapeKind::Sphere, n, 42)).unwrap()
    }

    #[test]
    fn perfect_start_is_a_fixed_point() {
        let gt = sphere(128);
        for loss in [LossSpec::CdL1, LossSpec::CdL2, LossSpec::hypercd(1.0)] {
            let mut cfg = TrainConfig::new(loss, gt.len());
            cfg.init = Init::CopyPartial;
            cfg.iters = 50;
            cfg.eval_every = 10;
            let out = train(&gt, &gt, &cfg).unwrap();
            assert_eq!(out.model.points, gt.points());
            assert!(out.log.rows.iter().all(|r| r.loss == 0.0 && r.grad_norm == 0.0));
        }
    }

    #[test]
    fn log_rows_follow_schedule() {
        let gt = sphere(64);
        let mut cfg = TrainConfig::new(LossSpec::CdL1, 64);
        cfg.iters = 25;
        cfg.eval_every = 10;
        cfg.snapshot_every = Some(20);
        let out = train(&gt, &gt, &cfg).unwrap();
        let iters: Vec<usize> = out.log.rows.iter().map(|r| r.iter).collect();
        assert_eq!(iters, vec![0, 10, 20, 25]);
        let snaps: Vec<usize> = out.snapshots.iter().map(|s| s.iter).collect();
        assert_eq!(snaps, vec![0, 20, 25]);
        assert_eq!(
            out.log.to_csv().lines().next().unwrap(),
            "iter,loss,grad_norm,l1cd,l2cd,f1,elapsed_ms"
        );
    }

    #[test]
    fn runs_are_deterministic() {
        let gt = sphere(200);
        let partial = crop(&gt, &CropSpec::new([1.0, 0.0, 0.0], 0.5).unwrap());
        let mut cfg = TrainConfig::new(LossSpec::hypercd(1.0), 200);
        cfg.iters = 60;
        cfg.eval_every = 7;
        cfg.seed = 9;
        let a = train(&partial, &gt, &cfg).unwrap();
        let b = train(&partial, &gt, &cfg).unwrap();
        assert_eq!(a.log.to_csv(), b.log.to_csv());
        assert_eq!(a, b);
    }

    #[test]
    fn divergence_is_reported_with_iteration() {
        let gt = sphere(64);
        let partial = crop(&gt, &CropSpec::new([0.0, 0.0, 1.0], 0.5).unwrap());
        let mut cfg = TrainConfig::new(LossSpec::CdL2, 64);
        cfg.optimizer = Optimizer::Sgd;
        cfg.lr = 1e200;
        cfg.iters = 50;
        match train(&partial, &gt, &cfg) {
            Err(Error::Diverged { iter, .. }) => assert!((1..=50).contains(&iter)),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn sgd_reduces_loss() {
        let gt = sphere(128);
        let partial = crop(&gt, &CropSpec::new([1.0, 0.0, 0.0], 0.5).unwrap());
        let mut cfg = TrainConfig::new(LossSpec::CdL2, 128);
        cfg.optimizer = Optimizer::Sgd;
        cfg.lr = 20.0;
        cfg.iters = 200;
        let out = train(&partial, &gt, &cfg).unwrap();
        assert!(out.log.last().unwrap().loss < 0.5 * out.log.first().unwrap().loss);
    }

    #[test]
    fn init_policies() {
        let gt = sphere(10);
        let copy = initialize(&gt, 25, Init::CopyPartial, 0);
        assert_eq!(copy[13], gt.points()[3]);
        let boxed = initialize(&gt, 100, Init::UniformBox, 1);
        assert!(boxed.iter().flatten().all(|c| (-1.0..1.0).contains(c)));
        let jitter = initialize(&gt, 50, Init::Jitter { sigma: 0.0 }, 2);
        assert!(jitter.iter().all(|p| gt.points().contains(p)));
        assert_eq!("jitter:0.1".parse::<Init>().unwrap(), Init::Jitter { sigma: 0.1 });
        assert!("jitter:-1".parse::<Init>().is_err());
    }

    #[test]
    fn compare_runs_checks_shapes() {
        let a = vec![Snapshot { iter: 0, points: vec![[0.0; 3], [1.0, 0.0, 0.0]] }];
        let b = vec![Snapshot { iter: 0, points: vec![[0.0, 3.0, 0.0], [1.0, 0.0, 4.0]] }];
        assert_eq!(compare_runs(&a, &b).unwrap(), vec![(0, 5.0)]);
        assert_eq!(compare_runs(&a, &a).unwrap(), vec![(0, 0.0)]);
        let c = vec![Snapshot { iter: 1, points: vec![[0.0; 3], [0.0; 3]] }];
        assert!(compare_runs(&a, &c).is_err());
        let d = vec![Snapshot { iter: 0, points: vec![[0.0; 3]] }];
        assert!(compare_runs(&a, &d).is_err());
        assert!(compare_runs(&a, &[]).is_err());
    }
}
