//! Loss distillation by gradient matching.
//!
//! For a weighting family, every parameter point of a grid is scored by how
//! well its rescaled gradient-weight curve `z_W(d) = f'(m + d) d + f(m + d)`
//! tracks the rescaled hyperbolic-CD curve `z_H(d)` under a reference
//! distribution of nearest-neighbor distances:
//!
//! ```text
//! J(f) = sum_i p(d_i) * |z_H(d_i) / max z_H - z_W(d_i) / max z_W|
//! ```
//!
//! The grid point with the smallest `J` wins.

use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::losses::{hypercd_weight, LossSpec};
use crate::neighbors::assign_kdtree;
use crate::pointcloud::{crop, generate, CropSpec, ShapeKind, ShapeSpec};
use crate::trainer::{train, TrainConfig};
use crate::weightfns::{ParamGrid, Weighting, WeightingFunction, WeightingKind};

/// How `z_W` is computed from the density.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Approx {
    /// `z_W(d) ~ f(m + d)`: the derivative term is dropped.
    #[default]
    Dominant,
    /// `f'` replaced by the forward difference `(f(m+d+delta) - f(m+d)) / delta`.
    FiniteDiff,
}

impl FromStr for Approx {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "dominant" => Ok(Approx::Dominant),
            "finite_diff" => Ok(Approx::FiniteDiff),
            _ => Err(format!("unknown approximation '{s}'; expected dominant or finite_diff")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DistillConfig {
    /// Curvature of the reference hyperbolic CD.
    pub alpha: f64,
    pub d_max: f64,
    pub step: f64,
    pub approx: Approx,
    /// Forward-difference step for [`Approx::FiniteDiff`].
    pub delta: f64,
}

impl Default for DistillConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            d_max: 0.01,
            step: 2e-4,
            approx: Approx::Dominant,
            delta: 1e-4,
        }
    }
}

impl DistillConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(invalid(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.step > 0.0 && self.step <= self.d_max && self.d_max.is_finite()) {
            return Err(invalid(format!(
                "need 0 < step <= d_max, got step={} d_max={}",
                self.step, self.d_max
            )));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(invalid(format!("delta must be positive, got {}", self.delta)));
        }
        Ok(())
    }

    /// Sample distances `0, step, 2 step, ...` up to `d_max`.
    pub fn distances(&self) -> Vec<f64> {
        let n = (self.d_max / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| i as f64 * self.step).collect()
    }

    fn bin_of(&self, d: f64) -> Option<usize> {
        let n = (self.d_max / self.step + 1e-9).floor() as usize;
        let bin = (d / self.step).round();
        (bin >= 0.0 && bin <= n as f64).then_some(bin as usize)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradientWeightCurve {
    pub d_values: Vec<f64>,
    pub z_values: Vec<f64>,
    pub rescaled: bool,
}

impl GradientWeightCurve {
    pub fn new(d_values: Vec<f64>, z_values: Vec<f64>) -> Result<Self> {
        if d_values.len() != z_values.len() {
            return Err(invalid("curve has mismatched d and z lengths"));
        }
        Ok(Self {
            d_values,
            z_values,
            rescaled: false,
        })
    }

    pub fn max(&self) -> f64 {
        self.z_values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `z_H` on the configured grid, unrescaled. At `d = 0` this is `sqrt(2 alpha)`.
pub fn reference_curve(cfg: &DistillConfig) -> Result<GradientWeightCurve> {
    cfg.validate()?;
    let d = cfg.distances();
    let z = d.iter().map(|&d| hypercd_weight(cfg.alpha, d)).collect();
    GradientWeightCurve::new(d, z)
}

/// `z_W` evaluated right of the mode, at `m + d`, unrescaled.
pub fn candidate_curve<W: Weighting>(f: &W, cfg: &DistillConfig) -> Result<GradientWeightCurve> {
    cfg.validate()?;
    let m = f.mode();
    let d = cfg.distances();
    let z = d
        .iter()
        .map(|&d| {
            let base = f.pdf(m + d);
            let z = match cfg.approx {
                Approx::Dominant => base,
                Approx::FiniteDiff => (f.pdf(m + d + cfg.delta) - base) / cfg.delta * d + base,
            };
            if z.is_finite() {
                Ok(z)
            } else {
                Err(Error::Domain(format!("gradient weight is not finite at d={d}")))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    GradientWeightCurve::new(d, z)
}

/// Divides every value by the curve maximum.
pub fn rescale(curve: &GradientWeightCurve) -> Result<GradientWeightCurve> {
    let max = curve.max();
    if !(max > 0.0 && max.is_finite()) {
        return Err(invalid("cannot rescale a curve whose maximum is not positive"));
    }
    Ok(GradientWeightCurve {
        d_values: curve.d_values.clone(),
        z_values: curve.z_values.iter().map(|z| z / max).collect(),
        rescaled: true,
    })
}

/// Probability mass over the sample distances.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReferenceDistribution {
    d_values: Vec<f64>,
    p_values: Vec<f64>,
}

impl ReferenceDistribution {
    /// Normalizes non-negative weights over strictly increasing distances.
    pub fn new(d_values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if d_values.len() != weights.len() || d_values.is_empty() {
            return Err(invalid("distribution needs matching, non-empty d and p lists"));
        }
        if d_values.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) || d_values[0] < 0.0 {
            return Err(invalid("distribution distances must be non-negative and strictly increasing"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid("distribution weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(invalid("distribution has zero total mass"));
        }
        Ok(Self {
            d_values,
            p_values: weights.iter().map(|w| w / total).collect(),
        })
    }

    pub fn uniform(cfg: &DistillConfig) -> Result<Self> {
        let d = cfg.distances();
        let n = d.len();
        Self::new(d, vec![1.0; n])
    }

    /// `p_i` proportional to `exp(-rate * d_i)`.
    pub fn exp_decay(cfg: &DistillConfig, rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(invalid(format!("decay rate must be non-negative, got {rate}")));
        }
        let d = cfg.distances();
        let w = d.iter().map(|d| (-rate * d).exp()).collect();
        Self::new(d, w)
    }

    /// Bins raw distances at the nearest grid point; distances past the grid
    /// are dropped.
    pub fn from_distances(cfg: &DistillConfig, distances: impl IntoIterator<Item = f64>) -> Result<Self> {
        let d = cfg.distances();
        let mut counts = vec![0.0; d.len()];
        for x in distances {
            if let Some(bin) = cfg.bin_of(x) {
                counts[bin] += 1.0;
            }
        }
        Self::new(d, counts)
    }

    /// Parses a `d,p` CSV (p may be a count or a probability) and bins the
    /// rows onto the configured grid.
    pub fn parse_csv(cfg: &DistillConfig, text: &str) -> Result<Self> {
        let d = cfg.distances();
        let mut mass = vec![0.0; d.len()];
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let line_no = i + 1;
            if line.is_empty() || line.starts_with('#') || (line_no == 1 && line.replace(' ', "") == "d,p") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 2 {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected 2 fields, found {}", fields.len()),
                });
            }
            let parse = |s: &str| -> Result<f64> {
                let v: f64 = s.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("cannot parse '{s}' as a number"),
                })?;
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("value {s} must be finite and non-negative"),
                    });
                }
                Ok(v)
            };
            let (x, p) = (parse(fields[0])?, parse(fields[1])?);
            if let Some(bin) = cfg.bin_of(x) {
                mass[bin] += p;
            }
        }
        Self::new(d, mass)
    }

    pub fn d_values(&self) -> &[f64] {
        &self.d_values
    }

    pub fn p_values(&self) -> &[f64] {
        &self.p_values
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("d,p\n");
        for (d, p) in self.d_values.iter().zip(&self.p_values) {
            out.push_str(&format!("{d},{p}\n"));
        }
        out
    }
}

/// Toy hyperbolic-CD completion run used to collect an empirical distance
/// distribution: half-cropped shape, free points, Adam.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelfGenerated {
    pub shape: ShapeSpec,
    pub keep_ratio: f64,
    pub iters: usize,
    pub lr: f64,
}

impl Default for SelfGenerated {
    fn default() -> Self {
        Self {
            shape: ShapeSpec::new(ShapeKind::Sphere, 512, 42),
            keep_ratio: 0.5,
            iters: 500,
            lr: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceSource {
    Uniform,
    ExpDecay { rate: f64 },
    EmpiricalFile(PathBuf),
    SelfGenerated(SelfGenerated),
}

impl Default for ReferenceSource {
    fn default() -> Self {
        ReferenceSource::ExpDecay { rate: 300.0 }
    }
}

pub fn build_reference_distribution(source: &ReferenceSource, cfg: &DistillConfig) -> Result<ReferenceDistribution> {
    cfg.validate()?;
    match source {
        ReferenceSource::Uniform => ReferenceDistribution::uniform(cfg),
        ReferenceSource::ExpDecay { rate } => ReferenceDistribution::exp_decay(cfg, *rate),
        ReferenceSource::EmpiricalFile(path) => ReferenceDistribution::parse_csv(cfg, &fs::read_to_string(path)?),
        ReferenceSource::SelfGenerated(run) => {
            let gt = generate(&run.shape)?;
            let partial = crop(&gt, &CropSpec::new([1.0, 0.0, 0.0], run.keep_ratio)?);
            let mut train_cfg = TrainConfig::new(LossSpec::hypercd(cfg.alpha), gt.len());
            train_cfg.iters = run.iters;
            train_cfg.lr = run.lr;
            train_cfg.seed = run.shape.seed;
            train_cfg.eval_every = run.iters;
            let outcome = train(&partial, &gt, &train_cfg)?;
            let assignment = assign_kdtree(&outcome.model.points, gt.points())?;
            ReferenceDistribution::from_distances(cfg, assignment.distances())
        }
    }
}

/// Probability-weighted absolute gap between two rescaled curves.
pub fn objective(
    reference: &GradientWeightCurve,
    candidate: &GradientWeightCurve,
    dist: &ReferenceDistribution,
) -> Result<f64> {
    if !(reference.rescaled && candidate.rescaled) {
        return Err(invalid("objective needs rescaled curves"));
    }
    if reference.d_values != dist.d_values || candidate.d_values != dist.d_values {
        return Err(invalid("curves and distribution use different distance grids"));
    }
    Ok(dist
        .p_values
        .iter()
        .zip(reference.z_values.iter().zip(&candidate.z_values))
        .map(|(p, (h, w))| p * (h - w).abs())
        .sum())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistillResult {
    pub kind: WeightingKind,
    pub best: WeightingFunction,
    pub objective: f64,
    /// Rescaled reference curve.
    pub reference_curve: GradientWeightCurve,
    /// Rescaled curve of the winning parameters.
    pub fitted_curve: GradientWeightCurve,
    /// Grid points that produced a usable curve.
    pub evaluated: usize,
}

impl DistillResult {
    pub fn param_names(&self) -> &'static [&'static str] {
        self.kind.param_names()
    }

    pub fn params(&self) -> Vec<f64> {
        self.best.params()
    }

    /// `d,z_ref,z_fit` table.
    pub fn curves_csv(&self) -> String {
        let mut out = String::from("d,z_ref,z_fit\n");
        for ((d, r), f) in self
            .reference_curve
            .d_values
            .iter()
            .zip(&self.reference_curve.z_values)
            .zip(&self.fitted_curve.z_values)
        {
            out.push_str(&format!("{d},{r},{f}\n"));
        }
        out
    }

    /// `kind,param_names,param_values,objective` with `;` between parameters.
    pub fn summary_csv(&self) -> String {
        let values: Vec<String> = self.params().iter().map(f64::to_string).collect();
        format!(
            "kind,param_names,param_values,objective\n{},{},{},{}\n",
            self.kind,
            self.param_names().join(";"),
            values.join(";"),
            self.objective
        )
    }
}

/// Objective and rescaled curve for one candidate.
pub fn score<W: Weighting>(
    f: &W,
    reference: &GradientWeightCurve,
    cfg: &DistillConfig,
    dist: &ReferenceDistribution,
) -> Result<(f64, GradientWeightCurve)> {
    let curve = rescale(&candidate_curve(f, cfg)?)?;
    Ok((objective(reference, &curve, dist)?, curve))
}

/// Exhaustive search over `grid`. Grid points whose parameters are invalid
/// or whose curve cannot be rescaled are skipped; ties go to the earliest
/// point in lexicographic order.
pub fn grid_search(grid: &ParamGrid, cfg: &DistillConfig, dist: &ReferenceDistribution) -> Result<DistillResult> {
    if grid.is_empty() {
        return Err(invalid("parameter grid is empty"));
    }
    let reference = rescale(&reference_curve(cfg)?)?;
    let scores: Vec<Option<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let f = WeightingFunction::new(grid.kind(), &grid.point(i)).ok()?;
            score(&f, &reference, cfg, dist).ok().map(|(j, _)| j)
        })
        .collect();
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.iter().enumerate() {
        if let Some(j) = *s {
            if best.is_none_or(|(_, b)| j < b) {
                best = Some((i, j));
            }
        }
    }
    let (index, objective) =
        best.ok_or_else(|| invalid(format!("no {} grid point produced a usable curve", grid.kind())))?;
    let best_fn = WeightingFunction::new(grid.kind(), &grid.point(index))?;
    let (_, fitted_curve) = score(&best_fn, &reference, cfg, dist)?;
    Ok(DistillResult {
        kind: grid.kind(),
        best: best_fn,
        objective,
        reference_curve: reference,
        fitted_curve,
        evaluated: scores.iter().flatten().count(),
    })
}
