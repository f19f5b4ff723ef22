//! Chamfer-distance loss family: plain CD with Euclidean or squared
//! distances, hyperbolic CD, and density-weighted CD, each with its analytic
//! gradient with respect to the predicted coordinates.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::neighbors::{assign_kdtree, NearestAssignment};
use crate::pointcloud::Point3;
use crate::weightfns::{Weighting, WeightingFunction};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossSpec {
    /// Mean Euclidean nearest-neighbor distance, both directions.
    CdL1,
    /// Mean squared nearest-neighbor distance, both directions.
    CdL2,
    /// Per-pair distance `arccosh(1 + alpha * d^2)`.
    HyperCd { alpha: f64 },
    /// Per-pair term `f(m + d) * d`, with `m = mode(f)` when `mode_shift`
    /// is set and `0` otherwise.
    WeightedCd { weighting: WeightingFunction, mode_shift: bool },
}

impl LossSpec {
    pub fn hypercd(alpha: f64) -> Self {
        LossSpec::HyperCd { alpha }
    }

    pub fn weighted(weighting: WeightingFunction) -> Self {
        LossSpec::WeightedCd {
            weighting,
            mode_shift: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LossSpec::HyperCd { alpha } if !(alpha.is_finite() && alpha > 0.0) => {
                Err(invalid(format!("hypercd alpha must be positive, got {alpha}")))
            }
            LossSpec::WeightedCd { weighting, .. } => {
                WeightingFunction::new(weighting.kind(), &weighting.params()).map(|_| ())
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for LossSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossSpec::CdL1 => f.write_str("cd_l1"),
            LossSpec::CdL2 => f.write_str("cd_l2"),
            LossSpec::HyperCd { alpha } => write!(f, "hypercd:alpha={alpha}"),
            LossSpec::WeightedCd { weighting, .. } => write!(f, "weighted:{weighting}"),
        }
    }
}

/// Parses `cd_l1`, `cd_l2`, `hypercd[:alpha=A]` or `weighted:KIND[:name=v,...]`.
/// The mode shift is always on; toggle the field afterwards to disable it.
impl FromStr for LossSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (s, None),
        };
        let spec = match (head, rest) {
            ("cd_l1", None) => LossSpec::CdL1,
            ("cd_l2", None) => LossSpec::CdL2,
            ("hypercd", None) => LossSpec::HyperCd { alpha: 1.0 },
            ("hypercd", Some(params)) => {
                let value = params
                    .strip_prefix("alpha=")
                    .ok_or_else(|| format!("expected hypercd:alpha=VALUE, got '{s}'"))?;
                let alpha = value.parse().map_err(|_| format!("bad hypercd alpha '{value}'"))?;
                LossSpec::HyperCd { alpha }
            }
            ("weighted", Some(f)) => LossSpec::weighted(f.parse()?),
            _ => {
                return Err(format!(
                    "unknown loss '{s}'; expected cd_l1, cd_l2, hypercd[:alpha=A] or weighted:KIND[:params]"
                ))
            }
        };
        spec.validate().map_err(|e| e.to_string())?;
        Ok(spec)
    }
}

/// Loss value plus its gradient with respect to every predicted point.
#[derive(Clone, Debug, PartialEq)]
pub struct LossGradient {
    pub value: f64,
    pub grad: Vec<Point3>,
}

impl LossGradient {
    pub fn grad_norm(&self) -> f64 {
        self.grad
            .iter()
            .flat_map(|g| g.iter())
            .map(|c| c * c)
            .sum::<f64>()
            .sqrt()
    }
}

/// Gradient weight of hyperbolic CD, `2 a d / sqrt((1 + a d^2)^2 - 1)`,
/// evaluated in the cancellation-free form `2 sqrt(a) / sqrt(2 + a d^2)`.
/// Equals its limit `sqrt(2a)` at `d = 0`.
pub fn hypercd_weight(alpha: f64, d: f64) -> f64 {
    2.0 * alpha.sqrt() / (2.0 + alpha * d * d).sqrt()
}

/// Per-pair loss term `g(d)` and gradient coefficient `g'(d) / d`.
trait PairTerm {
    fn value(&self, d: f64) -> f64;
    fn coef(&self, d: f64) -> Result<f64>;
}

struct Euclidean;

impl PairTerm for Euclidean {
    fn value(&self, d: f64) -> f64 {
        d
    }
    fn coef(&self, d: f64) -> Result<f64> {
        Ok(1.0 / d)
    }
}

struct Squared;

impl PairTerm for Squared {
    fn value(&self, d: f64) -> f64 {
        d * d
    }
    fn coef(&self, _d: f64) -> Result<f64> {
        Ok(2.0)
    }
}

struct Hyperbolic(f64);

impl PairTerm for Hyperbolic {
    fn value(&self, d: f64) -> f64 {
        // arccosh(1 + t) = ln(1 + t + sqrt(t (2 + t)))
        let t = self.0 * d * d;
        (t + (t * (2.0 + t)).sqrt()).ln_1p()
    }
    fn coef(&self, d: f64) -> Result<f64> {
        Ok(hypercd_weight(self.0, d) / d)
    }
}

struct Weighted<'a, W> {
    weighting: &'a W,
    shift: f64,
}

impl<W: Weighting> PairTerm for Weighted<'_, W> {
    fn value(&self, d: f64) -> f64 {
        if d == 0.0 {
            0.0
        } else {
            self.weighting.pdf(self.shift + d) * d
        }
    }
    fn coef(&self, d: f64) -> Result<f64> {
        let x = self.shift + d;
        let z = self.weighting.pdf_prime(x)? * d + self.weighting.pdf(x);
        Ok(z / d)
    }
}

fn check_inputs(pred: &[Point3], gt: &[Point3], assignment: &NearestAssignment) -> Result<()> {
    if pred.is_empty() || gt.is_empty() {
        return Err(invalid("loss needs two non-empty point sets"));
    }
    if assignment.forward.len() != pred.len() || assignment.backward.len() != gt.len() {
        return Err(invalid("assignment does not match the point sets"));
    }
    Ok(())
}

fn value_of<T: PairTerm + ?Sized>(term: &T, pred: &[Point3], gt: &[Point3], a: &NearestAssignment) -> f64 {
    let fwd: f64 = a.forward.iter().map(|n| term.value(n.distance)).sum();
    let bwd: f64 = a.backward.iter().map(|n| term.value(n.distance)).sum();
    fwd / pred.len() as f64 + bwd / gt.len() as f64
}

fn gradient_of<T: PairTerm + ?Sized>(
    term: &T, pred: &[Point3], gt: &[Point3], a: &NearestAssignment) -> Result<LossGradient> {
    let value = value_of(term, pred, gt, a);
    let mut grad = vec![[0.0; 3]; pred.len()];
    let inv_pred = 1.0 / pred.len() as f64;
    let inv_gt = 1.0 / gt.len() as f64;
    for (j, n) in a.forward.iter().enumerate() {
        if n.distance > 0.0 {
            let c = term.coef(n.distance)? * inv_pred;
            let (x, y) = (&pred[j], &gt[n.index]);
            for axis in 0..3 {
                grad[j][axis] += c * (x[axis] - y[axis]);
            }
        }
    }
    for (k, n) in a.backward.iter().enumerate() {
        if n.distance > 0.0 {
            let c = term.coef(n.distance)? * inv_gt;
            let (x, y) = (&pred[n.index], &gt[k]);
            for axis in 0..3 {
                grad[n.index][axis] += c * (x[axis] - y[axis]);
            }
        }
    }
    Ok(LossGradient { value, grad })
}

fn pair_term(spec: &LossSpec) -> Box<dyn PairTerm + '_> {
    match spec {
        LossSpec::CdL1 => Box::new(Euclidean),
        LossSpec::CdL2 => Box::new(Squared),
        LossSpec::HyperCd { alpha } => Box::new(Hyperbolic(*alpha)),
        LossSpec::WeightedCd { weighting, mode_shift } => Box::new(Weighted {
            weighting,
            shift: if *mode_shift { weighting.mode() } else { 0.0 },
        }),
    }
}

/// Loss value for a precomputed nearest-neighbor assignment.
pub fn evaluate_assigned(spec: &LossSpec, pred: &[Point3], gt: &[Point3], assignment: &NearestAssignment) -> Result<f64> {
    spec.validate()?;
    check_inputs(pred, gt, assignment)?;
    Ok(value_of(pair_term(spec).as_ref(), pred, gt, assignment))
}

/// Loss and gradient for a precomputed assignment. Assignments are held
/// fixed; pairs at distance zero contribute no gradient.
pub fn evaluate_with_grad_assigned(
    spec: &LossSpec,
    pred: &[Point3],
    gt: &[Point3],
    assignment: &NearestAssignment,
) -> Result<LossGradient> {
    spec.validate()?;
    check_inputs(pred, gt, assignment)?;
    gradient_of(pair_term(spec).as_ref(), pred, gt, assignment)
}

pub fn evaluate(spec: &LossSpec, pred: &[Point3], gt: &[Point3]) -> Result<f64> {
    let assignment = assign_kdtree(pred, gt)?;
    evaluate_assigned(spec, pred, gt, &assignment)
}

pub fn evaluate_with_grad(spec: &LossSpec, pred: &[Point3], gt: &[Point3]) -> Result<LossGradient> {
    let assignment = assign_kdtree(pred, gt)?;
    evaluate_with_grad_assigned(spec, pred, gt, &assignment)
}

/// Weighted CD under an arbitrary weighting, e.g. a constant.
pub fn weighted_cd<W: Weighting>(weighting: &W, mode_shift: bool, pred: &[Point3], gt: &[Point3]) -> Result<f64> {
    let assignment = assign_kdtree(pred, gt)?;
    let term = Weighted {
        weighting,
        shift: if mode_shift { weighting.mode() } else { 0.0 },
    };
    Ok(value_of(&term, pred, gt, &assignment))
}

pub fn weighted_cd_with_grad<W: Weighting>(
    weighting: &W,
    mode_shift: bool,
    pred: &[Point3],
    gt: &[Point3],
) -> Result<LossGradient> {
    let assignment = assign_kdtree(pred, gt)?;
    let term = Weighted {
        weighting,
        shift: if mode_shift { weighting.mode() } else { 0.0 },
    };
    gradient_of(&term, pred, gt, &assignment)
}

/// Chamfer metrics reported during training and by `eval`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    pub l1cd: f64,
    pub l2cd: f64,
    pub f1: f64,
}

pub fn metrics_assigned(pred: &[Point3], gt: &[Point3], assignment: &NearestAssignment, tau: f64) -> Result<Metrics> {
    check_inputs(pred, gt, assignment)?;
    Ok(Metrics {
        l1cd: value_of(&Euclidean, pred, gt, assignment),
        l2cd: value_of(&Squared, pred, gt, assignment),
        f1: f1_assigned(assignment, tau)?,
    })
}

pub fn metrics(pred: &[Point3], gt: &[Point3], tau: f64) -> Result<Metrics> {
    let assignment = assign_kdtree(pred, gt)?;
    metrics_assigned(pred, gt, &assignment, tau)
}

fn f1_assigned(assignment: &NearestAssignment, tau: f64) -> Result<f64> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(invalid(format!("F1 threshold must be positive, got {tau}")));
    }
    let within = |ns: &[crate::neighbors::Nearest]| {
        ns.iter().filter(|n| n.distance <= tau).count() as f64 / ns.len() as f64
    };
    let precision = within(&assignment.forward);
    let recall = within(&assignment.backward);
    if precision + recall == 0.0 {
        Ok(0.0)
    } else {
        Ok(2.0 * precision * recall / (precision + recall))
    }
}

/// F-score of point matches within `tau`: precision over predicted points,
/// recall over ground-truth points.
pub fn f1_score(pred: &[Point3], gt: &[Point3], tau: f64) -> Result<f64> {
    let assignment = assign_kdtree(pred, gt)?;
    f1_assigned(&assignment, tau)
}
