//! Probability densities used as weighting functions in weighted Chamfer
//! distance, with closed-form modes and analytic first derivatives.

use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::special::ln_gamma;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Anything that can weight a nearest-neighbor distance: a density `f`, its
/// derivative, and the point `m` at which it peaks.
pub trait Weighting {
    fn pdf(&self, x: f64) -> f64;
    fn pdf_prime(&self, x: f64) -> Result<f64>;
    fn mode(&self) -> f64;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightingKind {
    ChiSquared,
    ExtremeValue,
    Weibull,
    LogLogistic,
    Gamma,
    Logistic,
    Normal,
    Landau,
}

impl WeightingKind {
    pub const ALL: [WeightingKind; 8] = [
        WeightingKind::ChiSquared,
        WeightingKind::ExtremeValue,
        WeightingKind::Weibull,
        WeightingKind::LogLogistic,
        WeightingKind::Gamma,
        WeightingKind::Logistic,
        WeightingKind::Normal,
        WeightingKind::Landau,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WeightingKind::ChiSquared => "chi_squared",
            WeightingKind::ExtremeValue => "extreme_value",
            WeightingKind::Weibull => "weibull",
            WeightingKind::LogLogistic => "log_logistic",
            WeightingKind::Gamma => "gamma",
            WeightingKind::Logistic => "logistic",
            WeightingKind::Normal => "normal",
            WeightingKind::Landau => "landau",
        }
    }

    /// Parameter names in the order accepted by [`WeightingFunction::new`].
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            WeightingKind::ChiSquared => &["k"],
            WeightingKind::ExtremeValue => &["beta"],
            WeightingKind::Weibull => &["k", "lambda"],
            WeightingKind::LogLogistic => &["alpha", "beta"],
            WeightingKind::Gamma => &["k", "theta"],
            WeightingKind::Logistic | WeightingKind::Normal => &["sigma"],
            WeightingKind::Landau => &[],
        }
    }

    /// Maps accepted spellings onto the canonical parameter name.
    pub fn canonical_param(self, name: &str) -> Option<&'static str> {
        let canonical = match (self, name) {
            (WeightingKind::ExtremeValue, "sigma") => "beta",
            (WeightingKind::Gamma, "shape") => "k",
            (WeightingKind::Gamma, "scale") => "theta",
            _ => name,
        };
        self.param_names().iter().copied().find(|n| *n == canonical)
    }

    /// The parameter point used for each distribution in the reported
    /// completion experiments.
    pub fn reference_params(self) -> &'static [f64] {
        match self {
            WeightingKind::ChiSquared => &[3.0],
            WeightingKind::ExtremeValue => &[1.4],
            WeightingKind::Weibull => &[2.0, 5.0],
            WeightingKind::LogLogistic => &[5.0, 2.0],
            WeightingKind::Gamma => &[2.0, 2.5],
            WeightingKind::Logistic => &[1.0],
            WeightingKind::Normal => &[1.4],
            WeightingKind::Landau => &[],
        }
    }

    /// True for densities supported on `x >= 0` only.
    pub fn positive_support(self) -> bool {
        matches!(
            self,
            WeightingKind::ChiSquared | WeightingKind::Weibull | WeightingKind::LogLogistic | WeightingKind::Gamma
        )
    }

    fn valid_names() -> String {
        Self::ALL.iter().map(|k| k.name()).collect::<Vec<_>>().join(", ")
    }
}

impl fmt::Display for WeightingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WeightingKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        WeightingKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown distribution '{s}'; valid kinds: {}", Self::valid_names()))
    }
}

/// One of the eight weighting densities with concrete parameters.
///
/// Gamma uses shape `k` and scale `theta` (mode `(k - 1) * theta`).
/// Log-logistic uses the standard scale/shape density
/// `(b/a)(x/a)^(b-1) / (1 + (x/a)^b)^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightingFunction {
    ChiSquared { k: f64 },
    ExtremeValue { beta: f64 },
    Weibull { k: f64, lambda: f64 },
    LogLogistic { alpha: f64, beta: f64 },
    Gamma { shape: f64, scale: f64 },
    Logistic { sigma: f64 },
    Normal { sigma: f64 },
    Landau,
}

impl WeightingFunction {
    pub fn new(kind: WeightingKind, params: &[f64]) -> Result<Self> {
        let expected = kind.param_names().len();
        if params.len() != expected {
            return Err(invalid(format!(
                "{kind} takes {expected} parameter(s), got {}",
                params.len()
            )));
        }
        if let Some(p) = params.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(invalid(format!("{kind} parameters must be positive and finite, got {p}")));
        }
        Ok(match kind {
            WeightingKind::ChiSquared => WeightingFunction::ChiSquared { k: params[0] },
            WeightingKind::ExtremeValue => WeightingFunction::ExtremeValue { beta: params[0] },
            WeightingKind::Weibull => WeightingFunction::Weibull {
                k: params[0],
                lambda: params[1],
            },
            WeightingKind::LogLogistic => WeightingFunction::LogLogistic {
                alpha: params[0],
                beta: params[1],
            },
            WeightingKind::Gamma => WeightingFunction::Gamma {
                shape: params[0],
                scale: params[1],
            },
            WeightingKind::Logistic => WeightingFunction::Logistic { sigma: params[0] },
            WeightingKind::Normal => WeightingFunction::Normal { sigma: params[0] },
            WeightingKind::Landau => WeightingFunction::Landau,
        })
    }

    /// The kind at its reference parameter point.
    pub fn reference(kind: WeightingKind) -> Self {
        Self::new(kind, kind.reference_params()).expect("reference parameters are valid")
    }

    pub fn kind(&self) -> WeightingKind {
        match self {
            WeightingFunction::ChiSquared { .. } => WeightingKind::ChiSquared,
            WeightingFunction::ExtremeValue { .. } => WeightingKind::ExtremeValue,
            WeightingFunction::Weibull { .. } => WeightingKind::Weibull,
            WeightingFunction::LogLogistic { .. } => WeightingKind::LogLogistic,
            WeightingFunction::Gamma { .. } => WeightingKind::Gamma,
            WeightingFunction::Logistic { .. } => WeightingKind::Logistic,
            WeightingFunction::Normal { .. } => WeightingKind::Normal,
            WeightingFunction::Landau => WeightingKind::Landau,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            WeightingFunction::ChiSquared { k } => vec![k],
            WeightingFunction::ExtremeValue { beta } => vec![beta],
            WeightingFunction::Weibull { k, lambda } => vec![k, lambda],
            WeightingFunction::LogLogistic { alpha, beta } => vec![alpha, beta],
            WeightingFunction::Gamma { shape, scale } => vec![shape, scale],
            WeightingFunction::Logistic { sigma } | WeightingFunction::Normal { sigma } => vec![sigma],
            WeightingFunction::Landau => vec![],
        }
    }

    /// For positive-support kinds, `f(x) ~ coef * x^power * rest(x)` near 0
    /// with `rest(0) = 1`; also returns `rest'(0)`.
    fn boundary_behavior(&self) -> Option<(f64, f64, f64)> {
        match *self {
            WeightingFunction::ChiSquared { k } => {
                let half = 0.5 * k;
                Some((half - 1.0, (-half * LN_2 - ln_gamma(half)).exp(), -0.5))
            }
            WeightingFunction::Weibull { k, lambda } => {
                let slope = if k == 1.0 { -1.0 / lambda } else { 0.0 };
                Some((k - 1.0, k / lambda.powf(k), slope))
            }
            WeightingFunction::LogLogistic { alpha, beta } => {
                let slope = if beta == 1.0 { -2.0 / alpha } else { 0.0 };
                Some((beta - 1.0, beta / alpha.powf(beta), slope))
            }
            WeightingFunction::Gamma { shape, scale } => {
                Some((shape - 1.0, (-ln_gamma(shape) - shape * scale.ln()).exp(), -1.0 / scale))
            }
            _ => None,
        }
    }

    /// Density at `x`. Zero outside the support; at the boundary of a
    /// positive support, the continuous limit when finite, otherwise zero.
    pub fn pdf(&self, x: f64) -> f64 {
        if self.kind().positive_support() {
            if x < 0.0 {
                return 0.0;
            }
            if x == 0.0 {
                let (power, coef, _) = self.boundary_behavior().unwrap();
                return if power == 0.0 { coef } else { 0.0 };
            }
        }
        match *self {
            WeightingFunction::ChiSquared { k } => {
                let half = 0.5 * k;
                ((half - 1.0) * x.ln() - 0.5 * x - half * LN_2 - ln_gamma(half)).exp()
            }
            WeightingFunction::ExtremeValue { beta } => {
                let z = x / beta;
                (-(z + (-z).exp())).exp() / beta
            }
            WeightingFunction::Weibull { k, lambda } => {
                let r = x / lambda;
                (k / lambda) * r.powf(k - 1.0) * (-r.powf(k)).exp()
            }
            WeightingFunction::LogLogistic { alpha, beta } => {
                let r = x / alpha;
                let u = r.powf(beta);
                (beta / alpha) * r.powf(beta - 1.0) / ((1.0 + u) * (1.0 + u))
            }
            WeightingFunction::Gamma { shape, scale } => {
                ((shape - 1.0) * x.ln() - x / scale - ln_gamma(shape) - shape * scale.ln()).exp()
            }
            WeightingFunction::Logistic { sigma } => {
                let c = (x / (2.0 * sigma)).cosh();
                1.0 / (4.0 * sigma * c * c)
            }
            WeightingFunction::Normal { sigma } => {
                INV_SQRT_2PI / sigma * (-(x * x) / (2.0 * sigma * sigma)).exp()
            }
            WeightingFunction::Landau => INV_SQRT_2PI * (-0.5 * (x + (-x).exp())).exp(),
        }
    }

    /// `d pdf / dx`, computed as `pdf(x) * d ln pdf / dx`.
    pub fn pdf_prime(&self, x: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(Error::Domain("pdf derivative at NaN".into()));
        }
        if self.kind().positive_support() {
            if x < 0.0 {
                return Err(Error::Domain(format!("{} derivative at {x}: outside support", self.kind())));
            }
            if x == 0.0 {
                let (power, coef, slope) = self.boundary_behavior().unwrap();
                return if power > 1.0 {
                    Ok(0.0)
                } else if power == 1.0 {
                    Ok(coef)
                } else if power == 0.0 {
                    Ok(coef * slope)
                } else {
                    Err(Error::Domain(format!("{} derivative is unbounded at 0", self.kind())))
                };
            }
        }
        let f = self.pdf(x);
        if f == 0.0 {
            return Ok(0.0);
        }
        let log_slope = match *self {
            WeightingFunction::ChiSquared { k } => (0.5 * k - 1.0) / x - 0.5,
            WeightingFunction::ExtremeValue { beta } => ((-x / beta).exp() - 1.0) / beta,
            WeightingFunction::Weibull { k, lambda } => (k - 1.0) / x - (k / lambda) * (x / lambda).powf(k - 1.0),
            WeightingFunction::LogLogistic { alpha, beta } => {
                let u = (x / alpha).powf(beta);
                (beta - 1.0) / x - 2.0 * beta * u / (x * (1.0 + u))
            }
            WeightingFunction::Gamma { shape, scale } => (shape - 1.0) / x - 1.0 / scale,
            WeightingFunction::Logistic { sigma } => -(x / (2.0 * sigma)).tanh() / sigma,
            WeightingFunction::Normal { sigma } => -x / (sigma * sigma),
            WeightingFunction::Landau => -0.5 * (1.0 - (-x).exp()),
        };
        Ok(f * log_slope)
    }

    /// Closed-form location of the density maximum.
    pub fn mode(&self) -> f64 {
        match *self {
            WeightingFunction::ChiSquared { k } => (k - 2.0).max(0.0),
            WeightingFunction::Weibull { k, lambda } => {
                if k > 1.0 {
                    lambda * ((k - 1.0) / k).powf(1.0 / k)
                } else {
                    0.0
                }
            }
            WeightingFunction::LogLogistic { alpha, beta } => {
                if beta > 1.0 {
                    alpha * ((beta - 1.0) / (beta + 1.0)).powf(1.0 / beta)
                } else {
                    0.0
                }
            }
            WeightingFunction::Gamma { shape, scale } => {
                if shape >= 1.0 {
                    (shape - 1.0) * scale
                } else {
                    0.0
                }
            }
            WeightingFunction::ExtremeValue { .. }
            | WeightingFunction::Logistic { .. }
            | WeightingFunction::Normal { .. }
            | WeightingFunction::Landau => 0.0,
        }
    }
}

impl Weighting for WeightingFunction {
    fn pdf(&self, x: f64) -> f64 {
        WeightingFunction::pdf(self, x)
    }

    fn pdf_prime(&self, x: f64) -> Result<f64> {
        WeightingFunction::pdf_prime(self, x)
    }

    fn mode(&self) -> f64 {
        WeightingFunction::mode(self)
    }
}

impl fmt::Display for WeightingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = self.kind();
        write!(f, "{kind}")?;
        let names = kind.param_names();
        if !names.is_empty() {
            let parts: Vec<String> = names
                .iter()
                .zip(self.params())
                .map(|(n, v)| format!("{n}={v}"))
                .collect();
            write!(f, ":{}", parts.join(","))?;
        }
        Ok(())
    }
}

/// Parses `KIND` or `KIND:name=value,...`. Parameters left out take the
/// kind's reference values.
impl FromStr for WeightingFunction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, params) = match s.split_once(':') {
            Some((k, p)) => (k, Some(p)),
            None => (s, None),
        };
        let kind: WeightingKind = kind.parse()?;
        let mut values = kind.reference_params().to_vec();
        for pair in params.into_iter().flat_map(|p| p.split(',')) {
            let (name, value) = pair
                .split_once('=')
                .ok_or_else(|| format!("malformed parameter '{pair}' for {kind}; expected name=value"))?;
            let canonical = kind.canonical_param(name.trim()).ok_or_else(|| {
                format!("{kind} has no parameter '{name}'; expected one of [{}]", kind.param_names().join(", "))
            })?;
            let slot = kind.param_names().iter().position(|n| *n == canonical).unwrap();
            values[slot] = value
                .trim()
                .parse()
                .map_err(|_| format!("cannot parse {kind} parameter {name}='{value}'"))?;
        }
        WeightingFunction::new(kind, &values).map_err(|e| e.to_string())
    }
}

/// Finite parameter grid: the cartesian product of one candidate list per
/// parameter, enumerated lexicographically (last parameter varies fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct ParamGrid {
    kind: WeightingKind,
    axes: Vec<Vec<f64>>,
}

impl ParamGrid {
    pub fn new(kind: WeightingKind, axes: Vec<Vec<f64>>) -> Result<Self> {
        if axes.len() != kind.param_names().len() {
            return Err(invalid(format!(
                "{kind} grid needs {} axes, got {}",
                kind.param_names().len(),
                axes.len()
            )));
        }
        for (name, axis) in kind.param_names().iter().zip(&axes) {
            if axis.is_empty() {
                return Err(invalid(format!("grid axis '{name}' is empty")));
            }
            if axis.iter().any(|v| !v.is_finite()) {
                return Err(invalid(format!("grid axis '{name}' has a non-finite value")));
            }
        }
        Ok(Self { kind, axes })
    }

    pub fn kind(&self) -> WeightingKind {
        self.kind
    }

    pub fn names(&self) -> &'static [&'static str] {
        self.kind.param_names()
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The `index`-th point in lexicographic order.
    pub fn point(&self, index: usize) -> Vec<f64> {
        let mut rem = index;
        let mut out = vec![0.0; self.axes.len()];
        for (slot, axis) in out.iter_mut().zip(&self.axes).rev() {
            *slot = axis[rem % axis.len()];
            rem /= axis.len();
        }
        out
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    pub fn contains(&self, params: &[f64]) -> bool {
        params.len() == self.axes.len() && self.axes.iter().zip(params).all(|(axis, p)| axis.contains(p))
    }
}

/// `num / den` for `num` in `lo..=hi`; exact for the decimal grid points.
fn ratios(lo: u32, hi: u32, den: f64) -> Vec<f64> {
    (lo..=hi).map(|n| n as f64 / den).collect()
}

pub fn default_grid(kind: WeightingKind) -> ParamGrid {
    let axes = match kind {
        WeightingKind::ChiSquared => vec![ratios(1, 20, 2.0)],
        WeightingKind::ExtremeValue | WeightingKind::Logistic | WeightingKind::Normal => vec![ratios(1, 25, 5.0)],
        WeightingKind::Weibull => vec![ratios(2, 10, 2.0), ratios(1, 20, 2.0)],
        WeightingKind::LogLogistic => vec![ratios(1, 10, 1.0), ratios(2, 10, 2.0)],
        WeightingKind::Gamma => vec![ratios(2, 10, 2.0), ratios(1, 10, 2.0)],
        WeightingKind::Landau => vec![],
    };
    ParamGrid::new(kind, axes).expect("default grids are well formed")
}


#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn reference_functions() -> Vec<WeightingFunction> {
        WeightingKind::ALL.iter().map(|&k| WeightingFunction::reference(k)).collect()
    }

    #[test]
    fn closed_form_values() {
        let landau = WeightingFunction::Landau.pdf(0.0);
        assert!((landau - (-0.5f64).exp() / (2.0 * PI).sqrt()).abs() < 1e-15);
        assert!((landau - 0.241971).abs() < 1e-6);
        assert!((WeightingFunction::Logistic { sigma: 1.0 }.pdf(0.0) - 0.25).abs() < 1e-15);
        assert!((WeightingFunction::Normal { sigma: 1.4 }.pdf(0.0) - 0.284959).abs() < 1e-6);
        let g = WeightingFunction::Gamma { shape: 2.0, scale: 2.5 }.pdf(2.5);
        assert!((g - 0.4 * (-1.0f64).exp()).abs() < 1e-14);
        assert!((g - 0.147152).abs() < 1e-6);
    }

    #[test]
    fn modes() {
        assert_eq!(WeightingFunction::ChiSquared { k: 3.0 }.mode(), 1.0);
        assert_eq!(WeightingFunction::ChiSquared { k: 1.0 }.mode(), 0.0);
        let w = WeightingFunction::Weibull { k: 2.0, lambda: 5.0 }.mode();
        assert!((w - 3.535534).abs() < 1e-6);
        let ll = WeightingFunction::LogLogistic { alpha: 5.0, beta: 2.0 }.mode();
        assert!((ll - 2.886751).abs() < 1e-6);
        assert!((WeightingFunction::Gamma { shape: 2.0, scale: 2.5 }.mode() - 2.5).abs() < 1e-15);
        for f in [
            WeightingFunction::Landau,
            WeightingFunction::Logistic { sigma: 2.0 },
            WeightingFunction::Normal { sigma: 0.3 },
            WeightingFunction::ExtremeValue { beta: 1.4 },
        ] {
            assert_eq!(f.mode(), 0.0);
        }
    }

    #[test]
    fn symmetric_peaks_have_zero_slope() {
        assert_eq!(WeightingFunction::Normal { sigma: 1.7 }.pdf_prime(0.0).unwrap(), 0.0);
        assert_eq!(WeightingFunction::Landau.pdf_prime(0.0).unwrap(), 0.0);
    }

    #[test]
    fn derivative_matches_central_difference() {
        let h = 1e-6;
        for f in reference_functions() {
            let m = f.mode();
            for dx in [-0.8, -0.3, 0.2, 0.45, 1.1, 2.5] {
                let x = m + dx;
                if f.kind().positive_support() && x <= 0.01 {
                    continue;
                }
                let analytic = f.pdf_prime(x).unwrap();
                let numeric = (f.pdf(x + h) - f.pdf(x - h)) / (2.0 * h);
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs());
                assert!(rel < 1e-5, "{f} at {x}: {analytic} vs {numeric}");
            }
        }
    }

    #[test]
    fn slope_vanishes_at_mode() {
        for f in reference_functions() {
            assert!(f.pdf_prime(f.mode()).unwrap().abs() < 1e-6, "{f}");
        }
    }

    #[test]
    fn boundary_handling() {
        let chi1 = WeightingFunction::ChiSquared { k: 1.0 };
        assert_eq!(chi1.pdf(0.0), 0.0);
        assert!(matches!(chi1.pdf_prime(0.0), Err(Error::Domain(_))));
        assert!(matches!(chi1.pdf_prime(-1.0), Err(Error::Domain(_))));
        assert_eq!(chi1.pdf(-1.0), 0.0);
        // chi-squared k=2 is exp(-x/2)/2 on x >= 0
        let chi2 = WeightingFunction::ChiSquared { k: 2.0 };
        assert!((chi2.pdf(0.0) - 0.5).abs() < 1e-14);
        assert!((chi2.pdf_prime(0.0).unwrap() + 0.25).abs() < 1e-14);
        // gamma k=2 is x exp(-x/theta)/theta^2
        let g = WeightingFunction::Gamma { shape: 2.0, scale: 2.5 };
        assert_eq!(g.pdf(0.0), 0.0);
        assert!((g.pdf_prime(0.0).unwrap() - 0.16).abs() < 1e-14);
        assert_eq!(WeightingFunction::Weibull { k: 3.0, lambda: 1.0 }.pdf_prime(0.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(WeightingFunction::new(WeightingKind::Normal, &[0.0]).is_err());
        assert!(WeightingFunction::new(WeightingKind::Weibull, &[1.0]).is_err());
        assert!(WeightingFunction::new(WeightingKind::Gamma, &[2.0, -1.0]).is_err());
        assert!(WeightingFunction::new(WeightingKind::Landau, &[]).is_ok());
    }

    #[test]
    fn parses_parameter_strings() {
        assert_eq!("landau".parse::<WeightingFunction>().unwrap(), WeightingFunction::Landau);
        assert_eq!(
            "gamma:k=2,theta=2.5".parse::<WeightingFunction>().unwrap(),
            WeightingFunction::Gamma { shape: 2.0, scale: 2.5 }
        );
        assert_eq!(
            "normal".parse::<WeightingFunction>().unwrap(),
            WeightingFunction::Normal { sigma: 1.4 }
        );
        assert_eq!(
            "extreme_value:sigma=2".parse::<WeightingFunction>().unwrap(),
            WeightingFunction::ExtremeValue { beta: 2.0 }
        );
        assert!("normal:mu=1".parse::<WeightingFunction>().is_err());
        assert!("normal:sigma".parse::<WeightingFunction>().is_err());
        assert!("normal:sigma=-1".parse::<WeightingFunction>().is_err());
        for f in reference_functions() {
            assert_eq!(f.to_string().parse::<WeightingFunction>().unwrap(), f);
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for k in WeightingKind::ALL {
            assert_eq!(k.name().parse::<WeightingKind>().unwrap(), k);
        }
        let err = "bogus".parse::<WeightingKind>().unwrap_err();
        for k in WeightingKind::ALL {
            assert!(err.contains(k.name()));
        }
    }

    #[test]
    fn default_grids_contain_reference_points() {
        for k in WeightingKind::ALL {
            let grid = default_grid(k);
            assert!(grid.contains(k.reference_params()), "{k}");
        }
        assert!(default_grid(WeightingKind::Normal).axes()[0].contains(&1.4));
        assert!(default_grid(WeightingKind::Gamma).contains(&[2.0, 2.5]));
        assert_eq!(default_grid(WeightingKind::Landau).len(), 1);
        assert_eq!(default_grid(WeightingKind::Landau).point(0), Vec::<f64>::new());
        assert_eq!(default_grid(WeightingKind::ChiSquared).len(), 20);
        assert_eq!(default_grid(WeightingKind::Weibull).len(), 9 * 20);
    }

    #[test]
    fn grid_order_is_lexicographic() {
        let grid = ParamGrid::new(WeightingKind::Gamma, vec![vec![1.0, 2.0], vec![0.5, 1.5, 2.5]]).unwrap();
        let pts: Vec<Vec<f64>> = grid.points().collect();
        assert_eq!(pts[0], vec![1.0, 0.5]);
        assert_eq!(pts[1], vec![1.0, 1.5]);
        assert_eq!(pts[3], vec![2.0, 0.5]);
        assert_eq!(pts.len(), 6);
    }
}
