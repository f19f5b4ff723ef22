//! Flag grammars that are richer than a single scalar.

use std::path::PathBuf;

use cdd_core::weightfns::{ParamGrid, WeightingFunction, WeightingKind};
use cdd_core::{Point3, ReferenceSource};

pub fn point3(s: &str) -> Result<Point3, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected X,Y,Z, got '{s}'"));
    }
    let mut p = [0.0f64; 3];
    for (slot, part) in p.iter_mut().zip(&parts) {
        *slot = part.parse().map_err(|_| format!("cannot parse '{part}' as a number"))?;
        if !slot.is_finite() {
            return Err(format!("coordinate '{part}' is not finite"));
        }
    }
    Ok(p)
}

pub fn keep_ratio(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("cannot parse '{s}' as a number"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("keep ratio must be in (0, 1], got {s}"))
    }
}

pub fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("cannot parse '{s}' as a number"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("expected a positive number, got {s}"))
    }
}

/// Comma-separated list of `KIND[:name=value,...]`. A token holding `=` but
/// no `:` continues the parameter list of the previous distribution, so
/// `weibull:k=2,lambda=5,landau` names two distributions.
pub fn distribution_list(s: &str) -> Result<Vec<WeightingFunction>, String> {
    let mut groups: Vec<String> = Vec::new();
    for token in s.split(',').map(str::trim) {
        if token.is_empty() {
            return Err(format!("empty entry in distribution list '{s}'"));
        }
        match groups.last_mut() {
            Some(last) if token.contains('=') && !token.contains(':') => {
                last.push(',');
                last.push_str(token);
            }
            _ => groups.push(token.to_string()),
        }
    }
    groups.iter().map(|g| g.parse()).collect()
}

/// `uniform`, `expdecay:RATE`, `file:PATH` or `selfgen`.
pub fn reference_source(s: &str) -> Result<ReferenceSource, String> {
    match s.split_once(':') {
        None if s == "uniform" => Ok(ReferenceSource::Uniform),
        None if s == "selfgen" => Ok(ReferenceSource::SelfGenerated(Default::default())),
        Some(("expdecay", rate)) => {
            let rate: f64 = rate.parse().map_err(|_| format!("bad decay rate '{rate}'"))?;
            if rate.is_finite() && rate >= 0.0 {
                Ok(ReferenceSource::ExpDecay { rate })
            } else {
                Err(format!("decay rate must be non-negative, got {rate}"))
            }
        }
        Some(("file", path)) if !path.is_empty() => Ok(ReferenceSource::EmpiricalFile(PathBuf::from(path))),
        _ => Err(format!("unknown reference '{s}'; expected uniform, expdecay:RATE, file:PATH or selfgen")),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GridSource {
    Default,
    File(PathBuf),
}

pub fn grid_source(s: &str) -> Result<GridSource, String> {
    match s.split_once(':') {
        None if s == "default" => Ok(GridSource::Default),
        Some(("file", path)) if !path.is_empty() => Ok(GridSource::File(PathBuf::from(path))),
        _ => Err(format!("unknown grid '{s}'; expected default or file:PATH")),
    }
}

/// Grid file: one `name=v1,v2,...` line per parameter; `#` starts a comment.
pub fn grid_file(kind: WeightingKind, text: &str) -> Result<ParamGrid, String> {
    let names = kind.param_names();
    let mut axes: Vec<Option<Vec<f64>>> = vec![None; names.len()];
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, values) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected name=v1,v2,...", i + 1))?;
        let canonical = kind
            .canonical_param(name.trim())
            .ok_or_else(|| format!("line {}: {kind} has no parameter '{}'", i + 1, name.trim()))?;
        let slot = names.iter().position(|n| *n == canonical).unwrap();
        let parsed = values
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| format!("line {}: bad value '{}'", i + 1, v.trim())))
            .collect::<Result<Vec<_>, _>>()?;
        axes[slot] = Some(parsed);
    }
    let axes = axes
        .into_iter()
        .zip(names)
        .map(|(a, n)| a.ok_or_else(|| format!("grid file does not list parameter '{n}'")))
        .collect::<Result<Vec<_>, _>>()?;
    ParamGrid::new(kind, axes).map_err(|e| e.to_string())
}
