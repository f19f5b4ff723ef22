use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cdd_core::losses::metrics;
use cdd_core::pointcloud::{format_xyz, read_points, read_xyz};
use cdd_core::{
    build_reference_distribution, candidate_curve, compare_runs, crop, default_grid, generate, grid_search,
    reference_curve, rescale, train, CropSpec, DistillConfig, LossSpec, PointCloud, ReferenceSource, ShapeSpec,
    Snapshot, TrainConfig,
};
use clap::Parser;
use serde::Serialize;

use crate::output::{partial_path, sidecar_manifest, Outputs, RunManifest, TOOL_VERSION};
use crate::parse::{self, GridSource};
use crate::{Cli, Command, CompareArgs, CurvesArgs, DistillArgs, EvalArgs, GenArgs, TrainArgs, UsageError};

pub fn run(command: Command, argv: &[String], out: &mut Outputs) -> Result<()> {
    match command {
        Command::Gen(args) => gen(args, argv, out),
        Command::Eval(args) => eval(args),
        Command::Curves(args) => curves(args, argv, out),
        Command::Distill(args) => distill(args, argv, out),
        Command::Train(args) => train_cmd(args, argv, out),
        Command::Compare(args) => compare(args, argv, out),
        Command::Replay(args) => {
            let manifest = RunManifest::read(&args.manifest)?;
            if manifest.tool_version != TOOL_VERSION {
                eprintln!(
                    "warning: manifest was written by version {}, this is {TOOL_VERSION}",
                    manifest.tool_version
                );
            }
            let cli = Cli::try_parse_from(std::iter::once("cdd".to_string()).chain(manifest.argv.iter().cloned()))
                .map_err(|e| UsageError(format!("manifest arguments do not parse: {e}")))?;
            if matches!(cli.command, Command::Replay(_)) {
                bail!(UsageError("a manifest cannot record a replay".into()));
            }
            run(cli.command, &manifest.argv, out)
        }
    }
}

fn load(path: &Path) -> Result<PointCloud> {
    read_points(path).with_context(|| format!("reading {}", path.display()))
}

#[derive(Serialize)]
struct GenConfig {
    shape: ShapeSpec,
    crop: Option<CropSpec>,
}

fn gen(args: GenArgs, argv: &[String], out: &mut Outputs) -> Result<()> {
    let shape = ShapeSpec::new(args.shape, args.n as usize, args.seed);
    let full = generate(&shape)?;
    let crop_spec = args
        .keep
        .map(|keep| CropSpec::new(args.crop_dir.unwrap_or([1.0, 0.0, 0.0]), keep))
        .transpose()
        .map_err(|e| UsageError(e.to_string()))?;

    out.write(&args.out, &format_xyz(&full))?;
    if let Some(spec) = &crop_spec {
        out.write(&partial_path(&args.out), &format_xyz(&crop(&full, spec)))?;
    }
    let config = GenConfig { shape, crop: crop_spec };
    let manifest = RunManifest::new("gen", argv, Some(args.seed), config)?;
    out.write_manifest(&sidecar_manifest(&args.out), manifest)
}

fn eval(args: EvalArgs) -> Result<()> {
    let pred = load(&args.pred)?;
    let gt = load(&args.gt)?;
    let m = metrics(pred.points(), gt.points(), args.tau)?;
    println!("{},{},{}", m.l1cd, m.l2cd, m.f1);
    Ok(())
}

#[derive(Serialize)]
struct CurvesConfig {
    distill: DistillConfig,
    distributions: Vec<String>,
    rescale: bool,
}

fn curves(args: CurvesArgs, argv: &[String], out: &mut Outputs) -> Result<()> {
    let cfg = DistillConfig {
        alpha: args.alpha,
        approx: args.approx,
        delta: args.delta,
        ..DistillConfig::default()
    };
    let dists: Vec<_> = args.dist.into_iter().flatten().collect();
    let finish = |c| if args.rescale { rescale(&c) } else { Ok(c) };
    let reference = finish(reference_curve(&cfg)?)?;
    let mut columns = vec!["d".to_string(), "z_ref".to_string()];
    let mut fitted = Vec::with_capacity(dists.len());
    for f in &dists {
        fitted.push(finish(candidate_curve(f, &cfg)?).with_context(|| format!("curve of {f}"))?);
        let base = format!("z_{}", f.kind());
        let mut name = base.clone();
        let mut n = 1;
        while columns.contains(&name) {
            n += 1;
            name = format!("{base}_{n}");
        }
        columns.push(name);
    }

    let mut csv = columns.join(",");
    csv.push('\n');
    for (i, d) in reference.d_values.iter().enumerate() {
        csv.push_str(&format!("{d},{}", reference.z_values[i]));
        for c in &fitted {
            csv.push_str(&format!(",{}", c.z_values[i]));
        }
        csv.push('\n');
    }

    match args.out {
        None => print!("{csv}"),
        Some(path) => {
            out.write(&path, &csv)?;
            let config = CurvesConfig {
                distill: cfg,
                distributions: dists.iter().map(ToString::to_string).collect(),
                rescale: args.rescale,
            };
            let manifest = RunManifest::new("curves", argv, None, config)?;
            out.write_manifest(&sidecar_manifest(&path), manifest)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct DistillRunConfig<'a> {
    distill: DistillConfig,
    reference: &'a ReferenceSource,
    kind: String,
    grid_names: &'static [&'static str],
    grid_axes: &'a [Vec<f64>],
    evaluated: usize,
    best: String,
    objective: f64,
}

fn distill(args: DistillArgs, argv: &[String], out: &mut Outputs) -> Result<()> {
    let cfg = DistillConfig {
        alpha: args.alpha,
        approx: args.approx,
        delta: args.delta,
        ..DistillConfig::default()
    };
    let grid = match &args.grid {
        GridSource::Default => default_grid(args.dist),
        GridSource::File(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse::grid_file(args.dist, &text)
                .map_err(|e| UsageError(format!("grid file {}: {e}", path.display())))?
        }
    };
    let dist = build_reference_distribution(&args.reference, &cfg).with_context(|| match &args.reference {
        ReferenceSource::EmpiricalFile(path) => format!("reading reference distribution {}", path.display()),
        _ => "building reference distribution".to_string(),
    })?;
    let result = grid_search(&grid, &cfg, &dist)?;

    let summary = result.summary_csv();
    out.create_dir(&args.out)?;
    out.write(&args.out.join("summary.csv"), &summary)?;
    out.write(&args.out.join("curves.csv"), &result.curves_csv())?;
    out.write(&args.out.join("reference.csv"), &dist.to_csv())?;
    let config = DistillRunConfig {
        distill: cfg,
        reference: &args.reference,
        kind: args.dist.to_string(),
        grid_names: grid.names(),
        grid_axes: grid.axes(),
        evaluated: result.evaluated,
        best: result.best.to_string(),
        objective: result.objective,
    };
    let manifest = RunManifest::new("distill", argv, None, config)?;
    out.write_manifest(&args.out.join("manifest.json"), manifest)?;
    print!("{summary}");
    Ok(())
}

#[derive(Serialize)]
struct TrainRunConfig<'a> {
    gt: &'a Path,
    partial: &'a Path,
    loss_spec: String,
    train: &'a TrainConfig,
}

fn train_cmd(args: TrainArgs, argv: &[String], out: &mut Outputs) -> Result<()> {
    let gt = load(&args.gt)?;
    let partial = load(&args.partial)?;
    let mut loss = args.loss;
    if args.no_mode_shift {
        match &mut loss {
            LossSpec::WeightedCd { mode_shift, .. } => *mode_shift = false,
            _ => bail!(UsageError("--no-mode-shift only applies to weighted losses".into())),
        }
    }
    let mut cfg = TrainConfig::new(loss, args.output_size.map_or(gt.len(), |n| n as usize));
    cfg.iters = args.iters;
    cfg.lr = args.lr;
    cfg.optimizer = args.optimizer;
    cfg.seed = args.seed;
    cfg.eval_every = args.eval_every as usize;
    cfg.init = args.init;
    cfg.tau = args.tau;
    cfg.snapshot_every = args.snapshots.map(|n| n as usize);
    cfg.record_timing = args.timing;
    cfg.validate().map_err(|e| UsageError(e.to_string()))?;

    let outcome = train(&partial, &gt, &cfg)?;

    out.create_dir(&args.out)?;
    let final_cloud = PointCloud::new(outcome.model.points)?;
    out.write(&args.out.join("final.xyz"), &format_xyz(&final_cloud))?;
    out.write(&args.out.join("log.csv"), &outcome.log.to_csv())?;
    for snap in &outcome.snapshots {
        let cloud = PointCloud::new(snap.points.clone())?;
        out.write(&args.out.join(format!("snap_{}.xyz", snap.iter)), &format_xyz(&cloud))?;
    }
    let config = TrainRunConfig {
        gt: &args.gt,
        partial: &args.partial,
        loss_spec: loss.to_string(),
        train: &cfg,
    };
    let manifest = RunManifest::new("train", argv, Some(cfg.seed), config)?;
    out.write_manifest(&args.out.join("manifest.json"), manifest)?;
    if let Some(last) = outcome.log.last() {
        println!("iter {} loss {} l1cd {} l2cd {} f1 {}", last.iter, last.loss, last.l1cd, last.l2cd, last.f1);
    }
    Ok(())
}

/// Snapshot iterations found in a run directory, sorted.
fn snapshot_iters(dir: &Path) -> Result<BTreeSet<usize>> {
    let mut iters = BTreeSet::new();
    for entry in fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let name = entry?.file_name();
        let name = name.to_string_lossy();
        if let Some(iter) = name
            .strip_prefix("snap_")
            .and_then(|s| s.strip_suffix(".xyz"))
            .and_then(|s| s.parse().ok())
        {
            iters.insert(iter);
        }
    }
    Ok(iters)
}

fn load_snapshots(dir: &Path, iters: &BTreeSet<usize>) -> Result<Vec<Snapshot>> {
    iters
        .iter()
        .map(|&iter| {
            let path: PathBuf = dir.join(format!("snap_{iter}.xyz"));
            let cloud = read_xyz(&path).with_context(|| format!("reading {}", path.display()))?;
            Ok(Snapshot {
                iter,
                points: cloud.into_points(),
            })
        })
        .collect()
}

#[derive(Serialize)]
struct CompareConfig<'a> {
    run_a: &'a Path,
    run_b: &'a Path,
    iters: Vec<usize>,
}

fn compare(args: CompareArgs, argv: &[String], out: &mut Outputs) -> Result<()> {
    let iters_a = snapshot_iters(&args.run_a)?;
    let iters_b = snapshot_iters(&args.run_b)?;
    if iters_a.is_empty() {
        bail!(UsageError(format!("no snap_<iter>.xyz files in {}", args.run_a.display())));
    }
    if iters_a != iters_b {
        let only_a: Vec<_> = iters_a.difference(&iters_b).collect();
        let only_b: Vec<_> = iters_b.difference(&iters_a).collect();
        bail!(UsageError(format!(
            "snapshot sets differ: only in {}: {only_a:?}; only in {}: {only_b:?}",
            args.run_a.display(),
            args.run_b.display()
        )));
    }
    let a = load_snapshots(&args.run_a, &iters_a)?;
    let b = load_snapshots(&args.run_b, &iters_b)?;
    let rows = compare_runs(&a, &b).map_err(|e| UsageError(e.to_string()))?;

    let mut csv = String::from("iter,distance\n");
    for (iter, distance) in rows {
        csv.push_str(&format!("{iter},{distance}\n"));
    }
    match args.out {
        None => print!("{csv}"),
        Some(path) => {
            out.write(&path, &csv)?;
            let config = CompareConfig {
                run_a: &args.run_a,
                run_b: &args.run_b,
                iters: iters_a.into_iter().collect(),
            };
            let manifest = RunManifest::new("compare", argv, None, config)?;
            out.write_manifest(&sidecar_manifest(&path), manifest)?;
        }
    }
    Ok(())
}
