use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::{info, warn};
use pnsm_core::generators::{generate, ScenarioCase, ScenarioSpec};
use pnsm_core::metrics::{metric_report, outlier_filter, MetricOptions, MetricReport};
use pnsm_core::projection::embed_cloud;
use pnsm_core::{fit_nested, pca_projection, FitConfig, PointCloud};
use serde::{Deserialize, Serialize};

use crate::cli::{FilterArgs, FitArgs, MetricsArgs, PcaArgs, RunCommand, SimulateArgs};
use crate::error::{CliError, Result};
use crate::table::{coordinate_headers, fmt_f64, CsvOut, Table};

pub const MANIFEST_NAME: &str = "run-manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// RNG seed, for commands that draw random numbers.
    pub seed: Option<u64>,
    /// Fully resolved arguments with absolute paths.
    pub command: RunCommand,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.to_path_buf(), source })
    }
}

/// Where a command writes its manifest.
pub fn manifest_path(cmd: &RunCommand) -> PathBuf {
    match cmd {
        RunCommand::Simulate(a) => a.out.with_extension(MANIFEST_NAME),
        RunCommand::Filter(a) => a.out.with_extension(MANIFEST_NAME),
        RunCommand::Fit(a) => a.out_dir.join(MANIFEST_NAME),
        RunCommand::Pca(a) => a.out_dir.join(MANIFEST_NAME),
        RunCommand::Metrics(a) => a.out_dir.join(MANIFEST_NAME),
    }
}

/// Files created by the running command, deleted again if it fails.
#[derive(Default)]
struct Outputs {
    files: Vec<PathBuf>,
}

impl Outputs {
    fn add(&mut self, path: PathBuf) -> PathBuf {
        self.files.push(path.clone());
        path
    }

    fn discard(&self) {
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
    }
}

/// Runs one command and writes its manifest. Outputs written before a
/// failure are removed.
pub fn execute(cmd: RunCommand) -> Result<Manifest> {
    let mut outputs = Outputs::default();
    let result = run(cmd, &mut outputs);
    if result.is_err() {
        outputs.discard();
    }
    result
}

/// Reruns a manifest, optionally redirecting its outputs.
pub fn replay(manifest: &Path, out: Option<PathBuf>) -> Result<Manifest> {
    let recorded = Manifest::read(manifest)?;
    if recorded.version != env!("CARGO_PKG_VERSION") {
        warn!(
            "manifest was written by version {}, replaying with {}",
            recorded.version,
            env!("CARGO_PKG_VERSION")
        );
    }
    let mut cmd = recorded.command;
    if let Some(out) = out {
        match &mut cmd {
            RunCommand::Simulate(a) => a.out = out,
            RunCommand::Filter(a) => {
                a.out = out;
                a.removed = None;
            }
            RunCommand::Fit(a) => a.out_dir = out,
            RunCommand::Pca(a) => a.out_dir = out,
            RunCommand::Metrics(a) => a.out_dir = out,
        }
    }
    execute(cmd)
}

fn run(cmd: RunCommand, outputs: &mut Outputs) -> Result<Manifest> {
    let (resolved, seed) = match cmd {
        RunCommand::Simulate(a) => {
            let seed = a.seed;
            (RunCommand::Simulate(simulate(a, outputs)?), Some(seed))
        }
        RunCommand::Fit(a) => (RunCommand::Fit(fit(a, outputs)?), None),
        RunCommand::Pca(a) => (RunCommand::Pca(pca(a, outputs)?), None),
        RunCommand::Metrics(a) => (RunCommand::Metrics(metrics(a, outputs)?), None),
        RunCommand::Filter(a) => (RunCommand::Filter(filter(a, outputs)?), None),
    };
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        command: resolved,
    };
    let path = outputs.add(manifest_path(&manifest.command));
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|source| CliError::Json { path: path.clone(), source })?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    info!("{} finished; manifest at {}", manifest.command.name(), path.display());
    Ok(manifest)
}

fn absolute(p: &Path) -> Result<PathBuf> {
    std::path::absolute(p).map_err(|e| CliError::io(p, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn ensure_parent(file: &Path) -> Result<()> {
    match file.parent() {
        Some(p) if !p.as_os_str().is_empty() => ensure_dir(p),
        _ => Ok(()),
    }
}

fn simulate(mut a: SimulateArgs, outputs: &mut Outputs) -> Result<SimulateArgs> {
    let case: ScenarioCase = a.case.parse()?;
    let (s1, s2) = case.default_sigmas();
    a.sigma1 = Some(a.sigma1.unwrap_or(s1));
    a.sigma2 = Some(a.sigma2.unwrap_or(s2));
    a.out = absolute(&a.out)?;

    let mut spec = ScenarioSpec::new(case, a.seed).with_n(a.n);
    spec.sigma1 = a.sigma1.unwrap();
    spec.sigma2 = a.sigma2.unwrap();
    spec.sigma = a.sigma;
    spec.circle_interval = a.circle_interval.into();
    let sample = generate(&spec)?;

    let mut headers = if case.is_euclidean() {
        coordinate_headers(sample.cloud.dim())
    } else {
        vec!["phi".to_string(), "psi".to_string()]
    };
    headers.push("t".into());
    ensure_parent(&a.out)?;
    let mut w = CsvOut::create(&outputs.add(a.out.clone()), &headers)?;
    let mut row = Vec::with_capacity(headers.len());
    for (p, t) in sample.cloud.points().zip(&sample.t) {
        row.clear();
        row.extend_from_slice(p);
        row.push(*t);
        w.floats(&row, &[])?;
    }
    w.finish()?;
    info!("wrote {} samples of {} to {}", a.n, case, a.out.display());
    Ok(a)
}

/// Sorts descending and checks every d is in `1..=max`.
fn resolve_dims(dims: Option<Vec<usize>>, max: usize, default_top: usize) -> Result<Vec<usize>> {
    let mut dims = dims.unwrap_or_else(|| (1..=default_top).rev().collect());
    if dims.is_empty() {
        return Err(CliError::Usage("no target dimensions given".into()));
    }
    dims.sort_unstable_by(|a, b| b.cmp(a));
    if dims.windows(2).any(|w| w[0] == w[1]) {
        return Err(CliError::Usage(format!("repeated target dimension in {dims:?}")));
    }
    if let Some(&d) = dims.iter().find(|&&d| d == 0 || d > max) {
        return Err(CliError::Usage(format!("target dimension {d} is outside 1..={max}")));
    }
    Ok(dims)
}

/// Writes one level: coordinates, optional angle pairs, then the input's
/// `t` and `label` columns.
fn write_level(
    path: &Path,
    cloud: &PointCloud,
    angles: Option<&[(f64, f64)]>,
    passthrough: &[(String, Vec<String>)],
) -> Result<()> {
    let mut headers = coordinate_headers(cloud.dim());
    if angles.is_some() {
        headers.push("phi".into());
        headers.push("psi".into());
    }
    headers.extend(passthrough.iter().map(|(name, _)| name.clone()));
    let mut w = CsvOut::create(path, &headers)?;
    let mut row: Vec<String> = Vec::with_capacity(headers.len());
    for (i, p) in cloud.points().enumerate() {
        row.clear();
        row.extend(p.iter().map(|v| fmt_f64(*v)));
        if let Some(a) = angles {
            row.push(fmt_f64(a[i].0));
            row.push(fmt_f64(a[i].1));
        }
        row.extend(passthrough.iter().map(|(_, col)| col[i].clone()));
        w.raw(&row)?;
    }
    w.finish()
}

fn fit(mut a: FitArgs, outputs: &mut Outputs) -> Result<FitArgs> {
    a.input = absolute(&a.input)?;
    a.out_dir = absolute(&a.out_dir)?;
    let table = Table::read(&a.input)?;
    let embedding = a.embedding.spec(table.coordinate_columns().len());
    let raw = table.input_cloud(embedding)?;
    let top = embedding.ambient_dim() - 1;
    let dims = resolve_dims(a.dims.take(), top, top)?;
    a.dims = Some(dims.clone());

    let config = FitConfig {
        epsilon: a.epsilon,
        max_iter: a.max_iter,
        support: a.support,
        beta: a.beta,
        step_size: a.step_size,
        recompute_frames: a.recompute_frames,
        radius_retries: a.radius_retries,
        retry_inflation: a.retry_inflation,
        ..FitConfig::new(a.radius, dims, embedding)
    };
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    info!("fitting {} points, {} embedding, dims {:?}", raw.len(), embedding, config.dims);
    let result = fit_nested(&raw, &config)?;

    ensure_dir(&a.out_dir)?;
    let passthrough = table.passthrough();
    for level in &result.levels {
        let failed = level.failures();
        if failed > 0 {
            warn!("d = {}: {failed} of {} points did not converge", level.d, level.status.len());
        }
        let outside = level.support_ok.iter().filter(|ok| !**ok).count();
        if outside > 0 {
            warn!(
                "d = {}: {outside} points ended farther than c·r = {} from every sample",
                level.d,
                config.support * config.radius
            );
        }
        let path = outputs.add(a.out_dir.join(format!("d{}.csv", level.d)));
        write_level(&path, &level.projected, level.angles.as_deref(), &passthrough)?;
    }

    let path = outputs.add(a.out_dir.join("diagnostics.csv"));
    let mut w = CsvOut::create(&path, &["d", "index", "iterations", "residual", "converged", "status", "support_ok"])?;
    for level in &result.levels {
        for i in 0..level.status.len() {
            w.raw([
                level.d.to_string(),
                i.to_string(),
                level.iterations[i].to_string(),
                fmt_f64(level.residuals[i]),
                level.converged(i).to_string(),
                level.status[i].as_str().to_string(),
                level.support_ok[i].to_string(),
            ])?;
        }
    }
    w.finish()?;
    Ok(a)
}

fn pca(mut a: PcaArgs, outputs: &mut Outputs) -> Result<PcaArgs> {
    a.input = absolute(&a.input)?;
    a.out_dir = absolute(&a.out_dir)?;
    let table = Table::read(&a.input)?;
    let embedding = a.embedding.spec(table.coordinate_columns().len());
    let embedded = embed_cloud(&table.input_cloud(embedding)?, embedding)?;
    let ambient = embedding.ambient_dim();
    let dims = resolve_dims(a.dims.take(), ambient, ambient - 1)?;
    a.dims = Some(dims.clone());

    ensure_dir(&a.out_dir)?;
    let passthrough = table.passthrough();
    for d in dims {
        let projected = pca_projection(&embedded, d)?;
        let path = outputs.add(a.out_dir.join(format!("d{d}.csv")));
        write_level(&path, &projected, None, &passthrough)?;
    }
    Ok(a)
}

/// `D=PATH`, or a path whose file stem is `d<D>`.
fn parse_level(spec: &str) -> Result<(usize, PathBuf)> {
    if let Some((d, path)) = spec.split_once('=') {
        if let Ok(d) = d.trim().parse::<usize>() {
            return Ok((d, PathBuf::from(path)));
        }
    }
    let path = PathBuf::from(spec);
    let d = path
        .file_stem()
        .and_then(|s| s.to_str())
        .and_then(|s| s.strip_prefix('d'))
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| CliError::Usage(format!("cannot tell the dimension of `{spec}`; write it as D=PATH")))?;
    Ok((d, path))
}

fn read_labels(path: &Path) -> Result<Vec<i64>> {
    let table = Table::read(path)?;
    if let Some(l) = table.labels() {
        return Ok(l.to_vec());
    }
    if table.headers.len() != 1 {
        return Err(CliError::format(path, "expected a `label` column"));
    }
    table
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r[0].parse::<i64>()
                .map_err(|_| CliError::format(path, format!("row {}: `{}` is not an integer label", i + 1, &r[0])))
        })
        .collect()
}

fn metrics(mut a: MetricsArgs, outputs: &mut Outputs) -> Result<MetricsArgs> {
    a.original = absolute(&a.original)?;
    a.out_dir = absolute(&a.out_dir)?;
    if let Some(l) = &a.labels {
        a.labels = Some(absolute(l)?);
    }
    let mut levels = Vec::with_capacity(a.projected.len());
    for spec in &a.projected {
        let (d, path) = parse_level(spec)?;
        levels.push((d, absolute(&path)?));
    }
    levels.sort_by(|x, y| y.0.cmp(&x.0));
    if levels.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(CliError::Usage("two projected files share a dimension".into()));
    }
    a.projected = levels.iter().map(|(d, p)| format!("{d}={}", p.display())).collect();

    let table = Table::read(&a.original)?;
    let embedding = a.embedding.spec(table.coordinate_columns().len());
    let original = embed_cloud(&table.input_cloud(embedding)?, embedding)?;
    let labels = match &a.labels {
        Some(p) => Some(read_labels(p)?),
        None => table.labels().map(<[i64]>::to_vec),
    };

    let mut clouds = Vec::with_capacity(levels.len());
    for (_, path) in &levels {
        let cloud = Table::read(path)?.coordinates()?;
        if cloud.len() != original.len() || cloud.dim() != original.dim() {
            return Err(CliError::Usage(format!(
                "{}: {} × {} points, original is {} × {}",
                path.display(),
                cloud.len(),
                cloud.dim(),
                original.len(),
                original.dim()
            )));
        }
        clouds.push(cloud);
    }
    let pairs: Vec<(usize, &PointCloud)> = levels.iter().map(|(d, _)| *d).zip(clouds.iter()).collect();
    let options = MetricOptions {
        graph_neighbors: a.graph_neighbors,
        mode: a.mode.into(),
    };
    let report = metric_report(&original, &pairs, labels.as_deref(), options)?;
    if !report.original_connected {
        warn!("kNN graph of the original cloud is disconnected; variation uses its largest component");
    }

    ensure_dir(&a.out_dir)?;
    write_report_csv(&outputs.add(a.out_dir.join("report.csv")), &report)?;
    let txt = outputs.add(a.out_dir.join("report.txt"));
    fs::write(&txt, report_text(&report, &a, original.len())).map_err(|e| CliError::io(&txt, e))?;
    Ok(a)
}

fn write_report_csv(path: &Path, report: &MetricReport) -> Result<()> {
    let with_sil = report.rows.iter().any(|r| r.avg_silhouette.is_some());
    let mut headers = vec!["d"];
    if with_sil {
        headers.push("avg_silhouette");
    }
    headers.extend(["prop_variation", "mse", "graph_connected"]);
    let mut w = CsvOut::create(path, &headers)?;
    for r in &report.rows {
        let mut row = vec![r.d.to_string()];
        if let Some(s) = r.avg_silhouette {
            row.push(fmt_f64(s));
        }
        row.push(fmt_f64(r.prop_variation));
        row.push(fmt_f64(r.mse));
        row.push(r.graph_connected.to_string());
        w.raw(&row)?;
    }
    w.finish()
}

fn report_text(report: &MetricReport, a: &MetricsArgs, n: usize) -> String {
    let mut s = String::new();
    let mut line = |l: String| {
        s.push_str(&l);
        s.push('\n');
    };
    line(format!("pnsm {} metric report", env!("CARGO_PKG_VERSION")));
    line(format!("original: {}", a.original.display()));
    line(format!("points: {n}"));
    line(format!("variation mode: {}", report.mode.as_str()));
    line(format!("graph neighbors: {}", report.graph_neighbors));
    line(format!("original variation: {}", fmt_f64(report.original_variation)));
    line(format!("original graph connected: {}", report.original_connected));
    line(String::new());
    line(format!("{:>4}  {:>14}  {:>14}  {:>14}  {}", "d", "silhouette", "prop_variation", "mse", "connected"));
    for r in &report.rows {
        let sil = r.avg_silhouette.map_or("-".to_string(), |v| format!("{v:.6}"));
        line(format!(
            "{:>4}  {:>14}  {:>14.6}  {:>14.6e}  {}",
            r.d, sil, r.prop_variation, r.mse, r.graph_connected
        ));
    }
    s
}

fn filter(mut a: FilterArgs, outputs: &mut Outputs) -> Result<FilterArgs> {
    a.input = absolute(&a.input)?;
    a.out = absolute(&a.out)?;
    let removed_path = match a.removed.take() {
        Some(p) => absolute(&p)?,
        None => a.out.with_extension("removed.csv"),
    };
    a.removed = Some(removed_path.clone());

    let table = Table::read(&a.input)?;
    let embedding = a.embedding.spec(table.coordinate_columns().len());
    let cloud = embed_cloud(&table.input_cloud(embedding)?, embedding)?;
    let outcome = outlier_filter(&cloud, a.radius, a.min_neighbors)?;
    if outcome.kept_indices.is_empty() {
        warn!("every point has fewer than {} neighbors within {}; output is empty", a.min_neighbors, a.radius);
    }
    info!("kept {} of {} points", outcome.kept_indices.len(), cloud.len());

    ensure_parent(&a.out)?;
    table.write_subset(&outputs.add(a.out.clone()), &outcome.kept_indices)?;
    let mut w = CsvOut::create(&outputs.add(removed_path), &["index"])?;
    for i in &outcome.removed {
        w.raw([i.to_string()])?;
    }
    w.finish()?;
    Ok(a)
}

/// Prints `err` in the style of the binary's other diagnostics.
pub fn report_error(err: &CliError) {
    let mut stderr = std::io::stderr().lock();
    let _ = writeln!(stderr, "error: {err}");
}
