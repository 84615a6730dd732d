use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, ExperimentKind};
use super::fit::{fit_scaling, ScalingModel};
use crate::capacity::{nodal_capacity_experiment, variational_capacity, Condenser, Shape};
use crate::doubling::{main_theorem_row_at, run_chain};
use crate::error::{LabError, Result};
use crate::heat::kernel_bound_report;
use crate::nodal::{
    deficiency_profile, domain_csv_header, domain_csv_record, domain_rows, inradius_report, label_nodal_domains, DomainLabeling,
    DEFAULT_ZERO_TOLERANCE,
};
use crate::spectra::rng::NormalStream;
use crate::spectra::{box_mode, random_eigenfunction, resolution_for, sample_field, torus_eigenspace, EigenMode, ScalarGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFailure {
    pub instance: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: ExperimentKind,
    /// Seconds since the Unix epoch. The only time-dependent field of a run.
    pub created: u64,
    pub config: ExperimentConfig,
    pub instances: usize,
    /// Instances left out by design, such as levels with no lattice representation.
    pub skipped: Vec<String>,
    pub failures: Vec<InstanceFailure>,
    pub artifacts: Vec<Artifact>,
}

impl Manifest {
    pub fn succeeded(&self) -> bool {
        self.failures.is_empty()
    }
}

pub const MANIFEST_NAME: &str = "manifest.json";

struct Field {
    name: String,
    level: u64,
    seed: u64,
    mode: EigenMode,
}

struct Sampled {
    grid: ScalarGrid,
    labeling: DomainLabeling,
}

fn sample(config: &ExperimentConfig, mode: &EigenMode) -> Result<Sampled> {
    let grid = sample_field(mode, resolution_for(mode, config.samples_per_wavelength, 2), false)?;
    let labeling = label_nodal_domains(&grid, DEFAULT_ZERO_TOLERANCE)?;
    Ok(Sampled { grid, labeling })
}

/// Fields of the sweep in config order, plus the skipped and failed instance names.
fn fields(config: &ExperimentConfig) -> (Vec<Field>, Vec<String>, Vec<InstanceFailure>) {
    let mut out = Vec::new();
    let mut skipped = Vec::new();
    let mut failures = Vec::new();
    for m in &config.box_modes {
        let name = format!("box_{}", m.iter().map(|k| k.to_string()).collect::<Vec<_>>().join("_"));
        match box_mode(&config.geometry, m) {
            Ok(mode) => out.push(Field {
                name,
                level: m.iter().map(|k| (k * k) as u64).sum(),
                seed: 0,
                mode,
            }),
            Err(e) => failures.push(InstanceFailure {
                instance: name,
                error: e.to_string(),
            }),
        }
    }
    for &level in &config.levels {
        match torus_eigenspace(&config.geometry, level) {
            Ok(b) if b.is_empty() => {
                skipped.push(format!("level{level}"));
                continue;
            }
            Ok(_) => {}
            Err(e) => {
                failures.push(InstanceFailure {
                    instance: format!("level{level}"),
                    error: e.to_string(),
                });
                continue;
            }
        }
        for &seed in &config.seeds {
            let name = format!("level{level}_seed{seed}");
            match random_eigenfunction(&config.geometry, level, seed) {
                Ok(mode) => out.push(Field { name, level, seed, mode }),
                Err(e) => failures.push(InstanceFailure {
                    instance: name,
                    error: e.to_string(),
                }),
            }
        }
    }
    (out, skipped, failures)
}

type Table = (Vec<String>, Vec<Vec<String>>);

fn num(x: f64) -> String {
    format!("{x}")
}

/// Writes files under the output directory and records their hashes.
struct Output {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
}

impl Output {
    fn bytes(&mut self, name: &str, data: &[u8]) -> Result<()> {
        fs::write(self.dir.join(name), data)?;
        self.artifacts.push(Artifact {
            path: name.to_string(),
            sha256: hex::encode(Sha256::digest(data)),
            bytes: data.len() as u64,
        });
        Ok(())
    }

    /// Hashes a file some other writer already put in the output directory.
    fn record(&mut self, name: &str) -> Result<()> {
        let data = fs::read(self.dir.join(name))?;
        self.artifacts.push(Artifact {
            path: name.to_string(),
            sha256: hex::encode(Sha256::digest(&data)),
            bytes: data.len() as u64,
        });
        Ok(())
    }

    fn csv(&mut self, name: &str, (header, rows): &Table) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let data = w.into_inner().map_err(|e| LabError::Io(e.into_error()))?;
        self.bytes(name, &data)
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut data = serde_json::to_vec_pretty(value)?;
        data.push(b'\n');
        self.bytes(name, &data)
    }
}

fn strings(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

/// Runs the sweep described by `config`, writing CSV/JSON reports and `manifest.json`
/// into `config.output_dir`. Failing instances are recorded in the manifest and do not
/// stop the sweep; only an invalid config or an I/O error is returned as `Err`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Manifest> {
    config.validate()?;
    fs::create_dir_all(&config.output_dir)?;
    let mut out = Output {
        dir: config.output_dir.clone(),
        artifacts: Vec::new(),
    };
    let (fields, skipped, mut failures) = fields(config);
    let mut instances = fields.len();
    match config.kind {
        ExperimentKind::Nodal => nodal(config, &fields, &mut out, &mut failures)?,
        ExperimentKind::Chain => chain(config, &fields, &mut out, &mut failures)?,
        ExperimentKind::Capacity => {
            instances += config.condensers.len();
            capacity(config, &fields, &mut out, &mut failures)?
        }
        ExperimentKind::HeatBounds => {
            instances = 1;
            heat_bounds(config, &mut out, &mut failures)?
        }
        ExperimentKind::Scaling => scaling(config, &fields, &mut out, &mut failures)?,
    }
    let manifest = Manifest {
        kind: config.kind,
        created: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        config: config.clone(),
        instances,
        skipped,
        failures,
        artifacts: out.artifacts,
    };
    write_manifest(&config.output_dir, &manifest)?;
    Ok(manifest)
}

/// Samples every field of the config and writes `<instance>.mode.json` plus the grid
/// files `<instance>.json` / `<instance>.bin`, whatever the experiment kind.
pub fn run_spectrum(config: &ExperimentConfig) -> Result<Manifest> {
    config.validate()?;
    fs::create_dir_all(&config.output_dir)?;
    let mut out = Output {
        dir: config.output_dir.clone(),
        artifacts: Vec::new(),
    };
    let (fields, skipped, mut failures) = fields(config);
    let grids: Vec<Result<ScalarGrid>> = fields
        .par_iter()
        .map(|f| sample_field(&f.mode, resolution_for(&f.mode, config.samples_per_wavelength, 2), false))
        .collect();
    for (f, g) in fields.iter().zip(grids) {
        match g {
            Ok(g) => {
                out.json(&format!("{}.mode.json", f.name), &f.mode)?;
                g.write(&config.output_dir.join(&f.name))?;
                out.record(&format!("{}.json", f.name))?;
                out.record(&format!("{}.bin", f.name))?;
            }
            Err(e) => failures.push(InstanceFailure {
                instance: f.name.clone(),
                error: e.to_string(),
            }),
        }
    }
    let manifest = Manifest {
        kind: config.kind,
        created: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        config: config.clone(),
        instances: fields.len(),
        skipped,
        failures,
        artifacts: out.artifacts,
    };
    write_manifest(&config.output_dir, &manifest)?;
    Ok(manifest)
}

fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<()> {
    let mut data = serde_json::to_vec_pretty(manifest)?;
    data.push(b'\n');
    fs::write(dir.join(MANIFEST_NAME), data)?;
    Ok(())
}

/// Re-hashes every artifact of the manifest in `dir`; returns the paths that are missing
/// or whose content changed.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>> {
    let manifest: Manifest = serde_json::from_slice(&fs::read(dir.join(MANIFEST_NAME))?)?;
    Ok(manifest
        .artifacts
        .iter()
        .filter(|a| match fs::read(dir.join(&a.path)) {
            Ok(data) => hex::encode(Sha256::digest(&data)) != a.sha256,
            Err(_) => true,
        })
        .map(|a| a.path.clone())
        .collect())
}

/// Runs `job` over the fields in parallel and keeps the results in field order.
fn per_field<T: Send>(
    config: &ExperimentConfig,
    fields: &[Field],
    failures: &mut Vec<InstanceFailure>,
    job: impl Fn(&Field, &Sampled) -> Result<T> + Sync,
) -> Vec<(usize, T)> {
    let results: Vec<Result<T>> = fields
        .par_iter()
        .map(|f| sample(config, &f.mode).and_then(|s| job(f, &s)))
        .collect();
    let mut ok = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => ok.push((i, v)),
            Err(e) => failures.push(InstanceFailure {
                instance: fields[i].name.clone(),
                error: e.to_string(),
            }),
        }
    }
    ok
}

fn min_centered_domain(s: &Sampled) -> Option<u32> {
    inradius_report(&s.labeling, &s.grid)
        .into_iter()
        .min_by(|a, b| a.centered_inradius.total_cmp(&b.centered_inradius))
        .map(|r| r.id)
}

fn nodal(config: &ExperimentConfig, fields: &[Field], out: &mut Output, failures: &mut Vec<InstanceFailure>) -> Result<()> {
    let d = config.geometry.dim;
    let results = per_field(config, fields, failures, |f, s| {
        let radii = inradius_report(&s.labeling, &s.grid);
        let rows = domain_rows(f.mode.eigenvalue, &s.labeling, &s.grid, &radii);
        let deficiency = if config.deltas.is_empty() {
            Vec::new()
        } else {
            let id = radii
                .iter()
                .min_by(|a, b| a.centered_inradius.total_cmp(&b.centered_inradius))
                .map(|r| r.id)
                .unwrap_or(1);
            let ratios = deficiency_profile(&f.mode, &s.grid, &s.labeling, id, &config.deltas, None)?;
            config.deltas.iter().zip(ratios).map(|(&delta, r)| (id, delta, r)).collect()
        };
        Ok((rows, deficiency))
    });
    let mut header = strings(&["instance", "level", "seed"]);
    header.extend(domain_csv_header(d));
    let mut domains = Vec::new();
    let mut deficiency = Vec::new();
    for (i, (rows, defs)) in &results {
        let f = &fields[*i];
        for r in rows {
            let mut rec = vec![f.name.clone(), f.level.to_string(), f.seed.to_string()];
            rec.extend(domain_csv_record(r));
            domains.push(rec);
        }
        for (id, delta, ratio) in defs {
            deficiency.push(vec![
                f.name.clone(),
                num(f.mode.eigenvalue),
                id.to_string(),
                num(*delta),
                num(*ratio),
            ]);
        }
    }
    out.csv("domains.csv", &(header, domains))?;
    if !config.deltas.is_empty() {
        out.csv(
            "deficiency.csv",
            &(
                strings(&["instance", "lambda", "domain_id", "delta", "deficiency_ratio"]),
                deficiency,
            ),
        )?;
    }
    Ok(())
}

fn chain(config: &ExperimentConfig, fields: &[Field], out: &mut Output, failures: &mut Vec<InstanceFailure>) -> Result<()> {
    let results = per_field(config, fields, failures, |f, s| {
        let mut reports = Vec::new();
        let mut outside = 0usize;
        for id in s.labeling.ids() {
            for &delta in &config.deltas {
                for &a in &config.a_values {
                    match run_chain(&f.mode, &s.grid, &s.labeling, id, delta, a) {
                        Ok(r) => reports.push(r),
                        Err(LabError::OutsideGeometry(_)) => outside += 1,
                        Err(e) => return Err(e),
                    }
                }
            }
        }
        Ok((reports, outside))
    });
    let header = strings(&[
        "instance",
        "lambda",
        "domain_id",
        "delta",
        "A",
        "hypothesis",
        "chain_length",
        "min_slack",
        "epsilon_grid",
        "telescoping_holds",
        "truncated",
    ]);
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for (i, (reports, outside)) in &results {
        let f = &fields[*i];
        for r in reports {
            let min_slack = r.telescoping_slack.iter().cloned().fold(f64::INFINITY, f64::min);
            rows.push(vec![
                f.name.clone(),
                num(r.lambda),
                r.domain_id.to_string(),
                num(r.delta),
                r.a.to_string(),
                serde_json::to_value(r.hypothesis)?.as_str().unwrap_or_default().to_string(),
                r.chain.len().to_string(),
                if min_slack.is_finite() { num(min_slack) } else { String::new() },
                num(r.epsilon_grid),
                r.telescoping_holds.to_string(),
                r.truncated.to_string(),
            ]);
            lines.extend(serde_json::to_vec(&serde_json::json!({"instance": f.name, "report": r}))?);
            lines.push(b'\n');
        }
        if *outside > 0 {
            rows.push(vec![
                f.name.clone(),
                num(f.mode.eigenvalue),
                String::new(),
                String::new(),
                String::new(),
                "outside_geometry".into(),
                outside.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ]);
        }
    }
    out.csv("chains.csv", &(header, rows))?;
    out.bytes("chains.jsonl", &lines)
}

/// Analytic capacity of concentric balls, when `k` and `u` are such.
fn concentric_capacity(k: &Shape, u: &Shape) -> Option<f64> {
    match (k, u) {
        (Shape::Ball { center: c1, radius: a }, Shape::Ball { center: c2, radius: b }) if c1 == c2 && a < b => match c1.len() {
            2 => Some(2.0 * std::f64::consts::PI / (b / a).ln()),
            3 => Some(4.0 * std::f64::consts::PI / (1.0 / a - 1.0 / b)),
            _ => None,
        },
        _ => None,
    }
}

fn shape_size(s: &Shape) -> f64 {
    match s {
        Shape::Ball { radius, .. } => *radius,
        Shape::Box { lower, upper } => lower.iter().zip(upper).map(|(l, u)| 0.5 * (u - l)).fold(0.0, f64::max),
        Shape::LShape { half_side, .. } => *half_side,
        Shape::Union { parts } => parts.iter().map(shape_size).fold(0.0, f64::max),
    }
}

fn capacity(config: &ExperimentConfig, fields: &[Field], out: &mut Output, failures: &mut Vec<InstanceFailure>) -> Result<()> {
    let results: Vec<Result<_>> = config
        .condensers
        .par_iter()
        .map(|c| Condenser::from_shapes(&c.k, &c.u, 1.0 / c.resolution as f64).and_then(|cond| variational_capacity(&cond)))
        .collect();
    let header = strings(&["shape", "a", "b", "N", "cap", "flux", "relative_gap", "analytic", "rel_err"]);
    let mut rows = Vec::new();
    for (i, (case, r)) in config.condensers.iter().zip(results).enumerate() {
        match r {
            Ok(r) => {
                let analytic = concentric_capacity(&case.k, &case.u);
                rows.push(vec![
                    case.k.name().to_string(),
                    num(shape_size(&case.k)),
                    num(shape_size(&case.u)),
                    case.resolution.to_string(),
                    num(r.energy),
                    num(r.flux),
                    num(r.relative_gap),
                    analytic.map(num).unwrap_or_default(),
                    analytic.map(|a| num((r.energy - a) / a)).unwrap_or_default(),
                ]);
            }
            Err(e) => failures.push(InstanceFailure {
                instance: format!("condenser{i}"),
                error: e.to_string(),
            }),
        }
    }
    out.csv("capacity.csv", &(header, rows))?;

    if !fields.is_empty() && !config.deltas.is_empty() {
        let results = per_field(config, fields, failures, |f, s| {
            let id = min_centered_domain(s).unwrap_or(1);
            config
                .deltas
                .iter()
                .map(|&delta| nodal_capacity_experiment(&f.mode, &s.grid, &s.labeling, id, delta))
                .collect::<Result<Vec<_>>>()
        });
        let header = strings(&[
            "instance",
            "lambda",
            "domain_id",
            "delta",
            "k_nodes",
            "vacuous",
            "capacity",
            "temperature",
            "normalized_cap",
            "normalized_temp",
            "mass_u_minus_k",
            "exit_tail",
            "decay",
            "majorization_margin",
        ]);
        let mut rows = Vec::new();
        for (i, reports) in &results {
            for r in reports {
                rows.push(vec![
                    fields[*i].name.clone(),
                    num(r.lambda),
                    r.domain_id.to_string(),
                    num(r.delta),
                    r.k_nodes.to_string(),
                    r.vacuous.to_string(),
                    num(r.capacity),
                    num(r.temperature),
                    num(r.normalized_cap),
                    num(r.normalized_temp),
                    num(r.mass_u_minus_k),
                    num(r.exit_tail),
                    num(r.decay),
                    num(r.majorization_margin),
                ]);
            }
        }
        out.csv("nodal_capacity.csv", &(header, rows))?;
    }
    Ok(())
}

fn heat_bounds(config: &ExperimentConfig, out: &mut Output, failures: &mut Vec<InstanceFailure>) -> Result<()> {
    let geo = &config.geometry;
    let mut pairs = Vec::new();
    for &seed in &config.seeds {
        let mut s = NormalStream::new(seed);
        for _ in 0..config.pairs_per_seed {
            let x: Vec<f64> = geo.sides.iter().map(|l| l * s.uniform()).collect();
            let y: Vec<f64> = geo.sides.iter().map(|l| l * s.uniform()).collect();
            pairs.push((x, y));
        }
    }
    match kernel_bound_report(geo, &config.times, &pairs, config.norris_t0) {
        Ok(mut rep) => {
            let rows = rep
                .rows
                .iter()
                .map(|r| vec![num(r.t), num(r.dist), num(r.value), num(r.bound), num(r.margin)])
                .collect();
            out.csv("kernel_bounds.csv", &(strings(&["t", "dist", "value", "bound", "margin"]), rows))?;
            rep.rows.clear();
            out.json("kernel_bounds.json", &rep)?;
        }
        Err(e) => failures.push(InstanceFailure {
            instance: "kernel_bounds".into(),
            error: e.to_string(),
        }),
    }
    Ok(())
}

fn scaling(config: &ExperimentConfig, fields: &[Field], out: &mut Output, failures: &mut Vec<InstanceFailure>) -> Result<()> {
    let results: Vec<Result<_>> = fields
        .par_iter()
        .map(|f| main_theorem_row_at(&f.mode, f.level, f.seed, resolution_for(&f.mode, config.samples_per_wavelength, 2)))
        .collect();
    let header = strings(&[
        "instance",
        "level",
        "seed",
        "lambda",
        "resolution",
        "domains",
        "min_centered_inradius",
        "lambda_scale",
        "log_scale",
        "normalized",
    ]);
    let mut rows = Vec::new();
    let mut data = Vec::new();
    for (f, r) in fields.iter().zip(results) {
        match r {
            Ok(r) => {
                rows.push(vec![
                    f.name.clone(),
                    r.level.to_string(),
                    r.seed.to_string(),
                    num(r.lambda),
                    r.resolution.to_string(),
                    r.domains.to_string(),
                    num(r.min_centered_inradius),
                    num(r.lambda_scale),
                    num(r.log_scale),
                    num(r.normalized),
                ]);
                data.push((r.lambda, r.min_centered_inradius));
            }
            Err(e) => failures.push(InstanceFailure {
                instance: f.name.clone(),
                error: e.to_string(),
            }),
        }
    }
    out.csv("scaling.csv", &(header, rows))?;
    let (l, y): (Vec<f64>, Vec<f64>) = data.into_iter().unzip();
    let fits: Vec<_> = [ScalingModel::PurePower, ScalingModel::PowerWithLogCorrection]
        .into_iter()
        .filter_map(|m| fit_scaling(&l, &y, m, config.geometry.dim).ok())
        .collect();
    out.json("fits.json", &fits)
}
