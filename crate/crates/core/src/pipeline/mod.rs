//! End-to-end driver: config → grid → velocity → slice generators →
//! inflated assembly → eigensolve → classification → SEBA → export.
//!
//! A run directory holds `manifest.json` (every resolved parameter, no wall
//! clock data, so repeated runs give identical bytes), `timings.json`,
//! `spectrum.csv`, the binary vector stores and the per-vector field exports.

mod config;
mod export;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use self::config::{
    DomainConfig, ExportConfig, GridConfig, Mode, Param, RunConfig, SebaConfig, TimeConfig, TimeValue, VelocityConfig,
    CONFIG_VERSION,
};
pub use self::export::{
    field_stem, read_complex_vectors, read_field_csv, read_json, read_real_vectors, write_complex_vectors,
    write_field_csv, write_json, write_real_vectors, FieldRow, FieldSidecar,
};
use crate::error::{Error, Result};
use crate::generator::{averaged_generator, slice_generators};
use crate::grid::{Geometry, Grid, GridSpec};
use crate::inflated::{
    a_heuristic, assemble, discrete_temporal_eigenvalue, epsilon_heuristic, epsilon_total, temporal_eigenvalue,
    TimeUnit,
};
use crate::seba::{extract_families, seba, SebaBasis, SebaInit, SebaOptions};
use crate::sparse::CsrMatrix;
use crate::spectrum::{
    classify, function_side, leading_eigenpairs, write_spectrum_csv, Classification, EigenClass, EigenSolution, SolverMetadata, C64,
};
use crate::velocity::{load_gridded, median_speed, ConstantField, SwitchingDoubleGyre, Units, VelocityField, Vortex};

pub const MANIFEST_FORMAT: &str = "infgen-run";
pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const TIMINGS_FILE: &str = "timings.json";
pub const SPECTRUM_FILE: &str = "spectrum.csv";
pub const EIGENVECTORS_FILE: &str = "eigenvectors.bin";
pub const SEBA_FILE: &str = "seba.bin";
pub const FAMILIES_FILE: &str = "families.json";
pub const MATRIX_FILE: &str = "matrix.coo";
pub const EXPORT_DIR: &str = "export";

const SECONDS_PER_DAY: f64 = 86_400.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Running,
    Complete,
    Failed,
}

/// Where a resolved parameter came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Auto,
    Config,
}

/// Parameters fixed before assembly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub n: usize,
    pub n_t: usize,
    /// Node spacing (`τ` in averaged mode).
    pub h: f64,
    pub tau: f64,
    pub time_unit: TimeUnit,
    pub median_speed: f64,
    pub median_side: f64,
    pub longest_extent: f64,
    pub epsilon: f64,
    pub epsilon_source: Source,
    pub epsilon_total: f64,
    pub a: f64,
    pub a_source: Source,
    pub a_heuristic: f64,
    /// In days mode: the `a` heuristic with every quantity in consistent
    /// units (`√day`), next to the mixed-unit value used above.
    pub a_consistent: Option<f64>,
    pub temporal_eigenvalue_continuous: f64,
    pub temporal_eigenvalue_discrete: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    /// 1-based.
    pub index: usize,
    pub re: f64,
    pub im: f64,
    pub residual: f64,
    #[serde(flatten)]
    pub classification: Classification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub index: usize,
    pub birth: Option<usize>,
    pub death: Option<usize>,
    pub birth_time: Option<f64>,
    pub death_time: Option<f64>,
    pub areas: Vec<f64>,
    /// Symmetric-difference area between fibres `l` and `l + 1`.
    pub changes: Vec<f64>,
    /// Midpoint time of the largest support change.
    pub peak_change_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SebaReport {
    /// 1-based eigenvector indices used as input.
    pub vectors: Vec<usize>,
    pub mu: f64,
    pub cutoff: f64,
    pub init: SebaInit,
    pub iterations: usize,
    pub converged: bool,
    pub maxima: Vec<f64>,
    pub minima: Vec<f64>,
    pub families: Vec<FamilyReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub version: u32,
    pub crate_version: String,
    pub status: RunStatus,
    /// Stages finished, in order.
    pub stages: Vec<String>,
    pub failed_stage: Option<String>,
    pub error: Option<String>,
    pub config: RunConfig,
    pub grid: Option<GridSpec>,
    /// Node times of the exported fibres (one pseudo-time in averaged mode).
    pub times: Vec<f64>,
    pub resolved: Option<Resolved>,
    pub solver: Option<SolverMetadata>,
    pub spectrum: Vec<SpectrumEntry>,
    /// Distance from the leading spatial eigenvalue to the leading discrete
    /// temporal eigenvalue; small values mean `a` matches the two scales.
    pub matching_gap: Option<f64>,
    /// Real spatial eigenvectors (1-based) eligible as SEBA input.
    pub seba_candidates: Vec<usize>,
    pub seba: Option<SebaReport>,
    /// Files written, relative to the run directory.
    pub artifacts: Vec<String>,
}

impl RunManifest {
    fn new(config: &RunConfig) -> Self {
        RunManifest {
            format: MANIFEST_FORMAT.into(),
            version: MANIFEST_VERSION,
            crate_version: env!("CARGO_PKG_VERSION").into(),
            status: RunStatus::Running,
            stages: Vec::new(),
            failed_stage: None,
            error: None,
            config: config.clone(),
            grid: None,
            times: Vec::new(),
            resolved: None,
            solver: None,
            spectrum: Vec::new(),
            matching_gap: None,
            seba_candidates: Vec::new(),
            seba: None,
            artifacts: Vec::new(),
        }
    }

    pub fn load(run_dir: &Path) -> Result<RunManifest> {
        let manifest: RunManifest = read_json(&run_dir.join(MANIFEST_FILE))?;
        if manifest.format != MANIFEST_FORMAT || manifest.version != MANIFEST_VERSION {
            return Err(Error::config(format!(
                "{} is not a version {MANIFEST_VERSION} run manifest",
                run_dir.display()
            )));
        }
        Ok(manifest)
    }

    fn record(&mut self, artifact: String) {
        if !self.artifacts.contains(&artifact) {
            self.artifacts.push(artifact);
        }
    }

    fn n_t(&self) -> usize {
        self.times.len()
    }
}

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
    pub solution: EigenSolution,
    pub seba: Option<SebaBasis>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Stop after classification: write the spectrum and vector store only.
    pub spectrum_only: bool,
}

struct Run<'c> {
    config: &'c RunConfig,
    dir: PathBuf,
    manifest: RunManifest,
    timings: BTreeMap<String, f64>,
}

impl Run<'_> {
    fn stage<T>(&mut self, name: &'static str, body: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        log::info!("stage {name}");
        let start = Instant::now();
        match body(self) {
            Ok(value) => {
                self.timings.insert(name.into(), start.elapsed().as_secs_f64());
                self.manifest.stages.push(name.into());
                Ok(value)
            }
            Err(e) => {
                self.manifest.status = RunStatus::Failed;
                self.manifest.failed_stage = Some(name.into());
                self.manifest.error = Some(e.to_string());
                Err(Error::Stage {
                    stage: name,
                    source: Box::new(e),
                })
            }
        }
    }

    fn flush(&mut self) -> Result<()> {
        write_json(&self.dir.join(TIMINGS_FILE), &self.timings)?;
        self.manifest.record(TIMINGS_FILE.into());
        write_json(&self.dir.join(MANIFEST_FILE), &self.manifest)
    }
}

fn build_velocity(config: &RunConfig, nodes: &[f64]) -> Result<Arc<dyn VelocityField>> {
    let default_units = match config.domain.geometry {
        Geometry::Planar => Units::Nondimensional,
        Geometry::Spherical => Units::MetresPerSecond,
    };
    Ok(match &config.velocity {
        VelocityConfig::SwitchingDoubleGyre { speed_scale } => Arc::new(SwitchingDoubleGyre::with_speed_scale(*speed_scale)),
        VelocityConfig::Vortex {
            centre,
            drift,
            max_speed,
            core_radius,
            units,
        } => {
            if !(*core_radius > 0.0) {
                return Err(Error::config("vortex core_radius must be positive"));
            }
            Arc::new(Vortex {
                centre: *centre,
                drift: *drift,
                max_speed: *max_speed,
                core_radius: *core_radius,
                interval: (nodes[0], nodes[nodes.len() - 1]),
                units: units.unwrap_or(default_units),
            })
        }
        VelocityConfig::Constant { u, v } => Arc::new(ConstantField::new(*u, *v)),
        VelocityConfig::Gridded { path } => Arc::new(load_gridded(path)?),
    })
}

/// Runs the configured analysis and writes every artifact into the output
/// directory. On failure the manifest is still written with status `failed`
/// and the failing stage.
pub fn run_pipeline(config: &RunConfig, opts: RunOptions) -> Result<RunArtifacts> {
    let mut run = Run {
        config,
        dir: config.output.clone(),
        manifest: RunManifest::new(config),
        timings: BTreeMap::new(),
    };
    let result = execute(&mut run, opts);
    if result.is_ok() {
        run.manifest.status = RunStatus::Complete;
    }
    let flushed = if run.dir.is_dir() { run.flush() } else { Ok(()) };
    let (solution, basis) = result?;
    flushed?;
    Ok(RunArtifacts {
        dir: run.dir,
        manifest: run.manifest,
        timings: run.timings,
        solution,
        seba: basis,
    })
}

fn execute(run: &mut Run<'_>, opts: RunOptions) -> Result<(EigenSolution, Option<SebaBasis>)> {
    let config = run.config;
    let nodes = run.stage("config", |run| {
        fs::create_dir_all(&run.dir).map_err(|e| Error::io(&run.dir, e))?;
        config.validate()?;
        config.time.nodes()
    })?;
    let grid = run.stage("grid", |run| {
        let grid = Grid::new(config.grid_spec())?;
        run.manifest.grid = Some(*grid.spec());
        Ok(grid)
    })?;
    let field = run.stage("velocity", |_| build_velocity(config, &nodes))?;

    let averaged = config.mode == Mode::Averaged;
    let tau = nodes[nodes.len() - 1] - nodes[0];
    let n_t = if averaged { 1 } else { nodes.len() };
    let h = if averaged { tau } else { tau / (nodes.len() - 1) as f64 };
    let time_unit = config.time.unit();
    let resolved = run.stage("heuristics", |run| {
        let speed = median_speed(&*field, &grid, &nodes)?;
        let side = grid.median_side_length();
        let extent = grid.longest_domain_extent();
        let (epsilon, epsilon_source) = match config.epsilon {
            Param::Auto => (epsilon_heuristic(speed, side), Source::Auto),
            Param::Value(v) => (v, Source::Config),
        };
        let a_auto = a_heuristic(tau, speed, side, extent);
        let (a, a_source) = match (averaged, config.a) {
            (true, _) => (0.0, Source::Config),
            (false, Param::Auto) => (a_auto, Source::Auto),
            (false, Param::Value(v)) => (v, Source::Config),
        };
        let a_consistent = (time_unit == TimeUnit::Days)
            .then(|| tau * SECONDS_PER_DAY.sqrt() * epsilon_total(speed, side) / extent);
        let resolved = Resolved {
            n: grid.len(),
            n_t,
            h,
            tau,
            time_unit,
            median_speed: speed,
            median_side: side,
            longest_extent: extent,
            epsilon,
            epsilon_source,
            epsilon_total: epsilon_total(speed, side),
            a,
            a_source,
            a_heuristic: a_auto,
            a_consistent,
            temporal_eigenvalue_continuous: temporal_eigenvalue(a, tau, 1),
            temporal_eigenvalue_discrete: if averaged {
                0.0
            } else {
                discrete_temporal_eigenvalue(a, h, n_t, 1)
            },
        };
        run.manifest.resolved = Some(resolved.clone());
        run.manifest.times = if averaged {
            vec![0.5 * (nodes[0] + nodes[nodes.len() - 1])]
        } else {
            nodes.clone()
        };
        Ok(resolved)
    })?;

    let matrix: CsrMatrix = if averaged {
        run.stage("assembly", |_| {
            Ok(averaged_generator(&grid, &*field, &nodes, resolved.epsilon, &config.quadrature)?.matrix)
        })?
    } else {
        let slices = run.stage("assembly", |_| {
            slice_generators(&grid, &*field, &nodes, resolved.epsilon, &config.quadrature)
        })?;
        run.stage("inflate", |_| {
            let mut inflated = assemble(&slices, resolved.a, resolved.h)?;
            inflated.time_unit = time_unit;
            Ok(inflated.matrix)
        })?
    };
    if config.dump_matrix {
        run.stage("dump", |run| {
            matrix.write_coo(&run.dir.join(MATRIX_FILE))?;
            run.manifest.record(MATRIX_FILE.into());
            Ok(())
        })?;
    }

    let measures = grid.measures();
    let solution = run.stage("eigensolve", |run| {
        let matrix = function_side(&matrix, &measures)?;
        let mut eigen = config.eigen;
        if eigen.k > matrix.nrows() {
            log::warn!("k = {} exceeds the dimension {}; computing all pairs", eigen.k, matrix.nrows());
            eigen.k = matrix.nrows();
        }
        let solution = leading_eigenpairs(&matrix, &eigen)?;
        run.manifest.solver = Some(solution.metadata.clone());
        write_complex_vectors(&run.dir.join(EIGENVECTORS_FILE), &solution.vectors)?;
        run.manifest.record(EIGENVECTORS_FILE.into());
        Ok(solution)
    })?;

    run.stage("classify", |run| {
        let classes = classify(&solution, grid.len(), n_t, &measures, &config.classify)?;
        write_spectrum_csv(&run.dir.join(SPECTRUM_FILE), &solution, &classes)?;
        run.manifest.record(SPECTRUM_FILE.into());
        run.manifest.spectrum = spectrum_entries(&solution, &classes);
        run.manifest.seba_candidates = run
            .manifest
            .spectrum
            .iter()
            .filter(|e| e.classification.class == EigenClass::SpatialReal)
            .map(|e| e.index)
            .collect();
        run.manifest.matching_gap = (!averaged)
            .then(|| {
                run.manifest
                    .spectrum
                    .iter()
                    .find(|e| e.classification.class.is_spatial())
                    .map(|e| (e.re - resolved.temporal_eigenvalue_discrete).abs())
            })
            .flatten();
        Ok(())
    })?;
    if opts.spectrum_only {
        return Ok((solution, None));
    }

    let values: Vec<Vec<f64>> = solution
        .vectors
        .iter()
        .map(|v| v.iter().map(|z| z.re).collect())
        .collect();
    let basis = if config.seba.vectors.is_empty() {
        None
    } else {
        let request = SebaRequest {
            vectors: config.seba.vectors.clone(),
            mu: config.seba.mu,
            cutoff: config.seba.cutoff,
            init: config.seba.init,
        };
        Some(run.stage("seba", |run| {
            apply_seba(&run.dir, &mut run.manifest, &grid, &values, &request, export_times(config, n_t).as_slice())
        })?)
    };

    run.stage("export", |run| {
        let times = run.manifest.times.clone();
        let selected = export_times(config, n_t);
        for (i, v) in values.iter().enumerate() {
            let entry = &run.manifest.spectrum[i];
            let sidecar = FieldSidecar {
                kind: "vec".into(),
                index: i + 1,
                grid: *grid.spec(),
                eigenvalue: Some([entry.re, entry.im]),
                class: Some(entry.classification.class),
                component: if entry.im == 0.0 { "real" } else { "real-part" }.into(),
                cutoff: config.seba.cutoff,
                time_indices: selected.clone(),
                times: selected.iter().map(|&l| times[l]).collect(),
                rows: selected.len() * grid.len(),
            };
            let written = write_field(&run.dir, &grid, &times, v, sidecar)?;
            written.into_iter().for_each(|a| run.manifest.record(a));
        }
        Ok(())
    })?;
    Ok((solution, basis))
}

fn spectrum_entries(solution: &EigenSolution, classes: &[Classification]) -> Vec<SpectrumEntry> {
    solution
        .values
        .iter()
        .zip(&solution.residuals)
        .zip(classes)
        .enumerate()
        .map(|(i, ((z, &residual), &classification))| SpectrumEntry {
            index: i + 1,
            re: z.re,
            im: z.im,
            residual,
            classification,
        })
        .collect()
}

fn export_times(config: &RunConfig, n_t: usize) -> Vec<usize> {
    config.export.times.clone().unwrap_or_else(|| (0..n_t).collect())
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`; returns their names
/// relative to `dir`.
fn write_field(dir: &Path, grid: &Grid, times: &[f64], values: &[f64], sidecar: FieldSidecar) -> Result<Vec<String>> {
    let stem = field_stem(&sidecar.kind, sidecar.index);
    let (csv, json) = (format!("{stem}.csv"), format!("{stem}.json"));
    write_field_csv(&dir.join(&csv), grid, times, &sidecar.time_indices, values)?;
    write_json(&dir.join(&json), &sidecar)?;
    Ok(vec![csv, json])
}

/// SEBA input selection and parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SebaRequest {
    /// 1-based eigenvector indices.
    pub vectors: Vec<usize>,
    pub mu: Option<f64>,
    pub cutoff: f64,
    pub init: SebaInit,
}

fn apply_seba(
    dir: &Path,
    manifest: &mut RunManifest,
    grid: &Grid,
    values: &[Vec<f64>],
    request: &SebaRequest,
    time_indices: &[usize],
) -> Result<SebaBasis> {
    if request.vectors.is_empty() {
        return Err(Error::config("no SEBA input vectors given"));
    }
    if !(0.0..1.0).contains(&request.cutoff) {
        return Err(Error::config("SEBA cutoff must lie in [0, 1)"));
    }
    let mut inputs = Vec::with_capacity(request.vectors.len());
    for &i in &request.vectors {
        let entry = manifest
            .spectrum
            .get(i.wrapping_sub(1))
            .ok_or_else(|| Error::config(format!("vector {i} is not in the computed spectrum 1..={}", values.len())))?;
        match entry.classification.class {
            EigenClass::Trivial | EigenClass::SpatialReal => inputs.push(values[i - 1].clone()),
            class => {
                return Err(Error::config(format!(
                    "vector {i} is {class}; SEBA takes real spatial (or the trivial) vectors only"
                )))
            }
        }
    }
    let opts = SebaOptions {
        mu: request.mu,
        init: request.init,
        ..SebaOptions::default()
    };
    let basis = seba(&inputs, &opts)?;
    let n_t = manifest.n_t();
    let times = manifest.times.clone();
    let measures = grid.measures();
    let families = extract_families(&basis.columns, &measures, n_t, request.cutoff)?;

    write_real_vectors(&dir.join(SEBA_FILE), &basis.columns)?;
    manifest.record(SEBA_FILE.into());
    for (j, column) in basis.columns.iter().enumerate() {
        let sidecar = FieldSidecar {
            kind: "seba".into(),
            index: j + 1,
            grid: *grid.spec(),
            eigenvalue: None,
            class: None,
            component: "real".into(),
            cutoff: request.cutoff,
            time_indices: time_indices.to_vec(),
            times: time_indices.iter().map(|&l| times[l]).collect(),
            rows: time_indices.len() * grid.len(),
        };
        write_field(dir, grid, &times, column, sidecar)?
            .into_iter()
            .for_each(|a| manifest.record(a));
    }
    let reports: Vec<FamilyReport> = families
        .iter()
        .map(|f| FamilyReport {
            index: f.index + 1,
            birth: f.birth,
            death: f.death,
            birth_time: f.birth.map(|l| times[l]),
            death_time: f.death.map(|l| times[l]),
            areas: f.areas.clone(),
            changes: f.changes.clone(),
            peak_change_time: f
                .changes
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0.0)
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(l, _)| 0.5 * (times[l] + times[l + 1])),
        })
        .collect();
    write_json(&dir.join(FAMILIES_FILE), &reports)?;
    manifest.record(FAMILIES_FILE.into());
    manifest.seba = Some(SebaReport {
        vectors: request.vectors.clone(),
        mu: basis.mu,
        cutoff: request.cutoff,
        init: request.init,
        iterations: basis.iterations,
        converged: basis.converged,
        maxima: basis.maxima.clone(),
        minima: basis.minima.clone(),
        families: reports,
    });
    Ok(basis)
}

fn load_values(run_dir: &Path, manifest: &RunManifest) -> Result<Vec<Vec<f64>>> {
    let n = manifest.grid.map(|g| g.nx * g.ny).unwrap_or(0);
    let vectors = read_complex_vectors(
        &run_dir.join(EIGENVECTORS_FILE),
        manifest.spectrum.len(),
        n * manifest.n_t(),
    )?;
    Ok(vectors
        .into_iter()
        .map(|v| v.into_iter().map(|z: C64| z.re).collect())
        .collect())
}

fn finished_run(run_dir: &Path) -> Result<(RunManifest, Grid)> {
    let manifest = RunManifest::load(run_dir)?;
    if manifest.spectrum.is_empty() {
        return Err(Error::config(format!(
            "run {} has no classified spectrum (status {:?})",
            run_dir.display(),
            manifest.status
        )));
    }
    let spec = manifest
        .grid
        .ok_or_else(|| Error::config(format!("run {} has no grid", run_dir.display())))?;
    let grid = Grid::new(spec)?;
    Ok((manifest, grid))
}

/// Re-runs SEBA on an existing run directory with a new selection and
/// updates its manifest.
pub fn run_seba(run_dir: &Path, request: &SebaRequest) -> Result<SebaBasis> {
    let (mut manifest, grid) = finished_run(run_dir)?;
    let values = load_values(run_dir, &manifest)?;
    let time_indices = export_times(&manifest.config, manifest.n_t());
    let basis = apply_seba(run_dir, &mut manifest, &grid, &values, request, &time_indices)?;
    write_json(&run_dir.join(MANIFEST_FILE), &manifest)?;
    Ok(basis)
}

/// A stored vector: `vec:<i>` (eigenvector) or `seba:<j>` (SEBA column),
/// both 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    Eigenvector(usize),
    Seba(usize),
}

impl std::str::FromStr for Selection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::config(format!("selection `{s}` is not of the form vec:<i> or seba:<j>"));
        let (kind, index) = s.split_once(':').ok_or_else(bad)?;
        let index: usize = index.trim().parse().map_err(|_| bad())?;
        if index == 0 {
            return Err(bad());
        }
        match kind.trim() {
            "vec" => Ok(Selection::Eigenvector(index)),
            "seba" => Ok(Selection::Seba(index)),
            _ => Err(bad()),
        }
    }
}

/// Parses time-node lists such as `t0,t4,7`.
pub fn parse_time_indices(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|tok| {
            let tok = tok.trim();
            tok.strip_prefix('t')
                .unwrap_or(tok)
                .parse()
                .map_err(|_| Error::config(format!("`{tok}` is not a time-node index like t3")))
        })
        .collect()
}

/// Writes one stored vector at the given time nodes into `<run>/export/`.
/// `None` exports every node.
pub fn export_selection(run_dir: &Path, selection: Selection, times: Option<&[usize]>) -> Result<Vec<PathBuf>> {
    let (manifest, grid) = finished_run(run_dir)?;
    let n_t = manifest.n_t();
    let time_indices: Vec<usize> = times.map_or_else(|| (0..n_t).collect(), <[usize]>::to_vec);
    if let Some(&l) = time_indices.iter().find(|&&l| l >= n_t) {
        return Err(Error::config(format!("time index t{l} is outside t0..t{}", n_t - 1)));
    }
    let (values, sidecar) = match selection {
        Selection::Eigenvector(i) => {
            let entry = manifest
                .spectrum
                .get(i - 1)
                .ok_or_else(|| Error::config(format!("vec:{i} is not in the run (1..={})", manifest.spectrum.len())))?;
            let values = load_values(run_dir, &manifest)?.swap_remove(i - 1);
            let sidecar = FieldSidecar {
                kind: "vec".into(),
                index: i,
                grid: *grid.spec(),
                eigenvalue: Some([entry.re, entry.im]),
                class: Some(entry.classification.class),
                component: if entry.im == 0.0 { "real" } else { "real-part" }.into(),
                cutoff: manifest.config.seba.cutoff,
                time_indices: Vec::new(),
                times: Vec::new(),
                rows: 0,
            };
            (values, sidecar)
        }
        Selection::Seba(j) => {
            let report = manifest
                .seba
                .as_ref()
                .ok_or_else(|| Error::config(format!("run {} has no SEBA result", run_dir.display())))?;
            let count = report.maxima.len();
            if j > count {
                return Err(Error::config(format!("seba:{j} is not in the run (1..={count})")));
            }
            let values = read_real_vectors(&run_dir.join(SEBA_FILE), count, grid.len() * n_t)?.swap_remove(j - 1);
            let sidecar = FieldSidecar {
                kind: "seba".into(),
                index: j,
                grid: *grid.spec(),
                eigenvalue: None,
                class: None,
                component: "real".into(),
                cutoff: report.cutoff,
                time_indices: Vec::new(),
                times: Vec::new(),
                rows: 0,
            };
            (values, sidecar)
        }
    };
    let sidecar = FieldSidecar {
        times: time_indices.iter().map(|&l| manifest.times[l]).collect(),
        rows: time_indices.len() * grid.len(),
        time_indices,
        ..sidecar
    };
    let out = run_dir.join(EXPORT_DIR);
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    Ok(write_field(&out, &grid, &manifest.times, &values, sidecar)?
        .into_iter()
        .map(|name| out.join(name))
        .collect())
}
