//! Sweeps over domain sizes and realizations, result tables and field dumps.

use crate::beam::{BeamConfig, BoundaryRotation};
use crate::domain::{build_domain, ConnectOptions, Domain, DomainError, RealizationId, TilingIndex, VertexClass};
use crate::homogenize::{
    anisotropy_index, decompose, homogenize, set_average, Homogenization, HomogenizeError, ModelRef, SetAverage,
};
use crate::lattice::UNIT_A;
use crate::solver::SolverConfig;
use crate::spring::SpringConfig;
use crate::tiling::{generate, load_tiling, save_tiling, Tiling, TilingError, DEFAULT_POLYGON_BUDGET};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Name of the center sampling scheme; part of the reproducibility contract.
pub const CENTER_SCHEME: &str = "chacha8-v1";

/// Column order of the results table.
pub const RESULT_HEADER: [&str; 19] = [
    "model",
    "n",
    "realization_id",
    "center_x",
    "center_y",
    "polygons",
    "interior_dofs",
    "H11",
    "H12",
    "H16",
    "H22",
    "H26",
    "H66",
    "lambda",
    "mu",
    "nu",
    "index",
    "residual_max",
    "wall_time_s",
];

/// Largest inflation level tried when sizing the master tiling automatically.
pub const MAX_AUTO_STEPS: u32 = 7;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Tiling(#[from] TilingError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Homogenize(#[from] HomogenizeError),
    #[error("{failed} of {total} rows failed (limit 20%); first failure: {first}")]
    TooManyFailures { failed: usize, total: usize, first: String },
    #[error("nothing to export")]
    Empty,
    #[error("row {row}: stored index {stored} differs from recomputed {recomputed}")]
    Inconsistent { row: usize, stored: f64, recomputed: f64 },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("toml: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Spring,
    Beam,
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Spring => "spring",
            Model::Beam => "beam",
        }
    }
}

/// How the size parameter `n` maps to a disk radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeMeaning {
    #[default]
    Diameter,
    Radius,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Model,
    #[serde(default = "default_n_list")]
    pub n_list: Vec<u32>,
    #[serde(default = "default_realizations")]
    pub realizations: u32,
    #[serde(default)]
    pub master_seed: u64,
    /// Whether `n` is the disk diameter or radius, in units of `length_unit`.
    #[serde(default)]
    pub n_is: SizeMeaning,
    /// The unit `a` in shortest-edge lengths.
    #[serde(default = "unit_a")]
    pub length_unit: f64,
    #[serde(default)]
    pub spring: SpringConfig,
    #[serde(default)]
    pub beam: BeamConfig,
    #[serde(default)]
    pub boundary_rotation: BoundaryRotation,
    #[serde(default = "yes")]
    pub boundary_apex_triples: bool,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Inflation steps of the master tiling; chosen from `n_list` when absent.
    #[serde(default)]
    pub tiling_steps: Option<u32>,
    /// Tiling file reused across runs; generated and written when missing.
    #[serde(default)]
    pub tiling_cache: Option<PathBuf>,
    /// Store measured wall time in the rows (breaks byte-identical reruns).
    #[serde(default)]
    pub record_wall_time: bool,
    /// Allow sizes beyond the desk-scale range.
    #[serde(default)]
    pub allow_large: bool,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub results: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

fn default_n_list() -> Vec<u32> {
    vec![10, 20, 30, 40]
}
fn default_realizations() -> u32 {
    10
}
fn unit_a() -> f64 {
    UNIT_A
}
fn yes() -> bool {
    true
}

/// Largest `n` accepted without `allow_large`.
pub const DESK_SCALE_MAX_N: u32 = 100;

impl ExperimentConfig {
    pub fn new(model: Model) -> Self {
        Self {
            model,
            n_list: default_n_list(),
            realizations: default_realizations(),
            master_seed: 0,
            n_is: SizeMeaning::Diameter,
            length_unit: UNIT_A,
            spring: SpringConfig::default(),
            beam: BeamConfig::default(),
            boundary_rotation: BoundaryRotation::Clamped,
            boundary_apex_triples: true,
            solver: SolverConfig::default(),
            tiling_steps: None,
            tiling_cache: None,
            record_wall_time: false,
            allow_large: false,
            output: OutputConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.n_list.is_empty() {
            return Err(ExperimentError::Config("n_list is empty".into()));
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ExperimentError::Config("n_list must be strictly increasing".into()));
        }
        if self.n_list[0] == 0 {
            return Err(ExperimentError::Config("n must be positive".into()));
        }
        if self.realizations == 0 {
            return Err(ExperimentError::Config("realizations must be at least 1".into()));
        }
        if !(self.length_unit > 0.0 && self.length_unit.is_finite()) {
            return Err(ExperimentError::Config("length_unit must be positive".into()));
        }
        if self.spring.unit_length != self.length_unit {
            return Err(ExperimentError::Config(format!(
                "spring.unit_length = {} differs from length_unit = {}",
                self.spring.unit_length, self.length_unit
            )));
        }
        let max_n = *self.n_list.last().unwrap();
        if max_n > DESK_SCALE_MAX_N && !self.allow_large {
            return Err(ExperimentError::Config(format!(
                "n = {max_n} exceeds {DESK_SCALE_MAX_N}; set allow_large = true"
            )));
        }
        self.spring.validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
        self.beam.validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
        Ok(())
    }

    /// Disk radius in shortest-edge units for size `n`.
    pub fn radius(&self, n: u32) -> f64 {
        let r = n as f64 * self.length_unit;
        match self.n_is {
            SizeMeaning::Diameter => 0.5 * r,
            SizeMeaning::Radius => r,
        }
    }

    pub fn connect_options(&self) -> ConnectOptions {
        ConnectOptions { boundary_apex_triples: self.boundary_apex_triples }
    }

    pub fn beam_config(&self) -> BeamConfig {
        BeamConfig { boundary_rotation: self.boundary_rotation, ..self.beam }
    }
}

/// One realization's result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub model: String,
    pub n: u32,
    pub realization_id: String,
    pub center_x: f64,
    pub center_y: f64,
    pub polygons: usize,
    pub interior_dofs: usize,
    #[serde(rename = "H11")]
    pub h11: f64,
    #[serde(rename = "H12")]
    pub h12: f64,
    #[serde(rename = "H16")]
    pub h16: f64,
    #[serde(rename = "H22")]
    pub h22: f64,
    #[serde(rename = "H26")]
    pub h26: f64,
    #[serde(rename = "H66")]
    pub h66: f64,
    pub lambda: f64,
    pub mu: f64,
    pub nu: f64,
    pub index: f64,
    pub residual_max: f64,
    pub wall_time_s: f64,
}

impl ResultRow {
    pub fn hooke(&self) -> [[f64; 3]; 3] {
        [[self.h11, self.h12, self.h16], [self.h12, self.h22, self.h26], [self.h16, self.h26, self.h66]]
    }

    /// Anisotropy index recomputed from the stored Hooke entries.
    pub fn recomputed_index(&self) -> f64 {
        anisotropy_index(&self.hooke()).unwrap_or(f64::NAN)
    }
}

/// A row that could not be computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowFailure {
    pub n: u32,
    pub realization: u32,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub rows: Vec<ResultRow>,
    pub failures: Vec<RowFailure>,
    pub averages: Vec<SetAverage>,
    pub tiling_steps: u32,
}

/// Deterministic realization center inside `[-w, w]²` around the patch center.
pub fn realization_center(index: &TilingIndex<'_>, id: RealizationId, radius: f64) -> Result<[f64; 2], DomainError> {
    let w = index.safe_half_width(radius);
    if !(w > 0.0) {
        return Err(DomainError::TooSmall { radius, half_width: w });
    }
    let mut h = Sha256::new();
    h.update(CENTER_SCHEME.as_bytes());
    h.update(id.master_seed.to_le_bytes());
    h.update(id.n.to_le_bytes());
    h.update(id.index.to_le_bytes());
    let seed: [u8; 32] = h.finalize().into();
    let mut rng = ChaCha8Rng::from_seed(seed);
    let c = index.patch_center();
    let x: f64 = rng.random_range(-w..w);
    let y: f64 = rng.random_range(-w..w);
    Ok([c[0] + x, c[1] + y])
}

/// Smallest inflation level whose safe sampling square is at least as wide
/// as the largest disk.
pub fn auto_tiling_steps(max_radius: f64) -> Result<u32, ExperimentError> {
    for steps in 2..=MAX_AUTO_STEPS {
        let t = generate(steps, DEFAULT_POLYGON_BUDGET)?;
        if TilingIndex::new(&t).safe_half_width(max_radius) >= max_radius {
            return Ok(steps);
        }
    }
    Err(ExperimentError::Config(format!("radius {max_radius} needs more than {MAX_AUTO_STEPS} inflation steps")))
}

/// Master tiling for a configuration, via the cache when configured.
pub fn master_tiling(cfg: &ExperimentConfig) -> Result<Tiling, ExperimentError> {
    let max_r = cfg.radius(*cfg.n_list.last().unwrap());
    if let Some(path) = &cfg.tiling_cache {
        if path.exists() {
            return Ok(load_tiling(path)?);
        }
    }
    let steps = match cfg.tiling_steps {
        Some(s) => s,
        None => auto_tiling_steps(max_r)?,
    };
    let t = generate(steps, DEFAULT_POLYGON_BUDGET)?;
    if let Some(path) = &cfg.tiling_cache {
        save_tiling(&t, path)?;
    }
    Ok(t)
}

/// A solved realization with everything needed for field output.
#[derive(Debug, Clone)]
pub struct Realization {
    pub row: ResultRow,
    pub domain: Domain,
    pub solved: Homogenization,
}

pub fn run_realization(
    cfg: &ExperimentConfig,
    index: &TilingIndex<'_>,
    n: u32,
    realization: u32,
) -> Result<Realization, ExperimentError> {
    let start = Instant::now();
    let id = RealizationId { master_seed: cfg.master_seed, n, index: realization };
    let radius = cfg.radius(n);
    let center = realization_center(index, id, radius)?;
    let mut domain = build_domain(index, center, radius, cfg.connect_options())?;
    domain.realization = Some(id);
    let beam = cfg.beam_config();
    let model = match cfg.model {
        Model::Spring => ModelRef::Spring(&cfg.spring),
        Model::Beam => ModelRef::Beam(&beam),
    };
    let solved = homogenize(&domain, model, &cfg.solver)?;
    let dec = decompose(&solved.hooke)?;
    let h = solved.hooke.h;
    let row = ResultRow {
        model: cfg.model.name().into(),
        n,
        realization_id: id.to_string(),
        center_x: center[0],
        center_y: center[1],
        polygons: domain.polygons.len(),
        interior_dofs: solved.system.n_free(),
        h11: h[0][0],
        h12: h[0][1],
        h16: h[0][2],
        h22: h[1][1],
        h26: h[1][2],
        h66: h[2][2],
        lambda: dec.lambda,
        mu: dec.mu,
        nu: dec.nu,
        index: dec.index,
        residual_max: solved.report.max_residual(),
        wall_time_s: if cfg.record_wall_time { start.elapsed().as_secs_f64() } else { 0.0 },
    };
    Ok(Realization { row, domain, solved })
}

/// Run every `(n, realization)` job on a prebuilt index.
pub fn sweep_on(cfg: &ExperimentConfig, index: &TilingIndex<'_>) -> Result<SweepOutput, ExperimentError> {
    cfg.validate()?;
    let jobs: Vec<(u32, u32)> = cfg.n_list.iter().flat_map(|&n| (0..cfg.realizations).map(move |r| (n, r))).collect();
    let results: Vec<Result<ResultRow, String>> = jobs
        .par_iter()
        .map(|&(n, r)| run_realization(cfg, index, n, r).map(|x| x.row).map_err(|e| e.to_string()))
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (&(n, realization), res) in jobs.iter().zip(results) {
        match res {
            Ok(row) => rows.push(row),
            Err(error) => failures.push(RowFailure { n, realization, error }),
        }
    }
    if failures.len() * 5 > jobs.len() {
        return Err(ExperimentError::TooManyFailures {
            failed: failures.len(),
            total: jobs.len(),
            first: failures[0].error.clone(),
        });
    }
    let mut averages = Vec::new();
    for &n in &cfg.n_list {
        let set: Vec<ResultRow> = rows.iter().filter(|r| r.n == n).cloned().collect();
        if set.is_empty() {
            continue;
        }
        let mut avg = set_average(&set)?;
        avg.failures = failures.iter().filter(|f| f.n == n).count();
        averages.push(avg);
    }
    Ok(SweepOutput { rows, failures, averages, tiling_steps: index.tiling().meta().inflation_steps })
}

pub fn sweep(cfg: &ExperimentConfig) -> Result<SweepOutput, ExperimentError> {
    cfg.validate()?;
    let tiling = master_tiling(cfg)?;
    let index = TilingIndex::new(&tiling);
    sweep_on(cfg, &index)
}

/// Nine significant digits, exponent form.
pub fn fmt9(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else {
        format!("{x:.8e}")
    }
}

fn round9(x: f64) -> f64 {
    fmt9(x).parse().unwrap()
}

fn row_record(r: &ResultRow) -> Vec<String> {
    let mut v = vec![r.model.clone(), r.n.to_string(), r.realization_id.clone()];
    v.extend([r.center_x, r.center_y].map(fmt9));
    v.push(r.polygons.to_string());
    v.push(r.interior_dofs.to_string());
    v.extend(
        [r.h11, r.h12, r.h16, r.h22, r.h26, r.h66, r.lambda, r.mu, r.nu, r.index, r.residual_max, r.wall_time_s]
            .map(fmt9),
    );
    v
}

fn rounded(r: &ResultRow) -> ResultRow {
    ResultRow {
        center_x: round9(r.center_x),
        center_y: round9(r.center_y),
        h11: round9(r.h11),
        h12: round9(r.h12),
        h16: round9(r.h16),
        h22: round9(r.h22),
        h26: round9(r.h26),
        h66: round9(r.h66),
        lambda: round9(r.lambda),
        mu: round9(r.mu),
        nu: round9(r.nu),
        index: round9(r.index),
        residual_max: round9(r.residual_max),
        wall_time_s: round9(r.wall_time_s),
        ..r.clone()
    }
}

/// Serialize rows in the documented column order.
pub fn results_to_string(rows: &[ResultRow], format: OutputFormat) -> Result<String, ExperimentError> {
    if rows.is_empty() {
        return Err(ExperimentError::Empty);
    }
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(RESULT_HEADER)?;
            for r in rows {
                w.write_record(row_record(r))?;
            }
            let bytes = w.into_inner().map_err(|e| ExperimentError::Io(e.into_error()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        OutputFormat::Json => {
            let r: Vec<ResultRow> = rows.iter().map(rounded).collect();
            Ok(serde_json::to_string_pretty(&r)? + "\n")
        }
    }
}

pub fn export_results(rows: &[ResultRow], path: impl AsRef<Path>, format: OutputFormat) -> Result<(), ExperimentError> {
    let s = results_to_string(rows, format)?;
    std::fs::write(path, s)?;
    Ok(())
}

/// Parse a results table, checking each row's index against its Hooke entries.
pub fn read_results(text: &str, format: OutputFormat) -> Result<Vec<ResultRow>, ExperimentError> {
    let rows: Vec<ResultRow> = match format {
        OutputFormat::Csv => {
            let mut rd = csv::Reader::from_reader(text.as_bytes());
            let header: Vec<String> = rd.headers()?.iter().map(str::to_owned).collect();
            if header != RESULT_HEADER {
                return Err(ExperimentError::Config(format!("unexpected header {header:?}")));
            }
            rd.deserialize().collect::<Result<_, _>>()?
        }
        OutputFormat::Json => serde_json::from_str(text)?,
    };
    for (i, r) in rows.iter().enumerate() {
        let again = r.recomputed_index();
        if !((again - r.index).abs() <= 1e-7 * r.index.abs().max(1e-300) + 1e-10) {
            return Err(ExperimentError::Inconsistent { row: i, stored: r.index, recomputed: again });
        }
    }
    Ok(rows)
}

pub const AVERAGE_HEADER: [&str; 12] = [
    "model",
    "n",
    "count",
    "failures",
    "mean_lambda",
    "mean_mu",
    "nu_of_means",
    "mean_nu",
    "mean_index",
    "min_index",
    "max_index",
    "std_index",
];

pub fn averages_to_csv(avgs: &[SetAverage]) -> Result<String, ExperimentError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(AVERAGE_HEADER)?;
    for a in avgs {
        let mut rec = vec![a.model.clone(), a.n.to_string(), a.count.to_string(), a.failures.to_string()];
        rec.extend(
            [a.mean_lambda, a.mean_mu, a.nu_of_means, a.mean_nu, a.mean_index, a.min_index, a.max_index, a.std_index]
                .map(fmt9),
        );
        w.write_record(rec)?;
    }
    let bytes = w.into_inner().map_err(|e| ExperimentError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// `results.csv` -> `results_averages.csv`.
pub fn averages_path(results: &Path) -> PathBuf {
    let stem = results.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
    results.with_file_name(format!("{stem}_averages.csv"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldRow {
    pub vertex: usize,
    pub x: f64,
    pub y: f64,
    pub magnitude: f64,
    pub normalized: f64,
}

/// `|û|` per retained vertex for one load case, with a `[0, 1]` normalization.
pub fn export_fluctuation_field(
    domain: &Domain,
    solved: &Homogenization,
    case: usize,
) -> Result<Vec<FieldRow>, ExperimentError> {
    let u =
        solved.solutions.get(case).ok_or_else(|| ExperimentError::Config(format!("load case {case} out of range")))?;
    if u.len() != solved.system.n_free() {
        return Err(ExperimentError::Config("solution does not match the system".into()));
    }
    Ok(fluctuation_field(domain, &solved.system.dof_map.expand(u)))
}

pub fn fluctuation_field(domain: &Domain, u: &[[f64; 3]]) -> Vec<FieldRow> {
    let mut rows: Vec<FieldRow> = (0..domain.vertices.len())
        .filter(|&v| domain.classes[v] != VertexClass::Discarded)
        .map(|v| {
            let [x, y] = domain.position(v);
            let magnitude = if domain.classes[v] == VertexClass::Interior { u[v][0].hypot(u[v][1]) } else { 0.0 };
            FieldRow { vertex: v, x, y, magnitude, normalized: 0.0 }
        })
        .collect();
    let max = rows.iter().map(|r| r.magnitude).fold(0.0, f64::max);
    if max > 0.0 {
        for r in &mut rows {
            r.normalized = r.magnitude / max;
        }
    }
    rows
}

pub fn field_to_csv(rows: &[FieldRow]) -> String {
    let mut s = String::from("vertex,x,y,magnitude,normalized\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{}", r.vertex, fmt9(r.x), fmt9(r.y), fmt9(r.magnitude), fmt9(r.normalized));
    }
    s
}

/// Load case name (`e1`, `e2`, `e12`) to index.
pub fn parse_case(name: &str) -> Option<usize> {
    match name {
        "e1" | "E11" | "0" => Some(0),
        "e2" | "E22" | "1" => Some(1),
        "e12" | "e6" | "E12" | "2" => Some(2),
        _ => None,
    }
}
