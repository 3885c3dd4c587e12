//! Parameter sweeps with CSV output and a provenance manifest.

use std::fmt;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{design_scheme, evaluate_design, Scheme};
use crate::channel::{build_statistics, ScenarioConfig};
use crate::error::{Error, Result};
use crate::rate::RateReport;
use crate::rng::{Purpose, StreamFactory};
use crate::scenario::{place_user_on_bisector, ScenarioFile};
use crate::ssca::SolverConfig;

pub const CSV_SCHEMA: &str = "irs-results/v1";
pub const RESULTS_FILE: &str = "results.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParameter {
    /// `M_r = N_r`.
    IrsSize,
    /// `K_{0,r} = K_{r,0}`.
    Rician,
    /// `δ₁ = δ₂`, in the scenario's error units.
    Delta,
    /// `d_{0,0}`, moving user 0 along the bisector of BS 1 and BS 2.
    Distance,
}

impl SweepParameter {
    pub const ALL: [SweepParameter; 4] = [
        SweepParameter::IrsSize,
        SweepParameter::Rician,
        SweepParameter::Delta,
        SweepParameter::Distance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::IrsSize => "irs-size",
            SweepParameter::Rician => "rician",
            SweepParameter::Delta => "delta",
            SweepParameter::Distance => "distance",
        }
    }

    pub fn apply(self, cfg: &mut ScenarioConfig, value: f64) -> Result<()> {
        match self {
            SweepParameter::IrsSize => {
                if !(value >= 1.0) || value.fract() != 0.0 {
                    return Err(Error::Config(format!("IRS size must be a positive integer, got {value}")));
                }
                cfg.irs_grid.rows = value as usize;
                cfg.irs_grid.cols = value as usize;
            }
            SweepParameter::Rician => {
                cfg.base_stations[0].irs_rician = value;
                cfg.irs_user_rician = value;
            }
            SweepParameter::Delta => {
                cfg.csi_error.cascaded = value;
                cfg.csi_error.direct = value;
            }
            SweepParameter::Distance => place_user_on_bisector(cfg, value)?,
        }
        cfg.validate()
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepParameter::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown sweep parameter `{s}`; expected one of {}",
                    SweepParameter::ALL.map(SweepParameter::name).join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub n_samples: usize,
    pub solver: SolverConfig,
    /// Seed of the evaluation streams; shared by every point and scheme.
    pub seed: u64,
    /// Worker threads; `None` uses the global pool. Never affects results.
    #[serde(skip)]
    pub workers: Option<usize>,
}

/// Desk-scale defaults: 2000 Monte Carlo samples and 300 solver iterations.
pub fn desk_solver(seed: u64) -> SolverConfig {
    SolverConfig {
        iterations: 300,
        seed,
        ..SolverConfig::default()
    }
}

pub const DESK_SAMPLES: usize = 2000;

impl SweepSpec {
    pub fn new(parameter: SweepParameter, values: Vec<f64>, schemes: Vec<Scheme>, seed: u64) -> Self {
        Self {
            parameter,
            values,
            schemes,
            n_samples: DESK_SAMPLES,
            solver: desk_solver(seed),
            seed,
            workers: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("sweep needs at least one value".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("sweep needs at least one scheme".into()));
        }
        if self.n_samples == 0 {
            return Err(Error::Config("Monte Carlo sample count must be positive".into()));
        }
        self.solver.validate()
    }
}

/// One line of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub scenario: String,
    pub scheme: Scheme,
    pub parameter: String,
    pub value: f64,
    pub ub_rate: f64,
    pub mc_rate: f64,
    pub mc_stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub csv_schema: String,
    pub scenario_id: String,
    pub config_hash: String,
    pub seed: u64,
    pub sweep: Option<SweepSpec>,
    pub schemes: Vec<Scheme>,
    pub n_samples: usize,
    pub solver: SolverConfig,
    pub scenario: ScenarioFile,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Reports in row order, with per-sample rates for paired comparisons.
    pub reports: Vec<RateReport>,
    pub manifest: Manifest,
}

impl SweepTable {
    pub fn report(&self, scheme: Scheme, value: f64) -> Option<&RateReport> {
        self.rows
            .iter()
            .position(|r| r.scheme == scheme && r.value == value)
            .map(|i| &self.reports[i])
    }
}

fn sha256_json<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("hash input serializes");
    hex::encode(Sha256::digest(&bytes))
}

#[derive(Serialize)]
struct PointKey<'a> {
    scenario: &'a ScenarioFile,
    scheme: Scheme,
    solver: &'a SolverConfig,
    n_samples: usize,
    seed: u64,
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Output locations of a sweep.
#[derive(Debug, Clone)]
pub struct OutputDir(pub PathBuf);

impl OutputDir {
    pub fn results(&self) -> PathBuf {
        self.0.join(RESULTS_FILE)
    }

    pub fn manifest(&self) -> PathBuf {
        self.0.join(MANIFEST_FILE)
    }

    fn create(&self) -> Result<()> {
        std::fs::create_dir_all(&self.0).map_err(|e| Error::io(&self.0, e))
    }
}

struct Evaluation<'a> {
    scenario_id: &'a str,
    schemes: &'a [Scheme],
    n_samples: usize,
    solver: &'a SolverConfig,
    seed: u64,
}

impl Evaluation<'_> {
    fn point(&self, cfg: &ScenarioConfig, parameter: &str, value: f64) -> Result<Vec<(SweepRow, RateReport)>> {
        let stats = build_statistics(cfg)?;
        let file = ScenarioFile::from_config(cfg, Some(self.scenario_id.to_string()));
        let streams = StreamFactory::new(self.seed, Purpose::Evaluation);
        self.schemes
            .par_iter()
            .map(|&scheme| {
                let design = design_scheme(&scheme.spec(), &stats, self.solver)?;
                let report = evaluate_design(&design, &stats, self.n_samples, &streams)?;
                let config_hash = sha256_json(&PointKey {
                    scenario: &file,
                    scheme,
                    solver: self.solver,
                    n_samples: self.n_samples,
                    seed: self.seed,
                });
                let row = SweepRow {
                    scenario: self.scenario_id.to_string(),
                    scheme,
                    parameter: parameter.to_string(),
                    value,
                    ub_rate: report.upper_bound,
                    mc_rate: report.mc_rate,
                    mc_stderr: report.mc_stderr,
                    n_samples: self.n_samples,
                    seed: self.seed,
                    config_hash,
                };
                Ok((row, report))
            })
            .collect()
    }
}

fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs every `value × scheme` combination in sweep order.
///
/// When `out` is given, `manifest.json` is written before any computation and
/// `results.csv` is flushed after each sweep value.
pub fn run_sweep(
    spec: &SweepSpec,
    scenario: &ScenarioConfig,
    scenario_id: &str,
    out: Option<&OutputDir>,
) -> Result<SweepTable> {
    spec.validate()?;
    let base_file = ScenarioFile::from_config(scenario, Some(scenario_id.to_string()));
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        csv_schema: CSV_SCHEMA.to_string(),
        scenario_id: scenario_id.to_string(),
        config_hash: sha256_json(&(&base_file, spec)),
        seed: spec.seed,
        sweep: Some(spec.clone()),
        schemes: spec.schemes.clone(),
        n_samples: spec.n_samples,
        solver: spec.solver.clone(),
        scenario: base_file,
    };

    // Build every point first so configuration errors surface before compute.
    let configs = spec
        .values
        .iter()
        .map(|&value| {
            let mut cfg = scenario.clone();
            spec.parameter.apply(&mut cfg, value)?;
            build_statistics(&cfg)?;
            Ok(cfg)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut writer = match out {
        Some(dir) => {
            dir.create()?;
            write_manifest(&dir.manifest(), &manifest)?;
            Some((csv_writer(&dir.results())?, dir.results()))
        }
        None => None,
    };

    let eval = Evaluation {
        scenario_id,
        schemes: &spec.schemes,
        n_samples: spec.n_samples,
        solver: &spec.solver,
        seed: spec.seed,
    };
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for (cfg, &value) in configs.iter().zip(&spec.values) {
        log::info!("{} = {value}", spec.parameter);
        let point = with_pool(spec.workers, || eval.point(cfg, spec.parameter.name(), value))??;
        for (row, report) in point {
            if let Some((w, path)) = writer.as_mut() {
                w.serialize(&row).map_err(|source| Error::Csv {
                    path: path.clone(),
                    source,
                })?;
            }
            rows.push(row);
            reports.push(report);
        }
        if let Some((w, path)) = writer.as_mut() {
            w.flush().map_err(|e| Error::io(path.as_path(), e))?;
        }
    }
    Ok(SweepTable {
        rows,
        reports,
        manifest,
    })
}

/// Evaluates schemes at a single scenario; rows carry `parameter = "none"`.
pub fn run_eval(
    schemes: &[Scheme],
    n_samples: usize,
    solver: &SolverConfig,
    seed: u64,
    scenario: &ScenarioConfig,
    scenario_id: &str,
    out: Option<&OutputDir>,
) -> Result<SweepTable> {
    if schemes.is_empty() {
        return Err(Error::Config("at least one scheme is required".into()));
    }
    if n_samples == 0 {
        return Err(Error::Config("Monte Carlo sample count must be positive".into()));
    }
    solver.validate()?;
    build_statistics(scenario)?;
    let base_file = ScenarioFile::from_config(scenario, Some(scenario_id.to_string()));
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        csv_schema: CSV_SCHEMA.to_string(),
        scenario_id: scenario_id.to_string(),
        config_hash: sha256_json(&(&base_file, schemes, n_samples, solver, seed)),
        seed,
        sweep: None,
        schemes: schemes.to_vec(),
        n_samples,
        solver: solver.clone(),
        scenario: base_file,
    };
    if let Some(dir) = out {
        dir.create()?;
        write_manifest(&dir.manifest(), &manifest)?;
    }
    let eval = Evaluation {
        scenario_id,
        schemes,
        n_samples,
        solver,
        seed,
    };
    let point = eval.point(scenario, "none", 0.0)?;
    if let Some(dir) = out {
        let path = dir.results();
        let mut w = csv_writer(&path)?;
        for (row, _) in &point {
            w.serialize(row).map_err(|source| Error::Csv {
                path: path.clone(),
                source,
            })?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    let (rows, reports) = point.into_iter().unzip();
    Ok(SweepTable {
        rows,
        reports,
        manifest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::fig3_preset;

    #[test]
    fn empty_scheme_list_rejected_before_compute() {
        let spec = SweepSpec::new(SweepParameter::IrsSize, vec![4.0], vec![], 1);
        let err = run_sweep(&spec, &fig3_preset(), "paper-fig3", None).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let spec = SweepSpec::new(SweepParameter::IrsSize, vec![], vec![Scheme::Proposed], 1);
        assert!(run_sweep(&spec, &fig3_preset(), "paper-fig3", None).is_err());
    }

    #[test]
    fn invalid_value_rejected_before_compute() {
        let spec = SweepSpec::new(SweepParameter::IrsSize, vec![4.0, 2.5], vec![Scheme::Proposed], 1);
        assert!(run_sweep(&spec, &fig3_preset(), "paper-fig3", None).is_err());
        let spec = SweepSpec::new(SweepParameter::Delta, vec![1.5], vec![Scheme::Proposed], 1);
        assert!(run_sweep(&spec, &fig3_preset(), "paper-fig3", None).is_err());
    }

    #[test]
    fn parameter_names() {
        for p in SweepParameter::ALL {
            assert_eq!(p.name().parse::<SweepParameter>().unwrap(), p);
        }
        assert!("mr".parse::<SweepParameter>().is_err());
    }

    #[test]
    fn small_sweep_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutputDir(dir.path().join("run"));
        let mut spec = SweepSpec::new(
            SweepParameter::Rician,
            vec![0.0, 3.0],
            vec![Scheme::Proposed, Scheme::RobustWithIntf],
            3,
        );
        spec.n_samples = 50;
        spec.solver.iterations = 10;
        let table = run_sweep(&spec, &fig3_preset(), "paper-fig3", Some(&out)).unwrap();
        assert_eq!(table.rows.len(), 4);
        assert_eq!(table.rows[0].value, 0.0);
        assert_eq!(table.rows[1].scheme, Scheme::RobustWithIntf);
        let text = std::fs::read_to_string(out.results()).unwrap();
        assert!(text.starts_with(
            "scenario,scheme,parameter,value,ub_rate,mc_rate,mc_stderr,n_samples,seed,config_hash\n"
        ));
        assert_eq!(text.lines().count(), 5);
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.manifest()).unwrap()).unwrap();
        assert_eq!(manifest["csv_schema"], CSV_SCHEMA);
        assert_eq!(manifest["seed"], 3);
        assert!(table.rows.iter().all(|r| r.config_hash.len() == 64));
        assert_ne!(table.rows[0].config_hash, table.rows[2].config_hash);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut spec = SweepSpec::new(SweepParameter::IrsSize, vec![2.0], vec![Scheme::Proposed], 8);
        spec.n_samples = 40;
        spec.solver.iterations = 5;
        let a = run_sweep(&spec, &fig3_preset(), "p", None).unwrap();
        spec.workers = Some(1);
        let b = run_sweep(&spec, &fig3_preset(), "p", None).unwrap();
        assert_eq!(a.rows, b.rows);
    }
}
