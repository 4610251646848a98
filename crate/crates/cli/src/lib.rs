//! Library side of the `etaqfi` command-line tool.
//!
//! [`config`] parses JSON jobs, [`sweep`] evaluates θ-grids in parallel and
//! writes CSV, [`report`] assembles the JSON reports and [`verify`] holds the
//! self-check suite.

pub mod config;
pub mod presets;
pub mod report;
pub mod sweep;
pub mod verify;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use etaqfi_core::qfi::analyze_point;
use etaqfi_core::system::system_metric;

use config::{ConfigError, Job, JobConfig};
use report::{AnalyzeReport, MetricDiagnostics, Provenance, Report};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[source] ConfigError),
    #[error("numerical failure: {0}")]
    Numeric(#[source] etaqfi_core::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("verification failed: {0} check(s)")]
    Verify(usize),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<etaqfi_core::Error> for CliError {
    fn from(e: etaqfi_core::Error) -> Self {
        CliError::Numeric(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => EXIT_CONFIG,
            CliError::Numeric(_) => EXIT_NUMERIC,
            CliError::Verify(_) => EXIT_VERIFY,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_config(path: &Path) -> Result<JobConfig, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(JobConfig::from_json(&text)?)
}

/// One point with the metric diagnostics at that θ.
pub fn cmd_analyze(cfg: JobConfig) -> Result<AnalyzeReport, CliError> {
    let theta = cfg
        .theta
        .ok_or_else(|| ConfigError::new("theta", "required for analyze"))?;
    let job = cfg.into_job()?;
    let opts = sweep::point_options(&job);
    let sample = analyze_point(job.system.as_ref(), theta, job.config.time, &job.probe, &opts)?;
    let bundle = system_metric(job.system.as_ref(), theta, job.config.gauge)?;
    let h = job.system.hamiltonian(theta)?;
    Ok(AnalyzeReport {
        metric: MetricDiagnostics::new(&bundle, &h)?,
        provenance: Provenance::of(&job),
        spec: job.config,
        sample,
    })
}

/// Where a sweep writes its CSV and report.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Destinations {
    pub csv: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

impl Destinations {
    /// Paths from the config's `outputs`, placed under `out_dir` when given.
    /// With an output directory and no explicit names, `<stem>.csv` and
    /// `<stem>.report.json` are used.
    pub fn resolve(job: &Job, out_dir: Option<&Path>, stem: &str) -> Self {
        let place = |p: &PathBuf| match out_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.clone(),
        };
        let outputs = &job.config.outputs;
        Self {
            csv: outputs
                .csv
                .as_ref()
                .map(place)
                .or_else(|| out_dir.map(|d| d.join(format!("{stem}.csv")))),
            report: outputs
                .report
                .as_ref()
                .map(place)
                .or_else(|| out_dir.map(|d| d.join(format!("{stem}.report.json")))),
        }
    }
}

fn create(path: &Path) -> Result<fs::File, CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::File::create(path).map_err(io_err(path))
}

/// Runs a sweep and writes its outputs. Without a CSV destination the CSV
/// goes to `stdout`.
pub fn cmd_sweep(
    cfg: JobConfig,
    workers: usize,
    out_dir: Option<&Path>,
    stem: &str,
    stdout: &mut dyn Write,
) -> Result<Report, CliError> {
    let job = cfg.into_job()?;
    let out = sweep::run_sweep(&job, workers)?;
    let dest = Destinations::resolve(&job, out_dir, stem);
    let (time, mode) = (job.config.time, job.config.sqfi_mode);
    let csv_result = match &dest.csv {
        Some(path) => sweep::write_csv(create(path)?, &out.rows, time, mode),
        None => sweep::write_csv(&mut *stdout, &out.rows, time, mode),
    };
    csv_result.map_err(|e| CliError::Io {
        path: dest.csv.clone().unwrap_or_else(|| "<stdout>".into()),
        source: e.into(),
    })?;
    let report = Report::from_sweep(&job, &out);
    if let Some(path) = &dest.report {
        let mut f = create(path)?;
        serde_json::to_writer_pretty(&mut f, &report)
            .map_err(|e| CliError::Io {
                path: path.clone(),
                source: e.into(),
            })?;
        f.write_all(b"\n").map_err(io_err(path))?;
    }
    Ok(report)
}
