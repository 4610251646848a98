use etaqfi_core::qfi::{analyze_point, Flag, PointOptions, QfiSample};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, GridSpec, Job, SqfiMode, Spacing};

/// Grid points this close to an exceptional point are moved off it.
pub const EP_SNAP_RADIUS: f64 = 1e-12;

pub const CSV_HEADER: [&str; 9] = [
    "theta", "t", "sqfi", "cqfi", "bound", "term_rot", "term_cross", "k_diag", "flags",
];

pub fn grid_points(g: &GridSpec) -> Vec<f64> {
    let last = g.points - 1;
    let mut pts: Vec<f64> = match g.spacing {
        Spacing::Uniform => (0..g.points)
            .map(|i| g.min + (g.max - g.min) * i as f64 / last as f64)
            .collect(),
        Spacing::Geometric { anchor } => {
            let (a, b) = (g.min - anchor, g.max - anchor);
            let ratio = (b / a).ln();
            (0..g.points)
                .map(|i| anchor + a * (ratio * i as f64 / last as f64).exp())
                .collect()
        }
    };
    pts[0] = g.min;
    pts[last] = g.max;
    pts
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snap {
    pub from: f64,
    pub to: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub theta: f64,
    pub reason: String,
}

/// The grid after moving points off exceptional points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnappedGrid {
    pub points: Vec<f64>,
    pub snapped: Vec<Snap>,
    pub exclusions: Vec<Exclusion>,
}

/// Moves every point sitting on an EP by half the local grid step, towards
/// the interior of the range. Points that cannot move without leaving the
/// range or passing a neighbour are dropped.
pub fn snap_away_from_eps(grid: &[f64], eps: &[f64]) -> SnappedGrid {
    let mut out = SnappedGrid {
        points: Vec::with_capacity(grid.len()),
        snapped: Vec::new(),
        exclusions: Vec::new(),
    };
    let n = grid.len();
    for (i, &th) in grid.iter().enumerate() {
        let Some(&ep) = eps.iter().find(|&&ep| (th - ep).abs() <= EP_SNAP_RADIUS * ep.abs().max(1.0)) else {
            out.points.push(th);
            continue;
        };
        let (dir, step) = if i + 1 < n {
            (1.0, grid[i + 1] - th)
        } else {
            (-1.0, th - grid[i - 1])
        };
        let to = ep + dir * 0.5 * step;
        let lo = out.points.last().copied().unwrap_or(f64::NEG_INFINITY);
        let hi = if i + 1 < n { grid[i + 1] } else { f64::INFINITY };
        if to > lo && to < hi && to >= grid[0] && to <= grid[n - 1] {
            out.snapped.push(Snap { from: th, to });
            out.points.push(to);
        } else {
            out.exclusions.push(Exclusion {
                theta: th,
                reason: format!("exceptional point at {ep}; no room to snap within the grid"),
            });
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<QfiSample>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Row {
    pub fn failed(&self) -> bool {
        self.sample.is_none()
    }
}

pub fn point_options(job: &Job) -> PointOptions {
    PointOptions {
        scheme: job.scheme,
        gauge: job.config.gauge,
        frame: job.config.frame,
    }
}

/// Evaluates every grid point on a pool of `workers` threads. Rows come back
/// in grid order; failures become rows without a sample.
pub fn evaluate(job: &Job, thetas: &[f64], workers: usize) -> Result<Vec<Row>, ConfigError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| ConfigError::new("workers", e.to_string()))?;
    let opts = point_options(job);
    let system = job.system.as_ref();
    Ok(pool.install(|| {
        thetas
            .par_iter()
            .map(|&theta| match analyze_point(system, theta, job.config.time, &job.probe, &opts) {
                Ok(sample) => Row {
                    theta,
                    sample: Some(sample),
                    error: None,
                },
                Err(e) => Row {
                    theta,
                    sample: None,
                    error: Some(e.to_string()),
                },
            })
            .collect()
    }))
}

pub struct SweepOutput {
    pub grid: GridSpec,
    pub snapped: SnappedGrid,
    pub rows: Vec<Row>,
}

pub fn run_sweep(job: &Job, workers: usize) -> Result<SweepOutput, ConfigError> {
    let grid = job.config.grid()?;
    let raw = grid_points(&grid);
    let snapped = snap_away_from_eps(&raw, &job.system.exceptional_points());
    let rows = evaluate(job, &snapped.points, workers)?;
    Ok(SweepOutput { grid, snapped, rows })
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn csv_record(row: &Row, time: f64, mode: SqfiMode) -> [String; 9] {
    match &row.sample {
        Some(s) => {
            let sqfi = match mode {
                SqfiMode::Hermitian => s.sqfi,
                SqfiMode::Flat => s.sqfi_flat,
            };
            let flags: Vec<String> = s.flags.iter().map(Flag::to_string).collect();
            [
                num(row.theta),
                num(time),
                num(sqfi),
                num(s.cqfi),
                opt(s.bound),
                opt(s.term_metric_rotation),
                opt(s.term_cross),
                opt(s.k_diag),
                flags.join("|"),
            ]
        }
        None => [
            num(row.theta),
            num(time),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            Flag::Failed.to_string(),
        ],
    }
}

pub fn write_csv<W: std::io::Write>(out: W, rows: &[Row], time: f64, mode: SqfiMode) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(csv_record(row, time, mode))?;
    }
    w.flush()?;
    Ok(())
}
