use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::filter::{run_filter_with, AssimilationRecord, FilterConfig};
use crate::models::{
    generate_truth_and_measurements, make_initial_ensemble, DuffingModel, Measurement, StateSpaceModel,
    TruthTrajectory, DUFFING_COORDINATES,
};
use crate::training::FitDiagnostics;

/// Rows per step in `summary.csv`: the five state coordinates, the simulated
/// measurement ensemble (truth column: the actual measurement) and the
/// posterior position read through the observation (truth column: true position).
pub const SUMMARY_COORDINATES: [&str; 7] = ["x", "v", "alpha", "delta", "beta", "y_meas", "y_post"];

/// Index of `alpha` in [`SUMMARY_COORDINATES`]; `delta` and `beta` follow.
pub const FIRST_PARAMETER: usize = 2;

/// Everything needed to run the filter for one config.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub model: DuffingModel,
    pub truth: TruthTrajectory,
    pub measurements: Vec<Measurement>,
    pub initial_ensemble: Vec<Vec<f64>>,
    pub filter: FilterConfig,
    pub t_start: f64,
}

impl Scenario {
    pub fn from_config(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let params = config.params();
        let noise = config.noise();
        let (truth, measurements) = generate_truth_and_measurements(
            &params,
            &noise,
            (config.t_start, config.t_end),
            config.dt,
            [0.0, 0.0],
            config.seed,
        )?;
        let initial_ensemble = make_initial_ensemble(
            &params,
            config.ensemble_size,
            config.spread,
            config.initial_parameter_multiplier,
            config.seed,
        )?;
        Ok(Scenario {
            model: DuffingModel::new(&params, noise),
            truth,
            measurements,
            initial_ensemble,
            filter: config.filter_config(),
            t_start: config.t_start,
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct CoordinateStats {
    pub mean: f64,
    /// Unbiased.
    pub std: f64,
    pub p05: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p95: f64,
    pub truth: f64,
}

impl CoordinateStats {
    pub fn from_values(values: &[f64], truth: f64) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        CoordinateStats {
            mean,
            std: var.sqrt(),
            p05: percentile(&sorted, 0.05),
            p25: percentile(&sorted, 0.25),
            p50: percentile(&sorted, 0.50),
            p75: percentile(&sorted, 0.75),
            p95: percentile(&sorted, 0.95),
            truth,
        }
    }
}

/// Linear interpolation between closest ranks of sorted data.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepSummary {
    pub step: usize,
    pub t: f64,
    /// Aligned with [`SUMMARY_COORDINATES`].
    pub coordinates: Vec<CoordinateStats>,
    pub map_fit_seconds: f64,
    pub total_step_seconds: f64,
    pub fit: FitDiagnostics,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub steps: Vec<StepSummary>,
    pub total_wall_time: f64,
    pub output_dir: Option<PathBuf>,
}

impl RunReport {
    /// Mean of `field` for `coordinate` over steps with `t` in `[from, to]`.
    pub fn time_average(&self, coordinate: usize, from: f64, to: f64, field: impl Fn(&CoordinateStats) -> f64) -> f64 {
        let values: Vec<f64> = self
            .steps
            .iter()
            .filter(|s| s.t >= from - 1e-9 && s.t <= to + 1e-9)
            .map(|s| field(&s.coordinates[coordinate]))
            .collect();
        values.iter().sum::<f64>() / values.len() as f64
    }

    /// Time-averaged posterior means of `(α, δ, β)` over `[from, to]`.
    pub fn parameter_means(&self, from: f64, to: f64) -> [f64; 3] {
        std::array::from_fn(|k| self.time_average(FIRST_PARAMETER + k, from, to, |c| c.mean))
    }

    /// Time-averaged posterior standard deviations of `(α, δ, β)` over `[from, to]`.
    pub fn parameter_stds(&self, from: f64, to: f64) -> [f64; 3] {
        std::array::from_fn(|k| self.time_average(FIRST_PARAMETER + k, from, to, |c| c.std))
    }

    pub fn map_times(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.map_fit_seconds).collect()
    }
}

fn summarize(record: &AssimilationRecord, model: &DuffingModel, truth: [f64; 2], params: [f64; 3], y: f64) -> StepSummary {
    let posterior = &record.posterior_states;
    let truth_state = [truth[0], truth[1], params[0], params[1], params[2]];
    let mut coordinates: Vec<CoordinateStats> = (0..DUFFING_COORDINATES.len())
        .map(|k| {
            let column: Vec<f64> = posterior.iter().map(|s| s[k]).collect();
            CoordinateStats::from_values(&column, truth_state[k])
        })
        .collect();
    let simulated: Vec<f64> = record.simulated_measurements.iter().map(|r| r[0]).collect();
    coordinates.push(CoordinateStats::from_values(&simulated, y));
    let observed: Vec<f64> = posterior.iter().map(|s| model.observe(s)[0]).collect();
    coordinates.push(CoordinateStats::from_values(&observed, truth[0]));
    StepSummary {
        step: record.step,
        t: record.time,
        coordinates,
        map_fit_seconds: record.map_wall_time,
        total_step_seconds: record.total_wall_time,
        fit: record.map_fit.clone(),
    }
}

struct OutputFiles {
    summary: BufWriter<File>,
    timing: BufWriter<File>,
    fit_log: BufWriter<File>,
    snapshots: Option<BufWriter<File>>,
}

impl OutputFiles {
    fn create(dir: &Path, snapshots: bool) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let open = |name: &str, header: &str| -> Result<BufWriter<File>> {
            let mut w = BufWriter::new(File::create(dir.join(name))?);
            writeln!(w, "{header}")?;
            Ok(w)
        };
        Ok(OutputFiles {
            summary: open("summary.csv", "step,t,coordinate_name,mean,std,p05,p25,p50,p75,p95,truth")?,
            timing: open("timing.csv", "step,map_fit_seconds,total_step_seconds")?,
            fit_log: open("fit_log.csv", "step,iterations,final_objective,final_gradient_norm,converged")?,
            snapshots: if snapshots {
                Some(open("snapshots.csv", "step,t,member,x,v,alpha,delta,beta")?)
            } else {
                None
            },
        })
    }

    fn write_step(&mut self, s: &StepSummary, record: &AssimilationRecord, stride: usize) -> Result<()> {
        for (name, c) in SUMMARY_COORDINATES.iter().zip(&s.coordinates) {
            writeln!(
                self.summary,
                "{},{:.16e},{name},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                s.step, s.t, c.mean, c.std, c.p05, c.p25, c.p50, c.p75, c.p95, c.truth
            )?;
        }
        writeln!(self.timing, "{},{:.16e},{:.16e}", s.step, s.map_fit_seconds, s.total_step_seconds)?;
        writeln!(
            self.fit_log,
            "{},{},{:.16e},{:.16e},{}",
            s.step, s.fit.iterations, s.fit.final_objective, s.fit.final_gradient_norm, s.fit.converged
        )?;
        if let Some(w) = self.snapshots.as_mut() {
            if s.step.is_multiple_of(stride) {
                for (j, row) in record.posterior_states.iter().enumerate() {
                    write!(w, "{},{:.16e},{j}", s.step, s.t)?;
                    for v in row {
                        write!(w, ",{v:.16e}")?;
                    }
                    writeln!(w)?;
                }
            }
        }
        Ok(())
    }

    fn flush(&mut self) -> Result<()> {
        self.summary.flush()?;
        self.timing.flush()?;
        self.fit_log.flush()?;
        if let Some(w) = self.snapshots.as_mut() {
            w.flush()?;
        }
        Ok(())
    }
}

fn write_truth(dir: &Path, truth: &TruthTrajectory, measurements: &[Measurement]) -> Result<()> {
    let mut w = BufWriter::new(File::create(dir.join("truth.csv"))?);
    writeln!(w, "t,x_true,v_true,y")?;
    for ((t, s), m) in truth.times.iter().zip(&truth.states).zip(measurements) {
        writeln!(w, "{t:.16e},{:.16e},{:.16e},{:.16e}", s[0], s[1], m.y[0])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Metadata<'a> {
    software: &'static str,
    version: &'static str,
    status: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    failed_step: Option<usize>,
    seed: u64,
    steps_requested: usize,
    steps_completed: usize,
    total_wall_time_seconds: f64,
    config: &'a ExperimentConfig,
}

/// Runs one experiment.
///
/// With an output directory the summary, timing, fit log, truth and
/// (when `snapshot_stride > 0`) snapshot CSVs are streamed there step by step,
/// and `metadata.json` is written last, also when the filter fails.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    let started = Instant::now();
    let scenario = Scenario::from_config(config)?;
    let dir = config.output_dir.clone();
    let mut files = match &dir {
        Some(d) => {
            let files = OutputFiles::create(d, config.snapshot_stride > 0)?;
            write_truth(d, &scenario.truth, &scenario.measurements)?;
            Some(files)
        }
        None => None,
    };

    let params = config.params().identified();
    let mut steps = Vec::with_capacity(scenario.measurements.len());
    let outcome = run_filter_with(
        &scenario.model,
        &scenario.measurements,
        &scenario.initial_ensemble,
        scenario.t_start,
        &scenario.filter,
        |record| {
            let k = record.step - 1;
            let summary = summarize(
                &record,
                &scenario.model,
                scenario.truth.states[k],
                params,
                scenario.measurements[k].y[0],
            );
            if let Some(f) = files.as_mut() {
                f.write_step(&summary, &record, config.snapshot_stride)?;
            }
            steps.push(summary);
            Ok(())
        },
    );
    let total_wall_time = started.elapsed().as_secs_f64();

    if let (Some(d), Some(mut f)) = (&dir, files) {
        f.flush()?;
        let (status, error, failed_step) = match &outcome {
            Ok(_) => ("completed", None, None),
            Err(e) => (
                "failed",
                Some(e.to_string()),
                match e {
                    Error::StepFailed { step, .. } => Some(*step),
                    _ => None,
                },
            ),
        };
        let meta = Metadata {
            software: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            status,
            error,
            failed_step,
            seed: config.seed,
            steps_requested: scenario.measurements.len(),
            steps_completed: steps.len(),
            total_wall_time_seconds: total_wall_time,
            config,
        };
        fs::write(d.join("metadata.json"), serde_json::to_string_pretty(&meta)?)?;
    }

    outcome?;
    Ok(RunReport {
        config: config.clone(),
        steps,
        total_wall_time,
        output_dir: dir,
    })
}

/// Reads the `config` object back out of a `metadata.json`.
pub fn config_from_metadata(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let config = value
        .get("config")
        .ok_or_else(|| Error::InvalidConfig("metadata has no config echo".into()))?;
    ExperimentConfig::from_json_str(&config.to_string())
}

/// Least-squares slope of `values` against the step index, divided by their mean.
pub fn normalized_slope(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean_x = (n - 1.0) / 2.0;
    let mean_y = values.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in values.iter().enumerate() {
        let dx = i as f64 - mean_x;
        sxy += dx * (y - mean_y);
        sxx += dx * dx;
    }
    sxy / sxx / mean_y
}
