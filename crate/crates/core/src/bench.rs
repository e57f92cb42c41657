//! λ-sweep benchmarks on synthetic data.
//!
//! Every trial draws a ground truth and a noisy observation from its own
//! generator (`SeededRng::new(seed).split(trial)`), then every λ of the grid
//! is solved by ADMM and by the fast-TV heuristic. Per method, the reported
//! λ minimises the trial-averaged MSE.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admm::{admm_solve, fast_tv_unprojected, SolverConfig, StopReason};
use crate::colormap::{chromaticity_split, rgb_to_hue, hue_to_s1, so3_error};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::signal::{miou, mse, mse_per_entry, sphere_distance, Signal};
use crate::synth::{self, SeededRng};
use crate::tvprox::TvProxConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Barcode,
    Qrcode,
    Circle1d,
    Circle2d,
    Hue,
    Chromaticity,
    So3,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Barcode,
        Experiment::Qrcode,
        Experiment::Circle1d,
        Experiment::Circle2d,
        Experiment::Hue,
        Experiment::Chromaticity,
        Experiment::So3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Barcode => "barcode",
            Experiment::Qrcode => "qrcode",
            Experiment::Circle1d => "circle1d",
            Experiment::Circle2d => "circle2d",
            Experiment::Hue => "hue",
            Experiment::Chromaticity => "chromaticity",
            Experiment::So3 => "so3",
        }
    }

    pub fn default_rho(self) -> f64 {
        match self {
            Experiment::Barcode | Experiment::Qrcode => 0.1,
            Experiment::Circle1d => 1.0,
            Experiment::Circle2d => 10.0,
            Experiment::Hue | Experiment::Chromaticity | Experiment::So3 => 100.0,
        }
    }

    /// σ for the Gaussian-type experiments, κ for the vMF ones.
    pub fn default_noise(self) -> f64 {
        match self {
            Experiment::Barcode | Experiment::Qrcode => std::f64::consts::SQRT_2 * 0.5,
            Experiment::Circle1d => 0.5,
            Experiment::Circle2d | Experiment::Hue | Experiment::So3 => 10.0,
            Experiment::Chromaticity => 200.0,
        }
    }

    /// Bars, blocks per side, samples or pixels per side.
    pub fn default_size(self) -> usize {
        match self {
            Experiment::Barcode => 96,
            Experiment::Qrcode => 25,
            Experiment::Circle1d => 500,
            Experiment::Circle2d | Experiment::Hue | Experiment::Chromaticity => 64,
            Experiment::So3 => 90,
        }
    }

    pub fn default_tol_sphere(self) -> f64 {
        match self {
            Experiment::Chromaticity | Experiment::So3 => 1e-4,
            _ => 1e-5,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown experiment {s:?}")))
    }
}

/// `0.1, 0.2, …, 3.0`.
pub fn default_lambda_grid() -> Vec<f64> {
    (1..=30).map(|k| k as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub experiment: Experiment,
    /// σ (barcode, qrcode, circle1d) or κ (circle2d, hue, chromaticity; the
    /// angle concentration for so3).
    pub noise: f64,
    /// Axis concentration for so3; defaults to `noise`.
    pub kappa_axis: Option<f64>,
    pub trials: usize,
    pub lambda_grid: Vec<f64>,
    pub rho: f64,
    pub seed: u64,
    pub size: usize,
    pub max_iter: usize,
    pub tol_residual: f64,
    pub tol_sphere: f64,
}

impl BenchSpec {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            noise: experiment.default_noise(),
            kappa_axis: None,
            trials: 1,
            lambda_grid: default_lambda_grid(),
            rho: experiment.default_rho(),
            seed: 0,
            size: experiment.default_size(),
            max_iter: 10_000,
            tol_residual: 1e-6,
            tol_sphere: experiment.default_tol_sphere(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.lambda_grid.is_empty() {
            return Err(Error::invalid("lambda grid must not be empty"));
        }
        if let Some(l) = self.lambda_grid.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(Error::invalid(format!("lambda must be positive, got {l}")));
        }
        if !(self.noise > 0.0 && self.noise.is_finite()) {
            return Err(Error::invalid("noise level must be positive"));
        }
        if self.kappa_axis.is_some_and(|k| !(k > 0.0 && k.is_finite())) {
            return Err(Error::invalid("kappa_axis must be positive"));
        }
        if self.size == 0 {
            return Err(Error::invalid("size must be positive"));
        }
        self.solver_config(1.0).validate()
    }

    fn solver_config(&self, lambda: f64) -> SolverConfig {
        SolverConfig {
            lambda,
            rho: self.rho,
            max_iter: self.max_iter,
            tol_residual: self.tol_residual,
            tol_sphere: self.tol_sphere,
            tvprox: TvProxConfig::default(),
        }
    }
}

/// Ground truth, observation and graph of one trial.
#[derive(Debug, Clone)]
pub struct Instance {
    pub truth: Signal,
    pub noisy: Signal,
    pub graph: Graph,
}

pub fn make_instance(spec: &BenchSpec, trial: usize) -> Result<Instance> {
    let mut rng = SeededRng::new(spec.seed).split(trial as u64);
    let n = spec.size;
    let (truth, graph) = match spec.experiment {
        Experiment::Barcode => {
            let x = synth::gen_barcode(n, 5, &mut rng)?;
            let len = x.len();
            (x, Graph::chain(len)?)
        }
        Experiment::Qrcode => synth::gen_qrcode(n, 10, &mut rng)?,
        Experiment::Circle1d => (synth::gen_circle_signal_1d(n)?, Graph::chain(n)?),
        Experiment::Circle2d => (synth::gen_circle_image(n, n)?, Graph::grid(n, n)?),
        Experiment::Hue => {
            let img = synth::gen_color_image(n, n)?;
            let hues = img
                .pixels()
                .iter()
                .map(|&p| rgb_to_hue(p).map(hue_to_s1))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| Error::invalid("colour image contains gray pixels"))?;
            (Signal::from_vertices(hues)?, Graph::grid(n, n)?)
        }
        Experiment::Chromaticity => {
            let (chroma, _) = chromaticity_split(&synth::gen_color_image(n, n)?)?;
            (chroma, Graph::grid(n, n)?)
        }
        Experiment::So3 => (synth::gen_so3_image(n, n)?, Graph::grid(n, n)?),
    };
    let noisy = match spec.experiment {
        Experiment::Barcode | Experiment::Qrcode => synth::add_gaussian(&truth, spec.noise, &mut rng)?,
        Experiment::Circle1d => synth::add_wrapped_gaussian(&truth, spec.noise, &mut rng)?,
        Experiment::Circle2d | Experiment::Hue | Experiment::Chromaticity => {
            synth::add_vmf(&truth, spec.noise, &mut rng)?
        }
        Experiment::So3 => synth::perturb_so3_vmf(
            &truth,
            spec.noise,
            spec.kappa_axis.unwrap_or(spec.noise),
            &mut rng,
        )?,
    };
    Ok(Instance { truth, noisy, graph })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Admm,
    FastTv,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Admm => "admm",
            Method::FastTv => "fast_tv",
        })
    }
}

/// One (trial, λ, method) measurement.
///
/// `mse` divides by the number of vertices, `mse_per_entry` by vertices
/// times dimension. For ADMM the metrics are taken on the raw output (MIoU
/// after χ₀ rounding); for fast-TV on the projected output, while
/// `sphere_distance` is measured before projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub trial: usize,
    pub lambda: f64,
    pub method: Method,
    pub mse: f64,
    pub mse_per_entry: f64,
    pub miou: Option<f64>,
    pub so3_error: Option<f64>,
    pub sphere_distance: f64,
    pub time_sec: f64,
    pub iterations: Option<usize>,
    pub stop_reason: Option<StopReason>,
}

/// Trial average at the selected λ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: Method,
    pub lambda: f64,
    pub mse: f64,
    pub mse_per_entry: f64,
    pub miou: Option<f64>,
    pub so3_error: Option<f64>,
    pub time_sec: f64,
    pub sphere_distance: f64,
    pub noisy_mse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub records: Vec<BenchRecord>,
    pub summary: Vec<SummaryRow>,
}

fn sphere_projection(x: &Signal) -> Result<Signal> {
    if x.dim() == 1 {
        x.characteristic(0.0)
    } else {
        x.project_sphere()
    }
}

fn metrics(
    spec: &BenchSpec,
    inst: &Instance,
    output: &Signal,
) -> Result<(f64, f64, Option<f64>, Option<f64>)> {
    let d1 = inst.truth.dim() == 1;
    let rounded_miou = if d1 {
        Some(miou(&output.characteristic(0.0)?, &inst.truth)?)
    } else {
        None
    };
    let so3 = if spec.experiment == Experiment::So3 {
        Some(so3_error(output, &inst.truth)?)
    } else {
        None
    };
    Ok((mse(output, &inst.truth)?, mse_per_entry(output, &inst.truth)?, rounded_miou, so3))
}

fn run_job(spec: &BenchSpec, inst: &Instance, trial: usize, lambda: f64) -> Result<[BenchRecord; 2]> {
    let (u, report) = admm_solve(&inst.noisy, &inst.graph, &spec.solver_config(lambda))?;
    let (m, mpe, mi, so3) = metrics(spec, inst, &u)?;
    let admm = BenchRecord {
        trial,
        lambda,
        method: Method::Admm,
        mse: m,
        mse_per_entry: mpe,
        miou: mi,
        so3_error: so3,
        sphere_distance: report.final_sphere_distance,
        time_sec: report.wall_time_sec,
        iterations: Some(report.iterations),
        stop_reason: Some(report.stop_reason),
    };

    let start = std::time::Instant::now();
    let raw = fast_tv_unprojected(&inst.noisy, &inst.graph, lambda, &TvProxConfig::default())?;
    let projected = sphere_projection(&raw)?;
    let time_sec = start.elapsed().as_secs_f64();
    let (m, mpe, mi, so3) = metrics(spec, inst, &projected)?;
    let fast = BenchRecord {
        trial,
        lambda,
        method: Method::FastTv,
        mse: m,
        mse_per_entry: mpe,
        miou: mi,
        so3_error: so3,
        sphere_distance: sphere_distance(&raw),
        time_sec,
        iterations: None,
        stop_reason: None,
    };
    Ok([admm, fast])
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    sum / count as f64
}

fn mean_opt(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let collected: Option<Vec<f64>> = values.collect();
    collected.map(|v| mean(v.into_iter()))
}

/// Best-λ rows, one per method: the λ whose trial-averaged MSE is smallest
/// (first one on ties).
pub fn summarize(records: &[BenchRecord], lambda_grid: &[f64], noisy_mse: f64) -> Vec<SummaryRow> {
    [Method::Admm, Method::FastTv]
        .into_iter()
        .filter_map(|method| {
            let rows_at = |lambda: f64| {
                records
                    .iter()
                    .filter(move |r| r.method == method && r.lambda == lambda)
            };
            let mut best: Option<(f64, f64)> = None;
            for &lambda in lambda_grid {
                if rows_at(lambda).next().is_none() {
                    continue;
                }
                let m = mean(rows_at(lambda).map(|r| r.mse));
                if best.is_none_or(|(_, b)| m < b) {
                    best = Some((lambda, m));
                }
            }
            let (lambda, m) = best?;
            Some(SummaryRow {
                method,
                lambda,
                mse: m,
                mse_per_entry: mean(rows_at(lambda).map(|r| r.mse_per_entry)),
                miou: mean_opt(rows_at(lambda).map(|r| r.miou)),
                so3_error: mean_opt(rows_at(lambda).map(|r| r.so3_error)),
                time_sec: mean(rows_at(lambda).map(|r| r.time_sec)),
                sphere_distance: mean(rows_at(lambda).map(|r| r.sphere_distance)),
                noisy_mse,
            })
        })
        .collect()
}

pub fn run_bench(spec: &BenchSpec) -> Result<BenchResult> {
    spec.validate()?;
    let instances = (0..spec.trials)
        .into_par_iter()
        .map(|t| make_instance(spec, t))
        .collect::<Result<Vec<_>>>()?;
    let noisy_mse = mean(
        instances
            .iter()
            .map(|i| mse(&i.noisy, &i.truth))
            .collect::<Result<Vec<_>>>()?
            .into_iter(),
    );
    let jobs: Vec<(usize, f64)> = (0..spec.trials)
        .flat_map(|t| spec.lambda_grid.iter().map(move |&l| (t, l)))
        .collect();
    let records: Vec<BenchRecord> = jobs
        .par_iter()
        .map(|&(t, l)| run_job(spec, &instances[t], t, l))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let summary = summarize(&records, &spec.lambda_grid, noisy_mse);
    Ok(BenchResult { records, summary })
}

fn write_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row).map_err(|e| Error::Parse(e.to_string()))?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn read_csv<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|e| Error::Parse(e.to_string()))
}

pub fn records_to_csv(records: &[BenchRecord]) -> Result<String> {
    write_csv(records)
}

pub fn records_from_csv(text: &str) -> Result<Vec<BenchRecord>> {
    read_csv(text)
}

pub fn summary_to_csv(rows: &[SummaryRow]) -> Result<String> {
    write_csv(rows)
}

pub fn summary_from_csv(text: &str) -> Result<Vec<SummaryRow>> {
    read_csv(text)
}
