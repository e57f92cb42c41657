//! Command-line front end: `denoise`, `bench`, `certify` and `generate`.
//!
//! Exit codes: 0 success, 1 certification found a non-attained instance,
//! 2 invalid arguments, 3 I/O or parse failures, 4 degenerate solver input.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::Serialize;

use crate::admm::{admm_solve, SolverConfig, StopReason};
use crate::bench::{self, BenchSpec, Experiment};
use crate::colormap::{self, RgbImage};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::io::{self, PnmImage};
use crate::oracle::{verify_tightness, MAX_BRUTE_FORCE_VERTICES};
use crate::signal::{miou, mse, Signal};
use crate::synth::{self, SeededRng};
use crate::tvprox::TvProxConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_ATTAINED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_DEGENERATE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "spheretv", version, about = "Total-variation denoising of sphere-valued signals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Denoise a signal CSV or a PGM/PPM image.
    Denoise(DenoiseArgs),
    /// Run a λ-sweep benchmark on synthetic data.
    Bench(BenchArgs),
    /// Check binary tightness on random small chains against brute force.
    Certify(CertifyArgs),
    /// Write a synthetic ground truth and its noisy observation as CSV.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GraphArg {
    Chain,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Projection {
    None,
    Sphere,
    Chi0,
}

#[derive(Debug, clap::Args)]
pub struct DenoiseArgs {
    /// Signal CSV, PGM (P2/P5) or PPM (P3/P6) file.
    pub input: PathBuf,
    /// Defaults to `grid` for images and `chain` for CSV input.
    #[arg(long, value_enum)]
    pub graph: Option<GraphArg>,
    /// Grid height for CSV input with `--graph grid`.
    #[arg(long)]
    pub rows: Option<usize>,
    /// Expected dimension for CSV; for PPM, 3 denoises chromaticity and 2 hue.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol_residual: f64,
    /// 0 disables the sphere-distance stopping test.
    #[arg(long, default_value_t = 1e-5)]
    pub tol_sphere: f64,
    #[arg(long, value_enum, default_value_t = Projection::None)]
    pub project: Projection,
    /// Recorded in the report; the solver itself is deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Clean reference signal (CSV) for the mse/miou report fields.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// JSON report path; defaults to `<out>.json`.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub experiment: Experiment,
    /// σ for barcode/qrcode/circle1d, κ otherwise (angle κ for so3).
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub kappa_axis: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    /// Comma-separated list or `start:step:stop`; defaults to 0.1:0.1:3.0.
    #[arg(long)]
    pub lambda_grid: Option<String>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Bars, QR blocks per side, samples, or pixels per side.
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol_residual: f64,
    #[arg(long)]
    pub tol_sphere: Option<f64>,
    /// Directory for `summary.csv`, `records.csv` and `spec.json`.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct CertifyArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = std::f64::consts::SQRT_2 * 0.5)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1.3)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.1)]
    pub rho: f64,
    #[arg(long, default_value_t = 1)]
    pub bar_width: usize,
    /// Random rounding levels tried in addition to η = 0.
    #[arg(long, default_value_t = 9)]
    pub etas: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, clap::Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub experiment: Experiment,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub kappa_axis: Option<f64>,
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Trial index, as used by `bench`.
    #[arg(long, default_value_t = 0)]
    pub trial: usize,
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub noisy: PathBuf,
}

/// Side report of `denoise`.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct DenoiseReport {
    pub mse: Option<f64>,
    pub miou: Option<f64>,
    pub lambda: f64,
    pub rho: f64,
    pub time_sec: f64,
    pub sphere_distance: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) => EXIT_USAGE,
        Error::Io(_) | Error::Parse(_) => EXIT_IO,
        Error::DegenerateProjection { .. } | Error::DegenerateChromaticity { .. } | Error::ResourceLimit(_) => {
            EXIT_DEGENERATE
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Denoise(a) => cmd_denoise(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Certify(a) => cmd_certify(&a),
        Command::Generate(a) => cmd_generate(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// How the solver output maps back to the input format.
enum Layout {
    Csv,
    Gray { rows: usize, cols: usize },
    Chroma { brightness: Vec<f64>, rows: usize, cols: usize },
    Hue { original: RgbImage },
}

fn is_pnm(path: &Path) -> Result<bool> {
    let bytes = fs::read(path)?;
    Ok(bytes.len() >= 2 && bytes[0] == b'P' && bytes[1].is_ascii_digit())
}

fn load_input(args: &DenoiseArgs) -> Result<(Signal, Graph, Layout)> {
    if !is_pnm(&args.input)? {
        let y = io::read_signal_csv(&args.input)?;
        if let Some(d) = args.dim {
            if d != y.dim() {
                return Err(Error::invalid(format!("--dim {d} does not match file dimension {}", y.dim())));
            }
        }
        let graph = match args.graph.unwrap_or(GraphArg::Chain) {
            GraphArg::Chain => Graph::chain(y.len())?,
            GraphArg::Grid => {
                let rows = args.rows.ok_or_else(|| Error::invalid("--graph grid on CSV input needs --rows"))?;
                if rows == 0 || y.len() % rows != 0 {
                    return Err(Error::invalid(format!("--rows {rows} does not divide {}", y.len())));
                }
                Graph::grid(rows, y.len() / rows)?
            }
        };
        return Ok((y, graph, Layout::Csv));
    }

    let img = io::read_pnm(&args.input)?;
    let (rows, cols) = (img.rows(), img.cols());
    let graph = match args.graph.unwrap_or(GraphArg::Grid) {
        GraphArg::Grid => Graph::grid(rows, cols)?,
        GraphArg::Chain => Graph::chain(rows * cols)?,
    };
    match img {
        PnmImage::Gray { values, .. } => {
            if args.dim.is_some_and(|d| d != 1) {
                return Err(Error::invalid("grayscale input supports only --dim 1"));
            }
            let y = Signal::scalar(values.iter().map(|v| 2.0 * v - 1.0).collect())?;
            Ok((y, graph, Layout::Gray { rows, cols }))
        }
        PnmImage::Rgb(rgb) => match args.dim.unwrap_or(3) {
            3 => {
                let (chroma, brightness) = colormap::chromaticity_split(&rgb)?;
                Ok((chroma, graph, Layout::Chroma { brightness, rows, cols }))
            }
            2 => {
                // gray pixels carry no hue; they get hue 0 and keep zero chroma on output
                let hues = rgb
                    .pixels()
                    .iter()
                    .map(|&p| colormap::hue_to_s1(colormap::rgb_to_hue(p).unwrap_or(0.0)));
                Ok((Signal::from_vertices(hues)?, graph, Layout::Hue { original: rgb }))
            }
            d => Err(Error::invalid(format!("colour input supports --dim 2 or 3, got {d}"))),
        },
    }
}

fn write_output(path: &Path, x: &Signal, layout: &Layout) -> Result<()> {
    match layout {
        Layout::Csv => io::write_signal_csv(path, x),
        Layout::Gray { rows, cols } => {
            let values = x.as_slice().iter().map(|v| 0.5 * (v + 1.0)).collect();
            io::write_pnm(path, &PnmImage::Gray { rows: *rows, cols: *cols, values })
        }
        Layout::Chroma { brightness, rows, cols } => {
            let img = colormap::chromaticity_recombine(x, brightness, *rows, *cols)?;
            io::write_pnm(path, &PnmImage::Rgb(img))
        }
        Layout::Hue { original } => {
            let pixels = original
                .pixels()
                .iter()
                .zip(x.vertices())
                .map(|(&p, v)| {
                    let hue = colormap::s1_to_hue([v[0], v[1]]).unwrap_or(0.0);
                    colormap::with_hue(p, hue)
                })
                .collect();
            let img = RgbImage::new(original.rows(), original.cols(), pixels)?;
            io::write_pnm(path, &PnmImage::Rgb(img))
        }
    }
}

pub fn cmd_denoise(args: &DenoiseArgs) -> Result<i32> {
    let cfg = SolverConfig {
        lambda: args.lambda,
        rho: args.rho,
        max_iter: args.max_iter,
        tol_residual: args.tol_residual,
        tol_sphere: args.tol_sphere,
        tvprox: TvProxConfig::default(),
    };
    cfg.validate()?;
    let (y, graph, layout) = load_input(args)?;
    let truth = args.truth.as_deref().map(io::read_signal_csv).transpose()?;
    let (u, report) = admm_solve(&y, &graph, &cfg)?;
    let out = match args.project {
        Projection::None => u,
        Projection::Sphere => u.project_sphere()?,
        Projection::Chi0 => {
            if u.dim() != 1 {
                return Err(Error::invalid("--project chi0 needs d = 1"));
            }
            u.characteristic(0.0)?
        }
    };
    let (mse_value, miou_value) = match &truth {
        Some(t) => {
            let m = mse(&out, t)?;
            let mi = if t.dim() == 1 && t.is_binary() {
                Some(miou(&out.characteristic(0.0)?, t)?)
            } else {
                None
            };
            (Some(m), mi)
        }
        None => (None, None),
    };
    write_output(&args.out, &out, &layout)?;
    let side = DenoiseReport {
        mse: mse_value,
        miou: miou_value,
        lambda: args.lambda,
        rho: args.rho,
        time_sec: report.wall_time_sec,
        sphere_distance: report.final_sphere_distance,
        iterations: report.iterations,
        stop_reason: report.stop_reason,
    };
    let report_path = args.report.clone().unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".json");
        PathBuf::from(p)
    });
    let json = serde_json::to_string_pretty(&side).expect("report serializes");
    fs::write(report_path, json + "\n")?;
    eprintln!(
        "{} iterations ({}), sphere distance {:.3e}, {:.3} s",
        side.iterations, side.stop_reason, side.sphere_distance, side.time_sec
    );
    Ok(EXIT_OK)
}

/// Parses `a,b,c` or `start:step:stop` (inclusive, rounded to the step).
pub fn parse_lambda_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::invalid(format!("bad lambda grid {text:?}"));
    let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [start, step, stop] = parts[..] else { return Err(bad()) };
        let (start, step, stop) = (parse(start)?, parse(step)?, parse(stop)?);
        if !(step > 0.0) || stop < start {
            return Err(bad());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        // k·step keeps grid values free of accumulated drift
        Ok((0..count).map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12).collect())
    } else {
        text.split(',').map(parse).collect()
    }
}

fn bench_spec(args: &BenchArgs) -> Result<BenchSpec> {
    let mut spec = BenchSpec::new(args.experiment);
    if let Some(n) = args.noise {
        spec.noise = n;
    }
    spec.kappa_axis = args.kappa_axis;
    spec.trials = args.trials;
    if let Some(g) = &args.lambda_grid {
        spec.lambda_grid = parse_lambda_grid(g)?;
    }
    if let Some(r) = args.rho {
        spec.rho = r;
    }
    spec.seed = args.seed;
    if let Some(s) = args.size {
        spec.size = s;
    }
    spec.max_iter = args.max_iter;
    spec.tol_residual = args.tol_residual;
    if let Some(t) = args.tol_sphere {
        spec.tol_sphere = t;
    }
    spec.validate()?;
    Ok(spec)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.5}"))
}

pub fn cmd_bench(args: &BenchArgs) -> Result<i32> {
    let spec = bench_spec(args)?;
    let result = bench::run_bench(&spec)?;
    fs::create_dir_all(&args.out_dir)?;
    fs::write(args.out_dir.join("summary.csv"), bench::summary_to_csv(&result.summary)?)?;
    fs::write(args.out_dir.join("records.csv"), bench::records_to_csv(&result.records)?)?;
    let spec_json = serde_json::to_string_pretty(&spec).expect("spec serializes");
    fs::write(args.out_dir.join("spec.json"), spec_json + "\n")?;

    println!(
        "{} noise={} trials={} rho={}",
        spec.experiment, spec.noise, spec.trials, spec.rho
    );
    println!("{:<8} {:>10} {:>8} {:>8} {:>6} {:>9} {:>9}", "method", "mse", "miou", "so3", "lambda", "time", "distance");
    for row in &result.summary {
        println!(
            "{:<8} {:>10.5} {:>8} {:>8} {:>6} {:>9.3} {:>9.5}",
            row.method.to_string(),
            row.mse,
            fmt_opt(row.miou),
            fmt_opt(row.so3_error),
            row.lambda,
            row.time_sec,
            row.sphere_distance
        );
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct CertifyLine<'a> {
    instance: usize,
    #[serde(flatten)]
    report: &'a crate::oracle::TightnessReport,
}

/// Certification instance `index`: ±1 bars of width `bar_width` truncated to
/// `n` samples plus Gaussian noise, and the rounding levels to try.
pub fn certify_instance(args: &CertifyArgs, index: usize) -> Result<(Signal, Vec<f64>)> {
    let mut rng = SeededRng::new(args.seed).split(index as u64);
    let bars = args.n.div_ceil(args.bar_width);
    let truth = synth::gen_barcode(bars, args.bar_width, &mut rng)?;
    let truth = Signal::scalar(truth.as_slice()[..args.n].to_vec())?;
    let y = synth::add_gaussian(&truth, args.sigma, &mut rng)?;
    let etas = (0..args.etas).map(|_| rng.random_range(-1.0..1.0)).collect();
    Ok((y, etas))
}

/// ADMM settings used for certification: residual 1e-9 and no sphere stop.
pub fn certify_config(lambda: f64, rho: f64) -> SolverConfig {
    SolverConfig {
        lambda,
        rho,
        max_iter: 1_000_000,
        tol_residual: 1e-9,
        tol_sphere: 0.0,
        tvprox: TvProxConfig::default(),
    }
}

pub fn cmd_certify(args: &CertifyArgs) -> Result<i32> {
    if args.n == 0 || args.n > MAX_BRUTE_FORCE_VERTICES {
        return Err(Error::invalid(format!(
            "--n must be in 1..={MAX_BRUTE_FORCE_VERTICES}, got {}",
            args.n
        )));
    }
    if args.trials == 0 || args.bar_width == 0 {
        return Err(Error::invalid("--trials and --bar-width must be positive"));
    }
    let graph = Graph::chain(args.n)?;
    let cfg = certify_config(args.lambda, args.rho);
    cfg.validate()?;
    let mut all = true;
    for i in 0..args.trials {
        let (y, etas) = certify_instance(args, i)?;
        let (u, _) = admm_solve(&y, &graph, &cfg)?;
        let report = verify_tightness(&y, &graph, args.lambda, &u, &etas)?;
        all &= report.attained;
        let line = CertifyLine { instance: i, report: &report };
        println!("{}", serde_json::to_string(&line).expect("report serializes"));
    }
    eprintln!("{}", if all { "all instances attained" } else { "some instances NOT attained" });
    Ok(if all { EXIT_OK } else { EXIT_NOT_ATTAINED })
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<i32> {
    let mut spec = BenchSpec::new(args.experiment);
    if let Some(n) = args.noise {
        spec.noise = n;
    }
    spec.kappa_axis = args.kappa_axis;
    if let Some(s) = args.size {
        spec.size = s;
    }
    spec.seed = args.seed;
    spec.validate()?;
    let inst = bench::make_instance(&spec, args.trial)?;
    io::write_signal_csv(&args.truth, &inst.truth)?;
    io::write_signal_csv(&args.noisy, &inst.noisy)?;
    Ok(EXIT_OK)
}
