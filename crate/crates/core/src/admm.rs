//! ADMM for the ball-relaxed problem
//!
//! ```text
//! min_x  K(x) = −Σ_n ⟨x_n, y_n⟩ + λ·TV(x)   s.t.  |x_n| ≤ 1,
//! ```
//!
//! split as `K(x) + ι_ball(u)` with `x = u`. One iteration is
//!
//! ```text
//! x ← prox_{TV, λ/ρ}(u − z + y/ρ)
//! u ← proj_ball(x + z)
//! z ← z + x − u
//! ```
//!
//! started from `x = u = z = 0`. The returned solution is the `u` iterate,
//! which is ball-feasible at every step.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::signal::{self, Signal};
use crate::tvprox::{self, GridDual, TvProxConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub lambda: f64,
    pub rho: f64,
    pub max_iter: usize,
    /// Stop once the mean per-vertex change of `x` drops below this.
    pub tol_residual: f64,
    /// Stop once the mean distance of `u` to the sphere drops below this.
    /// `0.0` disables the test.
    pub tol_sphere: f64,
    pub tvprox: TvProxConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            rho: 1.0,
            max_iter: 10_000,
            tol_residual: 1e-6,
            tol_sphere: 1e-5,
            tvprox: TvProxConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn new(lambda: f64, rho: f64) -> Self {
        Self {
            lambda,
            rho,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::invalid(format!("rho must be positive, got {}", self.rho)));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be positive"));
        }
        if !(self.tol_residual > 0.0) {
            return Err(Error::invalid("tol_residual must be positive"));
        }
        if !(self.tol_sphere >= 0.0) {
            return Err(Error::invalid("tol_sphere must be non-negative"));
        }
        self.tvprox.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Residual,
    Sphere,
    MaxIter,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StopReason::Residual => "residual",
            StopReason::Sphere => "sphere",
            StopReason::MaxIter => "max_iter",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub iterations: usize,
    pub residual_trace: Vec<f64>,
    pub final_sphere_distance: f64,
    pub final_objective_k: f64,
    pub wall_time_sec: f64,
    pub stop_reason: StopReason,
}

/// `K(x) = −Σ⟨x_n, y_n⟩ + λ·TV(x)`.
pub fn objective_k(x: &Signal, y: &Signal, graph: &Graph, lambda: f64) -> Result<f64> {
    x.check_same_shape(y)?;
    let fidelity: f64 = x
        .vertices()
        .zip(y.vertices())
        .map(|(a, b)| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>())
        .sum();
    Ok(-fidelity + lambda * tvprox::tv_value(x, graph)?)
}

/// `½ Σ|x_n − y_n|² + λ·TV(x)` for sphere-valued `x`.
pub fn objective_original(x: &Signal, y: &Signal, graph: &Graph, lambda: f64) -> Result<f64> {
    x.check_same_shape(y)?;
    if !x.is_sphere_valued() {
        return Err(Error::invalid("objective_original needs a sphere-valued signal"));
    }
    let fidelity: f64 = x
        .vertices()
        .zip(y.vertices())
        .map(|(a, b)| a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>())
        .sum();
    Ok(0.5 * fidelity + lambda * tvprox::tv_value(x, graph)?)
}

/// Constant separating the two objectives on the sphere:
/// `objective_original(x) = K(x) + ½ Σ (1 + |y_n|²)`.
pub fn original_offset(y: &Signal) -> f64 {
    0.5 * y
        .vertices()
        .map(|v| 1.0 + v.iter().map(|c| c * c).sum::<f64>())
        .sum::<f64>()
}

/// Iterate state of the splitting; [`admm_solve`] drives it to convergence.
#[derive(Debug, Clone)]
pub struct Admm<'a> {
    y: &'a Signal,
    graph: &'a Graph,
    cfg: SolverConfig,
    x: Signal,
    u: Signal,
    z: Signal,
    iterations: usize,
    // grid prox duals carried between iterations
    prox_state: Vec<GridDual>,
}

impl<'a> Admm<'a> {
    pub fn new(y: &'a Signal, graph: &'a Graph, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        if !y.is_finite() {
            return Err(Error::invalid("non-finite data"));
        }
        if y.len() != graph.num_vertices() {
            return Err(Error::invalid(format!(
                "data has {} vertices, graph has {}",
                y.len(),
                graph.num_vertices()
            )));
        }
        let zeros = Signal::zeros(y.dim(), y.len());
        Ok(Self {
            y,
            graph,
            cfg,
            x: zeros.clone(),
            u: zeros.clone(),
            z: zeros,
            iterations: 0,
            prox_state: Vec::new(),
        })
    }

    /// Runs one iteration and returns the residual
    /// `(1/N) Σ_n |x_n^{new} − x_n^{old}|`.
    pub fn step(&mut self) -> Result<f64> {
        let rho = self.cfg.rho;
        let dim = self.y.dim();
        let mut w = self.u.clone();
        for ((wv, zv), yv) in w
            .as_mut_slice()
            .iter_mut()
            .zip(self.z.as_slice())
            .zip(self.y.as_slice())
        {
            *wv = *wv - zv + yv / rho;
        }
        let x_new = tvprox::tv_prox_signal_warm(
            &w,
            self.graph,
            self.cfg.lambda / rho,
            &self.cfg.tvprox,
            &mut self.prox_state,
        )?;

        let mut u_new = x_new.clone();
        for (uv, zv) in u_new.as_mut_slice().iter_mut().zip(self.z.as_slice()) {
            *uv += zv;
        }
        signal::project_ball_in_place(u_new.as_mut_slice(), dim);

        for ((zv, xv), uv) in self
            .z
            .as_mut_slice()
            .iter_mut()
            .zip(x_new.as_slice())
            .zip(u_new.as_slice())
        {
            *zv += xv - uv;
        }

        let change: f64 = x_new
            .vertices()
            .zip(self.x.vertices())
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(p, q)| (p - q) * (p - q))
                    .sum::<f64>()
                    .sqrt()
            })
            .sum();
        self.x = x_new;
        self.u = u_new;
        self.iterations += 1;
        Ok(change / self.y.len() as f64)
    }

    pub fn x(&self) -> &Signal {
        &self.x
    }

    pub fn u(&self) -> &Signal {
        &self.u
    }

    pub fn z(&self) -> &Signal {
        &self.z
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn into_solution(self) -> Signal {
        self.u
    }
}

/// Solves the relaxed problem and returns the ball-feasible `u` iterate.
/// Hitting `max_iter` is reported through [`StopReason::MaxIter`], not as an
/// error.
pub fn admm_solve(y: &Signal, graph: &Graph, cfg: &SolverConfig) -> Result<(Signal, SolverReport)> {
    let start = Instant::now();
    let mut admm = Admm::new(y, graph, *cfg)?;
    let mut trace = Vec::new();
    let mut stop_reason = StopReason::MaxIter;
    while admm.iterations() < cfg.max_iter {
        let residual = admm.step()?;
        trace.push(residual);
        if residual < cfg.tol_residual {
            stop_reason = StopReason::Residual;
            break;
        }
        if signal::sphere_distance(admm.u()) < cfg.tol_sphere {
            stop_reason = StopReason::Sphere;
            break;
        }
    }
    let iterations = admm.iterations();
    let solution = admm.into_solution();
    let report = SolverReport {
        iterations,
        residual_trace: trace,
        final_sphere_distance: signal::sphere_distance(&solution),
        final_objective_k: objective_k(&solution, y, graph, cfg.lambda)?,
        wall_time_sec: start.elapsed().as_secs_f64(),
        stop_reason,
    };
    Ok((solution, report))
}

/// Unconstrained TV denoising `prox_{TV, λ}(y)` followed by projection onto
/// the sphere. Equals the sphere projection of the first ADMM `x` iterate
/// when `ρ = 1`.
pub fn fast_tv_heuristic(y: &Signal, graph: &Graph, lambda: f64, cfg: &TvProxConfig) -> Result<Signal> {
    fast_tv_unprojected(y, graph, lambda, cfg)?.project_sphere()
}

/// The fast-TV estimate before its final sphere projection.
pub fn fast_tv_unprojected(y: &Signal, graph: &Graph, lambda: f64, cfg: &TvProxConfig) -> Result<Signal> {
    if !(lambda > 0.0) {
        return Err(Error::invalid("lambda must be positive"));
    }
    tvprox::tv_prox_signal(y, graph, lambda, cfg)
}
