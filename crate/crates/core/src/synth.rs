//! Ground truths and noise models for the benchmark experiments.
//!
//! Every generator is driven by [`SeededRng`], so a seed reproduces its
//! output bit for bit.
//!
//! The circle-valued and SO(3) ground truths are fixed closed-form stand-ins:
//!
//! * `circle1d`: angle profile on `t ∈ [0, 1)`
//!   `θ(t) = −1 + 2t` on `[0, 0.3)`, `θ(t) = 2 + 2(t − 0.3)` on `[0.3, 0.65)`,
//!   `θ(t) = 0.8 − 3(t − 0.65)` on `[0.65, 1)`, sampled at `t = i/n`;
//! * `circle2d`: a disc of angle `0.3`, left/right halves of angle `2.4` /
//!   `−2.0`, and a bottom band whose angle ramps `−π + 2π·(c/cols)`;
//! * `so3`: a background rotation, a disc, a square and a bottom band, each a
//!   constant unit quaternion with rotation angle below `1.6`.

use std::f64::consts::PI;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::colormap::{Quaternion, RgbImage};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::signal::{norm, Signal};

/// Deterministic generator (ChaCha8) carrying its seed.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent generator for task `index`: seeded with
    /// `splitmix64(seed ^ index)`.
    pub fn split(&self, index: u64) -> Self {
        Self::new(splitmix64(self.seed ^ index))
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum NoiseModel {
    Gaussian { sigma: f64 },
    WrappedGaussian { sigma: f64 },
    VonMisesFisher { kappa: f64 },
}

impl NoiseModel {
    pub fn apply(&self, x: &Signal, rng: &mut SeededRng) -> Result<Signal> {
        match *self {
            NoiseModel::Gaussian { sigma } => add_gaussian(x, sigma, rng),
            NoiseModel::WrappedGaussian { sigma } => add_wrapped_gaussian(x, sigma, rng),
            NoiseModel::VonMisesFisher { kappa } => add_vmf(x, kappa, rng),
        }
    }
}

fn rademacher(rng: &mut SeededRng) -> f64 {
    if rng.random_bool(0.5) {
        1.0
    } else {
        -1.0
    }
}

/// `num_bars` independent ±1 bars, each `bar_width` samples wide.
pub fn gen_barcode(num_bars: usize, bar_width: usize, rng: &mut SeededRng) -> Result<Signal> {
    if num_bars == 0 || bar_width == 0 {
        return Err(Error::invalid("barcode sizes must be positive"));
    }
    let mut values = Vec::with_capacity(num_bars * bar_width);
    for _ in 0..num_bars {
        let v = rademacher(rng);
        values.extend(std::iter::repeat_n(v, bar_width));
    }
    Signal::scalar(values)
}

/// Square image of `blocks × blocks` independent ±1 blocks, each
/// `block_px × block_px` pixels, together with its grid graph.
pub fn gen_qrcode(blocks: usize, block_px: usize, rng: &mut SeededRng) -> Result<(Signal, Graph)> {
    if blocks == 0 || block_px == 0 {
        return Err(Error::invalid("qr code sizes must be positive"));
    }
    let block_values: Vec<f64> = (0..blocks * blocks).map(|_| rademacher(rng)).collect();
    let side = blocks * block_px;
    let values = (0..side * side)
        .map(|i| {
            let (r, c) = (i / side, i % side);
            block_values[(r / block_px) * blocks + c / block_px]
        })
        .collect();
    Ok((Signal::scalar(values)?, Graph::grid(side, side)?))
}

/// Angle profile of the 1D circle-valued ground truth.
pub fn circle_angle_profile(t: f64) -> f64 {
    if t < 0.3 {
        -1.0 + 2.0 * t
    } else if t < 0.65 {
        2.0 + 2.0 * (t - 0.3)
    } else {
        0.8 - 3.0 * (t - 0.65)
    }
}

fn angle_to_s1(theta: f64) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    [c, s]
}

pub fn gen_circle_signal_1d(n: usize) -> Result<Signal> {
    if n == 0 {
        return Err(Error::invalid("signal length must be positive"));
    }
    Signal::from_vertices((0..n).map(|i| angle_to_s1(circle_angle_profile(i as f64 / n as f64))))
}

/// Region label of pixel `(r, c)` in the circle-image and SO(3) cartoons:
/// 0 disc, 1 left, 2 right, 3 bottom band.
fn cartoon_region(r: usize, c: usize, rows: usize, cols: usize) -> u8 {
    let u = (r as f64 + 0.5) / rows as f64;
    let v = (c as f64 + 0.5) / cols as f64;
    if (u - 0.4).powi(2) + (v - 0.5).powi(2) < 0.2f64.powi(2) {
        0
    } else if u > 0.75 {
        3
    } else if v < 0.5 {
        1
    } else {
        2
    }
}

/// Region labels shared by [`gen_circle_image`] and [`gen_so3_image`].
pub fn cartoon_regions(rows: usize, cols: usize) -> Vec<u8> {
    (0..rows * cols)
        .map(|i| cartoon_region(i / cols, i % cols, rows, cols))
        .collect()
}

pub fn gen_circle_image(rows: usize, cols: usize) -> Result<Signal> {
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("image dimensions must be positive"));
    }
    Signal::from_vertices((0..rows * cols).map(|i| {
        let (r, c) = (i / cols, i % cols);
        let theta = match cartoon_region(r, c, rows, cols) {
            0 => 0.3,
            1 => 2.4,
            2 => -2.0,
            _ => -PI + 2.0 * PI * (c as f64 + 0.5) / cols as f64,
        };
        angle_to_s1(theta)
    }))
}

/// Constant rotation of each cartoon region, canonical sign.
pub fn so3_region_quaternions() -> [Quaternion; 4] {
    [
        Quaternion::from_axis_angle([1.0, 0.0, 0.0], 1.2),
        Quaternion::from_axis_angle([0.0, 0.0, 1.0], 0.3),
        Quaternion::from_axis_angle([0.0, 1.0, 0.0], 0.9),
        Quaternion::from_axis_angle([1.0, 1.0, 1.0], 1.5),
    ]
    .map(|q| q.expect("non-zero axis").canonical())
}

pub fn gen_so3_image(rows: usize, cols: usize) -> Result<Signal> {
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("image dimensions must be positive"));
    }
    let quats = so3_region_quaternions();
    Signal::from_vertices(
        cartoon_regions(rows, cols)
            .into_iter()
            .map(|label| quats[label as usize].0),
    )
}

/// Cartoon RGB image without black pixels: coloured disc, square and
/// background plus a bottom band with a horizontal colour ramp.
pub fn gen_color_image(rows: usize, cols: usize) -> Result<RgbImage> {
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("image dimensions must be positive"));
    }
    let pixels = (0..rows * cols)
        .map(|i| {
            let (r, c) = (i / cols, i % cols);
            let u = (r as f64 + 0.5) / rows as f64;
            let v = (c as f64 + 0.5) / cols as f64;
            if u > 0.75 {
                [0.9 - 0.6 * v, 0.3 + 0.4 * v, 0.35]
            } else if (u - 0.4).powi(2) + (v - 0.3).powi(2) < 0.15f64.powi(2) {
                [0.2, 0.5, 0.9]
            } else if (0.2..0.6).contains(&u) && (0.55..0.85).contains(&v) {
                [0.3, 0.8, 0.25]
            } else {
                [0.85, 0.45, 0.2]
            }
        })
        .collect();
    RgbImage::new(rows, cols, pixels)
}

/// `σ²` must be a positive normal float for the noise to be non-degenerate.
fn check_scale(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() && (value * value).is_normal() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive with a representable square, got {value}")))
    }
}

/// Adds i.i.d. `N(0, σ²)` to every entry.
pub fn add_gaussian(x: &Signal, sigma: f64, rng: &mut SeededRng) -> Result<Signal> {
    check_scale("sigma", sigma)?;
    let values = x
        .as_slice()
        .iter()
        .map(|v| {
            let e: f64 = StandardNormal.sample(rng);
            v + sigma * e
        })
        .collect();
    Signal::new(x.dim(), values)
}

/// Perturbs the angle of every `S¹` sample by `N(0, σ²)` modulo `2π`.
pub fn add_wrapped_gaussian(x: &Signal, sigma: f64, rng: &mut SeededRng) -> Result<Signal> {
    check_scale("sigma", sigma)?;
    if x.dim() != 2 {
        return Err(Error::invalid("wrapped Gaussian noise needs d = 2"));
    }
    Signal::from_vertices(x.vertices().map(|v| {
        let e: f64 = StandardNormal.sample(rng);
        let theta = (v[1].atan2(v[0]) + sigma * e).rem_euclid(2.0 * PI);
        angle_to_s1(theta)
    }))
}

/// One von Mises–Fisher draw on `S^{d−1}` with mean direction `mu`.
///
/// The cosine `w = ⟨μ, ξ⟩` is drawn by Wood's rejection sampler with a
/// Beta((d−1)/2, (d−1)/2) envelope; the tangent part is a uniform direction
/// orthogonal to `μ`.
pub fn sample_vmf(mu: &[f64], kappa: f64, rng: &mut SeededRng) -> Result<Vec<f64>> {
    let d = mu.len();
    if d < 2 {
        return Err(Error::invalid("von Mises-Fisher sampling needs d >= 2"));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::invalid(format!("kappa must be positive, got {kappa}")));
    }
    let r = norm(mu);
    if r == 0.0 || !r.is_finite() {
        return Err(Error::invalid("mean direction must be non-zero"));
    }
    let mu: Vec<f64> = mu.iter().map(|c| c / r).collect();

    let m1 = (d - 1) as f64;
    // b = (−2κ + sqrt(4κ² + m1²)) / m1, rewritten to avoid cancellation
    let b = m1 / (2.0 * kappa + (4.0 * kappa * kappa + m1 * m1).sqrt());
    let x0 = (1.0 - b) / (1.0 + b);
    let c = kappa * x0 + m1 * (1.0 - x0 * x0).ln();
    let beta = Beta::new(0.5 * m1, 0.5 * m1).expect("valid beta parameters");
    let w = loop {
        let z: f64 = beta.sample(rng);
        let w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        let u: f64 = rng.random();
        if kappa * w + m1 * (1.0 - x0 * w).ln() - c >= u.ln() {
            break w.clamp(-1.0, 1.0);
        }
    };

    let tangent = loop {
        let mut v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let along: f64 = v.iter().zip(&mu).map(|(a, b)| a * b).sum();
        v.iter_mut().zip(&mu).for_each(|(a, b)| *a -= along * b);
        let len = norm(&v);
        if len > 1e-12 {
            v.iter_mut().for_each(|a| *a /= len);
            break v;
        }
    };
    let s = (1.0 - w * w).max(0.0).sqrt();
    let mut xi: Vec<f64> = mu.iter().zip(&tangent).map(|(m, t)| w * m + s * t).collect();
    let len = norm(&xi);
    xi.iter_mut().for_each(|a| *a /= len);
    Ok(xi)
}

/// Replaces every vertex by a vMF draw centred on it.
pub fn add_vmf(x: &Signal, kappa: f64, rng: &mut SeededRng) -> Result<Signal> {
    let draws = x
        .vertices()
        .map(|v| sample_vmf(v, kappa, rng))
        .collect::<Result<Vec<_>>>()?;
    Signal::from_vertices(draws)
}

/// Perturbs unit quaternions in axis-angle form: the rotation axis by a vMF
/// draw on S² (`kappa_axis`) and the rotation angle by a circular vMF draw
/// (`kappa_angle`). Output quaternions carry the canonical sign.
pub fn perturb_so3_vmf(
    x: &Signal,
    kappa_angle: f64,
    kappa_axis: f64,
    rng: &mut SeededRng,
) -> Result<Signal> {
    if x.dim() != 4 {
        return Err(Error::invalid("SO(3) perturbation needs d = 4"));
    }
    let mut out = Vec::with_capacity(x.len());
    for v in x.vertices() {
        let q = Quaternion([v[0], v[1], v[2], v[3]]);
        if !q.is_unit() {
            return Err(Error::invalid("SO(3) perturbation needs unit quaternions"));
        }
        let (angle, axis) = q.to_axis_angle();
        let offset = sample_vmf(&[1.0, 0.0], kappa_angle, rng)?;
        let new_angle = angle + offset[1].atan2(offset[0]);
        let new_axis = sample_vmf(&axis, kappa_axis, rng)?;
        let q = Quaternion::from_axis_angle([new_axis[0], new_axis[1], new_axis[2]], new_angle)?;
        out.push(q.canonical().0);
    }
    Signal::from_vertices(out)
}
