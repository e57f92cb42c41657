//! Embeddings of application data into spheres: hue angles on S¹, RGB
//! chromaticity on S², and rotations as unit quaternions on S³ (which
//! covers SO(3) twice, `q` and `−q` giving the same rotation).

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::signal::{norm, Signal};

/// Row-major image with channel values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    rows: usize,
    cols: usize,
    pixels: Vec<[f64; 3]>,
}

impl RgbImage {
    pub fn new(rows: usize, cols: usize, pixels: Vec<[f64; 3]>) -> Result<Self> {
        if rows == 0 || cols == 0 || pixels.len() != rows * cols {
            return Err(Error::invalid(format!(
                "{} pixels do not form a {rows}x{cols} image",
                pixels.len()
            )));
        }
        if pixels
            .iter()
            .flatten()
            .any(|c| !(0.0..=1.0).contains(c))
        {
            return Err(Error::invalid("channel values must lie in [0, 1]"));
        }
        Ok(Self { rows, cols, pixels })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.pixels
    }
}

pub fn hue_to_s1(hue_degrees: f64) -> [f64; 2] {
    let t = 2.0 * PI * hue_degrees.rem_euclid(360.0) / 360.0;
    [t.cos(), t.sin()]
}

pub fn s1_to_hue(v: [f64; 2]) -> Result<f64> {
    if v[0] == 0.0 && v[1] == 0.0 {
        return Err(Error::DegenerateProjection { vertices: vec![0] });
    }
    let deg = v[1].atan2(v[0]).to_degrees().rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative angles
    Ok(if deg >= 360.0 { 0.0 } else { deg })
}

/// HSV hue of an RGB triple in degrees; `None` for grays, where hue is
/// undefined.
pub fn rgb_to_hue(rgb: [f64; 3]) -> Option<f64> {
    let [r, g, b] = rgb;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    if delta == 0.0 {
        return None;
    }
    let h = if max == r {
        ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    };
    Some(60.0 * h)
}

/// RGB triple with the HSV value and chroma of `rgb` and the given hue.
pub fn with_hue(rgb: [f64; 3], hue_degrees: f64) -> [f64; 3] {
    let max = rgb[0].max(rgb[1]).max(rgb[2]);
    let min = rgb[0].min(rgb[1]).min(rgb[2]);
    let chroma = max - min;
    let h = hue_degrees.rem_euclid(360.0) / 60.0;
    let x = chroma * (1.0 - (h.rem_euclid(2.0) - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (chroma, x, 0.0),
        1 => (x, chroma, 0.0),
        2 => (0.0, chroma, x),
        3 => (0.0, x, chroma),
        4 => (x, 0.0, chroma),
        _ => (chroma, 0.0, x),
    };
    [r + min, g + min, b + min]
}

/// Splits every pixel into its chromaticity `rgb/|rgb|` and brightness `|rgb|`.
pub fn chromaticity_split(img: &RgbImage) -> Result<(Signal, Vec<f64>)> {
    let black: Vec<usize> = img
        .pixels
        .iter()
        .enumerate()
        .filter(|(_, p)| p.iter().all(|&c| c == 0.0))
        .map(|(i, _)| i)
        .collect();
    if !black.is_empty() {
        return Err(Error::DegenerateChromaticity { pixels: black });
    }
    let brightness: Vec<f64> = img.pixels.iter().map(|p| norm(p)).collect();
    let values = img
        .pixels
        .iter()
        .zip(&brightness)
        .flat_map(|(p, &b)| p.map(|c| c / b))
        .collect();
    Ok((Signal::from_raw(3, values), brightness))
}

/// Inverse of [`chromaticity_split`]; channels are clamped to `[0, 1]` so
/// denoised chromaticities that left the positive octant still give an image.
pub fn chromaticity_recombine(
    chroma: &Signal,
    brightness: &[f64],
    rows: usize,
    cols: usize,
) -> Result<RgbImage> {
    if chroma.dim() != 3 || chroma.len() != brightness.len() || brightness.len() != rows * cols {
        return Err(Error::invalid("chromaticity/brightness shape mismatch"));
    }
    let pixels = chroma
        .vertices()
        .zip(brightness)
        .map(|(c, &b)| [0, 1, 2].map(|k| (c[k] * b).clamp(0.0, 1.0)))
        .collect();
    RgbImage::new(rows, cols, pixels)
}

/// Quaternion `(w, x, y, z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion(pub [f64; 4]);

pub type Mat3 = [[f64; 3]; 3];

const UNIT_TOL: f64 = 1e-9;
const ROTATION_TOL: f64 = 1e-6;

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion([1.0, 0.0, 0.0, 0.0]);

    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Result<Self> {
        let r = norm(&axis);
        if r == 0.0 {
            return Err(Error::invalid("rotation axis must be non-zero"));
        }
        let (s, c) = (0.5 * angle).sin_cos();
        Ok(Quaternion([c, s * axis[0] / r, s * axis[1] / r, s * axis[2] / r]))
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() <= UNIT_TOL
    }

    /// Representative with the first nonzero component positive.
    pub fn canonical(self) -> Self {
        match self.0.iter().find(|&&c| c != 0.0) {
            Some(&c) if c < 0.0 => Quaternion(self.0.map(|v| -v)),
            _ => self,
        }
    }

    pub fn is_canonical(&self) -> bool {
        self.0.iter().find(|&&c| c != 0.0).is_some_and(|&c| c > 0.0)
    }

    /// Rotation angle in `[0, 2π]` and unit axis; the axis defaults to `e_x`
    /// when the rotation is the identity.
    pub fn to_axis_angle(&self) -> (f64, [f64; 3]) {
        let [w, x, y, z] = self.0;
        let s = norm(&[x, y, z]);
        let angle = 2.0 * s.atan2(w);
        if s < 1e-15 {
            (angle, [1.0, 0.0, 0.0])
        } else {
            (angle, [x / s, y / s, z / s])
        }
    }
}

pub fn quat_to_rotmat(q: Quaternion) -> Result<Mat3> {
    if !q.is_unit() {
        return Err(Error::invalid(format!("quaternion norm {} is not 1", q.norm())));
    }
    let [w, x, y, z] = q.0;
    Ok([
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ])
}

pub fn determinant(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Largest entry of `|RᵀR − I|`.
pub fn orthogonality_error(m: &Mat3) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            let dot: f64 = (0..3).map(|k| m[k][i] * m[k][j]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).abs());
        }
    }
    worst
}

/// Inverse of [`quat_to_rotmat`] up to sign. The largest of
/// `w², x², y², z²` is recovered from the diagonal first (Shepperd's
/// method) so the division below never hits a small pivot.
pub fn rotmat_to_quat(m: &Mat3) -> Result<Quaternion> {
    if m.iter().flatten().any(|v| !v.is_finite())
        || orthogonality_error(m) > ROTATION_TOL
        || (determinant(m) - 1.0).abs() > ROTATION_TOL
    {
        return Err(Error::invalid("matrix is not a rotation"));
    }
    let trace = m[0][0] + m[1][1] + m[2][2];
    let candidates = [trace, m[0][0], m[1][1], m[2][2]];
    let pivot = (0..4)
        .max_by(|&a, &b| candidates[a].partial_cmp(&candidates[b]).unwrap())
        .unwrap();
    let q = match pivot {
        0 => {
            let s = 2.0 * (1.0 + trace).sqrt();
            [
                0.25 * s,
                (m[2][1] - m[1][2]) / s,
                (m[0][2] - m[2][0]) / s,
                (m[1][0] - m[0][1]) / s,
            ]
        }
        1 => {
            let s = 2.0 * (1.0 + m[0][0] - m[1][1] - m[2][2]).sqrt();
            [
                (m[2][1] - m[1][2]) / s,
                0.25 * s,
                (m[0][1] + m[1][0]) / s,
                (m[0][2] + m[2][0]) / s,
            ]
        }
        2 => {
            let s = 2.0 * (1.0 - m[0][0] + m[1][1] - m[2][2]).sqrt();
            [
                (m[0][2] - m[2][0]) / s,
                (m[0][1] + m[1][0]) / s,
                0.25 * s,
                (m[1][2] + m[2][1]) / s,
            ]
        }
        _ => {
            let s = 2.0 * (1.0 - m[0][0] - m[1][1] + m[2][2]).sqrt();
            [
                (m[1][0] - m[0][1]) / s,
                (m[0][2] + m[2][0]) / s,
                (m[1][2] + m[2][1]) / s,
                0.25 * s,
            ]
        }
    };
    let r = norm(&q);
    Ok(Quaternion(q.map(|c| c / r)).canonical())
}

/// Sign-invariant mean squared error on unit quaternions,
/// `(1/N) Σ min(|x_n − r_n|², |x_n + r_n|²)`.
pub fn so3_error(x: &Signal, reference: &Signal) -> Result<f64> {
    x.check_same_shape(reference)?;
    if x.dim() != 4 {
        return Err(Error::invalid("so3_error needs d = 4"));
    }
    let total: f64 = x
        .vertices()
        .zip(reference.vertices())
        .map(|(a, b)| {
            let minus: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
            let plus: f64 = a.iter().zip(b).map(|(p, q)| (p + q) * (p + q)).sum();
            minus.min(plus)
        })
        .sum();
    Ok(total / x.len() as f64)
}
