//! Vertex-valued signals `x = (x_n)`, one `d`-vector per vertex, together
//! with the ball/sphere projections, level-set rounding and error metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack used when deciding whether a vector lies inside the unit ball.
/// A vector rescaled to unit length lands within a few ulps of 1, so this
/// keeps [`Signal::project_ball`] idempotent.
const BALL_SLACK: f64 = 4.0 * f64::EPSILON;

pub const BALL_FEASIBLE_TOL: f64 = 1e-12;
pub const SPHERE_VALUED_TOL: f64 = 1e-9;

/// A `d × N` array of finite reals stored vertex-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    dim: usize,
    values: Vec<f64>,
}

impl Signal {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("signal dimension must be positive"));
        }
        if values.is_empty() || !values.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "{} values do not form a whole number of {dim}-vectors",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value at vertex {}",
                i / dim
            )));
        }
        Ok(Self { dim, values })
    }

    pub fn zeros(dim: usize, len: usize) -> Self {
        assert!(dim > 0 && len > 0, "empty signal");
        Self {
            dim,
            values: vec![0.0; dim * len],
        }
    }

    /// Builds a signal from per-vertex vectors of equal length.
    pub fn from_vertices<I, V>(vertices: I) -> Result<Self>
    where
        I: IntoIterator<Item = V>,
        V: AsRef<[f64]>,
    {
        let mut dim = None;
        let mut values = Vec::new();
        for v in vertices {
            let v = v.as_ref();
            match dim {
                None => dim = Some(v.len()),
                Some(d) if d != v.len() => {
                    return Err(Error::invalid("vertices have differing dimensions"))
                }
                _ => {}
            }
            values.extend_from_slice(v);
        }
        Self::new(dim.unwrap_or(0), values)
    }

    /// Scalar (`d = 1`) signal.
    pub fn scalar(values: Vec<f64>) -> Result<Self> {
        Self::new(1, values)
    }

    pub(crate) fn from_raw(dim: usize, values: Vec<f64>) -> Self {
        debug_assert!(values.len().is_multiple_of(dim));
        Self { dim, values }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of vertices `N`.
    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn vertex(&self, n: usize) -> &[f64] {
        &self.values[n * self.dim..(n + 1) * self.dim]
    }

    pub fn vertex_mut(&mut self, n: usize) -> &mut [f64] {
        &mut self.values[n * self.dim..(n + 1) * self.dim]
    }

    pub fn vertices(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.dim)
    }

    pub fn vertices_mut(&mut self) -> std::slice::ChunksExactMut<'_, f64> {
        self.values.chunks_exact_mut(self.dim)
    }

    /// Copy of the `k`-th coordinate slice `(x_n[k])_n`.
    pub fn coordinate(&self, k: usize) -> Vec<f64> {
        assert!(k < self.dim);
        self.vertices().map(|v| v[k]).collect()
    }

    pub fn set_coordinate(&mut self, k: usize, slice: &[f64]) {
        assert!(k < self.dim);
        assert_eq!(slice.len(), self.len());
        for (v, &s) in self.vertices_mut().zip(slice) {
            v[k] = s;
        }
    }

    pub fn norms(&self) -> Vec<f64> {
        self.vertices().map(norm).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn is_ball_feasible(&self) -> bool {
        self.vertices().all(|v| norm(v) <= 1.0 + BALL_FEASIBLE_TOL)
    }

    pub fn is_sphere_valued(&self) -> bool {
        self.vertices()
            .all(|v| (norm(v) - 1.0).abs() <= SPHERE_VALUED_TOL)
    }

    /// Every entry is exactly `-1` or `+1` (only meaningful for `d = 1`).
    pub fn is_binary(&self) -> bool {
        self.values.iter().all(|&v| v == 1.0 || v == -1.0)
    }

    pub(crate) fn check_same_shape(&self, other: &Signal) -> Result<()> {
        if self.dim != other.dim || self.len() != other.len() {
            return Err(Error::invalid(format!(
                "shape mismatch: {}x{} vs {}x{}",
                self.dim,
                self.len(),
                other.dim,
                other.len()
            )));
        }
        Ok(())
    }

    /// Orthogonal projection onto the product of unit balls, `v / max(1, |v|)`.
    pub fn project_ball(&self) -> Result<Signal> {
        if !self.is_finite() {
            return Err(Error::invalid("non-finite signal"));
        }
        let mut out = self.clone();
        project_ball_in_place(&mut out.values, self.dim);
        Ok(out)
    }

    /// Normalizes every vertex to unit length. Zero vectors are rejected
    /// because the projection is not unique there.
    pub fn project_sphere(&self) -> Result<Signal> {
        let zeros: Vec<usize> = self
            .vertices()
            .enumerate()
            .filter(|(_, v)| v.iter().all(|&c| c == 0.0))
            .map(|(n, _)| n)
            .collect();
        if !zeros.is_empty() {
            return Err(Error::DegenerateProjection { vertices: zeros });
        }
        let mut out = self.clone();
        for v in out.vertices_mut() {
            let r = norm(v);
            v.iter_mut().for_each(|c| *c /= r);
        }
        Ok(out)
    }

    /// Level-set rounding `χ_η`: `+1` where `x_n > η`, `-1` where `x_n ≤ η`.
    pub fn characteristic(&self, eta: f64) -> Result<Signal> {
        if self.dim != 1 {
            return Err(Error::invalid(format!(
                "characteristic needs d = 1, got d = {}",
                self.dim
            )));
        }
        if !(-1.0..=1.0).contains(&eta) {
            return Err(Error::invalid(format!("level {eta} outside [-1, 1]")));
        }
        Ok(Signal::from_raw(
            1,
            self.values.iter().map(|&v| threshold(v, eta)).collect(),
        ))
    }
}

#[inline]
pub(crate) fn threshold(v: f64, eta: f64) -> f64 {
    if v > eta {
        1.0
    } else {
        -1.0
    }
}

#[inline]
pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

pub(crate) fn project_ball_in_place(values: &mut [f64], dim: usize) {
    for v in values.chunks_exact_mut(dim) {
        let r = norm(v);
        if r > 1.0 + BALL_SLACK {
            v.iter_mut().for_each(|c| *c /= r);
        }
    }
}

/// `(1/N) Σ_n |x_n − ref_n|²`.
pub fn mse(x: &Signal, reference: &Signal) -> Result<f64> {
    x.check_same_shape(reference)?;
    let total: f64 = x
        .vertices()
        .zip(reference.vertices())
        .map(|(a, b)| a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>())
        .sum();
    Ok(total / x.len() as f64)
}

/// Alternative normalization `(1/(dN)) Σ_n |x_n − ref_n|²`.
pub fn mse_per_entry(x: &Signal, reference: &Signal) -> Result<f64> {
    Ok(mse(x, reference)? / x.dim() as f64)
}

/// Fraction of vertices whose sign agrees with the reference.
pub fn miou(x: &Signal, reference: &Signal) -> Result<f64> {
    x.check_same_shape(reference)?;
    if x.dim() != 1 || !x.is_binary() || !reference.is_binary() {
        return Err(Error::invalid("miou needs binary (±1) scalar signals"));
    }
    let hits = x
        .as_slice()
        .iter()
        .zip(reference.as_slice())
        .filter(|(a, b)| a == b)
        .count();
    Ok(hits as f64 / x.len() as f64)
}

/// Mean absolute deviation of the vertex norms from 1.
pub fn sphere_distance(x: &Signal) -> f64 {
    x.vertices().map(|v| (norm(v) - 1.0).abs()).sum::<f64>() / x.len() as f64
}

/// One row of a benchmark table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub mse: f64,
    pub miou: Option<f64>,
    pub sphere_distance: f64,
    pub wall_time_sec: f64,
    pub lambda: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn vec_signal(dim: usize, v: &[f64]) -> Signal {
        Signal::new(dim, v.to_vec()).unwrap()
    }

    #[test]
    fn rejects_malformed() {
        assert!(Signal::new(0, vec![1.0]).is_err());
        assert!(Signal::new(2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(Signal::new(1, vec![f64::NAN]).is_err());
        assert!(Signal::new(1, vec![]).is_err());
    }

    #[test]
    fn project_ball_examples() {
        let p = vec_signal(2, &[3.0, 4.0]).project_ball().unwrap();
        assert!((p.as_slice()[0] - 0.6).abs() < 1e-15);
        assert!((p.as_slice()[1] - 0.8).abs() < 1e-15);
        let p = vec_signal(2, &[0.3, -0.4]).project_ball().unwrap();
        assert_eq!(p.as_slice(), &[0.3, -0.4]);
        let p = vec_signal(3, &[0.0; 3]).project_ball().unwrap();
        assert_eq!(p.as_slice(), &[0.0; 3]);
        assert!(p.is_ball_feasible());
    }

    #[test]
    fn project_sphere_examples() {
        let p = vec_signal(2, &[3.0, 4.0]).project_sphere().unwrap();
        assert!((p.as_slice()[0] - 0.6).abs() < 1e-15);
        assert_eq!(vec_signal(1, &[-0.2]).project_sphere().unwrap().as_slice(), &[-1.0]);
        match vec_signal(2, &[1.0, 0.0, 0.0, 0.0]).project_sphere() {
            Err(Error::DegenerateProjection { vertices }) => assert_eq!(vertices, vec![1]),
            other => panic!("expected degenerate projection, got {other:?}"),
        }
    }

    #[test]
    fn characteristic_examples() {
        let x = vec_signal(1, &[0.2, -0.2]);
        assert_eq!(x.characteristic(0.0).unwrap().as_slice(), &[1.0, -1.0]);
        assert_eq!(vec_signal(1, &[0.0]).characteristic(0.0).unwrap().as_slice(), &[-1.0]);
        assert_eq!(
            vec_signal(1, &[0.5, 0.5]).characteristic(0.5).unwrap().as_slice(),
            &[-1.0, -1.0]
        );
        assert!(vec_signal(2, &[0.1, 0.2]).characteristic(0.0).is_err());
    }

    #[test]
    fn mse_examples() {
        let x = vec_signal(1, &[1.0, -1.0]);
        assert_eq!(mse(&x, &x).unwrap(), 0.0);
        let r = vec_signal(1, &[-1.0, -1.0]);
        assert_eq!(mse(&x, &r).unwrap(), 2.0);
        assert!(mse(&x, &vec_signal(2, &[1.0, 1.0])).is_err());
    }

    #[test]
    fn mse_matches_naive_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (d, n) = (3, 57);
        let a: Vec<f64> = (0..d * n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let b: Vec<f64> = (0..d * n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mut naive = 0.0;
        for i in 0..n {
            for k in 0..d {
                let diff = a[i * d + k] - b[i * d + k];
                naive += diff * diff;
            }
        }
        naive /= n as f64;
        let got = mse(&vec_signal(d, &a), &vec_signal(d, &b)).unwrap();
        assert!((got - naive).abs() <= 1e-12);
        let per_entry = mse_per_entry(&vec_signal(d, &a), &vec_signal(d, &b)).unwrap();
        assert!((per_entry * 3.0 - naive).abs() <= 1e-12);
    }

    #[test]
    fn miou_examples() {
        let x = vec_signal(1, &[1.0, -1.0, 1.0, 1.0]);
        assert_eq!(miou(&x, &x).unwrap(), 1.0);
        let flipped = vec_signal(1, &[-1.0, 1.0, -1.0, -1.0]);
        assert_eq!(miou(&x, &flipped).unwrap(), 0.0);
        let one_off = vec_signal(1, &[1.0, -1.0, 1.0, -1.0]);
        assert_eq!(miou(&x, &one_off).unwrap(), 0.75);
        assert!(miou(&x, &vec_signal(1, &[0.5, -1.0, 1.0, 1.0])).is_err());
    }

    #[test]
    fn sphere_distance_examples() {
        assert_eq!(sphere_distance(&vec_signal(2, &[0.6, 0.8, -1.0, 0.0])), 0.0);
        assert_eq!(sphere_distance(&vec_signal(2, &[0.0, 0.0])), 1.0);
        assert_eq!(sphere_distance(&vec_signal(1, &[0.5, -1.0])), 0.25);
    }

    fn signal_strategy() -> impl Strategy<Value = Signal> {
        (1usize..5, 1usize..20).prop_flat_map(|(d, n)| {
            prop::collection::vec(-3.0f64..3.0, d * n).prop_map(move |v| Signal::new(d, v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn project_ball_idempotent(x in signal_strategy()) {
            let once = x.project_ball().unwrap();
            let twice = once.project_ball().unwrap();
            prop_assert_eq!(once.as_slice(), twice.as_slice());
            prop_assert!(once.is_ball_feasible());
        }

        #[test]
        fn characteristic_is_a_fixed_point(x in signal_strategy(), eta in -0.999f64..0.999) {
            let x = Signal::scalar(x.into_vec()).unwrap();
            let once = x.characteristic(eta).unwrap();
            let twice = once.characteristic(eta).unwrap();
            prop_assert_eq!(once.as_slice(), twice.as_slice());
        }

        #[test]
        fn mse_zero_iff_equal(x in signal_strategy(), bump in 0usize..1000) {
            prop_assert_eq!(mse(&x, &x).unwrap(), 0.0);
            let mut y = x.clone();
            let i = bump % y.as_slice().len();
            y.as_mut_slice()[i] += 0.5;
            prop_assert!(mse(&x, &y).unwrap() > 0.0);
        }
    }

    #[test]
    fn project_ball_is_closest_ball_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in 1..=4 {
            let x = Signal::new(d, (0..d * 8).map(|_| rng.random_range(-3.0..3.0)).collect())
                .unwrap();
            let p = x.project_ball().unwrap();
            for n in 0..x.len() {
                let dist_p = norm(
                    &p.vertex(n).iter().zip(x.vertex(n)).map(|(a, b)| a - b).collect::<Vec<_>>(),
                );
                for _ in 0..1000 {
                    // random point in the ball: random direction times radius
                    let mut v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let r = norm(&v);
                    if r > 1.0 {
                        v.iter_mut().for_each(|c| *c /= r);
                    }
                    let dist_v = norm(
                        &v.iter().zip(x.vertex(n)).map(|(a, b)| a - b).collect::<Vec<_>>(),
                    );
                    assert!(dist_p <= dist_v + 1e-12);
                }
            }
        }
    }
}
