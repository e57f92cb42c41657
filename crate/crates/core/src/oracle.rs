//! Certification tools for the binary (`d = 1`) case: exhaustive search over
//! sign patterns, the coarea identity, and the level-set averaging identity
//! `K(x) = ½ ∫_{−1}^{1} K(χ_η(x)) dη` that makes the ball relaxation tight.
//!
//! Both integrals have piecewise-constant integrands, so they are evaluated
//! exactly by summing over the intervals between breakpoints.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admm::{objective_k, objective_original};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::signal::{threshold, Signal};

pub const MAX_BRUTE_FORCE_VERTICES: usize = 24;
pub const ATTAINED_TOL: f64 = 1e-7;
pub const AVERAGING_TOL: f64 = 1e-9;

/// Binary signal for the `index`-th pattern in lexicographic order, vertex 0
/// most significant, `-1` before `+1`.
fn pattern(index: u64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|v| if index >> (n - 1 - v) & 1 == 1 { 1.0 } else { -1.0 })
        .collect()
}

/// Exhaustive minimizer of `½Σ(x_n − y_n)² + λ·TV(x)` over `x ∈ {−1, 1}^N`.
/// Ties go to the lexicographically smallest pattern.
pub fn brute_force_binary(y: &Signal, graph: &Graph, lambda: f64) -> Result<(Signal, f64)> {
    if y.dim() != 1 {
        return Err(Error::invalid("brute force needs d = 1"));
    }
    let n = y.len();
    if n != graph.num_vertices() {
        return Err(Error::invalid("data length does not match graph"));
    }
    if n > MAX_BRUTE_FORCE_VERTICES {
        return Err(Error::ResourceLimit(format!(
            "brute force limited to {MAX_BRUTE_FORCE_VERTICES} vertices, got {n}"
        )));
    }
    let data = y.as_slice();
    let cost_plus: Vec<f64> = data.iter().map(|v| 0.5 * (1.0 - v) * (1.0 - v)).collect();
    let cost_minus: Vec<f64> = data.iter().map(|v| 0.5 * (-1.0 - v) * (-1.0 - v)).collect();
    let shifts: Vec<u32> = (0..n).map(|v| (n - 1 - v) as u32).collect();
    let edges: Vec<(u32, u32)> = graph
        .edges()
        .iter()
        .map(|&(a, b)| (shifts[a], shifts[b]))
        .collect();
    let jump = 2.0 * lambda;

    let evaluate = |index: u64| -> f64 {
        let mut value = 0.0;
        for v in 0..n {
            value += if index >> shifts[v] & 1 == 1 {
                cost_plus[v]
            } else {
                cost_minus[v]
            };
        }
        for &(a, b) in &edges {
            if (index >> a ^ index >> b) & 1 == 1 {
                value += jump;
            }
        }
        value
    };

    let total: u64 = 1 << n;
    let chunk = (total / 64).max(1 << 10);
    let (best_value, best_index) = (0..total.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut best = (f64::INFINITY, u64::MAX);
            for index in c * chunk..((c + 1) * chunk).min(total) {
                let value = evaluate(index);
                if value < best.0 {
                    best = (value, index);
                }
            }
            best
        })
        .reduce(
            || (f64::INFINITY, u64::MAX),
            |a, b| {
                if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );
    Ok((Signal::from_raw(1, pattern(best_index, n)), best_value))
}

/// Breakpoints of a piecewise-constant integrand on `[−1, 1]`: the clamped
/// values, sorted and deduplicated, framed by the interval ends.
fn breakpoints(values: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut points: Vec<f64> = values
        .into_iter()
        .map(|v| v.clamp(-1.0, 1.0))
        .chain([-1.0, 1.0])
        .collect();
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    points.dedup();
    points
}

/// Returns `(|a − b|, ½∫_{−1}^{1} |χ_η(a) − χ_η(b)| dη)`, the integral taken
/// exactly over the pieces between the breakpoints.
pub fn coarea_check(a: f64, b: f64) -> Result<(f64, f64)> {
    let range = -1.0..=1.0;
    if !range.contains(&a) || !range.contains(&b) {
        return Err(Error::invalid(format!("({a}, {b}) outside [-1, 1]")));
    }
    let lhs = (a - b).abs();
    let points = breakpoints([a, b]);
    let mut integral = 0.0;
    for w in points.windows(2) {
        let eta = 0.5 * (w[0] + w[1]);
        integral += (threshold(a, eta) - threshold(b, eta)).abs() * (w[1] - w[0]);
    }
    Ok((lhs, 0.5 * integral))
}

/// `½ ∫_{−1}^{1} K(χ_η(x)) dη` for a scalar signal, integrated exactly.
pub fn level_set_average_k(x: &Signal, y: &Signal, graph: &Graph, lambda: f64) -> Result<f64> {
    if x.dim() != 1 {
        return Err(Error::invalid("level-set average needs d = 1"));
    }
    let points = breakpoints(x.as_slice().iter().copied());
    let mut integral = 0.0;
    for w in points.windows(2) {
        let eta = 0.5 * (w[0] + w[1]);
        let rounded = x.characteristic(eta)?;
        integral += objective_k(&rounded, y, graph, lambda)? * (w[1] - w[0]);
    }
    Ok(0.5 * integral)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightnessReport {
    /// `K` of the relaxed solution.
    pub relaxed_value: f64,
    /// Optimum of the original objective over all sign patterns.
    pub brute_force_value: f64,
    /// Best original objective among the rounded candidates `χ_η(relaxed)`.
    pub best_binary_value: f64,
    pub eta_used: Vec<f64>,
    /// Original objective of `χ_η(relaxed)`, one entry per level in `eta_used`.
    pub rounded_values: Vec<f64>,
    pub attained: bool,
    pub gap: f64,
    pub averaging_lhs: f64,
    pub averaging_rhs: f64,
    pub averaging_holds: bool,
}

/// Rounds `relaxed` at level 0 and at every level in `etas`, and compares the
/// best rounded objective with the exhaustive optimum.
pub fn verify_tightness(
    y: &Signal,
    graph: &Graph,
    lambda: f64,
    relaxed: &Signal,
    etas: &[f64],
) -> Result<TightnessReport> {
    if relaxed.dim() != 1 || y.dim() != 1 {
        return Err(Error::invalid("tightness certification needs d = 1"));
    }
    if !relaxed.is_ball_feasible() {
        return Err(Error::invalid("relaxed signal is not ball-feasible"));
    }
    relaxed.check_same_shape(y)?;
    let (_, brute_force_value) = brute_force_binary(y, graph, lambda)?;

    let mut eta_used = vec![0.0];
    eta_used.extend(etas.iter().copied().filter(|&e| e != 0.0));
    let rounded_values = eta_used
        .iter()
        .map(|&eta| objective_original(&relaxed.characteristic(eta)?, y, graph, lambda))
        .collect::<Result<Vec<_>>>()?;
    let best_binary_value = rounded_values.iter().copied().fold(f64::INFINITY, f64::min);

    let averaging_lhs = objective_k(relaxed, y, graph, lambda)?;
    let averaging_rhs = level_set_average_k(relaxed, y, graph, lambda)?;

    Ok(TightnessReport {
        relaxed_value: averaging_lhs,
        brute_force_value,
        best_binary_value,
        eta_used,
        rounded_values,
        attained: best_binary_value <= brute_force_value + ATTAINED_TOL,
        gap: best_binary_value - brute_force_value,
        averaging_lhs,
        averaging_rhs,
        averaging_holds: (averaging_lhs - averaging_rhs).abs() <= AVERAGING_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admm::original_offset;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn brute_force_single_vertex() {
        let y = Signal::scalar(vec![0.3]).unwrap();
        let (x, v) = brute_force_binary(&y, &Graph::chain(1).unwrap(), 2.0).unwrap();
        assert_eq!(x.as_slice(), &[1.0]);
        assert!((v - 0.245).abs() < 1e-15);
    }

    #[test]
    fn brute_force_huge_lambda_is_constant() {
        let y = Signal::scalar(vec![1.0, 1.0]).unwrap();
        let (x, v) = brute_force_binary(&y, &Graph::chain(2).unwrap(), 10.0).unwrap();
        assert_eq!(x.as_slice(), &[1.0, 1.0]);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn brute_force_tie_prefers_minus() {
        // y = 0 makes both constants optimal
        let y = Signal::scalar(vec![0.0, 0.0, 0.0]).unwrap();
        let (x, _) = brute_force_binary(&y, &Graph::chain(3).unwrap(), 1.0).unwrap();
        assert_eq!(x.as_slice(), &[-1.0, -1.0, -1.0]);
    }

    /// Second enumeration: recursive, vertex order reversed.
    fn recursive_min(y: &[f64], graph: &Graph, lambda: f64) -> f64 {
        fn go(v: usize, s: &mut Vec<f64>, y: &[f64], g: &Graph, lambda: f64, best: &mut f64) {
            if v == usize::MAX {
                let x = Signal::scalar(s.clone()).unwrap();
                let yy = Signal::scalar(y.to_vec()).unwrap();
                *best = best.min(objective_original(&x, &yy, g, lambda).unwrap());
                return;
            }
            for sign in [1.0, -1.0] {
                s[v] = sign;
                go(v.wrapping_sub(1), s, y, g, lambda, best);
            }
        }
        let mut best = f64::INFINITY;
        let mut s = vec![0.0; y.len()];
        go(y.len() - 1, &mut s, y, graph, lambda, &mut best);
        best
    }

    #[test]
    fn brute_force_matches_second_enumeration() {
        let y = Signal::scalar(vec![1.0, -1.0, 1.0]).unwrap();
        let g = Graph::chain(3).unwrap();
        let (_, v) = brute_force_binary(&y, &g, 1.0).unwrap();
        assert!((v - recursive_min(y.as_slice(), &g, 1.0)).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let n = rng.random_range(1..10);
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let g = Graph::chain(n).unwrap();
            let lambda = rng.random_range(0.1..2.0);
            let (_, v) = brute_force_binary(&Signal::scalar(y.clone()).unwrap(), &g, lambda).unwrap();
            assert!((v - recursive_min(&y, &g, lambda)).abs() < 1e-12);
        }
    }

    #[test]
    fn brute_force_beats_random_binaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = Graph::grid(3, 4).unwrap();
        let y = Signal::scalar((0..12).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
        let (x, v) = brute_force_binary(&y, &g, 0.6).unwrap();
        assert!((objective_original(&x, &y, &g, 0.6).unwrap() - v).abs() < 1e-12);
        for _ in 0..1000 {
            let cand = Signal::scalar(
                (0..12).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect(),
            )
            .unwrap();
            assert!(v <= objective_original(&cand, &y, &g, 0.6).unwrap());
        }
    }

    #[test]
    fn brute_force_limits() {
        let y = Signal::scalar(vec![0.0; 25]).unwrap();
        let err = brute_force_binary(&y, &Graph::chain(25).unwrap(), 1.0).unwrap_err();
        assert!(matches!(err, Error::ResourceLimit(_)));
        let y2 = Signal::new(2, vec![0.0; 4]).unwrap();
        assert!(brute_force_binary(&y2, &Graph::chain(2).unwrap(), 1.0).is_err());
    }

    #[test]
    fn coarea_examples() {
        assert_eq!(coarea_check(0.5, 0.5).unwrap(), (0.0, 0.0));
        assert_eq!(coarea_check(1.0, -1.0).unwrap(), (2.0, 2.0));
        let (l, r) = coarea_check(0.3, -0.7).unwrap();
        assert!((l - 1.0).abs() < 1e-15 && (r - 1.0).abs() < 1e-15);
        assert!(coarea_check(1.5, 0.0).is_err());
    }

    #[test]
    fn averaging_identity_on_random_ball_signals() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = 6;
            let g = Graph::chain(n).unwrap();
            let x = Signal::scalar((0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
            let y = Signal::scalar((0..n).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
            let lhs = objective_k(&x, &y, &g, 0.9).unwrap();
            let rhs = level_set_average_k(&x, &y, &g, 0.9).unwrap();
            assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn binary_relaxed_solution_is_attained() {
        let y = Signal::scalar(vec![0.9, 1.2, -0.3, -1.1, -0.8]).unwrap();
        let g = Graph::chain(5).unwrap();
        let (best, _) = brute_force_binary(&y, &g, 0.5).unwrap();
        let report = verify_tightness(&y, &g, 0.5, &best, &[0.3, -0.6]).unwrap();
        assert!(report.attained);
        assert_eq!(report.gap, 0.0);
        assert!(report.averaging_holds);
        assert_eq!(report.eta_used.len(), 3);
        assert!(
            (report.brute_force_value - (report.relaxed_value + original_offset(&y))).abs() < 1e-12
        );
    }
}
