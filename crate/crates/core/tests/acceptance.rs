//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line to
//! stderr (bypassing libtest capture) before asserting.

use std::f64::consts::SQRT_2;
use std::io::Write;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spheretv::admm::{admm_solve, original_offset, Admm, SolverConfig};
use spheretv::bench::{make_instance, run_bench, BenchSpec, Experiment, Method, SummaryRow};
use spheretv::cli::{certify_config, certify_instance, CertifyArgs};
use spheretv::colormap::so3_error;
use spheretv::graph::Graph;
use spheretv::oracle::{coarea_check, verify_tightness};
use spheretv::signal::{mse, sphere_distance, Signal};
use spheretv::synth::{sample_vmf, SeededRng};
use spheretv::tvprox::{
    chain_certificate_violation, tv_prox_1d, tv_prox_graph_dual, tv_prox_grid, tv_prox_signal, TvProxConfig,
};

fn report(id: u32, pass: bool, detail: &str) {
    let line = format!(
        "criterion {id:>2}: {} | {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn certify_args() -> CertifyArgs {
    CertifyArgs {
        n: 12,
        trials: 100,
        sigma: SQRT_2 * 0.5,
        lambda: 1.3,
        rho: 0.1,
        bar_width: 1,
        etas: 9,
        seed: 2024,
    }
}

#[test]
fn c01_rounded_relaxation_attains_binary_optimum() {
    let start = Instant::now();
    let args = certify_args();
    let graph = Graph::chain(args.n).unwrap();
    let cfg = certify_config(args.lambda, args.rho);
    let mut worst_gap = f64::NEG_INFINITY;
    let mut attained = 0;
    for i in 0..args.trials {
        let (y, etas) = certify_instance(&args, i).unwrap();
        let (u, _) = admm_solve(&y, &graph, &cfg).unwrap();
        let rep = verify_tightness(&y, &graph, args.lambda, &u, &etas).unwrap();
        worst_gap = worst_gap.max(rep.gap);
        attained += rep.attained as usize;
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = attained == args.trials && secs < 30.0;
    report(
        1,
        pass,
        &format!("{attained}/{} attained, worst gap {worst_gap:.3e} (tol 1e-7), {secs:.1} s", args.trials),
    );
    assert!(pass);
}

#[test]
fn c02_relaxed_value_equals_binary_minimum() {
    let args = certify_args();
    let graph = Graph::chain(args.n).unwrap();
    let cfg = certify_config(args.lambda, args.rho);
    let mut worst = 0.0f64;
    for i in 0..args.trials {
        let (y, etas) = certify_instance(&args, i).unwrap();
        let (u, _) = admm_solve(&y, &graph, &cfg).unwrap();
        let rep = verify_tightness(&y, &graph, args.lambda, &u, &etas).unwrap();
        let binary_min_k = rep.brute_force_value - original_offset(&y);
        worst = worst.max((rep.relaxed_value - binary_min_k).abs());
    }
    let pass = worst <= 1e-6;
    report(2, pass, &format!("max |K(relaxed) - min K(binary)| = {worst:.3e} (tol 1e-6)"));
    assert!(pass);
}

#[test]
fn c03_coarea_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let a = rng.random_range(-1.0..=1.0);
        let b = rng.random_range(-1.0..=1.0);
        let (lhs, rhs) = coarea_check(a, b).unwrap();
        worst = worst.max((lhs - rhs).abs());
    }
    let pass = worst <= 1e-12;
    report(3, pass, &format!("10000 pairs, max |lhs - rhs| = {worst:.3e} (tol 1e-12)"));
    assert!(pass);
}

#[test]
fn c04_chain_prox_cross_validation() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cfg = TvProxConfig {
        dual_tol: 1e-10,
        ..TvProxConfig::default()
    };
    let mut worst_diff = 0.0f64;
    let mut worst_cert = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(1..=50);
        let gamma = rng.random_range(0.01..=5.0);
        let z: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let direct = tv_prox_1d(&z, gamma).unwrap();
        let dual = tv_prox_graph_dual(&z, &Graph::chain(n).unwrap(), gamma, &cfg).unwrap();
        for (a, b) in direct.iter().zip(&dual) {
            worst_diff = worst_diff.max((a - b).abs());
        }
        worst_cert = worst_cert.max(chain_certificate_violation(&z, &direct, gamma));
    }
    let pass = worst_diff <= 1e-6 && worst_cert <= 1e-9;
    report(
        4,
        pass,
        &format!("200 chains, max direct/dual diff {worst_diff:.3e} (tol 1e-6), certificate {worst_cert:.3e} (tol 1e-9)"),
    );
    assert!(pass);
}

fn row(rows: &[SummaryRow], method: Method) -> &SummaryRow {
    rows.iter().find(|r| r.method == method).unwrap()
}

#[test]
fn c05_barcode_benchmark() {
    let start = Instant::now();
    let mut spec = BenchSpec::new(Experiment::Barcode);
    spec.noise = SQRT_2 * 0.7;
    spec.trials = 50;
    spec.seed = 5;
    let res = run_bench(&spec).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let a = row(&res.summary, Method::Admm);
    let miou = a.miou.unwrap();
    let mse_ok = (0.011..=0.028).contains(&a.mse);
    let pass = mse_ok && miou >= 0.92 && a.sphere_distance < 1e-5 && secs < 120.0;
    report(
        5,
        pass,
        &format!(
            "MSE {:.5} (band [0.011, 0.028]: {}), MIoU {miou:.5} (>= 0.92), distance {:.2e} (< 1e-5), lambda {}, {secs:.1} s",
            a.mse,
            if mse_ok { "in" } else { "out" },
            a.sphere_distance,
            a.lambda
        ),
    );
    assert!(pass);
}

#[test]
fn c06_qrcode_benchmark() {
    let start = Instant::now();
    let mut spec = BenchSpec::new(Experiment::Qrcode);
    spec.noise = SQRT_2 * 0.5;
    spec.trials = 10;
    spec.lambda_grid = vec![0.6, 0.8, 1.0];
    spec.tol_residual = 1e-7;
    spec.seed = 6;
    let res = run_bench(&spec).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let a = row(&res.summary, Method::Admm);
    let miou = a.miou.unwrap();
    let target = 0.00036;
    let mse_ok = a.mse <= 2.5 * target && a.mse >= target / 2.5;
    let pass = mse_ok && miou >= 0.99 && a.sphere_distance < 1e-5 && secs < 600.0;
    report(
        6,
        pass,
        &format!(
            "MSE {:.5} (within 2.5x of {target}: {}), MIoU {miou:.5} (>= 0.99), distance {:.2e} (< 1e-5), lambda {}, {secs:.1} s",
            a.mse,
            if mse_ok { "yes" } else { "no" },
            a.sphere_distance,
            a.lambda
        ),
    );
    assert!(pass);
}

fn circle_check(spec: &BenchSpec) -> (bool, String) {
    let res = run_bench(spec).unwrap();
    let a = row(&res.summary, Method::Admm);
    let f = row(&res.summary, Method::FastTv);
    let pass = a.mse <= f.mse && a.sphere_distance < 1e-5 && f.sphere_distance > 1e-3;
    let detail = format!(
        "{}: ADMM MSE {:.6} (lambda {}) vs fast-TV {:.6} (lambda {}), ADMM distance {:.2e}, fast-TV pre-projection distance {:.2e}",
        spec.experiment, a.mse, a.lambda, f.mse, f.lambda, a.sphere_distance, f.sphere_distance
    );
    (pass, detail)
}

#[test]
fn c07_circle_valued_ordering() {
    let mut one = BenchSpec::new(Experiment::Circle1d);
    one.noise = 0.5;
    one.trials = 20;
    one.seed = 7;
    let mut two = BenchSpec::new(Experiment::Circle2d);
    two.noise = 10.0;
    two.trials = 5;
    two.lambda_grid = (2..=14).map(|k| k as f64 * 0.05).collect();
    two.seed = 7;
    let (p1, d1) = circle_check(&one);
    let (p2, d2) = circle_check(&two);
    report(7, p1 && p2, &format!("{d1}; {d2}"));
    assert!(p1 && p2);
}

#[test]
fn c08_first_iterate_is_fast_tv() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cases = vec![
        (Graph::chain(40).unwrap(), 2usize),
        (Graph::grid(9, 7).unwrap(), 3),
        (Graph::general(5, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4)]).unwrap(), 1),
    ];
    let mut all = true;
    for (graph, dim) in &cases {
        let n = graph.num_vertices();
        let y = Signal::new(*dim, (0..dim * n).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
        let lambda = 0.7;
        let mut admm = Admm::new(&y, graph, SolverConfig::new(lambda, 1.0)).unwrap();
        admm.step().unwrap();
        let direct = tv_prox_signal(&y, graph, lambda, &TvProxConfig::default()).unwrap();
        let same = admm
            .x()
            .as_slice()
            .iter()
            .zip(direct.as_slice())
            .all(|(a, b)| a.to_bits() == b.to_bits());
        all &= same;
    }
    report(8, all, "chain d=2, grid d=3, general d=1: first x-iterate bitwise equal to the TV prox of y");
    assert!(all);
}

#[test]
fn c09_chromaticity_and_rotations() {
    let mut chroma = BenchSpec::new(Experiment::Chromaticity);
    chroma.noise = 200.0;
    chroma.size = 64;
    chroma.seed = 9;
    let inst = make_instance(&chroma, 0).unwrap();
    let mut cfg = SolverConfig::new(0.06, 100.0);
    cfg.tol_sphere = 1e-4;
    let (u, rep) = admm_solve(&inst.noisy, &inst.graph, &cfg).unwrap();
    let noisy_mse = mse(&inst.noisy, &inst.truth).unwrap();
    let out_mse = mse(&u, &inst.truth).unwrap();
    let chroma_ok = rep.final_sphere_distance < 1e-4 && out_mse * 5.0 <= noisy_mse;

    let mut so3 = BenchSpec::new(Experiment::So3);
    so3.noise = 10.0;
    so3.kappa_axis = Some(10.0);
    so3.size = 90;
    so3.seed = 9;
    let inst = make_instance(&so3, 0).unwrap();
    let mut cfg = SolverConfig::new(0.10, 100.0);
    cfg.tol_sphere = 1e-4;
    let (q, qrep) = admm_solve(&inst.noisy, &inst.graph, &cfg).unwrap();
    let err = so3_error(&q, &inst.truth).unwrap();
    let so3_ok = qrep.final_sphere_distance < 1e-4 && (5.889e-4..=5.889e-2).contains(&err);

    let pass = chroma_ok && so3_ok;
    report(
        9,
        pass,
        &format!(
            "chromaticity: distance {:.2e}, MSE {out_mse:.3e} vs noisy {noisy_mse:.3e} ({:.1}x); SO(3): distance {:.2e}, so3_error {err:.3e} (range [5.889e-4, 5.889e-2])",
            rep.final_sphere_distance,
            noisy_mse / out_mse,
            qrep.final_sphere_distance
        ),
    );
    assert!(pass);
}

fn seeded_runner(seed: u8, cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32]))
}

fn vec_strategy(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-5.0f64..5.0, 1..max_len)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

#[test]
fn c10_kernel_invariants() {
    let mut failures = Vec::new();

    // prox non-expansiveness, chains
    let r = seeded_runner(1, 256).run(
        &(vec_strategy(40), 0.01f64..5.0, -2.0f64..2.0),
        |(a, gamma, offset)| {
            let b: Vec<f64> = a.iter().enumerate().map(|(i, v)| v + offset * ((i % 3) as f64 - 1.0)).collect();
            let pa = tv_prox_1d(&a, gamma).unwrap();
            let pb = tv_prox_1d(&b, gamma).unwrap();
            let lhs = norm(&pa.iter().zip(&pb).map(|(x, y)| x - y).collect::<Vec<_>>());
            let rhs = norm(&a.iter().zip(&b).map(|(x, y)| x - y).collect::<Vec<_>>());
            prop_assert!(lhs <= rhs + 1e-9);
            Ok(())
        },
    );
    if r.is_err() {
        failures.push("chain non-expansive");
    }

    // prox non-expansiveness, grids
    let r = seeded_runner(2, 64).run(
        &(2usize..6, 2usize..6, 0.05f64..2.0, any::<u64>()),
        |(rows, cols, gamma, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(-2.0..2.0)).collect();
            let b: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(-2.0..2.0)).collect();
            let cfg = TvProxConfig { dykstra_max_iter: 5000, ..TvProxConfig::default() };
            let pa = tv_prox_grid(&a, rows, cols, gamma, &cfg).unwrap();
            let pb = tv_prox_grid(&b, rows, cols, gamma, &cfg).unwrap();
            let lhs = norm(&pa.iter().zip(&pb).map(|(x, y)| x - y).collect::<Vec<_>>());
            let rhs = norm(&a.iter().zip(&b).map(|(x, y)| x - y).collect::<Vec<_>>());
            prop_assert!(lhs <= rhs + 1e-7);
            Ok(())
        },
    );
    if r.is_err() {
        failures.push("grid non-expansive");
    }

    // shift equivariance
    let r = seeded_runner(3, 256).run(&(vec_strategy(40), 0.01f64..5.0, -10.0f64..10.0), |(z, gamma, c)| {
        let shifted: Vec<f64> = z.iter().map(|v| v + c).collect();
        let p = tv_prox_1d(&z, gamma).unwrap();
        let ps = tv_prox_1d(&shifted, gamma).unwrap();
        for (a, b) in p.iter().zip(&ps) {
            prop_assert!((a + c - b).abs() <= 1e-9);
        }
        Ok(())
    });
    if r.is_err() {
        failures.push("shift equivariance");
    }

    // ball projection idempotence
    let r = seeded_runner(4, 256).run(
        &(1usize..5, proptest::collection::vec(-1e3f64..1e3, 1..60)),
        |(dim, raw)| {
            let n = raw.len() / dim;
            prop_assume!(n > 0);
            let x = Signal::new(dim, raw[..n * dim].to_vec()).unwrap();
            let once = x.project_ball().unwrap();
            let twice = once.project_ball().unwrap();
            prop_assert_eq!(once.as_slice(), twice.as_slice());
            prop_assert!(once.is_ball_feasible());
            Ok(())
        },
    );
    if r.is_err() {
        failures.push("ball projection idempotence");
    }

    // vMF: concentration and mean resultant length on S^2
    let mut rng = SeededRng::new(10);
    let mu = [0.0, 0.0, 1.0];
    let concentrated = (0..100).all(|_| {
        let xi = sample_vmf(&mu, 1e6, &mut rng).unwrap();
        norm(&[xi[0], xi[1], xi[2] - 1.0]) < 0.01
    });
    if !concentrated {
        failures.push("vMF concentration");
    }
    for kappa in [1.0, 10.0] {
        let n = 100_000;
        let mut sum = [0.0; 3];
        for _ in 0..n {
            let xi = sample_vmf(&mu, kappa, &mut rng).unwrap();
            (0..3).for_each(|k| sum[k] += xi[k]);
        }
        let expected = 1.0 / kappa.tanh() - 1.0 / kappa;
        let mean_cos = sum[2] / n as f64;
        if (mean_cos / expected - 1.0).abs() > 0.01 {
            failures.push("vMF mean resultant length");
        }
        if sum[..2].iter().any(|s| (s / n as f64).abs() > 3.0 / (n as f64).sqrt()) {
            failures.push("vMF tangent symmetry");
        }
    }

    // sphere distance of a projection is zero
    let x = Signal::new(3, (0..300).map(|i| (i as f64 * 0.37).sin() + 0.1).collect()).unwrap();
    if sphere_distance(&x.project_sphere().unwrap()) > 1e-15 {
        failures.push("sphere projection");
    }

    let pass = failures.is_empty();
    report(
        10,
        pass,
        &if pass {
            "non-expansive (chain, grid), shift equivariance, ball idempotence, vMF statistics".to_string()
        } else {
            format!("failed: {}", failures.join(", "))
        },
    );
    assert!(pass);
}
