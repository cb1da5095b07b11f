use hetcov::domain::SolverParams;
use hetcov::rng::{splitmix64, stream_rng, Stream};
use hetcov::solver::{init_weights, solve_weights};
use ndarray::Array2;
use rand::Rng;
use std::time::Instant;

fn main() {
    let params = SolverParams::default();
    if let Some(t) = std::env::args().nth(1).and_then(|a| a.parse::<u64>().ok()) {
        std::env::set_var("HETCOV_TRACE_SOLVE", "1");
        replay(t, &params);
        return;
    }
    let mut converged = 0usize;
    let mut errors = 0usize;
    let mut infeasible = 0usize;
    let mut max_iters = 0usize;
    let mut iter_hist = [0usize; 5]; // <50, <100, <150, <200, =200
    let mut skips = 0usize;
    let start = Instant::now();

    for t in 0..1000u64 {
        let mut rng = stream_rng(splitmix64(t), Stream::Capabilities);
        let n = rng.gen_range(1..=20);
        let e = rng.gen_range(1..=6);
        let mut caps = Array2::<u8>::zeros((n, e));
        for i in 0..n {
            let bits = rng.gen_range(1..(1u64 << e));
            for j in 0..e {
                caps[[i, j]] = ((bits >> j) & 1) as u8;
            }
        }
        let mut s = Array2::<f64>::zeros((n, e));
        for i in 0..n {
            for j in 0..e {
                let draw = rng.gen_range(0.0..=10.0);
                if caps[[i, j]] == 1 {
                    s[[i, j]] = draw;
                }
            }
        }
        let g1: f64 = rng.gen_range(0.0..=5.0);
        let g2: f64 = rng.gen_range(0.0..=5.0);
        let w_prev = init_weights(&caps).unwrap();

        match solve_weights(&s, &w_prev, &caps, &params, g1, g2) {
            Ok(out) => {
                if out.converged {
                    converged += 1;
                }
                skips += out.singular_skips;
                max_iters = max_iters.max(out.iterations);
                let bucket = (out.iterations / 50).min(4);
                iter_hist[bucket] += 1;
                if !out.weights.is_feasible(&caps, 1e-6) {
                    infeasible += 1;
                    println!(
                        "INFEASIBLE t={t} n={n} e={e} g1={g1:.3} g2={g2:.3} rowsums={:?}",
                        out.weights.row_sums()
                    );
                }
                if !out.converged {
                    println!(
                        "UNCONVERGED t={t} n={n} e={e} g1={g1:.3} g2={g2:.3} change={:.3e} iters={}",
                        out.final_change, out.iterations
                    );
                }
            }
            Err(err) => {
                errors += 1;
                println!("ERROR t={t} n={n} e={e} g1={g1:.3} g2={g2:.3}: {err}");
            }
        }
    }

    println!(
        "converged {converged}/1000, errors {errors}, infeasible {infeasible}, max_iters {max_iters}, hist {iter_hist:?}, skips {skips}, elapsed {:?}",
        start.elapsed()
    );
}

fn replay(t: u64, params: &SolverParams) {
    let mut rng = stream_rng(splitmix64(t), Stream::Capabilities);
    let n = rng.gen_range(1..=20);
    let e = rng.gen_range(1..=6);
    let mut caps = Array2::<u8>::zeros((n, e));
    for i in 0..n {
        let bits = rng.gen_range(1..(1u64 << e));
        for j in 0..e {
            caps[[i, j]] = ((bits >> j) & 1) as u8;
        }
    }
    let mut s = Array2::<f64>::zeros((n, e));
    for i in 0..n {
        for j in 0..e {
            let draw = rng.gen_range(0.0..=10.0);
            if caps[[i, j]] == 1 {
                s[[i, j]] = draw;
            }
        }
    }
    let g1: f64 = rng.gen_range(0.0..=5.0);
    let g2: f64 = rng.gen_range(0.0..=5.0);
    let w_prev = init_weights(&caps).unwrap();
    println!("replay t={t}: n={n} e={e} g1={g1:.4} g2={g2:.4}");
    match solve_weights(&s, &w_prev, &caps, params, g1, g2) {
        Ok(out) => println!(
            "converged={} iters={} change={:.3e} rowsums={:?}",
            out.converged,
            out.iterations,
            out.final_change,
            out.weights.row_sums()
        ),
        Err(err) => println!("error: {err}"),
    }
}
