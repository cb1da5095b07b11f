use hetcov::domain::SolverParams;
use hetcov::rng::{splitmix64, stream_rng, Stream};
use hetcov::solver::{init_weights, solve_weights};
use ndarray::Array2;
use rand::Rng;

fn main() {
    // regenerate sweep instance t (argv[1]) and solve it with tracing
    let t: u64 = std::env::args().nth(1).unwrap().parse().unwrap();
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
    for v in s.iter_mut() {
        *v = rng.gen_range(0.0..=10.0);
    }
    let g1: f64 = rng.gen_range(0.0..=5.0);
    let g2: f64 = rng.gen_range(0.0..=5.0);
    println!("t={t} n={n} e={e} g1={g1} g2={g2}");
    println!("caps=\n{caps:?}");
    println!("s=\n{s:.3?}");

    let params = SolverParams::default();
    let w_prev = init_weights(&caps).unwrap();
    let out = solve_weights(&s, &w_prev, &caps, &params, g1, g2).unwrap();
    println!(
        "converged={} iters={} change={:.3e}",
        out.converged, out.iterations, out.final_change
    );
    println!("final W=\n{:.4?}", out.weights.values);
}
