use hetcov::rng::{splitmix64, stream_rng, Stream};
use hetcov::solver::oracle::oracle_solve;
use hetcov::solver::{init_weights, objective, solve_weights};
use hetcov::SolverParams;
use ndarray::Array2;
use rand::Rng;

fn gen_instance(seed: u64, n_max: usize, e_max: usize) -> (Array2<u8>, Array2<f64>) {
    let mut rng = stream_rng(seed, Stream::Capabilities);
    let n = rng.gen_range(1..=n_max);
    let e = rng.gen_range(1..=e_max);
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
    (caps, s)
}

fn qual_gammas(seed: u64, n: usize, e: usize) -> (f64, f64) {
    // gammas are drawn from the same rng stream, after caps and s
    let mut rng = stream_rng(seed, Stream::Capabilities);
    let _n = rng.gen_range(1..=3usize);
    let _e = rng.gen_range(1..=3usize);
    for _ in 0..n {
        let _bits = rng.gen_range(1..(1u64 << e));
    }
    for _ in 0..(n * e) {
        let _v: f64 = rng.gen_range(0.0..=10.0);
    }
    let gammas = [0.0, 0.5, 2.0];
    let g1 = gammas[rng.gen_range(0..3)];
    let g2 = gammas[rng.gen_range(0..3)];
    (g1, g2)
}

fn drift_g1(seed: u64, n: usize, e: usize) -> f64 {
    let mut rng = stream_rng(seed, Stream::Capabilities);
    let _n = rng.gen_range(1..=20usize);
    let _e = rng.gen_range(1..=6usize);
    for _ in 0..n {
        let _bits = rng.gen_range(1..(1u64 << e));
    }
    for _ in 0..(n * e) {
        let _v: f64 = rng.gen_range(0.0..=10.0);
    }
    rng.gen_range(0.0..=5.0)
}

fn main() {
    let params = SolverParams::default();
    let args: Vec<String> = std::env::args().collect();

    // replay one instance with solver tracing: `debug_quality drift 7`
    if args.len() == 3 {
        std::env::set_var("HETCOV_TRACE_SOLVE", "1");
        let t: u64 = args[2].parse().unwrap();
        match args[1].as_str() {
            "qual" => {
                let seed = splitmix64(t ^ 0xabcd);
                let (caps, s) = gen_instance(seed, 3, 3);
                let (n, e) = caps.dim();
                let (g1, g2) = qual_gammas(seed, n, e);
                println!("t={t} n={n} e={e} g1={g1} g2={g2}\ncaps={caps:?}\ns={s:.3?}");
                let w_prev = init_weights(&caps).unwrap();
                let out = solve_weights(&s, &w_prev, &caps, &params, g1, g2);
                println!("result: {out:?}");
            }
            "drift" => {
                let seed = splitmix64(t ^ 0x77aa);
                let (caps, s) = gen_instance(seed, 20, 6);
                let (n, e) = caps.dim();
                let g1 = drift_g1(seed, n, e);
                println!("t={t} n={n} e={e} g1={g1}");
                let w_prev = init_weights(&caps).unwrap();
                println!("--- gamma2 = 0 ---");
                let loose = solve_weights(&s, &w_prev, &caps, &params, g1, 0.0);
                println!(
                    "loose: {:?}",
                    loose.map(|o| (o.converged, o.iterations, o.final_change))
                );
                println!("--- gamma2 = 10 ---");
                let tight = solve_weights(&s, &w_prev, &caps, &params, g1, 10.0);
                println!(
                    "tight: {:?}",
                    tight.map(|o| (o.converged, o.iterations, o.final_change))
                );
            }
            other => eprintln!("unknown mode {other}"),
        }
        return;
    }

    // --- oracle-ratio rehearsal: small instances, grid reference ---
    let mut ratios = Vec::new();
    let mut zero_ratios = Vec::new();
    for t in 0..50u64 {
        let seed = splitmix64(t ^ 0xabcd);
        let (caps, s) = gen_instance(seed, 3, 3);
        let (n, e) = caps.dim();
        let (g1, g2) = qual_gammas(seed, n, e);
        let w_prev = init_weights(&caps).unwrap();

        let out = match solve_weights(&s, &w_prev, &caps, &params, g1, g2) {
            Ok(out) => out,
            Err(err) => {
                println!("ERROR t={t} n={n} e={e} g1={g1} g2={g2}: {err}");
                continue;
            }
        };
        let alm_obj = objective(&out.weights.values, &s, &w_prev.values, g1, g2);
        let oracle = oracle_solve(&s, &w_prev, &caps, g1, g2, 0.02, 1e8).unwrap();
        let oracle_obj = objective(&oracle.values, &s, &w_prev.values, g1, g2);
        let ratio = if oracle_obj.abs() < 1e-12 {
            1.0
        } else {
            alm_obj / oracle_obj
        };
        if ratio < 0.90 {
            println!(
                "LOW t={t} n={n} e={e} g1={g1} g2={g2} ratio={ratio:.4} alm={alm_obj:.4} oracle={oracle_obj:.4}"
            );
        }
        if g1 == 0.0 && g2 == 0.0 {
            zero_ratios.push(ratio);
        }
        ratios.push(ratio);
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    println!(
        "oracle ratios: mean={mean:.4} min={min:.4} zero-gamma count={} min={:.4}",
        zero_ratios.len(),
        zero_ratios.iter().cloned().fold(f64::INFINITY, f64::min)
    );

    // --- drift monotonicity rehearsal: strong consistency penalty moves less ---
    let mut violations = 0usize;
    let mut errors = 0usize;
    let mut max_gap = f64::NEG_INFINITY;
    for t in 0..50u64 {
        let seed = splitmix64(t ^ 0x77aa);
        let (caps, s) = gen_instance(seed, 20, 6);
        let (n, e) = caps.dim();
        let g1 = drift_g1(seed, n, e);
        let w_prev = init_weights(&caps).unwrap();

        let loose = match solve_weights(&s, &w_prev, &caps, &params, g1, 0.0) {
            Ok(out) => out,
            Err(err) => {
                println!("ERROR(drift loose) t={t} n={n} e={e} g1={g1:.3}: {err}");
                errors += 1;
                continue;
            }
        };
        let tight = match solve_weights(&s, &w_prev, &caps, &params, g1, 10.0) {
            Ok(out) => out,
            Err(err) => {
                println!("ERROR(drift tight) t={t} n={n} e={e} g1={g1:.3}: {err}");
                errors += 1;
                continue;
            }
        };
        let dist = |w: &Array2<f64>| {
            w.iter()
                .zip(w_prev.values.iter())
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        };
        let d_loose = dist(&loose.weights.values);
        let d_tight = dist(&tight.weights.values);
        max_gap = max_gap.max(d_tight - d_loose);
        if d_tight > d_loose {
            violations += 1;
            println!(
                "DRIFT t={t} n={n} e={e} g1={g1:.3}: tight={d_tight:.6} loose={d_loose:.6}"
            );
        }
    }
    println!("drift monotonicity: violations={violations}/50 errors={errors} max_gap={max_gap:.3e}");
}
