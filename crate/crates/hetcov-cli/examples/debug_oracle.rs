// Scratch probe for oracle-check instances: runs each index separately,
// prints failures with full instance data. Not part of the deliverable.

use hetcov_cli::oracle_check::{check_instance, generate_instance};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    if args.get(1).map(String::as_str) == Some("replay") {
        let seed: u64 = args[2].parse().unwrap();
        let index: u64 = args[3].parse().unwrap();
        std::env::set_var("HETCOV_TRACE_SOLVE", "1");
        let instance = generate_instance(seed, index);
        println!(
            "replay {index}: g1={} g2={}\ncaps=\n{:?}\ns=\n{:.6?}\nw_prev=\n{:.6?}",
            instance.gamma1,
            instance.gamma2,
            instance.capabilities,
            instance.s,
            instance.w_prev.values,
        );
        match check_instance(&instance) {
            Ok(outcome) => println!(
                "ratio={:.6} solver={:.6} oracle={:.6}",
                outcome.ratio, outcome.solver_objective, outcome.oracle_objective
            ),
            Err(err) => println!("error: {err}"),
        }
        return;
    }

    let seed: u64 = std::env::args()
        .nth(1)
        .map(|s| s.parse().unwrap())
        .unwrap_or(7);
    let count: u64 = std::env::args()
        .nth(2)
        .map(|s| s.parse().unwrap())
        .unwrap_or(50);

    let mut ratios = Vec::new();
    for index in 0..count {
        let instance = generate_instance(seed, index);
        match check_instance(&instance) {
            Ok(outcome) => {
                ratios.push(outcome.ratio);
                if outcome.ratio < 0.9 {
                    println!(
                        "LOW  {index:3}: ratio={:.6} g1={} g2={}\ncaps=\n{:?}\ns=\n{:.3?}\nw_prev=\n{:.3?}",
                        outcome.ratio,
                        instance.gamma1,
                        instance.gamma2,
                        instance.capabilities,
                        instance.s,
                        instance.w_prev.values,
                    );
                }
            }
            Err(err) => {
                println!(
                    "ERR  {index:3}: {err}\ng1={} g2={}\ncaps=\n{:?}\ns=\n{:.6?}\nw_prev=\n{:.6?}",
                    instance.gamma1,
                    instance.gamma2,
                    instance.capabilities,
                    instance.s,
                    instance.w_prev.values,
                );
            }
        }
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len().max(1) as f64;
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    println!(
        "done: {} ok of {count}, mean={mean:.6} min={min:.6}",
        ratios.len()
    );
}
