//! Scratch probe for the headline strategy trends. Runs the two acceptance
//! cells and prints means, paired sign tests, and the Full-vs-EW gap at 0 and
//! 3 failures. Delete before release.

use std::time::Instant;

use hetcov::domain::Strategy;
use hetcov_cli::batch::{run_batch, BatchSpec, TrialRecord};

fn sign_test_tail(wins: usize, n: usize) -> f64 {
    let mut p = 0.5f64.powi(n as i32);
    let mut tail = 0.0;
    for k in 0..=n {
        if k >= wins {
            tail += p;
        }
        if k < n {
            p *= (n - k) as f64 / (k + 1) as f64;
        }
    }
    tail
}

fn cell(records: &[TrialRecord], failures: usize, strategy: Strategy, trials: usize) -> Vec<f64> {
    let mut by_replicate = vec![f64::NAN; trials];
    for r in records
        .iter()
        .filter(|r| r.failures == failures && r.strategy == strategy)
    {
        by_replicate[r.replicate] = r.improvement.expect("trial errored");
    }
    assert!(by_replicate.iter().all(|v| v.is_finite()));
    by_replicate
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn paired(a: &[f64], b: &[f64]) -> (usize, usize, f64) {
    let wins = a.iter().zip(b).filter(|(x, y)| x > y).count();
    let n = a.iter().zip(b).filter(|(x, y)| x != y).count();
    (wins, n, sign_test_tail(wins, n))
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let gamma1: f64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(1.0);
    let gamma2: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(0.5);
    println!("gamma1={gamma1} gamma2={gamma2}");
    let trials = 100usize;
    for (n, e) in [(10usize, 3usize), (5usize, 2usize)] {
        let start = Instant::now();
        let spec = BatchSpec {
            robots: vec![n],
            event_types: vec![e],
            failures: vec![0, 3],
            strategies: vec![
                Strategy::Full,
                Strategy::EquallyWeighted,
                Strategy::SingleCapability,
            ],
            trials_per_cell: trials,
            base_seed: 20260818,
            gamma1,
            gamma2,
            out_dir: None,
        };
        let output = run_batch(&spec).expect("batch run");
        let records = &output.records;

        let full_0 = cell(records, 0, Strategy::Full, trials);
        let equal_0 = cell(records, 0, Strategy::EquallyWeighted, trials);
        let single_0 = cell(records, 0, Strategy::SingleCapability, trials);
        let full_3 = cell(records, 3, Strategy::Full, trials);
        let equal_3 = cell(records, 3, Strategy::EquallyWeighted, trials);
        let single_3 = cell(records, 3, Strategy::SingleCapability, trials);

        let (w_eq, n_eq, p_eq) = paired(&full_3, &equal_3);
        let (w_sc, n_sc, p_sc) = paired(&full_3, &single_3);
        let gap_0 = mean(&full_0) - mean(&equal_0);
        let gap_3 = mean(&full_3) - mean(&equal_3);

        println!("== cell N={n} E={e} ({:.1}s) ==", start.elapsed().as_secs_f64());
        println!(
            "  f=0: full {:.3}  equal {:.3}  single {:.3}",
            mean(&full_0),
            mean(&equal_0),
            mean(&single_0)
        );
        println!(
            "  f=3: full {:.3}  equal {:.3}  single {:.3}",
            mean(&full_3),
            mean(&equal_3),
            mean(&single_3)
        );
        println!("  full>equal @3: wins {w_eq}/{n_eq} p={p_eq:.3e}");
        println!("  full>single @3: wins {w_sc}/{n_sc} p={p_sc:.3e}");
        println!(
            "  gap full-equal: {:.3} @0 -> {:.3} @3  (widens: {})",
            gap_0,
            gap_3,
            gap_3 > gap_0
        );
    }
}
