//! Exhaustive grid-search reference solver for small instances.
//!
//! The event norm couples rows through column norms, so rows cannot be
//! optimized independently: the search enumerates the product of all rows'
//! capability-restricted simplex grids jointly. Feasible only for tiny
//! instances (N ≤ 3, E ≤ 3); everything larger trips the cell budget.

use ndarray::Array2;
use thiserror::Error;

use super::WeightMatrix;

/// Default ceiling on joint grid cells before an instance is rejected.
pub const DEFAULT_CELL_BUDGET: f64 = 1e8;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum OracleError {
    #[error("joint grid has {cells:.3e} cells, over the {budget:.3e} budget")]
    TooLarge { cells: f64, budget: f64 },
    #[error("robot row {row} has no capabilities; its weight row cannot sum to 1")]
    ZeroCapabilityRow { row: usize },
}

/// Number of joint grid cells `oracle_solve` would enumerate for this
/// capability mask at the given resolution: the product over rows of the
/// compositions of `1/resolution` units into that row's capable entries,
/// C(steps + x − 1, x − 1). Lets callers check an instance against a cell
/// budget (and e.g. redraw it) without running the search.
pub fn joint_grid_cells(capabilities: &Array2<u8>, resolution: f64) -> Result<f64, OracleError> {
    let (n, e) = capabilities.dim();
    assert!(resolution > 0.0 && resolution <= 1.0, "resolution must be in (0, 1]");
    let steps = (1.0 / resolution).round() as usize;
    let mut cells = 1.0f64;
    for i in 0..n {
        let x = (0..e).filter(|&j| capabilities[[i, j]] == 1).count();
        if x == 0 {
            return Err(OracleError::ZeroCapabilityRow { row: i });
        }
        cells *= compositions_count(steps, x);
    }
    Ok(cells)
}

/// One grid point of a row's feasible simplex, with its row-separable
/// objective contributions precomputed.
struct RowCandidate {
    weights: Vec<f64>,
    /// Squared weights, for incremental column-norm accumulation.
    squares: Vec<f64>,
    /// inner-product gain minus the temporal-consistency penalty:
    /// Σ_j w_j·s_ij − gamma2·Σ_j (w_j − w_prev_ij)².
    scalar_gain: f64,
}

/// Maximizes the solver objective exactly (up to grid resolution) by
/// enumerating every combination of per-row simplex grid points. Rows only
/// place weight on capable entries; the grid quantizes each row to multiples
/// of `resolution` (so `resolution` should divide 1 evenly, e.g. 0.02).
pub fn oracle_solve(
    s: &Array2<f64>,
    w_prev: &WeightMatrix,
    capabilities: &Array2<u8>,
    gamma1: f64,
    gamma2: f64,
    resolution: f64,
    cell_budget: f64,
) -> Result<WeightMatrix, OracleError> {
    let (n, e) = capabilities.dim();
    assert!(resolution > 0.0 && resolution <= 1.0, "resolution must be in (0, 1]");
    let steps = (1.0 / resolution).round() as usize;

    // Reject over-budget grids before materializing anything.
    let cells = joint_grid_cells(capabilities, resolution)?;
    if cells > cell_budget {
        return Err(OracleError::TooLarge {
            cells,
            budget: cell_budget,
        });
    }

    let per_row: Vec<Vec<RowCandidate>> = (0..n)
        .map(|i| {
            let capable: Vec<usize> = (0..e).filter(|&j| capabilities[[i, j]] == 1).collect();
            compositions(steps, capable.len())
                .into_iter()
                .map(|units| {
                    let mut weights = vec![0.0; e];
                    for (&j, &u) in capable.iter().zip(units.iter()) {
                        weights[j] = u as f64 / steps as f64;
                    }
                    let squares: Vec<f64> = weights.iter().map(|&w| w * w).collect();
                    let inner: f64 = (0..e).map(|j| weights[j] * s[[i, j]]).sum();
                    let drift: f64 = (0..e)
                        .map(|j| {
                            let d = weights[j] - w_prev.values[[i, j]];
                            d * d
                        })
                        .sum();
                    RowCandidate {
                        weights,
                        squares,
                        scalar_gain: inner - gamma2 * drift,
                    }
                })
                .collect()
        })
        .collect();

    let mut search = Search {
        per_row: &per_row,
        gamma1,
        best_objective: f64::NEG_INFINITY,
        best_path: vec![0; n],
        path: vec![0; n],
    };
    search.descend(0, 0.0, &vec![0.0; e]);

    let mut values = Array2::zeros((n, e));
    for (i, &c) in search.best_path.iter().enumerate() {
        for j in 0..e {
            values[[i, j]] = per_row[i][c].weights[j];
        }
    }
    Ok(WeightMatrix { values })
}

struct Search<'a> {
    per_row: &'a [Vec<RowCandidate>],
    gamma1: f64,
    best_objective: f64,
    best_path: Vec<usize>,
    path: Vec<usize>,
}

impl Search<'_> {
    /// Walks rows depth-first, carrying the scalar objective terms and the
    /// per-column squared sums accumulated so far. The last row is evaluated
    /// inline so leaves allocate nothing.
    fn descend(&mut self, row: usize, scalar_acc: f64, col_sq: &[f64]) {
        let last = row == self.per_row.len() - 1;
        for (c, cand) in self.per_row[row].iter().enumerate() {
            self.path[row] = c;
            if last {
                let norm_sum: f64 = col_sq
                    .iter()
                    .zip(cand.squares.iter())
                    .map(|(&acc, &sq)| (acc + sq).sqrt())
                    .sum();
                let objective = scalar_acc + cand.scalar_gain + self.gamma1 * norm_sum;
                if objective > self.best_objective {
                    self.best_objective = objective;
                    self.best_path.copy_from_slice(&self.path);
                }
            } else {
                let next_sq: Vec<f64> = col_sq
                    .iter()
                    .zip(cand.squares.iter())
                    .map(|(&acc, &sq)| acc + sq)
                    .collect();
                self.descend(row + 1, scalar_acc + cand.scalar_gain, &next_sq);
            }
        }
    }
}

/// Number of ways to split `units` across `slots` nonnegative integers,
/// C(units + slots − 1, slots − 1), as f64 for budget arithmetic.
fn compositions_count(units: usize, slots: usize) -> f64 {
    let mut count = 1.0f64;
    for k in 1..slots {
        count *= (units + k) as f64 / k as f64;
    }
    count
}

/// All length-`slots` vectors of nonnegative integers summing to `units`.
fn compositions(units: usize, slots: usize) -> Vec<Vec<usize>> {
    if slots == 1 {
        return vec![vec![units]];
    }
    let mut out = Vec::new();
    for first in 0..=units {
        for mut rest in compositions(units - first, slots - 1) {
            let mut v = Vec::with_capacity(slots);
            v.push(first);
            v.append(&mut rest);
            out.push(v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::SolverParams;
    use crate::solver::{init_weights, objective, solve_weights};
    use ndarray::array;

    #[test]
    fn composition_counts_match_enumeration() {
        for (units, slots) in [(50, 1), (50, 2), (50, 3), (10, 3)] {
            let enumerated = compositions(units, slots);
            assert_eq!(enumerated.len() as f64, compositions_count(units, slots));
            assert!(enumerated.iter().all(|v| v.iter().sum::<usize>() == units));
        }
        assert_eq!(compositions_count(50, 3), 1326.0);
    }

    #[test]
    fn single_event_type_returns_the_ones_column() {
        let s = array![[4.0], [0.5]];
        let caps = array![[1u8], [1]];
        let w_prev = init_weights(&caps).unwrap();
        let w = oracle_solve(&s, &w_prev, &caps, 1.0, 1.0, 0.02, DEFAULT_CELL_BUDGET).unwrap();
        assert_eq!(w.values, array![[1.0], [1.0]]);
    }

    #[test]
    fn linear_case_matches_the_vertex_solver() {
        let s = array![[5.0, 1.0], [1.0, 5.0]];
        let caps = array![[1u8, 1], [1, 1]];
        let w_prev = init_weights(&caps).unwrap();
        let oracle = oracle_solve(&s, &w_prev, &caps, 0.0, 0.0, 0.02, DEFAULT_CELL_BUDGET).unwrap();
        let alm = solve_weights(&s, &w_prev, &caps, &SolverParams::default(), 0.0, 0.0).unwrap();
        assert_eq!(oracle.values, alm.weights.values);
    }

    #[test]
    fn strong_consistency_penalty_pins_the_previous_weights() {
        // With equal utilities and a single row the event norm is constant
        // (= 1) on the simplex, so a large drift penalty makes W_prev itself
        // optimal; (0.3, 0.7) lies exactly on the 0.02 grid.
        let s = array![[1.0, 1.0]];
        let caps = array![[1u8, 1]];
        let w_prev = WeightMatrix {
            values: array![[0.3, 0.7]],
        };
        let w = oracle_solve(&s, &w_prev, &caps, 2.0, 100.0, 0.02, DEFAULT_CELL_BUDGET).unwrap();
        assert_eq!(w.values, array![[0.3, 0.7]]);
    }

    #[test]
    fn event_norm_reward_spreads_stacked_rows() {
        let s = array![[5.0, 1.0], [5.0, 1.0]];
        let caps = array![[1u8, 1], [1, 1]];
        let w_prev = init_weights(&caps).unwrap();
        let stacked = WeightMatrix {
            values: array![[1.0, 0.0], [1.0, 0.0]],
        };
        let w = oracle_solve(&s, &w_prev, &caps, 10.0, 0.0, 0.02, DEFAULT_CELL_BUDGET).unwrap();
        assert!(w.values.column(1).sum() > 0.0);
        assert!(
            objective(&w.values, &s, &w_prev.values, 10.0, 0.0)
                > objective(&stacked.values, &s, &w_prev.values, 10.0, 0.0)
        );
    }

    #[test]
    fn over_budget_grids_are_rejected_up_front() {
        let s = array![[1.0, 1.0], [1.0, 1.0]];
        let caps = array![[1u8, 1], [1, 1]];
        let w_prev = init_weights(&caps).unwrap();
        let err = oracle_solve(&s, &w_prev, &caps, 1.0, 1.0, 0.02, 100.0).unwrap_err();
        match err {
            OracleError::TooLarge { cells, budget } => {
                assert_eq!(budget, 100.0);
                assert!(cells > budget);
            }
            other => panic!("expected TooLarge, got {other:?}"),
        }
    }

    #[test]
    fn oracle_objective_bounds_the_iterative_solver() {
        let s = array![[3.0, 1.0, 0.5], [0.5, 2.0, 4.0]];
        let caps = array![[1u8, 1, 1], [1, 1, 1]];
        let w_prev = init_weights(&caps).unwrap();
        let (g1, g2) = (0.5, 0.5);
        let oracle = oracle_solve(&s, &w_prev, &caps, g1, g2, 0.02, DEFAULT_CELL_BUDGET).unwrap();
        let alm = solve_weights(&s, &w_prev, &caps, &SolverParams::default(), g1, g2).unwrap();
        let oracle_obj = objective(&oracle.values, &s, &w_prev.values, g1, g2);
        let alm_obj = objective(&alm.weights.values, &s, &w_prev.values, g1, g2);
        // The oracle can miss the continuum optimum by at most the grid
        // resolution times a modest Lipschitz factor.
        assert!(
            oracle_obj >= alm_obj - 0.1,
            "oracle {oracle_obj} should not trail the iterative solver {alm_obj}"
        );
    }
}
