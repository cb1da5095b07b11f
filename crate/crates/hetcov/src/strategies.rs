//! The four weighting strategies: the regularized solve, its unregularized
//! baseline, and the two non-adaptive comparisons.

use ndarray::Array2;
use rand::Rng;

use crate::domain::{SolverParams, Strategy};
use crate::solver::{init_weights, solve_weights, SolveOutcome, SolverError, WeightMatrix};

/// A strategy instantiated for one trial. For `SingleCapability` this holds
/// the per-robot event picks made once at trial start (indexed by robot id);
/// use [`StrategyKind::row_view`] to align the picks with the rows of the
/// alive-robot matrices before calling [`compute_weights`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StrategyKind {
    Full,
    Baseline,
    EquallyWeighted,
    SingleCapability(Vec<usize>),
}

impl StrategyKind {
    /// Instantiates `strategy` for a trial over the full capability matrix.
    /// Only `SingleCapability` consumes randomness (one pick per robot).
    pub fn for_trial<R: Rng>(
        strategy: Strategy,
        capabilities: &Array2<u8>,
        rng: &mut R,
    ) -> StrategyKind {
        match strategy {
            Strategy::Full => StrategyKind::Full,
            Strategy::Baseline => StrategyKind::Baseline,
            Strategy::EquallyWeighted => StrategyKind::EquallyWeighted,
            Strategy::SingleCapability => {
                StrategyKind::SingleCapability(pick_single_capabilities(capabilities, rng))
            }
        }
    }

    /// Restricts the per-robot picks to the given robot ids, in row order.
    /// The other variants carry no per-robot state and pass through.
    pub fn row_view(&self, robot_ids: &[usize]) -> StrategyKind {
        match self {
            StrategyKind::SingleCapability(picks) => {
                StrategyKind::SingleCapability(robot_ids.iter().map(|&id| picks[id]).collect())
            }
            other => other.clone(),
        }
    }
}

/// Uniform pick of one capable event per robot.
pub fn pick_single_capabilities<R: Rng>(capabilities: &Array2<u8>, rng: &mut R) -> Vec<usize> {
    let (n, e) = capabilities.dim();
    (0..n)
        .map(|i| {
            let capable: Vec<usize> = (0..e).filter(|&j| capabilities[[i, j]] == 1).collect();
            assert!(!capable.is_empty(), "robot {i} has no capabilities to pick from");
            capable[rng.gen_range(0..capable.len())]
        })
        .collect()
}

/// Computes this step's weight matrix under the given strategy. All inputs
/// are row-aligned over the currently alive robots; for `SingleCapability`
/// the kind must already be a [`StrategyKind::row_view`] of those robots.
///
/// `Full` solves with the configured regularizers, `Baseline` with both set
/// to zero. The two non-adaptive strategies return their fixed rows directly
/// and never consult `S` or `W_prev`.
pub fn compute_weights(
    kind: &StrategyKind,
    s: &Array2<f64>,
    w_prev: &WeightMatrix,
    capabilities: &Array2<u8>,
    params: &SolverParams,
    gamma1: f64,
    gamma2: f64,
) -> Result<SolveOutcome, SolverError> {
    let fixed = |weights: WeightMatrix| SolveOutcome {
        weights,
        converged: true,
        no_convergence: false,
        iterations: 0,
        final_change: 0.0,
        mu_trace: Vec::new(),
        singular_skips: 0,
    };

    match kind {
        StrategyKind::Full => solve_weights(s, w_prev, capabilities, params, gamma1, gamma2),
        StrategyKind::Baseline => solve_weights(s, w_prev, capabilities, params, 0.0, 0.0),
        StrategyKind::EquallyWeighted => Ok(fixed(init_weights(capabilities)?)),
        StrategyKind::SingleCapability(picks) => {
            let (n, e) = capabilities.dim();
            assert_eq!(
                picks.len(),
                n,
                "single-capability picks must be row-aligned (use row_view)"
            );
            let mut values = Array2::zeros((n, e));
            for (i, &j) in picks.iter().enumerate() {
                assert_eq!(
                    capabilities[[i, j]],
                    1,
                    "robot row {i} picked event {j} it cannot sense"
                );
                values[[i, j]] = 1.0;
            }
            Ok(fixed(WeightMatrix { values }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};
    use ndarray::array;

    #[test]
    fn equally_weighted_splits_over_capabilities() {
        let caps = array![[1u8, 0, 1]];
        let s = array![[9.0, 9.0, 9.0]];
        let w_prev = init_weights(&caps).unwrap();
        let params = SolverParams::default();
        let out = compute_weights(
            &StrategyKind::EquallyWeighted,
            &s,
            &w_prev,
            &caps,
            &params,
            1.0,
            0.5,
        )
        .unwrap();
        assert_eq!(out.weights.values, array![[0.5, 0.0, 0.5]]);

        // constant across repeated calls, whatever S says
        let s2 = array![[0.0, 1.0, 100.0]];
        let again =
            compute_weights(&StrategyKind::EquallyWeighted, &s2, &w_prev, &caps, &params, 1.0, 0.5)
                .unwrap();
        assert_eq!(again.weights, out.weights);
    }

    #[test]
    fn single_capability_rows_are_one_hot_at_the_pick() {
        let caps = array![[1u8, 1], [1, 1]];
        let kind = StrategyKind::SingleCapability(vec![0, 1]);
        let s = array![[1.0, 5.0], [5.0, 1.0]];
        let w_prev = init_weights(&caps).unwrap();
        let out = compute_weights(&kind, &s, &w_prev, &caps, &SolverParams::default(), 1.0, 0.5)
            .unwrap();
        assert_eq!(out.weights.values, array![[1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn picks_are_seeded_and_capability_supported() {
        let caps = array![[1u8, 0, 1], [0, 1, 0], [1, 1, 1]];
        let picks_a = pick_single_capabilities(&caps, &mut stream_rng(5, Stream::SingleCapabilityPicks));
        let picks_b = pick_single_capabilities(&caps, &mut stream_rng(5, Stream::SingleCapabilityPicks));
        assert_eq!(picks_a, picks_b);
        for (i, &j) in picks_a.iter().enumerate() {
            assert_eq!(caps[[i, j]], 1);
        }
        assert_eq!(picks_a[1], 1, "a single-capability robot has no choice");
    }

    #[test]
    fn row_view_aligns_picks_with_surviving_robots() {
        let kind = StrategyKind::SingleCapability(vec![2, 0, 1]);
        assert_eq!(
            kind.row_view(&[0, 2]),
            StrategyKind::SingleCapability(vec![2, 1])
        );
        assert_eq!(StrategyKind::Full.row_view(&[0, 2]), StrategyKind::Full);
    }

    #[test]
    fn full_with_zero_gammas_equals_baseline() {
        let caps = array![[1u8, 1], [1, 1]];
        let s = array![[5.0, 1.0], [1.0, 5.0]];
        let w_prev = init_weights(&caps).unwrap();
        let params = SolverParams::default();
        let full =
            compute_weights(&StrategyKind::Full, &s, &w_prev, &caps, &params, 0.0, 0.0).unwrap();
        let baseline =
            compute_weights(&StrategyKind::Baseline, &s, &w_prev, &caps, &params, 7.0, 3.0)
                .unwrap();
        assert_eq!(full.weights, baseline.weights);
    }

    #[test]
    fn strategies_instantiate_from_the_config_enum() {
        let caps = array![[1u8, 1]];
        let mut rng = stream_rng(1, Stream::SingleCapabilityPicks);
        assert_eq!(
            StrategyKind::for_trial(Strategy::Full, &caps, &mut rng),
            StrategyKind::Full
        );
        match StrategyKind::for_trial(Strategy::SingleCapability, &caps, &mut rng) {
            StrategyKind::SingleCapability(picks) => assert_eq!(picks.len(), 1),
            other => panic!("expected SingleCapability, got {other:?}"),
        }
    }
}
