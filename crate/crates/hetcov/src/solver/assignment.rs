//! Exact solve of the no-consistency-penalty case.
//!
//! With the temporal penalty switched off the objective — utility inner
//! product plus the event-norm reward — is convex, so its maximum over the
//! product of per-robot simplices sits at an extreme point: a pure
//! assignment of each robot to one capable event. At a pure assignment the
//! reward contributes sqrt(m) per event covered by m robots, and sqrt(m) is
//! a sum of decreasing per-slot increments sqrt(k) − sqrt(k−1). Expanding
//! each event into one slot per robot with those increments as bonuses turns
//! the whole problem into a maximum-weight bipartite matching, solved
//! exactly by successive shortest augmenting paths.

use ndarray::Array2;

/// Exact maximizer of `trace(WᵀS) + gamma1·‖W‖_E` over row-stochastic
/// nonnegative weights with the capability mask. Every row must have at
/// least one capable event.
pub(crate) fn assignment_optimum(
    s: &Array2<f64>,
    capabilities: &Array2<u8>,
    gamma1: f64,
) -> Array2<f64> {
    let (n, e) = capabilities.dim();
    // Slot j·n + k is the (k+1)-th robot on event j, worth the reward
    // increment gamma1·(sqrt(k+1) − sqrt(k)) on top of the utility.
    let slot_bonus: Vec<f64> = (0..n)
        .map(|k| gamma1 * (((k + 1) as f64).sqrt() - (k as f64).sqrt()))
        .collect();
    let slots = n * e;
    // Negated gain, so the matching below minimizes cost.
    let cost = |robot: usize, slot: usize| -(s[[robot, slot / n]] + slot_bonus[slot % n]);

    // Successive shortest augmenting paths with node potentials. Slots of
    // one event are interchangeable up to their bonus, so the residual graph
    // is full of zero-cost cycles; Dijkstra's settle order keeps the parent
    // pointers a tree through those ties, and the potentials keep every
    // residual edge nonnegative so Dijkstra stays valid. Nodes 0..n are
    // robots, n..n+slots are slots.
    let total = n + slots;
    let mut pot_robot = vec![0.0f64; n];
    let mut pot_slot = vec![0.0f64; slots];
    for slot in 0..slots {
        let lowest = (0..n)
            .filter(|&r| capabilities[[r, slot / n]] == 1)
            .map(|r| cost(r, slot))
            .fold(f64::INFINITY, f64::min);
        if lowest.is_finite() {
            pot_slot[slot] = lowest;
        }
    }
    let mut match_robot: Vec<Option<usize>> = vec![None; n];
    let mut match_slot: Vec<Option<usize>> = vec![None; slots];
    for _ in 0..n {
        let mut dist = vec![f64::INFINITY; total];
        let mut parent = vec![usize::MAX; total];
        let mut done = vec![false; total];
        for (robot, matched) in match_robot.iter().enumerate() {
            if matched.is_none() {
                dist[robot] = 0.0;
            }
        }
        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for (v, &d) in dist.iter().enumerate() {
                if !done[v] && d < best {
                    best = d;
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            if u < n {
                let robot = u;
                for j in 0..e {
                    if capabilities[[robot, j]] == 0 {
                        continue;
                    }
                    for slot in (j * n)..(j * n + n) {
                        if match_robot[robot] == Some(slot) || done[n + slot] {
                            continue;
                        }
                        let reduced = cost(robot, slot) + pot_robot[robot] - pot_slot[slot];
                        let next = dist[u] + reduced;
                        if next < dist[n + slot] {
                            dist[n + slot] = next;
                            parent[n + slot] = u;
                        }
                    }
                }
            } else {
                let slot = u - n;
                if let Some(owner) = match_slot[slot] {
                    if !done[owner] {
                        let reduced = -cost(owner, slot) + pot_slot[slot] - pot_robot[owner];
                        let next = dist[u] + reduced;
                        if next < dist[owner] {
                            dist[owner] = next;
                            parent[owner] = u;
                        }
                    }
                }
            }
        }
        // Unmatched robots keep potential zero, so the true cost of the path
        // to a free slot is its reduced distance plus the slot's potential.
        let target = (0..slots)
            .filter(|&slot| match_slot[slot].is_none() && dist[n + slot].is_finite())
            .min_by(|&a, &b| {
                (dist[n + a] + pot_slot[a])
                    .partial_cmp(&(dist[n + b] + pot_slot[b]))
                    .unwrap()
            })
            .expect("every robot has a capable event, so a free slot is reachable");
        // Fold the distances into the potentials, capped at the target's, to
        // keep reduced costs nonnegative for the next search.
        let cap = dist[n + target];
        for (robot, pot) in pot_robot.iter_mut().enumerate() {
            if dist[robot].is_finite() {
                *pot += dist[robot].min(cap);
            }
        }
        for (slot, pot) in pot_slot.iter_mut().enumerate() {
            if dist[n + slot].is_finite() {
                *pot += dist[n + slot].min(cap);
            }
        }
        // Flip matched edges along the augmenting path; parents alternate
        // slot <- robot <- slot <- … back to an unmatched robot.
        let mut node = n + target;
        loop {
            let robot = parent[node];
            let came_from = parent[robot];
            match_robot[robot] = Some(node - n);
            match_slot[node - n] = Some(robot);
            if came_from == usize::MAX {
                break;
            }
            node = came_from;
        }
    }

    let mut values = Array2::zeros((n, e));
    for (robot, matched) in match_robot.iter().enumerate() {
        let slot = matched.expect("augmented once per robot");
        values[[robot, slot / n]] = 1.0;
    }
    values
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{splitmix64, stream_rng, Stream};
    use crate::solver::objective;
    use ndarray::array;
    use rand::Rng;

    fn brute_force(s: &Array2<f64>, capabilities: &Array2<u8>, gamma1: f64) -> f64 {
        let (n, e) = capabilities.dim();
        let capable: Vec<Vec<usize>> = (0..n)
            .map(|i| (0..e).filter(|&j| capabilities[[i, j]] == 1).collect())
            .collect();
        let w_prev = Array2::zeros((n, e));
        let mut best = f64::NEG_INFINITY;
        let mut index = vec![0usize; n];
        loop {
            let mut v = Array2::zeros((n, e));
            for i in 0..n {
                v[[i, capable[i][index[i]]]] = 1.0;
            }
            best = best.max(objective(&v, s, &w_prev, gamma1, 0.0));
            let mut row = 0;
            loop {
                if row == n {
                    return best;
                }
                index[row] += 1;
                if index[row] < capable[row].len() {
                    break;
                }
                index[row] = 0;
                row += 1;
            }
        }
    }

    // [DERIVED] 2 robots with near-identical utilities: concentrating on the
    // top event scores 5 + 5 + 2·sqrt(2) ≈ 12.83, splitting scores
    // 5 + 4.9 + 2·2 = 13.9, so the exact solve must split.
    #[test]
    fn splits_robots_when_reward_beats_utility() {
        let s = array![[5.0, 4.9], [5.0, 4.9]];
        let caps = array![[1u8, 1], [1, 1]];
        let w = assignment_optimum(&s, &caps, 2.0);
        let obj = objective(&w, &s, &Array2::zeros((2, 2)), 2.0, 0.0);
        assert!((obj - 13.9).abs() < 1e-12, "objective {obj}");
        assert_eq!(w.row(0).sum(), 1.0);
        assert_eq!(w.row(1).sum(), 1.0);
        assert_ne!(w, array![[1.0, 0.0], [1.0, 0.0]]);
    }

    // [TRIVIAL] incapable events never receive weight
    #[test]
    fn respects_capability_mask() {
        let s = array![[10.0, 1.0], [10.0, 1.0]];
        let caps = array![[0u8, 1], [1, 1]];
        let w = assignment_optimum(&s, &caps, 1.0);
        assert_eq!(w[[0, 0]], 0.0);
        assert_eq!(w[[0, 1]], 1.0);
    }

    // [DERIVED] the matching reaches the same optimum as brute-force
    // enumeration of every pure assignment on random small instances
    #[test]
    fn matches_brute_force_enumeration() {
        for t in 0..200u64 {
            let mut rng = stream_rng(splitmix64(t), Stream::Capabilities);
            let n = rng.gen_range(1..=4);
            let e = rng.gen_range(1..=3);
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
            let gamma1 = rng.gen_range(0.0..=5.0);
            let w = assignment_optimum(&s, &caps, gamma1);
            let obj = objective(&w, &s, &Array2::zeros((n, e)), gamma1, 0.0);
            let best = brute_force(&s, &caps, gamma1);
            assert!(
                (obj - best).abs() <= 1e-9 * (1.0 + best.abs()),
                "t={t}: matching {obj} vs enumeration {best}"
            );
        }
    }
}
