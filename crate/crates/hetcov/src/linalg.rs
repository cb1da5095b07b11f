//! Small dense matrix helpers for the weight solver.
//!
//! The linear system in the solver update is only `E x E` (number of event
//! types, single digits in practice), so a direct Gauss-Jordan inverse with
//! partial pivoting is all that is needed.

use ndarray::Array2;

/// Inverse of a small square matrix together with its 1-norm condition
/// number. Returns `None` when a pivot vanishes outright.
pub fn invert_with_condition(m: &Array2<f64>) -> Option<(Array2<f64>, f64)> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "matrix must be square");
    if n == 0 {
        return None;
    }

    // Gauss-Jordan on [M | I] with partial pivoting.
    let mut a = m.clone();
    let mut inv = Array2::<f64>::eye(n);
    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_val = a[[col, col]].abs();
        for row in col + 1..n {
            let v = a[[row, col]].abs();
            if v > pivot_val {
                pivot_val = v;
                pivot_row = row;
            }
        }
        if pivot_val == 0.0 || !pivot_val.is_finite() {
            return None;
        }
        if pivot_row != col {
            for j in 0..n {
                a.swap([col, j], [pivot_row, j]);
                inv.swap([col, j], [pivot_row, j]);
            }
        }
        let pivot = a[[col, col]];
        for j in 0..n {
            a[[col, j]] /= pivot;
            inv[[col, j]] /= pivot;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[[row, col]];
            if factor != 0.0 {
                for j in 0..n {
                    a[[row, j]] -= factor * a[[col, j]];
                    inv[[row, j]] -= factor * inv[[col, j]];
                }
            }
        }
    }

    let cond = one_norm(m) * one_norm(&inv);
    if !cond.is_finite() {
        return None;
    }
    Some((inv, cond))
}

/// Induced 1-norm (maximum absolute column sum).
pub fn one_norm(m: &Array2<f64>) -> f64 {
    let mut max = 0.0_f64;
    for col in m.columns() {
        let s: f64 = col.iter().map(|v| v.abs()).sum();
        if s > max {
            max = s;
        }
    }
    max
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn inverts_known_2x2() {
        let m = array![[4.0, 7.0], [2.0, 6.0]];
        let (inv, cond) = invert_with_condition(&m).unwrap();
        assert_abs_diff_eq!(inv[[0, 0]], 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(inv[[0, 1]], -0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(inv[[1, 0]], -0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(inv[[1, 1]], 0.4, epsilon = 1e-12);
        // cond_1 = ||M||_1 * ||M^-1||_1 = 13 * 1.1
        assert_abs_diff_eq!(cond, 14.3, epsilon = 1e-9);
    }

    #[test]
    fn product_with_inverse_is_identity() {
        let m = array![[3.0, 1.0, 0.5], [1.0, 4.0, 1.0], [0.0, 1.0, 2.0]];
        let (inv, _) = invert_with_condition(&m).unwrap();
        let id = m.dot(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(id[[i, j]], expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let m = array![[1.0, 2.0], [2.0, 4.0]];
        assert!(invert_with_condition(&m).is_none());
    }

    #[test]
    fn rank_one_ones_matrix_is_rejected() {
        let m = array![[1.0, 1.0], [1.0, 1.0]];
        assert!(invert_with_condition(&m).is_none());
    }
}
