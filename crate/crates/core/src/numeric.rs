//! Floating-point sparse operators and power iteration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Column-major sparse real matrix.
#[derive(Clone, Debug, Default)]
pub struct SparseOperator {
    rows: usize,
    cols: Vec<Vec<(usize, f64)>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerIteration {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for PowerIteration {
    fn default() -> Self {
        PowerIteration {
            tolerance: 1e-9,
            max_iterations: 10_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NormEstimate {
    /// `||A v||` for the final unit vector `v`; never exceeds `||A||`.
    pub value: f64,
    pub right: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl SparseOperator {
    pub fn new(rows: usize) -> Self {
        SparseOperator {
            rows,
            cols: Vec::new(),
        }
    }

    pub fn from_dense(rows: usize, cols: usize, entries: &[f64]) -> Self {
        let mut op = SparseOperator::new(rows);
        for c in 0..cols {
            let col = (0..rows)
                .filter_map(|r| {
                    let v = entries[r * cols + c];
                    (v != 0.0).then_some((r, v))
                })
                .collect();
            op.push_column(col);
        }
        op
    }

    pub fn push_column(&mut self, col: Vec<(usize, f64)>) {
        debug_assert!(col.iter().all(|&(r, _)| r < self.rows));
        self.cols.push(col);
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols.len()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for (col, &x) in self.cols.iter().zip(v) {
            if x == 0.0 {
                continue;
            }
            for &(r, a) in col {
                out[r] += a * x;
            }
        }
        out
    }

    pub fn apply_transpose(&self, w: &[f64]) -> Vec<f64> {
        self.cols
            .iter()
            .map(|col| col.iter().map(|&(r, a)| a * w[r]).sum())
            .collect()
    }

    /// Power iteration on `A^T A`, from `start` or a seeded random vector.
    pub fn norm_estimate(&self, params: &PowerIteration, start: Option<&[f64]>) -> NormEstimate {
        let n = self.cols();
        let mut v: Vec<f64> = match start {
            Some(s) => s.to_vec(),
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
                (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
            }
        };
        if normalize(&mut v) == 0.0 {
            return NormEstimate {
                value: 0.0,
                right: v,
                iterations: 0,
                converged: true,
            };
        }
        let mut value = norm(&self.apply(&v));
        for it in 1..=params.max_iterations {
            let mut next = self.apply_transpose(&self.apply(&v));
            if normalize(&mut next) == 0.0 {
                return NormEstimate {
                    value,
                    right: v,
                    iterations: it,
                    converged: true,
                };
            }
            let next_value = norm(&self.apply(&next));
            let done = (next_value - value).abs() <= params.tolerance * value.max(1.0);
            v = next;
            value = value.max(next_value);
            if done {
                return NormEstimate {
                    value,
                    right: v,
                    iterations: it,
                    converged: true,
                };
            }
        }
        NormEstimate {
            value,
            right: v,
            iterations: params.max_iterations,
            converged: false,
        }
    }
}

impl SparseOperator {
    /// Best of a few seeded starts; guards against a start vector that is
    /// nearly orthogonal to the top singular vector.
    pub fn norm_estimate_restarted(&self, params: &PowerIteration) -> NormEstimate {
        let mut best = self.norm_estimate(params, None);
        for s in 1..4 {
            let p = PowerIteration {
                seed: params.seed.wrapping_add(s),
                ..*params
            };
            let est = self.norm_estimate(&p, None);
            if est.value > best.value {
                best = est;
            }
        }
        best
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn normalize(v: &mut [f64]) -> f64 {
    let n = norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_norm() {
        let op = SparseOperator::from_dense(3, 3, &[1.0, 0.0, 0.0, 0.0, -3.0, 0.0, 0.0, 0.0, 2.0]);
        let est = op.norm_estimate(&PowerIteration::default(), None);
        assert!((est.value - 3.0).abs() < 1e-9);
        assert!(est.converged);
    }

    #[test]
    fn rank_one_norm() {
        // [[1, 1], [1, 1]] has norm 2
        let op = SparseOperator::from_dense(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let est = op.norm_estimate(&PowerIteration::default(), None);
        assert!((est.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn zero_operator() {
        let op = SparseOperator::from_dense(2, 2, &[0.0; 4]);
        assert_eq!(op.norm_estimate(&PowerIteration::default(), None).value, 0.0);
    }

    #[test]
    fn transpose_is_adjoint() {
        let op = SparseOperator::from_dense(2, 3, &[1.0, 2.0, 0.0, 0.0, -1.0, 4.0]);
        let v = [0.5, -1.0, 2.0];
        let w = [3.0, 1.5];
        let lhs: f64 = op.apply(&v).iter().zip(&w).map(|(a, b)| a * b).sum();
        let rhs: f64 = op.apply_transpose(&w).iter().zip(&v).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }
}
