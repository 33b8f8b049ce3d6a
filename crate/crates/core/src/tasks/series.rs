use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{TaskDataset, TaskKind};
use crate::error::{invalid, Result};

pub const DEFAULT_K_MAX: usize = 10;

/// Random bits with parity targets `y_K(n) = (u(n) + ... + u(n-K+1)) mod 2`, K = 1..=k_max.
pub fn gen_parity(n: usize, k_max: usize, seed: u64) -> Result<TaskDataset> {
    if k_max == 0 || n <= k_max {
        return Err(invalid("task.length", format!("need length > k_max >= 1, got {n} and {k_max}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs: Vec<f64> = (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { 0.0 }).collect();
    let mut targets = Array2::zeros((n, k_max));
    for i in 0..n {
        let mut parity = 0u8;
        for k in 0..k_max {
            if k <= i {
                parity ^= inputs[i - k] as u8;
            }
            targets[[i, k]] = parity as f64;
        }
    }
    Ok(TaskDataset { inputs, targets, kind: TaskKind::Parity { k_max } })
}

/// One NARMA-2 step: `y(n+1)` from `y(n)`, `y(n-1)` and `u(n)`.
fn narma2_step(y: f64, y_prev: f64, u: f64) -> f64 {
    0.4 * y + 0.4 * y * y_prev + 0.6 * u * u * u + 0.1
}

/// Stable fixed point of the zero-input recursion: smaller root of `0.4 y^2 - 0.6 y + 0.1`.
pub fn narma2_fixed_point() -> f64 {
    (0.6 - (0.36f64 - 0.16).sqrt()) / 0.8
}

/// Drives the recursion from `inputs`; row `i` (symbol n = i + 1) targets `y(n+1)`,
/// with `y(1) = y(2) = 0`.
pub fn narma2_response(inputs: &[f64]) -> Vec<f64> {
    // y[j] holds y(j + 1).
    let mut y = vec![0.0; inputs.len() + 1];
    for n in 2..=inputs.len() {
        y[n] = narma2_step(y[n - 1], y[n - 2], inputs[n - 1]);
    }
    y[1..].to_vec()
}

/// `u(n) ~ U[0, 0.5]` i.i.d. and the NARMA-2 response.
pub fn gen_narma2(n: usize, seed: u64) -> Result<TaskDataset> {
    if n < 3 {
        return Err(invalid("task.length", "NARMA-2 needs at least 3 symbols"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..=0.5)).collect();
    let targets = Array2::from_shape_vec((n, 1), narma2_response(&inputs)).expect("shape");
    Ok(TaskDataset { inputs, targets, kind: TaskKind::Narma2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_worked_narma_steps() {
        let y = narma2_response(&[0.0, 0.5, 0.0]);
        // y(2) = 0, y(3) = 0.6 * 0.125 + 0.1.
        assert_eq!(y[0], 0.0);
        assert!((y[1] - 0.175).abs() < 1e-15);
        assert!((narma2_response(&[0.0; 3])[1] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn parity_rejects_short_sequences() {
        assert!(gen_parity(10, 10, 0).is_err());
        assert!(gen_parity(10, 0, 0).is_err());
        assert!(gen_narma2(2, 0).is_err());
    }
}
