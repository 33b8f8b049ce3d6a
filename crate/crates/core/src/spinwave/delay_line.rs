use ndarray::Array2;

use crate::error::{invalid, Result};
use crate::nodes::{NodeLabel, StateMatrix};
use crate::scalar::Real;

/// Shift-register reservoir: row `n` is `[u(n), u(n-1), ..., u(n-depth+1)]`,
/// zero before the start.
pub fn delay_line_reference<T: Real>(u: &[T], depth: usize, symbol_duration: f64) -> Result<StateMatrix<T>> {
    if depth == 0 {
        return Err(invalid("depth", "must be >= 1"));
    }
    let values = Array2::from_shape_fn((u.len(), depth), |(n, k)| if n >= k { u[n - k] } else { T::zero() });
    let labels = (0..depth).map(|k| NodeLabel::Feature(format!("u[n-{k}]"))).collect();
    StateMatrix::new(values, labels, symbol_duration)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_example() {
        let s = delay_line_reference(&[1.0f64, 2.0, 3.0], 2, 5e-9).unwrap();
        assert_eq!(s.values, ndarray::arr2(&[[1.0, 0.0], [2.0, 1.0], [3.0, 2.0]]));
    }

    #[test]
    fn depth_one_is_the_input() {
        let u = [0.5f32, -1.0, 4.0];
        let s = delay_line_reference(&u, 1, 1.0).unwrap();
        assert_eq!(s.values.column(0).to_vec(), u.to_vec());
        assert!(delay_line_reference(&u, 0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn matches_shift_oracle(u in prop::collection::vec(-5.0f64..5.0, 1..60), depth in 1usize..12) {
            let s = delay_line_reference(&u, depth, 1.0).unwrap();
            for n in 0..u.len() {
                for k in 0..depth {
                    let expected = if k <= n { u[n - k] } else { 0.0 };
                    prop_assert_eq!(s.values[[n, k]], expected);
                }
            }
        }
    }
}
