//! Polynomial expansion of state columns, used by the oracle reservoirs.

use ndarray::Array2;

use super::{NodeLabel, StateMatrix};
use crate::error::{invalid, Result};
use crate::scalar::Real;

fn monomials(n: usize, degree: usize, repeat: bool, start: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if !current.is_empty() {
        out.push(current.clone());
    }
    if current.len() == degree {
        return;
    }
    for j in start..n {
        current.push(j);
        monomials(n, degree, repeat, if repeat { j } else { j + 1 }, current, out);
        current.pop();
    }
}

/// All monomials of the columns up to `degree`, ordered by degree then lexicographically.
///
/// With `repeat = false` each column appears at most once per monomial
/// (products of distinct columns, enough for binary inputs); with `repeat = true`
/// powers such as `x0^2` are included.
pub fn polynomial_features<T: Real>(states: &StateMatrix<T>, degree: usize, repeat: bool) -> Result<StateMatrix<T>> {
    if degree == 0 {
        return Err(invalid("degree", "must be >= 1"));
    }
    let mut terms = Vec::new();
    monomials(states.n_nodes(), degree, repeat, 0, &mut Vec::new(), &mut terms);
    terms.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    let x = &states.values;
    let values = Array2::from_shape_fn((states.n_symbols(), terms.len()), |(i, t)| {
        terms[t].iter().fold(T::one(), |acc, &j| acc * x[[i, j]])
    });
    let labels = terms
        .iter()
        .map(|t| NodeLabel::Feature(t.iter().map(|&j| states.labels[j].to_string()).collect::<Vec<_>>().join("*")))
        .collect();
    StateMatrix::new(values, labels, states.symbol_duration)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> StateMatrix<f64> {
        let labels = vec![NodeLabel::Feature("a".into()), NodeLabel::Feature("b".into()), NodeLabel::Feature("c".into())];
        StateMatrix::new(ndarray::arr2(&[[2.0, 3.0, 5.0]]), labels, 1.0).unwrap()
    }

    #[test]
    fn distinct_products_up_to_three() {
        let f = polynomial_features(&base(), 3, false).unwrap();
        assert_eq!(f.n_nodes(), 7);
        assert_eq!(f.values.row(0).to_vec(), vec![2.0, 3.0, 5.0, 6.0, 10.0, 15.0, 30.0]);
        assert_eq!(f.labels[6].to_string(), "a*b*c");
    }

    #[test]
    fn quadratic_with_powers() {
        let f = polynomial_features(&base(), 2, true).unwrap();
        // 3 linear + 6 quadratic.
        assert_eq!(f.n_nodes(), 9);
        assert_eq!(f.values[[0, 3]], 4.0);
        assert!(polynomial_features(&base(), 0, true).is_err());
    }
}
