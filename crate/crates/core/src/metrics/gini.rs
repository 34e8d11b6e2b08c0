use crate::error::{Error, Result};

use super::sum::sum;

/// Gini coefficient Σᵢⱼ|xᵢ − xⱼ| / (2·N·Σx), bounded by 1 − 1/N.
///
/// After sorting, the gap between the k-th and (k+1)-th smallest values is
/// crossed by (k+1)(N−k−1) unordered pairs, so the double sum becomes a
/// single pass over non-negative terms.
pub fn gini(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 2 {
        return Err(Error::invalid(format!("Gini needs at least 2 values, got {n}")));
    }
    if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::invalid(format!(
            "Gini input must be finite and non-negative, got {bad}"
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let total = sum(sorted.iter().copied());
    if total == 0.0 {
        return Err(Error::UndefinedGini);
    }
    let pair_sum = sum(sorted.windows(2).enumerate().map(|(k, w)| {
        let crossings = ((k + 1) * (n - k - 1)) as f64;
        (w[1] - w[0]) * crossings
    }));
    Ok(pair_sum / (n as f64 * total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(x: &[f64]) -> f64 {
        let n = x.len() as f64;
        let mut num = 0.0;
        for a in x {
            for b in x {
                num += (a - b).abs();
            }
        }
        num / (2.0 * n * x.iter().sum::<f64>())
    }

    #[test]
    fn constant_is_zero() {
        for c in [0.1, 1.0, 3.7, 1e9] {
            assert_eq!(gini(&[c; 4]).unwrap(), 0.0);
        }
    }

    #[test]
    fn single_nonzero() {
        assert_eq!(gini(&[0.0, 0.0, 0.0, 1.0]).unwrap(), 0.75);
    }

    #[test]
    fn one_two_three() {
        // double sum 8, denominator 2·3·6 = 36
        assert!((gini(&[1.0, 2.0, 3.0]).unwrap() - 8.0 / 36.0).abs() < 1e-15);
        assert!((gini(&[3.0, 1.0, 2.0]).unwrap() - 2.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert!(matches!(gini(&[0.0, 0.0]), Err(Error::UndefinedGini)));
        assert!(gini(&[1.0, -1.0]).is_err());
        assert!(gini(&[1.0]).is_err());
        assert!(gini(&[1.0, f64::NAN]).is_err());
    }

    proptest! {
        #[test]
        fn matches_double_sum(x in proptest::collection::vec(0.0f64..1e3, 2..200)) {
            prop_assume!(x.iter().sum::<f64>() > 0.0);
            prop_assert!((gini(&x).unwrap() - brute_force(&x)).abs() < 1e-12);
        }

        #[test]
        fn scale_invariant(x in proptest::collection::vec(0.0f64..1e3, 2..200), c in 1e-3f64..1e3) {
            prop_assume!(x.iter().sum::<f64>() > 0.0);
            let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
            prop_assert!((gini(&x).unwrap() - gini(&scaled).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn below_upper_bound(x in proptest::collection::vec(0.0f64..1e3, 2..200)) {
            let nonzero = x.iter().filter(|v| **v > 0.0).count();
            prop_assume!(nonzero >= 1);
            let g = gini(&x).unwrap();
            let bound = 1.0 - 1.0 / x.len() as f64;
            prop_assert!(g >= 0.0);
            if nonzero == 1 {
                prop_assert!((g - bound).abs() < 1e-15);
            } else {
                prop_assert!(g < bound);
            }
        }
    }
}
