use crate::scalar::{cmp, Scalar};

/// Rankit-transformed sample, in the order of the input.
#[derive(Debug, Clone, PartialEq)]
pub struct RankitVector<T> {
    pub values: Vec<T>,
}

/// 1-based ranks; tied values share their mean rank.
pub fn mean_ranks<T: Scalar>(x: &[T]) -> Vec<T> {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| cmp(&x[a], &x[b]).then(a.cmp(&b)));
    let mut ranks = vec![T::zero(); n];
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && x[order[j]] == x[order[i]] {
            j += 1;
        }
        // positions i..j (0-based) hold ranks i+1..=j
        let r = T::of_usize(i + 1 + j) * T::half();
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

/// `(rank - 0.5) / n` with mean ranks for ties.
pub fn rankit<T: Scalar>(x: &[T]) -> RankitVector<T> {
    let n = T::of_usize(x.len());
    RankitVector {
        values: mean_ranks(x).into_iter().map(|r| (r - T::half()) / n).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn four_distinct_values() {
        let r = rankit(&[10.0, -2.0, 7.5, 3.0]);
        assert_eq!(r.values, vec![0.875, 0.125, 0.625, 0.375]);
    }

    #[test]
    fn all_equal_values_share_the_middle() {
        assert_eq!(rankit(&[2.0f64; 5]).values, vec![0.5; 5]);
    }

    #[test]
    fn ties_take_mean_rank() {
        assert_eq!(mean_ranks(&[1.0, 3.0, 3.0, 2.0]), vec![1.0, 3.5, 3.5, 2.0]);
    }

    proptest! {
        #[test]
        fn invariant_under_increasing_maps(xs in prop::collection::vec(-1e3f64..1e3, 1..60)) {
            let cubed: Vec<f64> = xs.iter().map(|v| v * v * v).collect();
            let shifted: Vec<f64> = xs.iter().map(|v| 3.0 * v + 11.0).collect();
            let base = rankit(&xs);
            prop_assert_eq!(&base, &rankit(&shifted));
            prop_assert_eq!(&base, &rankit(&cubed));
            prop_assert!(base.values.iter().all(|v| *v > 0.0 && *v < 1.0));
        }

        #[test]
        fn distinct_values_map_onto_the_rankit_lattice(n in 1usize..80) {
            let xs: Vec<f64> = (0..n).map(|k| ((k * 37) % 101) as f64 + k as f64 * 1e-3).collect();
            let mut v = rankit(&xs).values;
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (m, val) in v.iter().enumerate() {
                prop_assert_eq!(*val, (m as f64 + 0.5) / n as f64);
            }
        }
    }
}
