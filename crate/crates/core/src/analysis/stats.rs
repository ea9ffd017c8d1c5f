use crate::scalar::Scalar;

/// Two-sample Kolmogorov-Smirnov statistic: the largest gap between the
/// empirical distribution functions of `a` and `b`. Returns 0 when either is empty.
pub fn ks_statistic<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let sorted = |s: &[T]| {
        let mut v: Vec<f64> = s.iter().map(|x| x.as_f64()).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut best) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        best = best.max((i as f64 / na - j as f64 / nb).abs());
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_and_disjoint_samples() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ks_statistic(&a, &a), 0.0);
        assert_eq!(ks_statistic(&a, &[4.0, 5.0]), 1.0);
        assert_eq!(ks_statistic::<f64>(&[], &a), 0.0);
    }

    #[test]
    fn partial_overlap() {
        // F_a jumps to 1/2 at 1 and 1 at 3; F_b to 1/2 at 2 and 1 at 4.
        assert_eq!(ks_statistic(&[1.0, 3.0], &[2.0, 4.0]), 0.5);
        // Ties are consumed together.
        assert_eq!(ks_statistic(&[1.0, 1.0, 2.0, 2.0], &[1.0, 2.0]), 0.0);
    }
}
