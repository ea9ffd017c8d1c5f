use crate::scalar::Scalar;

/// Strict interior local maxima of `series`, ignoring the first `discard` samples.
///
/// A sample qualifies when both neighbours are strictly smaller and all three
/// lie past the discarded prefix.
pub fn local_maxima<T: Scalar>(series: &[T], discard: usize) -> Vec<T> {
    if series.len() < discard + 3 {
        return Vec::new();
    }
    series[discard..]
        .windows(3)
        .filter(|w| w[1] > w[0] && w[1] > w[2])
        .map(|w| w[1])
        .collect()
}
