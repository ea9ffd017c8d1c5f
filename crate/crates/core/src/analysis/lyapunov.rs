//! Largest Lyapunov exponent estimators.
//!
//! [`rosenstein_lle`] works on a scalar time series alone: it delay-embeds the
//! series, pairs every point with its nearest neighbour outside a Theiler
//! window, and fits the slope of the mean log-separation curve.
//! [`benettin_lle`] needs the vector field and tracks a renormalized companion
//! trajectory; it serves as a model-based reference for the former.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::ode::{is_diverged, ModelKind, Rk4, VectorField};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LyapunovMethod {
    Rosenstein,
    Benettin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate<T> {
    /// Exponent per unit time.
    pub lambda_max: T,
    /// Step window the estimate was taken over: the fitted part of the
    /// divergence curve (Rosenstein) or the averaging interval (Benettin).
    pub fit_range: (usize, usize),
    pub method: LyapunovMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RosensteinParams {
    pub embed_dim: usize,
    /// Embedding delay in (strided) samples; `None` picks the first zero
    /// crossing of the autocorrelation, capped at `max_delay`.
    #[serde(default)]
    pub delay: Option<usize>,
    pub max_delay: usize,
    /// Temporal exclusion for neighbour search; `None` uses the mean period.
    #[serde(default)]
    pub theiler: Option<usize>,
    /// Inclusive window of divergence-curve steps used for the slope fit.
    pub fit_start: usize,
    pub fit_end: usize,
    /// Keep every `stride`-th sample before embedding.
    pub stride: usize,
}

impl Default for RosensteinParams {
    fn default() -> Self {
        Self {
            embed_dim: 5,
            delay: None,
            max_delay: 50,
            theiler: None,
            fit_start: 5,
            fit_end: 50,
            stride: 1,
        }
    }
}

impl RosensteinParams {
    /// Settings tuned to each benchmark's time scales: the power system is
    /// fitted over a longer stretch of its divergence curve, and the slower
    /// food chain is thinned to one sample per time unit first.
    pub fn for_model(kind: ModelKind) -> Self {
        match kind {
            ModelKind::PowerSystem => Self {
                fit_start: 10,
                fit_end: 100,
                ..Self::default()
            },
            ModelKind::FoodChain => Self {
                fit_start: 50,
                fit_end: 500,
                stride: 10,
                ..Self::default()
            },
        }
    }

    fn validate(&self) -> Result<(), AnalysisError> {
        if self.embed_dim == 0 || self.stride == 0 || self.max_delay == 0 {
            return Err(AnalysisError::InvalidParams(
                "embed_dim, stride and max_delay must be positive".into(),
            ));
        }
        if self.fit_end <= self.fit_start {
            return Err(AnalysisError::InvalidParams(format!(
                "fit window {}..{} is empty",
                self.fit_start, self.fit_end
            )));
        }
        if self.delay == Some(0) {
            return Err(AnalysisError::InvalidParams("delay must be positive".into()));
        }
        Ok(())
    }
}

/// First lag at which the autocorrelation of `x` is non-positive, capped at `cap`.
pub fn autocorrelation_zero<T: Scalar>(x: &[T], cap: usize) -> usize {
    let n = x.len();
    let mean = mean(x);
    let c: Vec<T> = x.iter().map(|v| *v - mean).collect();
    for lag in 1..=cap.min(n.saturating_sub(1)) {
        let acc = c[..n - lag]
            .iter()
            .zip(&c[lag..])
            .fold(T::zero(), |acc, (a, b)| acc + *a * *b);
        if acc <= T::zero() {
            return lag;
        }
    }
    cap.max(1)
}

/// Mean spacing between upward zero crossings of the mean-removed series,
/// or `None` with fewer than two crossings.
pub fn mean_period<T: Scalar>(x: &[T]) -> Option<usize> {
    let mean = mean(x);
    let ups: Vec<usize> = (1..x.len())
        .filter(|&i| x[i - 1] - mean < T::zero() && x[i] - mean >= T::zero())
        .collect();
    if ups.len() < 2 {
        return None;
    }
    let span = (ups[ups.len() - 1] - ups[0]) as f64;
    Some((span / (ups.len() - 1) as f64).round() as usize)
}

fn mean<T: Scalar>(x: &[T]) -> T {
    x.iter().fold(T::zero(), |a, b| a + *b) / T::from_count(x.len().max(1))
}

/// Rosenstein estimate of the largest Lyapunov exponent of `series`, sampled every `dt`.
pub fn rosenstein_lle<T: Scalar>(
    series: &[T],
    dt: T,
    params: &RosensteinParams,
) -> Result<LyapunovEstimate<T>, AnalysisError> {
    params.validate()?;
    let x: Vec<T> = series.iter().step_by(params.stride).copied().collect();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFinite);
    }
    let delay = params
        .delay
        .unwrap_or_else(|| autocorrelation_zero(&x, params.max_delay));
    let theiler = params
        .theiler
        .or_else(|| mean_period(&x))
        .unwrap_or(x.len() / 10);
    let span = (params.embed_dim - 1) * delay;
    let needed = span + params.fit_end + 2;
    if x.len() < needed {
        return Err(AnalysisError::TooShort {
            needed: needed * params.stride,
            got: series.len(),
        });
    }
    let m = params.embed_dim;
    let count = x.len() - span;
    let mut points = Vec::with_capacity(count * m);
    for i in 0..count {
        points.extend((0..m).map(|a| x[i + a * delay]));
    }
    let neighbours = nearest_neighbours(&points, m, theiler);

    let horizon = params.fit_end;
    let mut sum = vec![T::zero(); horizon + 1];
    let mut pairs = vec![0usize; horizon + 1];
    for (i, nb) in neighbours.iter().enumerate() {
        let Some(j) = *nb else { continue };
        for t in 0..=horizon {
            if i + t >= count || j + t >= count {
                break;
            }
            let d2 = sq_dist(&points[(i + t) * m..(i + t + 1) * m], &points[(j + t) * m..(j + t + 1) * m]);
            if d2 > T::zero() {
                sum[t] += d2.ln() * T::lit(0.5);
                pairs[t] += 1;
            }
        }
    }
    if pairs[params.fit_start..=horizon].iter().any(|&c| c == 0) {
        return Err(AnalysisError::NoNeighbours);
    }
    let curve: Vec<(T, T)> = (params.fit_start..=horizon)
        .map(|t| (T::from_count(t), sum[t] / T::from_count(pairs[t])))
        .collect();
    let slope = least_squares_slope(&curve);
    Ok(LyapunovEstimate {
        lambda_max: slope / (dt * T::from_count(params.stride)),
        fit_range: (params.fit_start, params.fit_end),
        method: LyapunovMethod::Rosenstein,
    })
}

fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (p, q)| acc + (*p - *q) * (*p - *q))
}

fn least_squares_slope<T: Scalar>(pts: &[(T, T)]) -> T {
    let n = T::from_count(pts.len());
    let mx = pts.iter().fold(T::zero(), |a, p| a + p.0) / n;
    let my = pts.iter().fold(T::zero(), |a, p| a + p.1) / n;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for &(x, y) in pts {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

/// Nearest neighbour (squared Euclidean, strictly positive distance) of every
/// embedded point among points more than `theiler` indices away.
///
/// Candidates are scanned outward in order of the first coordinate, so the
/// search stops once that coordinate alone exceeds the best distance. Ties go
/// to the lower index, keeping the result independent of thread scheduling.
fn nearest_neighbours<T: Scalar>(points: &[T], m: usize, theiler: usize) -> Vec<Option<usize>> {
    let count = points.len() / m;
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_by(|&a, &b| {
        points[a * m]
            .partial_cmp(&points[b * m])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut rank = vec![0usize; count];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    (0..count)
        .into_par_iter()
        .map(|i| {
            let pi = &points[i * m..(i + 1) * m];
            let mut best: Option<(T, usize)> = None;
            let mut consider = |j: usize| -> bool {
                let gap = points[j * m] - pi[0];
                if let Some((bd, _)) = best {
                    if gap * gap > bd {
                        return false;
                    }
                }
                if i.abs_diff(j) > theiler {
                    let d2 = sq_dist(pi, &points[j * m..(j + 1) * m]);
                    if d2 > T::zero() {
                        let better = match best {
                            None => true,
                            Some((bd, bj)) => d2 < bd || (d2 == bd && j < bj),
                        };
                        if better {
                            best = Some((d2, j));
                        }
                    }
                }
                true
            };
            let r = rank[i];
            for &j in &order[r + 1..] {
                if !consider(j) {
                    break;
                }
            }
            for &j in order[..r].iter().rev() {
                if !consider(j) {
                    break;
                }
            }
            best.map(|(_, j)| j)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenettinParams<T> {
    pub dt: T,
    /// Steps averaged over after the transient.
    pub n_steps: usize,
    pub transient: usize,
    pub renorm_interval: usize,
    /// Initial and renormalized separation.
    pub d0: T,
    pub divergence_bound: T,
}

impl<T: Scalar> BenettinParams<T> {
    pub fn new(dt: T, n_steps: usize, transient: usize) -> Self {
        Self {
            dt,
            n_steps,
            transient,
            renorm_interval: 10,
            d0: T::lit(1e-8),
            divergence_bound: T::lit(crate::ode::DEFAULT_DIVERGENCE_BOUND),
        }
    }
}

/// Two-trajectory (Benettin) estimate of the largest Lyapunov exponent.
pub fn benettin_lle<T: Scalar, F: VectorField<T> + ?Sized>(
    field: &F,
    x0: &[T],
    params: &BenettinParams<T>,
) -> Result<LyapunovEstimate<T>, AnalysisError> {
    if params.renorm_interval == 0 || params.n_steps < params.renorm_interval {
        return Err(AnalysisError::InvalidParams(
            "n_steps must cover at least one renormalization interval".into(),
        ));
    }
    if !(params.d0 > T::zero()) || !(params.dt > T::zero()) {
        return Err(AnalysisError::InvalidParams("dt and d0 must be positive".into()));
    }
    let dim = x0.len();
    let mut rk = Rk4::new(dim);
    let mut base = x0.to_vec();
    for step in 1..=params.transient {
        rk.step(field, &mut base, params.dt);
        if is_diverged(&base, params.divergence_bound) {
            return Err(AnalysisError::Diverged { step });
        }
    }
    let offset = params.d0 / T::from_count(dim).sqrt();
    let mut companion: Vec<T> = base.iter().map(|v| *v + offset).collect();
    let intervals = params.n_steps / params.renorm_interval;
    let mut log_sum = T::zero();
    let mut step = params.transient;
    for _ in 0..intervals {
        for _ in 0..params.renorm_interval {
            rk.step(field, &mut base, params.dt);
            rk.step(field, &mut companion, params.dt);
            step += 1;
            if is_diverged(&base, params.divergence_bound) {
                return Err(AnalysisError::Diverged { step });
            }
        }
        let dist = sq_dist(&base, &companion).sqrt();
        if !(dist > T::zero()) || !dist.is_finite() {
            return Err(AnalysisError::NonFinite);
        }
        log_sum += (dist / params.d0).ln();
        let scale = params.d0 / dist;
        for (c, b) in companion.iter_mut().zip(&base) {
            *c = *b + (*c - *b) * scale;
        }
    }
    let elapsed = T::from_count(intervals * params.renorm_interval) * params.dt;
    Ok(LyapunovEstimate {
        lambda_max: log_sum / elapsed,
        fit_range: (params.transient, params.transient + intervals * params.renorm_interval),
        method: LyapunovMethod::Benettin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::FnField;

    #[test]
    fn sine_is_not_chaotic() {
        let dt = 0.05;
        let s: Vec<f64> = (0..8000).map(|i| (i as f64 * dt).sin()).collect();
        let est = rosenstein_lle(&s, dt, &RosensteinParams::default()).unwrap();
        assert!(est.lambda_max <= 0.01, "{}", est.lambda_max);
        assert_eq!(est.method, LyapunovMethod::Rosenstein);
    }

    #[test]
    fn constant_series_is_rejected() {
        let s = vec![0.4; 3000];
        assert!(matches!(
            rosenstein_lle(&s, 0.1, &RosensteinParams::default()),
            Err(AnalysisError::NoNeighbours)
        ));
    }

    #[test]
    fn short_series_is_rejected() {
        let s: Vec<f64> = (0..40).map(|i| (i as f64).sin()).collect();
        assert!(matches!(
            rosenstein_lle(&s, 0.1, &RosensteinParams::default()),
            Err(AnalysisError::TooShort { .. })
        ));
    }

    #[test]
    fn logistic_map_exponent() {
        // The fully chaotic logistic map has λ = ln 2 per iteration.
        let mut x = 0.1234f64;
        let s: Vec<f64> = (0..6000)
            .map(|_| {
                x = 4.0 * x * (1.0 - x);
                x
            })
            .collect();
        let params = RosensteinParams {
            embed_dim: 1,
            delay: Some(1),
            theiler: Some(1),
            fit_start: 0,
            fit_end: 4,
            ..Default::default()
        };
        let est = rosenstein_lle(&s, 1.0, &params).unwrap();
        assert!((est.lambda_max - 2f64.ln()).abs() < 0.1, "{}", est.lambda_max);
    }

    #[test]
    fn neighbour_search_matches_brute_force() {
        let mut x = 0.3f64;
        let s: Vec<f64> = (0..600)
            .map(|_| {
                x = 3.9 * x * (1.0 - x);
                x
            })
            .collect();
        let m = 3;
        let count = s.len() - 2;
        let pts: Vec<f64> = (0..count).flat_map(|i| [s[i], s[i + 1], s[i + 2]]).collect();
        let fast = nearest_neighbours(&pts, m, 4);
        for i in 0..count {
            let mut best: Option<(f64, usize)> = None;
            for j in 0..count {
                if i.abs_diff(j) <= 4 {
                    continue;
                }
                let d = sq_dist(&pts[i * m..i * m + m], &pts[j * m..j * m + m]);
                if d > 0.0 && best.map_or(true, |(bd, _)| d < bd) {
                    best = Some((d, j));
                }
            }
            assert_eq!(fast[i], best.map(|b| b.1), "point {i}");
        }
    }

    #[test]
    fn benettin_linear_decay() {
        let f = FnField::new(2, |x: &[f64], dx: &mut [f64]| {
            dx[0] = -x[0];
            dx[1] = -x[1];
        });
        let est = benettin_lle(&f, &[1.0, -0.5], &BenettinParams::new(0.01, 5000, 100)).unwrap();
        assert!((est.lambda_max + 1.0).abs() < 0.05, "{}", est.lambda_max);
    }

    #[test]
    fn benettin_reports_divergence() {
        let f = FnField::new(1, |x: &[f64], dx: &mut [f64]| dx[0] = x[0] * x[0]);
        assert!(matches!(
            benettin_lle(&f, &[1.0], &BenettinParams::new(0.1, 1000, 0)),
            Err(AnalysisError::Diverged { .. })
        ));
    }

    #[test]
    fn helpers() {
        let s: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.1).sin()).collect();
        // Period 2π/0.1 ≈ 62.8 samples, first ACF zero near a quarter period.
        assert_eq!(mean_period(&s), Some(63));
        let z = autocorrelation_zero(&s, 50);
        assert!((15..=17).contains(&z), "{z}");
        assert_eq!(autocorrelation_zero(&s, 5), 5);
        assert_eq!(mean_period(&[1.0, 1.0, 1.0]), None);
    }
}
