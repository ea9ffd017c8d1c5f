use serde::{Deserialize, Serialize};

use super::BifurcationDiagram;
use crate::collapse::CollapseKind;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TippingKind {
    /// Bounded row followed by a collapsed one.
    CollapseOnset,
    /// Collapsed row followed by a bounded one.
    CollapseRecovery,
    /// Sudden jump of the scatter envelope between two bounded rows.
    Discontinuity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TippingPoint<T> {
    /// Midpoint of the two grid values bracketing the change.
    pub theta_critical: T,
    pub kind: TippingKind,
    /// Collapse type on the collapsed side, for collapse flips.
    pub collapse: Option<CollapseKind>,
    /// Envelope jump, for discontinuities.
    pub jump: Option<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TippingParams {
    /// A jump must exceed this multiple of the median neighbouring jump.
    pub jump_factor: f64,
    /// Neighbouring row pairs on each side used for the median.
    pub window: usize,
    /// A jump must also exceed this fraction of the diagram's scatter span.
    pub min_jump_fraction: f64,
}

impl Default for TippingParams {
    fn default() -> Self {
        Self {
            jump_factor: 3.0,
            window: 5,
            min_jump_fraction: 0.02,
        }
    }
}

/// Collapse flips and scatter discontinuities in a θ-sorted diagram.
pub fn find_tipping<T: Scalar>(
    diagram: &BifurcationDiagram<T>,
    params: &TippingParams,
) -> Vec<TippingPoint<T>> {
    let rows = &diagram.rows;
    let half = T::lit(0.5);
    let mut out = Vec::new();
    for w in rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let kind = match (a.collapse, b.collapse) {
            (None, Some(c)) => Some((TippingKind::CollapseOnset, c.kind)),
            (Some(c), None) => Some((TippingKind::CollapseRecovery, c.kind)),
            _ => None,
        };
        if let Some((kind, c)) = kind {
            out.push(TippingPoint {
                theta_critical: (a.theta + b.theta) * half,
                kind,
                collapse: Some(c),
                jump: None,
            });
        }
    }

    // Envelope jumps between adjacent bounded rows.
    let envelope = |i: usize| -> Option<(f64, f64)> {
        let r = &rows[i];
        if r.collapse.is_some() || r.scatter.is_empty() {
            return None;
        }
        let lo = r.scatter.iter().fold(f64::INFINITY, |m, v| m.min(v.as_f64()));
        let hi = r.scatter.iter().fold(f64::NEG_INFINITY, |m, v| m.max(v.as_f64()));
        Some((lo, hi))
    };
    let envs: Vec<Option<(f64, f64)>> = (0..rows.len()).map(envelope).collect();
    let (lo, hi) = envs.iter().flatten().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), e| {
        (l.min(e.0), h.max(e.1))
    });
    let span = hi - lo;
    // jumps[i] belongs to the pair (i, i + 1).
    let jumps: Vec<Option<f64>> = (0..rows.len().saturating_sub(1))
        .map(|i| match (envs[i], envs[i + 1]) {
            (Some(a), Some(b)) => Some((a.0 - b.0).abs().max((a.1 - b.1).abs())),
            _ => None,
        })
        .collect();
    for (i, jump) in jumps.iter().enumerate() {
        let Some(jump) = *jump else { continue };
        let from = i.saturating_sub(params.window);
        let to = (i + params.window + 1).min(jumps.len());
        let mut local: Vec<f64> = (from..to)
            .filter(|&j| j != i)
            .filter_map(|j| jumps[j])
            .collect();
        local.sort_by(f64::total_cmp);
        let median = if local.is_empty() {
            0.0
        } else if local.len() % 2 == 1 {
            local[local.len() / 2]
        } else {
            0.5 * (local[local.len() / 2 - 1] + local[local.len() / 2])
        };
        if jump > params.jump_factor * median && jump > params.min_jump_fraction * span {
            out.push(TippingPoint {
                theta_critical: (rows[i].theta + rows[i + 1].theta) * half,
                kind: TippingKind::Discontinuity,
                collapse: None,
                jump: Some(T::lit(jump)),
            });
        }
    }
    out.sort_by(|a, b| a.theta_critical.partial_cmp(&b.theta_critical).expect("finite"));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::BifurcationRow;
    use crate::collapse::Collapse;

    fn row(theta: f64, scatter: Vec<f64>, collapsed: bool) -> BifurcationRow<f64> {
        BifurcationRow {
            theta,
            scatter,
            lambda_max: None,
            collapse: collapsed.then_some(Collapse {
                step: 10,
                kind: CollapseKind::Divergence,
            }),
            note: None,
        }
    }

    #[test]
    fn smooth_diagram_has_no_tipping() {
        let rows = (0..40)
            .map(|i| {
                let t = i as f64 * 0.01;
                row(t, vec![1.0 + t, 1.1 + t, 0.9 + 0.5 * t], false)
            })
            .collect();
        let d = BifurcationDiagram::new(0, rows);
        assert!(find_tipping(&d, &TippingParams::default()).is_empty());
    }

    #[test]
    fn single_collapse_flip() {
        let rows = (0..20)
            .map(|i| row(i as f64, vec![1.0, 1.2], i >= 13))
            .collect();
        let d = BifurcationDiagram::new(0, rows);
        let t = find_tipping(&d, &TippingParams::default());
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].kind, TippingKind::CollapseOnset);
        assert_eq!(t[0].theta_critical, 12.5);
        assert_eq!(t[0].collapse, Some(CollapseKind::Divergence));
    }

    #[test]
    fn envelope_jump_is_flagged() {
        let rows = (0..30)
            .map(|i| {
                let t = i as f64 * 0.01;
                let base = if i < 17 { 1.0 } else { 1.4 };
                row(t, vec![base + 0.01 * t, base + 0.2 + 0.01 * t], false)
            })
            .collect();
        let d = BifurcationDiagram::new(0, rows);
        let t = find_tipping(&d, &TippingParams::default());
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].kind, TippingKind::Discontinuity);
        assert!((t[0].theta_critical - 0.165).abs() < 1e-12);
    }
}
