//! Collapse rules shared by ground-truth generation and model rollouts.

use serde::{Deserialize, Serialize};

use crate::ode::is_diverged;
use crate::scalar::Scalar;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CollapseKind {
    /// Non-finite state or a component beyond the divergence bound.
    Divergence,
    /// Load voltage held below its threshold.
    VoltageCollapse,
    /// A population held below its threshold.
    Extinction,
}

impl CollapseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Divergence => "divergence",
            Self::VoltageCollapse => "voltage-collapse",
            Self::Extinction => "extinction",
        }
    }
}

impl std::fmt::Display for CollapseKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Collapse {
    /// Index of the first offending state (start of the run for sustained rules).
    pub step: usize,
    pub kind: CollapseKind,
}

/// `state[component] < threshold` for at least `min_steps` consecutive states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SustainedBelow<T> {
    pub component: usize,
    pub threshold: T,
    pub min_steps: usize,
    pub kind: CollapseKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollapseRules<T> {
    pub divergence_bound: T,
    pub sustained: Option<SustainedBelow<T>>,
}

impl<T: Scalar> CollapseRules<T> {
    /// Only the divergence bound.
    pub fn divergence_only(bound: T) -> Self {
        Self {
            divergence_bound: bound,
            sustained: None,
        }
    }

    pub fn monitor(&self) -> CollapseMonitor<T> {
        CollapseMonitor {
            rules: *self,
            run_start: None,
        }
    }
}

/// Incremental collapse detector fed one state at a time.
#[derive(Debug, Clone)]
pub struct CollapseMonitor<T> {
    rules: CollapseRules<T>,
    run_start: Option<usize>,
}

impl<T: Scalar> CollapseMonitor<T> {
    /// Feeds the state with index `step`; steps must be consecutive.
    pub fn observe(&mut self, step: usize, state: &[T]) -> Option<Collapse> {
        if is_diverged(state, self.rules.divergence_bound) {
            return Some(Collapse {
                step,
                kind: CollapseKind::Divergence,
            });
        }
        let rule = self.rules.sustained?;
        if state[rule.component] < rule.threshold {
            let start = *self.run_start.get_or_insert(step);
            if step + 1 - start >= rule.min_steps {
                return Some(Collapse {
                    step: start,
                    kind: rule.kind,
                });
            }
        } else {
            self.run_start = None;
        }
        None
    }
}

/// First collapse in `traj` under `rules`, if any.
pub fn detect_collapse<T: Scalar>(traj: &Trajectory<T>, rules: &CollapseRules<T>) -> Option<Collapse> {
    let mut monitor = rules.monitor();
    traj.states()
        .enumerate()
        .find_map(|(i, s)| monitor.observe(i, s))
}
