use serde::{Deserialize, Serialize};

use super::{FoodChain, FoodChainParams, OdeError, PowerSystem, PowerSystemParams, VectorField};
use crate::collapse::{CollapseKind, CollapseRules, SustainedBelow};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    PowerSystem,
    FoodChain,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::PowerSystem => "power-system",
            Self::FoodChain => "food-chain",
        }
    }
}

/// One of the benchmark systems together with its parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum Model<T> {
    PowerSystem(PowerSystemParams<T>),
    FoodChain(FoodChainParams<T>),
}

impl<T: Scalar> Model<T> {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::PowerSystem => Self::PowerSystem(PowerSystemParams::default()),
            ModelKind::FoodChain => Self::FoodChain(FoodChainParams::default()),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Self::PowerSystem(_) => ModelKind::PowerSystem,
            Self::FoodChain(_) => ModelKind::FoodChain,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::PowerSystem(_) => 4,
            Self::FoodChain(_) => 3,
        }
    }

    /// Current value of the bifurcation parameter (`Q1` or `K`).
    pub fn parameter(&self) -> T {
        match self {
            Self::PowerSystem(p) => p.q1,
            Self::FoodChain(p) => p.k,
        }
    }

    /// Copy of the model with the bifurcation parameter replaced.
    pub fn with_parameter(&self, theta: T) -> Self {
        match *self {
            Self::PowerSystem(p) => Self::PowerSystem(PowerSystemParams { q1: theta, ..p }),
            Self::FoodChain(p) => Self::FoodChain(FoodChainParams { k: theta, ..p }),
        }
    }

    pub fn default_initial_state(&self) -> Vec<T> {
        match self {
            Self::PowerSystem(_) => PowerSystemParams::<T>::default_initial_state().to_vec(),
            Self::FoodChain(_) => FoodChainParams::<T>::default_initial_state().to_vec(),
        }
    }

    pub fn default_dt(&self) -> T {
        match self {
            Self::PowerSystem(_) => T::lit(0.05),
            Self::FoodChain(_) => T::lit(0.1),
        }
    }

    pub fn default_steps(&self) -> usize {
        match self {
            Self::PowerSystem(_) => 10_000,
            Self::FoodChain(_) => 25_000,
        }
    }

    /// Index of the component whose maxima populate bifurcation diagrams
    /// (`V` for the power system, `P` for the food chain).
    pub fn default_observable(&self) -> usize {
        match self {
            Self::PowerSystem(_) => 3,
            Self::FoodChain(_) => 2,
        }
    }

    pub fn default_collapse_rules(&self) -> CollapseRules<T> {
        let bound = T::lit(super::DEFAULT_DIVERGENCE_BOUND);
        let sustained = match self {
            Self::PowerSystem(_) => SustainedBelow {
                component: 3,
                threshold: T::lit(0.05),
                min_steps: 200,
                kind: CollapseKind::VoltageCollapse,
            },
            Self::FoodChain(_) => SustainedBelow {
                component: 2,
                threshold: T::lit(1e-6),
                min_steps: 200,
                kind: CollapseKind::Extinction,
            },
        };
        CollapseRules {
            divergence_bound: bound,
            sustained: Some(sustained),
        }
    }

    /// Validated vector field for this parameter set.
    pub fn field(&self) -> Result<ModelField<T>, OdeError> {
        Ok(match *self {
            Self::PowerSystem(p) => ModelField::PowerSystem(PowerSystem::new(p)?),
            Self::FoodChain(p) => ModelField::FoodChain(FoodChain::new(p)?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelField<T> {
    PowerSystem(PowerSystem<T>),
    FoodChain(FoodChain<T>),
}

impl<T: Scalar> VectorField<T> for ModelField<T> {
    fn dim(&self) -> usize {
        match self {
            Self::PowerSystem(f) => f.dim(),
            Self::FoodChain(f) => f.dim(),
        }
    }

    #[inline]
    fn eval(&self, x: &[T], dx: &mut [T]) {
        match self {
            Self::PowerSystem(f) => f.eval(x, dx),
            Self::FoodChain(f) => f.eval(x, dx),
        }
    }
}
