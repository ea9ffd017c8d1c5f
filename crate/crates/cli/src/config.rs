//! Experiment configuration.
//!
//! A config file names a model and overrides any part of that model's
//! preset; everything it leaves out keeps the published setup. Objects are
//! merged key by key, except that a tagged object whose `kind` changes
//! replaces the preset value wholesale.

use ngrc_core::analysis::{
    ReconstructionSettings, RosensteinParams, TippingParams, ValidationTolerance,
    WarmupSource,
};
use ngrc_core::ode::{integrate, GenerationRecipe};
use ngrc_core::predictor::ParameterSchedule;
use ngrc_core::{
    CollapseRules, Model, ModelKind, NgrcConfig, RidgeMethod, TrainingSample, TrainingSet,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

/// Upper bound on the number of points a range grid may expand to.
const MAX_GRID_POINTS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GridSpec {
    /// `start, start + step, …` up to and including `stop`.
    Range { start: f64, stop: f64, step: f64 },
    List { values: Vec<f64> },
}

impl GridSpec {
    pub fn range(start: f64, stop: f64, step: f64) -> Self {
        Self::Range { start, stop, step }
    }

    pub fn values(&self) -> Result<Vec<f64>, String> {
        match self {
            Self::List { values } => {
                if values.is_empty() {
                    return Err("grid is empty".into());
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err("grid contains non-finite values".into());
                }
                Ok(values.clone())
            }
            &Self::Range { start, stop, step } => {
                if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
                    return Err("range bounds must be finite".into());
                }
                if step <= 0.0 || stop < start {
                    return Err("range needs step > 0 and stop >= start".into());
                }
                // The small slack keeps `stop` when (stop - start) / step
                // lands a rounding error below an integer.
                let n = ((stop - start) / step + 1e-6).floor() as usize + 1;
                if n > MAX_GRID_POINTS {
                    return Err(format!("range expands to {n} points, the limit is {MAX_GRID_POINTS}"));
                }
                Ok((0..n).map(|i| start + step * i as f64).collect())
            }
        }
    }
}

/// Ground-truth integration settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationConfig {
    pub x0: Vec<f64>,
    pub dt: f64,
    pub n_steps: usize,
    /// Leading fraction of every run dropped before maxima and λ are taken.
    pub transient_fraction: f64,
    /// State component used for the diagram and λ.
    pub observable: usize,
    /// θ values of the ground-truth diagram.
    pub grid: GridSpec,
    pub rules: CollapseRules<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    pub thetas: Vec<f64>,
    pub method: RidgeMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionConfig {
    /// θ of `predict`.
    pub theta: f64,
    /// Steps per rollout, after the warm-up.
    pub n_steps: usize,
    /// θ values of `bifurcation` and `gamma-sweep`.
    pub grid: GridSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonstationaryConfig {
    pub schedule: ParameterSchedule<f64>,
    pub n_steps: usize,
    /// The warm-up is integrated at this θ.
    pub warmup_theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub system: Model<f64>,
    pub generation: GenerationConfig,
    pub ngrc: NgrcConfig<f64>,
    pub training: TrainingConfig,
    /// Scaling parameters of `gamma-sweep`.
    pub gammas: Vec<f64>,
    pub prediction: PredictionConfig,
    pub nonstationary: NonstationaryConfig,
    pub lyapunov: RosensteinParams,
    pub tolerance: ValidationTolerance,
    pub tipping: TippingParams,
}

impl ExperimentConfig {
    pub fn preset(kind: ModelKind) -> Self {
        let system = Model::<f64>::default_for(kind);
        let (grid, ngrc, thetas, gammas, theta, nonstationary) = match kind {
            ModelKind::PowerSystem => (
                GridSpec::range(2.98950, 2.98984, 1e-6),
                NgrcConfig::power_system(),
                vec![2.98953, 2.98956, 2.98960, 2.98964, 2.98967, 2.98969, 2.98975],
                vec![0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 1.0, 1.05, 1.1],
                2.9898,
                NonstationaryConfig {
                    schedule: ParameterSchedule::SinePlusLinear {
                        base: 2.9895,
                        slope: 1.5e-8,
                        amplitude: 5e-5,
                        period: 5000.0,
                    },
                    n_steps: 20_000,
                    warmup_theta: 2.9895,
                },
            ),
            ModelKind::FoodChain => (
                GridSpec::range(0.92, 1.06, 0.00025),
                NgrcConfig::food_chain(),
                vec![0.92, 0.925, 0.93, 0.935, 0.94, 0.945, 0.95],
                vec![0.2, 0.3, 0.4, 0.5, 0.6],
                0.98,
                NonstationaryConfig {
                    schedule: ParameterSchedule::StepSwitch {
                        before: 0.955,
                        after: 0.965,
                        switch_step: 20_000,
                    },
                    n_steps: 40_000,
                    warmup_theta: 0.955,
                },
            ),
        };
        Self {
            model: kind,
            system,
            generation: GenerationConfig {
                x0: system.default_initial_state(),
                dt: system.default_dt(),
                n_steps: system.default_steps(),
                transient_fraction: 0.3,
                observable: system.default_observable(),
                grid: grid.clone(),
                rules: system.default_collapse_rules(),
            },
            ngrc,
            training: TrainingConfig {
                thetas,
                method: RidgeMethod::default(),
            },
            gammas,
            prediction: PredictionConfig {
                theta,
                n_steps: system.default_steps(),
                grid,
            },
            nonstationary,
            lyapunov: RosensteinParams::for_model(kind),
            tolerance: ValidationTolerance::default(),
            tipping: TippingParams::default(),
        }
    }

    /// Parses a config file: the `model` key selects the preset, the rest
    /// overrides it.
    pub fn from_json_str(text: &str) -> Result<Self, CliError> {
        let user: Value = serde_json::from_str(text)
            .map_err(|e| CliError::Config(format!("invalid JSON: {e}")))?;
        let kind = match user.get("model") {
            Some(v) => serde_json::from_value::<ModelKind>(v.clone())
                .map_err(|e| CliError::Config(format!("model: {e}")))?,
            None if user.is_object() => {
                return Err(CliError::Config("model: missing field (power-system or food-chain)".into()))
            }
            None => return Err(CliError::Config("config must be a JSON object".into())),
        };
        let mut merged = serde_json::to_value(Self::preset(kind)).expect("presets serialize");
        merge(&mut merged, user);
        let config: Self = serde_path_to_error::deserialize(merged).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("{path}: {}", e.into_inner()))
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Ground-truth settings for diagram rows.
    pub fn recipe(&self) -> GenerationRecipe<f64> {
        let g = &self.generation;
        GenerationRecipe {
            x0: g.x0.clone(),
            dt: g.dt,
            n_steps: g.n_steps,
            transient_fraction: g.transient_fraction,
            observable: g.observable,
            rules: g.rules,
            lyapunov: Some(self.lyapunov),
        }
    }

    /// Rollouts of `n_steps` seeded by RK4 warm-ups from `generation.x0`.
    pub fn reconstruction(&self, n_steps: usize) -> ReconstructionSettings<f64> {
        let g = &self.generation;
        ReconstructionSettings {
            n_steps,
            row: self.recipe().row_settings(),
            rules: g.rules,
            warmup: WarmupSource::Rk4 {
                system: self.system,
                x0: g.x0.clone(),
                dt: g.dt,
            },
        }
    }

    /// Integrates one training trajectory per `training.thetas` entry.
    pub fn training_set(&self) -> Result<TrainingSet<f64>, CliError> {
        let g = &self.generation;
        let samples = self
            .training
            .thetas
            .iter()
            .map(|&theta| {
                let field = self.system.with_parameter(theta).field()?;
                let run = integrate(&field, &g.x0, g.dt, g.n_steps, g.rules.divergence_bound)?;
                if let Some(step) = run.diverged_at {
                    return Err(CliError::Numerical(format!(
                        "training run at θ={theta} diverged at step {step}"
                    )));
                }
                Ok(TrainingSample {
                    trajectory: run.trajectory,
                    theta,
                })
            })
            .collect::<Result<_, CliError>>()?;
        Ok(TrainingSet::new(samples))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs serialize")
    }

    /// Checks that cannot be expressed in the schema.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |path: &str, msg: String| Err(CliError::Config(format!("{path}: {msg}")));
        if self.system.kind() != self.model {
            return bad("system.kind", format!("must match model `{}`", self.model.as_str()));
        }
        if let Err(e) = self.system.field() {
            return bad("system.params", e.to_string());
        }
        let dim = self.system.dim();
        let g = &self.generation;
        if g.x0.len() != dim {
            return bad("generation.x0", format!("needs {dim} components, got {}", g.x0.len()));
        }
        if g.x0.iter().any(|v| !v.is_finite()) {
            return bad("generation.x0", "must be finite".into());
        }
        if !(g.dt > 0.0 && g.dt.is_finite()) {
            return bad("generation.dt", "must be positive and finite".into());
        }
        if g.n_steps == 0 {
            return bad("generation.n_steps", "must be at least 1".into());
        }
        if !(0.0..1.0).contains(&g.transient_fraction) {
            return bad("generation.transient_fraction", "must lie in [0, 1)".into());
        }
        if g.observable >= dim {
            return bad("generation.observable", format!("must be below the state dimension {dim}"));
        }
        if let Err(e) = g.grid.values() {
            return bad("generation.grid", e);
        }
        if self.ngrc.dim != dim {
            return bad("ngrc.dim", format!("must equal the state dimension {dim}"));
        }
        if let Err(e) = self.ngrc.validate() {
            return bad("ngrc", e.to_string());
        }
        if self.training.thetas.is_empty() {
            return bad("training.thetas", "needs at least one value".into());
        }
        if self.training.thetas.iter().any(|v| !v.is_finite()) {
            return bad("training.thetas", "must be finite".into());
        }
        if self.gammas.iter().any(|v| !v.is_finite()) {
            return bad("gammas", "must be finite".into());
        }
        if self.prediction.n_steps == 0 {
            return bad("prediction.n_steps", "must be at least 1".into());
        }
        if !self.prediction.theta.is_finite() {
            return bad("prediction.theta", "must be finite".into());
        }
        if let Err(e) = self.prediction.grid.values() {
            return bad("prediction.grid", e);
        }
        if self.nonstationary.n_steps == 0 {
            return bad("nonstationary.n_steps", "must be at least 1".into());
        }
        if let Err(e) = self.nonstationary.schedule.resolve(self.nonstationary.n_steps) {
            return bad("nonstationary.schedule", e.to_string());
        }
        if !self.nonstationary.warmup_theta.is_finite() {
            return bad("nonstationary.warmup_theta", "must be finite".into());
        }
        Ok(())
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            let kind_changes = matches!((b.get("kind"), o.get("kind")), (Some(x), Some(y)) if x != y);
            if kind_changes {
                *b = o;
                return;
            }
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_match_published_architectures() {
        let p = ExperimentConfig::preset(ModelKind::PowerSystem);
        assert_eq!((p.ngrc.k, p.ngrc.s, p.ngrc.beta), (2, 2, 1e-8));
        assert_eq!(p.ngrc.orders, vec![1, 2, 3]);
        assert_eq!(p.ngrc.feature_dim(), 493);
        assert_eq!(p.training.thetas.len(), 7);
        let f = ExperimentConfig::preset(ModelKind::FoodChain);
        assert_eq!((f.ngrc.k, f.ngrc.s, f.ngrc.beta), (4, 4, 1e-3));
        assert_eq!(f.ngrc.orders, vec![1, 2]);
        assert_eq!(f.ngrc.feature_dim(), 271);
        assert_eq!(f.training.thetas[0], 0.92);
        p.validate().unwrap();
        f.validate().unwrap();
    }

    #[test]
    fn overrides_merge_into_preset() {
        let c = ExperimentConfig::from_json_str(
            r#"{"model": "food-chain", "ngrc": {"gamma": 0.3}, "generation": {"n_steps": 500}}"#,
        )
        .unwrap();
        assert_eq!(c.ngrc.gamma, 0.3);
        assert_eq!(c.ngrc.beta, 1e-3);
        assert_eq!(c.generation.n_steps, 500);
        assert_eq!(c.generation.dt, 0.1);
    }

    #[test]
    fn tagged_values_are_replaced() {
        let c = ExperimentConfig::from_json_str(
            r#"{"model": "power-system", "prediction": {"grid": {"kind": "list", "values": [2.9896]}}}"#,
        )
        .unwrap();
        assert_eq!(c.prediction.grid.values().unwrap(), vec![2.9896]);
    }

    #[test]
    fn errors_name_the_field() {
        let err = |s: &str| match ExperimentConfig::from_json_str(s) {
            Err(CliError::Config(m)) => m,
            other => panic!("{other:?}"),
        };
        assert!(err(r#"{"model": "power-system", "ngrc": {"gama": 1}}"#).starts_with("ngrc"));
        assert!(err(r#"{"model": "power-system", "generation": {"n_steps": 0}}"#)
            .starts_with("generation.n_steps"));
        assert!(err(r#"{"model": "power-system", "generation": {"dt": "x"}}"#).starts_with("generation.dt"));
        assert!(err(r#"{"model": "power-system", "extra": 1}"#).contains("extra"));
        assert!(err(r#"{"model": "lorenz"}"#).starts_with("model"));
        assert!(err(r#"{"ngrc": {}}"#).starts_with("model"));
        assert!(err("[1]").contains("object"));
    }

    #[test]
    fn round_trip_is_identity() {
        for kind in [ModelKind::PowerSystem, ModelKind::FoodChain] {
            let mut c = ExperimentConfig::preset(kind);
            c.ngrc.gamma = 0.123456789012345;
            c.generation.x0[0] = 0.1 + 0.2;
            let back = ExperimentConfig::from_json_str(&c.to_json()).unwrap();
            assert_eq!(back, c);
            assert_eq!(back.to_json(), c.to_json());
        }
    }

    #[test]
    fn range_grid_keeps_both_ends() {
        let g = GridSpec::range(2.98980, 2.98984, 1e-6).values().unwrap();
        assert_eq!(g.len(), 41);
        assert!((g[40] - 2.98984).abs() < 1e-12);
        assert_eq!(GridSpec::range(0.92, 1.06, 0.00025).values().unwrap().len(), 561);
        assert!(GridSpec::range(1.0, 0.0, 0.1).values().is_err());
        assert!(GridSpec::List { values: vec![] }.values().is_err());
    }
}
