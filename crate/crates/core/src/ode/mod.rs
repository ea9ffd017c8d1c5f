//! Ground-truth data generation: fixed-step RK4 integration of the benchmark
//! ODE systems and reference bifurcation diagrams built from them.

mod food_chain;
mod ground_truth;
mod model;
mod power_system;

pub use food_chain::{food_chain_deriv, FoodChain, FoodChainParams};
pub use ground_truth::{ground_truth_bifurcation, GenerationRecipe};
pub use model::{Model, ModelField, ModelKind};
pub use power_system::{
    derived_constants, power_system_deriv, DerivedPowerConstants, PowerSystem, PowerSystemParams,
};

use thiserror::Error;

use crate::scalar::Scalar;
use crate::trajectory::Trajectory;

/// Any component above this magnitude (or non-finite) marks a diverged state.
pub const DEFAULT_DIVERGENCE_BOUND: f64 = 1e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("number of integration steps must be at least 1")]
    ZeroSteps,
    #[error("time step must be positive and finite, got {0}")]
    InvalidTimeStep(f64),
    #[error("initial state has dimension {got}, the model needs {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid model parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("{0}")]
    DivisionByZero(&'static str),
}

/// Autonomous vector field `dx/dt = f(x)`.
pub trait VectorField<T: Scalar>: Sync {
    fn dim(&self) -> usize;

    /// Writes `f(x)` into `dx`; both slices have length [`VectorField::dim`].
    fn eval(&self, x: &[T], dx: &mut [T]);
}

/// Adapts a closure into a [`VectorField`].
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F> FnField<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<T: Scalar, F: Fn(&[T], &mut [T]) + Sync> VectorField<T> for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[T], dx: &mut [T]) {
        (self.f)(x, dx)
    }
}

/// Classical fourth-order Runge-Kutta stepper with reusable stage buffers.
#[derive(Debug, Clone)]
pub struct Rk4<T> {
    k1: Vec<T>,
    k2: Vec<T>,
    k3: Vec<T>,
    k4: Vec<T>,
    tmp: Vec<T>,
}

impl<T: Scalar> Rk4<T> {
    pub fn new(dim: usize) -> Self {
        let z = vec![T::zero(); dim];
        Self {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }

    /// Advances `x` in place by one step of size `dt`.
    pub fn step<F: VectorField<T> + ?Sized>(&mut self, field: &F, x: &mut [T], dt: T) {
        let half = dt * T::lit(0.5);
        let n = x.len();
        field.eval(x, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = x[i] + half * self.k1[i];
        }
        field.eval(&self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = x[i] + half * self.k2[i];
        }
        field.eval(&self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = x[i] + dt * self.k3[i];
        }
        field.eval(&self.tmp, &mut self.k4);
        let sixth = dt / T::lit(6.0);
        let two = T::lit(2.0);
        for i in 0..n {
            x[i] += sixth * (self.k1[i] + two * self.k2[i] + two * self.k3[i] + self.k4[i]);
        }
    }
}

/// One RK4 step from `x`; the result may contain non-finite values, see [`is_diverged`].
pub fn rk4_step<T: Scalar, F: VectorField<T> + ?Sized>(field: &F, x: &[T], dt: T) -> Vec<T> {
    let mut next = x.to_vec();
    Rk4::new(x.len()).step(field, &mut next, dt);
    next
}

/// True when any component is non-finite or exceeds `bound` in magnitude.
pub fn is_diverged<T: Scalar>(x: &[T], bound: T) -> bool {
    x.iter().any(|v| !v.is_finite() || v.abs() > bound)
}

/// Result of [`integrate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Integration<T> {
    /// States `x_0 ..` up to (excluding) the first diverged state.
    pub trajectory: Trajectory<T>,
    /// Step index of the first diverged state, if integration halted early.
    pub diverged_at: Option<usize>,
}

/// Integrates `n_steps` RK4 steps from `x0`, producing `n_steps + 1` states
/// unless a state diverges, in which case integration halts and the index of
/// the diverged state is reported.
pub fn integrate<T: Scalar, F: VectorField<T> + ?Sized>(
    field: &F,
    x0: &[T],
    dt: T,
    n_steps: usize,
    divergence_bound: T,
) -> Result<Integration<T>, OdeError> {
    if n_steps == 0 {
        return Err(OdeError::ZeroSteps);
    }
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(OdeError::InvalidTimeStep(dt.as_f64()));
    }
    if x0.len() != field.dim() {
        return Err(OdeError::DimensionMismatch {
            expected: field.dim(),
            got: x0.len(),
        });
    }
    let mut trajectory = Trajectory::from_initial(x0, dt, T::zero());
    if is_diverged(x0, divergence_bound) {
        trajectory.truncate(0);
        return Ok(Integration {
            trajectory,
            diverged_at: Some(0),
        });
    }
    let mut rk = Rk4::new(x0.len());
    let mut x = x0.to_vec();
    for step in 1..=n_steps {
        rk.step(field, &mut x, dt);
        if is_diverged(&x, divergence_bound) {
            return Ok(Integration {
                trajectory,
                diverged_at: Some(step),
            });
        }
        trajectory.push(&x);
    }
    Ok(Integration {
        trajectory,
        diverged_at: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay() -> FnField<impl Fn(&[f64], &mut [f64]) + Sync> {
        FnField::new(1, |x: &[f64], dx: &mut [f64]| dx[0] = -x[0])
    }

    #[test]
    fn zero_field_is_fixed() {
        let f = FnField::new(2, |_: &[f64], dx: &mut [f64]| dx.fill(0.0));
        assert_eq!(rk4_step(&f, &[1.0, 2.0], 0.1), vec![1.0, 2.0]);
    }

    #[test]
    fn exponential_growth_matches_analytic() {
        let f = FnField::new(1, |x: &[f64], dx: &mut [f64]| dx[0] = x[0]);
        let y = rk4_step(&f, &[1.0], 0.1)[0];
        // Local truncation error of RK4 is dt^5/120 for this field.
        assert!((y - 0.1f64.exp()).abs() < 1e-7, "{y}");
        assert!((y - 1.105_170_833_333_333_3).abs() < 1e-15);
    }

    #[test]
    fn exponential_decay_matches_analytic() {
        let y = rk4_step(&decay(), &[1.0], 0.05)[0];
        assert!((y - (-0.05f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn single_precision_step() {
        let f = FnField::new(1, |x: &[f32], dx: &mut [f32]| dx[0] = -x[0]);
        let y = rk4_step(&f, &[1.0f32], 0.05)[0];
        assert!((y - (-0.05f32).exp()).abs() < 1e-6);
    }

    #[test]
    fn fourth_order_convergence() {
        let err = |n: usize| {
            let dt = 1.0 / n as f64;
            let out = integrate(&decay(), &[1.0], dt, n, 1e6).unwrap();
            (out.trajectory.last()[0] - (-1.0f64).exp()).abs()
        };
        for n in [10, 20, 40] {
            let ratio = err(n) / err(2 * n);
            assert!((12.0..=20.0).contains(&ratio), "ratio {ratio} at n={n}");
        }
    }

    #[test]
    fn integrate_counts_states_and_validates() {
        let out = integrate(&decay(), &[1.0], 0.1, 5, 1e6).unwrap();
        assert_eq!(out.trajectory.len(), 6);
        assert_eq!(out.diverged_at, None);
        assert_eq!(integrate(&decay(), &[1.0], 0.1, 0, 1e6), Err(OdeError::ZeroSteps));
        assert!(matches!(
            integrate(&decay(), &[1.0], -0.1, 3, 1e6),
            Err(OdeError::InvalidTimeStep(_))
        ));
        assert!(matches!(
            integrate(&decay(), &[1.0, 2.0], 0.1, 3, 1e6),
            Err(OdeError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn constant_field_gives_constant_trajectory() {
        let f = FnField::new(2, |_: &[f64], dx: &mut [f64]| dx.fill(0.0));
        let out = integrate(&f, &[0.3, -0.7], 0.2, 50, 1e6).unwrap();
        assert!(out.trajectory.states().all(|s| s == [0.3, -0.7]));
    }

    #[test]
    fn blow_up_is_flagged_with_step() {
        let f = FnField::new(1, |x: &[f64], dx: &mut [f64]| dx[0] = x[0] * x[0]);
        let out = integrate(&f, &[1.0], 0.1, 1000, 1e6).unwrap();
        let step = out.diverged_at.expect("x' = x^2 blows up at t = 1");
        assert_eq!(out.trajectory.len(), step);
        assert!(step > 5 && step < 20, "{step}");
    }
}
