//! Four-variable generic power system model with voltage collapse.
//!
//! State ordering is `(δ_m, ω, δ, V)`: generator angle, generator rotor speed,
//! load voltage angle and load voltage magnitude. The reactive power demand
//! `Q1` is the bifurcation parameter.

use serde::{Deserialize, Serialize};

use super::{OdeError, VectorField};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerSystemParams<T> {
    pub k_pw: T,
    pub k_pv: T,
    pub k_qw: T,
    pub k_qv: T,
    pub k_qv2: T,
    pub t_load: T,
    pub p0: T,
    pub q0: T,
    pub p1: T,
    pub y0: T,
    pub ym: T,
    pub pm: T,
    pub dm: T,
    pub theta0: T,
    pub em: T,
    pub m: T,
    pub c: T,
    pub e0: T,
    /// Load reactive power demand (bifurcation parameter).
    pub q1: T,
}

impl<T: Scalar> Default for PowerSystemParams<T> {
    fn default() -> Self {
        let l = T::lit;
        Self {
            k_pw: l(0.4),
            k_pv: l(0.3),
            k_qw: l(-0.03),
            k_qv: l(-2.8),
            k_qv2: l(2.1),
            t_load: l(8.5),
            p0: l(0.6),
            // Q0 = 0.3 leaves no bounded regime near Q1 ≈ 2.9895.
            q0: l(1.3),
            p1: l(0.0),
            y0: l(3.33),
            ym: l(5.0),
            pm: l(1.0),
            dm: l(0.05),
            theta0: l(0.0),
            em: l(1.05),
            m: l(0.01464),
            c: l(3.5),
            e0: l(1.0),
            q1: l(2.98953),
        }
    }
}

impl<T: Scalar> PowerSystemParams<T> {
    /// Initial condition used for every ground-truth run.
    pub fn default_initial_state() -> [T; 4] {
        [T::lit(0.17), T::lit(0.05), T::lit(0.05), T::lit(0.83)]
    }

    pub fn validate(&self) -> Result<(), OdeError> {
        let nonzero = [
            ("m", self.m),
            ("k_qw", self.k_qw),
            ("k_pv", self.k_pv),
            ("t_load", self.t_load),
            ("y0", self.y0),
        ];
        for (name, v) in nonzero {
            if v == T::zero() || !v.is_finite() {
                return Err(OdeError::InvalidParameter {
                    name,
                    reason: format!("must be finite and non-zero, got {v}"),
                });
            }
        }
        Ok(())
    }
}

/// Constants `E0'`, `Y0'`, `θ0'` describing the compensated infinite bus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedPowerConstants<T> {
    pub e0_prime: T,
    pub y0_prime: T,
    pub theta0_prime: T,
}

pub fn derived_constants<T: Scalar>(
    p: &PowerSystemParams<T>,
) -> Result<DerivedPowerConstants<T>, OdeError> {
    if p.y0 == T::zero() {
        return Err(OdeError::DivisionByZero("y0 must be non-zero"));
    }
    let ratio = p.c / p.y0;
    let (sin0, cos0) = (p.theta0.sin(), p.theta0.cos());
    let radicand = T::one() + ratio * ratio - T::lit(2.0) * ratio * cos0;
    let scale = radicand.sqrt();
    if scale == T::zero() {
        return Err(OdeError::DivisionByZero(
            "1 + C²/Y0² - 2C/Y0·cos(θ0) vanishes, E0' is undefined",
        ));
    }
    let denom = T::one() - ratio * cos0;
    let theta0_prime = if ratio * sin0 == T::zero() {
        p.theta0
    } else if denom == T::zero() {
        return Err(OdeError::DivisionByZero(
            "1 - C/Y0·cos(θ0) vanishes, θ0' is undefined",
        ));
    } else {
        p.theta0 + (ratio * sin0 / denom).atan()
    };
    Ok(DerivedPowerConstants {
        e0_prime: p.e0 / scale,
        y0_prime: p.y0 * scale,
        theta0_prime,
    })
}

/// Right-hand side `(δ̇_m, ω̇, δ̇, V̇)`.
///
/// The reactive demand uses `Q = E0'Y0'V cos δ - (Y0' + Ym)V² + EmYmV cos(δm - δ)`
/// so that the system reaches the voltage-collapse boundary near
/// `Q1 ≈ 2.98982`; with a negative leading term the default state leaves
/// every bounded regime within a few steps.
pub fn power_system_deriv<T: Scalar>(
    x: &[T],
    p: &PowerSystemParams<T>,
    derived: &DerivedPowerConstants<T>,
) -> [T; 4] {
    let (delta_m, omega, delta, v) = (x[0], x[1], x[2], x[3]);
    let infinite_bus = derived.e0_prime * derived.y0_prime * v;
    let emym = p.em * p.ym;
    let angle = delta_m - delta;
    let real_power = -infinite_bus * delta.sin() + emym * v * angle.sin();
    let reactive_power = infinite_bus * delta.cos() - (derived.y0_prime + p.ym) * v * v
        + emym * v * angle.cos();
    let reactive_residual = reactive_power - p.q0 - p.q1;

    let d_delta_m = omega;
    let d_omega = (-p.dm * omega + p.pm - emym * angle.sin() * v) / p.m;
    let d_delta = (-p.k_qv2 * v * v - p.k_qv * v + reactive_residual) / p.k_qw;
    let d_v = (p.k_pw * p.k_qv2 * v * v + (p.k_pw * p.k_qv - p.k_qw * p.k_pv) * v
        + p.k_qw * (real_power - p.p0 - p.p1)
        - p.k_pw * reactive_residual)
        / (p.t_load * p.k_qw * p.k_pv);
    [d_delta_m, d_omega, d_delta, d_v]
}

/// Power system vector field with its derived constants precomputed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSystem<T> {
    pub params: PowerSystemParams<T>,
    pub derived: DerivedPowerConstants<T>,
}

impl<T: Scalar> PowerSystem<T> {
    pub fn new(params: PowerSystemParams<T>) -> Result<Self, OdeError> {
        params.validate()?;
        let derived = derived_constants(&params)?;
        Ok(Self { params, derived })
    }
}

impl<T: Scalar> VectorField<T> for PowerSystem<T> {
    fn dim(&self) -> usize {
        4
    }

    fn eval(&self, x: &[T], dx: &mut [T]) {
        dx.copy_from_slice(&power_system_deriv(x, &self.params, &self.derived));
    }
}
