//! Three-species resource / consumer / predator food chain. The resource
//! carrying capacity `K` is the bifurcation parameter.

use serde::{Deserialize, Serialize};

use super::{OdeError, VectorField};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FoodChainParams<T> {
    pub x_c: T,
    pub y_c: T,
    pub x_p: T,
    pub y_p: T,
    pub r0: T,
    pub c0: T,
    /// Resource carrying capacity (bifurcation parameter).
    pub k: T,
}

impl<T: Scalar> Default for FoodChainParams<T> {
    fn default() -> Self {
        Self {
            x_c: T::lit(0.4),
            y_c: T::lit(2.009),
            x_p: T::lit(0.08),
            y_p: T::lit(2.876),
            r0: T::lit(0.16129),
            c0: T::lit(0.5),
            k: T::lit(0.92),
        }
    }
}

impl<T: Scalar> FoodChainParams<T> {
    pub fn default_initial_state() -> [T; 3] {
        [T::lit(0.6), T::lit(0.35), T::lit(0.9)]
    }

    pub fn validate(&self) -> Result<(), OdeError> {
        if !(self.k > T::zero()) || !self.k.is_finite() {
            return Err(OdeError::InvalidParameter {
                name: "k",
                reason: format!("carrying capacity must be positive, got {}", self.k),
            });
        }
        Ok(())
    }
}

/// Right-hand side `(Ṙ, Ċ, Ṗ)`.
pub fn food_chain_deriv<T: Scalar>(x: &[T], p: &FoodChainParams<T>) -> [T; 3] {
    let (r, c, pred) = (x[0], x[1], x[2]);
    let consumer_uptake = r / (r + p.r0);
    let predator_uptake = c / (c + p.c0);
    let d_r = r * (T::one() - r / p.k) - p.x_c * p.y_c * c * consumer_uptake;
    let d_c = p.x_c * c * (p.y_c * consumer_uptake - T::one()) - p.x_p * p.y_p * pred * predator_uptake;
    let d_p = p.x_p * pred * (p.y_p * predator_uptake - T::one());
    [d_r, d_c, d_p]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoodChain<T> {
    pub params: FoodChainParams<T>,
}

impl<T: Scalar> FoodChain<T> {
    pub fn new(params: FoodChainParams<T>) -> Result<Self, OdeError> {
        params.validate()?;
        Ok(Self { params })
    }
}

impl<T: Scalar> VectorField<T> for FoodChain<T> {
    fn dim(&self) -> usize {
        3
    }

    fn eval(&self, x: &[T], dx: &mut [T]) {
        dx.copy_from_slice(&food_chain_deriv(x, &self.params));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::integrate;

    fn reference_rhs(x: [f64; 3], k: f64) -> [f64; 3] {
        let (xc, yc, xp, yp, r0, c0) = (0.4, 2.009, 0.08, 2.876, 0.16129, 0.5);
        let [r, c, p] = x;
        [
            r * (1.0 - r / k) - xc * yc * c * r / (r + r0),
            xc * c * (yc * r / (r + r0) - 1.0) - xp * yp * p * c / (c + c0),
            xp * p * (yp * c / (c + c0) - 1.0),
        ]
    }

    #[test]
    fn matches_reference_transcription() {
        let p = FoodChainParams {
            k: 0.94,
            ..Default::default()
        };
        let x = [0.6, 0.35, 0.9];
        let got = food_chain_deriv(&x, &p);
        let want = reference_rhs(x, 0.94);
        for (g, w) in got.iter().zip(want) {
            assert!(g.is_finite());
            assert!((g - w).abs() <= 1e-14, "{g} vs {w}");
        }
    }

    #[test]
    fn extinct_predator_stays_extinct() {
        let p = FoodChainParams::<f64>::default();
        assert_eq!(food_chain_deriv(&[0.5, 0.3, 0.0], &p)[2], 0.0);
        assert_eq!(food_chain_deriv(&[0.0, 0.0, 0.0], &p), [0.0, 0.0, 0.0]);
        let sys = FoodChain::new(p).unwrap();
        let out = integrate(&sys, &[0.6, 0.35, 0.0], 0.1, 5000, 1e6).unwrap();
        assert!(out.trajectory.states().all(|s| s[2] == 0.0));
    }

    #[test]
    fn rejects_non_positive_capacity() {
        let p = FoodChainParams::<f64> {
            k: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            FoodChain::new(p),
            Err(OdeError::InvalidParameter { name: "k", .. })
        ));
    }

    #[test]
    fn bounded_in_training_regime() {
        let sys = FoodChain::new(FoodChainParams {
            k: 0.92,
            ..Default::default()
        })
        .unwrap();
        let out = integrate(&sys, &FoodChainParams::default_initial_state(), 0.1, 25_000, 1e6)
            .unwrap();
        assert_eq!(out.diverged_at, None);
        assert_eq!(out.trajectory.len(), 25_001);
        assert!(out
            .trajectory
            .states()
            .all(|s| s.iter().all(|v| (0.0..2.0).contains(v))));
    }
}
