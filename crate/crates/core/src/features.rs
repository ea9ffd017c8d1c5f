//! NG-RC feature construction: time-shift embedding, unique monomials,
//! the additive parameter channel and the post-processing powers.
//!
//! The full map for step `i` at parameter `θ` is
//! `q(P(L(x_i)) + γθ)`, where `L` stacks `k` states spaced `s` steps apart,
//! `P` evaluates every monomial of the configured orders and `q` prepends an
//! optional bias and concatenates elementwise powers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::trajectory::Trajectory;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("invalid NG-RC configuration: {0}")]
    InvalidConfig(String),
    #[error("step {index} has no full history: the embedding needs a warm-up of {warmup} steps")]
    Underflow { index: usize, warmup: usize },
    #[error("expected a vector of length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Ordering of monomials inside each degree block.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MonomialOrder {
    /// Ascending degree; within a degree, exponent vectors in descending
    /// lexicographic order over the delayed variables (current state first).
    #[default]
    GradedLex,
}

impl MonomialOrder {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::GradedLex => "graded-lex",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NgrcConfig<T> {
    /// State dimension `d`.
    pub dim: usize,
    /// Number of concatenated time points.
    pub k: usize,
    /// Separation between concatenated time points, in steps.
    pub s: usize,
    /// Monomial orders of `P`, strictly increasing, all ≥ 1.
    pub orders: Vec<u32>,
    /// Post-processing orders of `q`, strictly increasing; 0 adds the bias.
    pub state_orders: Vec<u32>,
    /// Ridge strength.
    pub beta: T,
    /// Parameter-channel scaling.
    pub gamma: T,
    #[serde(default)]
    pub monomial_order: MonomialOrder,
}

impl<T: Scalar> NgrcConfig<T> {
    /// Architecture used for the power system.
    pub fn power_system() -> Self {
        Self {
            dim: 4,
            k: 2,
            s: 2,
            orders: vec![1, 2, 3],
            state_orders: vec![0, 1, 2, 3],
            beta: T::lit(1e-8),
            gamma: T::lit(0.6),
            monomial_order: MonomialOrder::GradedLex,
        }
    }

    /// Architecture used for the food chain.
    pub fn food_chain() -> Self {
        Self {
            dim: 3,
            k: 4,
            s: 4,
            orders: vec![1, 2],
            state_orders: vec![0, 1, 2, 3],
            beta: T::lit(1e-3),
            gamma: T::lit(0.4),
            monomial_order: MonomialOrder::GradedLex,
        }
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        let bad = |m: &str| Err(FeatureError::InvalidConfig(m.to_string()));
        if self.dim == 0 {
            return bad("dim must be at least 1");
        }
        if self.k == 0 || self.s == 0 {
            return bad("k and s must be at least 1");
        }
        if self.orders.is_empty() || self.orders[0] == 0 {
            return bad("orders must be non-empty with every order ≥ 1");
        }
        if !self.orders.windows(2).all(|w| w[0] < w[1]) {
            return bad("orders must be strictly increasing");
        }
        if self.state_orders.is_empty() || !self.state_orders.windows(2).all(|w| w[0] < w[1]) {
            return bad("state_orders must be non-empty and strictly increasing");
        }
        if self.state_orders == [0] {
            return bad("state_orders must contain an order ≥ 1");
        }
        if !(self.beta >= T::zero()) || !self.beta.is_finite() {
            return bad("beta must be finite and non-negative");
        }
        if !self.gamma.is_finite() {
            return bad("gamma must be finite");
        }
        Ok(())
    }

    /// Steps of history consumed before the first feature vector, `(k-1)·s`.
    pub fn warmup(&self) -> usize {
        (self.k - 1) * self.s
    }

    /// Length `d·k` of the delayed vector.
    pub fn embedded_dim(&self) -> usize {
        self.dim * self.k
    }

    pub fn has_bias(&self) -> bool {
        self.state_orders.first() == Some(&0)
    }

    /// Raw monomial count `N`.
    pub fn monomial_count(&self) -> usize {
        monomial_count(self.embedded_dim(), &self.orders)
    }

    /// Expanded feature dimension `Ñ`.
    pub fn feature_dim(&self) -> usize {
        let powers = self.state_orders.iter().filter(|&&o| o >= 1).count();
        usize::from(self.has_bias()) + powers * self.monomial_count()
    }
}

/// Number of degree-`o` monomials in `n` variables, `C(n+o-1, o)`.
pub fn multiset_count(n: usize, o: u32) -> usize {
    (1..=o as usize).fold(1usize, |acc, j| acc * (n + j - 1) / j)
}

/// `Σ_{o∈orders} C(n+o-1, o)`.
pub fn monomial_count(n: usize, orders: &[u32]) -> usize {
    orders.iter().map(|&o| multiset_count(n, o)).sum()
}

/// Expanded feature dimension for the given architecture.
pub fn feature_dim<T: Scalar>(config: &NgrcConfig<T>) -> usize {
    config.feature_dim()
}

/// Every monomial of the requested orders over `n_vars` variables, each stored
/// as its sorted multiset of variable indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialTable {
    n_vars: usize,
    orders: Vec<u32>,
    terms: Vec<Vec<usize>>,
}

impl MonomialTable {
    /// Orders are deduplicated and sorted; order 0 is ignored.
    pub fn new(n_vars: usize, orders: &[u32]) -> Self {
        let mut orders: Vec<u32> = orders.iter().copied().filter(|&o| o > 0).collect();
        orders.sort_unstable();
        orders.dedup();
        let mut terms = Vec::new();
        if n_vars > 0 {
            for &o in &orders {
                push_multisets(n_vars, o as usize, &mut terms);
            }
        }
        Self {
            n_vars,
            orders,
            terms,
        }
    }

    pub fn for_config<T: Scalar>(config: &NgrcConfig<T>) -> Self {
        Self::new(config.embedded_dim(), &config.orders)
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn orders(&self) -> &[u32] {
        &self.orders
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Variable indices of monomial `j`, ascending with repetition.
    pub fn term(&self, j: usize) -> &[usize] {
        &self.terms[j]
    }

    pub fn terms(&self) -> &[Vec<usize>] {
        &self.terms
    }

    /// Exponent vector of monomial `j`.
    pub fn exponents(&self, j: usize) -> Vec<u32> {
        let mut e = vec![0u32; self.n_vars];
        for &a in &self.terms[j] {
            e[a] += 1;
        }
        e
    }

    pub fn exponent_rows(&self) -> Vec<Vec<u32>> {
        (0..self.len()).map(|j| self.exponents(j)).collect()
    }
}

/// Appends all size-`o` multisets of `0..n`, in ascending lexicographic
/// order of their sorted index tuples.
fn push_multisets(n: usize, o: usize, out: &mut Vec<Vec<usize>>) {
    let mut idx = vec![0usize; o];
    loop {
        out.push(idx.clone());
        // Rightmost position that can still be incremented.
        let Some(p) = (0..o).rev().find(|&p| idx[p] + 1 < n) else {
            return;
        };
        let v = idx[p] + 1;
        for slot in &mut idx[p..] {
            *slot = v;
        }
    }
}

/// Convenience wrapper over [`MonomialTable::new`].
pub fn monomial_table(n_vars: usize, orders: &[u32]) -> MonomialTable {
    MonomialTable::new(n_vars, orders)
}

/// `(x_i, x_{i-s}, …, x_{i-(k-1)s})` for the trajectory `traj`.
pub fn delay_embed<T: Scalar>(
    traj: &Trajectory<T>,
    k: usize,
    s: usize,
    i: usize,
) -> Result<Vec<T>, FeatureError> {
    let warmup = k.saturating_sub(1) * s;
    if i < warmup || i >= traj.len() {
        return Err(FeatureError::Underflow { index: i, warmup });
    }
    Ok((0..k).flat_map(|lag| traj.state(i - lag * s).iter().copied()).collect())
}

#[inline]
fn product<T: Scalar>(values: impl Iterator<Item = T>) -> T {
    values.fold(T::one(), |acc, v| acc * v)
}

#[inline]
fn power<T: Scalar>(x: T, o: u32) -> T {
    (1..o).fold(x, |acc, _| acc * x)
}

/// Evaluates every monomial of `table` at `v`.
pub fn poly_features<T: Scalar>(v: &[T], table: &MonomialTable) -> Result<Vec<T>, FeatureError> {
    if v.len() != table.n_vars() {
        return Err(FeatureError::DimensionMismatch {
            expected: table.n_vars(),
            got: v.len(),
        });
    }
    Ok(table
        .terms()
        .iter()
        .map(|t| product(t.iter().map(|&a| v[a])))
        .collect())
}

/// Adds `γθ` to every raw feature.
pub fn apply_parameter_channel<T: Scalar>(r: &[T], gamma: T, theta: T) -> Vec<T> {
    let shift = gamma * theta;
    r.iter().map(|v| *v + shift).collect()
}

/// `q`: optional bias followed by `r^o` for each post-processing order `o ≥ 1`.
pub fn postprocess<T: Scalar>(r: &[T], state_orders: &[u32]) -> Vec<T> {
    let mut out = Vec::with_capacity(r.len() * state_orders.len() + 1);
    for &o in state_orders {
        if o == 0 {
            out.push(T::one());
        } else {
            out.extend(r.iter().map(|v| power(*v, o)));
        }
    }
    out
}

/// Allocation-free evaluator of the full feature map on flat state storage.
///
/// Each monomial factor is stored as an offset from the current state's first
/// component, so the delayed vector is never materialized.
#[derive(Debug, Clone)]
pub struct Featurizer<T> {
    config: NgrcConfig<T>,
    table: MonomialTable,
    offsets: Vec<Vec<usize>>,
    lookback: usize,
}

impl<T: Scalar> Featurizer<T> {
    pub fn new(config: &NgrcConfig<T>) -> Result<Self, FeatureError> {
        config.validate()?;
        let table = MonomialTable::for_config(config);
        let d = config.dim;
        let lookback = config.warmup() * d;
        // Delayed variable `a` is component `a % d` of the state `a / d` lags back.
        let offsets = table
            .terms()
            .iter()
            .map(|t| {
                t.iter()
                    .map(|&a| lookback - (a / d) * config.s * d + a % d)
                    .collect()
            })
            .collect();
        Ok(Self {
            config: config.clone(),
            table,
            offsets,
            lookback,
        })
    }

    pub fn config(&self) -> &NgrcConfig<T> {
        &self.config
    }

    pub fn table(&self) -> &MonomialTable {
        &self.table
    }

    pub fn feature_dim(&self) -> usize {
        self.config.feature_dim()
    }

    /// Writes the feature vector of state `i` of the row-major `states` into
    /// `out` (length [`Featurizer::feature_dim`]). Requires `i ≥ warmup`.
    pub fn fill(&self, states: &[T], i: usize, theta: T, out: &mut [T]) -> Result<(), FeatureError> {
        let d = self.config.dim;
        let warmup = self.config.warmup();
        if i < warmup || (i + 1) * d > states.len() {
            return Err(FeatureError::Underflow { index: i, warmup });
        }
        self.fill_window(&states[(i - warmup) * d..(i + 1) * d], theta, out);
        Ok(())
    }

    /// Same as [`Featurizer::fill`] for a window holding exactly the
    /// `warmup + 1` most recent states, oldest first.
    pub fn fill_window(&self, window: &[T], theta: T, out: &mut [T]) {
        debug_assert_eq!(window.len(), self.lookback + self.config.dim);
        let n = self.table.len();
        let shift = self.config.gamma * theta;
        let mut pos = 0;
        if self.config.has_bias() {
            out[0] = T::one();
            pos = 1;
        }
        let raw_at = pos;
        for (j, offs) in self.offsets.iter().enumerate() {
            out[raw_at + j] = product(offs.iter().map(|&o| window[o])) + shift;
        }
        for &o in &self.config.state_orders {
            if o == 0 {
                continue;
            }
            if o > 1 {
                for j in 0..n {
                    out[pos + j] = power(out[raw_at + j], o);
                }
            }
            pos += n;
        }
    }

    pub fn features(&self, states: &[T], i: usize, theta: T) -> Result<Vec<T>, FeatureError> {
        let mut out = vec![T::zero(); self.feature_dim()];
        self.fill(states, i, theta, &mut out)?;
        Ok(out)
    }
}
