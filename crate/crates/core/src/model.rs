//! The correlated random walk on the path `0..=n`: coins, shift, the one-step
//! operator `U = S C`, state vectors and vertex marginals.
//!
//! States live in `R^{2(n+1)}` with the interleaved layout
//! `index(x, J) = 2x + (0 for L, 1 for R)`. Operators act on column vectors
//! from the left, so column `j` of [`dense_u`] is the image of basis vector `e_j`.

use std::fmt;
use std::ops::{Index, IndexMut};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for structural identities (column sums, isospectrality, normalization).
pub const STRUCTURAL_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("path must have at least two vertices (n >= 1), got n = {0}")]
    TooSmall(usize),
    #[error("expected {expected} coins for n = {n}, got {found}")]
    CoinCount {
        n: usize,
        expected: usize,
        found: usize,
    },
    #[error("vertex {vertex}: {which} = {value} is outside the open interval (0, 1)")]
    OutOfRange {
        vertex: usize,
        which: Label,
        value: f64,
    },
    #[error("vertex {vertex}: |p_L - p_R| = {diff} must lie strictly between 0 and 1")]
    DegenerateCoin { vertex: usize, diff: f64 },
    #[error("vertex {vertex}: p_L - p_R = {found} differs from nu2 = {expected} (coins are not isospectral)")]
    NonIsospectral {
        vertex: usize,
        expected: f64,
        found: f64,
    },
    #[error("state has length {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("not a probability state: {0}")]
    NotAProbabilityState(String),
}

/// Internal label of the walker: the direction it arrived from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    L,
    R,
}

impl Label {
    pub fn offset(self) -> usize {
        match self {
            Label::L => 0,
            Label::R => 1,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::L => f.write_str("p_L"),
            Label::R => f.write_str("p_R"),
        }
    }
}

/// Flat index of `(x, label)` in a state vector.
#[inline]
pub fn state_index(x: usize, label: Label) -> usize {
    2 * x + label.offset()
}

/// Column-stochastic 2x2 coin `[[p_L, p_R], [1 - p_L, 1 - p_R]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoinParams {
    #[serde(rename = "p_L")]
    pub p_left: f64,
    #[serde(rename = "p_R")]
    pub p_right: f64,
}

impl CoinParams {
    pub fn new(p_left: f64, p_right: f64) -> Self {
        Self { p_left, p_right }
    }

    /// Second eigenvalue `p_L - p_R`; the first is always 1.
    pub fn nu2(&self) -> f64 {
        self.p_left - self.p_right
    }

    /// Probability of leaving with label `L` given the incoming label.
    #[inline]
    pub fn prob_left(&self, incoming: Label) -> f64 {
        match incoming {
            Label::L => self.p_left,
            Label::R => self.p_right,
        }
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [
            [self.p_left, self.p_right],
            [1.0 - self.p_left, 1.0 - self.p_right],
        ]
    }

    pub(crate) fn apply(&self, left: f64, right: f64) -> (f64, f64) {
        (
            self.p_left * left + self.p_right * right,
            (1.0 - self.p_left) * left + (1.0 - self.p_right) * right,
        )
    }
}

/// Per-vertex coins sharing the second eigenvalue `nu2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoinFamily {
    coins: Vec<CoinParams>,
    nu2: f64,
}

impl CoinFamily {
    pub fn coins(&self) -> &[CoinParams] {
        &self.coins
    }

    pub fn nu2(&self) -> f64 {
        self.nu2
    }
}

/// Validated CRW model on the path with vertices `0..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathCrwModel {
    n: usize,
    family: CoinFamily,
}

impl PathCrwModel {
    /// Validates raw `(p_L, p_R)` pairs, one per vertex.
    pub fn new(n: usize, raw_coins: &[(f64, f64)]) -> Result<Self, ModelError> {
        let coins: Vec<_> = raw_coins
            .iter()
            .map(|&(l, r)| CoinParams::new(l, r))
            .collect();
        Self::from_coins(n, coins)
    }

    pub fn homogeneous(n: usize, coin: CoinParams) -> Result<Self, ModelError> {
        Self::from_coins(n, vec![coin; n + 1])
    }

    pub fn from_coins(n: usize, coins: Vec<CoinParams>) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::TooSmall(n));
        }
        if coins.len() != n + 1 {
            return Err(ModelError::CoinCount {
                n,
                expected: n + 1,
                found: coins.len(),
            });
        }
        for (vertex, coin) in coins.iter().enumerate() {
            for (which, value) in [(Label::L, coin.p_left), (Label::R, coin.p_right)] {
                // NaN fails both comparisons
                if !(value > 0.0 && value < 1.0) {
                    return Err(ModelError::OutOfRange {
                        vertex,
                        which,
                        value,
                    });
                }
            }
            let diff = coin.nu2().abs();
            if diff <= STRUCTURAL_TOL || diff >= 1.0 - STRUCTURAL_TOL {
                return Err(ModelError::DegenerateCoin { vertex, diff });
            }
        }
        let nu2 = coins[0].nu2();
        if let Some((vertex, coin)) = coins
            .iter()
            .enumerate()
            .find(|(_, c)| (c.nu2() - nu2).abs() > STRUCTURAL_TOL)
        {
            return Err(ModelError::NonIsospectral {
                vertex,
                expected: nu2,
                found: coin.nu2(),
            });
        }
        Ok(Self {
            n,
            family: CoinFamily { coins, nu2 },
        })
    }

    /// Largest vertex index; the path has `n + 1` vertices.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vertices(&self) -> usize {
        self.n + 1
    }

    /// Dimension of the state space, `2(n+1)`.
    pub fn dim(&self) -> usize {
        2 * (self.n + 1)
    }

    pub fn nu2(&self) -> f64 {
        self.family.nu2
    }

    pub fn family(&self) -> &CoinFamily {
        &self.family
    }

    pub fn coins(&self) -> &[CoinParams] {
        &self.family.coins
    }

    pub fn coin(&self, x: usize) -> &CoinParams {
        &self.family.coins[x]
    }

    fn check_dim(&self, s: &StateVector) -> Result<(), ModelError> {
        if s.len() != self.dim() {
            return Err(ModelError::DimensionMismatch {
                expected: self.dim(),
                found: s.len(),
            });
        }
        Ok(())
    }
}

/// Real vector over the basis `|x> (x) {|L>, |R>}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateVector(Vec<f64>);

impl StateVector {
    pub fn zeros(vertices: usize) -> Self {
        Self(vec![0.0; 2 * vertices])
    }

    /// Basis vector `e_{(x, label)}` for a path with `vertices` vertices.
    pub fn basis(vertices: usize, x: usize, label: Label) -> Self {
        let mut s = Self::zeros(vertices);
        s.0[state_index(x, label)] = 1.0;
        s
    }

    pub fn from_vec(entries: Vec<f64>) -> Self {
        Self(entries)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn get(&self, x: usize, label: Label) -> f64 {
        self.0[state_index(x, label)]
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, other: &StateVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn scaled(&self, factor: f64) -> StateVector {
        StateVector(self.0.iter().map(|v| v * factor).collect())
    }

    /// `self + factor * other`
    pub fn axpy(&self, factor: f64, other: &StateVector) -> StateVector {
        StateVector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + factor * b)
                .collect(),
        )
    }

    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Checks nonnegativity, finiteness and unit total mass within `tol`.
    pub fn check_probability(&self, tol: f64) -> Result<(), ModelError> {
        if let Some((i, v)) = self
            .0
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < -tol)
        {
            return Err(ModelError::NotAProbabilityState(format!(
                "entry {i} is {v}"
            )));
        }
        let total = self.sum();
        if (total - 1.0).abs() > tol {
            return Err(ModelError::NotAProbabilityState(format!(
                "entries sum to {total}"
            )));
        }
        Ok(())
    }
}

impl Index<usize> for StateVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for StateVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// Probability distribution over the vertices `0..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn from_vec(probs: Vec<f64>) -> Self {
        Self(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total variation distance, `0.5 * sum |p - q|`.
    pub fn tv_distance(&self, other: &Distribution) -> f64 {
        0.5 * self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }

    pub fn max_abs_diff(&self, other: &Distribution) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Index<usize> for Distribution {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Applies `C = sum_x |x><x| (x) C_x` blockwise.
pub fn apply_coin(model: &PathCrwModel, s: &StateVector) -> Result<StateVector, ModelError> {
    model.check_dim(s)?;
    let mut out = StateVector::zeros(model.vertices());
    for (x, coin) in model.coins().iter().enumerate() {
        let (l, r) = coin.apply(s[2 * x], s[2 * x + 1]);
        out[2 * x] = l;
        out[2 * x + 1] = r;
    }
    Ok(out)
}

/// Image of basis state `(x, label)` under the shift.
#[inline]
pub fn shift_target(n: usize, x: usize, label: Label) -> (usize, Label) {
    match label {
        Label::R if x < n => (x + 1, Label::L),
        Label::R => (n, Label::R),
        Label::L if x > 0 => (x - 1, Label::R),
        Label::L => (0, Label::L),
    }
}

/// Applies the shift permutation. It is an involution.
pub fn apply_shift(model: &PathCrwModel, s: &StateVector) -> Result<StateVector, ModelError> {
    model.check_dim(s)?;
    let n = model.n();
    let mut out = StateVector::zeros(model.vertices());
    for x in 0..=n {
        for label in [Label::L, Label::R] {
            let (y, k) = shift_target(n, x, label);
            out[state_index(y, k)] = s[state_index(x, label)];
        }
    }
    Ok(out)
}

/// One step of the walk, `U s = S (C s)`.
pub fn apply_u(model: &PathCrwModel, s: &StateVector) -> Result<StateVector, ModelError> {
    apply_shift(model, &apply_coin(model, s)?)
}

/// Materializes `U` as a dense `2(n+1) x 2(n+1)` matrix.
pub fn dense_u(model: &PathCrwModel) -> DMatrix<f64> {
    let dim = model.dim();
    let mut u = DMatrix::zeros(dim, dim);
    let n = model.n();
    for (x, coin) in model.coins().iter().enumerate() {
        for incoming in [Label::L, Label::R] {
            let col = state_index(x, incoming);
            let p_left = coin.prob_left(incoming);
            for (outgoing, p) in [(Label::L, p_left), (Label::R, 1.0 - p_left)] {
                let (y, k) = shift_target(n, x, outgoing);
                u[(state_index(y, k), col)] += p;
            }
        }
    }
    u
}

/// Vertex marginal `P(X = x) = s(x, L) + s(x, R)` of a probability state.
pub fn marginal(s: &StateVector) -> Result<Distribution, ModelError> {
    if !s.len().is_multiple_of(2) || s.is_empty() {
        return Err(ModelError::DimensionMismatch {
            expected: s.len() + s.len() % 2,
            found: s.len(),
        });
    }
    s.check_probability(STRUCTURAL_TOL)?;
    Ok(marginal_unchecked(s))
}

/// Per-vertex `L + R` sums without probability checks.
pub fn marginal_unchecked(s: &StateVector) -> Distribution {
    Distribution(s.as_slice().chunks(2).map(|c| c[0] + c[1]).collect())
}
