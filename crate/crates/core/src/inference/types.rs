use serde::{Deserialize, Serialize};

use super::{safe_log, InferenceError, Result};
use crate::scalar::Scalar;

/// A categorical distribution over `m` mutually exclusive values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Categorical<S>(Vec<S>);

impl<S: Scalar> Categorical<S> {
    /// Validates that `probs` is non-empty, entrywise in `[0, 1]` and sums to one.
    pub fn new(probs: Vec<S>) -> Result<Self> {
        if probs.is_empty() {
            return Err(InferenceError::InvalidCategorical("empty distribution".into()));
        }
        let tol = S::simplex_tolerance();
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < -tol || p > S::one() + tol {
                return Err(InferenceError::InvalidCategorical(format!(
                    "entry {i} = {p} outside [0, 1]"
                )));
            }
        }
        let sum = probs.iter().fold(S::zero(), |acc, &p| acc + p);
        if (sum - S::one()).abs() > tol {
            return Err(InferenceError::InvalidCategorical(format!(
                "entries sum to {sum}"
            )));
        }
        Ok(Self(probs))
    }

    /// Normalizes a non-negative weight vector.
    pub fn from_weights(weights: Vec<S>) -> Result<Self> {
        let sum = weights.iter().fold(S::zero(), |acc, &w| acc + w);
        if !(sum > S::zero()) || weights.iter().any(|w| *w < S::zero()) {
            return Err(InferenceError::InvalidCategorical(
                "weights must be non-negative with positive sum".into(),
            ));
        }
        Self::new(weights.into_iter().map(|w| w / sum).collect())
    }

    pub fn uniform(m: usize) -> Self {
        assert!(m > 0, "uniform distribution needs at least one value");
        let p = S::one() / S::from_usize(m).unwrap();
        Self(vec![p; m])
    }

    pub fn one_hot(m: usize, index: usize) -> Self {
        assert!(index < m, "one-hot index {index} out of range for {m} values");
        let mut v = vec![S::zero(); m];
        v[index] = S::one();
        Self(v)
    }

    /// Wraps a vector produced by a normalizing operation without re-validating it.
    pub(crate) fn from_normalized(probs: Vec<S>) -> Self {
        Self(probs)
    }

    #[inline]
    pub fn probs(&self) -> &[S] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<S> {
        self.0
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the most probable value; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate().skip(1) {
            if p > self.0[best] {
                best = i;
            }
        }
        best
    }

    pub fn sum(&self) -> S {
        self.0.iter().fold(S::zero(), |acc, &p| acc + p)
    }
}

impl<S> std::ops::Index<usize> for Categorical<S> {
    type Output = S;

    fn index(&self, index: usize) -> &S {
        &self.0[index]
    }
}

/// Log-preferences over the outcomes of one state factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogPreference<S>(Vec<S>);

impl<S: Scalar> LogPreference<S> {
    pub fn new(values: Vec<S>) -> Result<Self> {
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(InferenceError::NonFinitePreference { index: i, value: v.to_string() });
        }
        Ok(Self(values))
    }

    pub fn zeros(m: usize) -> Self {
        Self(vec![S::zero(); m])
    }

    #[inline]
    pub fn values(&self) -> &[S] {
        &self.0
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True when every entry is zero, i.e. the factor expresses no preference.
    pub fn is_indifferent(&self) -> bool {
        self.0.iter().all(|v| v.is_zero())
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if n_rows == 0 || n_cols == 0 {
            return Err(InferenceError::InvalidMatrix("matrix must be non-empty".into()));
        }
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(InferenceError::InvalidMatrix("ragged rows".into()));
        }
        Ok(Self { rows: n_rows, cols: n_cols, data: rows.into_iter().flatten().collect() })
    }

    pub fn identity(m: usize) -> Self {
        let mut data = vec![S::zero(); m * m];
        for i in 0..m {
            data[i * m + i] = S::one();
        }
        Self { rows: m, cols: m, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> S {
        self.data[row * self.cols + col]
    }

    pub fn column(&self, col: usize) -> Vec<S> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<S>> {
        self.data.chunks(self.cols).map(<[S]>::to_vec).collect()
    }

    /// Elementwise clamped logarithm.
    pub fn safe_log(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| safe_log(x)).collect() }
    }

    /// `self · v`
    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| {
                (0..self.cols).fold(S::zero(), |acc, c| acc + self.get(r, c) * v[c])
            })
            .collect()
    }

    /// `selfᵀ · v`
    pub fn transpose_mul_vec(&self, v: &[S]) -> Vec<S> {
        debug_assert_eq!(v.len(), self.rows);
        (0..self.cols)
            .map(|c| {
                (0..self.rows).fold(S::zero(), |acc, r| acc + self.get(r, c) * v[r])
            })
            .collect()
    }

    fn check_column_stochastic(&self, what: &'static str) -> Result<()> {
        let tol = S::simplex_tolerance();
        for c in 0..self.cols {
            let col = self.column(c);
            if col.iter().any(|&p| !p.is_finite() || p < -tol || p > S::one() + tol) {
                return Err(InferenceError::InvalidMatrix(format!(
                    "{what}: column {c} has entries outside [0, 1]"
                )));
            }
            let sum = col.iter().fold(S::zero(), |acc, &p| acc + p);
            if (sum - S::one()).abs() > tol {
                return Err(InferenceError::InvalidMatrix(format!(
                    "{what}: column {c} sums to {sum}"
                )));
            }
        }
        Ok(())
    }
}

/// Likelihood `A`: column `j` is the outcome distribution given state value `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LikelihoodMatrix<S>(Matrix<S>);

impl<S: Scalar> LikelihoodMatrix<S> {
    pub fn new(matrix: Matrix<S>) -> Result<Self> {
        matrix.check_column_stochastic("likelihood")?;
        Ok(Self(matrix))
    }

    pub fn identity(m: usize) -> Self {
        Self(Matrix::identity(m))
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix<S> {
        &self.0
    }

    /// Number of state values (columns).
    pub fn states(&self) -> usize {
        self.0.cols()
    }

    /// Number of outcome values (rows).
    pub fn outcomes(&self) -> usize {
        self.0.rows()
    }
}

/// Transition `B`: column `j` is the next-state distribution from state value `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TransitionMatrix<S>(Matrix<S>);

impl<S: Scalar> TransitionMatrix<S> {
    pub fn new(matrix: Matrix<S>) -> Result<Self> {
        if matrix.rows() != matrix.cols() {
            return Err(InferenceError::InvalidMatrix(format!(
                "transition matrix must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        matrix.check_column_stochastic("transition")?;
        Ok(Self(matrix))
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn identity(m: usize) -> Self {
        Self(Matrix::identity(m))
    }

    /// Transition that drives every value to `target` with probability `reliability`
    /// and leaves an already reached `target` in place.
    pub fn toward(m: usize, target: usize, reliability: S) -> Result<Self> {
        if target >= m {
            return Err(InferenceError::InvalidMatrix(format!(
                "target {target} out of range for {m} values"
            )));
        }
        let mut rows = vec![vec![S::zero(); m]; m];
        for col in 0..m {
            if col == target {
                rows[target][col] = S::one();
            } else {
                rows[target][col] = reliability;
                rows[col][col] = S::one() - reliability;
            }
        }
        Self::from_rows(rows)
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix<S> {
        &self.0
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.0.rows()
    }

    /// Index of the value every column moves most mass toward, if they agree.
    pub fn dominant_target(&self) -> Option<usize> {
        let m = self.size();
        let argmax = |c: usize| {
            let col = self.0.column(c);
            let mut best = 0;
            for i in 1..m {
                if col[i] > col[best] {
                    best = i;
                }
            }
            best
        };
        let first = argmax(0);
        (1..m).all(|c| argmax(c) == first).then_some(first)
    }

    /// Smallest probability of reaching `target` from any other value.
    pub fn reach_probability(&self, target: usize) -> S {
        (0..self.size())
            .filter(|&c| c != target)
            .map(|c| self.0.get(target, c))
            .fold(S::one(), |a, b| a.min(b))
    }
}

/// Identifier of an action by its declaration index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionId(pub usize);

/// A sequence of actions, one per future step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Policy {
    actions: Vec<ActionId>,
}

impl Policy {
    pub fn new(actions: Vec<ActionId>) -> Result<Self> {
        if actions.is_empty() {
            return Err(InferenceError::EmptyPolicy);
        }
        Ok(Self { actions })
    }

    /// One-step policy.
    pub fn single(action: ActionId) -> Self {
        Self { actions: vec![action] }
    }

    #[inline]
    pub fn actions(&self) -> &[ActionId] {
        &self.actions
    }

    #[inline]
    pub fn first(&self) -> ActionId {
        self.actions[0]
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}
