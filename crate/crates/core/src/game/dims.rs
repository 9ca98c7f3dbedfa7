use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{structural, Result};
use crate::linalg;
use crate::scalar::Scalar;

/// Player count and per-player decision and data dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DimsRepr", into = "DimsRepr")]
pub struct GameDims {
    decision: Vec<usize>,
    data: Vec<usize>,
    offsets: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DimsRepr {
    decision: Vec<usize>,
    data: Vec<usize>,
}

impl TryFrom<DimsRepr> for GameDims {
    type Error = crate::error::GameError;

    fn try_from(r: DimsRepr) -> Result<Self> {
        GameDims::new(r.decision, r.data)
    }
}

impl From<GameDims> for DimsRepr {
    fn from(d: GameDims) -> Self {
        DimsRepr { decision: d.decision, data: d.data }
    }
}

impl GameDims {
    pub fn new(decision: Vec<usize>, data: Vec<usize>) -> Result<Self> {
        if decision.is_empty() {
            return Err(structural("a game needs at least one player"));
        }
        if decision.len() != data.len() {
            return Err(structural(format!(
                "{} decision dimensions but {} data dimensions",
                decision.len(),
                data.len()
            )));
        }
        if decision.iter().chain(&data).any(|&k| k == 0) {
            return Err(structural("all decision and data dimensions must be >= 1"));
        }
        let mut offsets = Vec::with_capacity(decision.len() + 1);
        offsets.push(0);
        for &d in &decision {
            offsets.push(offsets.last().copied().unwrap_or(0) + d);
        }
        Ok(Self { decision, data, offsets })
    }

    /// Every player has the same decision and data dimension.
    pub fn uniform(players: usize, decision: usize, data: usize) -> Result<Self> {
        Self::new(vec![decision; players], vec![data; players])
    }

    pub fn players(&self) -> usize {
        self.decision.len()
    }

    pub fn decision_dim(&self, i: usize) -> usize {
        self.decision[i]
    }

    pub fn data_dim(&self, i: usize) -> usize {
        self.data[i]
    }

    pub fn decision_dims(&self) -> &[usize] {
        &self.decision
    }

    pub fn data_dims(&self) -> &[usize] {
        &self.data
    }

    /// Total decision dimension `d = Σ d_i`.
    pub fn total(&self) -> usize {
        *self.offsets.last().expect("offsets non-empty")
    }

    pub fn block_range(&self, i: usize) -> Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    /// Dimension of the competitors' joint decision `x_{-i}`.
    pub fn others_dim(&self, i: usize) -> usize {
        self.total() - self.decision[i]
    }
}

/// Joint decision `x = (x_1, …, x_n)` stored flat with per-player blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVector<T> {
    dims: Arc<GameDims>,
    data: Vec<T>,
}

/// Serializes as the flat coordinate list.
impl<T: Serialize> Serialize for BlockVector<T> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(&self.data)
    }
}

impl<T: Scalar> BlockVector<T> {
    pub fn zeros(dims: Arc<GameDims>) -> Self {
        let data = vec![T::zero(); dims.total()];
        Self { dims, data }
    }

    pub fn from_vec(dims: Arc<GameDims>, data: Vec<T>) -> Result<Self> {
        if data.len() != dims.total() {
            return Err(structural(format!(
                "joint decision has length {}, expected {}",
                data.len(),
                dims.total()
            )));
        }
        Ok(Self { dims, data })
    }

    /// Reassembles `x` from `(x_i, x_{-i})`.
    pub fn from_parts(dims: Arc<GameDims>, i: usize, own: &[T], others: &[T]) -> Result<Self> {
        let range = dims.block_range(i);
        if own.len() != range.len() || others.len() != dims.others_dim(i) {
            return Err(structural("block sizes do not match the player's dimensions"));
        }
        let mut data = Vec::with_capacity(dims.total());
        data.extend_from_slice(&others[..range.start]);
        data.extend_from_slice(own);
        data.extend_from_slice(&others[range.start..]);
        Ok(Self { dims, data })
    }

    pub fn dims(&self) -> &Arc<GameDims> {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn block(&self, i: usize) -> &[T] {
        &self.data[self.dims.block_range(i)]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut [T] {
        let r = self.dims.block_range(i);
        &mut self.data[r]
    }

    /// `x_{-i}`: all blocks except player `i`'s, in player order.
    pub fn others(&self, i: usize) -> Vec<T> {
        let r = self.dims.block_range(i);
        let mut out = Vec::with_capacity(self.data.len() - r.len());
        out.extend_from_slice(&self.data[..r.start]);
        out.extend_from_slice(&self.data[r.end..]);
        out
    }

    /// Same block structure, new values.
    pub fn with_data(&self, data: Vec<T>) -> Result<Self> {
        Self::from_vec(self.dims.clone(), data)
    }

    pub fn norm(&self) -> T {
        linalg::norm(&self.data)
    }

    pub fn dist_sq(&self, other: &Self) -> T {
        linalg::dist_sq(&self.data, &other.data)
    }

    pub fn dist(&self, other: &Self) -> T {
        self.dist_sq(other).sqrt()
    }

    pub fn dot(&self, other: &Self) -> T {
        linalg::dot(&self.data, &other.data)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { dims: self.dims.clone(), data: linalg::sub(&self.data, &other.data) }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { dims: self.dims.clone(), data: linalg::add(&self.data, &other.data) }
    }

    /// `self + s · dir`
    pub fn offset(&self, s: T, dir: &Self) -> Self {
        let mut data = self.data.clone();
        linalg::axpy(s, &dir.data, &mut data);
        Self { dims: self.dims.clone(), data }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
