//! Per-run records.

use serde::Serialize;

use crate::game::dims::BlockVector;
use crate::game::instance::GameInstance;
use crate::scalar::{to_f64_vec, Scalar};

/// Squared error above which a run is declared divergent and truncated.
pub const DIVERGENCE_THRESHOLD: f64 = 1e8;

/// Runs up to this many iterations are recorded at every step by default.
pub const FULL_RECORD_LIMIT: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub iter: usize,
    /// `‖x^t - x*‖²` against the reference point (NaN without one).
    pub error_sq: f64,
    /// Expected losses `L_i(x^t)`.
    pub losses: Vec<f64>,
    pub point: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub solver: String,
    pub seed: u64,
    pub iterations: usize,
    pub records: Vec<Record>,
    pub final_point: Vec<f64>,
    pub diverged: bool,
    pub config: serde_json::Value,
}

impl Trajectory {
    pub fn final_error_sq(&self) -> f64 {
        self.records.last().map(|r| r.error_sq).unwrap_or(f64::NAN)
    }

    /// Error at iteration `iter`, if it was recorded.
    pub fn error_at(&self, iter: usize) -> Option<f64> {
        self.records.binary_search_by_key(&iter, |r| r.iter).ok().map(|k| self.records[k].error_sq)
    }
}

/// Default thinning: every iteration for short runs, every 10th otherwise.
pub fn default_record_every(iterations: usize) -> usize {
    if iterations <= FULL_RECORD_LIMIT {
        1
    } else {
        10
    }
}

/// Builds a [`Trajectory`] while a solver runs.
pub struct Recorder<'a, T> {
    game: &'a GameInstance<T>,
    reference: Option<&'a BlockVector<T>>,
    every: usize,
    records: Vec<Record>,
    last_iter: Option<usize>,
    diverged: bool,
}

impl<'a, T: Scalar> Recorder<'a, T> {
    pub fn new(game: &'a GameInstance<T>, reference: Option<&'a BlockVector<T>>, every: usize) -> Self {
        Self { game, reference, every: every.max(1), records: Vec::new(), last_iter: None, diverged: false }
    }

    fn error_sq(&self, x: &BlockVector<T>) -> f64 {
        match self.reference {
            Some(r) => x.dist_sq(r).as_f64(),
            None => f64::NAN,
        }
    }

    fn push(&mut self, iter: usize, x: &BlockVector<T>, error_sq: f64) {
        if self.last_iter == Some(iter) {
            return;
        }
        let losses = self.game.expected_losses(x).into_iter().map(|v| v.as_f64()).collect();
        self.records.push(Record { iter, error_sq, losses, point: to_f64_vec(x.as_slice()) });
        self.last_iter = Some(iter);
    }

    /// Observes iterate `x^iter`. Returns `false` once the run has diverged;
    /// the divergent iterate is recorded and the caller should stop.
    pub fn observe(&mut self, iter: usize, x: &BlockVector<T>) -> bool {
        let err = self.error_sq(x);
        let size = if err.is_nan() && self.reference.is_none() { x.dist_sq(&self.game.zeros()).as_f64() } else { err };
        if !x.is_finite() || !(size <= DIVERGENCE_THRESHOLD) {
            self.diverged = true;
            self.push(iter, x, err);
            return false;
        }
        if iter.is_multiple_of(self.every) {
            self.push(iter, x, err);
        }
        true
    }

    pub fn finish(mut self, solver: String, seed: u64, iterations: usize, x: &BlockVector<T>, config: serde_json::Value) -> Trajectory {
        if !self.diverged {
            let err = self.error_sq(x);
            self.push(iterations, x, err);
        }
        Trajectory {
            solver,
            seed,
            iterations,
            records: self.records,
            final_point: to_f64_vec(x.as_slice()),
            diverged: self.diverged,
            config,
        }
    }
}
