use crate::error::{structural, Result};
use crate::game::dims::{BlockVector, GameDims};
use crate::linalg;
use crate::scalar::Scalar;

/// Closed convex strategy set of a single player.
#[derive(Debug, Clone, PartialEq)]
pub enum SetDescriptor<T> {
    WholeSpace,
    Box { lower: Vec<T>, upper: Vec<T> },
    Ball { center: Vec<T>, radius: T },
}

impl<T: Scalar> SetDescriptor<T> {
    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            SetDescriptor::WholeSpace => Ok(()),
            SetDescriptor::Box { lower, upper } => {
                if lower.len() != dim || upper.len() != dim {
                    return Err(structural(format!("box bounds must have length {dim}")));
                }
                if lower.iter().zip(upper).any(|(l, u)| !(l <= u)) {
                    return Err(structural("box requires lower <= upper in every coordinate"));
                }
                Ok(())
            }
            SetDescriptor::Ball { center, radius } => {
                if center.len() != dim {
                    return Err(structural(format!("ball center must have length {dim}")));
                }
                if !(*radius > T::zero()) || !radius.is_finite() {
                    return Err(structural("ball radius must be positive"));
                }
                Ok(())
            }
        }
    }

    /// Euclidean projection of `y` onto `scale · self`, written into `out`.
    fn project_scaled(&self, y: &[T], scale: T, out: &mut [T]) {
        match self {
            SetDescriptor::WholeSpace => out.copy_from_slice(y),
            SetDescriptor::Box { lower, upper } => {
                for (k, o) in out.iter_mut().enumerate() {
                    *o = y[k].max(scale * lower[k]).min(scale * upper[k]);
                }
            }
            SetDescriptor::Ball { center, radius } => {
                let r = scale * *radius;
                let d: Vec<T> = y.iter().zip(center).map(|(&a, &c)| a - scale * c).collect();
                let nd = linalg::norm(&d);
                if nd <= r {
                    out.copy_from_slice(y);
                } else {
                    let f = r / nd;
                    for (k, o) in out.iter_mut().enumerate() {
                        *o = scale * center[k] + f * d[k];
                    }
                }
            }
        }
    }

    fn contains_scaled(&self, x: &[T], scale: T, tol: T) -> bool {
        match self {
            SetDescriptor::WholeSpace => true,
            SetDescriptor::Box { lower, upper } => x
                .iter()
                .enumerate()
                .all(|(k, &v)| v >= scale * lower[k] - tol && v <= scale * upper[k] + tol),
            SetDescriptor::Ball { center, radius } => {
                let d: Vec<T> = x.iter().zip(center).map(|(&a, &c)| a - scale * c).collect();
                linalg::norm(&d) <= scale * *radius + tol
            }
        }
    }

    /// Largest norm of a point in the set, `None` if unbounded.
    fn max_norm(&self) -> Option<T> {
        match self {
            SetDescriptor::WholeSpace => None,
            SetDescriptor::Box { lower, upper } => {
                let sq: T = lower.iter().zip(upper).map(|(&l, &u)| l.abs().max(u.abs()).powi(2)).sum();
                Some(sq.sqrt())
            }
            SetDescriptor::Ball { center, radius } => Some(linalg::norm(center) + *radius),
        }
    }

    /// Whether `(1-δ)X_i + δ·S_i ⊆ X_i` for every `δ ∈ (0,1)`, i.e. the
    /// one-point perturbations of the derivative-free method stay feasible.
    fn admits_unit_perturbation(&self) -> bool {
        match self {
            SetDescriptor::WholeSpace => true,
            SetDescriptor::Box { lower, upper } => {
                lower.iter().all(|&l| l <= -T::one()) && upper.iter().all(|&u| u >= T::one())
            }
            SetDescriptor::Ball { center, radius } => linalg::norm(center) + T::one() <= *radius,
        }
    }
}

/// Product set `X = X_1 × … × X_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleSet<T> {
    sets: Vec<SetDescriptor<T>>,
}

impl<T: Scalar> FeasibleSet<T> {
    pub fn new(dims: &GameDims, sets: Vec<SetDescriptor<T>>) -> Result<Self> {
        if sets.len() != dims.players() {
            return Err(structural(format!(
                "{} feasible-set descriptors for {} players",
                sets.len(),
                dims.players()
            )));
        }
        for (i, s) in sets.iter().enumerate() {
            s.validate(dims.decision_dim(i))?;
        }
        Ok(Self { sets })
    }

    pub fn whole_space(dims: &GameDims) -> Self {
        Self { sets: vec![SetDescriptor::WholeSpace; dims.players()] }
    }

    pub fn player(&self, i: usize) -> &SetDescriptor<T> {
        &self.sets[i]
    }

    pub fn descriptors(&self) -> &[SetDescriptor<T>] {
        &self.sets
    }

    pub fn is_whole_space(&self) -> bool {
        self.sets.iter().all(|s| matches!(s, SetDescriptor::WholeSpace))
    }

    /// Euclidean projection of `y` onto `(1 - shrink)·X`, blockwise.
    pub fn project(&self, y: &BlockVector<T>, shrink: T) -> Result<BlockVector<T>> {
        if y.dims().players() != self.sets.len() {
            return Err(structural("vector and feasible set have different player counts"));
        }
        if !(shrink >= T::zero() && shrink < T::one()) {
            return Err(structural("shrink factor must lie in [0, 1)"));
        }
        let mut out = y.clone();
        self.project_in_place(&mut out, shrink);
        Ok(out)
    }

    /// Projection without shape validation; callers guarantee consistency.
    pub fn project_in_place(&self, y: &mut BlockVector<T>, shrink: T) {
        let scale = T::one() - shrink;
        for (i, set) in self.sets.iter().enumerate() {
            if matches!(set, SetDescriptor::WholeSpace) {
                continue;
            }
            let block = y.block(i).to_vec();
            set.project_scaled(&block, scale, y.block_mut(i));
        }
    }

    /// Projects a single player's block onto `(1 - shrink)·X_i`.
    pub fn project_block(&self, i: usize, y: &[T], shrink: T, out: &mut [T]) {
        self.sets[i].project_scaled(y, T::one() - shrink, out);
    }

    pub fn contains(&self, x: &BlockVector<T>, shrink: T, tol: T) -> bool {
        self.sets
            .iter()
            .enumerate()
            .all(|(i, s)| s.contains_scaled(x.block(i), T::one() - shrink, tol))
    }

    /// Radius of a centered ball containing `X`, `None` if `X` is unbounded.
    pub fn bounding_radius(&self) -> Option<T> {
        let mut sq = T::zero();
        for s in &self.sets {
            sq += s.max_norm()?.powi(2);
        }
        Some(sq.sqrt())
    }

    pub fn admits_unit_perturbation(&self) -> bool {
        self.sets.iter().all(|s| s.admits_unit_perturbation())
    }
}
