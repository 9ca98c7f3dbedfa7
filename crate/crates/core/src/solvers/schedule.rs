//! Step-size schedules.

use serde::Serialize;

use crate::error::{GameError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ScheduleFlavor {
    /// Repeated stochastic gradient play, converging to the stable point.
    Rsgm,
    /// Stochastic gradient method on the full gradient, converging to Nash.
    SgmNash,
}

/// Piecewise-constant schedule: `K + 1` epochs with `η_k = η_0 2^{-k}` run
/// for `T_k` iterations each; each epoch starts from the last iterate of the
/// previous one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepDecaySchedule<T> {
    pub flavor: ScheduleFlavor,
    pub eta0: T,
    /// `(η_k, T_k)` for `k = 0..=K`.
    pub epochs: Vec<(T, usize)>,
    #[serde(rename = "K")]
    pub k: usize,
    pub target_eps: T,
    pub radius_sq: T,
    pub sigma: T,
}

fn ceil_count(v: f64) -> Result<usize> {
    if !(0.0..=1e12).contains(&v) {
        return Err(GameError::Config(format!("schedule produced an unusable iteration count {v}")));
    }
    Ok(v.ceil() as usize)
}

fn check_inputs(alpha: f64, radius_sq: f64, eps: f64, sigma: f64) -> Result<()> {
    if !(alpha > 0.0) {
        return Err(GameError::Config("schedule needs a positive strong-monotonicity modulus".into()));
    }
    if !(eps > 0.0) || !(radius_sq > 0.0) || !(sigma >= 0.0) {
        return Err(GameError::Config("schedule needs eps > 0, radius_sq > 0 and sigma >= 0".into()));
    }
    Ok(())
}

/// `K = max(0, ⌈1 + log₂(arg)⌉)`; a vanishing variance gives a single epoch.
fn epoch_count(arg: f64) -> Result<usize> {
    if arg <= 0.0 {
        return Ok(0);
    }
    let k = (1.0 + arg.log2()).ceil();
    if k <= 0.0 {
        Ok(0)
    } else {
        ceil_count(k)
    }
}

impl<T: Scalar> StepDecaySchedule<T> {
    /// Schedule for repeated stochastic gradient play with
    /// `η_0 = α(1-ρ)/4 · min{1, 1/(2L²)}`.
    pub fn rsgm(alpha: T, rho: T, lipschitz: T, radius_sq: T, target_eps: T, sigma: T) -> Result<Self> {
        let (a, r, l, rs, e, s) =
            (alpha.as_f64(), rho.as_f64(), lipschitz.as_f64(), radius_sq.as_f64(), target_eps.as_f64(), sigma.as_f64());
        check_inputs(a, rs, e, s)?;
        if !(r < 1.0) {
            return Err(GameError::Config("step-decay schedule for retraining needs rho < 1".into()));
        }
        let c = (1.0 - r) * a;
        let eta0 = c / 4.0 * f64::min(1.0, 1.0 / (2.0 * l * l));
        let t0 = ceil_count(10.0 / (c * eta0) * (2.0 * rs / e).ln())?;
        let k = epoch_count(40.0 * eta0 * s * s / (c * e))?;
        Self::assemble(ScheduleFlavor::Rsgm, eta0, t0, k, |eta| 10.0 * 4f64.ln() / (c * eta), target_eps, radius_sq, sigma)
    }

    /// Schedule for the stochastic gradient method with `η_0 = α/(2L²)`.
    pub fn sgm_nash(alpha: T, lipschitz: T, radius_sq: T, target_eps: T, sigma: T) -> Result<Self> {
        let (a, l, rs, e, s) = (alpha.as_f64(), lipschitz.as_f64(), radius_sq.as_f64(), target_eps.as_f64(), sigma.as_f64());
        check_inputs(a, rs, e, s)?;
        let eta0 = a / (2.0 * l * l);
        let t0 = ceil_count(2.0 / (a * eta0) * (2.0 * rs / e).ln())?;
        let k = epoch_count(2.0 * eta0 * s * s / (a * e))?;
        Self::assemble(ScheduleFlavor::SgmNash, eta0, t0, k, |eta| 2.0 * 4f64.ln() / (a * eta), target_eps, radius_sq, sigma)
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        flavor: ScheduleFlavor,
        eta0: f64,
        t0: usize,
        k: usize,
        later: impl Fn(f64) -> f64,
        target_eps: T,
        radius_sq: T,
        sigma: T,
    ) -> Result<Self> {
        let mut epochs = vec![(T::lit(eta0), t0)];
        for j in 1..=k {
            let eta = eta0 * 0.5f64.powi(j as i32);
            epochs.push((T::lit(eta), ceil_count(later(eta))?));
        }
        Ok(Self { flavor, eta0: T::lit(eta0), epochs, k, target_eps, radius_sq, sigma })
    }

    pub fn total_iterations(&self) -> usize {
        self.epochs.iter().map(|e| e.1).sum()
    }

    /// Step size used at (zero-based) iteration `t`.
    pub fn step_at(&self, mut t: usize) -> T {
        for &(eta, len) in &self.epochs {
            if t < len {
                return eta;
            }
            t -= len;
        }
        self.epochs.last().map(|e| e.0).unwrap_or_else(T::zero)
    }
}

/// `η_t = η_0 / t` for `t ≥ 1`.
pub fn harmonic<T: Scalar>(eta0: T, t: usize) -> T {
    eta0 / T::lit(t.max(1) as f64)
}
