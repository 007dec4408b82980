use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_LR: f64 = 0.01;
pub const DEFAULT_MOMENTUM: f64 = 0.9;
pub const DEFAULT_LR_DECAY: f64 = 0.1;

/// `v <- momentum * v - lr * g; p <- p + v`. Nothing is modified when the
/// gradient contains a non-finite entry.
pub fn sgd_momentum_step(
    params: &mut [f64],
    gradient: &[f64],
    velocity: &mut [f64],
    lr: f64,
    momentum: f64,
) -> Result<()> {
    if params.len() != gradient.len() || params.len() != velocity.len() {
        return Err(Error::DimensionMismatch {
            what: "sgd step",
            expected: params.len(),
            got: gradient.len().min(velocity.len()),
        });
    }
    if gradient.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("gradient (divergence)"));
    }
    for ((p, &g), v) in params.iter_mut().zip(gradient).zip(velocity.iter_mut()) {
        *v = momentum * *v - lr * g;
        *p += *v;
    }
    Ok(())
}

/// Step decay: the rate is multiplied by `decay` every `period` iterations
/// and training stops after `2.5 * period` iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    pub initial_lr: f64,
    pub decay: f64,
    pub period: usize,
}

impl Default for StepSchedule {
    fn default() -> Self {
        Self {
            initial_lr: DEFAULT_LR,
            decay: DEFAULT_LR_DECAY,
            period: 300,
        }
    }
}

impl StepSchedule {
    pub fn lr_at(&self, iteration: usize) -> f64 {
        if self.period == 0 {
            return self.initial_lr;
        }
        let steps = (iteration / self.period) as i32;
        self.initial_lr * self.decay.powi(steps)
    }

    pub fn total_iterations(&self) -> usize {
        self.period * 5 / 2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_gradient_step() {
        let mut p = vec![1.0, -2.0, 0.5];
        let mut v = vec![0.0; 3];
        sgd_momentum_step(&mut p, &[1.0; 3], &mut v, 1.0, 0.0).unwrap();
        assert_eq!(p, vec![0.0, -3.0, -0.5]);
    }

    #[test]
    fn zero_gradient_decays_velocity_only() {
        let mut p = vec![1.0, 2.0];
        let mut v = vec![0.5, -1.0];
        sgd_momentum_step(&mut p, &[0.0, 0.0], &mut v, 0.01, 0.9).unwrap();
        assert_eq!(v, vec![0.45, -0.9]);
        assert_eq!(p, vec![1.45, 1.1]);

        let mut p = vec![1.0, 2.0];
        let mut v = vec![0.0; 2];
        sgd_momentum_step(&mut p, &[0.0, 0.0], &mut v, 0.01, 0.9).unwrap();
        assert_eq!(p, vec![1.0, 2.0]);
    }

    #[test]
    fn non_finite_gradient_is_rejected_untouched() {
        let mut p = vec![1.0];
        let mut v = vec![0.3];
        let err = sgd_momentum_step(&mut p, &[f64::NAN], &mut v, 0.01, 0.9).unwrap_err();
        assert!(err.to_string().contains("divergence"));
        assert_eq!((p[0], v[0]), (1.0, 0.3));
    }

    #[test]
    fn step_schedule() {
        let s = StepSchedule {
            initial_lr: 0.01,
            decay: 0.1,
            period: 300,
        };
        assert_eq!(s.total_iterations(), 750);
        assert_eq!(s.lr_at(0), 0.01);
        assert_eq!(s.lr_at(299), 0.01);
        assert!((s.lr_at(300) - 0.001).abs() < 1e-18);
        assert!((s.lr_at(749) - 0.0001).abs() < 1e-18);
        assert_eq!(DEFAULT_LR, 0.01);
        assert_eq!(DEFAULT_MOMENTUM, 0.9);
    }
}
