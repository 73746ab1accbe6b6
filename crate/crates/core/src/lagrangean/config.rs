use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How slots left without a valid direction are reassigned at a time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Greedy,
    /// every ordering of the free slots, falling back to greedy above `factorial_cap`
    FullFactorial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LmConfig {
    pub max_iterations: usize,
    /// relative gap `(upper - lower) / max(1, |upper|)`
    pub gap_tol: f64,
    pub max_stagnant: usize,
    pub stagnant_to_reduce_step: usize,
    pub stagnant_to_inter_swap: usize,
    pub step_scale: f64,
    pub step_reduction: f64,
    /// intra-orbit neighbors per slot
    pub c_alpha: usize,
    pub strategy: Strategy,
    pub factorial_cap: usize,
    /// seconds; checked after each iteration, so one iteration always runs
    pub time_limit_s: Option<f64>,
    pub memoize: bool,
    pub parallel: bool,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            max_iterations: 30,
            gap_tol: 0.01,
            max_stagnant: 10,
            stagnant_to_reduce_step: 5,
            stagnant_to_inter_swap: 4,
            step_scale: 2.0,
            step_reduction: 0.5,
            c_alpha: 4,
            strategy: Strategy::FullFactorial,
            factorial_cap: 8,
            time_limit_s: None,
            memoize: true,
            parallel: true,
        }
    }
}

impl LmConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.max_iterations == 0 {
            return fail("max_iterations must be at least 1".into());
        }
        if !(self.gap_tol >= 0.0) {
            return fail(format!("gap_tol {} must be non-negative", self.gap_tol));
        }
        if !(self.step_scale > 0.0 && self.step_scale.is_finite()) {
            return fail(format!("step_scale {} must be positive", self.step_scale));
        }
        if !(self.step_reduction > 0.0 && self.step_reduction <= 1.0) {
            return fail(format!("step_reduction {} outside (0, 1]", self.step_reduction));
        }
        if self.c_alpha < 2 || !self.c_alpha.is_multiple_of(2) {
            return fail(format!("c_alpha {} must be even and at least 2", self.c_alpha));
        }
        if self.stagnant_to_reduce_step == 0 {
            return fail("stagnant_to_reduce_step must be at least 1".into());
        }
        if let Some(limit) = self.time_limit_s {
            if !(limit >= 0.0) {
                return fail(format!("time_limit_s {limit} must be non-negative"));
            }
        }
        Ok(())
    }
}
