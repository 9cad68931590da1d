use serde::{Deserialize, Serialize};

use crate::kernel::PayoffMode;
use crate::par::Execution;

/// Knobs shared by the recursive solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Settings {
    pub execution: Execution,
    /// Target sup-norm distance to the fixed point of a contraction.
    pub tol: f64,
    pub max_iterations: usize,
    pub payoff_mode: PayoffMode,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            execution: Execution::default(),
            tol: 1e-9,
            max_iterations: 10_000_000,
            payoff_mode: PayoffMode::Flow,
        }
    }
}

impl Settings {
    pub fn sequential() -> Self {
        Settings {
            execution: Execution::Sequential,
            ..Settings::default()
        }
    }

    pub fn with_tol(self, tol: f64) -> Self {
        Settings { tol, ..self }
    }

    pub fn with_payoff_mode(self, payoff_mode: PayoffMode) -> Self {
        Settings {
            payoff_mode,
            ..self
        }
    }

    pub fn with_execution(self, execution: Execution) -> Self {
        Settings { execution, ..self }
    }
}
