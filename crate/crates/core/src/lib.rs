//! Two-person zero-sum games in which the players control a continuous-time
//! finite Markov chain at the decision times of a partition of `[0, +inf)`.
//!
//! The crate computes the values of the time-discretized games and of their
//! vanishing-duration limits:
//!
//! - [`observed`]: the state is observed by both players (backward induction,
//!   stationary fixed points, the limit Shapley equation, guarantee checks).
//! - [`belief`]: the state is hidden but actions are public; the game lives on
//!   the belief simplex.
//! - [`diffgame`]: deterministic differential games discretized in time, with
//!   pure, relaxed and random-action mixed extensions.
//! - [`matgame`]: the stage operator, an exact matrix-game solver.
//! - [`kernel`]: transition semigroups and stage payoff integrals.
//! - [`harness`]: experiment sweeps, CSV output and convergence reports.
//!
//! Every sweep over states, grid points or cells can run sequentially or on
//! the rayon pool, see [`Execution`].

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod belief;
pub mod diffgame;
pub mod error;
pub mod game;
pub mod harness;
pub mod kernel;
pub mod linalg;
pub mod matgame;
pub mod observed;
pub mod par;
pub mod quad;
pub mod settings;
pub mod specfile;
pub mod table;

pub use error::{Error, Result};
pub use game::{Evaluation, GameParts, GameSpec, Partition, RateMatrix, Violation};
pub use matgame::MatrixGameSolution;
pub use par::Execution;
pub use settings::Settings;
pub use table::ValueTable;
