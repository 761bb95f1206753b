//! Exact-arithmetic workbench for pointwise dynamics on small metric systems.

pub mod cli;
pub mod error;
pub mod example512;
pub mod expansivity;
pub mod format;
pub mod measures;
pub mod metric;
pub mod rational;
pub mod shadowing;
pub mod shift;
pub mod stability;
pub mod systems;

pub use error::{Error, Result};
pub use rational::{q, Rational};
