//! Exact construction and verification of piecewise linear minimal and extreme functions
//! for the n-dimensional infinite group relaxation.

pub mod catalog;
pub mod error;
pub mod expr;
pub mod fillin;
pub mod gauge;
pub mod geometry;
pub mod grid;
pub mod oned;
pub mod pipeline;
pub mod probe;
pub mod rational;
pub mod verify;

pub use error::{Error, Result};
pub use expr::PwlExpr;
pub use gauge::GaugeSimplex;
pub use grid::GridFunction;
pub use rational::{RatVec, Rational};
