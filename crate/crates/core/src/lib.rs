//! Order completion methods for nonlinear PDEs: interval-valued functions,
//! Baire operators on grids, Dedekind-MacNeille completion of finite posets,
//! and certified piecewise-polynomial approximate solutions.

pub mod baire;
pub mod cli;
pub mod expr;
pub mod grid;
pub mod macneille;
pub mod order;
pub mod pde;
pub mod solver;

pub use order::{interval_join, interval_leq, interval_meet, ExtInterval, ExtReal};
