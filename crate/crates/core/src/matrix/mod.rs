//! Exact and interval matrices over the complex numbers.

pub mod ball;
pub mod exp;
pub mod hp;
pub mod interval;
pub mod io;
pub mod log;
pub mod norm;
pub mod rational;
pub mod tensor;

pub use interval::IntervalMatrix;
pub use rational::RationalMatrix;

pub use exp::matrix_exp;
pub use log::{schur_log, SchurLog};
pub use norm::{interval_matrix_norm, matrix_norm};
pub use tensor::{partial_trace_expectation, row_column_lower_bound, Leg};
