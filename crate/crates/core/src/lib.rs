//! Diversification quotients and classical diversification indices computed
//! from empirical or simulated loss samples, with portfolio optimizers and a
//! rolling backtest harness.

pub mod backtest;
pub mod cli;
pub mod error;
pub mod indices;
pub mod io;
pub mod matrix;
pub mod models;
pub mod optimize;
pub mod risk;

pub use error::{Error, Result};
pub use matrix::{SampleMatrix, Weights};
