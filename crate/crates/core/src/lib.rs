//! Geometric and probabilistic constellation shaping for the AWGN channel.

pub mod cli;
pub mod constellation;
pub mod error;
pub mod geoshape;
pub mod pasfec;
pub mod probshape;
pub mod quadrature;
pub mod rates;

pub use error::{Error, Result};
