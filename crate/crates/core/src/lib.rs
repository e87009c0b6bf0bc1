//! Large-system analysis of training in quantized MIMO: replica fixed
//! points, achievable rates, symbol-error rates and a GAMP-based Monte Carlo
//! check.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod fixed_point;
pub mod gamp;
pub mod quadrature;
pub mod presets;
pub mod quantizer;
pub mod rate;
pub mod replica;
pub mod scalar_awgn;
pub mod search;
pub mod ser;
pub mod sim;
pub mod special;

pub use error::{Error, Result};
pub use quantizer::{calibrate_step, QuantizerSpec, Resolution};
pub use replica::{Numerics, SystemConfig, Training};
pub use scalar_awgn::{ChannelPrior, InputPrior};
