pub mod algebra;
pub mod audit;
pub mod cli;
pub mod error;
pub mod failstop;
pub mod hierarchy;
pub mod sib_model;
pub mod simnet;
pub mod thresh_sign;

pub use error::{Error, Result};
