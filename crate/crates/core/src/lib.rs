pub mod bnc;
mod dyadic;
pub mod error;
pub mod experiments;
pub mod ip;
pub mod knapsack;
pub mod lp;
pub mod scoring;
pub mod tree;

pub use error::{Error, Result};
