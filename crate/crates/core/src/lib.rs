#![no_std]

extern crate alloc;
#[cfg(any(feature = "std", test))]
extern crate std;

pub mod error;
pub mod features;
pub mod fft;
pub mod matrix;
pub mod model;
pub mod rerank;
pub mod signal;
pub mod sim;
pub mod synth;

pub use error::{Error, Result};
pub use matrix::Matrix;
