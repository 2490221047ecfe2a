pub mod beta;
pub mod calibration;
pub mod error;
pub mod fitting;
pub mod funcmodel;
pub mod geometry;
pub mod linalg;
pub mod parabolic;
pub mod quadrature;
pub mod reconstruct;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
