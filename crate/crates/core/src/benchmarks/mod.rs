//! Benchmark applications: independent software reference oracles, SI
//! microcode generators, and the comparison harness.

pub mod builder;
pub mod cnn;
pub mod harness;
pub mod sha3;
pub mod sift;
pub mod swe;

pub use builder::GenError;
