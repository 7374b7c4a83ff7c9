//! Generalized-bicycle codes on movable atom arrays: construction, movement
//! scheduling, circuit-level simulation with BP-OSD decoding, and compilation
//! onto a memory/compute hierarchy.

pub mod arch;
pub mod code;
pub mod compiler;
pub mod config;
pub mod decoder;
pub mod exec;
pub mod gf2;
pub mod layout;
pub mod noise;
pub mod sampler;
pub mod schedule;

pub use exec::Execution;
