//! Cycle-level software model of a tiled FPGA deep-learning accelerator.
//!
//! The accelerator is a three-stage pipeline: a tiled matrix multiplication
//! unit (TMMU) with banked weight storage, double-buffered node registers,
//! and a binary adder tree; a part-sum accumulation unit (PSAU); and a
//! piecewise-linear sigmoid activation unit (AFAU). FIFOs connect the
//! stages and a DMA model feeds the front.
//!
//! The crate provides, in order of dependency:
//! - [`tensor`], [`prng`], [`io`]: row-major f32 tensors, the pinned
//!   SplitMix64 generator, the DLT1 file format, and run configs.
//! - [`nn`]: reference feedforward / contrastive-divergence / backprop
//!   oracles and exact operation-count profiling.
//! - [`pwl`]: the segment-table sigmoid approximation.
//! - [`tiling`]: the functional tiled forward pass the simulator must match.
//! - [`sim`]: the deterministic cycle-level pipeline simulator.
//! - [`perf`]: closed-form cycle estimates, calibrated BRAM/DSP estimates,
//!   and the sweep report.

pub mod error;
pub mod io;
pub mod nn;
pub mod perf;
pub mod prng;
pub mod pwl;
pub mod sim;
pub mod tensor;
pub mod tiling;

pub use error::{Error, Result};
pub use tensor::Tensor2D;
