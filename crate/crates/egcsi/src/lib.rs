//! Environment-generalizable massive-MIMO CSI feedback at desk scale.
//!
//! The pipeline: synthesize cluster-based channels ([`channel`]), split each
//! estimated channel into rank-1 cluster components by truncated SVD with a
//! hybrid MDL/threshold rank estimate ([`decouple`]), move every component's
//! angular-delay peak to a canonical origin with canonical phase ([`align`]),
//! compress and quantize each aligned component and frame the bits together
//! with the per-cluster metadata ([`codec`]), and reconstruct at the receiver
//! by inverting each step and summing. [`metrics`] scores reconstructions and
//! distribution alignment; [`harness`] wires everything into datasets,
//! benchmarks, sweeps, and the `egcsi` CLI.

pub mod align;
pub mod channel;
pub mod codec;
pub mod decouple;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod metrics;

pub use error::{Error, Result};
