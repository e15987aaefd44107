//! Spiking neural networks of leaky integrate-and-fire neurons, trained
//! with spatio-temporal backpropagation and compressed by ADMM-based
//! connection pruning, weight quantization and activity regularization.
//!
//! The usual flow is [`net::SpikingNetwork::init`], pretraining with
//! [`stbp::train`], compression with one of the [`admm`] drivers, and
//! reporting with [`metrics::CompressionReport`]. [`experiment`] wires the
//! whole pipeline to configuration files and checkpoints.

pub mod admm;
pub mod data;
pub mod error;
pub mod experiment;
pub mod lif;
pub mod metrics;
pub mod net;
pub mod seed;
pub mod stbp;

pub use error::{Result, SnnError};
