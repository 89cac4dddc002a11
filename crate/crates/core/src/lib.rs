//! Deterministic mmWave CSI prediction pipeline.
//!
//! The crate simulates a street-canyon mmWave cell end to end:
//!
//! - [`channel`] — image-method multipath generator and the ray-sum channel
//!   response of a uniform planar array across OFDM subcarriers.
//! - [`mobility`] — vehicles driving along the street under a finite-state
//!   Markov-chain acceleration model, emitting one state per CAM period.
//! - [`dataset`] — the base station's self-labelling collection loop: CAM and
//!   CSI record streams, time alignment, auto-labelled instances, range-bound
//!   dataset construction, trace-pure train/test splits and text serialization.
//! - [`windows`] — feature selection, sliding-window assembly and per-channel
//!   standardization for the recurrent predictor.
//! - [`model`] — a from-scratch two-layer LSTM with a fully-connected head,
//!   exact backpropagation through time, Adam, and text checkpoints.
//! - [`eval`] — test-set MSE, the per-feature-set ablation table,
//!   nearest-instance lookup and constellation plot-data export.
//! - [`config`] — the line-oriented run configuration shared by the CLI.
//!
//! Everything is deterministic under a master seed: same configuration, same
//! bytes out.

pub mod channel;
pub mod config;
pub mod dataset;
pub mod eval;
pub mod mobility;
pub mod model;
pub mod windows;

pub use channel::{ArrayGeometry, ChannelConfig, ChannelMatrix, ChannelVector, PathComponent, Scene};
pub use config::RunConfig;
pub use dataset::{CamRecord, CsiRecord, Dataset, DatasetInstance};
pub use eval::{AblationReport, ConstellationExport};
pub use mobility::{FsmcConfig, MobilityConfig, VehicleState};
pub use model::{AdamState, LstmLayerParams, ModelConfig, ModelParams, TrainConfig};
pub use windows::{FeatureSet, Standardizer, WindowedSample};
