//! Core of the KCF-GPF ensemble visual tracker.
//!
//! Several kernelized correlation filter (KCF) experts are evaluated over
//! sliding windows inside a motion-bounded search scope. Their reliability
//! is scored by peak value and APCE, the strongest decision seeds a
//! multi-task Gaussian particle filter, and the particle filter's posterior
//! mean becomes the tracked position and scale.
//!
//! The crate is `no_std` and only needs an allocator. File IO, dataset
//! layout and the command line live in the companion `kcfgpf` crate.
#![no_std]
#![deny(unsafe_code)]
// `!(x > 0.0)` style checks are how parameters reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod corrfilter;
pub mod ensemble;
mod error;
pub mod features;
pub mod fft;
pub mod gpf;
pub mod grid;
pub mod imaging;
pub mod metrics;
pub mod synthetic;
pub mod tracker;

pub use error::{Error, Result};
pub use grid::Grid;
pub use imaging::{GrayImage, Patch, Rect};
pub use tracker::{StepOutput, Tracker, TrackerConfig};
