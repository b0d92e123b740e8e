//! Deterministic building blocks of an on-device scene-text pipeline.
//!
//! Trained networks are out of scope; their outputs (word boxes, CTC
//! posteriors) are read from files and everything downstream is computed
//! here: rotated-box geometry, paragraph grouping in reading order, CTC
//! decoding, WER and ROI evaluation, prompt assembly and a latency/energy
//! simulator of the device/cloud split.

pub mod cli;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod io;
pub mod prompt;
pub mod reading_order;
pub mod recognition;
pub mod roi;
pub mod sim;

pub use error::{Error, FormatError, FormatErrorKind, Result};
pub use geometry::{AxisRect, Point, RotatedBox};
pub use reading_order::{reconstruct, GroupingParams, IouMode, Paragraph, Word};
