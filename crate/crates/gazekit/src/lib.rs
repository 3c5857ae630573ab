//! Gaze-data processing toolkit.
//!
//! The crate covers the full path from raw eye-tracker logs to analysis
//! artifacts:
//!
//! - [`ingest`]: tabular log parsing, tracking-ratio quality gating,
//!   exclusion rules, and segmentation.
//! - [`preprocess`]: smoothing, gap interpolation, blink removal, and
//!   pupil baseline correction.
//! - [`events`]: fixation/saccade detection (velocity- and
//!   dispersion-threshold algorithms), blink detection, event statistics,
//!   and accuracy/precision validation metrics.
//! - [`scanpath`]: ROI string encoding plus Hamming, Needleman-Wunsch /
//!   ScanMatch, nearest-neighbor double-mapping distance, and n-gram
//!   comparison.
//! - [`viz`]: saliency maps (Gaussian fixation blur), scanpath and gaze
//!   plot vector rendering, and portable raster emitters.
//! - [`synth`]: deterministic synthetic traces with ground-truth events,
//!   used as detector test fixtures.
//!
//! All processing is pure: every operation takes value data and returns
//! new value data, so recordings can be processed in parallel freely.

pub mod error;
pub mod events;
pub mod ingest;
pub mod kv;
pub mod model;
pub mod preprocess;
pub mod scanpath;
pub mod synth;
pub mod viz;

pub use error::{Error, Result};
