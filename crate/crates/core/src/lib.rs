//! Visual word recognition from frame sequences of a spoken word.
//!
//! Each frame of an utterance is reduced to eight mouth-region signals:
//! height and width of the lip box, wavelet-domain mutual information and
//! quality index against the previous frame, a wavelet vertical/horizontal
//! feature ratio, a Sobel edge ratio, the amount of red (tongue) and the
//! number of teeth pixels. The per-word `n x 8` matrix, min-max normalized,
//! is the word signature. Signatures are compared signal-by-signal with DTW
//! (or Euclidean distance after linear resampling), fused by weighted
//! averaging, and classified with k nearest neighbours.
//!
//! ```text
//! frames -> localize -> features -> WordSignature -> recognizer -> label
//! ```
//!
//! The [`harness`] module renders synthetic talking-mouth datasets with
//! ground truth and runs speaker-dependent and speaker-independent
//! evaluations. Runnable walkthroughs of each capability live under
//! `examples/`:
//!
//! ```bash
//! cargo run --release --example synth_dataset
//! cargo run --release --example localize_lips
//! cargo run --release --example wavelet_measures
//! cargo run --release --example word_signature
//! cargo run --release --example dtw_knn
//! cargo run --release --example tune_weights
//! cargo run --release --example evaluate_protocols
//! cargo run --release --example plot_signals
//! ```

pub mod cli;
pub mod error;
pub mod features;
pub mod harness;
pub mod imaging;
pub mod localize;
pub mod recognizer;
pub mod transforms;

pub use error::{Error, Result};
pub use features::{extract_signature, FrameFeatures, WordSignature, SIGNAL_NAMES};
pub use imaging::{BoundingBox, EllipseMask, Frame, GrayImage};
pub use localize::{localize, LipRegion};
pub use recognizer::{classify, DistanceMode, FusionWeights, Prediction, TrainingIndex};
