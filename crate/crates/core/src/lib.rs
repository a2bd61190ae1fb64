//! Two-element interferometer search for Δt = 0, Δf pulse pairs, with a
//! synthetic sky to drive it.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod candidates;
pub mod channelizer;
pub mod correlator;
pub mod error;
pub mod excision;
pub mod frame;
pub mod pipeline;
pub mod sim;
pub mod stats;
pub mod timebase;

pub use candidates::{CandidateRecord, Detector, FrameDetections, PairRecord};
pub use channelizer::{Channelizer, DetectionThreshold, SpectralFrame};
pub use correlator::{cross_correlate, LagSpectrum};
pub use error::{Error, Result};
pub use excision::{ExcisionConfig, FilterLevel, MarginSnapshot, NotchSet, SegmentLedger};
pub use frame::{BandPlan, Element, IqFrame, SEGMENT_BINS};
pub use sim::{BaselineGeometry, Injections, ScalePreset, SimConfig, SkySimulator};
pub use timebase::{ObservatoryClock, Pointing, RaBin};
pub use pipeline::{RunManifest, Scenario};
