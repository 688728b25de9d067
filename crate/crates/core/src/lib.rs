//! Two-reflector ultrasonic sound-velocity profiler: acoustics, waveform
//! synthesis, time-to-digital conversion and the instrument controller.

// `!(x > 0.0)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acoustics;
pub mod constants;
pub mod device;
pub mod error;
pub mod record;
pub mod synth;
pub mod tdc;
pub mod waveform;

pub use acoustics::{MediumState, ReflectorMaterial, SensorGeometry};
pub use constants::{Constants, ValidationBounds};
pub use device::protocol::{Command, Frame, FrameDecoder, Response};
pub use device::settings::{DeviceSettings, SettingsStore};
pub use device::{Device, DeviceMode, SynthesizedSource, WaveformSource};
pub use error::{Error, Result};
pub use record::{DeviceRecord, RecordFlags};
pub use synth::{synthesize, GroundTruth, SynthesisScenario};
pub use tdc::{AmplitudeCalibration, ComparatorConfig, EchoPair, EchoTiming, Tdc};
pub use waveform::Waveform;
