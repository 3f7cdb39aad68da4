//! Signal processing directly on biphasic integrate-and-fire pulse trains.

pub mod arithmetic;
pub mod convolution;
pub mod encoder;
pub mod error;
pub mod experiments;
pub mod io;
pub mod kernel;
pub mod metrics;
pub mod reconstruction;
pub mod train;

pub use encoder::encode;
pub use error::{ErrorClass, PulseError, Result};
pub use train::{
    instantaneous_amplitude, negate, reference_train, AmplitudeStep, IfcParams, Polarity, PulseEvent, PulseTrain,
    Signal,
};
