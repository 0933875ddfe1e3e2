//! Analytical and stochastic model of a SiNW bioFET receiver for
//! molecular communication.
//!
//! The chain runs from the medium ([`physchem`]) through receptor binding
//! ([`kinetics`]) and the field-effect transducer ([`transducer`]) to the
//! output noise budget ([`noise`]). [`stosim`] simulates the same chain one
//! receptor transition at a time.

pub mod error;
pub mod kinetics;
pub mod noise;
pub mod physchem;
pub mod quadrature;
pub mod receiver;
pub mod spectral;
pub mod stosim;
pub mod transducer;

pub use error::{ModelError, Result};
pub use kinetics::{ChargeSign, LigandReceptorPair, MessageSchedule, RecognitionLayer};
pub use noise::{Band, NoiseBudget, SignalReference, Spectrum};
pub use physchem::Environment;
pub use receiver::Receiver;
pub use transducer::{ChannelDoping, TransducerConfig};
