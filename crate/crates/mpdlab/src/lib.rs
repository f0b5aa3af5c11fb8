#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::suspicious_arithmetic_impl)]

pub mod construct;
pub mod config;
pub mod error;
pub mod experiment;
pub mod fiber;
pub mod fields;
pub mod fuchsian;
pub mod geodesic;
pub mod jet;
pub mod metric;
pub mod operators;
pub mod spectra;
pub mod tensor;

pub use config::{parse_config, parse_config_str, ExperimentConfig, Numerics, PerturbationKind, PerturbationSpec};
pub use error::{Error, Result};
pub use experiment::{run, Command, ResultEnvelope, RunOptions};
pub use fuchsian::{ConjugacyClass, FuchsianGroup, GroupElement, Letter, UnitTangent};
pub use jet::{CJet, Jet};
pub use metric::MetricField;
pub use spectra::{Spectrum, SpectrumEntry};
pub use tensor::{Tensor, TensorField};
