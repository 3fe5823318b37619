//! Benchmark harness for the attention approximation library: the VAT1
//! tensor container, synthetic instance generation, run configs, report
//! emission, and the `vat` CLI.

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod run;
pub mod synth;

pub use config::{InstanceSource, RunConfig};
pub use error::{BenchError, Result};
pub use io::{
    decode_tensors, encode_tensors, instance_from_tensors, read_tensors, tensors_from_instance,
    write_tensors, NamedTensor,
};
pub use run::{run, RunOutcome, CSV_HEADER};
pub use synth::{generate_synthetic, QkDist, SyntheticSpec, VDist};
