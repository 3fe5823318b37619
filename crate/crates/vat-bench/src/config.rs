//! Run configuration: instance source, kernel, approximators, and the r
//! sweep. Serialized as JSON; the report echoes the exact config back so a
//! run can be reproduced from its own output.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::io::{instance_from_tensors, read_tensors};
use crate::synth::{generate_synthetic, SyntheticSpec};
use vat_core::{ApproximatorSpec, AttentionInstance, KernelSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceSource {
    File {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        causal: Option<bool>,
    },
    Synthetic(SyntheticSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub instance: InstanceSource,
    pub kernel: KernelSpec,
    pub approximators: Vec<ApproximatorSpec>,
    pub r_values: Vec<usize>,
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text =
            std::fs::read_to_string(path.as_ref()).map_err(|source| BenchError::ConfigIo {
                path: path.as_ref().to_path_buf(),
                source,
            })?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn resolve_instance(&self) -> Result<AttentionInstance> {
        match &self.instance {
            InstanceSource::File { path, causal } => {
                let tensors = read_tensors(path)?;
                instance_from_tensors(&tensors, *causal)
            }
            InstanceSource::Synthetic(spec) => generate_synthetic(spec),
        }
    }
}
