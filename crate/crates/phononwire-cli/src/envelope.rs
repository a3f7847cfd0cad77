//! Result envelope written next to the data artifacts. Scalar outputs carry
//! explicit units and the envelope echoes the raw config text so a run can be
//! reproduced from its output directory alone.

use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Serialize)]
pub struct Quantity {
    pub value: f64,
    pub unit: &'static str,
}

impl Quantity {
    pub fn new(value: f64, unit: &'static str) -> Self {
        Self { value, unit }
    }
}

#[derive(Debug, Serialize)]
pub struct ResultEnvelope {
    pub tool_version: &'static str,
    pub command: String,
    pub seed: u64,
    pub elapsed_s: f64,
    pub warnings: Vec<String>,
    /// Files the command wrote, relative to the output directory.
    pub artifacts: Vec<String>,
    pub outputs: BTreeMap<String, Quantity>,
    /// Byte-identical copy of the config file the run used.
    pub config_echo: String,
}
