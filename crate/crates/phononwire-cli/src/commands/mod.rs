//! Subcommand registry. Each analysis lives behind the `Command` trait and is
//! selected by name at runtime, so adding a workflow means adding one module
//! and one registry entry, not touching the dispatch logic.

use crate::config::Config;
use crate::envelope::Quantity;
use anyhow::Result;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

mod dephasing;
mod disorder_ensemble;
mod eigen_report;
mod fit_coherent;
mod fit_thermal;
mod metrics;
mod simulate_coherent;
mod simulate_thermal;

pub struct RunContext<'a> {
    pub config: &'a Config,
    /// Directory of the config file; data paths in the config resolve
    /// against it.
    pub config_dir: &'a Path,
    pub out_dir: &'a Path,
    pub emit_plots: bool,
    pub seed: u64,
}

impl RunContext<'_> {
    pub fn data_path(&self, relative: &str) -> PathBuf {
        let p = Path::new(relative);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.config_dir.join(p)
        }
    }
}

#[derive(Default)]
pub struct CommandOutput {
    pub outputs: BTreeMap<String, Quantity>,
    pub warnings: Vec<String>,
    pub artifacts: Vec<String>,
}

impl CommandOutput {
    pub fn insert(&mut self, key: &str, value: f64, unit: &'static str) {
        self.outputs.insert(key.to_string(), Quantity::new(value, unit));
    }
}

pub trait Command {
    fn name(&self) -> &'static str;
    fn about(&self) -> &'static str;
    fn run(&self, ctx: &RunContext) -> Result<CommandOutput>;
}

pub fn registry() -> Vec<Box<dyn Command>> {
    vec![
        Box::new(metrics::Metrics),
        Box::new(simulate_coherent::SimulateCoherent),
        Box::new(simulate_thermal::SimulateThermal),
        Box::new(fit_coherent::FitCoherent),
        Box::new(fit_thermal::FitThermal),
        Box::new(eigen_report::EigenReport),
        Box::new(disorder_ensemble::DisorderEnsemble),
        Box::new(dephasing::Dephasing),
    ]
}
