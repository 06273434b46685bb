//! Batch front end: configuration, scan drivers and table emission.

pub mod config;
pub mod drivers;
pub mod table;

use std::path::PathBuf;

pub use config::{Coupling, OutputFormat, Overrides, RunConfig, ScanKind};
pub use drivers::{run_angle_scan, run_bond_scan, run_qc_scan, run_scan, run_single, run_size_sweep, Setup};
pub use table::{emit, header_config, Cell, Identity, Table};

use crate::error::Result;

/// What a run produced.
#[derive(Debug)]
pub struct RunOutcome {
    pub tables: Vec<Table>,
    pub files: Vec<PathBuf>,
    /// Rows whose point failed to converge or errored.
    pub flagged: usize,
}

impl RunOutcome {
    /// 0 when every point converged, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.flagged == 0 {
            0
        } else {
            2
        }
    }
}

/// Resolves `config`, runs its scan and writes the tables.
pub fn execute(config: RunConfig, overrides: &Overrides) -> Result<RunOutcome> {
    let config = config.resolve(overrides)?;
    let tables = run_scan(&config)?;
    let toml = config.to_toml();
    let json = serde_json::to_value(&config).expect("run configuration serializes");
    let files = emit(&tables, &config.output.formats, &config.output.directory, config.kind().name(), &toml, &json)?;
    let flagged = tables.iter().map(Table::n_flagged).sum();
    Ok(RunOutcome { tables, files, flagged })
}
