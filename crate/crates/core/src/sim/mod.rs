//! Monte Carlo experiment harness: configuration, presets, reports, and the
//! dispatcher behind the `experiment` subcommand.

mod config;
mod figures;
mod report;
mod tables;

use std::path::Path;

pub use config::{ConfigOverrides, Experiment, ExperimentConfig, Scale};
pub use figures::{density_grid, emit_fig1, emit_fig2, emit_fig3, DensityGrid};
pub use report::{Cell, CellKind, ExperimentReport, ReportRow};
pub use tables::{run_table1, run_table2_table3, run_table4, table4_repeat, univariate_draw, Table23};

use crate::Result;

/// Everything an experiment produces, held in memory until written.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub reports: Vec<ExperimentReport>,
    /// Extra files as `(file name, contents)`.
    pub files: Vec<(String, String)>,
}

impl Outcome {
    /// Writes `<name>.csv` and `<name>.json` per report plus the extra files.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<String>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for r in &self.reports {
            let csv_name = format!("{}.csv", r.name);
            std::fs::write(dir.join(&csv_name), r.to_csv()?)?;
            let json_name = format!("{}.json", r.name);
            std::fs::write(dir.join(&json_name), r.to_json()?)?;
            written.push(csv_name);
            written.push(json_name);
        }
        for (name, contents) in &self.files {
            std::fs::write(dir.join(name), contents)?;
            written.push(name.clone());
        }
        Ok(written)
    }
}

pub fn run(config: &ExperimentConfig) -> Result<Outcome> {
    config.validate()?;
    match config.experiment {
        Experiment::Table1 => {
            let report = run_table1(config)?;
            let fig1 = emit_fig1(&report)?;
            Ok(Outcome { reports: vec![report], files: vec![fig1] })
        }
        Experiment::Fig1 => {
            let report = run_table1(config)?;
            Ok(Outcome { reports: vec![], files: vec![emit_fig1(&report)?] })
        }
        Experiment::Table2 | Experiment::Table3 => {
            let t = run_table2_table3(config)?;
            Ok(Outcome { reports: vec![t.table2, t.table3], files: vec![] })
        }
        Experiment::Table4 => Ok(Outcome { reports: vec![run_table4(config)?], files: vec![] }),
        Experiment::Fig2Density => Ok(Outcome { reports: vec![], files: emit_fig2(config)? }),
        Experiment::Fig3Ellipse => Ok(Outcome { reports: vec![], files: emit_fig3(config)? }),
    }
}
