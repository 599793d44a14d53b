//! `(p, τ)` sweeps, critical-point estimation and self-averaging diagnostics.

mod config;
mod critical;
mod csv;
mod montecarlo;
mod selfavg;
mod sweep;

pub use config::{Grid, Quantity, SweepConfig};
pub use critical::{
    build_surfaces, estimate_critical_line, CriticalEstimate, CriticalFlag, ScanDirection, Surface,
};
pub use csv::{read_csv, write_csv, CSV_HEADER};
pub use montecarlo::{haar_samples, sandwich_audit, HaarSample};
pub use selfavg::{self_averaging_chi, ChiRecord};
pub use sweep::{
    cell_statistics, check_resources, run_sweep, weighted_size_average, CellStat, Record, SweepResult,
};
