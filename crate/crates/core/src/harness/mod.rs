//! Configuration, initial data, convergence sweeps and verification runs.

pub mod config;
pub mod dual;
pub mod init;
pub mod mms;
pub mod output;
pub mod run;
pub mod sweep;

pub use config::{parse_config, RunConfig};
pub use init::{base_profile, well_prepared_init};
pub use run::{run1d, run3d, verify_run};
pub use sweep::{sweep, SweepResult};
