//! Parameter sweeps over either model, emitted as CSV or JSON.
//!
//! A config names the model, fixed parameters, one to three axes and the
//! output columns:
//!
//! ```json
//! {
//!   "model": "cascaded",
//!   "params": {"kappa": 1, "phi": 0, "F": 0, "m1": 50, "m2": 100},
//!   "axes": [
//!     {"name": "Delta", "min": -10, "max": 10, "points": 101},
//!     {"name": "m3", "min": 0, "max": 100, "points": 101}
//!   ],
//!   "outputs": ["dn1", "dn2"],
//!   "format": "csv"
//! }
//! ```

mod config;
mod emit;
mod params;
mod run;

pub use config::{parse_config, Axis, Format, Output, OutputKind, Quantity, Spacing, SweepConfig, MAX_AXES};
pub use emit::{emit, emit_csv, emit_json, format_float};
pub use params::{ModelKind, ModelParams, ParamError, ParamSet, Preset};
pub use run::{evaluate, grid, run_sweep, run_sweep_with, ResultRow, RowStatus, DERIVATIVE_STEP};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{name} = {value} is negative after converting baselines to bath occupations")]
    NegativeOccupation { name: String, value: f64 },
}
