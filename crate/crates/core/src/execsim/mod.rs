//! Reference interpreter, cost model and external measurement.

pub mod buffer;
mod compile;
pub mod cost;
pub mod interp;
pub mod io;
pub mod measure;
pub mod profile;
pub mod value;

pub use buffer::{Buffer, BufferSet};
pub use cost::{CostReport, EventCounts};
pub use interp::{execute, interpret, ExecError, Execution, InterpretOptions, TraceLog};
pub use profile::DeviceProfile;
pub use value::Value;

use crate::transform::TransformedKernel;

/// Interpret with event counting and price the events under `profile`.
pub fn estimate_cost(
    tk: &TransformedKernel,
    inputs: &BufferSet,
    profile: &DeviceProfile,
) -> Result<CostReport, ExecError> {
    let e = execute(tk, inputs, InterpretOptions { trace: false, classify_accesses: true })?;
    let wg = tk.launch.local_size[0] * tk.launch.local_size[1];
    Ok(CostReport::new(e.counts, profile, tk.local_bytes(), wg))
}
