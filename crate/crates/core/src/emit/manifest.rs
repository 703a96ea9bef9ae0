//! Machine-readable launch manifest.

use crate::space::Configuration;
use crate::transform::{Binding, LaunchDescriptor, TransformedKernel};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Manifest {
    pub kernel: String,
    pub variant_id: String,
    pub global_size: [u64; 2],
    pub local_size: [u64; 2],
    pub logical_grid: [u64; 2],
    pub pixels_per_thread: [u64; 2],
    pub bindings: Vec<Binding>,
    pub config: Configuration,
}

impl Manifest {
    pub fn new(tk: &TransformedKernel, variant_id: &str) -> Manifest {
        let l = &tk.launch;
        Manifest {
            kernel: tk.name.clone(),
            variant_id: variant_id.to_string(),
            global_size: l.global_size,
            local_size: l.local_size,
            logical_grid: l.logical_grid,
            pixels_per_thread: l.pixels_per_thread,
            bindings: l.bindings.clone(),
            config: tk.config.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<Manifest, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn launch(&self) -> LaunchDescriptor {
        LaunchDescriptor {
            global_size: self.global_size,
            local_size: self.local_size,
            logical_grid: self.logical_grid,
            pixels_per_thread: self.pixels_per_thread,
            bindings: self.bindings.clone(),
        }
    }
}
