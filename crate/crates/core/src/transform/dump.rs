//! Human-readable rendering of a transformed kernel.

use super::TransformedKernel;
use crate::frontend::pretty::{Dialect, Printer};
use std::fmt::Write;

/// Pseudo-source of the transformed body, preceded by comments giving the
/// configuration, passes, launch geometry and memory placement.
pub fn dump(tk: &TransformedKernel) -> String {
    let mut out = String::new();
    let l = &tk.launch;
    writeln!(out, "// kernel {}", tk.name).unwrap();
    writeln!(out, "// config {}", tk.config).unwrap();
    writeln!(out, "// passes {}", tk.provenance.join(" -> ")).unwrap();
    writeln!(
        out,
        "// launch global {:?} local {:?} grid {:?} pixels/thread {:?} mapping {:?}",
        l.global_size, l.local_size, l.logical_grid, l.pixels_per_thread, tk.mapping
    )
    .unwrap();
    for b in &l.bindings {
        writeln!(out, "// param {} {:?} {} [{}]", b.name, b.space, b.ty, b.length).unwrap();
    }
    for t in &tk.tiles {
        writeln!(out, "// tile {} for {}: {}x{} {} ({} bytes)", t.tile, t.image, t.width, t.height, t.elem, t.bytes())
            .unwrap();
    }
    out.push_str("{\n");
    Printer { dialect: Dialect::ImageCl, params: &tk.params }.block(&mut out, &tk.body, 1);
    out.push_str("}\n");
    out
}
