//! OpenCL C kernel text.

use super::EmitError;
use crate::frontend::ast::{ExprKind, ParamKind, StmtKind};
use crate::frontend::pretty::{Dialect, Printer};
use crate::transform::{MemorySpace, TransformedKernel};
use std::fmt::Write;

const SAMPLER_FLAGS: &str = "CLK_NORMALIZED_COORDS_FALSE | CLK_ADDRESS_CLAMP_TO_EDGE | CLK_FILTER_NEAREST";

fn check_dialect(tk: &TransformedKernel) -> Result<(), EmitError> {
    let mut bad = None;
    tk.body.walk(&mut |s| {
        if let StmtKind::Assign { target: crate::frontend::ast::LValue::Index2 { image, .. }, .. } = &s.kind {
            bad.get_or_insert(format!("unlowered 2D store to `{image}`"));
        }
    });
    tk.body.walk_exprs(&mut |e| match &e.kind {
        ExprKind::Index2 { image, .. } => {
            bad.get_or_insert(format!("unlowered 2D read of `{image}`"));
        }
        ExprKind::ThreadIdx(_) | ExprKind::TileOffset(_) => {
            bad.get_or_insert("logical thread index in transformed kernel".to_string());
        }
        _ => {}
    });
    match bad {
        Some(m) => Err(EmitError::UnsupportedNode(m)),
        None => Ok(()),
    }
}

pub fn param_decls(tk: &TransformedKernel) -> Vec<String> {
    let mut out: Vec<String> = tk
        .params
        .iter()
        .map(|p| {
            let t = p.kind.elem();
            match (tk.space(&p.name), p.kind) {
                (MemorySpace::Scalar, _) | (_, ParamKind::Scalar(_)) => format!("{t} {}", p.name),
                (MemorySpace::Global, _) => format!("__global {t} * {}", p.name),
                (MemorySpace::Constant, _) => format!("__constant {t} * {}", p.name),
                (MemorySpace::ImageReadOnly, _) => format!("read_only image2d_t {}", p.name),
                (MemorySpace::ImageWriteOnly, _) => format!("write_only image2d_t {}", p.name),
            }
        })
        .collect();
    out.push("int W".into());
    out.push("int H".into());
    out
}

pub fn emit_kernel(tk: &TransformedKernel) -> Result<String, EmitError> {
    check_dialect(tk)?;
    let mut out = String::new();
    let mut samplers = false;
    for p in &tk.params {
        if tk.space(&p.name) == MemorySpace::ImageReadOnly {
            writeln!(out, "__constant sampler_t imcl_sampler_{} = {SAMPLER_FLAGS};", p.name).unwrap();
            samplers = true;
        }
    }
    if samplers {
        out.push('\n');
    }
    writeln!(out, "__kernel void {}({}) {{", tk.name, param_decls(tk).join(", ")).unwrap();
    Printer { dialect: Dialect::OpenCl, params: &tk.params }.block(&mut out, &tk.body, 1);
    out.push_str("}\n");
    Ok(out)
}
