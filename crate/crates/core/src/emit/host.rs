//! C host stub that allocates, binds, launches and reads back one variant.

use super::manifest::Manifest;
use crate::frontend::ast::ScalarType;
use crate::transform::MemorySpace;
use std::fmt::Write;

fn cl_type(t: ScalarType) -> &'static str {
    match t {
        ScalarType::Float => "cl_float",
        ScalarType::Int => "cl_int",
        ScalarType::Uint => "cl_uint",
        ScalarType::Uchar => "cl_uchar",
    }
}

fn channel_type(t: ScalarType) -> &'static str {
    match t {
        ScalarType::Float => "CL_FLOAT",
        ScalarType::Int => "CL_SIGNED_INT32",
        ScalarType::Uint => "CL_UNSIGNED_INT32",
        ScalarType::Uchar => "CL_UNSIGNED_INT8",
    }
}

/// Host-side arguments of the stub function, after context/queue/kernel.
fn stub_params(m: &Manifest) -> Vec<String> {
    let mut out = Vec::new();
    for b in &m.bindings {
        let t = cl_type(b.ty);
        match b.space {
            MemorySpace::Scalar => out.push(format!("{t} {}", b.name)),
            _ => out.push(format!("{t} *{}", b.name)),
        }
    }
    for b in &m.bindings {
        if b.length.ends_with("_len") {
            out.push(format!("size_t {}", b.length));
        }
    }
    out
}

pub fn emit_host(m: &Manifest, written: &[String]) -> String {
    let mut s = String::new();
    let w = &mut s;
    writeln!(w, "/* Host stub for {} variant {}. */", m.kernel, m.variant_id).unwrap();
    writeln!(w, "#define CL_TARGET_OPENCL_VERSION 120").unwrap();
    writeln!(w, "#include <CL/cl.h>").unwrap();
    writeln!(w, "#include <stddef.h>\n").unwrap();
    writeln!(
        w,
        "cl_int run_{}_{}(cl_context ctx, cl_command_queue queue, cl_kernel kernel, {}) {{",
        m.kernel,
        m.variant_id,
        stub_params(m).join(", ")
    )
    .unwrap();
    writeln!(w, "    cl_int err = CL_SUCCESS;").unwrap();
    let mems: Vec<_> = m.bindings.iter().filter(|b| b.space != MemorySpace::Scalar).collect();
    for b in &mems {
        let n = &b.name;
        let t = cl_type(b.ty);
        let written_here = written.contains(n);
        match b.space {
            MemorySpace::ImageReadOnly | MemorySpace::ImageWriteOnly => {
                let (flags, host) = if b.space == MemorySpace::ImageReadOnly {
                    ("CL_MEM_READ_ONLY | CL_MEM_COPY_HOST_PTR", n.as_str())
                } else {
                    ("CL_MEM_WRITE_ONLY", "NULL")
                };
                writeln!(w, "    cl_image_format fmt_{n} = {{ CL_R, {} }};", channel_type(b.ty)).unwrap();
                writeln!(w, "    cl_image_desc desc_{n} = {{ 0 }};").unwrap();
                writeln!(w, "    desc_{n}.image_type = CL_MEM_OBJECT_IMAGE2D;").unwrap();
                writeln!(w, "    desc_{n}.image_width = (size_t) W;").unwrap();
                writeln!(w, "    desc_{n}.image_height = (size_t) H;").unwrap();
                writeln!(w, "    cl_mem mem_{n} = clCreateImage(ctx, {flags}, &fmt_{n}, &desc_{n}, {host}, &err);")
                    .unwrap();
            }
            _ => {
                let flags = if written_here { "CL_MEM_READ_WRITE | CL_MEM_COPY_HOST_PTR" } else { "CL_MEM_READ_ONLY | CL_MEM_COPY_HOST_PTR" };
                writeln!(
                    w,
                    "    cl_mem mem_{n} = clCreateBuffer(ctx, {flags}, sizeof({t}) * (size_t) ({}), {n}, &err);",
                    b.length
                )
                .unwrap();
            }
        }
        writeln!(w, "    if (err != CL_SUCCESS) return err;").unwrap();
    }
    for (i, b) in m.bindings.iter().enumerate() {
        let n = &b.name;
        let arg = match b.space {
            MemorySpace::Scalar => format!("sizeof({}), &{n}", cl_type(b.ty)),
            _ => format!("sizeof(cl_mem), &mem_{n}"),
        };
        writeln!(w, "    err |= clSetKernelArg(kernel, {i}, {arg});").unwrap();
    }
    writeln!(w, "    if (err != CL_SUCCESS) return err;").unwrap();
    writeln!(w, "    const size_t global[2] = {{ {}, {} }};", m.global_size[0], m.global_size[1]).unwrap();
    writeln!(w, "    const size_t local[2] = {{ {}, {} }};", m.local_size[0], m.local_size[1]).unwrap();
    writeln!(w, "    err = clEnqueueNDRangeKernel(queue, kernel, 2, NULL, global, local, 0, NULL, NULL);").unwrap();
    writeln!(w, "    if (err != CL_SUCCESS) return err;").unwrap();
    for b in mems.iter().filter(|b| written.contains(&b.name)) {
        let n = &b.name;
        match b.space {
            MemorySpace::ImageReadOnly | MemorySpace::ImageWriteOnly => {
                writeln!(w, "    const size_t origin_{n}[3] = {{ 0, 0, 0 }};").unwrap();
                writeln!(w, "    const size_t region_{n}[3] = {{ (size_t) W, (size_t) H, 1 }};").unwrap();
                writeln!(
                    w,
                    "    err = clEnqueueReadImage(queue, mem_{n}, CL_TRUE, origin_{n}, region_{n}, 0, 0, {n}, 0, NULL, NULL);"
                )
                .unwrap();
            }
            _ => {
                writeln!(
                    w,
                    "    err = clEnqueueReadBuffer(queue, mem_{n}, CL_TRUE, 0, sizeof({}) * (size_t) ({}), {n}, 0, NULL, NULL);",
                    cl_type(b.ty),
                    b.length
                )
                .unwrap();
            }
        }
        writeln!(w, "    if (err != CL_SUCCESS) return err;").unwrap();
    }
    for b in &mems {
        writeln!(w, "    clReleaseMemObject(mem_{});", b.name).unwrap();
    }
    writeln!(w, "    return CL_SUCCESS;").unwrap();
    writeln!(w, "}}").unwrap();
    s
}
