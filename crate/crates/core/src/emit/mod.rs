//! OpenCL kernel text, host stub and launch manifest for a transformed kernel.

pub mod host;
pub mod kernel;
pub mod manifest;
pub mod validator;

use crate::transform::TransformedKernel;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub use host::emit_host;
pub use kernel::emit_kernel;
pub use manifest::Manifest;
pub use validator::{validate_opencl, SyntaxError};

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("cannot emit OpenCL: {0}")]
    UnsupportedNode(String),
    #[error("emitted kernel does not parse: {0}")]
    Syntax(#[from] SyntaxError),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmittedVariant {
    pub kernel_source: String,
    pub host_stub: String,
    pub manifest: Manifest,
    pub variant_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WrittenFiles {
    pub kernel: PathBuf,
    pub host: PathBuf,
    pub manifest: PathBuf,
}

/// First 16 hex digits of the SHA-256 of the kernel text followed by the
/// manifest serialized without its id.
pub fn variant_id(kernel_source: &str, manifest: &Manifest) -> String {
    let mut m = manifest.clone();
    m.variant_id.clear();
    let mut h = Sha256::new();
    h.update(kernel_source.as_bytes());
    h.update(serde_json::to_string(&m).expect("manifest serializes").as_bytes());
    let digest = h.finalize();
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

pub fn emit_variant(tk: &TransformedKernel) -> Result<EmittedVariant, EmitError> {
    let kernel_source = emit_kernel(tk)?;
    validate_opencl(&kernel_source)?;
    let mut manifest = Manifest::new(tk, "");
    let id = variant_id(&kernel_source, &manifest);
    manifest.variant_id = id.clone();
    let written: Vec<String> = tk.written_buffers().into_iter().collect();
    let host_stub = emit_host(&manifest, &written);
    Ok(EmittedVariant { kernel_source, host_stub, manifest, variant_id: id })
}

impl EmittedVariant {
    pub fn file_stem(&self) -> String {
        format!("{}.{}", self.manifest.kernel, self.variant_id)
    }

    pub fn write_files(&self, dir: &Path) -> Result<WrittenFiles, EmitError> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| EmitError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let stem = self.file_stem();
        let files = WrittenFiles {
            kernel: dir.join(format!("{stem}.cl")),
            host: dir.join(format!("{stem}.host.c")),
            manifest: dir.join(format!("{stem}.manifest.json")),
        };
        std::fs::write(&files.kernel, &self.kernel_source).map_err(io(&files.kernel))?;
        std::fs::write(&files.host, &self.host_stub).map_err(io(&files.host))?;
        std::fs::write(&files.manifest, self.manifest.to_json()).map_err(io(&files.manifest))?;
        Ok(files)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::analyze;
    use crate::corpus;
    use crate::frontend::compile_source;
    use crate::space::{Configuration, TuningSpace};
    use crate::execsim::DeviceProfile;
    use crate::transform::{apply_configuration, TransformOptions};

    fn variant(src: &str, set: &[(&str, i64)]) -> EmittedVariant {
        let ast = compile_source(src).unwrap();
        let report = analyze(&ast).unwrap();
        let space = TuningSpace::build(&ast, &report, &DeviceProfile::gpu_like());
        let mut cfg: Configuration = space.default_config();
        for (k, v) in set {
            cfg.set(*k, *v);
        }
        let tk = apply_configuration(&ast, &report, &cfg, &TransformOptions::new(64, 48)).unwrap();
        emit_variant(&tk).unwrap()
    }

    #[test]
    fn naive_blur_signature() {
        let v = variant(corpus::BLUR, &[]);
        assert!(
            v.kernel_source.contains("__kernel void blur(__global float * in, __global float * out, int W, int H)"),
            "{}",
            v.kernel_source
        );
        assert!(!v.kernel_source.contains("barrier("));
        assert_eq!(v.variant_id.len(), 16);
    }

    #[test]
    fn local_variant_has_one_barrier() {
        let v = variant(corpus::BLUR, &[("localMem.in", 1), ("wgX", 16), ("wgY", 8)]);
        assert_eq!(v.kernel_source.matches("barrier(").count(), 1, "{}", v.kernel_source);
        assert!(v.kernel_source.contains("__local float imcl_tile_in"));
    }

    #[test]
    fn constant_filter_and_host_calls() {
        let v = variant(corpus::CONV5X5, &[("constantMem.filter", 1)]);
        assert!(v.kernel_source.contains("__constant float * filter"), "{}", v.kernel_source);
        assert!(v.host_stub.matches("clCreateBuffer(").count() >= 2);
        assert!(v.host_stub.contains("clEnqueueNDRangeKernel(queue, kernel, 2,"));
    }

    #[test]
    fn image_variant_uses_image_objects() {
        let v = variant(corpus::BLUR, &[("imageMem.in", 1), ("imageMem.out", 1)]);
        assert!(v.kernel_source.contains("read_only image2d_t in"));
        assert!(v.kernel_source.contains("write_only image2d_t out"));
        assert!(v.kernel_source.contains("__constant sampler_t imcl_sampler_in"));
        assert_eq!(v.host_stub.matches("clCreateImage(").count(), 2);
        assert!(v.host_stub.contains("clEnqueueReadImage(queue, mem_out"));
    }

    #[test]
    fn set_arg_follows_manifest_order() {
        let v = variant(corpus::CONV5X5, &[]);
        let mut last = 0;
        for (i, b) in v.manifest.bindings.iter().enumerate() {
            let needle = format!("clSetKernelArg(kernel, {i}, ");
            let at = v.host_stub.find(&needle).unwrap_or_else(|| panic!("missing arg {i} ({})", b.name));
            assert!(at >= last);
            last = at;
        }
    }

    #[test]
    fn deterministic_and_distinct() {
        let a = variant(corpus::BLUR, &[("wgX", 32)]);
        let b = variant(corpus::BLUR, &[("wgX", 32)]);
        let c = variant(corpus::BLUR, &[("wgX", 64)]);
        assert_eq!(a, b);
        assert_ne!(a.variant_id, c.variant_id);
    }

    #[test]
    fn manifest_roundtrip() {
        let v = variant(corpus::SOBEL, &[("cX", 2)]);
        let back = Manifest::parse(&v.manifest.to_json()).unwrap();
        assert_eq!(back, v.manifest);
        assert_eq!(back.launch().groups(), [back.global_size[0] / back.local_size[0], back.global_size[1] / back.local_size[1]]);
    }

    #[test]
    fn writes_three_files() {
        let dir = tempfile::tempdir().unwrap();
        let v = variant(corpus::BLUR, &[]);
        let f = v.write_files(dir.path()).unwrap();
        assert!(f.kernel.ends_with(format!("blur.{}.cl", v.variant_id)));
        assert_eq!(std::fs::read_to_string(&f.kernel).unwrap(), v.kernel_source);
        assert!(f.host.exists() && f.manifest.exists());
    }
}
