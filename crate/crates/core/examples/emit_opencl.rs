//! Emit the OpenCL kernel, host stub and manifest for a tuned 5×5
//! convolution variant and write them to a directory.

use imagecl::analysis::analyze;
use imagecl::corpus;
use imagecl::emit::emit_variant;
use imagecl::execsim::DeviceProfile;
use imagecl::frontend::compile_source;
use imagecl::space::TuningSpace;
use imagecl::transform::{apply_configuration, TransformOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kernel = compile_source(corpus::CONV5X5)?;
    let report = analyze(&kernel)?;
    let space = TuningSpace::build(&kernel, &report, &DeviceProfile::gpu_like());
    let cfg = space
        .default_config()
        .with("wgX", 16)
        .with("wgY", 8)
        .with("cY", 2)
        .with("localMem.in", 1)
        .with("imageMem.out", 1)
        .with("constantMem.filter", 1)
        .with("unroll.L2", 5);
    let tk = apply_configuration(&kernel, &report, &cfg, &TransformOptions::new(640, 480))?;
    let v = emit_variant(&tk)?;
    println!("{}", v.kernel_source);
    println!("{}", v.host_stub);
    println!("{}", v.manifest.to_json());
    let dir = std::env::args().nth(1).unwrap_or_else(|| std::env::temp_dir().join("imagecl-emit").display().to_string());
    let files = v.write_files(std::path::Path::new(&dir))?;
    println!("wrote {}", files.kernel.display());
    Ok(())
}
