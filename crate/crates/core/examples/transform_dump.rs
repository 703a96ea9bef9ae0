//! Print the transformed body of the box blur under a local-memory,
//! interleaved, coarsened configuration.

use imagecl::analysis::analyze;
use imagecl::corpus;
use imagecl::execsim::DeviceProfile;
use imagecl::frontend::compile_source;
use imagecl::space::TuningSpace;
use imagecl::transform::{apply_configuration, dump, TransformOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kernel = compile_source(corpus::BLUR)?;
    let report = analyze(&kernel)?;
    let space = TuningSpace::build(&kernel, &report, &DeviceProfile::gpu_like());
    let cfg = space
        .default_config()
        .with("wgX", 32)
        .with("wgY", 4)
        .with("cX", 2)
        .with("cY", 2)
        .with("interleaved", 1)
        .with("localMem.in", 1)
        .with("unroll.L2", 3);
    let tk = apply_configuration(&kernel, &report, &cfg, &TransformOptions::new(500, 300))?;
    print!("{}", dump(&tk));
    Ok(())
}
