//! Parse a corpus kernel, print its stencil extents, memory eligibility and
//! tuning space.
//!
//! Usage: analyze_kernel [kernel]

use imagecl::analysis::analyze;
use imagecl::corpus;
use imagecl::execsim::DeviceProfile;
use imagecl::frontend::compile_source;
use imagecl::space::TuningSpace;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "conv5x5".to_string());
    let src = corpus::source(&name).ok_or("unknown corpus kernel")?;
    let ast = compile_source(src)?;
    let report = analyze(&ast)?;
    println!("kernel {} on grid {:?}", report.kernel, report.grid);
    for (img, info) in &report.access_classes {
        let extent = report.extent(img).map_or("-".to_string(), |e| format!("{e:?}"));
        println!(
            "  {img}: {:?}, extent {extent}, local {:?}, image {:?}, constant {:?}",
            info.class,
            report.local_eligible.get(img),
            report.image_eligible.get(img),
            report.const_eligible.get(img),
        );
    }
    for l in &report.loops {
        println!("  loop {:?} over {} runs {:?} times", l.id, l.var, l.trip_count);
    }
    let space = TuningSpace::build(&ast, &report, &DeviceProfile::gpu_like());
    for p in &space.params {
        println!("  {} in {:?}", p.id, p.domain);
    }
    println!("{:?} valid configurations", space.count());
    Ok(())
}
