//! Exhaustively price a reduced tuning space under both built-in profiles
//! and print each profile's optimum.
//!
//! Usage: exhaustive_search [kernel] [grid]

use imagecl::corpus;
use imagecl::execsim::DeviceProfile;
use imagecl::pipeline::{Prepared, SimulatedCost};
use std::time::Instant;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "blur".to_string());
    let n: u32 = std::env::args().nth(2).map_or(Ok(32), |s| s.parse())?;
    let src = corpus::source(&name).ok_or("unknown corpus kernel")?;
    let gpu = DeviceProfile::gpu_like();
    let cpu = DeviceProfile::cpu_like();
    let p = Prepared::new(src, &gpu)?;
    let mut space = p.space.restrict("wgX", &[4, 8, 16, 32])?.restrict("wgY", &[1, 2, 4, 8])?;
    space = space.restrict("cX", &[1, 2, 4])?.restrict("cY", &[1, 2, 4])?;
    let reduced = Prepared { space, ..p.clone() };
    let sim = SimulatedCost::new(&reduced, [n, n], 1);
    let start = Instant::now();
    let mut best = [(f64::INFINITY, None), (f64::INFINITY, None)];
    let mut count = 0;
    for cfg in reduced.space.iter_valid() {
        let c = sim.counts(&cfg)?;
        for (slot, prof) in best.iter_mut().zip([&gpu, &cpu]) {
            let v = c.price(prof);
            if v < slot.0 {
                *slot = (v, Some(cfg.clone()));
            }
        }
        count += 1;
    }
    println!("{name}: {count} configurations on {n}x{n} in {:.1} s", start.elapsed().as_secs_f64());
    for ((v, cfg), prof) in best.iter().zip([&gpu, &cpu]) {
        println!("{}: {v:.1} {}", prof.name, cfg.as_ref().map(|c| c.to_json()).unwrap_or_default());
    }
    Ok(())
}
