//! Interpret the naive and a tiled variant of blur on a random image, check
//! they agree bit for bit, and print their cost under both profiles.

use imagecl::corpus;
use imagecl::execsim::{estimate_cost, interpret, DeviceProfile};
use imagecl::pipeline::Prepared;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gpu = DeviceProfile::gpu_like();
    let p = Prepared::new(corpus::BLUR, &gpu)?;
    let grid = [48, 40];
    let inputs = p.random_inputs(grid, 3);
    let naive = p.space.default_config();
    let tiled = naive.clone().with("wgX", 16).with("wgY", 8).with("cX", 2).with("interleaved", 1).with("localMem.in", 1);
    let mut outputs = Vec::new();
    for cfg in [&naive, &tiled] {
        let tk = p.variant(cfg, grid)?;
        let (out, _) = interpret(&tk, &inputs, false)?;
        for prof in [&gpu, &DeviceProfile::cpu_like()] {
            let r = estimate_cost(&tk, &inputs, prof)?;
            println!("{cfg}\n  {}: cost {:.0}, coalesced {:.2}", prof.name, r.total_cost, r.coalesced_fraction);
        }
        outputs.push(out);
    }
    let same = outputs[0].buffers["out"].bit_identical(&outputs[1].buffers["out"]);
    println!("outputs bit-identical: {same}");
    Ok(())
}
