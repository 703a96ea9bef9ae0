use imagecl::corpus;
use imagecl::execsim::DeviceProfile;
use imagecl::pipeline::{Prepared, SimulatedCost};
use imagecl::space::Configuration;

fn base(p: &Prepared) -> Configuration {
    p.space.default_config().with("wgX", 16).with("wgY", 4)
}

#[test]
fn interleaving_restores_coalescing_under_coarsening() {
    let p = Prepared::new(corpus::BLUR, &DeviceProfile::gpu_like()).unwrap();
    // Wide enough that most warps never touch a border pixel.
    let sim = SimulatedCost::new(&p, [256, 16], 2);
    let blocked = sim.counts(&base(&p).with("cX", 4)).unwrap().counts;
    let interleaved = sim.counts(&base(&p).with("cX", 4).with("interleaved", 1)).unwrap().counts;
    assert!(
        interleaved.coalesced_fraction() > blocked.coalesced_fraction(),
        "interleaved {} blocked {}",
        interleaved.coalesced_fraction(),
        blocked.coalesced_fraction()
    );
    assert!(sim.cost(&base(&p).with("cX", 4).with("interleaved", 1)).unwrap() < sim.cost(&base(&p).with("cX", 4)).unwrap());
}

#[test]
fn full_unrolling_removes_loop_overhead() {
    let p = Prepared::new(corpus::BLUR, &DeviceProfile::gpu_like()).unwrap();
    let sim = SimulatedCost::new(&p, [32, 32], 2);
    let rolled = sim.counts(&base(&p)).unwrap().counts;
    let inner = sim.counts(&base(&p).with("unroll.L2", 3)).unwrap().counts;
    let both = sim.counts(&base(&p).with("unroll.L1", 3).with("unroll.L2", 3)).unwrap().counts;
    // 3 outer + 9 inner iterations per pixel, then 3, then none.
    let ratio = rolled.loop_overhead as f64 / inner.loop_overhead as f64;
    assert!((ratio - 4.0).abs() < 1e-9, "{ratio}");
    assert_eq!(both.loop_overhead, 0);
    assert_eq!(both.global_coalesced + both.global_uncoalesced, rolled.global_coalesced + rolled.global_uncoalesced);
}

#[test]
fn local_staging_trades_global_reads_for_local_ones() {
    let p = Prepared::new(corpus::BLUR, &DeviceProfile::gpu_like()).unwrap();
    let sim = SimulatedCost::new(&p, [32, 32], 2);
    let plain = sim.counts(&base(&p)).unwrap();
    let staged = sim.counts(&base(&p).with("localMem.in", 1)).unwrap();
    assert_eq!(plain.counts.local_access, 0);
    // 9 reads per pixel move to the tile.
    assert!(staged.counts.local_access >= 9 * 32 * 32);
    assert!(staged.counts.barrier > 0);
    assert!(staged.local_bytes > 0 && plain.local_bytes == 0);
    let reads = |c: &imagecl::execsim::EventCounts| c.global_coalesced + c.global_uncoalesced;
    assert!(reads(&staged.counts) < reads(&plain.counts));
}

#[test]
fn profiles_price_the_same_counts_differently() {
    let p = Prepared::new(corpus::CONV5X5, &DeviceProfile::gpu_like()).unwrap();
    let sim = SimulatedCost::new(&p, [32, 32], 2);
    let image = sim.counts(&base(&p).with("imageMem.in", 1).with("imageMem.out", 1)).unwrap();
    let global = sim.counts(&base(&p)).unwrap();
    let (gpu, cpu) = (DeviceProfile::gpu_like(), DeviceProfile::cpu_like());
    assert!(image.price(&gpu) < global.price(&gpu));
    assert!(image.price(&cpu) > global.price(&cpu));
}
