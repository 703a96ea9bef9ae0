use imagecl::analysis::analyze;
use imagecl::corpus;
use imagecl::execsim::{interpret, BufferSet, DeviceProfile};
use imagecl::frontend::compile_source;
use imagecl::space::TuningSpace;
use imagecl::transform::{apply_configuration, TransformOptions};

fn check_kernel(name: &str, n: usize, w: u32, h: u32) {
    let src = corpus::source(name).unwrap();
    let k = compile_source(src).unwrap();
    let r = analyze(&k).unwrap();
    let s = TuningSpace::build(&k, &r, &DeviceProfile::gpu_like());
    let opts = TransformOptions::new(w, h).with_local_mem(DeviceProfile::gpu_like().local_mem_bytes);
    let inputs = BufferSet::random(&k, w as usize, h as usize, 11);
    let base = apply_configuration(&k, &r, &s.default_config(), &opts).unwrap();
    let (expect, _) = interpret(&base, &inputs, false).unwrap();
    for cfg in s.sample(n, 5).unwrap() {
        let tk = apply_configuration(&k, &r, &cfg, &opts).unwrap();
        let (got, _) = interpret(&tk, &inputs, false).unwrap();
        for (b, e) in &expect.buffers {
            assert!(got.buffers[b].bit_identical(e), "{name} {cfg} buffer {b}");
        }
    }
}

#[test]
fn sampled_variants_match_the_naive_variant() {
    for (name, _) in corpus::SOURCES {
        check_kernel(name, 25, 37, 29);
    }
}
