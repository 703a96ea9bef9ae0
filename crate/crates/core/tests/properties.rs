use imagecl::corpus;
use imagecl::execsim::io::{decode, encode};
use imagecl::execsim::{execute, interpret, Buffer, DeviceProfile, InterpretOptions};
use imagecl::frontend::ast::ScalarType;
use imagecl::pipeline::Prepared;
use imagecl::transform::global_size;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn blur() -> Prepared {
    Prepared::new(corpus::BLUR, &DeviceProfile::gpu_like()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn global_size_covers_extent(extent in 1u64..5000, wg in 1u64..512, c in 1u64..64) {
        let g = global_size(extent, wg, c);
        prop_assert_eq!(g % wg, 0);
        prop_assert!(g * c >= extent);
        prop_assert!((g - wg) * c < extent);
    }

    #[test]
    fn samples_are_valid_distinct_and_seeded(seed in any::<u64>()) {
        let p = blur();
        let a = p.space.sample(30, seed).unwrap();
        prop_assert_eq!(&a, &p.space.sample(30, seed).unwrap());
        let distinct: std::collections::HashSet<_> = a.iter().map(|c| c.to_json()).collect();
        prop_assert_eq!(distinct.len(), 30);
        for c in &a {
            prop_assert!(p.space.is_valid(c), "{}", c);
        }
    }

    #[test]
    fn image_files_roundtrip(w in 1usize..20, h in 1usize..20, t in 0usize..4, seed in any::<u64>()) {
        let ty = [ScalarType::Float, ScalarType::Int, ScalarType::Uint, ScalarType::Uchar][t];
        let b = Buffer::random(ty, w, h, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(decode(&encode(&b)).unwrap().bit_identical(&b));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_pixel_is_written_once(w in 1u32..40, h in 1u32..40, seed in any::<u64>()) {
        let p = blur();
        let cfg = p.space.sample(1, seed).unwrap().remove(0);
        let tk = p.variant(&cfg, [w, h]).unwrap();
        let e = execute(&tk, &p.random_inputs([w, h], 1), InterpretOptions { trace: true, classify_accesses: false }).unwrap();
        prop_assert!(e.trace.unwrap().covers_exactly_once(), "{} on {}x{}", cfg, w, h);
    }

    #[test]
    fn random_stencils_match_their_naive_variant(kernel in 0u64..1000, seed in any::<u64>(), w in 3u32..24, h in 3u32..24) {
        let p = Prepared::new(&corpus::random_stencil_kernel(kernel), &DeviceProfile::gpu_like()).unwrap();
        let inputs = p.random_inputs([w, h], seed);
        let base = interpret(&p.variant(&p.space.default_config(), [w, h]).unwrap(), &inputs, false).unwrap().0;
        for cfg in p.space.sample(4, seed).unwrap() {
            let got = interpret(&p.variant(&cfg, [w, h]).unwrap(), &inputs, false).unwrap().0;
            for (name, b) in &base.buffers {
                prop_assert!(got.buffers[name].bit_identical(b), "kernel {} {} buffer {}", kernel, cfg, name);
            }
        }
    }
}
