//! End-to-end acceptance checks, one line per criterion.
//!
//! Runs without the libtest harness so every criterion reports even when an
//! earlier one fails; the process exits nonzero if any criterion fails.

use imagecl::analysis::analyze;
use imagecl::autotuner::{exhaustive, tune, Budget, FnEvaluator};
use imagecl::corpus;
use imagecl::emit::{emit_variant, validate_opencl, Manifest};
use imagecl::execsim::{execute, interpret, Buffer, BufferSet, DeviceProfile, InterpretOptions, Value};
use imagecl::frontend::ast::ScalarType;
use imagecl::frontend::compile_source;
use imagecl::pipeline::{Prepared, SimulatedCost};
use imagecl::space::fixtures::{nonseparable_convolution, Device};
use imagecl::space::{Configuration, TuningSpace};
use imagecl::transform::{apply_configuration, TransformOptions};
use std::collections::HashMap;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

fn gpu() -> DeviceProfile {
    DeviceProfile::gpu_like()
}

fn prepared(src: &str) -> Prepared {
    Prepared::new(src, &gpu()).expect("corpus kernel prepares")
}

/// Default configuration followed by `n` seeded samples.
fn configs(p: &Prepared, n: usize, seed: u64) -> Vec<Configuration> {
    let mut v = vec![p.space.default_config()];
    v.extend(p.space.sample(n, seed).expect("space is not empty"));
    v
}

fn run(p: &Prepared, cfg: &Configuration, grid: [u32; 2], inputs: &BufferSet) -> Result<BufferSet, String> {
    let tk = p.variant(cfg, grid).map_err(|e| format!("{} {cfg}: {e}", p.ast.name))?;
    interpret(&tk, inputs, false).map(|r| r.0).map_err(|e| format!("{} {cfg}: {e}", p.ast.name))
}

fn same(a: &BufferSet, b: &BufferSet) -> bool {
    a.buffers.len() == b.buffers.len()
        && a.buffers.iter().all(|(k, v)| b.buffers.get(k).is_some_and(|w| w.bit_identical(v)))
}

/// A chain of kernels where each stage reads earlier outputs. Returns the
/// number of compared variants.
fn check_chain(stages: &[&str], n: usize, seed: u64) -> Result<usize, String> {
    const N: u32 = 64;
    let ps: Vec<Prepared> = stages.iter().map(|s| prepared(s)).collect();
    let cfgs: Vec<Vec<Configuration>> = ps.iter().enumerate().map(|(i, p)| configs(p, n, seed + i as u64)).collect();
    let mut base_inputs = BufferSet::new();
    for (i, p) in ps.iter().enumerate() {
        for (k, v) in p.random_inputs([N, N], 100 + i as u64).buffers {
            base_inputs.buffers.entry(k).or_insert(v);
        }
    }
    base_inputs.scalars.insert("k".into(), Value::F32(0.04));
    let chain = |pick: usize| -> Result<BufferSet, String> {
        let mut data = base_inputs.clone();
        for (p, c) in ps.iter().zip(&cfgs) {
            let out = run(p, &c[pick], [N, N], &data)?;
            data.buffers.extend(out.buffers);
        }
        Ok(data)
    };
    let expect = chain(0)?;
    for i in 1..=n {
        let got = chain(i)?;
        if !same(&got, &expect) {
            let which: Vec<String> = cfgs.iter().map(|c| c[i].to_string()).collect();
            return Err(format!("{stages:?} variant {i} differs: {}", which.join(" then ")));
        }
    }
    Ok(n)
}

fn c1_equivalence() -> Outcome {
    let mut total = 0;
    total += check_chain(&[corpus::BLUR], 200, 1)?;
    total += check_chain(&[corpus::CONV_ROW, corpus::CONV_COL], 200, 2)?;
    total += check_chain(&[corpus::CONV5X5], 200, 3)?;
    total += check_chain(&[corpus::SOBEL, corpus::HARRIS], 200, 4)?;
    Ok(format!("{total} sampled variants across 4 pipelines bit-identical to the defaults on 64x64"))
}

fn c2_stencil_soundness() -> Outcome {
    let mut sources: Vec<String> = corpus::SOURCES.iter().map(|(_, s)| s.to_string()).collect();
    sources.extend((0..100).map(corpus::random_stencil_kernel));
    let (mut checked, mut offsets, mut violations) = (0, 0, Vec::new());
    for (i, src) in sources.iter().enumerate() {
        let k = compile_source(src).map_err(|e| format!("kernel {i}: {e}"))?;
        let r = analyze(&k).map_err(|e| format!("kernel {i}: {e}"))?;
        let s = TuningSpace::build(&k, &r, &gpu());
        let tk = apply_configuration(&k, &r, &s.default_config(), &TransformOptions::new(23, 17).unlowered())
            .map_err(|e| format!("kernel {i}: {e}"))?;
        let inputs = BufferSet::random(&k, 23, 17, i as u64).with_scalar("k", Value::F32(0.04));
        let e = execute(&tk, &inputs, InterpretOptions { trace: true, classify_accesses: false })
            .map_err(|e| format!("kernel {i}: {e}"))?;
        let trace = e.trace.expect("trace requested");
        for (img, eligible) in &r.local_eligible {
            if !eligible {
                continue;
            }
            let ext = r.extent(img).expect("eligible images have extents");
            checked += 1;
            for (c1, c2) in trace.offsets.get(img).into_iter().flatten() {
                offsets += 1;
                if !ext.contains(*c1, *c2) {
                    violations.push(format!("{} {img} ({c1},{c2})", k.name));
                }
            }
        }
    }
    if violations.is_empty() {
        Ok(format!("{checked} eligible images over {} kernels, {offsets} traced offsets, 0 violations", sources.len()))
    } else {
        Err(format!("{} violations, first: {}", violations.len(), violations[0]))
    }
}

fn c3_coverage() -> Outcome {
    let p = prepared(corpus::BLUR);
    let modes = [("blocked", 0, 0), ("interleaved", 1, 0), ("interleaved-in-group", 1, 1)];
    let mut runs = 0;
    for (mode, inter, local) in modes {
        for c in [1, 2, 4] {
            for (wx, wy) in [(16, 16), (64, 4), (8, 32)] {
                for grid in [[64u32, 64], [60, 52]] {
                    let cfg = p
                        .space
                        .default_config()
                        .with("interleaved", inter)
                        .with("localMem.in", local)
                        .with("cX", c)
                        .with("cY", c)
                        .with("wgX", wx)
                        .with("wgY", wy);
                    let tk = p.variant(&cfg, grid).map_err(|e| format!("{mode} {cfg}: {e}"))?;
                    let inputs = p.random_inputs(grid, 3);
                    let e = execute(&tk, &inputs, InterpretOptions { trace: true, classify_accesses: false })
                        .map_err(|e| format!("{mode} {cfg}: {e}"))?;
                    if !e.trace.expect("trace requested").covers_exactly_once() {
                        return Err(format!("{mode} c={c} wg={wx}x{wy} grid={grid:?} does not cover the grid exactly once"));
                    }
                    runs += 1;
                }
            }
        }
    }
    Ok(format!("{runs} mapping x coarsening x work-group x grid combinations cover every pixel exactly once"))
}

fn c4_tuner_quality() -> Outcome {
    let base = prepared(corpus::BLUR);
    let space = base
        .space
        .restrict("wgX", &[4, 8, 16, 32])
        .and_then(|s| s.restrict("wgY", &[1, 2, 4, 8]))
        .and_then(|s| s.restrict("cX", &[1, 2, 4]))
        .and_then(|s| s.restrict("cY", &[1, 2, 4]))
        .map_err(|e| e.to_string())?;
    let p = Prepared { space, ..base };
    let sim = SimulatedCost::new(&p, [64, 64], 1);
    let all = exhaustive(&p.space, &sim, 1).map_err(|e| e.to_string())?;
    let table: HashMap<Configuration, f64> =
        all.history.iter().filter_map(|m| m.value.map(|v| (m.cfg.clone(), v))).collect();
    let optimum = all.best.value.expect("ok");
    let lookup = FnEvaluator::new(|c: &Configuration| table.get(c).copied().ok_or_else(|| "not in table".to_string()));
    let mut good = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..50 {
        let r = tune(&p.space, &lookup, Budget { phase1: 200, top_k: 50, seed }).map_err(|e| e.to_string())?;
        let ratio = r.best.value.expect("ok") / optimum;
        worst = worst.max(ratio);
        if ratio <= 1.05 {
            good += 1;
        }
    }
    let detail = format!(
        "{good}/50 seeds within 5% of the exhaustive optimum over {} configurations (worst ratio {worst:.4})",
        table.len()
    );
    if table.len() <= 20_000 && good >= 45 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c5_device_optima() -> Outcome {
    let restrict = |s: &TuningSpace| -> TuningSpace {
        s.restrict("wgX", &[8, 16, 32])
            .and_then(|s| s.restrict("wgY", &[4, 8]))
            .and_then(|s| s.restrict("cX", &[1, 2]))
            .and_then(|s| s.restrict("cY", &[1, 2]))
            .expect("domains exist")
    };
    let g = Prepared::new(corpus::CONV5X5, &DeviceProfile::gpu_like()).map_err(|e| e.to_string())?;
    let c = Prepared::new(corpus::CONV5X5, &DeviceProfile::cpu_like()).map_err(|e| e.to_string())?;
    let (gs, cs) = (restrict(&g.space), restrict(&c.space));
    let g = Prepared { space: gs, ..g };
    let sim = SimulatedCost::new(&g, [32, 32], 5);
    let mut best: [(f64, Option<Configuration>); 2] = [(f64::INFINITY, None), (f64::INFINITY, None)];
    let mut n = 0;
    for cfg in g.space.iter_valid() {
        let counts = sim.counts(&cfg).map_err(|e| e.to_string())?;
        n += 1;
        let v = counts.price(&g.profile);
        if v < best[0].0 {
            best[0] = (v, Some(cfg.clone()));
        }
        if cs.is_valid(&cfg) {
            let v = counts.price(&c.profile);
            if v < best[1].0 {
                best[1] = (v, Some(cfg.clone()));
            }
        }
    }
    let (a, b) = (best[0].1.clone().ok_or("no gpu optimum")?, best[1].1.clone().ok_or("no cpu optimum")?);
    let diff: Vec<String> = a
        .0
        .iter()
        .filter(|(k, v)| b.get(k) != Some(**v))
        .map(|(k, v)| format!("{k} {v} vs {}", b.get(k).unwrap_or(-1)))
        .collect();
    if diff.is_empty() {
        Err(format!("both profiles choose {a} over {n} configurations"))
    } else {
        Ok(format!("optima differ over {n} configurations (gpu-like vs cpu-like): {}", diff.join(", ")))
    }
}

fn c6_fixtures() -> Outcome {
    let p = prepared(corpus::CONV5X5);
    let mut lines = Vec::new();
    for d in Device::ALL {
        let col = nonseparable_convolution(d);
        let cfg = Configuration::from_json(&col.config(&p.space).to_json()).map_err(|e| e.to_string())?;
        let v = p.space.validate(&cfg);
        if !v.is_empty() {
            return Err(format!("{} violates {v:?}", d.name()));
        }
        let emitted = p.emit(&cfg, [2048, 2048]).map_err(|e| format!("{}: {e}", d.name()))?;
        let m = Manifest::parse(&emitted.manifest.to_json()).map_err(|e| e.to_string())?;
        let want_local = [col.wg_x as u64, col.wg_y as u64];
        let want_ppt = [col.c_x as u64, col.c_y as u64];
        if m.local_size != want_local || m.pixels_per_thread != want_ppt {
            return Err(format!(
                "{}: manifest localSize {:?} pixelsPerThread {:?}, expected {want_local:?} {want_ppt:?}",
                d.name(),
                m.local_size,
                m.pixels_per_thread
            ));
        }
        lines.push(format!("{} {:?}/{:?}", d.name(), m.local_size, m.pixels_per_thread));
    }
    Ok(format!("published conv5x5 configurations validate and emit: {}", lines.join("; ")))
}

fn reference_conv5x5(input: &Buffer, filter: &[f32], constant: Option<f32>) -> Vec<u8> {
    let (w, h) = (input.width as i64, input.height as i64);
    let px = |x: i64, y: i64| -> f32 {
        let inside = (0..w).contains(&x) && (0..h).contains(&y);
        match constant {
            Some(c) if !inside => c,
            _ => input.get(x.clamp(0, w - 1) as usize, y.clamp(0, h - 1) as usize).as_f32(),
        }
    };
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let mut sum = 0.0f32;
            for i in -2..3i64 {
                for j in -2..3i64 {
                    sum += px(x + i, y + j) * filter[((i + 2) + (j + 2) * 5) as usize];
                }
            }
            out.push(sum.max(0.0).min(255.0) as u8);
        }
    }
    out
}

fn c7_boundaries() -> Outcome {
    let (w, h) = (9u32, 7u32);
    let mut border = 0;
    let mut variants = 0;
    for (mode, src, constant) in [
        ("clamped", corpus::CONV5X5.to_string(), None),
        ("constant(0)", corpus::CONV5X5.replace("boundary(in, clamped)", "boundary(in, constant(0))"), Some(0.0f32)),
    ] {
        let p = prepared(&src);
        let mut inputs = p.random_inputs([w, h], 9);
        // Keep sums inside the uchar range so clamping does not hide errors.
        let filter: Vec<f32> = (0..25).map(|i| ((i * 7) % 11) as f32 / 60.0).collect();
        inputs.buffers.insert("filter".into(), Buffer::from_fn(ScalarType::Float, 25, 1, |x, _| filter[x] as f64));
        let want = reference_conv5x5(&inputs.buffers["in"], &filter, constant);
        let mut cfgs = vec![
            p.space.default_config(),
            p.space.default_config().with("localMem.in", 1).with("wgX", 4).with("wgY", 4),
            p.space.default_config().with("imageMem.in", 1).with("imageMem.out", 1),
            p.space.default_config().with("localMem.in", 1).with("interleaved", 1).with("cX", 2).with("cY", 2).with("wgX", 2).with("wgY", 2),
        ];
        cfgs.extend(p.space.sample(20, 77).map_err(|e| e.to_string())?);
        for cfg in &cfgs {
            let out = run(&p, cfg, [w, h], &inputs)?;
            let got = &out.buffers["out"];
            for y in 0..h as usize {
                for x in 0..w as usize {
                    let g = got.get(x, y).as_i64() as u8;
                    let e = want[y * w as usize + x];
                    if g != e {
                        return Err(format!("{mode} {cfg}: pixel ({x},{y}) is {g}, reference {e}"));
                    }
                    if x < 2 || y < 2 || x + 2 >= w as usize || y + 2 >= h as usize {
                        border += 1;
                    }
                }
            }
            variants += 1;
        }
    }
    Ok(format!("{variants} variants match the brute-force reference on 9x7 ({border} border-pixel checks)"))
}

fn c8_emission() -> Outcome {
    let mut n = 0;
    for (name, src) in corpus::SOURCES {
        let emit_all = || -> Result<Vec<String>, String> {
            let p = prepared(src);
            configs(&p, 20, 8)
                .iter()
                .map(|c| {
                    let tk = p.variant(c, [256, 256]).map_err(|e| e.to_string())?;
                    emit_variant(&tk).map(|v| v.kernel_source).map_err(|e| format!("{name} {c}: {e}"))
                })
                .collect()
        };
        let (a, b) = (emit_all()?, emit_all()?);
        if a != b {
            return Err(format!("{name}: emitted text differs between runs"));
        }
        for text in &a {
            validate_opencl(text).map_err(|e| format!("{name}: {e}\n{text}"))?;
        }
        n += a.len();
    }
    Ok(format!("{n} emitted kernels byte-stable across two runs and syntactically valid"))
}

fn main() {
    let criteria: [(&str, &str, fn() -> Outcome, Duration); 8] = [
        ("C1", "variant equivalence", c1_equivalence, Duration::from_secs(600)),
        ("C2", "stencil-analysis soundness", c2_stencil_soundness, Duration::from_secs(300)),
        ("C3", "coverage and exclusivity", c3_coverage, Duration::from_secs(120)),
        ("C4", "tuner quality", c4_tuner_quality, Duration::from_secs(1800)),
        ("C5", "device-dependent optima", c5_device_optima, Duration::from_secs(900)),
        ("C6", "fixture fidelity", c6_fixtures, Duration::from_secs(60)),
        ("C7", "boundary semantics", c7_boundaries, Duration::from_secs(60)),
        ("C8", "emission determinism and syntax", c8_emission, Duration::from_secs(60)),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, title, f, limit) in criteria {
        if !filter.is_empty() && !filter.iter().any(|x| x == id) {
            continue;
        }
        let start = Instant::now();
        let outcome = f();
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(d) if took > limit => Err(format!("{d}; took {:.1} s, limit {} s", took.as_secs_f64(), limit.as_secs())),
            o => o,
        };
        match outcome {
            Ok(d) => println!("PASS {id} {title}: {d} [{:.1} s]", took.as_secs_f64()),
            Err(d) => {
                failed += 1;
                println!("FAIL {id} {title}: {d} [{:.1} s]", took.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
