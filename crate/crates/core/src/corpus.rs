//! Bundled benchmark kernels and a generator of random stencil kernels.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write;

/// 3×3 box blur.
pub const BLUR: &str = "\
#pragma imcl grid(in)
void blur(Image<float> in, Image<float> out) {
    float sum = 0.0;
    for (int i = -1; i < 2; i++) {
        for (int j = -1; j < 2; j++) {
            sum += in[idx + i][idy + j];
        }
    }
    out[idx][idy] = sum / 9.0;
}
";

/// Row pass of a 5×5 separable convolution.
pub const CONV_ROW: &str = "\
#pragma imcl grid(in)
#pragma imcl maxsize(filter, 20)
void conv_row(Image<float> in, Image<float> out, float *filter) {
    float sum = 0.0;
    for (int i = -2; i < 3; i++) {
        sum += in[idx + i][idy] * filter[i + 2];
    }
    out[idx][idy] = sum;
}
";

/// Column pass of a 5×5 separable convolution.
pub const CONV_COL: &str = "\
#pragma imcl grid(in)
#pragma imcl maxsize(filter, 20)
void conv_col(Image<float> in, Image<float> out, float *filter) {
    float sum = 0.0;
    for (int i = -2; i < 3; i++) {
        sum += in[idx][idy + i] * filter[i + 2];
    }
    out[idx][idy] = sum;
}
";

/// 5×5 non-separable convolution on 8-bit pixels with clamped edges.
pub const CONV5X5: &str = "\
#pragma imcl grid(in)
#pragma imcl boundary(in, clamped)
#pragma imcl maxsize(filter, 100)
void conv5x5(Image<uchar> in, Image<uchar> out, float *filter) {
    float sum = 0.0;
    for (int i = -2; i < 3; i++) {
        for (int j = -2; j < 3; j++) {
            sum += in[idx + i][idy + j] * filter[(i + 2) + (j + 2) * 5];
        }
    }
    out[idx][idy] = (uchar) fmin(fmax(sum, 0.0), 255.0);
}
";

/// Image gradients, first stage of Harris corner detection.
pub const SOBEL: &str = "\
#pragma imcl grid(in)
#pragma imcl boundary(in, clamped)
void sobel(Image<float> in, Image<float> dx, Image<float> dy) {
    float gx = in[idx + 1][idy - 1] + 2.0 * in[idx + 1][idy] + in[idx + 1][idy + 1]
        - in[idx - 1][idy - 1] - 2.0 * in[idx - 1][idy] - in[idx - 1][idy + 1];
    float gy = in[idx - 1][idy + 1] + 2.0 * in[idx][idy + 1] + in[idx + 1][idy + 1]
        - in[idx - 1][idy - 1] - 2.0 * in[idx][idy - 1] - in[idx + 1][idy - 1];
    dx[idx][idy] = gx;
    dy[idx][idy] = gy;
}
";

/// Corner response over a 2×2 window of gradients.
pub const HARRIS: &str = "\
#pragma imcl grid(dx)
#pragma imcl boundary(dx, clamped)
#pragma imcl boundary(dy, clamped)
void harris(Image<float> dx, Image<float> dy, Image<float> response, float k) {
    float sxx = 0.0;
    float syy = 0.0;
    float sxy = 0.0;
    for (int i = 0; i < 2; i++) {
        for (int j = 0; j < 2; j++) {
            float gx = dx[idx + i][idy + j];
            float gy = dy[idx + i][idy + j];
            sxx += gx * gx;
            syy += gy * gy;
            sxy += gx * gy;
        }
    }
    float det = sxx * syy - sxy * sxy;
    float trace = sxx + syy;
    response[idx][idy] = det - k * trace * trace;
}
";

pub const SOURCES: &[(&str, &str)] = &[
    ("blur", BLUR),
    ("conv_row", CONV_ROW),
    ("conv_col", CONV_COL),
    ("conv5x5", CONV5X5),
    ("sobel", SOBEL),
    ("harris", HARRIS),
];

pub fn source(name: &str) -> Option<&'static str> {
    SOURCES.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

/// A random kernel reading two images through stencils of varying shape.
///
/// Offsets come from constants, loop variables and variables assigned in
/// branches, so value sets with several members occur. Some kernels also
/// read through non-stencil subscripts, which the analysis must reject.
pub fn random_stencil_kernel(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = String::new();
    let boundary = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.5) {
            "clamped".to_string()
        } else {
            format!("constant({})", rng.gen_range(-2..3))
        }
    };
    writeln!(s, "#pragma imcl grid(a)").unwrap();
    writeln!(s, "#pragma imcl boundary(a, {})", boundary(&mut rng)).unwrap();
    writeln!(s, "#pragma imcl boundary(b, {})", boundary(&mut rng)).unwrap();
    writeln!(s, "void gen{seed}(Image<float> a, Image<float> b, Image<float> out) {{").unwrap();
    writeln!(s, "    float acc = 0.0;").unwrap();

    // A variable whose value set is the union of two branch assignments.
    let o1 = rng.gen_range(-3..4);
    let o2 = rng.gen_range(-3..4);
    writeln!(s, "    int o = {o1};").unwrap();
    writeln!(s, "    if (a[idx][idy] > 0.5) {{").unwrap();
    writeln!(s, "        o = {o2};").unwrap();
    writeln!(s, "    }}").unwrap();

    let mut vars: Vec<String> = vec!["o".into()];
    let nest = rng.gen_range(0..3);
    let mut depth = 1;
    for n in 0..nest {
        let v = ["i", "j"][n];
        let lo = rng.gen_range(-3..1);
        let trip = rng.gen_range(1..5);
        let step = *[1, 1, 2].choose(&mut rng).unwrap();
        if rng.gen_bool(0.3) {
            // Counting down.
            let hi = lo + (trip - 1) * step;
            writeln!(s, "{}for (int {v} = {hi}; {v} >= {lo}; {v} -= {step}) {{", "    ".repeat(depth)).unwrap();
        } else {
            let hi = lo + trip * step;
            let inc = if step == 1 { format!("{v}++") } else { format!("{v} += {step}") };
            writeln!(s, "{}for (int {v} = {lo}; {v} < {hi}; {inc}) {{", "    ".repeat(depth)).unwrap();
        }
        vars.push(v.into());
        depth += 1;
    }

    let reads = rng.gen_range(1..4);
    for _ in 0..reads {
        let img = if rng.gen_bool(0.6) { "a" } else { "b" };
        let x = index_expr(&mut rng, "idx", &vars);
        let y = index_expr(&mut rng, "idy", &vars);
        let ind = "    ".repeat(depth);
        if rng.gen_bool(0.25) {
            let t = rng.gen_range(0..4);
            writeln!(s, "{ind}if (b[idx][idy] < 0.{t}) {{").unwrap();
            writeln!(s, "{ind}    acc += {img}[{x}][{y}];").unwrap();
            writeln!(s, "{ind}}}").unwrap();
        } else {
            writeln!(s, "{ind}acc += {img}[{x}][{y}];").unwrap();
        }
    }
    for d in (1..depth).rev() {
        writeln!(s, "{}}}", "    ".repeat(d)).unwrap();
    }
    if rng.gen_bool(0.2) {
        let img = if rng.gen_bool(0.5) { "a" } else { "b" };
        writeln!(s, "    acc += {img}[idx * 2][idy];").unwrap();
    }
    if rng.gen_bool(0.1) {
        writeln!(s, "    acc += b[idx + idy][idy];").unwrap();
    }
    writeln!(s, "    out[idx][idy] = acc;").unwrap();
    writeln!(s, "}}").unwrap();
    s
}

fn index_expr(rng: &mut ChaCha8Rng, base: &str, vars: &[String]) -> String {
    let v = vars.choose(rng).unwrap();
    let c = rng.gen_range(-3..4);
    match rng.gen_range(0..8) {
        0 => base.to_string(),
        1 => format!("{base} + {c}"),
        2 => format!("{base} - {v}"),
        3 => format!("{v} + {base}"),
        4 => format!("{base} + {v} + {c}"),
        5 => format!("{base} + 2 * {v}"),
        6 => format!("{base} + ({v} - {c})"),
        _ => format!("{c} + {base} - {v}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::compile_source;

    #[test]
    fn bundled_kernels_compile() {
        for (name, src) in SOURCES {
            let k = compile_source(src).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(&k.name, name);
        }
    }

    #[test]
    fn generated_kernels_compile() {
        for seed in 0..200 {
            let src = random_stencil_kernel(seed);
            compile_source(&src).unwrap_or_else(|e| panic!("{e}\n{src}"));
        }
    }
}
