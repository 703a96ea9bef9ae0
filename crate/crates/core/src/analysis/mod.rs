//! Static analysis feeding the optimizer: access classes, stencil extents,
//! loop inventory, grid inference and memory-space eligibility.

pub mod stencil;
pub mod values;

use crate::frontend::ast::*;
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

pub use stencil::{StencilExtent, StencilInfo};
pub use values::{propagate_value_sets, ValueSet, ValueSets, DEFAULT_MAX_SET_SIZE};

pub const DEFAULT_CONST_THRESHOLD_BYTES: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("{span}: error: kernel `{kernel}` has no `#pragma imcl grid(...)`")]
    MissingGrid { kernel: String, span: Span },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AccessClass {
    ReadOnly,
    WriteOnly,
    ReadWrite,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AccessInfo {
    pub class: AccessClass,
    pub reads: usize,
    pub writes: usize,
}

impl AccessInfo {
    pub fn unreferenced(&self) -> bool {
        self.reads == 0 && self.writes == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum GridSpec {
    /// Same size as the named image.
    Image { image: String },
    Literal { width: u32, height: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LoopInfo {
    pub id: LoopId,
    pub var: String,
    pub trip_count: Option<u64>,
    /// Values of the induction variable in iteration order, when known.
    #[serde(skip)]
    pub iterations: Option<Vec<i64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalysisOptions {
    pub max_set_size: usize,
    pub const_threshold_bytes: u64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { max_set_size: DEFAULT_MAX_SET_SIZE, const_threshold_bytes: DEFAULT_CONST_THRESHOLD_BYTES }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AnalysisReport {
    pub kernel: String,
    pub grid: GridSpec,
    pub access_classes: BTreeMap<String, AccessInfo>,
    pub stencils: BTreeMap<String, StencilInfo>,
    pub loops: Vec<LoopInfo>,
    /// Statically known size in bytes of each buffer parameter.
    pub size_bytes: BTreeMap<String, Option<u64>>,
    pub boundaries: BTreeMap<String, BoundaryMode>,
    pub const_eligible: BTreeMap<String, bool>,
    pub local_eligible: BTreeMap<String, bool>,
    pub image_eligible: BTreeMap<String, bool>,
}

impl AnalysisReport {
    pub fn extent(&self, image: &str) -> Option<&StencilExtent> {
        self.stencils.get(image).and_then(|s| s.extent())
    }

    pub fn loop_info(&self, id: LoopId) -> Option<&LoopInfo> {
        self.loops.iter().find(|l| l.id == id)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

/// Classify every buffer parameter by its syntactic reads and writes.
pub fn classify_accesses(ast: &KernelAst) -> BTreeMap<String, AccessInfo> {
    let mut counts: BTreeMap<String, (usize, usize)> =
        ast.params.iter().filter(|p| p.kind.is_buffer()).map(|p| (p.name.clone(), (0, 0))).collect();
    ast.body.walk(&mut |s| {
        s.for_each_expr(|e| {
            e.walk(&mut |e| match &e.kind {
                ExprKind::Index { array: n, .. } | ExprKind::Index2 { image: n, .. } => {
                    if let Some(c) = counts.get_mut(n) {
                        c.0 += 1;
                    }
                }
                _ => {}
            })
        });
        if let StmtKind::Assign { target: LValue::Index { array: n, .. } | LValue::Index2 { image: n, .. }, op, .. } =
            &s.kind
        {
            if let Some(c) = counts.get_mut(n) {
                c.1 += 1;
                if *op != AssignOp::Set {
                    c.0 += 1;
                }
            }
        }
    });
    counts
        .into_iter()
        .map(|(name, (reads, writes))| {
            let class = match (reads > 0, writes > 0) {
                (_, false) => AccessClass::ReadOnly,
                (false, true) => AccessClass::WriteOnly,
                (true, true) => AccessClass::ReadWrite,
            };
            (name, AccessInfo { class, reads, writes })
        })
        .collect()
}

pub fn infer_grid(ast: &KernelAst) -> Result<GridSpec, AnalysisError> {
    match ast.grid_target() {
        Some(GridTarget::Image(n)) => Ok(GridSpec::Image { image: n.clone() }),
        Some(GridTarget::Literal { width, height }) => Ok(GridSpec::Literal { width: *width, height: *height }),
        None => Err(AnalysisError::MissingGrid { kernel: ast.name.clone(), span: ast.span }),
    }
}

pub fn analyze(ast: &KernelAst) -> Result<AnalysisReport, AnalysisError> {
    analyze_with(ast, AnalysisOptions::default())
}

pub fn analyze_with(ast: &KernelAst, opts: AnalysisOptions) -> Result<AnalysisReport, AnalysisError> {
    let grid = infer_grid(ast)?;
    let access = classify_accesses(ast);
    let values = propagate_value_sets(ast, opts.max_set_size);
    let stencils = stencil::stencil_extents(ast, &values);

    let loops = ast
        .loops()
        .into_iter()
        .map(|l| {
            let iterations = values.loop_iterations(l.id).map(|v| v.to_vec());
            LoopInfo {
                id: l.id,
                var: l.var.clone(),
                trip_count: iterations.as_ref().map(|v| v.len() as u64),
                iterations,
            }
        })
        .collect();

    let mut size_bytes = BTreeMap::new();
    let mut boundaries = BTreeMap::new();
    let mut const_eligible = BTreeMap::new();
    let mut local_eligible = BTreeMap::new();
    let mut image_eligible = BTreeMap::new();
    for p in ast.params.iter().filter(|p| p.kind.is_buffer()) {
        let elem = p.kind.elem().size_bytes();
        let size = match (ast.max_size(&p.name), p.kind, &grid) {
            (Some(b), _, _) => Some(b),
            (None, ParamKind::Image(_), GridSpec::Literal { width, height }) => {
                Some(*width as u64 * *height as u64 * elem)
            }
            _ => None,
        };
        size_bytes.insert(p.name.clone(), size);
        let class = access[&p.name].class;
        let read_only = class == AccessClass::ReadOnly;
        const_eligible
            .insert(p.name.clone(), read_only && size.is_some_and(|s| s <= opts.const_threshold_bytes));
        if p.kind.is_image() {
            boundaries.insert(p.name.clone(), ast.boundary(&p.name));
            local_eligible.insert(p.name.clone(), read_only && stencils[&p.name].extent().is_some());
            image_eligible.insert(p.name.clone(), class != AccessClass::ReadWrite);
        }
    }

    Ok(AnalysisReport {
        kernel: ast.name.clone(),
        grid,
        access_classes: access,
        stencils,
        loops,
        size_bytes,
        boundaries,
        const_eligible,
        local_eligible,
        image_eligible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::frontend::compile_source;

    fn report(src: &str) -> AnalysisReport {
        analyze(&compile_source(src).unwrap()).unwrap()
    }

    #[test]
    fn blur_report() {
        let r = report(corpus::BLUR);
        assert_eq!(r.grid, GridSpec::Image { image: "in".into() });
        assert_eq!(r.access_classes["in"].class, AccessClass::ReadOnly);
        assert_eq!(r.access_classes["out"].class, AccessClass::WriteOnly);
        assert!(r.local_eligible["in"]);
        assert!(!r.local_eligible["out"]);
        assert!(r.image_eligible["in"] && r.image_eligible["out"]);
        assert!(!r.const_eligible["in"]);
        assert_eq!(r.loops.iter().map(|l| l.trip_count).collect::<Vec<_>>(), [Some(3), Some(3)]);
    }

    #[test]
    fn read_write_image_loses_eligibility() {
        let src = corpus::BLUR.replace("out[idx][idy] = sum / 9.0;", "out[idx][idy] = sum / 9.0;\n    in[idx][idy] = 0.0;");
        let r = report(&src);
        assert_eq!(r.access_classes["in"].class, AccessClass::ReadWrite);
        assert!(!r.local_eligible["in"]);
        assert!(!r.image_eligible["in"]);
    }

    #[test]
    fn compound_assignment_is_read_write() {
        let r = report("#pragma imcl grid(4, 4)\nvoid k(float *a) { a[idx] = a[idx] + 1.0; }");
        assert_eq!(r.access_classes["a"].class, AccessClass::ReadWrite);
        let r = report("#pragma imcl grid(4, 4)\nvoid k(float *a) { a[idx] += 1.0; }");
        assert_eq!(r.access_classes["a"].class, AccessClass::ReadWrite);
    }

    #[test]
    fn unreferenced_parameter_is_read_only() {
        let r = report("#pragma imcl grid(4, 4)\nvoid k(float *f, Image<float> o) { o[idx][idy] = 1.0; }");
        assert_eq!(r.access_classes["f"].class, AccessClass::ReadOnly);
        assert!(r.access_classes["f"].unreferenced());
    }

    #[test]
    fn filter_is_constant_eligible() {
        let r = report(corpus::CONV5X5);
        // 25 floats of 4 bytes each.
        assert_eq!(r.size_bytes["filter"], Some(25 * 4));
        assert!(r.const_eligible["filter"]);
        assert!(!r.local_eligible.contains_key("filter"));
        let r = analyze_with(
            &compile_source(corpus::CONV5X5).unwrap(),
            AnalysisOptions { const_threshold_bytes: 64, ..Default::default() },
        )
        .unwrap();
        assert!(!r.const_eligible["filter"]);
    }

    #[test]
    fn literal_grid_sizes_images() {
        let r = report("#pragma imcl grid(16, 8)\nvoid k(Image<uchar> a, Image<float> o) { o[idx][idy] = a[idx][idy]; }");
        assert_eq!(r.grid, GridSpec::Literal { width: 16, height: 8 });
        assert_eq!(r.size_bytes["a"], Some(128));
        assert!(r.const_eligible["a"]);
    }

    #[test]
    fn missing_grid() {
        let k = compile_source("void k(Image<float> o) { o[idx][idy] = 1.0; }").unwrap();
        assert!(matches!(analyze(&k), Err(AnalysisError::MissingGrid { .. })));
    }

    #[test]
    fn wider_sets_never_lose_eligibility() {
        for seed in 0..60 {
            let k = compile_source(&corpus::random_stencil_kernel(seed)).unwrap();
            let narrow = analyze_with(&k, AnalysisOptions { max_set_size: 4, ..Default::default() }).unwrap();
            let wide = analyze(&k).unwrap();
            for (img, ok) in &narrow.local_eligible {
                assert!(!ok || wide.local_eligible[img], "seed {seed} image {img}");
            }
        }
    }
}
