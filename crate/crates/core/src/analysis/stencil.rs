//! Recognition of `img[idx + c1][idy + c2]` read sites and their extents.

use super::values::{eval, Env, ValueSet, ValueSets};
use crate::frontend::ast::*;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

/// Bounding box of the offsets at which a kernel reads an image, relative
/// to the logical thread's own pixel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StencilExtent {
    pub lo_x: i64,
    pub hi_x: i64,
    pub lo_y: i64,
    pub hi_y: i64,
    pub offsets_x: BTreeSet<i64>,
    pub offsets_y: BTreeSet<i64>,
}

impl StencilExtent {
    pub fn contains(&self, c1: i64, c2: i64) -> bool {
        (self.lo_x..=self.hi_x).contains(&c1) && (self.lo_y..=self.hi_y).contains(&c2)
    }

    pub fn width(&self) -> i64 {
        self.hi_x - self.lo_x
    }

    pub fn height(&self) -> i64 {
        self.hi_y - self.lo_y
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "camelCase")]
pub enum StencilInfo {
    Extent(StencilExtent),
    Ineligible { reason: String, span: Option<Span> },
}

impl StencilInfo {
    pub fn extent(&self) -> Option<&StencilExtent> {
        match self {
            StencilInfo::Extent(e) => Some(e),
            StencilInfo::Ineligible { .. } => None,
        }
    }
}

fn flatten<'e>(e: &'e Expr, sign: i64, out: &mut Vec<(i64, &'e Expr)>) {
    match &e.kind {
        ExprKind::Binary(BinOp::Add, l, r) => {
            flatten(l, sign, out);
            flatten(r, sign, out);
        }
        ExprKind::Binary(BinOp::Sub, l, r) => {
            flatten(l, sign, out);
            flatten(r, -sign, out);
        }
        _ => out.push((sign, e)),
    }
}

/// Offsets `c` such that `index == thread_idx(axis) + c`, or `None` when the
/// subscript does not have that form with a finite offset set.
pub fn offset_set(index: &Expr, axis: Axis, env: &Env, cap: usize) -> Option<BTreeSet<i64>> {
    let mut terms = Vec::new();
    flatten(index, 1, &mut terms);
    let mut base_seen = false;
    let mut acc = ValueSet::single(0);
    for (sign, t) in terms {
        if matches!(t.kind, ExprKind::ThreadIdx(a) if a == axis) {
            if sign != 1 || base_seen {
                return None;
            }
            base_seen = true;
            continue;
        }
        if t.mentions_thread_idx() {
            return None;
        }
        let v = eval(t, env, cap);
        let signed = if sign == 1 { v } else { v.negated(cap) };
        acc = acc.plus(&signed, cap);
        if acc.is_top() {
            return None;
        }
    }
    if !base_seen {
        return None;
    }
    acc.as_set().cloned()
}

#[derive(Default)]
struct SiteSummary {
    xs: BTreeSet<i64>,
    ys: BTreeSet<i64>,
    reachable_reads: usize,
    bad: Option<Span>,
}

/// Compute per-image stencil extents from the read sites of a kernel.
pub fn stencil_extents<'a>(ast: &'a KernelAst, values: &ValueSets<'a>) -> BTreeMap<String, StencilInfo> {
    let cap = values.max_set_size;
    let mut summaries: BTreeMap<String, SiteSummary> = BTreeMap::new();
    for p in ast.params.iter().filter(|p| p.kind.is_image()) {
        summaries.insert(p.name.clone(), SiteSummary::default());
    }
    ast.body.walk(&mut |s: &'a Stmt| {
        let env = values.env_before(s);
        let mut visit = |image: &str, x: &Expr, y: &Expr, span: Span| {
            let Some(sum) = summaries.get_mut(image) else { return };
            let Some(env) = env else { return };
            sum.reachable_reads += 1;
            match (offset_set(x, Axis::X, env, cap), offset_set(y, Axis::Y, env, cap)) {
                (Some(xs), Some(ys)) => {
                    sum.xs.extend(xs);
                    sum.ys.extend(ys);
                }
                _ => {
                    sum.bad.get_or_insert(span);
                }
            }
        };
        s.for_each_expr(|e| {
            e.walk(&mut |e| {
                if let ExprKind::Index2 { image, x, y } = &e.kind {
                    visit(image, x, y, e.span);
                }
            })
        });
        // Compound assignment reads its target too.
        if let StmtKind::Assign { target: LValue::Index2 { image, x, y }, op, .. } = &s.kind {
            if *op != AssignOp::Set {
                visit(image, x, y, s.span);
            }
        }
    });
    summaries
        .into_iter()
        .map(|(name, sum)| {
            let info = if let Some(span) = sum.bad {
                StencilInfo::Ineligible {
                    reason: format!("subscript at {span} is not of the form {name}[idx + c1][idy + c2]"),
                    span: Some(span),
                }
            } else if sum.reachable_reads == 0 || sum.xs.is_empty() || sum.ys.is_empty() {
                StencilInfo::Ineligible { reason: format!("{name} is never read"), span: None }
            } else {
                StencilInfo::Extent(StencilExtent {
                    lo_x: *sum.xs.first().unwrap(),
                    hi_x: *sum.xs.last().unwrap(),
                    lo_y: *sum.ys.first().unwrap(),
                    hi_y: *sum.ys.last().unwrap(),
                    offsets_x: sum.xs,
                    offsets_y: sum.ys,
                })
            };
            (name, info)
        })
        .collect()
}
