//! Thread coarsening, logical-to-work-item mapping and edge guards.

use crate::frontend::ast::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MappingMode {
    /// Each work-item handles a contiguous block of pixels.
    Blocked,
    /// Pixels handled by one work-item are a global-size apart.
    Interleaved,
    /// Pixels handled by one work-item are a work-group-size apart, within
    /// the work-group's own block.
    InterleavedInGroup,
}

pub const COUNTER_X: &str = "imcl_cx";
pub const COUNTER_Y: &str = "imcl_cy";
pub const LOGICAL_X: &str = "imcl_x";
pub const LOGICAL_Y: &str = "imcl_y";

fn wi(f: WorkItemFn, axis: Axis) -> Expr {
    Expr::synth(ExprKind::WorkItem(f, axis))
}

fn mul(a: Expr, k: i64) -> Expr {
    if k == 1 {
        a
    } else {
        Expr::binary(BinOp::Mul, a, Expr::int(k))
    }
}

/// Per-axis parameters of the mapping.
#[derive(Debug, Clone, Copy)]
pub(super) struct AxisMap {
    pub wg: i64,
    pub coarsen: i64,
}

fn axis_nest(mode: MappingMode, axis: Axis, m: AxisMap) -> CoarsenAxis {
    let (counter, logical) = match axis {
        Axis::X => (COUNTER_X, LOGICAL_X),
        Axis::Y => (COUNTER_Y, LOGICAL_Y),
    };
    let (base, stride) = match mode {
        MappingMode::Blocked => (mul(wi(WorkItemFn::GlobalId, axis), m.coarsen), Expr::int(1)),
        MappingMode::Interleaved => (wi(WorkItemFn::GlobalId, axis), wi(WorkItemFn::GlobalSize, axis)),
        MappingMode::InterleavedInGroup => (
            Expr::binary(BinOp::Add, mul(wi(WorkItemFn::GroupId, axis), m.wg * m.coarsen), wi(WorkItemFn::LocalId, axis)),
            Expr::int(m.wg),
        ),
    };
    CoarsenAxis { counter: counter.into(), logical: logical.into(), count: m.coarsen as u32, base, stride }
}

/// Position of the logical pixel inside its work-group's block.
fn tile_offset(mode: MappingMode, axis: Axis, m: AxisMap) -> Expr {
    let counter = || {
        Expr::var(match axis {
            Axis::X => COUNTER_X,
            Axis::Y => COUNTER_Y,
        })
    };
    let lid = wi(WorkItemFn::LocalId, axis);
    if m.coarsen == 1 {
        return lid;
    }
    match mode {
        MappingMode::InterleavedInGroup => Expr::binary(BinOp::Add, lid, mul(counter(), m.wg)),
        _ => Expr::binary(BinOp::Add, mul(lid, m.coarsen), counter()),
    }
}

/// Wrap `body` in the coarsening nest and replace the logical thread
/// indices and tile offsets by their work-item expressions.
pub(super) fn coarsen_and_map(mut body: Block, mode: MappingMode, x: AxisMap, y: AxisMap, guarded: bool) -> Stmt {
    body.rewrite_exprs(&mut |e| match e.kind {
        ExprKind::ThreadIdx(Axis::X) => *e = Expr::var(LOGICAL_X),
        ExprKind::ThreadIdx(Axis::Y) => *e = Expr::var(LOGICAL_Y),
        ExprKind::TileOffset(a) => *e = tile_offset(mode, a, if a == Axis::X { x } else { y }),
        _ => {}
    });
    Stmt::synth(StmtKind::Coarsen(Box::new(CoarsenNest {
        x: axis_nest(mode, Axis::X, x),
        y: axis_nest(mode, Axis::Y, y),
        guarded,
        body,
    })))
}
