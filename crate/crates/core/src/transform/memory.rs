//! Memory-space placement: constant qualifiers, image objects and local tiles.

use super::{MemorySpace, TransformedKernel};
use crate::analysis::StencilExtent;
use crate::frontend::ast::*;

pub(super) fn tile_name(image: &str) -> String {
    format!("imcl_tile_{image}")
}

pub(super) fn boundary_constant(mode: BoundaryMode, elem: ScalarType) -> Expr {
    let c = match mode {
        BoundaryMode::Constant(c) => c,
        BoundaryMode::Clamped => 0.0,
    };
    match elem {
        ScalarType::Float => Expr::synth(ExprKind::Float(c as f32)),
        ScalarType::Int => Expr::int(c as i64),
        t => Expr::synth(ExprKind::Cast(t, Box::new(Expr::int(c as i64)))),
    }
}

/// `0 <= x && x < W && 0 <= y && y < H`
pub(super) fn in_bounds(x: &Expr, y: &Expr) -> Expr {
    let lt = |a: Expr, b: Expr| Expr::binary(BinOp::Lt, a, b);
    let ge0 = |a: Expr| Expr::binary(BinOp::Ge, a, Expr::int(0));
    let and = |a, b| Expr::binary(BinOp::And, a, b);
    and(
        and(ge0(x.clone()), lt(x.clone(), Expr::synth(ExprKind::GridDim(Axis::X)))),
        and(ge0(y.clone()), lt(y.clone(), Expr::synth(ExprKind::GridDim(Axis::Y)))),
    )
}

pub(super) fn place_constant(tk: &mut TransformedKernel, array: &str) {
    tk.set_space(array, MemorySpace::Constant);
}

/// Replace reads and writes of `image` by image-object intrinsics.
pub(super) fn place_image(tk: &mut TransformedKernel, image: &str, boundary: BoundaryMode) {
    let elem = tk.elem(image);
    let mut read = false;
    let mut written = false;
    tk.body.rewrite_exprs(&mut |e| {
        let ExprKind::Index2 { image: n, x, y } = &mut e.kind else { return };
        if n != image {
            return;
        }
        read = true;
        let (x, y) = (std::mem::replace(x, Box::new(Expr::int(0))), std::mem::replace(y, Box::new(Expr::int(0))));
        let fetch = Expr::synth(ExprKind::ReadImage { image: image.to_string(), x: x.clone(), y: y.clone() });
        *e = match boundary {
            BoundaryMode::Clamped => fetch,
            BoundaryMode::Constant(_) => Expr::synth(ExprKind::Select {
                cond: Box::new(in_bounds(&x, &y)),
                then: Box::new(fetch),
                otherwise: Box::new(boundary_constant(boundary, elem)),
            }),
        };
    });
    tk.body.walk_mut(&mut |s| {
        let StmtKind::Assign { target: LValue::Index2 { image: n, x, y }, op: AssignOp::Set, value } = &mut s.kind else {
            return;
        };
        if n != image {
            return;
        }
        written = true;
        let value = if value.ty == Some(elem) {
            value.clone()
        } else {
            Expr::synth(ExprKind::Cast(elem, Box::new(value.clone())))
        };
        s.kind = StmtKind::WriteImage { image: image.to_string(), x: x.clone(), y: y.clone(), value };
    });
    let space = if written && !read { MemorySpace::ImageWriteOnly } else { MemorySpace::ImageReadOnly };
    tk.set_space(image, space);
}

/// Replace the single `+idx`/`+idy` term of a subscript by the tile offset
/// placeholder. `None` if the subscript has no such term.
fn to_tile_subscript(e: &Expr, axis: Axis) -> Option<Expr> {
    match &e.kind {
        ExprKind::ThreadIdx(a) if *a == axis => Some(Expr::synth(ExprKind::TileOffset(axis))),
        ExprKind::Binary(op @ (BinOp::Add | BinOp::Sub), l, r) => {
            if let Some(l2) = to_tile_subscript(l, axis) {
                return (!r.mentions_thread_idx()).then(|| Expr::binary(*op, l2, (**r).clone()));
            }
            if *op == BinOp::Add && !l.mentions_thread_idx() {
                return to_tile_subscript(r, axis).map(|r2| Expr::binary(BinOp::Add, (**l).clone(), r2));
            }
            None
        }
        _ => None,
    }
}

/// `e - lo`, folded into a single addition or subtraction.
fn shift(e: Expr, lo: i64) -> Expr {
    match lo {
        0 => e,
        lo if lo < 0 => Expr::binary(BinOp::Add, e, Expr::int(-lo)),
        lo => Expr::binary(BinOp::Sub, e, Expr::int(lo)),
    }
}

pub(super) struct TileGeometry {
    pub width: u32,
    pub height: u32,
}

pub(super) fn tile_geometry(ext: &StencilExtent, wg: [i64; 2], c: [i64; 2]) -> TileGeometry {
    TileGeometry {
        width: (wg[0] * c[0] + ext.width()) as u32,
        height: (wg[1] * c[1] + ext.height()) as u32,
    }
}

/// Stage `image` in a work-group tile: rewrite stencil reads to tile reads
/// and return the declaration and cooperative load for the prologue.
pub(super) fn place_local(
    tk: &mut TransformedKernel,
    image: &str,
    ext: &StencilExtent,
    wg: [i64; 2],
    c: [i64; 2],
) -> Vec<Stmt> {
    let elem = tk.elem(image);
    let tile = tile_name(image);
    let geom = tile_geometry(ext, wg, c);
    tk.body.rewrite_exprs(&mut |e| {
        let ExprKind::Index2 { image: n, x, y } = &e.kind else { return };
        if n != image {
            return;
        }
        // Reads the analysis skipped as unreachable may not have stencil
        // form; they keep reading the global image.
        if let (Some(tx), Some(ty)) = (to_tile_subscript(x, Axis::X), to_tile_subscript(y, Axis::Y)) {
            *e = Expr::synth(ExprKind::LocalRead {
                tile: tile.clone(),
                x: Box::new(shift(tx, ext.lo_x)),
                y: Box::new(shift(ty, ext.lo_y)),
            });
        }
    });

    let group_origin = |axis: Axis, lo: i64| {
        let i = axis.index() as usize;
        shift(
            Expr::binary(
                BinOp::Mul,
                Expr::synth(ExprKind::WorkItem(WorkItemFn::GroupId, axis)),
                Expr::int(wg[i] * c[i]),
            ),
            -lo,
        )
    };
    let (lx, ly) = (format!("imcl_lx_{image}"), format!("imcl_ly_{image}"));
    let load = Stmt::synth(StmtKind::Assign {
        target: LValue::Local { tile: tile.clone(), x: Expr::var(&lx), y: Expr::var(&ly) },
        op: AssignOp::Set,
        value: Expr::synth(ExprKind::Index2 {
            image: image.to_string(),
            x: Box::new(Expr::binary(BinOp::Add, group_origin(Axis::X, ext.lo_x), Expr::var(&lx))),
            y: Box::new(Expr::binary(BinOp::Add, group_origin(Axis::Y, ext.lo_y), Expr::var(&ly))),
        }),
    });
    let strided = |var: &str, axis: Axis, extent: u32, body: Block| {
        Stmt::synth(StmtKind::For(ForLoop {
            id: LoopId(0),
            var: var.to_string(),
            var_ty: ScalarType::Int,
            init: Expr::synth(ExprKind::WorkItem(WorkItemFn::LocalId, axis)),
            cmp: BinOp::Lt,
            bound: Expr::int(extent as i64),
            step: wg[axis.index() as usize],
            body,
        }))
    };
    let inner = strided(&lx, Axis::X, geom.width, Block::new(vec![load]));
    let outer = strided(&ly, Axis::Y, geom.height, Block::new(vec![inner]));
    tk.set_space(image, MemorySpace::Global);
    tk.tiles.push(super::TileInfo {
        image: image.to_string(),
        tile,
        width: geom.width,
        height: geom.height,
        elem,
        lo: [ext.lo_x, ext.lo_y],
    });
    vec![
        Stmt::synth(StmtKind::LocalDecl {
            tile: tile_name(image),
            ty: elem,
            width: geom.width,
            height: geom.height,
        }),
        outer,
    ]
}
