//! Flattening of global images to 1D buffers with boundary handling.

use super::memory::{boundary_constant, in_bounds};
use crate::frontend::ast::*;
use std::collections::BTreeMap;

fn grid(axis: Axis) -> Expr {
    Expr::synth(ExprKind::GridDim(axis))
}

/// Row-major address `x + y * W`.
pub fn linearize(x: Expr, y: Expr) -> Expr {
    Expr::binary(BinOp::Add, x, Expr::binary(BinOp::Mul, y, grid(Axis::X)))
}

fn clamp_to(e: Expr, axis: Axis) -> Expr {
    let hi = Expr::binary(BinOp::Sub, grid(axis), Expr::int(1));
    Expr::synth(ExprKind::Call(Builtin::Clamp, vec![e, Expr::int(0), hi]))
}

/// Lower every remaining 2D access of the images in `images` (name →
/// boundary mode and element type).
pub(super) fn lower_images(body: &mut Block, images: &BTreeMap<String, (BoundaryMode, ScalarType)>) {
    body.rewrite_exprs(&mut |e| {
        let ExprKind::Index2 { image, x, y } = &e.kind else { return };
        let Some((mode, elem)) = images.get(image) else { return };
        let (x, y) = ((**x).clone(), (**y).clone());
        *e = match mode {
            BoundaryMode::Clamped => Expr::synth(ExprKind::Index {
                array: image.clone(),
                index: Box::new(linearize(clamp_to(x, Axis::X), clamp_to(y, Axis::Y))),
            }),
            BoundaryMode::Constant(_) => Expr::synth(ExprKind::Select {
                cond: Box::new(in_bounds(&x, &y)),
                then: Box::new(Expr::synth(ExprKind::Index {
                    array: image.clone(),
                    index: Box::new(linearize(x.clone(), y.clone())),
                })),
                otherwise: Box::new(boundary_constant(*mode, *elem)),
            }),
        };
    });
    body.walk_mut(&mut |s| {
        let StmtKind::Assign { target, .. } = &mut s.kind else { return };
        let LValue::Index2 { image, x, y } = target else { return };
        if images.contains_key(image.as_str()) {
            *target = LValue::Index { array: image.clone(), index: linearize(x.clone(), y.clone()) };
        }
    });
}
