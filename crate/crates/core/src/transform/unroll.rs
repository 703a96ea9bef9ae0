//! Loop unrolling by divisors of the trip count.

use super::TransformError;
use crate::frontend::ast::*;

fn substitute(block: &mut Block, var: &str, with: &Expr) {
    block.rewrite_exprs(&mut |e| {
        if matches!(&e.kind, ExprKind::Var(v) if v == var) {
            *e = with.clone();
        }
    });
}

/// Unroll loop `l` by `factor`. `iterations` are the induction values of
/// the loop in order. Each body copy is its own block so declarations in
/// the body do not collide.
pub fn unroll_loop(l: &ForLoop, factor: u64, iterations: &[i64]) -> Result<Stmt, TransformError> {
    let trip = iterations.len() as u64;
    if factor == 0 || trip == 0 || trip % factor != 0 {
        return Err(TransformError::BadUnrollFactor { id: l.id, factor, trip });
    }
    if factor == 1 {
        return Ok(Stmt::synth(StmtKind::For(l.clone())));
    }
    if factor == trip {
        let copies = iterations
            .iter()
            .map(|v| {
                let mut b = l.body.clone();
                substitute(&mut b, &l.var, &Expr::int(*v));
                Stmt::synth(StmtKind::Block(b))
            })
            .collect();
        return Ok(Stmt::synth(StmtKind::Block(Block::new(copies))));
    }
    let copies = (0..factor as i64)
        .map(|k| {
            let mut b = l.body.clone();
            if k > 0 {
                let offset = k * l.step;
                let op = if offset > 0 { BinOp::Add } else { BinOp::Sub };
                substitute(&mut b, &l.var, &Expr::binary(op, Expr::var(&l.var), Expr::int(offset.abs())));
            }
            Stmt::synth(StmtKind::Block(b))
        })
        .collect();
    Ok(Stmt::synth(StmtKind::For(ForLoop { step: l.step * factor as i64, body: Block::new(copies), ..l.clone() })))
}

/// Apply `factor_of` to every source loop in `block`, innermost first.
pub(super) fn unroll_all(
    block: &mut Block,
    factor_of: &dyn Fn(LoopId) -> Option<(u64, Vec<i64>)>,
) -> Result<(), TransformError> {
    for s in &mut block.stmts {
        let mut err = None;
        s.for_each_block_mut(|b| {
            if let Err(e) = unroll_all(b, factor_of) {
                err = Some(e);
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        if let StmtKind::For(l) = &s.kind {
            if let Some((factor, iterations)) = factor_of(l.id) {
                *s = unroll_loop(l, factor, &iterations)?;
            }
        }
    }
    Ok(())
}
