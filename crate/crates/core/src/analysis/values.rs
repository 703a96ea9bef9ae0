//! Forward propagation of small constant sets.
//!
//! Every integer variable is mapped to either a finite set of values it may
//! hold at a program point, or ⊤ when the set is unknown or too large.

use crate::frontend::ast::*;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::marker::PhantomData;

pub const DEFAULT_MAX_SET_SIZE: usize = 64;

/// Upper limit on simulated loop iterations when computing trip counts.
const MAX_SIMULATED_TRIP: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum ValueSet {
    Set(BTreeSet<i64>),
    #[serde(serialize_with = "ser_top")]
    Top,
}

fn ser_top<S: serde::Serializer>(s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str("top")
}

impl ValueSet {
    pub fn single(v: i64) -> Self {
        ValueSet::Set(BTreeSet::from([v]))
    }

    pub fn from_iter(values: impl IntoIterator<Item = i64>, cap: usize) -> Self {
        let set: BTreeSet<i64> = values.into_iter().collect();
        if set.len() > cap {
            ValueSet::Top
        } else {
            ValueSet::Set(set)
        }
    }

    pub fn as_set(&self) -> Option<&BTreeSet<i64>> {
        match self {
            ValueSet::Set(s) => Some(s),
            ValueSet::Top => None,
        }
    }

    pub fn as_single(&self) -> Option<i64> {
        match self {
            ValueSet::Set(s) if s.len() == 1 => s.iter().next().copied(),
            _ => None,
        }
    }

    pub fn is_top(&self) -> bool {
        matches!(self, ValueSet::Top)
    }

    pub fn join(&self, other: &ValueSet, cap: usize) -> ValueSet {
        match (self, other) {
            (ValueSet::Set(a), ValueSet::Set(b)) => ValueSet::from_iter(a.union(b).copied(), cap),
            _ => ValueSet::Top,
        }
    }

    pub fn plus(&self, other: &ValueSet, cap: usize) -> ValueSet {
        self.combine(other, cap, i64::checked_add)
    }

    pub fn negated(&self, cap: usize) -> ValueSet {
        self.map(cap, i64::checked_neg)
    }

    fn map(&self, cap: usize, f: impl Fn(i64) -> Option<i64>) -> ValueSet {
        let Some(s) = self.as_set() else { return ValueSet::Top };
        let mut out = BTreeSet::new();
        for &v in s {
            match f(v).filter(|r| fits_int(*r)) {
                Some(r) => {
                    out.insert(r);
                }
                None => return ValueSet::Top,
            }
        }
        ValueSet::from_iter(out, cap)
    }

    fn combine(&self, other: &ValueSet, cap: usize, f: impl Fn(i64, i64) -> Option<i64>) -> ValueSet {
        let (Some(a), Some(b)) = (self.as_set(), other.as_set()) else { return ValueSet::Top };
        let mut out = BTreeSet::new();
        for &x in a {
            for &y in b {
                match f(x, y).filter(|r| fits_int(*r)) {
                    Some(r) => {
                        out.insert(r);
                    }
                    None => return ValueSet::Top,
                }
            }
        }
        ValueSet::from_iter(out, cap)
    }
}

/// Values are tracked for 32-bit `int` expressions; anything that would
/// overflow is treated as unknown rather than wrapped.
fn fits_int(v: i64) -> bool {
    v >= i32::MIN as i64 && v <= i32::MAX as i64
}

pub type Env = BTreeMap<String, ValueSet>;

fn join_env(a: &Env, b: &Env, cap: usize) -> Env {
    a.iter().filter_map(|(k, va)| b.get(k).map(|vb| (k.clone(), va.join(vb, cap)))).collect()
}

/// Evaluate an expression over sets. Only `int`-typed expressions produce
/// finite sets.
pub fn eval(e: &Expr, env: &Env, cap: usize) -> ValueSet {
    if e.ty.is_some_and(|t| t != ScalarType::Int) {
        return ValueSet::Top;
    }
    match &e.kind {
        ExprKind::Int(v) if fits_int(*v) => ValueSet::single(*v),
        ExprKind::Var(name) => env.get(name).cloned().unwrap_or(ValueSet::Top),
        ExprKind::Unary(op, inner) => {
            let s = eval(inner, env, cap);
            match op {
                UnOp::Neg => s.map(cap, |v| v.checked_neg()),
                UnOp::Not => s.map(cap, |v| Some((v == 0) as i64)),
                UnOp::BitNot => s.map(cap, |v| Some(!v)),
            }
        }
        ExprKind::Binary(op, l, r) => {
            let a = eval(l, env, cap);
            let b = eval(r, env, cap);
            use BinOp::*;
            match op {
                Add => a.combine(&b, cap, i64::checked_add),
                Sub => a.combine(&b, cap, i64::checked_sub),
                Mul => a.combine(&b, cap, i64::checked_mul),
                // Rust's `/` and `%` truncate toward zero like C.
                Div => a.combine(&b, cap, |x, y| if y == 0 { None } else { x.checked_div(y) }),
                Rem => a.combine(&b, cap, |x, y| if y == 0 { None } else { x.checked_rem(y) }),
                Lt => a.combine(&b, cap, |x, y| Some((x < y) as i64)),
                Le => a.combine(&b, cap, |x, y| Some((x <= y) as i64)),
                Gt => a.combine(&b, cap, |x, y| Some((x > y) as i64)),
                Ge => a.combine(&b, cap, |x, y| Some((x >= y) as i64)),
                Eq => a.combine(&b, cap, |x, y| Some((x == y) as i64)),
                Ne => a.combine(&b, cap, |x, y| Some((x != y) as i64)),
                And => a.combine(&b, cap, |x, y| Some((x != 0 && y != 0) as i64)),
                Or => a.combine(&b, cap, |x, y| Some((x != 0 || y != 0) as i64)),
                BitAnd => a.combine(&b, cap, |x, y| Some(x & y)),
                BitOr => a.combine(&b, cap, |x, y| Some(x | y)),
                BitXor => a.combine(&b, cap, |x, y| Some(x ^ y)),
                Shl => a.combine(&b, cap, |x, y| if (0..31).contains(&y) { x.checked_mul(1 << y) } else { None }),
                Shr => a.combine(&b, cap, |x, y| if (0..32).contains(&y) { Some(x >> y) } else { None }),
            }
        }
        ExprKind::Call(Builtin::Min, args) => eval(&args[0], env, cap).combine(&eval(&args[1], env, cap), cap, |x, y| Some(x.min(y))),
        ExprKind::Call(Builtin::Max, args) => eval(&args[0], env, cap).combine(&eval(&args[1], env, cap), cap, |x, y| Some(x.max(y))),
        ExprKind::Cast(ScalarType::Int, inner) if inner.ty == Some(ScalarType::Int) => eval(inner, env, cap),
        _ => ValueSet::Top,
    }
}

/// Values taken by a loop's induction variable, if its bounds are known.
pub fn loop_values(l: &ForLoop, env: &Env, cap: usize) -> Option<Vec<i64>> {
    let init = eval(&l.init, env, cap).as_single()?;
    let bound = eval(&l.bound, env, cap).as_single()?;
    let holds = |v: i64| match l.cmp {
        BinOp::Lt => v < bound,
        BinOp::Le => v <= bound,
        BinOp::Gt => v > bound,
        BinOp::Ge => v >= bound,
        BinOp::Ne => v != bound,
        _ => false,
    };
    let mut out = Vec::new();
    let mut v = init;
    while holds(v) {
        if out.len() as u64 >= MAX_SIMULATED_TRIP || !fits_int(v) {
            return None;
        }
        out.push(v);
        v = v.checked_add(l.step)?;
    }
    Some(out)
}

/// Result of set propagation: the environment in force before each statement.
pub struct ValueSets<'a> {
    before: HashMap<*const Stmt, Env>,
    trips: BTreeMap<LoopId, Option<Vec<i64>>>,
    pub max_set_size: usize,
    _ast: PhantomData<&'a KernelAst>,
}

impl<'a> ValueSets<'a> {
    /// Environment before `stmt`, or `None` if the statement is unreachable
    /// (e.g. inside a loop that never iterates).
    pub fn env_before(&self, stmt: &'a Stmt) -> Option<&Env> {
        self.before.get(&(stmt as *const Stmt))
    }

    /// Set of `var` immediately before `stmt`.
    pub fn value_of(&self, var: &str, stmt: &'a Stmt) -> ValueSet {
        self.env_before(stmt).and_then(|e| e.get(var).cloned()).unwrap_or(ValueSet::Top)
    }

    /// Iteration values of each loop with known bounds (empty for loops that never run).
    pub fn loop_iterations(&self, id: LoopId) -> Option<&[i64]> {
        self.trips.get(&id).and_then(|t| t.as_deref())
    }
}

struct Propagator<'a> {
    cap: usize,
    int_vars: BTreeSet<String>,
    before: HashMap<*const Stmt, Env>,
    trips: BTreeMap<LoopId, Option<Vec<i64>>>,
    _ast: PhantomData<&'a KernelAst>,
}

impl<'a> Propagator<'a> {
    fn record(&mut self, s: &'a Stmt, env: &Env) {
        let cap = self.cap;
        self.before
            .entry(s as *const Stmt)
            .and_modify(|e| *e = join_env(e, env, cap))
            .or_insert_with(|| env.clone());
    }

    fn block(&mut self, b: &'a Block, mut env: Env, record: bool) -> Env {
        let outer: BTreeSet<String> = env.keys().cloned().collect();
        for s in &b.stmts {
            env = self.stmt(s, env, record);
        }
        env.retain(|k, _| outer.contains(k));
        env
    }

    fn stmt(&mut self, s: &'a Stmt, mut env: Env, record: bool) -> Env {
        if record {
            self.record(s, &env);
        }
        let cap = self.cap;
        match &s.kind {
            StmtKind::Decl { ty, name, init } => {
                let v = match init {
                    Some(e) if *ty == ScalarType::Int => eval(e, &env, cap),
                    _ => ValueSet::Top,
                };
                if *ty == ScalarType::Int {
                    self.int_vars.insert(name.clone());
                }
                env.insert(name.clone(), v);
            }
            StmtKind::Assign { target: LValue::Var(name), op, value } => {
                if env.contains_key(name) {
                    let v = if !self.int_vars.contains(name) {
                        ValueSet::Top
                    } else {
                        match op.binop() {
                            None => eval(value, &env, cap),
                            Some(bop) => {
                                let mut cur = Expr::var(name.clone());
                                cur.ty = Some(ScalarType::Int);
                                let mut combined = Expr::binary(bop, cur, value.clone());
                                combined.ty = value.ty.map(|t| t.arithmetic(ScalarType::Int));
                                eval(&combined, &env, cap)
                            }
                        }
                    };
                    env.insert(name.clone(), v);
                }
            }
            StmtKind::Assign { .. } | StmtKind::Expr(_) => {}
            StmtKind::If { then, otherwise, .. } => {
                let a = self.block(then, env.clone(), record);
                let b = match otherwise {
                    Some(o) => self.block(o, env.clone(), record),
                    None => env.clone(),
                };
                env = join_env(&a, &b, cap);
            }
            StmtKind::Block(b) => env = self.block(b, env, record),
            StmtKind::For(l) => env = self.for_loop(l, env, record),
            StmtKind::LocalDecl { .. } | StmtKind::Barrier | StmtKind::WriteImage { .. } | StmtKind::Coarsen(_) => {}
        }
        env
    }

    fn for_loop(&mut self, l: &'a ForLoop, env: Env, record: bool) -> Env {
        let cap = self.cap;
        let iters = loop_values(l, &env, cap);
        // Join with what an earlier visit (e.g. an enclosing loop's fixpoint) saw.
        let known = match (self.trips.get(&l.id), &iters) {
            (Some(Some(prev)), Some(cur)) if prev == cur => Some(cur.clone()),
            (Some(_), _) => None,
            (None, cur) => cur.clone(),
        };
        if record {
            self.trips.insert(l.id, known);
        }
        let iv = match &iters {
            Some(v) => ValueSet::from_iter(v.iter().copied(), cap),
            None => ValueSet::Top,
        };
        if iters.as_ref().is_some_and(|v| v.is_empty()) {
            return env;
        }
        if l.var_ty == ScalarType::Int {
            self.int_vars.insert(l.var.clone());
        }
        let mut head = env.clone();
        loop {
            let mut inner = head.clone();
            inner.insert(l.var.clone(), iv.clone());
            let after = self.block(&l.body, inner, false);
            let next = join_env(&head, &after, cap);
            if next == head {
                break;
            }
            head = next;
        }
        if record {
            let mut inner = head.clone();
            inner.insert(l.var.clone(), iv);
            self.block(&l.body, inner, true);
        }
        head
    }
}

/// Run set propagation over a type-checked kernel.
pub fn propagate_value_sets(ast: &KernelAst, max_set_size: usize) -> ValueSets<'_> {
    let mut p = Propagator { cap: max_set_size, int_vars: BTreeSet::new(), before: HashMap::new(), trips: BTreeMap::new(), _ast: PhantomData };
    let env = Env::new();
    p.block(&ast.body, env, true);
    ValueSets { before: p.before, trips: p.trips, max_set_size, _ast: PhantomData }
}
