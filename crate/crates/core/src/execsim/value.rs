//! Scalar values with OpenCL C conversion and arithmetic rules.

use crate::frontend::ast::{BinOp, Builtin, ScalarType, UnOp};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    F32(f32),
    I32(i32),
    U32(u32),
    U8(u8),
}

impl Default for Value {
    fn default() -> Self {
        Value::I32(0)
    }
}

impl Value {
    pub fn zero(ty: ScalarType) -> Value {
        Value::I32(0).convert(ty)
    }

    pub fn ty(self) -> ScalarType {
        match self {
            Value::F32(_) => ScalarType::Float,
            Value::I32(_) => ScalarType::Int,
            Value::U32(_) => ScalarType::Uint,
            Value::U8(_) => ScalarType::Uchar,
        }
    }

    pub fn from_f64(v: f64, ty: ScalarType) -> Value {
        match ty {
            ScalarType::Float => Value::F32(v as f32),
            ScalarType::Int => Value::I32(v as i32),
            ScalarType::Uint => Value::U32(v as u32),
            ScalarType::Uchar => Value::U8(v as u8),
        }
    }

    pub fn as_f32(self) -> f32 {
        match self {
            Value::F32(v) => v,
            Value::I32(v) => v as f32,
            Value::U32(v) => v as f32,
            Value::U8(v) => v as f32,
        }
    }

    pub fn as_i64(self) -> i64 {
        match self {
            Value::F32(v) => v as i64,
            Value::I32(v) => v as i64,
            Value::U32(v) => v as i64,
            Value::U8(v) => v as i64,
        }
    }

    pub fn truthy(self) -> bool {
        match self {
            Value::F32(v) => v != 0.0,
            Value::I32(v) => v != 0,
            Value::U32(v) => v != 0,
            Value::U8(v) => v != 0,
        }
    }

    /// Implicit or explicit conversion. Integer narrowing wraps; float to
    /// integer saturates.
    pub fn convert(self, ty: ScalarType) -> Value {
        match (self, ty) {
            (v, t) if v.ty() == t => v,
            (v, ScalarType::Float) => Value::F32(v.as_f32()),
            (Value::F32(f), ScalarType::Int) => Value::I32(f as i32),
            (Value::F32(f), ScalarType::Uint) => Value::U32(f as u32),
            (Value::F32(f), ScalarType::Uchar) => Value::U8(f as u8),
            (v, ScalarType::Int) => Value::I32(v.bits() as i32),
            (v, ScalarType::Uint) => Value::U32(v.bits()),
            (v, ScalarType::Uchar) => Value::U8(v.bits() as u8),
        }
    }

    fn bits(self) -> u32 {
        match self {
            Value::F32(v) => v as i32 as u32,
            Value::I32(v) => v as u32,
            Value::U32(v) => v,
            Value::U8(v) => v as u32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithError {
    DivisionByZero,
}

fn bool_value(b: bool) -> Value {
    Value::I32(b as i32)
}

pub fn binary(op: BinOp, a: Value, b: Value) -> Result<Value, ArithError> {
    use BinOp::*;
    let ty = a.ty().arithmetic(b.ty());
    let (a, b) = (a.convert(ty), b.convert(ty));
    Ok(match (a, b) {
        (Value::F32(x), Value::F32(y)) => match op {
            Add => Value::F32(x + y),
            Sub => Value::F32(x - y),
            Mul => Value::F32(x * y),
            Div => Value::F32(x / y),
            Lt => bool_value(x < y),
            Le => bool_value(x <= y),
            Gt => bool_value(x > y),
            Ge => bool_value(x >= y),
            Eq => bool_value(x == y),
            Ne => bool_value(x != y),
            And => bool_value(x != 0.0 && y != 0.0),
            Or => bool_value(x != 0.0 || y != 0.0),
            Rem | BitAnd | BitOr | BitXor | Shl | Shr => unreachable!("rejected by the type checker"),
        },
        (Value::I32(x), Value::I32(y)) => match op {
            Add => Value::I32(x.wrapping_add(y)),
            Sub => Value::I32(x.wrapping_sub(y)),
            Mul => Value::I32(x.wrapping_mul(y)),
            Div | Rem if y == 0 => return Err(ArithError::DivisionByZero),
            Div => Value::I32(x.wrapping_div(y)),
            Rem => Value::I32(x.wrapping_rem(y)),
            Lt => bool_value(x < y),
            Le => bool_value(x <= y),
            Gt => bool_value(x > y),
            Ge => bool_value(x >= y),
            Eq => bool_value(x == y),
            Ne => bool_value(x != y),
            And => bool_value(x != 0 && y != 0),
            Or => bool_value(x != 0 || y != 0),
            BitAnd => Value::I32(x & y),
            BitOr => Value::I32(x | y),
            BitXor => Value::I32(x ^ y),
            Shl => Value::I32(x.wrapping_shl(y as u32 & 31)),
            Shr => Value::I32(x.wrapping_shr(y as u32 & 31)),
        },
        (Value::U32(x), Value::U32(y)) => match op {
            Add => Value::U32(x.wrapping_add(y)),
            Sub => Value::U32(x.wrapping_sub(y)),
            Mul => Value::U32(x.wrapping_mul(y)),
            Div => Value::U32(x.checked_div(y).ok_or(ArithError::DivisionByZero)?),
            Rem => Value::U32(x.checked_rem(y).ok_or(ArithError::DivisionByZero)?),
            Lt => bool_value(x < y),
            Le => bool_value(x <= y),
            Gt => bool_value(x > y),
            Ge => bool_value(x >= y),
            Eq => bool_value(x == y),
            Ne => bool_value(x != y),
            And => bool_value(x != 0 && y != 0),
            Or => bool_value(x != 0 || y != 0),
            BitAnd => Value::U32(x & y),
            BitOr => Value::U32(x | y),
            BitXor => Value::U32(x ^ y),
            Shl => Value::U32(x.wrapping_shl(y & 31)),
            Shr => Value::U32(x.wrapping_shr(y & 31)),
        },
        _ => unreachable!("operands promoted to a common type"),
    })
}

pub fn unary(op: UnOp, a: Value) -> Value {
    match op {
        UnOp::Not => bool_value(!a.truthy()),
        UnOp::Neg => match a.convert(a.ty().promoted()) {
            Value::F32(v) => Value::F32(-v),
            Value::I32(v) => Value::I32(v.wrapping_neg()),
            Value::U32(v) => Value::U32(v.wrapping_neg()),
            Value::U8(_) => unreachable!("promoted"),
        },
        UnOp::BitNot => match a.convert(a.ty().promoted()) {
            Value::I32(v) => Value::I32(!v),
            Value::U32(v) => Value::U32(!v),
            _ => unreachable!("rejected by the type checker"),
        },
    }
}

fn common(args: &[Value]) -> ScalarType {
    args.iter().skip(1).fold(args[0].ty().promoted(), |t, a| t.arithmetic(a.ty()))
}

fn ordered_min(a: Value, b: Value) -> Value {
    match (a, b) {
        (Value::F32(x), Value::F32(y)) => Value::F32(if y < x { y } else { x }),
        (Value::I32(x), Value::I32(y)) => Value::I32(x.min(y)),
        (Value::U32(x), Value::U32(y)) => Value::U32(x.min(y)),
        _ => unreachable!("promoted"),
    }
}

fn ordered_max(a: Value, b: Value) -> Value {
    match (a, b) {
        (Value::F32(x), Value::F32(y)) => Value::F32(if y > x { y } else { x }),
        (Value::I32(x), Value::I32(y)) => Value::I32(x.max(y)),
        (Value::U32(x), Value::U32(y)) => Value::U32(x.max(y)),
        _ => unreachable!("promoted"),
    }
}

pub fn call(b: Builtin, args: &[Value]) -> Value {
    match b {
        Builtin::Sqrt => Value::F32(args[0].as_f32().sqrt()),
        Builtin::Fabs => Value::F32(args[0].as_f32().abs()),
        Builtin::Exp => Value::F32(args[0].as_f32().exp()),
        Builtin::Fmin => Value::F32(args[0].as_f32().min(args[1].as_f32())),
        Builtin::Fmax => Value::F32(args[0].as_f32().max(args[1].as_f32())),
        Builtin::Min | Builtin::Max | Builtin::Clamp => {
            let t = common(args);
            let a: Vec<Value> = args.iter().map(|v| v.convert(t)).collect();
            match b {
                Builtin::Min => ordered_min(a[0], a[1]),
                Builtin::Max => ordered_max(a[0], a[1]),
                _ => ordered_min(ordered_max(a[0], a[1]), a[2]),
            }
        }
    }
}
