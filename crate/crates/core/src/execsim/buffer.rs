//! Typed host buffers bound to kernel parameters.

use super::value::Value;
use crate::frontend::ast::{KernelAst, ParamKind, ScalarType};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Element count used for arrays without a `maxsize` pragma.
pub const DEFAULT_ARRAY_LEN: usize = 64;

/// A row-major 2D image, or a 1D array with `height == 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Buffer {
    pub ty: ScalarType,
    pub width: usize,
    pub height: usize,
    pub data: Vec<Value>,
}

impl Buffer {
    pub fn filled(ty: ScalarType, width: usize, height: usize, v: f64) -> Buffer {
        Buffer { ty, width, height, data: vec![Value::from_f64(v, ty); width * height] }
    }

    pub fn from_fn(ty: ScalarType, width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Buffer {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(Value::from_f64(f(x, y), ty));
            }
        }
        Buffer { ty, width, height, data }
    }

    pub fn random(ty: ScalarType, width: usize, height: usize, rng: &mut impl Rng) -> Buffer {
        let data = (0..width * height).map(|_| random_value(ty, rng)).collect();
        Buffer { ty, width, height, data }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, x: usize, y: usize) -> Value {
        self.data[x + y * self.width]
    }

    pub fn to_f32(&self) -> Vec<f32> {
        self.data.iter().map(|v| v.as_f32()).collect()
    }

    /// Bitwise equality (distinguishes NaN payloads and signed zeros).
    pub fn bit_identical(&self, other: &Buffer) -> bool {
        self.ty == other.ty
            && self.width == other.width
            && self.height == other.height
            && self.data.iter().zip(&other.data).all(|(a, b)| match (a, b) {
                (Value::F32(x), Value::F32(y)) => x.to_bits() == y.to_bits(),
                _ => a == b,
            })
    }
}

fn random_value(ty: ScalarType, rng: &mut impl Rng) -> Value {
    match ty {
        ScalarType::Float => Value::F32(rng.gen_range(-1.0f32..1.0)),
        ScalarType::Int => Value::I32(rng.gen_range(-1000..1000)),
        ScalarType::Uint => Value::U32(rng.gen_range(0..1000)),
        ScalarType::Uchar => Value::U8(rng.gen()),
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BufferSet {
    pub buffers: BTreeMap<String, Buffer>,
    pub scalars: BTreeMap<String, Value>,
}

impl BufferSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_buffer(mut self, name: &str, b: Buffer) -> Self {
        self.buffers.insert(name.to_string(), b);
        self
    }

    pub fn with_scalar(mut self, name: &str, v: Value) -> Self {
        self.scalars.insert(name.to_string(), v);
        self
    }

    /// Seeded random contents for every parameter of `ast` on a
    /// `width`×`height` grid.
    pub fn random(ast: &KernelAst, width: usize, height: usize, seed: u64) -> BufferSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut set = BufferSet::new();
        for p in &ast.params {
            match p.kind {
                ParamKind::Image(t) => {
                    set.buffers.insert(p.name.clone(), Buffer::random(t, width, height, &mut rng));
                }
                ParamKind::Array(t) => {
                    let len = ast.max_size(&p.name).map_or(DEFAULT_ARRAY_LEN, |b| (b / t.size_bytes()) as usize);
                    set.buffers.insert(p.name.clone(), Buffer::random(t, len, 1, &mut rng));
                }
                ParamKind::Scalar(t) => {
                    set.scalars.insert(p.name.clone(), random_value(t, &mut rng));
                }
            }
        }
        set
    }
}
