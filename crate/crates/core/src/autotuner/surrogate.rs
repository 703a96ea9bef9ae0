//! One-hidden-layer regression network predicting a configuration's cost.

use crate::space::{Configuration, TuningSpace};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

pub const HIDDEN_UNITS: usize = 16;
pub const EPOCHS: usize = 500;
pub const LEARNING_RATE: f64 = 0.03;
pub const LEARNING_DECAY: f64 = 0.99;
pub const BATCH_SIZE: usize = 8;
pub const MIN_SAMPLES: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("surrogate needs at least {MIN_SAMPLES} ok measurements, got {0}")]
pub struct InsufficientDataError(pub usize);

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum FeatureMap {
    /// 0/1 parameter used as is.
    Flag { id: String },
    /// Power-of-two parameter as log2, scaled to [-1, 1] over its domain.
    Log2 { id: String, lo: f64, hi: f64 },
    OneHot { id: String, values: Vec<i64> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Encoding {
    pub features: Vec<FeatureMap>,
}

impl Encoding {
    pub fn for_space(space: &TuningSpace) -> Encoding {
        let mut features = Vec::new();
        for p in &space.params {
            let d = &p.domain;
            if d.len() < 2 {
                continue;
            }
            let id = p.id.clone();
            if d.iter().all(|v| *v == 0 || *v == 1) {
                features.push(FeatureMap::Flag { id });
            } else if d.len() > 2 && d.iter().all(|v| *v > 0 && (*v as u64).is_power_of_two()) {
                let logs: Vec<f64> = d.iter().map(|v| (*v as f64).log2()).collect();
                let lo = logs.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                features.push(FeatureMap::Log2 { id, lo, hi });
            } else {
                features.push(FeatureMap::OneHot { id, values: d.clone() });
            }
        }
        Encoding { features }
    }

    pub fn dim(&self) -> usize {
        self.features.iter().map(|f| if let FeatureMap::OneHot { values, .. } = f { values.len() } else { 1 }).sum()
    }

    pub fn encode(&self, cfg: &Configuration) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        for f in &self.features {
            match f {
                FeatureMap::Flag { id } => out.push(cfg.get(id).unwrap_or(0) as f64),
                FeatureMap::Log2 { id, lo, hi } => {
                    let v = (cfg.get(id).unwrap_or(1).max(1) as f64).log2();
                    out.push(if hi > lo { 2.0 * (v - lo) / (hi - lo) - 1.0 } else { 0.0 });
                }
                FeatureMap::OneHot { id, values } => {
                    let v = cfg.get(id);
                    out.extend(values.iter().map(|x| if Some(*x) == v { 1.0 } else { 0.0 }));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TrainingMeta {
    pub seed: u64,
    pub epochs: usize,
    pub samples: usize,
    pub final_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Surrogate {
    pub encoding: Encoding,
    w1: Vec<Vec<f64>>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
    mean: f64,
    std: f64,
    pub meta: TrainingMeta,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        self.t += 1;
        let c1 = 1.0 - B1.powi(self.t);
        let c2 = 1.0 - B2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = B1 * self.m[i] + (1.0 - B1) * grad[i];
            self.v[i] = B2 * self.v[i] + (1.0 - B2) * grad[i] * grad[i];
            params[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + 1e-8);
        }
    }
}

impl Surrogate {
    fn raw(&self, x: &[f64], hidden: &mut [f64]) -> f64 {
        let mut out = self.b2;
        for (j, h) in hidden.iter_mut().enumerate() {
            let z = self.b1[j] + self.w1[j].iter().zip(x).map(|(w, x)| w * x).sum::<f64>();
            *h = z.tanh();
            out += self.w2[j] * *h;
        }
        out
    }

    fn pack(&self) -> Vec<f64> {
        let mut p: Vec<f64> = self.w1.iter().flatten().copied().collect();
        p.extend(&self.b1);
        p.extend(&self.w2);
        p.push(self.b2);
        p
    }

    fn unpack(&mut self, p: &[f64]) {
        let d = self.encoding.dim();
        let mut i = 0;
        for row in &mut self.w1 {
            row.copy_from_slice(&p[i..i + d]);
            i += d;
        }
        let h = self.b1.len();
        self.b1.copy_from_slice(&p[i..i + h]);
        i += h;
        self.w2.copy_from_slice(&p[i..i + h]);
        self.b2 = p[i + h];
    }

    /// Fit on `(cfg, value)` pairs with positive values. The data is put in
    /// a canonical order first so the result does not depend on the order
    /// measurements arrived in.
    pub fn train(data: &[(Configuration, f64)], encoding: Encoding, seed: u64) -> Result<Surrogate, InsufficientDataError> {
        if data.len() < MIN_SAMPLES {
            return Err(InsufficientDataError(data.len()));
        }
        let mut rows: Vec<(Vec<f64>, f64)> =
            data.iter().map(|(c, v)| (encoding.encode(c), v.max(f64::MIN_POSITIVE).ln())).collect();
        rows.sort_by(|a, b| {
            a.0.iter().zip(&b.0).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(a.1.total_cmp(&b.1))
        });
        let n = rows.len() as f64;
        let mean = rows.iter().map(|r| r.1).sum::<f64>() / n;
        let var = rows.iter().map(|r| (r.1 - mean).powi(2)).sum::<f64>() / n;
        let constant = var <= 1e-24;
        let std = if constant { 1.0 } else { var.sqrt() };
        let ys: Vec<f64> = rows.iter().map(|r| (r.1 - mean) / std).collect();

        let d = encoding.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s1 = 1.0 / (d.max(1) as f64).sqrt();
        let s2 = 1.0 / (HIDDEN_UNITS as f64).sqrt();
        let mut model = Surrogate {
            w1: (0..HIDDEN_UNITS).map(|_| (0..d).map(|_| rng.gen_range(-s1..s1)).collect()).collect(),
            b1: vec![0.0; HIDDEN_UNITS],
            w2: (0..HIDDEN_UNITS).map(|_| rng.gen_range(-s2..s2)).collect(),
            b2: 0.0,
            encoding,
            mean,
            std,
            meta: TrainingMeta { seed, epochs: EPOCHS, samples: rows.len(), final_loss: f64::NAN },
        };

        if constant {
            model.w2.iter_mut().for_each(|w| *w = 0.0);
            model.meta.final_loss = 0.0;
            return Ok(model);
        }
        let np = HIDDEN_UNITS * d + 2 * HIDDEN_UNITS + 1;
        let mut adam = Adam { m: vec![0.0; np], v: vec![0.0; np], t: 0 };
        let mut params = model.pack();
        let mut grad = vec![0.0; np];
        let mut hidden = vec![0.0; HIDDEN_UNITS];
        let mut order: Vec<usize> = (0..rows.len()).collect();
        for epoch in 0..EPOCHS {
            let lr = LEARNING_RATE * LEARNING_DECAY.powi(epoch as i32);
            order.shuffle(&mut rng);
            for batch in order.chunks(BATCH_SIZE) {
                grad.iter_mut().for_each(|g| *g = 0.0);
                let scale = 2.0 / batch.len() as f64;
                for &r in batch {
                    let x = &rows[r].0;
                    let err = model.raw(x, &mut hidden) - ys[r];
                    let g = scale * err;
                    let (gw1, rest) = grad.split_at_mut(HIDDEN_UNITS * d);
                    let (gb1, rest) = rest.split_at_mut(HIDDEN_UNITS);
                    let (gw2, gb2) = rest.split_at_mut(HIDDEN_UNITS);
                    gb2[0] += g;
                    for j in 0..HIDDEN_UNITS {
                        gw2[j] += g * hidden[j];
                        let gz = g * model.w2[j] * (1.0 - hidden[j] * hidden[j]);
                        gb1[j] += gz;
                        for (k, xk) in x.iter().enumerate() {
                            gw1[j * d + k] += gz * xk;
                        }
                    }
                }
                adam.step(&mut params, &grad, lr);
                model.unpack(&params);
            }
        }
        let loss = rows.iter().zip(&ys).map(|(r, y)| (model.raw(&r.0, &mut hidden) - y).powi(2)).sum::<f64>() / n;
        model.meta.final_loss = loss;
        Ok(model)
    }

    /// Predicted value in the units of the training data.
    pub fn predict(&self, cfg: &Configuration) -> f64 {
        let mut hidden = vec![0.0; HIDDEN_UNITS];
        (self.raw(&self.encoding.encode(cfg), &mut hidden) * self.std + self.mean).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{TuningKind, TuningParameter};

    pub(crate) fn toy_space() -> TuningSpace {
        let p = |id: &str, kind, domain: Vec<i64>| TuningParameter { id: id.into(), kind, domain };
        TuningSpace::synthetic(
            "toy",
            vec![
                p("wgX", TuningKind::WorkGroupX, vec![1, 2, 4, 8, 16, 32]),
                p("cX", TuningKind::CoarsenX, vec![1, 2, 4, 8]),
                p("interleaved", TuningKind::Interleaved, vec![0, 1]),
                p("unroll.L1", TuningKind::Unroll(crate::frontend::ast::LoopId(1)), vec![1, 3]),
            ],
        )
    }

    #[test]
    fn encoding_kinds() {
        let s = toy_space();
        let e = Encoding::for_space(&s);
        assert_eq!(e.dim(), 1 + 1 + 1 + 2);
        let x = e.encode(&s.default_config().with("wgX", 4).with("unroll.L1", 3));
        let want = [2.0 * 2.0 / 5.0 - 1.0, -1.0, 0.0, 0.0, 1.0];
        assert!(x.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-12), "{x:?}");
    }

    #[test]
    fn fits_linear_function() {
        let s = toy_space();
        let e = Encoding::for_space(&s);
        let data: Vec<_> = s
            .iter_valid()
            .map(|c| {
                let x = e.encode(&c);
                let lin = 0.5 + 1.5 * x[0] - 0.7 * x[1] + 0.3 * x[2] + 0.2 * x[4];
                (c, lin.exp())
            })
            .collect();
        let m = Surrogate::train(&data, e, 3).unwrap();
        assert!(m.meta.final_loss < 1e-3, "loss {}", m.meta.final_loss);
    }

    #[test]
    fn duplicates_converge() {
        let s = toy_space();
        let cfgs: Vec<_> = s.iter_valid().take(6).collect();
        let mut data = Vec::new();
        for (i, c) in cfgs.iter().enumerate() {
            for _ in 0..3 {
                data.push((c.clone(), 10.0 + 5.0 * i as f64));
            }
        }
        let m = Surrogate::train(&data, Encoding::for_space(&s), 11).unwrap();
        for (i, c) in cfgs.iter().enumerate() {
            let t = 10.0 + 5.0 * i as f64;
            assert!((m.predict(c) - t).abs() / t < 0.05, "{} vs {t}", m.predict(c));
        }
    }

    #[test]
    fn too_few_samples() {
        let s = toy_space();
        let data: Vec<_> = s.iter_valid().take(9).map(|c| (c, 1.0)).collect();
        assert_eq!(Surrogate::train(&data, Encoding::for_space(&s), 0).unwrap_err(), InsufficientDataError(9));
    }

    #[test]
    fn order_invariant() {
        let s = toy_space();
        let mut data: Vec<_> = s.iter_valid().take(20).enumerate().map(|(i, c)| (c, 1.0 + (i * 7 % 5) as f64)).collect();
        let a = Surrogate::train(&data, Encoding::for_space(&s), 5).unwrap();
        data.reverse();
        let b = Surrogate::train(&data, Encoding::for_space(&s), 5).unwrap();
        assert_eq!(a, b);
    }
}
