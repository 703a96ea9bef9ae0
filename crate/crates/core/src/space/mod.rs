//! Tuning parameters, configurations, validation, enumeration and sampling.

pub mod fixtures;

use crate::analysis::AnalysisReport;
use crate::execsim::profile::DeviceProfile;
use crate::frontend::ast::{KernelAst, LoopId, PragmaKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::OnceLock;
use thiserror::Error;

/// Spaces whose full product is at most this large are enumerated exactly.
pub const ENUMERATION_CAP: u64 = 1 << 24;
const MAX_CONSECUTIVE_REJECTIONS: u64 = 1_000_000;

pub const WG_X: &str = "wgX";
pub const WG_Y: &str = "wgY";
pub const COARSEN_X: &str = "cX";
pub const COARSEN_Y: &str = "cY";
pub const INTERLEAVED: &str = "interleaved";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "target", rename_all = "camelCase")]
pub enum TuningKind {
    WorkGroupX,
    WorkGroupY,
    CoarsenX,
    CoarsenY,
    Interleaved,
    ImageMem(String),
    ConstantMem(String),
    LocalMem(String),
    Unroll(LoopId),
}

impl TuningKind {
    pub fn id(&self) -> String {
        match self {
            TuningKind::WorkGroupX => WG_X.into(),
            TuningKind::WorkGroupY => WG_Y.into(),
            TuningKind::CoarsenX => COARSEN_X.into(),
            TuningKind::CoarsenY => COARSEN_Y.into(),
            TuningKind::Interleaved => INTERLEAVED.into(),
            TuningKind::ImageMem(p) => format!("imageMem.{p}"),
            TuningKind::ConstantMem(p) => format!("constantMem.{p}"),
            TuningKind::LocalMem(p) => format!("localMem.{p}"),
            TuningKind::Unroll(l) => format!("unroll.{l}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningParameter {
    pub id: String,
    pub kind: TuningKind,
    pub domain: Vec<i64>,
}

/// A concrete value for every tuning parameter, stored as a flat JSON object.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration(pub BTreeMap<String, i64>);

impl Configuration {
    pub fn get(&self, id: &str) -> Option<i64> {
        self.0.get(id).copied()
    }

    pub fn flag(&self, id: &str) -> bool {
        self.get(id).unwrap_or(0) != 0
    }

    pub fn set(&mut self, id: impl Into<String>, value: i64) {
        self.0.insert(id.into(), value);
    }

    pub fn with(mut self, id: impl Into<String>, value: i64) -> Self {
        self.set(id, value);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("configuration serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_json())
    }
}

/// Size of one local-memory tile, used by the local-memory constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TileShape {
    pub elem_bytes: u64,
    /// Halo width (`hiX - loX`) and height (`hiY - loY`).
    pub halo_x: u64,
    pub halo_y: u64,
}

impl TileShape {
    pub fn bytes(&self, wg_x: i64, wg_y: i64, c_x: i64, c_y: i64) -> u64 {
        let w = (wg_x * c_x) as u64 + self.halo_x;
        let h = (wg_y * c_y) as u64 + self.halo_y;
        w * h * self.elem_bytes
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Violation {
    Incomplete(String),
    UnknownParameter(String),
    OutOfDomain(String),
    WorkGroupSize,
    LocalMemorySize,
    ExclusiveMemorySpace(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Incomplete(p) => write!(f, "incomplete({p})"),
            Violation::UnknownParameter(p) => write!(f, "unknown-parameter({p})"),
            Violation::OutOfDomain(p) => write!(f, "domain({p})"),
            Violation::WorkGroupSize => f.write_str("work-group-size"),
            Violation::LocalMemorySize => f.write_str("local-memory-size"),
            Violation::ExclusiveMemorySpace(p) => write!(f, "exclusive-memory-space({p})"),
        }
    }
}

impl Violation {
    /// Constraint name without the parameter detail for `incomplete`.
    pub fn name(&self) -> String {
        match self {
            Violation::Incomplete(_) => "incomplete".into(),
            other => other.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpaceError {
    #[error("no valid configuration found (space is empty or constraints exclude almost everything)")]
    EmptySpace,
    #[error("unknown tuning parameter `{0}`")]
    UnknownParameter(String),
    #[error("restricting `{0}` leaves an empty domain")]
    EmptyDomain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "camelCase")]
pub enum SpaceCount {
    Exact(u64),
    UpperBound(u64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TuningSpace {
    pub kernel: String,
    pub params: Vec<TuningParameter>,
    pub max_work_group_size: u64,
    pub local_mem_bytes: u64,
    pub tiles: BTreeMap<String, TileShape>,
    #[serde(skip)]
    valid_count: OnceLock<u64>,
}

impl PartialEq for TuningSpace {
    fn eq(&self, o: &Self) -> bool {
        self.kernel == o.kernel
            && self.params == o.params
            && self.max_work_group_size == o.max_work_group_size
            && self.local_mem_bytes == o.local_mem_bytes
            && self.tiles == o.tiles
    }
}

fn pow2_upto(max: i64) -> Vec<i64> {
    std::iter::successors(Some(1i64), |v| Some(v * 2)).take_while(|v| *v <= max).collect()
}

fn divisors(n: u64) -> Vec<i64> {
    (1..=n).filter(|d| n % d == 0).map(|d| d as i64).collect()
}

/// Positions of the structural parameters, for fast validity checks.
struct Layout {
    wg_x: Option<usize>,
    wg_y: Option<usize>,
    c_x: Option<usize>,
    c_y: Option<usize>,
    /// (array, imageMem, constantMem, localMem) positions.
    memory: Vec<(String, Option<usize>, Option<usize>, Option<usize>)>,
}

impl TuningSpace {
    /// A space over arbitrary parameters with no device limits, for
    /// exercising search code without a kernel.
    pub fn synthetic(kernel: &str, params: Vec<TuningParameter>) -> TuningSpace {
        TuningSpace {
            kernel: kernel.to_string(),
            params,
            max_work_group_size: u64::MAX,
            local_mem_bytes: u64::MAX,
            tiles: BTreeMap::new(),
            valid_count: OnceLock::new(),
        }
    }

    /// Build the space of applicable parameters for an analyzed kernel.
    pub fn build(ast: &KernelAst, report: &AnalysisReport, profile: &DeviceProfile) -> TuningSpace {
        let mut params = vec![
            TuningParameter { id: WG_X.into(), kind: TuningKind::WorkGroupX, domain: pow2_upto(512) },
            TuningParameter { id: WG_Y.into(), kind: TuningKind::WorkGroupY, domain: pow2_upto(512) },
            TuningParameter { id: COARSEN_X.into(), kind: TuningKind::CoarsenX, domain: pow2_upto(256) },
            TuningParameter { id: COARSEN_Y.into(), kind: TuningKind::CoarsenY, domain: pow2_upto(256) },
            TuningParameter { id: INTERLEAVED.into(), kind: TuningKind::Interleaved, domain: vec![0, 1] },
        ];
        let mut tiles = BTreeMap::new();
        let buffers: Vec<_> = ast.params.iter().filter(|p| p.kind.is_buffer()).collect();
        for p in &buffers {
            if report.image_eligible.get(&p.name).copied().unwrap_or(false) {
                let kind = TuningKind::ImageMem(p.name.clone());
                params.push(TuningParameter { id: kind.id(), kind, domain: vec![0, 1] });
            }
        }
        for p in &buffers {
            if report.const_eligible.get(&p.name).copied().unwrap_or(false) {
                let kind = TuningKind::ConstantMem(p.name.clone());
                params.push(TuningParameter { id: kind.id(), kind, domain: vec![0, 1] });
            }
        }
        for p in &buffers {
            if report.local_eligible.get(&p.name).copied().unwrap_or(false) {
                let ext = report.extent(&p.name).expect("local-eligible images have an extent");
                tiles.insert(
                    p.name.clone(),
                    TileShape {
                        elem_bytes: p.kind.elem().size_bytes(),
                        halo_x: ext.width() as u64,
                        halo_y: ext.height() as u64,
                    },
                );
                let kind = TuningKind::LocalMem(p.name.clone());
                params.push(TuningParameter { id: kind.id(), kind, domain: vec![0, 1] });
            }
        }
        for l in &report.loops {
            if let Some(trip) = l.trip_count.filter(|t| *t > 0) {
                let kind = TuningKind::Unroll(l.id);
                params.push(TuningParameter { id: kind.id(), kind, domain: divisors(trip) });
            }
        }

        // `force` pins a parameter to a single value.
        for pragma in &ast.pragmas {
            let PragmaKind::Force { param, on } = &pragma.kind else { continue };
            let Some(tp) = params.iter_mut().find(|t| &t.id == param) else { continue };
            tp.domain = match (&tp.kind, on) {
                (TuningKind::Unroll(_), true) => vec![*tp.domain.last().expect("non-empty")],
                (_, true) => vec![1],
                (_, false) => vec![if matches!(tp.kind, TuningKind::Unroll(_)) { 1 } else { 0 }],
            };
        }

        TuningSpace {
            kernel: ast.name.clone(),
            params,
            max_work_group_size: profile.max_work_group_size,
            local_mem_bytes: profile.local_mem_bytes,
            tiles,
            valid_count: OnceLock::new(),
        }
    }

    pub fn param(&self, id: &str) -> Option<&TuningParameter> {
        self.params.iter().find(|p| p.id == id)
    }

    pub fn ids(&self) -> Vec<&str> {
        self.params.iter().map(|p| p.id.as_str()).collect()
    }

    /// Copy of the space with one parameter's domain narrowed to `values`.
    pub fn restrict(&self, id: &str, values: &[i64]) -> Result<TuningSpace, SpaceError> {
        let mut s = self.clone();
        s.valid_count = OnceLock::new();
        let p = s.params.iter_mut().find(|p| p.id == id).ok_or_else(|| SpaceError::UnknownParameter(id.into()))?;
        p.domain.retain(|v| values.contains(v));
        if p.domain.is_empty() {
            return Err(SpaceError::EmptyDomain(id.into()));
        }
        Ok(s)
    }

    pub fn product_size(&self) -> u64 {
        self.params.iter().fold(1u64, |acc, p| acc.saturating_mul(p.domain.len() as u64))
    }

    fn layout(&self) -> Layout {
        let pos = |id: &str| self.params.iter().position(|p| p.id == id);
        let mut memory: Vec<(String, Option<usize>, Option<usize>, Option<usize>)> = Vec::new();
        for (i, p) in self.params.iter().enumerate() {
            let (name, slot) = match &p.kind {
                TuningKind::ImageMem(n) => (n, 0),
                TuningKind::ConstantMem(n) => (n, 1),
                TuningKind::LocalMem(n) => (n, 2),
                _ => continue,
            };
            let entry = match memory.iter_mut().find(|m| &m.0 == name) {
                Some(e) => e,
                None => {
                    memory.push((name.clone(), None, None, None));
                    memory.last_mut().unwrap()
                }
            };
            match slot {
                0 => entry.1 = Some(i),
                1 => entry.2 = Some(i),
                _ => entry.3 = Some(i),
            }
        }
        Layout {
            wg_x: pos(WG_X),
            wg_y: pos(WG_Y),
            c_x: pos(COARSEN_X),
            c_y: pos(COARSEN_Y),
            memory,
        }
    }

    /// Cross-constraint violations of a complete value vector in parameter order.
    fn cross_violations(&self, layout: &Layout, v: &[i64], out: &mut Vec<Violation>) {
        let at = |i: Option<usize>| i.map_or(1, |i| v[i]);
        let (wx, wy, cx, cy) = (at(layout.wg_x), at(layout.wg_y), at(layout.c_x), at(layout.c_y));
        if (wx * wy) as u64 > self.max_work_group_size {
            out.push(Violation::WorkGroupSize);
        }
        let mut local_bytes = 0u64;
        let mut any_local = false;
        for (name, img, cst, loc) in &layout.memory {
            let on = |i: &Option<usize>| i.is_some_and(|i| v[i] != 0);
            let n = on(img) as u32 + on(cst) as u32 + on(loc) as u32;
            if n > 1 {
                out.push(Violation::ExclusiveMemorySpace(name.clone()));
            }
            if on(loc) {
                any_local = true;
                local_bytes += self.tiles[name].bytes(wx, wy, cx, cy);
            }
        }
        if any_local && local_bytes > self.local_mem_bytes {
            out.push(Violation::LocalMemorySize);
        }
    }

    fn is_valid_vector(&self, layout: &Layout, v: &[i64]) -> bool {
        let mut out = Vec::new();
        self.cross_violations(layout, v, &mut out);
        out.is_empty()
    }

    /// All constraint violations of `cfg`; empty means valid.
    pub fn validate(&self, cfg: &Configuration) -> Vec<Violation> {
        let mut out = Vec::new();
        for k in cfg.0.keys() {
            if self.param(k).is_none() {
                out.push(Violation::UnknownParameter(k.clone()));
            }
        }
        let mut values = Vec::with_capacity(self.params.len());
        let mut complete = true;
        for p in &self.params {
            match cfg.get(&p.id) {
                None => {
                    out.push(Violation::Incomplete(p.id.clone()));
                    complete = false;
                }
                Some(v) => {
                    if !p.domain.contains(&v) {
                        out.push(Violation::OutOfDomain(p.id.clone()));
                    }
                    values.push(v);
                }
            }
        }
        if complete {
            self.cross_violations(&self.layout(), &values, &mut out);
        }
        out
    }

    pub fn is_valid(&self, cfg: &Configuration) -> bool {
        self.validate(cfg).is_empty()
    }

    /// The untuned configuration: 16×16 work-groups, no coarsening, blocked
    /// mapping, global memory everywhere, no unrolling. Parameters pinned by
    /// `force` take their pinned value.
    pub fn default_config(&self) -> Configuration {
        let mut c = Configuration::default();
        for p in &self.params {
            let preferred = match p.kind {
                TuningKind::WorkGroupX | TuningKind::WorkGroupY => 16,
                TuningKind::CoarsenX | TuningKind::CoarsenY | TuningKind::Unroll(_) => 1,
                _ => 0,
            };
            let v = if p.domain.contains(&preferred) { preferred } else { p.domain[0] };
            c.set(p.id.clone(), v);
        }
        c
    }

    pub fn config_from_indices(&self, idx: &[usize]) -> Configuration {
        Configuration(self.params.iter().zip(idx).map(|(p, &i)| (p.id.clone(), p.domain[i])).collect())
    }

    /// Domain positions of each value, in parameter order. Comparing these
    /// vectors gives the lexicographic order of configurations.
    pub fn indices_of(&self, cfg: &Configuration) -> Option<Vec<usize>> {
        self.params.iter().map(|p| cfg.get(&p.id).and_then(|v| p.domain.iter().position(|d| *d == v))).collect()
    }

    /// Iterate valid configurations in lexicographic order.
    pub fn iter_valid(&self) -> ValidIter<'_> {
        ValidIter {
            space: self,
            layout: self.layout(),
            idx: vec![0; self.params.len()],
            values: self.params.iter().map(|p| p.domain[0]).collect(),
            done: self.params.iter().any(|p| p.domain.is_empty()),
        }
    }

    /// Number of valid configurations when the product is small enough to
    /// enumerate, else the product as an upper bound.
    pub fn count(&self) -> SpaceCount {
        let product = self.product_size();
        if product > ENUMERATION_CAP {
            return SpaceCount::UpperBound(product);
        }
        SpaceCount::Exact(*self.valid_count.get_or_init(|| self.iter_valid().count() as u64))
    }

    /// First `limit` valid configurations and the space count.
    pub fn enumerate(&self, limit: usize) -> (Vec<Configuration>, SpaceCount) {
        (self.iter_valid().take(limit).collect(), self.count())
    }

    /// `n` valid configurations drawn with a seeded generator. Draws are
    /// distinct unless the valid space has fewer than `n` members, in which
    /// case every valid configuration appears at least once.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<Configuration>, SpaceError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if let SpaceCount::Exact(total) = self.count() {
            if total == 0 {
                return Err(SpaceError::EmptySpace);
            }
            if total as usize <= n {
                let all: Vec<Configuration> = self.iter_valid().collect();
                let mut out = all.clone();
                while out.len() < n {
                    out.push(all[rng.gen_range(0..all.len())].clone());
                }
                return Ok(out);
            }
        }
        let layout = self.layout();
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        let mut out = Vec::with_capacity(n);
        let mut rejections = 0u64;
        let mut idx = vec![0usize; self.params.len()];
        let mut values = vec![0i64; self.params.len()];
        while out.len() < n {
            for (i, p) in self.params.iter().enumerate() {
                idx[i] = rng.gen_range(0..p.domain.len());
                values[i] = p.domain[idx[i]];
            }
            if !self.is_valid_vector(&layout, &values) || seen.contains(&idx) {
                rejections += 1;
                if rejections >= MAX_CONSECUTIVE_REJECTIONS {
                    return Err(SpaceError::EmptySpace);
                }
                continue;
            }
            rejections = 0;
            seen.insert(idx.clone());
            out.push(self.config_from_indices(&idx));
        }
        Ok(out)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let params: Vec<_> = self
            .params
            .iter()
            .map(|p| serde_json::json!({ "id": p.id, "kind": p.kind, "domain": p.domain }))
            .collect();
        serde_json::json!({
            "kernel": self.kernel,
            "params": params,
            "constraints": {
                "maxWorkGroupSize": self.max_work_group_size,
                "localMemBytes": self.local_mem_bytes,
                "tiles": self.tiles,
                "exclusiveMemorySpace": true,
            },
            "count": self.count(),
        })
    }
}

pub struct ValidIter<'a> {
    space: &'a TuningSpace,
    layout: Layout,
    idx: Vec<usize>,
    values: Vec<i64>,
    done: bool,
}

impl ValidIter<'_> {
    fn advance(&mut self) {
        // Last parameter varies fastest.
        for i in (0..self.idx.len()).rev() {
            let dom = &self.space.params[i].domain;
            self.idx[i] += 1;
            if self.idx[i] < dom.len() {
                self.values[i] = dom[self.idx[i]];
                return;
            }
            self.idx[i] = 0;
            self.values[i] = dom[0];
        }
        self.done = true;
    }
}

impl Iterator for ValidIter<'_> {
    type Item = Configuration;

    fn next(&mut self) -> Option<Configuration> {
        while !self.done {
            let ok = self.space.is_valid_vector(&self.layout, &self.values);
            let cfg = ok.then(|| self.space.config_from_indices(&self.idx));
            self.advance();
            if cfg.is_some() {
                return cfg;
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::analyze;
    use crate::corpus;
    use crate::frontend::compile_source;

    fn space_for(src: &str, profile: &DeviceProfile) -> TuningSpace {
        let k = compile_source(src).unwrap();
        let r = analyze(&k).unwrap();
        TuningSpace::build(&k, &r, profile)
    }

    fn blur_space() -> TuningSpace {
        space_for(corpus::BLUR, &DeviceProfile::gpu_like())
    }

    #[test]
    fn blur_parameters() {
        let s = blur_space();
        assert_eq!(
            s.ids(),
            ["wgX", "wgY", "cX", "cY", "interleaved", "imageMem.in", "imageMem.out", "localMem.in", "unroll.L1", "unroll.L2"]
        );
        assert_eq!(s.param("unroll.L1").unwrap().domain, [1, 3]);
        assert_eq!(s.param("wgX").unwrap().domain.len(), 10);
        assert_eq!(s.param("cY").unwrap().domain.last(), Some(&256));
    }

    #[test]
    fn no_eligible_arrays_gives_structural_space() {
        let s = space_for(
            "#pragma imcl grid(8, 8)\nvoid k(Image<float> a) { a[idx][idy] = a[idx * 2][idy]; }",
            &DeviceProfile::gpu_like(),
        );
        assert_eq!(s.ids(), ["wgX", "wgY", "cX", "cY", "interleaved"]);
    }

    #[test]
    fn work_group_limit() {
        let mut p = DeviceProfile::gpu_like();
        p.max_work_group_size = 256;
        let s = space_for(corpus::BLUR, &p);
        let cfg = s.default_config().with("wgX", 32).with("wgY", 16);
        assert_eq!(s.validate(&cfg), [Violation::WorkGroupSize]);
        let mut p = DeviceProfile::gpu_like();
        p.max_work_group_size = 512;
        let s = space_for(corpus::BLUR, &p);
        let cfg = s.default_config().with("wgX", 64).with("wgY", 16);
        assert_eq!(s.validate(&cfg).iter().map(|v| v.name()).collect::<Vec<_>>(), ["work-group-size"]);
    }

    #[test]
    fn exclusive_memory_and_incomplete() {
        let s = blur_space();
        let cfg = s.default_config().with("imageMem.in", 1).with("localMem.in", 1);
        assert_eq!(s.validate(&cfg), [Violation::ExclusiveMemorySpace("in".into())]);
        let mut cfg = s.default_config();
        cfg.0.remove("cX");
        cfg.set("wgX", 3);
        let names: Vec<String> = s.validate(&cfg).iter().map(|v| v.name()).collect();
        assert_eq!(names, ["domain(wgX)", "incomplete"]);
    }

    #[test]
    fn local_memory_limit() {
        let s = blur_space();
        // (32·16+2)·(32·1+2)·4 bytes = 69904 > 49152
        let cfg = s.default_config().with("wgX", 32).with("wgY", 32).with("cX", 16).with("localMem.in", 1);
        assert!(s.validate(&cfg).contains(&Violation::LocalMemorySize));
        let cfg = cfg.with("localMem.in", 0);
        assert!(s.is_valid(&cfg));
    }

    #[test]
    fn small_space_enumeration() {
        let s = blur_space()
            .restrict("wgX", &[1, 2])
            .unwrap()
            .restrict("wgY", &[1, 2, 4])
            .unwrap()
            .restrict("cX", &[1])
            .unwrap()
            .restrict("cY", &[1])
            .unwrap()
            .restrict("interleaved", &[0])
            .unwrap()
            .restrict("imageMem.in", &[0])
            .unwrap()
            .restrict("imageMem.out", &[0])
            .unwrap()
            .restrict("localMem.in", &[0])
            .unwrap()
            .restrict("unroll.L1", &[1])
            .unwrap()
            .restrict("unroll.L2", &[1, 3])
            .unwrap();
        let (first, count) = s.enumerate(5);
        assert_eq!(count, SpaceCount::Exact(12));
        assert_eq!(first.len(), 5);
        let all: Vec<_> = s.iter_valid().collect();
        assert_eq!(&all[..5], &first[..]);
        // Lexicographic: last parameter varies fastest.
        assert_eq!(all[0].get("unroll.L2"), Some(1));
        assert_eq!(all[1].get("unroll.L2"), Some(3));
        assert_eq!(all[2].get("wgY"), Some(2));
        let idx: Vec<_> = all.iter().map(|c| s.indices_of(c).unwrap()).collect();
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn blur_count_matches_brute_force() {
        let s = blur_space();
        let SpaceCount::Exact(n) = s.count() else { panic!("enumerable") };
        // Independent filter of the full product.
        let mut brute = 0u64;
        let p = |id: &str| s.param(id).unwrap().domain.clone();
        for wx in p("wgX") {
            for wy in p("wgY") {
                for cx in p("cX") {
                    for cy in p("cY") {
                        for img_in in [0, 1] {
                            for loc in [0, 1] {
                                if wx * wy > 1024 || img_in + loc > 1 {
                                    continue;
                                }
                                if loc == 1 && (wx * cx + 2) * (wy * cy + 2) * 4 > 49152 {
                                    continue;
                                }
                                // interleaved, imageMem.out, two unroll params.
                                brute += 2 * 2 * 2 * 2;
                            }
                        }
                    }
                }
            }
        }
        assert_eq!(n, brute);
    }

    #[test]
    fn sampling_is_deterministic_and_valid() {
        let s = blur_space();
        let a = s.sample(50, 7).unwrap();
        let b = s.sample(50, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|c| s.is_valid(c)));
        let uniq: HashSet<_> = a.iter().collect();
        assert_eq!(uniq.len(), 50);
        assert_ne!(a, s.sample(50, 8).unwrap());
    }

    #[test]
    fn oversampling_covers_every_configuration() {
        let s = blur_space().restrict("wgX", &[1, 2]).unwrap().restrict("wgY", &[1]).unwrap();
        let s = s.restrict("cX", &[1]).unwrap().restrict("cY", &[1, 2]).unwrap();
        let all: HashSet<_> = s.iter_valid().collect();
        let sample = s.sample(all.len() + 10, 3).unwrap();
        assert_eq!(sample.len(), all.len() + 10);
        let seen: HashSet<_> = sample.into_iter().collect();
        assert_eq!(seen, all);
    }

    #[test]
    fn empty_space_errors() {
        let mut p = DeviceProfile::gpu_like();
        p.max_work_group_size = 512;
        let s = space_for(corpus::BLUR, &p).restrict("wgX", &[512]).unwrap().restrict("wgY", &[2, 4]).unwrap();
        assert_eq!(s.count(), SpaceCount::Exact(0));
        assert_eq!(s.sample(3, 1), Err(SpaceError::EmptySpace));
    }

    #[test]
    fn force_pins_domains() {
        let src = format!("#pragma imcl force(localMem.in, on)\n#pragma imcl force(unroll.L2, on)\n{}", corpus::BLUR);
        let s = space_for(&src, &DeviceProfile::gpu_like());
        assert_eq!(s.param("localMem.in").unwrap().domain, [1]);
        assert_eq!(s.param("unroll.L2").unwrap().domain, [3]);
        assert_eq!(s.default_config().get("localMem.in"), Some(1));
    }

    #[test]
    fn configuration_json_roundtrip() {
        let s = blur_space();
        for c in s.sample(20, 1).unwrap() {
            let text = c.to_json();
            assert_eq!(Configuration::from_json(&text).unwrap(), c);
        }
        let c = Configuration::from_json(r#"{"wgX": 32, "localMem.in": 1}"#).unwrap();
        assert_eq!(c.get("localMem.in"), Some(1));
    }
}
