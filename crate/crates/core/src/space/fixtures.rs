//! Published winning configurations for the convolution and Sobel
//! benchmarks on four devices, expressed over this crate's parameter spaces.

use super::{Configuration, TuningKind, TuningSpace};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Device {
    AmdHd7970,
    NvidiaGtx960,
    NvidiaK40,
    IntelI7,
}

impl Device {
    pub const ALL: [Device; 4] = [Device::AmdHd7970, Device::NvidiaGtx960, Device::NvidiaK40, Device::IntelI7];

    pub fn name(self) -> &'static str {
        match self {
            Device::AmdHd7970 => "amd-hd7970",
            Device::NvidiaGtx960 => "nvidia-gtx960",
            Device::NvidiaK40 => "nvidia-k40",
            Device::IntelI7 => "intel-i7",
        }
    }
}

/// One column of a results table. Memory flags are per table row and are
/// spread over the arrays of the kernel by [`TableColumn::config`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TableColumn {
    pub c_x: i64,
    pub c_y: i64,
    pub wg_x: i64,
    pub wg_y: i64,
    pub interleaved: bool,
    pub image_mem: bool,
    pub local_mem: bool,
    pub constant_mem: bool,
    /// Per loop in source order: fully unrolled or not.
    pub unroll: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pass {
    Row,
    Column,
}

#[allow(clippy::too_many_arguments)]
fn col(c: [i64; 4], interleaved: i64, image: i64, local: i64, constant: i64, unroll: &[i64]) -> TableColumn {
    TableColumn {
        c_x: c[0],
        c_y: c[1],
        wg_x: c[2],
        wg_y: c[3],
        interleaved: interleaved == 1,
        image_mem: image == 1,
        local_mem: local == 1,
        constant_mem: constant == 1,
        unroll: unroll.iter().map(|u| *u == 1).collect(),
    }
}

/// 5×5 non-separable convolution (`corpus::CONV5X5`).
pub fn nonseparable_convolution(d: Device) -> TableColumn {
    match d {
        Device::AmdHd7970 => col([4, 16, 64, 4], 0, 0, 0, 1, &[1, 0]),
        Device::NvidiaGtx960 => col([4, 4, 8, 32], 1, 0, 1, 1, &[1, 1]),
        Device::NvidiaK40 => col([4, 8, 32, 4], 0, 1, 0, 1, &[1, 1]),
        Device::IntelI7 => col([256, 2, 2, 8], 1, 0, 0, 1, &[1, 1]),
    }
}

/// Row and column passes of the separable convolution (`corpus::CONV_ROW`,
/// `corpus::CONV_COL`).
pub fn separable_convolution(d: Device, pass: Pass) -> TableColumn {
    use Pass::*;
    match (d, pass) {
        (Device::AmdHd7970, Row) => col([4, 1, 64, 4], 1, 0, 1, 1, &[0]),
        (Device::AmdHd7970, Column) => col([2, 2, 16, 16], 1, 1, 1, 1, &[1]),
        (Device::NvidiaGtx960, Row) => col([1, 1, 16, 16], 0, 1, 0, 1, &[0]),
        (Device::NvidiaGtx960, Column) => col([1, 2, 64, 4], 0, 0, 0, 1, &[0]),
        (Device::NvidiaK40, Row) => col([2, 1, 16, 16], 0, 1, 0, 1, &[1]),
        (Device::NvidiaK40, Column) => col([2, 2, 16, 16], 0, 1, 0, 1, &[0]),
        (Device::IntelI7, Row) => col([128, 1, 8, 1], 1, 0, 0, 1, &[1]),
        (Device::IntelI7, Column) => col([32, 1, 16, 2], 1, 0, 0, 1, &[0]),
    }
}

/// Gradient stage of the Harris pipeline (`corpus::SOBEL`).
pub fn sobel(d: Device) -> TableColumn {
    match d {
        Device::AmdHd7970 => col([1, 1, 128, 1], 0, 0, 0, 0, &[]),
        Device::NvidiaGtx960 => col([4, 2, 32, 2], 1, 0, 1, 0, &[]),
        Device::NvidiaK40 => col([1, 4, 32, 4], 0, 1, 0, 0, &[]),
        Device::IntelI7 => col([32, 4, 64, 1], 0, 0, 0, 0, &[]),
    }
}

impl TableColumn {
    /// Concrete configuration over `space`. The image flag applies to every
    /// image-eligible array except those staged in local memory; unrolled
    /// loops take their full trip count.
    pub fn config(&self, space: &TuningSpace) -> Configuration {
        let mut c = Configuration::default();
        let staged = |p: &str| self.local_mem && space.param(&TuningKind::LocalMem(p.into()).id()).is_some();
        for p in &space.params {
            let v = match &p.kind {
                TuningKind::WorkGroupX => self.wg_x,
                TuningKind::WorkGroupY => self.wg_y,
                TuningKind::CoarsenX => self.c_x,
                TuningKind::CoarsenY => self.c_y,
                TuningKind::Interleaved => self.interleaved as i64,
                TuningKind::ImageMem(a) => (self.image_mem && !staged(a)) as i64,
                TuningKind::ConstantMem(_) => self.constant_mem as i64,
                TuningKind::LocalMem(_) => self.local_mem as i64,
                TuningKind::Unroll(l) => {
                    let full = self.unroll.get(l.0 as usize - 1).copied().unwrap_or(false);
                    if full {
                        *p.domain.last().expect("non-empty domain")
                    } else {
                        1
                    }
                }
            };
            c.set(p.id.clone(), v);
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::analyze;
    use crate::corpus;
    use crate::execsim::profile::DeviceProfile;
    use crate::frontend::compile_source;

    fn space(src: &str) -> TuningSpace {
        let k = compile_source(src).unwrap();
        TuningSpace::build(&k, &analyze(&k).unwrap(), &DeviceProfile::gpu_like())
    }

    #[test]
    fn k40_nonseparable_config() {
        let s = space(corpus::CONV5X5);
        let c = nonseparable_convolution(Device::NvidiaK40).config(&s);
        let expect = Configuration::from_json(
            r#"{"wgX":32,"wgY":4,"cX":4,"cY":8,"interleaved":0,"imageMem.in":1,"imageMem.out":1,
                "constantMem.filter":1,"localMem.in":0,"unroll.L1":5,"unroll.L2":5}"#,
        )
        .unwrap();
        assert_eq!(c, expect);
        assert!(s.is_valid(&c));
    }

    #[test]
    fn every_fixture_validates() {
        let conv = space(corpus::CONV5X5);
        let row = space(corpus::CONV_ROW);
        let column = space(corpus::CONV_COL);
        let sob = space(corpus::SOBEL);
        for d in Device::ALL {
            for (s, t) in [
                (&conv, nonseparable_convolution(d)),
                (&row, separable_convolution(d, Pass::Row)),
                (&column, separable_convolution(d, Pass::Column)),
                (&sob, sobel(d)),
            ] {
                let c = t.config(s);
                assert_eq!(s.validate(&c), [], "{} {:?}", d.name(), t);
            }
        }
    }

    #[test]
    fn local_staging_keeps_output_in_image_memory() {
        let s = space(corpus::CONV_COL);
        let c = separable_convolution(Device::AmdHd7970, Pass::Column).config(&s);
        assert_eq!(c.get("localMem.in"), Some(1));
        assert_eq!(c.get("imageMem.in"), Some(0));
        assert_eq!(c.get("imageMem.out"), Some(1));
    }
}
