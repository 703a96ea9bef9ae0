//! Synthetic device descriptions driving the cost model and space limits.

use serde::{Deserialize, Serialize};
use std::path::Path;

/// Cost units charged per event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CostWeights {
    pub global_coalesced: f64,
    pub global_uncoalesced: f64,
    pub local_access: f64,
    pub image_access: f64,
    pub constant_access: f64,
    pub arithmetic_op: f64,
    pub loop_overhead: f64,
    pub barrier: f64,
}

/// Slowdown from low occupancy when work-groups use local memory: the
/// number of resident work-items is limited by how many groups' tiles fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct OccupancyModel {
    /// Resident work-items needed to hide latency fully.
    pub target_work_items: f64,
    pub max_penalty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DeviceProfile {
    pub name: String,
    pub max_work_group_size: u64,
    pub local_mem_bytes: u64,
    pub const_threshold_bytes: u64,
    pub weights: CostWeights,
    #[serde(default)]
    pub occupancy: Option<OccupancyModel>,
}

#[derive(Debug, thiserror::Error)]
pub enum ProfileError {
    #[error("cannot read profile {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid profile {path}: {source}")]
    Parse { path: String, source: serde_json::Error },
    #[error("invalid profile {name}: {message}")]
    Invalid { name: String, message: String },
    #[error("unknown builtin profile `{0}` (expected gpu-like or cpu-like)")]
    UnknownBuiltin(String),
}

impl DeviceProfile {
    /// A discrete GPU: uncoalesced global access is expensive, local and
    /// image memory are cheap, and large local tiles reduce occupancy.
    pub fn gpu_like() -> Self {
        DeviceProfile {
            name: "gpu-like".into(),
            max_work_group_size: 1024,
            local_mem_bytes: 49152,
            const_threshold_bytes: 4096,
            weights: CostWeights {
                global_coalesced: 1.0,
                global_uncoalesced: 8.0,
                local_access: 0.25,
                image_access: 0.5,
                constant_access: 0.25,
                arithmetic_op: 0.1,
                loop_overhead: 0.5,
                barrier: 4.0,
            },
            occupancy: Some(OccupancyModel { target_work_items: 1024.0, max_penalty: 4.0 }),
        }
    }

    /// A multicore CPU: caches make every memory space cost the same, image
    /// objects are emulated in software, and barriers are expensive.
    pub fn cpu_like() -> Self {
        DeviceProfile {
            name: "cpu-like".into(),
            max_work_group_size: 8192,
            local_mem_bytes: 32768,
            const_threshold_bytes: 4096,
            weights: CostWeights {
                global_coalesced: 1.0,
                global_uncoalesced: 1.0,
                local_access: 1.0,
                image_access: 3.0,
                constant_access: 1.0,
                arithmetic_op: 0.1,
                loop_overhead: 0.05,
                barrier: 50.0,
            },
            occupancy: None,
        }
    }

    pub fn builtin(name: &str) -> Result<Self, ProfileError> {
        match name {
            "gpu-like" => Ok(Self::gpu_like()),
            "cpu-like" => Ok(Self::cpu_like()),
            other => Err(ProfileError::UnknownBuiltin(other.to_string())),
        }
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self, ProfileError> {
        let p: DeviceProfile =
            serde_json::from_str(text).map_err(|source| ProfileError::Parse { path: origin.to_string(), source })?;
        p.check()?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self, ProfileError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ProfileError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text, &path.display().to_string())
    }

    fn check(&self) -> Result<(), ProfileError> {
        let w = &self.weights;
        let all = [
            w.global_coalesced,
            w.global_uncoalesced,
            w.local_access,
            w.image_access,
            w.constant_access,
            w.arithmetic_op,
            w.loop_overhead,
            w.barrier,
        ];
        let bad = |m: &str| Err(ProfileError::Invalid { name: self.name.clone(), message: m.to_string() });
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return bad("weights must be finite and nonnegative");
        }
        if self.max_work_group_size == 0 {
            return bad("maxWorkGroupSize must be positive");
        }
        if let Some(o) = &self.occupancy {
            if !(o.target_work_items.is_finite() && o.max_penalty.is_finite() && o.max_penalty >= 1.0) {
                return bad("occupancy model must be finite with maxPenalty >= 1");
            }
        }
        Ok(())
    }

    /// Cost multiplier (≥ 1) for a launch using `local_bytes` of local memory
    /// per work-group of `wg_size` work-items.
    pub fn occupancy_penalty(&self, local_bytes: u64, wg_size: u64) -> f64 {
        let Some(o) = &self.occupancy else { return 1.0 };
        if local_bytes == 0 || wg_size == 0 {
            return 1.0;
        }
        let groups = (self.local_mem_bytes / local_bytes).max(1);
        let resident = (groups * wg_size) as f64;
        (o.target_work_items / resident).clamp(1.0, o.max_penalty)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_profiles_roundtrip() {
        for p in [DeviceProfile::gpu_like(), DeviceProfile::cpu_like()] {
            let back = DeviceProfile::from_json(&p.to_json(), "mem").unwrap();
            assert_eq!(back, p);
        }
    }

    #[test]
    fn no_local_memory_means_no_penalty() {
        let p = DeviceProfile::gpu_like();
        for wg in [1, 16, 256, 1024] {
            assert_eq!(p.occupancy_penalty(0, wg), 1.0);
        }
    }

    #[test]
    fn penalty_grows_with_tile_size() {
        let p = DeviceProfile::gpu_like();
        // 48 KiB / 1296 B = 37 groups of 16 → 592 resident items.
        let small = p.occupancy_penalty(18 * 18 * 4, 16);
        assert!((small - 1024.0 / 592.0).abs() < 1e-12);
        let large = p.occupancy_penalty(40000, 16);
        assert_eq!(large, 4.0);
        assert_eq!(p.occupancy_penalty(1024, 256), 1.0);
    }

    #[test]
    fn rejects_negative_weights() {
        let mut p = DeviceProfile::gpu_like();
        p.weights.barrier = -1.0;
        assert!(DeviceProfile::from_json(&serde_json::to_string(&p).unwrap(), "mem").is_err());
    }
}
