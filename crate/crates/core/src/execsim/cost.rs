//! Event counts and their conversion to simulated cost.

use super::profile::{CostWeights, DeviceProfile};
use serde::{Deserialize, Serialize};

/// Consecutive work-items whose global accesses may merge into one
/// transaction.
pub const WARP_WIDTH: usize = 16;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EventCounts {
    pub global_coalesced: u64,
    pub global_uncoalesced: u64,
    pub local_access: u64,
    pub image_access: u64,
    pub constant_access: u64,
    pub arithmetic_op: u64,
    pub loop_overhead: u64,
    pub barrier: u64,
}

impl EventCounts {
    pub fn weighted_sum(&self, w: &CostWeights) -> f64 {
        self.global_coalesced as f64 * w.global_coalesced
            + self.global_uncoalesced as f64 * w.global_uncoalesced
            + self.local_access as f64 * w.local_access
            + self.image_access as f64 * w.image_access
            + self.constant_access as f64 * w.constant_access
            + self.arithmetic_op as f64 * w.arithmetic_op
            + self.loop_overhead as f64 * w.loop_overhead
            + self.barrier as f64 * w.barrier
    }

    pub fn coalesced_fraction(&self) -> f64 {
        let total = self.global_coalesced + self.global_uncoalesced;
        if total == 0 {
            0.0
        } else {
            self.global_coalesced as f64 / total as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CostReport {
    pub profile: String,
    pub total_cost: f64,
    pub event_counts: EventCounts,
    pub coalesced_fraction: f64,
    pub occupancy_penalty: f64,
}

impl CostReport {
    /// Cost of a launch with the given events, local memory per group and
    /// work-group size.
    pub fn new(counts: EventCounts, profile: &DeviceProfile, local_bytes: u64, wg_size: u64) -> CostReport {
        let penalty = profile.occupancy_penalty(local_bytes, wg_size);
        CostReport {
            profile: profile.name.clone(),
            total_cost: penalty * counts.weighted_sum(&profile.weights),
            event_counts: counts,
            coalesced_fraction: counts.coalesced_fraction(),
            occupancy_penalty: penalty,
        }
    }
}

/// Classify the global accesses of one work-group. `per_item[i]` holds the
/// (site, address) sequence of the work-item with linear local id `i`. The
/// k-th accesses of a full warp coalesce when they come from one site at
/// consecutive addresses.
pub(crate) fn classify_group(per_item: &[Vec<(u32, i64)>], counts: &mut EventCounts) {
    for warp in per_item.chunks(WARP_WIDTH) {
        let longest = warp.iter().map(Vec::len).max().unwrap_or(0);
        for k in 0..longest {
            let present = warp.iter().filter(|a| a.len() > k).count() as u64;
            let coalesced = warp.len() == WARP_WIDTH && present == WARP_WIDTH as u64 && {
                let (site, base) = warp[0][k];
                warp.iter().enumerate().all(|(i, a)| a[k] == (site, base + i as i64))
            };
            if coalesced {
                counts.global_coalesced += present;
            } else {
                counts.global_uncoalesced += present;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn total_is_recomputable() {
        let c = EventCounts { global_coalesced: 10, global_uncoalesced: 3, arithmetic_op: 7, barrier: 1, ..Default::default() };
        let p = DeviceProfile::gpu_like();
        let r = CostReport::new(c, &p, 0, 256);
        assert_eq!(r.total_cost, 10.0 + 24.0 + 0.7 + 4.0);
        assert!((r.coalesced_fraction - 10.0 / 13.0).abs() < 1e-12);
    }

    #[test]
    fn warp_classification() {
        let consecutive: Vec<Vec<(u32, i64)>> = (0..16).map(|i| vec![(0, 100 + i), (1, i * 4)]).collect();
        let mut c = EventCounts::default();
        classify_group(&consecutive, &mut c);
        assert_eq!((c.global_coalesced, c.global_uncoalesced), (16, 16));
        let partial: Vec<Vec<(u32, i64)>> = (0..8).map(|i| vec![(0, i)]).collect();
        let mut c = EventCounts::default();
        classify_group(&partial, &mut c);
        assert_eq!((c.global_coalesced, c.global_uncoalesced), (0, 8));
    }
}
