//! Two-phase tuning of blur under the simulated gpu-like cost, with a
//! reduced budget.
//!
//! Usage: tune_blur [profile]

use imagecl::autotuner::{tune, Budget};
use imagecl::cli::tune_report;
use imagecl::corpus;
use imagecl::execsim::DeviceProfile;
use imagecl::pipeline::{Prepared, SimulatedCost};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let profile = DeviceProfile::builtin(&std::env::args().nth(1).unwrap_or_else(|| "gpu-like".into()))?;
    let p = Prepared::new(corpus::BLUR, &profile)?;
    let grid = [32, 32];
    let eval = SimulatedCost::new(&p, grid, 7);
    let r = tune(&p.space, &eval, Budget { phase1: 60, top_k: 10, seed: 7 })?;
    print!("{}", tune_report(&r, "blur", &format!("simulated cost on {} (32x32)", profile.name)));
    Ok(())
}
