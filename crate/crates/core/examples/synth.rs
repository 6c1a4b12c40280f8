//! Low-order multiplier synthesis for the two-bus components.
//!
//! Uses a coarse grid and few starts so it finishes in seconds; the command
//! line defaults (order 6, 16 starts, full grid) are what certify the system.

use pnpcert::network::{bundled_network, component_admittances, device_models};
use pnpcert::synthesis::{synthesize, SynthesisConfig};
use pnpcert::FrequencyGrid;

fn main() -> pnpcert::Result<()> {
    let t = bundled_network("two_bus")?;
    let comps = component_admittances(&t, &device_models(&t)?);
    let cfg = SynthesisConfig {
        grid: FrequencyGrid::with_bounds(1e-2, 1e5, 300)?,
        starts: 2,
        max_iters: 60,
        ..SynthesisConfig::default()
    };
    let r = synthesize(&comps, 3, &cfg)?;
    println!("verified objective {:.9} (success: {})", r.verified_objective, r.success);
    for c in &r.components {
        println!("  {}: {:.9} at {:.3e} rad/s", c.id, c.verified_norm, c.verified_omega);
    }
    Ok(())
}
