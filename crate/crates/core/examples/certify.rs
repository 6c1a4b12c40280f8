//! Per-component certificate with the piecewise rotation multiplier.

use pnpcert::certificate::{certify_system, DEFAULT_EPS};
use pnpcert::components::{MultiplierFilter, OMEGA0_50HZ};
use pnpcert::network::{bundled_network, component_admittances, device_models};
use pnpcert::FrequencyGrid;

fn main() -> pnpcert::Result<()> {
    let t = bundled_network("two_bus")?;
    let comps = component_admittances(&t, &device_models(&t)?);
    let m = MultiplierFilter::piecewise(OMEGA0_50HZ)?;
    let cert = certify_system(&m, &comps, &FrequencyGrid::default_grid(), DEFAULT_EPS)?;
    for r in &cert.reports {
        println!("{:>10}: min eig {:+.4e} at {:.4e} rad/s -> {}", r.id, r.min_eig, r.argmin_omega, r.pass);
    }
    println!("certificate passes: {}", cert.pass);
    Ok(())
}
