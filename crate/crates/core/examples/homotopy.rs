//! Eigenvalue loci from the passive reference to a destabilized two-bus system.

use pnpcert::network::{alpha_samples, bundled_network, homotopy_trajectory};

fn main() -> pnpcert::Result<()> {
    let t = bundled_network("two_bus_weak_damping")?;
    let pts = homotopy_trajectory(&t.passive_reference(1.0, 0.2), &t, &alpha_samples(21))?;
    for p in &pts {
        let abscissa = p.eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        let mark = if p.crossings() > 0 { "  <- crossing" } else { "" };
        println!("alpha {:.2}: abscissa {abscissa:+.3}{mark}", p.alpha);
    }
    Ok(())
}
