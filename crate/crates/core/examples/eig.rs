//! Spectra of the 39-bus system for random inverter allocations.

use pnpcert::network::{bundled_network, random_allocation_experiment, STABILITY_MARGIN};

fn main() -> pnpcert::Result<()> {
    let t = bundled_network("ieee39")?;
    for n in [8, 10] {
        let reps = random_allocation_experiment(&t, 5, n, 7, STABILITY_MARGIN)?;
        for r in reps {
            println!("{n} inverters at {:?}: abscissa {:.4} ({} modes)", r.allocation, r.abscissa, r.eigenvalues.len());
        }
    }
    Ok(())
}
