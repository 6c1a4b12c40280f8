//! Certificate versus eigenvalue verdicts over a small droop grid.

use pnpcert::certificate::DEFAULT_EPS;
use pnpcert::components::{MultiplierFilter, OMEGA0_50HZ};
use pnpcert::network::{bundled_network, droop_sweep};
use pnpcert::FrequencyGrid;

fn main() -> pnpcert::Result<()> {
    let t = bundled_network("two_bus")?;
    let m = MultiplierFilter::piecewise(OMEGA0_50HZ)?;
    let grid = [0.005, 0.01, 0.02, 0.03];
    let pts = droop_sweep(&t, &m, &grid, &grid, &FrequencyGrid::default_grid(), DEFAULT_EPS)?;
    println!("{:>6} {:>6} {:>9} {:>7} {:>10}", "m_p", "n_q", "certified", "stable", "abscissa");
    for p in pts {
        println!("{:>6.3} {:>6.3} {:>9} {:>7} {:>10.3}", p.m_p, p.n_q, p.certified, p.stable, p.abscissa);
    }
    Ok(())
}
