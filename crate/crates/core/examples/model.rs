//! Frequency response and Hermitian margin of the two-bus components.

use pnpcert::components::{gfm_default_admittance, line_admittance, GfmParams, LineParams, OMEGA0_50HZ};
use pnpcert::lti::hermitian_min_eig;

fn main() -> pnpcert::Result<()> {
    let gfm = gfm_default_admittance(&GfmParams::default())?;
    let line = line_admittance(&LineParams::from_rx(0.01, 0.015, OMEGA0_50HZ)?)?;
    println!("inverter: {} states, line: {} states", gfm.order(), line.order());
    println!("{:>10} {:>14} {:>14}", "omega", "gfm", "line");
    for w in [0.1, 1.0, 10.0, 100.0, 314.16, 1e3, 1e4] {
        let g = hermitian_min_eig(&gfm.freq_response(w)?);
        let l = hermitian_min_eig(&line.freq_response(w)?);
        println!("{w:>10.2} {g:>14.6e} {l:>14.6e}");
    }
    Ok(())
}
