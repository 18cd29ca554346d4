//! Trapped-ion couplings for a ten-ion chain and their decay fits.

use qcrit::interaction::{fit_power_exp, fit_power_law, ion_chain_jij, radial_profile, TrapParams};

fn main() -> qcrit::Result<()> {
    let trap = TrapParams::with_detuning(10, 4.7e6, 0.53e6, 56e3, 1.0e6, 14e3);
    let j = ion_chain_jij(&trap)?;
    println!("N = {}, kac = {:.4e} Hz", j.n(), j.kac());

    let prof = radial_profile(&j);
    for (r, v) in &prof {
        println!("  r = {r:2}  J(r) = {v:.4e}");
    }
    let pl = fit_power_law(&prof)?;
    let pe = fit_power_exp(&prof)?;
    println!("power law      p = {:.3}              residual {:.2e}", pl.p, pl.residual);
    println!("power x exp    p = {:.3}, k = {:.3}   residual {:.2e}", pe.p, pe.k.unwrap_or(0.0), pe.residual);
    Ok(())
}
