//! Truncated-Wigner average of x^2 for the anharmonic soft mode: Monte
//! Carlo over initial momenta against the closed form.

use qcrit::lmg::{twa_ensemble_avg, twa_monte_carlo, twa_time_avg, twa_trajectory, SemiclassicalParams};

fn main() -> qcrit::Result<()> {
    let sc = SemiclassicalParams::new(0.2, 0.5, 1.0)?;
    let v = 0.8;
    for t in [0.0, 1.0, 2.0, 4.0] {
        println!("x_v({t}) = {:+.5}", twa_trajectory(&sc, v, t)?);
    }
    println!("time average at v = {v}: {:.5}", twa_time_avg(&sc, v));
    for samples in [1_000, 10_000, 100_000] {
        let mc = twa_monte_carlo(&sc, samples, 1)?;
        println!("{samples:>7} samples: {:.5} +- {:.5}", mc.mean, mc.stderr);
    }
    println!("closed form:     {:.5}", twa_ensemble_avg(&sc)?);
    Ok(())
}
