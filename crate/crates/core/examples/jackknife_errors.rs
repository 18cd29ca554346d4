//! Simulated projective measurements with bit-flip noise and jackknife
//! errors on the correlator.

use qcrit::dynamics::{net_correlator, sample_measurements, Axis, Basis, SpinState};
use qcrit::stats::{jackknife_correlator, JackknifeMode};

fn main() -> qcrit::Result<()> {
    let n = 8;
    let ghz = SpinState::ghz_x(n, Basis::Full)?;
    println!("exact <C_x^2> = {:.3}", net_correlator(&ghz, Axis::X));
    for eps in [0.0, 0.05, 0.1] {
        let shots = sample_measurements(&ghz, Axis::X, 2000, eps, 9)?;
        let jk = jackknife_correlator(&shots, JackknifeMode::Standard);
        println!("eps = {eps:.2}: {:.3} +- {:.3}", jk.estimate, jk.stderr);
    }
    Ok(())
}
