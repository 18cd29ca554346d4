//! Second critical quench launched at the first-quench peak, against the
//! exponent hierarchy.

use qcrit::collapse::{fit_peak_scaling, PeakMode};
use qcrit::dynamics::{find_peak, uniform_grid};
use qcrit::lmg::{double_quench_series, exponent_hierarchy, LmgParams, SwitchRule};

fn main() -> qcrit::Result<()> {
    let mut peaks = Vec::new();
    for n in [128usize, 256, 512, 1024] {
        let times = uniform_grid(4.0 * (n as f64).powf(0.125), 0.01)?;
        let rule = SwitchRule::FirstPeak { dt: 0.01, horizon: 20.0 };
        let d = double_quench_series(&LmgParams::paramagnet(n, 1.0)?, &LmgParams::critical_x(n)?, &LmgParams::critical_y(n)?, rule, &times)?;
        let p = find_peak(&d.second)?;
        println!("N = {n:5}  switch Jt = {:.3}  peak C_y^2 = {:.3} at Jt = {:.3}", d.switch_time, p.value, p.time);
        peaks.push((n, p.value));
    }
    let fit = fit_peak_scaling(&peaks, PeakMode::Raw)?;
    for k in 1..=3 {
        let (a, z) = exponent_hierarchy(k);
        println!("k = {k}: alpha = {a}, zeta = {z}");
    }
    println!("fitted alpha_2 = {:.4} +- {:.4}", fit.alpha, fit.d_alpha);
    Ok(())
}
