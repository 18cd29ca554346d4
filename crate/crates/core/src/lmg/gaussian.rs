//! Quadratic (Holstein-Primakoff) description of the soft mode.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// H = p^2/(2m) + m Omega^2 x^2/2 + u x^4/(4N).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams {
    /// 1/m = 2(B - gamma_y).
    pub mass_inv: f64,
    /// Omega^2 = 4(B - gamma_x)(B - gamma_y).
    pub omega_sq: f64,
    /// 2 gamma_x.
    pub u: f64,
}

impl OscillatorParams {
    pub fn from_lmg(gamma_x: f64, gamma_y: f64, b: f64) -> Self {
        OscillatorParams {
            mass_inv: 2.0 * (b - gamma_y),
            omega_sq: 4.0 * (b - gamma_x) * (b - gamma_y),
            u: 2.0 * gamma_x,
        }
    }

    pub fn mass(&self) -> f64 {
        1.0 / self.mass_inv
    }

    pub fn omega(&self) -> f64 {
        self.omega_sq.sqrt()
    }

    fn check_disordered(&self, what: &str) -> Result<()> {
        if !(self.mass_inv > 0.0) {
            return Err(Error::invalid(format!("{what}: mass must be positive (disordered phase)")));
        }
        if !(self.omega_sq > 0.0) {
            return Err(Error::invalid(format!(
                "{what}: Omega^2 = {} gives divergent fluctuations at or beyond the critical point",
                self.omega_sq
            )));
        }
        Ok(())
    }
}

/// Long-time average of <x^2> after the sudden quench pre -> post, starting
/// from the ground state of `pre`. Half of it is <S_x^2>/N.
pub fn gaussian_quench_fluct(pre: &OscillatorParams, post: &OscillatorParams) -> Result<f64> {
    pre.check_disordered("pre-quench")?;
    post.check_disordered("post-quench")?;
    let (m0, w0) = (pre.mass(), pre.omega());
    let (m, w2) = (post.mass(), post.omega_sq);
    let half = m0 * w0 / (8.0 * m * m * w2) * (1.0 + m * m * w2 / (m0 * m0 * w0 * w0));
    Ok(2.0 * half)
}

/// T_eff = m0 Omega0 / (4 m).
pub fn effective_temperature(pre: &OscillatorParams, post: &OscillatorParams) -> Result<f64> {
    pre.check_disordered("pre-quench")?;
    if !(post.mass_inv > 0.0) {
        return Err(Error::invalid("post-quench mass must be positive"));
    }
    Ok(pre.mass() * pre.omega() / (4.0 * post.mass()))
}

/// T_eff,2 = m0 Omega0 / (8 m2 m1^2 Omega1^2) after two quenches.
pub fn effective_temperature_double(p0: &OscillatorParams, p1: &OscillatorParams, p2: &OscillatorParams) -> Result<f64> {
    p0.check_disordered("pre-quench")?;
    p1.check_disordered("first quench")?;
    if !(p2.mass_inv > 0.0) {
        return Err(Error::invalid("second-quench mass must be positive"));
    }
    let m1 = p1.mass();
    Ok(p0.mass() * p0.omega() / (8.0 * p2.mass() * m1 * m1 * p1.omega_sq))
}

/// (alpha_k, zeta_k) = (1 - 2^-k, 2^-(k+1)) after k critical quenches.
pub fn exponent_hierarchy(k: u32) -> (f64, f64) {
    let p = 0.5f64.powi(k as i32);
    (1.0 - p, 0.5 * p)
}

/// The same exponents from alpha_{k+1} = (1 + alpha_k)/2,
/// zeta_{k+1} = (1 - alpha_k)/4, alpha_0 = 0.
pub fn exponent_hierarchy_recursive(k: u32) -> (f64, f64) {
    let (mut a, mut z) = (0.0, 0.5);
    for _ in 0..k {
        (a, z) = ((1.0 + a) / 2.0, (1.0 - a) / 4.0);
    }
    (a, z)
}

/// Scaling exponent of the effective temperature, alpha_k - 2 zeta_k.
pub fn teff_exponent(k: u32) -> f64 {
    let (a, z) = exponent_hierarchy(k);
    a - 2.0 * z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_quench_gives_ground_state_width() {
        let p = OscillatorParams::from_lmg(0.3, 0.1, 1.4);
        let x2 = gaussian_quench_fluct(&p, &p).unwrap();
        assert!((x2 - 1.0 / (2.0 * p.mass() * p.omega())).abs() < 1e-14);
    }

    #[test]
    fn harmonic_time_average_oracle() {
        // x(t) = x0 cos wt + p0/(m w) sin wt averaged over a period, with the
        // ground-state moments of the pre-quench oscillator
        let pre = OscillatorParams::from_lmg(0.0, 0.0, 1.0);
        let post = OscillatorParams::from_lmg(1.0, 0.0, 1.2);
        let x0 = 1.0 / (2.0 * pre.mass() * pre.omega());
        let p0 = pre.mass() * pre.omega() / 2.0;
        let (m, w) = (post.mass(), post.omega());
        let k = 20_000;
        let avg: f64 = (0..k)
            .map(|i| {
                let th = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
                x0 * th.cos().powi(2) + p0 / (m * w).powi(2) * th.sin().powi(2)
            })
            .sum::<f64>()
            / k as f64;
        assert!((gaussian_quench_fluct(&pre, &post).unwrap() - avg).abs() < 1e-12);
    }

    #[test]
    fn diverges_as_inverse_omega_squared() {
        let pre = OscillatorParams::from_lmg(0.0, 0.0, 1.0);
        let a = gaussian_quench_fluct(&pre, &OscillatorParams::from_lmg(1.0, 0.0, 1.0 + 1e-4)).unwrap();
        let b = gaussian_quench_fluct(&pre, &OscillatorParams::from_lmg(1.0, 0.0, 1.0 + 1e-5)).unwrap();
        assert!((a / b - 0.1).abs() < 1e-3);
        assert!(gaussian_quench_fluct(&pre, &OscillatorParams::from_lmg(1.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn effective_temperature_examples() {
        let pre = OscillatorParams::from_lmg(0.0, 0.0, 1.0);
        assert_eq!(effective_temperature(&pre, &OscillatorParams::from_lmg(1.0, 0.0, 1.0)).unwrap(), 0.5);
        let iso = OscillatorParams::from_lmg(0.4, 0.4, 2.0);
        assert!((effective_temperature(&iso, &OscillatorParams::from_lmg(1.0, 0.0, 1.3)).unwrap() - 0.65).abs() < 1e-14);
        let b0 = 1.7;
        let closed = 0.6 * ((b0 - 0.5f64) / (b0 - 0.2)).sqrt();
        let t = effective_temperature(&OscillatorParams::from_lmg(0.5, 0.2, b0), &OscillatorParams::from_lmg(1.0, 0.0, 1.2)).unwrap();
        assert!((t - closed).abs() < 1e-14);
    }

    #[test]
    fn double_quench_temperature_diverges() {
        let p0 = OscillatorParams::from_lmg(0.0, 0.0, 1.0);
        let p2 = OscillatorParams::from_lmg(0.0, 1.0, 1.05);
        let t: Vec<f64> = [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|d| effective_temperature_double(&p0, &OscillatorParams::from_lmg(1.0, 0.0, 1.0 + d), &p2).unwrap())
            .collect();
        assert!(t[1] > 9.0 * t[0] && t[2] > 9.0 * t[1]);
    }

    #[test]
    fn hierarchy() {
        assert_eq!(exponent_hierarchy(1), (0.5, 0.25));
        assert_eq!(exponent_hierarchy(2), (0.75, 0.125));
        let (a, z) = exponent_hierarchy(60);
        assert!((1.0 - a) < 1e-15 && z < 1e-15);
        for k in 0..=20 {
            assert_eq!(exponent_hierarchy(k), exponent_hierarchy_recursive(k));
            assert_eq!(teff_exponent(k), 1.0 - 2f64.powi(1 - k as i32));
        }
    }
}
