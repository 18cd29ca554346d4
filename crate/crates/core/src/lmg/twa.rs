//! Semiclassical soft-mode dynamics x'' + r x + u x^3 = 0, x(0) = 0, x'(0) = v,
//! averaged over v ~ exp(-D v^2).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::special::{ellipke, jacobi_sn, tricomi_u};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiclassicalParams {
    /// Stiffness m Omega^2 (with m = 1).
    pub r: f64,
    /// Quartic coefficient with the 1/N absorbed.
    pub u: f64,
    /// Width parameter of the initial velocity distribution.
    pub d: f64,
    pub amplitude: f64,
}

impl SemiclassicalParams {
    pub fn new(r: f64, u: f64, d: f64) -> Result<Self> {
        let sc = SemiclassicalParams { r, u, d, amplitude: 1.0 };
        sc.validate()?;
        Ok(sc)
    }

    /// Explicit-N form: the quartic term u x^4 / (4N) becomes (u/N) x^4 / 4.
    pub fn with_size(r: f64, u: f64, n: usize, d: f64) -> Result<Self> {
        SemiclassicalParams::new(r, u / n as f64, d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.u > 0.0 && self.d > 0.0 && self.r.is_finite()) {
            return Err(Error::invalid("semiclassical parameters need u > 0, d > 0 and finite r"));
        }
        Ok(())
    }

    fn s(&self, v: f64) -> f64 {
        (self.r * self.r + 2.0 * self.u * v * v).sqrt()
    }

    /// (angular frequency, elliptic parameter, amplitude) of the orbit.
    fn orbit(&self, v: f64) -> (f64, f64, f64) {
        let s = self.s(v);
        let w2 = 0.5 * (self.r + s);
        let m = (self.r - s) / (self.r + s);
        (w2.sqrt(), m, v / w2.sqrt())
    }
}

/// x_v(t) = (v/w) sn(w t | m), w^2 = (r + s)/2, m = (r - s)/(r + s),
/// s = sqrt(r^2 + 2 u v^2).
pub fn twa_trajectory(sc: &SemiclassicalParams, v: f64, t: f64) -> Result<f64> {
    sc.validate()?;
    if v == 0.0 {
        return Ok(0.0);
    }
    let (w, m, a) = sc.orbit(v);
    if !(w > 0.0) {
        return Err(Error::invalid("orbit frequency vanishes; need r + s > 0"));
    }
    Ok(a * jacobi_sn(w * t, m)?)
}

/// Closed-form time average (sqrt(r^2 + 2 u v^2) - r)/(2u).
pub fn twa_time_avg(sc: &SemiclassicalParams, v: f64) -> f64 {
    let s = sc.s(v);
    if sc.r > 0.0 {
        // same value without the cancellation in s - r
        v * v / (s + sc.r)
    } else {
        (s - sc.r) / (2.0 * sc.u)
    }
}

/// Exact period average of x_v(t)^2: A^2 (1 - E(m)/K(m))/m.
pub fn twa_time_avg_elliptic(sc: &SemiclassicalParams, v: f64) -> Result<f64> {
    sc.validate()?;
    if v == 0.0 {
        return Ok(0.0);
    }
    let (_, m, a) = sc.orbit(v);
    if m.abs() < 1e-12 {
        return Ok(0.5 * a * a);
    }
    let (k, e) = ellipke(m)?;
    Ok(a * a * (1.0 - e / k) / m)
}

/// Gaussian average of the closed-form time average:
/// -r/(2u) + U(-1/2, 0, D r^2/(2u)) / sqrt(2 D u).
pub fn twa_ensemble_avg(sc: &SemiclassicalParams) -> Result<f64> {
    sc.validate()?;
    let z = sc.d * sc.r * sc.r / (2.0 * sc.u);
    Ok(-sc.r / (2.0 * sc.u) + tricomi_u(-0.5, 0.0, z)? / (2.0 * sc.d * sc.u).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

const CHUNK: usize = 4096;

/// Monte-Carlo average of `twa_time_avg` over v drawn by inverse CDF from
/// a normal of variance 1/(2D). Chunks use independent seeded streams and
/// are reduced in order.
pub fn twa_monte_carlo(sc: &SemiclassicalParams, samples: usize, seed: u64) -> Result<MonteCarloEstimate> {
    sc.validate()?;
    if samples < 2 {
        return Err(Error::invalid("need at least two samples"));
    }
    let normal = Normal::new(0.0, (0.5 / sc.d).sqrt()).map_err(|e| Error::invalid(e.to_string()))?;
    let chunks = samples.div_ceil(CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = CHUNK.min(samples - c * CHUNK);
            (0..len).fold((0.0, 0.0), |(s1, s2), _| {
                // open interval keeps the inverse CDF finite
                let p = rng.random::<f64>().clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
                let x = twa_time_avg(sc, normal.inverse_cdf(p));
                (s1 + x, s2 + x * x)
            })
        })
        .collect();
    let (s1, s2) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = samples as f64;
    let mean = s1 / n;
    let var = (s2 / n - mean * mean) * n / (n - 1.0);
    Ok(MonteCarloEstimate { mean, stderr: (var / n).sqrt(), samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rk4(r: f64, u: f64, v: f64, t: f64, steps: usize) -> f64 {
        let f = |x: f64, p: f64| (p, -r * x - u * x * x * x);
        let h = t / steps as f64;
        let (mut x, mut p) = (0.0, v);
        for _ in 0..steps {
            let k1 = f(x, p);
            let k2 = f(x + 0.5 * h * k1.0, p + 0.5 * h * k1.1);
            let k3 = f(x + 0.5 * h * k2.0, p + 0.5 * h * k2.1);
            let k4 = f(x + h * k3.0, p + h * k3.1);
            x += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            p += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        }
        x
    }

    #[test]
    fn trajectory_matches_ode_integration() {
        let sc = SemiclassicalParams::new(1.0, 1.0, 1.0).unwrap();
        assert!((twa_trajectory(&sc, 1.0, 1.0).unwrap() - rk4(1.0, 1.0, 1.0, 1.0, 2000)).abs() < 1e-6);
        for (r, u, v, t) in [(0.0, 0.5, 1.3, 7.0), (-0.2, 2.0, 0.8, 4.0), (2.0, 0.1, -0.6, 9.5)] {
            let sc = SemiclassicalParams::new(r, u, 1.0).unwrap();
            assert!((twa_trajectory(&sc, v, t).unwrap() - rk4(r, u, v, t, 20_000)).abs() < 1e-8, "{r} {u} {v}");
        }
    }

    #[test]
    fn trajectory_limits() {
        let sc = SemiclassicalParams::new(2.0, 1e-12, 1.0).unwrap();
        let t = 1.7;
        let harmonic = 0.4 / 2f64.sqrt() * (2f64.sqrt() * t).sin();
        assert!((twa_trajectory(&sc, 0.4, t).unwrap() - harmonic).abs() < 1e-10);
        assert_eq!(twa_trajectory(&sc, 0.9, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn ode_residual_is_small() {
        let sc = SemiclassicalParams::new(0.5, 1.5, 1.0).unwrap();
        let (v, h) = (1.1, 1e-3);
        for i in 1..200 {
            let t = 0.05 * i as f64;
            let x = |s: f64| twa_trajectory(&sc, v, s).unwrap();
            let acc = (x(t + h) - 2.0 * x(t) + x(t - h)) / (h * h);
            let res = acc + sc.r * x(t) + sc.u * x(t).powi(3);
            assert!(res.abs() < 1e-5, "t={t} residual {res}");
        }
    }

    #[test]
    fn closed_form_time_average_limits() {
        let sc = SemiclassicalParams::new(1.0, 1e-9, 1.0).unwrap();
        assert!((twa_time_avg(&sc, 0.3) - 0.09 / 2.0).abs() < 1e-9);
        let sc = SemiclassicalParams::new(0.0, 2.0, 1.0).unwrap();
        assert!((twa_time_avg(&sc, 0.8) - 0.8 / 2.0).abs() < 1e-15);
        let sc = SemiclassicalParams::new(1.0, 1.0, 1.0).unwrap();
        assert!((twa_time_avg(&sc, 1.0) - (3f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn elliptic_average_matches_windowed_trajectory() {
        for (r, u, v) in [(1.0, 1.0, 1.0), (0.0, 1.0, 0.7), (0.3, 0.05, 0.2)] {
            let sc = SemiclassicalParams::new(r, u, 1.0).unwrap();
            let (w, m, _) = sc.orbit(v);
            let period = 4.0 * ellipke(m).unwrap().0 / w;
            let k = 200_000;
            let t_end = 60.0 * period;
            let avg = (0..k).map(|i| twa_trajectory(&sc, v, t_end * (i as f64 + 0.5) / k as f64).unwrap().powi(2)).sum::<f64>() / k as f64;
            let exact = twa_time_avg_elliptic(&sc, v).unwrap();
            assert!((avg - exact).abs() < 1e-4 * exact, "{r} {u} {v}: {avg} vs {exact}");
            // the closed form treats sn^2 as averaging to 1/2
            let rel = (twa_time_avg(&sc, v) - exact).abs() / exact;
            if 2.0 * u * v * v < 0.05 * r * r {
                assert!(rel < 1e-2);
            }
        }
    }

    #[test]
    fn ensemble_average_matches_quadrature() {
        for (r, u, d) in [(0.3, 0.5, 1.2), (-0.4, 1.0, 0.7), (0.0, 2.0, 3.0)] {
            let sc = SemiclassicalParams::new(r, u, d).unwrap();
            let (lim, k) = (12.0 / d.sqrt(), 400_000);
            let h = 2.0 * lim / k as f64;
            let (mut num, mut den) = (0.0, 0.0);
            for i in 0..k {
                let v = -lim + (i as f64 + 0.5) * h;
                let w = (-d * v * v).exp();
                num += w * twa_time_avg(&sc, v);
                den += w;
            }
            let q = num / den;
            assert!((twa_ensemble_avg(&sc).unwrap() - q).abs() < 1e-8 * q.abs().max(1.0), "{r} {u} {d}");
        }
    }

    #[test]
    fn monte_carlo_is_seeded_and_consistent() {
        let sc = SemiclassicalParams::new(0.2, 0.5, 1.0).unwrap();
        let a = twa_monte_carlo(&sc, 20_000, 3).unwrap();
        assert_eq!(a, twa_monte_carlo(&sc, 20_000, 3).unwrap());
        let exact = twa_ensemble_avg(&sc).unwrap();
        assert!((a.mean - exact).abs() < 4.0 * a.stderr);
    }
}
