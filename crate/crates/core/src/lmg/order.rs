//! Finite-size order parameter of the dynamical transition and its fit.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{uniform_grid, Observable};
use crate::error::{Error, Result};
use crate::special::tricomi_u;

use super::{quench_series, LmgParams};

/// Long-time mean-field magnetization sqrt(B(1 - B)) in the ordered phase.
pub fn mean_field_magnetization(b: f64) -> f64 {
    if (0.0..=1.0).contains(&b) {
        (b * (1.0 - b)).sqrt()
    } else {
        0.0
    }
}

/// A (B/Bc) [ (1 - B/Bc) + U(-1/2, 0, D N (1 - B/Bc)^2) / sqrt(N D) ].
pub fn order_parameter(b: f64, b_c: f64, d: f64, n: usize, amplitude: f64) -> Result<f64> {
    if n == 0 || !(d > 0.0) || !(b_c > 0.0) {
        return Err(Error::invalid("order parameter needs n >= 1, d > 0 and b_c > 0"));
    }
    let x = b / b_c;
    let nf = n as f64;
    let z = d * nf * (1.0 - x).powi(2);
    Ok(amplitude * x * ((1.0 - x) + tricomi_u(-0.5, 0.0, z)? / (nf * d).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderParameterFit {
    pub b_c: f64,
    pub d: f64,
    pub amplitude: f64,
    /// Covariance of (b_c, d, amplitude), scaled by the residual variance.
    pub covariance: [[f64; 3]; 3],
    /// Root-mean-square residual.
    pub residual: f64,
    pub iterations: usize,
}

impl OrderParameterFit {
    pub fn errors(&self) -> [f64; 3] {
        [0, 1, 2].map(|i| self.covariance[i][i].max(0.0).sqrt())
    }
}

fn residuals(samples: &[(f64, f64)], n: usize, p: &Vector3<f64>) -> Option<Vec<f64>> {
    samples
        .iter()
        .map(|&(b, y)| order_parameter(b, p[0], p[1], n, p[2]).ok().map(|m| m - y))
        .collect()
}

fn jacobian(samples: &[(f64, f64)], n: usize, p: &Vector3<f64>) -> Option<nalgebra::DMatrix<f64>> {
    let mut j = nalgebra::DMatrix::zeros(samples.len(), 3);
    for k in 0..3 {
        let h = 1e-7 * p[k].abs().max(1e-3);
        let (mut a, mut b) = (*p, *p);
        a[k] += h;
        b[k] -= h;
        let (ra, rb) = (residuals(samples, n, &a)?, residuals(samples, n, &b)?);
        for i in 0..samples.len() {
            j[(i, k)] = (ra[i] - rb[i]) / (2.0 * h);
        }
    }
    Some(j)
}

/// Levenberg-Marquardt fit of (B_c, D, A) to (B, m^2) samples.
pub fn fit_order_parameter(samples: &[(f64, f64)], n: usize, init: (f64, f64, f64)) -> Result<OrderParameterFit> {
    if samples.len() < 5 {
        return Err(Error::invalid("order-parameter fit needs at least five samples"));
    }
    let mut p = Vector3::new(init.0, init.1, init.2);
    let cost = |p: &Vector3<f64>| residuals(samples, n, p).map(|r| r.iter().map(|v| v * v).sum::<f64>());
    let mut c = cost(&p).ok_or_else(|| Error::invalid("initial guess outside the model domain"))?;
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < 500 {
        iterations += 1;
        let j = jacobian(samples, n, &p).ok_or_else(|| Error::numerical("Jacobian left the model domain"))?;
        let r = nalgebra::DVector::from_vec(residuals(samples, n, &p).unwrap());
        let jtj: Matrix3<f64> = (j.transpose() * &j).fixed_view::<3, 3>(0, 0).into_owned();
        let g: Vector3<f64> = (j.transpose() * r).fixed_view::<3, 1>(0, 0).into_owned();
        let mut stepped = false;
        for _ in 0..40 {
            let mut a = jtj;
            for k in 0..3 {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let Some(delta) = a.lu().solve(&(-g)) else {
                lambda *= 10.0;
                continue;
            };
            let trial = p + delta;
            match cost(&trial) {
                Some(ct) if ct <= c => {
                    let small = delta.iter().zip(p.iter()).all(|(d, x)| d.abs() <= 1e-12 * x.abs().max(1e-8));
                    let flat = (c - ct) <= 1e-15 * c.max(1e-300);
                    p = trial;
                    c = ct;
                    lambda = (lambda * 0.3).max(1e-12);
                    stepped = true;
                    converged = small || flat;
                    break;
                }
                _ => lambda *= 10.0,
            }
        }
        if !stepped || converged {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NotConverged { iterations, residual: (c / samples.len() as f64).sqrt() });
    }
    let dof = (samples.len() as f64 - 3.0).max(1.0);
    let j = jacobian(samples, n, &p).ok_or_else(|| Error::numerical("Jacobian left the model domain"))?;
    let jtj: Matrix3<f64> = (j.transpose() * &j).fixed_view::<3, 3>(0, 0).into_owned();
    let cov = jtj.try_inverse().map(|m| m * (c / dof)).unwrap_or_else(|| Matrix3::from_element(f64::NAN));
    let covariance = [0, 1, 2].map(|i| [0, 1, 2].map(|k| cov[(i, k)]));
    Ok(OrderParameterFit {
        b_c: p[0],
        d: p[1],
        amplitude: p[2],
        covariance,
        residual: (c / samples.len() as f64).sqrt(),
        iterations,
    })
}

/// max over Jt in [0, window] of <S_x^2>/N^2 after the quench from the
/// all-down state to (gamma_x = 1, B), for each field.
pub fn order_parameter_curve(n: usize, fields: &[f64], window: f64, dt: f64) -> Result<Vec<(f64, f64)>> {
    let times = uniform_grid(window, dt)?;
    let p0 = LmgParams::paramagnet(n, 1.0)?;
    fields
        .par_iter()
        .map(|&b| {
            let s = quench_series(&p0, &LmgParams::new(n, 1.0, 0.0, b)?, &times, Observable::Cx2)?;
            let peak = s.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            Ok((b, peak / (n * n) as f64))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_field_examples() {
        assert_eq!(mean_field_magnetization(0.0), 0.0);
        assert_eq!(mean_field_magnetization(1.0), 0.0);
        assert_eq!(mean_field_magnetization(0.5), 0.5);
        assert_eq!(mean_field_magnetization(1.5), 0.0);
        let best = (0..=1000).map(|i| i as f64 / 1000.0).fold((0.0, 0.0), |acc, b| {
            let m2 = mean_field_magnetization(b).powi(2);
            if m2 > acc.1 { (b, m2) } else { acc }
        });
        assert_eq!(best.0, 0.5);
    }

    #[test]
    fn order_parameter_limits() {
        let at_c = order_parameter(1.0, 1.0, 0.3, 50, 2.0).unwrap();
        assert!((at_c - 2.0 / (std::f64::consts::PI * 50.0 * 0.3).sqrt()).abs() < 1e-12);
        let (b, a) = (0.4, 1.7);
        let big_n = order_parameter(b, 1.0, 0.5, 10_000_000, a).unwrap();
        // U(-1/2, 0, z) ~ sqrt(z) doubles the (1 - b) term for b < 1
        assert!((big_n - 2.0 * a * b * (1.0 - b)).abs() < 1e-5);
        assert!(order_parameter(3.0, 1.0, 0.5, 10_000_000, a).unwrap() < 1e-6);
        assert!(order_parameter(0.5, 1.0, 0.0, 10, 1.0).is_err());
    }

    #[test]
    fn fit_recovers_generating_parameters() {
        let (bc, d, a) = (0.97, 0.34, 16.0);
        let samples: Vec<(f64, f64)> = (1..40).map(|i| {
            let b = 0.05 * i as f64;
            (b, order_parameter(b, bc, d, 50, a).unwrap())
        }).collect();
        let fit = fit_order_parameter(&samples, 50, (1.1, 0.6, 10.0)).unwrap();
        assert!((fit.b_c - bc).abs() < 1e-6 && (fit.d - d).abs() < 1e-6 && (fit.amplitude - a).abs() < 1e-6, "{fit:?}");
        assert!(fit.residual < 1e-9);
        assert!(fit_order_parameter(&samples[..4], 50, (1.0, 0.5, 1.0)).is_err());
    }
}
