//! Linear spin waves above the polarized state: Fourier dispersion for
//! periodic power-law chains and real-space Bogoliubov spectra for arbitrary
//! couplings. Fields and energies are in units of the Kac factor.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interaction::InteractionMatrix;

const NEGATIVE_TOL: f64 = 1e-10;

/// J~_k = 2 sum_{r=1}^{(N-1)/2} cos(r k)/r^p for unit J.
pub fn fourier_coupling(p: f64, n: usize, k: f64) -> Result<f64> {
    if n % 2 == 0 {
        return Err(Error::invalid(format!(
            "Fourier dispersion needs odd N (got {n}); use spectrum_realspace for even chains"
        )));
    }
    if !(p >= 0.0) || !p.is_finite() {
        return Err(Error::invalid(format!("power-law exponent must be >= 0, got {p}")));
    }
    Ok(2.0 * (1..=(n - 1) / 2).map(|r| (r as f64 * k).cos() / (r as f64).powf(p)).sum::<f64>())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dispersion {
    /// k = 2 pi q / N for q = 0..N.
    pub k: Vec<f64>,
    /// J~_k divided by the Kac factor.
    pub coupling: Vec<f64>,
    /// omega_k, NaN where the square root is imaginary.
    pub omega: Vec<f64>,
    /// Bogoliubov angle from tanh(2 theta) = (J~/2)/(B - J~/2), NaN when |tanh| >= 1.
    pub theta: Vec<f64>,
    pub valid: bool,
}

/// omega_k = sqrt(B (B - J~_k/kac)) on the periodic chain of odd length `n`.
pub fn dispersion_periodic(b: f64, p: f64, n: usize) -> Result<Dispersion> {
    if n < 3 {
        return Err(Error::invalid("periodic dispersion needs N >= 3"));
    }
    if !b.is_finite() {
        return Err(Error::invalid("field must be finite"));
    }
    // kac = (1/(N-1)) sum_{i != j} J_ij = N J~_0/(N-1)
    let kac = n as f64 * fourier_coupling(p, n, 0.0)? / (n - 1) as f64;
    let k: Vec<f64> = (0..n).map(|q| 2.0 * PI * q as f64 / n as f64).collect();
    let coupling = k.iter().map(|&k| fourier_coupling(p, n, k).map(|j| j / kac)).collect::<Result<Vec<_>>>()?;
    let mut valid = true;
    let mut omega = Vec::with_capacity(n);
    let mut theta = Vec::with_capacity(n);
    for &jk in &coupling {
        let w2 = b * (b - jk);
        if w2 < -NEGATIVE_TOL {
            valid = false;
            omega.push(f64::NAN);
        } else {
            omega.push(w2.max(0.0).sqrt());
        }
        let t = 0.5 * jk / (b - 0.5 * jk);
        theta.push(if t.abs() < 1.0 { 0.5 * t.atanh() } else { f64::NAN });
    }
    Ok(Dispersion { k, coupling, omega, theta, valid })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BogoliubovSpectrum {
    /// Lambda_k ascending; a negative eigenvalue of M beyond the tolerance gives NaN.
    pub energies: Vec<f64>,
    /// Eigenvalues of M = A^2 - C^2, ascending.
    pub squared: Vec<f64>,
    pub lowest_two: (f64, f64),
    pub valid: bool,
}

/// J/kac, with the zero matrix mapped to itself.
fn normalized(j: &InteractionMatrix) -> Result<DMatrix<f64>> {
    if j.matrix().amax() == 0.0 {
        return Ok(j.matrix().clone());
    }
    if !(j.kac() > 0.0) {
        return Err(Error::invalid("spin-wave analysis needs a positive Kac factor"));
    }
    Ok(j.matrix() / j.kac())
}

fn m_matrix(jn: &DMatrix<f64>, b: f64) -> DMatrix<f64> {
    let n = jn.nrows();
    let c = jn * -0.5;
    let a = &c + DMatrix::identity(n, n) * b;
    let m = &a * &a - &c * &c;
    // A and C commute, so M is symmetric up to rounding
    (&m + m.transpose()) * 0.5
}

fn sorted_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Lambda_k = sqrt(eig(A^2 - C^2)) with A = -J/(2 kac) + B, C = -J/(2 kac).
pub fn spectrum_realspace(j: &InteractionMatrix, b: f64) -> Result<BogoliubovSpectrum> {
    if !b.is_finite() {
        return Err(Error::invalid("field must be finite"));
    }
    let squared = sorted_eigenvalues(m_matrix(&normalized(j)?, b));
    let valid = squared.iter().all(|&l| l >= -NEGATIVE_TOL);
    let energies: Vec<f64> = squared.iter().map(|&l| if l >= -NEGATIVE_TOL { l.max(0.0).sqrt() } else { f64::NAN }).collect();
    let lowest_two = (energies[0], energies[1]);
    Ok(BogoliubovSpectrum { energies, squared, lowest_two, valid })
}

/// (B, Lambda_0, Lambda_1, valid) rows over a field grid.
pub fn spectrum_scan(j: &InteractionMatrix, fields: &[f64]) -> Result<Vec<(f64, f64, f64, bool)>> {
    fields
        .par_iter()
        .map(|&b| spectrum_realspace(j, b).map(|s| (b, s.lowest_two.0, s.lowest_two.1, s.valid)))
        .collect()
}

/// Field (in units of kac) where Lambda_0 closes, by bisection on the lowest
/// eigenvalue of M to 1e-8.
pub fn critical_field(j: &InteractionMatrix) -> Result<f64> {
    let jn = normalized(j)?;
    let lowest = |b: f64| sorted_eigenvalues(m_matrix(&jn, b))[0];
    // Gershgorin bound on the largest eigenvalue of J/kac
    let row_max = jn.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let (mut lo, mut hi) = (1e-9, row_max + 1.0);
    if !(lowest(lo) < 0.0 && lowest(hi) > 0.0) {
        return Err(Error::numerical("no sign change of the soft-mode energy in the field bracket"));
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if lowest(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Critical field in the units of J itself; scales linearly with J.
pub fn critical_field_absolute(j: &InteractionMatrix) -> Result<f64> {
    Ok(critical_field(j)? * j.kac())
}

/// Largest eigenvalue of J/kac, the closed form of the soft-mode threshold.
pub fn critical_field_direct(j: &InteractionMatrix) -> Result<f64> {
    Ok(*sorted_eigenvalues(normalized(j)?).last().unwrap())
}

/// Occupation of a mode quenched from Omega_0 = 2 B_0 to Omega = Lambda_1:
/// n + 1/2 = (Omega/Omega_0 + Omega_0/Omega)/4.
pub fn gapped_mode_population(b0: f64, lambda1: f64) -> Result<f64> {
    if !(lambda1 > 0.0) || !(b0 > 0.0) {
        return Err(Error::invalid("gapped-mode population needs lambda1 > 0 and b0 > 0"));
    }
    let w0 = 2.0 * b0;
    Ok(0.25 * (lambda1 / w0 + w0 / lambda1) - 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interaction::{synthetic_jij, Boundary};

    #[test]
    fn fourier_coupling_examples() {
        for n in [5, 11, 101] {
            let j0 = fourier_coupling(0.7, n, 0.0).unwrap();
            let kac = synthetic_jij(n, 0.7, Boundary::Periodic, 1.0).unwrap().kac();
            assert!((j0 / kac - (n - 1) as f64 / n as f64).abs() < 1e-12);
            let k = 2.0 * PI / n as f64;
            assert!((fourier_coupling(0.0, n, k).unwrap() + 1.0).abs() < 1e-12);
            assert_eq!(fourier_coupling(1.3, n, 3.0 * k).unwrap(), fourier_coupling(1.3, n, -3.0 * k).unwrap());
        }
        assert!(fourier_coupling(1.0, 10, 0.0).is_err());
    }

    #[test]
    fn fourier_coupling_matches_matrix_eigenvalues() {
        let (n, p) = (15, 1.4);
        let j = synthetic_jij(n, p, Boundary::Periodic, 1.0).unwrap();
        let ev = sorted_eigenvalues(j.matrix().clone());
        let mut jk: Vec<f64> = (0..n).map(|q| fourier_coupling(p, n, 2.0 * PI * q as f64 / n as f64).unwrap()).collect();
        jk.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(&jk) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn dispersion_examples() {
        let d = dispersion_periodic(2.0, 0.5, 20_001).unwrap();
        assert!((d.omega[0] - 2f64.sqrt()).abs() < 1e-4);
        let d = dispersion_periodic(1.0, 0.5, 20_001).unwrap();
        assert!(d.valid && d.omega[0] < 1e-2);
        assert!((d.omega[0] - (1.0 / 20_001f64).sqrt()).abs() < 1e-12);
        let d = dispersion_periodic(0.9, 0.5, 101).unwrap();
        assert!(!d.valid && d.omega[0].is_nan());
        assert!(dispersion_periodic(1.0, 0.5, 100).is_err());
    }

    #[test]
    fn bogoliubov_angle_diagonalizes() {
        // with tanh(2 theta) fixed, (B - J/2) sinh(2th) - (J/2) cosh(2th) = 0
        let d = dispersion_periodic(1.3, 0.8, 51).unwrap();
        for (&jk, &th) in d.coupling.iter().zip(&d.theta) {
            let off = (1.3 - 0.5 * jk) * (2.0 * th).sinh() - 0.5 * jk * (2.0 * th).cosh();
            assert!(off.abs() < 1e-12);
        }
    }

    #[test]
    fn long_range_gap_survives() {
        let gap = |n: usize| {
            let d = dispersion_periodic(1.0, 0.5, n).unwrap();
            d.omega[1] - d.omega[0]
        };
        let g: Vec<f64> = [101, 201, 401, 801, 1601, 3201].iter().map(|&n| gap(n)).collect();
        assert!(g.iter().all(|&x| x > 0.3), "{g:?}");
        assert!((g[5] - g[4]).abs() < (g[1] - g[0]).abs());
        // short range closes the gap
        let d = dispersion_periodic(1.0, 2.0, 3201).unwrap();
        assert!(d.omega[1] - d.omega[0] < 0.05);
    }

    #[test]
    fn realspace_matches_periodic_dispersion() {
        for p in [0.0, 0.9, 1.7] {
            let n = 31;
            let j = synthetic_jij(n, p, Boundary::Periodic, 1.0).unwrap();
            let s = spectrum_realspace(&j, 1.4).unwrap();
            let mut w = dispersion_periodic(1.4, p, n).unwrap().omega;
            w.sort_by(f64::total_cmp);
            for (a, b) in s.energies.iter().zip(&w) {
                assert!((a - b).abs() < 1e-8, "p={p}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn realspace_examples() {
        let zero = InteractionMatrix::new(DMatrix::zeros(8, 8)).unwrap();
        let s = spectrum_realspace(&zero, 0.7).unwrap();
        assert!(s.valid && s.energies.iter().all(|&l| (l - 0.7).abs() < 1e-12));
        assert!(critical_field(&zero).is_err());

        let j = synthetic_jij(50, 0.9, Boundary::Open, 1.0).unwrap();
        let bc = critical_field(&j).unwrap();
        assert!((bc - 1.0).abs() < 0.05, "{bc}");
        let s = spectrum_realspace(&j, bc + 1e-8).unwrap();
        assert!(s.valid && s.lowest_two.0 < 1e-3 && s.lowest_two.1 > 0.2, "{:?}", s.lowest_two);
        assert!(!spectrum_realspace(&j, 0.9).unwrap().valid);
    }

    #[test]
    fn critical_field_routes_agree() {
        let j = InteractionMatrix::uniform(40, 1.0).unwrap();
        assert!((critical_field(&j).unwrap() - 39.0 / 40.0).abs() < 1e-8);
        for p in [0.3, 0.9, 2.5] {
            let j = synthetic_jij(37, p, Boundary::Open, 1.0).unwrap();
            assert!((critical_field(&j).unwrap() - critical_field_direct(&j).unwrap()).abs() < 1e-8);
            let a = critical_field_absolute(&j).unwrap();
            let b = critical_field_absolute(&j.scaled(3.5).unwrap()).unwrap();
            assert!((b - 3.5 * a).abs() < 1e-7 * b);
            assert!((critical_field(&j.scaled(3.5).unwrap()).unwrap() - critical_field(&j).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn soft_mode_energy_grows_with_field() {
        let j = synthetic_jij(30, 0.9, Boundary::Open, 1.0).unwrap();
        let bc = critical_field(&j).unwrap();
        let rows = spectrum_scan(&j, &(0..20).map(|i| bc + 0.05 * i as f64).collect::<Vec<_>>()).unwrap();
        assert!(rows.windows(2).all(|w| w[1].1 > w[0].1));
    }

    #[test]
    fn population_examples() {
        assert!(gapped_mode_population(1.0, 2.0).unwrap().abs() < 1e-15);
        assert!((gapped_mode_population(1.0, 0.5).unwrap() - 0.5625).abs() < 1e-15);
        let (b0, l) = (0.8, 0.37);
        let a = gapped_mode_population(b0, l).unwrap();
        assert!((a - gapped_mode_population(b0, 4.0 * b0 * b0 / l).unwrap()).abs() < 1e-12);
        assert!(gapped_mode_population(1.0, 0.0).is_err());
    }
}
