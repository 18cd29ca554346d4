//! Coupling matrices: synthetic power laws, trapped-ion mode sums and
//! decay-profile fits.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Trap and drive parameters, all in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapParams {
    pub n_ions: usize,
    pub nu_com: f64,
    pub nu_axial: f64,
    pub mu_beat: f64,
    pub rabi: f64,
    pub nu_recoil: f64,
}

impl TrapParams {
    /// Places the beatnote `detuning` Hz above the COM mode.
    pub fn with_detuning(n_ions: usize, nu_com: f64, nu_axial: f64, detuning: f64, rabi: f64, nu_recoil: f64) -> Self {
        TrapParams { n_ions, nu_com, nu_axial, mu_beat: nu_com + detuning, rabi, nu_recoil }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.nu_com, self.nu_axial, self.mu_beat, self.rabi, self.nu_recoil];
        if all.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::invalid("trap frequencies must be positive and finite"));
        }
        if self.n_ions == 0 {
            return Err(Error::invalid("n_ions must be at least 1"));
        }
        if self.nu_axial >= self.nu_com {
            return Err(Error::invalid("nu_axial must be below nu_com for a linear chain"));
        }
        if self.mu_beat <= self.nu_com {
            return Err(Error::invalid("mu_beat must lie above nu_com"));
        }
        Ok(())
    }
}

/// Dimensionless equilibrium coordinates of a linear Coulomb crystal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IonChainGeometry {
    pub positions: Vec<f64>,
}

impl IonChainGeometry {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Largest net force magnitude on any ion.
    pub fn force_residual(&self) -> f64 {
        chain_gradient(&self.positions).iter().fold(0.0, |m, g| m.max(g.abs()))
    }
}

fn chain_energy(u: &[f64]) -> f64 {
    let mut e = 0.0;
    for i in 0..u.len() {
        e += 0.5 * u[i] * u[i];
        for j in i + 1..u.len() {
            e += 1.0 / (u[j] - u[i]).abs();
        }
    }
    e
}

fn chain_gradient(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let mut g: Vec<f64> = u.to_vec();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let d = u[i] - u[j];
                g[i] -= d.signum() / (d * d);
            }
        }
    }
    g
}

fn chain_hessian(u: &[f64]) -> DMatrix<f64> {
    let n = u.len();
    let mut h = DMatrix::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let c = 2.0 / (u[i] - u[j]).abs().powi(3);
                h[(i, i)] += c;
                h[(i, j)] = -c;
            }
        }
    }
    h
}

/// Minimizes the harmonic-plus-Coulomb potential by damped Newton iteration.
pub fn equilibrium_positions(n: usize) -> Result<IonChainGeometry> {
    const MAX_ITER: usize = 200;
    const TOL: f64 = 1e-12;
    if n == 0 {
        return Err(Error::invalid("need at least one ion"));
    }
    if n == 1 {
        return Ok(IonChainGeometry { positions: vec![0.0] });
    }
    let spacing = 2.0 * (n as f64).powf(-0.56);
    let mut u: Vec<f64> = (0..n).map(|i| (i as f64 - 0.5 * (n - 1) as f64) * spacing).collect();
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_ITER {
        let g = chain_gradient(&u);
        residual = g.iter().fold(0.0, |m, v| m.max(v.abs()));
        if residual < TOL {
            break;
        }
        let h = chain_hessian(&u);
        let step = h
            .cholesky()
            .map(|c| c.solve(&DVector::from_vec(g.clone())))
            .unwrap_or_else(|| DVector::from_vec(g.clone()));
        let e0 = chain_energy(&u);
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(x, s)| x - lambda * s).collect();
            let ordered = trial.windows(2).all(|w| w[1] > w[0]);
            if ordered && chain_energy(&trial) <= e0 + 1e-14 * e0.abs() {
                u = trial;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    // enforce exact reflection symmetry
    let sym: Vec<f64> = (0..n).map(|i| 0.5 * (u[i] - u[n - 1 - i])).collect();
    let geometry = IonChainGeometry { positions: sym };
    let final_residual = geometry.force_residual();
    if final_residual >= 1e-10 {
        return Err(Error::NotConverged { iterations: MAX_ITER, residual: final_residual.max(residual) });
    }
    Ok(geometry)
}

/// Transverse normal modes; frequencies in Hz sorted descending, modes as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpectrum {
    pub frequencies: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

pub fn transverse_modes(geometry: &IonChainGeometry, params: &TrapParams) -> Result<ModeSpectrum> {
    params.validate()?;
    let u = &geometry.positions;
    let n = u.len();
    if n != params.n_ions {
        return Err(Error::invalid(format!("geometry has {n} ions, params say {}", params.n_ions)));
    }
    let beta2 = (params.nu_axial / params.nu_com).powi(2);
    let mut k = DMatrix::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let c = beta2 / (u[i] - u[j]).abs().powi(3);
                k[(i, i)] -= c;
                k[(i, j)] = c;
            }
        }
    }
    let eig = SymmetricEigen::new(k);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut frequencies = Vec::with_capacity(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &m) in order.iter().enumerate() {
        let lam = eig.eigenvalues[m];
        if lam <= 0.0 {
            return Err(Error::UnstableChain { mode: col, value: lam });
        }
        frequencies.push(params.nu_com * lam.sqrt());
        let v = eig.eigenvectors.column(m);
        let lead = v.iter().copied().find(|x| x.abs() > 1e-12).unwrap_or(1.0);
        let s = lead.signum();
        for i in 0..n {
            vectors[(i, col)] = s * v[i];
        }
    }
    Ok(ModeSpectrum { frequencies, vectors })
}

/// Symmetric coupling matrix with zero diagonal and its Kac factor.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    j: DMatrix<f64>,
    kac: f64,
}

impl InteractionMatrix {
    /// Validates symmetry, zeroes the diagonal and attaches the Kac factor.
    pub fn new(mut j: DMatrix<f64>) -> Result<Self> {
        let n = j.nrows();
        if n < 2 || j.ncols() != n {
            return Err(Error::invalid("interaction matrix must be square with N >= 2"));
        }
        if j.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("interaction matrix has non-finite entries"));
        }
        let scale = j.amax().max(f64::MIN_POSITIVE);
        for a in 0..n {
            for b in 0..a {
                if (j[(a, b)] - j[(b, a)]).abs() > 1e-12 * scale {
                    return Err(Error::invalid(format!("interaction matrix not symmetric at ({a}, {b})")));
                }
                let avg = 0.5 * (j[(a, b)] + j[(b, a)]);
                j[(a, b)] = avg;
                j[(b, a)] = avg;
            }
            j[(a, a)] = 0.0;
        }
        let kac = j.sum() / (n - 1) as f64;
        Ok(InteractionMatrix { j, kac })
    }

    /// All-to-all unit couplings.
    pub fn uniform(n: usize, j0: f64) -> Result<Self> {
        InteractionMatrix::new(DMatrix::from_element(n, n, j0))
    }

    pub fn n(&self) -> usize {
        self.j.nrows()
    }

    pub fn kac(&self) -> f64 {
        self.kac
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.j[(a, b)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.j
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        InteractionMatrix::new(&self.j * factor)
    }

    /// True when every off-diagonal entry equals the first one.
    pub fn is_uniform(&self, rel_tol: f64) -> bool {
        let v = self.j[(0, 1)];
        let n = self.n();
        (0..n).all(|a| (0..n).all(|b| a == b || (self.j[(a, b)] - v).abs() <= rel_tol * v.abs()))
    }
}

pub fn compute_jij(spectrum: &ModeSpectrum, params: &TrapParams) -> Result<InteractionMatrix> {
    params.validate()?;
    let n = spectrum.vectors.nrows();
    let omega = 2.0 * PI * params.rabi;
    let recoil = 2.0 * PI * params.nu_recoil;
    let mu = 2.0 * PI * params.mu_beat;
    let mut weights = Vec::with_capacity(spectrum.frequencies.len());
    for (m, &nu_hz) in spectrum.frequencies.iter().enumerate() {
        let nu = 2.0 * PI * nu_hz;
        if (mu - nu).abs() <= 1e-9 * mu {
            return Err(Error::Resonance { mode: m, nu_m: nu_hz, mu: params.mu_beat });
        }
        weights.push(omega * omega * recoil / (mu * mu - nu * nu));
    }
    let mut j = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            if a != b {
                j[(a, b)] = (0..weights.len())
                    .map(|m| spectrum.vectors[(a, m)] * spectrum.vectors[(b, m)] * weights[m])
                    .sum();
            }
        }
    }
    // mode sums accumulate in different orders for (a, b) and (b, a)
    let sym = (&j + j.transpose()) * 0.5;
    InteractionMatrix::new(sym)
}

/// Full trapped-ion route: geometry, modes and mode sum.
pub fn ion_chain_jij(params: &TrapParams) -> Result<InteractionMatrix> {
    params.validate()?;
    if params.n_ions < 2 {
        return Err(Error::invalid("couplings need at least two ions"));
    }
    let geometry = equilibrium_positions(params.n_ions)?;
    let modes = transverse_modes(&geometry, params)?;
    compute_jij(&modes, params)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

pub fn synthetic_jij(n: usize, p: f64, boundary: Boundary, j0: f64) -> Result<InteractionMatrix> {
    if n < 2 {
        return Err(Error::invalid("synthetic couplings need n >= 2"));
    }
    if !(p >= 0.0) || !p.is_finite() {
        return Err(Error::invalid(format!("power-law exponent must be >= 0, got {p}")));
    }
    let mut j = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let d = a.abs_diff(b);
            let r = match boundary {
                Boundary::Open => d,
                Boundary::Periodic => d.min(n - d),
            };
            j[(a, b)] = j0 / (r as f64).powf(p);
        }
    }
    InteractionMatrix::new(j)
}

/// Distance-averaged couplings J(r) = (1/(N-r)) sum_i J_{i,i+r}.
pub fn radial_profile(j: &InteractionMatrix) -> Vec<(usize, f64)> {
    let n = j.n();
    (1..n)
        .map(|r| {
            let s: f64 = (0..n - r).map(|i| j.get(i, i + r)).sum();
            (r, s / (n - r) as f64)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub j1: f64,
    pub p: f64,
    pub k: Option<f64>,
    pub residual: f64,
}

struct LogProfile {
    y0: f64,
    lx: Vec<f64>,
    dx: Vec<f64>,
    ly: Vec<f64>,
}

fn log_profile(profile: &[(usize, f64)]) -> Result<LogProfile> {
    if profile.len() < 3 {
        return Err(Error::invalid("decay fits need at least 3 points"));
    }
    if profile.iter().any(|&(r, y)| r == 0 || !(y > 0.0) || !y.is_finite()) {
        return Err(Error::invalid("decay fits need r >= 1 and positive couplings"));
    }
    let mut rs: Vec<usize> = profile.iter().map(|p| p.0).collect();
    rs.sort_unstable();
    rs.dedup();
    if rs.len() <= 2 {
        return Err(Error::invalid("decay fits need more than two distinct distances"));
    }
    // normalize by the shortest-distance point, which is J(1) for a full profile
    let &(r0, y0) = profile.iter().min_by_key(|p| p.0).unwrap();
    let r0 = r0 as f64;
    let mut out = LogProfile { y0, lx: vec![], dx: vec![], ly: vec![] };
    for &(r, y) in profile {
        let r = r as f64;
        out.lx.push((r / r0).ln());
        out.dx.push(r - r0);
        out.ly.push((y / y0).ln());
    }
    Ok(out)
}

fn power_only(lp: &LogProfile) -> (f64, f64) {
    let sxx: f64 = lp.lx.iter().map(|x| x * x).sum();
    let sxy: f64 = lp.lx.iter().zip(&lp.ly).map(|(x, y)| x * y).sum();
    let p = -sxy / sxx;
    let res = lp.lx.iter().zip(&lp.ly).map(|(x, y)| (y + p * x).powi(2)).sum();
    (p, res)
}

/// J(r)/J(1) = r^-p fitted in log space.
pub fn fit_power_law(profile: &[(usize, f64)]) -> Result<DecayFit> {
    let lp = log_profile(profile)?;
    let (p, residual) = power_only(&lp);
    Ok(DecayFit { j1: lp.y0, p, k: None, residual })
}

/// J(r)/J(1) = r^-p exp(-k (r - 1)) fitted in log space, with k >= 0.
pub fn fit_power_exp(profile: &[(usize, f64)]) -> Result<DecayFit> {
    let lp = log_profile(profile)?;
    let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((x, d), y) in lp.lx.iter().zip(&lp.dx).zip(&lp.ly) {
        a11 += x * x;
        a12 += x * d;
        a22 += d * d;
        b1 -= x * y;
        b2 -= d * y;
    }
    let det = a11 * a22 - a12 * a12;
    let (p, k) = if det.abs() > 1e-14 * a11 * a22 {
        ((b1 * a22 - b2 * a12) / det, (a11 * b2 - a12 * b1) / det)
    } else {
        (f64::NAN, -1.0)
    };
    if !(k >= 0.0) {
        let (p, residual) = power_only(&lp);
        return Ok(DecayFit { j1: lp.y0, p, k: Some(0.0), residual });
    }
    let residual = lp
        .lx
        .iter()
        .zip(&lp.dx)
        .zip(&lp.ly)
        .map(|((x, d), y)| (y + p * x + k * d).powi(2))
        .sum();
    Ok(DecayFit { j1: lp.y0, p, k: Some(k), residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn two_ion_positions() {
        let g = equilibrium_positions(2).unwrap();
        // brute-force scan of V(x) = x^2 + 1/(2x) for the half separation
        let mut best = (f64::INFINITY, 0.0);
        for i in 1..200_000 {
            let x = i as f64 * 1e-5;
            let v = x * x + 1.0 / (2.0 * x);
            if v < best.0 {
                best = (v, x);
            }
        }
        assert!((g.positions[1] - best.1).abs() < 2e-5);
        assert_relative_eq!(g.positions[1], 2f64.powf(-2.0 / 3.0), epsilon = 1e-12);
        assert_relative_eq!(g.positions[0], -2f64.powf(-2.0 / 3.0), epsilon = 1e-12);
    }

    #[test]
    fn three_ion_positions() {
        // outer ion force balance: x = 1/x^2 + 1/(2x)^2, solved by bisection
        let f = |x: f64| x - 1.0 / (x * x) - 1.0 / (4.0 * x * x);
        let (mut lo, mut hi) = (0.5, 2.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let g = equilibrium_positions(3).unwrap();
        assert_relative_eq!(g.positions[2], 0.5 * (lo + hi), epsilon = 1e-12);
        assert_eq!(g.positions[1], 0.0);
    }

    #[test]
    fn larger_chains_converge() {
        for n in [1, 5, 20, 50, 100] {
            let g = equilibrium_positions(n).unwrap();
            assert!(g.force_residual() < 1e-10);
            assert!(g.positions.windows(2).all(|w| w[1] > w[0]));
        }
    }

    fn trap(n: usize) -> TrapParams {
        TrapParams::with_detuning(n, 4.7e6, 0.53e6, 56e3, 1.0e6, 14e3)
    }

    #[test]
    fn two_ion_modes() {
        let p = trap(2);
        let m = transverse_modes(&equilibrium_positions(2).unwrap(), &p).unwrap();
        assert_relative_eq!(m.frequencies[0], p.nu_com, max_relative = 1e-13);
        assert_relative_eq!(m.frequencies[1], (p.nu_com.powi(2) - p.nu_axial.powi(2)).sqrt(), max_relative = 1e-13);
    }

    #[test]
    fn com_mode_and_orthonormality() {
        let p = trap(12);
        let m = transverse_modes(&equilibrium_positions(12).unwrap(), &p).unwrap();
        assert_relative_eq!(m.frequencies[0], p.nu_com, max_relative = 1e-12);
        for i in 0..12 {
            assert_relative_eq!(m.vectors[(i, 0)], 1.0 / 12f64.sqrt(), epsilon = 1e-10);
        }
        let btb = m.vectors.transpose() * &m.vectors;
        let bbt = &m.vectors * m.vectors.transpose();
        assert!((btb - DMatrix::identity(12, 12)).amax() < 1e-10);
        assert!((bbt - DMatrix::identity(12, 12)).amax() < 1e-10);
        assert!(m.frequencies.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn com_only_spectrum_gives_uniform_couplings() {
        let n = 4;
        let p = trap(n);
        let mut v = DMatrix::zeros(n, 1);
        v.fill(0.5);
        let spec = ModeSpectrum { frequencies: vec![p.nu_com], vectors: v };
        let j = compute_jij(&spec, &p).unwrap();
        let (o, r, mu, nu) = (2.0 * PI * p.rabi, 2.0 * PI * p.nu_recoil, 2.0 * PI * p.mu_beat, 2.0 * PI * p.nu_com);
        let expect = o * o * r * 0.25 / (mu * mu - nu * nu);
        assert_relative_eq!(j.get(0, 3), expect, max_relative = 1e-14);
        assert_relative_eq!(j.get(1, 2), expect, max_relative = 1e-14);
    }

    #[test]
    fn two_ion_coupling_by_hand() {
        let p = trap(2);
        let m = transverse_modes(&equilibrium_positions(2).unwrap(), &p).unwrap();
        let j = compute_jij(&m, &p).unwrap();
        let w = |nu_hz: f64| {
            let (o, r, mu, nu) = (2.0 * PI * p.rabi, 2.0 * PI * p.nu_recoil, 2.0 * PI * p.mu_beat, 2.0 * PI * nu_hz);
            o * o * r / (mu * mu - nu * nu)
        };
        // b = (1,1)/sqrt2 and (1,-1)/sqrt2
        let expect = 0.5 * w(m.frequencies[0]) - 0.5 * w(m.frequencies[1]);
        assert_relative_eq!(j.get(0, 1), expect, max_relative = 1e-12);
    }

    #[test]
    fn resonance_is_rejected() {
        let p = trap(2);
        let spec = ModeSpectrum { frequencies: vec![p.nu_com, p.mu_beat], vectors: DMatrix::identity(2, 2) };
        assert!(matches!(compute_jij(&spec, &p), Err(Error::Resonance { mode: 1, .. })));
    }

    #[test]
    fn unstable_params_rejected() {
        let mut p = trap(4);
        p.nu_axial = p.nu_com * 1.1;
        assert!(p.validate().is_err());
        // zigzag onset: nu_axial close to nu_com for many ions
        let p = TrapParams::with_detuning(60, 1.0, 0.9, 0.01, 1.0, 1.0);
        let g = equilibrium_positions(60).unwrap();
        assert!(matches!(transverse_modes(&g, &p), Err(Error::UnstableChain { .. })));
    }

    #[test]
    fn synthetic_examples() {
        let j = synthetic_jij(4, 0.0, Boundary::Open, 1.3).unwrap();
        assert!(j.is_uniform(0.0));
        let j = synthetic_jij(5, 1.0, Boundary::Periodic, 1.0).unwrap();
        assert_eq!(j.get(0, 3), 0.5);
        let j = synthetic_jij(3, 0.0, Boundary::Open, 1.0).unwrap();
        assert_eq!(j.kac(), 3.0);
        assert!(synthetic_jij(1, 0.0, Boundary::Open, 1.0).is_err());
    }

    #[test]
    fn radial_profile_arithmetic() {
        let m = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 2.0, 1.0, 0.0, 3.0, 2.0, 3.0, 0.0]);
        let prof = radial_profile(&InteractionMatrix::new(m).unwrap());
        assert_eq!(prof, vec![(1, 2.0), (2, 2.0)]);
    }

    #[test]
    fn power_law_recovered() {
        let j = synthetic_jij(12, 0.89, Boundary::Open, 2.0).unwrap();
        let fit = fit_power_law(&radial_profile(&j)).unwrap();
        assert!((fit.p - 0.89).abs() < 1e-10);
        assert!(fit.residual < 1e-20);
        assert_eq!(fit.j1, 2.0);
    }

    #[test]
    fn hybrid_recovered() {
        let prof: Vec<(usize, f64)> = (1..15).map(|r| (r, 3.0 * (r as f64).powf(-0.3) * (-0.23 * (r as f64 - 1.0)).exp())).collect();
        let fit = fit_power_exp(&prof).unwrap();
        assert!((fit.p - 0.3).abs() < 1e-10);
        assert!((fit.k.unwrap() - 0.23).abs() < 1e-10);
    }

    #[test]
    fn hybrid_clamps_negative_rate() {
        // growing tail would need k < 0
        let prof: Vec<(usize, f64)> = (1..10).map(|r| (r, (r as f64).powf(-1.0) * (0.1 * r as f64).exp())).collect();
        let fit = fit_power_exp(&prof).unwrap();
        assert_eq!(fit.k, Some(0.0));
        assert_eq!(fit.p, fit_power_law(&prof).unwrap().p);
    }

    #[test]
    fn degenerate_profiles_rejected() {
        assert!(fit_power_law(&[(1, 1.0), (2, 0.5)]).is_err());
        assert!(fit_power_law(&[(1, 1.0), (2, 0.5), (2, 0.5)]).is_err());
        assert!(fit_power_law(&[(1, 1.0), (2, -0.5), (3, 0.2)]).is_err());
    }
}
