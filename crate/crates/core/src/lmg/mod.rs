//! Infinite-range (LMG) model: exact Dicke-sector quenches, Gaussian and
//! semiclassical closed forms, the finite-size order parameter.

mod gaussian;
mod order;
mod twa;

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    find_peak, Axis, Basis, DickeHamiltonian, Observable, ObservableSeries, PeakKind, SpinComponent, SpinState,
};
use crate::error::{Error, Result};
use crate::linalg::{tridiagonal_lowest, Krylov, C64};

pub use gaussian::{
    effective_temperature, effective_temperature_double, exponent_hierarchy, exponent_hierarchy_recursive,
    gaussian_quench_fluct, teff_exponent, OscillatorParams,
};
pub use order::{
    fit_order_parameter, mean_field_magnetization, order_parameter, order_parameter_curve, OrderParameterFit,
};
pub use twa::{
    twa_ensemble_avg, twa_monte_carlo, twa_time_avg, twa_time_avg_elliptic, twa_trajectory, MonteCarloEstimate,
    SemiclassicalParams,
};

/// Largest N accepted for Dicke-sector dynamics.
pub const MAX_DICKE_N: usize = 1 << 14;

/// H = -(2/N)(gx Sx^2 + gy Sy^2) + 2 b Sz, couplings in units of the Kac factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmgParams {
    pub n: usize,
    pub gamma_x: f64,
    pub gamma_y: f64,
    pub b: f64,
}

impl LmgParams {
    pub fn new(n: usize, gamma_x: f64, gamma_y: f64, b: f64) -> Result<Self> {
        let p = LmgParams { n, gamma_x, gamma_y, b };
        p.validate()?;
        Ok(p)
    }

    /// Interaction off: the all-down state is the ground state for b > 0.
    pub fn paramagnet(n: usize, b: f64) -> Result<Self> {
        LmgParams::new(n, 0.0, 0.0, b)
    }

    pub fn critical_x(n: usize) -> Result<Self> {
        LmgParams::new(n, 1.0, 0.0, 1.0)
    }

    pub fn critical_y(n: usize) -> Result<Self> {
        LmgParams::new(n, 0.0, 1.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > MAX_DICKE_N {
            return Err(Error::invalid(format!("LMG size {} outside 1..={MAX_DICKE_N}", self.n)));
        }
        if !(self.gamma_x.is_finite() && self.gamma_y.is_finite() && self.b.is_finite()) {
            return Err(Error::invalid("LMG parameters must be finite"));
        }
        Ok(())
    }

    fn axis(&self) -> Axis {
        if self.gamma_y > self.gamma_x {
            Axis::Y
        } else {
            Axis::X
        }
    }
}

pub fn lmg_hamiltonian(p: &LmgParams) -> Result<DickeHamiltonian> {
    p.validate()?;
    DickeHamiltonian::new(p.n, 2.0 / p.n as f64, p.gamma_x, p.gamma_y, p.b, 0.0)
}

/// Lowest eigenpair, found separately in the two parity sectors (even and
/// odd number of up spins) where H is tridiagonal.
pub fn ground_state(p: &LmgParams) -> Result<(f64, SpinState)> {
    let h = lmg_hamiltonian(p)?;
    let n = p.n;
    let d = h.diagonal();
    let o = h.second_diagonal();
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    for parity in 0..2 {
        let idx: Vec<usize> = (parity..=n).step_by(2).collect();
        if idx.is_empty() {
            continue;
        }
        let dd: Vec<f64> = idx.iter().map(|&k| d[k]).collect();
        let ee: Vec<f64> = idx.iter().skip(1).map(|&k| o[k - 2]).collect();
        let (e, v) = tridiagonal_lowest(&dd, &ee)?;
        if best.as_ref().is_none_or(|b| e < b.0) {
            best = Some((e, parity, v));
        }
    }
    let (e, parity, v) = best.expect("sector 0 is never empty");
    let mut amps = vec![C64::new(0.0, 0.0); n + 1];
    for (j, k) in (parity..=n).step_by(2).enumerate() {
        amps[k] = C64::new(v[j], 0.0);
    }
    Ok((e, SpinState::from_amplitudes(n, Basis::Dicke, amps)?))
}

/// Ground-state <S_x^2>/N.
pub fn ground_state_fluct(p: &LmgParams) -> Result<f64> {
    let (_, st) = ground_state(p)?;
    Ok(crate::dynamics::spin_moments(&st, Axis::X).1 / p.n as f64)
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() || !(times[0] >= 0.0) {
        return Err(Error::invalid("time grid must be non-empty and start at t >= 0"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("time grid must be finite and strictly increasing"));
    }
    Ok(())
}

/// Evolves `state` in place through `times` (measured from its current
/// time 0), recording `obs` at each grid point.
fn record_on_grid(state: &mut SpinState, h: &DickeHamiltonian, times: &[f64], obs: Observable) -> Result<Vec<f64>> {
    let krylov = Krylov::with_tol(1e-10);
    let mut out = Vec::with_capacity(times.len());
    let mut t_prev = 0.0;
    for &t in times {
        if t > t_prev {
            krylov.propagate(h, state.amplitudes_mut(), t - t_prev)?;
        }
        t_prev = t;
        out.push(obs.measure(state, h));
    }
    Ok(out)
}

fn drift_check(state: &SpinState) -> Result<()> {
    let dn = (state.norm() - 1.0).abs();
    if dn >= 1e-9 {
        return Err(Error::numerical(format!("norm drift {dn:.3e}")));
    }
    Ok(())
}

/// Evolves the ground state of `p0` under `p1`, recording `obs` on `times`.
pub fn quench_series(p0: &LmgParams, p1: &LmgParams, times: &[f64], obs: Observable) -> Result<ObservableSeries> {
    if p0.n != p1.n {
        return Err(Error::invalid("quench parameters disagree on N"));
    }
    check_times(times)?;
    let h = lmg_hamiltonian(p1)?;
    let (_, mut st) = ground_state(p0)?;
    let e0 = obs_energy(&st, &h);
    let values = record_on_grid(&mut st, &h, times, obs)?;
    drift_check(&st)?;
    energy_check(e0, obs_energy(&st, &h))?;
    ObservableSeries::new(obs, p0.n, 1.0, times.to_vec(), values)
}

fn obs_energy(st: &SpinState, h: &DickeHamiltonian) -> f64 {
    crate::dynamics::energy(st, h)
}

fn energy_check(e0: f64, e1: f64) -> Result<()> {
    let de = (e1 - e0).abs() / e0.abs().max(1.0);
    if de >= 1e-8 {
        return Err(Error::numerical(format!("relative energy drift {de:.3e}")));
    }
    Ok(())
}

/// When the first quench hands over to the second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchRule {
    /// At the first maximum of the first-quench correlator, sampled every `dt`.
    FirstPeak { dt: f64, horizon: f64 },
    /// At Jt = tau * N^zeta.
    Scaled { tau: f64, zeta: f64 },
    At(f64),
}

#[derive(Debug, Clone)]
pub struct DoubleQuench {
    pub switch_time: f64,
    /// First-quench correlator up to the switch (only for `FirstPeak`).
    pub first: Option<ObservableSeries>,
    /// Second-quench correlator against the time since the switch.
    pub second: ObservableSeries,
}

/// Ground state of `p0`, evolved under `p1` until the switch, then under
/// `p2`; records the correlator along the axis of `p2` on `times2`.
pub fn double_quench_series(
    p0: &LmgParams,
    p1: &LmgParams,
    p2: &LmgParams,
    rule: SwitchRule,
    times2: &[f64],
) -> Result<DoubleQuench> {
    if p0.n != p1.n || p1.n != p2.n {
        return Err(Error::invalid("quench parameters disagree on N"));
    }
    check_times(times2)?;
    let n = p0.n;
    let h1 = lmg_hamiltonian(p1)?;
    let h2 = lmg_hamiltonian(p2)?;
    let (_, mut st) = ground_state(p0)?;
    let krylov = Krylov::with_tol(1e-10);
    let mut first = None;
    let switch_time = match rule {
        SwitchRule::At(t) if t >= 0.0 => {
            krylov.propagate(&h1, st.amplitudes_mut(), t)?;
            t
        }
        SwitchRule::Scaled { tau, zeta } if tau >= 0.0 => {
            let t = tau * (n as f64).powf(zeta);
            krylov.propagate(&h1, st.amplitudes_mut(), t)?;
            t
        }
        SwitchRule::FirstPeak { dt, horizon } if dt > 0.0 && horizon > dt => {
            let obs = Observable::correlator(p1.axis());
            let (series, state) = march_to_first_peak(st, &h1, obs, dt, horizon)?;
            st = state;
            let t = *series.times.last().unwrap();
            first = Some(series);
            t
        }
        _ => return Err(Error::invalid("switch time and sampling steps must be positive")),
    };
    let e0 = obs_energy(&st, &h2);
    let obs = Observable::correlator(p2.axis());
    let values = record_on_grid(&mut st, &h2, times2, obs)?;
    drift_check(&st)?;
    energy_check(e0, obs_energy(&st, &h2))?;
    let second = ObservableSeries::new(obs, n, 1.0, times2.to_vec(), values)?;
    Ok(DoubleQuench { switch_time, first, second })
}

/// Steps until the first strict local maximum of `obs`; returns the series
/// ending at the maximum and the state there. Falls back to the global
/// maximum within the horizon.
fn march_to_first_peak(
    start: SpinState,
    h: &DickeHamiltonian,
    obs: Observable,
    dt: f64,
    horizon: f64,
) -> Result<(ObservableSeries, SpinState)> {
    let krylov = Krylov::with_tol(1e-10);
    let n = start.n();
    let mut st = start.clone();
    let mut prev = st.clone();
    let mut times = vec![0.0];
    let mut vals = vec![obs.measure(&st, h)];
    let steps = (horizon / dt).round() as usize;
    for i in 1..=steps {
        prev.clone_from(&st);
        krylov.propagate(h, st.amplitudes_mut(), dt)?;
        times.push(i as f64 * dt);
        vals.push(obs.measure(&st, h));
        let m = vals.len();
        if m >= 3 && vals[m - 2] > vals[m - 3] && vals[m - 2] > vals[m - 1] {
            times.pop();
            vals.pop();
            let s = ObservableSeries::new(obs, n, 1.0, times, vals)?;
            return Ok((s, prev));
        }
    }
    let full = ObservableSeries::new(obs, n, 1.0, times, vals)?;
    let p = find_peak(&full)?;
    debug_assert!(p.kind != PeakKind::Local);
    let mut st = start;
    krylov.propagate(h, st.amplitudes_mut(), full.times[p.index])?;
    Ok((full.truncated(p.index + 1), st))
}

/// <S_a> of a Dicke state, for symmetry checks.
pub fn mean_spin(state: &SpinState, axis: Axis) -> f64 {
    let op = SpinComponent { n: state.n(), basis: state.basis(), axis };
    crate::dynamics::energy(state, &op)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{net_correlator, uniform_grid, HamiltonianSpec};
    use crate::interaction::InteractionMatrix;
    use crate::linalg::to_dense;
    use nalgebra::DMatrix;

    fn dense_eigs(h: &DickeHamiltonian) -> Vec<f64> {
        let d = to_dense(h);
        let re = DMatrix::from_fn(d.nrows(), d.ncols(), |i, j| d[(i, j)].re);
        let mut e: Vec<f64> = re.symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        e
    }

    #[test]
    fn spin_half_is_a_field_term() {
        let h = lmg_hamiltonian(&LmgParams::new(1, 0.7, 0.2, 1.3).unwrap()).unwrap();
        let e = dense_eigs(&h);
        // quadratic terms are the constant -(2)(0.9)/4
        let c = -2.0 * 0.9 / 4.0;
        assert!((e[0] - (c - 1.3)).abs() < 1e-12 && (e[1] - (c + 1.3)).abs() < 1e-12);
    }

    #[test]
    fn matches_kac_normalized_full_model() {
        let n = 8;
        let spec = HamiltonianSpec::new(InteractionMatrix::uniform(n, 1.0).unwrap(), 1.0, 0.0, 1.1, true).unwrap();
        let d1 = DickeHamiltonian::from_spec(&spec).unwrap();
        let d2 = lmg_hamiltonian(&LmgParams::new(n, 1.0, 0.0, 1.1).unwrap()).unwrap();
        let (e1, e2) = (dense_eigs(&d1), dense_eigs(&d2));
        // equal up to the constant from the i = j terms
        let shift = e1[0] - e2[0];
        for (a, b) in e1.iter().zip(&e2) {
            assert!((a - b - shift).abs() < 1e-10);
        }
    }

    #[test]
    fn isotropic_eigenstates_have_equal_fluctuations() {
        let p = LmgParams::new(10, 0.6, 0.6, 0.8).unwrap();
        let (_, gs) = ground_state(&p).unwrap();
        let (_, x2) = crate::dynamics::spin_moments(&gs, Axis::X);
        let (_, y2) = crate::dynamics::spin_moments(&gs, Axis::Y);
        assert!((x2 - y2).abs() < 1e-9);
    }

    #[test]
    fn ground_state_energy_matches_dense() {
        for p in [LmgParams::new(9, 1.0, 0.0, 1.0).unwrap(), LmgParams::new(12, 0.3, 0.8, 0.5).unwrap()] {
            let (e, st) = ground_state(&p).unwrap();
            let h = lmg_hamiltonian(&p).unwrap();
            assert!((e - dense_eigs(&h)[0]).abs() < 1e-10);
            assert!((crate::dynamics::energy(&st, &h) - e).abs() < 1e-10);
        }
    }

    #[test]
    fn two_spin_ground_state_fluctuation() {
        // basis |0>,|1>,|2> up spins; even sector {0, 2}:
        // diag -(1/2)(S(S+1) - m^2) + 2m = {-2.5, 1.5}, coupling -(1/4) * sqrt2 * sqrt2 = -1/2
        let m = DMatrix::from_row_slice(2, 2, &[-2.5, -0.5, -0.5, 1.5]);
        let eig = m.symmetric_eigen();
        let i = if eig.eigenvalues[0] < eig.eigenvalues[1] { 0 } else { 1 };
        let (a0, a2) = (eig.eigenvectors[(0, i)], eig.eigenvectors[(1, i)]);
        // S_x^2 on the even sector: <0|Sx^2|0> = <2|Sx^2|2> = 1/2, <0|Sx^2|2> = 1/2
        let sx2 = 0.5 * a0 * a0 + 0.5 * a2 * a2 + a0 * a2;
        let got = ground_state_fluct(&LmgParams::new(2, 1.0, 0.0, 1.0).unwrap()).unwrap();
        assert!((got - sx2 / 2.0).abs() < 1e-12, "{got} vs {}", sx2 / 2.0);
    }

    #[test]
    fn strong_field_limit() {
        let v = ground_state_fluct(&LmgParams::new(40, 1.0, 0.0, 1e4).unwrap()).unwrap();
        assert!((v - 0.25).abs() < 1e-3);
        let v = ground_state_fluct(&LmgParams::new(40, 0.0, 0.0, 1.0).unwrap()).unwrap();
        assert!((v - 0.25).abs() < 1e-12);
    }

    #[test]
    fn quench_series_examples() {
        let p = LmgParams::paramagnet(64, 1.0).unwrap();
        let t = uniform_grid(2.0, 0.25).unwrap();
        let s = quench_series(&p, &p, &t, Observable::Cx2).unwrap();
        assert!(s.values.iter().all(|v| (v - 16.0).abs() < 1e-9));
        let c = quench_series(&p, &LmgParams::critical_x(64).unwrap(), &t, Observable::Cx2).unwrap();
        assert!((c.values[0] - 16.0).abs() < 1e-9);
        assert!(c.values[4] > c.values[0]);
    }

    #[test]
    fn magnetization_stays_zero_under_ising_symmetry() {
        let n = 30;
        let h = lmg_hamiltonian(&LmgParams::critical_x(n).unwrap()).unwrap();
        let mut st = SpinState::all_down(n, Basis::Dicke).unwrap();
        for _ in 0..10 {
            Krylov::default().propagate(&h, st.amplitudes_mut(), 0.7).unwrap();
            assert!(mean_spin(&st, Axis::X).abs() < 1e-8);
            assert!((st.parity() - 1.0).abs() < 1e-9 || (st.parity() + 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn double_quench_switch_at_zero_is_single_quench() {
        let n = 32;
        let p0 = LmgParams::paramagnet(n, 1.0).unwrap();
        let t = uniform_grid(3.0, 0.1).unwrap();
        let dq = double_quench_series(&p0, &LmgParams::critical_x(n).unwrap(), &LmgParams::critical_y(n).unwrap(), SwitchRule::At(0.0), &t).unwrap();
        let sq = quench_series(&p0, &LmgParams::critical_y(n).unwrap(), &t, Observable::Cy2).unwrap();
        for (a, b) in dq.second.values.iter().zip(&sq.values) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn double_quench_is_continuous_at_the_switch() {
        let n = 48;
        let p0 = LmgParams::paramagnet(n, 1.0).unwrap();
        let p1 = LmgParams::critical_x(n).unwrap();
        let t = uniform_grid(2.0, 0.05).unwrap();
        let dq = double_quench_series(&p0, &p1, &LmgParams::critical_y(n).unwrap(), SwitchRule::FirstPeak { dt: 0.05, horizon: 30.0 }, &t).unwrap();
        let first = dq.first.as_ref().unwrap();
        assert_eq!(find_peak(first).unwrap().kind, PeakKind::Boundary);
        // the Cy2 of the state at the switch
        let (_, mut st) = ground_state(&p0).unwrap();
        Krylov::with_tol(1e-11).propagate(&lmg_hamiltonian(&p1).unwrap(), st.amplitudes_mut(), dq.switch_time).unwrap();
        assert!((net_correlator(&st, Axis::Y) - dq.second.values[0]).abs() < 1e-7);
        let scaled = double_quench_series(&p0, &p1, &LmgParams::critical_y(n).unwrap(), SwitchRule::Scaled { tau: 1.0, zeta: 0.25 }, &t).unwrap();
        assert!((scaled.switch_time - (n as f64).powf(0.25)).abs() < 1e-12);
    }
}
