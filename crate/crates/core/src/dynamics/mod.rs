//! Exact quench dynamics of the long-range transverse-field Ising model.

mod hamiltonian;
mod measure;
mod protocol;

use serde::{Deserialize, Serialize};

use crate::collapse::{Curve, Point};
use crate::error::{Error, Result};
use crate::linalg::{dot, expectation, norm, HermitianOperator, Krylov, C64};

pub use hamiltonian::{
    build_hamiltonian, build_hamiltonian_with_cap, ladder, DickeHamiltonian, FullHamiltonian, Hamiltonian,
    HamiltonianSpec, SpinComponent, DEFAULT_FULL_CAP,
};
pub use measure::{measurement_probabilities, pair_correlations, sample_measurements};
pub use protocol::{run_protocol, ProtocolOptions, ProtocolRun, QuenchProtocol, Segment, SegmentEnd, ShotSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Full,
    Dicke,
}

/// Pure state in the full 2^N basis or the symmetric Dicke sector.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinState {
    n: usize,
    basis: Basis,
    amps: Vec<C64>,
}

fn dim_of(n: usize, basis: Basis) -> Result<usize> {
    match basis {
        Basis::Full if n >= 31 => Err(Error::SizeCap { n, cap: 30 }),
        Basis::Full => Ok(1 << n),
        Basis::Dicke => Ok(n + 1),
    }
}

fn binomial_sqrt_weights(n: usize) -> Vec<f64> {
    // sqrt(C(n,k) / 2^n), via logs to stay finite for large n
    let mut lnc = vec![0.0f64; n + 1];
    for k in 1..=n {
        lnc[k] = lnc[k - 1] + ((n - k + 1) as f64).ln() - (k as f64).ln();
    }
    let ln2n = n as f64 * std::f64::consts::LN_2;
    lnc.iter().map(|l| (0.5 * (l - ln2n)).exp()).collect()
}

impl SpinState {
    pub fn all_down(n: usize, basis: Basis) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("need at least one spin"));
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim_of(n, basis)?];
        amps[0] = C64::new(1.0, 0.0);
        Ok(SpinState { n, basis, amps })
    }

    pub fn from_amplitudes(n: usize, basis: Basis, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != dim_of(n, basis)? {
            return Err(Error::invalid("amplitude vector has the wrong length"));
        }
        if (norm(&amps) - 1.0).abs() > 1e-10 {
            return Err(Error::invalid("state is not normalized"));
        }
        Ok(SpinState { n, basis, amps })
    }

    /// Product state with every spin along +x.
    pub fn polarized_x(n: usize, basis: Basis) -> Result<Self> {
        Self::x_superposition(n, basis, false)
    }

    /// (|+x...+x> + |-x...-x>)/sqrt(2).
    pub fn ghz_x(n: usize, basis: Basis) -> Result<Self> {
        Self::x_superposition(n, basis, true)
    }

    fn x_superposition(n: usize, basis: Basis, cat: bool) -> Result<Self> {
        let dim = dim_of(n, basis)?;
        // amplitude of |-x>^N on a state with d down spins carries (-1)^d
        let weight = |downs: usize| -> f64 {
            if cat {
                if downs % 2 == 0 {
                    std::f64::consts::SQRT_2
                } else {
                    0.0
                }
            } else {
                1.0
            }
        };
        let amps = match basis {
            Basis::Full => {
                let a = (0.5f64).powf(0.5 * n as f64);
                (0..dim).map(|s| C64::new(a * weight(n - (s as u64).count_ones() as usize), 0.0)).collect()
            }
            Basis::Dicke => {
                let w = binomial_sqrt_weights(n);
                (0..dim).map(|k| C64::new(w[k] * weight(n - k), 0.0)).collect()
            }
        };
        let mut st = SpinState { n, basis, amps };
        st.renormalize();
        Ok(st)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amps)
    }

    pub(crate) fn renormalize(&mut self) {
        let nrm = self.norm();
        self.amps.iter_mut().for_each(|z| *z /= nrm);
    }

    pub fn overlap(&self, other: &SpinState) -> Result<C64> {
        if self.n != other.n || self.basis != other.basis {
            return Err(Error::invalid("states live in different spaces"));
        }
        Ok(dot(&self.amps, &other.amps))
    }

    /// Expectation of the parity operator prod_i sigma^z_i.
    pub fn parity(&self) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .map(|(idx, a)| {
                let downs = match self.basis {
                    Basis::Full => self.n - (idx as u64).count_ones() as usize,
                    Basis::Dicke => self.n - idx,
                };
                let sign = if downs % 2 == 0 { 1.0 } else { -1.0 };
                sign * a.norm_sqr()
            })
            .sum()
    }
}

/// Returns (<S_a>, <S_a^2>).
pub fn spin_moments(state: &SpinState, axis: Axis) -> (f64, f64) {
    let op = SpinComponent { n: state.n, basis: state.basis, axis };
    let mut tmp = vec![C64::new(0.0, 0.0); state.amps.len()];
    op.apply(&state.amps, &mut tmp);
    (dot(&state.amps, &tmp).re, norm(&tmp).powi(2))
}

/// <S_a^2> - <S_a>^2.
pub fn net_correlator(state: &SpinState, axis: Axis) -> f64 {
    let (m, m2) = spin_moments(state, axis);
    m2 - m * m
}

pub fn energy<H: HermitianOperator + ?Sized>(state: &SpinState, op: &H) -> f64 {
    expectation(op, &state.amps)
}

/// e^{-i H dt} applied to `state`, with norm and energy drift checks.
pub fn evolve(state: &SpinState, spec: &HamiltonianSpec, dt: f64, tol: f64) -> Result<SpinState> {
    if !(dt >= 0.0) {
        return Err(Error::invalid("evolution time must be non-negative"));
    }
    let h = Hamiltonian::for_basis(spec, state.basis, DEFAULT_FULL_CAP)?;
    if h.n() != state.n {
        return Err(Error::invalid("state and Hamiltonian sizes differ"));
    }
    let mut out = state.clone();
    let e0 = energy(state, &h);
    Krylov::with_tol(tol).propagate(&h, &mut out.amps, dt)?;
    check_drift(state, &out, e0, energy(&out, &h))?;
    Ok(out)
}

pub(crate) fn check_drift(before: &SpinState, after: &SpinState, e0: f64, e1: f64) -> Result<()> {
    let dn = (after.norm() - before.norm()).abs();
    if dn >= 1e-9 {
        return Err(Error::numerical(format!("norm drift {dn:.3e}")));
    }
    let de = (e1 - e0).abs() / e0.abs().max(1.0);
    if de >= 1e-8 {
        return Err(Error::numerical(format!("relative energy drift {de:.3e}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Observable {
    Cx2,
    Cy2,
    Sx,
    #[serde(rename = "energy")]
    Energy,
}

impl Observable {
    pub fn correlator(axis: Axis) -> Self {
        match axis {
            Axis::Y => Observable::Cy2,
            _ => Observable::Cx2,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Observable::Cx2 => "Cx2",
            Observable::Cy2 => "Cy2",
            Observable::Sx => "Sx",
            Observable::Energy => "energy",
        }
    }

    pub fn from_label(s: &str) -> Result<Self> {
        match s {
            "Cx2" => Ok(Observable::Cx2),
            "Cy2" => Ok(Observable::Cy2),
            "Sx" => Ok(Observable::Sx),
            "energy" => Ok(Observable::Energy),
            other => Err(Error::invalid(format!("unknown observable label '{other}'"))),
        }
    }

    pub fn measure<H: HermitianOperator + ?Sized>(&self, state: &SpinState, h: &H) -> f64 {
        match self {
            Observable::Cx2 => net_correlator(state, Axis::X),
            Observable::Cy2 => net_correlator(state, Axis::Y),
            Observable::Sx => spin_moments(state, Axis::X).0,
            Observable::Energy => energy(state, h),
        }
    }
}

/// Observable values on a time grid of dimensionless times Jt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub label: Observable,
    pub n: usize,
    pub kac: f64,
    pub segment: usize,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Option<Vec<f64>>,
}

impl ObservableSeries {
    pub fn new(label: Observable, n: usize, kac: f64, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let s = ObservableSeries { label, n, kac, segment: 0, times, values, stderr: None };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.len() != self.values.len() {
            return Err(Error::invalid("series times and values differ in length"));
        }
        if let Some(e) = &self.stderr {
            if e.len() != self.values.len() {
                return Err(Error::invalid("series stderr has the wrong length"));
            }
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("series times must be strictly increasing"));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("series values must be finite"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Keeps the first `len` samples.
    pub fn truncated(&self, len: usize) -> ObservableSeries {
        let mut s = self.clone();
        s.times.truncate(len);
        s.values.truncate(len);
        if let Some(e) = s.stderr.as_mut() {
            e.truncate(len);
        }
        s
    }
}

/// Uniform grid 0, dt, 2dt, ... up to `t_end`, ending exactly at `t_end`.
pub fn uniform_grid(t_end: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::invalid("time grid needs dt > 0 and a finite t_end >= 0"));
    }
    let steps = (t_end / dt + 1e-9).floor() as usize;
    let mut g: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
    let last = g.last_mut().unwrap();
    if (t_end - *last).abs() <= 1e-9 * dt {
        *last = t_end;
    } else {
        g.push(t_end);
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeakKind {
    /// First strict three-point local maximum.
    Local,
    /// No local maximum; global maximum in the interior.
    GlobalFallback,
    /// No local maximum; the maximum sits at an end of the series.
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub index: usize,
    pub time: f64,
    pub value: f64,
    pub kind: PeakKind,
}

fn median3(a: f64, b: f64, c: f64) -> f64 {
    a.max(b).min(a.min(b).max(c))
}

pub fn find_peak(series: &ObservableSeries) -> Result<Peak> {
    let n = series.values.len();
    if n < 3 {
        return Err(Error::invalid("peak search needs at least 3 samples"));
    }
    let raw = &series.values;
    let v: Vec<f64> = if series.stderr.is_some() {
        (0..n)
            .map(|i| if i == 0 || i + 1 == n { raw[i] } else { median3(raw[i - 1], raw[i], raw[i + 1]) })
            .collect()
    } else {
        raw.clone()
    };
    let filtered = series.stderr.is_some();
    let mut i = 1;
    while i + 1 < n {
        if v[i] > v[i - 1] {
            // the median filter flattens tops, so a bounded plateau counts as a maximum
            let mut j = i;
            if filtered {
                while j + 1 < n && v[j + 1] == v[i] {
                    j += 1;
                }
            }
            if j + 1 < n && v[j + 1] < v[i] {
                let k = (i..=j).fold(i, |b, k| if raw[k] > raw[b] { k } else { b });
                return Ok(Peak { index: k, time: series.times[k], value: raw[k], kind: PeakKind::Local });
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    let (g, _) = v
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) });
    let kind = if g == 0 || g == n - 1 { PeakKind::Boundary } else { PeakKind::GlobalFallback };
    Ok(Peak { index: g, time: series.times[g], value: raw[g], kind })
}

/// x = Jt / N^zeta, y = value / N^(1+alpha), uncertainties scaled alike.
pub fn scaled_curve(series: &ObservableSeries, alpha: f64, zeta: f64) -> Result<Curve> {
    let n = series.n as f64;
    let sx = n.powf(-zeta);
    let sy = n.powf(-(1.0 + alpha));
    let points = series
        .times
        .iter()
        .zip(&series.values)
        .enumerate()
        .map(|(i, (&t, &v))| {
            let dy = series.stderr.as_ref().map_or(0.0, |e| e[i]);
            Point { x: t * sx, y: v * sy, dx: 0.0, dy: dy * sy }
        })
        .collect();
    Curve::new(points)
}

/// Index range ending at the first minimum after the first maximum
/// (inclusive), or the full series when no such minimum exists.
pub fn first_min_after_first_max(series: &ObservableSeries) -> usize {
    let v = &series.values;
    let n = v.len();
    let peak = match find_peak(series) {
        Ok(p) if p.kind == PeakKind::Local => p.index,
        _ => return n,
    };
    for i in peak + 1..n.saturating_sub(1) {
        if v[i] < v[i - 1] && v[i] <= v[i + 1] {
            return i + 1;
        }
    }
    n
}
