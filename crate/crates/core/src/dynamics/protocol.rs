use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Krylov;
use crate::stats::{jackknife_correlator, JackknifeMode};

use super::measure::sample_with_rng;
use super::{
    check_drift, energy, find_peak, uniform_grid, Axis, Basis, Hamiltonian, HamiltonianSpec, Observable,
    ObservableSeries, PeakKind, SpinState, DEFAULT_FULL_CAP,
};

/// How a segment ends. The last segment always runs for its full length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentEnd {
    /// Fixed duration in units of 1/J.
    Duration(f64),
    /// At the first peak of the segment's correlator, searched up to `horizon`.
    FirstPeak { horizon: f64 },
    /// At Jt = tau * N^zeta.
    Scaled { tau: f64, zeta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub spec: HamiltonianSpec,
    pub end: SegmentEnd,
    /// Sampling step of the recorded series in units of 1/J.
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuenchProtocol {
    pub n: usize,
    pub basis: Basis,
    pub segments: Vec<Segment>,
}

impl QuenchProtocol {
    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::invalid("protocol has no segments"));
        }
        for seg in &self.segments {
            seg.spec.validate_segment()?;
            if seg.spec.n() != self.n {
                return Err(Error::invalid("segment couplings do not match the protocol size"));
            }
            if !(seg.dt > 0.0) {
                return Err(Error::invalid("segment sampling step must be positive"));
            }
            let ok = match seg.end {
                SegmentEnd::Duration(t) => t > 0.0 && t.is_finite(),
                SegmentEnd::FirstPeak { horizon } => horizon > 0.0 && horizon.is_finite(),
                SegmentEnd::Scaled { tau, zeta } => tau > 0.0 && zeta.is_finite(),
            };
            if !ok {
                return Err(Error::invalid("segment durations must be positive"));
            }
        }
        Ok(())
    }
}

/// Replace exact observables by shot estimates with jackknife errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotSettings {
    pub shots: usize,
    pub bitflip: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolOptions {
    pub tol: f64,
    pub full_cap: usize,
    pub shots: Option<ShotSettings>,
}

impl Default for ProtocolOptions {
    fn default() -> Self {
        ProtocolOptions { tol: 1e-9, full_cap: DEFAULT_FULL_CAP, shots: None }
    }
}

#[derive(Debug, Clone)]
pub struct ProtocolRun {
    pub series: Vec<ObservableSeries>,
    /// Segment lengths actually used, in units of 1/J.
    pub durations: Vec<f64>,
    pub final_state: SpinState,
}

struct Recorder<'a> {
    h: &'a Hamiltonian,
    kinds: &'a [Observable],
    shots: Option<ShotSettings>,
    stream: u64,
}

impl Recorder<'_> {
    fn record(&mut self, state: &SpinState, values: &mut [Vec<f64>], errs: &mut [Vec<f64>]) -> Result<()> {
        for (k, kind) in self.kinds.iter().enumerate() {
            let axis = match kind {
                Observable::Cx2 => Some(Axis::X),
                Observable::Cy2 => Some(Axis::Y),
                _ => None,
            };
            match (self.shots, axis) {
                (Some(s), Some(axis)) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
                    rng.set_stream(self.stream);
                    self.stream += 1;
                    let set = sample_with_rng(state, axis, s.shots, s.bitflip, &mut rng)?;
                    let jk = jackknife_correlator(&set, JackknifeMode::Standard);
                    values[k].push(jk.estimate);
                    errs[k].push(jk.stderr);
                }
                _ => {
                    values[k].push(kind.measure(state, self.h));
                    errs[k].push(0.0);
                }
            }
        }
        Ok(())
    }
}

/// Evolves from all-down-z through every segment, recording observables on
/// each segment's grid with times measured from the start of the segment.
/// With an empty `observables` list each segment records the correlator
/// along its own coupling axis.
pub fn run_protocol(protocol: &QuenchProtocol, observables: &[Observable], opts: &ProtocolOptions) -> Result<ProtocolRun> {
    protocol.validate()?;
    let n = protocol.n;
    let mut state = SpinState::all_down(n, protocol.basis)?;
    let krylov = Krylov::with_tol(opts.tol);
    let mut out = Vec::new();
    let mut durations = Vec::new();
    let mut stream = 0u64;
    let last = protocol.segments.len() - 1;

    for (si, seg) in protocol.segments.iter().enumerate() {
        let h = Hamiltonian::for_basis(&seg.spec, protocol.basis, opts.full_cap)?;
        let scale = seg.spec.time_scale();
        let primary = Observable::correlator(seg.spec.natural_axis());
        let kinds: Vec<Observable> = if observables.is_empty() { vec![primary] } else { observables.to_vec() };
        let (horizon, stop_at_peak) = match seg.end {
            SegmentEnd::Duration(t) => (t, false),
            SegmentEnd::Scaled { tau, zeta } => (tau * (n as f64).powf(zeta), false),
            SegmentEnd::FirstPeak { horizon } => (horizon, si != last),
        };
        let grid = uniform_grid(horizon, seg.dt)?;
        let start = state.clone();
        let e0 = energy(&state, &h);
        let mut rec = Recorder { h: &h, kinds: &kinds, shots: opts.shots, stream };
        let mut values = vec![Vec::with_capacity(grid.len()); kinds.len()];
        let mut errs = vec![Vec::with_capacity(grid.len()); kinds.len()];
        // tracks the primary correlator for online peak detection
        let mut trace: Vec<f64> = Vec::with_capacity(grid.len());
        let mut prev = state.clone();
        let mut peak_at: Option<usize> = None;
        for (gi, &t) in grid.iter().enumerate() {
            if gi > 0 {
                if stop_at_peak {
                    prev.clone_from(&state);
                }
                krylov.propagate(&h, state.amplitudes_mut(), (t - grid[gi - 1]) / scale)?;
            }
            rec.record(&state, &mut values, &mut errs)?;
            if stop_at_peak {
                trace.push(primary.measure(&state, &h));
                let m = trace.len();
                if m >= 3 && trace[m - 2] > trace[m - 3] && trace[m - 2] > trace[m - 1] {
                    peak_at = Some(m - 2);
                    break;
                }
            }
        }
        let mut used = *grid.last().unwrap();
        let mut keep = values[0].len();
        if stop_at_peak {
            match peak_at {
                Some(i) => {
                    state = prev.clone();
                    keep = i + 1;
                    used = grid[i];
                }
                None => {
                    // no local maximum within the horizon: fall back to the global one
                    let s = ObservableSeries::new(primary, n, seg.spec.j.kac(), grid.clone(), trace.clone())?;
                    let p = find_peak(&s)?;
                    debug_assert!(p.kind != PeakKind::Local);
                    state = start.clone();
                    krylov.propagate(&h, state.amplitudes_mut(), grid[p.index] / scale)?;
                    keep = p.index + 1;
                    used = grid[p.index];
                }
            }
        }
        check_drift(&start, &state, e0, energy(&state, &h))?;
        stream = rec.stream;
        for (k, kind) in kinds.iter().enumerate() {
            out.push(ObservableSeries {
                label: *kind,
                n,
                kac: seg.spec.j.kac(),
                segment: si,
                times: grid[..keep].to_vec(),
                values: values[k][..keep].to_vec(),
                stderr: opts.shots.map(|_| errs[k][..keep].to_vec()),
            });
        }
        durations.push(used);
    }
    Ok(ProtocolRun { series: out, durations, final_state: state })
}
