use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{Krylov, C64};
use crate::stats::ShotSet;

use super::{Axis, Basis, SpinComponent, SpinState};

/// Applies the single-qubit basis change for `axis` to every qubit: after
/// the call, amplitude index bit i = 1 means spin i points along +axis.
fn rotate_full(amps: &mut [C64], n: usize, axis: Axis) {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let i_unit = C64::new(0.0, 1.0);
    if axis == Axis::Z {
        return;
    }
    for q in 0..n {
        let bit = 1usize << q;
        for s in 0..amps.len() {
            if s & bit != 0 {
                continue;
            }
            let a0 = amps[s];
            let a1 = amps[s | bit];
            let (up, down) = match axis {
                Axis::X => ((a1 + a0) * r, (a1 - a0) * r),
                _ => ((a1 - i_unit * a0) * r, (a1 + i_unit * a0) * r),
            };
            amps[s | bit] = up;
            amps[s] = down;
        }
    }
}

/// Probabilities of measurement outcomes along `axis`: indexed by bitstring
/// in the full basis, by the number of up spins in the Dicke basis.
pub fn measurement_probabilities(state: &SpinState, axis: Axis) -> Result<Vec<f64>> {
    let mut amps = state.amplitudes().to_vec();
    match state.basis() {
        Basis::Full => rotate_full(&mut amps, state.n(), axis),
        Basis::Dicke => {
            // exp(+i pi/2 S_y) maps +x onto +z; exp(-i pi/2 S_x) maps +y onto +z
            let (op_axis, t) = match axis {
                Axis::X => (Axis::Y, -std::f64::consts::FRAC_PI_2),
                Axis::Y => (Axis::X, std::f64::consts::FRAC_PI_2),
                Axis::Z => (Axis::Z, 0.0),
            };
            let op = SpinComponent { n: state.n(), basis: Basis::Dicke, axis: op_axis };
            Krylov::with_tol(1e-12).propagate(&op, &mut amps, t)?;
        }
    }
    Ok(amps.iter().map(|a| a.norm_sqr()).collect())
}

fn sample_index(cdf: &[f64], u: f64) -> usize {
    let target = u * cdf[cdf.len() - 1];
    cdf.partition_point(|&c| c <= target).min(cdf.len() - 1)
}

/// Projective shots along `axis` with independent bit flips of probability
/// `bitflip_eps`. Bits are 1 for spin up along the measured axis.
pub fn sample_measurements(
    state: &SpinState,
    axis: Axis,
    shots: usize,
    bitflip_eps: f64,
    seed: u64,
) -> Result<ShotSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with_rng(state, axis, shots, bitflip_eps, &mut rng)
}

pub(crate) fn sample_with_rng(
    state: &SpinState,
    axis: Axis,
    shots: usize,
    bitflip_eps: f64,
    rng: &mut ChaCha8Rng,
) -> Result<ShotSet> {
    if !(0.0..=1.0).contains(&bitflip_eps) {
        return Err(Error::invalid(format!("bit-flip probability {bitflip_eps} outside [0, 1]")));
    }
    let n = state.n();
    let probs = measurement_probabilities(state, axis)?;
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in &probs {
        acc += p;
        cdf.push(acc);
    }
    let mut bits = vec![0u8; shots * n];
    for row in bits.chunks_mut(n) {
        let idx = sample_index(&cdf, rng.random::<f64>());
        match state.basis() {
            Basis::Full => {
                for (q, b) in row.iter_mut().enumerate() {
                    *b = ((idx >> q) & 1) as u8;
                }
            }
            Basis::Dicke => {
                for q in index::sample(rng, n, idx) {
                    row[q] = 1;
                }
            }
        }
        if bitflip_eps > 0.0 {
            for b in row.iter_mut() {
                if rng.random::<f64>() < bitflip_eps {
                    *b ^= 1;
                }
            }
        }
    }
    ShotSet::new(n, bits, Some(axis), None)
}

/// <sigma^a_i sigma^a_j> for all pairs; full basis only.
pub fn pair_correlations(state: &SpinState, axis: Axis) -> Result<nalgebra::DMatrix<f64>> {
    if state.basis() != Basis::Full {
        return Err(Error::invalid("site-resolved correlations need a full-basis state"));
    }
    let n = state.n();
    let probs = measurement_probabilities(state, axis)?;
    let mut c = nalgebra::DMatrix::zeros(n, n);
    for (s, p) in probs.iter().enumerate() {
        if *p == 0.0 {
            continue;
        }
        for i in 0..n {
            let zi = if (s >> i) & 1 == 1 { 1.0 } else { -1.0 };
            for j in i..n {
                let zj = if (s >> j) & 1 == 1 { 1.0 } else { -1.0 };
                c[(i, j)] += p * zi * zj;
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            c[(i, j)] = c[(j, i)];
        }
    }
    Ok(c)
}
