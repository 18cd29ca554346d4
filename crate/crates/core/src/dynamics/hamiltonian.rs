use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interaction::InteractionMatrix;
use crate::linalg::{HermitianOperator, C64};

use super::{Axis, Basis};

pub const DEFAULT_FULL_CAP: usize = 16;

/// Couplings, anisotropies and transverse field of one Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpec {
    pub j: InteractionMatrix,
    pub gamma_x: f64,
    pub gamma_y: f64,
    pub bz: f64,
    /// Selects the -(1/2J)sum_{i != j} prefactor instead of the bare -sum_{i<j}.
    pub kac_normalized: bool,
}

impl HamiltonianSpec {
    pub fn new(j: InteractionMatrix, gamma_x: f64, gamma_y: f64, bz: f64, kac_normalized: bool) -> Result<Self> {
        let spec = HamiltonianSpec { j, gamma_x, gamma_y, bz, kac_normalized };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for g in [self.gamma_x, self.gamma_y] {
            if !(0.0..=1.0).contains(&g) {
                return Err(Error::invalid(format!("anisotropy {g} outside [0, 1]")));
            }
        }
        if !self.bz.is_finite() {
            return Err(Error::invalid("field must be finite"));
        }
        if self.kac_normalized && !(self.j.kac().abs() > 0.0) {
            return Err(Error::invalid("Kac normalization needs a nonzero Kac factor"));
        }
        Ok(())
    }

    /// Quench segments drive exactly one of the two anisotropies.
    pub fn validate_segment(&self) -> Result<()> {
        self.validate()?;
        if (self.gamma_x != 0.0) == (self.gamma_y != 0.0) {
            return Err(Error::invalid("exactly one of gamma_x, gamma_y must be nonzero in a quench segment"));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.j.n()
    }

    /// Factor converting physical time to the reported dimensionless time Jt.
    pub fn time_scale(&self) -> f64 {
        if self.kac_normalized {
            1.0
        } else {
            self.j.kac()
        }
    }

    fn pair_prefactor(&self) -> f64 {
        if self.kac_normalized {
            1.0 / self.j.kac()
        } else {
            1.0
        }
    }

    /// Axis of the measured correlator during a segment with this Hamiltonian.
    pub fn natural_axis(&self) -> Axis {
        if self.gamma_y != 0.0 && self.gamma_x == 0.0 {
            Axis::Y
        } else {
            Axis::X
        }
    }
}

/// Matrix-free Hamiltonian on the 2^N computational basis (bit 1 = spin up).
#[derive(Debug, Clone)]
pub struct FullHamiltonian {
    n: usize,
    bz: f64,
    // (mask, sigma^x sigma^x weight, sigma^y sigma^y weight), already signed
    pairs: Vec<(usize, f64, f64)>,
    bound: f64,
}

impl FullHamiltonian {
    pub fn n(&self) -> usize {
        self.n
    }

    fn diagonal(&self, s: usize) -> f64 {
        self.bz * (2.0 * s.count_ones() as f64 - self.n as f64)
    }
}

impl HermitianOperator for FullHamiltonian {
    fn dim(&self) -> usize {
        1 << self.n
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        y.par_chunks_mut(1 << 10).enumerate().for_each(|(c, chunk)| {
            let base = c << 10;
            for (o, out) in chunk.iter_mut().enumerate() {
                let s = base + o;
                let mut acc = x[s] * self.diagonal(s);
                for &(mask, wx, wy) in &self.pairs {
                    let t = s ^ mask;
                    // sigma^y sigma^y: -1 when the two bits agree, +1 otherwise
                    let same = (s & mask == 0) || (s & mask == mask);
                    let w = if same { wx - wy } else { wx + wy };
                    acc += x[t] * w;
                }
                *out = acc;
            }
        });
    }

    fn norm_bound(&self) -> f64 {
        self.bz.abs() * self.n as f64 + self.pairs.iter().map(|p| p.1.abs() + p.2.abs()).sum::<f64>()
    }
}

pub fn build_hamiltonian(spec: &HamiltonianSpec) -> Result<FullHamiltonian> {
    build_hamiltonian_with_cap(spec, DEFAULT_FULL_CAP)
}

pub fn build_hamiltonian_with_cap(spec: &HamiltonianSpec, cap: usize) -> Result<FullHamiltonian> {
    spec.validate()?;
    let n = spec.n();
    if n > cap || n >= usize::BITS as usize - 1 {
        return Err(Error::SizeCap { n, cap });
    }
    let c = spec.pair_prefactor();
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        for b in a + 1..n {
            let jab = spec.j.get(a, b) * c;
            if jab != 0.0 {
                pairs.push(((1 << a) | (1 << b), -jab * spec.gamma_x, -jab * spec.gamma_y));
            }
        }
    }
    let mut h = FullHamiltonian { n, bz: spec.bz, pairs, bound: 0.0 };
    h.bound = h.norm_bound();
    Ok(h)
}

/// Collective-spin Hamiltonian -kappa (gx Sx^2 + gy Sy^2) + 2 h Sz + offset on
/// the (N+1)-dimensional symmetric sector, indexed by the number of up spins.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DickeHamiltonian {
    n: usize,
    diag: Vec<f64>,
    off2: Vec<f64>,
}

/// S+ |k> = ladder(n, k) |k+1>.
pub fn ladder(n: usize, k: usize) -> f64 {
    let s = 0.5 * n as f64;
    let m = k as f64 - s;
    (s * (s + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
}

impl DickeHamiltonian {
    pub fn new(n: usize, kappa: f64, gamma_x: f64, gamma_y: f64, field: f64, offset: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("Dicke sector needs n >= 1"));
        }
        let s = 0.5 * n as f64;
        let diag = (0..=n)
            .map(|k| {
                let m = k as f64 - s;
                -kappa * 0.5 * (gamma_x + gamma_y) * (s * (s + 1.0) - m * m) + 2.0 * field * m + offset
            })
            .collect();
        let off2 = (0..n.saturating_sub(1))
            .map(|k| -kappa * 0.25 * (gamma_x - gamma_y) * ladder(n, k) * ladder(n, k + 1))
            .collect();
        Ok(DickeHamiltonian { n, diag, off2 })
    }

    /// Equivalent of a permutation-symmetric full-basis Hamiltonian spec.
    pub fn from_spec(spec: &HamiltonianSpec) -> Result<Self> {
        spec.validate()?;
        if !spec.j.is_uniform(1e-12) {
            return Err(Error::invalid("Dicke basis requires uniform all-to-all couplings"));
        }
        let n = spec.n();
        let c = spec.j.get(0, 1) * spec.pair_prefactor();
        // sum_{i<j} s^a_i s^a_j = 2 S_a^2 - N/2
        let offset = c * (spec.gamma_x + spec.gamma_y) * 0.5 * n as f64;
        DickeHamiltonian::new(n, 2.0 * c, spec.gamma_x, spec.gamma_y, spec.bz, offset)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// Couplings between |k> and |k+2>.
    pub fn second_diagonal(&self) -> &[f64] {
        &self.off2
    }
}

impl HermitianOperator for DickeHamiltonian {
    fn dim(&self) -> usize {
        self.n + 1
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        for k in 0..=self.n {
            let mut acc = x[k] * self.diag[k];
            if k >= 2 {
                acc += x[k - 2] * self.off2[k - 2];
            }
            if k + 2 <= self.n {
                acc += x[k + 2] * self.off2[k];
            }
            y[k] = acc;
        }
    }

    fn norm_bound(&self) -> f64 {
        let d = self.diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let o = self.off2.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        d + 2.0 * o
    }
}

/// Either representation behind one operator interface.
#[derive(Debug, Clone)]
pub enum Hamiltonian {
    Full(FullHamiltonian),
    Dicke(DickeHamiltonian),
}

impl Hamiltonian {
    pub fn for_basis(spec: &HamiltonianSpec, basis: Basis, full_cap: usize) -> Result<Self> {
        match basis {
            Basis::Full => build_hamiltonian_with_cap(spec, full_cap).map(Hamiltonian::Full),
            Basis::Dicke => DickeHamiltonian::from_spec(spec).map(Hamiltonian::Dicke),
        }
    }

    pub fn basis(&self) -> Basis {
        match self {
            Hamiltonian::Full(_) => Basis::Full,
            Hamiltonian::Dicke(_) => Basis::Dicke,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Hamiltonian::Full(h) => h.n,
            Hamiltonian::Dicke(h) => h.n,
        }
    }
}

impl HermitianOperator for Hamiltonian {
    fn dim(&self) -> usize {
        match self {
            Hamiltonian::Full(h) => h.dim(),
            Hamiltonian::Dicke(h) => h.dim(),
        }
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        match self {
            Hamiltonian::Full(h) => h.apply(x, y),
            Hamiltonian::Dicke(h) => h.apply(x, y),
        }
    }

    fn norm_bound(&self) -> f64 {
        match self {
            Hamiltonian::Full(h) => h.bound,
            Hamiltonian::Dicke(h) => h.norm_bound(),
        }
    }
}

/// Total spin component S_a = sum_i sigma^a_i / 2 in either basis.
#[derive(Debug, Clone, Copy)]
pub struct SpinComponent {
    pub n: usize,
    pub basis: Basis,
    pub axis: Axis,
}

impl HermitianOperator for SpinComponent {
    fn dim(&self) -> usize {
        match self.basis {
            Basis::Full => 1 << self.n,
            Basis::Dicke => self.n + 1,
        }
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let n = self.n;
        let half = 0.5;
        let i_unit = C64::new(0.0, 1.0);
        match self.basis {
            Basis::Full => {
                y.par_chunks_mut(1 << 10).enumerate().for_each(|(c, chunk)| {
                    let base = c << 10;
                    for (o, out) in chunk.iter_mut().enumerate() {
                        let s = base + o;
                        *out = match self.axis {
                            Axis::Z => x[s] * (s.count_ones() as f64 - 0.5 * n as f64),
                            Axis::X => (0..n).map(|i| x[s ^ (1 << i)]).sum::<C64>() * half,
                            Axis::Y => (0..n)
                                .map(|i| {
                                    let src = x[s ^ (1 << i)];
                                    if s & (1 << i) == 0 {
                                        src * i_unit
                                    } else {
                                        -src * i_unit
                                    }
                                })
                                .sum::<C64>()
                                * half,
                        };
                    }
                });
            }
            Basis::Dicke => {
                for k in 0..=n {
                    let up = if k > 0 { x[k - 1] * ladder(n, k - 1) } else { C64::new(0.0, 0.0) };
                    let down = if k < n { x[k + 1] * ladder(n, k) } else { C64::new(0.0, 0.0) };
                    y[k] = match self.axis {
                        Axis::Z => x[k] * (k as f64 - 0.5 * n as f64),
                        Axis::X => (up + down) * half,
                        // (S+ - S-) / 2i
                        Axis::Y => (up - down) * C64::new(0.0, -0.5),
                    };
                }
            }
        }
    }

    fn norm_bound(&self) -> f64 {
        0.5 * self.n as f64
    }
}
