//! Shot-level estimators and jackknife errors.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::Axis;
use crate::error::{Error, Result};

/// R repetitions of an N-ion projective measurement, one bit per ion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotSet {
    n: usize,
    bits: Vec<u8>,
    pub axis: Option<Axis>,
    pub time: Option<f64>,
}

impl ShotSet {
    pub fn new(n: usize, bits: Vec<u8>, axis: Option<Axis>, time: Option<f64>) -> Result<Self> {
        if n == 0 || bits.len() % n != 0 {
            return Err(Error::invalid("shot matrix must have a whole number of rows of length N >= 1"));
        }
        if bits.len() / n < 2 {
            return Err(Error::invalid("need at least two repetitions"));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::invalid("shot entries must be 0 or 1"));
        }
        Ok(ShotSet { n, bits, axis, time })
    }

    pub fn from_rows(rows: &[Vec<u8>], axis: Option<Axis>, time: Option<f64>) -> Result<Self> {
        let n = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("ragged shot rows"));
        }
        ShotSet::new(n, rows.concat(), axis, time)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn repetitions(&self) -> usize {
        self.bits.len() / self.n
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u8]> {
        self.bits.chunks(self.n)
    }

    /// Collective projection s = sum_i (2 b_i - 1)/2 of each shot.
    pub fn projections(&self) -> Vec<f64> {
        self.rows().map(shot_projection).collect()
    }
}

fn shot_projection(row: &[u8]) -> f64 {
    row.iter().map(|&b| b as f64 - 0.5).sum()
}

fn variance_of(s: &[f64]) -> f64 {
    let r = s.len() as f64;
    let m = s.iter().sum::<f64>() / r;
    s.iter().map(|v| v * v).sum::<f64>() / r - m * m
}

/// mean(s^2) - mean(s)^2 over shots.
pub fn correlator_estimate(shots: &ShotSet) -> f64 {
    variance_of(&shots.projections())
}

/// The same estimator over an arbitrary subset of shot rows.
pub fn correlator_of_rows(rows: &[&[u8]]) -> f64 {
    let s: Vec<f64> = rows.iter().map(|r| shot_projection(r)).collect();
    variance_of(&s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JackknifeMode {
    /// SE^2 = ((R-1)/R) sum (theta_i - theta_bar)^2.
    #[default]
    Standard,
    /// Plain variance of the leave-one-out estimates.
    RawVariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JackknifeResult {
    pub estimate: f64,
    pub stderr: f64,
    pub replicates: usize,
}

fn spread(thetas: &[f64], mode: JackknifeMode) -> f64 {
    let r = thetas.len() as f64;
    let mean = thetas.iter().sum::<f64>() / r;
    let ss: f64 = thetas.iter().map(|t| (t - mean).powi(2)).sum();
    match mode {
        JackknifeMode::Standard => (ss * (r - 1.0) / r).sqrt(),
        JackknifeMode::RawVariance => (ss / r).sqrt(),
    }
}

/// Leave-one-out standard error of `estimator`; reports the full-sample estimate.
pub fn jackknife_error<F>(shots: &ShotSet, estimator: F, mode: JackknifeMode) -> JackknifeResult
where
    F: Fn(&[&[u8]]) -> f64 + Sync,
{
    let rows: Vec<&[u8]> = shots.rows().collect();
    let r = rows.len();
    let thetas: Vec<f64> = (0..r)
        .into_par_iter()
        .map(|skip| {
            let subset: Vec<&[u8]> = rows.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, r)| *r).collect();
            estimator(&subset)
        })
        .collect();
    JackknifeResult { estimate: estimator(&rows), stderr: spread(&thetas, mode), replicates: r }
}

/// Jackknife of the net-correlator estimator from running sums, O(R).
pub fn jackknife_correlator(shots: &ShotSet, mode: JackknifeMode) -> JackknifeResult {
    let s = shots.projections();
    let r = s.len() as f64;
    let s1: f64 = s.iter().sum();
    let s2: f64 = s.iter().map(|v| v * v).sum();
    let thetas: Vec<f64> = s
        .iter()
        .map(|v| {
            let m = (s1 - v) / (r - 1.0);
            (s2 - v * v) / (r - 1.0) - m * m
        })
        .collect();
    JackknifeResult { estimate: variance_of(&s), stderr: spread(&thetas, mode), replicates: s.len() }
}

/// Jackknife of an arbitrary estimator over plain numbers.
pub fn jackknife_values<F>(values: &[f64], estimator: F, mode: JackknifeMode) -> Result<JackknifeResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if values.len() < 2 {
        return Err(Error::invalid("jackknife needs at least two values"));
    }
    let thetas: Vec<f64> = (0..values.len())
        .into_par_iter()
        .map(|skip| {
            let sub: Vec<f64> = values.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, v)| *v).collect();
            estimator(&sub)
        })
        .collect();
    Ok(JackknifeResult { estimate: estimator(values), stderr: spread(&thetas, mode), replicates: values.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_shots(r: usize, n: usize, p: f64, seed: u64) -> ShotSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bits = (0..r * n).map(|_| (rng.random::<f64>() < p) as u8).collect();
        ShotSet::new(n, bits, Some(Axis::X), None).unwrap()
    }

    #[test]
    fn correlator_examples() {
        let same = ShotSet::from_rows(&[vec![1, 0, 1], vec![1, 0, 1], vec![1, 0, 1]], None, None).unwrap();
        assert_eq!(correlator_estimate(&same), 0.0);
        let alt = ShotSet::from_rows(&[vec![1; 6], vec![0; 6], vec![1; 6], vec![0; 6]], None, None).unwrap();
        assert_eq!(correlator_estimate(&alt), 9.0);
    }

    #[test]
    fn shot_set_contract() {
        assert!(ShotSet::new(3, vec![0, 1, 0], None, None).is_err());
        assert!(ShotSet::new(2, vec![0, 2, 0, 1], None, None).is_err());
        assert!(ShotSet::from_rows(&[vec![0, 1], vec![1]], None, None).is_err());
    }

    #[test]
    fn constant_data_has_zero_error() {
        let s = ShotSet::from_rows(&vec![vec![1, 1, 0]; 10], None, None).unwrap();
        let jk = jackknife_error(&s, correlator_of_rows, JackknifeMode::Standard);
        assert_eq!(jk.stderr, 0.0);
        assert_eq!(jk.replicates, 10);
    }

    #[test]
    fn jackknife_of_mean_is_standard_error() {
        let v: Vec<f64> = (0..57).map(|i| ((i * 37) % 11) as f64 * 0.3 - 1.0).collect();
        let r = v.len() as f64;
        let mean = v.iter().sum::<f64>() / r;
        let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1.0)).sqrt();
        let jk = jackknife_values(&v, |x| x.iter().sum::<f64>() / x.len() as f64, JackknifeMode::Standard).unwrap();
        assert!((jk.stderr - sd / r.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn fast_path_matches_generic() {
        let s = random_shots(400, 6, 0.4, 11);
        let a = jackknife_error(&s, correlator_of_rows, JackknifeMode::Standard);
        let b = jackknife_correlator(&s, JackknifeMode::Standard);
        assert_eq!(a.replicates, 400);
        assert!((a.stderr - b.stderr).abs() < 1e-10 * a.stderr);
        assert!((a.estimate - b.estimate).abs() < 1e-12);
        let raw = jackknife_correlator(&s, JackknifeMode::RawVariance);
        assert!((raw.stderr * (399.0f64).sqrt() - b.stderr).abs() < 1e-9);
    }

    #[test]
    fn standard_error_scales_as_inverse_root() {
        let xs: Vec<f64> = [100usize, 400, 1600].iter().map(|&r| (r as f64).ln()).collect();
        // average over a few seeds to tame fluctuations of the error itself
        let ys: Vec<f64> = [100usize, 400, 1600]
            .iter()
            .map(|&r| {
                let se: f64 = (0..8).map(|seed| jackknife_correlator(&random_shots(r, 8, 0.3, seed), JackknifeMode::Standard).stderr).sum::<f64>() / 8.0;
                se.ln()
            })
            .collect();
        let mx = xs.iter().sum::<f64>() / 3.0;
        let my = ys.iter().sum::<f64>() / 3.0;
        let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        assert!((slope + 0.5).abs() < 0.05, "slope {slope}");
    }
}
