//! Command implementations behind the `qcrit` binary. Each reads its JSON or
//! CSV inputs, writes into an output directory and returns a short summary.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::collapse::{apply_window, collapse_series, CollapseOptions, LossMode, Window};
use crate::dynamics::{
    find_peak, run_protocol, scaled_curve, uniform_grid, Basis, HamiltonianSpec, Observable, ObservableSeries,
    ProtocolOptions, QuenchProtocol, Segment, SegmentEnd, ShotSettings,
};
use crate::error::{Error, Result};
use crate::interaction::{
    fit_power_exp, fit_power_law, ion_chain_jij, radial_profile, synthetic_jij, Boundary, InteractionMatrix, TrapParams,
};
use crate::io;
use crate::lmg::{
    double_quench_series, effective_temperature, gaussian_quench_fluct, quench_series, LmgParams, OscillatorParams,
    SwitchRule,
};
use crate::pipeline::{self, ExperimentConfig, TrapConfig};
use crate::spinwave;
use crate::stats::{jackknife_correlator, JackknifeMode};

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
}

/// Where the couplings of a quench come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Couplings {
    Lmg,
    PowerLaw {
        power: f64,
        #[serde(default = "open")]
        boundary: Boundary,
    },
    IonChain {
        #[serde(default)]
        trap: TrapConfig,
    },
    Matrix {
        path: PathBuf,
    },
}

fn open() -> Boundary {
    Boundary::Open
}

impl Couplings {
    pub fn build(&self, n: usize) -> Result<InteractionMatrix> {
        let j = match self {
            Couplings::Lmg => InteractionMatrix::uniform(n, 1.0)?,
            Couplings::PowerLaw { power, boundary } => synthetic_jij(n, *power, *boundary, 1.0)?,
            Couplings::IonChain { trap } => ion_chain_jij(&trap.params(n))?,
            Couplings::Matrix { path } => io::read_matrix(path)?,
        };
        if j.n() != n {
            return Err(Error::invalid(format!("coupling matrix has N = {}, expected {n}", j.n())));
        }
        Ok(j)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentInput {
    #[serde(default)]
    pub gamma_x: f64,
    #[serde(default)]
    pub gamma_y: f64,
    pub b: f64,
    pub end: SegmentEnd,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuenchInput {
    pub n: usize,
    pub couplings: Couplings,
    #[serde(default = "full")]
    pub basis: Basis,
    #[serde(default = "yes")]
    pub kac_normalized: bool,
    pub segments: Vec<SegmentInput>,
    #[serde(default)]
    pub observables: Vec<Observable>,
    #[serde(default)]
    pub shots: Option<pipeline::ShotConfig>,
}

fn full() -> Basis {
    Basis::Full
}

fn yes() -> bool {
    true
}

/// `quench`: protocol JSON in, series CSV out.
pub fn quench(input: &Path, seed: u64, out: &Path) -> Result<String> {
    let q: QuenchInput = read_json(input)?;
    let j = q.couplings.build(q.n)?;
    let segments = q
        .segments
        .iter()
        .map(|s| {
            Ok(Segment { spec: HamiltonianSpec::new(j.clone(), s.gamma_x, s.gamma_y, s.b, q.kac_normalized)?, end: s.end, dt: s.dt })
        })
        .collect::<Result<Vec<_>>>()?;
    let protocol = QuenchProtocol { n: q.n, basis: q.basis, segments };
    let opts = ProtocolOptions {
        shots: q.shots.map(|s| ShotSettings { shots: s.shots, bitflip: s.bitflip, seed }),
        ..Default::default()
    };
    let run = run_protocol(&protocol, &q.observables, &opts)?;
    let mut text = String::new();
    for (si, _) in protocol.segments.iter().enumerate() {
        let refs: Vec<&ObservableSeries> = run.series.iter().filter(|s| s.segment == si).collect();
        let meta = [("segment", si.to_string()), ("kac", format!("{:?}", j.kac())), ("duration", format!("{:?}", run.durations[si]))];
        let path = out.join(format!("quench_segment{si}.csv"));
        io::write_text(&path, &io::series_to_csv(&refs, &meta))?;
        text.push_str(&format!("segment {si}: {} samples, duration {:.4} -> {}\n", refs[0].len(), run.durations[si], path.display()));
    }
    Ok(text)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anisotropy {
    #[serde(default)]
    pub gamma_x: f64,
    #[serde(default)]
    pub gamma_y: f64,
    pub b: f64,
}

impl Anisotropy {
    fn params(&self, n: usize) -> Result<LmgParams> {
        LmgParams::new(n, self.gamma_x, self.gamma_y, self.b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LmgInput {
    pub n: usize,
    pub initial: Anisotropy,
    pub quench: Anisotropy,
    #[serde(default)]
    pub second: Option<Anisotropy>,
    #[serde(default)]
    pub switch: Option<SwitchRule>,
    pub t_end: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LmgReport {
    pub n: usize,
    pub switch_time: Option<f64>,
    pub peak_time: f64,
    pub peak_value: f64,
    /// Long-time <S_a^2>/N from the exact series and from Gaussian theory.
    pub time_average: f64,
    pub gaussian_prediction: Option<f64>,
    pub effective_temperature: Option<f64>,
}

/// `lmg`: exact Dicke-basis quench (single or double) with Gaussian reference.
pub fn lmg(input: &Path, out: &Path) -> Result<String> {
    let q: LmgInput = read_json(input)?;
    let times = uniform_grid(q.t_end, q.dt)?;
    let p0 = q.initial.params(q.n)?;
    let p1 = q.quench.params(q.n)?;
    let (series, switch_time, post) = match q.second {
        None => {
            let obs = Observable::correlator(if q.quench.gamma_y > q.quench.gamma_x { crate::dynamics::Axis::Y } else { crate::dynamics::Axis::X });
            (quench_series(&p0, &p1, &times, obs)?, None, q.quench)
        }
        Some(s) => {
            let rule = q.switch.ok_or_else(|| Error::invalid("a second quench needs a `switch` rule"))?;
            let d = double_quench_series(&p0, &p1, &s.params(q.n)?, rule, &times)?;
            (d.second, Some(d.switch_time), s)
        }
    };
    let peak = find_peak(&series)?;
    let nf = q.n as f64;
    let time_average = series.values.iter().sum::<f64>() / (series.len() as f64 * nf);
    let pre = OscillatorParams::from_lmg(q.initial.gamma_x, q.initial.gamma_y, q.initial.b);
    let post_osc = OscillatorParams::from_lmg(post.gamma_x, post.gamma_y, post.b);
    let single = q.second.is_none();
    let report = LmgReport {
        n: q.n,
        switch_time,
        peak_time: peak.time,
        peak_value: peak.value,
        time_average,
        gaussian_prediction: if single { gaussian_quench_fluct(&pre, &post_osc).ok().map(|x| 0.5 * x) } else { None },
        effective_temperature: if single { effective_temperature(&pre, &post_osc).ok() } else { None },
    };
    io::write_text(&out.join("lmg_series.csv"), &io::series_to_csv(&[&series], &[("N", q.n.to_string())]))?;
    io::write_json(&out.join("lmg_report.json"), &report)?;
    Ok(format!("peak {:.6e} at Jt = {:.4}; report in {}\n", peak.value, peak.time, out.display()))
}

/// `ionchain`: trap JSON in, coupling CSV plus profile fits out.
pub fn ionchain(input: &Path, out: &Path) -> Result<String> {
    let trap: TrapParams = read_json(input)?;
    let j = ion_chain_jij(&trap)?;
    let prof = radial_profile(&j);
    let fits = serde_json::json!({
        "n": j.n(),
        "kac": j.kac(),
        "profile": prof,
        "power_law": fit_power_law(&prof)?,
        "power_exp": fit_power_exp(&prof)?,
    });
    io::write_text(&out.join("jij.csv"), &io::matrix_to_csv(&j))?;
    io::write_json(&out.join("jij_fits.json"), &fits)?;
    Ok(format!("N = {}, kac = {:.6e}, p = {:.4}\n", j.n(), j.kac(), fits["power_law"]["p"]))
}

/// `lo:hi:step` inclusive field grid.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| Error::invalid(format!("bad grid '{s}', expected lo:hi:step"))))
        .collect::<Result<_>>()?;
    let [lo, hi, step] = parts[..] else {
        return Err(Error::invalid(format!("bad grid '{s}', expected lo:hi:step")));
    };
    if !(step > 0.0) || !(hi >= lo) {
        return Err(Error::invalid("grid needs hi >= lo and step > 0"));
    }
    let k = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=k).map(|i| lo + step * i as f64).collect())
}

/// `spinwave`: matrix CSV in, spectrum CSV out.
pub fn spinwave(matrix: &Path, fields: &str, out: &Path) -> Result<String> {
    let j = io::read_matrix(matrix)?;
    let rows = spinwave::spectrum_scan(&j, &parse_grid(fields)?)?;
    io::write_text(&out.join("spectrum.csv"), &pipeline::spectrum_csv(&rows, &[("N", j.n().to_string())]))?;
    let bc = spinwave::critical_field(&j)?;
    Ok(format!("B_c/kac = {bc:.8}\n"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollapseInput {
    #[serde(default = "default_init")]
    pub init: (f64, f64),
    #[serde(default)]
    pub window: Window,
    #[serde(default)]
    pub mode: LossMode,
}

fn default_init() -> (f64, f64) {
    (0.5, 0.25)
}

impl Default for CollapseInput {
    fn default() -> Self {
        CollapseInput { init: default_init(), window: Window::default(), mode: LossMode::default() }
    }
}

/// `collapse`: every CSV series in `dir`, one size per series.
pub fn collapse(dir: &Path, options: Option<&Path>, out: &Path) -> Result<String> {
    let opts: CollapseInput = match options {
        Some(p) => read_json(p)?,
        None => CollapseInput::default(),
    };
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    let mut family = Vec::new();
    for p in &paths {
        family.extend(io::read_series(p)?);
    }
    family.sort_by_key(|s| s.n);
    let co = CollapseOptions { init: opts.init, mode: opts.mode, ..Default::default() };
    let result = collapse_series(&family, opts.window, &co)?;
    for s in &family {
        let c = scaled_curve(&apply_window(s, opts.window), result.alpha, result.zeta)?;
        io::write_text(&out.join(format!("scaled_N{}.csv", s.n)), &io::curve_to_csv(&c, &[("N", s.n.to_string())]))?;
    }
    io::write_json(&out.join("collapse.json"), &result)?;
    Ok(format!(
        "alpha = {:.4} ({}), zeta = {:.4} ({}), S = {:.3e}\n",
        result.alpha,
        fmt_opt(result.d_alpha),
        result.zeta,
        fmt_opt(result.d_zeta),
        result.s_min
    ))
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or("n/a".into(), |v| format!("{v:.4}"))
}

/// `stats`: shot CSV in, jackknife correlator JSON out.
pub fn stats(shots: &Path, out: &Path) -> Result<String> {
    let set = io::read_shots(shots)?;
    let jk = jackknife_correlator(&set, JackknifeMode::Standard);
    let report = serde_json::json!({ "estimate": jk.estimate, "stderr": jk.stderr, "repetitions": set.repetitions() });
    io::write_json(&out.join("stats.json"), &report)?;
    Ok(format!("{report}\n"))
}

/// `run`: a pipeline experiment; `seed` overrides the config seed.
pub fn run(config: &Path, seed: Option<u64>, out: Option<&Path>) -> Result<String> {
    let mut c = ExperimentConfig::from_json(&fs::read_to_string(config)?)?;
    if let Some(s) = seed {
        c.seed = s;
    }
    let b = pipeline::run_experiment(&c, out)?;
    Ok(format!("{}\n{} files in {}\n", serde_json::to_string_pretty(&b.summary)?, b.manifest.files.len() + 1, b.dir.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("1:2:0.5").unwrap(), vec![1.0, 1.5, 2.0]);
        assert_eq!(parse_grid("0.9:1.2:0.1").unwrap().len(), 4);
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("2:1:0.1").is_err());
    }

    #[test]
    fn coupling_json_forms() {
        let c: Couplings = serde_json::from_str(r#"{"model":"power_law","power":0.9}"#).unwrap();
        assert_eq!(c, Couplings::PowerLaw { power: 0.9, boundary: Boundary::Open });
        assert_eq!(c.build(5).unwrap().n(), 5);
        let c: Couplings = serde_json::from_str(r#"{"model":"lmg"}"#).unwrap();
        assert!(c.build(4).unwrap().is_uniform(0.0));
    }
}
