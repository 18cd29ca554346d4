//! Figure-level experiment drivers: configuration, self-checks and
//! deterministic output bundles.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::collapse::{
    collapse_series, fit_peak_scaling, objective, CollapseOptions, CollapseResult, Curve, LossMode, PeakFit, PeakMode,
    Window,
};
use crate::dynamics::{
    find_peak, pair_correlations, run_protocol, scaled_curve, uniform_grid, Axis, Basis, HamiltonianSpec, Observable,
    ObservableSeries, ProtocolOptions, QuenchProtocol, Segment, SegmentEnd, ShotSettings, SpinState,
};
use crate::error::{Error, Result};
use crate::interaction::{
    fit_power_exp, fit_power_law, ion_chain_jij, radial_profile, synthetic_jij, Boundary, DecayFit, InteractionMatrix,
    TrapParams,
};
use crate::io;
use crate::lmg::{
    self, double_quench_series, fit_order_parameter, order_parameter_curve, quench_series, twa_ensemble_avg,
    twa_monte_carlo, twa_time_avg, LmgParams, OrderParameterFit, SemiclassicalParams, SwitchRule,
};
use crate::spinwave;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    OrderParameter,
    SingleQuenchCollapse,
    DoubleQuenchCollapse,
    SpinwaveGap,
    JijProfile,
    TwaCheck,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::OrderParameter => "order_parameter",
            ExperimentKind::SingleQuenchCollapse => "single_quench_collapse",
            ExperimentKind::DoubleQuenchCollapse => "double_quench_collapse",
            ExperimentKind::SpinwaveGap => "spinwave_gap",
            ExperimentKind::JijProfile => "jij_profile",
            ExperimentKind::TwaCheck => "twa_check",
        }
    }

    /// Oracle suites whose failure blocks reporting.
    pub fn checks(&self) -> &'static [SelfCheck] {
        use SelfCheck::*;
        match self {
            ExperimentKind::OrderParameter => &[DickeVsFull, TricomiClosedForm],
            ExperimentKind::SingleQuenchCollapse | ExperimentKind::DoubleQuenchCollapse => {
                &[DickeVsFull, CollapseIdentity]
            }
            ExperimentKind::SpinwaveGap => &[SpinwaveRoutes],
            ExperimentKind::JijProfile => &[PowerLawRecovery],
            ExperimentKind::TwaCheck => &[TricomiClosedForm],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    #[default]
    Lmg,
    PowerLaw,
    IonChain,
}

/// Trap settings for `ion_chain`; the ion number comes from `sizes`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapConfig {
    pub nu_com: f64,
    pub nu_axial: f64,
    pub detuning: f64,
    pub rabi: f64,
    pub nu_recoil: f64,
}

impl Default for TrapConfig {
    fn default() -> Self {
        TrapConfig { nu_com: 4.7e6, nu_axial: 0.53e6, detuning: 56e3, rabi: 1.0e6, nu_recoil: 14e3 }
    }
}

impl TrapConfig {
    pub fn params(&self, n: usize) -> TrapParams {
        TrapParams::with_detuning(n, self.nu_com, self.nu_axial, self.detuning, self.rabi, self.nu_recoil)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotConfig {
    pub shots: usize,
    #[serde(default)]
    pub bitflip: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwaConfig {
    pub r: f64,
    pub u: f64,
    pub d: f64,
    pub samples: usize,
}

impl Default for TwaConfig {
    fn default() -> Self {
        TwaConfig { r: 0.2, u: 0.5, d: 1.0, samples: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub sizes: Vec<usize>,
    /// Seeds every random stream; there is no implicit entropy.
    pub seed: u64,
    #[serde(default)]
    pub model: Model,
    /// Post-quench fields, or the spectrum grid for `spinwave_gap`.
    #[serde(default)]
    pub fields: Vec<f64>,
    #[serde(default)]
    pub power: Option<f64>,
    #[serde(default)]
    pub boundary: Option<Boundary>,
    #[serde(default)]
    pub trap: Option<TrapConfig>,
    /// Sampling step in units of 1/J.
    #[serde(default)]
    pub dt: Option<f64>,
    /// Time window prefactor: Jt_max = t_factor * N^zeta.
    #[serde(default)]
    pub t_factor: Option<f64>,
    #[serde(default)]
    pub shots: Option<ShotConfig>,
    #[serde(default)]
    pub twa: Option<TwaConfig>,
    #[serde(default)]
    pub collapse_mode: Option<LossMode>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind, sizes: Vec<usize>, seed: u64) -> Self {
        ExperimentConfig {
            experiment,
            sizes,
            seed,
            model: Model::default(),
            fields: Vec::new(),
            power: None,
            boundary: None,
            trap: None,
            dt: None,
            t_factor: None,
            shots: None,
            twa: None,
            collapse_mode: None,
            output: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(Error::invalid("config needs at least one system size"));
        }
        if self.sizes.iter().any(|&n| n < 2) {
            return Err(Error::invalid("system sizes must be at least 2"));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(Error::invalid("dt must be positive"));
            }
        }
        if let Some(s) = self.shots {
            if s.shots < 2 || !(0.0..=1.0).contains(&s.bitflip) {
                return Err(Error::invalid("shots need >= 2 repetitions and bitflip in [0, 1]"));
            }
        }
        let collapse = matches!(self.experiment, ExperimentKind::SingleQuenchCollapse | ExperimentKind::DoubleQuenchCollapse);
        if collapse && self.sizes.len() < 2 {
            return Err(Error::invalid("collapse experiments need at least two sizes"));
        }
        if self.model == Model::PowerLaw && self.power.is_none() {
            return Err(Error::invalid("power_law model needs `power`"));
        }
        if self.experiment == ExperimentKind::OrderParameter && self.model != Model::Lmg {
            return Err(Error::invalid("order_parameter runs on the lmg model"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, output directory excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        hex(&Sha256::digest(&bytes))
    }

    fn interaction(&self, n: usize) -> Result<InteractionMatrix> {
        match self.model {
            Model::Lmg => InteractionMatrix::uniform(n, 1.0),
            Model::PowerLaw => synthetic_jij(n, self.power.unwrap_or(1.0), self.boundary.unwrap_or(Boundary::Open), 1.0),
            Model::IonChain => ion_chain_jij(&self.trap.unwrap_or_default().params(n)),
        }
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelfCheck {
    DickeVsFull,
    TricomiClosedForm,
    CollapseIdentity,
    SpinwaveRoutes,
    PowerLawRecovery,
}

impl SelfCheck {
    pub fn name(&self) -> &'static str {
        match self {
            SelfCheck::DickeVsFull => "dicke_vs_full",
            SelfCheck::TricomiClosedForm => "tricomi_closed_form",
            SelfCheck::CollapseIdentity => "collapse_identity",
            SelfCheck::SpinwaveRoutes => "spinwave_routes",
            SelfCheck::PowerLawRecovery => "power_law_recovery",
        }
    }

    /// Runs the oracle and returns its worst deviation; Err when it exceeds
    /// the tolerance.
    pub fn run(&self) -> Result<f64> {
        let (dev, tol) = match self {
            SelfCheck::DickeVsFull => {
                let n = 6;
                let spec = HamiltonianSpec::new(InteractionMatrix::uniform(n, 1.0)?, 1.0, 0.0, 1.0, true)?;
                let seg = Segment { spec, end: SegmentEnd::Duration(2.0), dt: 0.25 };
                let run = |basis| {
                    run_protocol(&QuenchProtocol { n, basis, segments: vec![seg.clone()] }, &[], &ProtocolOptions::default())
                };
                let (a, b) = (run(Basis::Dicke)?, run(Basis::Full)?);
                let dev = a.series[0].values.iter().zip(&b.series[0].values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                (dev, 1e-9)
            }
            SelfCheck::TricomiClosedForm => {
                let sc = SemiclassicalParams::new(0.3, 0.5, 1.2)?;
                let (lim, k) = (12.0 / 1.2f64.sqrt(), 20_000);
                let h = 2.0 * lim / k as f64;
                let (mut num, mut den) = (0.0, 0.0);
                for i in 0..k {
                    let v = -lim + (i as f64 + 0.5) * h;
                    let w = (-1.2 * v * v).exp();
                    num += w * twa_time_avg(&sc, v);
                    den += w;
                }
                ((twa_ensemble_avg(&sc)? - num / den).abs(), 1e-7)
            }
            SelfCheck::CollapseIdentity => {
                let c = Curve::from_xy(&[0.0, 0.5, 1.0, 1.5], &[0.0, 1.0, 0.2, 0.7])?;
                (objective(&[c.clone(), c.clone(), c], LossMode::Unweighted)?, 0.0)
            }
            SelfCheck::SpinwaveRoutes => {
                let j = synthetic_jij(12, 0.9, Boundary::Open, 1.0)?;
                ((spinwave::critical_field(&j)? - spinwave::critical_field_direct(&j)?).abs(), 1e-8)
            }
            SelfCheck::PowerLawRecovery => {
                let j = synthetic_jij(20, 0.73, Boundary::Open, 1.0)?;
                ((fit_power_law(&radial_profile(&j))?.p - 0.73).abs(), 1e-8)
            }
        };
        if dev > tol {
            return Err(Error::SelfCheck(format!("{}: deviation {dev:.3e} > {tol:.1e}", self.name())));
        }
        Ok(dev)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    pub config_hash: String,
    pub version: String,
    pub seed: u64,
    pub checks: Vec<CheckRecord>,
    pub files: Vec<FileRecord>,
}

/// Output of one experiment: the files written (relative paths) and the
/// headline result as JSON.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub summary: serde_json::Value,
}

struct Writer {
    dir: PathBuf,
    files: Vec<FileRecord>,
}

impl Writer {
    fn text(&mut self, name: &str, text: &str) -> Result<()> {
        io::write_text(&self.dir.join(name), text)?;
        self.files.push(FileRecord { path: name.to_string(), sha256: hex(&Sha256::digest(text.as_bytes())) });
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.text(name, &s)
    }
}

/// Runs the experiment's self-checks, then the experiment, writing a
/// bundle under `out` (or the config's `output`, or `./out`).
pub fn run_experiment(config: &ExperimentConfig, out: Option<&Path>) -> Result<Bundle> {
    config.validate()?;
    let mut checks = Vec::new();
    for c in config.experiment.checks() {
        checks.push(CheckRecord { name: c.name().to_string(), deviation: c.run()? });
    }
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
        .join(config.experiment.name());
    let mut w = Writer { dir: dir.clone(), files: Vec::new() };
    w.json("config.json", config)?;
    let summary = match config.experiment {
        ExperimentKind::OrderParameter => order_parameter_experiment(config, &mut w)?,
        ExperimentKind::SingleQuenchCollapse => quench_collapse_experiment(config, &mut w, false)?,
        ExperimentKind::DoubleQuenchCollapse => quench_collapse_experiment(config, &mut w, true)?,
        ExperimentKind::SpinwaveGap => spinwave_experiment(config, &mut w)?,
        ExperimentKind::JijProfile => jij_experiment(config, &mut w)?,
        ExperimentKind::TwaCheck => twa_experiment(config, &mut w)?,
    };
    w.json("summary.json", &summary)?;
    let manifest = Manifest {
        experiment: config.experiment.name().to_string(),
        config_hash: config.hash(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        checks,
        files: w.files.clone(),
    };
    io::write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(Bundle { dir, manifest, summary })
}

fn meta(config: &ExperimentConfig, extra: &[(&'static str, String)]) -> Vec<(&'static str, String)> {
    let mut m = vec![("experiment", config.experiment.name().to_string()), ("config", config.hash())];
    m.extend_from_slice(extra);
    m
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct OrderParameterReport {
    n: usize,
    fit: OrderParameterFit,
    errors: [f64; 3],
}

fn order_parameter_experiment(config: &ExperimentConfig, w: &mut Writer) -> Result<serde_json::Value> {
    let fields = if config.fields.is_empty() {
        (1..=40).map(|i| 0.05 * i as f64).collect()
    } else {
        config.fields.clone()
    };
    let dt = config.dt.unwrap_or(0.05);
    let window = config.t_factor.unwrap_or(ORDER_WINDOW);
    let mut reports = Vec::new();
    for &n in &config.sizes {
        let curve = order_parameter_curve(n, &fields, window, dt)?;
        let mut s = io_meta(&meta(config, &[("N", n.to_string()), ("window", format!("{window:?}"))]));
        s.push_str("B,M2\n");
        for (b, m2) in &curve {
            s.push_str(&format!("{b:?},{m2:?}\n"));
        }
        w.text(&format!("order_parameter_N{n}.csv"), &s)?;
        let fit = fit_order_parameter(&curve, n, order_parameter_init(&curve))?;
        reports.push(OrderParameterReport { n, errors: fit.errors(), fit });
    }
    w.json("order_parameter_fits.json", &reports)?;
    Ok(serde_json::to_value(&reports)?)
}

/// Time window for the maximal correlator, in units of 1/J.
pub const ORDER_WINDOW: f64 = 15.0;

/// Starting point (B_c, D, A) for the order-parameter fit from the data.
pub fn order_parameter_init(curve: &[(f64, f64)]) -> (f64, f64, f64) {
    let peak = curve.iter().fold(0.0f64, |m, p| m.max(p.1));
    // the model peaks near A/4 deep in the ordered phase
    (1.0, 0.5, (4.0 * peak).max(1e-6))
}

fn io_meta(meta: &[(&str, String)]) -> String {
    meta.iter().map(|(k, v)| format!("# {k}={v}\n")).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuenchCollapseReport {
    pub collapse: CollapseResult,
    pub peak_fit: PeakFit,
    /// Switch-time prefactor tau with Jt* = tau N^(1/4); double quench only.
    pub tau: Option<f64>,
    pub peaks: Vec<(usize, f64, f64)>,
}

/// Correlator after the critical x quench for each size; Dicke path for
/// LMG without shots, generic protocol otherwise.
fn single_family(config: &ExperimentConfig, dt: f64, t_factor: f64) -> Result<Vec<ObservableSeries>> {
    config
        .sizes
        .par_iter()
        .map(|&n| {
            let t_end = t_factor * (n as f64).powf(0.25);
            if config.model == Model::Lmg && config.shots.is_none() {
                let times = uniform_grid(t_end, dt)?;
                quench_series(&LmgParams::paramagnet(n, 1.0)?, &LmgParams::critical_x(n)?, &times, Observable::Cx2)
            } else {
                let spec = HamiltonianSpec::new(config.interaction(n)?, 1.0, 0.0, 1.0, true)?;
                let protocol = QuenchProtocol { n, basis: basis_for(config), segments: vec![Segment { spec, end: SegmentEnd::Duration(t_end), dt }] };
                Ok(run_protocol(&protocol, &[], &protocol_options(config, n))?.series.remove(0))
            }
        })
        .collect()
}

fn basis_for(config: &ExperimentConfig) -> Basis {
    if config.model == Model::Lmg {
        Basis::Dicke
    } else {
        Basis::Full
    }
}

fn protocol_options(config: &ExperimentConfig, n: usize) -> ProtocolOptions {
    ProtocolOptions {
        shots: config.shots.map(|s| ShotSettings { shots: s.shots, bitflip: s.bitflip, seed: config.seed ^ (n as u64) << 32 }),
        ..Default::default()
    }
}

fn double_family(config: &ExperimentConfig, dt: f64, t_factor: f64, tau: f64) -> Result<Vec<ObservableSeries>> {
    config
        .sizes
        .par_iter()
        .map(|&n| {
            let t_end = t_factor * (n as f64).powf(0.125);
            if config.model == Model::Lmg && config.shots.is_none() {
                let times = uniform_grid(t_end, dt)?;
                let d = double_quench_series(
                    &LmgParams::paramagnet(n, 1.0)?,
                    &LmgParams::critical_x(n)?,
                    &LmgParams::critical_y(n)?,
                    SwitchRule::Scaled { tau, zeta: 0.25 },
                    &times,
                )?;
                Ok(d.second)
            } else {
                let j = config.interaction(n)?;
                let first = Segment {
                    spec: HamiltonianSpec::new(j.clone(), 1.0, 0.0, 1.0, true)?,
                    end: SegmentEnd::Scaled { tau, zeta: 0.25 },
                    dt,
                };
                let second = Segment { spec: HamiltonianSpec::new(j, 0.0, 1.0, 1.0, true)?, end: SegmentEnd::Duration(t_end), dt };
                let protocol = QuenchProtocol { n, basis: basis_for(config), segments: vec![first, second] };
                let run = run_protocol(&protocol, &[], &protocol_options(config, n))?;
                Ok(run.series.into_iter().find(|s| s.segment == 1).expect("second segment recorded"))
            }
        })
        .collect()
}

fn peaks_of(family: &[ObservableSeries]) -> Result<Vec<(usize, f64, f64)>> {
    family
        .iter()
        .map(|s| {
            let p = find_peak(s)?;
            Ok((s.n, p.value, p.time))
        })
        .collect()
}

/// Mean of t_peak / N^(1/4) over the single-quench family.
pub fn switch_prefactor(peaks: &[(usize, f64, f64)]) -> f64 {
    peaks.iter().map(|&(n, _, t)| t / (n as f64).powf(0.25)).sum::<f64>() / peaks.len() as f64
}

fn quench_collapse_experiment(config: &ExperimentConfig, w: &mut Writer, double: bool) -> Result<serde_json::Value> {
    let dt = config.dt.unwrap_or(if double { 0.01 } else { 0.02 });
    let single = single_family(config, dt, config.t_factor.unwrap_or(4.0))?;
    let single_peaks = peaks_of(&single)?;
    let (family, tau, init) = if double {
        let tau = switch_prefactor(&single_peaks);
        (double_family(config, dt, config.t_factor.unwrap_or(4.0), tau)?, Some(tau), (0.75, 0.125))
    } else {
        (single, None, (0.5, 0.25))
    };
    let refs: Vec<&ObservableSeries> = family.iter().collect();
    w.text("series.csv", &io::series_to_csv(&refs, &meta(config, &[("kac", format!("{:?}", family[0].kac))])))?;
    let opts = CollapseOptions { init, mode: config.collapse_mode.unwrap_or_default(), ..Default::default() };
    let collapse = collapse_series(&family, Window::FirstMinAfterFirstMax, &opts)?;
    for s in &family {
        let c = scaled_curve(&crate::collapse::apply_window(s, Window::FirstMinAfterFirstMax), collapse.alpha, collapse.zeta)?;
        w.text(&format!("scaled_N{}.csv", s.n), &io::curve_to_csv(&c, &meta(config, &[("N", s.n.to_string())])))?;
    }
    let peaks = peaks_of(&family)?;
    let peak_fit = fit_peak_scaling(&peaks.iter().map(|p| (p.0, p.1)).collect::<Vec<_>>(), PeakMode::Raw)?;
    let report = QuenchCollapseReport { collapse, peak_fit, tau, peaks };
    w.json("collapse.json", &report)?;
    Ok(serde_json::to_value(&report)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpinwaveReport {
    pub n: usize,
    pub kac: f64,
    pub critical_field: f64,
    pub critical_field_direct: f64,
    pub lambda1_at_critical: f64,
    pub gapped_population: f64,
}

fn spinwave_experiment(config: &ExperimentConfig, w: &mut Writer) -> Result<serde_json::Value> {
    let fields = if config.fields.is_empty() {
        (0..=70).map(|i| 0.8 + 0.01 * i as f64).collect()
    } else {
        config.fields.clone()
    };
    let mut reports = Vec::new();
    for &n in &config.sizes {
        let j = config.interaction(n)?;
        let rows = spinwave::spectrum_scan(&j, &fields)?;
        w.text(&format!("spectrum_N{n}.csv"), &spectrum_csv(&rows, &meta(config, &[("N", n.to_string())])))?;
        let bc = spinwave::critical_field(&j)?;
        let l1 = spinwave::spectrum_realspace(&j, bc + 1e-9)?.lowest_two.1;
        reports.push(SpinwaveReport {
            n,
            kac: j.kac(),
            critical_field: bc,
            critical_field_direct: spinwave::critical_field_direct(&j)?,
            lambda1_at_critical: l1,
            gapped_population: spinwave::gapped_mode_population(bc, l1)?,
        });
    }
    w.json("spinwave.json", &reports)?;
    Ok(serde_json::to_value(&reports)?)
}

/// Columns B/kac, Lambda0/kac, Lambda1/kac, valid.
pub fn spectrum_csv(rows: &[(f64, f64, f64, bool)], meta: &[(&str, String)]) -> String {
    let mut s = io_meta(meta);
    s.push_str("B,Lambda0,Lambda1,valid\n");
    for (b, l0, l1, v) in rows {
        s.push_str(&format!("{b:?},{l0:?},{l1:?},{v}\n"));
    }
    s
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JijReport {
    pub n: usize,
    pub kac: f64,
    pub power_law: DecayFit,
    pub power_exp: DecayFit,
}

fn jij_experiment(config: &ExperimentConfig, w: &mut Writer) -> Result<serde_json::Value> {
    let mut reports = Vec::new();
    for &n in &config.sizes {
        let j = config.interaction(n)?;
        w.text(&format!("jij_N{n}.csv"), &io::matrix_to_csv(&j))?;
        let prof = radial_profile(&j);
        let mut s = io_meta(&meta(config, &[("N", n.to_string())]));
        s.push_str("r,J\n");
        for (r, v) in &prof {
            s.push_str(&format!("{r},{v:?}\n"));
        }
        w.text(&format!("profile_N{n}.csv"), &s)?;
        reports.push(JijReport { n, kac: j.kac(), power_law: fit_power_law(&prof)?, power_exp: fit_power_exp(&prof)? });
    }
    w.json("fits.json", &reports)?;
    Ok(serde_json::to_value(&reports)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwaReport {
    pub params: TwaConfig,
    pub closed_form: f64,
    pub monte_carlo: lmg::MonteCarloEstimate,
    /// |MC - closed form| in standard errors.
    pub z_score: f64,
}

fn twa_experiment(config: &ExperimentConfig, w: &mut Writer) -> Result<serde_json::Value> {
    let tc = config.twa.unwrap_or_default();
    let sc = SemiclassicalParams::new(tc.r, tc.u, tc.d)?;
    let closed = twa_ensemble_avg(&sc)?;
    let mc = twa_monte_carlo(&sc, tc.samples, config.seed)?;
    let report = TwaReport { params: tc, closed_form: closed, z_score: (mc.mean - closed).abs() / mc.stderr, monte_carlo: mc };
    let dt = config.dt.unwrap_or(0.05);
    let times = uniform_grid(20.0, dt)?;
    let mut s = io_meta(&meta(config, &[("v", "1.0".into())]));
    s.push_str("t,x\n");
    for &t in &times {
        s.push_str(&format!("{t:?},{:?}\n", lmg::twa_trajectory(&sc, 1.0, t)?));
    }
    w.text("trajectory.csv", &s)?;
    w.json("twa.json", &report)?;
    Ok(serde_json::to_value(&report)?)
}

/// C(r) = (1/(N-r)) sum_j <sigma^x_j sigma^x_{j+r}> for r = 1..N-1; full
/// basis only.
pub fn correlation_profile(state: &SpinState) -> Result<Vec<(usize, f64)>> {
    let c = pair_correlations(state, Axis::X)?;
    let n = state.n();
    Ok((1..n).map(|r| (r, (0..n - r).map(|j| c[(j, j + r)]).sum::<f64>() / (n - r) as f64)).collect())
}

/// Profile at the first peak of <C_x^2> after the critical x quench of the
/// all-down chain with couplings `j`.
pub fn peak_correlation_profile(j: &InteractionMatrix, dt: f64, horizon: f64) -> Result<(f64, Vec<(usize, f64)>)> {
    let n = j.n();
    let spec = HamiltonianSpec::new(j.clone(), 1.0, 0.0, 1.0, true)?;
    let peak_seg = Segment { spec: spec.clone(), end: SegmentEnd::FirstPeak { horizon }, dt };
    // a trailing segment makes the peak segment stop at its maximum
    let tail = Segment { spec, end: SegmentEnd::Duration(dt), dt };
    let protocol = QuenchProtocol { n, basis: Basis::Full, segments: vec![peak_seg, tail] };
    let run = run_protocol(&protocol, &[], &ProtocolOptions::default())?;
    let t = run.durations[0];
    let mut state = SpinState::all_down(n, Basis::Full)?;
    let h = crate::dynamics::Hamiltonian::for_basis(&protocol.segments[0].spec, Basis::Full, crate::dynamics::DEFAULT_FULL_CAP)?;
    crate::linalg::Krylov::with_tol(1e-10).propagate(&h, state.amplitudes_mut(), t)?;
    Ok((t, correlation_profile(&state)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_ghz_profiles() {
        let down = SpinState::all_down(6, Basis::Full).unwrap();
        assert!(correlation_profile(&down).unwrap().iter().all(|&(_, c)| c.abs() < 1e-14));
        let ghz = SpinState::ghz_x(6, Basis::Full).unwrap();
        assert!(correlation_profile(&ghz).unwrap().iter().all(|&(_, c)| (c - 1.0).abs() < 1e-12));
        let dicke = SpinState::all_down(6, Basis::Dicke).unwrap();
        assert!(correlation_profile(&dicke).is_err());
    }

    #[test]
    fn self_checks_pass() {
        for c in [
            SelfCheck::DickeVsFull,
            SelfCheck::TricomiClosedForm,
            SelfCheck::CollapseIdentity,
            SelfCheck::SpinwaveRoutes,
            SelfCheck::PowerLawRecovery,
        ] {
            c.run().unwrap_or_else(|e| panic!("{}: {e}", c.name()));
        }
    }

    #[test]
    fn config_contract() {
        let c = ExperimentConfig::from_json(r#"{"experiment":"twa_check","sizes":[1],"seed":1}"#);
        assert!(matches!(c, Err(Error::InvalidInput(_))));
        assert!(ExperimentConfig::from_json(r#"{"experiment":"twa_check","sizes":[4]}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"experiment":"twa_check","sizes":[4],"seed":1,"bogus":2}"#).is_err());
        let c = ExperimentConfig::from_json(r#"{"experiment":"single_quench_collapse","sizes":[8,16],"seed":1}"#).unwrap();
        let mut d = c.clone();
        d.output = Some("elsewhere".into());
        assert_eq!(c.hash(), d.hash());
        d.seed = 2;
        assert_ne!(c.hash(), d.hash());
    }
}
