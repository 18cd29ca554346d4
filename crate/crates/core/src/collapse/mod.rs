//! Finite-size scaling collapse: curve-distance objective, Powell
//! minimization over (alpha, zeta), Hessian uncertainties, peak fits.

pub mod powell;

use std::cell::RefCell;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{first_min_after_first_max, scaled_curve, ObservableSeries};
use crate::error::{Error, Result};

pub use powell::{powell, Minimum, PowellOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub dx: f64,
    pub dy: f64,
}

impl Point {
    pub fn exact(x: f64, y: f64) -> Self {
        Point { x, y, dx: 0.0, dy: 0.0 }
    }
}

/// Points ordered by strictly increasing x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    points: Vec<Point>,
}

impl Curve {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::invalid("a curve needs at least two points"));
        }
        for p in &points {
            if !(p.x.is_finite() && p.y.is_finite() && p.dx.is_finite() && p.dy.is_finite()) {
                return Err(Error::invalid("curve entries must be finite"));
            }
            if p.dx < 0.0 || p.dy < 0.0 {
                return Err(Error::invalid("curve uncertainties must be non-negative"));
            }
        }
        if points.windows(2).any(|w| w[1].x <= w[0].x) {
            return Err(Error::invalid("curve x values must be strictly increasing"));
        }
        let weighted = points.iter().any(|p| p.dx > 0.0 || p.dy > 0.0);
        if weighted && points.iter().any(|p| p.dx == 0.0 && p.dy == 0.0) {
            return Err(Error::invalid("a curve with uncertainties needs a nonzero uncertainty on every point"));
        }
        Ok(Curve { points })
    }

    pub fn from_xy(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::invalid("x and y lengths differ"));
        }
        Curve::new(xs.iter().zip(ys).map(|(&x, &y)| Point::exact(x, y)).collect())
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn has_uncertainties(&self) -> bool {
        self.points.iter().any(|p| p.dx > 0.0 || p.dy > 0.0)
    }

    fn x_range(&self) -> (f64, f64) {
        (self.points[0].x, self.points[self.points.len() - 1].x)
    }

    fn map(&self, x0: f64, sx: f64, y0: f64, sy: f64) -> Curve {
        Curve {
            points: self
                .points
                .iter()
                .map(|p| Point { x: (p.x - x0) / sx, y: (p.y - y0) / sy, dx: p.dx / sx, dy: p.dy / sy })
                .collect(),
        }
    }
}

/// Rescales both curves by their joint extent into the unit square.
pub fn normalize_pair(c1: &Curve, c2: &Curve) -> Result<(Curve, Curve)> {
    let all = c1.points.iter().chain(&c2.points);
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in all {
        xmin = xmin.min(p.x);
        xmax = xmax.max(p.x);
        ymin = ymin.min(p.y);
        ymax = ymax.max(p.y);
    }
    let (sx, sy) = (xmax - xmin, ymax - ymin);
    if !(sx > 0.0 && sy > 0.0) {
        return Err(Error::invalid("curves have zero joint extent in x or y"));
    }
    Ok((c1.map(xmin, sx, ymin, sy), c2.map(xmin, sx, ymin, sy)))
}

/// Distance of p to the segment q-r and its gradient with respect to
/// (px, py, qx, qy, rx, ry).
#[derive(Debug, Clone, Copy)]
struct SegmentDistance {
    d2: f64,
    grad: [f64; 6],
}

fn segment_distance(p: (f64, f64), q: (f64, f64), r: (f64, f64)) -> SegmentDistance {
    let (ux, uy) = (q.0 - r.0, q.1 - r.1);
    let (wx, wy) = (p.0 - r.0, p.1 - r.1);
    let l2 = ux * ux + uy * uy;
    let to_point = |e: (f64, f64), e_is_q: bool| {
        let (dx, dy) = (p.0 - e.0, p.1 - e.1);
        let d = (dx * dx + dy * dy).sqrt();
        let mut grad = [0.0; 6];
        if d > 0.0 {
            let (gx, gy) = (dx / d, dy / d);
            grad[0] = gx;
            grad[1] = gy;
            let k = if e_is_q { 2 } else { 4 };
            grad[k] = -gx;
            grad[k + 1] = -gy;
        }
        SegmentDistance { d2: dx * dx + dy * dy, grad }
    };
    if l2 == 0.0 {
        return to_point(q, true);
    }
    let t = (wx * ux + wy * uy) / l2;
    if t <= 0.0 {
        return to_point(r, false);
    }
    if t >= 1.0 {
        return to_point(q, true);
    }
    let l = l2.sqrt();
    let cross = ux * (r.1 - p.1) - (r.0 - p.0) * uy;
    let d = cross / l;
    // gradient of the signed distance, then of its absolute value
    let dp = [uy / l, -ux / l];
    let du = [-wy / l - d * ux / l2, wx / l - d * uy / l2];
    let sg = d.signum();
    let grad = [dp[0], dp[1], du[0], du[1], -dp[0] - du[0], -dp[1] - du[1]].map(|g| sg * g);
    SegmentDistance { d2: cross * cross / l2, grad }
}

/// Squared distance from p to the segment with endpoints q and r. When the
/// foot of the perpendicular lies inside the segment this is
/// [(qx-rx)(ry-py) - (rx-px)(qy-ry)]^2 / |q-r|^2; otherwise the distance
/// to the nearer endpoint. A degenerate segment gives the point distance.
pub fn segment_distance_sq(p: (f64, f64), q: (f64, f64), r: (f64, f64)) -> f64 {
    segment_distance(p, q, r).d2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossMode {
    /// Weighted if any curve carries uncertainties, unweighted otherwise.
    #[default]
    Auto,
    /// D^2 / Delta^2.
    Weighted,
    /// D^2, for exact data without uncertainties.
    Unweighted,
}

impl LossMode {
    pub fn resolve(self, curves: &[Curve]) -> LossMode {
        match self {
            LossMode::Auto if curves.iter().any(Curve::has_uncertainties) => LossMode::Weighted,
            LossMode::Auto => LossMode::Unweighted,
            m => m,
        }
    }
}

/// Loss of a normalized point against a normalized curve; `None` when p
/// lies outside the curve's x domain and is excluded.
pub fn point_loss(p: &Point, c: &Curve, mode: LossMode) -> Result<Option<f64>> {
    let (lo, hi) = c.x_range();
    if p.x < lo || p.x > hi {
        return Ok(None);
    }
    let pts = &c.points;
    let qi = pts.partition_point(|b| b.x < p.x);
    let ri = if pts[qi].x == p.x { qi } else { qi - 1 };
    let (q, r) = (&pts[qi], &pts[ri]);
    let sd = segment_distance((p.x, p.y), (q.x, q.y), (r.x, r.y));
    if sd.d2 == 0.0 {
        return Ok(Some(0.0));
    }
    let weighted = match mode {
        LossMode::Auto => c.has_uncertainties() || p.dx > 0.0 || p.dy > 0.0,
        m => m == LossMode::Weighted,
    };
    if !weighted {
        return Ok(Some(sd.d2));
    }
    let sig = [p.dx, p.dy, q.dx, q.dy, r.dx, r.dy];
    let delta2: f64 = sd.grad.iter().zip(&sig).map(|(g, s)| (g * s).powi(2)).sum();
    if delta2 == 0.0 {
        return Err(Error::invalid(format!(
            "zero propagated uncertainty at x = {} with nonzero distance; use unweighted mode",
            p.x
        )));
    }
    Ok(Some(sd.d2 / delta2))
}

fn directed(a: &Curve, b: &Curve, mode: LossMode) -> Result<(f64, usize)> {
    let mut sum = 0.0;
    let mut count = 0;
    for p in &a.points {
        if let Some(l) = point_loss(p, b, mode)? {
            sum += l;
            count += 1;
        }
    }
    Ok((sum, count))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCost {
    pub s: f64,
    /// Points of each curve inside the other's domain.
    pub included: (usize, usize),
}

impl PairCost {
    pub fn disjoint(&self) -> bool {
        self.included.0 == 0 && self.included.1 == 0
    }
}

pub fn pair_cost_detailed(c1: &Curve, c2: &Curve, mode: LossMode) -> Result<PairCost> {
    let (a, b) = normalize_pair(c1, c2)?;
    let mode = match mode {
        LossMode::Auto if a.has_uncertainties() || b.has_uncertainties() => LossMode::Weighted,
        LossMode::Auto => LossMode::Unweighted,
        m => m,
    };
    let (s1, n1) = directed(&a, &b, mode)?;
    let (s2, n2) = directed(&b, &a, mode)?;
    let term = |s: f64, n: usize| if n == 0 { 0.0 } else { s / n as f64 };
    Ok(PairCost { s: 0.5 * (term(s1, n1) + term(s2, n2)), included: (n1, n2) })
}

/// Symmetric curve-to-curve cost s(C, C').
pub fn pair_cost(c1: &Curve, c2: &Curve, mode: LossMode) -> Result<f64> {
    Ok(pair_cost_detailed(c1, c2, mode)?.s)
}

/// S = (1/(N^2 - N)) sum_{i<j} s(C_i, C_j). Pair costs are evaluated in
/// parallel and summed in a fixed order.
pub fn objective(curves: &[Curve], mode: LossMode) -> Result<f64> {
    let n = curves.len();
    if n < 2 {
        return Err(Error::invalid("the collapse objective needs at least two curves"));
    }
    let mode = mode.resolve(curves);
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let costs: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| pair_cost(&curves[i], &curves[j], mode))
        .collect::<Result<_>>()?;
    Ok(costs.iter().sum::<f64>() / (n * n - n) as f64)
}

/// Central finite-difference Hessian of f at x.
pub fn hessian_2d<F: FnMut(f64, f64) -> f64>(mut f: F, x: (f64, f64), h: f64) -> [[f64; 2]; 2] {
    let (a, z) = x;
    let f0 = f(a, z);
    let haa = (f(a + h, z) - 2.0 * f0 + f(a - h, z)) / (h * h);
    let hzz = (f(a, z + h) - 2.0 * f0 + f(a, z - h)) / (h * h);
    let haz = (f(a + h, z + h) - f(a + h, z - h) - f(a - h, z + h) + f(a - h, z - h)) / (4.0 * h * h);
    [[haa, haz], [haz, hzz]]
}

/// (sqrt(S H^-1_aa), sqrt(S H^-1_zz)) at the minimum.
pub fn hessian_uncertainty(s_min: f64, h: [[f64; 2]; 2]) -> Result<(f64, f64)> {
    if s_min < 0.0 || !s_min.is_finite() {
        return Err(Error::invalid("objective value must be finite and non-negative"));
    }
    if s_min == 0.0 {
        return Ok((0.0, 0.0));
    }
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    if !(h[0][0] > 0.0 && det > 0.0) {
        return Err(Error::numerical(
            "Hessian at the minimum is not positive definite; widen the window or increase the step",
        ));
    }
    Ok(((s_min * h[1][1] / det).sqrt(), (s_min * h[0][0] / det).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapseOptions {
    pub init: (f64, f64),
    pub mode: LossMode,
    pub powell: PowellOptions,
    pub hessian_step: f64,
}

impl Default for CollapseOptions {
    fn default() -> Self {
        CollapseOptions { init: (0.5, 0.25), mode: LossMode::Auto, powell: PowellOptions::default(), hessian_step: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseResult {
    pub alpha: f64,
    pub zeta: f64,
    pub s_min: f64,
    /// `None` when the Hessian at the minimum is not positive definite.
    pub d_alpha: Option<f64>,
    pub d_zeta: Option<f64>,
    pub evaluations: usize,
    pub converged: bool,
    pub mode: LossMode,
    pub hessian: [[f64; 2]; 2],
    pub notes: Vec<String>,
}

/// Minimizes S over (alpha, zeta) for the curves produced by `scaler`.
pub fn optimize_collapse<F>(scaler: F, opts: &CollapseOptions) -> Result<CollapseResult>
where
    F: Fn(f64, f64) -> Result<Vec<Curve>>,
{
    let probe = scaler(opts.init.0, opts.init.1)?;
    if probe.len() < 2 {
        return Err(Error::invalid("collapse needs at least two system sizes"));
    }
    let mode = opts.mode.resolve(&probe);
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let eval = |a: f64, z: f64| -> f64 {
        match scaler(a, z).and_then(|c| objective(&c, mode)) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::INFINITY
            }
        }
    };
    let min = powell(|x| eval(x[0], x[1]), &[opts.init.0, opts.init.1], &opts.powell);
    if let Some(e) = failure.borrow_mut().take() {
        if !min.f.is_finite() {
            return Err(e);
        }
    }
    let mut notes = Vec::new();
    if !min.converged {
        notes.push(format!("optimizer stopped at the evaluation budget ({}); best point reported", opts.powell.max_evals));
    }
    if mode == LossMode::Unweighted {
        notes.push("unweighted loss: curves carry no uncertainties".to_string());
    }
    let (a, z) = (min.x[0], min.x[1]);
    let hess = hessian_2d(eval, (a, z), opts.hessian_step);
    let (d_alpha, d_zeta) = match hessian_uncertainty(min.f, hess) {
        Ok((da, dz)) => (Some(da), Some(dz)),
        Err(e) => {
            notes.push(e.to_string());
            (None, None)
        }
    };
    let curves = scaler(a, z)?;
    let disjoint = (0..curves.len())
        .flat_map(|i| (i + 1..curves.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| pair_cost_detailed(&curves[i], &curves[j], mode).map(|p| p.disjoint()).unwrap_or(false))
        .count();
    if disjoint > 0 {
        notes.push(format!("{disjoint} curve pairs do not overlap in x and contribute zero"));
    }
    Ok(CollapseResult {
        alpha: a,
        zeta: z,
        s_min: min.f,
        d_alpha,
        d_zeta,
        evaluations: min.evaluations,
        converged: min.converged,
        mode,
        hessian: hess,
        notes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    #[default]
    Full,
    /// Up to the first minimum after the first maximum.
    FirstMinAfterFirstMax,
}

pub fn apply_window(series: &ObservableSeries, window: Window) -> ObservableSeries {
    match window {
        Window::Full => series.clone(),
        Window::FirstMinAfterFirstMax => series.truncated(first_min_after_first_max(series)),
    }
}

/// Collapse of a per-N family of series under t -> t N^-zeta,
/// C -> C N^-(1+alpha).
pub fn collapse_series(family: &[ObservableSeries], window: Window, opts: &CollapseOptions) -> Result<CollapseResult> {
    if family.len() < 2 {
        return Err(Error::invalid("collapse needs at least two system sizes"));
    }
    for s in family {
        s.validate()?;
    }
    let windowed: Vec<ObservableSeries> = family.iter().map(|s| apply_window(s, window)).collect();
    optimize_collapse(|a, z| windowed.iter().map(|s| scaled_curve(s, a, z)).collect(), opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeakMode {
    /// Peaks of C^2 itself: slope = 1 + alpha.
    Raw,
    /// Peaks of C^2 / N: slope = alpha.
    PerN,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakFit {
    pub alpha: f64,
    pub d_alpha: f64,
    pub prefactor: f64,
}

/// Least-squares fit of log(peak) against log(N).
pub fn fit_peak_scaling(maxima: &[(usize, f64)], mode: PeakMode) -> Result<PeakFit> {
    if maxima.len() < 3 {
        return Err(Error::invalid("peak scaling needs at least three sizes"));
    }
    if maxima.iter().any(|&(n, v)| n == 0 || !(v > 0.0) || !v.is_finite()) {
        return Err(Error::invalid("peak values and sizes must be positive"));
    }
    let xs: Vec<f64> = maxima.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let ys: Vec<f64> = maxima.iter().map(|&(_, v)| v.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("peak scaling needs distinct sizes"));
    }
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / sxx;
    let icpt = my - slope * mx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum();
    let d_alpha = if m > 2.0 { (rss / (m - 2.0) / sxx).sqrt() } else { 0.0 };
    let alpha = match mode {
        PeakMode::Raw => slope - 1.0,
        PeakMode::PerN => slope,
    };
    Ok(PeakFit { alpha, d_alpha, prefactor: icpt.exp() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(y: f64, dy: f64, k: usize) -> Curve {
        Curve::new((0..k).map(|i| Point { x: i as f64, y, dx: 0.0, dy }).collect()).unwrap()
    }

    #[test]
    fn curve_contract() {
        assert!(Curve::from_xy(&[0.0], &[1.0]).is_err());
        assert!(Curve::from_xy(&[0.0, 0.0], &[1.0, 2.0]).is_err());
        assert!(Curve::from_xy(&[0.0, f64::NAN], &[1.0, 2.0]).is_err());
        let mixed = vec![Point { x: 0.0, y: 0.0, dx: 0.0, dy: 0.1 }, Point::exact(1.0, 1.0)];
        assert!(Curve::new(mixed).is_err());
    }

    #[test]
    fn normalization_examples() {
        let unit = Curve::from_xy(&[0.0, 0.5, 1.0], &[0.0, 1.0, 0.2]).unwrap();
        let (a, b) = normalize_pair(&unit, &unit).unwrap();
        assert_eq!(a, unit);
        assert_eq!(b, unit);
        let c1 = Curve::from_xy(&[0.0, 2.0], &[0.0, 4.0]).unwrap();
        let c2 = Curve::from_xy(&[1.0, 1.5], &[2.0, 3.0]).unwrap();
        let (_, n2) = normalize_pair(&c1, &c2).unwrap();
        assert_eq!((n2.points()[0].x, n2.points()[0].y), (0.5, 0.5));
        let flat = Curve::from_xy(&[0.0, 1.0], &[3.0, 3.0]).unwrap();
        assert!(normalize_pair(&flat, &flat).is_err());
    }

    #[test]
    fn segment_distance_examples() {
        assert_eq!(segment_distance_sq((0.3, 0.3), (1.0, 1.0), (0.0, 0.0)), 0.0);
        assert_eq!(segment_distance_sq((0.5, 1.0), (1.0, 0.0), (0.0, 0.0)), 1.0);
        assert_eq!(segment_distance_sq((0.5, 2.0), (0.2, -1.0), (0.2, -1.0)), 0.09 + 9.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let x = [0.4, 0.7, 0.9, 0.2, 0.1, 0.35];
        let d = |v: &[f64; 6]| segment_distance((v[0], v[1]), (v[2], v[3]), (v[4], v[5])).d2.sqrt();
        let g = segment_distance((x[0], x[1]), (x[2], x[3]), (x[4], x[5])).grad;
        for k in 0..6 {
            let (mut a, mut b) = (x, x);
            a[k] += 1e-6;
            b[k] -= 1e-6;
            let fd = (d(&a) - d(&b)) / 2e-6;
            assert!((fd - g[k]).abs() < 1e-7, "component {k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn point_loss_examples() {
        let c = Curve::new(vec![Point { x: 0.0, y: 0.0, dx: 0.0, dy: 0.1 }, Point { x: 1.0, y: 1.0, dx: 0.0, dy: 0.1 }]).unwrap();
        let outside = Point { x: 1.2, y: 0.0, dx: 0.0, dy: 0.1 };
        assert_eq!(point_loss(&outside, &c, LossMode::Weighted).unwrap(), None);
        let on = Point { x: 0.4, y: 0.4, dx: 0.0, dy: 0.1 };
        assert_eq!(point_loss(&on, &c, LossMode::Weighted).unwrap(), Some(0.0));
        let off = Point { x: 0.5, y: 0.9, dx: 0.0, dy: 0.1 };
        let small = point_loss(&off, &c, LossMode::Weighted).unwrap().unwrap();
        let wide = Curve::new(c.points().iter().map(|p| Point { dy: 1.0, ..*p }).collect()).unwrap();
        let large = point_loss(&off, &wide, LossMode::Weighted).unwrap().unwrap();
        assert!(large < small);
        let exact = Curve::from_xy(&[0.0, 1.0], &[0.0, 1.0]).unwrap();
        assert!(point_loss(&Point::exact(0.5, 0.9), &exact, LossMode::Weighted).is_err());
        assert!((point_loss(&Point::exact(0.5, 0.9), &exact, LossMode::Unweighted).unwrap().unwrap() - 0.08).abs() < 1e-15);
    }

    #[test]
    fn offset_lines_have_closed_form_cost() {
        // after normalization D = 1 everywhere; Delta^2 = (dy_p^2 + dy_segment^2)/1
        let dy = 0.2;
        let s = pair_cost(&line(0.0, dy, 5), &line(1.0, dy, 5), LossMode::Weighted).unwrap();
        assert!((s - 1.0 / (2.0 * dy * dy)).abs() < 1e-12, "{s}");
        assert_eq!(pair_cost(&line(0.0, dy, 5), &line(1.0, dy, 5), LossMode::Unweighted).unwrap(), 1.0);
    }

    #[test]
    fn identical_and_symmetric() {
        let c1 = Curve::from_xy(&[0.0, 0.3, 0.6, 1.0], &[0.0, 0.8, 0.5, 0.1]).unwrap();
        let c2 = Curve::from_xy(&[0.1, 0.5, 0.9, 1.3], &[0.2, 0.9, 0.3, 0.0]).unwrap();
        assert_eq!(pair_cost(&c1, &c1, LossMode::Unweighted).unwrap(), 0.0);
        assert_eq!(pair_cost(&c1, &c2, LossMode::Auto).unwrap(), pair_cost(&c2, &c1, LossMode::Auto).unwrap());
        assert_eq!(objective(&[c1.clone(), c1.clone(), c1], LossMode::Auto).unwrap(), 0.0);
    }

    #[test]
    fn disjoint_pairs_cost_zero() {
        let a = Curve::from_xy(&[0.0, 1.0], &[0.0, 1.0]).unwrap();
        let b = Curve::from_xy(&[2.0, 3.0], &[0.0, 1.0]).unwrap();
        let pc = pair_cost_detailed(&a, &b, LossMode::Unweighted).unwrap();
        assert!(pc.disjoint());
        assert_eq!(pc.s, 0.0);
    }

    #[test]
    fn objective_is_hand_sum_over_pairs() {
        let cs = [
            Curve::from_xy(&[0.0, 0.5, 1.0], &[0.0, 1.0, 0.0]).unwrap(),
            Curve::from_xy(&[0.0, 0.4, 1.0], &[0.1, 0.7, 0.0]).unwrap(),
            Curve::from_xy(&[0.1, 0.6, 0.9], &[0.0, 0.9, 0.2]).unwrap(),
        ];
        let m = LossMode::Unweighted;
        let hand = (pair_cost(&cs[0], &cs[1], m).unwrap() + pair_cost(&cs[0], &cs[2], m).unwrap() + pair_cost(&cs[1], &cs[2], m).unwrap()) / 6.0;
        assert!((objective(&cs, m).unwrap() - hand).abs() < 1e-15);
        let perm = [cs[2].clone(), cs[0].clone(), cs[1].clone()];
        assert!((objective(&perm, m).unwrap() - hand).abs() < 1e-15);
        assert!(objective(&cs[..1], m).is_err());
    }

    #[test]
    fn hessian_uncertainty_examples() {
        assert_eq!(hessian_uncertainty(0.0, [[1.0, 0.0], [0.0, 1.0]]).unwrap(), (0.0, 0.0));
        let (da, dz) = hessian_uncertainty(0.5, [[8.0, 0.0], [0.0, 8.0]]).unwrap();
        assert!((da - 0.25).abs() < 1e-15 && (dz - 0.25).abs() < 1e-15);
        assert!(hessian_uncertainty(0.5, [[1.0, 2.0], [2.0, 1.0]]).is_err());
    }

    #[test]
    fn hessian_of_quadratic() {
        let h = hessian_2d(|a, z| 3.0 * a * a + a * z + 2.0 * z * z, (0.2, -0.1), 1e-3);
        assert!((h[0][0] - 6.0).abs() < 1e-6 && (h[0][1] - 1.0).abs() < 1e-6 && (h[1][1] - 4.0).abs() < 1e-6);
    }

    #[test]
    fn peak_fit_of_exact_power_law() {
        let raw: Vec<(usize, f64)> = [64usize, 128, 256, 512].iter().map(|&n| (n, 0.3 * (n as f64).powf(1.5))).collect();
        let fit = fit_peak_scaling(&raw, PeakMode::Raw).unwrap();
        assert!((fit.alpha - 0.5).abs() < 1e-12 && fit.d_alpha < 1e-10);
        assert!((fit.prefactor - 0.3).abs() < 1e-12);
        let per_n: Vec<(usize, f64)> = raw.iter().map(|&(n, v)| (n, v / n as f64)).collect();
        assert!((fit_peak_scaling(&per_n, PeakMode::PerN).unwrap().alpha - 0.5).abs() < 1e-12);
        assert!(fit_peak_scaling(&raw[..2], PeakMode::Raw).is_err());
        assert!(fit_peak_scaling(&[(4, 1.0), (8, 0.0), (16, 1.0)], PeakMode::Raw).is_err());
    }
}
