//! Powell's conjugate-direction method with Brent line searches.

const GOLD: f64 = 1.618_033_988_749_895;
const CGOLD: f64 = 0.381_966_011_250_105_1;
const TINY: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowellOptions {
    /// Convergence threshold on the parameter change of one sweep.
    pub xtol: f64,
    pub max_evals: usize,
    /// Initial step length along each coordinate direction.
    pub step: f64,
    /// Fresh coordinate-direction sweeps started from the converged point.
    pub restarts: usize,
}

impl Default for PowellOptions {
    fn default() -> Self {
        PowellOptions { xtol: 1e-6, max_evals: 2000, step: 0.1, restarts: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evaluations: usize,
    pub converged: bool,
}

struct Counted<F> {
    f: F,
    evals: usize,
    max: usize,
    best: (f64, Vec<f64>),
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        if self.exhausted() {
            return f64::INFINITY;
        }
        self.evals += 1;
        let v = (self.f)(x);
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if v < self.best.0 {
            self.best = (v, x.to_vec());
        }
        v
    }

    fn exhausted(&self) -> bool {
        self.evals >= self.max
    }
}

fn along(x: &[f64], d: &[f64], t: f64) -> Vec<f64> {
    x.iter().zip(d).map(|(a, b)| a + t * b).collect()
}

/// Minimizes along x + t d starting from t = 0 with value fx; returns (t, f).
fn line_minimize<F: FnMut(&[f64]) -> f64>(c: &mut Counted<F>, x: &[f64], d: &[f64], fx: f64, xtol: f64) -> (f64, f64) {
    let dnorm = d.iter().map(|v| v * v).sum::<f64>().sqrt().max(TINY);
    let tol_t = 0.1 * xtol / dnorm;
    let g = |t: f64, c: &mut Counted<F>| c.eval(&along(x, d, t));

    // bracket
    let (mut ax, mut bx) = (0.0, 1.0);
    let (mut fa, mut fb) = (fx, g(bx, c));
    if fb > fa {
        std::mem::swap(&mut ax, &mut bx);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut cx = bx + GOLD * (bx - ax);
    let mut fc = g(cx, c);
    while fb > fc && !c.exhausted() {
        let r = (bx - ax) * (fb - fc);
        let q = (bx - cx) * (fb - fa);
        let denom = 2.0 * (q - r).abs().max(TINY).copysign(q - r);
        let mut u = bx - ((bx - cx) * q - (bx - ax) * r) / denom;
        let ulim = bx + 100.0 * (cx - bx);
        let fu;
        if (bx - u) * (u - cx) > 0.0 {
            let fu1 = g(u, c);
            if fu1 < fc {
                ax = bx;
                fa = fb;
                bx = u;
                fb = fu1;
                break;
            } else if fu1 > fb {
                cx = u;
                fc = fu1;
                break;
            }
            u = cx + GOLD * (cx - bx);
            fu = g(u, c);
        } else if (cx - u) * (u - ulim) > 0.0 {
            let mut fu1 = g(u, c);
            if fu1 < fc {
                bx = cx;
                cx = u;
                u = cx + GOLD * (cx - bx);
                fb = fc;
                fc = fu1;
                fu1 = g(u, c);
            }
            fu = fu1;
        } else if (u - ulim) * (ulim - cx) >= 0.0 {
            u = ulim;
            fu = g(u, c);
        } else {
            u = cx + GOLD * (cx - bx);
            fu = g(u, c);
        }
        ax = bx;
        bx = cx;
        cx = u;
        fa = fb;
        fb = fc;
        fc = fu;
    }
    let _ = (fa, fc);

    // Brent's parabolic/golden-section search on [a, b] around bx
    let (mut a, mut b) = if ax < cx { (ax, cx) } else { (cx, ax) };
    let (mut xb, mut w, mut v) = (bx, bx, bx);
    let (mut fxb, mut fw, mut fv) = (fb, fb, fb);
    let mut e: f64 = 0.0;
    let mut dstep: f64 = 0.0;
    for _ in 0..200 {
        if c.exhausted() {
            break;
        }
        let xm = 0.5 * (a + b);
        let tol1 = tol_t + 1e-10 * xb.abs();
        let tol2 = 2.0 * tol1;
        if (xb - xm).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        if e.abs() > tol1 {
            let r = (xb - w) * (fxb - fv);
            let mut q = (xb - v) * (fxb - fw);
            let mut p = (xb - v) * q - (xb - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = dstep;
            if p.abs() >= (0.5 * q * etemp).abs() || p <= q * (a - xb) || p >= q * (b - xb) {
                e = if xb >= xm { a - xb } else { b - xb };
                dstep = CGOLD * e;
            } else {
                dstep = p / q;
                let u = xb + dstep;
                if u - a < tol2 || b - u < tol2 {
                    dstep = tol1.copysign(xm - xb);
                }
            }
        } else {
            e = if xb >= xm { a - xb } else { b - xb };
            dstep = CGOLD * e;
        }
        let u = if dstep.abs() >= tol1 { xb + dstep } else { xb + tol1.copysign(dstep) };
        let fu = g(u, c);
        if fu <= fxb {
            if u >= xb {
                a = xb;
            } else {
                b = xb;
            }
            v = w;
            fv = fw;
            w = xb;
            fw = fxb;
            xb = u;
            fxb = fu;
        } else {
            if u < xb {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == xb {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == xb || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    if fxb <= fx {
        (xb, fxb)
    } else {
        (0.0, fx)
    }
}

fn powell_sweeps<F: FnMut(&[f64]) -> f64>(c: &mut Counted<F>, x0: &[f64], fx0: f64, opts: &PowellOptions) -> (Vec<f64>, f64, bool) {
    let n = x0.len();
    let mut dirs: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut d = vec![0.0; n];
            d[i] = opts.step;
            d
        })
        .collect();
    let mut x = x0.to_vec();
    let mut fx = fx0;
    loop {
        if c.exhausted() {
            return (x, fx, false);
        }
        let x_start = x.clone();
        let f_start = fx;
        let mut big_drop = 0.0;
        let mut ibig = 0;
        for (i, d) in dirs.iter().enumerate() {
            let (t, f_new) = line_minimize(c, &x, d, fx, opts.xtol);
            x = along(&x, d, t);
            if fx - f_new > big_drop {
                big_drop = fx - f_new;
                ibig = i;
            }
            fx = f_new;
        }
        let moved = x.iter().zip(&x_start).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if moved <= opts.xtol {
            return (x, fx, true);
        }
        let d: Vec<f64> = x.iter().zip(&x_start).map(|(a, b)| a - b).collect();
        let xe: Vec<f64> = x.iter().zip(&x_start).map(|(a, b)| 2.0 * a - b).collect();
        let fe = c.eval(&xe);
        if fe < f_start {
            let t = 2.0 * (f_start - 2.0 * fx + fe) * (f_start - fx - big_drop).powi(2) - big_drop * (f_start - fe).powi(2);
            if t < 0.0 {
                let (s, f_new) = line_minimize(c, &x, &d, fx, opts.xtol);
                x = along(&x, &d, s);
                fx = f_new;
                dirs[ibig] = dirs[n - 1].clone();
                dirs[n - 1] = d;
            }
        }
    }
}

/// Derivative-free minimization of `f` from `x0`.
pub fn powell<F: FnMut(&[f64]) -> f64>(f: F, x0: &[f64], opts: &PowellOptions) -> Minimum {
    let mut c = Counted { f, evals: 0, max: opts.max_evals, best: (f64::INFINITY, x0.to_vec()) };
    let f0 = c.eval(x0);
    let (mut x, mut fx, mut converged) = powell_sweeps(&mut c, x0, f0, opts);
    for _ in 0..opts.restarts {
        if !converged {
            break;
        }
        let (x2, f2, conv2) = powell_sweeps(&mut c, &x, fx, opts);
        let moved = x2.iter().zip(&x).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        x = x2;
        fx = f2;
        converged = conv2;
        if moved <= opts.xtol {
            break;
        }
    }
    if c.best.0 < fx {
        x = c.best.1.clone();
        fx = c.best.0;
    }
    Minimum { x, f: fx, evaluations: c.evals, converged }
}
