//! Matrix-free Hermitian operators, Krylov time propagation and a
//! tridiagonal lowest-eigenpair solver.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// A Hermitian operator known only through its action on vectors.
pub trait HermitianOperator: Sync {
    fn dim(&self) -> usize;
    /// Writes `H x` into `y`.
    fn apply(&self, x: &[C64], y: &mut [C64]);
    /// Any upper bound on the spectral radius.
    fn norm_bound(&self) -> f64;
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn expectation<H: HermitianOperator + ?Sized>(op: &H, psi: &[C64]) -> f64 {
    let mut tmp = vec![C64::new(0.0, 0.0); psi.len()];
    op.apply(psi, &mut tmp);
    dot(psi, &tmp).re
}

/// Dense matrix of an operator, column by column. Intended for small dimensions.
pub fn to_dense<H: HermitianOperator + ?Sized>(op: &H) -> DMatrix<C64> {
    let d = op.dim();
    let mut m = DMatrix::zeros(d, d);
    let mut e = vec![C64::new(0.0, 0.0); d];
    let mut col = vec![C64::new(0.0, 0.0); d];
    for j in 0..d {
        e[j] = C64::new(1.0, 0.0);
        op.apply(&e, &mut col);
        for i in 0..d {
            m[(i, j)] = col[i];
        }
        e[j] = C64::new(0.0, 0.0);
    }
    m
}

/// Largest |H_ij - conj(H_ji)| of the dense representation.
pub fn hermiticity_defect<H: HermitianOperator + ?Sized>(op: &H) -> f64 {
    let m = to_dense(op);
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..=i {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationStats {
    pub substeps: usize,
    pub matvecs: usize,
    pub error_estimate: f64,
}

/// Short-iterative Lanczos propagator for `exp(-i H t)`.
#[derive(Debug, Clone, Copy)]
pub struct Krylov {
    pub max_dim: usize,
    pub tol: f64,
    pub max_substeps: usize,
}

impl Default for Krylov {
    fn default() -> Self {
        Krylov { max_dim: 40, tol: 1e-9, max_substeps: 100_000 }
    }
}

impl Krylov {
    pub fn with_tol(tol: f64) -> Self {
        Krylov { tol, ..Krylov::default() }
    }

    /// Replaces `psi` by `exp(-i H t) psi`. Any sign of `t` is accepted.
    pub fn propagate<H: HermitianOperator + ?Sized>(
        &self,
        op: &H,
        psi: &mut [C64],
        t: f64,
    ) -> Result<PropagationStats> {
        let n = op.dim();
        if psi.len() != n {
            return Err(Error::invalid(format!("state length {} != operator dimension {}", psi.len(), n)));
        }
        if !(self.tol > 0.0) || self.max_dim < 2 {
            return Err(Error::invalid("Krylov tolerance must be positive and dimension at least 2"));
        }
        let mut stats = PropagationStats { substeps: 0, matvecs: 0, error_estimate: 0.0 };
        if t == 0.0 || n == 0 {
            return Ok(stats);
        }
        let sign = t.signum();
        let total = t.abs();
        let m_cap = self.max_dim.min(n);
        // initial step guess from the norm bound
        let mut h = total.min(m_cap as f64 / (op.norm_bound().max(1e-300) * 1.5)).max(total * 1e-12);
        let mut done = 0.0;
        let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m_cap + 1);
        let mut w = vec![C64::new(0.0, 0.0); n];

        while done < total {
            if stats.substeps >= self.max_substeps {
                return Err(Error::NotConverged { iterations: stats.substeps, residual: stats.error_estimate });
            }
            let beta0 = norm(psi);
            if beta0 == 0.0 {
                return Ok(stats);
            }
            basis.clear();
            basis.push(psi.iter().map(|z| z / beta0).collect());
            let mut alpha = Vec::with_capacity(m_cap);
            let mut beta = Vec::with_capacity(m_cap);
            let mut breakdown = false;
            for j in 0..m_cap {
                op.apply(&basis[j], &mut w);
                stats.matvecs += 1;
                let a = dot(&basis[j], &w).re;
                alpha.push(a);
                for (wi, vi) in w.iter_mut().zip(&basis[j]) {
                    *wi -= vi * a;
                }
                if j > 0 {
                    let b = beta[j - 1];
                    for (wi, vi) in w.iter_mut().zip(&basis[j - 1]) {
                        *wi -= vi * b;
                    }
                }
                // one pass of full reorthogonalization keeps the basis clean
                for v in basis.iter() {
                    let c = dot(v, &w);
                    for (wi, vi) in w.iter_mut().zip(v) {
                        *wi -= vi * c;
                    }
                }
                let b = norm(&w);
                beta.push(b);
                if b <= 1e-13 * op.norm_bound().max(1e-300) {
                    breakdown = true;
                    break;
                }
                if j + 1 < m_cap {
                    basis.push(w.iter().map(|z| z / b).collect());
                }
            }
            let m = alpha.len();
            let eig = tridiagonal_eigen(&alpha, &beta[..m - 1]);
            let mut step = h.min(total - done);
            let first_try = step;
            let coeffs = loop {
                let c = krylov_coefficients(&eig, sign * step);
                let err = if breakdown { 0.0 } else { beta0 * beta[m - 1] * c[m - 1].norm() };
                // the small-matrix exponential is only accurate to ~eps absolute,
                // so estimates below that floor carry no information
                let floor = 16.0 * f64::EPSILON * beta0 * beta[m - 1];
                if err <= (self.tol * step / total).max(floor) {
                    stats.error_estimate += err;
                    break c;
                }
                if step <= total * 1e-14 {
                    return Err(Error::NotConverged { iterations: stats.substeps, residual: err });
                }
                step *= 0.5;
            };
            for x in psi.iter_mut() {
                *x = C64::new(0.0, 0.0);
            }
            for (c, v) in coeffs.iter().zip(basis.iter()) {
                let c = c * beta0;
                for (x, vi) in psi.iter_mut().zip(v) {
                    *x += vi * c;
                }
            }
            done += step;
            stats.substeps += 1;
            h = if step < first_try { step } else { (step * 1.5).min(total) };
        }
        Ok(stats)
    }
}

struct TriEigen {
    values: Vec<f64>,
    first_row: Vec<f64>,
    vectors: DMatrix<f64>,
}

fn tridiagonal_eigen(alpha: &[f64], beta: &[f64]) -> TriEigen {
    let m = alpha.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let first_row = (0..m).map(|k| eig.eigenvectors[(0, k)]).collect();
    TriEigen { values: eig.eigenvalues.iter().copied().collect(), first_row, vectors: eig.eigenvectors }
}

/// `exp(-i T t) e_1` for the Lanczos tridiagonal `T`.
fn krylov_coefficients(eig: &TriEigen, t: f64) -> Vec<C64> {
    let m = eig.values.len();
    let phases: Vec<C64> = eig
        .values
        .iter()
        .zip(&eig.first_row)
        .map(|(&l, &u0)| C64::from_polar(u0, -l * t))
        .collect();
    (0..m)
        .map(|i| (0..m).map(|k| phases[k] * eig.vectors[(i, k)]).sum())
        .collect()
}

/// Number of eigenvalues of the symmetric tridiagonal matrix below `x`.
fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = d[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..d.len() {
        let denom = if q == 0.0 { f64::EPSILON * (e[i - 1].abs() + 1e-300) } else { q };
        q = d[i] - x - e[i - 1] * e[i - 1] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Lowest eigenpair of a real symmetric tridiagonal matrix with diagonal `d`
/// and off-diagonal `e` (length `d.len() - 1`), by Sturm bisection followed
/// by shifted inverse iteration.
pub fn tridiagonal_lowest(d: &[f64], e: &[f64]) -> Result<(f64, Vec<f64>)> {
    let n = d.len();
    if n == 0 || e.len() + 1 != n {
        return Err(Error::invalid("tridiagonal dimensions inconsistent"));
    }
    if n == 1 {
        return Ok((d[0], vec![1.0]));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    let scale = lo.abs().max(hi.abs()).max(1e-300);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sturm_count(d, e, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * scale {
            break;
        }
    }
    let lambda = 0.5 * (lo + hi);
    // Shift slightly below the eigenvalue so T - sigma is positive definite
    // and the LDL^T recurrence needs no pivoting.
    let sigma = lambda - 1e-10 * scale.max(1.0);
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut piv = vec![0.0; n];
    let mut mult = vec![0.0; n];
    piv[0] = d[0] - sigma;
    for i in 1..n {
        mult[i] = e[i - 1] / piv[i - 1];
        piv[i] = d[i] - sigma - mult[i] * e[i - 1];
    }
    if piv.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::numerical("shifted tridiagonal factorization lost definiteness"));
    }
    for _ in 0..8 {
        // forward and back substitution with L D L^T
        for i in 1..n {
            x[i] -= mult[i] * x[i - 1];
        }
        for i in 0..n {
            x[i] /= piv[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= mult[i + 1] * x[i + 1];
        }
        let nrm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in x.iter_mut() {
            *v /= nrm;
        }
    }
    let mut resid = 0.0f64;
    for i in 0..n {
        let mut y = d[i] * x[i];
        if i > 0 {
            y += e[i - 1] * x[i - 1];
        }
        if i + 1 < n {
            y += e[i] * x[i + 1];
        }
        resid = resid.max((y - lambda * x[i]).abs());
    }
    if resid > 1e-8 * scale.max(1.0) {
        return Err(Error::NotConverged { iterations: 8, residual: resid });
    }
    let rq: f64 = (0..n)
        .map(|i| {
            let mut y = d[i] * x[i];
            if i > 0 {
                y += e[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                y += e[i] * x[i + 1];
            }
            x[i] * y
        })
        .sum();
    Ok((rq, x))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Dense(DMatrix<C64>);

    impl HermitianOperator for Dense {
        fn dim(&self) -> usize {
            self.0.nrows()
        }
        fn apply(&self, x: &[C64], y: &mut [C64]) {
            for i in 0..self.dim() {
                y[i] = (0..self.dim()).map(|j| self.0[(i, j)] * x[j]).sum();
            }
        }
        fn norm_bound(&self) -> f64 {
            self.0.iter().map(|z| z.norm()).sum()
        }
    }

    fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = next();
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    #[test]
    fn krylov_matches_eigendecomposition() {
        let n = 60;
        let a = random_symmetric(n, 7) * 4.0;
        let op = Dense(a.map(|v| C64::new(v, 0.0)));
        let eig = SymmetricEigen::new(a.clone());
        let mut psi: Vec<C64> = (0..n).map(|i| C64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let nrm = norm(&psi);
        psi.iter_mut().for_each(|z| *z /= nrm);
        let t = 3.7;
        let mut exact = vec![C64::new(0.0, 0.0); n];
        for k in 0..n {
            let u = eig.eigenvectors.column(k);
            let c: C64 = (0..n).map(|i| u[i] * psi[i]).sum();
            let ph = C64::from_polar(1.0, -eig.eigenvalues[k] * t) * c;
            for i in 0..n {
                exact[i] += ph * u[i];
            }
        }
        Krylov::with_tol(1e-11).propagate(&op, &mut psi, t).unwrap();
        let err: f64 = psi.iter().zip(&exact).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9, "err {err}");
        assert!((norm(&psi) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn backward_propagation_inverts_forward() {
        let a = random_symmetric(30, 3);
        let op = Dense(a.map(|v| C64::new(v, 0.0)));
        let orig: Vec<C64> = (0..30).map(|i| C64::new(1.0 / (1.0 + i as f64), 0.0)).collect();
        let mut psi = orig.clone();
        let k = Krylov::with_tol(1e-12);
        k.propagate(&op, &mut psi, 2.0).unwrap();
        k.propagate(&op, &mut psi, -2.0).unwrap();
        let err: f64 = psi.iter().zip(&orig).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10);
    }

    #[test]
    fn zero_time_is_identity() {
        let op = Dense(random_symmetric(5, 1).map(|v| C64::new(v, 0.0)));
        let mut psi = vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
        let before = psi.clone();
        Krylov::default().propagate(&op, &mut psi, 0.0).unwrap();
        assert_eq!(psi, before);
    }

    #[test]
    fn tridiagonal_lowest_matches_dense() {
        let n = 50;
        let d: Vec<f64> = (0..n).map(|i| ((i * 7) % 11) as f64 - 3.0).collect();
        let e: Vec<f64> = (0..n - 1).map(|i| 0.5 + ((i * 3) % 5) as f64 * 0.1).collect();
        let mut t = DMatrix::zeros(n, n);
        for i in 0..n {
            t[(i, i)] = d[i];
            if i + 1 < n {
                t[(i, i + 1)] = e[i];
                t[(i + 1, i)] = e[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let (l, v) = tridiagonal_lowest(&d, &e).unwrap();
        assert!((l - min).abs() < 1e-10);
        assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
