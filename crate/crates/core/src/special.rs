//! Jacobi elliptic functions, complete elliptic integrals, modified Bessel
//! functions K0/K1 and Tricomi's confluent hypergeometric function.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// (sn, cn, dn) for parameter 0 <= m < 1 by the descending Landen (AGM) scheme.
fn sncndn_unit(u: f64, m: f64) -> (f64, f64, f64) {
    if m == 0.0 {
        return (u.sin(), u.cos(), 1.0);
    }
    let mut a = [0.0f64; 32];
    let mut c = [0.0f64; 32];
    a[0] = 1.0;
    let mut b = (1.0 - m).sqrt();
    c[0] = m.sqrt();
    let mut n = 0;
    while n < 31 && c[n].abs() > f64::EPSILON {
        let an = a[n];
        a[n + 1] = 0.5 * (an + b);
        c[n + 1] = 0.5 * (an - b);
        b = (an * b).sqrt();
        n += 1;
    }
    let mut phi = (1u64 << n) as f64 * a[n] * u;
    let mut prev = phi;
    for k in (1..=n).rev() {
        prev = phi;
        phi = 0.5 * (phi + (c[k] / a[k] * phi.sin()).asin());
    }
    let (s, co) = phi.sin_cos();
    let dn = if n == 0 { 1.0 } else { co / (prev - phi).cos() };
    (s, co, dn)
}

/// Jacobi elliptic functions (sn, cn, dn) with parameter `m <= 1`.
pub fn jacobi_sncndn(u: f64, m: f64) -> Result<(f64, f64, f64)> {
    if !u.is_finite() || !m.is_finite() {
        return Err(Error::invalid("jacobi functions need finite arguments"));
    }
    if m > 1.0 {
        return Err(Error::invalid(format!("jacobi parameter m = {m} outside (-inf, 1]")));
    }
    if m == 1.0 {
        let s = 1.0 / u.cosh();
        return Ok((u.tanh(), s, s));
    }
    if m >= 0.0 {
        return Ok(sncndn_unit(u, m));
    }
    // Imaginary-modulus transformation:
    // sn(u|m) = sd(v|mu)/sqrt(1-m), cn = cd(v|mu), dn = nd(v|mu)
    // with v = u sqrt(1-m) and mu = -m/(1-m) in [0, 1).
    let root = (1.0 - m).sqrt();
    let mu = -m / (1.0 - m);
    let (s, c, d) = sncndn_unit(u * root, mu);
    Ok((s / (d * root), c / d, 1.0 / d))
}

pub fn jacobi_sn(u: f64, m: f64) -> Result<f64> {
    jacobi_sncndn(u, m).map(|t| t.0)
}

/// Complete elliptic integrals (K(m), E(m)) for m < 1 by the AGM.
pub fn ellipke(m: f64) -> Result<(f64, f64)> {
    if !(m < 1.0) || !m.is_finite() {
        return Err(Error::invalid(format!("complete elliptic integrals need m < 1, got {m}")));
    }
    let mut a = 1.0f64;
    let mut b = (1.0 - m).sqrt();
    let mut sum = 0.5 * m;
    let mut pow = 0.5;
    for _ in 0..64 {
        let c = 0.5 * (a - b);
        if c.abs() <= f64::EPSILON * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
        pow *= 2.0;
        sum += pow * c * c;
    }
    let k = PI / (2.0 * a);
    Ok((k, k * (1.0 - sum)))
}

/// Exponentially scaled modified Bessel functions (e^x K0(x), e^x K1(x)), x > 0.
pub fn bessel_k01_scaled(x: f64) -> Result<(f64, f64)> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::invalid(format!("Bessel K needs a positive finite argument, got {x}")));
    }
    if x <= 2.0 {
        let q = 0.25 * x * x;
        let l = (0.5 * x).ln();
        let mut term = 1.0; // q^k / (k!)^2
        let mut i0 = 0.0;
        let mut harm = 0.0;
        let mut k0_tail = 0.0;
        let mut i1_sum = 0.0; // sum q^k/(k!(k+1)!)
        let mut k1_tail = 0.0;
        let mut psi_k1 = -EULER_GAMMA; // psi(k+1)
        for k in 0..60 {
            let kf = k as f64;
            if k > 0 {
                term *= q / (kf * kf);
                harm += 1.0 / kf;
                psi_k1 += 1.0 / kf;
            }
            let t1 = term / (kf + 1.0);
            i0 += term;
            k0_tail += term * harm;
            i1_sum += t1;
            let psi_k2 = psi_k1 + 1.0 / (kf + 1.0);
            k1_tail += (psi_k1 + psi_k2) * t1;
            if term < 1e-18 * i0 {
                break;
            }
        }
        let k0 = -(l + EULER_GAMMA) * i0 + k0_tail;
        let i1 = 0.5 * x * i1_sum;
        let k1 = 1.0 / x + i1 * l - 0.25 * x * k1_tail;
        let e = x.exp();
        return Ok((k0 * e, k1 * e));
    }
    // Steed's continued fraction for order zero.
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 1..10_000 {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    let h = a1 * h;
    let k0 = (PI / (2.0 * x)).sqrt() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    Ok((k0, k1))
}

fn pochhammer_asymptotic(a: f64, b: f64, z: f64) -> Option<f64> {
    // U(a,b,z) ~ z^-a sum_n (a)_n (a-b+1)_n / n! (-1/z)^n
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut best = f64::INFINITY;
    for n in 0..200 {
        let nf = n as f64;
        term *= (a + nf) * (a - b + 1.0 + nf) / (nf + 1.0) * (-1.0 / z);
        if term.abs() >= best {
            return None;
        }
        best = term.abs();
        sum += term;
        if term.abs() < 1e-16 * sum.abs() {
            return Some(sum * z.powf(-a));
        }
    }
    None
}

/// Tricomi's confluent hypergeometric function U(a, b, z) for z >= 0.
///
/// Closed forms through Bessel K cover (a, b) = (-1/2, 0) and (1/2, 1) on the
/// whole half line; other parameters are supported where the asymptotic
/// series converges to double precision.
pub fn tricomi_u(a: f64, b: f64, z: f64) -> Result<f64> {
    if !(z >= 0.0) || !z.is_finite() {
        return Err(Error::invalid(format!("tricomi_u needs finite z >= 0, got {z}")));
    }
    let minus_half_zero = a == -0.5 && b == 0.0;
    let half_one = a == 0.5 && b == 1.0;
    if z > 60.0 {
        if let Some(v) = pochhammer_asymptotic(a, b, z) {
            return Ok(v);
        }
    }
    if minus_half_zero {
        if z == 0.0 {
            return Ok(1.0 / PI.sqrt());
        }
        // U(-1/2, 0, z) = z e^{z/2} (K0(z/2) + K1(z/2)) / (2 sqrt(pi))
        let (k0, k1) = bessel_k01_scaled(0.5 * z)?;
        return Ok(z * (k0 + k1) / (2.0 * PI.sqrt()));
    }
    if half_one {
        if z == 0.0 {
            return Err(Error::invalid("U(1/2, 1, z) diverges at z = 0"));
        }
        let (k0, _) = bessel_k01_scaled(0.5 * z)?;
        return Ok(k0 / PI.sqrt());
    }
    Err(Error::invalid(format!("tricomi_u({a}, {b}, {z}) outside the supported region")))
}
