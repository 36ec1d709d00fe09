//! Scalar root finders: Brent on a bracket, complex Newton with a secant fallback.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Brent's method on `[a, b]` with `f(a)·f(b) ≤ 0`, stopping when the bracket is below `xtol`.
pub fn brent(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, xtol: f64) -> Result<f64> {
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Convergence(format!("no sign change on [{a}, {b}]")));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * xm * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(xm) };
        fb = f(b)?;
    }
    Err(Error::Convergence("Brent iteration limit".into()))
}

/// Outcome of a complex Newton iteration.
#[derive(Clone, Copy, Debug)]
pub struct NewtonResult {
    pub root: Complex64,
    pub iterations: usize,
}

/// Newton iteration for `f` given `fd(z) = (f(z), f′(z))`. Steps are capped at
/// `max_step`; when the derivative is unusable a secant step is taken instead.
pub fn newton_complex(
    fd: impl Fn(Complex64) -> Result<(Complex64, Complex64)>,
    z0: Complex64,
    rel_tol: f64,
    max_step: f64,
    max_iter: usize,
) -> Result<NewtonResult> {
    let mut z = z0;
    let mut prev: Option<(Complex64, Complex64)> = None;
    for it in 1..=max_iter {
        let (f, d) = fd(z)?;
        if !f.re.is_finite() || !f.im.is_finite() {
            return Err(Error::Convergence(format!("non-finite residual at {z}")));
        }
        let deriv_ok = d.norm() > 1e-300 && d.re.is_finite() && d.im.is_finite();
        let mut step = match (deriv_ok, prev) {
            (true, _) => f / d,
            (false, Some((zp, fp))) if fp != f => f * (z - zp) / (f - fp),
            _ => return Err(Error::Convergence(format!("derivative vanished at {z}"))),
        };
        if step.norm() > max_step {
            step *= max_step / step.norm();
        }
        prev = Some((z, f));
        z -= step;
        if step.norm() <= rel_tol * z.norm() {
            return Ok(NewtonResult {
                root: z,
                iterations: it,
            });
        }
    }
    Err(Error::Convergence(format!(
        "Newton did not converge from {z0} (last {z})"
    )))
}
