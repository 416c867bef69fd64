//! Adaptive quadrature, in two flavours.
//!
//! `log_integrate*` computes log of an integral of exp(f) entirely in the
//! log domain: panel sums are Simpson rules combined with log-sum-exp, so
//! integrands peaking at e^-700 and below keep full relative accuracy.
//! Panels falling [`TRUNCATION_NATS`] below the running maximum are taken
//! at face value without refinement; semi-infinite ranges are truncated by
//! the same rule.
//!
//! `integrate` is a plain adaptive Simpson rule in linear space, used for
//! the oscillatory Fourier/Laplace inversion integrands whose scale factor
//! has already been pulled out.

use crate::error::{Error, Result};
use crate::math::{logsumexp, logsumexp2};

/// Panels this many nats below the peak are not worth refining.
pub const TRUNCATION_NATS: f64 = 45.0;

const MAX_DEPTH: usize = 48;
const LN4: f64 = 1.386_294_361_119_890_6;

/// Result of a log-domain quadrature: `log_value` = log of the integral,
/// `rel_err` an estimate of the relative error of the value (equivalently
/// the absolute error of `log_value`).
#[derive(Debug, Clone, Copy)]
pub struct LogIntegral {
    pub log_value: f64,
    pub rel_err: f64,
    pub evals: usize,
}

struct LogWork<'a> {
    f: &'a dyn Fn(f64) -> f64,
    tol: f64,
    floor: f64,
    evals: usize,
    budget: usize,
    err_log: f64,
}

impl<'a> LogWork<'a> {
    fn eval(&mut self, x: f64) -> Result<f64> {
        self.evals += 1;
        if self.evals > self.budget {
            return Err(Error::Quadrature(format!(
                "log-domain quadrature exceeded {} evaluations",
                self.budget
            )));
        }
        let v = (self.f)(x);
        if v.is_nan() || v == f64::INFINITY {
            return Err(Error::Quadrature(format!(
                "integrand returned {v} at x={x}"
            )));
        }
        Ok(v)
    }
}

/// Simpson panel in log space: log of (h/6)(e^fa + 4 e^fm + e^fb).
fn simpson_log(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    (h / 6.0).ln() + logsumexp(&[fa, LN4 + fm, fb])
}

fn adapt_log(
    w: &mut LogWork,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    depth: usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    // Truncation: this panel cannot matter relative to the peak.
    let panel_cap = fa.max(fm).max(fb) + (b - a).ln();
    if panel_cap < w.floor - TRUNCATION_NATS {
        return Ok(whole);
    }
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = w.eval(lm)?;
    let frm = w.eval(rm)?;
    let left = simpson_log(fa, flm, fm, m - a);
    let right = simpson_log(fm, frm, fb, b - m);
    let refined = logsumexp2(left, right);
    if refined == f64::NEG_INFINITY && whole == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let diff = (refined - whole).abs();
    if diff <= w.tol || depth >= MAX_DEPTH {
        if diff.is_finite() && diff > 0.0 {
            w.err_log = logsumexp2(w.err_log, refined + diff.ln());
        }
        return Ok(refined);
    }
    let l = adapt_log(w, a, m, fa, flm, fm, left, depth + 1)?;
    let r = adapt_log(w, m, b, fm, frm, fb, right, depth + 1)?;
    Ok(logsumexp2(l, r))
}

/// log of the integral of exp(f) over [a, b], to roughly `tol` relative.
pub fn log_integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<LogIntegral> {
    log_integrate_with_floor(f, &[a, b], tol, f64::NEG_INFINITY)
}

/// Same, with panel boundaries seeded at `knots` (ascending) and panels more
/// than [`TRUNCATION_NATS`] below `floor` accepted unrefined.
pub fn log_integrate_with_floor(
    f: &dyn Fn(f64) -> f64,
    knots: &[f64],
    tol: f64,
    floor: f64,
) -> Result<LogIntegral> {
    if knots.len() < 2 {
        return Err(Error::InvalidInput("quadrature needs at least two knots".into()));
    }
    let mut w = LogWork {
        f,
        tol,
        floor,
        evals: 0,
        budget: 2_000_000,
        err_log: f64::NEG_INFINITY,
    };
    let mut total = f64::NEG_INFINITY;
    let mut fa = w.eval(knots[0])?;
    for pair in knots.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if !(b > a) {
            return Err(Error::InvalidInput(format!(
                "quadrature knots not ascending: {a} >= {b}"
            )));
        }
        let fb = w.eval(b)?;
        let fm = w.eval(0.5 * (a + b))?;
        let whole = simpson_log(fa, fm, fb, b - a);
        let v = adapt_log(&mut w, a, b, fa, fm, fb, whole, 0)?;
        total = logsumexp2(total, v);
        // keep the floor current so later panels can be truncated
        if total > w.floor {
            w.floor = total;
        }
        fa = fb;
    }
    let rel_err = if total == f64::NEG_INFINITY {
        0.0
    } else {
        (w.err_log - total).exp()
    };
    Ok(LogIntegral {
        log_value: total,
        rel_err,
        evals: w.evals,
    })
}

/// log of the integral of exp(f) over [a, +inf).
///
/// The effective support is located by a forward scan with geometrically
/// growing steps; integration stops where the integrand has fallen
/// [`TRUNCATION_NATS`] below its running maximum. Integrands that fail to
/// decay within a very wide window are reported as divergent.
pub fn log_integrate_to_inf(f: &dyn Fn(f64) -> f64, a: f64, tol: f64) -> Result<LogIntegral> {
    let mut knots = vec![a];
    let mut h = 0.25 * (1.0 + a.abs() * 1e-3);
    let mut x = a;
    let mut fmax = (f)(a);
    if fmax.is_nan() {
        return Err(Error::Quadrature(format!("integrand NaN at x={a}")));
    }
    let mut decays = 0usize;
    for _ in 0..4000 {
        x += h;
        let v = (f)(x);
        if v.is_nan() || v == f64::INFINITY {
            return Err(Error::Quadrature(format!("integrand returned {v} at x={x}")));
        }
        knots.push(x);
        if v > fmax {
            fmax = v;
            decays = 0;
        } else {
            decays += 1;
        }
        if decays >= 2 && v < fmax - TRUNCATION_NATS {
            return log_integrate_with_floor(f, &knots, tol, fmax + h.ln());
        }
        h *= 1.5;
    }
    Err(Error::Quadrature(format!(
        "integrand starting at x={a} did not decay {TRUNCATION_NATS} nats below its maximum \
         within the scan window (divergent or far-spread integral)"
    )))
}

/// Plain adaptive Simpson for linear-space integrands (oscillatory parts of
/// Fourier inversions). Returns (value, error estimate, evals).
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol_abs: f64) -> Result<(f64, f64, usize)> {
    struct Lin<'a> {
        f: &'a dyn Fn(f64) -> f64,
        evals: usize,
        err: f64,
    }
    impl<'a> Lin<'a> {
        fn eval(&mut self, x: f64) -> Result<f64> {
            self.evals += 1;
            if self.evals > 4_000_000 {
                return Err(Error::Quadrature("linear quadrature budget exceeded".into()));
            }
            let v = (self.f)(x);
            if !v.is_finite() {
                return Err(Error::Quadrature(format!("integrand returned {v} at x={x}")));
            }
            Ok(v)
        }
    }
    fn rec(
        w: &mut Lin,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let flm = w.eval(0.5 * (a + m))?;
        let frm = w.eval(0.5 * (m + b))?;
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let s2 = left + right;
        let d = s2 - whole;
        if d.abs() <= 15.0 * tol || depth >= MAX_DEPTH {
            w.err += d.abs() / 15.0;
            return Ok(s2 + d / 15.0);
        }
        let l = rec(w, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)?;
        let r = rec(w, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?;
        Ok(l + r)
    }
    let mut w = Lin { f, evals: 0, err: 0.0 };
    let fa = w.eval(a)?;
    let fb = w.eval(b)?;
    let fm = w.eval(0.5 * (a + b))?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let v = rec(&mut w, a, b, fa, fm, fb, whole, tol_abs, 0)?;
    Ok((v, w.err, w.evals))
}
