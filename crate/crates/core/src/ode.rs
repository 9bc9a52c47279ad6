//! Fixed-step classical Runge-Kutta integration for scalar ODEs.

use crate::error::{MoranError, Result};

/// One RK4 step of `dy/dt = f(t, y)`.
#[inline]
pub fn rk4_step<F: Fn(f64, f64) -> f64>(f: &F, t: f64, y: f64, h: f64) -> f64 {
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, y + 0.5 * h * k1);
    let k3 = f(t + 0.5 * h, y + 0.5 * h * k2);
    let k4 = f(t + h, y + h * k3);
    y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Number of steps of size at most `step` covering `[t0, t1]`. Absorbs
/// rounding so that e.g. 2 / 1e-3 gives 2000 steps rather than 2001.
pub fn step_count(t0: f64, t1: f64, step: f64) -> usize {
    let span = t1 - t0;
    if span <= 0.0 {
        return 0;
    }
    let ratio = span / step;
    let rounded = ratio.round();
    if (ratio - rounded).abs() <= 1e-9 * ratio.max(1.0) {
        (rounded as usize).max(1)
    } else {
        ratio.ceil() as usize
    }
}

/// Integrates from `(t0, y0)` to `t_end` with nominal step `step`; returns
/// every visited `(t, y)` including both endpoints. Steps are uniform on
/// `[t0, t_end]` so the last one lands on `t_end` exactly.
pub fn integrate_fixed<F: Fn(f64, f64) -> f64>(
    f: F,
    t0: f64,
    y0: f64,
    t_end: f64,
    step: f64,
) -> Result<Vec<(f64, f64)>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(MoranError::Domain(format!(
            "step must be positive and finite, got {step}"
        )));
    }
    if !(t_end >= t0) {
        return Err(MoranError::Domain(format!(
            "end time {t_end} precedes start time {t0}"
        )));
    }
    let n = step_count(t0, t_end, step);
    let mut out = Vec::with_capacity(n + 1);
    out.push((t0, y0));
    if n == 0 {
        return Ok(out);
    }
    let h = (t_end - t0) / n as f64;
    let mut y = y0;
    for i in 0..n {
        let t = t0 + i as f64 * h;
        y = rk4_step(&f, t, y, h);
        let t_next = if i + 1 == n {
            t_end
        } else {
            t0 + (i + 1) as f64 * h
        };
        out.push((t_next, y));
    }
    Ok(out)
}

/// Endpoint only, without storing the path.
pub fn integrate_to<F: Fn(f64, f64) -> f64>(f: F, t0: f64, y0: f64, t_end: f64, step: f64) -> f64 {
    let n = step_count(t0, t_end, step);
    if n == 0 {
        return y0;
    }
    let h = (t_end - t0) / n as f64;
    let mut y = y0;
    for i in 0..n {
        y = rk4_step(&f, t0 + i as f64 * h, y, h);
    }
    y
}
