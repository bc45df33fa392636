//! Adaptive Simpson quadrature with error control.
//!
//! The recursion halves until the Richardson estimate |S₂ − S₁|/15 falls
//! under the local tolerance, then applies the usual one-step correction.
//! Integrals over kinked or mildly singular integrands are handled by
//! splitting the domain at caller-supplied points; integrable endpoint
//! singularities are excised by a 1e−12-wide sliver whose contribution is
//! far below every tolerance used in this crate.

use crate::error::{Error, Result};
use crate::operators::StepFunction;
use crate::spaces::Point;

const MAX_DEPTH: u32 = 48;

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    coarse: f64,
}

fn simpson(a: f64, fa: f64, fm: f64, fb: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    panel: Panel,
    tol: f64,
    depth: u32,
    converged: &mut bool,
) -> f64 {
    let m = 0.5 * (panel.a + panel.b);
    let lm = 0.5 * (panel.a + m);
    let rm = 0.5 * (m + panel.b);
    let flm = f(lm);
    let frm = f(rm);
    if !flm.is_finite() || !frm.is_finite() {
        *converged = false;
        return panel.coarse;
    }
    let left = simpson(panel.a, panel.fa, flm, panel.fm, m);
    let right = simpson(m, panel.fm, frm, panel.fb, panel.b);
    let fine = left + right;
    let err = fine - panel.coarse;
    if err.abs() <= 15.0 * tol {
        return fine + err / 15.0;
    }
    if depth == 0 {
        *converged = false;
        return fine;
    }
    let lp = Panel {
        a: panel.a,
        b: m,
        fa: panel.fa,
        fm: flm,
        fb: panel.fm,
        coarse: left,
    };
    let rp = Panel {
        a: m,
        b: panel.b,
        fa: panel.fm,
        fm: frm,
        fb: panel.fb,
        coarse: right,
    };
    adaptive(f, lp, 0.5 * tol, depth - 1, converged)
        + adaptive(f, rp, 0.5 * tol, depth - 1, converged)
}

/// ∫_a^b f with absolute tolerance `tol`. The integrand must be finite on
/// [a, b]; non-finite samples or depth exhaustion yield a quadrature error
/// carrying the achieved estimate.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("quadrature tolerance {tol} must be > 0")));
    }
    if a == b {
        return Ok(0.0);
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    if !fa.is_finite() || !fm.is_finite() || !fb.is_finite() {
        return Err(Error::Quadrature {
            message: format!("integrand not finite on [{a}, {b}]"),
            estimate: 0.0,
        });
    }
    let coarse = simpson(a, fa, fm, fb, b);
    let panel = Panel {
        a,
        b,
        fa,
        fm,
        fb,
        coarse,
    };
    let mut converged = true;
    let value = adaptive(&f, panel, tol, MAX_DEPTH, &mut converged);
    if converged {
        Ok(value)
    } else {
        Err(Error::Quadrature {
            message: format!("subdivision budget exhausted on [{a}, {b}]"),
            estimate: value,
        })
    }
}

fn sliver(at: f64, width: f64) -> f64 {
    1e-12 * width.max(at.abs()).max(1e-300)
}

/// Integrate one panel whose ends have already been slivered. Ends flagged
/// singular are approached through geometric shells so that an integrable
/// log-type blowup never starves the Simpson recursion.
fn integrate_panel<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
    lo_singular: bool,
    hi_singular: bool,
    tol: f64,
) -> Result<f64> {
    if lo >= hi {
        return Ok(0.0);
    }
    if lo_singular && hi_singular {
        let m = 0.5 * (lo + hi);
        return Ok(integrate_panel(f, lo, m, true, false, 0.5 * tol)?
            + integrate_panel(f, m, hi, false, true, 0.5 * tol)?);
    }
    if !lo_singular && !hi_singular {
        return adaptive_simpson(f, lo, hi, tol);
    }
    // shells halving toward the singular end, down to a 1e−12 sliver
    let width = hi - lo;
    let shells = 44u32;
    let per_shell = tol / (shells as f64 + 1.0);
    let mut total = 0.0;
    let mut frac = 1.0f64;
    for _ in 0..shells {
        let next = 0.5 * frac;
        let (sa, sb) = if lo_singular {
            (lo + next * width, lo + frac * width)
        } else {
            (hi - frac * width, hi - next * width)
        };
        total += adaptive_simpson(f, sa, sb, per_shell)?;
        frac = next;
        if frac * width <= sliver(if lo_singular { lo } else { hi }, width) {
            break;
        }
    }
    Ok(total)
}

/// ∫_a^b f split at the interior points of `splits` (kinks or jumps) and
/// `singular` (integrable singularities). Every panel is shrunk by a
/// relative 1e−12 sliver at both ends, so jump values sitting exactly on a
/// cut never poison the Simpson error estimate; singular ends additionally
/// get geometric shell grading.
pub fn integrate_with_splits<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    splits: &[f64],
    singular: &[f64],
    tol: f64,
) -> Result<f64> {
    if a >= b {
        return Ok(0.0);
    }
    let mut cuts: Vec<f64> = vec![a, b];
    for &s in splits.iter().chain(singular.iter()) {
        if s > a && s < b {
            cuts.push(s);
        }
    }
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();
    let is_singular = |x: f64| singular.contains(&x);
    let mut total = 0.0;
    let per_panel = tol / cuts.len() as f64;
    for w in cuts.windows(2) {
        let width = w[1] - w[0];
        let lo = w[0] + sliver(w[0], width);
        let hi = w[1] - sliver(w[1], width);
        total += integrate_panel(
            &f,
            lo,
            hi,
            is_singular(w[0]),
            is_singular(w[1]),
            per_panel,
        )?;
    }
    Ok(total)
}

/// ∫_ℝ f for an integrand decaying at both ends. The core [lo, hi] is split
/// as in [`integrate_with_splits`]; tails are added in doubling segments
/// until two consecutive segments contribute less than `tol`/10 each.
pub fn integrate_line<F: Fn(f64) -> f64>(
    f: F,
    core_lo: f64,
    core_hi: f64,
    splits: &[f64],
    singular: &[f64],
    tol: f64,
) -> Result<f64> {
    let mut total = integrate_with_splits(&f, core_lo, core_hi, splits, singular, tol)?;
    // right tail
    let mut a = core_hi;
    let mut step = (core_hi - core_lo).abs().max(1.0);
    let mut calm = 0;
    for _ in 0..64 {
        let b = a + step;
        let seg = adaptive_simpson(&f, a, b, tol / 10.0)?;
        total += seg;
        calm = if seg.abs() < tol / 10.0 { calm + 1 } else { 0 };
        if calm >= 2 {
            break;
        }
        a = b;
        step *= 2.0;
    }
    if calm < 2 {
        return Err(Error::Quadrature {
            message: "right tail did not settle".into(),
            estimate: total,
        });
    }
    // left tail
    let mut b = core_lo;
    step = (core_hi - core_lo).abs().max(1.0);
    calm = 0;
    for _ in 0..64 {
        let a2 = b - step;
        let seg = adaptive_simpson(&f, a2, b, tol / 10.0)?;
        total += seg;
        calm = if seg.abs() < tol / 10.0 { calm + 1 } else { 0 };
        if calm >= 2 {
            break;
        }
        b = a2;
        step *= 2.0;
    }
    if calm < 2 {
        return Err(Error::Quadrature {
            message: "left tail did not settle".into(),
            estimate: total,
        });
    }
    Ok(total)
}

/// ∫_0^∞ f in doubling segments [0,1], [1,2], [2,4], … until two consecutive
/// segments contribute less than `tol`/10 each.
pub fn integrate_half_line<F: Fn(f64) -> f64>(
    f: F,
    splits: &[f64],
    tol: f64,
) -> Result<f64> {
    let mut total = integrate_with_splits(&f, 0.0, 1.0, splits, &[], tol / 2.0)?;
    let mut a = 1.0f64;
    let mut calm = 0;
    for _ in 0..72 {
        let b = 2.0 * a;
        let inner: Vec<f64> = splits.iter().copied().filter(|s| *s > a && *s < b).collect();
        let seg = integrate_with_splits(&f, a, b, &inner, &[], tol / 10.0)?;
        total += seg;
        calm = if seg.abs() < tol / 10.0 { calm + 1 } else { 0 };
        if calm >= 2 {
            return Ok(total);
        }
        a = b;
    }
    Err(Error::Quadrature {
        message: "half-line tail did not settle within the cutoff budget".into(),
        estimate: total,
    })
}

/// Quadrature oracle for convolution against a step function:
/// Σ_i v_i · ∫_{x−x_i}^{x−x_{i−1}} kernel(y) dy, each interval integrated
/// adaptively to absolute tolerance `tol`.
pub fn quad_convolve<F: Fn(f64) -> f64>(
    kernel: F,
    f: &StepFunction,
    x: f64,
    tol: f64,
) -> Result<Point> {
    quad_convolve_split(kernel, &[], f, x, tol)
}

/// [`quad_convolve`] with the kernel's known kink points supplied so the
/// subdivision never has to hunt for a jump.
pub fn quad_convolve_split<F: Fn(f64) -> f64>(
    kernel: F,
    splits: &[f64],
    f: &StepFunction,
    x: f64,
    tol: f64,
) -> Result<Point> {
    let mut acc = vec![0.0; f.space().dim];
    let bps = f.breakpoints();
    for (i, v) in f.values().iter().enumerate() {
        let a = x - bps[i + 1];
        let b = x - bps[i];
        let w = integrate_with_splits(&kernel, a, b, splits, &[], tol)?;
        for (c, vc) in acc.iter_mut().zip(v.coords()) {
            *c += w * vc;
        }
    }
    Point::new(f.space(), acc)
}
