//! L^p norms of derived variation fields: x ↦ V_q((K_t ∗ f)(x) : t ∈ grid),
//! integrated on a uniform spatial grid over the enlarged support with a
//! double-grid agreement gate.

use crate::error::{Error, Result};
use crate::harness::SpatialSpec;
use crate::operators::{eval, KernelFamily, ScaleGrid, StepFunction};
use crate::variation::{pow_q, root_q, vq_dp, SamplePath};

/// Fixed sub-cell offset: grid points sit at lo + (g + OFFSET)·h, which
/// keeps them off step-function breakpoints and off the midpoints of
/// dyadic refinements while scaling exactly under power-of-two dilations.
const OFFSET: f64 = 0.5078125;

/// Gated field value: the fine-grid number plus its coarse companion and
/// their relative gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldValue {
    pub value: f64,
    pub coarse: f64,
    pub richardson_gap: f64,
}

/// Σ h·V_q(x)^p over the spatial grid (the p-th power of the field norm).
/// Search code compares these sums directly: they transform exactly under
/// power-of-two value scalings and joint dilations, where the p-th root
/// would round.
pub(crate) fn lp_of_field_pow(
    f: &StepFunction,
    family: KernelFamily,
    grid: &ScaleGrid,
    q: f64,
    p: f64,
    spatial: &SpatialSpec,
    points_per_unit: f64,
) -> Result<f64> {
    let (x0, xk) = f.support();
    let t_max = grid.max_scale();
    let lo = x0 - spatial.tail_multiplier * t_max;
    let hi = xk + spatial.tail_multiplier * t_max;
    let n = ((hi - lo) * points_per_unit).ceil().max(8.0) as usize;
    let h = (hi - lo) / n as f64;
    let scales = grid.scales();
    let mut acc = 0.0;
    let mut samples = Vec::with_capacity(scales.len());
    for g in 0..n {
        let x = lo + (g as f64 + OFFSET) * h;
        samples.clear();
        for t in scales {
            samples.push(eval(family, f, *t, x)?);
        }
        let path = SamplePath::new(scales.to_vec(), samples.clone())?;
        let v = vq_dp(&path, q)?.value;
        acc += h * pow_q(v, p);
    }
    Ok(acc)
}

fn lp_of_field(
    f: &StepFunction,
    family: KernelFamily,
    grid: &ScaleGrid,
    q: f64,
    p: f64,
    spatial: &SpatialSpec,
    points_per_unit: f64,
) -> Result<f64> {
    Ok(root_q(
        lp_of_field_pow(f, family, grid, q, p, spatial, points_per_unit)?,
        p,
    ))
}

/// Evaluate the derived field's L^p norm at the configured density and at
/// twice that density; fail with both values when they disagree beyond the
/// configured gate. This is the coarse/fine pair every estimate rests on.
pub fn field_vq_lp(
    f: &StepFunction,
    family: KernelFamily,
    grid: &ScaleGrid,
    q: f64,
    p: f64,
    spatial: &SpatialSpec,
) -> Result<FieldValue> {
    let coarse = lp_of_field(f, family, grid, q, p, spatial, spatial.points_per_unit)?;
    let fine = lp_of_field(
        f,
        family,
        grid,
        q,
        p,
        spatial,
        2.0 * spatial.points_per_unit,
    )?;
    let gap = (fine - coarse).abs() / fine.abs().max(coarse.abs()).max(1e-300);
    if gap > spatial.richardson_gate {
        return Err(Error::Resolution {
            message: format!(
                "derived-field L^{p} norm moved {gap:.3e} under grid doubling \
                 (gate {})",
                spatial.richardson_gate
            ),
            coarse,
            fine,
        });
    }
    Ok(FieldValue {
        value: fine,
        coarse,
        richardson_gap: gap,
    })
}

/// Search-speed variant: the p-th-power sum on a single grid at the
/// configured density, no gate.
pub(crate) fn field_vq_lp_pow_coarse(
    f: &StepFunction,
    family: KernelFamily,
    grid: &ScaleGrid,
    q: f64,
    p: f64,
    spatial: &SpatialSpec,
) -> Result<f64> {
    lp_of_field_pow(f, family, grid, q, p, spatial, spatial.points_per_unit)
}
