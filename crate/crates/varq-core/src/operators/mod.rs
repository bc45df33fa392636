//! Closed-form convolution operators on compactly supported step functions.
//!
//! The test-function class is fixed to step functions so that every kernel
//! in the family has an elementary primitive and operator evaluation is
//! exact: the only approximations anywhere are quadrature oracles and
//! spatial grids for derived fields. For f = Σ_i v_i·1_{[x_{i−1}, x_i)} and
//! a convolution kernel K_t,
//!
//! ```text
//! (K_t ∗ f)(x) = Σ_i v_i · ∫_{x−x_i}^{x−x_{i−1}} K_t(y) dy,
//! ```
//!
//! so each family only needs the weight integral ∫_a^b K_t.
//!
//! Families: the centred average 1_{|y|<t}/(2t); the truncated Hilbert
//! kernel 1/(πy) on |y| > ε (optionally with an outer cutoff |y| < R); the
//! Poisson kernel t/(π(t²+y²)) and its conjugate y/(π(t²+y²)); and the four
//! dilated pieces φ± = 1/(πy(y²+1)) on ±[1,∞), ρ± = y/(π(y²+1)) on ±[0,1]
//! that reassemble H_ε − Q_ε.

pub mod quad;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::{Point, Space};
use crate::variation::{pow_q, root_q};

use std::f64::consts::PI;

/// Compactly supported piecewise-constant function with vector values:
/// value `values[i]` on [breakpoints[i], breakpoints[i+1]), zero outside.
#[derive(Debug, Clone)]
pub struct StepFunction {
    space: Space,
    breakpoints: Vec<f64>,
    values: Vec<Point>,
}

/// Serialized form of a step function (the space comes from the enclosing
/// configuration).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunctionSpec {
    pub breakpoints: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl StepFunctionSpec {
    pub fn into_step_function(self, space: Space) -> Result<StepFunction> {
        StepFunction::new(space, self.breakpoints, self.values)
    }
}

impl StepFunction {
    pub fn new(space: Space, breakpoints: Vec<f64>, values: Vec<Vec<f64>>) -> Result<StepFunction> {
        let pts = values
            .into_iter()
            .map(|c| Point::new(space, c))
            .collect::<Result<Vec<_>>>()?;
        StepFunction::from_points(breakpoints, pts)
    }

    pub fn from_points(breakpoints: Vec<f64>, values: Vec<Point>) -> Result<StepFunction> {
        if values.is_empty() {
            return Err(Error::Domain("step function needs at least one interval".into()));
        }
        if breakpoints.len() != values.len() + 1 {
            return Err(Error::Domain(format!(
                "{} breakpoints do not bound {} intervals",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("non-finite breakpoint".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("breakpoints must be strictly increasing".into()));
        }
        let space = values[0].space();
        for v in &values {
            if v.space() != space {
                return Err(Error::SpaceMismatch {
                    left: space,
                    right: v.space(),
                });
            }
        }
        Ok(StepFunction {
            space,
            breakpoints,
            values,
        })
    }

    /// Scalar indicator 1_{[a,b]} in ℓ²_1.
    pub fn indicator(a: f64, b: f64) -> Result<StepFunction> {
        StepFunction::new(Space::l2(1), vec![a, b], vec![vec![1.0]])
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[Point] {
        &self.values
    }

    pub fn support(&self) -> (f64, f64) {
        (self.breakpoints[0], *self.breakpoints.last().unwrap())
    }

    /// Pointwise value (zero outside the support; right-open intervals).
    pub fn value_at(&self, x: f64) -> Point {
        let k = self.breakpoints.partition_point(|b| *b <= x);
        if k == 0 || k == self.breakpoints.len() {
            Point::zero(self.space)
        } else {
            self.values[k - 1].clone()
        }
    }

    /// ∫ f exactly (vector-valued total mass).
    pub fn total_mass(&self) -> Point {
        let mut acc = vec![0.0; self.space.dim];
        for (i, v) in self.values.iter().enumerate() {
            let len = self.breakpoints[i + 1] - self.breakpoints[i];
            for (a, c) in acc.iter_mut().zip(v.coords()) {
                *a += len * c;
            }
        }
        Point::new(self.space, acc).expect("finite mass")
    }

    pub fn scale_values(&self, lambda: f64) -> StepFunction {
        StepFunction {
            space: self.space,
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|v| v.scale(lambda)).collect(),
        }
    }

    /// x ↦ f(λx) for λ > 0: breakpoints divide by λ, values unchanged.
    pub fn dilate_argument(&self, lambda: f64) -> Result<StepFunction> {
        if !(lambda > 0.0) {
            return Err(Error::Domain("dilation factor must be positive".into()));
        }
        StepFunction::from_points(
            self.breakpoints.iter().map(|x| x / lambda).collect(),
            self.values.clone(),
        )
    }

    pub fn to_spec(&self) -> StepFunctionSpec {
        StepFunctionSpec {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|v| v.coords().to_vec()).collect(),
        }
    }
}

/// A finite grid of positive scales over which variation is taken. Grid
/// values under-approximate the continuum supremum; refinement
/// monotonicity is the convergence diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleGrid {
    scales: Vec<f64>,
}

/// Serialized constructor form: `{"geometric": {"min":…, "max":…, "count":…}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleGridSpec {
    Geometric { min: f64, max: f64, count: usize },
}

impl ScaleGridSpec {
    pub fn build(&self) -> Result<ScaleGrid> {
        let ScaleGridSpec::Geometric { min, max, count } = *self;
        ScaleGrid::geometric(min, max, count)
    }
}

impl ScaleGrid {
    /// count scales spaced geometrically from min to max. Counts of the form
    /// c and 2(c−1)+1 produce nested grids with bit-identical shared scales.
    pub fn geometric(min: f64, max: f64, count: usize) -> Result<ScaleGrid> {
        if !(min > 0.0) || !min.is_finite() || !max.is_finite() {
            return Err(Error::Domain(format!(
                "geometric grid needs 0 < min ≤ max, got [{min}, {max}]"
            )));
        }
        if count == 0 {
            return Err(Error::Domain("scale grid needs at least one point".into()));
        }
        if count == 1 {
            return ScaleGrid::from_scales(vec![min]);
        }
        if max <= min {
            return Err(Error::Domain(format!(
                "geometric grid needs max > min for count ≥ 2, got [{min}, {max}]"
            )));
        }
        let ratio = max / min;
        let scales = (0..count)
            .map(|i| min * ratio.powf(i as f64 / (count - 1) as f64))
            .collect();
        ScaleGrid::from_scales(scales)
    }

    pub fn from_scales(scales: Vec<f64>) -> Result<ScaleGrid> {
        if scales.is_empty() {
            return Err(Error::Domain("scale grid needs at least one point".into()));
        }
        if scales.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(Error::Domain("scales must be finite and positive".into()));
        }
        if scales.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("scales must be strictly increasing".into()));
        }
        Ok(ScaleGrid { scales })
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn max_scale(&self) -> f64 {
        *self.scales.last().unwrap()
    }

    /// Every scale divided by λ (exact for power-of-two λ).
    pub fn dilate(&self, lambda: f64) -> Result<ScaleGrid> {
        ScaleGrid::from_scales(self.scales.iter().map(|t| t / lambda).collect())
    }
}

/// ‖f‖_{L^p}: exact on step functions.
pub fn lp_norm(f: &StepFunction, p: f64) -> Result<f64> {
    Ok(root_q(lp_norm_pow(f, p)?, p))
}

/// Σ len·‖v‖^p, the p-th power of the L^p norm before the root.
pub fn lp_norm_pow(f: &StepFunction, p: f64) -> Result<f64> {
    if !p.is_finite() || p < 1.0 {
        return Err(Error::Domain(format!("norm exponent p = {p} must be ≥ 1")));
    }
    let mut sum = 0.0;
    for (i, v) in f.values.iter().enumerate() {
        let len = f.breakpoints[i + 1] - f.breakpoints[i];
        sum += len * pow_q(v.norm(), p);
    }
    Ok(sum)
}

/// The convolution families, tagged by their defining kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    Average,
    TruncatedHilbert,
    DoublyTruncatedHilbert { outer: f64 },
    Poisson,
    ConjugatePoisson,
    PhiPlus,
    PhiMinus,
    RhoPlus,
    RhoMinus,
}

/// ln|b| − ln|a| over [a,b] ∩ region, for a region not containing 0.
fn log_segment(a: f64, b: f64, lo: f64, hi: f64) -> f64 {
    let a = a.max(lo);
    let b = b.min(hi);
    if a >= b {
        0.0
    } else {
        b.abs().ln() - a.abs().ln()
    }
}

/// ln(u/√(1+u²)) = −½·ln(1 + u⁻²), stable for |u| ≥ 1.
fn phi_primitive(u: f64) -> f64 {
    -0.5 * (1.0 / (u * u)).ln_1p()
}

impl KernelFamily {
    pub fn validate(&self) -> Result<()> {
        if let KernelFamily::DoublyTruncatedHilbert { outer } = self {
            if !(*outer > 0.0) {
                return Err(Error::Domain(format!("outer cutoff R = {outer} must be > 0")));
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match self {
            KernelFamily::Average => "average".into(),
            KernelFamily::TruncatedHilbert => "truncated_hilbert".into(),
            KernelFamily::DoublyTruncatedHilbert { outer } => {
                format!("doubly_truncated_hilbert(R={outer})")
            }
            KernelFamily::Poisson => "poisson".into(),
            KernelFamily::ConjugatePoisson => "conjugate_poisson".into(),
            KernelFamily::PhiPlus => "phi_plus".into(),
            KernelFamily::PhiMinus => "phi_minus".into(),
            KernelFamily::RhoPlus => "rho_plus".into(),
            KernelFamily::RhoMinus => "rho_minus".into(),
        }
    }

    /// Pointwise kernel K_t(y) (used only by the quadrature oracle).
    pub fn kernel_at(&self, t: f64, y: f64) -> f64 {
        match self {
            KernelFamily::Average => {
                if y.abs() < t {
                    1.0 / (2.0 * t)
                } else {
                    0.0
                }
            }
            KernelFamily::TruncatedHilbert => {
                if y.abs() > t {
                    1.0 / (PI * y)
                } else {
                    0.0
                }
            }
            KernelFamily::DoublyTruncatedHilbert { outer } => {
                if y.abs() > t && y.abs() < *outer {
                    1.0 / (PI * y)
                } else {
                    0.0
                }
            }
            KernelFamily::Poisson => t / (PI * (t * t + y * y)),
            KernelFamily::ConjugatePoisson => y / (PI * (t * t + y * y)),
            KernelFamily::PhiPlus => {
                if y >= t {
                    t * t / (PI * y * (y * y + t * t))
                } else {
                    0.0
                }
            }
            KernelFamily::PhiMinus => {
                if y <= -t {
                    t * t / (PI * y * (y * y + t * t))
                } else {
                    0.0
                }
            }
            KernelFamily::RhoPlus => {
                if (0.0..=t).contains(&y) {
                    y / (PI * (y * y + t * t))
                } else {
                    0.0
                }
            }
            KernelFamily::RhoMinus => {
                if (-t..=0.0).contains(&y) {
                    y / (PI * (y * y + t * t))
                } else {
                    0.0
                }
            }
        }
    }

    /// Points where K_t jumps or kinks (quadrature split points).
    pub fn kink_points(&self, t: f64) -> Vec<f64> {
        match self {
            KernelFamily::Average => vec![-t, t],
            KernelFamily::TruncatedHilbert => vec![-t, t],
            KernelFamily::DoublyTruncatedHilbert { outer } => vec![-outer, -t, t, *outer],
            KernelFamily::Poisson | KernelFamily::ConjugatePoisson => vec![],
            KernelFamily::PhiPlus => vec![t],
            KernelFamily::PhiMinus => vec![-t],
            KernelFamily::RhoPlus => vec![0.0, t],
            KernelFamily::RhoMinus => vec![-t, 0.0],
        }
    }

    /// Exact weight ∫_a^b K_t(y) dy from the elementary primitive.
    pub fn weight_integral(&self, t: f64, a: f64, b: f64) -> f64 {
        debug_assert!(a <= b);
        match self {
            KernelFamily::Average => {
                let overlap = (b.min(t) - a.max(-t)).max(0.0);
                overlap / (2.0 * t)
            }
            KernelFamily::TruncatedHilbert => {
                (log_segment(a, b, t, f64::INFINITY)
                    + log_segment(a, b, f64::NEG_INFINITY, -t))
                    / PI
            }
            KernelFamily::DoublyTruncatedHilbert { outer } => {
                (log_segment(a, b, t, *outer) + log_segment(a, b, -outer, -t)) / PI
            }
            KernelFamily::Poisson => ((b / t).atan() - (a / t).atan()) / PI,
            KernelFamily::ConjugatePoisson => {
                0.5 * ((t * t + b * b).ln() - (t * t + a * a).ln()) / PI
            }
            KernelFamily::PhiPlus => {
                let lo = a.max(t);
                let hi = b;
                if lo >= hi {
                    0.0
                } else {
                    (phi_primitive(hi / t) - phi_primitive(lo / t)) / PI
                }
            }
            KernelFamily::PhiMinus => {
                let lo = a;
                let hi = b.min(-t);
                if lo >= hi {
                    0.0
                } else {
                    // primitive ln|u| − ½ln(1+u²) is even up to sign bookkeeping;
                    // on u ≤ −1 the same stable form applies to |u|.
                    (phi_primitive(hi / t) - phi_primitive(lo / t)) / PI
                }
            }
            KernelFamily::RhoPlus => {
                let lo = a.max(0.0);
                let hi = b.min(t);
                if lo >= hi {
                    0.0
                } else {
                    let ub = hi / t;
                    let ua = lo / t;
                    0.5 * ((ub * ub).ln_1p() - (ua * ua).ln_1p()) / PI
                }
            }
            KernelFamily::RhoMinus => {
                let lo = a.max(-t);
                let hi = b.min(0.0);
                if lo >= hi {
                    0.0
                } else {
                    let ub = hi / t;
                    let ua = lo / t;
                    // same even primitive ½ln(1+u²); the difference comes out
                    // negative on the negative side, matching the odd kernel
                    0.5 * ((ub * ub).ln_1p() - (ua * ua).ln_1p()) / PI
                }
            }
        }
    }
}

/// Exact pointwise evaluation (K_t ∗ f)(x) from the weight integrals.
pub fn eval(kind: KernelFamily, f: &StepFunction, t: f64, x: f64) -> Result<Point> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("scale t = {t} must be positive")));
    }
    kind.validate()?;
    let mut acc = vec![0.0; f.space.dim];
    for (i, v) in f.values.iter().enumerate() {
        let a = x - f.breakpoints[i + 1];
        let b = x - f.breakpoints[i];
        let w = kind.weight_integral(t, a, b);
        if w != 0.0 {
            for (c, vc) in acc.iter_mut().zip(v.coords()) {
                *c += w * vc;
            }
        }
    }
    Point::new(f.space, acc)
}

/// Full Hilbert transform of a step function away from its breakpoints:
/// Hf(x) = (1/π) Σ_i v_i (ln|x − x_{i−1}| − ln|x − x_i|). At a breakpoint
/// the transform has a genuine logarithmic divergence and evaluation is a
/// hard error.
pub fn hilbert_full(f: &StepFunction, x: f64) -> Result<Point> {
    if f.breakpoints.contains(&x) {
        return Err(Error::Singularity {
            x,
            message: "full Hilbert transform diverges at a breakpoint".into(),
        });
    }
    let mut acc = vec![0.0; f.space.dim];
    for (i, v) in f.values.iter().enumerate() {
        let w = ((x - f.breakpoints[i]).abs().ln() - (x - f.breakpoints[i + 1]).abs().ln()) / PI;
        for (c, vc) in acc.iter_mut().zip(v.coords()) {
            *c += w * vc;
        }
    }
    Point::new(f.space, acc)
}

/// The four pieces that reassemble (H_ε − Q_ε)f(x). The reflected pieces
/// integrate against f(x + y) over positive y, which is the negative of the
/// convolution with the mirrored kernel; the signs here are chosen so that
/// `plus_outer − minus_outer − plus_inner + minus_inner` is identically
/// (H_ε − Q_ε)f(x).
#[derive(Debug, Clone)]
pub struct DecompositionTerms {
    pub plus_outer: Point,
    pub minus_outer: Point,
    pub plus_inner: Point,
    pub minus_inner: Point,
}

pub fn decomposition_terms(f: &StepFunction, eps: f64, x: f64) -> Result<DecompositionTerms> {
    Ok(DecompositionTerms {
        plus_outer: eval(KernelFamily::PhiPlus, f, eps, x)?,
        minus_outer: eval(KernelFamily::PhiMinus, f, eps, x)?.scale(-1.0),
        plus_inner: eval(KernelFamily::RhoPlus, f, eps, x)?,
        minus_inner: eval(KernelFamily::RhoMinus, f, eps, x)?.scale(-1.0),
    })
}

/// ‖(H_ε − Q_ε)f(x) − (A⁺ − A⁻ − G⁺ + G⁻)f(x)‖; analytically zero.
pub fn decomposition_residual(f: &StepFunction, eps: f64, x: f64) -> Result<f64> {
    let h = eval(KernelFamily::TruncatedHilbert, f, eps, x)?;
    let q = eval(KernelFamily::ConjugatePoisson, f, eps, x)?;
    let lhs = h.sub(&q)?;
    let t = decomposition_terms(f, eps, x)?;
    let rhs = t
        .plus_outer
        .sub(&t.minus_outer)?
        .sub(&t.plus_inner)?
        .add(&t.minus_inner)?;
    Ok(lhs.sub(&rhs)?.norm())
}

/// P_ε(Hf)(x) by adaptive quadrature against the closed-form Hilbert
/// transform (the independent route for the smoothing identity
/// Q_ε f = P_ε(Hf)).
pub fn poisson_of_hilbert_quad(f: &StepFunction, eps: f64, x: f64, tol: f64) -> Result<Point> {
    let (lo, hi) = f.support();
    let core_lo = lo.min(x) - 1.0;
    let core_hi = hi.max(x) + 1.0;
    let singular = f.breakpoints.clone();
    let scale = 1.0 + f.breakpoints.iter().fold(0.0f64, |m, b| m.max(b.abs()));
    let mut coords = vec![0.0; f.space.dim];
    for (c, out) in coords.iter_mut().enumerate() {
        let g = |u: f64| {
            // nudge off a breakpoint if a panel abscissa lands exactly on one
            let mut uu = u;
            if f.breakpoints.contains(&uu) {
                uu += 1e-13 * scale;
            }
            let h = match hilbert_full(f, uu) {
                Ok(p) => p.coords()[c],
                Err(_) => return f64::NAN,
            };
            KernelFamily::Poisson.kernel_at(eps, x - u) * h
        };
        *out = quad::integrate_line(g, core_lo, core_hi, &[x], &singular, tol)?;
    }
    Point::new(f.space, coords)
}

/// The scale-mixing weight 2y/(1+y²)² that averages dilated truncations into
/// the conjugate Poisson operator. Its total mass on (0, ∞) is exactly 1.
pub fn scale_mixing_weight(y: f64) -> f64 {
    let d = 1.0 + y * y;
    2.0 * y / (d * d)
}

/// Q_ε f(x) reconstructed as ∫₀^∞ H_{εy} f(x) · 2y/(1+y²)² dy by adaptive
/// quadrature in the dilation variable.
pub fn conjugate_from_dilated_hilbert_quad(
    f: &StepFunction,
    eps: f64,
    x: f64,
    tol: f64,
) -> Result<Point> {
    // kinks of y ↦ H_{εy}f(x) sit where εy crosses |x − breakpoint|
    let splits: Vec<f64> = f
        .breakpoints
        .iter()
        .map(|b| (x - b).abs() / eps)
        .filter(|y| y.is_finite() && *y > 0.0)
        .collect();
    let mut coords = vec![0.0; f.space.dim];
    for (c, out) in coords.iter_mut().enumerate() {
        let g = |y: f64| {
            if y <= 0.0 {
                return 0.0;
            }
            match eval(KernelFamily::TruncatedHilbert, f, eps * y, x) {
                Ok(p) => p.coords()[c] * scale_mixing_weight(y),
                Err(_) => f64::NAN,
            }
        };
        *out = quad::integrate_half_line(g, &splits, tol)?;
    }
    Point::new(f.space, coords)
}

/// Which kernel the dilation-family hypothesis check runs on. The reflected
/// (minus) kernels are checked through |Φ′(−x)| on the positive axis.
pub enum HypothesisTarget<'a> {
    PhiPlus,
    PhiMinus,
    RhoPlus,
    RhoMinus,
    Custom {
        /// Φ′ on the open support.
        derivative: &'a dyn Fn(f64) -> f64,
        support: HypothesisSupport,
        /// Φ itself, required on [1, ∞) supports to confirm Φ(x) → 0.
        tail_value: Option<&'a dyn Fn(f64) -> f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HypothesisSupport {
    /// Support [0, 1]: the hypothesis integral is ∫₀¹ x|Φ′(x)| dx.
    UnitInterval,
    /// Support [1, ∞): the hypothesis integral is ∫₁^∞ x|Φ′(x)| dx.
    TailInterval,
}

#[derive(Debug, Clone)]
pub struct HypothesisReport {
    /// Value of the hypothesis integral at the final cutoff.
    pub integral: f64,
    /// Whether the cutoff-doubling (or inner-halving) sequence stabilised
    /// within 1% — the divergence heuristic.
    pub stable: bool,
    /// |Φ| at the far cutoff when a decay-at-infinity check applies.
    pub tail_value: Option<f64>,
    pub passes: bool,
}

fn phi_pair_derivative_abs(x: f64) -> f64 {
    // |d/dy (1/(πy(y²+1)))| evaluated at |y| = x ≥ 1
    (3.0 * x * x + 1.0) / (PI * x * x * (x * x + 1.0) * (x * x + 1.0))
}

fn rho_pair_derivative_abs(x: f64) -> f64 {
    // |d/dy (y/(π(y²+1)))| at |y| = x ∈ [0, 1]; the derivative (1−y²)/(π(1+y²)²)
    // is nonnegative there
    (1.0 - x * x).abs() / (PI * (1.0 + x * x) * (1.0 + x * x))
}

/// Numerically evaluate the kernel hypothesis integral for the dilation
/// family bound, with a cutoff-stability divergence heuristic.
pub fn kernel_hypothesis_check(target: HypothesisTarget<'_>) -> Result<HypothesisReport> {
    type ScalarFn<'a> = Box<dyn Fn(f64) -> f64 + 'a>;
    let (deriv, support, tail_value): (ScalarFn<'_>, _, Option<ScalarFn<'_>>) =
        match target {
            HypothesisTarget::PhiPlus | HypothesisTarget::PhiMinus => (
                Box::new(phi_pair_derivative_abs),
                HypothesisSupport::TailInterval,
                Some(Box::new(|x: f64| 1.0 / (PI * x * (x * x + 1.0)))),
            ),
            HypothesisTarget::RhoPlus | HypothesisTarget::RhoMinus => (
                Box::new(rho_pair_derivative_abs),
                HypothesisSupport::UnitInterval,
                None,
            ),
            HypothesisTarget::Custom {
                derivative,
                support,
                tail_value,
            } => {
                let d: Box<dyn Fn(f64) -> f64> = Box::new(derivative);
                let t = tail_value
                    .map(|f| -> Box<dyn Fn(f64) -> f64> { Box::new(f) });
                (d, support, t)
            }
        };

    let integrand = |x: f64| x * deriv(x).abs();
    let mut total = 0.0;
    let mut stable = false;
    match support {
        HypothesisSupport::UnitInterval => {
            // segments [2^{−k−1}, 2^{−k}] toward 0
            let mut hi = 1.0f64;
            let mut calm = 0;
            for _ in 0..48 {
                let lo = 0.5 * hi;
                let seg = quad::adaptive_simpson(integrand, lo, hi, 1e-10)?;
                total += seg;
                calm = if seg.abs() <= 0.01 * total.abs().max(1e-300) {
                    calm + 1
                } else {
                    0
                };
                if calm >= 2 {
                    stable = true;
                    break;
                }
                hi = lo;
            }
        }
        HypothesisSupport::TailInterval => {
            let mut lo = 1.0f64;
            let mut calm = 0;
            for _ in 0..44 {
                let hi = 2.0 * lo;
                let seg = quad::adaptive_simpson(integrand, lo, hi, 1e-10)?;
                total += seg;
                calm = if seg.abs() <= 0.01 * total.abs().max(1e-300) {
                    calm + 1
                } else {
                    0
                };
                if calm >= 2 {
                    stable = true;
                    break;
                }
                lo = hi;
            }
        }
    }

    let tail = match (support, &tail_value) {
        (HypothesisSupport::TailInterval, Some(f)) => Some(f(2.0f64.powi(44)).abs()),
        _ => None,
    };
    let tail_ok = tail.map(|t| t <= 1e-9).unwrap_or(true);
    Ok(HypothesisReport {
        integral: total,
        stable,
        tail_value: tail,
        passes: stable && tail_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn average_half_overlap() {
        let f = StepFunction::indicator(0.0, 1.0).unwrap();
        let v = eval(KernelFamily::Average, &f, 1.0, 0.0).unwrap();
        assert!(close(v.coords()[0], 0.5, 1e-15));
    }

    #[test]
    fn poisson_symmetric_window() {
        let f = StepFunction::indicator(-1.0, 1.0).unwrap();
        let v = eval(KernelFamily::Poisson, &f, 1.0, 0.0).unwrap();
        assert!(close(v.coords()[0], 0.5, 1e-15));
    }

    #[test]
    fn truncated_hilbert_log_anchor() {
        let f = StepFunction::indicator(0.0, 1.0).unwrap();
        let v = eval(KernelFamily::TruncatedHilbert, &f, 0.5, 2.0).unwrap();
        assert!(close(v.coords()[0], 2f64.ln() / PI, 1e-15));
    }

    #[test]
    fn conjugate_poisson_odd_kernel_even_function() {
        let f = StepFunction::indicator(-1.0, 1.0).unwrap();
        for eps in [0.25, 1.0, 3.0] {
            let v = eval(KernelFamily::ConjugatePoisson, &f, eps, 0.0).unwrap();
            assert!(close(v.coords()[0], 0.0, 1e-15));
        }
    }

    #[test]
    fn hilbert_full_anchor_and_odd_symmetry() {
        let f = StepFunction::indicator(-1.0, 1.0).unwrap();
        let v = hilbert_full(&f, 2.0).unwrap();
        assert!(close(v.coords()[0], 3f64.ln() / PI, 1e-15));
        let w = hilbert_full(&f, -2.0).unwrap();
        assert!(close(w.coords()[0], -3f64.ln() / PI, 1e-15));
    }

    #[test]
    fn hilbert_full_breakpoint_is_singular() {
        let f = StepFunction::indicator(-1.0, 1.0).unwrap();
        assert!(matches!(
            hilbert_full(&f, 1.0),
            Err(Error::Singularity { .. })
        ));
    }

    #[test]
    fn lp_norm_anchors() {
        let unit = StepFunction::indicator(0.0, 1.0).unwrap();
        for p in [1.0, 2.0, 3.5] {
            assert!(close(lp_norm(&unit, p).unwrap(), 1.0, 1e-15));
        }
        let f = StepFunction::new(Space::l2(1), vec![0.0, 3.0], vec![vec![2.0]]).unwrap();
        assert!(close(lp_norm(&f, 2.0).unwrap(), 2.0 * 3f64.sqrt(), 1e-14));
        let g = StepFunction::new(
            Space::linf(2),
            vec![0.0, 1.0, 2.0],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        )
        .unwrap();
        assert!(close(lp_norm(&g, 1.0).unwrap(), 2.0, 1e-15));
        assert!(matches!(lp_norm(&g, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn nonpositive_scale_is_domain_error() {
        let f = StepFunction::indicator(0.0, 1.0).unwrap();
        assert!(matches!(
            eval(KernelFamily::Poisson, &f, 0.0, 0.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            eval(KernelFamily::Average, &f, -1.0, 0.0),
            Err(Error::Domain(_))
        ));
    }

    fn random_step(rng: &mut ChaCha8Rng, space: Space, max_intervals: usize) -> StepFunction {
        let k = rng.gen_range(1..=max_intervals);
        let mut bps: Vec<f64> = (0..=k).map(|_| rng.gen_range(-3.0..3.0)).collect();
        bps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for i in 1..bps.len() {
            if bps[i] - bps[i - 1] < 1e-3 {
                bps[i] = bps[i - 1] + 1e-3 + rng.gen_range(0.0..0.1);
            }
        }
        let values = (0..k)
            .map(|_| (0..space.dim).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        StepFunction::new(space, bps, values).unwrap()
    }

    #[test]
    fn closed_forms_match_quadrature_smoke() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let families = [
            KernelFamily::Average,
            KernelFamily::Poisson,
            KernelFamily::ConjugatePoisson,
            KernelFamily::TruncatedHilbert,
            KernelFamily::DoublyTruncatedHilbert { outer: 4.0 },
            KernelFamily::PhiPlus,
            KernelFamily::PhiMinus,
            KernelFamily::RhoPlus,
            KernelFamily::RhoMinus,
        ];
        for fam in families {
            for _ in 0..8 {
                let f = random_step(&mut rng, Space::l2(2), 4);
                let t = rng.gen_range(0.05..3.0);
                let x = rng.gen_range(-4.0..4.0);
                let exact = eval(fam, &f, t, x).unwrap();
                let oracle = quad::quad_convolve_split(
                    |y| fam.kernel_at(t, y),
                    &fam.kink_points(t),
                    &f,
                    x,
                    1e-11,
                )
                .unwrap();
                let diff = exact.sub(&oracle).unwrap().norm();
                assert!(diff <= 1e-8, "{} residual {diff}", fam.label());
            }
        }
    }

    #[test]
    fn mass_conservation_for_averages() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..20 {
            let f = random_step(&mut rng, Space::l1(2), 5);
            let t = rng.gen_range(0.1..4.0);
            // A_t f is piecewise linear with nodes at breakpoints ± t:
            // trapezoid integration over the node set is exact.
            let mut nodes: Vec<f64> = f
                .breakpoints()
                .iter()
                .flat_map(|b| [b - t, b + t])
                .collect();
            nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut mass = [0.0; 2];
            for w in nodes.windows(2) {
                let va = eval(KernelFamily::Average, &f, t, w[0]).unwrap();
                let vb = eval(KernelFamily::Average, &f, t, w[1]).unwrap();
                for (m, (ca, cb)) in mass
                    .iter_mut()
                    .zip(va.coords().iter().zip(vb.coords()))
                {
                    *m += 0.5 * (ca + cb) * (w[1] - w[0]);
                }
            }
            let expect = f.total_mass();
            for (m, e) in mass.iter().zip(expect.coords()) {
                assert!((m - e).abs() <= 1e-12 * e.abs().max(1.0), "{m} vs {e}");
            }
        }
    }

    #[test]
    fn dilation_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let f = random_step(&mut rng, Space::l2(1), 4);
            let lambda = rng.gen_range(0.3..3.0);
            let fl = f.dilate_argument(lambda).unwrap();
            let t = rng.gen_range(0.1..2.0);
            let x = rng.gen_range(-3.0..3.0);
            for fam in [KernelFamily::Average, KernelFamily::TruncatedHilbert] {
                let lhs = eval(fam, &fl, t, x).unwrap();
                let rhs = eval(fam, &f, lambda * t, lambda * x).unwrap();
                let d = lhs.sub(&rhs).unwrap().norm();
                assert!(
                    d <= 1e-12 * rhs.norm().max(1.0),
                    "{} dilation residual {d}",
                    fam.label()
                );
            }
        }
    }

    #[test]
    fn decomposition_residual_vanishes() {
        let f = StepFunction::indicator(0.0, 1.0).unwrap();
        assert!(decomposition_residual(&f, 0.3, 0.7).unwrap() <= 1e-10);

        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let g = random_step(&mut rng, Space::l2(2), 5);
        assert!(decomposition_residual(&g, 1.5, -2.0).unwrap() <= 1e-10);

        // far outside the support the inner pieces vanish identically and
        // the outer pieces cancel the Hilbert tail to rounding
        let t = decomposition_terms(&f, 10.0, 500.0).unwrap();
        assert_eq!(t.plus_inner.norm(), 0.0);
        assert_eq!(t.minus_inner.norm(), 0.0);
        assert!(decomposition_residual(&f, 10.0, 500.0).unwrap() <= 1e-14);
    }

    #[test]
    fn smoothing_identity_quadrature_route() {
        let f = StepFunction::indicator(-1.0, 1.0).unwrap();
        let eps = 0.7;
        let x = 0.4;
        let closed = eval(KernelFamily::ConjugatePoisson, &f, eps, x).unwrap();
        let quadr = poisson_of_hilbert_quad(&f, eps, x, 1e-8).unwrap();
        let d = closed.sub(&quadr).unwrap().norm();
        assert!(d <= 1e-6, "residual {d}");
    }

    #[test]
    fn conjugate_reconstruction_from_dilated_truncations() {
        let f = StepFunction::indicator(-1.0, 1.0).unwrap();
        let eps = 0.9;
        let x = 0.3;
        let closed = eval(KernelFamily::ConjugatePoisson, &f, eps, x).unwrap();
        let mixed = conjugate_from_dilated_hilbert_quad(&f, eps, x, 1e-8).unwrap();
        let d = closed.sub(&mixed).unwrap().norm();
        assert!(d <= 1e-6, "residual {d}");
    }

    #[test]
    fn mixing_weight_has_unit_mass() {
        let mass = quad::integrate_half_line(scale_mixing_weight, &[], 1e-12).unwrap();
        assert!((mass - 1.0).abs() <= 1e-10, "mass {mass}");
    }

    #[test]
    fn hypothesis_checks() {
        let rho = kernel_hypothesis_check(HypothesisTarget::RhoPlus).unwrap();
        assert!(rho.passes && rho.integral.is_finite());
        let rho_m = kernel_hypothesis_check(HypothesisTarget::RhoMinus).unwrap();
        assert!(rho_m.passes);

        let phi = kernel_hypothesis_check(HypothesisTarget::PhiPlus).unwrap();
        assert!(phi.passes);
        assert!(phi.tail_value.unwrap() <= 1e-9);

        // Φ(x) = 1/x on [1, ∞): ∫ x·x⁻² diverges
        let deriv = |x: f64| -1.0 / (x * x);
        let tail = |x: f64| 1.0 / x;
        let bad = kernel_hypothesis_check(HypothesisTarget::Custom {
            derivative: &deriv,
            support: HypothesisSupport::TailInterval,
            tail_value: Some(&tail),
        })
        .unwrap();
        assert!(!bad.passes);
        assert!(!bad.stable);
    }

    #[test]
    fn step_function_serde_shape() {
        let f = StepFunction::new(
            Space::l2(2),
            vec![0.0, 1.0, 2.0],
            vec![vec![1.0, 0.0], vec![0.0, -1.0]],
        )
        .unwrap();
        let spec = f.to_spec();
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(
            json,
            r#"{"breakpoints":[0.0,1.0,2.0],"values":[[1.0,0.0],[0.0,-1.0]]}"#
        );
        let back: StepFunctionSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }
}
