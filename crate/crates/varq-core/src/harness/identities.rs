//! The identity suite: every closed-form identity the operator layer rests
//! on, checked at seeded random (f, ε, x) triples against independent
//! quadrature routes, plus the kernel hypothesis checks and a pointwise
//! variation comparison. A deliberately corrupted kernel must fail.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::harness::{tol, ReportRow};
use crate::operators::quad::{integrate_half_line, integrate_line};
use crate::operators::{
    conjugate_from_dilated_hilbert_quad, decomposition_residual, eval, hilbert_full,
    kernel_hypothesis_check, lp_norm, scale_mixing_weight, HypothesisSupport, HypothesisTarget,
    KernelFamily, ScaleGrid, StepFunction,
};
use crate::spaces::Space;
use crate::variation::{vq_dp, SamplePath};

/// Deliberate defects for negative controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Corruption {
    /// The Poisson kernel used on the quadrature side of the smoothing
    /// identity gets its scale doubled on the positive half-line.
    PoissonLopsided,
}

#[derive(Debug, Clone)]
pub struct IdentitySuite {
    pub rows: Vec<ReportRow>,
    pub all_pass: bool,
}

fn random_step(rng: &mut ChaCha8Rng, space: Space, max_intervals: usize) -> StepFunction {
    let k = rng.gen_range(1..=max_intervals);
    let mut bps: Vec<f64> = (0..=k).map(|_| rng.gen_range(-3.0..3.0)).collect();
    bps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for i in 1..bps.len() {
        if bps[i] - bps[i - 1] < 1e-2 {
            bps[i] = bps[i - 1] + 1e-2;
        }
    }
    let values = (0..k)
        .map(|_| (0..space.dim).map(|_| rng.gen_range(-2.0..2.0)).collect())
        .collect();
    StepFunction::new(space, bps, values).unwrap()
}

fn sample_point_off_breakpoints(rng: &mut ChaCha8Rng, f: &StepFunction) -> f64 {
    loop {
        let x = rng.gen_range(-4.0..4.0);
        if f.breakpoints().iter().all(|b| (x - b).abs() > 1e-3) {
            return x;
        }
    }
}

fn row(name: &str, worst: f64, tolerance: f64, cases: usize, seed: u64, pass: bool) -> ReportRow {
    ReportRow {
        experiment_id: format!("identity[{name}]"),
        kind: "identities".into(),
        space: "l2".into(),
        dim: 2,
        p: f64::NAN,
        q: f64::NAN,
        family: name.into(),
        estimate: worst,
        diagnostic: format!("tol={tolerance:e};cases={cases};pass={pass}"),
        seed,
    }
}

/// Run the suite with an optional deliberate corruption.
pub fn identity_suite_with(seed: u64, corruption: Option<Corruption>) -> Result<IdentitySuite> {
    let cases = 100usize;
    let space = Space::l2(2);
    let mut rows = Vec::new();

    // smoothing identity: the conjugate Poisson operator equals the Poisson
    // smoothing of the full Hilbert transform
    {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for _ in 0..cases {
            let f = random_step(&mut rng, space, 4);
            let eps = rng.gen_range(0.2..2.5);
            let x = sample_point_off_breakpoints(&mut rng, &f);
            let closed = eval(KernelFamily::ConjugatePoisson, &f, eps, x)?;
            let quadr = smoothed_hilbert_quad(&f, eps, x, 1e-8, corruption)?;
            worst = worst.max(closed.sub(&quadr)?.norm());
        }
        let pass = worst <= tol::SMOOTHING_IDENTITY;
        rows.push(row(
            "conjugate-equals-smoothed-hilbert",
            worst,
            tol::SMOOTHING_IDENTITY,
            cases,
            seed,
            pass,
        ));
    }

    // kernel decomposition residual (closed forms on both sides)
    {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        let mut worst = 0.0f64;
        for _ in 0..cases {
            let f = random_step(&mut rng, space, 5);
            let eps = rng.gen_range(0.1..3.0);
            let x = rng.gen_range(-4.0..4.0);
            worst = worst.max(decomposition_residual(&f, eps, x)?);
        }
        let pass = worst <= tol::DECOMPOSITION_RESIDUAL;
        rows.push(row(
            "hilbert-minus-conjugate-decomposition",
            worst,
            tol::DECOMPOSITION_RESIDUAL,
            cases,
            seed,
            pass,
        ));
    }

    // conjugate Poisson as a dilation mixture of truncated transforms,
    // plus the exact unit mass of the mixing weight
    {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
        let mut worst = 0.0f64;
        for _ in 0..cases {
            let f = random_step(&mut rng, space, 4);
            let eps = rng.gen_range(0.2..2.0);
            let x = sample_point_off_breakpoints(&mut rng, &f);
            let closed = eval(KernelFamily::ConjugatePoisson, &f, eps, x)?;
            let mixed = conjugate_from_dilated_hilbert_quad(&f, eps, x, 1e-8)?;
            worst = worst.max(closed.sub(&mixed)?.norm());
        }
        let pass = worst <= tol::SCALE_MIX_IDENTITY;
        rows.push(row(
            "conjugate-from-dilated-truncations",
            worst,
            tol::SCALE_MIX_IDENTITY,
            cases,
            seed,
            pass,
        ));

        let mass = integrate_half_line(scale_mixing_weight, &[], 1e-12)?;
        let mass_err = (mass - 1.0).abs();
        let pass = mass_err <= tol::WEIGHT_MASS;
        rows.push(row(
            "mixing-weight-unit-mass",
            mass_err,
            tol::WEIGHT_MASS,
            1,
            seed,
            pass,
        ));
    }

    // dilation-family hypothesis checks: the four kernel pieces pass, the
    // harmonic tail fails
    {
        let rho_p = kernel_hypothesis_check(HypothesisTarget::RhoPlus)?;
        let rho_m = kernel_hypothesis_check(HypothesisTarget::RhoMinus)?;
        let phi_p = kernel_hypothesis_check(HypothesisTarget::PhiPlus)?;
        let phi_m = kernel_hypothesis_check(HypothesisTarget::PhiMinus)?;
        let deriv = |x: f64| -1.0 / (x * x);
        let tail = |x: f64| 1.0 / x;
        let harmonic = kernel_hypothesis_check(HypothesisTarget::Custom {
            derivative: &deriv,
            support: HypothesisSupport::TailInterval,
            tail_value: Some(&tail),
        })?;
        let pass = rho_p.passes
            && rho_m.passes
            && phi_p.passes
            && phi_m.passes
            && !harmonic.passes;
        rows.push(row(
            "kernel-hypothesis-integrals",
            phi_p.integral,
            f64::INFINITY,
            5,
            seed,
            pass,
        ));
    }

    // pointwise variation comparison: the conjugate path's V_q on a scale
    // grid is dominated by the weighted mixture of truncated-path V_q's
    {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(3));
        let grid = ScaleGrid::geometric(0.125, 8.0, 9)?;
        let q = 2.0;
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..cases {
            let f = random_step(&mut rng, space, 3);
            let x = sample_point_off_breakpoints(&mut rng, &f);
            let q_path: Vec<_> = grid
                .scales()
                .iter()
                .map(|eps| eval(KernelFamily::ConjugatePoisson, &f, *eps, x))
                .collect::<Result<Vec<_>>>()?;
            let lhs = vq_dp(&SamplePath::new(grid.scales().to_vec(), q_path)?, q)?.value;
            let splits: Vec<f64> = f
                .breakpoints()
                .iter()
                .flat_map(|b| grid.scales().iter().map(move |t| (x - b).abs() / t))
                .filter(|y| y.is_finite() && *y > 0.0)
                .collect();
            let integrand = |y: f64| -> f64 {
                if y <= 0.0 {
                    return 0.0;
                }
                let path: Vec<_> = grid
                    .scales()
                    .iter()
                    .map(|eps| eval(KernelFamily::TruncatedHilbert, &f, *eps * y, x).unwrap())
                    .collect();
                let sp = SamplePath::new(grid.scales().to_vec(), path).unwrap();
                vq_dp(&sp, q).unwrap().value * scale_mixing_weight(y)
            };
            let rhs = integrate_half_line(integrand, &splits, 1e-6)?;
            worst = worst.max(lhs - rhs);
        }
        let pass = worst <= tol::VARIATION_COMPARISON_SLACK;
        rows.push(row(
            "conjugate-variation-dominated-by-mixture",
            worst,
            tol::VARIATION_COMPARISON_SLACK,
            cases,
            seed,
            pass,
        ));
    }

    let all_pass = rows
        .iter()
        .all(|r| r.diagnostic.ends_with("pass=true"));
    Ok(IdentitySuite { rows, all_pass })
}

/// Run the suite honestly.
pub fn identity_suite(seed: u64) -> Result<IdentitySuite> {
    identity_suite_with(seed, None)
}

/// P_ε(Hf)(x) by quadrature, with the corruption hook on the kernel side.
fn smoothed_hilbert_quad(
    f: &StepFunction,
    eps: f64,
    x: f64,
    tolerance: f64,
    corruption: Option<Corruption>,
) -> Result<crate::spaces::Point> {
    let (lo, hi) = f.support();
    let core_lo = lo.min(x) - 1.0;
    let core_hi = hi.max(x) + 1.0;
    let singular = f.breakpoints().to_vec();
    let scale = 1.0 + f.breakpoints().iter().fold(0.0f64, |m, b| m.max(b.abs()));
    let kernel = move |y: f64| -> f64 {
        let e = match corruption {
            Some(Corruption::PoissonLopsided) if y > 0.0 => 2.0 * eps,
            _ => eps,
        };
        e / (std::f64::consts::PI * (e * e + y * y))
    };
    let mut coords = vec![0.0; f.space().dim];
    for (c, out) in coords.iter_mut().enumerate() {
        let g = |u: f64| {
            let mut uu = u;
            if f.breakpoints().contains(&uu) {
                uu += 1e-13 * scale;
            }
            let h = match hilbert_full(f, uu) {
                Ok(p) => p.coords()[c],
                Err(_) => return f64::NAN,
            };
            kernel(x - u) * h
        };
        *out = integrate_line(g, core_lo, core_hi, &[x], &singular, tolerance)?;
    }
    crate::spaces::Point::new(f.space(), coords)
}

/// Residuals of the suite on the zero function are identically zero.
pub fn zero_function_residuals() -> Result<Vec<f64>> {
    let f = StepFunction::new(Space::l2(2), vec![0.0, 1.0], vec![vec![0.0, 0.0]])?;
    let mut out = Vec::new();
    let closed = eval(KernelFamily::ConjugatePoisson, &f, 1.0, 0.5)?;
    let quadr = smoothed_hilbert_quad(&f, 1.0, 0.5, 1e-9, None)?;
    out.push(closed.sub(&quadr)?.norm());
    out.push(decomposition_residual(&f, 0.7, 2.0)?);
    let mixed = conjugate_from_dilated_hilbert_quad(&f, 1.0, 0.5, 1e-9)?;
    out.push(closed.sub(&mixed)?.norm());
    out.push(lp_norm(&f, 2.0)?);
    Ok(out)
}
