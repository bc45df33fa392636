//! Trigonometric-polynomial machinery: square-wave Fejér means, Walsh
//! expansion of predictable tables, the lifted martingale blocks, and the
//! collapsed single-variable polynomials carrying the Poisson flow.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::martingale::WalshMartingale;
use crate::spaces::{Point, Space};
use crate::transference::CPoint;
use crate::variation::{pow_q, root_q};

/// Hard cap on the number of lifted blocks (multi-index blowup guard).
pub const MAX_BLOCKS: usize = 4;

/// A scalar trigonometric polynomial Σ_j c_j e^{2πijθ} with complex
/// coefficients, keyed by frequency.
#[derive(Debug, Clone)]
pub struct ScalarTrigPoly {
    coeffs: BTreeMap<i64, (f64, f64)>,
}

impl ScalarTrigPoly {
    pub fn coeff(&self, j: i64) -> (f64, f64) {
        self.coeffs.get(&j).copied().unwrap_or((0.0, 0.0))
    }

    pub fn coeffs(&self) -> &BTreeMap<i64, (f64, f64)> {
        &self.coeffs
    }

    pub fn eval(&self, theta: f64) -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        for (j, (cr, ci)) in &self.coeffs {
            let phase = 2.0 * PI * (*j as f64) * theta;
            let (s, c) = phase.sin_cos();
            re += cr * c - ci * s;
            im += cr * s + ci * c;
        }
        (re, im)
    }

    /// Real part of the evaluation (the square-wave means are real-valued).
    pub fn eval_real(&self, theta: f64) -> f64 {
        self.eval(theta).0
    }

    /// Discrete L^q([0,1]) distance to sgn(cos 2πθ) on a midpoint grid.
    pub fn lq_error_vs_squarewave(&self, q: f64, grid: usize) -> f64 {
        let mut acc = 0.0;
        for g in 0..grid {
            let theta = (g as f64 + 0.5) / grid as f64;
            let target = (2.0 * PI * theta).cos().signum();
            let d = (self.eval_real(theta) - target).abs();
            acc += pow_q(d, q);
        }
        root_q(acc / grid as f64, q)
    }
}

/// Fejér mean of degree M of the square wave sgn(cos 2πθ). The square wave
/// has exponential coefficients (2/π)(−1)^{(|j|−1)/2}/|j| at odd j and zero
/// elsewhere, so the mean-zero structure is preserved exactly; Cesàro
/// damping multiplies by 1 − |j|/(M+1).
pub fn fejer_squarewave(degree: usize) -> Result<ScalarTrigPoly> {
    if degree == 0 {
        return Err(Error::Domain("Fejér degree must be ≥ 1".into()));
    }
    let mut coeffs = BTreeMap::new();
    let m1 = (degree + 1) as f64;
    let mut j = 1i64;
    while j as usize <= degree {
        let sign = if (j - 1) % 4 == 0 { 1.0 } else { -1.0 };
        let c = (2.0 / PI) * sign / j as f64 * (1.0 - j as f64 / m1);
        coeffs.insert(j, (c, 0.0));
        coeffs.insert(-j, (c, 0.0));
        j += 2;
    }
    Ok(ScalarTrigPoly { coeffs })
}

/// Exact Walsh expansion of a predictable table φ on {−1,1}^{k−1}:
/// coefficients c_A with φ(s) = Σ_A c_A Π_{i∈A} s_i, A ranging over subsets
/// of {1, …, k−1} encoded as bitmasks (bit i−1 ↔ coordinate i).
pub fn walsh_expand(table: &[Point]) -> Result<BTreeMap<u32, Point>> {
    let n = table.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::Domain(format!(
            "table size {n} is not a power of two"
        )));
    }
    let vars = n.trailing_zeros() as usize;
    let space = table[0].space();
    let mut out = BTreeMap::new();
    for mask in 0u32..(1 << vars) {
        let mut acc = vec![0.0; space.dim];
        for (idx, value) in table.iter().enumerate() {
            // coordinate i (1-based) is negative in atom idx when bit
            // vars−i of idx is set; A contains i when bit i−1 of mask is set
            let mut sign = 1.0;
            for i in 1..=vars {
                if mask & (1 << (i - 1)) != 0 && idx & (1 << (vars - i)) != 0 {
                    sign = -sign;
                }
            }
            for (a, c) in acc.iter_mut().zip(value.coords()) {
                *a += sign * c;
            }
        }
        let inv = 1.0 / n as f64;
        out.insert(mask, Point::new(space, acc.iter().map(|a| a * inv).collect())?);
    }
    Ok(out)
}

/// Block k of the lifted martingale: a trigonometric polynomial in
/// (θ_1, …, θ_k) with vector coefficients keyed by (m_1, …, m_{k−1}, j),
/// j ≠ 0 (the last variable always enters through the mean-zero square-wave
/// factor).
#[derive(Debug, Clone)]
pub struct MultiTrigPoly {
    k: usize,
    space: Space,
    bounds: Vec<i32>,
    coeffs: BTreeMap<Vec<i32>, CPoint>,
}

impl MultiTrigPoly {
    pub fn new(
        k: usize,
        space: Space,
        bounds: Vec<i32>,
        coeffs: BTreeMap<Vec<i32>, CPoint>,
    ) -> Result<MultiTrigPoly> {
        if k == 0 || bounds.len() != k {
            return Err(Error::Domain(format!(
                "block index {k} needs {k} bounds, got {}",
                bounds.len()
            )));
        }
        for (key, c) in &coeffs {
            if key.len() != k {
                return Err(Error::Domain(format!(
                    "multi-index {key:?} has length {}, expected {k}",
                    key.len()
                )));
            }
            if key[k - 1] == 0 {
                return Err(Error::Domain(
                    "last multi-index component must be nonzero (mean-zero structure)".into(),
                ));
            }
            for (i, m) in key.iter().enumerate() {
                if m.abs() > bounds[i] {
                    return Err(Error::Domain(format!(
                        "multi-index {key:?} exceeds bound {} at position {i}",
                        bounds[i]
                    )));
                }
            }
            if c.space() != space {
                return Err(Error::SpaceMismatch {
                    left: space,
                    right: c.space(),
                });
            }
        }
        Ok(MultiTrigPoly {
            k,
            space,
            bounds,
            coeffs,
        })
    }

    pub fn block_index(&self) -> usize {
        self.k
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn bounds(&self) -> &[i32] {
        &self.bounds
    }

    pub fn coeffs(&self) -> &BTreeMap<Vec<i32>, CPoint> {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn scale(&self, lambda: f64) -> MultiTrigPoly {
        MultiTrigPoly {
            k: self.k,
            space: self.space,
            bounds: self.bounds.clone(),
            coeffs: self
                .coeffs
                .iter()
                .map(|(k, c)| (k.clone(), c.scale_real(lambda)))
                .collect(),
        }
    }

    /// Collapsed circle frequency of one multi-index under n:
    /// m₁n₁ + … + m_{k−1}n_{k−1} + j·n_k.
    pub fn frequency(&self, key: &[i32], n: &[i64]) -> i64 {
        debug_assert!(n.len() >= self.k);
        let mut nu = 0i64;
        for (i, m) in key.iter().enumerate() {
            nu += (*m as i64) * n[i];
        }
        nu
    }

    /// Largest |m₁n₁ + … + m_{k−1}n_{k−1}| over the support (the prefix
    /// radius that the next lacunary frequency must clear).
    pub fn prefix_radius(&self, n: &[i64]) -> i64 {
        self.coeffs
            .keys()
            .map(|key| {
                let mut nu = 0i64;
                for (i, m) in key[..self.k - 1].iter().enumerate() {
                    nu += (*m as i64) * n[i];
                }
                nu.abs()
            })
            .max()
            .unwrap_or(0)
    }

    pub fn min_abs_frequency(&self, n: &[i64]) -> i64 {
        self.coeffs
            .keys()
            .map(|key| self.frequency(key, n).abs())
            .min()
            .unwrap_or(0)
    }

    /// Σ over multi-indices of the coefficient modulus times `weight(|ν|)`;
    /// by the triangle inequality this dominates sup_θ,θ⃗ of the weighted
    /// evaluation uniformly in every angle.
    pub fn weighted_modulus_sum(&self, n: &[i64], weight: impl Fn(i64) -> f64) -> f64 {
        self.coeffs
            .iter()
            .map(|(key, c)| c.modulus() * weight(self.frequency(key, n).abs()))
            .sum()
    }

    /// Collapse onto the circle variable for a fixed frequency vector and
    /// fixed angles θ⃗: each multi-index contributes its coefficient rotated
    /// by e^{2πi(m₁θ₁ + … + jθ_k)} at circle frequency ν.
    pub fn diagonalize(&self, n: &[i64], thetas: &[f64]) -> Result<DiagonalPoly> {
        if n.len() < self.k || thetas.len() < self.k {
            return Err(Error::Domain(format!(
                "block {} needs {} frequencies and angles",
                self.k, self.k
            )));
        }
        let mut coeffs: BTreeMap<i64, CPoint> = BTreeMap::new();
        for (key, c) in &self.coeffs {
            let nu = self.frequency(key, n);
            let mut phase = 0.0f64;
            for (i, m) in key.iter().enumerate() {
                phase += (*m as f64) * thetas[i];
            }
            let (s, co) = (2.0 * PI * phase).sin_cos();
            let rotated = c.rotate(co, s);
            match coeffs.get_mut(&nu) {
                Some(existing) => *existing = existing.add(&rotated)?,
                None => {
                    coeffs.insert(nu, rotated);
                }
            }
        }
        Ok(DiagonalPoly {
            space: self.space,
            elapsed: 0.0,
            coeffs,
        })
    }
}

/// Lift a Walsh martingale into trigonometric blocks: the table of level k
/// expands in the Walsh basis, every sign factor is replaced by the Fejér
/// square-wave mean in its own angle, and the predictable part is
/// multiplied by the same mean in θ_k. Guarded at m ≤ 4.
pub fn build_blocks(mart: &WalshMartingale, fejer_degree: usize) -> Result<Vec<MultiTrigPoly>> {
    let m = mart.levels();
    if m > MAX_BLOCKS {
        return Err(Error::Size(format!(
            "m = {m} exceeds the lift guard {MAX_BLOCKS}"
        )));
    }
    let sigma = fejer_squarewave(fejer_degree)?;
    let sigma_support: Vec<(i64, f64)> = sigma
        .coeffs()
        .iter()
        .map(|(j, (re, _))| (*j, *re))
        .collect();
    let space = mart.space();
    let mut blocks = Vec::with_capacity(m);
    for k in 1..=m {
        let walsh = walsh_expand(&mart.tables()[k - 1])?;
        let vars = k - 1;
        let mut coeffs: BTreeMap<Vec<i32>, CPoint> = BTreeMap::new();
        for (mask, c_a) in &walsh {
            if c_a.norm() == 0.0 {
                continue;
            }
            let members: Vec<usize> = (0..vars).filter(|i| mask & (1 << i) != 0).collect();
            // cartesian product of square-wave frequencies over the members
            let mut idx = vec![0usize; members.len()];
            loop {
                let mut key = vec![0i32; k];
                let mut factor = 1.0f64;
                for (slot, &pos) in members.iter().enumerate() {
                    let (j, w) = sigma_support[idx[slot]];
                    key[pos] = j as i32;
                    factor *= w;
                }
                for &(j, w) in &sigma_support {
                    let mut key_j = key.clone();
                    key_j[k - 1] = j as i32;
                    let contrib = c_a.scale(factor * w);
                    match coeffs.get_mut(&key_j) {
                        Some(existing) => {
                            *existing = existing.add(&CPoint::from_real(contrib))?
                        }
                        None => {
                            coeffs.insert(key_j, CPoint::from_real(contrib));
                        }
                    }
                }
                // advance the product index
                let mut carry = 0;
                loop {
                    if carry == idx.len() {
                        break;
                    }
                    idx[carry] += 1;
                    if idx[carry] < sigma_support.len() {
                        break;
                    }
                    idx[carry] = 0;
                    carry += 1;
                }
                if idx.iter().all(|i| *i == 0) || members.is_empty() {
                    break;
                }
            }
        }
        let bounds = vec![fejer_degree as i32; k];
        blocks.push(MultiTrigPoly::new(k, space, bounds, coeffs)?);
    }
    Ok(blocks)
}

/// Measured L^q distance between each lifted block and the sign-function it
/// approximates, on a per-axis midpoint tensor grid. This is the
/// operational lift error reported next to every downstream constant.
pub fn lift_error(
    mart: &WalshMartingale,
    fejer_degree: usize,
    q: f64,
    grid_per_axis: usize,
) -> Result<Vec<f64>> {
    let m = mart.levels();
    if m > MAX_BLOCKS {
        return Err(Error::Size(format!(
            "m = {m} exceeds the lift guard {MAX_BLOCKS}"
        )));
    }
    let sigma = fejer_squarewave(fejer_degree)?;
    let g = grid_per_axis;
    let sigma_vals: Vec<f64> = (0..g)
        .map(|i| sigma.eval_real((i as f64 + 0.5) / g as f64))
        .collect();
    let sign_vals: Vec<f64> = (0..g)
        .map(|i| (2.0 * PI * (i as f64 + 0.5) / g as f64).cos().signum())
        .collect();
    let mut errors = Vec::with_capacity(m);
    for k in 1..=m {
        let walsh = walsh_expand(&mart.tables()[k - 1])?;
        let table = &mart.tables()[k - 1];
        let vars = k - 1;
        let mut acc = 0.0;
        let cells = g.pow(k as u32);
        let mut axis_idx = vec![0usize; k];
        for cell in 0..cells {
            let mut rest = cell;
            for a in axis_idx.iter_mut() {
                *a = rest % g;
                rest /= g;
            }
            // lifted block: Σ_A c_A Π_{i∈A} σ(θ_i) · σ(θ_k)
            let mut lifted = vec![0.0; mart.space().dim];
            for (mask, c_a) in &walsh {
                let mut factor = 1.0;
                for i in 0..vars {
                    if mask & (1 << i) != 0 {
                        factor *= sigma_vals[axis_idx[i]];
                    }
                }
                factor *= sigma_vals[axis_idx[k - 1]];
                for (l, c) in lifted.iter_mut().zip(c_a.coords()) {
                    *l += factor * c;
                }
            }
            // exact increment: φ_k(sgn…)·sgn(cos 2πθ_k)
            let mut t_idx = 0usize;
            for i in 0..vars {
                if sign_vals[axis_idx[i]] < 0.0 {
                    t_idx |= 1 << (vars - 1 - i);
                }
            }
            let target = table[t_idx].scale(sign_vals[axis_idx[k - 1]]);
            let mut dsq = vec![0.0; mart.space().dim];
            for ((d, l), t) in dsq.iter_mut().zip(&lifted).zip(target.coords()) {
                *d = l - t;
            }
            let dist = mart.space().norm_of(&dsq);
            acc += pow_q(dist, q);
        }
        errors.push(root_q(acc / cells as f64, q));
    }
    Ok(errors)
}

/// A trigonometric polynomial in the single circle variable, with the
/// Poisson flow carried lazily as accumulated time so that composing flows
/// is bit-exact: the materialized coefficient at frequency ν is
/// c_ν · e^{−|ν|·elapsed}, with e^{−0·∞} read as 1 at ν = 0.
#[derive(Debug, Clone)]
pub struct DiagonalPoly {
    space: Space,
    elapsed: f64,
    coeffs: BTreeMap<i64, CPoint>,
}

fn decay(nu: i64, elapsed: f64) -> f64 {
    if nu == 0 {
        1.0
    } else if elapsed.is_infinite() {
        0.0
    } else {
        (-elapsed * nu.abs() as f64).exp()
    }
}

impl DiagonalPoly {
    pub fn new(space: Space, coeffs: BTreeMap<i64, CPoint>) -> Result<DiagonalPoly> {
        for c in coeffs.values() {
            if c.space() != space {
                return Err(Error::SpaceMismatch {
                    left: space,
                    right: c.space(),
                });
            }
        }
        Ok(DiagonalPoly {
            space,
            elapsed: 0.0,
            coeffs,
        })
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn elapsed(&self) -> f64 {
        self.elapsed
    }

    pub fn support(&self) -> impl Iterator<Item = i64> + '_ {
        self.coeffs.keys().copied()
    }

    pub fn max_abs_frequency(&self) -> i64 {
        self.coeffs.keys().map(|nu| nu.abs()).max().unwrap_or(0)
    }

    /// Coefficient at ν with the accumulated flow applied.
    pub fn coeff(&self, nu: i64) -> CPoint {
        match self.coeffs.get(&nu) {
            Some(c) => c.scale_real(decay(nu, self.elapsed)),
            None => CPoint::zero(self.space),
        }
    }

    /// Σ_ν of modulus² of the flowed coefficients.
    pub fn coeff_l2_sq(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|(nu, c)| {
                let m = c.modulus() * decay(*nu, self.elapsed);
                m * m
            })
            .sum()
    }

    pub fn eval_at(&self, theta: f64) -> CPoint {
        let mut acc = CPoint::zero(self.space);
        for (nu, c) in &self.coeffs {
            let w = decay(*nu, self.elapsed);
            if w == 0.0 {
                continue;
            }
            let (s, co) = (2.0 * PI * (*nu as f64) * theta).sin_cos();
            acc = acc
                .add(&c.scale_real(w).rotate(co, s))
                .expect("same space");
        }
        acc
    }

    /// Evaluate on the uniform grid θ_g = (g + offset)/G via root-of-unity
    /// tables: e^{2πiνg/G} only depends on ν mod G, so each coefficient
    /// costs one table walk instead of G trigonometric calls.
    pub fn eval_grid(&self, grid: usize, midpoint: bool) -> Vec<CPoint> {
        let dim = self.space.dim;
        let mut re = vec![0.0f64; grid * dim];
        let mut im = vec![0.0f64; grid * dim];
        let mut cos_t = Vec::with_capacity(grid);
        let mut sin_t = Vec::with_capacity(grid);
        for gidx in 0..grid {
            let (s, c) = (2.0 * PI * gidx as f64 / grid as f64).sin_cos();
            cos_t.push(c);
            sin_t.push(s);
        }
        let mut cre = vec![0.0f64; dim];
        let mut cim = vec![0.0f64; dim];
        for (nu, c) in &self.coeffs {
            let w = decay(*nu, self.elapsed);
            if w == 0.0 {
                continue;
            }
            let mut base = c.scale_real(w);
            if midpoint {
                // extra half-step phase e^{πiν/G}
                let (s, co) = (PI * (nu.rem_euclid(2 * grid as i64) as f64) / grid as f64).sin_cos();
                base = base.rotate(co, s);
            }
            cre.copy_from_slice(base.re().coords());
            cim.copy_from_slice(base.im().coords());
            let r = nu.rem_euclid(grid as i64) as usize;
            let mut idx = 0usize;
            for gidx in 0..grid {
                let (ct, st) = (cos_t[idx], sin_t[idx]);
                let off = gidx * dim;
                for d in 0..dim {
                    re[off + d] += ct * cre[d] - st * cim[d];
                    im[off + d] += st * cre[d] + ct * cim[d];
                }
                idx += r;
                if idx >= grid {
                    idx -= grid;
                }
            }
        }
        (0..grid)
            .map(|gidx| {
                let off = gidx * dim;
                CPoint::new(
                    Point::new(self.space, re[off..off + dim].to_vec()).expect("finite"),
                    Point::new(self.space, im[off..off + dim].to_vec()).expect("finite"),
                )
                .expect("same space")
            })
            .collect()
    }
}

/// Run the circle Poisson semigroup for time t ∈ [0, ∞]: each coefficient
/// at frequency ν is multiplied by e^{−|ν|t}; t = ∞ keeps only ν = 0 and
/// t = 0 is the identity.
pub fn poisson_flow(g: &DiagonalPoly, t: f64) -> Result<DiagonalPoly> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::Domain(format!("flow time t = {t} must be ≥ 0 (or ∞)")));
    }
    let mut out = g.clone();
    out.elapsed += t;
    Ok(out)
}
