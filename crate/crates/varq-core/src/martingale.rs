//! Finite Walsh-Paley martingales on the dyadic group {−1,1}^m.
//!
//! A martingale adapted to the coordinate filtration factors as
//! dM_k(ω) = φ_k(ω_1, …, ω_{k−1})·ω_k with predictable tables φ_k, and we
//! adopt M_0 = 0. All expectations are exact finite sums over the 2^m atoms.
//! Atoms are ordered with ω_1 as the most significant sign and + before −,
//! so tables and reports are reproducible.

use serde::{Deserialize, Serialize};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::spaces::{Point, Space};
use crate::variation::{pow_q, root_q, vq_dp, SamplePath};

/// Hard cap on the number of levels (2^m atom enumeration).
pub const MAX_LEVELS: usize = 20;

/// Sign of coordinate `i` (1-based) in atom `atom` of {−1,1}^m.
#[inline]
pub fn atom_sign(atom: usize, i: usize, m: usize) -> f64 {
    debug_assert!((1..=m).contains(&i));
    if atom & (1 << (m - i)) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// A function on the 2^m atoms of {−1,1}^m with values in a common space.
#[derive(Debug, Clone)]
pub struct DyadicFunction {
    m: usize,
    space: Space,
    values: Vec<Point>,
}

impl DyadicFunction {
    pub fn new(m: usize, values: Vec<Point>) -> Result<DyadicFunction> {
        if m > MAX_LEVELS {
            return Err(Error::Size(format!("m = {m} exceeds the cap {MAX_LEVELS}")));
        }
        if values.len() != 1 << m {
            return Err(Error::Domain(format!(
                "{} values do not fill 2^{m} atoms",
                values.len()
            )));
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
        Ok(DyadicFunction { m, space, values })
    }

    pub fn zero(m: usize, space: Space) -> Result<DyadicFunction> {
        DyadicFunction::new(m, vec![Point::zero(space); 1 << m])
    }

    pub fn levels(&self) -> usize {
        self.m
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn values(&self) -> &[Point] {
        &self.values
    }

    /// Exact 𝔼‖g‖^q over the uniform measure.
    pub fn moment(&self, q: f64) -> f64 {
        let n = self.values.len() as f64;
        self.values.iter().map(|v| pow_q(v.norm(), q)).sum::<f64>() / n
    }
}

/// Conditional expectation onto the first k coordinates: averages over
/// coordinates k+1..m, so the result is constant on each k-cylinder.
/// 𝔼_m is the identity and 𝔼_0 the global mean.
pub fn conditional_expectation(g: &DyadicFunction, k: usize) -> Result<DyadicFunction> {
    if k > g.m {
        return Err(Error::Domain(format!(
            "conditioning level {k} out of range 0..={}",
            g.m
        )));
    }
    let block = 1usize << (g.m - k);
    let mut out = Vec::with_capacity(g.values.len());
    for chunk in g.values.chunks(block) {
        let mut acc = vec![0.0; g.space.dim];
        for v in chunk {
            for (a, c) in acc.iter_mut().zip(v.coords()) {
                *a += c;
            }
        }
        let inv = 1.0 / block as f64;
        let mean = Point::new(g.space, acc.iter().map(|a| a * inv).collect())?;
        for _ in 0..block {
            out.push(mean.clone());
        }
    }
    DyadicFunction::new(g.m, out)
}

/// A Walsh-Paley martingale given by its predictable tables. Table k has
/// 2^{k−1} entries indexed by (ω_1, …, ω_{k−1}) in atom order.
#[derive(Debug, Clone)]
pub struct WalshMartingale {
    m: usize,
    space: Space,
    phi: Vec<Vec<Point>>,
}

/// Serialized form (coordinates only; see [`WalshMartingale::to_spec`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalshMartingaleSpec {
    pub m: usize,
    pub space: Space,
    pub phi: Vec<Vec<Vec<f64>>>,
}

impl WalshMartingale {
    pub fn new(space: Space, phi: Vec<Vec<Point>>) -> Result<WalshMartingale> {
        let m = phi.len();
        if m == 0 {
            return Err(Error::Domain("martingale needs at least one level".into()));
        }
        if m > MAX_LEVELS {
            return Err(Error::Size(format!("m = {m} exceeds the cap {MAX_LEVELS}")));
        }
        for (k, table) in phi.iter().enumerate() {
            if table.len() != 1 << k {
                return Err(Error::Domain(format!(
                    "table {} has {} entries, expected 2^{k}",
                    k + 1,
                    table.len()
                )));
            }
            for p in table {
                if p.space() != space {
                    return Err(Error::SpaceMismatch {
                        left: space,
                        right: p.space(),
                    });
                }
            }
        }
        Ok(WalshMartingale { m, space, phi })
    }

    pub fn levels(&self) -> usize {
        self.m
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn tables(&self) -> &[Vec<Point>] {
        &self.phi
    }

    /// dM_k as a function on atoms (k is 1-based).
    pub fn increment(&self, k: usize) -> Result<DyadicFunction> {
        if !(1..=self.m).contains(&k) {
            return Err(Error::Domain(format!("level {k} out of range 1..={}", self.m)));
        }
        let table = &self.phi[k - 1];
        let values = (0..1usize << self.m)
            .map(|atom| {
                let idx = atom >> (self.m - (k - 1));
                table[idx].scale(atom_sign(atom, k, self.m))
            })
            .collect();
        DyadicFunction::new(self.m, values)
    }

    pub fn to_spec(&self) -> WalshMartingaleSpec {
        WalshMartingaleSpec {
            m: self.m,
            space: self.space,
            phi: self
                .phi
                .iter()
                .map(|t| t.iter().map(|p| p.coords().to_vec()).collect())
                .collect(),
        }
    }

    pub fn from_spec(spec: WalshMartingaleSpec) -> Result<WalshMartingale> {
        let phi = spec
            .phi
            .into_iter()
            .map(|t| {
                t.into_iter()
                    .map(|c| Point::new(spec.space, c))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        if phi.len() != spec.m {
            return Err(Error::Validation(format!(
                "spec says m = {} but has {} tables",
                spec.m,
                phi.len()
            )));
        }
        WalshMartingale::new(spec.space, phi)
    }
}

/// Partial sums M_0 = 0, M_k = Σ_{j≤k} φ_j(ω_{<j})·ω_j, as functions on
/// atoms; the returned vector has m+1 entries.
pub fn partial_sums(mart: &WalshMartingale) -> Result<Vec<DyadicFunction>> {
    let atoms = 1usize << mart.m;
    let mut sums = vec![DyadicFunction::zero(mart.m, mart.space)?];
    let mut running: Vec<Point> = vec![Point::zero(mart.space); atoms];
    for k in 1..=mart.m {
        let inc = mart.increment(k)?;
        for (r, d) in running.iter_mut().zip(inc.values()) {
            *r = r.add(d)?;
        }
        sums.push(DyadicFunction::new(mart.m, running.clone())?);
    }
    Ok(sums)
}

/// Numerator, denominator and ratio of the dyadic cotype-q functional:
/// Σ_k 𝔼‖dM_k‖^q over sup_k 𝔼‖M_k‖^q.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CotypeRatio {
    pub numerator: f64,
    pub denominator: f64,
    pub ratio: f64,
}

pub fn cotype_ratio(mart: &WalshMartingale, q: f64) -> Result<CotypeRatio> {
    if !q.is_finite() || q < 2.0 {
        return Err(Error::Domain(format!("cotype exponent q = {q} must be ≥ 2")));
    }
    let mut numerator = 0.0;
    for k in 1..=mart.m {
        numerator += mart.increment(k)?.moment(q);
    }
    let sums = partial_sums(mart)?;
    let denominator = sums[1..]
        .iter()
        .map(|s| s.moment(q))
        .fold(0.0f64, f64::max);
    if denominator == 0.0 {
        return Err(Error::Degenerate(
            "zero martingale has no cotype ratio".into(),
        ));
    }
    Ok(CotypeRatio {
        numerator,
        denominator,
        ratio: numerator / denominator,
    })
}

/// ‖V_q(𝔼_k g : k = 0..m)‖_{L^p}: the pathwise q-variation of the
/// conditional-expectation path per atom, then the exact L^p average.
pub fn martingale_vq_lp(g: &DyadicFunction, q: f64, p: f64) -> Result<f64> {
    if !q.is_finite() || q < 2.0 {
        return Err(Error::Domain(format!("q = {q} must be ≥ 2")));
    }
    if !p.is_finite() || p <= 1.0 {
        return Err(Error::Domain(format!("p = {p} must be > 1")));
    }
    let mut paths: Vec<Vec<Point>> = vec![Vec::with_capacity(g.m + 1); g.values.len()];
    for k in 0..=g.m {
        let ek = conditional_expectation(g, k)?;
        for (path, v) in paths.iter_mut().zip(ek.values()) {
            path.push(v.clone());
        }
    }
    let labels: Vec<f64> = (1..=g.m + 1).map(|i| i as f64).collect();
    let mut sum = 0.0;
    for path in paths {
        let sp = SamplePath::new(labels.clone(), path)?;
        let v = vq_dp(&sp, q)?.value;
        sum += pow_q(v, p);
    }
    Ok(root_q(sum / g.values.len() as f64, p))
}

/// The coordinate witness in ℓ^∞_n: φ_k ≡ e_k, so every increment has norm
/// one while every partial sum stays on the unit sphere; its cotype ratio
/// grows linearly with the number of levels.
pub fn witness_linfty(n: usize, m: usize) -> Result<WalshMartingale> {
    if m > n {
        return Err(Error::Domain(format!(
            "witness needs m ≤ n (got m = {m}, n = {n})"
        )));
    }
    let space = Space::linf(n);
    let phi = (1..=m)
        .map(|k| Ok(vec![Point::basis(space, k - 1)?; 1 << (k - 1)]))
        .collect::<Result<Vec<_>>>()?;
    WalshMartingale::new(space, phi)
}

/// Deterministic-from-seed martingale with table entries uniform in
/// [−amplitude, amplitude]^dim.
pub fn random_martingale(
    seed: u64,
    space: Space,
    m: usize,
    amplitude: f64,
) -> Result<WalshMartingale> {
    if !(amplitude >= 0.0) {
        return Err(Error::Domain("amplitude must be nonnegative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phi = (1..=m)
        .map(|k| {
            (0..1usize << (k - 1))
                .map(|_| {
                    let coords = (0..space.dim)
                        .map(|_| {
                            if amplitude == 0.0 {
                                0.0
                            } else {
                                rng.gen_range(-amplitude..amplitude)
                            }
                        })
                        .collect();
                    Point::new(space, coords)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    WalshMartingale::new(space, phi)
}
