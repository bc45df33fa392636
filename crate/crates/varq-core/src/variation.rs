//! Exact q-variation of a finite sample path.
//!
//! For a path a = (a_{t_0}, …, a_{t_J}) the q-variation seminorm is
//!
//! ```text
//! V_q(a) = sup over chains s_0 < … < s_L of (Σ_j ‖a_{s_{j+1}} − a_{s_j}‖^q)^{1/q},
//! ```
//!
//! the supremum running over all increasing index subsequences, with
//! increments taken between consecutive chosen indices. Values computed on a
//! finite scale grid under-approximate the continuum supremum; they are
//! reported as grid values, with refinement monotonicity as the convergence
//! diagnostic.
//!
//! [`vq_dp`] computes the supremum exactly as a maximum-weight chain in the
//! complete DAG with edge weight ‖a_j − a_i‖^q (O(J²));
//! [`vq_bruteforce`] enumerates all 2^J chains and is the oracle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::{norm_of_diff, Point, Space};

/// Largest path index J accepted by the brute-force enumerator.
pub const BRUTEFORCE_MAX_J: usize = 20;

/// A finite sample path: strictly increasing positive scale labels with one
/// vector sample per label.
#[derive(Debug, Clone)]
pub struct SamplePath {
    space: Space,
    labels: Vec<f64>,
    values: Vec<Point>,
}

impl SamplePath {
    pub fn new(labels: Vec<f64>, values: Vec<Point>) -> Result<SamplePath> {
        if values.is_empty() {
            return Err(Error::Domain("sample path needs at least one sample".into()));
        }
        if labels.len() != values.len() {
            return Err(Error::Domain(format!(
                "label count {} != value count {}",
                labels.len(),
                values.len()
            )));
        }
        if labels.iter().any(|t| !t.is_finite() || *t <= 0.0) {
            return Err(Error::Domain("labels must be finite and positive".into()));
        }
        if labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("labels must be strictly increasing".into()));
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
        Ok(SamplePath {
            space,
            labels,
            values,
        })
    }

    /// Scalar path with labels 1, 2, 3, … (for tests and quick checks).
    pub fn scalar(values: &[f64]) -> Result<SamplePath> {
        let space = Space::l2(1);
        let pts = values
            .iter()
            .map(|v| Point::new(space, vec![*v]))
            .collect::<Result<Vec<_>>>()?;
        let labels = (1..=values.len()).map(|i| i as f64).collect();
        SamplePath::new(labels, pts)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn values(&self) -> &[Point] {
        &self.values
    }

    /// Path with sample `idx` removed (labels kept).
    pub fn without_index(&self, idx: usize) -> Result<SamplePath> {
        let labels = self
            .labels
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != idx)
            .map(|(_, t)| *t)
            .collect();
        let values = self
            .values
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != idx)
            .map(|(_, v)| v.clone())
            .collect();
        SamplePath::new(labels, values)
    }
}

/// Value of the supremum together with a chain achieving it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationResult {
    pub value: f64,
    /// Strictly increasing indices into the path. Empty when the supremum is
    /// zero (single sample or constant path).
    pub chain: Vec<usize>,
}

impl VariationResult {
    /// Recompute the increment sum along the stored chain; must reproduce
    /// `value` to 1e−12 relative.
    pub fn recompute(&self, path: &SamplePath, q: f64) -> f64 {
        let vals = path.values();
        let mut sum = 0.0;
        for w in self.chain.windows(2) {
            let d = norm_of_diff(
                path.space(),
                vals[w[1]].coords(),
                vals[w[0]].coords(),
            );
            sum += pow_q(d, q);
        }
        root_q(sum, q)
    }
}

fn check_q(q: f64) -> Result<()> {
    if !q.is_finite() || q < 1.0 {
        return Err(Error::Domain(format!("variation exponent q = {q} must be ≥ 1")));
    }
    Ok(())
}

/// x^q with exact fast paths for the integer exponents used throughout.
pub(crate) fn pow_q(x: f64, q: f64) -> f64 {
    if q == 1.0 {
        x
    } else if q == 2.0 {
        x * x
    } else if q == 3.0 {
        x * x * x
    } else if q == 4.0 {
        let s = x * x;
        s * s
    } else {
        x.powf(q)
    }
}

/// x^{1/q} with an exact square-root path.
pub(crate) fn root_q(x: f64, q: f64) -> f64 {
    if q == 1.0 {
        x
    } else if q == 2.0 {
        x.sqrt()
    } else if q == 4.0 {
        x.sqrt().sqrt()
    } else {
        x.powf(1.0 / q)
    }
}

/// Exact V_q by enumeration of all index subsets (guard: J ≤ 20).
///
/// Ties between optimal chains are broken toward fewer nodes, then the
/// lexicographically smallest index sequence, matching [`vq_dp`].
pub fn vq_bruteforce(path: &SamplePath, q: f64) -> Result<VariationResult> {
    check_q(q)?;
    let n = path.len();
    if n == 0 {
        return Ok(VariationResult {
            value: 0.0,
            chain: vec![],
        });
    }
    if n - 1 > BRUTEFORCE_MAX_J {
        return Err(Error::Size(format!(
            "path has J = {} > {BRUTEFORCE_MAX_J}; enumeration refused",
            n - 1
        )));
    }
    let vals = path.values();
    let space = path.space();
    let mut best_sum = 0.0;
    let mut best_chain: Vec<usize> = vec![];
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() < 2 {
            continue;
        }
        let chain: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let mut sum = 0.0;
        for w in chain.windows(2) {
            sum += pow_q(
                norm_of_diff(space, vals[w[1]].coords(), vals[w[0]].coords()),
                q,
            );
        }
        if sum > best_sum
            || (sum == best_sum
                && !best_chain.is_empty()
                && (chain.len() < best_chain.len()
                    || (chain.len() == best_chain.len() && chain < best_chain)))
        {
            best_sum = sum;
            best_chain = chain;
        }
    }
    if best_sum == 0.0 {
        best_chain.clear();
    }
    Ok(VariationResult {
        value: root_q(best_sum, q),
        chain: best_chain,
    })
}

/// Exact V_q by dynamic programming over chain endpoints, O(J²).
///
/// Identical value to [`vq_bruteforce`]; runs for J up to 10⁴. Ties are
/// broken toward the chain with fewer nodes, then lexicographically
/// smallest, so results are reproducible bit for bit.
pub fn vq_dp(path: &SamplePath, q: f64) -> Result<VariationResult> {
    check_q(q)?;
    let n = path.len();
    let vals = path.values();
    let space = path.space();

    // best[j] = max increment-power sum over chains ending at j; parent
    // pointers reconstruct the chain. count[j] = nodes in that chain.
    let mut best = vec![0.0f64; n];
    let mut count = vec![1usize; n];
    let mut parent: Vec<Option<usize>> = vec![None; n];

    let chain_of = |parent: &[Option<usize>], mut j: usize| -> Vec<usize> {
        let mut chain = vec![j];
        while let Some(i) = parent[j] {
            chain.push(i);
            j = i;
        }
        chain.reverse();
        chain
    };

    for j in 1..n {
        for i in 0..j {
            let w = pow_q(
                norm_of_diff(space, vals[j].coords(), vals[i].coords()),
                q,
            );
            let cand = best[i] + w;
            let cand_count = count[i] + 1;
            let better = if cand > best[j] {
                true
            } else if cand == best[j] && cand > 0.0 {
                if cand_count < count[j] {
                    true
                } else if cand_count == count[j] {
                    // Rare exact tie: compare full chains lexicographically.
                    let mut a = chain_of(&parent, i);
                    a.push(j);
                    let b = chain_of(&parent, j);
                    a < b
                } else {
                    false
                }
            } else {
                false
            };
            if better {
                best[j] = cand;
                count[j] = cand_count;
                parent[j] = Some(i);
            }
        }
    }

    let mut best_sum = 0.0;
    let mut best_end: Option<usize> = None;
    for j in 0..n {
        if best[j] > best_sum {
            best_sum = best[j];
            best_end = Some(j);
        } else if best[j] == best_sum && best[j] > 0.0 {
            if let Some(e) = best_end {
                let better = count[j] < count[e]
                    || (count[j] == count[e] && chain_of(&parent, j) < chain_of(&parent, e));
                if better {
                    best_end = Some(j);
                }
            }
        }
    }

    let chain = match best_end {
        Some(e) if best_sum > 0.0 => chain_of(&parent, e),
        _ => vec![],
    };
    Ok(VariationResult {
        value: root_q(best_sum, q),
        chain,
    })
}

/// Cheap lower bound: value of the full adjacent chain,
/// (Σ_j ‖a_{j+1} − a_j‖^q)^{1/q} ≤ V_q. Equality holds at q = 1.
pub fn vq_stream_lower(path: &SamplePath, q: f64) -> Result<f64> {
    check_q(q)?;
    let vals = path.values();
    let space = path.space();
    let mut sum = 0.0;
    for w in vals.windows(2) {
        sum += pow_q(norm_of_diff(space, w[1].coords(), w[0].coords()), q);
    }
    Ok(root_q(sum, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::NormKind;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_increment() {
        let p = SamplePath::scalar(&[0.0, 3.0]).unwrap();
        for q in [1.0, 2.0, 3.5] {
            let r = vq_bruteforce(&p, q).unwrap();
            assert_eq!(r.value, 3.0);
            assert_eq!(r.chain, vec![0, 1]);
            let d = vq_dp(&p, q).unwrap();
            assert_eq!(d.value, 3.0);
            assert_eq!(d.chain, vec![0, 1]);
        }
    }

    #[test]
    fn merging_beats_full_partition() {
        // 0,1,2,3 at q = 2: the single jump 0→3 gives 3, the full chain √3.
        let p = SamplePath::scalar(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        let r = vq_bruteforce(&p, 2.0).unwrap();
        assert_eq!(r.value, 3.0);
        assert_eq!(r.chain, vec![0, 3]);
        let d = vq_dp(&p, 2.0).unwrap();
        assert_eq!(d.value, 3.0);
        assert_eq!(d.chain, vec![0, 3]);
    }

    #[test]
    fn alternating_path_full_chain() {
        let p = SamplePath::scalar(&[1.0, -1.0, 1.0, -1.0, 1.0]).unwrap();
        let r = vq_bruteforce(&p, 2.0).unwrap();
        assert_eq!(r.value, 4.0);
        assert_eq!(r.chain, vec![0, 1, 2, 3, 4]);
        let d = vq_dp(&p, 2.0).unwrap();
        assert_eq!(d.value, 4.0);
        assert_eq!(d.chain, r.chain);
    }

    #[test]
    fn q1_equals_adjacent_sum() {
        let p = SamplePath::scalar(&[0.3, -1.2, 0.7, 0.7, 2.0]).unwrap();
        let d = vq_dp(&p, 1.0).unwrap();
        let s = vq_stream_lower(&p, 1.0).unwrap();
        assert!((d.value - s).abs() <= 1e-12 * s.max(1.0));
        // triangle inequality makes the full refinement optimal at q = 1
        assert_eq!(d.value, 1.5 + 1.9 + 0.0 + 1.3);
    }

    #[test]
    fn single_point_path_is_zero_with_empty_chain() {
        let p = SamplePath::scalar(&[5.0]).unwrap();
        let d = vq_dp(&p, 2.0).unwrap();
        assert_eq!(d.value, 0.0);
        assert!(d.chain.is_empty());
        let b = vq_bruteforce(&p, 2.0).unwrap();
        assert_eq!(b.value, 0.0);
        assert!(b.chain.is_empty());
    }

    #[test]
    fn constant_path_is_zero() {
        let p = SamplePath::scalar(&[2.0, 2.0, 2.0]).unwrap();
        assert_eq!(vq_dp(&p, 2.0).unwrap().value, 0.0);
        assert_eq!(vq_stream_lower(&p, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn monotone_scalar_stream_lower() {
        let p = SamplePath::scalar(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        let lower = vq_stream_lower(&p, 2.0).unwrap();
        assert!((lower - 3f64.sqrt()).abs() < 1e-14);
        assert!(lower <= vq_dp(&p, 2.0).unwrap().value);
    }

    #[test]
    fn q_below_one_is_domain_error() {
        let p = SamplePath::scalar(&[0.0, 1.0]).unwrap();
        assert!(matches!(vq_dp(&p, 0.5), Err(Error::Domain(_))));
        assert!(matches!(vq_bruteforce(&p, 0.9), Err(Error::Domain(_))));
    }

    #[test]
    fn oversized_path_refused_by_bruteforce() {
        let vals: Vec<f64> = (0..23).map(|i| i as f64).collect();
        let p = SamplePath::scalar(&vals).unwrap();
        assert!(matches!(vq_bruteforce(&p, 2.0), Err(Error::Size(_))));
        assert!(vq_dp(&p, 2.0).is_ok());
    }

    pub(crate) fn random_path(
        rng: &mut ChaCha8Rng,
        space: Space,
        len: usize,
        amp: f64,
    ) -> SamplePath {
        let mut labels: Vec<f64> = (0..len)
            .map(|_| rng.gen_range(0.01..100.0))
            .collect();
        labels.sort_by(|a, b| a.partial_cmp(b).unwrap());
        labels.dedup();
        while labels.len() < len {
            labels.push(labels.last().unwrap() + rng.gen_range(0.01..1.0));
        }
        let values = (0..len)
            .map(|_| {
                let coords = (0..space.dim).map(|_| rng.gen_range(-amp..amp)).collect();
                Point::new(space, coords).unwrap()
            })
            .collect();
        SamplePath::new(labels, values).unwrap()
    }

    #[test]
    fn dp_matches_bruteforce_seeded() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let spaces = [Space::l2(3), Space::l1(2), Space::linf(4)];
        for case in 0..60 {
            let space = spaces[case % spaces.len()];
            let len = rng.gen_range(1..=13);
            let path = random_path(&mut rng, space, len, 2.0);
            for q in [1.0, 2.0, 2.5, 4.0] {
                let b = vq_bruteforce(&path, q).unwrap();
                let d = vq_dp(&path, q).unwrap();
                assert!(
                    (b.value - d.value).abs() <= 1e-12 * b.value.max(1.0),
                    "case {case} q {q}: {} vs {}",
                    b.value,
                    d.value
                );
                let r = d.recompute(&path, q);
                assert!((r - d.value).abs() <= 1e-12 * d.value.max(1.0));
            }
        }
    }

    #[test]
    fn monotone_in_q_and_under_deletion() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let len = rng.gen_range(2..=10);
            let path = random_path(&mut rng, Space::l2(2), len, 3.0);
            let qs = [1.0, 2.0, 2.5, 4.0];
            let vals: Vec<f64> = qs.iter().map(|q| vq_dp(&path, *q).unwrap().value).collect();
            for w in vals.windows(2) {
                assert!(w[0] >= w[1] - 1e-12 * w[0].max(1.0));
            }
            let idx = rng.gen_range(0..path.len());
            let smaller = path.without_index(idx).unwrap();
            assert!(
                vq_dp(&smaller, 2.0).unwrap().value
                    <= vq_dp(&path, 2.0).unwrap().value + 1e-12
            );
        }
    }

    #[test]
    fn homogeneity_and_translation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..40 {
            let len = rng.gen_range(2..=9);
            let path = random_path(&mut rng, Space::linf(3), len, 2.0);
            let lambda: f64 = rng.gen_range(-3.0..3.0);
            let scaled = SamplePath::new(
                path.labels().to_vec(),
                path.values().iter().map(|v| v.scale(lambda)).collect(),
            )
            .unwrap();
            let v0 = vq_dp(&path, 2.5).unwrap().value;
            let v1 = vq_dp(&scaled, 2.5).unwrap().value;
            assert!((v1 - lambda.abs() * v0).abs() <= 1e-12 * v0.max(1.0));

            let shift = Point::new(path.space(), vec![0.7, -1.1, 0.4]).unwrap();
            let shifted = SamplePath::new(
                path.labels().to_vec(),
                path.values()
                    .iter()
                    .map(|v| v.add(&shift).unwrap())
                    .collect(),
            )
            .unwrap();
            let v2 = vq_dp(&shifted, 2.5).unwrap().value;
            assert!((v2 - v0).abs() <= 1e-10 * v0.max(1.0));
        }
    }

    #[test]
    fn large_path_smoke() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let path = random_path(&mut rng, Space::l2(1), 10_000, 1.0);
        let r = vq_dp(&path, 2.0).unwrap();
        assert!(r.value > 0.0);
        assert!((r.recompute(&path, 2.0) - r.value).abs() <= 1e-12 * r.value);
    }

    proptest! {
        #[test]
        fn prop_stream_lower_bounds_dp(vals in proptest::collection::vec(-5.0f64..5.0, 2..9),
                                       q in 1.0f64..4.0) {
            let path = SamplePath::scalar(&vals).unwrap();
            let lower = vq_stream_lower(&path, q).unwrap();
            let full = vq_dp(&path, q).unwrap().value;
            prop_assert!(lower <= full + 1e-10 * full.max(1.0));
        }

        #[test]
        fn prop_lr_spaces_oracle_agreement(vals in proptest::collection::vec(-2.0f64..2.0, 2..12),
                                           r in 1.0f64..4.0) {
            let space = Space::new(1, NormKind::Lr(r)).unwrap();
            let pts: Vec<Point> = vals.iter().map(|v| Point::new(space, vec![*v]).unwrap()).collect();
            let labels: Vec<f64> = (1..=vals.len()).map(|i| i as f64).collect();
            let path = SamplePath::new(labels, pts).unwrap();
            let b = vq_bruteforce(&path, 2.0).unwrap().value;
            let d = vq_dp(&path, 2.0).unwrap().value;
            prop_assert!((b - d).abs() <= 1e-12 * b.max(1.0));
        }
    }
}
