//! Certified selection of lacunary frequencies n_k and cut-off times l_k.
//!
//! The selection must make two families of statements true uniformly in
//! every angle variable:
//!
//! * decay condition, step k: ‖P_t f_{k,(n)}(θ)‖ < ε/2^k for all t ≥ l_{k−1};
//! * oscillation condition, step k: Σ_{j≤k} ‖P_{l_k} f_{j,(n)}(θ) −
//!   P_t f_{j,(n)}(θ)‖ < ε for all 0 ≤ t ≤ l_k.
//!
//! Both are certified by absolute coefficient sums: with c ranging over a
//! block's multi-indexed coefficients and ν(c) its collapsed frequency,
//! Σ|c|·e^{−t|ν|} dominates the first supremum and Σ|c|·(1 − e^{−l|ν|})
//! the second, so a machine check of the sums settles the "for all θ"
//! quantifier without trusting any grid. Grids only confirm.
//!
//! The searches are deterministic: l_k halves from l_{k−1}/2 (from 1 when
//! l_{k−1} = ∞) and n_{k+1} doubles from just above the prefix radius of
//! the next block, each capped at 200 iterations. The endpoints are pinned:
//! l_0 = ∞, n_1 = 1, l_m = 0.

use serde::{Deserialize, Serialize};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::transference::poly::{poisson_flow, DiagonalPoly, MultiTrigPoly};

/// Iteration cap for both the halving and the doubling searches.
pub const SEARCH_CAP: usize = 200;

/// Frequencies beyond this lose exact integer arithmetic headroom in the
/// collapsed-frequency sums.
pub const FREQUENCY_CAP: i64 = 1 << 45;

/// The certified output of the selection: the sequences themselves plus the
/// per-condition coefficient-sum bounds that witnessed them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionCertificate {
    pub epsilon: f64,
    /// n_1 = 1 < n_2 < … < n_m.
    pub n: Vec<i64>,
    /// l_0 = ∞ > l_1 > … > l_m = 0 (length m + 1).
    #[serde(with = "extended_reals")]
    pub l: Vec<f64>,
    /// Certified bound on sup_{t ≥ l_{k−1}} ‖P_t f_k‖ per k (< ε/2^k).
    pub decay_bounds: Vec<f64>,
    /// Certified bound on sup_{t ≤ l_k} Σ_{j≤k} ‖(P_{l_k} − P_t) f_j‖ per k (< ε).
    pub oscillation_bounds: Vec<f64>,
}

/// JSON has no ∞, so the cut-off list serializes +∞ as the string "inf".
mod extended_reals {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum ExtReal {
        Num(f64),
        Tag(String),
    }

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let out: Vec<ExtReal> = v
            .iter()
            .map(|x| {
                if x.is_infinite() {
                    ExtReal::Tag("inf".to_string())
                } else {
                    ExtReal::Num(*x)
                }
            })
            .collect();
        out.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let raw = Vec::<ExtReal>::deserialize(d)?;
        raw.into_iter()
            .map(|e| match e {
                ExtReal::Num(x) => Ok(x),
                ExtReal::Tag(t) if t == "inf" => Ok(f64::INFINITY),
                ExtReal::Tag(t) => Err(serde::de::Error::custom(format!(
                    "unknown extended real '{t}'"
                ))),
            })
            .collect()
    }
}

fn decay_weight(nu_abs: i64, t: f64) -> f64 {
    if t.is_infinite() {
        if nu_abs == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        (-t * nu_abs as f64).exp()
    }
}

/// Certified bound for sup over all angles of ‖P_t f_k(θ)‖.
fn decay_bound(block: &MultiTrigPoly, n: &[i64], t: f64) -> f64 {
    block.weighted_modulus_sum(n, |nu| decay_weight(nu, t))
}

/// Certified bound for sup over all angles and all 0 ≤ t ≤ l of
/// Σ_{j≤k} ‖(P_l − P_t) f_j(θ)‖ (per-coefficient |e^{−t|ν|} − e^{−l|ν|}| ≤
/// 1 − e^{−l|ν|} since t ≤ l). Computed through expm1 so the weight never
/// rounds to zero while l|ν| is still far above the certified target.
fn oscillation_weight(nu_abs: i64, l: f64) -> f64 {
    if l.is_infinite() {
        if nu_abs == 0 {
            0.0
        } else {
            1.0
        }
    } else {
        -(-l * nu_abs as f64).exp_m1()
    }
}

fn oscillation_bound(blocks: &[MultiTrigPoly], n: &[i64], l: f64) -> f64 {
    blocks
        .iter()
        .map(|b| b.weighted_modulus_sum(n, |nu| oscillation_weight(nu, l)))
        .sum()
}

/// Choose the lacunary frequencies and cut-off times for the given blocks,
/// returning machine-checkable certificates for both conditions.
pub fn select_sequences(blocks: &[MultiTrigPoly], epsilon: f64) -> Result<SelectionCertificate> {
    if blocks.is_empty() {
        return Err(Error::Domain("no blocks to select for".into()));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("ε = {epsilon} must be positive")));
    }
    for (i, b) in blocks.iter().enumerate() {
        if b.block_index() != i + 1 {
            return Err(Error::Domain(format!(
                "block at position {i} has index {}, expected {}",
                b.block_index(),
                i + 1
            )));
        }
    }
    let m = blocks.len();
    let mut n: Vec<i64> = vec![1];
    let mut l: Vec<f64> = vec![f64::INFINITY];

    for k in 1..m {
        // cut-off time l_k: halve until the oscillation certificate clears ε
        let start = if l[k - 1].is_infinite() {
            1.0
        } else {
            0.5 * l[k - 1]
        };
        let mut cand = start;
        let mut chosen = None;
        for _ in 0..SEARCH_CAP {
            if oscillation_bound(&blocks[..k], &n, cand) < epsilon {
                chosen = Some(cand);
                break;
            }
            cand *= 0.5;
        }
        let lk = chosen.ok_or_else(|| {
            Error::Precision(format!(
                "oscillation condition at step {k}: no cut-off time within {SEARCH_CAP} halvings from {start}"
            ))
        })?;
        l.push(lk);

        // frequency n_{k+1}: double from just above the prefix radius until
        // the decay certificate clears ε/2^{k+1}
        let radius = blocks[k].prefix_radius(&n);
        let target = epsilon / 2f64.powi(k as i32 + 1);
        let mut cand_n = (radius + 1).max(n[k - 1] + 1);
        let mut chosen_n = None;
        for _ in 0..SEARCH_CAP {
            if cand_n > FREQUENCY_CAP {
                return Err(Error::Precision(format!(
                    "decay condition at step {}: frequency search passed the exact-integer cap {FREQUENCY_CAP}",
                    k + 1
                )));
            }
            let mut n_try = n.clone();
            n_try.push(cand_n);
            if decay_bound(&blocks[k], &n_try, lk) < target {
                chosen_n = Some(cand_n);
                break;
            }
            cand_n *= 2;
        }
        let nk = chosen_n.ok_or_else(|| {
            Error::Precision(format!(
                "decay condition at step {}: no frequency within {SEARCH_CAP} doublings",
                k + 1
            ))
        })?;
        n.push(nk);
    }
    l.push(0.0);

    // record the certified bounds with the final sequences
    let mut decay_bounds = Vec::with_capacity(m);
    let mut oscillation_bounds_v = Vec::with_capacity(m);
    for k in 1..=m {
        let d = decay_bound(&blocks[k - 1], &n, l[k - 1]);
        let target = epsilon / 2f64.powi(k as i32);
        if !(d < target) {
            return Err(Error::Precision(format!(
                "decay condition at step {k} failed post-check: bound {d} ≥ {target}"
            )));
        }
        decay_bounds.push(d);
        let o = oscillation_bound(&blocks[..k], &n, l[k]);
        if !(o < epsilon) {
            return Err(Error::Precision(format!(
                "oscillation condition at step {k} failed post-check: bound {o} ≥ {epsilon}"
            )));
        }
        oscillation_bounds_v.push(o);
    }

    Ok(SelectionCertificate {
        epsilon,
        n,
        l,
        decay_bounds,
        oscillation_bounds: oscillation_bounds_v,
    })
}

/// Secondary confirmation of a certificate on a θ-grid with sampled fixed
/// angles: the measured margins must all be strictly positive.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionGridCheck {
    /// ε/2^k minus the measured sup of ‖P_{l_{k−1}} f_k(θ)‖, per k.
    pub decay_margins: Vec<f64>,
    /// ε minus the measured sup over t ∈ {0, l_k/2, l_k} of the telescoped
    /// sums, per k.
    pub oscillation_margins: Vec<f64>,
    pub all_strict: bool,
}

fn sampled_thetas(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.gen_range(0.0..1.0)).collect()
}

pub fn certificate_grid_check(
    blocks: &[MultiTrigPoly],
    cert: &SelectionCertificate,
    grid: usize,
    theta_samples: usize,
    seed: u64,
) -> Result<ConditionGridCheck> {
    let m = blocks.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut decay_sup = vec![0.0f64; m];
    let mut osc_sup = vec![0.0f64; m];
    for _ in 0..theta_samples.max(1) {
        let thetas = sampled_thetas(&mut rng, m);
        let diags: Vec<DiagonalPoly> = blocks
            .iter()
            .map(|b| b.diagonalize(&cert.n, &thetas))
            .collect::<Result<Vec<_>>>()?;
        for k in 1..=m {
            // decay condition at its binding time t = l_{k−1}
            let flowed = poisson_flow(&diags[k - 1], cert.l[k - 1])?;
            if cert.l[k - 1].is_infinite() {
                // the flow kills every nonzero frequency; bound is exact
                decay_sup[k - 1] = decay_sup[k - 1].max(0.0);
            } else {
                for v in flowed.eval_grid(grid, false) {
                    decay_sup[k - 1] = decay_sup[k - 1].max(v.modulus());
                }
            }

            // oscillation condition sampled at t ∈ {0, l_k/2, l_k}
            let lk = cert.l[k];
            let at_lk: Vec<Vec<crate::transference::CPoint>> = diags[..k]
                .iter()
                .map(|d| Ok(poisson_flow(d, lk)?.eval_grid(grid, false)))
                .collect::<Result<Vec<_>>>()?;
            for t in [0.0, 0.5 * lk, lk] {
                let at_t: Vec<Vec<crate::transference::CPoint>> = diags[..k]
                    .iter()
                    .map(|d| Ok(poisson_flow(d, t)?.eval_grid(grid, false)))
                    .collect::<Result<Vec<_>>>()?;
                for g in 0..grid {
                    let mut sum = 0.0;
                    for j in 0..k {
                        sum += at_lk[j][g].sub(&at_t[j][g])?.modulus();
                    }
                    osc_sup[k - 1] = osc_sup[k - 1].max(sum);
                }
            }
        }
    }
    let decay_margins: Vec<f64> = decay_sup
        .iter()
        .enumerate()
        .map(|(i, s)| cert.epsilon / 2f64.powi(i as i32 + 1) - s)
        .collect();
    let oscillation_margins: Vec<f64> =
        osc_sup.iter().map(|s| cert.epsilon - s).collect();
    let all_strict = decay_margins.iter().all(|m| *m > 0.0)
        && oscillation_margins.iter().all(|m| *m > 0.0);
    Ok(ConditionGridCheck {
        decay_margins,
        oscillation_margins,
        all_strict,
    })
}

/// Grid sup, per index i, of ‖Σ_k (P_{l_i} − P_{l_{i−1}}) f_k(θ) − f_i(θ)‖
/// over a θ-grid and sampled fixed angles. With a valid certificate every
/// entry is at most 3ε.
pub fn telescoping_error(
    blocks: &[MultiTrigPoly],
    cert: &SelectionCertificate,
    grid: usize,
    theta_samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let m = blocks.len();
    if cert.n.len() != m || cert.l.len() != m + 1 {
        return Err(Error::Domain(format!(
            "certificate shape ({} frequencies, {} times) does not fit {m} blocks",
            cert.n.len(),
            cert.l.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errs = vec![0.0f64; m];
    for _ in 0..theta_samples.max(1) {
        let thetas = sampled_thetas(&mut rng, m);
        let diags: Vec<DiagonalPoly> = blocks
            .iter()
            .map(|b| b.diagonalize(&cert.n, &thetas))
            .collect::<Result<Vec<_>>>()?;
        // values of every block at every cut-off time; l_m = 0 gives the
        // plain block values bit-exactly
        let mut flows: Vec<Vec<Vec<crate::transference::CPoint>>> = Vec::with_capacity(m);
        for d in &diags {
            let mut per_time = Vec::with_capacity(m + 1);
            for j in 0..=m {
                per_time.push(poisson_flow(d, cert.l[j])?.eval_grid(grid, false));
            }
            flows.push(per_time);
        }
        for i in 1..=m {
            for g in 0..grid {
                let mut acc = crate::transference::CPoint::zero(blocks[0].space());
                for flow in flows.iter() {
                    acc = acc.add(&flow[i][g].sub(&flow[i - 1][g])?)?;
                }
                acc = acc.sub(&flows[i - 1][m][g])?;
                errs[i - 1] = errs[i - 1].max(acc.modulus());
            }
        }
    }
    Ok(errs)
}
