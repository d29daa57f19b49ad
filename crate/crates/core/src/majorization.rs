//! Single- and multi-copy convertibility of bipartite pure states.
//!
//! `P ⪯ Q` ("Q majorizes P") holds when every prefix sum of the
//! non-increasingly sorted `P` is at most the matching prefix sum of `Q`;
//! this is exactly deterministic LOCC convertibility `|ψ_P⟩ → |ψ_Q⟩`.
//! Vectors of different lengths are zero-padded.
//!
//! The finite-copy oracle materializes product distributions `P^{⊗n}`; that
//! is capped at [`MAX_PRODUCT_LEN`] entries and a larger request is a
//! [`Error::Resource`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::{shannon_unchecked, WeightVector, SUPPORT_THRESHOLD};

/// Largest product distribution that will be materialized.
pub const MAX_PRODUCT_LEN: usize = 1 << 24;
/// Absolute slack on prefix-sum comparisons and on success probabilities.
pub const MAJORIZATION_SLACK: f64 = 1e-12;
/// Default truncation exponent as a fraction of `−H(P)`.
pub const DEFAULT_V_STAR_FACTOR: f64 = 0.9;

#[derive(Default)]
struct RunningSum {
    sum: f64,
    comp: f64,
}

impl RunningSum {
    fn add(&mut self, v: f64) -> f64 {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
        self.sum + self.comp
    }
}

fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_unstable_by(|a, b| b.total_cmp(a));
    v
}

fn prefix_sums(v: &[f64], len: usize) -> Vec<f64> {
    let mut acc = RunningSum::default();
    (0..len).map(|i| acc.add(v.get(i).copied().unwrap_or(0.0))).collect()
}

fn suffix_sums(v: &[f64], len: usize) -> Vec<f64> {
    let mut acc = RunningSum::default();
    let mut out = vec![0.0; len];
    for i in (0..len).rev() {
        out[i] = acc.add(v.get(i).copied().unwrap_or(0.0));
    }
    out
}

/// Prefix-sum dominance on already sorted vectors.
fn dominated_sorted(p: &[f64], q: &[f64]) -> bool {
    let len = p.len().max(q.len());
    let (sp, sq) = (prefix_sums(p, len), prefix_sums(q, len));
    sp.iter().zip(&sq).all(|(a, b)| *a <= *b + MAJORIZATION_SLACK)
}

/// Optimal single-copy conversion probability on already sorted vectors:
/// `min_l (Σ_{i≥l} p_i) / (Σ_{i≥l} q_i)`, clamped to `[0, 1]`.
fn vidal_sorted(p: &[f64], q: &[f64]) -> f64 {
    let len = p.len().max(q.len());
    let (tp, tq) = (suffix_sums(p, len), suffix_sums(q, len));
    let mut best = 1.0f64;
    for (a, b) in tp.iter().zip(&tq) {
        if *b > 0.0 {
            best = best.min(a / b);
        }
    }
    best.clamp(0.0, 1.0)
}

/// Whether `P ⪯ Q`, i.e. `Q` majorizes `P`.
pub fn majorizes(p: &WeightVector, q: &WeightVector) -> Result<bool> {
    p.require_normalized()?;
    q.require_normalized()?;
    Ok(dominated_sorted(
        &sorted_desc(p.weights().to_vec()),
        &sorted_desc(q.weights().to_vec()),
    ))
}

/// Deterministic LOCC convertibility `|ψ_P⟩ → |ψ_Q⟩`; same as [`majorizes`].
pub fn nielsen_convertible(p: &WeightVector, q: &WeightVector) -> Result<bool> {
    majorizes(p, q)
}

/// Largest probability of converting `|ψ_P⟩` into `|ψ_Q⟩` with one copy.
pub fn optimal_conversion_probability(p: &WeightVector, q: &WeightVector) -> Result<f64> {
    p.require_normalized()?;
    q.require_normalized()?;
    Ok(vidal_sorted(
        &sorted_desc(p.weights().to_vec()),
        &sorted_desc(q.weights().to_vec()),
    ))
}

fn checked_len(d: usize, n: usize) -> Result<usize> {
    u32::try_from(n)
        .ok()
        .and_then(|n| d.checked_pow(n))
        .filter(|&len| len <= MAX_PRODUCT_LEN)
        .ok_or_else(|| {
            Error::Resource(format!(
                "product power of a length-{d} vector to n = {n} exceeds {MAX_PRODUCT_LEN} entries"
            ))
        })
}

fn power_vec(base: &[f64], n: usize) -> Result<Vec<f64>> {
    let len = checked_len(base.len(), n)?;
    let mut out = Vec::with_capacity(len);
    out.push(1.0);
    for _ in 0..n {
        let mut next = Vec::with_capacity(out.len() * base.len());
        for &a in &out {
            next.extend(base.iter().map(|&b| a * b));
        }
        out = next;
    }
    Ok(out)
}

/// All `n`-fold products `p_I = Π_j p_{I_j}` in lexicographic order of `I`.
pub fn product_power(p: &WeightVector, n: usize) -> Result<WeightVector> {
    if n == 0 {
        return Err(Error::Domain("copy count must be positive".into()));
    }
    WeightVector::new(power_vec(p.weights(), n)?)
}

fn support(p: &WeightVector) -> Vec<f64> {
    p.weights().iter().copied().filter(|&x| x > SUPPORT_THRESHOLD).collect()
}

/// Sorted `n`-fold power of the support of `p` (zeros do not affect any of
/// the comparisons here).
fn sorted_support_power(p: &WeightVector, n: usize) -> Result<Vec<f64>> {
    Ok(sorted_desc(power_vec(&support(p), n)?))
}

fn check_counts(n: usize, m: usize) -> Result<()> {
    if n == 0 || m == 0 {
        return Err(Error::Domain("copy counts must be positive".into()));
    }
    Ok(())
}

fn check_success(s: f64) -> Result<()> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::Domain(format!("success probability {s} is outside (0, 1]")));
    }
    Ok(())
}

/// `rank_q^m > rank_p^n` means the conversion probability is exactly zero.
fn rank_exceeds(rank_p: usize, n: usize, rank_q: usize, m: usize) -> bool {
    let pow = |b: usize, e: usize| -> Option<u128> {
        (0..e).try_fold(1u128, |acc, _| acc.checked_mul(b as u128))
    };
    match (pow(rank_p, n), pow(rank_q, m)) {
        (Some(a), Some(b)) => b > a,
        (Some(_), None) => true,
        (None, Some(_)) => false,
        (None, None) => m as f64 * (rank_q as f64).ln() > n as f64 * (rank_p as f64).ln(),
    }
}

/// Whether `n` copies of `|ψ_P⟩` yield `m` copies of `|ψ_Q⟩` with success
/// probability at least `s`.
pub fn exact_multi_copy_check(p: &WeightVector, q: &WeightVector, n: usize, m: usize, s: f64) -> Result<bool> {
    p.require_normalized()?;
    q.require_normalized()?;
    check_counts(n, m)?;
    check_success(s)?;
    if rank_exceeds(p.rank(), n, q.rank(), m) {
        return Ok(false);
    }
    let pn = sorted_support_power(p, n)?;
    let qm = sorted_support_power(q, m)?;
    Ok(s <= vidal_sorted(&pn, &qm) + MAJORIZATION_SLACK)
}

/// Largest `m` such that `n` copies of `|ψ_P⟩` yield `m` copies of `|ψ_Q⟩`
/// with probability at least `2^{−n r}`; 0 if none.
pub fn max_extractable_copies(p: &WeightVector, q: &WeightVector, n: usize, r: f64) -> Result<usize> {
    p.require_normalized()?;
    q.require_normalized()?;
    check_counts(n, 1)?;
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("r = {r} must be finite and ≥ 0")));
    }
    if q.is_point_mass() {
        return Err(Error::Domain("target is a product state: the number of copies is unbounded".into()));
    }
    let s = (-(n as f64) * r).exp2();
    check_success(s)?;
    let pn = sorted_support_power(p, n)?;
    let (rank_p, rank_q) = (p.rank(), q.rank());
    let mut m = 0;
    loop {
        let next = m + 1;
        if rank_exceeds(rank_p, n, rank_q, next) {
            break;
        }
        let qm = sorted_support_power(q, next)?;
        if s <= vidal_sorted(&pn, &qm) + MAJORIZATION_SLACK {
            m = next;
        } else {
            break;
        }
    }
    Ok(m)
}

/// Outcome of clipping `P^{⊗n}` at `t_n = 2^{n V*}` and renormalizing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub clipped_mass: f64,
    pub n: usize,
    pub t_n: f64,
    pub truncated: WeightVector,
    pub v_star: f64,
    pub x_n: f64,
}

/// `−0.9 · H(P)`.
pub fn default_v_star(p: &WeightVector) -> Result<f64> {
    p.require_normalized()?;
    Ok(-DEFAULT_V_STAR_FACTOR * shannon_unchecked(p.weights()))
}

/// Clips every `p_I` at `t_n = 2^{n V*}` and rescales by
/// `x_n = 1 / Σ_I min(p_I, t_n)`. Requires `V* > −H(P)`.
pub fn truncate(p: &WeightVector, n: usize, v_star: f64) -> Result<TruncationReport> {
    p.require_normalized()?;
    check_counts(n, 1)?;
    let h = shannon_unchecked(p.weights());
    if !v_star.is_finite() || v_star <= -h {
        return Err(Error::Domain(format!("v_star = {v_star} must exceed −H(P) = {}", -h)));
    }
    let pn = power_vec(p.weights(), n)?;
    let t_n = (n as f64 * v_star).exp2();
    let mut kept = RunningSum::default();
    let mut clipped = RunningSum::default();
    let mut total_min = 0.0;
    let mut clipped_mass = 0.0;
    for &x in &pn {
        total_min = kept.add(x.min(t_n));
        if x >= t_n {
            clipped_mass = clipped.add(x);
        }
    }
    let x_n = 1.0 / total_min;
    let truncated = WeightVector::new(pn.into_iter().map(|x| x_n * x.min(t_n)).collect())?;
    Ok(TruncationReport { n, v_star, t_n, x_n, truncated, clipped_mass })
}

/// Whether the truncated distribution is majorized by `Q^{⊗n}`.
pub fn truncation_majorization_check(p: &WeightVector, q: &WeightVector, n: usize, v_star: f64) -> Result<bool> {
    q.require_normalized()?;
    let report = truncate(p, n, v_star)?;
    let qn = sorted_support_power(q, n)?;
    Ok(dominated_sorted(&sorted_desc(report.truncated.into_weights()), &qn))
}

/// Smallest `n₀ ≤ n_max` such that [`truncation_majorization_check`] holds
/// for every `n` in `n₀..=n_max`, if any.
pub fn truncation_threshold(p: &WeightVector, q: &WeightVector, n_max: usize, v_star: f64) -> Result<Option<usize>> {
    let mut n0 = None;
    for n in (1..=n_max).rev() {
        if truncation_majorization_check(p, q, n, v_star)? {
            n0 = Some(n);
        } else {
            break;
        }
    }
    Ok(n0)
}
